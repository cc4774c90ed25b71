//! Generator training: CE-targeting losses, gradients, ADAM and the
//! multi-restart harness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzKind, AnsatzSpec};
use crate::entanglement::{
    concentratable_entanglement, concentratable_entanglement_with_cotangent, n_tangle, n_tangle_with_cotangent,
    MAX_CE_QUBITS,
};
use crate::error::{Error, Result};
use crate::sampling::{stream, InputDistribution, InputSampler, Stream};
use crate::sim::{Circuit, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 0.01, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// ADAM moment estimates with bias correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(dim: usize, config: AdamConfig) -> Self {
        Self { m: vec![0.0; dim], v: vec![0.0; dim], t: 0, config }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::InvalidArgument(format!(
                "ADAM state has dimension {}, got {} parameters and {} gradient entries",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for k in 0..params.len() {
            self.m[k] = beta1 * self.m[k] + (1.0 - beta1) * grad[k];
            self.v[k] = beta2 * self.v[k] + (1.0 - beta2) * grad[k] * grad[k];
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            params[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Functional form of one ADAM update.
pub fn adam_step(state: &AdamState, params: &[f64], grad: &[f64]) -> Result<(AdamState, Vec<f64>)> {
    let mut next = state.clone();
    let mut p = params.to_vec();
    next.step(&mut p, grad)?;
    Ok((next, p))
}

/// Central-difference gradient `(f(p + h e_k) - f(p - h e_k)) / 2h`.
pub fn grad_fd<F: FnMut(&[f64]) -> f64>(mut loss_at: F, params: &[f64], h: f64) -> Result<Vec<f64>> {
    try_grad_fd(|p| Ok(loss_at(p)), params, h)
}

pub fn try_grad_fd<F: FnMut(&[f64]) -> Result<f64>>(mut loss_at: F, params: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let mut p = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        p[k] = params[k] + h;
        let up = loss_at(&p)?;
        p[k] = params[k] - h;
        let down = loss_at(&p)?;
        p[k] = params[k];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum GradientMethod {
    FiniteDifference {
        step: f64,
    },
    /// Reverse-mode pass through the circuit using analytic gate derivatives.
    Adjoint,
}

impl Default for GradientMethod {
    fn default() -> Self {
        GradientMethod::FiniteDifference { step: 1e-4 }
    }
}

/// A parameterized circuit together with the values it was trained to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub ansatz: AnsatzSpec,
    pub params: Vec<f64>,
}

impl Generator {
    pub fn new(ansatz: AnsatzSpec, params: Vec<f64>) -> Result<Self> {
        let expected = ansatz.n_params();
        if params.len() != expected {
            return Err(Error::ParamCount { expected, actual: params.len() });
        }
        Ok(Self { ansatz, params })
    }

    pub fn n_qubits(&self) -> usize {
        self.ansatz.n_qubits
    }

    pub fn circuit(&self) -> Result<Circuit> {
        self.ansatz.build(&self.params)
    }

    pub fn generate(&self, input: &StateVector) -> Result<StateVector> {
        input.run(&self.circuit()?)
    }
}

fn default_c1() -> f64 {
    1.0
}

fn default_fd_step() -> f64 {
    1e-4
}

/// Everything that determines a generator training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenTrainConfig {
    pub ansatz: AnsatzSpec,
    /// Target CE `ξ`.
    pub target_ce: f64,
    /// Success half-width `δ`.
    pub delta: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    /// Weight of the n-tangle penalty; 0 disables it.
    #[serde(default)]
    pub c2: f64,
    pub inputs: InputDistribution,
    pub train_size: usize,
    pub epochs: usize,
    pub restarts: usize,
    pub seed: u64,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default)]
    pub gradient: GradientMethod,
    #[serde(default)]
    pub adam: AdamConfig,
}

impl GenTrainConfig {
    /// Full-scale defaults: 300 epochs, 50 restarts, `δ = 0.1`,
    /// finite-difference gradients.
    pub fn new(ansatz: AnsatzSpec, target_ce: f64, inputs: InputDistribution, train_size: usize, seed: u64) -> Self {
        Self {
            ansatz,
            target_ce,
            delta: 0.1,
            c1: 1.0,
            c2: 0.0,
            inputs,
            train_size,
            epochs: 300,
            restarts: 50,
            seed,
            fd_step: default_fd_step(),
            gradient: GradientMethod::default(),
            adam: AdamConfig::default(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.ansatz.n_qubits
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        if matches!(self.ansatz.kind, AnsatzKind::Qcnn) {
            return Err(Error::InvalidArgument("the QCNN is a classifier, not a generator".into()));
        }
        if !(2..=MAX_CE_QUBITS).contains(&n) {
            return Err(Error::InvalidArgument(format!("generator needs 2..={MAX_CE_QUBITS} qubits, got {n}")));
        }
        let max_ce = 1.0 - 2f64.powi(1 - n as i32);
        if !(0.0..=max_ce).contains(&self.target_ce) {
            return Err(Error::InvalidArgument(format!("target CE {} outside [0, {max_ce}]", self.target_ce)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.c1 > 0.0) {
            return Err(Error::InvalidArgument(format!("c1 must be positive, got {}", self.c1)));
        }
        if self.c2 != 0.0 && !n.is_multiple_of(2) {
            return Err(Error::Domain(format!("the n-tangle penalty needs an even qubit count, got {n}")));
        }
        if self.train_size == 0 || self.restarts == 0 {
            return Err(Error::InvalidArgument("train_size and restarts must be at least 1".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::InvalidArgument(format!("fd_step must be positive, got {}", self.fd_step)));
        }
        self.inputs.validate(n)
    }

    fn uses_tangle(&self) -> bool {
        self.c2 != 0.0
    }
}

/// Mean of `c1 (CE - ξ)² + c2 τ_n` over the outputs of `circuit`.
pub fn loss_for_circuit(circuit: &Circuit, target: f64, c1: f64, c2: f64, inputs: &[StateVector]) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let mut total = 0.0;
    for input in inputs {
        let out = input.run(circuit)?;
        let ce = concentratable_entanglement(&out)?;
        total += c1 * (ce - target).powi(2);
        if c2 != 0.0 {
            total += c2 * n_tangle(&out)?;
        }
    }
    Ok(total / inputs.len() as f64)
}

/// Mean-squared CE loss `(1/N) Σ (CE(V(θ)|ψ_i⟩) - ξ)²`.
pub fn gen_loss(params: &[f64], config: &GenTrainConfig, train_states: &[StateVector]) -> Result<f64> {
    loss_for_circuit(&config.ansatz.build(params)?, config.target_ce, 1.0, 0.0, train_states)
}

/// CE loss with the n-tangle term, `(1/N) Σ [c1 (CE - ξ)² + c2 τ_n]`.
pub fn gen_loss_tangle(params: &[f64], config: &GenTrainConfig, train_states: &[StateVector]) -> Result<f64> {
    loss_for_circuit(&config.ansatz.build(params)?, config.target_ce, config.c1, config.c2, train_states)
}

/// Loss selected by the config: the tangle form when `c2 != 0`.
pub fn training_loss(params: &[f64], config: &GenTrainConfig, train_states: &[StateVector]) -> Result<f64> {
    if config.uses_tangle() {
        gen_loss_tangle(params, config, train_states)
    } else {
        gen_loss(params, config, train_states)
    }
}

/// Loss and its adjoint gradient.
pub fn training_loss_adjoint(
    params: &[f64],
    config: &GenTrainConfig,
    train_states: &[StateVector],
) -> Result<(f64, Vec<f64>)> {
    if train_states.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let (c1, c2) = if config.uses_tangle() { (config.c1, config.c2) } else { (1.0, 0.0) };
    let circuit = config.ansatz.build(params)?;
    let scale = 1.0 / train_states.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    for input in train_states {
        let out = input.run(&circuit)?;
        let (ce, mut cot) = concentratable_entanglement_with_cotangent(&out)?;
        let diff = ce - config.target_ce;
        loss += c1 * diff * diff;
        let w = 2.0 * c1 * diff * scale;
        cot.iter_mut().for_each(|c| *c *= w);
        if c2 != 0.0 {
            let (tau, tcot) = n_tangle_with_cotangent(&out)?;
            loss += c2 * tau;
            for (c, t) in cot.iter_mut().zip(&tcot) {
                *c += c2 * scale * t;
            }
        }
        let g = circuit.adjoint_gradient(&out, &cot)?;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((loss * scale, grad))
}

fn loss_and_grad(params: &[f64], config: &GenTrainConfig, states: &[StateVector]) -> Result<(f64, Vec<f64>)> {
    match config.gradient {
        GradientMethod::Adjoint => training_loss_adjoint(params, config, states),
        GradientMethod::FiniteDifference { .. } => {
            let loss = training_loss(params, config, states)?;
            let grad = try_grad_fd(|p| training_loss(p, config, states), params, config.fd_step)?;
            Ok((loss, grad))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedGenerator {
    pub config: GenTrainConfig,
    pub generator: Generator,
    pub final_loss: f64,
    /// Loss before each epoch plus the loss after the last one.
    pub loss_history: Vec<f64>,
    pub restart_index: usize,
    pub restart_losses: Vec<f64>,
}

/// Runs one restart from its seeded initialization.
pub fn train_restart(
    config: &GenTrainConfig,
    train_states: &[StateVector],
    restart: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = stream(config.seed, Stream::Init, restart as u64);
    let mut params = config.ansatz.random_params(&mut rng);
    let mut adam = AdamState::new(params.len(), config.adam);
    let mut history = Vec::with_capacity(config.epochs + 1);
    for _ in 0..config.epochs {
        let (loss, grad) = loss_and_grad(&params, config, train_states)?;
        history.push(loss);
        adam.step(&mut params, &grad)?;
    }
    history.push(training_loss(&params, config, train_states)?);
    Ok((params, history))
}

/// Trains `restarts` independently initialized generators on the config's
/// training set and keeps the one with the smallest final loss.
pub fn train_generator(config: &GenTrainConfig) -> Result<TrainedGenerator> {
    config.validate()?;
    let train_states = config.inputs.training_set(config.n_qubits(), config.train_size, config.seed)?;
    train_generator_on(config, &train_states)
}

/// Same as [`train_generator`] with an explicit training set.
pub fn train_generator_on(config: &GenTrainConfig, train_states: &[StateVector]) -> Result<TrainedGenerator> {
    config.validate()?;
    let runs: Vec<(Vec<f64>, Vec<f64>)> =
        (0..config.restarts).into_par_iter().map(|r| train_restart(config, train_states, r)).collect::<Result<_>>()?;
    let restart_losses: Vec<f64> = runs.iter().map(|(_, h)| *h.last().expect("history is never empty")).collect();
    let best = restart_losses
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let (params, loss_history) = runs.into_iter().nth(best).expect("best index in range");
    Ok(TrainedGenerator {
        generator: Generator::new(config.ansatz.clone(), params)?,
        final_loss: restart_losses[best],
        loss_history,
        restart_index: best,
        restart_losses,
        config: config.clone(),
    })
}

/// Fraction of generated states with CE inside `[ξ - δ, ξ + δ]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub target_ce: f64,
    pub delta: f64,
    pub count: usize,
    pub success_rate: f64,
    pub ce_mean: f64,
    pub ce_std: f64,
    pub ces: Vec<f64>,
}

impl SuccessReport {
    pub fn from_ces(ces: Vec<f64>, target_ce: f64, delta: f64) -> Self {
        let count = ces.len();
        let hits = ces.iter().filter(|c| (*c - target_ce).abs() <= delta).count();
        let mean = ces.iter().sum::<f64>() / count.max(1) as f64;
        let var = ces.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / count.max(1) as f64;
        Self {
            target_ce,
            delta,
            count,
            success_rate: hits as f64 / count.max(1) as f64,
            ce_mean: mean,
            ce_std: var.sqrt(),
            ces,
        }
    }
}

/// Draws `count` inputs, runs the generator and scores the output CEs.
pub fn evaluate_generator(
    generator: &Generator,
    target_ce: f64,
    sampler: &mut InputSampler,
    count: usize,
    delta: f64,
) -> Result<SuccessReport> {
    if count == 0 {
        return Err(Error::InvalidArgument("evaluation needs at least one state".into()));
    }
    if sampler.n_qubits() != generator.n_qubits() {
        return Err(Error::QubitCountMismatch { expected: generator.n_qubits(), actual: sampler.n_qubits() });
    }
    let circuit = generator.circuit()?;
    let inputs = sampler.take(count)?;
    let ces: Vec<f64> =
        inputs.par_iter().map(|s| concentratable_entanglement(&s.run(&circuit)?)).collect::<Result<_>>()?;
    Ok(SuccessReport::from_ces(ces, target_ce, delta))
}

/// Test sampler used by reports: the config's seed on the test stream.
pub fn test_sampler(dist: &InputDistribution, n: usize, seed: u64) -> Result<InputSampler> {
    dist.sampler(n, stream(seed, Stream::TestSet, 0))
}
