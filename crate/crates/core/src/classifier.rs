//! Multi-copy QCNN classifier with a single sigmoid output node.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_qcnn, qcnn_param_count, random_angles};
use crate::error::{Error, Result};
use crate::sampling::{stream, Stream};
use crate::sim::{Circuit, StateVector};
use crate::training::{try_grad_fd, AdamConfig, AdamState, GradientMethod};

/// How the `m` copies of an `n`-qubit input are laid out on the `m·n` wires.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopyLayout {
    /// Wire `i·m + c` carries qubit `i` of copy `c`.
    #[default]
    Interleaved,
    /// Wire `c·n + i` carries qubit `i` of copy `c`.
    Blocked,
}

fn default_measured() -> usize {
    2
}

fn default_copies() -> usize {
    2
}

fn default_clf_adam() -> AdamConfig {
    AdamConfig { lr: 0.05, ..AdamConfig::default() }
}

fn default_clf_gradient() -> GradientMethod {
    GradientMethod::Adjoint
}

fn default_fd_step() -> f64 {
    1e-4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Qubits per input state.
    pub n_qubits: usize,
    #[serde(default = "default_copies")]
    pub copies: usize,
    #[serde(default = "default_measured")]
    pub measured: usize,
    /// Lasso weight on the head coefficients.
    #[serde(default)]
    pub lambda: f64,
    pub epochs: usize,
    pub restarts: usize,
    pub seed: u64,
    #[serde(default)]
    pub layout: CopyLayout,
    #[serde(default = "default_clf_adam")]
    pub adam: AdamConfig,
    #[serde(default = "default_clf_gradient")]
    pub gradient: GradientMethod,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

impl ClassifierConfig {
    pub fn new(n_qubits: usize, copies: usize, epochs: usize, restarts: usize, seed: u64) -> Self {
        Self {
            n_qubits,
            copies,
            measured: default_measured(),
            lambda: 0.0,
            epochs,
            restarts,
            seed,
            layout: CopyLayout::default(),
            adam: default_clf_adam(),
            gradient: default_clf_gradient(),
            fd_step: default_fd_step(),
        }
    }

    pub fn width(&self) -> usize {
        self.n_qubits * self.copies
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.copies == 0 {
            return Err(Error::InvalidArgument("classifier needs n_qubits >= 1 and copies >= 1".into()));
        }
        if self.width() < 2 || self.width() > 20 {
            return Err(Error::InvalidArgument(format!("QCNN width {} outside 2..=20", self.width())));
        }
        if self.measured == 0 || self.measured > self.width() {
            return Err(Error::InvalidArgument(format!(
                "measured qubit count {} must be in 1..={}",
                self.measured,
                self.width()
            )));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if let GradientMethod::FiniteDifference { step } = self.gradient {
            if !(step > 0.0) {
                return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {step}")));
            }
        }
        Ok(())
    }

    /// Seeded initial model for restart `index`: QCNN angles uniform in
    /// `[0, 2π)`, head weights uniform in `[-1, 1)`, zero bias.
    pub fn init_model(&self, index: usize) -> Result<ClassifierModel> {
        self.validate()?;
        let mut rng: ChaCha8Rng = stream(self.seed, Stream::Init, index as u64);
        let qcnn_params = random_angles(qcnn_param_count(self.width(), self.measured), &mut rng);
        let (_, active) = build_qcnn(self.width(), &qcnn_params, self.measured)?;
        let weights = (0..1usize << active.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Ok(ClassifierModel {
            n_qubits: self.n_qubits,
            copies: self.copies,
            measured: self.measured,
            layout: self.layout,
            qcnn_params,
            weights,
            bias: 0.0,
            lambda: self.lambda,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub n_qubits: usize,
    pub copies: usize,
    pub measured: usize,
    pub layout: CopyLayout,
    pub qcnn_params: Vec<f64>,
    /// One coefficient per outcome on the measured qubits.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Label 1 when `y_hat >= 0.5`.
pub fn threshold(y_hat: f64) -> u8 {
    u8::from(y_hat >= 0.5)
}

impl ClassifierModel {
    pub fn width(&self) -> usize {
        self.n_qubits * self.copies
    }

    pub fn circuit(&self) -> Result<(Circuit, Vec<usize>)> {
        let (c, active) = build_qcnn(self.width(), &self.qcnn_params, self.measured)?;
        if self.weights.len() != 1 << active.len() {
            return Err(Error::ParamCount { expected: 1 << active.len(), actual: self.weights.len() });
        }
        Ok((c, active))
    }

    /// The `m`-fold tensor power of `state` in this model's wire layout.
    pub fn prepare_input(&self, state: &StateVector) -> Result<StateVector> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::QubitCountMismatch { expected: self.n_qubits, actual: state.n_qubits() });
        }
        let mut out = state.clone();
        for _ in 1..self.copies {
            out = out.tensor(state)?;
        }
        match self.layout {
            CopyLayout::Blocked => Ok(out),
            CopyLayout::Interleaved => {
                let (n, m) = (self.n_qubits, self.copies);
                let mut order = vec![0; n * m];
                for i in 0..n {
                    for c in 0..m {
                        order[i * m + c] = c * n + i;
                    }
                }
                out.permute_qubits(&order)
            }
        }
    }

    /// Exact outcome distribution on the measured qubits.
    pub fn probabilities(&self, state: &StateVector) -> Result<Vec<f64>> {
        let (circuit, active) = self.circuit()?;
        self.prepare_input(state)?.run(&circuit)?.marginal_probabilities(&active)
    }

    pub fn forward(&self, state: &StateVector) -> Result<f64> {
        Ok(self.head(&self.probabilities(state)?))
    }

    pub fn classify(&self, state: &StateVector) -> Result<u8> {
        Ok(threshold(self.forward(state)?))
    }

    /// `sig(Σ_z w_z p(z) + b)`.
    pub fn head(&self, probs: &[f64]) -> f64 {
        sigmoid(self.weights.iter().zip(probs).map(|(w, p)| w * p).sum::<f64>() + self.bias)
    }

    fn l1(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

/// Where a labeled state came from, enough to rebuild it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateRecipe {
    Explicit,
    /// Sample `index` of the generator identified by `model`.
    Ntangled {
        model: String,
        index: usize,
    },
    /// Sample `index` of the depth-`depth` class.
    Depth {
        depth: usize,
        index: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledState {
    pub state: StateVector,
    pub label: u8,
    pub recipe: StateRecipe,
}

impl LabeledState {
    pub fn new(state: StateVector, label: u8) -> Self {
        Self { state, label, recipe: StateRecipe::Explicit }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    All,
    Train,
    Test,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledStateSet {
    pub items: Vec<LabeledState>,
    pub split: Split,
    pub provenance: Provenance,
}

impl LabeledStateSet {
    pub fn new(items: Vec<LabeledState>, provenance: Provenance) -> Result<Self> {
        if let Some(bad) = items.iter().find(|s| s.label > 1) {
            return Err(Error::InvalidArgument(format!("labels must be 0 or 1, got {}", bad.label)));
        }
        Ok(Self { items, split: Split::All, provenance })
    }

    pub fn from_states(states: impl IntoIterator<Item = (StateVector, u8)>) -> Result<Self> {
        Self::new(states.into_iter().map(|(s, y)| LabeledState::new(s, y)).collect(), Provenance::default())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Number of states labeled 0 and 1.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.items.iter().filter(|s| s.label == 1).count();
        [self.items.len() - ones, ones]
    }

    pub fn n_qubits(&self) -> Option<usize> {
        self.items.first().map(|s| s.state.n_qubits())
    }

    /// Appends the items of `other`; provenance sources are joined with `+`.
    pub fn merge(mut self, other: LabeledStateSet) -> Self {
        if !other.provenance.source.is_empty() {
            if self.provenance.source.is_empty() {
                self.provenance.source = other.provenance.source;
            } else {
                self.provenance.source = format!("{}+{}", self.provenance.source, other.provenance.source);
            }
        }
        self.items.extend(other.items);
        self
    }

    /// Stratified split: within each label, a seeded shuffle followed by
    /// taking `round(train_fraction · count)` items for training.
    pub fn split_stratified(&self, train_fraction: f64, seed: u64) -> Result<(LabeledStateSet, LabeledStateSet)> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(Error::InvalidArgument(format!("train fraction {train_fraction} outside [0, 1]")));
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for label in 0..2u8 {
            let mut idx: Vec<usize> = (0..self.items.len()).filter(|&i| self.items[i].label == label).collect();
            let mut rng = stream(seed, Stream::Split, label as u64);
            shuffle(&mut idx, &mut rng);
            let k = (train_fraction * idx.len() as f64).round() as usize;
            train.extend(idx[..k].iter().map(|&i| self.items[i].clone()));
            test.extend(idx[k..].iter().map(|&i| self.items[i].clone()));
        }
        let mk = |items, split| LabeledStateSet { items, split, provenance: self.provenance.clone() };
        Ok((mk(train, Split::Train), mk(test, Split::Test)))
    }
}

fn shuffle<T, R: Rng + ?Sized>(v: &mut [T], rng: &mut R) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

/// Mean squared error plus `λ Σ_z |w_z|`.
pub fn clf_loss(model: &ClassifierModel, set: &LabeledStateSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("empty labeled set".into()));
    }
    let preds = predict(model, set)?;
    Ok(mse(&preds, set) + model.lambda * model.l1())
}

fn mse(preds: &[f64], set: &LabeledStateSet) -> f64 {
    preds.iter().zip(&set.items).map(|(p, s)| (p - s.label as f64).powi(2)).sum::<f64>() / preds.len() as f64
}

/// `ŷ` for every item, in order.
pub fn predict(model: &ClassifierModel, set: &LabeledStateSet) -> Result<Vec<f64>> {
    let (circuit, active) = model.circuit()?;
    set.items
        .par_iter()
        .map(|s| {
            let out = model.prepare_input(&s.state)?.run(&circuit)?;
            Ok(model.head(&out.marginal_probabilities(&active)?))
        })
        .collect()
}

/// Fraction of items whose thresholded prediction equals the label.
pub fn accuracy(model: &ClassifierModel, set: &LabeledStateSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty set".into()));
    }
    let preds = predict(model, set)?;
    Ok(accuracy_of(&preds, set))
}

fn accuracy_of(preds: &[f64], set: &LabeledStateSet) -> f64 {
    let hits = preds.iter().zip(&set.items).filter(|(p, s)| threshold(**p) == s.label).count();
    hits as f64 / preds.len() as f64
}

/// Gradient of [`clf_loss`] split into its three parameter groups.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierGradient {
    pub qcnn: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ClassifierGradient {
    fn flatten(&self) -> Vec<f64> {
        let mut v = self.qcnn.clone();
        v.extend(&self.weights);
        v.push(self.bias);
        v
    }
}

/// Analytic head gradient, `∂L/∂w_z` and `∂L/∂b`, at fixed QCNN parameters.
/// The lasso term contributes `λ sign(w_z)` with `sign(0) = 0`.
pub fn head_gradient(model: &ClassifierModel, probs: &[Vec<f64>], labels: &[u8]) -> (f64, Vec<f64>, f64) {
    let n = probs.len() as f64;
    let mut gw = vec![0.0; model.weights.len()];
    let mut gb = 0.0;
    let mut loss = 0.0;
    for (p, &y) in probs.iter().zip(labels) {
        let yh = model.head(p);
        loss += (yh - y as f64).powi(2) / n;
        let delta = 2.0 * (yh - y as f64) / n * yh * (1.0 - yh);
        gb += delta;
        for (g, pz) in gw.iter_mut().zip(p) {
            *g += delta * pz;
        }
    }
    for (g, w) in gw.iter_mut().zip(&model.weights) {
        if *w != 0.0 {
            *g += model.lambda * w.signum();
        }
    }
    (loss + model.lambda * model.l1(), gw, gb)
}

/// Loss and full gradient on inputs already expanded by
/// [`ClassifierModel::prepare_input`].
pub fn loss_and_gradient(
    model: &ClassifierModel,
    prepared: &[StateVector],
    labels: &[u8],
    method: GradientMethod,
) -> Result<(f64, ClassifierGradient)> {
    if prepared.is_empty() {
        return Err(Error::InvalidArgument("empty labeled set".into()));
    }
    let (circuit, active) = model.circuit()?;
    let outputs: Vec<StateVector> = prepared.par_iter().map(|s| s.run(&circuit)).collect::<Result<_>>()?;
    let probs: Vec<Vec<f64>> = outputs.iter().map(|o| o.marginal_probabilities(&active)).collect::<Result<_>>()?;
    let (loss, gw, gb) = head_gradient(model, &probs, labels);
    let qcnn = match method {
        GradientMethod::Adjoint => {
            let n = prepared.len() as f64;
            let width = model.width();
            let per_state: Vec<Vec<f64>> = outputs
                .par_iter()
                .zip(probs.par_iter())
                .zip(labels.par_iter())
                .map(|((out, p), &y)| {
                    let yh = model.head(p);
                    let delta = 2.0 * (yh - y as f64) / n * yh * (1.0 - yh);
                    let cot: Vec<Complex64> = out
                        .amplitudes()
                        .iter()
                        .enumerate()
                        .map(|(i, a)| a * (delta * model.weights[outcome_index(i, width, &active)]))
                        .collect();
                    circuit.adjoint_gradient(out, &cot)
                })
                .collect::<Result<_>>()?;
            let mut g = vec![0.0; model.qcnn_params.len()];
            for s in &per_state {
                g.iter_mut().zip(s).for_each(|(a, b)| *a += b);
            }
            g
        }
        GradientMethod::FiniteDifference { step } => {
            let mut probe = model.clone();
            try_grad_fd(
                |p| {
                    probe.qcnn_params.copy_from_slice(p);
                    let (c, _) = probe.circuit()?;
                    let mut total = 0.0;
                    for (s, &y) in prepared.iter().zip(labels) {
                        let yh = probe.head(&s.run(&c)?.marginal_probabilities(&active)?);
                        total += (yh - y as f64).powi(2);
                    }
                    Ok(total / prepared.len() as f64 + probe.lambda * probe.l1())
                },
                &model.qcnn_params,
                step,
            )?
        }
    };
    Ok((loss, ClassifierGradient { qcnn, weights: gw, bias: gb }))
}

fn outcome_index(i: usize, n: usize, active: &[usize]) -> usize {
    let r = active.len();
    active.iter().enumerate().fold(0, |z, (j, &q)| z | ((i >> (n - 1 - q) & 1) << (r - 1 - j)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub config: ClassifierConfig,
    pub model: ClassifierModel,
    /// Metrics before each epoch and after the last one.
    pub history: Vec<EpochRecord>,
    pub restart_index: usize,
    pub restart_train_accuracies: Vec<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

fn set_flat(model: &mut ClassifierModel, flat: &[f64]) {
    let q = model.qcnn_params.len();
    let w = model.weights.len();
    model.qcnn_params.copy_from_slice(&flat[..q]);
    model.weights.copy_from_slice(&flat[q..q + w]);
    model.bias = flat[q + w];
}

fn flat(model: &ClassifierModel) -> Vec<f64> {
    let mut v = model.qcnn_params.clone();
    v.extend(&model.weights);
    v.push(model.bias);
    v
}

struct Prepared {
    states: Vec<StateVector>,
    labels: Vec<u8>,
}

impl Prepared {
    fn new(model: &ClassifierModel, set: &LabeledStateSet) -> Result<Self> {
        Ok(Self {
            states: set.items.par_iter().map(|s| model.prepare_input(&s.state)).collect::<Result<_>>()?,
            labels: set.items.iter().map(|s| s.label).collect(),
        })
    }

    fn accuracy(&self, model: &ClassifierModel) -> Result<f64> {
        let (circuit, active) = model.circuit()?;
        let hits: Vec<bool> = self
            .states
            .par_iter()
            .zip(self.labels.par_iter())
            .map(|(s, &y)| Ok(threshold(model.head(&s.run(&circuit)?.marginal_probabilities(&active)?)) == y))
            .collect::<Result<_>>()?;
        Ok(hits.iter().filter(|h| **h).count() as f64 / hits.len() as f64)
    }
}

fn train_one(
    config: &ClassifierConfig,
    train: &Prepared,
    test: Option<&Prepared>,
    restart: usize,
) -> Result<(ClassifierModel, Vec<EpochRecord>)> {
    let mut model = config.init_model(restart)?;
    let mut params = flat(&model);
    let mut adam = AdamState::new(params.len(), config.adam);
    let mut history = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..=config.epochs {
        let (loss, grad) = loss_and_gradient(&model, &train.states, &train.labels, config.gradient)?;
        history.push(EpochRecord {
            epoch,
            loss,
            train_accuracy: train.accuracy(&model)?,
            test_accuracy: test.map(|t| t.accuracy(&model)).transpose()?,
        });
        if epoch == config.epochs {
            break;
        }
        adam.step(&mut params, &grad.flatten())?;
        set_flat(&mut model, &params);
    }
    Ok((model, history))
}

/// Trains `restarts` classifiers jointly over QCNN angles, head weights and
/// bias with full-batch ADAM and keeps the one with the highest final
/// training accuracy (ties go to the lower loss, then the earlier restart).
pub fn train_classifier(
    config: &ClassifierConfig,
    train: &LabeledStateSet,
    test: Option<&LabeledStateSet>,
) -> Result<TrainedClassifier> {
    config.validate()?;
    let counts = train.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::InvalidArgument(format!(
            "training set needs both classes, got {} zeros and {} ones",
            counts[0], counts[1]
        )));
    }
    let template = config.init_model(0)?;
    let train_p = Prepared::new(&template, train)?;
    let test_p = match test {
        Some(t) if !t.is_empty() => Some(Prepared::new(&template, t)?),
        _ => None,
    };
    let runs: Vec<(ClassifierModel, Vec<EpochRecord>)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| train_one(config, &train_p, test_p.as_ref(), r))
        .collect::<Result<_>>()?;
    let finals: Vec<&EpochRecord> = runs.iter().map(|(_, h)| h.last().expect("history is never empty")).collect();
    let best = (0..runs.len())
        .min_by(|&a, &b| {
            finals[b]
                .train_accuracy
                .total_cmp(&finals[a].train_accuracy)
                .then(finals[a].loss.total_cmp(&finals[b].loss))
                .then(a.cmp(&b))
        })
        .expect("at least one restart");
    let restart_train_accuracies = finals.iter().map(|f| f.train_accuracy).collect();
    let (train_accuracy, test_accuracy) = (finals[best].train_accuracy, finals[best].test_accuracy);
    let (model, history) = runs.into_iter().nth(best).expect("best index in range");
    Ok(TrainedClassifier {
        config: config.clone(),
        model,
        history,
        restart_index: best,
        restart_train_accuracies,
        train_accuracy,
        test_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::basis_state;

    fn model(n: usize, m: usize) -> ClassifierModel {
        ClassifierConfig::new(n, m, 0, 1, 5).init_model(0).unwrap()
    }

    #[test]
    fn zero_head_gives_one_half() {
        let mut md = model(3, 2);
        md.weights.iter_mut().for_each(|w| *w = 0.0);
        for s in [StateVector::ghz(3).unwrap(), basis_state(3, "101").unwrap()] {
            assert_eq!(md.forward(&s).unwrap(), 0.5);
            assert_eq!(md.classify(&s).unwrap(), 1);
        }
        md.bias = 50.0;
        assert!(md.forward(&StateVector::w(3).unwrap()).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn threshold_ties_go_to_one() {
        assert_eq!(threshold(0.5), 1);
        assert_eq!(threshold(0.4999), 0);
        assert_eq!(threshold(0.9), 1);
    }

    #[test]
    fn probabilities_normalized() {
        let md = model(3, 2);
        let p = md.probabilities(&StateVector::w(3).unwrap()).unwrap();
        assert_eq!(p.len(), 4);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn layouts_agree_on_product_structure() {
        let mut md = model(2, 2);
        let s = StateVector::from_amplitudes_normalized(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 3.0),
            Complex64::new(0.5, 0.0),
        ])
        .unwrap();
        let inter = md.prepare_input(&s).unwrap();
        md.layout = CopyLayout::Blocked;
        let block = md.prepare_input(&s).unwrap();
        // wire order (a0 a1 b0 b1) vs (a0 b0 a1 b1)
        assert_eq!(block.permute_qubits(&[0, 2, 1, 3]).unwrap(), inter);
    }

    #[test]
    fn loss_examples() {
        let mut md = model(2, 1);
        md.weights.iter_mut().for_each(|w| *w = 0.0);
        let set =
            LabeledStateSet::from_states([(basis_state(2, "00").unwrap(), 0), (basis_state(2, "11").unwrap(), 1)])
                .unwrap();
        assert!((clf_loss(&md, &set).unwrap() - 0.25).abs() < 1e-15);
        md.lambda = 0.3;
        md.weights[1] = -2.0;
        let plain = {
            let mut m0 = md.clone();
            m0.lambda = 0.0;
            clf_loss(&m0, &set).unwrap()
        };
        assert!((clf_loss(&md, &set).unwrap() - plain - 0.6).abs() < 1e-12);
        md.bias = 800.0;
        md.lambda = 0.0;
        let ones = LabeledStateSet::from_states([(basis_state(2, "01").unwrap(), 1)]).unwrap();
        assert_eq!(clf_loss(&md, &ones).unwrap(), 0.0);
        assert!(clf_loss(&md, &LabeledStateSet::default()).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let mut md = model(2, 1);
        md.weights.iter_mut().for_each(|w| *w = 0.0);
        let ones =
            LabeledStateSet::from_states([(basis_state(2, "01").unwrap(), 1), (basis_state(2, "10").unwrap(), 1)])
                .unwrap();
        assert_eq!(accuracy(&md, &ones).unwrap(), 1.0);
        let mixed =
            LabeledStateSet::from_states([(basis_state(2, "01").unwrap(), 0), (basis_state(2, "10").unwrap(), 1)])
                .unwrap();
        assert_eq!(accuracy(&md, &mixed).unwrap(), 0.5);
        assert!(accuracy(&md, &LabeledStateSet::default()).is_err());
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let md = model(2, 2);
        let set = LabeledStateSet::from_states([
            (StateVector::ghz(2).unwrap(), 1),
            (basis_state(2, "01").unwrap(), 0),
            (StateVector::w(2).unwrap(), 0),
        ])
        .unwrap();
        let prep = Prepared::new(&md, &set).unwrap();
        let (la, ga) = loss_and_gradient(&md, &prep.states, &prep.labels, GradientMethod::Adjoint).unwrap();
        let (lf, gf) =
            loss_and_gradient(&md, &prep.states, &prep.labels, GradientMethod::FiniteDifference { step: 1e-5 })
                .unwrap();
        assert_eq!(la, lf);
        for (a, f) in ga.qcnn.iter().zip(&gf.qcnn) {
            assert!((a - f).abs() < 1e-8, "{a} vs {f}");
        }
    }

    #[test]
    fn separable_singletons_reach_full_accuracy() {
        let set = LabeledStateSet::from_states([(StateVector::zero(2).unwrap(), 0), (StateVector::ghz(2).unwrap(), 1)])
            .unwrap();
        let mut cfg = ClassifierConfig::new(2, 2, 60, 2, 11);
        cfg.adam.lr = 0.1;
        let t = train_classifier(&cfg, &set, None).unwrap();
        assert_eq!(t.train_accuracy, 1.0);
        assert_eq!(t.history.len(), 61);
    }

    #[test]
    fn single_class_training_rejected() {
        let set = LabeledStateSet::from_states([(StateVector::zero(2).unwrap(), 1)]).unwrap();
        assert!(train_classifier(&ClassifierConfig::new(2, 1, 1, 1, 0), &set, None).is_err());
    }

    #[test]
    fn stratified_split_keeps_ratios() {
        let items =
            (0..100).map(|i| (basis_state(2, if i % 4 == 0 { "11" } else { "00" }).unwrap(), u8::from(i % 4 == 0)));
        let set = LabeledStateSet::from_states(items).unwrap();
        let (tr, te) = set.split_stratified(0.7, 3).unwrap();
        assert_eq!(tr.class_counts(), [53, 18]);
        assert_eq!(te.class_counts(), [22, 7]);
        assert_eq!(tr.split, Split::Train);
        let (tr2, _) = set.split_stratified(0.7, 3).unwrap();
        assert_eq!(tr, tr2);
    }
}
