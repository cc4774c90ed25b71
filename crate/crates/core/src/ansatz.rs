//! Circuit builders for the parameterized architectures.
//!
//! Parameters are passed as flat row-major slices; [`AnsatzSpec::param_shape`]
//! gives the declared shape. Every builder is a pure function of
//! `(n, layers, params)` and records which parameter feeds each gate angle.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Circuit, Gate};

/// Parameters consumed by one two-qubit block.
pub const TWO_QUBIT_PARAMS: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzKind {
    Hwe,
    Sea,
    Conv,
    DepthHwe,
    Qcnn,
}

impl AnsatzKind {
    pub fn name(&self) -> &'static str {
        match self {
            AnsatzKind::Hwe => "hwe",
            AnsatzKind::Sea => "sea",
            AnsatzKind::Conv => "conv",
            AnsatzKind::DepthHwe => "depth_hwe",
            AnsatzKind::Qcnn => "qcnn",
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hwe" => Ok(AnsatzKind::Hwe),
            "sea" => Ok(AnsatzKind::Sea),
            "conv" => Ok(AnsatzKind::Conv),
            "depth_hwe" | "depth-hwe" => Ok(AnsatzKind::DepthHwe),
            "qcnn" => Ok(AnsatzKind::Qcnn),
            other => Err(Error::InvalidArgument(format!("unknown ansatz kind {other:?}"))),
        }
    }
}

fn default_measured() -> usize {
    2
}

/// Architecture description: enough to build a circuit from a parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub kind: AnsatzKind,
    pub n_qubits: usize,
    pub layers: usize,
    /// HWE only: draw fresh parameters for the second U3 round of each layer.
    #[serde(default)]
    pub independent_second_round: bool,
    /// QCNN only: stop pooling once this many qubits remain active.
    #[serde(default = "default_measured")]
    pub measured: usize,
}

impl AnsatzSpec {
    pub fn new(kind: AnsatzKind, n_qubits: usize, layers: usize) -> Self {
        Self { kind, n_qubits, layers, independent_second_round: false, measured: default_measured() }
    }

    pub fn param_shape(&self) -> Vec<usize> {
        let (n, l) = (self.n_qubits, self.layers);
        match self.kind {
            AnsatzKind::Hwe if self.independent_second_round => vec![l, 2, n, 3],
            AnsatzKind::Hwe | AnsatzKind::Sea => vec![l, n, 3],
            AnsatzKind::Conv => vec![l, 2 * TWO_QUBIT_PARAMS * (n / 2)],
            AnsatzKind::DepthHwe => vec![l + 1, n, 3],
            AnsatzKind::Qcnn => vec![qcnn_schedule(n, self.measured).0.len(), TWO_QUBIT_PARAMS],
        }
    }

    pub fn n_params(&self) -> usize {
        self.param_shape().iter().product()
    }

    pub fn build(&self, params: &[f64]) -> Result<Circuit> {
        let (n, l) = (self.n_qubits, self.layers);
        match self.kind {
            AnsatzKind::Hwe => build_hwe_with(n, l, params, self.independent_second_round),
            AnsatzKind::Sea => build_sea(n, l, params),
            AnsatzKind::Conv => build_conv(n, l, params),
            AnsatzKind::DepthHwe => build_depth_ansatz(n, l, params),
            AnsatzKind::Qcnn => build_qcnn(n, params, self.measured).map(|(c, _)| c),
        }
    }

    /// Uniform draw in `[0, 2π)` for every parameter.
    pub fn random_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        random_angles(self.n_params(), rng)
    }
}

pub fn random_angles<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| rng.random_range(0.0..TAU)).collect()
}

fn check_len(params: &[f64], expected: usize) -> Result<()> {
    if params.len() != expected {
        return Err(Error::ParamCount { expected, actual: params.len() });
    }
    Ok(())
}

fn check_min_qubits(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidArgument(format!("ansatz needs at least {min} qubits, got {n}")));
    }
    Ok(())
}

fn push_u3(c: &mut Circuit, q: usize, params: &[f64], offset: usize) -> Result<()> {
    let g = Gate::u3(q, params[offset], params[offset + 1], params[offset + 2]);
    c.push_bound(g, &[offset, offset + 1, offset + 2])?;
    Ok(())
}

/// Appends the 15-parameter two-qubit block on `(i, j)` reading
/// `params[offset..offset + 15]`.
fn push_2qu(c: &mut Circuit, i: usize, j: usize, params: &[f64], offset: usize) -> Result<()> {
    if i == j {
        return Err(Error::RepeatedQubit(i));
    }
    let p = |k: usize| params[offset + k];
    push_u3(c, i, params, offset)?;
    push_u3(c, j, params, offset + 3)?;
    c.push(Gate::cnot(j, i))?;
    c.push_bound(Gate::rz(i, p(6)), &[offset + 6])?;
    c.push_bound(Gate::ry(j, p(7)), &[offset + 7])?;
    c.push(Gate::cnot(i, j))?;
    c.push_bound(Gate::ry(j, p(8)), &[offset + 8])?;
    c.push(Gate::cnot(j, i))?;
    push_u3(c, i, params, offset + 9)?;
    push_u3(c, j, params, offset + 12)?;
    Ok(())
}

/// Gate sequence of the general two-qubit block on `(i, j)`.
pub fn build_2qu(i: usize, j: usize, params: &[f64]) -> Result<Vec<Gate>> {
    check_len(params, TWO_QUBIT_PARAMS)?;
    let mut c = Circuit::with_params(i.max(j) + 1, TWO_QUBIT_PARAMS);
    push_2qu(&mut c, i, j, params, 0)?;
    Ok(c.ops().to_vec())
}

/// Hardware-efficient generator, parameters `(L, n, 3)`, with the layer's
/// U3 parameters applied on both rotation rounds.
pub fn build_hwe(n: usize, layers: usize, params: &[f64]) -> Result<Circuit> {
    build_hwe_with(n, layers, params, false)
}

/// Hardware-efficient generator; with `independent_second_round` the shape
/// is `(L, 2, n, 3)` and the second rotation round has its own parameters.
pub fn build_hwe_with(n: usize, layers: usize, params: &[f64], independent_second_round: bool) -> Result<Circuit> {
    check_min_qubits(n, 2)?;
    let rounds = if independent_second_round { 2 } else { 1 };
    let total = layers * rounds * n * 3;
    check_len(params, total)?;
    let mut c = Circuit::with_params(n, total);
    for d in 0..layers {
        let first = d * rounds * n * 3;
        let second = first + (rounds - 1) * n * 3;
        for i in 0..n {
            push_u3(&mut c, i, params, first + 3 * i)?;
        }
        for i in 0..n / 2 {
            c.push(Gate::cnot(2 * i, 2 * i + 1))?;
        }
        for i in 0..n {
            push_u3(&mut c, i, params, second + 3 * i)?;
        }
        for i in 0..(n - 1) / 2 {
            c.push(Gate::cnot(2 * i + 1, 2 * i + 2))?;
        }
    }
    Ok(c)
}

/// Strongly-entangling generator: U3 layer followed by the wrapping CNOT
/// ladder `CNOT(i, (i+1) mod n)`.
pub fn build_sea(n: usize, layers: usize, params: &[f64]) -> Result<Circuit> {
    check_min_qubits(n, 2)?;
    let total = layers * n * 3;
    check_len(params, total)?;
    let mut c = Circuit::with_params(n, total);
    for d in 0..layers {
        for i in 0..n {
            push_u3(&mut c, i, params, (d * n + i) * 3)?;
        }
        for i in 0..n {
            c.push(Gate::cnot(i, (i + 1) % n))?;
        }
    }
    Ok(c)
}

/// Convolutional generator: two-qubit blocks on `(2i, 2i+1)` then on
/// `(2i+1, (2i+2) mod n)`; parameters `(L, 30·⌊n/2⌋)`.
pub fn build_conv(n: usize, layers: usize, params: &[f64]) -> Result<Circuit> {
    check_min_qubits(n, 2)?;
    let per_layer = 2 * TWO_QUBIT_PARAMS * (n / 2);
    let total = layers * per_layer;
    check_len(params, total)?;
    let mut c = Circuit::with_params(n, total);
    for d in 0..layers {
        let mut j = d * per_layer;
        for i in 0..n / 2 {
            push_2qu(&mut c, 2 * i, 2 * i + 1, params, j)?;
            j += TWO_QUBIT_PARAMS;
        }
        for i in 0..n / 2 {
            push_2qu(&mut c, 2 * i + 1, (2 * i + 2) % n, params, j)?;
            j += TWO_QUBIT_PARAMS;
        }
    }
    Ok(c)
}

/// Depth-learning HWE: an initial U3 layer (`params[0]`), then per layer the
/// two CNOT ladders followed by a U3 layer. Parameters `(L+1, n, 3)`.
pub fn build_depth_ansatz(n: usize, layers: usize, params: &[f64]) -> Result<Circuit> {
    check_min_qubits(n, 2)?;
    let total = (layers + 1) * n * 3;
    check_len(params, total)?;
    let mut c = Circuit::with_params(n, total);
    for i in 0..n {
        push_u3(&mut c, i, params, 3 * i)?;
    }
    for d in 1..=layers {
        for i in 0..n / 2 {
            c.push(Gate::cnot(2 * i, 2 * i + 1))?;
        }
        for i in 0..(n - 1) / 2 {
            c.push(Gate::cnot(2 * i + 1, 2 * i + 2))?;
        }
        for i in 0..n {
            push_u3(&mut c, i, params, (d * n + i) * 3)?;
        }
    }
    Ok(c)
}

/// Block placement of the QCNN: the ordered list of two-qubit blocks and the
/// qubits still active at the end.
///
/// Each round applies a brick convolution over the active qubits (even
/// neighbour pairs, then odd ones). While more than `measured` qubits are
/// active, a pooling round follows: a block on each neighbour pair `(a, b)`
/// after which `a` is dropped.
pub fn qcnn_schedule(n_total: usize, measured: usize) -> (Vec<(usize, usize)>, Vec<usize>) {
    let measured = measured.max(1);
    let mut active: Vec<usize> = (0..n_total).collect();
    let mut blocks = Vec::new();
    loop {
        for start in [0, 1] {
            let mut k = start;
            while k + 1 < active.len() {
                blocks.push((active[k], active[k + 1]));
                k += 2;
            }
        }
        if active.len() <= measured {
            break;
        }
        let mut keep = Vec::with_capacity(active.len().div_ceil(2));
        let mut k = 0;
        while k < active.len() {
            if k + 1 < active.len() {
                blocks.push((active[k], active[k + 1]));
                keep.push(active[k + 1]);
            } else {
                keep.push(active[k]);
            }
            k += 2;
        }
        active = keep;
    }
    (blocks, active)
}

pub fn qcnn_param_count(n_total: usize, measured: usize) -> usize {
    qcnn_schedule(n_total, measured).0.len() * TWO_QUBIT_PARAMS
}

/// QCNN classifier circuit and the qubits left to measure.
pub fn build_qcnn(n_total: usize, params: &[f64], measured: usize) -> Result<(Circuit, Vec<usize>)> {
    check_min_qubits(n_total, 2)?;
    let (blocks, active) = qcnn_schedule(n_total, measured);
    let total = blocks.len() * TWO_QUBIT_PARAMS;
    check_len(params, total)?;
    let mut c = Circuit::with_params(n_total, total);
    for (b, &(i, j)) in blocks.iter().enumerate() {
        push_2qu(&mut c, i, j, params, b * TWO_QUBIT_PARAMS)?;
    }
    Ok((c, active))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_cnots(c: &Circuit) -> usize {
        c.ops().iter().filter(|g| matches!(g, Gate::Cnot { .. })).count()
    }

    #[test]
    fn two_qubit_block_layout() {
        let params: Vec<f64> = (0..15).map(|k| k as f64).collect();
        let g = build_2qu(0, 1, &params).unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], Gate::u3(0, 0.0, 1.0, 2.0));
        assert_eq!(g[1], Gate::u3(1, 3.0, 4.0, 5.0));
        assert_eq!(g[2], Gate::cnot(1, 0));
        assert_eq!(g[3], Gate::rz(0, 6.0));
        assert_eq!(g[4], Gate::ry(1, 7.0));
        assert_eq!(g[5], Gate::cnot(0, 1));
        assert_eq!(g[6], Gate::ry(1, 8.0));
        assert_eq!(g[7], Gate::cnot(1, 0));
        assert_eq!(g[8], Gate::u3(0, 9.0, 10.0, 11.0));
        assert_eq!(g[9], Gate::u3(1, 12.0, 13.0, 14.0));
        assert!(matches!(build_2qu(0, 1, &params[..14]), Err(Error::ParamCount { expected: 15, actual: 14 })));
        assert!(build_2qu(1, 1, &params).is_err());
    }

    #[test]
    fn hwe_counts() {
        let c = build_hwe(3, 2, &[0.0; 18]).unwrap();
        assert_eq!(c.len(), 16);
        let c = build_hwe(4, 1, &[0.0; 12]).unwrap();
        let cnots: Vec<_> = c.ops().iter().filter(|g| matches!(g, Gate::Cnot { .. })).copied().collect();
        assert_eq!(cnots, vec![Gate::cnot(0, 1), Gate::cnot(2, 3), Gate::cnot(1, 2)]);
        assert!(matches!(build_hwe(3, 2, &[0.0; 17]), Err(Error::ParamCount { .. })));
    }

    #[test]
    fn hwe_reuses_layer_parameters() {
        let params: Vec<f64> = (0..6).map(|k| k as f64 * 0.1).collect();
        let c = build_hwe(2, 1, &params).unwrap();
        assert_eq!(c.ops()[0], c.ops()[3]);
        assert_eq!(c.binding(0), c.binding(3));
        let spec = AnsatzSpec { independent_second_round: true, ..AnsatzSpec::new(AnsatzKind::Hwe, 2, 1) };
        assert_eq!(spec.param_shape(), vec![1, 2, 2, 3]);
        let params: Vec<f64> = (0..12).map(|k| k as f64).collect();
        let c = spec.build(&params).unwrap();
        assert_eq!(c.ops()[3], Gate::u3(0, 6.0, 7.0, 8.0));
    }

    #[test]
    fn sea_wrapping_ladder() {
        let c = build_sea(3, 1, &[0.0; 9]).unwrap();
        assert_eq!(c.len(), 6);
        let c = build_sea(2, 1, &[0.0; 6]).unwrap();
        assert_eq!(&c.ops()[2..], &[Gate::cnot(0, 1), Gate::cnot(1, 0)]);
    }

    #[test]
    fn conv_pairs() {
        let c = build_conv(4, 1, &[0.0; 60]).unwrap();
        assert_eq!(c.len(), 40);
        // first CNOT of each block is CNOT(j, i)
        let firsts: Vec<Gate> = c.ops().chunks(10).map(|b| b[2]).collect();
        assert_eq!(firsts, vec![Gate::cnot(1, 0), Gate::cnot(3, 2), Gate::cnot(2, 1), Gate::cnot(0, 3)]);
    }

    #[test]
    fn depth_ansatz_counts() {
        assert_eq!(build_depth_ansatz(4, 0, &[0.0; 12]).unwrap().len(), 4);
        assert_eq!(build_depth_ansatz(4, 1, &[0.0; 24]).unwrap().len(), 11);
    }

    #[test]
    fn qcnn_schedules() {
        let (blocks, active) = qcnn_schedule(6, 2);
        assert_eq!(active, vec![3, 5]);
        assert_eq!(blocks.len(), 5 + 3 + 2 + 1 + 1);
        let (blocks, active) = qcnn_schedule(2, 2);
        assert_eq!(blocks, vec![(0, 1)]);
        assert_eq!(active, vec![0, 1]);
        let (c, m) = build_qcnn(6, &vec![0.0; qcnn_param_count(6, 2)], 2).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(count_cnots(&c), 36);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [AnsatzKind::Hwe, AnsatzKind::Sea, AnsatzKind::Conv, AnsatzKind::DepthHwe, AnsatzKind::Qcnn] {
            assert_eq!(k.name().parse::<AnsatzKind>().unwrap(), k);
        }
        assert!("brick".parse::<AnsatzKind>().is_err());
    }
}
