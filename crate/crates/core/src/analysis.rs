//! Dataset statistics: CE histograms, purity tables and concurrence versus
//! qubit distance.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{concentratable_entanglement, concurrence};
use crate::error::{Error, Result};
use crate::sim::{reduced_density, subset_purity, StateVector};

pub const DEFAULT_BINS: usize = 50;

/// Uniform-bin density histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub density: Vec<f64>,
}

impl Histogram {
    /// Values outside `[lo, hi]` are clamped into the first or last bin.
    pub fn from_values(values: &[f64], bins: usize, range: (f64, f64)) -> Result<Self> {
        let (lo, hi) = range;
        if bins == 0 {
            return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument("histogram of an empty sample".into()));
        }
        if !(hi > lo) {
            return Err(Error::InvalidArgument(format!("empty histogram range [{lo}, {hi}]")));
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0usize; bins];
        for v in values {
            let k = ((v - lo) / width).floor();
            let k = if k.is_nan() || k < 0.0 { 0 } else { (k as usize).min(bins - 1) };
            counts[k] += 1;
        }
        let total = values.len() as f64;
        let density = counts.iter().map(|&c| c as f64 / (total * width)).collect();
        Ok(Self { edges, counts, density })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    /// Edges of the most populated bin (first one on ties).
    pub fn mode_bin(&self) -> (f64, f64) {
        let k =
            self.counts.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).map(|(k, _)| k).unwrap_or(0);
        (self.edges[k], self.edges[k + 1])
    }

    /// Columns `left,right,count,density`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["left", "right", "count", "density"])?;
        for k in 0..self.bins() {
            w.write_record([
                self.edges[k].to_string(),
                self.edges[k + 1].to_string(),
                self.counts[k].to_string(),
                self.density[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full CE range for `n` qubits, `[0, 1 - 2^(1-n)]`.
pub fn ce_range(n: usize) -> (f64, f64) {
    (0.0, 1.0 - 2f64.powi(1 - n as i32))
}

pub fn ce_values(states: &[StateVector]) -> Result<Vec<f64>> {
    states.par_iter().map(concentratable_entanglement).collect()
}

/// Density histogram of CE; `range` defaults to the full CE range.
pub fn ce_histogram(states: &[StateVector], bins: usize, range: Option<(f64, f64)>) -> Result<Histogram> {
    let first = states.first().ok_or_else(|| Error::InvalidArgument("histogram of an empty sample".into()))?;
    let range = range.unwrap_or_else(|| ce_range(first.n_qubits()));
    Histogram::from_values(&ce_values(states)?, bins, range)
}

/// `out[i][s]` is the purity of qubit `i` in state `s`.
pub fn single_qubit_purity_samples(states: &[StateVector]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = states.first() else {
        return Ok(Vec::new());
    };
    let n = first.n_qubits();
    let rows: Vec<Vec<f64>> = states
        .par_iter()
        .map(|s| {
            if s.n_qubits() != n {
                return Err(Error::QubitCountMismatch { expected: n, actual: s.n_qubits() });
            }
            (0..n).map(|i| subset_purity(s, &[i])).collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..n).map(|i| rows.iter().map(|r| r[i]).collect()).collect())
}

/// Per-state, per-pair concurrences grouped by chain distance.
fn pair_concurrences(state: &StateVector) -> Result<Vec<Vec<f64>>> {
    let n = state.n_qubits();
    let mut by_l = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            by_l[j - i].push(concurrence(&reduced_density(state, &[i, j])?)?);
        }
    }
    Ok(by_l)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceStat {
    pub mean: f64,
    /// Standard error over states of the per-state distance average.
    pub stderr: f64,
}

/// Mean concurrence of `ρ_ij` over all pairs with `|i - j| = l`, averaged
/// over states, for `l = 1..n-1`.
pub fn distance_averaged_concurrence(states: &[StateVector]) -> Result<BTreeMap<usize, DistanceStat>> {
    let first = states.first().ok_or_else(|| Error::InvalidArgument("no states to analyze".into()))?;
    let n = first.n_qubits();
    if n < 2 {
        return Err(Error::InvalidArgument("concurrence needs at least 2 qubits".into()));
    }
    let per_state: Vec<Vec<f64>> = states
        .par_iter()
        .map(|s| {
            if s.n_qubits() != n {
                return Err(Error::QubitCountMismatch { expected: n, actual: s.n_qubits() });
            }
            Ok(pair_concurrences(s)?.iter().skip(1).map(|v| v.iter().sum::<f64>() / v.len() as f64).collect())
        })
        .collect::<Result<_>>()?;
    let count = per_state.len() as f64;
    let mut out = BTreeMap::new();
    for l in 1..n {
        let vals: Vec<f64> = per_state.iter().map(|v| v[l - 1]).collect();
        let mean = vals.iter().sum::<f64>() / count;
        let stderr = if per_state.len() > 1 {
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt() / count.sqrt()
        } else {
            0.0
        };
        out.insert(l, DistanceStat { mean, stderr });
    }
    Ok(out)
}

/// Mean purity of the first `n/2` qubits.
pub fn halfchain_purity_average(states: &[StateVector]) -> Result<f64> {
    let first = states.first().ok_or_else(|| Error::InvalidArgument("no states to analyze".into()))?;
    let n = first.n_qubits();
    if n % 2 != 0 {
        return Err(Error::Domain(format!("half-chain purity needs an even qubit count, got {n}")));
    }
    let half: Vec<usize> = (0..n / 2).collect();
    let vals: Vec<f64> = states.par_iter().map(|s| subset_purity(s, &half)).collect::<Result<_>>()?;
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Columns `depth,l,mean,stderr`.
pub fn write_concurrence_csv(rows: &[(usize, BTreeMap<usize, DistanceStat>)], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["depth", "l", "mean", "stderr"])?;
    for (depth, stats) in rows {
        for (l, s) in stats {
            w.write_record([depth.to_string(), l.to_string(), s.mean.to_string(), s.stderr.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `state,qubit,purity`.
pub fn write_purity_csv(samples: &[Vec<f64>], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["state", "qubit", "purity"])?;
    let count = samples.first().map_or(0, Vec::len);
    for s in 0..count {
        for (q, col) in samples.iter().enumerate() {
            w.write_record([s.to_string(), q.to_string(), col[s].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_haar_product, stream, Stream};
    use crate::sim::basis_state;

    fn products(n: usize, count: usize) -> Vec<StateVector> {
        let mut rng = stream(8, Stream::TestSet, 0);
        (0..count).map(|_| sample_haar_product(n, &mut rng).unwrap()).collect()
    }

    #[test]
    fn histogram_basics() {
        let h = Histogram::from_values(&[0.35; 10], 10, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts.iter().filter(|c| **c > 0).count(), 1);
        assert_eq!(h.counts[3], 10);
        let integral: f64 = h.density.iter().sum::<f64>() * h.bin_width();
        assert!((integral - 1.0).abs() < 1e-9);
        let h = Histogram::from_values(&[-1.0, 0.5, 2.0, 1.0], 4, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts, vec![1, 0, 1, 2]);
        assert!(Histogram::from_values(&[], 4, (0.0, 1.0)).is_err());
        assert!(Histogram::from_values(&[0.1], 0, (0.0, 1.0)).is_err());
    }

    #[test]
    fn product_states_histogram_at_zero() {
        let h = ce_histogram(&products(3, 30), DEFAULT_BINS, None).unwrap();
        assert_eq!(h.counts[0], 30);
        assert_eq!(h.mode_bin().0, 0.0);
    }

    #[test]
    fn single_qubit_purities() {
        let p = single_qubit_purity_samples(&products(3, 5)).unwrap();
        assert!(p.iter().flatten().all(|v| (v - 1.0).abs() < 1e-12));
        let p = single_qubit_purity_samples(&[StateVector::ghz(4).unwrap()]).unwrap();
        assert!(p.iter().flatten().all(|v| (v - 0.5).abs() < 1e-12));
        let p = single_qubit_purity_samples(&[StateVector::w(3).unwrap()]).unwrap();
        assert!(p.iter().flatten().all(|v| (v - 5.0 / 9.0).abs() < 1e-12));
    }

    #[test]
    fn concurrence_by_distance() {
        let bell0 = StateVector::ghz(2).unwrap().tensor(&basis_state(1, "0").unwrap()).unwrap();
        let d = distance_averaged_concurrence(&[bell0]).unwrap();
        assert!((d[&1].mean - 0.5).abs() < 1e-9);
        assert!(d[&2].mean.abs() < 1e-9);
        let d = distance_averaged_concurrence(&products(4, 10)).unwrap();
        assert!(d.values().all(|s| s.mean.abs() < 1e-7));
    }

    #[test]
    fn halfchain_examples() {
        assert!((halfchain_purity_average(&products(4, 10)).unwrap() - 1.0).abs() < 1e-12);
        assert!((halfchain_purity_average(&[StateVector::ghz(4).unwrap()]).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(halfchain_purity_average(&products(3, 2)), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_writers() {
        let dir = tempfile::tempdir().unwrap();
        let h = Histogram::from_values(&[0.1, 0.2], 2, (0.0, 1.0)).unwrap();
        h.write_csv(dir.path().join("h.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), "left,right,count,density");
        let d = distance_averaged_concurrence(&products(3, 2)).unwrap();
        write_concurrence_csv(&[(1, d)], dir.path().join("c.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
        write_purity_csv(&single_qubit_purity_samples(&products(2, 3)).unwrap(), dir.path().join("p.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
        assert_eq!(text.lines().count(), 7);
    }
}
