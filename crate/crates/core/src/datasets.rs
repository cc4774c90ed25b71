//! Model files, dataset factories and bulk state export.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_depth_ansatz, random_angles, AnsatzKind, AnsatzSpec};
use crate::classifier::{LabeledState, LabeledStateSet, Provenance, StateRecipe};
use crate::entanglement::concentratable_entanglement;
use crate::error::{Error, Result};
use crate::sampling::{stream, InputDistribution, InputSampler, Stream};
use crate::sim::StateVector;
use crate::training::{Generator, SuccessReport, TrainedGenerator};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ntangled,
    Depth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub test_count: usize,
    pub success_rate: f64,
    pub ce_mean: f64,
    pub ce_std: f64,
    pub final_loss: Option<f64>,
}

impl From<&SuccessReport> for ModelMetrics {
    fn from(r: &SuccessReport) -> Self {
        Self {
            test_count: r.count,
            success_rate: r.success_rate,
            ce_mean: r.ce_mean,
            ce_std: r.ce_std,
            final_loss: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreationInfo {
    pub tool: String,
    pub version: String,
}

impl Default for CreationInfo {
    fn default() -> Self {
        Self { tool: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

/// On-disk generator: architecture, trained parameters and the recipe that
/// produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorModelFile {
    pub format_version: u32,
    pub kind: ModelKind,
    pub ansatz: AnsatzSpec,
    pub param_shape: Vec<usize>,
    /// Stored as decimal strings with 17 significant digits.
    #[serde(with = "param_strings")]
    pub params: Vec<f64>,
    pub target_ce: Option<f64>,
    pub delta: Option<f64>,
    pub inputs: Option<InputDistribution>,
    pub seed: u64,
    pub metrics: Option<ModelMetrics>,
    pub created: CreationInfo,
}

mod param_strings {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(params: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(params.iter().map(|p| format!("{p:.16e}")))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| s.parse::<f64>().map_err(|e| D::Error::custom(format!("bad parameter {s:?}: {e}"))))
            .collect()
    }
}

impl GeneratorModelFile {
    pub fn from_trained(trained: &TrainedGenerator, report: Option<&SuccessReport>) -> Self {
        let cfg = &trained.config;
        Self {
            format_version: FORMAT_VERSION,
            kind: ModelKind::Ntangled,
            param_shape: cfg.ansatz.param_shape(),
            ansatz: cfg.ansatz.clone(),
            params: trained.generator.params.clone(),
            target_ce: Some(cfg.target_ce),
            delta: Some(cfg.delta),
            inputs: Some(cfg.inputs.clone()),
            seed: cfg.seed,
            metrics: report.map(|r| ModelMetrics { final_loss: Some(trained.final_loss), ..r.into() }),
            created: CreationInfo::default(),
        }
    }

    pub fn generator(&self) -> Result<Generator> {
        Generator::new(self.ansatz.clone(), self.params.clone())
    }

    /// Short identifier used in state recipes.
    pub fn model_id(&self) -> String {
        let target = self.target_ce.map(|x| format!("-xi{x}")).unwrap_or_default();
        format!("{}-n{}-l{}{}-seed{}", self.ansatz.kind, self.ansatz.n_qubits, self.ansatz.layers, target, self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let shape = self.ansatz.param_shape();
        if shape != self.param_shape {
            return Err(Error::Schema(format!(
                "declared shape {:?} does not match ansatz shape {shape:?}",
                self.param_shape
            )));
        }
        if self.params.len() != self.ansatz.n_params() {
            return Err(Error::ParamCount { expected: self.ansatz.n_params(), actual: self.params.len() });
        }
        if let Some(dist) = &self.inputs {
            dist.validate(self.ansatz.n_qubits)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

pub fn save_model(model: &GeneratorModelFile, path: impl AsRef<Path>) -> Result<()> {
    model.validate()?;
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(model.to_json()?.as_bytes())?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GeneratorModelFile> {
    GeneratorModelFile::from_json(&std::fs::read_to_string(path)?)
}

/// Draws `count` inputs, applies the generator and records each output CE.
pub fn generate_ntangled(
    generator: &Generator,
    sampler: &mut InputSampler,
    count: usize,
) -> Result<Vec<(StateVector, f64)>> {
    let circuit = generator.circuit()?;
    let inputs = sampler.take(count)?;
    inputs
        .into_par_iter()
        .map(|s| {
            let out = s.run(&circuit)?;
            let ce = concentratable_entanglement(&out)?;
            Ok((out, ce))
        })
        .collect()
}

/// Sampler used when building datasets from a model file.
pub fn dataset_sampler(model: &GeneratorModelFile, seed: u64) -> Result<InputSampler> {
    model
        .inputs
        .clone()
        .unwrap_or(InputDistribution::HaarProduct)
        .sampler(model.ansatz.n_qubits, stream(seed, Stream::Dataset, 0))
}

/// `count` generated states from `model`, all labeled `label`.
pub fn ntangled_labeled_set(model: &GeneratorModelFile, count: usize, label: u8, seed: u64) -> Result<LabeledStateSet> {
    let generator = model.generator()?;
    let mut sampler = dataset_sampler(model, seed)?;
    let id = model.model_id();
    let items = generate_ntangled(&generator, &mut sampler, count)?
        .into_iter()
        .enumerate()
        .map(|(index, (state, _))| LabeledState {
            state,
            label,
            recipe: StateRecipe::Ntangled { model: id.clone(), index },
        })
        .collect();
    LabeledStateSet::new(items, Provenance { source: id, seed: Some(seed) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthClass {
    pub depth: usize,
    pub label: u8,
    pub count: usize,
}

/// Depth-learning dataset recipe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthDatasetSpec {
    pub n_qubits: usize,
    pub classes: Vec<DepthClass>,
    pub seed: u64,
    /// Draw the whole circuit per sample instead of fixing the layer
    /// parameters per depth.
    #[serde(default)]
    pub resample_per_state: bool,
}

impl DepthDatasetSpec {
    /// Two-label task: every depth in `zeros` gets label 0 and every depth in
    /// `ones` label 1, `count` samples per depth.
    pub fn binned(n_qubits: usize, zeros: &[usize], ones: &[usize], count: usize, seed: u64) -> Self {
        let classes = zeros
            .iter()
            .map(|&depth| DepthClass { depth, label: 0, count })
            .chain(ones.iter().map(|&depth| DepthClass { depth, label: 1, count }))
            .collect();
        Self { n_qubits, classes, seed, resample_per_state: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::InvalidArgument("depth dataset needs at least 2 qubits".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::InvalidArgument("depth dataset needs at least one class".into()));
        }
        for c in &self.classes {
            if c.label > 1 {
                return Err(Error::InvalidArgument(format!("labels must be 0 or 1, got {}", c.label)));
            }
            if c.count == 0 {
                return Err(Error::InvalidArgument(format!("depth {} has zero samples", c.depth)));
            }
        }
        Ok(())
    }

    /// Layer parameters `params[1..=L]` shared by every sample of `depth`.
    pub fn layer_params(&self, depth: usize) -> Vec<f64> {
        let mut rng = stream(self.seed, Stream::DepthClass, depth as u64);
        random_angles(depth * self.n_qubits * 3, &mut rng)
    }

    /// Full parameter vector `(L+1, n, 3)` of sample `index` in class `class`.
    pub fn sample_params(&self, class: usize, index: usize) -> Vec<f64> {
        let depth = self.classes[class].depth;
        let mut rng = stream(self.seed, Stream::DepthSample, ((class as u64) << 32) | index as u64);
        if self.resample_per_state {
            random_angles((depth + 1) * self.n_qubits * 3, &mut rng)
        } else {
            let mut p = random_angles(self.n_qubits * 3, &mut rng);
            p.extend(self.layer_params(depth));
            p
        }
    }

    pub fn sample_state(&self, class: usize, index: usize) -> Result<StateVector> {
        let depth = self.classes[class].depth;
        let params = self.sample_params(class, index);
        StateVector::zero(self.n_qubits)?.run(&build_depth_ansatz(self.n_qubits, depth, &params)?)
    }
}

/// Builds every sample of every class, in class order.
pub fn generate_depth_dataset(spec: &DepthDatasetSpec) -> Result<LabeledStateSet> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> =
        spec.classes.iter().enumerate().flat_map(|(c, class)| (0..class.count).map(move |i| (c, i))).collect();
    let items = jobs
        .par_iter()
        .map(|&(c, index)| {
            let class = &spec.classes[c];
            Ok(LabeledState {
                state: spec.sample_state(c, index)?,
                label: class.label,
                recipe: StateRecipe::Depth { depth: class.depth, index },
            })
        })
        .collect::<Result<_>>()?;
    let depths: Vec<String> = spec.classes.iter().map(|c| c.depth.to_string()).collect();
    LabeledStateSet::new(
        items,
        Provenance { source: format!("depth-n{}-L{}", spec.n_qubits, depths.join(",")), seed: Some(spec.seed) },
    )
}

/// A fixed-depth dataset as a generator model file, for analyses that only
/// need the ansatz description.
pub fn depth_model_file(n_qubits: usize, depth: usize, seed: u64) -> GeneratorModelFile {
    let spec = DepthDatasetSpec::binned(n_qubits, &[depth], &[], 1, seed);
    let ansatz = AnsatzSpec::new(AnsatzKind::DepthHwe, n_qubits, depth);
    let mut params = vec![0.0; n_qubits * 3];
    params.extend(spec.layer_params(depth));
    GeneratorModelFile {
        format_version: FORMAT_VERSION,
        kind: ModelKind::Depth,
        param_shape: ansatz.param_shape(),
        ansatz,
        params,
        target_ce: None,
        delta: None,
        inputs: None,
        seed,
        metrics: None,
        created: CreationInfo::default(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFormat {
    /// 8-byte header (`u32` qubit count, `u32` state count, little endian)
    /// followed by `f64` `(re, im)` pairs.
    Binary,
    /// Header `re_0,im_0,…`, one state per row.
    Csv,
}

impl StateFormat {
    /// `.csv` selects CSV, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => StateFormat::Csv,
            _ => StateFormat::Binary,
        }
    }
}

pub fn export_states(states: &[StateVector], path: impl AsRef<Path>, format: StateFormat) -> Result<()> {
    let n = states.first().map_or(0, |s| s.n_qubits());
    if let Some(bad) = states.iter().find(|s| s.n_qubits() != n) {
        return Err(Error::QubitCountMismatch { expected: n, actual: bad.n_qubits() });
    }
    let count = u32::try_from(states.len()).map_err(|_| Error::InvalidArgument("too many states".into()))?;
    match format {
        StateFormat::Binary => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(&(n as u32).to_le_bytes())?;
            f.write_all(&count.to_le_bytes())?;
            for s in states {
                for a in s.amplitudes() {
                    f.write_all(&a.re.to_le_bytes())?;
                    f.write_all(&a.im.to_le_bytes())?;
                }
            }
            f.flush()?;
        }
        StateFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            let dim = 1usize << n;
            let header: Vec<String> = (0..dim).flat_map(|i| [format!("re_{i}"), format!("im_{i}")]).collect();
            w.write_record(&header)?;
            for s in states {
                w.write_record(s.amplitudes().iter().flat_map(|a| [a.re.to_string(), a.im.to_string()]))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn read_states(path: impl AsRef<Path>, format: StateFormat) -> Result<Vec<StateVector>> {
    match format {
        StateFormat::Binary => {
            let mut bytes = Vec::new();
            BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
            if bytes.len() < 8 {
                return Err(Error::Schema("state file shorter than its header".into()));
            }
            let n = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes")) as usize;
            let count = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
            if n > crate::sim::MAX_QUBITS {
                return Err(Error::TooLarge { n_qubits: n, limit: crate::sim::MAX_QUBITS });
            }
            let dim = 1usize << n;
            let expected = 8 + count * dim * 16;
            if bytes.len() != expected {
                return Err(Error::Schema(format!(
                    "expected {expected} bytes for {count} states of {n} qubits, got {}",
                    bytes.len()
                )));
            }
            let f = |k: usize| f64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().expect("8 bytes"));
            (0..count)
                .map(|s| {
                    let base = s * dim * 2;
                    let amps = (0..dim).map(|i| Complex64::new(f(base + 2 * i), f(base + 2 * i + 1))).collect();
                    StateVector::from_amplitudes(amps)
                })
                .collect()
        }
        StateFormat::Csv => {
            let mut r = csv::Reader::from_path(path)?;
            let width = r.headers()?.len();
            if width < 4 || width % 2 != 0 || !(width / 2).is_power_of_two() {
                return Err(Error::Schema(format!("CSV header has {width} columns, not 2·2^n")));
            }
            r.records()
                .map(|rec| {
                    let rec = rec?;
                    let vals: Vec<f64> = rec
                        .iter()
                        .map(|v| v.parse::<f64>().map_err(|e| Error::Schema(format!("bad amplitude {v:?}: {e}"))))
                        .collect::<Result<_>>()?;
                    StateVector::from_amplitudes(vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
                })
                .collect()
        }
    }
}

pub fn save_labeled_set(set: &LabeledStateSet, path: impl AsRef<Path>) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut f, set)?;
    f.flush()?;
    Ok(())
}

pub fn load_labeled_set(path: impl AsRef<Path>) -> Result<LabeledStateSet> {
    let set: LabeledStateSet = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if let Some(bad) = set.items.iter().find(|s| s.label > 1) {
        return Err(Error::Schema(format!("label {} is not binary", bad.label)));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::halfchain_purity_average;
    use crate::training::{train_generator, GenTrainConfig};

    fn tiny_trained() -> TrainedGenerator {
        let mut cfg =
            GenTrainConfig::new(AnsatzSpec::new(AnsatzKind::Hwe, 3, 1), 0.2, InputDistribution::HaarProduct, 4, 9);
        cfg.epochs = 2;
        cfg.restarts = 2;
        train_generator(&cfg).unwrap()
    }

    #[test]
    fn model_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let model = GeneratorModelFile::from_trained(&tiny_trained(), None);
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains(&format!("{:.16e}", model.params[0])));
    }

    #[test]
    fn loaded_model_regenerates_bitwise() {
        let model = GeneratorModelFile::from_trained(&tiny_trained(), None);
        let back = GeneratorModelFile::from_json(&model.to_json().unwrap()).unwrap();
        let a = generate_ntangled(&model.generator().unwrap(), &mut dataset_sampler(&model, 4).unwrap(), 3).unwrap();
        let b = generate_ntangled(&back.generator().unwrap(), &mut dataset_sampler(&back, 4).unwrap(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn schema_errors() {
        let model = GeneratorModelFile::from_trained(&tiny_trained(), None);
        let json = model.to_json().unwrap();
        assert!(matches!(GeneratorModelFile::from_json(&json.replace("\"hwe\"", "\"mps\"")), Err(Error::Schema(_))));
        let mut v = model.clone();
        v.format_version = 2;
        assert!(matches!(GeneratorModelFile::from_json(&v.to_json().unwrap()), Err(Error::Schema(_))));
        let mut v = model;
        v.params.pop();
        assert!(GeneratorModelFile::from_json(&v.to_json().unwrap()).is_err());
        assert!(GeneratorModelFile::from_json("{not json").is_err());
    }

    #[test]
    fn ntangled_generation_counts() {
        let g = Generator::new(AnsatzSpec::new(AnsatzKind::DepthHwe, 3, 0), vec![0.0; 9]).unwrap();
        let mut s = InputDistribution::HaarProduct.sampler(3, stream(1, Stream::Dataset, 0)).unwrap();
        assert!(generate_ntangled(&g, &mut s, 0).unwrap().is_empty());
        let out = generate_ntangled(&g, &mut s, 20).unwrap();
        assert!(out.iter().all(|(_, ce)| ce.abs() < 1e-12));
    }

    #[test]
    fn depth_dataset_layout() {
        let spec = DepthDatasetSpec::binned(4, &[0, 1], &[6], 5, 21);
        let set = generate_depth_dataset(&spec).unwrap();
        assert_eq!(set.len(), 15);
        assert_eq!(set.class_counts(), [10, 5]);
        for item in set.items.iter().take(5) {
            assert!(concentratable_entanglement(&item.state).unwrap() < 1e-12);
        }
        assert_eq!(generate_depth_dataset(&spec).unwrap(), set);
        // samples in a class share the layer parameters
        let a = spec.sample_params(2, 0);
        let b = spec.sample_params(2, 1);
        assert_eq!(a[12..], b[12..]);
        assert_ne!(a[..12], b[..12]);
        let mut resampled = spec.clone();
        resampled.resample_per_state = true;
        let a = resampled.sample_params(2, 0);
        let b = resampled.sample_params(2, 1);
        assert_ne!(a[12..], b[12..]);
    }

    #[test]
    fn depth_model_file_is_valid() {
        let m = depth_model_file(4, 3, 2);
        m.validate().unwrap();
        let spec = DepthDatasetSpec::binned(4, &[3], &[], 2, 2);
        assert_eq!(m.params[12..], spec.layer_params(3)[..]);
        let set = generate_depth_dataset(&spec).unwrap();
        let states: Vec<_> = set.items.into_iter().map(|s| s.state).collect();
        assert!(halfchain_purity_average(&states).unwrap() <= 1.0);
    }

    #[test]
    fn binary_export_size_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        let s = StateVector::from_amplitudes_normalized(vec![
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.3, 0.0),
            Complex64::new(0.0, 0.7),
            Complex64::new(1.0 / 3.0, -0.05),
        ])
        .unwrap();
        export_states(std::slice::from_ref(&s), &path, StateFormat::Binary).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 72);
        assert_eq!(read_states(&path, StateFormat::Binary).unwrap(), vec![s]);
    }

    #[test]
    fn csv_export_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let mut sampler = InputDistribution::HaarProduct.sampler(2, stream(3, Stream::Dataset, 0)).unwrap();
        let states = sampler.take(5).unwrap();
        export_states(&states, &path, StateFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("re_0,im_0,re_1"));
        assert_eq!(read_states(&path, StateFormat::Csv).unwrap(), states);
    }

    #[test]
    fn labeled_set_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.json");
        let set = generate_depth_dataset(&DepthDatasetSpec::binned(3, &[1], &[2], 3, 0)).unwrap();
        save_labeled_set(&set, &path).unwrap();
        assert_eq!(load_labeled_set(&path).unwrap(), set);
    }
}
