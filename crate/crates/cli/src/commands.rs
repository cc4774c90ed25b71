use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use ntangled_core::analysis::{
    ce_range, ce_values, distance_averaged_concurrence, halfchain_purity_average, single_qubit_purity_samples,
    write_concurrence_csv, write_purity_csv, Histogram,
};
use ntangled_core::classifier::{train_classifier as fit_classifier, CopyLayout, StateRecipe, TrainedClassifier};
use ntangled_core::datasets::{
    dataset_sampler, export_states, generate_depth_dataset, generate_ntangled, load_labeled_set, load_model,
    read_states, save_labeled_set, save_model, StateFormat,
};
use ntangled_core::entanglement::haar_average_subsystem_purity;
use ntangled_core::training::{
    evaluate_generator, test_sampler, train_generator as fit_generator, GradientMethod, SuccessReport,
};
use ntangled_core::{
    concentratable_entanglement, n_tangle, AnsatzKind, AnsatzSpec, ClassifierConfig, DepthDatasetSpec, GenTrainConfig,
    GeneratorModelFile, InputDistribution, LabeledState, LabeledStateSet, StateVector,
};
use serde::Serialize;

use crate::output::OutDir;
use crate::{
    AnalyzeArgs, Command, DepthDatasetArgs, EvalGeneratorArgs, Format, GenAnsatz, GenDatasetArgs, Gradient, Inputs,
    Layout, MeasureArgs, ReplayArgs, TrainClassifierArgs, TrainGeneratorArgs, Usage,
};

fn usage(msg: impl std::fmt::Display) -> anyhow::Error {
    Usage(msg.to_string()).into()
}

fn note(verbose: bool, msg: impl std::fmt::Display) {
    if verbose {
        eprintln!("{msg}");
    }
}

pub fn run(command: Command, verbose: bool) -> Result<()> {
    match command {
        Command::TrainGenerator(a) => train_generator(a, verbose),
        Command::EvalGenerator(a) => eval_generator(a, verbose),
        Command::GenDataset(a) => gen_dataset(a, verbose),
        Command::DepthDataset(a) => depth_dataset(a, verbose),
        Command::TrainClassifier(a) => train_classifier(a, verbose),
        Command::Analyze(a) => analyze(a, verbose),
        Command::Measure(a) => measure(a),
        Command::Replay(a) => replay(a, verbose),
    }
}

/// Creates the output directory and records the resolved command in it.
fn start(out: &Path, command: &Command) -> Result<OutDir> {
    let mut dir = OutDir::create(out)?;
    dir.write_json("config.json", command)?;
    Ok(dir)
}

fn distribution(inputs: Inputs) -> InputDistribution {
    match inputs {
        Inputs::Basis => InputDistribution::basis(),
        Inputs::Product => InputDistribution::HaarProduct,
    }
}

fn gradient_method(g: Gradient, step: f64) -> GradientMethod {
    match g {
        Gradient::Fd => GradientMethod::FiniteDifference { step },
        Gradient::Adjoint => GradientMethod::Adjoint,
    }
}

fn format_of(f: Format) -> (StateFormat, &'static str) {
    match f {
        Format::Binary => (StateFormat::Binary, "bin"),
        Format::Csv => (StateFormat::Csv, "csv"),
    }
}

#[derive(Serialize)]
struct GeneratorReport<'a> {
    final_loss: f64,
    restart_index: usize,
    restart_losses: &'a [f64],
    loss_history: &'a [f64],
    test_inputs: &'static str,
    test: &'a SuccessReport,
}

fn train_generator(mut a: TrainGeneratorArgs, verbose: bool) -> Result<()> {
    let n = a.qubits;
    let train_size = *a.train_size.get_or_insert(match a.inputs {
        Inputs::Basis => n + 1,
        Inputs::Product => 10,
    });
    let kind = match a.ansatz {
        GenAnsatz::Hwe => AnsatzKind::Hwe,
        GenAnsatz::Sea => AnsatzKind::Sea,
        GenAnsatz::Conv => AnsatzKind::Conv,
    };
    if a.independent_second_round && kind != AnsatzKind::Hwe {
        return Err(usage("--independent-second-round only applies to hwe"));
    }
    if a.layers == 0 {
        return Err(usage("--layers must be at least 1"));
    }
    if a.test_count == 0 {
        return Err(usage("--test-count must be at least 1"));
    }
    if !(a.lr > 0.0) {
        return Err(usage("--lr must be positive"));
    }
    let mut spec = AnsatzSpec::new(kind, n, a.layers);
    spec.independent_second_round = a.independent_second_round;
    let mut cfg = GenTrainConfig::new(spec, a.target_ce, distribution(a.inputs), train_size, a.seed);
    cfg.delta = a.delta;
    cfg.c1 = a.c1;
    cfg.c2 = a.c2;
    cfg.epochs = a.epochs;
    cfg.restarts = a.restarts;
    cfg.gradient = gradient_method(a.gradient, cfg.fd_step);
    cfg.adam.lr = a.lr;
    cfg.validate().map_err(usage)?;
    if matches!(a.inputs, Inputs::Basis) && train_size > 1 << n {
        return Err(usage(format!("--train-size {train_size} exceeds the {} basis states", 1usize << n)));
    }

    let mut out = start(&a.out, &Command::TrainGenerator(a.clone()))?;
    note(verbose, format!("training {} restarts x {} epochs", cfg.restarts, cfg.epochs));
    let trained = fit_generator(&cfg)?;
    note(verbose, format!("best restart {} with loss {:.6}", trained.restart_index, trained.final_loss));
    let mut sampler = test_sampler(&InputDistribution::HaarProduct, n, a.seed)?;
    let report = evaluate_generator(&trained.generator, cfg.target_ce, &mut sampler, a.test_count, cfg.delta)?;
    note(verbose, format!("success rate {:.3} on {} product states", report.success_rate, report.count));

    save_model(&GeneratorModelFile::from_trained(&trained, Some(&report)), out.file("model.json"))?;
    out.write_json(
        "report.json",
        &GeneratorReport {
            final_loss: trained.final_loss,
            restart_index: trained.restart_index,
            restart_losses: &trained.restart_losses,
            loss_history: &trained.loss_history,
            test_inputs: "product",
            test: &report,
        },
    )?;
    out.finish("train-generator")
}

fn load_generator_model(path: &Path) -> Result<GeneratorModelFile> {
    load_model(path).with_context(|| format!("loading model {}", path.display()))
}

fn eval_generator(a: EvalGeneratorArgs, verbose: bool) -> Result<()> {
    if a.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let model = load_generator_model(&a.model)?;
    let target = a.target_ce.or(model.target_ce).ok_or_else(|| usage("model has no target CE; pass --target-ce"))?;
    let delta = a.delta.or(model.delta).unwrap_or(0.1);
    if !(delta > 0.0) {
        return Err(usage("--delta must be positive"));
    }
    let generator = model.generator()?;
    let mut out = start(&a.out, &Command::EvalGenerator(a.clone()))?;
    let mut sampler = test_sampler(&distribution(a.inputs), generator.n_qubits(), a.seed)?;
    let report = evaluate_generator(&generator, target, &mut sampler, a.count, delta)?;
    note(verbose, format!("success rate {:.3}, CE {:.4} ± {:.4}", report.success_rate, report.ce_mean, report.ce_std));
    out.write_json("report.json", &report)?;
    out.finish("eval-generator")
}

#[derive(Serialize)]
struct DatasetSummary {
    model: String,
    count: usize,
    ce_mean: f64,
    ce_std: f64,
    success_rate: Option<f64>,
}

fn gen_dataset(a: GenDatasetArgs, verbose: bool) -> Result<()> {
    if a.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let model = load_generator_model(&a.model)?;
    let generator = model.generator()?;
    let mut out = start(&a.out, &Command::GenDataset(a.clone()))?;
    let mut sampler = dataset_sampler(&model, a.seed)?;
    let pairs = generate_ntangled(&generator, &mut sampler, a.count)?;
    let (states, ces): (Vec<StateVector>, Vec<f64>) = pairs.into_iter().unzip();

    let (format, ext) = format_of(a.format);
    export_states(&states, out.file(&format!("states.{ext}")), format)?;
    let mut ce_csv = String::from("index,ce\n");
    for (i, ce) in ces.iter().enumerate() {
        writeln!(ce_csv, "{i},{ce}")?;
    }
    out.write_text("ce.csv", &ce_csv)?;

    let stats = SuccessReport::from_ces(ces, model.target_ce.unwrap_or(f64::NAN), model.delta.unwrap_or(0.1));
    let id = model.model_id();
    out.write_json(
        "summary.json",
        &DatasetSummary {
            model: id.clone(),
            count: stats.count,
            ce_mean: stats.ce_mean,
            ce_std: stats.ce_std,
            success_rate: model.target_ce.map(|_| stats.success_rate),
        },
    )?;
    note(verbose, format!("{} states, CE {:.4} ± {:.4}", stats.count, stats.ce_mean, stats.ce_std));

    if let Some(label) = a.label {
        let items = states
            .into_iter()
            .enumerate()
            .map(|(index, state)| LabeledState {
                state,
                label,
                recipe: StateRecipe::Ntangled { model: id.clone(), index },
            })
            .collect();
        let set =
            LabeledStateSet::new(items, ntangled_core::classifier::Provenance { source: id, seed: Some(a.seed) })?;
        save_labeled_set(&set, out.file("dataset.json"))?;
    }
    out.finish("gen-dataset")
}

fn depth_dataset(a: DepthDatasetArgs, verbose: bool) -> Result<()> {
    if let Some(d) = a.zeros.iter().find(|d| a.ones.contains(d)) {
        return Err(usage(format!("depth {d} is listed under both labels")));
    }
    let mut depths: Vec<usize> = a.zeros.iter().chain(&a.ones).copied().collect();
    depths.sort_unstable();
    if depths.windows(2).any(|w| w[0] == w[1]) {
        return Err(usage("each depth may appear once"));
    }
    let mut spec = DepthDatasetSpec::binned(a.qubits, &a.zeros, &a.ones, a.count, a.seed);
    spec.resample_per_state = a.resample;
    spec.validate().map_err(usage)?;

    let mut out = start(&a.out, &Command::DepthDataset(a.clone()))?;
    note(verbose, format!("building {} states", a.count * spec.classes.len()));
    let set = generate_depth_dataset(&spec)?;
    save_labeled_set(&set, out.file("dataset.json"))?;
    let (format, ext) = format_of(a.format);
    for class in &spec.classes {
        let states: Vec<StateVector> = set
            .items
            .iter()
            .filter(|s| matches!(s.recipe, StateRecipe::Depth { depth, .. } if depth == class.depth))
            .map(|s| s.state.clone())
            .collect();
        export_states(&states, out.file(&format!("depth_{}.{ext}", class.depth)), format)?;
    }
    out.finish("depth-dataset")
}

fn load_sets(paths: &[std::path::PathBuf]) -> Result<Option<LabeledStateSet>> {
    let mut merged: Option<LabeledStateSet> = None;
    for p in paths {
        let set = load_labeled_set(p).with_context(|| format!("loading labeled set {}", p.display()))?;
        merged = Some(match merged {
            Some(m) => m.merge(set),
            None => set,
        });
    }
    Ok(merged)
}

#[derive(Serialize)]
struct ClassifierReport<'a> {
    train_size: usize,
    test_size: usize,
    train_accuracy: f64,
    test_accuracy: Option<f64>,
    restart_index: usize,
    restart_train_accuracies: &'a [f64],
}

fn history_csv(trained: &TrainedClassifier) -> Result<String> {
    let mut s = String::from("epoch,loss,train_accuracy,test_accuracy\n");
    for r in &trained.history {
        let test = r.test_accuracy.map(|t| t.to_string()).unwrap_or_default();
        writeln!(s, "{},{},{},{}", r.epoch, r.loss, r.train_accuracy, test)?;
    }
    Ok(s)
}

fn train_classifier(a: TrainClassifierArgs, verbose: bool) -> Result<()> {
    let data = load_sets(&a.data)?.filter(|s| !s.is_empty()).ok_or_else(|| usage("--data holds no states"))?;
    let (train, test) = match load_sets(&a.test)? {
        Some(test) => (data, test),
        None => {
            if !(a.train_fraction > 0.0 && a.train_fraction <= 1.0) {
                return Err(usage("--train-fraction must be in (0, 1]"));
            }
            data.split_stratified(a.train_fraction, a.seed)?
        }
    };
    let n = train.n_qubits().ok_or_else(|| usage("training split is empty"))?;
    if let Some(bad) = train.items.iter().chain(&test.items).find(|s| s.state.n_qubits() != n) {
        return Err(usage(format!("mixed qubit counts: {n} and {}", bad.state.n_qubits())));
    }
    let counts = train.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(usage(format!("training data needs both labels, got {} zeros and {} ones", counts[0], counts[1])));
    }
    if !(a.lr > 0.0) {
        return Err(usage("--lr must be positive"));
    }
    let mut cfg = ClassifierConfig::new(n, a.copies, a.epochs, a.restarts, a.seed);
    cfg.measured = a.measured;
    cfg.lambda = a.lambda;
    cfg.layout = match a.layout {
        Layout::Interleaved => CopyLayout::Interleaved,
        Layout::Blocked => CopyLayout::Blocked,
    };
    cfg.adam.lr = a.lr;
    cfg.gradient = gradient_method(a.gradient, cfg.fd_step);
    cfg.validate().map_err(usage)?;

    let mut out = start(&a.out, &Command::TrainClassifier(a.clone()))?;
    note(verbose, format!("{} train / {} test states on {} wires", train.len(), test.len(), cfg.width()));
    let test_opt = (!test.is_empty()).then_some(&test);
    let trained = fit_classifier(&cfg, &train, test_opt)?;
    note(verbose, format!("train accuracy {:.3}, test accuracy {:?}", trained.train_accuracy, trained.test_accuracy));
    out.write_json("classifier.json", &trained)?;
    out.write_text("history.csv", &history_csv(&trained)?)?;
    out.write_json(
        "report.json",
        &ClassifierReport {
            train_size: train.len(),
            test_size: test.len(),
            train_accuracy: trained.train_accuracy,
            test_accuracy: trained.test_accuracy,
            restart_index: trained.restart_index,
            restart_train_accuracies: &trained.restart_train_accuracies,
        },
    )?;
    out.finish("train-classifier")
}

/// States of a labeled set (`.json`) or a state file, with their depth when
/// the recipe records one.
fn load_states(path: &Path) -> Result<Vec<(StateVector, Option<usize>)>> {
    let is_json = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let set = load_labeled_set(path).with_context(|| format!("loading labeled set {}", path.display()))?;
        Ok(set
            .items
            .into_iter()
            .map(|s| {
                let depth = match s.recipe {
                    StateRecipe::Depth { depth, .. } => Some(depth),
                    _ => None,
                };
                (s.state, depth)
            })
            .collect())
    } else {
        let states = read_states(path, StateFormat::from_path(path))
            .with_context(|| format!("reading states {}", path.display()))?;
        Ok(states.into_iter().map(|s| (s, None)).collect())
    }
}

#[derive(Serialize)]
struct GroupSummary {
    depth: Option<usize>,
    count: usize,
    halfchain_purity: Option<f64>,
}

#[derive(Serialize)]
struct AnalysisSummary {
    count: usize,
    n_qubits: usize,
    ce_mean: f64,
    ce_std: f64,
    halfchain_purity: Option<f64>,
    haar_halfchain_purity: Option<f64>,
    groups: Vec<GroupSummary>,
}

fn analyze(a: AnalyzeArgs, verbose: bool) -> Result<()> {
    if a.bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    let mut loaded = Vec::new();
    for p in &a.input {
        loaded.extend(load_states(p)?);
    }
    let n = loaded.first().map(|(s, _)| s.n_qubits()).ok_or_else(|| usage("no states to analyze"))?;
    if let Some((bad, _)) = loaded.iter().find(|(s, _)| s.n_qubits() != n) {
        return Err(usage(format!("mixed qubit counts: {n} and {}", bad.n_qubits())));
    }
    let mut groups: BTreeMap<Option<usize>, Vec<StateVector>> = BTreeMap::new();
    for (s, depth) in &loaded {
        groups.entry(*depth).or_default().push(s.clone());
    }
    let states: Vec<StateVector> = loaded.into_iter().map(|(s, _)| s).collect();

    let mut out = start(&a.out, &Command::Analyze(a.clone()))?;
    note(verbose, format!("analyzing {} states of {n} qubits", states.len()));
    let ces = ce_values(&states)?;
    Histogram::from_values(&ces, a.bins, ce_range(n))?.write_csv(out.file("ce_histogram.csv"))?;
    write_purity_csv(&single_qubit_purity_samples(&states)?, out.file("purity.csv"))?;
    if n >= 2 {
        let rows = groups
            .iter()
            .map(|(depth, g)| Ok((depth.unwrap_or(0), distance_averaged_concurrence(g)?)))
            .collect::<Result<Vec<_>>>()?;
        write_concurrence_csv(&rows, out.file("concurrence.csv"))?;
    }
    let even = n % 2 == 0;
    let half = |g: &[StateVector]| even.then(|| halfchain_purity_average(g)).transpose();
    let stats = SuccessReport::from_ces(ces, f64::NAN, 0.0);
    let summary = AnalysisSummary {
        count: states.len(),
        n_qubits: n,
        ce_mean: stats.ce_mean,
        ce_std: stats.ce_std,
        halfchain_purity: half(&states)?,
        haar_halfchain_purity: even.then(|| haar_average_subsystem_purity(1 << (n / 2), 1 << (n / 2))),
        groups: groups
            .iter()
            .map(|(depth, g)| Ok(GroupSummary { depth: *depth, count: g.len(), halfchain_purity: half(g)? }))
            .collect::<Result<_>>()?,
    };
    out.write_json("summary.json", &summary)?;
    out.finish("analyze")
}

#[derive(Serialize)]
struct Measurement {
    index: usize,
    n_qubits: usize,
    ce: f64,
    ntangle: Option<f64>,
    concurrence: Option<f64>,
    halfpurity: Option<f64>,
}

fn measure_state(index: usize, s: &StateVector) -> Result<Measurement> {
    let n = s.n_qubits();
    let even = n.is_multiple_of(2);
    let concurrence =
        if n >= 2 { distance_averaged_concurrence(std::slice::from_ref(s))?.get(&1).map(|d| d.mean) } else { None };
    Ok(Measurement {
        index,
        n_qubits: n,
        ce: concentratable_entanglement(s)?,
        ntangle: even.then(|| n_tangle(s)).transpose()?,
        concurrence,
        halfpurity: even.then(|| halfchain_purity_average(std::slice::from_ref(s))).transpose()?,
    })
}

fn measure(a: MeasureArgs) -> Result<()> {
    let states: Vec<StateVector> = load_states(&a.state)?.into_iter().map(|(s, _)| s).collect();
    let selected: Vec<(usize, &StateVector)> = match a.index {
        Some(i) => {
            let s = states
                .get(i)
                .ok_or_else(|| usage(format!("--index {i} but the file holds {} states", states.len())))?;
            vec![(i, s)]
        }
        None => states.iter().enumerate().collect(),
    };
    let records = selected.into_iter().map(|(i, s)| measure_state(i, s)).collect::<Result<Vec<_>>>()?;
    let mut text = String::new();
    for r in &records {
        writeln!(text, "{}", serde_json::to_string(r)?)?;
    }
    print!("{text}");
    if let Some(dir) = &a.out {
        let mut out = start(dir, &Command::Measure(a.clone()))?;
        out.write_json("measure.json", &records)?;
        out.finish("measure")?;
    }
    Ok(())
}

fn replay(a: ReplayArgs, verbose: bool) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut command: Command =
        serde_json::from_str(&text).map_err(|e| usage(format!("{} is not a run config: {e}", a.config.display())))?;
    if let Some(out) = a.out {
        match &mut command {
            Command::TrainGenerator(c) => c.out = out,
            Command::EvalGenerator(c) => c.out = out,
            Command::GenDataset(c) => c.out = out,
            Command::DepthDataset(c) => c.out = out,
            Command::TrainClassifier(c) => c.out = out,
            Command::Analyze(c) => c.out = out,
            Command::Measure(c) => c.out = Some(out),
            Command::Replay(_) => {}
        }
    }
    if let Command::Replay(_) = command {
        return Err(usage("a replay config cannot point at another replay"));
    }
    note(verbose, format!("replaying {}", command.name()));
    run(command, verbose)
}
