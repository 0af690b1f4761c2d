//! `gen-data`, `train`, `test` and `bench`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tilr_core::{format_formula, RefinementConfig, TraceMode};
use tilr_learn::bench::{run_benchmark, write_csv, BenchOptions};
use tilr_learn::config::read_kv_file;
use tilr_learn::data::{
    attach_images, load_dataset, sample_symbolic_dataset, write_dataset, DatasetRecord, MnistStore,
    Protocol, SamplingPlan, Split,
};
use tilr_learn::{
    evaluate_grounding, evaluate_sequence, load_checkpoint, save_checkpoint, KnowledgeGraphs,
    Metrics, Task, TrainConfig,
};

use crate::input::{alphabet_arg, formula_or_pattern};
use crate::{BenchArgs, GenDataArgs, TestArgs, TrainArgs, TrainOverrides};

pub fn gen_data(args: &GenDataArgs) -> Result<()> {
    let alphabet = alphabet_arg(&args.atoms)?;
    let (name, formula) = args.formula.resolve(&alphabet, &[])?;
    let protocol = args.protocol.unwrap_or(match args.mode {
        TraceMode::Me => Protocol::Stratified,
        TraceMode::Nme => Protocol::ShortExhaustiveSplit,
    });
    let mut plan = match protocol {
        Protocol::Exhaustive => SamplingPlan::exhaustive(alphabet.len(), args.mode, args.seed),
        _ => SamplingPlan::benchmark(alphabet.len(), args.max_len, args.mode, args.seed),
    };
    plan.protocol = protocol;
    plan.max_len = args.max_len;
    plan.total = args.total;
    if let Some(min) = args.min_len {
        plan.min_len = min;
    }
    let symbolic = sample_symbolic_dataset(&formula, &alphabet, &plan)?;
    for w in &symbolic.warnings {
        warn!("{w}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for (split, traces) in [
        (Split::Train, &symbolic.train),
        (Split::Test, &symbolic.test),
    ] {
        let store = MnistStore::load(&args.mnist_dir, split)?;
        let records = attach_images(
            traces,
            &formula,
            &alphabet,
            args.mode,
            &store,
            args.copies,
            &mut rng,
        )?;
        let path = args.out.join(format!("{split}.jsonl"));
        let n = write_dataset(&path, &records)?;
        let accepted = records.iter().filter(|r| r.label.accepted()).count();
        println!(
            "{split}: {} symbolic traces, {n} image sequences ({accepted} accepted) -> {}",
            traces.len(),
            path.display()
        );
    }
    if symbolic.with_replacement {
        println!("note: too few distinct traces; some were sampled with replacement");
    }
    info!("formula {name}: {}", format_formula(&formula));
    Ok(())
}

/// Config file settings first, then command-line flags. Returns whether
/// the mode was set explicitly.
fn apply_settings(cfg: &mut TrainConfig, s: &TrainOverrides) -> Result<bool> {
    let mut mode_set = false;
    if let Some(path) = &s.config {
        for (key, value) in read_kv_file(path)? {
            if !cfg.set(&key, &value)? {
                let msg = format!("{}: unknown setting `{key}`", path.display());
                return Err(tilr_learn::Error::Config(msg).into());
            }
            mode_set |= key == "mode";
        }
    }
    if let Some(v) = &s.formula {
        cfg.formula = v.clone();
    }
    if let Some(v) = s.mode {
        cfg.mode = v;
        mode_set = true;
    }
    if let Some(v) = s.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = s.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = s.lr {
        cfg.lr = v;
    }
    if let Some(v) = s.seed {
        cfg.seed = v;
    }
    if let Some(v) = s.timeout_minutes {
        cfg.timeout_minutes = v;
    }
    if let Some(v) = s.implication {
        cfg.implication = v;
    }
    if let Some(v) = s.target {
        cfg.refinement.target = v;
    }
    if let Some(v) = s.max_iters {
        cfg.refinement.max_iterations = v;
    }
    if let Some(v) = s.eps {
        cfg.refinement.tolerance = v;
    }
    if let Some(v) = &s.mnist_dir {
        cfg.mnist_dir = Some(v.clone());
    }
    cfg.validate()?;
    Ok(mode_set)
}

fn required<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    value.as_deref().ok_or_else(|| {
        tilr_learn::Error::Config(format!("no {what} given (flag or config file)")).into()
    })
}

fn load_split(path: &Path, store: &MnistStore) -> Result<Vec<DatasetRecord>> {
    let records =
        load_dataset(path, Some(store)).with_context(|| format!("loading {}", path.display()))?;
    if records.is_empty() {
        bail!("{} holds no records", path.display());
    }
    Ok(records)
}

#[derive(Serialize)]
struct MetricsRow {
    epoch: String,
    loss: Option<f64>,
    sequence_accuracy: Option<f64>,
    grounding_accuracy: Option<f64>,
    grounding_exact: Option<f64>,
    minutes: f64,
    timed_out: bool,
}

fn metrics_rows(m: &Metrics) -> Vec<MetricsRow> {
    let mut rows: Vec<MetricsRow> = m
        .epochs
        .iter()
        .map(|e| MetricsRow {
            epoch: e.epoch.to_string(),
            loss: Some(e.loss),
            sequence_accuracy: e.sequence_accuracy,
            grounding_accuracy: e.grounding.map(|g| g.accuracy),
            grounding_exact: e.grounding.map(|g| g.exact),
            minutes: e.minutes,
            timed_out: false,
        })
        .collect();
    rows.push(MetricsRow {
        epoch: "final".into(),
        loss: m.epochs.last().map(|e| e.loss),
        sequence_accuracy: Some(m.sequence_accuracy),
        grounding_accuracy: Some(m.grounding.accuracy),
        grounding_exact: Some(m.grounding.exact),
        minutes: m.minutes,
        timed_out: m.timed_out,
    });
    rows
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let mut cfg = TrainConfig::default();
    let mode_set = apply_settings(&mut cfg, &args.settings)?;
    if let Some(p) = &args.train {
        cfg.train_path = Some(p.clone());
    }
    if let Some(p) = &args.test {
        cfg.test_path = Some(p.clone());
    }
    if let Some(v) = args.eval_each_epoch {
        cfg.eval_each_epoch = v;
    }
    let mnist = required(&cfg.mnist_dir, "MNIST directory")?;
    let train_store = MnistStore::load(mnist, Split::Train)?;
    let test_store = MnistStore::load(mnist, Split::Test)?;
    let train_records = load_split(required(&cfg.train_path, "training set")?, &train_store)?;
    let test_records = load_split(required(&cfg.test_path, "test set")?, &test_store)?;
    let task = Task::from_records(&train_records)?;
    let test_task = Task::from_records(&test_records)?;
    if test_task.alphabet != task.alphabet
        || test_task.mode != task.mode
        || test_task.formula != task.formula
    {
        bail!("training and test sets have different formulas, alphabets or modes");
    }
    if !cfg.formula.is_empty() && formula_or_pattern(&cfg.formula, &task.alphabet)? != task.formula
    {
        bail!(
            "the data is labelled with `{}`, not `{}`",
            format_formula(&task.formula),
            cfg.formula
        );
    }
    if !mode_set {
        cfg.mode = task.mode;
    }
    info!(
        "{} training / {} test sequences, formula {}, mode {}",
        train_records.len(),
        test_records.len(),
        format_formula(&task.formula),
        task.mode
    );
    let train_set = task.samples(&train_records)?;
    let test_set = task.samples(&test_records)?;
    let outcome = tilr_learn::train(
        &cfg,
        &task,
        &train_set,
        &train_store,
        &test_set,
        &test_store,
    )?;
    save_checkpoint(&args.checkpoint, &outcome.model, task.alphabet.atoms())?;
    write_csv(&args.metrics, &metrics_rows(&outcome.metrics))?;
    let m = &outcome.metrics;
    println!(
        "epochs {}, grounding {:.2}% (exact {:.2}%), sequence {:.2}%, {:.2} min{}",
        m.epochs.len(),
        m.grounding.accuracy,
        m.grounding.exact,
        m.sequence_accuracy,
        m.minutes,
        if m.timed_out { ", timed out" } else { "" }
    );
    println!(
        "checkpoint -> {}, metrics -> {}",
        args.checkpoint.display(),
        args.metrics.display()
    );
    Ok(())
}

pub fn test(args: &TestArgs) -> Result<()> {
    let checkpoint = load_checkpoint(&args.checkpoint)?;
    let records = load_dataset(&args.data, None)
        .with_context(|| format!("loading {}", args.data.display()))?;
    let task = Task::from_records(&records)?;
    if task.alphabet.atoms() != checkpoint.atoms.as_slice() {
        bail!(
            "the model predicts atoms [{}] but the data uses [{}]",
            checkpoint.atoms.join(", "),
            task.alphabet.atoms().join(", ")
        );
    }
    let split = records[0].split;
    if records.iter().any(|r| r.split != split) {
        bail!("{} mixes train and test records", args.data.display());
    }
    let store = MnistStore::load(&args.mnist_dir, split)?;
    let records = load_dataset(&args.data, Some(&store))?;
    let samples = task.samples(&records)?;
    let refinement = RefinementConfig {
        target: args.target,
        max_iterations: args.max_iters,
        tolerance: args.eps,
    };
    let graphs = KnowledgeGraphs::new(&task, args.implication);
    let grounding = evaluate_grounding(&checkpoint.model, &samples, &store, task.mode)?;
    let sequence = evaluate_sequence(&checkpoint.model, &samples, &store, &graphs, &refinement)?;
    println!("sequences: {}", samples.len());
    println!("sequence accuracy: {sequence:.2}%");
    println!("grounding accuracy: {:.2}%", grounding.accuracy);
    println!("grounding exact: {:.2}%", grounding.exact);
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let mut cfg = TrainConfig::default();
    apply_settings(&mut cfg, &args.settings)?;
    let mnist = required(&cfg.mnist_dir, "MNIST directory")?;
    let train_store = MnistStore::load(mnist, Split::Train)?;
    let test_store = MnistStore::load(mnist, Split::Test)?;
    let opts = BenchOptions {
        suite: args.suite,
        modes: args.modes.clone(),
        atoms: args.atoms.clone(),
        lengths: args.lengths.clone(),
        formulas: args.formulas.clone(),
        copies: args.copies,
        seed: cfg.seed,
        train: cfg,
        out_dir: args.out.clone(),
    };
    let report = run_benchmark(&opts, &train_store, &test_store)?;
    let failed = report.rows.iter().filter(|r| r.status != "ok").count();
    for s in &report.summary {
        println!(
            "{} {} |P|={} len<={}: {} runs, mean grounding {}, mean minutes {}",
            s.suite,
            s.mode,
            s.atoms,
            s.max_len,
            s.runs,
            s.mean_grounding_accuracy
                .map_or("-".into(), |v| format!("{v:.2}%")),
            s.mean_minutes.map_or("-".into(), |v| format!("{v:.2}")),
        );
    }
    println!(
        "{} runs ({failed} failed) -> {}",
        report.rows.len(),
        args.out.join("results.csv").display()
    );
    Ok(())
}
