//! Benchmark suites.
//!
//! `single` trains on every DECLARE template over two atoms, with all traces
//! of length 1 to 4, once per mode. `conjunction` trains on five sampled
//! conjunction formulas for every combination of 2, 3 or 4 atoms and
//! maximum length 5, 10 or 20, once per mode. Each run writes one row of
//! `results.csv`; `summary.csv` averages the rows of each
//! (suite, mode, atoms, length) cell.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tilr_core::ltlf::{sample_conjunction_patterns, TEMPLATES};
use tilr_core::{declare_pattern, format_formula, Alphabet, Formula, PatternInstance, TraceMode};

use crate::data::{attach_images, sample_symbolic_dataset, MnistStore, SamplingPlan};
use crate::error::{Error, Result};
use crate::train::{train, Task, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    /// One DECLARE template at a time, exhaustive short traces.
    Single,
    /// Conjunctions of templates over larger alphabets and longer traces.
    Conjunction,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Single => "single",
            Suite::Conjunction => "conjunction",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Suite::Single),
            "conjunction" => Ok(Suite::Conjunction),
            _ => Err(Error::Config(format!(
                "unknown suite `{s}` (expected single|conjunction)"
            ))),
        }
    }
}

pub const CONJUNCTION_ATOMS: [usize; 3] = [2, 3, 4];
pub const CONJUNCTION_LENGTHS: [usize; 3] = [5, 10, 20];
pub const FORMULAS_PER_CELL: usize = 5;

/// Selection of runs. Empty filters select everything.
#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub suite: Suite,
    pub modes: Vec<TraceMode>,
    pub atoms: Vec<usize>,
    pub lengths: Vec<usize>,
    /// Formula indices: template positions for `single`, 0..5 for `conjunction`.
    pub formulas: Vec<usize>,
    pub copies: usize,
    pub seed: u64,
    pub train: TrainConfig,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub suite: Suite,
    pub mode: TraceMode,
    pub atoms: usize,
    pub max_len: usize,
    pub formula_id: usize,
    pub name: String,
    pub formula: Formula,
    pub plan: SamplingPlan,
}

fn wanted<T: PartialEq>(filter: &[T], v: &T) -> bool {
    filter.is_empty() || filter.contains(v)
}

/// The runs `opts` selects, in table order.
pub fn bench_runs(opts: &BenchOptions) -> Result<Vec<BenchRun>> {
    let modes = if opts.modes.is_empty() {
        vec![TraceMode::Me, TraceMode::Nme]
    } else {
        opts.modes.clone()
    };
    let mut runs = Vec::new();
    match opts.suite {
        Suite::Single => {
            for &mode in &modes {
                if !wanted(&opts.atoms, &2) || !wanted(&opts.lengths, &4) {
                    continue;
                }
                for (k, (template, arity, _)) in TEMPLATES.iter().enumerate() {
                    if !wanted(&opts.formulas, &k) {
                        continue;
                    }
                    let pattern =
                        PatternInstance::new(*template, ["p0", "p1"][..*arity].iter().copied());
                    runs.push(BenchRun {
                        suite: opts.suite,
                        mode,
                        atoms: 2,
                        max_len: 4,
                        formula_id: k,
                        name: pattern.to_string(),
                        formula: declare_pattern(&pattern)?,
                        plan: SamplingPlan::exhaustive(2, mode, opts.seed),
                    });
                }
            }
        }
        Suite::Conjunction => {
            for &mode in &modes {
                for atoms in CONJUNCTION_ATOMS {
                    for max_len in CONJUNCTION_LENGTHS {
                        if !wanted(&opts.atoms, &atoms) || !wanted(&opts.lengths, &max_len) {
                            continue;
                        }
                        let alphabet = Alphabet::numbered(atoms)?;
                        for k in 0..FORMULAS_PER_CELL {
                            if !wanted(&opts.formulas, &k) {
                                continue;
                            }
                            let seed = opts.seed ^ (1000 * atoms + 100 * max_len + k) as u64;
                            let patterns = sample_conjunction_patterns(&alphabet, seed)?;
                            let formula = Formula::conjunction(
                                patterns
                                    .iter()
                                    .map(declare_pattern)
                                    .collect::<tilr_core::Result<Vec<_>>>()?,
                            );
                            let name = patterns
                                .iter()
                                .map(ToString::to_string)
                                .collect::<Vec<_>>()
                                .join(" & ");
                            runs.push(BenchRun {
                                suite: opts.suite,
                                mode,
                                atoms,
                                max_len,
                                formula_id: k,
                                name,
                                formula,
                                plan: SamplingPlan::benchmark(atoms, max_len, mode, seed),
                            });
                        }
                    }
                }
            }
        }
    }
    if runs.is_empty() {
        return Err(Error::Config(
            "the selection contains no benchmark run".into(),
        ));
    }
    Ok(runs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub suite: String,
    pub mode: String,
    pub atoms: usize,
    pub max_len: usize,
    pub formula_id: usize,
    pub name: String,
    pub formula: String,
    pub train_sequences: usize,
    pub test_sequences: usize,
    pub with_replacement: bool,
    pub epochs: usize,
    pub final_loss: Option<f64>,
    pub sequence_accuracy: Option<f64>,
    pub grounding_accuracy: Option<f64>,
    pub grounding_exact: Option<f64>,
    pub minutes: Option<f64>,
    pub timed_out: bool,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub suite: String,
    pub mode: String,
    pub atoms: usize,
    pub max_len: usize,
    pub runs: usize,
    pub failed: usize,
    pub timed_out: usize,
    pub mean_grounding_accuracy: Option<f64>,
    pub mean_sequence_accuracy: Option<f64>,
    pub mean_minutes: Option<f64>,
}

fn run_one(
    run: &BenchRun,
    opts: &BenchOptions,
    train_store: &MnistStore,
    test_store: &MnistStore,
) -> Result<BenchRow> {
    let alphabet = Alphabet::numbered(run.atoms)?;
    let symbolic = sample_symbolic_dataset(&run.formula, &alphabet, &run.plan)?;
    let mut rng = ChaCha8Rng::seed_from_u64(run.plan.seed);
    let task = Task::new(alphabet.clone(), run.mode, run.formula.clone())?;
    let build = |traces, store, rng: &mut ChaCha8Rng| {
        let records = attach_images(
            traces,
            &run.formula,
            &alphabet,
            run.mode,
            store,
            opts.copies,
            rng,
        )?;
        task.samples(&records)
    };
    let train_set = build(&symbolic.train, train_store, &mut rng)?;
    let test_set = build(&symbolic.test, test_store, &mut rng)?;
    let cfg = TrainConfig {
        formula: format_formula(&run.formula),
        mode: run.mode,
        seed: opts.train.seed ^ run.plan.seed,
        eval_each_epoch: false,
        ..opts.train.clone()
    };
    let outcome = train(&cfg, &task, &train_set, train_store, &test_set, test_store)?;
    let m = &outcome.metrics;
    Ok(BenchRow {
        suite: run.suite.to_string(),
        mode: run.mode.to_string(),
        atoms: run.atoms,
        max_len: run.max_len,
        formula_id: run.formula_id,
        name: run.name.clone(),
        formula: format_formula(&run.formula),
        train_sequences: train_set.len(),
        test_sequences: test_set.len(),
        with_replacement: symbolic.with_replacement,
        epochs: m.epochs.len(),
        final_loss: m.epochs.last().map(|e| e.loss),
        sequence_accuracy: Some(m.sequence_accuracy),
        grounding_accuracy: Some(m.grounding.accuracy),
        grounding_exact: Some(m.grounding.exact),
        minutes: Some(m.minutes),
        timed_out: m.timed_out,
        status: "ok".into(),
    })
}

fn failed_row(run: &BenchRun, error: &Error) -> BenchRow {
    BenchRow {
        suite: run.suite.to_string(),
        mode: run.mode.to_string(),
        atoms: run.atoms,
        max_len: run.max_len,
        formula_id: run.formula_id,
        name: run.name.clone(),
        formula: format_formula(&run.formula),
        train_sequences: 0,
        test_sequences: 0,
        with_replacement: false,
        epochs: 0,
        final_loss: None,
        sequence_accuracy: None,
        grounding_accuracy: None,
        grounding_exact: None,
        minutes: None,
        timed_out: false,
        status: format!("error: {error}"),
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(String, String, usize, usize), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        cells
            .entry((r.suite.clone(), r.mode.clone(), r.atoms, r.max_len))
            .or_default()
            .push(r);
    }
    cells
        .into_iter()
        .map(|((suite, mode, atoms, max_len), rs)| SummaryRow {
            suite,
            mode,
            atoms,
            max_len,
            runs: rs.len(),
            failed: rs.iter().filter(|r| r.status != "ok").count(),
            timed_out: rs.iter().filter(|r| r.timed_out).count(),
            mean_grounding_accuracy: mean(rs.iter().map(|r| r.grounding_accuracy)),
            mean_sequence_accuracy: mean(rs.iter().map(|r| r.sequence_accuracy)),
            mean_minutes: mean(rs.iter().map(|r| r.minutes)),
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<SummaryRow>,
}

/// Run every selected configuration; a failing run is recorded and the
/// suite continues. Results are rewritten after each run.
pub fn run_benchmark(
    opts: &BenchOptions,
    train_store: &MnistStore,
    test_store: &MnistStore,
) -> Result<BenchReport> {
    let runs = bench_runs(opts)?;
    fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(&opts.out_dir, e))?;
    let results = opts.out_dir.join("results.csv");
    let summary_path = opts.out_dir.join("summary.csv");
    let mut rows = Vec::new();
    for (k, run) in runs.iter().enumerate() {
        info!(
            "run {}/{}: {} {} |P|={} len<={} {}",
            k + 1,
            runs.len(),
            run.suite,
            run.mode,
            run.atoms,
            run.max_len,
            run.name
        );
        let row = run_one(run, opts, train_store, test_store).unwrap_or_else(|e| {
            warn!("run {} failed: {e}", k + 1);
            failed_row(run, &e)
        });
        rows.push(row);
        write_csv(&results, &rows)?;
        write_csv(&summary_path, &summarize(&rows))?;
    }
    let summary = summarize(&rows);
    Ok(BenchReport { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(suite: Suite) -> BenchOptions {
        BenchOptions {
            suite,
            modes: vec![],
            atoms: vec![],
            lengths: vec![],
            formulas: vec![],
            copies: 5,
            seed: 0,
            train: TrainConfig::default(),
            out_dir: PathBuf::from("unused"),
        }
    }

    #[test]
    fn suite_shapes() {
        let single = bench_runs(&opts(Suite::Single)).unwrap();
        assert_eq!(single.len(), 40);
        let conj = bench_runs(&opts(Suite::Conjunction)).unwrap();
        assert_eq!(conj.len(), 90);
        assert_eq!(conj.iter().filter(|r| r.mode == TraceMode::Me).count(), 45);
    }

    #[test]
    fn filters_and_empty_selection() {
        let mut o = opts(Suite::Conjunction);
        o.atoms = vec![3];
        o.lengths = vec![10];
        o.modes = vec![TraceMode::Me];
        assert_eq!(bench_runs(&o).unwrap().len(), 5);
        o.lengths = vec![7];
        assert!(bench_runs(&o).is_err());
        let mut o = opts(Suite::Single);
        o.atoms = vec![3];
        assert!(bench_runs(&o).is_err());
    }

    #[test]
    fn summary_means() {
        let row = |g: Option<f64>, status: &str| BenchRow {
            suite: "single".into(),
            mode: "me".into(),
            atoms: 2,
            max_len: 4,
            formula_id: 0,
            name: String::new(),
            formula: String::new(),
            train_sequences: 0,
            test_sequences: 0,
            with_replacement: false,
            epochs: 1,
            final_loss: None,
            sequence_accuracy: g,
            grounding_accuracy: g,
            grounding_exact: g,
            minutes: g,
            timed_out: false,
            status: status.into(),
        };
        let s = summarize(&[
            row(Some(90.0), "ok"),
            row(Some(100.0), "ok"),
            row(None, "error: x"),
        ]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].runs, 3);
        assert_eq!(s[0].failed, 1);
        assert_eq!(s[0].mean_grounding_accuracy, Some(95.0));
    }
}
