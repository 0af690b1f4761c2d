//! Weakly supervised training: perception, refinement of the knowledge
//! formula, binary cross-entropy on the refined label, Adam.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tilr_core::ilr::{ilr_refine_tracked, refine_values};
use tilr_core::{
    build_knowledge_formula, parse_formula, Alphabet, CompiledGraph, Formula, GraphCache,
    Implication, RefinementConfig, SymbolicTrace, TraceMode,
};

use crate::adam::AdamState;
use crate::data::{DatasetRecord, MnistStore};
use crate::error::{Error, Result};
use crate::model::{Head, PerceptionModel, IMAGE_PIXELS};
use crate::tensor::{AffineRow, Tape, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Formula over the dataset alphabet that labels the sequences.
    pub formula: String,
    pub mode: TraceMode,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub timeout_minutes: f64,
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub mnist_dir: Option<PathBuf>,
    pub refinement: RefinementConfig,
    /// Semantics of the two implications linking the formula and its label.
    pub implication: Implication,
    /// Evaluate on the test split after every epoch rather than only at the end.
    pub eval_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            formula: String::new(),
            mode: TraceMode::Me,
            epochs: 20,
            batch_size: 64,
            lr: 0.001,
            seed: 0,
            timeout_minutes: 60.0,
            train_path: None,
            test_path: None,
            mnist_dir: None,
            refinement: RefinementConfig::default(),
            implication: Implication::Residuum,
            eval_each_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.timeout_minutes.is_nan() || self.timeout_minutes <= 0.0 {
            return Err(Error::Config("timeout must be positive".into()));
        }
        self.refinement.validate()?;
        Ok(())
    }
}

/// One training sequence with its image ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub trace: SymbolicTrace,
    pub label: bool,
    pub images: Vec<Vec<u32>>,
}

impl Sample {
    pub fn from_record(record: &DatasetRecord, alphabet: &Alphabet) -> Result<Self> {
        Ok(Sample {
            trace: record.symbolic(alphabet)?,
            label: record.label.accepted(),
            images: record.images.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trace.is_empty()
    }
}

/// The formula, alphabet and mode shared by a set of records.
#[derive(Debug, Clone)]
pub struct Task {
    pub alphabet: Alphabet,
    pub mode: TraceMode,
    pub formula: Formula,
}

impl Task {
    pub fn new(alphabet: Alphabet, mode: TraceMode, formula: Formula) -> Result<Self> {
        if alphabet.len() > 10 {
            return Err(Error::Config(format!(
                "{} atoms but only 10 digit classes",
                alphabet.len()
            )));
        }
        if let Some(a) = formula.atoms().into_iter().find(|a| !alphabet.contains(a)) {
            return Err(tilr_core::Error::UnknownAtom(a.to_string()).into());
        }
        Ok(Task {
            alphabet,
            mode,
            formula,
        })
    }

    /// Task of a record set, checking every record agrees on it.
    pub fn from_records(records: &[DatasetRecord]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Data("empty dataset".into()))?;
        let alphabet = first.alphabet()?;
        let formula = parse_formula(&first.formula, &alphabet, &[])?;
        let task = Task::new(alphabet, first.trace_mode()?, formula)?;
        for (k, r) in records.iter().enumerate() {
            if r.atoms != first.atoms || r.mode != first.mode || r.formula != first.formula {
                return Err(Error::Data(format!(
                    "record {} has a different formula, alphabet or mode than record 1",
                    k + 1
                )));
            }
        }
        Ok(task)
    }

    pub fn samples(&self, records: &[DatasetRecord]) -> Result<Vec<Sample>> {
        records
            .iter()
            .map(|r| Sample::from_record(r, &self.alphabet))
            .collect()
    }
}

/// Label atom name that does not clash with the alphabet.
fn label_name(alphabet: &Alphabet) -> String {
    let mut name = "y".to_string();
    while alphabet.contains(&name) {
        name.push('_');
    }
    name
}

/// Knowledge graphs of a task per trace length.
pub struct KnowledgeGraphs {
    knowledge: Formula,
    cache: GraphCache,
}

impl KnowledgeGraphs {
    pub fn new(task: &Task, implication: Implication) -> Self {
        let label = label_name(&task.alphabet);
        KnowledgeGraphs {
            knowledge: build_knowledge_formula(&task.formula, &label, implication),
            cache: GraphCache::new(task.alphabet.clone(), vec![label], implication),
        }
    }

    pub fn get(&self, len: usize) -> Result<Arc<CompiledGraph>> {
        Ok(self.cache.get(&self.knowledge, len)?)
    }
}

/// Observation rows of several samples, one 784-pixel row per instant.
pub fn observations(samples: &[&Sample], store: &MnistStore) -> Result<Tensor> {
    let rows: usize = samples.iter().map(|s| s.len()).sum();
    let mut data = vec![0.0; rows * IMAGE_PIXELS];
    let mut chunks = data.chunks_mut(IMAGE_PIXELS);
    for s in samples {
        for ids in &s.images {
            if let Some(&bad) = ids.iter().find(|&&id| id as usize >= store.len()) {
                return Err(Error::Data(format!(
                    "image id {bad} is not in the {} pool",
                    store.split()
                )));
            }
            store.compose_into(ids, chunks.next().expect("row per instant"));
        }
    }
    Tensor::matrix(rows, IMAGE_PIXELS, data)
}

/// Loss value and parameter gradients of one batch of equal-length samples.
pub struct BatchResult {
    pub loss: f64,
    pub grads: Vec<Tensor>,
    /// Refined labels before clipping.
    pub refined: Vec<f64>,
}

/// Forward and backward pass for `batch`: perception, tracked refinement
/// of the knowledge graph, binary cross-entropy of the refined label.
pub fn batch_loss(
    model: &PerceptionModel,
    batch: &[&Sample],
    store: &MnistStore,
    graphs: &KnowledgeGraphs,
    refinement: &RefinementConfig,
) -> Result<BatchResult> {
    let x = observations(batch, store)?;
    let p = model.n_atoms();
    let mut tape = Tape::new();
    let xv = tape.leaf(x);
    let vars = model.forward(&mut tape, xv)?;
    let probs = tape.value(vars.output).data().to_vec();
    let mut rows = Vec::with_capacity(batch.len());
    let mut offset = 0;
    for s in batch {
        let n = s.len();
        let graph = graphs.get(n)?;
        let props = &probs[offset * p..(offset + n) * p];
        let refined = ilr_refine_tracked(&graph, props, &[0.0], refinement)?;
        let y = &refined.labels[0];
        let inputs = (n * p) as u32;
        rows.push(AffineRow {
            value: y.value,
            terms: y
                .grad
                .iter()
                .filter(|(i, _)| *i < inputs)
                .map(|&(i, c)| (offset * p + i as usize, c))
                .collect(),
        });
        offset += n;
    }
    let refined: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let yhat = tape.sparse_affine(vars.output, rows)?;
    let targets: Vec<f64> = batch.iter().map(|s| f64::from(u8::from(s.label))).collect();
    let loss = tape.binary_cross_entropy(yhat, &targets)?;
    let mut grads = tape.backward(loss)?;
    let grads = vars
        .params
        .iter()
        .zip(model.params())
        .map(|(&v, param)| {
            grads
                .take(v)
                .unwrap_or_else(|| Tensor::zeros(param.shape().to_vec()))
        })
        .collect();
    Ok(BatchResult {
        loss: tape.value(loss).data()[0],
        grads,
        refined,
    })
}

/// Grounding accuracy on the images of a sample set, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grounding {
    /// Mutually exclusive atoms: argmax (leftmost on ties) equals the true
    /// atom. Otherwise: per atom and instant, `degree >= 0.5` equals truth.
    pub accuracy: f64,
    /// Share of instants whose whole predicted atom set is right.
    pub exact: f64,
}

const EVAL_CHUNK: usize = 256;

fn chunks(samples: &[Sample]) -> impl Iterator<Item = Vec<&Sample>> {
    samples.chunks(EVAL_CHUNK).map(|c| c.iter().collect())
}

fn predicted_atoms(row: &[f64], head: Head) -> u32 {
    match head {
        Head::Softmax => {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            1 << best
        }
        Head::Sigmoid => row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= 0.5)
            .fold(0, |m, (j, _)| m | (1 << j)),
    }
}

pub fn evaluate_grounding(
    model: &PerceptionModel,
    samples: &[Sample],
    store: &MnistStore,
    mode: TraceMode,
) -> Result<Grounding> {
    if model.head() != Head::for_mode(mode) {
        return Err(Error::Config(format!(
            "a {} head cannot be evaluated on {mode} data",
            model.head()
        )));
    }
    let p = model.n_atoms();
    let (mut atoms_right, mut atoms_total, mut exact, mut instants) =
        (0usize, 0usize, 0usize, 0usize);
    for chunk in chunks(samples) {
        let out = model.predict_batch(&observations(&chunk, store)?)?;
        let mut row = 0;
        for s in &chunk {
            for &truth in s.trace.masks() {
                let predicted = predicted_atoms(out.row(row), model.head());
                row += 1;
                instants += 1;
                exact += usize::from(predicted == truth);
                match model.head() {
                    Head::Softmax => atoms_right += usize::from(predicted == truth),
                    Head::Sigmoid => {
                        atoms_right += p - ((predicted ^ truth).count_ones() as usize);
                    }
                }
                atoms_total += match model.head() {
                    Head::Softmax => 1,
                    Head::Sigmoid => p,
                };
            }
        }
    }
    if instants == 0 {
        return Err(Error::Data("no images to evaluate".into()));
    }
    Ok(Grounding {
        accuracy: 100.0 * atoms_right as f64 / atoms_total as f64,
        exact: 100.0 * exact as f64 / instants as f64,
    })
}

/// Share of samples (percent) whose refined label, thresholded at 0.5,
/// equals the stored label.
pub fn evaluate_sequence(
    model: &PerceptionModel,
    samples: &[Sample],
    store: &MnistStore,
    graphs: &KnowledgeGraphs,
    refinement: &RefinementConfig,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Data("no sequences to evaluate".into()));
    }
    let p = model.n_atoms();
    let mut right = 0;
    for chunk in chunks(samples) {
        let out = model.predict_batch(&observations(&chunk, store)?)?;
        let mut offset = 0;
        for s in &chunk {
            let n = s.len();
            let props = out.data()[offset * p..(offset + n) * p].to_vec();
            offset += n;
            let graph = graphs.get(n)?;
            let refined = refine_values(&graph, props, vec![0.0], refinement)?;
            right += usize::from((refined.labels[0] >= 0.5) == s.label);
        }
    }
    Ok(100.0 * right as f64 / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub sequence_accuracy: Option<f64>,
    pub grounding: Option<Grounding>,
    pub minutes: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub epochs: Vec<EpochMetrics>,
    pub sequence_accuracy: f64,
    pub grounding: Grounding,
    pub minutes: f64,
    pub timed_out: bool,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: PerceptionModel,
    pub metrics: Metrics,
}

/// Equal-length batches in a seeded random order.
fn epoch_batches(samples: &[Sample], batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut by_len: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (k, s) in samples.iter().enumerate() {
        by_len.entry(s.len()).or_default().push(k);
    }
    let mut batches = Vec::new();
    for bucket in by_len.values_mut() {
        bucket.shuffle(rng);
        batches.extend(bucket.chunks(batch_size).map(<[usize]>::to_vec));
    }
    batches.shuffle(rng);
    batches
}

/// Train a fresh perception model on `train` and report metrics on `test`.
pub fn train(
    cfg: &TrainConfig,
    task: &Task,
    train: &[Sample],
    train_store: &MnistStore,
    test: &[Sample],
    test_store: &MnistStore,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Data(
            "training and test sets must be non-empty".into(),
        ));
    }
    if task.mode != cfg.mode {
        return Err(Error::Config(format!(
            "configured for {} but the data is {}",
            cfg.mode, task.mode
        )));
    }
    let started = Instant::now();
    let minutes = || started.elapsed().as_secs_f64() / 60.0;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = PerceptionModel::new(task.alphabet.len(), Head::for_mode(task.mode), cfg.seed)?;
    let mut adam = AdamState::new(model.params(), cfg.lr);
    let graphs = KnowledgeGraphs::new(task, cfg.implication);
    let mut epochs = Vec::new();
    let mut timed_out = false;
    'epochs: for epoch in 1..=cfg.epochs {
        let (mut loss_sum, mut count) = (0.0, 0usize);
        for batch in epoch_batches(train, cfg.batch_size, &mut rng) {
            if minutes() > cfg.timeout_minutes {
                timed_out = true;
                info!("timeout after {:.2} min in epoch {epoch}", minutes());
                break 'epochs;
            }
            let refs: Vec<&Sample> = batch.iter().map(|&k| &train[k]).collect();
            let result = batch_loss(&model, &refs, train_store, &graphs, &cfg.refinement)?;
            adam.step(model.params_mut(), &result.grads)?;
            loss_sum += result.loss * refs.len() as f64;
            count += refs.len();
        }
        let loss = loss_sum / count as f64;
        let (sequence_accuracy, grounding) = if cfg.eval_each_epoch || epoch == cfg.epochs {
            (
                Some(evaluate_sequence(
                    &model,
                    test,
                    test_store,
                    &graphs,
                    &cfg.refinement,
                )?),
                Some(evaluate_grounding(&model, test, test_store, task.mode)?),
            )
        } else {
            (None, None)
        };
        info!(
            "epoch {epoch}: loss {loss:.4}, sequence {}, grounding {}",
            sequence_accuracy.map_or("-".into(), |v| format!("{v:.2}%")),
            grounding.map_or("-".into(), |g| format!("{:.2}%", g.accuracy)),
        );
        epochs.push(EpochMetrics {
            epoch,
            loss,
            sequence_accuracy,
            grounding,
            minutes: minutes(),
        });
    }
    debug!("{} knowledge graphs compiled", graphs.cache.len());
    let (sequence_accuracy, grounding) = match epochs.last() {
        Some(EpochMetrics {
            sequence_accuracy: Some(s),
            grounding: Some(g),
            ..
        }) if !timed_out => (*s, *g),
        _ => (
            evaluate_sequence(&model, test, test_store, &graphs, &cfg.refinement)?,
            evaluate_grounding(&model, test, test_store, task.mode)?,
        ),
    };
    Ok(TrainOutcome {
        model,
        metrics: Metrics {
            epochs,
            sequence_accuracy,
            grounding,
            minutes: minutes(),
            timed_out,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{IdxImages, Split};

    /// Digit `d` drawn as a solid band of rows, so a linear model separates
    /// the classes easily.
    pub(crate) fn banded_store(split: Split, per_digit: usize) -> MnistStore {
        let mut pixels = Vec::new();
        let mut labels = Vec::new();
        for k in 0..per_digit * 10 {
            let d = k % 10;
            let mut img = vec![0u8; IMAGE_PIXELS];
            for r in (2 * d + 2)..(2 * d + 4) {
                for c in 4..24 {
                    img[r * 28 + c] = 200 + (k % 50) as u8;
                }
            }
            pixels.extend(img);
            labels.push(d as u8);
        }
        let images = IdxImages {
            count: labels.len(),
            rows: 28,
            cols: 28,
            pixels,
        };
        MnistStore::new(split, images, labels).unwrap()
    }

    fn sample(trace: &[Vec<usize>], label: bool, store: &MnistStore) -> Sample {
        let images = trace
            .iter()
            .map(|atoms| atoms.iter().map(|&j| store.ids_of_digit(j)[0]).collect())
            .collect();
        Sample {
            trace: SymbolicTrace::from_indices(trace).unwrap(),
            label,
            images,
        }
    }

    #[test]
    fn config_validation() {
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig {
            timeout_minutes: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn uniform_model_grounding_is_leftmost() {
        let store = banded_store(Split::Test, 2);
        let samples = vec![
            sample(&[vec![0], vec![1]], true, &store),
            sample(&[vec![1], vec![1], vec![0]], true, &store),
        ];
        let model = PerceptionModel::zeros(2, Head::Softmax);
        let g = evaluate_grounding(&model, &samples, &store, TraceMode::Me).unwrap();
        assert_eq!(g.accuracy, 40.0);
        let model = PerceptionModel::zeros(2, Head::Sigmoid);
        let samples = vec![sample(&[vec![0], vec![0, 1]], true, &store)];
        let g = evaluate_grounding(&model, &samples, &store, TraceMode::Nme).unwrap();
        assert_eq!((g.accuracy, g.exact), (75.0, 50.0));
        assert!(evaluate_grounding(&model, &samples, &store, TraceMode::Me).is_err());
    }

    #[test]
    fn batches_group_equal_lengths() {
        let store = banded_store(Split::Train, 1);
        let samples: Vec<Sample> = (1..=5)
            .flat_map(|n| (0..7).map(move |_| n))
            .map(|n| sample(&vec![vec![0]; n], true, &store))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batches = epoch_batches(&samples, 3, &mut rng);
        assert_eq!(batches.iter().map(Vec::len).sum::<usize>(), 35);
        for b in &batches {
            assert!(b.len() <= 3);
            assert!(b.iter().all(|&k| samples[k].len() == samples[b[0]].len()));
        }
    }
}
