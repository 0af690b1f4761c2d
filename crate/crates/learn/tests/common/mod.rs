#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tilr_core::{Alphabet, Formula, TraceMode};
use tilr_learn::data::{
    attach_images, sample_symbolic_dataset, IdxImages, MnistStore, SamplingPlan, Split,
};
use tilr_learn::model::{HIDDEN, IMAGE_PIXELS};
use tilr_learn::{Head, PerceptionModel, Sample, Task, Tensor};

/// Synthetic digits: digit `d` is a solid band over rows `2d+2..2d+4` whose
/// brightness varies from image to image. Only digits below `digits` are
/// present, and test images carry one extra marker pixel.
pub fn banded_store(split: Split, per_digit: usize, digits: usize) -> MnistStore {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for k in 0..per_digit * digits {
        let d = k % digits;
        let mut img = vec![0u8; IMAGE_PIXELS];
        for r in (2 * d + 2)..(2 * d + 4) {
            for c in 4..24 {
                img[r * 28 + c] = 150 + (k % 100) as u8;
            }
        }
        if split == Split::Test {
            img[27 * 28 + 27] = 1;
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

pub struct Prepared {
    pub task: Task,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

pub fn prepare(
    formula: &Formula,
    alphabet: &Alphabet,
    plan: &SamplingPlan,
    train_store: &MnistStore,
    test_store: &MnistStore,
    copies: usize,
) -> Prepared {
    let symbolic = sample_symbolic_dataset(formula, alphabet, plan).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let task = Task::new(alphabet.clone(), plan.mode, formula.clone()).unwrap();
    let train_records = attach_images(
        &symbolic.train,
        formula,
        alphabet,
        plan.mode,
        train_store,
        copies,
        &mut rng,
    )
    .unwrap();
    let test_records = attach_images(
        &symbolic.test,
        formula,
        alphabet,
        plan.mode,
        test_store,
        copies,
        &mut rng,
    )
    .unwrap();
    Prepared {
        train: task.samples(&train_records).unwrap(),
        test: task.samples(&test_records).unwrap(),
        task,
    }
}

/// A hand-built model that reads banded digits perfectly: hidden unit `j`
/// sums the band of digit `j`, and the output for atom `j` is `gain * (h_j
/// - 10)`, saturating to exactly 0 or 1.
pub fn oracle_model(n_atoms: usize, mode: TraceMode) -> PerceptionModel {
    let gain = 100.0;
    let mut w1 = vec![0.0; IMAGE_PIXELS * HIDDEN];
    for j in 0..n_atoms {
        for r in (2 * j + 2)..(2 * j + 4) {
            for c in 4..24 {
                w1[(r * 28 + c) * HIDDEN + j] = 1.0;
            }
        }
    }
    let mut w2 = vec![0.0; HIDDEN * n_atoms];
    for j in 0..n_atoms {
        w2[j * n_atoms + j] = gain;
    }
    let params = vec![
        Tensor::matrix(IMAGE_PIXELS, HIDDEN, w1).unwrap(),
        Tensor::zeros(vec![HIDDEN]),
        Tensor::matrix(HIDDEN, n_atoms, w2).unwrap(),
        Tensor::vector(vec![-10.0 * gain; n_atoms]),
    ];
    PerceptionModel::from_params(params, Head::for_mode(mode)).unwrap()
}
