//! The perception network: a 784 -> 128 -> |P| MLP with ReLU and a softmax
//! (mutually exclusive atoms) or sigmoid (independent atoms) head.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tilr_core::TraceMode;

use crate::error::{Error, Result};
use crate::tensor::{matmul, sigmoid, softmax_in_place, Tape, Tensor, Var};

pub const IMAGE_PIXELS: usize = 28 * 28;
pub const HIDDEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Softmax,
    Sigmoid,
}

impl Head {
    pub fn for_mode(mode: TraceMode) -> Head {
        match mode {
            TraceMode::Me => Head::Softmax,
            TraceMode::Nme => Head::Sigmoid,
        }
    }

    pub fn mode(self) -> TraceMode {
        match self {
            Head::Softmax => TraceMode::Me,
            Head::Sigmoid => TraceMode::Nme,
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Head::Softmax => "softmax",
            Head::Sigmoid => "sigmoid",
        })
    }
}

impl FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(Head::Softmax),
            "sigmoid" => Ok(Head::Sigmoid),
            _ => Err(Error::Config(format!("unknown head `{s}`"))),
        }
    }
}

/// Parameters in the order `w1 [784 x 128]`, `b1 [128]`, `w2 [128 x |P|]`,
/// `b2 [|P|]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionModel {
    params: Vec<Tensor>,
    head: Head,
}

/// Tape handles for one forward pass.
#[derive(Debug, Clone)]
pub struct ModelVars {
    pub params: Vec<Var>,
    pub output: Var,
}

pub const PARAM_NAMES: [&str; 4] = ["w1", "b1", "w2", "b2"];

impl PerceptionModel {
    /// Uniform Glorot initialisation for weights, zero biases.
    pub fn new(n_atoms: usize, head: Head, seed: u64) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::Config("a model needs at least one output".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-limit..limit))
                .collect();
            Tensor::matrix(fan_in, fan_out, data)
        };
        let params = vec![
            glorot(IMAGE_PIXELS, HIDDEN)?,
            Tensor::zeros(vec![HIDDEN]),
            glorot(HIDDEN, n_atoms)?,
            Tensor::zeros(vec![n_atoms]),
        ];
        Ok(PerceptionModel { params, head })
    }

    /// A model with every parameter zero; its outputs are uniform.
    pub fn zeros(n_atoms: usize, head: Head) -> Self {
        PerceptionModel {
            params: vec![
                Tensor::zeros(vec![IMAGE_PIXELS, HIDDEN]),
                Tensor::zeros(vec![HIDDEN]),
                Tensor::zeros(vec![HIDDEN, n_atoms]),
                Tensor::zeros(vec![n_atoms]),
            ],
            head,
        }
    }

    pub fn from_params(params: Vec<Tensor>, head: Head) -> Result<Self> {
        let shapes: Vec<&[usize]> = params.iter().map(Tensor::shape).collect();
        let ok = matches!(shapes[..], [[i, h], [h2], [h3, p], [p2]]
            if *i == IMAGE_PIXELS && *h == HIDDEN && h2 == h && h3 == h && p2 == p && *p > 0);
        if !ok {
            return Err(Error::Shape(format!(
                "expected parameters [784,128] [128] [128,P] [P], got {shapes:?}"
            )));
        }
        Ok(PerceptionModel { params, head })
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn n_atoms(&self) -> usize {
        self.params[3].len()
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    /// Record the network on `tape` for a batch `x` of shape `[batch, 784]`.
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<ModelVars> {
        let (_, width) = tape.value(x).dims2()?;
        if width != IMAGE_PIXELS {
            return Err(Error::Shape(format!(
                "images have {width} pixels, expected 784"
            )));
        }
        let params: Vec<Var> = self.params.iter().map(|p| tape.leaf(p.clone())).collect();
        let h = tape.matmul(x, params[0])?;
        let h = tape.add_bias(h, params[1])?;
        let h = tape.relu(h);
        let z = tape.matmul(h, params[2])?;
        let z = tape.add_bias(z, params[3])?;
        let output = match self.head {
            Head::Softmax => tape.softmax(z)?,
            Head::Sigmoid => tape.sigmoid(z),
        };
        Ok(ModelVars { params, output })
    }

    /// Fuzzy atom degrees for a batch of images, `[batch, 784] -> [batch, |P|]`.
    pub fn predict_batch(&self, images: &Tensor) -> Result<Tensor> {
        let (batch, width) = images.dims2()?;
        if width != IMAGE_PIXELS {
            return Err(Error::Shape(format!(
                "images have {width} pixels, expected 784"
            )));
        }
        let mut h = matmul(images, &self.params[0])?;
        for row in h.data_mut().chunks_mut(HIDDEN) {
            for (v, b) in row.iter_mut().zip(self.params[1].data()) {
                *v = (*v + b).max(0.0);
            }
        }
        let mut z = matmul(&h, &self.params[2])?;
        let p = self.n_atoms();
        for row in z.data_mut().chunks_mut(p) {
            row.iter_mut()
                .zip(self.params[3].data())
                .for_each(|(v, b)| *v += b);
            match self.head {
                Head::Softmax => softmax_in_place(row),
                Head::Sigmoid => row.iter_mut().for_each(|v| *v = sigmoid(*v)),
            }
        }
        debug_assert_eq!(z.shape(), [batch, p]);
        Ok(z)
    }

    /// Fuzzy atom degrees for one flattened 28x28 image with pixels in [0, 1].
    pub fn perceive(&self, image: &[f64]) -> Result<Vec<f64>> {
        if image.len() != IMAGE_PIXELS {
            return Err(Error::Shape(format!(
                "image has {} pixels, expected 784",
                image.len()
            )));
        }
        let x = Tensor::matrix(1, IMAGE_PIXELS, image.to_vec())?;
        Ok(self.predict_batch(&x)?.into_data())
    }
}
