//! Dense row-major tensors and a reverse-mode tape over them.
//!
//! Every operation records its inputs on a [`Tape`]; [`Tape::backward`]
//! walks the records in reverse and applies each backward rule once.
//! Min and max route the upstream gradient to the selected argument, the
//! left one on ties.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let count: usize = shape.iter().product();
        if count != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} holds {count} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let count = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; count],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(rows, cols)` of a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::Shape(format!(
                "expected a matrix, got shape {:?}",
                self.shape
            ))),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = *self.shape.last().unwrap_or(&1);
        &self.data[r * c..(r + 1) * c]
    }

    fn same_shape(&self, other: &Tensor, op: &str) -> Result<()> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{op}: shapes {:?} and {:?} differ",
                self.shape, other.shape
            )))
        }
    }
}

/// `c += a * b` for row-major `a: m x k`, `b: k x n`, with optional
/// transposition of either operand.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    c: &mut [f64],
) {
    // strides of the logical (untransposed) operands
    let (rsa, csa) = if a_trans {
        (1, m as isize)
    } else {
        (k as isize, 1)
    };
    let (rsb, csb) = if b_trans {
        (1, k as isize)
    } else {
        (n as isize, 1)
    };
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Plain matrix product, used for inference without a tape.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2()?;
    let (k2, n) = b.dims2()?;
    if k != k2 {
        return Err(Error::Shape(format!("matmul: {m}x{k} times {k2}x{n}")));
    }
    let mut out = vec![0.0; m * n];
    gemm(m, k, n, &a.data, false, &b.data, false, &mut out);
    Tensor::matrix(m, n, out)
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// One output of a [`Tape::sparse_affine`]: `offset + sum(coef * x[index])`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineRow {
    pub value: f64,
    pub terms: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Relu(Var),
    Softmax(Var),
    Sigmoid(Var),
    Min(Var, Var),
    Max(Var, Var),
    Clamp(Var, f64, f64),
    OneMinus(Var),
    Mean(Var),
    CrossEntropy(Var, Vec<usize>),
    BinaryCrossEntropy(Var, Vec<f64>),
    SparseAffine(Var, Vec<AffineRow>),
}

/// Probability clipping applied before the logarithm in the entropy losses.
pub const LOG_CLIP: f64 = 1e-7;

#[derive(Debug, Default)]
pub struct Tape {
    values: Vec<Tensor>,
    ops: Vec<Op>,
}

/// Gradients of one scalar with respect to every recorded value.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for `v`; values the output does not depend on get zeros.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.values.push(value);
        self.ops.push(op);
        Var(self.values.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.values[v.0]
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = matmul(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// Add a length-`n` bias to every row of an `m x n` matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (m, n) = self.value(x).dims2()?;
        if self.value(bias).shape() != [n] {
            return Err(Error::Shape(format!(
                "add_bias: bias {:?} for {m}x{n} input",
                self.value(bias).shape()
            )));
        }
        let b = self.value(bias).data().to_vec();
        let mut out = self.value(x).clone();
        for row in out.data.chunks_mut(n) {
            for (o, bv) in row.iter_mut().zip(&b) {
                *o += bv;
            }
        }
        Ok(self.push(out, Op::AddBias(x, bias)))
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let mut out = self.value(x).clone();
        out.data.iter_mut().for_each(|v| *v = f(*v));
        self.push(out, op)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, |v| v.max(0.0), Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.map(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn one_minus(&mut self, x: Var) -> Var {
        self.map(x, |v| 1.0 - v, Op::OneMinus(x))
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        self.map(x, |v| v.clamp(lo, hi), Op::Clamp(x, lo, hi))
    }

    /// Row-wise softmax of a matrix.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let (_, n) = self.value(x).dims2()?;
        let mut out = self.value(x).clone();
        out.data.chunks_mut(n).for_each(softmax_in_place);
        Ok(self.push(out, Op::Softmax(x)))
    }

    fn select2(&mut self, a: Var, b: Var, minimum: bool) -> Result<Var> {
        self.value(a).same_shape(self.value(b), "min/max")?;
        let data = self
            .value(a)
            .data
            .iter()
            .zip(&self.value(b).data)
            .map(|(&x, &y)| if takes_right(x, y, minimum) { y } else { x })
            .collect();
        let out = Tensor::new(self.value(a).shape.clone(), data)?;
        Ok(self.push(
            out,
            if minimum {
                Op::Min(a, b)
            } else {
                Op::Max(a, b)
            },
        ))
    }

    pub fn min(&mut self, a: Var, b: Var) -> Result<Var> {
        self.select2(a, b, true)
    }

    pub fn max(&mut self, a: Var, b: Var) -> Result<Var> {
        self.select2(a, b, false)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let m = v.data.iter().sum::<f64>() / v.len() as f64;
        self.push(Tensor::scalar(m), Op::Mean(x))
    }

    /// Mean negative log-probability of the target class of each row of a
    /// probability matrix.
    pub fn cross_entropy(&mut self, probs: Var, targets: &[usize]) -> Result<Var> {
        let (m, n) = self.value(probs).dims2()?;
        if targets.len() != m || targets.iter().any(|&t| t >= n) {
            return Err(Error::Shape(format!(
                "cross_entropy: {} targets for {m}x{n} probabilities",
                targets.len()
            )));
        }
        let p = self.value(probs);
        let loss = targets
            .iter()
            .enumerate()
            .map(|(r, &t)| -clip(p.data[r * n + t]).ln())
            .sum::<f64>()
            / m as f64;
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy(probs, targets.to_vec()),
        ))
    }

    /// Mean binary cross-entropy between probabilities and 0/1 targets,
    /// with probabilities clipped into `[LOG_CLIP, 1 - LOG_CLIP]`.
    pub fn binary_cross_entropy(&mut self, probs: Var, targets: &[f64]) -> Result<Var> {
        let p = self.value(probs);
        if p.len() != targets.len() || p.is_empty() {
            return Err(Error::Shape(format!(
                "binary_cross_entropy: {} targets for {} probabilities",
                targets.len(),
                p.len()
            )));
        }
        let loss = p
            .data
            .iter()
            .zip(targets)
            .map(|(&q, &y)| {
                let q = clip(q);
                -(y * q.ln() + (1.0 - y) * (1.0 - q).ln())
            })
            .sum::<f64>()
            / p.len() as f64;
        Ok(self.push(
            Tensor::scalar(loss),
            Op::BinaryCrossEntropy(probs, targets.to_vec()),
        ))
    }

    /// A vector whose entries are affine in the entries of `x` (flattened).
    /// Each row carries its own value, which must equal the affine form at
    /// the current point; only the coefficients are used for the gradient.
    pub fn sparse_affine(&mut self, x: Var, rows: Vec<AffineRow>) -> Result<Var> {
        let len = self.value(x).len();
        if let Some(bad) = rows.iter().flat_map(|r| &r.terms).find(|(i, _)| *i >= len) {
            return Err(Error::Shape(format!(
                "sparse_affine: index {} out of range for {len} inputs",
                bad.0
            )));
        }
        let out = Tensor::vector(rows.iter().map(|r| r.value).collect());
        Ok(self.push(out, Op::SparseAffine(x, rows)))
    }

    /// Reverse-mode gradients of the scalar `output`.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        if self.value(output).len() != 1 {
            return Err(Error::Shape(format!(
                "backward needs a scalar output, got shape {:?}",
                self.value(output).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.values.len()];
        grads[output.0] = Some(Tensor::new(self.value(output).shape.clone(), vec![1.0])?);
        for id in (0..=output.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            self.backward_op(id, &g, &mut grads)?;
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn backward_op(&self, id: usize, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let out = &self.values[id];
        let mut acc = |v: Var, f: &dyn Fn(usize) -> f64| {
            let shape = self.values[v.0].shape.clone();
            let slot = grads[v.0].get_or_insert_with(|| Tensor::zeros(shape));
            slot.data
                .iter_mut()
                .enumerate()
                .for_each(|(i, s)| *s += f(i));
        };
        match &self.ops[id] {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.value(*a).dims2()?;
                let (_, n) = self.value(*b).dims2()?;
                let mut ga = vec![0.0; m * k];
                gemm(m, n, k, &g.data, false, &self.value(*b).data, true, &mut ga);
                let mut gb = vec![0.0; k * n];
                gemm(k, m, n, &self.value(*a).data, true, &g.data, false, &mut gb);
                acc(*a, &|i| ga[i]);
                acc(*b, &|i| gb[i]);
            }
            Op::AddBias(x, bias) => {
                let (_, n) = out.dims2()?;
                let mut gb = vec![0.0; n];
                for row in g.data.chunks(n) {
                    gb.iter_mut().zip(row).for_each(|(s, v)| *s += v);
                }
                acc(*x, &|i| g.data[i]);
                acc(*bias, &|i| gb[i]);
            }
            Op::Relu(x) => {
                let xv = &self.value(*x).data;
                acc(*x, &|i| if xv[i] > 0.0 { g.data[i] } else { 0.0 });
            }
            Op::Sigmoid(x) => acc(*x, &|i| g.data[i] * out.data[i] * (1.0 - out.data[i])),
            Op::OneMinus(x) => acc(*x, &|i| -g.data[i]),
            Op::Clamp(x, lo, hi) => {
                let xv = &self.value(*x).data;
                acc(*x, &|i| {
                    if xv[i] < *lo || xv[i] > *hi {
                        0.0
                    } else {
                        g.data[i]
                    }
                });
            }
            Op::Softmax(x) => {
                let (_, n) = out.dims2()?;
                let mut gx = vec![0.0; out.len()];
                for ((s, gr), dst) in out
                    .data
                    .chunks(n)
                    .zip(g.data.chunks(n))
                    .zip(gx.chunks_mut(n))
                {
                    let dot: f64 = s.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for j in 0..n {
                        dst[j] = s[j] * (gr[j] - dot);
                    }
                }
                acc(*x, &|i| gx[i]);
            }
            Op::Min(a, b) | Op::Max(a, b) => {
                let minimum = matches!(self.ops[id], Op::Min(..));
                let (av, bv) = (&self.value(*a).data, &self.value(*b).data);
                let right = |i: usize| takes_right(av[i], bv[i], minimum);
                acc(*a, &|i| if right(i) { 0.0 } else { g.data[i] });
                acc(*b, &|i| if right(i) { g.data[i] } else { 0.0 });
            }
            Op::Mean(x) => {
                let n = self.value(*x).len() as f64;
                acc(*x, &|_| g.data[0] / n);
            }
            Op::CrossEntropy(p, targets) => {
                let (m, n) = self.value(*p).dims2()?;
                let pv = &self.value(*p).data;
                acc(*p, &|i| {
                    let (r, c) = (i / n, i % n);
                    if c == targets[r] && in_clip(pv[i]) {
                        -g.data[0] / (pv[i] * m as f64)
                    } else {
                        0.0
                    }
                });
            }
            Op::BinaryCrossEntropy(p, targets) => {
                let pv = &self.value(*p).data;
                let m = pv.len() as f64;
                acc(*p, &|i| {
                    let (q, y) = (pv[i], targets[i]);
                    if in_clip(q) {
                        g.data[0] * (-y / q + (1.0 - y) / (1.0 - q)) / m
                    } else {
                        0.0
                    }
                });
            }
            Op::SparseAffine(x, rows) => {
                let mut gx = vec![0.0; self.value(*x).len()];
                for (row, gr) in rows.iter().zip(&g.data) {
                    for &(i, c) in &row.terms {
                        gx[i] += c * gr;
                    }
                }
                acc(*x, &|i| gx[i]);
            }
        }
        Ok(())
    }
}

#[inline]
fn takes_right(x: f64, y: f64, minimum: bool) -> bool {
    if minimum {
        y < x
    } else {
        y > x
    }
}

#[inline]
fn clip(p: f64) -> f64 {
    p.clamp(LOG_CLIP, 1.0 - LOG_CLIP)
}

#[inline]
fn in_clip(p: f64) -> bool {
    (LOG_CLIP..=1.0 - LOG_CLIP).contains(&p)
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    row.iter_mut().for_each(|v| *v /= total);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::matrix(1, 2, vec![0.0, 0.0]).unwrap());
        let s = tape.softmax(x).unwrap();
        assert_eq!(tape.value(s).data(), &[0.5, 0.5]);
    }

    #[test]
    fn min_routes_gradient_to_selected_argument() {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::vector(vec![0.3, 0.5]));
        let b = tape.leaf(Tensor::vector(vec![0.8, 0.5]));
        let m = tape.min(a, b).unwrap();
        let s = tape.mean(m);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(a).unwrap().data(), &[0.5, 0.5]);
        assert_eq!(g.get(b).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn shape_errors() {
        assert!(Tensor::new(vec![2, 2], vec![0.0; 3]).is_err());
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::matrix(2, 3, vec![0.0; 6]).unwrap());
        let b = tape.leaf(Tensor::matrix(2, 3, vec![0.0; 6]).unwrap());
        assert!(tape.matmul(a, b).is_err());
        let v = tape.leaf(Tensor::vector(vec![0.0; 2]));
        assert!(tape.min(a, v).is_err());
        assert!(tape.add_bias(a, v).is_err());
        assert!(tape.backward(a).is_err());
        assert!(tape.cross_entropy(a, &[0, 3]).is_err());
    }

    #[test]
    fn matmul_matches_naive() {
        let a = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Tensor::matrix(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        assert_eq!(matmul(&a, &b).unwrap().data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn losses_clip_before_log() {
        let mut tape = Tape::new();
        let p = tape.leaf(Tensor::vector(vec![0.0, 1.0]));
        let l = tape.binary_cross_entropy(p, &[1.0, 1.0]).unwrap();
        let expected = -(LOG_CLIP.ln() + (1.0 - LOG_CLIP).ln()) / 2.0;
        assert!((tape.value(l).data()[0] - expected).abs() < 1e-12);
        assert!(tape.value(l).data()[0].is_finite());
    }
}
