use std::sync::Arc;

use crate::crisp::SymbolicTrace;
use crate::error::{Error, Result};
use crate::ltlf::Alphabet;

/// `n x |P|` matrix of truth degrees; entry `(i, j)` is the degree of atom
/// `j` at 0-based instant `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyTrace {
    alphabet: Arc<Alphabet>,
    len: usize,
    values: Vec<f64>,
}

fn check_unit(v: f64, what: impl FnOnce() -> String) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidTrace(format!(
            "{} = {v} is outside [0, 1]",
            what()
        )))
    }
}

impl FuzzyTrace {
    pub fn new(alphabet: impl Into<Arc<Alphabet>>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let alphabet = alphabet.into();
        let width = alphabet.len();
        if rows.is_empty() {
            return Err(Error::InvalidTrace(
                "a trace needs at least one instant".into(),
            ));
        }
        let mut values = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidTrace(format!(
                    "instant {} has {} values, expected {width}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                check_unit(v, || format!("value({}, {})", i + 1, alphabet.name(j)))?;
            }
            values.extend_from_slice(row);
        }
        Ok(FuzzyTrace {
            alphabet,
            len: rows.len(),
            values,
        })
    }

    /// Build from a row-major buffer of `len * |P|` values.
    pub fn from_flat(alphabet: impl Into<Arc<Alphabet>>, values: Vec<f64>) -> Result<Self> {
        let alphabet = alphabet.into();
        let width = alphabet.len();
        if values.is_empty() || !values.len().is_multiple_of(width) {
            return Err(Error::InvalidTrace(format!(
                "{} values do not form rows of width {width}",
                values.len()
            )));
        }
        for (k, &v) in values.iter().enumerate() {
            check_unit(v, || {
                format!("value({}, {})", k / width + 1, alphabet.name(k % width))
            })?;
        }
        Ok(FuzzyTrace {
            len: values.len() / width,
            alphabet,
            values,
        })
    }

    /// The 0/1 trace of a symbolic trace.
    pub fn from_symbolic(alphabet: impl Into<Arc<Alphabet>>, trace: &SymbolicTrace) -> Self {
        let alphabet = alphabet.into();
        let width = alphabet.len();
        let mut values = Vec::with_capacity(trace.len() * width);
        for i in 0..trace.len() {
            for j in 0..width {
                values.push(if trace.holds(i, j) { 1.0 } else { 0.0 });
            }
        }
        FuzzyTrace {
            alphabet,
            len: trace.len(),
            values,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn shared_alphabet(&self) -> Arc<Alphabet> {
        Arc::clone(&self.alphabet)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> usize {
        self.alphabet.len()
    }

    pub fn get(&self, instant: usize, atom: usize) -> f64 {
        self.values[instant * self.width() + atom]
    }

    pub fn row(&self, instant: usize) -> &[f64] {
        let w = self.width();
        &self.values[instant * w..(instant + 1) * w]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }
}

/// Real-valued label atoms `y_1..y_m`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl LabelVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::InvalidTrace(format!(
                "{} label names but {} values",
                names.len(),
                values.len()
            )));
        }
        for (name, &v) in names.iter().zip(&values) {
            check_unit(v, || format!("label {name}"))?;
        }
        Ok(LabelVector { names, values })
    }

    /// Labels initialised to 0, the state before refinement.
    pub fn zeros(names: &[String]) -> Self {
        LabelVector {
            names: names.to_vec(),
            values: vec![0.0; names.len()],
        }
    }

    pub fn empty() -> Self {
        LabelVector::default()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.values[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_range_checks() {
        let a = Alphabet::new(["p", "q"]).unwrap();
        assert!(FuzzyTrace::new(a.clone(), vec![]).is_err());
        assert!(FuzzyTrace::new(a.clone(), vec![vec![0.1]]).is_err());
        assert!(FuzzyTrace::new(a.clone(), vec![vec![0.1, 1.2]]).is_err());
        assert!(FuzzyTrace::new(a.clone(), vec![vec![0.1, f64::NAN]]).is_err());
        let t = FuzzyTrace::new(a.clone(), vec![vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get(1, 0), 0.3);
        assert_eq!(t.row(0), &[0.1, 0.2]);
        assert!(FuzzyTrace::from_flat(a, vec![0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn labels() {
        let names = vec!["y".to_string()];
        let l = LabelVector::zeros(&names);
        assert_eq!(l.get("y"), Some(0.0));
        assert_eq!(l.get("z"), None);
        assert!(LabelVector::new(names, vec![1.5]).is_err());
    }
}
