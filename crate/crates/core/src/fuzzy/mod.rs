//! Fuzzy LTLf under Zadeh semantics.
//!
//! Conjunction is `min`, disjunction `max`, negation `1 - x`. Until is
//! evaluated backward from the last instant with
//! `V_n = b_n`, `V_i = max(b_i, min(a_i, V_{i+1}))`, and strong next has
//! value 0 at the last instant. Derived operators are desugared before
//! evaluation, so the dynamic program here and the compiled graph in
//! [`graph`] perform the same floating-point operations in the same order.

mod graph;
mod knowledge;
mod trace;

pub use graph::{CompiledGraph, GraphCache, GraphValue, Leaf, Node, NodeId};
pub use knowledge::{build_knowledge_formula, build_multi_knowledge_formula};
pub use trace::{FuzzyTrace, LabelVector};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ltlf::{desugar, desugar_keep_implies, Formula};

/// Interpretation of `Implies` nodes that survive desugaring.
///
/// `Material` rewrites `a -> b` to `!a | b` (value `max(1 - a, b)`).
/// `Residuum` keeps the node and uses the Gödel residuum
/// (`1` if `a <= b`, else `b`). The two agree on crisp values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Implication {
    #[default]
    Material,
    Residuum,
}

impl fmt::Display for Implication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Implication::Material => "material",
            Implication::Residuum => "residuum",
        })
    }
}

impl FromStr for Implication {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "material" => Ok(Implication::Material),
            "residuum" => Ok(Implication::Residuum),
            _ => Err(Error::InvalidConfig(format!(
                "unknown implication `{s}` (expected material|residuum)"
            ))),
        }
    }
}

impl Implication {
    pub(crate) fn prepare(self, f: &Formula) -> Formula {
        match self {
            Implication::Material => desugar(f),
            Implication::Residuum => desugar_keep_implies(f),
        }
    }
}

#[inline]
pub(crate) fn zmin(a: f64, b: f64) -> f64 {
    if b < a {
        b
    } else {
        a
    }
}

#[inline]
pub(crate) fn zmax(a: f64, b: f64) -> f64 {
    if b > a {
        b
    } else {
        a
    }
}

#[inline]
pub(crate) fn residuum(a: f64, b: f64) -> f64 {
    if a <= b {
        1.0
    } else {
        b
    }
}

/// Value of `f` at instant 1 of `trace`, with label atoms read from `labels`.
pub fn evaluate(trace: &FuzzyTrace, labels: &LabelVector, f: &Formula) -> Result<f64> {
    evaluate_with(trace, labels, f, Implication::Material)
}

pub fn evaluate_with(
    trace: &FuzzyTrace,
    labels: &LabelVector,
    f: &Formula,
    implication: Implication,
) -> Result<f64> {
    Ok(value_table(trace, labels, &implication.prepare(f))?[0])
}

/// Values of an already desugared formula at every instant.
pub fn value_table(trace: &FuzzyTrace, labels: &LabelVector, f: &Formula) -> Result<Vec<f64>> {
    use Formula::*;
    let n = trace.len();
    Ok(match f {
        Atom(name) => {
            if let Some(j) = trace.alphabet().index_of(name) {
                (0..n).map(|i| trace.get(i, j)).collect()
            } else if let Some(v) = labels.get(name) {
                vec![v; n]
            } else {
                return Err(Error::UnknownAtom(name.clone()));
            }
        }
        True => vec![1.0; n],
        False => vec![0.0; n],
        Not(g) => value_table(trace, labels, g)?
            .into_iter()
            .map(|v| 1.0 - v)
            .collect(),
        And(a, b) | Or(a, b) | Implies(a, b) => {
            let a = value_table(trace, labels, a)?;
            let b = value_table(trace, labels, b)?;
            a.into_iter()
                .zip(b)
                .map(|(x, y)| match f {
                    And(..) => zmin(x, y),
                    Or(..) => zmax(x, y),
                    _ => residuum(x, y),
                })
                .collect()
        }
        Next(g) => {
            let g = value_table(trace, labels, g)?;
            (0..n)
                .map(|i| if i + 1 < n { g[i + 1] } else { 0.0 })
                .collect()
        }
        Until(a, b) => {
            let a = value_table(trace, labels, a)?;
            let b = value_table(trace, labels, b)?;
            let mut out = vec![0.0; n];
            out[n - 1] = b[n - 1];
            for i in (0..n - 1).rev() {
                out[i] = zmax(b[i], zmin(a[i], out[i + 1]));
            }
            out
        }
        Release(..) | Globally(_) | Eventually(_) => {
            return value_table(trace, labels, &desugar(f));
        }
    })
}
