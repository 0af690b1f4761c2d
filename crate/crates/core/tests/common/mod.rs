#![allow(dead_code)]

use rand::Rng;
use tilr_core::{Formula, SymbolicTrace};

/// Satisfaction read straight off the quantifier definitions of each
/// operator, with no desugaring and no dynamic programming. `i` is 0-based.
pub fn oracle(trace: &SymbolicTrace, names: &[&str], i: usize, f: &Formula) -> bool {
    use Formula::*;
    let n = trace.len();
    match f {
        Atom(a) => {
            let j = names.iter().position(|x| x == a).expect("atom in alphabet");
            trace.holds(i, j)
        }
        True => true,
        False => false,
        Not(g) => !oracle(trace, names, i, g),
        And(a, b) => oracle(trace, names, i, a) && oracle(trace, names, i, b),
        Or(a, b) => oracle(trace, names, i, a) || oracle(trace, names, i, b),
        Implies(a, b) => !oracle(trace, names, i, a) || oracle(trace, names, i, b),
        Next(g) => i + 1 < n && oracle(trace, names, i + 1, g),
        Until(a, b) => {
            (i..n).any(|k| oracle(trace, names, k, b) && (i..k).all(|j| oracle(trace, names, j, a)))
        }
        Release(a, b) => {
            (i..n).all(|k| oracle(trace, names, k, b) || (i..k).any(|j| oracle(trace, names, j, a)))
        }
        Globally(g) => (i..n).all(|k| oracle(trace, names, k, g)),
        Eventually(g) => (i..n).any(|k| oracle(trace, names, k, g)),
    }
}

/// Random formula over `atoms` using every operator.
pub fn random_formula(rng: &mut impl Rng, atoms: &[&str], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::atom(atoms[rng.gen_range(0..atoms.len())]),
        };
    }
    let sub = |rng: &mut _| random_formula(rng, atoms, depth - 1);
    match rng.gen_range(0..11) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 => Formula::next(sub(rng)),
        5 => Formula::until(sub(rng), sub(rng)),
        6 => Formula::release(sub(rng), sub(rng)),
        7 => Formula::globally(sub(rng)),
        8 => Formula::eventually(sub(rng)),
        9 => Formula::and(sub(rng), Formula::next(sub(rng))),
        _ => Formula::until(sub(rng), Formula::and(sub(rng), sub(rng))),
    }
}

/// Random formula without negation or implication.
pub fn random_positive_formula(rng: &mut impl Rng, atoms: &[&str], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return Formula::atom(atoms[rng.gen_range(0..atoms.len())]);
    }
    let sub = |rng: &mut _| random_positive_formula(rng, atoms, depth - 1);
    match rng.gen_range(0..7) {
        0 => Formula::and(sub(rng), sub(rng)),
        1 => Formula::or(sub(rng), sub(rng)),
        2 => Formula::next(sub(rng)),
        3 => Formula::until(sub(rng), sub(rng)),
        4 => Formula::release(sub(rng), sub(rng)),
        5 => Formula::globally(sub(rng)),
        _ => Formula::eventually(sub(rng)),
    }
}

pub fn random_rows(rng: &mut impl Rng, len: usize, width: usize) -> Vec<Vec<f64>> {
    (0..len)
        .map(|_| (0..width).map(|_| rng.gen::<f64>()).collect())
        .collect()
}
