//! Crisp LTLf satisfaction over symbolic traces.
//!
//! Instants are 1-based in the public API. Next is strong: `X f` holds at
//! `i` only if instant `i + 1` exists and satisfies `f`. Each subformula is
//! evaluated once over the whole trace (backward for the temporal
//! operators), so checking costs `O(|f| * n)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ltlf::{Alphabet, Formula};

/// How many atoms may hold at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceMode {
    /// Mutually exclusive: exactly one atom per instant.
    Me,
    /// Non mutually exclusive: one or two atoms per instant.
    Nme,
}

impl fmt::Display for TraceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceMode::Me => "me",
            TraceMode::Nme => "nme",
        })
    }
}

impl FromStr for TraceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "me" => Ok(TraceMode::Me),
            "nme" => Ok(TraceMode::Nme),
            _ => Err(Error::InvalidConfig(format!(
                "unknown mode `{s}` (expected me|nme)"
            ))),
        }
    }
}

impl TraceMode {
    /// Admissible atom sets for one instant, as bit masks: singletons in atom
    /// order, then (NME only) pairs in lexicographic order.
    pub fn instant_choices(self, n_atoms: usize) -> Vec<u32> {
        let mut out: Vec<u32> = (0..n_atoms).map(|j| 1 << j).collect();
        if self == TraceMode::Nme {
            for j in 0..n_atoms {
                for k in j + 1..n_atoms {
                    out.push((1 << j) | (1 << k));
                }
            }
        }
        out
    }

    pub fn admits(self, mask: u32) -> bool {
        match self {
            TraceMode::Me => mask.count_ones() == 1,
            TraceMode::Nme => (1..=2).contains(&mask.count_ones()),
        }
    }
}

/// Finite non-empty sequence of atom sets; bit `j` of an instant is atom `j`
/// of the associated alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicTrace {
    instants: Vec<u32>,
}

impl SymbolicTrace {
    pub fn from_masks(instants: Vec<u32>) -> Result<Self> {
        if instants.is_empty() {
            return Err(Error::InvalidTrace(
                "a trace needs at least one instant".into(),
            ));
        }
        Ok(SymbolicTrace { instants })
    }

    pub fn from_indices(instants: &[Vec<usize>]) -> Result<Self> {
        SymbolicTrace::from_masks(
            instants
                .iter()
                .map(|set| set.iter().fold(0u32, |m, &j| m | (1 << j)))
                .collect(),
        )
    }

    pub fn from_names<S: AsRef<str>>(alphabet: &Alphabet, instants: &[Vec<S>]) -> Result<Self> {
        let indices = instants
            .iter()
            .map(|set| {
                set.iter()
                    .map(|name| {
                        alphabet
                            .index_of(name.as_ref())
                            .ok_or_else(|| Error::UnknownAtom(name.as_ref().to_string()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        SymbolicTrace::from_indices(&indices)
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    pub fn masks(&self) -> &[u32] {
        &self.instants
    }

    /// Atom indices holding at 0-based instant `i`, ascending.
    pub fn atoms_at(&self, i: usize) -> Vec<usize> {
        let mask = self.instants[i];
        (0..32).filter(|j| mask & (1 << j) != 0).collect()
    }

    pub fn holds(&self, i: usize, atom: usize) -> bool {
        self.instants[i] & (1 << atom) != 0
    }

    /// Check that every instant only mentions atoms of `alphabet` and
    /// respects `mode`.
    pub fn validate(&self, alphabet: &Alphabet, mode: Option<TraceMode>) -> Result<()> {
        let allowed: u32 = if alphabet.len() >= 32 {
            u32::MAX
        } else {
            (1u32 << alphabet.len()) - 1
        };
        for (i, &mask) in self.instants.iter().enumerate() {
            if mask & !allowed != 0 {
                return Err(Error::InvalidTrace(format!(
                    "instant {} mentions an atom outside the alphabet",
                    i + 1
                )));
            }
            if let Some(mode) = mode {
                if !mode.admits(mask) {
                    return Err(Error::InvalidTrace(format!(
                        "instant {} has {} atoms, not allowed in {mode} mode",
                        i + 1,
                        mask.count_ones()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn names(&self, alphabet: &Alphabet) -> Vec<Vec<String>> {
        (0..self.len())
            .map(|i| {
                self.atoms_at(i)
                    .into_iter()
                    .map(|j| alphabet.name(j).to_string())
                    .collect()
            })
            .collect()
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> impl fmt::Display + 'a {
        struct Show<'a>(&'a SymbolicTrace, &'a Alphabet);
        impl fmt::Display for Show<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let parts: Vec<String> = self
                    .0
                    .names(self.1)
                    .into_iter()
                    .map(|set| format!("{{{}}}", set.join(",")))
                    .collect();
                write!(f, "<{}>", parts.join(","))
            }
        }
        Show(self, alphabet)
    }
}

/// Truth value of `f` at every instant of `trace` (0-based).
pub fn truth_table(trace: &SymbolicTrace, alphabet: &Alphabet, f: &Formula) -> Result<Vec<bool>> {
    use Formula::*;
    let n = trace.len();
    Ok(match f {
        Atom(name) => {
            let j = alphabet
                .index_of(name)
                .ok_or_else(|| Error::UnknownAtom(name.clone()))?;
            (0..n).map(|i| trace.holds(i, j)).collect()
        }
        True => vec![true; n],
        False => vec![false; n],
        Not(g) => truth_table(trace, alphabet, g)?
            .into_iter()
            .map(|v| !v)
            .collect(),
        And(a, b) | Or(a, b) | Implies(a, b) => {
            let a = truth_table(trace, alphabet, a)?;
            let b = truth_table(trace, alphabet, b)?;
            a.into_iter()
                .zip(b)
                .map(|(x, y)| match f {
                    And(..) => x && y,
                    Or(..) => x || y,
                    _ => !x || y,
                })
                .collect()
        }
        Next(g) => {
            let g = truth_table(trace, alphabet, g)?;
            (0..n).map(|i| i + 1 < n && g[i + 1]).collect()
        }
        Until(a, b) | Release(a, b) => {
            let a = truth_table(trace, alphabet, a)?;
            let b = truth_table(trace, alphabet, b)?;
            let until = matches!(f, Until(..));
            let mut out = vec![false; n];
            out[n - 1] = b[n - 1];
            for i in (0..n - 1).rev() {
                out[i] = if until {
                    b[i] || (a[i] && out[i + 1])
                } else {
                    b[i] && (a[i] || out[i + 1])
                };
            }
            out
        }
        Globally(g) | Eventually(g) => {
            let g = truth_table(trace, alphabet, g)?;
            let always = matches!(f, Globally(_));
            let mut out = g.clone();
            for i in (0..n - 1).rev() {
                out[i] = if always {
                    g[i] && out[i + 1]
                } else {
                    g[i] || out[i + 1]
                };
            }
            out
        }
    })
}

/// `trace, i |= f` with 1-based `i`.
pub fn satisfies_at(
    trace: &SymbolicTrace,
    alphabet: &Alphabet,
    i: usize,
    f: &Formula,
) -> Result<bool> {
    if i == 0 || i > trace.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: trace.len(),
        });
    }
    Ok(truth_table(trace, alphabet, f)?[i - 1])
}

pub fn satisfies(trace: &SymbolicTrace, alphabet: &Alphabet, f: &Formula) -> Result<bool> {
    satisfies_at(trace, alphabet, 1, f)
}

/// Number of traces of exactly `len` instants over `n_atoms` atoms.
pub fn trace_count(n_atoms: usize, len: usize, mode: TraceMode) -> u128 {
    let per_instant = mode.instant_choices(n_atoms).len() as u128;
    per_instant.pow(len as u32)
}

/// Every trace with length in `min_len..=max_len`, shortest first and
/// lexicographic (by [`TraceMode::instant_choices`] order) within a length.
pub fn enumerate_traces(
    n_atoms: usize,
    min_len: usize,
    max_len: usize,
    mode: TraceMode,
) -> impl Iterator<Item = SymbolicTrace> {
    let choices = mode.instant_choices(n_atoms);
    let lo = min_len.max(1);
    (lo..=max_len).flat_map(move |len| TraceOdometer::new(choices.clone(), len))
}

struct TraceOdometer {
    choices: Vec<u32>,
    digits: Vec<usize>,
    done: bool,
}

impl TraceOdometer {
    fn new(choices: Vec<u32>, len: usize) -> Self {
        let done = choices.is_empty() || len == 0;
        TraceOdometer {
            choices,
            digits: vec![0; len],
            done,
        }
    }
}

impl Iterator for TraceOdometer {
    type Item = SymbolicTrace;

    fn next(&mut self) -> Option<SymbolicTrace> {
        if self.done {
            return None;
        }
        let trace = SymbolicTrace {
            instants: self.digits.iter().map(|&d| self.choices[d]).collect(),
        };
        let mut pos = self.digits.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.digits[pos] += 1;
            if self.digits[pos] < self.choices.len() {
                break;
            }
            self.digits[pos] = 0;
        }
        Some(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltlf::{desugar, parse_formula};

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    fn trace(alpha: &Alphabet, sets: &[&[&str]]) -> SymbolicTrace {
        let sets: Vec<Vec<&str>> = sets.iter().map(|s| s.to_vec()).collect();
        SymbolicTrace::from_names(alpha, &sets).unwrap()
    }

    #[test]
    fn digit_chain_response() {
        let alpha = Alphabet::new(["d0", "d1", "d2"]).unwrap();
        let f = desugar(&parse_formula("G(d2 -> X d0)", &alpha, &[]).unwrap());
        let t = trace(&alpha, &[&["d2"], &["d0"]]);
        assert!(satisfies_at(&t, &alpha, 1, &f).unwrap());
        let t = trace(&alpha, &[&["d0"], &["d2"]]);
        assert!(!satisfies(&t, &alpha, &f).unwrap());
    }

    #[test]
    fn strong_next_at_end() {
        let alpha = Alphabet::new(["a"]).unwrap();
        let t = trace(&alpha, &[&["a"]]);
        let f = parse_formula("X a", &alpha, &[]).unwrap();
        assert!(!satisfies(&t, &alpha, &f).unwrap());
        let t = trace(&alpha, &[&["a"], &["a"]]);
        assert!(satisfies_at(&t, &alpha, 1, &f).unwrap());
        assert!(!satisfies_at(&t, &alpha, 2, &f).unwrap());
    }

    #[test]
    fn until_and_constants() {
        let alpha = ab();
        let t = trace(&alpha, &[&["a"], &["b"]]);
        let f = parse_formula("a U b", &alpha, &[]).unwrap();
        assert!(satisfies(&t, &alpha, &f).unwrap());
        let one = trace(&alpha, &[&["a"]]);
        assert!(satisfies(&one, &alpha, &Formula::True).unwrap());
        assert!(!satisfies(&one, &alpha, &Formula::False).unwrap());
        let t = trace(&alpha, &[&["a"], &["a"], &["b"]]);
        let f = parse_formula("F b", &alpha, &[]).unwrap();
        assert!(satisfies(&t, &alpha, &f).unwrap());
    }

    #[test]
    fn index_errors() {
        let alpha = ab();
        let t = trace(&alpha, &[&["a"]]);
        assert!(matches!(
            satisfies_at(&t, &alpha, 0, &Formula::True),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            satisfies_at(&t, &alpha, 2, &Formula::True),
            Err(Error::IndexOutOfRange { index: 2, len: 1 })
        ));
        assert!(SymbolicTrace::from_masks(vec![]).is_err());
        assert_eq!(
            satisfies(&t, &alpha, &Formula::atom("zz")),
            Err(Error::UnknownAtom("zz".into()))
        );
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_traces(2, 1, 1, TraceMode::Me).count(), 2);
        assert_eq!(enumerate_traces(2, 1, 4, TraceMode::Me).count(), 30);
        let nme: Vec<_> = enumerate_traces(2, 1, 1, TraceMode::Nme).collect();
        assert_eq!(nme.len(), 3);
        assert_eq!(nme[2].masks(), &[0b11]);
        assert_eq!(enumerate_traces(2, 1, 4, TraceMode::Nme).count(), 120);
        assert_eq!(trace_count(3, 4, TraceMode::Nme), 6u128.pow(4));

        let all: Vec<_> = enumerate_traces(2, 2, 3, TraceMode::Me).collect();
        assert_eq!(all.len(), 12);
        assert_eq!(all[0].masks(), &[1, 1]);
        assert_eq!(all[1].masks(), &[1, 2]);
        assert_eq!(all[4].masks(), &[1, 1, 1]);
        let mut dedup = all.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), all.len());
    }

    #[test]
    fn validation() {
        let alpha = ab();
        let t = SymbolicTrace::from_masks(vec![0b11]).unwrap();
        assert!(t.validate(&alpha, Some(TraceMode::Nme)).is_ok());
        assert!(t.validate(&alpha, Some(TraceMode::Me)).is_err());
        let t = SymbolicTrace::from_masks(vec![0b100]).unwrap();
        assert!(t.validate(&alpha, None).is_err());
        assert_eq!(
            trace(&alpha, &[&["a"], &["a", "b"]])
                .display(&alpha)
                .to_string(),
            "<{a},{a,b}>"
        );
    }
}
