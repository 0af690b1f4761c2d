use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::formula::{Alphabet, Formula};
use super::parse::parse_formula;
use crate::error::{Error, Result};

/// DECLARE templates as `(name, arity, body)`. Bodies are written over the
/// placeholder atoms `a` (first bound atom) and `b` (second). Where the
/// textbook encoding uses weak next, it is spelled `!X !f`.
pub const TEMPLATES: &[(&str, usize, &str)] = &[
    ("existence", 1, "F a"),
    ("absence", 1, "!F a"),
    ("absence2", 1, "!F(a & X F a)"),
    ("exactly1", 1, "F a & !F(a & X F a)"),
    ("init", 1, "a"),
    ("end", 1, "F(a & !X true)"),
    ("responded_existence", 2, "F a -> F b"),
    ("co_existence", 2, "(F a -> F b) & (F b -> F a)"),
    ("response", 2, "G(a -> F b)"),
    ("precedence", 2, "(!b U a) | G !b"),
    ("succession", 2, "G(a -> F b) & ((!b U a) | G !b)"),
    ("alternate_response", 2, "G(a -> X(!a U b))"),
    (
        "alternate_precedence",
        2,
        "((!b U a) | G !b) & G(b -> !X !((!b U a) | G !b))",
    ),
    ("chain_response", 2, "G(a -> X b)"),
    ("chain_precedence", 2, "G(X b -> a)"),
    ("not_co_existence", 2, "!(F a & F b)"),
    ("not_succession", 2, "G(a -> !F b)"),
    ("not_chain_succession", 2, "G(a -> !X b)"),
    ("choice", 2, "F a | F b"),
    ("exclusive_choice", 2, "(F a | F b) & !(F a & F b)"),
];

/// Names of the two-atom templates, the pool the conjunction sampler draws from.
pub const BINARY_TEMPLATES: &[&str] = &[
    "responded_existence",
    "co_existence",
    "response",
    "precedence",
    "succession",
    "alternate_response",
    "alternate_precedence",
    "chain_response",
    "chain_precedence",
    "not_co_existence",
    "not_succession",
    "not_chain_succession",
    "choice",
    "exclusive_choice",
];

/// A template name together with the atoms bound to its placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PatternInstance {
    pub template: String,
    pub atoms: Vec<String>,
}

impl PatternInstance {
    pub fn new<S: Into<String>>(
        template: impl Into<String>,
        atoms: impl IntoIterator<Item = S>,
    ) -> Self {
        PatternInstance {
            template: template.into(),
            atoms: atoms.into_iter().map(Into::into).collect(),
        }
    }
}

impl std::fmt::Display for PatternInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({})", self.template, self.atoms.join(","))
    }
}

/// Parses `template(a)` or `template(a,b)`, with optional spaces.
impl std::str::FromStr for PatternInstance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let syntax = |position: usize, expected: &str| Error::Syntax {
            position,
            expected: expected.into(),
            found: s
                .get(position..)
                .unwrap_or("")
                .chars()
                .next()
                .map_or("end of input".into(), |c| format!("`{c}`")),
        };
        let open = s.find('(').ok_or_else(|| syntax(s.len(), "`(`"))?;
        let inner = s[open + 1..].trim_end();
        let inner = inner
            .strip_suffix(')')
            .ok_or_else(|| syntax(s.trim_end().len(), "`)`"))?;
        let template = s[..open].trim();
        if template.is_empty() {
            return Err(syntax(0, "template name"));
        }
        let atoms: Vec<&str> = inner.split(',').map(str::trim).collect();
        if atoms.iter().any(|a| a.is_empty()) {
            return Err(syntax(open + 1, "atom name"));
        }
        Ok(PatternInstance::new(template, atoms))
    }
}

pub fn template_arity(name: &str) -> Option<usize> {
    TEMPLATES
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, arity, _)| *arity)
}

/// Instantiate a DECLARE template over its bound atoms.
pub fn declare_pattern(instance: &PatternInstance) -> Result<Formula> {
    let (_, arity, body) = TEMPLATES
        .iter()
        .find(|(n, _, _)| *n == instance.template)
        .ok_or_else(|| Error::UnknownTemplate(instance.template.clone()))?;
    if instance.atoms.len() != *arity {
        return Err(Error::Arity {
            template: instance.template.clone(),
            expected: *arity,
            got: instance.atoms.len(),
        });
    }
    for name in &instance.atoms {
        super::formula::check_atom_name(name)?;
    }
    let placeholders = Alphabet::new(["a", "b"]).expect("static alphabet");
    let generic = parse_formula(body, &placeholders, &[]).expect("template bodies parse");
    let binding: HashMap<&str, &str> = ["a", "b"]
        .into_iter()
        .zip(instance.atoms.iter().map(String::as_str))
        .collect();
    Ok(rename(&generic, &binding))
}

fn rename(f: &Formula, binding: &HashMap<&str, &str>) -> Formula {
    use Formula::*;
    let go = |g: &Formula| Box::new(rename(g, binding));
    match f {
        Atom(name) => Atom(binding[name.as_str()].to_string()),
        True => True,
        False => False,
        Not(g) => Not(go(g)),
        Next(g) => Next(go(g)),
        Globally(g) => Globally(go(g)),
        Eventually(g) => Eventually(go(g)),
        And(a, b) => And(go(a), go(b)),
        Or(a, b) => Or(go(a), go(b)),
        Implies(a, b) => Implies(go(a), go(b)),
        Until(a, b) => Until(go(a), go(b)),
        Release(a, b) => Release(go(a), go(b)),
    }
}

/// Sample the patterns of a conjunction formula: one two-atom template per
/// consecutive atom pair `(p1,p2), (p2,p3), ...` of the alphabet.
pub fn sample_conjunction_patterns(alphabet: &Alphabet, seed: u64) -> Result<Vec<PatternInstance>> {
    if alphabet.len() < 2 {
        return Err(Error::InvalidAlphabet(
            "conjunction sampling needs at least two atoms".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(alphabet
        .atoms()
        .windows(2)
        .map(|pair| {
            let template = BINARY_TEMPLATES.choose(&mut rng).expect("non-empty pool");
            PatternInstance::new(*template, pair.iter().cloned())
        })
        .collect())
}

/// For two atoms a single sampled pattern; for `k > 2` atoms the conjunction
/// of `k - 1` patterns over overlapping atom pairs.
pub fn sample_conjunction_formula(alphabet: &Alphabet, seed: u64) -> Result<Formula> {
    let parts = sample_conjunction_patterns(alphabet, seed)?
        .iter()
        .map(declare_pattern)
        .collect::<Result<Vec<_>>>()?;
    Ok(Formula::conjunction(parts))
}
