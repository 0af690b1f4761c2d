use std::collections::BTreeSet;
use std::fmt;

use super::KEYWORDS;
use crate::error::{Error, Result};

/// Ordered set of propositional atoms. The order fixes the column index of
/// each atom in every trace matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    atoms: Vec<String>,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Alphabet {
    pub fn new<I, S>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let atoms: Vec<String> = atoms.into_iter().map(Into::into).collect();
        if atoms.is_empty() {
            return Err(Error::InvalidAlphabet(
                "at least one atom is required".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for name in &atoms {
            check_atom_name(name)?;
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidAlphabet(format!("duplicate atom `{name}`")));
            }
        }
        Ok(Alphabet { atoms })
    }

    /// `p0, p1, ..., p{k-1}`; atom `pj` stands for MNIST digit `j`.
    pub fn numbered(k: usize) -> Result<Self> {
        Alphabet::new((0..k).map(|j| format!("p{j}")))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn name(&self, index: usize) -> &str {
        &self.atoms[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }
}

pub(crate) fn check_atom_name(name: &str) -> Result<()> {
    if !valid_name(name) {
        return Err(Error::InvalidAlphabet(format!(
            "`{name}` is not a valid atom name"
        )));
    }
    if KEYWORDS.contains(&name) {
        return Err(Error::InvalidAlphabet(format!(
            "`{name}` is a reserved word"
        )));
    }
    Ok(())
}

/// LTLf abstract syntax tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(String),
    True,
    False,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Globally(Box<Formula>),
    Eventually(Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Self {
        Formula::Release(Box::new(a), Box::new(b))
    }

    pub fn globally(f: Formula) -> Self {
        Formula::Globally(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    /// Left-nested conjunction of `parts`; `True` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::True)
    }

    /// Direct subformulas, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            Atom(_) | True | False => vec![],
            Not(f) | Next(f) | Globally(f) | Eventually(f) => vec![f],
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => vec![a, b],
        }
    }

    /// Distinct atom names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            if let Formula::Atom(name) = f {
                out.insert(name.as_str());
            }
            stack.extend(f.children());
        }
        out
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Formula::size)
            .sum::<usize>()
    }

    /// True when only `Atom, True, False, Not, And, Or, Next, Until` occur.
    pub fn is_core(&self) -> bool {
        use Formula::*;
        match self {
            Implies(..) | Release(..) | Globally(_) | Eventually(_) => false,
            _ => self.children().into_iter().all(Formula::is_core),
        }
    }

    fn is_binary(&self) -> bool {
        matches!(
            self,
            Formula::And(..)
                | Formula::Or(..)
                | Formula::Implies(..)
                | Formula::Until(..)
                | Formula::Release(..)
        )
    }
}

/// Rewrite derived operators into `Not/And/Or/Next/Until`.
///
/// `F f = true U f`, `G f = !(true U !f)`, `a R b = !(!a U !b)` and
/// `a -> b = !a | b`.
pub fn desugar(f: &Formula) -> Formula {
    rewrite(f, false)
}

/// Like [`desugar`] but leaves `Implies` nodes in place, for semantics that
/// interpret implication as something other than `!a | b`.
pub fn desugar_keep_implies(f: &Formula) -> Formula {
    rewrite(f, true)
}

fn rewrite(f: &Formula, keep_implies: bool) -> Formula {
    use Formula::*;
    let go = |g: &Formula| rewrite(g, keep_implies);
    match f {
        Atom(_) | True | False => f.clone(),
        Not(g) => Formula::not(go(g)),
        And(a, b) => Formula::and(go(a), go(b)),
        Or(a, b) => Formula::or(go(a), go(b)),
        Implies(a, b) if keep_implies => Formula::implies(go(a), go(b)),
        Implies(a, b) => Formula::or(Formula::not(go(a)), go(b)),
        Next(g) => Formula::next(go(g)),
        Until(a, b) => Formula::until(go(a), go(b)),
        Release(a, b) => Formula::not(Formula::until(Formula::not(go(a)), Formula::not(go(b)))),
        Globally(g) => Formula::not(Formula::until(True, Formula::not(go(g)))),
        Eventually(g) => Formula::until(True, go(g)),
    }
}

/// Print a formula in the surface syntax. Binary operands that are
/// themselves binary are always parenthesized, so the output re-parses to
/// the same tree regardless of precedence.
pub fn format_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out);
    out
}

fn write_operand(f: &Formula, out: &mut String) {
    if f.is_binary() {
        out.push('(');
        write_formula(f, out);
        out.push(')');
    } else {
        write_formula(f, out);
    }
}

fn write_formula(f: &Formula, out: &mut String) {
    use Formula::*;
    match f {
        Atom(name) => out.push_str(name),
        True => out.push_str("true"),
        False => out.push_str("false"),
        Not(g) => {
            out.push('!');
            write_operand(g, out);
        }
        Next(g) | Globally(g) | Eventually(g) => {
            out.push_str(match f {
                Next(_) => "X(",
                Globally(_) => "G(",
                _ => "F(",
            });
            write_formula(g, out);
            out.push(')');
        }
        And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => {
            let op = match f {
                And(..) => " & ",
                Or(..) => " | ",
                Implies(..) => " -> ",
                Until(..) => " U ",
                _ => " R ",
            };
            write_operand(a, out);
            out.push_str(op);
            write_operand(b, out);
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_formula(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Formula {
        Formula::atom("a")
    }
    fn b() -> Formula {
        Formula::atom("b")
    }
    fn c() -> Formula {
        Formula::atom("c")
    }

    #[test]
    fn alphabet_validation() {
        assert!(Alphabet::new(["a", "b_1", "_x"]).is_ok());
        assert!(Alphabet::new(Vec::<String>::new()).is_err());
        assert!(Alphabet::new(["a", "a"]).is_err());
        assert!(Alphabet::new(["1a"]).is_err());
        assert!(Alphabet::new(["G"]).is_err());
        assert!(Alphabet::new(["a-b"]).is_err());
        let p = Alphabet::numbered(3).unwrap();
        assert_eq!(p.atoms(), ["p0", "p1", "p2"]);
        assert_eq!(p.index_of("p2"), Some(2));
    }

    #[test]
    fn format_examples() {
        assert_eq!(format_formula(&Formula::globally(a())), "G(a)");
        assert_eq!(
            format_formula(&Formula::or(a(), Formula::and(b(), c()))),
            "a | (b & c)"
        );
        assert_eq!(
            format_formula(&Formula::until(a(), Formula::until(b(), c()))),
            "a U (b U c)"
        );
        assert_eq!(
            format_formula(&Formula::not(Formula::and(a(), b()))),
            "!(a & b)"
        );
        assert_eq!(format_formula(&Formula::not(Formula::next(a()))), "!X(a)");
    }

    #[test]
    fn desugar_examples() {
        assert_eq!(
            desugar(&Formula::eventually(a())),
            Formula::until(Formula::True, a())
        );
        assert_eq!(
            desugar(&Formula::globally(a())),
            Formula::not(Formula::until(Formula::True, Formula::not(a())))
        );
        assert_eq!(desugar(&a()), a());
        assert_eq!(
            desugar(&Formula::implies(a(), b())),
            Formula::or(Formula::not(a()), b())
        );
        assert_eq!(
            desugar_keep_implies(&Formula::implies(a(), Formula::eventually(b()))),
            Formula::implies(a(), Formula::until(Formula::True, b()))
        );
        let r = desugar(&Formula::release(a(), b()));
        assert_eq!(
            r,
            Formula::not(Formula::until(Formula::not(a()), Formula::not(b())))
        );
        assert!(r.is_core());
        assert!(!Formula::globally(a()).is_core());
    }

    #[test]
    fn atoms_and_size() {
        let f = Formula::globally(Formula::implies(a(), Formula::next(b())));
        assert_eq!(f.atoms().into_iter().collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(f.size(), 5);
        assert_eq!(Formula::conjunction(vec![]), Formula::True);
    }
}
