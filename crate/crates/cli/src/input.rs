//! Formula, label and trace inputs shared by the subcommands.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use tilr_core::ltlf::KEYWORDS;
use tilr_core::{declare_pattern, parse_formula, Alphabet, Formula, FuzzyTrace, PatternInstance};

use crate::FormulaArgs;

/// Identifiers of `text` that are not keywords, in sorted order.
pub fn identifiers(text: &str) -> Vec<String> {
    let mut out = BTreeSet::new();
    let mut word = String::new();
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_alphanumeric() || c == '_' {
            word.push(c);
        } else if !word.is_empty() {
            let w = std::mem::take(&mut word);
            let starts_ok = w.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_');
            if starts_ok && !KEYWORDS.contains(&w.as_str()) {
                out.insert(w);
            }
        }
    }
    out.into_iter().collect()
}

impl FormulaArgs {
    /// Atoms the formula mentions, minus `labels`.
    pub fn atoms(&self, labels: &[String]) -> Result<Vec<String>> {
        let atoms = match (&self.formula, &self.pattern) {
            (Some(text), _) => identifiers(text),
            (None, Some(p)) => p.parse::<PatternInstance>()?.atoms,
            (None, None) => bail!("give --formula or --pattern"),
        };
        Ok(atoms.into_iter().filter(|a| !labels.contains(a)).collect())
    }

    pub fn resolve(&self, alphabet: &Alphabet, labels: &[String]) -> Result<(String, Formula)> {
        match (&self.formula, &self.pattern) {
            (Some(text), _) => {
                let f = parse_formula(text, alphabet, labels)
                    .with_context(|| format!("parsing `{text}`"))?;
                Ok((text.clone(), f))
            }
            (None, Some(p)) => {
                let pattern: PatternInstance = p.parse()?;
                let f = declare_pattern(&pattern)?;
                if let Some(a) = pattern.atoms.iter().find(|a| !alphabet.contains(a)) {
                    return Err(tilr_core::Error::UnknownAtom(a.clone()).into());
                }
                Ok((pattern.to_string(), f))
            }
            (None, None) => bail!("give --formula or --pattern"),
        }
    }
}

/// Formula text or a DECLARE pattern such as `response(p0,p1)`.
pub fn formula_or_pattern(text: &str, alphabet: &Alphabet) -> Result<Formula> {
    if let Ok(pattern) = text.parse::<PatternInstance>() {
        if tilr_core::ltlf::template_arity(&pattern.template).is_some() {
            return Ok(declare_pattern(&pattern)?);
        }
    }
    parse_formula(text, alphabet, &[]).with_context(|| format!("parsing `{text}`"))
}

/// `name=value` pairs.
pub fn parse_labels(pairs: &[String]) -> Result<(Vec<String>, Vec<f64>)> {
    let mut names = Vec::new();
    let mut values = Vec::new();
    for pair in pairs {
        let (name, value) = pair
            .split_once('=')
            .with_context(|| format!("label `{pair}` is not of the form name=value"))?;
        let name = name.trim().to_string();
        if names.contains(&name) {
            bail!("label `{name}` given twice");
        }
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("label `{name}` has a non-numeric value"))?;
        names.push(name);
        values.push(value);
    }
    Ok((names, values))
}

/// A fuzzy trace from CSV: a header of atom names, then one row per instant.
pub fn read_trace(path: &Path) -> Result<FuzzyTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let alphabet = Alphabet::new(header.iter().cloned())
        .with_context(|| format!("header of {}", path.display()))?;
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), k + 1))?;
        let row = record
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| {
                format!("{}: row {} has a non-numeric value", path.display(), k + 1)
            })?;
        rows.push(row);
    }
    FuzzyTrace::new(Arc::new(alphabet), rows)
        .with_context(|| format!("trace in {}", path.display()))
}

pub fn write_trace(out: impl Write, trace: &FuzzyTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace.alphabet().atoms())?;
    for i in 0..trace.len() {
        w.write_record(trace.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// `--atoms`: a count of numbered atoms or a comma-separated list of names.
pub fn alphabet_arg(arg: &str) -> Result<Alphabet> {
    Ok(match arg.trim().parse::<usize>() {
        Ok(n) => Alphabet::numbered(n)?,
        Err(_) => Alphabet::new(arg.split(',').map(|s| s.trim().to_string()))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_skip_keywords() {
        assert_eq!(
            identifiers("G(p0 -> X q_1) & F true | a U b"),
            vec!["a", "b", "p0", "q_1"]
        );
        assert_eq!(identifiers("[]<>x"), vec!["x"]);
    }

    #[test]
    fn labels() {
        let (n, v) = parse_labels(&["y=0.5".into(), " z = 1".into()]).unwrap();
        assert_eq!(
            (n, v),
            (vec!["y".to_string(), "z".to_string()], vec![0.5, 1.0])
        );
        assert!(parse_labels(&["y".into()]).is_err());
        assert!(parse_labels(&["y=a".into()]).is_err());
        assert!(parse_labels(&["y=1".into(), "y=0".into()]).is_err());
    }

    #[test]
    fn alphabets() {
        assert_eq!(alphabet_arg("3").unwrap().atoms(), ["p0", "p1", "p2"]);
        assert_eq!(alphabet_arg("a, b").unwrap().atoms(), ["a", "b"]);
        assert!(alphabet_arg("G").is_err());
    }

    #[test]
    fn pattern_or_text() {
        let a = Alphabet::numbered(2).unwrap();
        let p = formula_or_pattern("response(p0,p1)", &a).unwrap();
        let f = formula_or_pattern("G(p0 -> F p1)", &a).unwrap();
        assert_eq!(p, f);
        assert!(formula_or_pattern("nonsense(p0)", &a).is_err());
    }
}
