use super::Implication;
use crate::ltlf::{desugar, Formula};

/// `(phi -> y) & (!phi -> !y)`: the sequence label `y` holds exactly when
/// `phi` does.
///
/// With [`Implication::Material`] the result is fully desugared as
/// `(y | !phi) & (!y | phi)`, with the label literal first in each
/// disjunction. On a tie, refinement therefore raises the label and leaves
/// the trace alone. With [`Implication::Residuum`] the two
/// implications are kept as nodes and `phi` alone is desugared.
pub fn build_knowledge_formula(phi: &Formula, label: &str, implication: Implication) -> Formula {
    let body = desugar(phi);
    let y = Formula::atom(label);
    match implication {
        Implication::Material => Formula::and(
            Formula::or(y.clone(), Formula::not(body.clone())),
            Formula::or(Formula::not(y), body),
        ),
        Implication::Residuum => Formula::and(
            Formula::implies(body.clone(), y.clone()),
            Formula::implies(Formula::not(body), Formula::not(y)),
        ),
    }
}

/// `(phi_1 -> y_1) & ... & (phi_m -> y_m)` for several labelled formulas.
pub fn build_multi_knowledge_formula(
    parts: &[(Formula, String)],
    implication: Implication,
) -> Formula {
    Formula::conjunction(parts.iter().map(|(phi, label)| {
        let body = desugar(phi);
        let y = Formula::atom(label.as_str());
        match implication {
            Implication::Material => Formula::or(y, Formula::not(body)),
            Implication::Residuum => Formula::implies(body, y),
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{evaluate_with, FuzzyTrace, LabelVector};
    use crate::ltlf::{parse_formula, Alphabet};

    #[test]
    fn material_shape() {
        let alpha = Alphabet::new(["a"]).unwrap();
        let phi = parse_formula("F a", &alpha, &[]).unwrap();
        let k = build_knowledge_formula(&phi, "y", Implication::Material);
        let fa = Formula::until(Formula::True, Formula::atom("a"));
        let y = Formula::atom("y");
        assert_eq!(
            k,
            Formula::and(
                Formula::or(y.clone(), Formula::not(fa.clone())),
                Formula::or(Formula::not(y), fa)
            )
        );
        assert!(k.is_core());
    }

    #[test]
    fn trivial_knowledge_equals_label() {
        let alpha = Alphabet::new(["a"]).unwrap();
        let names = vec!["y".to_string()];
        let trace = FuzzyTrace::new(alpha, vec![vec![0.4]]).unwrap();
        for implication in [Implication::Material, Implication::Residuum] {
            let k = build_knowledge_formula(&Formula::True, "y", implication);
            for y in [0.0, 0.3, 1.0] {
                let labels = LabelVector::new(names.clone(), vec![y]).unwrap();
                let v = evaluate_with(&trace, &labels, &k, implication).unwrap();
                assert_eq!(v, y, "{implication}");
            }
        }
    }

    #[test]
    fn multi_label_conjunction() {
        let a = Formula::atom("a");
        let b = Formula::atom("b");
        let k = build_multi_knowledge_formula(
            &[(a.clone(), "y1".into()), (b.clone(), "y2".into())],
            Implication::Residuum,
        );
        assert_eq!(
            k,
            Formula::and(
                Formula::implies(a, Formula::atom("y1")),
                Formula::implies(b, Formula::atom("y2"))
            )
        );
    }
}
