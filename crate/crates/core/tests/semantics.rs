mod common;

use common::{oracle, random_formula, random_positive_formula, random_rows};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tilr_core::ltlf::{desugar_keep_implies, TEMPLATES};
use tilr_core::{
    declare_pattern, desugar, enumerate_traces, evaluate_with, format_formula, parse_formula,
    satisfies, Alphabet, CompiledGraph, Formula, FuzzyTrace, Implication, LabelVector,
    PatternInstance, TraceMode,
};

const IMPLICATIONS: [Implication; 2] = [Implication::Material, Implication::Residuum];

fn library(atoms: &[&str]) -> Vec<Formula> {
    TEMPLATES
        .iter()
        .filter(|(_, arity, _)| *arity <= atoms.len())
        .map(|(name, arity, _)| {
            declare_pattern(&PatternInstance::new(
                *name,
                atoms[..*arity].iter().copied(),
            ))
            .unwrap()
        })
        .collect()
}

fn formula_pool(atoms: &[&str], seed: u64, count: usize) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = library(atoms);
    pool.extend((0..count).map(|_| random_formula(&mut rng, atoms, 4)));
    pool
}

#[test]
fn crisp_evaluator_matches_quantifier_definitions() {
    for atoms in [&["a"][..], &["a", "b"], &["a", "b", "c"]] {
        let alpha = Alphabet::new(atoms.iter().copied()).unwrap();
        let pool = formula_pool(atoms, atoms.len() as u64, 150);
        for mode in [TraceMode::Me, TraceMode::Nme] {
            for trace in enumerate_traces(atoms.len(), 1, 4, mode) {
                for f in &pool {
                    assert_eq!(
                        satisfies(&trace, &alpha, f).unwrap(),
                        oracle(&trace, atoms, 0, f),
                        "{f} on {}",
                        trace.display(&alpha)
                    );
                }
            }
        }
    }
}

#[test]
fn desugaring_preserves_meaning() {
    let atoms = ["a", "b", "c"];
    let alpha = Alphabet::new(atoms).unwrap();
    let pool = formula_pool(&atoms, 11, 200);
    for f in &pool {
        let core = desugar(f);
        assert!(core.is_core(), "{core}");
        let kept = desugar_keep_implies(f);
        for trace in enumerate_traces(3, 1, 4, TraceMode::Nme) {
            let expected = oracle(&trace, &atoms, 0, f);
            assert_eq!(oracle(&trace, &atoms, 0, &core), expected, "{f}");
            assert_eq!(satisfies(&trace, &alpha, &kept).unwrap(), expected, "{f}");
        }
    }
}

#[test]
fn fuzzy_on_crisp_traces_is_crisp() {
    let atoms = ["a", "b", "c"];
    let alpha = Alphabet::new(atoms).unwrap();
    let pool = formula_pool(&atoms, 5, 100);
    let empty = LabelVector::empty();
    for trace in enumerate_traces(3, 1, 4, TraceMode::Nme) {
        let fuzzy = FuzzyTrace::from_symbolic(alpha.clone(), &trace);
        for f in &pool {
            let expected = if oracle(&trace, &atoms, 0, f) {
                1.0
            } else {
                0.0
            };
            for imp in IMPLICATIONS {
                assert_eq!(
                    evaluate_with(&fuzzy, &empty, f, imp).unwrap(),
                    expected,
                    "{f}"
                );
            }
        }
    }
}

#[test]
fn graph_forward_is_bit_exact_with_recursion() {
    let atoms = ["a", "b", "c"];
    let alpha = Alphabet::new(atoms).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let pool = formula_pool(&atoms, 7, 40);
    let empty = LabelVector::empty();
    for f in &pool {
        for n in [1, 2, 3, 7, 20] {
            for imp in IMPLICATIONS {
                let g = CompiledGraph::compile_with(f, n, &alpha, &[], imp).unwrap();
                for _ in 0..3 {
                    let trace =
                        FuzzyTrace::new(alpha.clone(), random_rows(&mut rng, n, 3)).unwrap();
                    let via_graph = g.forward(&trace, &empty).unwrap()[g.output()];
                    let direct = evaluate_with(&trace, &empty, f, imp).unwrap();
                    assert_eq!(via_graph.to_bits(), direct.to_bits(), "{f} n={n} {imp}");
                }
            }
        }
    }
}

#[test]
fn derived_operators_agree_exactly() {
    let atoms = ["a", "b"];
    let alpha = Alphabet::new(atoms).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let empty = LabelVector::empty();
    for _ in 0..300 {
        let f = random_formula(&mut rng, &atoms, 3);
        let g = random_formula(&mut rng, &atoms, 2);
        let n = rand::Rng::gen_range(&mut rng, 1..=8);
        let trace = FuzzyTrace::new(alpha.clone(), random_rows(&mut rng, n, 2)).unwrap();
        let eval = |x: &Formula| evaluate_with(&trace, &empty, x, Implication::Material).unwrap();
        let globally = eval(&Formula::globally(f.clone()));
        assert_eq!(
            globally,
            eval(&Formula::not(Formula::eventually(Formula::not(f.clone()))))
        );
        assert_eq!(globally, eval(&Formula::release(Formula::False, f.clone())));
        assert_eq!(
            eval(&Formula::eventually(f.clone())),
            eval(&Formula::until(Formula::True, f.clone()))
        );
        assert_eq!(
            eval(&Formula::release(g.clone(), f.clone())),
            eval(&Formula::not(Formula::until(
                Formula::not(g.clone()),
                Formula::not(f.clone())
            )))
        );
        assert_eq!(
            eval(&Formula::implies(g.clone(), f.clone())),
            eval(&Formula::or(Formula::not(g), f))
        );
    }
}

#[test]
fn positive_formulas_are_monotone() {
    let atoms = ["a", "b"];
    let alpha = Alphabet::new(atoms).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let empty = LabelVector::empty();
    for _ in 0..500 {
        let f = random_positive_formula(&mut rng, &atoms, 4);
        let n = rand::Rng::gen_range(&mut rng, 1..=6);
        let low = random_rows(&mut rng, n, 2);
        let high: Vec<Vec<f64>> = low
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&v| v + rand::Rng::gen::<f64>(&mut rng) * (1.0 - v))
                    .collect()
            })
            .collect();
        let lo = FuzzyTrace::new(alpha.clone(), low).unwrap();
        let hi = FuzzyTrace::new(alpha.clone(), high).unwrap();
        let a = evaluate_with(&lo, &empty, &f, Implication::Material).unwrap();
        let b = evaluate_with(&hi, &empty, &f, Implication::Material).unwrap();
        assert!(a <= b + 1e-12, "{f}: {a} > {b}");
    }
}

#[test]
fn values_stay_in_unit_interval() {
    let atoms = ["a", "b", "c"];
    let alpha = Alphabet::new(atoms).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let empty = LabelVector::empty();
    for _ in 0..300 {
        let f = random_formula(&mut rng, &atoms, 4);
        let n = rand::Rng::gen_range(&mut rng, 1..=10);
        let trace = FuzzyTrace::new(alpha.clone(), random_rows(&mut rng, n, 3)).unwrap();
        for imp in IMPLICATIONS {
            let v = evaluate_with(&trace, &empty, &f, imp).unwrap();
            assert!((0.0..=1.0).contains(&v), "{f}: {v}");
        }
    }
}

fn arb_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        prop::sample::select(vec!["a", "b", "c", "y"]).prop_map(Formula::atom),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::globally),
            inner.clone().prop_map(Formula::eventually),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::until(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::release(a, b)),
        ]
    })
}

proptest! {
    #[test]
    fn format_then_parse_round_trips(f in arb_formula()) {
        let alpha = Alphabet::new(["a", "b", "c"]).unwrap();
        let text = format_formula(&f);
        let back = parse_formula(&text, &alpha, &["y".to_string()]).unwrap();
        prop_assert_eq!(back, f, "{}", text);
    }

    #[test]
    fn parser_never_panics(text in "[abcyGFXUR!&|()<>\\[\\]\\- ]{0,24}") {
        let alpha = Alphabet::new(["a", "b", "c"]).unwrap();
        let _ = parse_formula(&text, &alpha, &["y".to_string()]);
    }
}
