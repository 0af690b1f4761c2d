//! Iterative local refinement over a compiled graph.
//!
//! Each iteration runs a forward pass, then pushes the target truth value
//! from the output node down to the leaves using the minimal refinement
//! function of every connective on the way. A leaf that receives several
//! proposals takes their (multiplicity weighted) mean, clamped to `[0, 1]`.
//! Children that a rule leaves unchanged receive no proposal, and a target
//! equal to a node's current value is not propagated.
//!
//! The loop is generic over [`RefineValue`] so the same code runs on plain
//! `f64` and on [`Tracked`] values, which carry the exact local derivative
//! of every refined value with respect to the input leaves.

use crate::error::{Error, Result};
use crate::fuzzy::{CompiledGraph, FuzzyTrace, GraphValue, LabelVector, Leaf, Node};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementConfig {
    pub target: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            target: 1.0,
            max_iterations: 10,
            tolerance: 1e-6,
        }
    }
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.target) {
            return Err(Error::InvalidConfig(format!(
                "target {} is outside [0, 1]",
                self.target
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementResult {
    pub trace: FuzzyTrace,
    pub labels: LabelVector,
    /// Formula value after the last refinement.
    pub value: f64,
    /// Backward passes performed; 0 when the input already met the target.
    pub iterations: usize,
    pub converged: bool,
}

/// Crisp labels from refined label values, `y >= threshold` meaning true.
pub fn predict(result: &RefinementResult, threshold: f64) -> Vec<bool> {
    result
        .labels
        .values()
        .iter()
        .map(|&y| y >= threshold)
        .collect()
}

/// The connective a node applies; leaves have no refinement function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connective {
    Const,
    Neg,
    Min,
    Max,
    Residuum,
}

impl Connective {
    pub fn of(node: &Node) -> Option<Connective> {
        match node {
            Node::Prop { .. } | Node::Label(_) => None,
            Node::Const(_) => Some(Connective::Const),
            Node::Neg(_) => Some(Connective::Neg),
            Node::Min(_) => Some(Connective::Min),
            Node::Max(_) => Some(Connective::Max),
            Node::Residuum(..) => Some(Connective::Residuum),
        }
    }

    pub fn apply(self, children: &[f64]) -> f64 {
        match self {
            Connective::Const => f64::NAN,
            Connective::Neg => 1.0 - children[0],
            Connective::Min => children
                .iter()
                .copied()
                .fold(f64::INFINITY, crate::fuzzy::zmin),
            Connective::Max => children
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, crate::fuzzy::zmax),
            Connective::Residuum => crate::fuzzy::residuum(children[0], children[1]),
        }
    }
}

/// Values the refinement loop can run on.
pub trait RefineValue: GraphValue {
    /// Weighted mean of `(value, weight)` pairs; weights are positive.
    fn mean(items: &[(Self, f64)]) -> Self;
    /// Clamp into `[0, 1]`; a clamped value no longer depends on the inputs.
    fn clamp_unit(self) -> Self;
    /// Identity used to merge repeated proposals.
    fn same(&self, other: &Self) -> bool;
}

impl RefineValue for f64 {
    fn mean(items: &[(Self, f64)]) -> Self {
        let total: f64 = items.iter().map(|(_, w)| w).sum();
        items.iter().map(|(v, w)| v * w).sum::<f64>() / total
    }

    fn clamp_unit(self) -> Self {
        self.clamp(0.0, 1.0)
    }

    fn same(&self, other: &Self) -> bool {
        self.to_bits() == other.to_bits()
    }
}

/// A value together with its derivative with respect to the refinement
/// inputs. Input `i * |P| + j` is atom `j` at instant `i`; input
/// `n * |P| + k` is label `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracked {
    pub value: f64,
    /// Sparse `(input, coefficient)` pairs sorted by input.
    pub grad: Vec<(u32, f64)>,
}

impl Tracked {
    pub fn input(index: u32, value: f64) -> Self {
        Tracked {
            value,
            grad: vec![(index, 1.0)],
        }
    }
}

impl GraphValue for Tracked {
    fn value(&self) -> f64 {
        self.value
    }

    fn constant(v: f64) -> Self {
        Tracked {
            value: v,
            grad: Vec::new(),
        }
    }

    fn one_minus(&self) -> Self {
        Tracked {
            value: 1.0 - self.value,
            grad: self.grad.iter().map(|&(i, c)| (i, -c)).collect(),
        }
    }
}

impl RefineValue for Tracked {
    fn mean(items: &[(Self, f64)]) -> Self {
        let total: f64 = items.iter().map(|(_, w)| w).sum();
        let value = items.iter().map(|(v, w)| v.value * w).sum::<f64>() / total;
        let mut grad: Vec<(u32, f64)> = items
            .iter()
            .flat_map(|(v, w)| v.grad.iter().map(move |&(i, c)| (i, c * w / total)))
            .collect();
        grad.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(grad.len());
        for (i, c) in grad {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        Tracked {
            value,
            grad: merged,
        }
    }

    fn clamp_unit(self) -> Self {
        if self.value < 0.0 {
            Tracked::constant(0.0)
        } else if self.value > 1.0 {
            Tracked::constant(1.0)
        } else {
            self
        }
    }

    fn same(&self, other: &Self) -> bool {
        self.value.to_bits() == other.value.to_bits() && self.grad == other.grad
    }
}

#[derive(Debug, Clone)]
enum Proposal<V> {
    Keep,
    Set(V),
}

/// Minimal refinement of one connective: the per-child targets that bring
/// the node from `current` to `target`.
fn refine_generic<V: RefineValue>(
    kind: Connective,
    children: &[&V],
    current: f64,
    target: &V,
) -> Vec<Proposal<V>> {
    let t = target.value();
    let set = || Proposal::Set(target.clone());
    match kind {
        Connective::Const => children.iter().map(|_| Proposal::Keep).collect(),
        Connective::Neg => vec![Proposal::Set(target.one_minus())],
        Connective::Min if t >= current => children
            .iter()
            .map(|c| if c.value() < t { set() } else { Proposal::Keep })
            .collect(),
        Connective::Min => {
            let pick = argselect(children, true);
            (0..children.len())
                .map(|k| if k == pick { set() } else { Proposal::Keep })
                .collect()
        }
        Connective::Max if t > current => {
            let pick = argselect(children, false);
            (0..children.len())
                .map(|k| if k == pick { set() } else { Proposal::Keep })
                .collect()
        }
        Connective::Max => children
            .iter()
            .map(|c| if c.value() > t { set() } else { Proposal::Keep })
            .collect(),
        Connective::Residuum => {
            let (a, b) = (children[0], children[1]);
            if t >= 1.0 {
                // raise the consequent to the antecedent
                if a.value() > b.value() {
                    vec![Proposal::Keep, Proposal::Set(a.clone())]
                } else {
                    vec![Proposal::Keep, Proposal::Keep]
                }
            } else {
                let lift = if a.value() <= t {
                    Proposal::Set(V::constant(1.0))
                } else {
                    Proposal::Keep
                };
                let lower = if b.value() == t {
                    Proposal::Keep
                } else {
                    set()
                };
                vec![lift, lower]
            }
        }
    }
}

fn argselect<V: GraphValue>(children: &[&V], minimum: bool) -> usize {
    let mut best = 0;
    for (k, c) in children.iter().enumerate().skip(1) {
        let (v, b) = (c.value(), children[best].value());
        if (minimum && v < b) || (!minimum && v > b) {
            best = k;
        }
    }
    best
}

/// Per-child targets for one connective. Children the rule leaves alone
/// get their current value back; `Const` nodes cannot be refined and return
/// no targets.
pub fn refine_node(kind: Connective, children: &[f64], current: f64, target: f64) -> Vec<f64> {
    if kind == Connective::Const {
        return Vec::new();
    }
    let refs: Vec<&f64> = children.iter().collect();
    refine_generic(kind, &refs, current, &target)
        .into_iter()
        .zip(children)
        .map(|(p, &c)| match p {
            Proposal::Keep => c,
            Proposal::Set(v) => v,
        })
        .collect()
}

fn push_target<V: RefineValue>(list: &mut Vec<(V, f64)>, value: V, weight: f64) {
    if let Some(entry) = list.iter_mut().find(|(v, _)| v.same(&value)) {
        entry.1 += weight;
    } else {
        list.push((value, weight));
    }
}

/// Output of the generic loop: refined leaves, value and iteration count.
#[derive(Debug, Clone)]
pub struct Refined<V> {
    /// Refined atom degrees, row-major `n x |P|`.
    pub props: Vec<V>,
    /// Refined labels in the graph's label order.
    pub labels: Vec<V>,
    pub value: V,
    pub iterations: usize,
    pub converged: bool,
}

/// Run refinement on arbitrary [`RefineValue`] leaves.
pub fn refine_values<V: RefineValue>(
    graph: &CompiledGraph,
    mut props: Vec<V>,
    mut labels: Vec<V>,
    cfg: &RefinementConfig,
) -> Result<Refined<V>> {
    cfg.validate()?;
    let width = graph.alphabet().len();
    if props.len() != graph.trace_len() * width {
        return Err(Error::InvalidTrace(format!(
            "expected {} atom values, got {}",
            graph.trace_len() * width,
            props.len()
        )));
    }
    if labels.len() != graph.labels().len() {
        return Err(Error::MissingLeaf(format!(
            "expected {} label values, got {}",
            graph.labels().len(),
            labels.len()
        )));
    }
    let target = V::constant(cfg.target);
    let out = graph.output();
    let mut iterations = 0;
    loop {
        let vals = graph.forward_with(|leaf| match leaf {
            Leaf::Prop { instant, atom } => props[instant * width + atom].clone(),
            Leaf::Label(k) => labels[k].clone(),
        });
        let value = vals[out].clone();
        let converged = (value.value() - cfg.target).abs() <= cfg.tolerance;
        if converged || iterations == cfg.max_iterations {
            return Ok(Refined {
                props,
                labels,
                value,
                iterations,
                converged,
            });
        }

        let mut targets: Vec<Vec<(V, f64)>> = vec![Vec::new(); out + 1];
        targets[out].push((target.clone(), 1.0));
        let mut prop_props: Vec<Vec<(V, f64)>> = vec![Vec::new(); props.len()];
        let mut label_props: Vec<Vec<(V, f64)>> = vec![Vec::new(); labels.len()];
        for id in (0..=out).rev() {
            let incoming = std::mem::take(&mut targets[id]);
            if incoming.is_empty() {
                continue;
            }
            let current = vals[id].value();
            let node = graph.node(id);
            for (tv, weight) in incoming {
                if tv.value() == current {
                    continue;
                }
                match node {
                    Node::Prop { instant, atom } => {
                        push_target(&mut prop_props[instant * width + atom], tv, weight)
                    }
                    Node::Label(k) => push_target(&mut label_props[*k], tv, weight),
                    Node::Const(_) => {}
                    Node::Neg(c) => push_target(&mut targets[*c], tv.one_minus(), weight),
                    Node::Min(cs) | Node::Max(cs) => {
                        let children: Vec<&V> = cs.iter().map(|&c| &vals[c]).collect();
                        let kind = Connective::of(node).expect("connective");
                        for (&c, p) in cs.iter().zip(refine_generic(kind, &children, current, &tv))
                        {
                            if let Proposal::Set(v) = p {
                                push_target(&mut targets[c], v, weight);
                            }
                        }
                    }
                    Node::Residuum(a, b) => {
                        let children = [&vals[*a], &vals[*b]];
                        let proposals =
                            refine_generic(Connective::Residuum, &children, current, &tv);
                        for (&c, p) in [a, b].into_iter().zip(proposals) {
                            if let Proposal::Set(v) = p {
                                push_target(&mut targets[c], v, weight);
                            }
                        }
                    }
                }
            }
        }
        for (leaf, proposals) in props.iter_mut().zip(&prop_props) {
            if !proposals.is_empty() {
                *leaf = V::mean(proposals).clamp_unit();
            }
        }
        for (leaf, proposals) in labels.iter_mut().zip(&label_props) {
            if !proposals.is_empty() {
                *leaf = V::mean(proposals).clamp_unit();
            }
        }
        iterations += 1;
    }
}

/// Refine a fuzzy trace and label vector towards `cfg.target`.
pub fn ilr_refine(
    graph: &CompiledGraph,
    trace: &FuzzyTrace,
    labels: &LabelVector,
    cfg: &RefinementConfig,
) -> Result<RefinementResult> {
    graph.check_trace(trace)?;
    let slots = graph.label_slots(labels)?;
    let graph_labels: Vec<f64> = slots.iter().map(|&s| labels.values()[s]).collect();
    let refined = refine_values(graph, trace.as_flat().to_vec(), graph_labels, cfg)?;
    let mut label_values = labels.values().to_vec();
    for (k, &s) in slots.iter().enumerate() {
        label_values[s] = refined.labels[k];
    }
    Ok(RefinementResult {
        trace: FuzzyTrace::from_flat(trace.shared_alphabet(), refined.props)?,
        labels: LabelVector::new(labels.names().to_vec(), label_values)?,
        value: refined.value,
        iterations: refined.iterations,
        converged: refined.converged,
    })
}

/// Refinement with derivatives: `props` is the row-major atom matrix and
/// `labels` follows the graph's label order.
pub fn ilr_refine_tracked(
    graph: &CompiledGraph,
    props: &[f64],
    labels: &[f64],
    cfg: &RefinementConfig,
) -> Result<Refined<Tracked>> {
    let n_props = props.len() as u32;
    let props = props
        .iter()
        .enumerate()
        .map(|(i, &v)| Tracked::input(i as u32, v))
        .collect();
    let labels = labels
        .iter()
        .enumerate()
        .map(|(k, &v)| Tracked::input(n_props + k as u32, v))
        .collect();
    refine_values(graph, props, labels, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{build_knowledge_formula, Implication};
    use crate::ltlf::{parse_formula, Alphabet, Formula};

    #[test]
    fn refine_node_examples() {
        assert_eq!(
            refine_node(Connective::Min, &[0.3, 0.8], 0.3, 1.0),
            vec![1.0, 1.0]
        );
        assert_eq!(
            refine_node(Connective::Max, &[0.3, 0.8], 0.8, 1.0),
            vec![0.3, 1.0]
        );
        assert_eq!(refine_node(Connective::Neg, &[0.4], 0.6, 1.0), vec![0.0]);
        assert_eq!(
            refine_node(Connective::Min, &[0.3, 0.8], 0.3, 0.1),
            vec![0.1, 0.8]
        );
        assert_eq!(
            refine_node(Connective::Max, &[0.3, 0.8, 0.5], 0.8, 0.4),
            vec![0.3, 0.4, 0.4]
        );
        assert!(refine_node(Connective::Const, &[], 1.0, 0.0).is_empty());
    }

    #[test]
    fn ties_pick_leftmost() {
        assert_eq!(
            refine_node(Connective::Max, &[0.5, 0.5], 0.5, 1.0),
            vec![1.0, 0.5]
        );
        assert_eq!(
            refine_node(Connective::Min, &[0.5, 0.5], 0.5, 0.2),
            vec![0.2, 0.5]
        );
    }

    #[test]
    fn residuum_rules() {
        // a -> b with a > b: raise the consequent to the antecedent
        assert_eq!(
            refine_node(Connective::Residuum, &[0.7, 0.2], 0.2, 1.0),
            vec![0.7, 0.7]
        );
        for (a, b, t) in [
            (0.7, 0.2, 0.5),
            (0.3, 0.9, 0.5),
            (0.3, 0.2, 0.6),
            (0.9, 0.95, 0.1),
        ] {
            let current = Connective::Residuum.apply(&[a, b]);
            let out = refine_node(Connective::Residuum, &[a, b], current, t);
            assert_eq!(Connective::Residuum.apply(&out), t, "{a} {b} {t}");
        }
    }

    #[test]
    fn local_exactness_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let k = rng.gen_range(1..=4);
            let children: Vec<f64> = (0..k).map(|_| rng.gen()).collect();
            let t: f64 = rng.gen();
            for kind in [Connective::Min, Connective::Max] {
                let current = kind.apply(&children);
                let out = refine_node(kind, &children, current, t);
                assert_eq!(kind.apply(&out), t);
            }
            let out = refine_node(Connective::Neg, &children[..1], 1.0 - children[0], t);
            assert!((Connective::Neg.apply(&out) - t).abs() <= f64::EPSILON);
        }
    }

    fn label_graph() -> CompiledGraph {
        let alpha = Alphabet::new(["p"]).unwrap();
        CompiledGraph::compile(&Formula::atom("y"), 1, &alpha, &["y".into()]).unwrap()
    }

    #[test]
    fn single_label_leaf() {
        let g = label_graph();
        let trace = FuzzyTrace::new(g.alphabet().clone(), vec![vec![0.5]]).unwrap();
        let labels = LabelVector::zeros(&["y".into()]);
        let r = ilr_refine(&g, &trace, &labels, &RefinementConfig::default()).unwrap();
        assert_eq!(r.labels.values(), &[1.0]);
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert_eq!(predict(&r, 0.5), vec![true]);
    }

    #[test]
    fn satisfied_input_is_untouched() {
        let alpha = Alphabet::new(["p", "q"]).unwrap();
        let f = parse_formula("F p", &alpha, &[]).unwrap();
        let g = CompiledGraph::compile(&f, 3, &alpha, &[]).unwrap();
        let trace =
            FuzzyTrace::new(alpha, vec![vec![0.2, 0.1], vec![1.0, 0.3], vec![0.4, 0.9]]).unwrap();
        let r = ilr_refine(
            &g,
            &trace,
            &LabelVector::empty(),
            &RefinementConfig::default(),
        )
        .unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.trace, trace);
        assert!(r.converged);
    }

    #[test]
    fn knowledge_on_crisp_trace_sets_label() {
        let alpha = Alphabet::new(["a", "b"]).unwrap();
        let names = vec!["y".to_string()];
        let phi = parse_formula("F a", &alpha, &[]).unwrap();
        for implication in [Implication::Material, Implication::Residuum] {
            let k = build_knowledge_formula(&phi, "y", implication);
            let g = CompiledGraph::compile_with(&k, 2, &alpha, &names, implication).unwrap();
            for (rows, label) in [
                (vec![vec![0.0, 1.0], vec![1.0, 0.0]], 1.0),
                (vec![vec![0.0, 1.0], vec![0.0, 1.0]], 0.0),
            ] {
                let trace = FuzzyTrace::new(alpha.clone(), rows).unwrap();
                let r = ilr_refine(
                    &g,
                    &trace,
                    &LabelVector::zeros(&names),
                    &RefinementConfig::default(),
                )
                .unwrap();
                assert_eq!(r.labels.values(), &[label], "{implication}");
                assert_eq!(r.trace, trace);
                assert!(r.converged && r.iterations <= 2);
            }
        }
    }

    #[test]
    fn residuum_label_tracks_formula_degree() {
        let alpha = Alphabet::new(["a", "b"]).unwrap();
        let names = vec!["y".to_string()];
        let phi = parse_formula("F a", &alpha, &[]).unwrap();
        let k = build_knowledge_formula(&phi, "y", Implication::Residuum);
        let g = CompiledGraph::compile_with(&k, 3, &alpha, &names, Implication::Residuum).unwrap();
        let props = [0.2, 0.8, 0.6, 0.4, 0.3, 0.7];
        let r = ilr_refine_tracked(&g, &props, &[0.0], &RefinementConfig::default()).unwrap();
        assert_eq!(r.labels[0].value, 0.6);
        assert_eq!(r.labels[0].grad, vec![(2, 1.0)]);
        assert!(r.converged);
    }

    #[test]
    fn tracked_matches_plain() {
        let alpha = Alphabet::new(["a", "b"]).unwrap();
        let phi = parse_formula("G(a -> X b) & F a", &alpha, &[]).unwrap();
        let g = CompiledGraph::compile(&phi, 4, &alpha, &[]).unwrap();
        let props = [0.9, 0.1, 0.4, 0.35, 0.8, 0.2, 0.05, 0.6];
        let cfg = RefinementConfig::default();
        let plain = refine_values(&g, props.to_vec(), vec![], &cfg).unwrap();
        let tracked = ilr_refine_tracked(&g, &props, &[], &cfg).unwrap();
        assert_eq!(plain.iterations, tracked.iterations);
        for (a, b) in plain.props.iter().zip(&tracked.props) {
            assert_eq!(a.to_bits(), b.value.to_bits());
        }
    }

    #[test]
    fn config_validation() {
        let bad = RefinementConfig {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RefinementConfig {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RefinementConfig {
            target: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
