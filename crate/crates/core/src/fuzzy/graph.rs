use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::{FuzzyTrace, Implication, LabelVector};
use crate::error::{Error, Result};
use crate::ltlf::{Alphabet, Formula};

pub type NodeId = usize;

/// One operation of a compiled graph. Children always have smaller ids
/// than their parent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    /// Degree of atom `atom` at 0-based `instant`.
    Prop {
        instant: usize,
        atom: usize,
    },
    /// Label atom `k`.
    Label(usize),
    Const(bool),
    Neg(NodeId),
    Min(Vec<NodeId>),
    Max(Vec<NodeId>),
    /// Gödel residuum `a -> b`.
    Residuum(NodeId, NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leaf {
    Prop { instant: usize, atom: usize },
    Label(usize),
}

/// Values the graph can be evaluated over. Besides plain `f64` this is
/// implemented by values that also carry derivative information.
pub trait GraphValue: Clone {
    fn value(&self) -> f64;
    fn constant(v: f64) -> Self;
    fn one_minus(&self) -> Self;
}

impl GraphValue for f64 {
    fn value(&self) -> f64 {
        *self
    }

    fn constant(v: f64) -> Self {
        v
    }

    fn one_minus(&self) -> Self {
        1.0 - self
    }
}

/// Index of the leftmost minimal (or maximal) entry.
pub(crate) fn select<V: GraphValue>(vals: &[V], children: &[NodeId], minimum: bool) -> usize {
    let mut best = 0;
    for (pos, &c) in children.iter().enumerate().skip(1) {
        let v = vals[c].value();
        let b = vals[children[best]].value();
        if (minimum && v < b) || (!minimum && v > b) {
            best = pos;
        }
    }
    best
}

/// A formula unrolled over a fixed trace length into a DAG of
/// min/max/neg nodes. Each `(subformula, instant)` pair maps to exactly one
/// node and structurally equal nodes are shared.
#[derive(Debug, Clone)]
pub struct CompiledGraph {
    nodes: Vec<Node>,
    output: NodeId,
    provenance: Vec<Option<(usize, usize)>>,
    subformulas: Vec<Formula>,
    trace_len: usize,
    alphabet: Arc<Alphabet>,
    labels: Vec<String>,
    implication: Implication,
}

struct Builder<'a> {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    provenance: Vec<Option<(usize, usize)>>,
    memo: HashMap<(usize, usize), NodeId>,
    by_ptr: HashMap<*const Formula, usize>,
    by_shape: HashMap<&'a Formula, usize>,
    subformulas: Vec<&'a Formula>,
    n: usize,
    alphabet: &'a Alphabet,
    labels: &'a [String],
}

impl<'a> Builder<'a> {
    fn intern(&mut self, node: Node, origin: Option<(usize, usize)>) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            if self.provenance[id].is_none() {
                self.provenance[id] = origin;
            }
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(node.clone());
        self.provenance.push(origin);
        self.index.insert(node, id);
        id
    }

    fn sub_id(&mut self, f: &'a Formula) -> usize {
        if let Some(&id) = self.by_ptr.get(&(f as *const Formula)) {
            return id;
        }
        let next = self.subformulas.len();
        let id = *self.by_shape.entry(f).or_insert(next);
        if id == next {
            self.subformulas.push(f);
        }
        self.by_ptr.insert(f as *const Formula, id);
        id
    }

    fn build(&mut self, f: &'a Formula, i: usize) -> Result<NodeId> {
        use Formula::*;
        let sid = self.sub_id(f);
        if let Some(&id) = self.memo.get(&(sid, i)) {
            return Ok(id);
        }
        let origin = Some((sid, i));
        let id = match f {
            Atom(name) => {
                let node = if let Some(atom) = self.alphabet.index_of(name) {
                    Node::Prop { instant: i, atom }
                } else if let Some(k) = self.labels.iter().position(|l| l == name) {
                    Node::Label(k)
                } else {
                    return Err(Error::UnknownAtom(name.clone()));
                };
                self.intern(node, origin)
            }
            True => self.intern(Node::Const(true), origin),
            False => self.intern(Node::Const(false), origin),
            Not(g) => {
                let c = self.build(g, i)?;
                self.intern(Node::Neg(c), origin)
            }
            And(a, b) | Or(a, b) | Implies(a, b) => {
                let x = self.build(a, i)?;
                let y = self.build(b, i)?;
                let node = match f {
                    And(..) => Node::Min(vec![x, y]),
                    Or(..) => Node::Max(vec![x, y]),
                    _ => Node::Residuum(x, y),
                };
                self.intern(node, origin)
            }
            Next(g) => {
                if i + 1 < self.n {
                    let id = self.build(g, i + 1)?;
                    if self.provenance[id].is_none() {
                        self.provenance[id] = origin;
                    }
                    id
                } else {
                    self.intern(Node::Const(false), origin)
                }
            }
            Until(a, b) => {
                // unroll from the last instant so recursion depth stays flat
                for j in (i..self.n).rev() {
                    if self.memo.contains_key(&(sid, j)) {
                        continue;
                    }
                    let bj = self.build(b, j)?;
                    let node = if j + 1 == self.n {
                        bj
                    } else {
                        let aj = self.build(a, j)?;
                        let later = self.memo[&(sid, j + 1)];
                        let step = self.intern(Node::Min(vec![aj, later]), None);
                        self.intern(Node::Max(vec![bj, step]), Some((sid, j)))
                    };
                    self.memo.insert((sid, j), node);
                }
                return Ok(self.memo[&(sid, i)]);
            }
            Release(..) | Globally(_) | Eventually(_) => {
                return Err(Error::InvalidConfig(format!(
                    "`{f}` must be desugared before compilation"
                )))
            }
        };
        self.memo.insert((sid, i), id);
        Ok(id)
    }
}

impl CompiledGraph {
    /// Compile `phi` for traces of length `trace_len`; implications are
    /// rewritten materially.
    pub fn compile(
        phi: &Formula,
        trace_len: usize,
        alphabet: &Alphabet,
        labels: &[String],
    ) -> Result<Self> {
        Self::compile_with(phi, trace_len, alphabet, labels, Implication::Material)
    }

    pub fn compile_with(
        phi: &Formula,
        trace_len: usize,
        alphabet: &Alphabet,
        labels: &[String],
        implication: Implication,
    ) -> Result<Self> {
        if trace_len < 1 {
            return Err(Error::InvalidConfig(
                "trace length must be at least 1".into(),
            ));
        }
        let prepared = implication.prepare(phi);
        let mut builder = Builder {
            nodes: Vec::new(),
            index: HashMap::new(),
            provenance: Vec::new(),
            memo: HashMap::new(),
            by_ptr: HashMap::new(),
            by_shape: HashMap::new(),
            subformulas: Vec::new(),
            n: trace_len,
            alphabet,
            labels,
        };
        let output = builder.build(&prepared, 0)?;
        let subformulas = builder.subformulas.iter().map(|f| (*f).clone()).collect();
        Ok(CompiledGraph {
            nodes: builder.nodes,
            output,
            provenance: builder.provenance,
            subformulas,
            trace_len,
            alphabet: Arc::new(alphabet.clone()),
            labels: labels.to_vec(),
            implication,
        })
    }

    /// Assemble a graph from explicit nodes, for example a single connective
    /// over a few leaves. Nodes must be listed children first and the output
    /// is the last node. No node has provenance.
    pub fn from_nodes(
        nodes: Vec<Node>,
        trace_len: usize,
        alphabet: &Alphabet,
        labels: &[String],
    ) -> Result<Self> {
        if nodes.is_empty() || trace_len < 1 {
            return Err(Error::InvalidConfig(
                "a graph needs at least one node and one instant".into(),
            ));
        }
        let mut implication = Implication::Material;
        for (id, node) in nodes.iter().enumerate() {
            let children: Vec<NodeId> = match node {
                Node::Prop { instant, atom } => {
                    if *instant >= trace_len || *atom >= alphabet.len() {
                        return Err(Error::InvalidConfig(format!(
                            "node {id} reads a leaf outside the {trace_len} x {} trace",
                            alphabet.len()
                        )));
                    }
                    Vec::new()
                }
                Node::Label(k) => {
                    if *k >= labels.len() {
                        return Err(Error::MissingLeaf(format!("label {k}")));
                    }
                    Vec::new()
                }
                Node::Const(_) => Vec::new(),
                Node::Neg(c) => vec![*c],
                Node::Min(cs) | Node::Max(cs) => {
                    if cs.is_empty() {
                        return Err(Error::InvalidConfig(format!("node {id} has no children")));
                    }
                    cs.clone()
                }
                Node::Residuum(a, b) => {
                    implication = Implication::Residuum;
                    vec![*a, *b]
                }
            };
            if children.iter().any(|&c| c >= id) {
                return Err(Error::InvalidConfig(format!(
                    "node {id} has a child that is not listed before it"
                )));
            }
        }
        Ok(CompiledGraph {
            output: nodes.len() - 1,
            provenance: vec![None; nodes.len()],
            nodes,
            subformulas: Vec::new(),
            trace_len,
            alphabet: Arc::new(alphabet.clone()),
            labels: labels.to_vec(),
            implication,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn output(&self) -> NodeId {
        self.output
    }

    pub fn trace_len(&self) -> usize {
        self.trace_len
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn implication(&self) -> Implication {
        self.implication
    }

    /// The `(subformula, 0-based instant)` a node was created for, if any.
    /// Auxiliary nodes of the until unrolling have none.
    pub fn provenance(&self, id: NodeId) -> Option<(&Formula, usize)> {
        self.provenance[id].map(|(sid, i)| (&self.subformulas[sid], i))
    }

    /// Evaluate every node, reading leaves through `leaf`.
    pub fn forward_with<V: GraphValue>(&self, mut leaf: impl FnMut(Leaf) -> V) -> Vec<V> {
        let mut vals: Vec<V> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node {
                Node::Prop { instant, atom } => leaf(Leaf::Prop {
                    instant: *instant,
                    atom: *atom,
                }),
                Node::Label(k) => leaf(Leaf::Label(*k)),
                Node::Const(b) => V::constant(if *b { 1.0 } else { 0.0 }),
                Node::Neg(c) => vals[*c].one_minus(),
                Node::Min(cs) => vals[cs[select(&vals, cs, true)]].clone(),
                Node::Max(cs) => vals[cs[select(&vals, cs, false)]].clone(),
                Node::Residuum(a, b) => {
                    if vals[*a].value() <= vals[*b].value() {
                        V::constant(1.0)
                    } else {
                        vals[*b].clone()
                    }
                }
            };
            vals.push(v);
        }
        vals
    }

    /// Node value table for a fuzzy trace plus label values.
    pub fn forward(&self, trace: &FuzzyTrace, labels: &LabelVector) -> Result<Vec<f64>> {
        let slots = self.label_slots(labels)?;
        self.check_trace(trace)?;
        Ok(self.forward_with(|leaf| match leaf {
            Leaf::Prop { instant, atom } => trace.get(instant, atom),
            Leaf::Label(k) => labels.values()[slots[k]],
        }))
    }

    pub(crate) fn check_trace(&self, trace: &FuzzyTrace) -> Result<()> {
        if trace.len() != self.trace_len {
            return Err(Error::InvalidTrace(format!(
                "graph compiled for length {}, trace has {}",
                self.trace_len,
                trace.len()
            )));
        }
        if trace.alphabet().atoms() != self.alphabet.atoms() {
            return Err(Error::InvalidTrace(
                "trace alphabet differs from the compiled alphabet".into(),
            ));
        }
        Ok(())
    }

    /// Position in `labels` of each graph label.
    pub(crate) fn label_slots(&self, labels: &LabelVector) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .map(|name| {
                labels
                    .names()
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::MissingLeaf(name.clone()))
            })
            .collect()
    }
}

/// Compiled graphs keyed by `(formula, trace length)` for one alphabet,
/// label set and implication semantics.
#[derive(Debug)]
pub struct GraphCache {
    alphabet: Alphabet,
    labels: Vec<String>,
    implication: Implication,
    graphs: Mutex<HashMap<(Formula, usize), Arc<CompiledGraph>>>,
}

impl GraphCache {
    pub fn new(alphabet: Alphabet, labels: Vec<String>, implication: Implication) -> Self {
        GraphCache {
            alphabet,
            labels,
            implication,
            graphs: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, phi: &Formula, trace_len: usize) -> Result<Arc<CompiledGraph>> {
        let key = (phi.clone(), trace_len);
        if let Some(g) = self.graphs.lock().expect("graph cache poisoned").get(&key) {
            return Ok(Arc::clone(g));
        }
        let graph = Arc::new(CompiledGraph::compile_with(
            phi,
            trace_len,
            &self.alphabet,
            &self.labels,
            self.implication,
        )?);
        let mut graphs = self.graphs.lock().expect("graph cache poisoned");
        Ok(Arc::clone(graphs.entry(key).or_insert(graph)))
    }

    pub fn len(&self) -> usize {
        self.graphs.lock().expect("graph cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::evaluate;
    use crate::ltlf::parse_formula;

    fn p_alpha() -> Alphabet {
        Alphabet::new(["p", "q"]).unwrap()
    }

    #[test]
    fn atom_compiles_to_one_leaf() {
        let g = CompiledGraph::compile(&Formula::atom("p"), 3, &p_alpha(), &[]).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(
            g.node(g.output()),
            &Node::Prop {
                instant: 0,
                atom: 0
            }
        );
    }

    #[test]
    fn next_at_length_one_is_const() {
        let f = parse_formula("X p", &p_alpha(), &[]).unwrap();
        let g = CompiledGraph::compile(&f, 1, &p_alpha(), &[]).unwrap();
        assert_eq!(g.node(g.output()), &Node::Const(false));
    }

    #[test]
    fn globally_structure() {
        let f = parse_formula("G p", &p_alpha(), &[]).unwrap();
        let g = CompiledGraph::compile(&f, 2, &p_alpha(), &[]).unwrap();
        // Neg(Max(Neg(p1), Min(Const1, Neg(p2))))
        let Node::Neg(top) = g.node(g.output()) else {
            panic!()
        };
        let Node::Max(cs) = g.node(*top) else {
            panic!()
        };
        let Node::Neg(first) = g.node(cs[0]) else {
            panic!()
        };
        assert_eq!(
            g.node(*first),
            &Node::Prop {
                instant: 0,
                atom: 0
            }
        );
        let Node::Min(inner) = g.node(cs[1]) else {
            panic!()
        };
        assert_eq!(g.node(inner[0]), &Node::Const(true));
        let Node::Neg(leaf) = g.node(inner[1]) else {
            panic!()
        };
        assert_eq!(
            g.node(*leaf),
            &Node::Prop {
                instant: 1,
                atom: 0
            }
        );
        let trace = FuzzyTrace::new(p_alpha(), vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let vals = g.forward(&trace, &LabelVector::empty()).unwrap();
        assert_eq!(vals[g.output()], 1.0);
    }

    #[test]
    fn until_matches_worked_example() {
        let f = parse_formula("p U q", &p_alpha(), &[]).unwrap();
        let g = CompiledGraph::compile(&f, 3, &p_alpha(), &[]).unwrap();
        let trace = FuzzyTrace::new(
            p_alpha(),
            vec![vec![0.9, 0.1], vec![0.8, 0.6], vec![0.3, 0.2]],
        )
        .unwrap();
        let vals = g.forward(&trace, &LabelVector::empty()).unwrap();
        assert_eq!(vals[g.output()], 0.6);
        assert_eq!(
            vals[g.output()],
            evaluate(&trace, &LabelVector::empty(), &f).unwrap()
        );
    }

    #[test]
    fn constants_and_min() {
        let f = parse_formula("true & !false", &p_alpha(), &[]).unwrap();
        let g = CompiledGraph::compile(&f, 2, &p_alpha(), &[]).unwrap();
        let vals = g.forward_with(|_| -> f64 { unreachable!("no leaves") });
        assert_eq!(vals[g.output()], 1.0);
        let f = parse_formula("p & q", &p_alpha(), &[]).unwrap();
        let g = CompiledGraph::compile(&f, 1, &p_alpha(), &[]).unwrap();
        let trace = FuzzyTrace::new(p_alpha(), vec![vec![0.3, 0.8]]).unwrap();
        assert_eq!(
            g.forward(&trace, &LabelVector::empty()).unwrap()[g.output()],
            0.3
        );
    }

    #[test]
    fn sharing_and_size_bound() {
        let f = parse_formula("G(p -> X q) & F(p U q)", &p_alpha(), &[]).unwrap();
        let size = crate::ltlf::desugar(&f).size();
        for n in [1, 2, 5, 20] {
            let g = CompiledGraph::compile(&f, n, &p_alpha(), &[]).unwrap();
            assert!(g.len() <= 2 * size * n + 2, "n={n} nodes={}", g.len());
            let unique: std::collections::HashSet<_> = g.nodes().iter().collect();
            assert_eq!(unique.len(), g.len());
            for (id, node) in g.nodes().iter().enumerate() {
                let children: Vec<NodeId> = match node {
                    Node::Neg(c) => vec![*c],
                    Node::Min(cs) | Node::Max(cs) => cs.clone(),
                    Node::Residuum(a, b) => vec![*a, *b],
                    _ => vec![],
                };
                assert!(children.iter().all(|&c| c < id));
            }
        }
    }

    #[test]
    fn errors() {
        assert!(CompiledGraph::compile(&Formula::True, 0, &p_alpha(), &[]).is_err());
        assert_eq!(
            CompiledGraph::compile(&Formula::atom("y"), 2, &p_alpha(), &[]).unwrap_err(),
            Error::UnknownAtom("y".into())
        );
        let labels = vec!["y".to_string()];
        let g = CompiledGraph::compile(&Formula::atom("y"), 2, &p_alpha(), &labels).unwrap();
        let trace = FuzzyTrace::new(p_alpha(), vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(
            g.forward(&trace, &LabelVector::empty()).unwrap_err(),
            Error::MissingLeaf("y".into())
        );
        let short = FuzzyTrace::new(p_alpha(), vec![vec![0.0, 0.0]]).unwrap();
        assert!(g.forward(&short, &LabelVector::zeros(&labels)).is_err());
    }

    #[test]
    fn explicit_nodes() {
        let leaves = |k: usize| {
            (0..k).map(|j| Node::Prop {
                instant: 0,
                atom: j % 2,
            })
        };
        let mut nodes: Vec<Node> = leaves(3).collect();
        nodes.push(Node::Min(vec![0, 1, 2]));
        let g = CompiledGraph::from_nodes(nodes, 1, &p_alpha(), &[]).unwrap();
        assert_eq!(g.output(), 3);
        let trace = FuzzyTrace::new(p_alpha(), vec![vec![0.6, 0.2]]).unwrap();
        assert_eq!(g.forward(&trace, &LabelVector::empty()).unwrap()[3], 0.2);
        let bad = vec![
            Node::Neg(1),
            Node::Prop {
                instant: 0,
                atom: 0,
            },
        ];
        assert!(CompiledGraph::from_nodes(bad, 1, &p_alpha(), &[]).is_err());
        let bad = vec![Node::Prop {
            instant: 1,
            atom: 0,
        }];
        assert!(CompiledGraph::from_nodes(bad, 1, &p_alpha(), &[]).is_err());
        assert!(CompiledGraph::from_nodes(vec![Node::Label(0)], 1, &p_alpha(), &[]).is_err());
    }

    #[test]
    fn cache_reuses_graphs() {
        let cache = GraphCache::new(p_alpha(), vec![], Implication::Material);
        let f = parse_formula("F p", &p_alpha(), &[]).unwrap();
        let a = cache.get(&f, 3).unwrap();
        let b = cache.get(&f, 3).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        cache.get(&f, 4).unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn provenance_points_at_subformulas() {
        let f = parse_formula("p U q", &p_alpha(), &[]).unwrap();
        let g = CompiledGraph::compile(&f, 3, &p_alpha(), &[]).unwrap();
        let (sub, instant) = g.provenance(g.output()).unwrap();
        assert_eq!(sub, &f);
        assert_eq!(instant, 0);
    }
}
