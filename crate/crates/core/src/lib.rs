//! Temporal iterative local refinement over fuzzy LTLf.
//!
//! The crate is layered bottom-up:
//!
//! * [`ltlf`] – formula syntax: parsing, printing, desugaring, DECLARE
//!   templates and the conjunction-of-patterns sampler.
//! * [`crisp`] – the exact Boolean satisfaction oracle over symbolic traces.
//! * [`fuzzy`] – Zadeh-semantics evaluation over fuzzy traces and the
//!   compilation of a formula, unrolled over a fixed trace length, into a
//!   hash-consed min/max/neg graph.
//! * [`ilr`] – minimal refinement functions and the iterative
//!   forward/backward refinement loop over a compiled graph.

pub mod crisp;
pub mod error;
pub mod fuzzy;
pub mod ilr;
pub mod ltlf;

pub use crisp::{enumerate_traces, satisfies, satisfies_at, SymbolicTrace, TraceMode};
pub use error::{Error, Result};
pub use fuzzy::{
    build_knowledge_formula, evaluate, evaluate_with, CompiledGraph, FuzzyTrace, GraphCache,
    Implication, LabelVector, Node, NodeId,
};
pub use ilr::{
    ilr_refine, ilr_refine_tracked, predict, refine_node, refine_values, Connective, RefineValue,
    Refined, RefinementConfig, RefinementResult, Tracked,
};
pub use ltlf::{
    declare_pattern, desugar, format_formula, parse_formula, sample_conjunction_formula, Alphabet,
    Formula, PatternInstance,
};
