//! LTLf syntax.
//!
//! Surface syntax accepted by [`parse_formula`]:
//!
//! | construct      | tokens                 |
//! |----------------|------------------------|
//! | constants      | `true`, `false`        |
//! | negation       | `!`                    |
//! | next (strong)  | `X`                    |
//! | globally       | `G`, `[]`              |
//! | eventually     | `F`, `<>`              |
//! | until, release | `U`, `R`               |
//! | and, or        | `&`, `|`               |
//! | implication    | `->`                   |
//!
//! Binding strength, tightest first: unary operators, `U`/`R` (right
//! associative), `&`, `|`, `->` (right associative).

mod declare;
mod formula;
mod parse;

pub use declare::{
    declare_pattern, sample_conjunction_formula, sample_conjunction_patterns, template_arity,
    PatternInstance, BINARY_TEMPLATES, TEMPLATES,
};
pub use formula::{desugar, desugar_keep_implies, format_formula, Alphabet, Formula};
pub use parse::parse_formula;

/// Words that cannot be used as atom names.
pub const KEYWORDS: &[&str] = &["G", "F", "X", "U", "R", "true", "false"];
