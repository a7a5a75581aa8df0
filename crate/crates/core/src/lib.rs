//! Moral-status evaluation of maxims by universalizability testing.
//!
//! A [`kb::KnowledgeBase`] describes a world: a sort hierarchy, a
//! signature, axioms, necessity schemas and named maxims. The
//! [`universalize`] module turns a maxim into its universal law, the
//! [`engine`] saturates the willed world built from both, and the
//! [`mod@evaluate`] module turns the outcome into a permissibility verdict
//! with a replayable derivation trace.

pub mod engine;
pub mod evaluate;
pub mod kb;
pub mod lang;
pub mod parser;
pub mod render;
pub mod synth;
pub mod universalize;

pub use evaluate::{evaluate, evaluate_perm, DutyKind, Verdict, VerdictBasis};
pub use kb::KnowledgeBase;
pub use lang::{DeonticOp, Formula, Maxim, SortName, Term};
pub use parser::{parse_formula, parse_kb, Diagnostic};
