//! Converts integer-based C-preprocessor `#if` conditions into propositional
//! formulas over generated Boolean variables, so that SAT-based variability
//! analyses can consume a product line without modification.
//!
//! Variables with a small finite range of allowed values (declared in a
//! variability model) are encoded per value: a Boolean variable per
//! (variable, value) pair, plus one per variable for its defined-ness. Each
//! condition is parsed, constants are folded, integer sub-expressions are
//! evaluated bottom-up over all allowed values at once, and every comparison
//! resolves to a disjunction over the value combinations that satisfy it.
//! Unrestricted variables — and combination counts above a configurable
//! limit — fall back to the defined-ness variables alone, which keeps the
//! dependency but loses per-value precision.
//!
//! Modules:
//! - [`model`]: the variability model file and variable classification.
//! - [`parser`] / [`ast`]: condition tokenizer, parser, and serializer.
//! - [`transform`]: the conversion core.
//! - [`namer`]: the injective Boolean-variable naming scheme.
//! - [`prop`]: propositional formulas and their condition-string form.
//! - [`rewrite`]: tree copying and directive splicing.
//! - [`oracle`]: brute-force equisatisfiability checking.
//! - [`bench`]: synthetic corpora and scaling series.
//!
//! With the default `parallel` feature, file rewriting and oracle enumeration
//! use a work-stealing thread pool; without it both run sequentially.

pub mod ast;
pub mod bench;
pub mod model;
pub mod namer;
pub mod oracle;
pub mod parser;
pub mod prop;
pub mod rewrite;
pub mod transform;

pub use ast::{BinaryOp, CondExpr, UnaryOp};
pub use model::{ModelError, ValueRange, VarClass, VariabilityModel};
pub use namer::{NameCollision, SigmaKey, SigmaNamer};
pub use parser::{parse_condition, SkipReason};
pub use prop::PropFormula;
pub use rewrite::{rewrite_tree, RewriteOptions, RewriteReport};
pub use transform::{transform_condition, TransformConfig, UnknownIdentifierPolicy};
