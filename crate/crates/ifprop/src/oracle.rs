//! Brute-force reference semantics: exhaustively evaluate the original and the
//! transformed condition over all configurations to certify that the
//! replacement preserves satisfiability.
//!
//! The original side is evaluated with plain C-preprocessor semantics
//! (undefined identifiers are 0, `defined` tests definedness). The replacement
//! side decodes every generated Boolean variable name back to its meaning,
//! which doubles as a test of the naming scheme's reversibility. The two
//! implicit constraints — value variables of one integer variable are mutually
//! exclusive, and the defined-ness variable is true exactly when some value is
//! set — hold by construction of the decoded valuation.
//!
//! The exact per-value analysis never encodes "this variable is undefined",
//! so per-configuration equality can only be demanded on configurations where
//! every variable whose *value* the condition reads is defined to one of its
//! range values. Variables that are only tested with `defined(...)` vary over
//! defined/undefined (their value provably never matters), and constants are
//! fixed to their single value.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ast::{BinaryOp, CondExpr, UnaryOp};
use crate::model::{VarClass, VariabilityModel};
use crate::namer::{decode, NameCollision, SigmaKey, SigmaNamer};
use crate::prop::PropFormula;
use crate::transform::{transform_condition, TransformConfig, UnknownIdentifierPolicy};

/// Upper bound on the number of configurations the oracle will enumerate.
pub const CONFIG_GUARD: u128 = 10_000_000;

#[cfg(feature = "parallel")]
const PARALLEL_MIN_CONFIGS: usize = 4096;

/// One total configuration: every enumerated variable is either undefined or
/// set to a single value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    entries: BTreeMap<String, Option<i64>>,
}

impl Configuration {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Option<i64>)>) -> Self {
        Configuration {
            entries: pairs
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }

    /// The value of a variable; undefined and unknown identifiers are `None`.
    pub fn value(&self, name: &str) -> Option<i64> {
        self.entries.get(name).copied().flatten()
    }

    pub fn is_defined(&self, name: &str) -> bool {
        self.value(name).is_some()
    }

    /// Whether the variable is part of the enumerated space at all.
    pub fn enumerates(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Option<i64>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "(empty configuration)");
        }
        let mut first = true;
        for (name, value) in &self.entries {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            match value {
                Some(v) => write!(f, "{name}={v}")?,
                None => write!(f, "{name}=undef")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("configuration space has {product} configurations, above the guard of {CONFIG_GUARD}")]
    GuardExceeded { product: u128 },
    #[error("`{name}` has no finite range and cannot be enumerated")]
    NotEnumerable { name: String },
    #[error("formula variable `{name}` cannot be decoded back to a variable and value")]
    UndecodableVariable { name: String },
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Collision(#[from] NameCollision),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// An enumerable space of configurations, in lexicographic order: variables
/// sorted by name, the first variable most significant, and each variable's
/// choices in their listed order.
#[derive(Debug, Clone)]
pub struct ConfigSpace {
    vars: Vec<(String, Vec<Option<i64>>)>,
    len: usize,
}

impl ConfigSpace {
    /// Builds a space from per-variable choice lists; fails on the guard.
    pub fn new(mut vars: Vec<(String, Vec<Option<i64>>)>) -> Result<Self, OracleError> {
        vars.sort_by(|a, b| a.0.cmp(&b.0));
        let mut product: u128 = 1;
        for (_, choices) in &vars {
            product = product.saturating_mul(choices.len() as u128);
        }
        if product > CONFIG_GUARD {
            return Err(OracleError::GuardExceeded { product });
        }
        let len = product as usize;
        Ok(ConfigSpace { vars, len })
    }

    /// The full space over model variables: each is undefined or set to one of
    /// its range values, `Π(|R(v)| + 1)` configurations in total.
    pub fn full(model: &VariabilityModel, vars: &[&str]) -> Result<Self, OracleError> {
        let mut columns = Vec::new();
        for &name in vars {
            match model.classify(name) {
                VarClass::Constant(_) | VarClass::Restricted(_) => {
                    let values = match model.classify(name) {
                        VarClass::Constant(v) => vec![v],
                        VarClass::Restricted(vs) => vs,
                        _ => unreachable!(),
                    };
                    let mut choices = vec![None];
                    choices.extend(values.into_iter().map(Some));
                    columns.push((name.to_string(), choices));
                }
                VarClass::Unrestricted | VarClass::Unknown => {
                    return Err(OracleError::NotEnumerable {
                        name: name.to_string(),
                    })
                }
            }
        }
        ConfigSpace::new(columns)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The configuration at a lexicographic index.
    pub fn config_at(&self, mut idx: usize) -> Configuration {
        debug_assert!(idx < self.len);
        let mut entries = BTreeMap::new();
        let mut stride = self.len;
        for (name, choices) in &self.vars {
            stride /= choices.len();
            let choice = idx / stride;
            idx %= stride;
            entries.insert(name.clone(), choices[choice]);
        }
        Configuration { entries }
    }

    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.len).map(|i| self.config_at(i))
    }
}

/// All configurations over the given model variables, each either undefined
/// or set to one value of its range, in lexicographic order.
pub fn enumerate_configs(
    model: &VariabilityModel,
    vars: &[&str],
) -> Result<Vec<Configuration>, OracleError> {
    Ok(ConfigSpace::full(model, vars)?.iter().collect())
}

/// Division or modulo by zero: the preprocessor's behavior is undefined, so
/// the configuration is excluded from equivalence checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivisionByZero;

/// Evaluates the original condition under one configuration with plain
/// C-preprocessor semantics.
pub fn eval_original(expr: &CondExpr, config: &Configuration) -> Result<bool, DivisionByZero> {
    eval_bool(expr, config)
}

fn eval_bool(expr: &CondExpr, config: &Configuration) -> Result<bool, DivisionByZero> {
    match expr {
        CondExpr::Bool(b) => Ok(*b),
        CondExpr::Defined(name) => Ok(config.is_defined(name)),
        CondExpr::Unary {
            op: UnaryOp::LogNot,
            expr: inner,
        } => Ok(!eval_bool(inner, config)?),
        CondExpr::Binary {
            op: BinaryOp::LogAnd,
            lhs,
            rhs,
        } => {
            // && and || short-circuit, like the preprocessor
            if !eval_bool(lhs, config)? {
                Ok(false)
            } else {
                eval_bool(rhs, config)
            }
        }
        CondExpr::Binary {
            op: BinaryOp::LogOr,
            lhs,
            rhs,
        } => {
            if eval_bool(lhs, config)? {
                Ok(true)
            } else {
                eval_bool(rhs, config)
            }
        }
        CondExpr::Binary { op, lhs, rhs } if op.is_comparison() => {
            let a = eval_value(lhs, config)?;
            let b = eval_value(rhs, config)?;
            Ok(match op {
                BinaryOp::Eq => a == b,
                BinaryOp::Ne => a != b,
                BinaryOp::Lt => a < b,
                BinaryOp::Le => a <= b,
                BinaryOp::Gt => a > b,
                BinaryOp::Ge => a >= b,
                _ => unreachable!(),
            })
        }
        _ => Ok(eval_value(expr, config)? != 0),
    }
}

fn eval_value(expr: &CondExpr, config: &Configuration) -> Result<i64, DivisionByZero> {
    match expr {
        CondExpr::Int(v) => Ok(*v),
        CondExpr::Bool(b) => Ok(*b as i64),
        // an undefined identifier evaluates to 0
        CondExpr::Ident(name) => Ok(config.value(name).unwrap_or(0)),
        CondExpr::Defined(name) => Ok(config.is_defined(name) as i64),
        CondExpr::Unary { op, expr: inner } => match op {
            UnaryOp::Neg => Ok(eval_value(inner, config)?.wrapping_neg()),
            UnaryOp::BitNot => Ok(!eval_value(inner, config)?),
            UnaryOp::LogNot => Ok(!eval_bool(inner, config)? as i64),
        },
        CondExpr::Binary { op, lhs, rhs } => {
            if !op.is_arithmetic() {
                return Ok(eval_bool(expr, config)? as i64);
            }
            let a = eval_value(lhs, config)?;
            let b = eval_value(rhs, config)?;
            match op {
                BinaryOp::Add => Ok(a.wrapping_add(b)),
                BinaryOp::Sub => Ok(a.wrapping_sub(b)),
                BinaryOp::Mul => Ok(a.wrapping_mul(b)),
                BinaryOp::Div => {
                    if b == 0 {
                        Err(DivisionByZero)
                    } else {
                        Ok(a.wrapping_div(b))
                    }
                }
                BinaryOp::Rem => {
                    if b == 0 {
                        Err(DivisionByZero)
                    } else {
                        Ok(a.wrapping_rem(b))
                    }
                }
                BinaryOp::BitAnd => Ok(a & b),
                BinaryOp::BitOr => Ok(a | b),
                BinaryOp::BitXor => Ok(a ^ b),
                BinaryOp::Shl => Ok(a.wrapping_shl(b as u32)),
                BinaryOp::Shr => Ok(a.wrapping_shr(b as u32)),
                _ => unreachable!(),
            }
        }
    }
}

/// Evaluates a replacement formula under one configuration by decoding each
/// variable name back to its meaning.
pub fn eval_prop(
    formula: &PropFormula,
    config: &Configuration,
    model: &VariabilityModel,
) -> Result<bool, OracleError> {
    match formula {
        PropFormula::True => Ok(true),
        PropFormula::False => Ok(false),
        PropFormula::Not(inner) => Ok(!eval_prop(inner, config, model)?),
        PropFormula::And(lhs, rhs) => {
            Ok(eval_prop(lhs, config, model)? && eval_prop(rhs, config, model)?)
        }
        PropFormula::Or(lhs, rhs) => {
            Ok(eval_prop(lhs, config, model)? || eval_prop(rhs, config, model)?)
        }
        PropFormula::Var(name) => match decode(model, name) {
            Some(SigmaKey::Epsilon { var }) => Ok(config.is_defined(&var)),
            Some(SigmaKey::Value { var, value }) => Ok(config.value(&var) == Some(value)),
            // an identifier outside the model keeps its own name as its
            // defined-ness variable; accept it when the space enumerates it
            None if config.enumerates(name) => Ok(config.is_defined(name)),
            None => Err(OracleError::UndecodableVariable {
                name: name.to_string(),
            }),
        },
    }
}

/// Why a condition cannot be certified by exhaustive enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NotApplicableReason {
    /// The transformation used the inexact defined-ness fallback.
    FallbackUsed,
    /// The condition involves a variable with no finite range.
    UnrestrictedInvolved(String),
    /// The condition involves an identifier absent from the model, treated as
    /// unrestricted under the active policy.
    UnknownInvolved(String),
}

impl fmt::Display for NotApplicableReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NotApplicableReason::FallbackUsed => write!(f, "fallback used"),
            NotApplicableReason::UnrestrictedInvolved(name) => {
                write!(f, "unrestricted variable `{name}` involved")
            }
            NotApplicableReason::UnknownInvolved(name) => {
                write!(f, "unknown identifier `{name}` involved")
            }
        }
    }
}

/// Verdict of [`check_equisat`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquisatResult {
    /// Original and replacement agree on every enumerated configuration.
    Equivalent {
        configs: usize,
        /// Configurations excluded because the original divides by zero.
        excluded: usize,
    },
    /// First configuration (in lexicographic order) where they disagree.
    CounterExample {
        config: Configuration,
        original: bool,
        replacement: bool,
    },
    NotApplicable(NotApplicableReason),
}

/// Transforms the condition and compares it against the original over every
/// configuration of the involved variables.
///
/// Variables read for their value enumerate over their range (the per-value
/// encoding carries no "undefined" case); variables only tested with
/// `defined(...)` enumerate over defined/undefined; constants stay fixed.
pub fn check_equisat(
    expr: &CondExpr,
    model: &VariabilityModel,
    config: &TransformConfig,
) -> Result<EquisatResult, CheckError> {
    let namer = SigmaNamer::new(model);
    let outcome = transform_condition(expr, model, config, &namer)?;
    if outcome.fallback_used {
        return Ok(EquisatResult::NotApplicable(NotApplicableReason::FallbackUsed));
    }

    let mut value_vars = Vec::new();
    expr.value_idents(&mut value_vars);
    let mut defined_vars = Vec::new();
    expr.defined_idents(&mut defined_vars);

    let mut columns: BTreeMap<String, Vec<Option<i64>>> = BTreeMap::new();
    for &name in &value_vars {
        match model.classify(name) {
            VarClass::Constant(v) => {
                columns.insert(name.to_string(), vec![Some(v)]);
            }
            VarClass::Restricted(values) => {
                columns.insert(name.to_string(), values.into_iter().map(Some).collect());
            }
            VarClass::Unrestricted => {
                return Ok(EquisatResult::NotApplicable(
                    NotApplicableReason::UnrestrictedInvolved(name.to_string()),
                ));
            }
            VarClass::Unknown => match config.unknown_identifiers {
                UnknownIdentifierPolicy::TreatUnrestricted => {
                    return Ok(EquisatResult::NotApplicable(
                        NotApplicableReason::UnknownInvolved(name.to_string()),
                    ));
                }
                // treated as the literal 0 on both sides: stays undefined
                UnknownIdentifierPolicy::TreatZero => {}
            },
        }
    }
    for &name in &defined_vars {
        if columns.contains_key(name) {
            continue;
        }
        match model.classify(name) {
            VarClass::Constant(v) => {
                columns.insert(name.to_string(), vec![Some(v)]);
            }
            VarClass::Restricted(values) => {
                // only the defined-ness matters; two points suffice
                columns.insert(name.to_string(), vec![None, Some(values[0])]);
            }
            VarClass::Unrestricted => {
                return Ok(EquisatResult::NotApplicable(
                    NotApplicableReason::UnrestrictedInvolved(name.to_string()),
                ));
            }
            VarClass::Unknown => match config.unknown_identifiers {
                UnknownIdentifierPolicy::TreatUnrestricted => {
                    return Ok(EquisatResult::NotApplicable(
                        NotApplicableReason::UnknownInvolved(name.to_string()),
                    ));
                }
                UnknownIdentifierPolicy::TreatZero => {
                    columns.insert(name.to_string(), vec![None, Some(0)]);
                }
            },
        }
    }

    let space = ConfigSpace::new(columns.into_iter().collect())?;
    compare_over_space(expr, &outcome.formula, model, &space).map_err(CheckError::from)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum ConfigVerdict {
    Match,
    Excluded,
    Mismatch { original: bool, replacement: bool },
    Undecodable(String),
}

fn judge_config(
    expr: &CondExpr,
    formula: &PropFormula,
    model: &VariabilityModel,
    config: &Configuration,
) -> ConfigVerdict {
    let original = match eval_original(expr, config) {
        Ok(v) => v,
        Err(DivisionByZero) => return ConfigVerdict::Excluded,
    };
    match eval_prop(formula, config, model) {
        Ok(replacement) if replacement == original => ConfigVerdict::Match,
        Ok(replacement) => ConfigVerdict::Mismatch {
            original,
            replacement,
        },
        Err(OracleError::UndecodableVariable { name }) => ConfigVerdict::Undecodable(name),
        Err(_) => unreachable!("eval_prop only raises undecodable names"),
    }
}

fn compare_over_space(
    expr: &CondExpr,
    formula: &PropFormula,
    model: &VariabilityModel,
    space: &ConfigSpace,
) -> Result<EquisatResult, OracleError> {
    let verdicts = collect_verdicts(expr, formula, model, space);
    let mut excluded = 0;
    for (idx, verdict) in verdicts.into_iter().enumerate() {
        match verdict {
            ConfigVerdict::Match => {}
            ConfigVerdict::Excluded => excluded += 1,
            ConfigVerdict::Mismatch {
                original,
                replacement,
            } => {
                return Ok(EquisatResult::CounterExample {
                    config: space.config_at(idx),
                    original,
                    replacement,
                });
            }
            ConfigVerdict::Undecodable(name) => {
                return Err(OracleError::UndecodableVariable { name });
            }
        }
    }
    Ok(EquisatResult::Equivalent {
        configs: space.len(),
        excluded,
    })
}

#[cfg(feature = "parallel")]
fn collect_verdicts(
    expr: &CondExpr,
    formula: &PropFormula,
    model: &VariabilityModel,
    space: &ConfigSpace,
) -> Vec<ConfigVerdict> {
    use rayon::prelude::*;
    if space.len() < PARALLEL_MIN_CONFIGS {
        return (0..space.len())
            .map(|i| judge_config(expr, formula, model, &space.config_at(i)))
            .collect();
    }
    (0..space.len())
        .into_par_iter()
        .map(|i| judge_config(expr, formula, model, &space.config_at(i)))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn collect_verdicts(
    expr: &CondExpr,
    formula: &PropFormula,
    model: &VariabilityModel,
    space: &ConfigSpace,
) -> Vec<ConfigVerdict> {
    (0..space.len())
        .map(|i| judge_config(expr, formula, model, &space.config_at(i)))
        .collect()
}
