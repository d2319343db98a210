//! The naming scheme that maps a variable plus one of its values (or its
//! defined-ness) to a generated Boolean variable name.
//!
//! The mapping must stay injective across a whole run: a generated name that
//! collides with a model variable or with a name generated for a different
//! (variable, value) pair aborts the run instead of being silently renamed.

use std::collections::HashMap;
use std::sync::Mutex;

use thiserror::Error;

use crate::model::VariabilityModel;

/// What a generated Boolean variable name stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SigmaKey {
    /// The variable is set to this specific value.
    Value { var: String, value: i64 },
    /// The variable is defined at all.
    Epsilon { var: String },
}

impl SigmaKey {
    pub fn var(&self) -> &str {
        match self {
            SigmaKey::Value { var, .. } | SigmaKey::Epsilon { var } => var,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("name collision: `{name}` already stands for {existing:?}, cannot also stand for {requested:?}")]
pub struct NameCollision {
    pub name: String,
    pub existing: SigmaKey,
    pub requested: SigmaKey,
}

/// Registry of every Boolean variable name in scope for one run.
///
/// Registration is first-writer-wins: concurrent workers may register the
/// same (variable, value) pair freely, but a second meaning for an existing
/// name is detected and reported.
#[derive(Debug)]
pub struct SigmaNamer {
    registry: Mutex<HashMap<String, SigmaKey>>,
}

impl SigmaNamer {
    /// Seeds the registry with every model variable as its own ε name.
    pub fn new(model: &VariabilityModel) -> Self {
        let mut registry = HashMap::new();
        for name in model.names() {
            registry.insert(
                name.to_string(),
                SigmaKey::Epsilon {
                    var: name.to_string(),
                },
            );
        }
        SigmaNamer {
            registry: Mutex::new(registry),
        }
    }

    /// σ(var, value) or, with `None`, σ(var, ε).
    pub fn name(&self, var: &str, value: Option<i64>) -> Result<String, NameCollision> {
        match value {
            Some(value) => self.value_name(var, value),
            None => self.epsilon_name(var),
        }
    }

    /// The Boolean variable meaning "`var` is set to `value`".
    pub fn value_name(&self, var: &str, value: i64) -> Result<String, NameCollision> {
        let name = format_value_name(var, value);
        self.register(
            name,
            SigmaKey::Value {
                var: var.to_string(),
                value,
            },
        )
    }

    /// The Boolean variable meaning "`var` is defined"; the variable's own name.
    pub fn epsilon_name(&self, var: &str) -> Result<String, NameCollision> {
        self.register(
            var.to_string(),
            SigmaKey::Epsilon {
                var: var.to_string(),
            },
        )
    }

    fn register(&self, name: String, key: SigmaKey) -> Result<String, NameCollision> {
        let mut registry = self.registry.lock().expect("namer poisoned");
        match registry.get(&name) {
            Some(existing) if *existing != key => Err(NameCollision {
                name,
                existing: existing.clone(),
                requested: key,
            }),
            Some(_) => Ok(name),
            None => {
                registry.insert(name.clone(), key);
                Ok(name)
            }
        }
    }
}

/// `VAR_eq_3`, or `VAR_eq_m3` for negative values.
fn format_value_name(var: &str, value: i64) -> String {
    if value < 0 {
        format!("{var}_eq_m{}", value.unsigned_abs())
    } else {
        format!("{var}_eq_{value}")
    }
}

/// Decodes a generated name back to its meaning, using only the model and the
/// name string itself.
///
/// A model variable name is its own ε variable. Otherwise the text after the
/// last `_eq_` must be a value (`m` prefix for negative) and the text before
/// it a model variable. Everything else is undecodable.
pub fn decode(model: &VariabilityModel, name: &str) -> Option<SigmaKey> {
    if model.contains(name) {
        return Some(SigmaKey::Epsilon {
            var: name.to_string(),
        });
    }
    let idx = name.rfind("_eq_")?;
    let (var, suffix) = (&name[..idx], &name[idx + 4..]);
    if !model.contains(var) {
        return None;
    }
    let value = match suffix.strip_prefix('m') {
        Some(digits) => -digits.parse::<i64>().ok()?,
        None => suffix.parse::<i64>().ok()?,
    };
    Some(SigmaKey::Value {
        var: var.to_string(),
        value,
    })
}
