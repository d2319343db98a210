//! The conversion core: constant folding, bottom-up evaluation of integer
//! sub-expressions over tuple sets, and resolution of comparisons into
//! propositional formulas.
//!
//! Integer evaluation tracks, for every sub-expression, the set of *current*
//! values it can take together with the *original* range values that produced
//! each of them. When a comparison is reached, the original values of every
//! satisfying combination are turned into Boolean variables and disjoined.
//! Unrestricted variables and oversized combination counts drop to the
//! inexact fallback: a conjunction of the defined-ness variables of all
//! variables involved.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::ast::{BinaryOp, CondExpr, UnaryOp};
use crate::model::{VarClass, VariabilityModel};
use crate::namer::{NameCollision, SigmaNamer};
use crate::prop::PropFormula;

/// Tuning knobs of the transformation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformConfig {
    /// Upper limit for the number of value combinations an arithmetic merge
    /// may produce before the sub-expression falls back to defined-ness
    /// variables. Must be at least 1.
    pub max_combinations: usize,
    /// How identifiers absent from the model are treated.
    pub unknown_identifiers: UnknownIdentifierPolicy,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            max_combinations: 1000,
            unknown_identifiers: UnknownIdentifierPolicy::TreatUnrestricted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownIdentifierPolicy {
    /// Keep the dependency: treat the identifier like an unrestricted variable.
    TreatUnrestricted,
    /// Raw preprocessor semantics: an undefined identifier evaluates to 0.
    TreatZero,
}

/// Non-fatal events recorded while converting one condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransformWarning {
    /// `~` was evaluated; its result assumes 64-bit signed two's complement.
    BitNotEvaluated,
    /// A division or modulo by zero dropped the affected candidate tuples.
    DivisionByZeroDropped,
    /// A Boolean-valued sub-expression was used as an integer operand; its
    /// per-value analysis is replaced by the defined-ness fallback.
    BooleanInArithmetic(String),
}

impl fmt::Display for TransformWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformWarning::BitNotEvaluated => {
                write!(f, "`~` evaluated with 64-bit signed two's complement semantics")
            }
            TransformWarning::DivisionByZeroDropped => {
                write!(f, "division or modulo by zero; affected value combinations dropped")
            }
            TransformWarning::BooleanInArithmetic(what) => {
                write!(f, "{what} used as an integer operand; falling back to defined-ness")
            }
        }
    }
}

/// One candidate evaluation: the arithmetic result so far and the range
/// values it derives from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueTuple {
    pub current: i64,
    pub originals: BTreeMap<String, i64>,
}

/// All candidate evaluations of an integer sub-expression.
///
/// No two tuples share an originals assignment, tuples are kept sorted by
/// their originals, and `involved` names every variable the sub-expression
/// depends on (even when all tuples have been dropped).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleSet {
    pub tuples: Vec<ValueTuple>,
    pub involved: BTreeSet<String>,
}

impl TupleSet {
    /// The initial expansion of a restricted variable: one tuple per allowed
    /// value, current equal to original.
    pub fn for_variable(name: &str, values: &[i64]) -> Self {
        let tuples = values
            .iter()
            .map(|&v| ValueTuple {
                current: v,
                originals: BTreeMap::from([(name.to_string(), v)]),
            })
            .collect();
        TupleSet {
            tuples,
            involved: BTreeSet::from([name.to_string()]),
        }
    }

    fn empty(involved: BTreeSet<String>) -> Self {
        TupleSet {
            tuples: Vec::new(),
            involved,
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    fn sort(&mut self) {
        self.tuples.sort_unstable_by(|a, b| a.originals.cmp(&b.originals));
    }
}

/// Result of evaluating an integer sub-expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntValue {
    /// A single literal value, free of variables.
    Lit(i64),
    /// Candidate evaluations over restricted variables.
    Tuples(TupleSet),
    /// Per-value analysis abandoned; only the dependency on these variables
    /// survives.
    Fallback(BTreeSet<String>),
}

impl IntValue {
    fn involved(&self) -> BTreeSet<String> {
        match self {
            IntValue::Lit(_) => BTreeSet::new(),
            IntValue::Tuples(ts) => ts.involved.clone(),
            IntValue::Fallback(vars) => vars.clone(),
        }
    }
}

/// Counters and flags accumulated while converting one condition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransformStats {
    /// True once any comparison was resolved through the inexact fallback.
    pub fallback_used: bool,
    /// Largest combination count any arithmetic merge would have produced,
    /// whether or not it was materialized.
    pub max_merge_count: usize,
    pub warnings: Vec<TransformWarning>,
}

/// Shared state for the conversion of one condition.
pub struct TransformCtx<'a> {
    pub model: &'a VariabilityModel,
    pub config: &'a TransformConfig,
    pub namer: &'a SigmaNamer,
    pub stats: TransformStats,
    // names this condition already registered; keeps the shared registry off
    // the hot path when a formula repeats the same variables
    value_names: HashMap<String, HashMap<i64, String>>,
    epsilon_names: HashMap<String, String>,
}

impl<'a> TransformCtx<'a> {
    pub fn new(
        model: &'a VariabilityModel,
        config: &'a TransformConfig,
        namer: &'a SigmaNamer,
    ) -> Self {
        TransformCtx {
            model,
            config,
            namer,
            stats: TransformStats::default(),
            value_names: HashMap::new(),
            epsilon_names: HashMap::new(),
        }
    }

    fn warn(&mut self, warning: TransformWarning) {
        self.stats.warnings.push(warning);
    }

    fn value_name(&mut self, var: &str, value: i64) -> Result<String, NameCollision> {
        if let Some(name) = self.value_names.get(var).and_then(|m| m.get(&value)) {
            return Ok(name.clone());
        }
        let name = self.namer.value_name(var, value)?;
        self.value_names
            .entry(var.to_string())
            .or_default()
            .insert(value, name.clone());
        Ok(name)
    }

    fn epsilon_name(&mut self, var: &str) -> Result<String, NameCollision> {
        if let Some(name) = self.epsilon_names.get(var) {
            return Ok(name.clone());
        }
        let name = self.namer.epsilon_name(var)?;
        self.epsilon_names.insert(var.to_string(), name.clone());
        Ok(name)
    }
}

/// Outcome of converting one condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionOutcome {
    pub formula: PropFormula,
    pub fallback_used: bool,
    pub max_merge_count: usize,
    pub warnings: Vec<TransformWarning>,
}

/// Replaces every constant (one allowed value) with its literal value.
///
/// A single pass reaches the fixpoint: introduced literals are never
/// re-examined.
pub fn fold_constants(expr: &CondExpr, model: &VariabilityModel) -> CondExpr {
    match expr {
        CondExpr::Ident(name) => match model.classify(name) {
            VarClass::Constant(value) => CondExpr::Int(value),
            _ => expr.clone(),
        },
        CondExpr::Unary { op, expr: inner } => {
            CondExpr::unary(*op, fold_constants(inner, model))
        }
        CondExpr::Binary { op, lhs, rhs } => CondExpr::binary(
            *op,
            fold_constants(lhs, model),
            fold_constants(rhs, model),
        ),
        _ => expr.clone(),
    }
}

/// Converts a parsed condition into a propositional formula.
pub fn transform_condition(
    expr: &CondExpr,
    model: &VariabilityModel,
    config: &TransformConfig,
    namer: &SigmaNamer,
) -> Result<ConditionOutcome, NameCollision> {
    let folded = fold_constants(expr, model);
    let mut ctx = TransformCtx::new(model, config, namer);
    let formula = to_formula(&folded, &mut ctx)?;
    Ok(ConditionOutcome {
        formula,
        fallback_used: ctx.stats.fallback_used,
        max_merge_count: ctx.stats.max_merge_count,
        warnings: ctx.stats.warnings,
    })
}

/// Recursive descent over the Boolean structure of the condition.
fn to_formula(expr: &CondExpr, ctx: &mut TransformCtx) -> Result<PropFormula, NameCollision> {
    match expr {
        CondExpr::Binary {
            op: BinaryOp::LogAnd,
            lhs,
            rhs,
        } => Ok(PropFormula::and(to_formula(lhs, ctx)?, to_formula(rhs, ctx)?)),
        CondExpr::Binary {
            op: BinaryOp::LogOr,
            lhs,
            rhs,
        } => Ok(PropFormula::or(to_formula(lhs, ctx)?, to_formula(rhs, ctx)?)),
        CondExpr::Binary { op, lhs, rhs } if op.is_comparison() => {
            let left = eval_int(lhs, ctx);
            let right = eval_int(rhs, ctx);
            resolve_comparison(*op, &left, &right, ctx)
        }
        CondExpr::Unary {
            op: UnaryOp::LogNot,
            expr: inner,
        } => {
            if inner.has_boolean_root() {
                Ok(PropFormula::not(to_formula(inner, ctx)?))
            } else {
                // !e on an integer e is the formula for e == 0
                let value = eval_int(inner, ctx);
                resolve_comparison(BinaryOp::Eq, &value, &IntValue::Lit(0), ctx)
            }
        }
        CondExpr::Defined(name) => Ok(PropFormula::Var(ctx.epsilon_name(name)?)),
        CondExpr::Bool(b) => Ok(if *b { PropFormula::True } else { PropFormula::False }),
        // a bare integer sub-expression in Boolean position means `!= 0`
        _ => {
            let value = eval_int(expr, ctx);
            resolve_comparison(BinaryOp::Ne, &value, &IntValue::Lit(0), ctx)
        }
    }
}

/// Bottom-up evaluation of an integer-typed sub-expression.
pub fn eval_int(expr: &CondExpr, ctx: &mut TransformCtx) -> IntValue {
    match expr {
        CondExpr::Int(v) => IntValue::Lit(*v),
        CondExpr::Bool(b) => IntValue::Lit(*b as i64),
        CondExpr::Ident(name) => match ctx.model.classify(name) {
            VarClass::Constant(value) => IntValue::Lit(value),
            VarClass::Restricted(values) => IntValue::Tuples(TupleSet::for_variable(name, &values)),
            VarClass::Unrestricted => IntValue::Fallback(BTreeSet::from([name.clone()])),
            VarClass::Unknown => match ctx.config.unknown_identifiers {
                UnknownIdentifierPolicy::TreatUnrestricted => {
                    IntValue::Fallback(BTreeSet::from([name.clone()]))
                }
                UnknownIdentifierPolicy::TreatZero => IntValue::Lit(0),
            },
        },
        CondExpr::Defined(name) => {
            ctx.warn(TransformWarning::BooleanInArithmetic(format!(
                "defined({name})"
            )));
            IntValue::Fallback(BTreeSet::from([name.clone()]))
        }
        CondExpr::Unary { op, expr: inner } => match op {
            UnaryOp::Neg | UnaryOp::BitNot => {
                if *op == UnaryOp::BitNot {
                    ctx.warn(TransformWarning::BitNotEvaluated);
                }
                match eval_int(inner, ctx) {
                    IntValue::Lit(v) => IntValue::Lit(apply_unary(*op, v)),
                    IntValue::Tuples(mut ts) => {
                        for tuple in &mut ts.tuples {
                            tuple.current = apply_unary(*op, tuple.current);
                        }
                        IntValue::Tuples(ts)
                    }
                    fallback @ IntValue::Fallback(_) => fallback,
                }
            }
            UnaryOp::LogNot => boolean_operand_fallback(expr, ctx),
        },
        CondExpr::Binary { op, lhs, rhs } => {
            if op.is_arithmetic() {
                let left = eval_int(lhs, ctx);
                let right = eval_int(rhs, ctx);
                combine(*op, left, right, ctx)
            } else {
                boolean_operand_fallback(expr, ctx)
            }
        }
    }
}

/// A comparison or logical sub-expression in integer position: keep only the
/// dependency on its variables. A variable-free one is computed exactly.
fn boolean_operand_fallback(expr: &CondExpr, ctx: &mut TransformCtx) -> IntValue {
    let mut names = Vec::new();
    expr.value_idents(&mut names);
    expr.defined_idents(&mut names);
    if names.is_empty() {
        let formula = to_formula(expr, ctx).expect("no variables, no generated names");
        let truth = formula.eval(|name| unreachable!("variable-free formula holds {name}"));
        return IntValue::Lit(truth as i64);
    }
    ctx.warn(TransformWarning::BooleanInArithmetic(
        "a Boolean sub-expression".to_string(),
    ));
    IntValue::Fallback(names.into_iter().map(str::to_string).collect())
}

/// Applies an arithmetic operator to two evaluated operands.
fn combine(op: BinaryOp, lhs: IntValue, rhs: IntValue, ctx: &mut TransformCtx) -> IntValue {
    if matches!(lhs, IntValue::Fallback(_)) || matches!(rhs, IntValue::Fallback(_)) {
        let mut vars = lhs.involved();
        vars.extend(rhs.involved());
        return IntValue::Fallback(vars);
    }
    match (lhs, rhs) {
        (IntValue::Lit(a), IntValue::Lit(b)) => match apply_arith(op, a, b) {
            Some(v) => IntValue::Lit(v),
            None => {
                // literal division by zero: no combination can witness the
                // comparison, which later resolves via the empty tuple set
                ctx.warn(TransformWarning::DivisionByZeroDropped);
                IntValue::Tuples(TupleSet::empty(BTreeSet::new()))
            }
        },
        (IntValue::Lit(a), IntValue::Tuples(ts)) => {
            IntValue::Tuples(map_tuples(ts, ctx, |current| apply_arith(op, a, current)))
        }
        (IntValue::Tuples(ts), IntValue::Lit(b)) => {
            IntValue::Tuples(map_tuples(ts, ctx, |current| apply_arith(op, current, b)))
        }
        (IntValue::Tuples(left), IntValue::Tuples(right)) => merge_tuples(op, left, right, ctx),
        _ => unreachable!("fallback handled above"),
    }
}

fn map_tuples(
    mut ts: TupleSet,
    ctx: &mut TransformCtx,
    f: impl Fn(i64) -> Option<i64>,
) -> TupleSet {
    let before = ts.tuples.len();
    ts.tuples.retain_mut(|tuple| match f(tuple.current) {
        Some(v) => {
            tuple.current = v;
            true
        }
        None => false,
    });
    if ts.tuples.len() != before {
        ctx.warn(TransformWarning::DivisionByZeroDropped);
    }
    ts
}

/// Pairwise merge of two tuple sets.
///
/// Tuples combine only when their originals agree on every shared variable;
/// without this, an expression like `VAR_A != VAR_A` would wrongly appear
/// satisfiable. The combination count is computed before materialization and
/// checked against the configured limit.
fn merge_tuples(op: BinaryOp, left: TupleSet, right: TupleSet, ctx: &mut TransformCtx) -> IntValue {
    let mut involved = left.involved.clone();
    involved.extend(right.involved.iter().cloned());

    let count = consistent_pair_count(&left, &right);
    ctx.stats.max_merge_count = ctx
        .stats
        .max_merge_count
        .max(usize::try_from(count).unwrap_or(usize::MAX));
    if count > ctx.config.max_combinations as u128 {
        return IntValue::Fallback(involved);
    }

    let shared: Vec<&String> = left.involved.intersection(&right.involved).collect();
    let mut tuples = Vec::new();
    let mut dropped = false;
    for lt in &left.tuples {
        for rt in &right.tuples {
            if !shared
                .iter()
                .all(|var| lt.originals.get(*var) == rt.originals.get(*var))
            {
                continue;
            }
            match apply_arith(op, lt.current, rt.current) {
                Some(current) => {
                    let mut originals = lt.originals.clone();
                    originals.extend(rt.originals.iter().map(|(k, v)| (k.clone(), *v)));
                    tuples.push(ValueTuple { current, originals });
                }
                None => dropped = true,
            }
        }
    }
    if dropped {
        ctx.warn(TransformWarning::DivisionByZeroDropped);
    }
    let mut ts = TupleSet { tuples, involved };
    ts.sort();
    IntValue::Tuples(ts)
}

/// Exact number of consistent pairs, without building them.
fn consistent_pair_count(left: &TupleSet, right: &TupleSet) -> u128 {
    let shared: Vec<&String> = left.involved.intersection(&right.involved).collect();
    if shared.is_empty() {
        return left.tuples.len() as u128 * right.tuples.len() as u128;
    }
    let mut groups: HashMap<Vec<i64>, u128> = HashMap::new();
    for lt in &left.tuples {
        let key: Vec<i64> = shared
            .iter()
            .map(|var| *lt.originals.get(*var).expect("shared var present"))
            .collect();
        *groups.entry(key).or_insert(0) += 1;
    }
    right
        .tuples
        .iter()
        .map(|rt| {
            let key: Vec<i64> = shared
                .iter()
                .map(|var| *rt.originals.get(*var).expect("shared var present"))
                .collect();
            groups.get(&key).copied().unwrap_or(0)
        })
        .sum()
}

/// Resolves a comparison over two evaluated sides into a formula.
pub fn resolve_comparison(
    op: BinaryOp,
    lhs: &IntValue,
    rhs: &IntValue,
    ctx: &mut TransformCtx,
) -> Result<PropFormula, NameCollision> {
    debug_assert!(op.is_comparison());
    if matches!(lhs, IntValue::Fallback(_)) || matches!(rhs, IntValue::Fallback(_)) {
        ctx.stats.fallback_used = true;
        let mut vars = lhs.involved();
        vars.extend(rhs.involved());
        let mut terms = Vec::new();
        for var in &vars {
            terms.push(PropFormula::Var(ctx.epsilon_name(var)?));
        }
        return Ok(PropFormula::conjunction(terms));
    }
    match (lhs, rhs) {
        (IntValue::Lit(a), IntValue::Lit(b)) => Ok(if compare(op, *a, *b) {
            PropFormula::True
        } else {
            PropFormula::False
        }),
        (IntValue::Tuples(ts), IntValue::Lit(b)) => {
            witnesses_to_formula(
                ts.tuples
                    .iter()
                    .filter(|t| compare(op, t.current, *b))
                    .map(|t| &t.originals),
                ctx,
            )
        }
        (IntValue::Lit(a), IntValue::Tuples(ts)) => {
            witnesses_to_formula(
                ts.tuples
                    .iter()
                    .filter(|t| compare(op, *a, t.current))
                    .map(|t| &t.originals),
                ctx,
            )
        }
        (IntValue::Tuples(left), IntValue::Tuples(right)) => {
            let shared: Vec<&String> = left.involved.intersection(&right.involved).collect();
            let mut witnesses = Vec::new();
            for lt in &left.tuples {
                for rt in &right.tuples {
                    if !shared
                        .iter()
                        .all(|var| lt.originals.get(*var) == rt.originals.get(*var))
                    {
                        continue;
                    }
                    if compare(op, lt.current, rt.current) {
                        let mut originals = lt.originals.clone();
                        originals.extend(rt.originals.iter().map(|(k, v)| (k.clone(), *v)));
                        witnesses.push(originals);
                    }
                }
            }
            witnesses.sort_unstable();
            witnesses_to_formula(witnesses.iter(), ctx)
        }
        _ => unreachable!("fallback handled above"),
    }
}

/// One conjunction per witnessing originals assignment, disjoined; `False`
/// when nothing witnesses the comparison.
fn witnesses_to_formula<'a>(
    witnesses: impl Iterator<Item = &'a BTreeMap<String, i64>>,
    ctx: &mut TransformCtx,
) -> Result<PropFormula, NameCollision> {
    let mut terms = Vec::new();
    for originals in witnesses {
        let mut conj = Vec::new();
        for (var, value) in originals {
            conj.push(PropFormula::Var(ctx.value_name(var, *value)?));
        }
        terms.push(PropFormula::conjunction(conj));
    }
    Ok(PropFormula::disjunction(terms))
}

fn compare(op: BinaryOp, a: i64, b: i64) -> bool {
    match op {
        BinaryOp::Eq => a == b,
        BinaryOp::Ne => a != b,
        BinaryOp::Lt => a < b,
        BinaryOp::Le => a <= b,
        BinaryOp::Gt => a > b,
        BinaryOp::Ge => a >= b,
        _ => unreachable!("not a comparison"),
    }
}

/// 64-bit signed arithmetic with wrap-around; `None` marks division or
/// modulo by zero. Shift counts are taken modulo 64 and right shift is
/// arithmetic.
fn apply_arith(op: BinaryOp, a: i64, b: i64) -> Option<i64> {
    match op {
        BinaryOp::Add => Some(a.wrapping_add(b)),
        BinaryOp::Sub => Some(a.wrapping_sub(b)),
        BinaryOp::Mul => Some(a.wrapping_mul(b)),
        BinaryOp::Div => (b != 0).then(|| a.wrapping_div(b)),
        BinaryOp::Rem => (b != 0).then(|| a.wrapping_rem(b)),
        BinaryOp::BitAnd => Some(a & b),
        BinaryOp::BitOr => Some(a | b),
        BinaryOp::BitXor => Some(a ^ b),
        BinaryOp::Shl => Some(a.wrapping_shl(b as u32)),
        BinaryOp::Shr => Some(a.wrapping_shr(b as u32)),
        _ => unreachable!("not an arithmetic operator"),
    }
}

fn apply_unary(op: UnaryOp, v: i64) -> i64 {
    match op {
        UnaryOp::Neg => v.wrapping_neg(),
        UnaryOp::BitNot => !v,
        UnaryOp::LogNot => unreachable!("handled as Boolean structure"),
    }
}
