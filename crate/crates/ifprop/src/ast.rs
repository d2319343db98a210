//! AST of a C-preprocessor condition.

use std::fmt;

/// Unary operators of the condition grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    /// `-`
    Neg,
    /// `~`
    BitNot,
    /// `!`
    LogNot,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::BitNot => "~",
            UnaryOp::LogNot => "!",
        }
    }
}

/// Binary operators of the condition grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LogAnd,
    LogOr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::LogAnd => "&&",
            BinaryOp::LogOr => "||",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::LogAnd | BinaryOp::LogOr)
    }

    pub fn is_arithmetic(self) -> bool {
        !self.is_comparison() && !self.is_logical()
    }
}

/// A parsed condition.
///
/// `Bool` never comes out of the parser; it appears only in transformed trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CondExpr {
    Int(i64),
    Ident(String),
    Defined(String),
    Bool(bool),
    Unary {
        op: UnaryOp,
        expr: Box<CondExpr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<CondExpr>,
        rhs: Box<CondExpr>,
    },
}

impl CondExpr {
    pub fn unary(op: UnaryOp, expr: CondExpr) -> Self {
        CondExpr::Unary {
            op,
            expr: Box::new(expr),
        }
    }

    pub fn binary(op: BinaryOp, lhs: CondExpr, rhs: CondExpr) -> Self {
        CondExpr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    /// True when the node's root already produces a Boolean value.
    pub fn has_boolean_root(&self) -> bool {
        match self {
            CondExpr::Defined(_) | CondExpr::Bool(_) => true,
            CondExpr::Unary {
                op: UnaryOp::LogNot,
                ..
            } => true,
            CondExpr::Binary { op, .. } => op.is_comparison() || op.is_logical(),
            _ => false,
        }
    }

    /// All identifiers used for their value, in no particular order.
    pub fn value_idents<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            CondExpr::Ident(name) => out.push(name),
            CondExpr::Unary { expr, .. } => expr.value_idents(out),
            CondExpr::Binary { lhs, rhs, .. } => {
                lhs.value_idents(out);
                rhs.value_idents(out);
            }
            _ => {}
        }
    }

    /// All identifiers queried via `defined(...)`.
    pub fn defined_idents<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            CondExpr::Defined(name) => out.push(name),
            CondExpr::Unary { expr, .. } => expr.defined_idents(out),
            CondExpr::Binary { lhs, rhs, .. } => {
                lhs.defined_idents(out);
                rhs.defined_idents(out);
            }
            _ => {}
        }
    }

    /// Condition-string form; alias for the `Display` impl.
    pub fn to_condition_string(&self) -> String {
        self.to_string()
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CondExpr::Int(v) if *v >= 0 => write!(f, "{v}"),
            CondExpr::Ident(_) | CondExpr::Defined(_) | CondExpr::Bool(_) => write!(f, "{self}"),
            _ => write!(f, "({self})"),
        }
    }
}

/// Serialization back to a condition string.
///
/// Every composite child is parenthesized, so the output re-parses to a
/// structurally identical tree; only the root goes bare.
impl fmt::Display for CondExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CondExpr::Int(v) => write!(f, "{v}"),
            CondExpr::Ident(name) => write!(f, "{name}"),
            CondExpr::Defined(name) => write!(f, "defined({name})"),
            CondExpr::Bool(true) => write!(f, "1"),
            CondExpr::Bool(false) => write!(f, "0"),
            CondExpr::Unary { op, expr } => {
                write!(f, "{}", op.symbol())?;
                expr.fmt_child(f)
            }
            CondExpr::Binary { op, lhs, rhs } => {
                lhs.fmt_child(f)?;
                write!(f, " {} ", op.symbol())?;
                rhs.fmt_child(f)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_parenthesizes_children_only() {
        let expr = CondExpr::binary(
            BinaryOp::LogOr,
            CondExpr::binary(
                BinaryOp::Gt,
                CondExpr::binary(BinaryOp::Mul, CondExpr::Ident("VAR_A".into()), CondExpr::Int(2)),
                CondExpr::Ident("VAR_B".into()),
            ),
            CondExpr::Defined("VAR_C".into()),
        );
        assert_eq!(
            expr.to_string(),
            "((VAR_A * 2) > VAR_B) || defined(VAR_C)"
        );
    }

    #[test]
    fn bool_literals_render_as_preprocessor_truth() {
        assert_eq!(CondExpr::Bool(true).to_string(), "1");
        assert_eq!(CondExpr::Bool(false).to_string(), "0");
    }

    #[test]
    fn unary_chain_renders() {
        let expr = CondExpr::unary(
            UnaryOp::LogNot,
            CondExpr::unary(UnaryOp::Neg, CondExpr::Ident("A".into())),
        );
        assert_eq!(expr.to_string(), "!(-A)");
    }
}
