//! Pure propositional formulas over generated Boolean variable names.

use std::collections::BTreeSet;
use std::fmt;

/// A propositional formula; the replacement for an integer-based condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropFormula {
    True,
    False,
    Var(String),
    Not(Box<PropFormula>),
    And(Box<PropFormula>, Box<PropFormula>),
    Or(Box<PropFormula>, Box<PropFormula>),
}

impl PropFormula {
    pub fn var(name: impl Into<String>) -> Self {
        PropFormula::Var(name.into())
    }

    pub fn not(inner: PropFormula) -> Self {
        PropFormula::Not(Box::new(inner))
    }

    pub fn and(lhs: PropFormula, rhs: PropFormula) -> Self {
        PropFormula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: PropFormula, rhs: PropFormula) -> Self {
        PropFormula::Or(Box::new(lhs), Box::new(rhs))
    }

    /// Left-associated conjunction of the given terms; `True` when empty.
    pub fn conjunction(terms: impl IntoIterator<Item = PropFormula>) -> Self {
        let mut iter = terms.into_iter();
        match iter.next() {
            None => PropFormula::True,
            Some(first) => iter.fold(first, PropFormula::and),
        }
    }

    /// Left-associated disjunction of the given terms; `False` when empty.
    pub fn disjunction(terms: impl IntoIterator<Item = PropFormula>) -> Self {
        let mut iter = terms.into_iter();
        match iter.next() {
            None => PropFormula::False,
            Some(first) => iter.fold(first, PropFormula::or),
        }
    }

    /// All variable names occurring in the formula.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            PropFormula::True | PropFormula::False => {}
            PropFormula::Var(name) => {
                out.insert(name);
            }
            PropFormula::Not(inner) => inner.collect_variables(out),
            PropFormula::And(lhs, rhs) | PropFormula::Or(lhs, rhs) => {
                lhs.collect_variables(out);
                rhs.collect_variables(out);
            }
        }
    }

    /// Evaluates under a valuation of variable names.
    pub fn eval<F: Fn(&str) -> bool + Copy>(&self, valuation: F) -> bool {
        match self {
            PropFormula::True => true,
            PropFormula::False => false,
            PropFormula::Var(name) => valuation(name),
            PropFormula::Not(inner) => !inner.eval(valuation),
            PropFormula::And(lhs, rhs) => lhs.eval(valuation) && rhs.eval(valuation),
            PropFormula::Or(lhs, rhs) => lhs.eval(valuation) || rhs.eval(valuation),
        }
    }

    /// Renders the formula as a C-preprocessor condition.
    ///
    /// Variables come out wrapped as `defined(NAME)`, composite children are
    /// parenthesized, and the truth constants become `1` and `0`.
    pub fn to_condition_string(&self) -> String {
        let mut out = String::new();
        self.render(&mut out, true);
        out
    }

    fn render(&self, out: &mut String, root: bool) {
        match self {
            PropFormula::True => out.push('1'),
            PropFormula::False => out.push('0'),
            PropFormula::Var(name) => {
                out.push_str("defined(");
                out.push_str(name);
                out.push(')');
            }
            PropFormula::Not(inner) => {
                out.push('!');
                inner.render(out, false);
            }
            PropFormula::And(lhs, rhs) => {
                if !root {
                    out.push('(');
                }
                lhs.render(out, false);
                out.push_str(" && ");
                rhs.render(out, false);
                if !root {
                    out.push(')');
                }
            }
            PropFormula::Or(lhs, rhs) => {
                if !root {
                    out.push('(');
                }
                lhs.render(out, false);
                out.push_str(" || ");
                rhs.render(out, false);
                if !root {
                    out.push(')');
                }
            }
        }
    }
}

impl fmt::Display for PropFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_condition_string())
    }
}
