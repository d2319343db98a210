//! Tokenizer and recursive-descent parser for a single `#if`/`#elif`
//! condition, with full C operator precedence.
//!
//! Constructs the tool cannot interpret do not fail hard; they yield a
//! [`SkipReason`] so the caller can keep the original condition in place and
//! report a warning.

use std::fmt;

use crate::ast::{BinaryOp, CondExpr, UnaryOp};

/// Why a condition is left untouched instead of being converted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    /// The token-pasting operator `##`.
    StringConcat,
    /// A function-like macro call such as `FOO(1)`.
    MacroFunctionCall,
    /// A character or string literal.
    CharOrStringLiteral,
    /// Anything else the grammar does not cover.
    SyntaxError(String),
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::StringConcat => write!(f, "string concatenation operator `##`"),
            SkipReason::MacroFunctionCall => write!(f, "function-like macro call"),
            SkipReason::CharOrStringLiteral => write!(f, "character or string literal"),
            SkipReason::SyntaxError(detail) => write!(f, "syntax error: {detail}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Int(i64),
    Ident(String),
    Defined,
    LParen,
    RParen,
    Op(BinaryOp),
    /// `!` and `~`; `-` arrives as `Op(Sub)` and is re-read as unary in context.
    LogNot,
    BitNot,
}

/// Splits a condition string into tokens.
///
/// Comments must already be stripped and continuations joined.
pub fn tokenize(text: &str) -> Result<Vec<Token>, SkipReason> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'\'' | b'"' => return Err(SkipReason::CharOrStringLiteral),
            b'#' => {
                if bytes.get(i + 1) == Some(&b'#') {
                    return Err(SkipReason::StringConcat);
                }
                return Err(syntax("stray `#`"));
            }
            b'(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            b')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            b'0'..=b'9' => {
                let (value, next) = lex_int(bytes, i)?;
                tokens.push(Token::Int(value));
                i = next;
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                if word == "defined" {
                    tokens.push(Token::Defined);
                } else {
                    tokens.push(Token::Ident(word.to_string()));
                }
            }
            b'!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token::Op(BinaryOp::Ne));
                    i += 2;
                } else {
                    tokens.push(Token::LogNot);
                    i += 1;
                }
            }
            b'~' => {
                tokens.push(Token::BitNot);
                i += 1;
            }
            b'+' => {
                tokens.push(Token::Op(BinaryOp::Add));
                i += 1;
            }
            b'-' => {
                tokens.push(Token::Op(BinaryOp::Sub));
                i += 1;
            }
            b'*' => {
                tokens.push(Token::Op(BinaryOp::Mul));
                i += 1;
            }
            b'/' => {
                tokens.push(Token::Op(BinaryOp::Div));
                i += 1;
            }
            b'%' => {
                tokens.push(Token::Op(BinaryOp::Rem));
                i += 1;
            }
            b'^' => {
                tokens.push(Token::Op(BinaryOp::BitXor));
                i += 1;
            }
            b'&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    tokens.push(Token::Op(BinaryOp::LogAnd));
                    i += 2;
                } else {
                    tokens.push(Token::Op(BinaryOp::BitAnd));
                    i += 1;
                }
            }
            b'|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    tokens.push(Token::Op(BinaryOp::LogOr));
                    i += 2;
                } else {
                    tokens.push(Token::Op(BinaryOp::BitOr));
                    i += 1;
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token::Op(BinaryOp::Eq));
                    i += 2;
                } else {
                    return Err(syntax("stray `=`"));
                }
            }
            b'<' => match bytes.get(i + 1) {
                Some(&b'=') => {
                    tokens.push(Token::Op(BinaryOp::Le));
                    i += 2;
                }
                Some(&b'<') => {
                    tokens.push(Token::Op(BinaryOp::Shl));
                    i += 2;
                }
                _ => {
                    tokens.push(Token::Op(BinaryOp::Lt));
                    i += 1;
                }
            },
            b'>' => match bytes.get(i + 1) {
                Some(&b'=') => {
                    tokens.push(Token::Op(BinaryOp::Ge));
                    i += 2;
                }
                Some(&b'>') => {
                    tokens.push(Token::Op(BinaryOp::Shr));
                    i += 2;
                }
                _ => {
                    tokens.push(Token::Op(BinaryOp::Gt));
                    i += 1;
                }
            },
            _ => {
                let c = text[i..].chars().next().unwrap_or('?');
                return Err(syntax(&format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(tokens)
}

fn syntax(detail: &str) -> SkipReason {
    SkipReason::SyntaxError(detail.to_string())
}

/// Lexes decimal, hex `0x...`, or octal leading-`0` literals.
///
/// Values wrap into 64-bit signed range; `u`/`l` suffixes are consumed.
fn lex_int(bytes: &[u8], start: usize) -> Result<(i64, usize), SkipReason> {
    let mut i = start;
    let (radix, digits_start) =
        if bytes[i] == b'0' && matches!(bytes.get(i + 1), Some(b'x') | Some(b'X')) {
            (16u32, i + 2)
        } else if bytes[i] == b'0' && matches!(bytes.get(i + 1), Some(b'0'..=b'7')) {
            (8u32, i + 1)
        } else {
            (10u32, i)
        };
    i = digits_start;
    let mut value: u64 = 0;
    let mut any = false;
    while i < bytes.len() {
        let d = match bytes[i] {
            b'0'..=b'9' => (bytes[i] - b'0') as u32,
            b'a'..=b'f' if radix == 16 => (bytes[i] - b'a' + 10) as u32,
            b'A'..=b'F' if radix == 16 => (bytes[i] - b'A' + 10) as u32,
            _ => break,
        };
        if d >= radix {
            return Err(syntax("invalid digit in integer literal"));
        }
        value = value.wrapping_mul(radix as u64).wrapping_add(d as u64);
        any = true;
        i += 1;
    }
    if !any && radix != 10 {
        return Err(syntax("integer literal without digits"));
    }
    while i < bytes.len() && matches!(bytes[i], b'u' | b'U' | b'l' | b'L') {
        i += 1;
    }
    if i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
        return Err(syntax("malformed integer literal"));
    }
    Ok((value as i64, i))
}

/// Parses a token sequence into a [`CondExpr`].
pub fn parse(tokens: &[Token]) -> Result<CondExpr, SkipReason> {
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expression(0)?;
    if parser.pos != tokens.len() {
        return Err(syntax("trailing tokens after expression"));
    }
    Ok(expr)
}

/// Tokenizes and parses in one step.
pub fn parse_condition(text: &str) -> Result<CondExpr, SkipReason> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(syntax("empty condition"));
    }
    parse(&tokens)
}

/// Binding strength, loosest first: `||`, `&&`, `|`, `^`, `&`, equality,
/// relational, shifts, additive, multiplicative.
fn precedence(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::LogOr => 1,
        BinaryOp::LogAnd => 2,
        BinaryOp::BitOr => 3,
        BinaryOp::BitXor => 4,
        BinaryOp::BitAnd => 5,
        BinaryOp::Eq | BinaryOp::Ne => 6,
        BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
        BinaryOp::Shl | BinaryOp::Shr => 8,
        BinaryOp::Add | BinaryOp::Sub => 9,
        BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 10,
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn expression(&mut self, min_prec: u8) -> Result<CondExpr, SkipReason> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op)) = self.peek() {
            let prec = precedence(*op);
            if prec < min_prec {
                break;
            }
            let op = *op;
            self.pos += 1;
            let rhs = self.expression(prec + 1)?;
            lhs = CondExpr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<CondExpr, SkipReason> {
        match self.peek() {
            Some(Token::LogNot) => {
                self.pos += 1;
                Ok(CondExpr::unary(UnaryOp::LogNot, self.unary()?))
            }
            Some(Token::BitNot) => {
                self.pos += 1;
                Ok(CondExpr::unary(UnaryOp::BitNot, self.unary()?))
            }
            Some(Token::Op(BinaryOp::Sub)) => {
                self.pos += 1;
                Ok(CondExpr::unary(UnaryOp::Neg, self.unary()?))
            }
            Some(Token::Op(BinaryOp::Add)) => {
                // unary plus is a no-op
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<CondExpr, SkipReason> {
        match self.bump() {
            Some(Token::Int(v)) => Ok(CondExpr::Int(*v)),
            Some(Token::Ident(name)) => {
                if matches!(self.peek(), Some(Token::LParen)) {
                    return Err(SkipReason::MacroFunctionCall);
                }
                Ok(CondExpr::Ident(name.clone()))
            }
            Some(Token::Defined) => self.defined_operand(),
            Some(Token::LParen) => {
                let expr = self.expression(0)?;
                match self.bump() {
                    Some(Token::RParen) => Ok(expr),
                    _ => Err(syntax("missing closing `)`")),
                }
            }
            Some(tok) => Err(syntax(&format!("unexpected token {tok:?}"))),
            None => Err(syntax("unexpected end of condition")),
        }
    }

    /// `defined NAME` and `defined(NAME)` are both accepted.
    fn defined_operand(&mut self) -> Result<CondExpr, SkipReason> {
        match self.bump() {
            Some(Token::Ident(name)) => Ok(CondExpr::Defined(name.clone())),
            Some(Token::LParen) => {
                let name = match self.bump() {
                    Some(Token::Ident(name)) => name.clone(),
                    _ => return Err(syntax("`defined(` expects an identifier")),
                };
                match self.bump() {
                    Some(Token::RParen) => Ok(CondExpr::Defined(name)),
                    _ => Err(syntax("`defined(` missing closing `)`")),
                }
            }
            _ => Err(syntax("`defined` expects an identifier")),
        }
    }
}
