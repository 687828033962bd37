//! Declarative rules files.
//!
//! A rules file is TOML with one `[[rule]]` table per labeling function:
//!
//! ```toml
//! [[rule]]
//! name = "cash_large"
//! when = "product_type in {CashIn, CashOut} and amount > $limit"
//! constants = { limit = 10000 }
//! ```
//!
//! Expression grammar (`and` binds tighter than `or`):
//!
//! ```text
//! expr  := conj ("or" conj)*
//! conj  := term ("and" term)*
//! term  := "(" expr ")" | pred
//! pred  := FIELD "in" "{" VALUE ("," VALUE)* "}"
//!        | "statement" "matches" LIST
//!        | "amount" CMP NUM "*" "avg_amount_prev_month"
//!        | NUMERIC_FIELD CMP NUM
//!        | CATEGORICAL_FIELD ("=" | "!=") VALUE
//! NUM   := number | "$" constant
//! ```

use std::collections::BTreeMap;
use std::iter::Peekable;
use std::str::CharIndices;

use serde::Deserialize;

use super::condition::{CategoricalField, Comparator, NumericField, RuleCondition, MAX_DEPTH};
use super::{LabelingFunction, WeakLabelError};
use crate::data_model::LabelValue;

#[derive(Debug, Deserialize)]
struct RulesFile {
    #[serde(default)]
    rule: Vec<RuleEntry>,
}

#[derive(Debug, Deserialize)]
struct RuleEntry {
    name: String,
    when: String,
    #[serde(default)]
    constants: BTreeMap<String, f64>,
    #[serde(default)]
    emits: Option<String>,
}

/// Parses a rules file into unvalidated labeling functions.
pub fn parse_rules(text: &str) -> Result<Vec<LabelingFunction>, WeakLabelError> {
    let file: RulesFile = toml::from_str(text).map_err(|e| WeakLabelError::RulesFile(e.to_string()))?;
    file.rule
        .into_iter()
        .map(|entry| {
            let condition =
                parse_expression(&entry.when, &entry.constants).map_err(|message| WeakLabelError::Expression {
                    rule: entry.name.clone(),
                    message,
                })?;
            let emits = match entry.emits.as_deref() {
                None | Some("suspicious") => LabelValue::Suspicious,
                Some("normal") => LabelValue::Normal,
                Some(other) => {
                    return Err(WeakLabelError::Expression {
                        rule: entry.name.clone(),
                        message: format!("`emits` must be suspicious or normal, got `{other}`"),
                    })
                }
            };
            Ok(LabelingFunction {
                name: entry.name,
                condition,
                emits,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Number(f64),
    Constant(String),
    Cmp(Comparator),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Star,
}

fn lex(src: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let mut it: Peekable<CharIndices> = src.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        let single = match c {
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            '{' => Some(Token::LBrace),
            '}' => Some(Token::RBrace),
            ',' => Some(Token::Comma),
            '*' => Some(Token::Star),
            _ => None,
        };
        if let Some(t) = single {
            out.push(t);
            it.next();
            continue;
        }
        match c {
            '<' | '>' | '=' | '!' => {
                it.next();
                let eq = it.peek().is_some_and(|&(_, n)| n == '=');
                if eq {
                    it.next();
                }
                let cmp = match (c, eq) {
                    ('<', false) => Comparator::Lt,
                    ('<', true) => Comparator::Le,
                    ('>', false) => Comparator::Gt,
                    ('>', true) => Comparator::Ge,
                    ('=', _) => Comparator::Eq,
                    ('!', true) => Comparator::Ne,
                    _ => return Err(format!("unexpected `!` at {pos}")),
                };
                out.push(Token::Cmp(cmp));
            }
            '$' => {
                it.next();
                let name = take_while(&mut it, |ch| ch.is_alphanumeric() || ch == '_');
                if name.is_empty() {
                    return Err(format!("empty constant name at {pos}"));
                }
                out.push(Token::Constant(name));
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' => {
                let text = take_while(&mut it, |ch| ch.is_ascii_digit() || matches!(ch, '.' | '-' | 'e' | 'E'));
                let n: f64 = text.parse().map_err(|_| format!("bad number `{text}` at {pos}"))?;
                out.push(Token::Number(n));
            }
            c if c.is_alphabetic() || c == '_' => {
                out.push(Token::Ident(take_while(&mut it, |ch| {
                    ch.is_alphanumeric() || ch == '_'
                })));
            }
            other => return Err(format!("unexpected character `{other}` at {pos}")),
        }
    }
    Ok(out)
}

fn take_while(it: &mut Peekable<CharIndices>, pred: impl Fn(char) -> bool) -> String {
    let mut s = String::new();
    while let Some(&(_, c)) = it.peek() {
        if !pred(c) {
            break;
        }
        s.push(c);
        it.next();
    }
    s
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    constants: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Token::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: Token) -> Result<(), String> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(format!("expected {want:?}, found {other:?}")),
        }
    }

    fn ident(&mut self) -> Result<String, String> {
        match self.next() {
            Some(Token::Ident(s)) => Ok(s),
            other => Err(format!("expected identifier, found {other:?}")),
        }
    }

    fn number(&mut self) -> Result<f64, String> {
        match self.next() {
            Some(Token::Number(n)) => Ok(n),
            Some(Token::Constant(c)) => self
                .constants
                .get(&c)
                .copied()
                .ok_or_else(|| format!("undefined constant `${c}`")),
            other => Err(format!("expected number, found {other:?}")),
        }
    }

    fn expr(&mut self) -> Result<RuleCondition, String> {
        let mut parts = vec![self.conj()?];
        while self.keyword("or") {
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            RuleCondition::Or(parts)
        })
    }

    fn conj(&mut self) -> Result<RuleCondition, String> {
        let mut parts = vec![self.term()?];
        while self.keyword("and") {
            parts.push(self.term()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            RuleCondition::And(parts)
        })
    }

    fn term(&mut self) -> Result<RuleCondition, String> {
        if self.peek() == Some(&Token::LParen) {
            self.next();
            let e = self.expr()?;
            self.expect(Token::RParen)?;
            return Ok(e);
        }
        self.predicate()
    }

    fn predicate(&mut self) -> Result<RuleCondition, String> {
        let field = self.ident()?;
        if field == "statement" {
            if !self.keyword("matches") {
                return Err("`statement` only supports `matches <wordlist>`".into());
            }
            return Ok(RuleCondition::WordMatch {
                wordlist: self.ident()?,
            });
        }
        if self.keyword("in") {
            let cat =
                CategoricalField::from_name(&field).ok_or_else(|| format!("`{field}` is not a categorical field"))?;
            self.expect(Token::LBrace)?;
            let mut values = vec![self.ident()?];
            while self.peek() == Some(&Token::Comma) {
                self.next();
                values.push(self.ident()?);
            }
            self.expect(Token::RBrace)?;
            return Ok(RuleCondition::one_of(cat, values));
        }
        let cmp = match self.next() {
            Some(Token::Cmp(c)) => c,
            other => return Err(format!("expected comparator after `{field}`, found {other:?}")),
        };
        if let Some(num) = NumericField::from_name(&field) {
            let value = self.number()?;
            if self.peek() == Some(&Token::Star) {
                self.next();
                let rhs = self.ident()?;
                if num != NumericField::Amount || rhs != "avg_amount_prev_month" {
                    return Err("ratio conditions must read `amount CMP k * avg_amount_prev_month`".into());
                }
                return Ok(RuleCondition::NumericRatio { cmp, multiplier: value });
            }
            return Ok(RuleCondition::threshold(num, cmp, value));
        }
        if let Some(cat) = CategoricalField::from_name(&field) {
            let value = self.ident()?;
            return match cmp {
                Comparator::Eq => Ok(RuleCondition::equals(cat, value)),
                _ => Err(format!("only `=` is supported for categorical field `{field}`")),
            };
        }
        Err(format!("unknown field `{field}`"))
    }
}

/// Parses one predicate expression, substituting `$name` constants.
pub fn parse_expression(src: &str, constants: &BTreeMap<String, f64>) -> Result<RuleCondition, String> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        constants,
    };
    let cond = p.expr()?;
    if p.pos < p.tokens.len() {
        return Err(format!("trailing input starting at {:?}", p.tokens[p.pos]));
    }
    if cond.depth() > MAX_DEPTH {
        return Err(format!("predicate depth {} exceeds {MAX_DEPTH}", cond.depth()));
    }
    Ok(cond)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_constants() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    #[test]
    fn precedence_and_over_or() {
        let c = parse_expression("amount > 1 or amount < 0 and hour >= 22", &no_constants()).unwrap();
        match c {
            RuleCondition::Or(parts) => {
                assert_eq!(parts.len(), 2);
                assert!(matches!(parts[1], RuleCondition::And(_)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ratio_and_constants() {
        let mut k = BTreeMap::new();
        k.insert("m".to_string(), 1.5);
        let c = parse_expression("amount > $m * avg_amount_prev_month", &k).unwrap();
        assert_eq!(
            c,
            RuleCondition::NumericRatio {
                cmp: Comparator::Gt,
                multiplier: 1.5
            }
        );
        assert!(parse_expression("amount > $missing", &k).is_err());
    }

    #[test]
    fn rejects_garbage() {
        for bad in [
            "amount >",
            "colour = red",
            "customer_type > Individual",
            "statement = hijack",
            "(amount > 1",
            "amount > 1 amount",
        ] {
            assert!(parse_expression(bad, &no_constants()).is_err(), "{bad}");
        }
    }

    #[test]
    fn depth_limit() {
        let mut s = "amount > 1".to_string();
        for _ in 0..8 {
            s = format!("(({s}) or hour < 2) and hour > 0");
        }
        let err = parse_expression(&s, &no_constants()).unwrap_err();
        assert!(err.contains("depth"), "{err}");
    }

    #[test]
    fn display_reparses_to_same_tree() {
        let src = "customer_type in {Organisation, Trust} and (amount > 2 * avg_amount_prev_month or statement matches special_words) and credit_score <= 0.5";
        let c = parse_expression(src, &no_constants()).unwrap();
        let again = parse_expression(&c.to_string(), &no_constants()).unwrap();
        assert_eq!(c, again);
    }
}
