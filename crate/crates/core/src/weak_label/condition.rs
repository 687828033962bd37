//! Predicate trees over transaction fields.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::wordlist::Wordlists;
use crate::data_model::TransactionRecord;

pub const MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NumericField {
    Amount,
    AvgAmountPrevMonth,
    CreditScore,
    TransactionCode,
    Hour,
}

impl NumericField {
    pub fn name(self) -> &'static str {
        match self {
            NumericField::Amount => "amount",
            NumericField::AvgAmountPrevMonth => "avg_amount_prev_month",
            NumericField::CreditScore => "credit_score",
            NumericField::TransactionCode => "transaction_code",
            NumericField::Hour => "hour",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "amount" => NumericField::Amount,
            "avg_amount_prev_month" => NumericField::AvgAmountPrevMonth,
            "credit_score" => NumericField::CreditScore,
            "transaction_code" => NumericField::TransactionCode,
            "hour" => NumericField::Hour,
            _ => return None,
        })
    }

    pub fn value(self, r: &TransactionRecord) -> f64 {
        match self {
            NumericField::Amount => r.amount.as_f64(),
            NumericField::AvgAmountPrevMonth => r.avg_amount_prev_month.as_f64(),
            NumericField::CreditScore => r.credit_score.value(),
            NumericField::TransactionCode => r.transaction_code as f64,
            NumericField::Hour => r.hour() as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CategoricalField {
    CustomerType,
    ProductType,
    CreditDebit,
    Currency,
    CountryOrigin,
    CountryDest,
    Branch,
    SourceBank,
    DestBank,
    AccountId,
}

impl CategoricalField {
    pub fn name(self) -> &'static str {
        match self {
            CategoricalField::CustomerType => "customer_type",
            CategoricalField::ProductType => "product_type",
            CategoricalField::CreditDebit => "credit_debit",
            CategoricalField::Currency => "currency",
            CategoricalField::CountryOrigin => "country_origin",
            CategoricalField::CountryDest => "country_dest",
            CategoricalField::Branch => "branch",
            CategoricalField::SourceBank => "source_bank",
            CategoricalField::DestBank => "dest_bank",
            CategoricalField::AccountId => "account_id",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "customer_type" => CategoricalField::CustomerType,
            "product_type" => CategoricalField::ProductType,
            "credit_debit" => CategoricalField::CreditDebit,
            "currency" => CategoricalField::Currency,
            "country_origin" => CategoricalField::CountryOrigin,
            "country_dest" => CategoricalField::CountryDest,
            "branch" => CategoricalField::Branch,
            "source_bank" => CategoricalField::SourceBank,
            "dest_bank" => CategoricalField::DestBank,
            "account_id" => CategoricalField::AccountId,
            _ => return None,
        })
    }

    pub fn value(self, r: &TransactionRecord) -> &str {
        match self {
            CategoricalField::CustomerType => r.customer_type.as_str(),
            CategoricalField::ProductType => r.product_type.as_str(),
            CategoricalField::CreditDebit => r.credit_debit.as_str(),
            CategoricalField::Currency => r.currency.as_str(),
            CategoricalField::CountryOrigin => r.country_origin.as_str(),
            CategoricalField::CountryDest => r.country_dest.as_str(),
            CategoricalField::Branch => &r.branch,
            CategoricalField::SourceBank => &r.source_bank,
            CategoricalField::DestBank => &r.dest_bank,
            CategoricalField::AccountId => &r.account_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Comparator {
    pub fn apply(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RuleCondition {
    NumericThreshold {
        field: NumericField,
        cmp: Comparator,
        value: f64,
    },
    /// `amount <cmp> multiplier * avg_amount_prev_month`
    NumericRatio {
        cmp: Comparator,
        multiplier: f64,
    },
    SetMembership {
        field: CategoricalField,
        values: BTreeSet<String>,
    },
    /// Statement contains a word (or synonym) from the named list.
    WordMatch {
        wordlist: String,
    },
    EnumEquals {
        field: CategoricalField,
        value: String,
    },
    And(Vec<RuleCondition>),
    Or(Vec<RuleCondition>),
}

/// A wordlist referenced by a condition is not loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingList(pub String);

impl RuleCondition {
    pub fn threshold(field: NumericField, cmp: Comparator, value: f64) -> Self {
        RuleCondition::NumericThreshold { field, cmp, value }
    }

    pub fn one_of<I, S>(field: CategoricalField, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RuleCondition::SetMembership {
            field,
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn equals(field: CategoricalField, value: impl Into<String>) -> Self {
        RuleCondition::EnumEquals {
            field,
            value: value.into(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            RuleCondition::And(c) | RuleCondition::Or(c) => 1 + c.iter().map(RuleCondition::depth).max().unwrap_or(0),
            _ => 1,
        }
    }

    pub fn wordlists(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_wordlists(&mut out);
        out
    }

    fn collect_wordlists<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            RuleCondition::WordMatch { wordlist } => {
                out.insert(wordlist);
            }
            RuleCondition::And(c) | RuleCondition::Or(c) => {
                c.iter().for_each(|x| x.collect_wordlists(out));
            }
            _ => {}
        }
    }

    pub fn evaluate(&self, r: &TransactionRecord, words: &Wordlists) -> Result<bool, MissingList> {
        Ok(match self {
            RuleCondition::NumericThreshold { field, cmp, value } => cmp.apply(field.value(r), *value),
            RuleCondition::NumericRatio { cmp, multiplier } => {
                cmp.apply(r.amount.as_f64(), multiplier * r.avg_amount_prev_month.as_f64())
            }
            RuleCondition::SetMembership { field, values } => values.contains(field.value(r)),
            RuleCondition::WordMatch { wordlist } => words
                .matches(wordlist, &r.statement)
                .ok_or_else(|| MissingList(wordlist.clone()))?,
            RuleCondition::EnumEquals { field, value } => field.value(r) == value,
            RuleCondition::And(c) => {
                for x in c {
                    if !x.evaluate(r, words)? {
                        return Ok(false);
                    }
                }
                true
            }
            RuleCondition::Or(c) => {
                for x in c {
                    if x.evaluate(r, words)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }
}

/// Renders the condition in the rules-file expression syntax.
impl fmt::Display for RuleCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleCondition::NumericThreshold { field, cmp, value } => {
                write!(f, "{} {} {}", field.name(), cmp.symbol(), value)
            }
            RuleCondition::NumericRatio { cmp, multiplier } => {
                write!(f, "amount {} {} * avg_amount_prev_month", cmp.symbol(), multiplier)
            }
            RuleCondition::SetMembership { field, values } => {
                let v: Vec<&str> = values.iter().map(String::as_str).collect();
                write!(f, "{} in {{{}}}", field.name(), v.join(", "))
            }
            RuleCondition::WordMatch { wordlist } => write!(f, "statement matches {wordlist}"),
            RuleCondition::EnumEquals { field, value } => write!(f, "{} = {}", field.name(), value),
            RuleCondition::And(c) | RuleCondition::Or(c) => {
                let sep = if matches!(self, RuleCondition::And(_)) {
                    " and "
                } else {
                    " or "
                };
                for (i, x) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    if matches!(x, RuleCondition::And(_) | RuleCondition::Or(_)) {
                        write!(f, "({x})")?;
                    } else {
                        write!(f, "{x}")?;
                    }
                }
                Ok(())
            }
        }
    }
}
