//! Transaction schema, dataset container and canonical CSV I/O.
//!
//! Amounts are held as exact cents and credit scores as exact millionths so
//! that `parse(save(d))` reproduces `d` bit for bit.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 18] = [
    "transaction_id",
    "account_id",
    "customer_type",
    "product_type",
    "transaction_code",
    "branch",
    "source_bank",
    "dest_bank",
    "timestamp",
    "amount",
    "avg_amount_prev_month",
    "currency",
    "credit_debit",
    "country_origin",
    "country_dest",
    "statement",
    "credit_score",
    "expert_label",
];

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("malformed header: expected `{expected}`, found `{found}`")]
    MalformedHeader { expected: String, found: String },
    #[error("row {row}: invalid `{field}`: {message}")]
    Row {
        row: usize,
        field: &'static str,
        message: String,
    },
    #[error("row {row}: duplicate transaction_id `{id}`")]
    DuplicateId { row: usize, id: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Error raised when converting a string into one of the schema enums.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} `{value}`")]
pub struct UnknownVariant {
    pub kind: &'static str,
    pub value: String,
}

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident, $kind:literal, { $($variant:ident),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => stringify!($variant)),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownVariant;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($variant) => Ok($name::$variant),)+
                    _ => Err(UnknownVariant { kind: $kind, value: s.to_string() }),
                }
            }
        }
    };
}

string_enum!(CustomerType, "customer type", {
    Individual,
    Organisation,
    Association,
    Trust,
});

string_enum!(ProductType, "product type", {
    CashIn,
    CashOut,
    Card,
    DirectPayment,
    ChequeIn,
    ChequeOut,
    OnlineBanking,
    GlobalPayment,
});

string_enum!(CreditDebit, "credit/debit status", { Credit, Debit });

impl ProductType {
    pub fn is_cash(self) -> bool {
        matches!(self, ProductType::CashIn | ProductType::CashOut)
    }
}

/// Transaction label. `Suspicious` is the positive class (1), `Normal` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelValue {
    Suspicious,
    Normal,
    Unlabeled,
}

impl LabelValue {
    pub fn from_bool(suspicious: bool) -> Self {
        if suspicious {
            LabelValue::Suspicious
        } else {
            LabelValue::Normal
        }
    }

    pub fn is_suspicious(self) -> bool {
        self == LabelValue::Suspicious
    }

    pub fn is_labeled(self) -> bool {
        self != LabelValue::Unlabeled
    }

    /// `"1"`, `"0"` or the empty string.
    pub fn as_field(self) -> &'static str {
        match self {
            LabelValue::Suspicious => "1",
            LabelValue::Normal => "0",
            LabelValue::Unlabeled => "",
        }
    }

    pub fn from_field(s: &str) -> Option<Self> {
        match s {
            "1" => Some(LabelValue::Suspicious),
            "0" => Some(LabelValue::Normal),
            "" => Some(LabelValue::Unlabeled),
            _ => None,
        }
    }
}

/// Non-negative currency amount in cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Money(u64);

impl Money {
    pub fn from_cents(cents: u64) -> Self {
        Money(cents)
    }

    /// Rounds to the nearest cent. Negative or non-finite input is clamped to zero.
    pub fn from_units(units: f64) -> Self {
        if units.is_finite() && units > 0.0 {
            Money((units * 100.0).round() as u64)
        } else {
            Money(0)
        }
    }

    pub fn cents(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for Money {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.starts_with('-') {
            return Err("amount must be non-negative".into());
        }
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("not a decimal amount: `{s}`"));
        }
        if frac.len() > 2 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("at most two fractional digits allowed: `{s}`"));
        }
        let units: u64 = whole.parse().map_err(|_| format!("amount too large: `{s}`"))?;
        let cents = match frac.len() {
            0 => 0,
            1 => frac.parse::<u64>().unwrap() * 10,
            _ => frac.parse::<u64>().unwrap(),
        };
        units
            .checked_mul(100)
            .and_then(|c| c.checked_add(cents))
            .map(Money)
            .ok_or_else(|| format!("amount too large: `{s}`"))
    }
}

/// Credit score in `[0, 1]`, stored in millionths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CreditScore(u32);

impl CreditScore {
    const SCALE: f64 = 1_000_000.0;

    pub fn new(value: f64) -> Option<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Some(CreditScore((value * Self::SCALE).round() as u32))
        } else {
            None
        }
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / Self::SCALE
    }
}

impl fmt::Display for CreditScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}

/// ISO 3166 alpha-3 (or ISO 4217) style code: exactly three uppercase ASCII letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Code3([u8; 3]);

impl Code3 {
    pub fn parse(s: &str) -> Option<Self> {
        let b = s.as_bytes();
        if b.len() == 3 && b.iter().all(|c| c.is_ascii_uppercase()) {
            Some(Code3([b[0], b[1], b[2]]))
        } else {
            None
        }
    }

    /// Panics on an invalid literal; for constants only.
    pub fn lit(s: &str) -> Self {
        Self::parse(s).unwrap_or_else(|| panic!("invalid code literal `{s}`"))
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).expect("ascii")
    }
}

impl fmt::Display for Code3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub transaction_id: String,
    pub account_id: String,
    pub customer_type: CustomerType,
    pub product_type: ProductType,
    pub transaction_code: u16,
    pub branch: String,
    pub source_bank: String,
    pub dest_bank: String,
    pub timestamp: NaiveDateTime,
    pub amount: Money,
    pub avg_amount_prev_month: Money,
    pub currency: Code3,
    pub credit_debit: CreditDebit,
    pub country_origin: Code3,
    pub country_dest: Code3,
    pub statement: String,
    pub credit_score: CreditScore,
    pub expert_label: Option<LabelValue>,
}

impl TransactionRecord {
    pub fn hour(&self) -> u32 {
        self.timestamp.hour()
    }

    pub fn is_domestic(&self, home: Code3) -> bool {
        self.country_origin == home && self.country_dest == home
    }

    fn to_fields(&self) -> [String; 18] {
        [
            self.transaction_id.clone(),
            self.account_id.clone(),
            self.customer_type.to_string(),
            self.product_type.to_string(),
            self.transaction_code.to_string(),
            self.branch.clone(),
            self.source_bank.clone(),
            self.dest_bank.clone(),
            self.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            self.amount.to_string(),
            self.avg_amount_prev_month.to_string(),
            self.currency.to_string(),
            self.credit_debit.to_string(),
            self.country_origin.to_string(),
            self.country_dest.to_string(),
            self.statement.clone(),
            self.credit_score.to_string(),
            self.expert_label
                .unwrap_or(LabelValue::Unlabeled)
                .as_field()
                .to_string(),
        ]
    }

    fn from_fields(row: usize, rec: &csv::StringRecord) -> Result<Self, DataError> {
        let field = |i: usize| rec.get(i).unwrap_or("");
        let err = |name: &'static str, message: String| DataError::Row {
            row,
            field: name,
            message,
        };
        let non_empty = |i: usize, name: &'static str| -> Result<String, DataError> {
            let v = field(i);
            if v.is_empty() {
                Err(err(name, "must not be empty".into()))
            } else {
                Ok(v.to_string())
            }
        };
        let code = |i: usize, name: &'static str| {
            Code3::parse(field(i)).ok_or_else(|| err(name, format!("expected 3 uppercase letters, got `{}`", field(i))))
        };
        let money = |i: usize, name: &'static str| field(i).parse::<Money>().map_err(|m| err(name, m));

        if rec.len() != CSV_HEADER.len() {
            return Err(err(
                "record",
                format!("expected {} fields, found {}", CSV_HEADER.len(), rec.len()),
            ));
        }

        let credit_raw: f64 = field(16)
            .parse()
            .map_err(|_| err("credit_score", format!("not a number: `{}`", field(16))))?;
        let credit_score =
            CreditScore::new(credit_raw).ok_or_else(|| err("credit_score", format!("{credit_raw} outside [0, 1]")))?;

        let expert_label = match LabelValue::from_field(field(17)) {
            Some(LabelValue::Unlabeled) => None,
            Some(l) => Some(l),
            None => {
                return Err(err(
                    "expert_label",
                    format!("expected 0, 1 or empty, got `{}`", field(17)),
                ))
            }
        };

        Ok(TransactionRecord {
            transaction_id: non_empty(0, "transaction_id")?,
            account_id: non_empty(1, "account_id")?,
            customer_type: field(2)
                .parse()
                .map_err(|e: UnknownVariant| err("customer_type", e.to_string()))?,
            product_type: field(3)
                .parse()
                .map_err(|e: UnknownVariant| err("product_type", e.to_string()))?,
            transaction_code: field(4)
                .parse()
                .map_err(|_| err("transaction_code", format!("not a small integer: `{}`", field(4))))?,
            branch: non_empty(5, "branch")?,
            source_bank: non_empty(6, "source_bank")?,
            dest_bank: non_empty(7, "dest_bank")?,
            timestamp: NaiveDateTime::parse_from_str(field(8), TIMESTAMP_FORMAT)
                .map_err(|e| err("timestamp", format!("`{}`: {e}", field(8))))?,
            amount: money(9, "amount")?,
            avg_amount_prev_month: money(10, "avg_amount_prev_month")?,
            currency: code(11, "currency")?,
            credit_debit: field(12)
                .parse()
                .map_err(|e: UnknownVariant| err("credit_debit", e.to_string()))?,
            country_origin: code(13, "country_origin")?,
            country_dest: code(14, "country_dest")?,
            statement: field(15).to_string(),
            credit_score,
            expert_label,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    schema_version: u32,
    records: Vec<TransactionRecord>,
}

impl Dataset {
    /// Builds a dataset, rejecting duplicate transaction ids.
    pub fn new(records: Vec<TransactionRecord>) -> Result<Self, DataError> {
        let mut seen = HashSet::with_capacity(records.len());
        for (row, r) in records.iter().enumerate() {
            if !seen.insert(r.transaction_id.as_str()) {
                return Err(DataError::DuplicateId {
                    row,
                    id: r.transaction_id.clone(),
                });
            }
        }
        Ok(Dataset {
            schema_version: SCHEMA_VERSION,
            records,
        })
    }

    pub fn empty() -> Self {
        Dataset {
            schema_version: SCHEMA_VERSION,
            records: Vec::new(),
        }
    }

    pub fn schema_version(&self) -> u32 {
        self.schema_version
    }

    pub fn records(&self) -> &[TransactionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, i: usize) -> &TransactionRecord {
        &self.records[i]
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema_version: self.schema_version,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Copy with every expert label cleared except at `keep` indices.
    pub fn with_expert_labels_only_at(&self, keep: &[usize]) -> Dataset {
        let keep: HashSet<usize> = keep.iter().copied().collect();
        let records = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut r = r.clone();
                if !keep.contains(&i) {
                    r.expert_label = None;
                }
                r
            })
            .collect();
        Dataset {
            schema_version: self.schema_version,
            records,
        }
    }
}

/// Parses the canonical CSV form. Rows are validated as they are read.
pub fn parse_transactions<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();

    let header = match rows.next() {
        Some(h) => h?,
        None => {
            return Err(DataError::MalformedHeader {
                expected: CSV_HEADER.join(","),
                found: String::new(),
            })
        }
    };
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(DataError::MalformedHeader {
            expected: CSV_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut records = Vec::new();
    for (row, rec) in rows.enumerate() {
        records.push(TransactionRecord::from_fields(row, &rec?)?);
    }
    Dataset::new(records)
}

pub fn parse_transactions_str(text: &str) -> Result<Dataset, DataError> {
    parse_transactions(text.as_bytes())
}

/// Writes the canonical CSV form: fixed header, schema order, two-decimal
/// amounts and six-decimal scores.
pub fn write_transactions<W: Write>(d: &Dataset, writer: W) -> Result<(), DataError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in &d.records {
        w.write_record(r.to_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_transactions(d: &Dataset) -> String {
    let mut buf = Vec::new();
    write_transactions(d, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Expert label where present, else `Unlabeled`.
pub fn labels_of(d: &Dataset) -> Vec<LabelValue> {
    d.records
        .iter()
        .map(|r| r.expert_label.unwrap_or(LabelValue::Unlabeled))
        .collect()
}
