//! Seeded synthetic transaction generator.
//!
//! Produces a [`Dataset`] together with hidden ground truth and a scenario tag
//! per row. Rule-aligned suspicious scenarios are planted so that they clear
//! the thresholds of the built-in labeling functions; `StealthLaundering`
//! rows are suspicious yet fire no rule, `BenignLookalike` rows are normal
//! yet fire at least one. Every random draw goes through [`SeededRng`], so the
//! output is a pure function of the configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::{
    Code3, CreditDebit, CreditScore, CustomerType, Dataset, LabelValue, Money, ProductType, TransactionRecord,
};
use crate::rng::SeededRng;
use crate::weak_label::{builtin_lfs, LabelingFunction, RuleThresholds, Vote, Wordlists};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("ground truth: {0}")]
    GroundTruth(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioTag {
    CleanRoutine,
    CashStructuring,
    BlacklistCorridor,
    WildlifeCorridor,
    KeywordStatement,
    VelocitySpike,
    LowScoreLargeAmount,
    StealthLaundering,
    BenignLookalike,
}

impl ScenarioTag {
    pub const ALL: [ScenarioTag; 9] = [
        ScenarioTag::CleanRoutine,
        ScenarioTag::CashStructuring,
        ScenarioTag::BlacklistCorridor,
        ScenarioTag::WildlifeCorridor,
        ScenarioTag::KeywordStatement,
        ScenarioTag::VelocitySpike,
        ScenarioTag::LowScoreLargeAmount,
        ScenarioTag::StealthLaundering,
        ScenarioTag::BenignLookalike,
    ];

    pub fn is_suspicious(self) -> bool {
        !matches!(self, ScenarioTag::CleanRoutine | ScenarioTag::BenignLookalike)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioTag::CleanRoutine => "CleanRoutine",
            ScenarioTag::CashStructuring => "CashStructuring",
            ScenarioTag::BlacklistCorridor => "BlacklistCorridor",
            ScenarioTag::WildlifeCorridor => "WildlifeCorridor",
            ScenarioTag::KeywordStatement => "KeywordStatement",
            ScenarioTag::VelocitySpike => "VelocitySpike",
            ScenarioTag::LowScoreLargeAmount => "LowScoreLargeAmount",
            ScenarioTag::StealthLaundering => "StealthLaundering",
            ScenarioTag::BenignLookalike => "BenignLookalike",
        }
    }
}

impl fmt::Display for ScenarioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioTag {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GenError::GroundTruth(format!("unknown scenario tag `{s}`")))
    }
}

pub fn describe_scenarios() -> Vec<(ScenarioTag, &'static str)> {
    ScenarioTag::ALL
        .into_iter()
        .map(|t| {
            let text = match t {
                ScenarioTag::CleanRoutine => "ordinary traffic; fires no labeling rule",
                ScenarioTag::CashStructuring => "cash deposit or withdrawal above the cash limit (rule 1)",
                ScenarioTag::BlacklistCorridor => {
                    "transfer from or to a blacklisted country above its limit (rules 2 and 4)"
                }
                ScenarioTag::WildlifeCorridor => {
                    "transfer from or to a wildlife-trafficking country above its limit (rules 3 and 5)"
                }
                ScenarioTag::KeywordStatement => {
                    "statement contains a watched keyword and the amount clears the keyword limit (rules 6 and 7)"
                }
                ScenarioTag::VelocitySpike => "amount far above the account's previous-month average (rules 8 and 9)",
                ScenarioTag::LowScoreLargeAmount => {
                    "individual with a very low credit score moving a large amount (rule 10)"
                }
                ScenarioTag::StealthLaundering => "suspicious activity kept just under every rule threshold",
                ScenarioTag::BenignLookalike => "legitimate activity that happens to trip one rule",
            };
            (t, text)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_rows: usize,
    pub suspicious_rate: f64,
    pub domestic_rate: f64,
    pub anchor_fraction: f64,
    /// not read from config files; the pipeline derives it from its master seed
    #[serde(skip)]
    pub seed: u64,
    pub scenario_mix: BTreeMap<ScenarioTag, f64>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_rows: 100_000,
            suspicious_rate: 0.08,
            domestic_rate: 0.95,
            anchor_fraction: 0.10,
            seed: 42,
            scenario_mix: default_mix(0.08),
        }
    }
}

/// Rule-aligned scenarios share 90% of the suspicious mass, stealth gets 10%;
/// benign lookalikes take 2% of the normal mass.
pub fn default_mix(suspicious_rate: f64) -> BTreeMap<ScenarioTag, f64> {
    let normal = 1.0 - suspicious_rate;
    let mut mix = BTreeMap::new();
    mix.insert(ScenarioTag::CleanRoutine, normal * 0.98);
    mix.insert(ScenarioTag::BenignLookalike, normal * 0.02);
    let rule_aligned = [
        ScenarioTag::CashStructuring,
        ScenarioTag::BlacklistCorridor,
        ScenarioTag::WildlifeCorridor,
        ScenarioTag::KeywordStatement,
        ScenarioTag::VelocitySpike,
        ScenarioTag::LowScoreLargeAmount,
    ];
    for t in rule_aligned {
        mix.insert(t, suspicious_rate * 0.9 / rule_aligned.len() as f64);
    }
    mix.insert(ScenarioTag::StealthLaundering, suspicious_rate * 0.1);
    mix
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::Config(m));
        if self.n_rows == 0 {
            return bad("n_rows must be positive".into());
        }
        if !(self.suspicious_rate > 0.0 && self.suspicious_rate <= 0.10) {
            return bad(format!("suspicious_rate {} outside (0, 0.10]", self.suspicious_rate));
        }
        if !(0.95..=1.0).contains(&self.domestic_rate) {
            return bad(format!("domestic_rate {} outside [0.95, 1]", self.domestic_rate));
        }
        if !(0.0..=1.0).contains(&self.anchor_fraction) {
            return bad(format!("anchor_fraction {} outside [0, 1]", self.anchor_fraction));
        }
        if let Some((t, w)) = self.scenario_mix.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return bad(format!("weight for {t} must be non-negative, got {w}"));
        }
        let total: f64 = self.scenario_mix.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("scenario weights sum to {total}, expected 1"));
        }
        let weight = |suspicious: bool| -> f64 {
            self.scenario_mix
                .iter()
                .filter(|(t, _)| t.is_suspicious() == suspicious)
                .map(|(_, w)| w)
                .sum()
        };
        if weight(true) <= 0.0 {
            return bad("scenario_mix has no suspicious scenario weight".into());
        }
        if weight(false) <= 0.0 {
            return bad("scenario_mix has no normal scenario weight".into());
        }
        Ok(())
    }

    pub fn suspicious_count(&self) -> usize {
        (self.n_rows as f64 * self.suspicious_rate).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: Dataset,
    pub ground_truth: Vec<LabelValue>,
    pub tags: Vec<ScenarioTag>,
}

const HOME: &str = "AUS";
const HOME_CURRENCY: &str = "AUD";
const CLEAN_FOREIGN: [(&str, &str); 8] = [
    ("NZL", "NZD"),
    ("GBR", "GBP"),
    ("USA", "USD"),
    ("SGP", "SGD"),
    ("CHN", "CNY"),
    ("IND", "INR"),
    ("JPN", "JPY"),
    ("DEU", "EUR"),
];
const DOMESTIC_BANKS: [&str; 6] = ["ANZ", "BEN", "BOQ", "CBA", "NAB", "WBC"];
const FOREIGN_BANKS: [&str; 6] = ["BNP", "CITI", "DBS", "HBL", "HSBC", "SCB"];
const ROUTINE_STATEMENTS: [&str; 14] = [
    "groceries",
    "salary",
    "rent payment",
    "invoice",
    "utilities",
    "school fees",
    "insurance premium",
    "fuel",
    "dining",
    "phone bill",
    "transfer to savings",
    "gym membership",
    "medical",
    "supplier payment",
];
const BENIGN_KEYWORD_STATEMENTS: [&str; 4] = [
    "hijack movie night tickets",
    "terror tales book club",
    "ivory white paint order",
    "firearms licence course",
];
const NIGHT_HOURS: [i64; 7] = [22, 23, 0, 1, 2, 3, 4];
const BENIGN_VARIANTS: usize = 6;

/// Smallest-remainder allocation of `total` items by `weights`.
fn allocate(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut rest = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        if weights[i] > 0.0 {
            counts[i] += 1;
            rest -= 1;
        }
    }
    counts
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    tag: ScenarioTag,
    variant: usize,
    foreign: bool,
}

struct RowFactory<'a> {
    rng: SeededRng,
    n_accounts: u64,
    lfs: &'a [LabelingFunction],
    words: &'a Wordlists,
    keywords: Vec<String>,
    blacklist: Vec<String>,
    wildlife: Vec<String>,
    epoch: NaiveDateTime,
}

impl RowFactory<'_> {
    fn fires_any(&self, r: &TransactionRecord) -> bool {
        self.lfs
            .iter()
            .any(|lf| matches!(lf.vote(r, self.words), Ok(Vote::Suspicious)))
    }

    fn timestamp(&mut self, hour: i64) -> NaiveDateTime {
        let day = self.rng.below(365) as i64;
        let minute = self.rng.below(60) as i64;
        self.epoch + Duration::days(day) + Duration::hours(hour) + Duration::minutes(minute)
    }

    fn day_hour(&mut self) -> i64 {
        7 + self.rng.below(14) as i64
    }

    fn night_hour(&mut self) -> i64 {
        *self.rng.choose(&NIGHT_HOURS)
    }

    fn routine_hour(&mut self) -> i64 {
        if self.rng.bernoulli(0.9) {
            self.day_hour()
        } else {
            self.rng.below(24) as i64
        }
    }

    fn customer_type(&mut self) -> CustomerType {
        const T: [CustomerType; 4] = [
            CustomerType::Individual,
            CustomerType::Organisation,
            CustomerType::Association,
            CustomerType::Trust,
        ];
        T[self.rng.weighted_index(&[0.75, 0.15, 0.05, 0.05])]
    }

    fn entity_type(&mut self) -> CustomerType {
        const T: [CustomerType; 3] = [
            CustomerType::Organisation,
            CustomerType::Association,
            CustomerType::Trust,
        ];
        T[self.rng.weighted_index(&[0.6, 0.2, 0.2])]
    }

    fn domestic_product(&mut self) -> ProductType {
        const P: [ProductType; 8] = [
            ProductType::Card,
            ProductType::DirectPayment,
            ProductType::OnlineBanking,
            ProductType::CashIn,
            ProductType::CashOut,
            ProductType::ChequeIn,
            ProductType::ChequeOut,
            ProductType::GlobalPayment,
        ];
        P[self.rng.weighted_index(&[0.32, 0.2, 0.2, 0.08, 0.08, 0.05, 0.04, 0.03])]
    }

    fn transaction_code(&mut self, p: ProductType) -> u16 {
        let n = if p == ProductType::Card { 12 } else { 3 };
        1 + self.rng.below(n) as u16
    }

    fn credit_score(&mut self, lo: f64, hi: f64) -> CreditScore {
        CreditScore::new(self.rng.uniform_range(lo, hi).clamp(0.0, 1.0)).expect("in range")
    }

    fn routine_credit(&mut self) -> CreditScore {
        if self.rng.bernoulli(0.02) {
            self.credit_score(0.0, 0.049)
        } else {
            self.credit_score(0.05, 1.0)
        }
    }

    fn routine_statement(&mut self) -> String {
        let s = *self.rng.choose(&ROUTINE_STATEMENTS);
        if matches!(s, "invoice" | "supplier payment") {
            format!("{s} {}", 1000 + self.rng.below(9000))
        } else {
            s.to_string()
        }
    }

    /// Base row with routine attributes; scenarios overwrite what they plant.
    fn base(&mut self) -> TransactionRecord {
        let customer_type = self.customer_type();
        let product_type = self.domestic_product();
        let hour = self.routine_hour();
        let amount = match customer_type {
            CustomerType::Individual => self.rng.log_normal(120.0, 1.0),
            _ => self.rng.log_normal(1500.0, 1.1),
        }
        .max(1.0);
        let ratio = self.rng.uniform_range(0.6, 1.4);
        let account = self.rng.below(self.n_accounts);
        let branch = 1 + self.rng.below(40);
        TransactionRecord {
            transaction_id: String::new(),
            account_id: format!("ACC{account:06}"),
            customer_type,
            product_type,
            transaction_code: self.transaction_code(product_type),
            branch: format!("BR{branch:03}"),
            source_bank: self.rng.choose(&DOMESTIC_BANKS).to_string(),
            dest_bank: self.rng.choose(&DOMESTIC_BANKS).to_string(),
            timestamp: self.timestamp(hour),
            amount: Money::from_units(amount),
            avg_amount_prev_month: Money::from_units(amount / ratio),
            currency: Code3::lit(HOME_CURRENCY),
            credit_debit: if self.rng.bernoulli(0.6) {
                CreditDebit::Debit
            } else {
                CreditDebit::Credit
            },
            country_origin: Code3::lit(HOME),
            country_dest: Code3::lit(HOME),
            statement: self.routine_statement(),
            credit_score: self.routine_credit(),
            expert_label: None,
        }
    }

    fn set_amount(&mut self, r: &mut TransactionRecord, amount: f64, ratio: f64) {
        r.amount = Money::from_units(amount);
        r.avg_amount_prev_month = Money::from_units(amount / ratio);
    }

    fn set_hour(&mut self, r: &mut TransactionRecord, hour: i64) {
        r.timestamp = self.timestamp(hour);
    }

    fn make_foreign(&mut self, r: &mut TransactionRecord, country: &str, currency: &str) {
        let outbound = self.rng.bernoulli(0.5);
        let other = Code3::lit(country);
        if outbound {
            r.country_dest = other;
            r.dest_bank = self.rng.choose(&FOREIGN_BANKS).to_string();
        } else {
            r.country_origin = other;
            r.source_bank = self.rng.choose(&FOREIGN_BANKS).to_string();
        }
        r.currency = Code3::lit(currency);
        r.product_type = if self.rng.bernoulli(0.7) {
            ProductType::GlobalPayment
        } else {
            ProductType::OnlineBanking
        };
        r.transaction_code = self.transaction_code(r.product_type);
    }

    fn set_product(&mut self, r: &mut TransactionRecord, choices: &[ProductType]) {
        r.product_type = *self.rng.choose(choices);
        r.transaction_code = self.transaction_code(r.product_type);
    }

    fn clean(&mut self, foreign: bool) -> TransactionRecord {
        loop {
            let mut r = self.base();
            if foreign {
                let (c, cur) = *self.rng.choose(&CLEAN_FOREIGN);
                let cur = if self.rng.bernoulli(0.5) { HOME_CURRENCY } else { cur };
                self.make_foreign(&mut r, c, cur);
            }
            if !self.fires_any(&r) {
                return r;
            }
        }
    }

    fn suspicious(&mut self, tag: ScenarioTag) -> TransactionRecord {
        let mut r = self.base();
        let hour = if self.rng.bernoulli(0.45) {
            self.night_hour()
        } else {
            self.rng.below(24) as i64
        };
        self.set_hour(&mut r, hour);
        r.credit_score = self.credit_score(0.05, 0.6);
        match tag {
            ScenarioTag::CashStructuring => {
                self.set_product(&mut r, &[ProductType::CashIn, ProductType::CashOut]);
                let amount = 10_001.0 + self.rng.log_normal(6_000.0, 0.9);
                let ratio = self.rng.uniform_range(2.0, 12.0);
                self.set_amount(&mut r, amount, ratio);
            }
            ScenarioTag::BlacklistCorridor | ScenarioTag::WildlifeCorridor => {
                let (list, floor) = if tag == ScenarioTag::BlacklistCorridor {
                    (&self.blacklist, 10_001.0)
                } else {
                    (&self.wildlife, 20_001.0)
                };
                let country = list[self.rng.index(list.len())].clone();
                let cur = if self.rng.bernoulli(0.7) { "USD" } else { HOME_CURRENCY };
                self.make_foreign(&mut r, &country, cur);
                let amount = floor + self.rng.log_normal(12_000.0, 0.9);
                let ratio = self.rng.uniform_range(1.0, 8.0);
                self.set_amount(&mut r, amount, ratio);
            }
            ScenarioTag::KeywordStatement => {
                let word = self.keywords[self.rng.index(self.keywords.len())].clone();
                r.statement = match self.rng.below(3) {
                    0 => format!("payment re {word}"),
                    1 => format!("{word} supplies"),
                    _ => format!("ref {word} {}", 1 + self.rng.below(99)),
                };
                self.set_product(&mut r, &[ProductType::DirectPayment, ProductType::OnlineBanking]);
                let amount = 5_001.0 + self.rng.log_normal(9_000.0, 0.9);
                let ratio = self.rng.uniform_range(1.5, 10.0);
                self.set_amount(&mut r, amount, ratio);
            }
            ScenarioTag::VelocitySpike => {
                self.set_product(
                    &mut r,
                    &[
                        ProductType::OnlineBanking,
                        ProductType::DirectPayment,
                        ProductType::ChequeOut,
                    ],
                );
                if self.rng.bernoulli(0.6) {
                    r.customer_type = CustomerType::Individual;
                    let amount = 10_001.0 + self.rng.log_normal(9_000.0, 0.8);
                    let ratio = self.rng.uniform_range(3.0, 15.0);
                    self.set_amount(&mut r, amount, ratio);
                } else {
                    r.customer_type = self.entity_type();
                    let amount = 20_001.0 + self.rng.log_normal(25_000.0, 0.8);
                    let ratio = self.rng.uniform_range(4.0, 15.0);
                    self.set_amount(&mut r, amount, ratio);
                }
            }
            ScenarioTag::LowScoreLargeAmount => {
                r.customer_type = CustomerType::Individual;
                r.credit_score = self.credit_score(0.0, 0.049);
                self.set_product(&mut r, &[ProductType::OnlineBanking, ProductType::DirectPayment]);
                let amount = 20_001.0 + self.rng.log_normal(15_000.0, 0.8);
                let ratio = self.rng.uniform_range(0.8, 1.4);
                self.set_amount(&mut r, amount, ratio);
            }
            _ => unreachable!("not a rule-aligned scenario: {tag}"),
        }
        r
    }

    fn stealth(&mut self, variant: usize) -> TransactionRecord {
        loop {
            let mut r = self.base();
            let hour = if self.rng.bernoulli(0.6) {
                self.night_hour()
            } else {
                self.rng.below(24) as i64
            };
            self.set_hour(&mut r, hour);
            r.credit_score = self.credit_score(0.05, 0.25);
            if variant.is_multiple_of(2) {
                // cash kept just below the reporting limit
                r.customer_type = CustomerType::Individual;
                self.set_product(&mut r, &[ProductType::CashIn, ProductType::CashOut]);
                let amount = self.rng.uniform_range(7_000.0, 9_999.0);
                let ratio = self.rng.uniform_range(2.0, 8.0);
                self.set_amount(&mut r, amount, ratio);
            } else {
                // entity layering under the entity spike limit
                r.customer_type = self.entity_type();
                self.set_product(&mut r, &[ProductType::OnlineBanking, ProductType::DirectPayment]);
                let amount = self.rng.uniform_range(12_000.0, 19_999.0);
                let ratio = self.rng.uniform_range(2.5, 8.0);
                self.set_amount(&mut r, amount, ratio);
            }
            if !self.fires_any(&r) {
                return r;
            }
        }
    }

    fn benign(&mut self, variant: usize) -> TransactionRecord {
        loop {
            let mut r = self.base();
            let hour = self.day_hour();
            self.set_hour(&mut r, hour);
            r.credit_score = self.credit_score(0.3, 1.0);
            match variant % BENIGN_VARIANTS {
                0 => {
                    r.customer_type = self.entity_type();
                    self.set_product(&mut r, &[ProductType::CashIn]);
                    let amount = self.rng.uniform_range(10_001.0, 12_500.0);
                    let ratio = self.rng.uniform_range(0.8, 1.3);
                    self.set_amount(&mut r, amount, ratio);
                    r.statement = "business takings".into();
                }
                1 => {
                    r.customer_type = CustomerType::Individual;
                    let country = self.blacklist[self.rng.index(self.blacklist.len())].clone();
                    self.make_foreign(&mut r, &country, HOME_CURRENCY);
                    let amount = self.rng.uniform_range(10_001.0, 12_000.0);
                    let ratio = self.rng.uniform_range(0.8, 1.4);
                    self.set_amount(&mut r, amount, ratio);
                    r.statement = "family support".into();
                }
                2 => {
                    r.statement = self.rng.choose(&BENIGN_KEYWORD_STATEMENTS).to_string();
                    let amount = self.rng.uniform_range(5_001.0, 6_500.0);
                    let ratio = self.rng.uniform_range(0.8, 1.4);
                    self.set_amount(&mut r, amount, ratio);
                }
                3 => {
                    r.customer_type = CustomerType::Individual;
                    self.set_product(&mut r, &[ProductType::DirectPayment, ProductType::ChequeOut]);
                    let amount = self.rng.uniform_range(10_001.0, 14_000.0);
                    let ratio = self.rng.uniform_range(1.6, 2.5);
                    self.set_amount(&mut r, amount, ratio);
                    r.statement = "car purchase deposit".into();
                }
                4 => {
                    r.customer_type = CustomerType::Organisation;
                    self.set_product(&mut r, &[ProductType::DirectPayment, ProductType::OnlineBanking]);
                    let amount = self.rng.uniform_range(20_001.0, 26_000.0);
                    let ratio = self.rng.uniform_range(2.1, 3.0);
                    self.set_amount(&mut r, amount, ratio);
                    r.statement = "annual licence invoice".into();
                }
                _ => {
                    r.customer_type = CustomerType::Individual;
                    r.credit_score = self.credit_score(0.01, 0.049);
                    self.set_product(&mut r, &[ProductType::DirectPayment, ProductType::ChequeOut]);
                    let amount = self.rng.uniform_range(20_001.0, 24_000.0);
                    let ratio = self.rng.uniform_range(0.8, 1.4);
                    self.set_amount(&mut r, amount, ratio);
                    r.statement = "home deposit".into();
                }
            }
            if self.fires_any(&r) {
                return r;
            }
        }
    }
}

/// Generates a dataset, its hidden ground truth and per-row scenario tags.
pub fn generate(cfg: &GeneratorConfig) -> Result<Generated, GenError> {
    cfg.validate()?;
    let words = Wordlists::builtin();
    let thresholds = RuleThresholds::default();
    let lfs = builtin_lfs(&thresholds, &words).expect("builtin wordlists are complete");

    let n = cfg.n_rows;
    let n_susp = cfg.suspicious_count();
    let n_norm = n - n_susp;
    let weight = |t: ScenarioTag| cfg.scenario_mix.get(&t).copied().unwrap_or(0.0);

    let susp_tags: Vec<ScenarioTag> = ScenarioTag::ALL.into_iter().filter(|t| t.is_suspicious()).collect();
    let norm_tags = [ScenarioTag::CleanRoutine, ScenarioTag::BenignLookalike];
    let susp_counts = allocate(n_susp, &susp_tags.iter().map(|&t| weight(t)).collect::<Vec<_>>());
    let norm_counts = allocate(n_norm, &norm_tags.iter().map(|&t| weight(t)).collect::<Vec<_>>());

    let mut slots = Vec::with_capacity(n);
    for (&tag, &count) in susp_tags
        .iter()
        .zip(&susp_counts)
        .chain(norm_tags.iter().zip(&norm_counts))
    {
        for i in 0..count {
            let foreign = matches!(tag, ScenarioTag::BlacklistCorridor | ScenarioTag::WildlifeCorridor)
                || (tag == ScenarioTag::BenignLookalike && i % BENIGN_VARIANTS == 1);
            slots.push(Slot {
                tag,
                variant: i,
                foreign,
            });
        }
    }

    let budget = (n as f64 * (1.0 - cfg.domestic_rate) + 1e-9).floor() as usize;
    let mandated = slots.iter().filter(|s| s.foreign).count();
    if mandated > budget {
        return Err(GenError::Config(format!(
            "scenario mix needs {mandated} cross-border rows but domestic_rate {} allows only {budget}",
            cfg.domestic_rate
        )));
    }
    let clean_foreign = (budget - mandated) / 2;
    for s in slots
        .iter_mut()
        .filter(|s| s.tag == ScenarioTag::CleanRoutine)
        .take(clean_foreign)
    {
        s.foreign = true;
    }

    let mut rng = SeededRng::new(cfg.seed);
    rng.shuffle(&mut slots);

    let mut keywords: Vec<String> = Vec::new();
    for list in [crate::weak_label::SPECIAL_WORDS, crate::weak_label::SPECIAL_CATEGORY] {
        keywords.extend(words.expanded(list).expect("builtin list"));
    }
    let mut factory = RowFactory {
        rng,
        n_accounts: (n as u64 / 20).max(50),
        lfs: &lfs,
        words: &words,
        keywords,
        blacklist: thresholds.blacklist_countries.clone(),
        wildlife: thresholds.wildlife_countries.clone(),
        epoch: NaiveDate::from_ymd_opt(2021, 1, 1)
            .expect("valid date")
            .and_hms_opt(0, 0, 0)
            .expect("valid time"),
    };

    let mut records = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut tags = Vec::with_capacity(n);
    for (i, slot) in slots.iter().enumerate() {
        let mut r = match slot.tag {
            ScenarioTag::CleanRoutine => factory.clean(slot.foreign),
            ScenarioTag::BenignLookalike => factory.benign(slot.variant),
            ScenarioTag::StealthLaundering => factory.stealth(slot.variant),
            t => factory.suspicious(t),
        };
        r.transaction_id = format!("T{:08}", i + 1);
        records.push(r);
        truth.push(LabelValue::from_bool(slot.tag.is_suspicious()));
        tags.push(slot.tag);
    }

    let mut rng = factory.rng;
    for class in [true, false] {
        let rows: Vec<usize> = (0..n).filter(|&i| truth[i].is_suspicious() == class).collect();
        let k = (rows.len() as f64 * cfg.anchor_fraction).round() as usize;
        for j in rng.sample_indices(rows.len(), k) {
            records[rows[j]].expert_label = Some(truth[rows[j]]);
        }
    }

    Ok(Generated {
        dataset: Dataset::new(records).expect("generated ids are unique"),
        ground_truth: truth,
        tags,
    })
}

pub const GROUND_TRUTH_HEADER: [&str; 3] = ["transaction_id", "ground_truth", "scenario_tag"];

/// Sidecar CSV: `transaction_id,ground_truth,scenario_tag`.
pub fn write_ground_truth<W: Write>(g: &Generated, writer: W) -> Result<(), GenError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(GROUND_TRUTH_HEADER)?;
    for ((r, t), tag) in g.dataset.records().iter().zip(&g.ground_truth).zip(&g.tags) {
        w.write_record([r.transaction_id.as_str(), t.as_field(), tag.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_ground_truth(g: &Generated) -> String {
    let mut buf = Vec::new();
    write_ground_truth(g, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8")
}

/// One parsed ground-truth row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthRow {
    pub transaction_id: String,
    pub label: LabelValue,
    pub tag: Option<ScenarioTag>,
}

/// Reads a ground-truth sidecar. The `scenario_tag` column is optional.
pub fn parse_ground_truth<R: Read>(reader: R) -> Result<Vec<TruthRow>, GenError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("transaction_id") || headers.get(1) != Some("ground_truth") {
        return Err(GenError::GroundTruth(format!(
            "expected header starting `transaction_id,ground_truth`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let label = match LabelValue::from_field(rec.get(1).unwrap_or("")) {
            Some(l @ (LabelValue::Suspicious | LabelValue::Normal)) => l,
            _ => return Err(GenError::GroundTruth(format!("row {row}: ground_truth must be 0 or 1"))),
        };
        let tag = match rec.get(2) {
            Some(s) if !s.is_empty() => Some(s.parse()?),
            _ => None,
        };
        out.push(TruthRow {
            transaction_id: rec.get(0).unwrap_or("").to_string(),
            label,
            tag,
        });
    }
    Ok(out)
}
