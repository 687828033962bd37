use serde::{Deserialize, Serialize};

use crate::data_model::TransactionRecord;
use crate::weak_label::CategoricalField;

/// Categorical fields that enter the feature matrix as integer codes.
pub const ENCODED_FIELDS: [CategoricalField; 7] = [
    CategoricalField::CustomerType,
    CategoricalField::ProductType,
    CategoricalField::Currency,
    CategoricalField::CreditDebit,
    CategoricalField::CountryOrigin,
    CategoricalField::CountryDest,
    CategoricalField::Branch,
];

/// Per-field vocabulary in lexicographic order; the code is the position.
/// Categories unseen at fit time map to `vocab.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryEncoder {
    pub fields: Vec<(CategoricalField, Vec<String>)>,
}

impl CategoryEncoder {
    pub fn fit<'a>(fields: &[CategoricalField], rows: impl IntoIterator<Item = &'a TransactionRecord> + Clone) -> Self {
        let fields = fields
            .iter()
            .map(|&f| {
                let mut vocab: Vec<String> = rows.clone().into_iter().map(|r| f.value(r).to_string()).collect();
                vocab.sort();
                vocab.dedup();
                (f, vocab)
            })
            .collect();
        CategoryEncoder { fields }
    }

    pub fn fit_values(values: &[&str]) -> Vec<String> {
        let mut vocab: Vec<String> = values.iter().map(|s| s.to_string()).collect();
        vocab.sort();
        vocab.dedup();
        vocab
    }

    pub fn code_in(vocab: &[String], value: &str) -> u32 {
        vocab.binary_search_by(|v| v.as_str().cmp(value)).unwrap_or(vocab.len()) as u32
    }

    pub fn code(&self, field_index: usize, r: &TransactionRecord) -> u32 {
        let (f, vocab) = &self.fields[field_index];
        Self::code_in(vocab, f.value(r))
    }

    /// Integer codes, one inner vector per field.
    pub fn encode<'a>(&self, rows: impl IntoIterator<Item = &'a TransactionRecord> + Clone) -> Vec<Vec<u32>> {
        (0..self.fields.len())
            .map(|i| rows.clone().into_iter().map(|r| self.code(i, r)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_codes_and_sentinel() {
        let vocab = CategoryEncoder::fit_values(&["PAK", "AUS", "AUS"]);
        assert_eq!(vocab, ["AUS", "PAK"]);
        let codes: Vec<u32> = ["AUS", "PAK", "AUS"]
            .iter()
            .map(|v| CategoryEncoder::code_in(&vocab, v))
            .collect();
        assert_eq!(codes, [0, 1, 0]);
        assert_eq!(CategoryEncoder::code_in(&vocab, "NZL"), 2);
        assert_eq!(CategoryEncoder::fit_values(&["PAK", "AUS"]), vocab);
    }
}
