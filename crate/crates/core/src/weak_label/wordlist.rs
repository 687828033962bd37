//! Named wordlists and synonym expansion for statement matching.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::WeakLabelError;

pub const SPECIAL_WORDS: &str = "special_words";
pub const SPECIAL_CATEGORY: &str = "special_category";

/// Lowercase alphanumeric tokens of a free-text field.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Wordlists {
    lists: BTreeMap<String, BTreeSet<String>>,
    synonyms: BTreeMap<String, BTreeSet<String>>,
}

impl Wordlists {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stand-in lists used when no files are supplied.
    pub fn builtin() -> Self {
        let mut w = Self::new();
        w.insert(SPECIAL_WORDS, ["hijack", "terror"]);
        w.insert(SPECIAL_CATEGORY, ["ivory", "pangolin", "firearms"]);
        w.add_synonyms("hijack", ["hijacking", "hijacker"]);
        w.add_synonyms("terror", ["terrorism", "terrorist"]);
        w.add_synonyms("ivory", ["tusk", "tusks"]);
        w.add_synonyms("firearms", ["guns", "ammunition"]);
        w
    }

    pub fn insert<I, S>(&mut self, name: &str, words: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set = words.into_iter().map(|w| w.as_ref().trim().to_lowercase());
        self.lists.entry(name.to_string()).or_default().extend(set);
    }

    pub fn add_synonyms<I, S>(&mut self, word: &str, synonyms: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set = synonyms.into_iter().map(|w| w.as_ref().trim().to_lowercase());
        self.synonyms.entry(word.to_lowercase()).or_default().extend(set);
    }

    pub fn contains_list(&self, name: &str) -> bool {
        self.lists.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.lists.keys().map(String::as_str)
    }

    pub fn words(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.lists.get(name)
    }

    /// Parses a newline-delimited wordlist. Blank lines and `#` comments are skipped.
    pub fn parse_list(&mut self, name: &str, text: &str) {
        let words: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        self.insert(name, words);
    }

    /// Parses `word:syn1,syn2` lines.
    pub fn parse_synonyms(&mut self, text: &str) -> Result<(), WeakLabelError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, syns) = line.split_once(':').ok_or_else(|| WeakLabelError::Synonyms {
                line: i + 1,
                message: format!("expected `word:synonym,...`, got `{line}`"),
            })?;
            self.add_synonyms(word.trim(), syns.split(',').filter(|s| !s.trim().is_empty()));
        }
        Ok(())
    }

    /// Loads a wordlist file; the list name is the file stem.
    pub fn load_list_file(&mut self, path: &Path) -> Result<(), WeakLabelError> {
        let text = std::fs::read_to_string(path).map_err(|e| WeakLabelError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| WeakLabelError::MissingWordlist(path.display().to_string()))?;
        self.parse_list(name, &text);
        Ok(())
    }

    pub fn load_synonyms_file(&mut self, path: &Path) -> Result<(), WeakLabelError> {
        let text = std::fs::read_to_string(path).map_err(|e| WeakLabelError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.parse_synonyms(&text)
    }

    /// A list's words together with all of their synonyms.
    pub fn expanded(&self, name: &str) -> Option<BTreeSet<String>> {
        let base = self.lists.get(name)?;
        let mut out = base.clone();
        for w in base {
            if let Some(s) = self.synonyms.get(w) {
                out.extend(s.iter().cloned());
            }
        }
        Some(out)
    }

    /// True if any token of `text` is in the expanded list.
    pub fn matches(&self, name: &str, text: &str) -> Option<bool> {
        let base = self.lists.get(name)?;
        Some(tokenize(text).any(|t| {
            base.contains(&t)
                || base
                    .iter()
                    .any(|w| self.synonyms.get(w).is_some_and(|s| s.contains(&t)))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_on_non_alphanumerics() {
        let toks: Vec<String> = tokenize("Re: HIJACK-ops,2001/terror!").collect();
        assert_eq!(toks, ["re", "hijack", "ops", "2001", "terror"]);
    }

    #[test]
    fn case_insensitive_token_match() {
        let w = Wordlists::builtin();
        assert_eq!(w.matches(SPECIAL_WORDS, "Payment re HIJACK"), Some(true));
        assert_eq!(w.matches(SPECIAL_WORDS, "hijacked"), Some(false));
        assert_eq!(w.matches(SPECIAL_WORDS, "terrorist cell"), Some(true));
        assert_eq!(w.matches(SPECIAL_WORDS, "groceries"), Some(false));
        assert_eq!(w.matches("nope", "x"), None);
    }

    #[test]
    fn synonym_file_parsing() {
        let mut w = Wordlists::new();
        w.parse_list("kids", "# header\nchild\n\n");
        w.parse_synonyms("child: kid, minor\n").unwrap();
        assert_eq!(w.matches("kids", "gift for kid"), Some(true));
        assert!(w.parse_synonyms("no separator here").is_err());
    }
}
