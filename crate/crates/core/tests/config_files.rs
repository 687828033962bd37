use std::path::PathBuf;

use hybrid_aml::pipeline::PipelineConfig;
use hybrid_aml::weak_label::{builtin_lfs, parse_rules, RuleThresholds, Wordlists};

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn default_config_file_matches_compiled_defaults() {
    let cfg = PipelineConfig::load(&repo().join("configs/default.toml")).unwrap();
    cfg.validate().unwrap();
    let mut stripped = cfg.clone();
    stripped.labeling.rules = None;
    stripped.labeling.wordlists.clear();
    stripped.labeling.synonyms = None;
    assert_eq!(stripped, PipelineConfig::default());
}

#[test]
fn rules_file_parses_to_builtin_trees() {
    let text = std::fs::read_to_string(repo().join("rules/default_rules.toml")).unwrap();
    let from_file = parse_rules(&text).unwrap();
    let builtin = builtin_lfs(&RuleThresholds::default(), &Wordlists::builtin()).unwrap();
    assert_eq!(from_file, builtin);
}

#[test]
fn wordlist_files_match_builtin_lists() {
    let cfg = PipelineConfig::load(&repo().join("configs/default.toml")).unwrap();
    assert_eq!(cfg.wordlists().unwrap(), Wordlists::builtin());
    let words = cfg.wordlists().unwrap();
    assert_eq!(
        cfg.labeling_functions(&words).unwrap(),
        builtin_lfs(&RuleThresholds::default(), &words).unwrap()
    );
}

#[test]
fn missing_path_is_config_error() {
    let mut cfg = PipelineConfig::default();
    cfg.labeling.rules = Some(PathBuf::from("/nonexistent/rules.toml"));
    let err = cfg.validate().unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
