use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::anomaly::DetectorConfig;
use crate::classifiers::{ModelKind, TrainConfig};
use crate::preprocess::SmoteConfig;
use crate::synth_gen::GeneratorConfig;
use crate::weak_label::{self, builtin_lfs, LabelingFunction, RuleThresholds, Wordlists};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelModelKind {
    Majority,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelingConfig {
    /// rules file; the built-in rules are used when absent
    pub rules: Option<PathBuf>,
    /// wordlist files, each named by its file stem; built-in lists when empty
    pub wordlists: Vec<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub label_model: LabelModelKind,
    pub thresholds: RuleThresholds,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig {
            rules: None,
            wordlists: Vec::new(),
            synonyms: None,
            label_model: LabelModelKind::Weighted,
            thresholds: RuleThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub test_fraction: f64,
    /// share of the training split held out for model selection and thresholds
    pub validation_fraction: f64,
    pub smote: SmoteConfig,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            test_fraction: 0.2,
            validation_fraction: 0.2,
            smote: SmoteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierSection {
    pub kinds: Vec<ModelKind>,
    pub threshold: f64,
    #[serde(flatten)]
    pub train: TrainConfig,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        ClassifierSection {
            kinds: ModelKind::ALL.to_vec(),
            threshold: 0.5,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSection {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub dump_features: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 42,
            out_dir: PathBuf::from("out"),
            dump_features: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterSection {
    pub k_max: usize,
    /// rows drawn (without replacement) before fitting; 0 keeps every row
    pub sample: usize,
}

impl Default for ClusterSection {
    fn default() -> Self {
        ClusterSection { k_max: 6, sample: 5000 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub generator: GeneratorConfig,
    pub labeling: LabelingConfig,
    pub preprocess: PreprocessConfig,
    pub classifiers: ClassifierSection,
    pub detector: DetectorConfig,
    pub cluster: ClusterSection,
    pub pipeline: RunSection,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.labeling.rules.as_mut() {
            fix(p);
        }
        if let Some(p) = cfg.labeling.synonyms.as_mut() {
            fix(p);
        }
        cfg.labeling.wordlists.iter_mut().for_each(fix);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let l = &self.labeling;
        for p in l.rules.iter().chain(&l.synonyms).chain(&l.wordlists) {
            if !p.exists() {
                return Err(PipelineError::Config(format!("{} does not exist", p.display())));
            }
        }
        let p = &self.preprocess;
        for (name, v) in [
            ("test_fraction", p.test_fraction),
            ("validation_fraction", p.validation_fraction),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(PipelineError::Config(format!("preprocess.{name} {v} outside (0, 1)")));
            }
        }
        if self.classifiers.kinds.is_empty() {
            return Err(PipelineError::Config("classifiers.kinds is empty".into()));
        }
        self.classifiers
            .train
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.generator
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn wordlists(&self) -> Result<Wordlists, PipelineError> {
        let l = &self.labeling;
        let mut w = if l.wordlists.is_empty() {
            Wordlists::builtin()
        } else {
            Wordlists::new()
        };
        for p in &l.wordlists {
            w.load_list_file(p).map_err(config_error)?;
        }
        if let Some(p) = &l.synonyms {
            w.load_synonyms_file(p).map_err(config_error)?;
        }
        Ok(w)
    }

    pub fn labeling_functions(&self, words: &Wordlists) -> Result<Vec<LabelingFunction>, PipelineError> {
        match &self.labeling.rules {
            None => builtin_lfs(&self.labeling.thresholds, words).map_err(config_error),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
                let lfs = weak_label::parse_rules(&text).map_err(config_error)?;
                for lf in &lfs {
                    lf.validate(words).map_err(config_error)?;
                }
                Ok(lfs)
            }
        }
    }
}

fn config_error(e: weak_label::WeakLabelError) -> PipelineError {
    PipelineError::Config(e.to_string())
}
