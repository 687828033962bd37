//! End-to-end orchestration: configuration, stage seeding and the
//! subcommands behind the `hybrid-aml` binary.

pub mod commands;
pub mod config;
pub mod run;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use commands::{
    cmd_cluster, cmd_detect, cmd_evaluate, cmd_generate, cmd_label, cmd_run, cmd_train, ClusterSummary,
    GenerateSummary, LabelSummary,
};
pub use config::{
    ClassifierSection, ClusterSection, LabelModelKind, LabelingConfig, PipelineConfig, PreprocessConfig, RunSection,
};
pub use run::{run_experiment, Experiment, SoftCheck};

use crate::rng::{derive_seed, stage};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage}: {message}")]
    Data { stage: &'static str, message: String },
    #[error("unmatched transaction ids: {0}")]
    UnmatchedIds(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Process exit code: 2 config, 3 data, 4 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data { .. } | PipelineError::UnmatchedIds(_) | PipelineError::Io { .. } => 3,
            PipelineError::Invariant(_) => 4,
        }
    }

    pub(crate) fn data(stage: &'static str, e: impl std::fmt::Display) -> Self {
        PipelineError::Data {
            stage,
            message: e.to_string(),
        }
    }
}

pub(crate) fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(io_error(dir))?;
        }
    }
    std::fs::write(path, contents).map_err(io_error(path))
}

pub(crate) fn read_file(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(io_error(path))
}

/// Seeds of every randomized stage, derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSeeds {
    pub master: u64,
    pub generate: u64,
    pub split: u64,
    pub validation: u64,
    pub smote: u64,
    pub classifiers: u64,
    pub detector: u64,
    pub cluster: u64,
}

impl StageSeeds {
    pub fn derive(master: u64) -> Self {
        StageSeeds {
            master,
            generate: derive_seed(master, stage::GENERATE),
            split: derive_seed(master, stage::SPLIT),
            validation: derive_seed(master, stage::VALIDATION),
            smote: derive_seed(master, stage::SMOTE),
            classifiers: derive_seed(master, stage::CLASSIFIERS),
            detector: derive_seed(master, stage::DETECTOR),
            cluster: derive_seed(master, stage::CLUSTER),
        }
    }

    pub fn header(&self) -> Vec<(String, String)> {
        [
            ("master_seed", self.master),
            ("seed.generate", self.generate),
            ("seed.split", self.split),
            ("seed.validation", self.validation),
            ("seed.smote", self.smote),
            ("seed.classifiers", self.classifiers),
            ("seed.detector", self.detector),
            ("seed.cluster", self.cluster),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
    }
}
