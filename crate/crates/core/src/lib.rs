//! Weakly supervised suspicious-transaction detection.
//!
//! Expert rules produce noisy labels for a mostly unlabeled transaction log;
//! supervised classifiers trained on those labels are combined with an
//! unsupervised anomaly detector, and a transaction is flagged only when both
//! agree.

pub mod anomaly;
pub mod classifiers;
pub mod cluster;
pub mod data_model;
pub mod fusion_eval;
pub mod matrix;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod synth_gen;
pub mod weak_label;
