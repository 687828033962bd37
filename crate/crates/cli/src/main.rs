use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hybrid_aml::anomaly::DetectorKind;
use hybrid_aml::classifiers::ModelKind;
use hybrid_aml::fusion_eval::report_table;
use hybrid_aml::pipeline::{self, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(
    name = "hybrid-aml",
    version,
    about = "Weakly supervised transaction screening with classifier and anomaly-detector fusion"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; built-in defaults when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// master seed (overrides pipeline.seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory (overrides pipeline.out_dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// restrict training to one classifier kind
    #[arg(long, global = true)]
    model: Option<String>,
    /// detector kind: iforest or gaussian
    #[arg(long, global = true)]
    detector: Option<String>,
    /// write the standardized feature matrices next to the report
    #[arg(long, global = true)]
    dump_features: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic transactions file and its ground truth
    Generate,
    /// Apply the labeling rules and report per-rule diagnostics
    Label {
        #[arg(long)]
        data: PathBuf,
    },
    /// Train classifiers on weakly labeled data
    Train {
        #[arg(long)]
        data: PathBuf,
    },
    /// Fit and apply the anomaly detector
    Detect {
        #[arg(long)]
        data: PathBuf,
    },
    /// Run the whole experiment and write the metrics report
    Run,
    /// Score a predictions file against ground truth
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Elbow analysis of k-means WCSS
    Cluster {
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn config(c: &Common) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.pipeline.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.pipeline.out_dir = o.clone();
    }
    if let Some(m) = &c.model {
        let kind: ModelKind = m
            .parse()
            .map_err(|e: hybrid_aml::classifiers::ClassifierError| PipelineError::Config(e.to_string()))?;
        cfg.classifiers.kinds = vec![kind];
    }
    if let Some(d) = &c.detector {
        let kind: DetectorKind = d
            .parse()
            .map_err(|e: hybrid_aml::anomaly::AnomalyError| PipelineError::Config(e.to_string()))?;
        cfg.detector.kind = kind;
    }
    cfg.pipeline.dump_features |= c.dump_features;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let cfg = config(&cli.common)?;
    match cli.command {
        Command::Generate => println!("{}", pipeline::cmd_generate(&cfg)?),
        Command::Label { data } => println!("{}", pipeline::cmd_label(&cfg, &data)?),
        Command::Train { data } => {
            for (kind, f1) in pipeline::cmd_train(&cfg, &data)? {
                println!("{:<22} validation F1 {f1:.4}", kind.as_str());
            }
            println!("wrote models under {}", cfg.pipeline.out_dir.display());
        }
        Command::Detect { data } => {
            let kind = pipeline::cmd_detect(&cfg, &data)?;
            println!(
                "wrote {} predictions under {}",
                kind.as_str(),
                cfg.pipeline.out_dir.display()
            );
        }
        Command::Run => {
            let exp = pipeline::cmd_run(&cfg)?;
            for (k, v) in &exp.header {
                println!("{k}: {v}");
            }
            println!();
            print!("{}", report_table(&exp.reports));
        }
        Command::Evaluate { predictions, truth } => {
            let r = pipeline::cmd_evaluate(&predictions, &truth)?;
            print!("{}", report_table(std::slice::from_ref(&r)));
            for w in &r.metrics.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Cluster { data } => println!("{}", pipeline::cmd_cluster(&cfg, data.as_deref())?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
