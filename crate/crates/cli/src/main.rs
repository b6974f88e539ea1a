use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dmkde::dataio::{generate_synthetic, load_csv, load_features, save_csv, SyntheticSpec};
use dmkde::harness::{
    anomaly_count, benchmark_dataset, predict_table, run_benchmark_dir, run_eval, run_fit,
    RunOutcome,
};
use dmkde::model_io::{load_model, save_model};
use dmkde::report::{predictions_csv, write_text};
use dmkde::{DmkdeError, Result, RunConfig};

const EXIT_PARSE: u8 = 3;
const EXIT_CONFIG: u8 = 4;
const EXIT_RUNTIME: u8 = 5;
const EXIT_DIMENSION: u8 = 6;

/// Density-matrix kernel density anomaly detector.
#[derive(Parser)]
#[command(name = "dmkde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a labelled CSV, fit a detector, write the model and a report.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Report directory.
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>/model.bin`.
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Score every row of a CSV with a saved model.
    Predict {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Predictions CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Re-create the split and score a saved model on the test part.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Grid search, refit and test every CSV in a directory (or a single CSV).
    Benchmark {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write a synthetic labelled dataset described by a TOML spec.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Label column name, or `@last` for the final column.
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    no_standardize: bool,
    /// Cross-check against exact kernel density estimation.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct HyperArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Train adaptive Fourier features before building the density matrix.
    #[arg(long)]
    aff: bool,
}

impl CommonArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(col) = &self.label_column {
            cfg.label_column = col.clone();
        }
        if self.no_standardize {
            cfg.standardize = false;
        }
        Ok(cfg)
    }
}

impl HyperArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(sigma) = self.sigma {
            cfg.sigma = sigma;
        }
        if let Some(dim) = self.embed_dim {
            cfg.embed_dim = dim;
        }
        if self.aff {
            cfg.use_aff = true;
        }
        cfg.validate()
    }
}

fn print_outcome(run: &RunOutcome, out: &Path) {
    let m = &run.report.metrics;
    println!(
        "{}: {} split, weighted F1 {:.4}, anomaly F1 {:.4}, accuracy {:.4}, threshold {:.6e}",
        run.report.dataset.name,
        run.report.evaluated_split,
        m.f1_weighted,
        m.f1_anomaly,
        m.accuracy,
        run.report.threshold
    );
    if let Some(o) = &run.report.oracle {
        match o.spearman {
            Some(rho) => println!(
                "oracle: label agreement {:.4}, Spearman {:.4}",
                o.label_agreement, rho
            ),
            None => println!("oracle: label agreement {:.4}", o.label_agreement),
        }
    }
    println!("reports written to {}", out.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            data,
            out,
            model_out,
            common,
            hyper,
        } => {
            let mut cfg = common.config()?;
            hyper.apply(&mut cfg)?;
            let ds = load_csv(&data, &cfg.csv_options())?;
            let outcome = run_fit(&ds, &cfg, common.oracle)?;
            outcome.write_to(&out, "")?;
            let model_path = model_out.unwrap_or_else(|| out.join("model.bin"));
            save_model(&outcome.model, &model_path)?;
            print_outcome(&outcome, &out);
            println!("model written to {}", model_path.display());
        }
        Command::Predict {
            data,
            model,
            out,
            common,
        } => {
            let cfg = common.config()?;
            let model = load_model(&model)?;
            let table = load_features(&data, &cfg.csv_options())?;
            let rows = predict_table(&model, table.features.view(), table.labels.as_deref())?;
            let csv = predictions_csv(&rows);
            match out {
                Some(path) => {
                    write_text(&path, &csv)?;
                    eprintln!(
                        "{} of {} rows flagged as anomalies",
                        anomaly_count(&rows),
                        rows.len()
                    );
                }
                None => print!("{csv}"),
            }
        }
        Command::Eval {
            data,
            model,
            out,
            common,
        } => {
            let cfg = common.config()?;
            let model = load_model(&model)?;
            let ds = load_csv(&data, &cfg.csv_options())?;
            let outcome = run_eval(&ds, &model, &cfg, common.oracle)?;
            outcome.write_to(&out, "")?;
            print_outcome(&outcome, &out);
        }
        Command::Benchmark { data, out, common } => {
            let cfg = common.config()?;
            if cfg.grid_is_empty() {
                return Err(DmkdeError::Config("grid has no configurations".into()));
            }
            if data.is_file() {
                let ds = load_csv(&data, &cfg.csv_options())?;
                let outcome = benchmark_dataset(&ds, &cfg, common.oracle)?;
                outcome.write_to(&out, "")?;
                print_outcome(&outcome, &out);
            } else {
                let rows = run_benchmark_dir(&data, &cfg, &out, common.oracle)?;
                for row in &rows {
                    match row.f1_weighted {
                        Some(f1) => println!("{}: weighted F1 {f1:.4}", row.dataset),
                        None => println!("{}: {}", row.dataset, row.status),
                    }
                }
                println!("summary written to {}", out.join("summary.md").display());
            }
        }
        Command::Generate { spec, out, seed } => {
            let mut spec = SyntheticSpec::from_file(&spec)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let ds = generate_synthetic(&spec)?;
            save_csv(&ds, &out)?;
            println!(
                "wrote {} rows ({} anomalies) to {}",
                ds.len(),
                ds.anomaly_count(),
                out.display()
            );
        }
    }
    Ok(())
}

fn exit_code(err: &DmkdeError) -> u8 {
    match err {
        DmkdeError::Parse { .. } | DmkdeError::Io { .. } | DmkdeError::ModelFormat(_) => EXIT_PARSE,
        DmkdeError::Config(_) => EXIT_CONFIG,
        DmkdeError::DimensionMismatch { .. } => EXIT_DIMENSION,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
