//! `eislife`: fit impedance spectra, extract descriptors, select and apply
//! lifetime regression models.

mod canonical;
mod config;
mod context;
mod extract;
mod failure;
mod fit;
mod io;
mod predict;
mod select;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eislife_core::Criterion;

use config::RunConfig;
use context::Ctx;
use failure::{CmdResult, Failure};

#[derive(Parser)]
#[command(name = "eislife", version, about = "Fuel-cell lifetime estimation from impedance spectra")]
struct Cli {
    /// JSON run configuration (seed, rhlp, simplex).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; never changes results.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Mse,
    Mae,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the logistic model to the real part of one spectrum.
    FitReal { spectrum: PathBuf },
    /// Fit the hidden-logistic regression to the imaginary part of one spectrum.
    FitImag { spectrum: PathBuf },
    /// Extract the 18 descriptors of every spectrum in a manifest.
    Extract { manifest: PathBuf },
    /// Exhaustive leave-one-out feature-subset selection.
    Select {
        table: PathBuf,
        /// Drop flagged rows instead of failing.
        #[arg(long)]
        allow_flagged: bool,
        /// Largest subset size searched.
        #[arg(long)]
        max_dim: Option<usize>,
        /// Score minimized by the search.
        #[arg(long, value_enum, default_value = "mse")]
        criterion: CriterionArg,
        /// Comma-separated columns to restrict the search to.
        #[arg(long = "features", value_delimiter = ',')]
        features_only: Option<Vec<String>>,
    },
    /// Estimate operating hours from a features table or a spectrum.
    Predict { selection: PathBuf, input: PathBuf },
    /// Write a synthetic study: spectra, manifest and ground truth.
    Synth { spec: Option<PathBuf> },
}

fn run(cli: Cli) -> CmdResult {
    let out_given = cli.out.is_some();
    let ctx = Ctx {
        cfg: RunConfig::load(cli.config.as_deref(), cli.seed)?,
        out: cli.out.unwrap_or_else(|| PathBuf::from(".")),
    };
    match cli.command {
        Command::FitReal { spectrum } => fit::fit_real(&ctx, &spectrum),
        Command::FitImag { spectrum } => fit::fit_imag(&ctx, &spectrum),
        Command::Extract { manifest } => extract::extract(&ctx, &manifest),
        Command::Select {
            table,
            allow_flagged,
            max_dim,
            criterion,
            features_only,
        } => {
            let args = select::SelectArgs {
                allow_flagged,
                max_dim,
                criterion: match criterion {
                    CriterionArg::Mse => Criterion::MeanSquared,
                    CriterionArg::Mae => Criterion::MeanAbsolute,
                },
                features: features_only,
            };
            select::select(&ctx, &table, &args)
        }
        Command::Predict { selection, input } => predict::predict(&ctx, &selection, &input, out_given),
        Command::Synth { spec } => synth::synth(&ctx, spec.as_deref(), cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        pool = pool.num_threads(n.max(1));
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| run(cli)),
        Err(e) => Err(Failure::new(failure::INTERNAL, format!("thread pool: {e}"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
