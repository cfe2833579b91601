//! The `pcma` command line.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use pcma_core::simgen::{run_study_with, Method, StudyConfig};
use pcma_core::sequential::fit_sequence_with;
use pcma_core::{pre_adjust, standardize, FitConfig, InferenceConfig, StopRule};

use crate::error::{CliError, Result};
use crate::io::{emit, load_dataset, DataPaths};
use crate::options::{Ci, CovariateMode, Format, Resample, Standardize};
use crate::parallel::Parallel;
use crate::report::{render, DataSummary, FitReport, Settings};
use crate::study::{resolve_scenario, summary_csv, summary_rows};

#[derive(Debug, Parser)]
#[command(name = "pcma", version, about = "Principal component mediation analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit mediation components to CSV data and write a report.
    Fit(FitArgs),
    /// Run a replicated simulation study and write its summary table.
    Simulate(SimulateArgs),
    /// Render a saved fit report as text tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Exposures X, one column per exposure.
    #[arg(long)]
    pub exposures: PathBuf,
    /// Mediators M, one column per mediator.
    #[arg(long)]
    pub mediators: PathBuf,
    /// Covariates W; an intercept is added when missing.
    #[arg(long)]
    pub covariates: Option<PathBuf>,
    /// Outcome Y, a single column.
    #[arg(long)]
    pub outcome: PathBuf,
    /// Maximum number of components [default: min(p, q)].
    #[arg(long)]
    pub components: Option<usize>,
    /// Bootstrap resamples per component.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, value_enum, default_value_t = Ci::Bc)]
    pub ci: Ci,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = Resample::Scores)]
    pub resample: Resample,
    #[arg(long, value_enum, default_value_t = Standardize::Zscore)]
    pub standardize: Standardize,
    #[arg(long = "covariate-mode", value_enum, default_value_t = CovariateMode::InModel)]
    pub covariate_mode: CovariateMode,
    /// Fit every component up to the cap instead of stopping at the first
    /// non-significant one.
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long, default_value_t = 1000)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores); results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Output file [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `csv` writes the coefficient table to --out and the loadings next to
    /// it with the extension `.loadings.csv`.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Exit with status 3 if any component fails to converge.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `small`, `adni-dim` or a JSON scenario file.
    #[arg(long, default_value = "small")]
    pub scenario: String,
    /// Sample size, overriding the scenario's.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    /// Methods to compare.
    #[arg(long, value_delimiter = ',', default_values = ["pca-hp", "pcma"])]
    pub methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 20_000)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Pcma,
    PcaHp,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A JSON report written by `pcma fit`.
    #[arg(long)]
    pub input: PathBuf,
    /// Loadings listed per component and block; 0 prints coefficient tables
    /// only.
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// `csv` prints the coefficient table export instead of text.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Invalid(format!("--level must lie in (0, 1), got {}", args.level)));
    }
    let loaded = load_dataset(&DataPaths {
        exposures: args.exposures.clone(),
        mediators: args.mediators.clone(),
        covariates: args.covariates.clone(),
        outcome: args.outcome.clone(),
    })?;
    let mut data = loaded.data.clone();
    if args.covariate_mode == CovariateMode::PreAdjust {
        data = pre_adjust(&data)?;
    }
    let (center, scale) = args.standardize.flags();
    let (data, _) = standardize(&data, center, scale)?;
    let max_components = args.components.unwrap_or(data.p().min(data.q()));
    let fit_cfg = FitConfig {
        max_sweeps: args.max_sweeps,
        ..FitConfig::default()
    };
    let infer = InferenceConfig {
        n_boot: args.bootstrap,
        level: args.level,
        ci_type: args.ci.into(),
        seed: args.seed,
        mode: args.resample.into(),
    };
    let rule = if args.exhaustive { StopRule::Exhaustive } else { StopRule::FirstNonSignificant };
    let fit = fit_sequence_with(&data, max_components, &fit_cfg, &infer, rule, &Parallel::new(args.threads))?;

    let settings = Settings {
        max_components,
        bootstrap: args.bootstrap,
        ci: args.ci,
        level: args.level,
        resample: args.resample,
        standardize: args.standardize,
        covariates: args.covariate_mode,
        max_sweeps: args.max_sweeps,
        exhaustive: args.exhaustive,
        seed: args.seed,
    };
    let summary = DataSummary {
        n: data.n(),
        p: data.p(),
        q: data.q(),
        s: data.s(),
        exposures: loaded.exposure_names,
        mediators: loaded.mediator_names,
        covariates: if args.covariate_mode == CovariateMode::PreAdjust {
            vec![crate::io::INTERCEPT.to_owned()]
        } else {
            loaded.covariate_names
        },
        outcome: loaded.outcome_name,
    };
    let report = FitReport::new(settings, summary, &fit);
    match args.format {
        Format::Json => emit(args.out.as_deref(), &report.to_json())?,
        Format::Csv => {
            emit(args.out.as_deref(), &report.coefficients_csv())?;
            if let Some(out) = &args.out {
                emit(Some(&out.with_extension("loadings.csv")), &report.loadings_csv())?;
            }
        }
    }
    let bad = report.non_converged();
    if args.strict && bad > 0 {
        return Err(CliError::NotConverged(bad, report.all_components().count()));
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let scenario = resolve_scenario(&args.scenario, args.n, args.seed)?;
    let mut methods: Vec<Method> = Vec::new();
    for m in &args.methods {
        let m = match m {
            MethodArg::Pcma => Method::Pcma,
            MethodArg::PcaHp => Method::PcaHp,
        };
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let config = StudyConfig {
        replicates: args.replicates,
        methods,
        fit: FitConfig {
            max_sweeps: args.max_sweeps,
            ..FitConfig::default()
        },
        ..StudyConfig::default()
    };
    let summary = run_study_with(&scenario, &config, &Parallel::new(args.threads))?;
    let rows = summary_rows(&summary);
    let text = match args.format {
        Format::Csv => summary_csv(&rows),
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
    };
    emit(args.out.as_deref(), &text)
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| CliError::input(&args.input, e.to_string()))?;
    let report = FitReport::from_json(&text).map_err(|e| CliError::input(&args.input, e.to_string()))?;
    let out = match args.format {
        None => render(&report, args.top_k),
        Some(Format::Csv) => report.coefficients_csv(),
        Some(Format::Json) => report.to_json(),
    };
    emit(args.out.as_deref(), &out)
}

/// Parse `argv`, run the command and return the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("pcma: {e}");
            e.exit_code()
        }
    }
}
