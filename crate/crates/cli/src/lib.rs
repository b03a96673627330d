//! Argument parsing and subcommand implementations for the `lcmix` binary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lcmix::em::{classification_error, run_em};
use lcmix::io::{
    read_data_csv_path, read_weighted_csv_path, write_data_csv, write_em_grid_csv, write_fit_grid_csv, write_json,
    EmExport, GridSpec,
};
use lcmix::logconcave::fit_weighted_logconcave;
use lcmix::simulation::{
    full_profile, model_catalog, run_replications, summarize, summary_table, write_summary_csv, write_summary_json,
    ScenarioSpec, SummaryRow,
};
use lcmix::tstats::{two_sample_tstats, write_tstats_csv, ExpressionMatrix};
use lcmix::{check_identifiability, EmConfig, Error, FitOptions, KnownComponentSpec, RngSeed, WeightedSample};

#[derive(Debug, Parser)]
#[command(name = "lcmix", version, about = "Mixtures with a known component and a log-concave unknown component")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate p and f from observations.
    Fit(FitArgs),
    /// Run the benchmark models and summarize bias and MSE.
    Simulate(SimulateArgs),
    /// Fit a weighted log-concave density.
    Logcx(LogcxArgs),
    /// Per-gene two-sample t statistics and p-values.
    Tstats(TstatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EmArgs {
    /// Initial mixing proportion.
    #[arg(long, default_value_t = 0.5)]
    pub p_init: f64,
    /// Relative log-likelihood change that stops EM.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_loglik: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Optimality tolerance of the log-concave fit.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_kkt: f64,
}

impl EmArgs {
    fn config(&self) -> EmConfig {
        EmConfig {
            p_init: self.p_init,
            tol_loglik: self.tol_loglik,
            max_iters: self.max_iters,
            fit_options: FitOptions {
                tol_kkt: self.tol_kkt,
                ..FitOptions::default()
            },
            ..EmConfig::default()
        }
    }
}

fn parse_f0(s: &str) -> Result<KnownComponentSpec, String> {
    KnownComponentSpec::parse(s).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    GridSpec::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with an `x` column and an optional `label` column (1 = drawn from f0).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Name of the column holding the observations.
    #[arg(long, default_value = "x")]
    pub column: String,
    /// normal:MU,SIGMA | uniform:A,B | exp:LAMBDA | t:NU | table:PATH
    #[arg(long, value_parser = parse_f0)]
    pub f0: KnownComponentSpec,
    /// Result JSON.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Density grid `lo,hi,count`.
    #[arg(long, value_parser = parse_grid, requires = "grid_output", allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    /// Grid CSV with columns x,f0,f_hat,g_hat,posterior.
    #[arg(long, requires = "grid")]
    pub grid_output: Option<PathBuf>,
    #[command(flatten)]
    pub em: EmArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=6),
          conflicts_with = "full_profile")]
    pub model: u8,
    #[arg(long, default_value_t = 0.5, conflicts_with = "full_profile")]
    pub p: f64,
    #[arg(long, default_value_t = 500, conflicts_with = "full_profile")]
    pub n: usize,
    #[arg(long, default_value_t = 50, conflicts_with = "full_profile")]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Summary table; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
    /// Every model, p in {0.2, 0.5, 0.8} and n in {250, 500, 1000} with 200 replications.
    #[arg(long)]
    pub full_profile: bool,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Per-replication CSV `rep,p_hat,mu_hat,cla_error,error`.
    #[arg(long, conflicts_with = "full_profile")]
    pub replications_output: Option<PathBuf>,
    /// Replication whose data is written to `--data-output`.
    #[arg(long, requires = "data_output", conflicts_with = "full_profile")]
    pub export_replication: Option<usize>,
    /// Data CSV `x,label` of the exported replication.
    #[arg(long, requires = "export_replication")]
    pub data_output: Option<PathBuf>,
    #[command(flatten)]
    pub em: EmArgs,
}

#[derive(Debug, Args)]
pub struct LogcxArgs {
    /// CSV with header `x,weight`.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Fit JSON.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_parser = parse_grid, requires = "grid_output", allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    /// Grid CSV with columns x,phi,f_hat.
    #[arg(long, requires = "grid")]
    pub grid_output: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_kkt: f64,
}

#[derive(Debug, Args)]
pub struct TstatsArgs {
    /// Genes-by-samples CSV; the first column holds gene ids.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Number of leading sample columns in group 1.
    #[arg(long)]
    pub group1_cols: usize,
    /// Output CSV `gene,t,p_value`; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_ESTIMATION: u8 = 3;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ZeroMixtureDensity { .. }
            | Error::ComponentCollapsed { .. }
            | Error::AllWeightsKnown
            | Error::ReplicationFailed { .. }
            | Error::AllReplicationsFailed(_) => EXIT_ESTIMATION,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

fn with_path(path: &Path) -> impl FnOnce(Error) -> CliError + '_ {
    move |e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| with_path(path)(e.into()))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Logcx(args) => cmd_logcx(&args),
        Command::Tstats(args) => cmd_tstats(&args),
    }
}

pub fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let config = args.em.config();
    config.validate()?;
    let data = read_data_csv_path(&args.input, &args.column).map_err(with_path(&args.input))?;
    let result = run_em(&data.values, &args.f0, &config)?;
    let report = check_identifiability(&args.f0, Some(&result.f_hat));
    let cla = match &data.labels {
        Some(labels) => Some(classification_error(&result.omega, labels)?),
        None => None,
    };
    let mut out = create(&args.output)?;
    write_json(&mut out, &EmExport::new(&result, report.clone(), cla))?;
    out.flush()?;
    if let (Some(grid), Some(path)) = (&args.grid, &args.grid_output) {
        let mut g = create(path)?;
        write_em_grid_csv(&mut g, grid, &result, &args.f0)?;
        g.flush()?;
    }

    let mut stdout = io::stdout().lock();
    writeln!(stdout, "p_hat = {}", result.p_hat)?;
    writeln!(stdout, "identifiability: {}", report.verdict)?;
    if let Some(c) = cla {
        writeln!(stdout, "cla_error = {c}")?;
    }
    if let Some(d) = result.degenerate {
        writeln!(stdout, "degenerate: {d:?}")?;
    }
    if !result.converged {
        eprintln!("warning: EM stopped after {} iterations without converging", result.iterations);
    }
    Ok(())
}

fn replication_rows(outcomes: &[lcmix::Result<lcmix::simulation::ReplicationOutcome>]) -> Vec<[String; 5]> {
    outcomes
        .iter()
        .enumerate()
        .map(|(r, o)| match o {
            Ok(o) => [r.to_string(), o.p_hat.to_string(), o.mu_hat.to_string(), o.cla_error.to_string(), String::new()],
            Err(e) => [r.to_string(), String::new(), String::new(), String::new(), e.to_string()],
        })
        .collect()
}

fn simulate_rows(args: &SimulateArgs) -> Result<Vec<SummaryRow>, CliError> {
    let config = args.em.config();
    let seed = RngSeed(args.seed);
    let specs = if args.full_profile {
        full_profile(seed, config)
    } else {
        vec![ScenarioSpec {
            model_id: args.model,
            p: args.p,
            n: args.n,
            reps: args.reps,
            base_seed: seed,
            em_config: config,
        }]
    };
    for spec in &specs {
        spec.validate()?;
    }
    if let (Some(r), Some(path)) = (args.export_replication, &args.data_output) {
        let spec = &specs[0];
        if r >= spec.reps {
            return Err(Error::InvalidParameter(format!("replication {r} out of range 0..{}", spec.reps)).into());
        }
        let data = spec.replication_sample(r)?;
        let mut out = create(path)?;
        write_data_csv(&mut out, &data.values, Some(&data.labels))?;
        out.flush()?;
    }
    let mut rows = Vec::with_capacity(specs.len());
    for spec in &specs {
        let outcomes = run_replications(spec)?;
        if let Some(path) = &args.replications_output {
            let mut out = create(path)?;
            writeln!(out, "rep,p_hat,mu_hat,cla_error,error")?;
            for row in replication_rows(&outcomes) {
                let error = row[4].replace(['"', '\n'], " ");
                let error = if error.contains(',') { format!("\"{error}\"") } else { error };
                writeln!(out, "{},{},{},{},{}", row[0], row[1], row[2], row[3], error)?;
            }
            out.flush()?;
        }
        let summary = summarize(&outcomes, spec.p, model_catalog(spec.model_id)?.true_mu)?;
        rows.push(SummaryRow::new(spec, &summary));
    }
    Ok(summary_table(rows)?)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let rows = match args.threads {
        Some(0) => return Err(Error::InvalidParameter("--threads must be at least 1".into()).into()),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError {
                code: EXIT_INPUT,
                message: e.to_string(),
            })?
            .install(|| simulate_rows(args))?,
        None => simulate_rows(args)?,
    };
    let mut out = sink(args.output.as_deref())?;
    match args.format {
        TableFormat::Csv => write_summary_csv(&rows, &mut out)?,
        TableFormat::Json => {
            write_summary_json(&rows, &mut out)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_logcx(args: &LogcxArgs) -> Result<(), CliError> {
    let opts = FitOptions {
        tol_kkt: args.tol_kkt,
        ..FitOptions::default()
    };
    opts.validate()?;
    let (points, weights) = read_weighted_csv_path(&args.input).map_err(with_path(&args.input))?;
    let sample = WeightedSample::new(&points, &weights)?;
    let fit = fit_weighted_logconcave(&sample, &opts)?;
    let mut out = create(&args.output)?;
    write_json(&mut out, &fit)?;
    out.flush()?;
    if let (Some(grid), Some(path)) = (&args.grid, &args.grid_output) {
        let mut g = create(path)?;
        write_fit_grid_csv(&mut g, grid, &fit)?;
        g.flush()?;
    }
    Ok(())
}

pub fn cmd_tstats(args: &TstatsArgs) -> Result<(), CliError> {
    let matrix = ExpressionMatrix::from_csv_path(&args.input).map_err(with_path(&args.input))?;
    let stats = two_sample_tstats(&matrix, args.group1_cols)?;
    let mut out = sink(args.output.as_deref())?;
    write_tstats_csv(&mut out, &stats)?;
    out.flush()?;
    Ok(())
}
