use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mctp::config::{
    read_config_file, AnalyzeOptions, ConfigError, ContrastChoice, ContrastsOptions, FileConfig, SimulateOptions,
    DEFAULT_SEED,
};
use mctp::io::{self, IoError};
use mctp::report::Report;
use mctp::study::{self, StudyError, StudyGrid, StudySettings};
use mctp_core::dataset::validate;
use mctp_core::{BootstrapConfig, BootstrapKind, ContrastMatrix};

/// Bootstrap multiple contrast tests for covariate-adjusted means.
///
/// Exit codes: 0 success (whatever the test decisions), 1 I/O or
/// configuration problem, 2 invalid data or contrasts.
#[derive(Debug, Parser)]
#[command(name = "mctp", version)]
struct Cli {
    /// TOML file supplying any long option; command-line options win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Do not print warnings
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test a family of contrasts on a CSV dataset
    Analyze(AnalyzeOptions),
    /// Run a simulation study over the scenario grid given by --config
    Simulate(SimulateOptions),
    /// Print a contrast matrix with its row labels
    Contrasts(ContrastsOptions),
}

enum Failure {
    Environment(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Environment(_) => 1,
            Failure::Data(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Environment(m) | Failure::Data(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Environment(e.to_string())
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Environment(e.to_string())
        }
    }
}

impl From<mctp_core::Error> for Failure {
    fn from(e: mctp_core::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<StudyError> for Failure {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Run { .. } => Failure::Data(e.to_string()),
            StudyError::Io(io) => io.into(),
            _ => Failure::Environment(e.to_string()),
        }
    }
}

fn file_config(cli: &Cli) -> Result<FileConfig, Failure> {
    match &cli.config {
        Some(path) => Ok(FileConfig::from_toml(&read_config_file(path)?)?),
        None => Ok(FileConfig::default()),
    }
}

fn build_contrasts(
    choice: &ContrastChoice,
    groups: &[String],
    outcomes: &[String],
) -> Result<ContrastMatrix, Failure> {
    match choice {
        ContrastChoice::Family(f) => Ok(f.build_named(groups, outcomes)?),
        ContrastChoice::Custom(path) => Ok(io::load_contrasts_csv(path, groups.len(), outcomes.len())?),
    }
}

fn analyze(cli: &Cli, opts: AnalyzeOptions) -> Result<(), Failure> {
    let cfg = opts.merge(file_config(cli)?.analyze()).resolve()?;
    let ds = io::load_csv(&cfg.input, &cfg.schema)?;
    let report = validate(&ds);
    if !report.is_admissible() {
        return Err(Failure::Data(format!("dataset not admissible: {}", report.errors.join("; "))));
    }
    let contrasts = build_contrasts(&cfg.contrast, ds.groups(), ds.outcome_names())?;
    let mut boot = BootstrapConfig::new(cfg.bootstrap, cfg.replicates, cfg.seed);
    boot.workers = cfg.workers;
    let (analysis, draws, result) = mctp::parallel::run_mctp(&ds, &contrasts, &boot, cfg.alpha)?;
    let doc = Report::new(&ds, &analysis.fit.mu_hat, &contrasts, &result, Some(cfg.input.display().to_string()));
    let table = doc.table();
    print!("{table}");
    if !cli.quiet {
        for w in &result.meta.warnings {
            eprintln!("warning: {w}");
        }
    }
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Environment(format!("{}: {e}", dir.display())))?;
        io::write_text(&dir.join("result.json"), &doc.to_json())?;
        io::write_text(&dir.join("table.txt"), &table)?;
        if cfg.dump_draws {
            io::write_draws_csv(&dir.join("draws.csv"), &draws, contrasts.labels())?;
        }
    }
    Ok(())
}

fn simulate(cli: &Cli, opts: SimulateOptions) -> Result<(), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Environment("simulate needs a scenario grid: --config <grid.toml>".into()))?;
    let grid = StudyGrid::from_toml(&read_config_file(path)?)?;
    let scenarios = grid.scenarios()?;
    let mut settings = grid.settings(&StudySettings::new(1000, 1000, 0.05, DEFAULT_SEED))?;
    if let Some(v) = opts.runs {
        settings.runs = v;
    }
    if let Some(v) = opts.replicates {
        settings.replicates = v;
    }
    if let Some(v) = opts.alpha {
        settings.alpha = v;
    }
    if let Some(v) = opts.seed {
        settings.seed = v;
    }
    if let Some(v) = opts.workers {
        settings.workers = v;
    }
    if let Some(m) = &opts.methods {
        settings.methods = m
            .iter()
            .map(|s| s.parse::<BootstrapKind>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::Environment(e.to_string()))?;
    }
    let results = study::run_study(&scenarios, &settings)?;
    match &opts.out {
        Some(out) => study::write_study_file(out, &results)?,
        None => study::write_study_csv(std::io::stdout().lock(), &results)?,
    }
    if !cli.quiet {
        for r in &results {
            let (lo, hi) = r.interval(0.95);
            eprintln!(
                "{} [{}]: {:.2}% ({:.2}, {:.2})",
                r.scenario.describe(),
                r.method,
                r.rate(),
                lo,
                hi
            );
        }
    }
    Ok(())
}

fn contrasts(cli: &Cli, opts: ContrastsOptions) -> Result<(), Failure> {
    let opts = opts.merge(file_config(cli)?.contrasts());
    let choice = opts.data.contrast_choice()?;
    let (groups, outcomes) = if let Some(input) = &opts.data.input {
        let schema = opts.data.schema()?;
        let ds = io::load_csv(input, &schema)?;
        (ds.groups().to_vec(), ds.outcome_names().to_vec())
    } else {
        let groups = match (&opts.data.groups, opts.k) {
            (Some(g), Some(k)) if g.len() != k => {
                return Err(Failure::Environment(format!("--groups lists {} groups but --k is {k}", g.len())))
            }
            (Some(g), _) => g.clone(),
            (None, Some(k)) => (1..=k).map(|i| i.to_string()).collect(),
            (None, None) => return Err(Failure::Environment("give --k, --groups or --input".into())),
        };
        let outcomes = match (&opts.data.outcomes, opts.d) {
            (Some(o), Some(d)) if o.len() != d => {
                return Err(Failure::Environment(format!("--outcomes lists {} names but --d is {d}", o.len())))
            }
            (Some(o), _) => o.clone(),
            (None, Some(d)) => (1..=d).map(|l| format!("y{l}")).collect(),
            (None, None) => return Err(Failure::Environment("give --d, --outcomes or --input".into())),
        };
        (groups, outcomes)
    };
    let h = build_contrasts(&choice, &groups, &outcomes)?;
    let columns: Vec<String> = groups
        .iter()
        .flat_map(|g| outcomes.iter().map(move |o| format!("{g}:{o}")))
        .collect();
    let width = h.labels().iter().map(String::len).max().unwrap_or(0).max("contrast".len());
    let cell = columns.iter().map(String::len).max().unwrap_or(0).max(6);
    print!("{:<width$}", "contrast");
    for c in &columns {
        print!("  {c:>cell$}");
    }
    println!();
    for (s, label) in h.labels().iter().enumerate() {
        print!("{label:<width$}");
        for v in h.row(s) {
            print!("  {:>cell$}", format!("{v}"));
        }
        println!();
    }
    Ok(())
}

fn main() -> ExitCode {
    // usage errors are configuration errors (exit 1), not clap's default 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Analyze(o) => analyze(&cli, o.clone()),
        Command::Simulate(o) => simulate(&cli, o.clone()),
        Command::Contrasts(o) => contrasts(&cli, o.clone()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
