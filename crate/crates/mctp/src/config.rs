//! Command-line options and config files. A config file may set any option;
//! options given on the command line take precedence.

use std::path::{Path, PathBuf};

use clap::Args;
use mctp_core::{BootstrapKind, ContrastFamily};
use serde::{Deserialize, Deserializer};

/// Seed used when none is given, so that documented examples reproduce.
pub const DEFAULT_SEED: u64 = 2025;
pub const DEFAULT_REPLICATES: usize = 2000;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_GROUP_COL: &str = "group";

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Accepts either a list or a comma-separated string.
fn names<'de, D: Deserializer<'de>>(de: D) -> Result<Option<Vec<String>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Names {
        List(Vec<String>),
        Joined(String),
    }
    Ok(Option::<Names>::deserialize(de)?.map(|n| match n {
        Names::List(v) => v,
        Names::Joined(s) => split_names(&s),
    }))
}

fn split_names(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContrastChoice {
    Family(ContrastFamily),
    Custom(PathBuf),
}

impl std::str::FromStr for ContrastChoice {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        if let Some(path) = s.strip_prefix("custom:") {
            if path.is_empty() {
                return err("custom contrasts need a file: custom:<path>");
            }
            return Ok(Self::Custom(PathBuf::from(path)));
        }
        match s.parse::<ContrastFamily>() {
            Ok(ContrastFamily::Custom) => err("custom contrasts need a file: custom:<path>"),
            Ok(f) => Ok(Self::Family(f)),
            Err(e) => err(e.to_string()),
        }
    }
}

/// Data-file options shared by `analyze` and `contrasts`.
#[derive(Debug, Clone, Default, Args)]
pub struct DataOptions {
    /// CSV file with a header row
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column holding the group labels [default: group]
    #[arg(long)]
    pub group_col: Option<String>,
    /// Outcome columns, comma separated
    #[arg(long, value_delimiter = ',')]
    pub outcomes: Option<Vec<String>>,
    /// Covariate columns, comma separated (may be empty)
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Group order, comma separated [default: order of first appearance]
    #[arg(long, value_delimiter = ',')]
    pub groups: Option<Vec<String>>,
    /// two-sample, dunnett, tukey, grand-mean or custom:<path>
    #[arg(long)]
    pub contrast: Option<String>,
}

impl DataOptions {
    fn merge(self, file: DataOptions) -> Self {
        Self {
            input: self.input.or(file.input),
            group_col: self.group_col.or(file.group_col),
            outcomes: self.outcomes.or(file.outcomes),
            covariates: self.covariates.or(file.covariates),
            groups: self.groups.or(file.groups),
            contrast: self.contrast.or(file.contrast),
        }
    }

    pub fn schema(&self) -> Result<crate::io::Schema, ConfigError> {
        let outcomes = match &self.outcomes {
            Some(o) if !o.is_empty() => o.clone(),
            _ => return err("--outcomes is required"),
        };
        Ok(crate::io::Schema {
            group_col: self.group_col.clone().unwrap_or_else(|| DEFAULT_GROUP_COL.into()),
            outcomes,
            covariates: self.covariates.clone().unwrap_or_default(),
            group_order: self.groups.clone(),
        })
    }

    pub fn contrast_choice(&self) -> Result<ContrastChoice, ConfigError> {
        match &self.contrast {
            Some(c) => c.parse(),
            None => err("--contrast is required"),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnalyzeOptions {
    #[command(flatten)]
    pub data: DataOptions,
    /// wild or parametric [default: wild]
    #[arg(long)]
    pub bootstrap: Option<String>,
    /// Bootstrap replicates [default: 2000]
    #[arg(long = "B", visible_alias = "replicates")]
    pub replicates: Option<usize>,
    /// Global level [default: 0.05]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Master seed [default: 2025]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for result.json, table.txt and draws.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the bootstrap statistics to <out>/draws.csv
    #[arg(long)]
    pub dump_draws: bool,
    /// Worker threads, 0 for all cores [default: 0]
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Fully resolved settings of `analyze`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeConfig {
    pub input: PathBuf,
    pub schema: crate::io::Schema,
    pub contrast: ContrastChoice,
    pub bootstrap: BootstrapKind,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub dump_draws: bool,
    pub workers: usize,
}

impl AnalyzeOptions {
    pub fn merge(self, file: AnalyzeOptions) -> Self {
        Self {
            data: self.data.merge(file.data),
            bootstrap: self.bootstrap.or(file.bootstrap),
            replicates: self.replicates.or(file.replicates),
            alpha: self.alpha.or(file.alpha),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            dump_draws: self.dump_draws || file.dump_draws,
            workers: self.workers.or(file.workers),
        }
    }

    pub fn resolve(self) -> Result<AnalyzeConfig, ConfigError> {
        let input = match self.data.input.clone() {
            Some(p) => p,
            None => return err("--input is required"),
        };
        let bootstrap = match &self.bootstrap {
            Some(b) => b.parse::<BootstrapKind>().map_err(|e| ConfigError(e.to_string()))?,
            None => BootstrapKind::Wild,
        };
        let replicates = self.replicates.unwrap_or(DEFAULT_REPLICATES);
        if replicates == 0 {
            return err("B must be at least 1");
        }
        let alpha = self.alpha.unwrap_or(DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return err(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        if self.dump_draws && self.out.is_none() {
            return err("--dump-draws needs --out");
        }
        Ok(AnalyzeConfig {
            input,
            schema: self.data.schema()?,
            contrast: self.data.contrast_choice()?,
            bootstrap,
            replicates,
            alpha,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            out: self.out,
            dump_draws: self.dump_draws,
            workers: self.workers.unwrap_or(0),
        })
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ContrastsOptions {
    #[command(flatten)]
    pub data: DataOptions,
    /// Number of groups (when no --input or --groups is given)
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of outcomes (when no --input or --outcomes is given)
    #[arg(long)]
    pub d: Option<usize>,
}

impl ContrastsOptions {
    pub fn merge(self, file: ContrastsOptions) -> Self {
        Self { data: self.data.merge(file.data), k: self.k.or(file.k), d: self.d.or(file.d) }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateOptions {
    /// Write the results CSV here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Simulation runs per scenario
    #[arg(long)]
    pub runs: Option<usize>,
    /// Bootstrap replicates per run
    #[arg(long = "B", visible_alias = "replicates")]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bootstrap methods, comma separated [default: wild,parametric]
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Worker threads, 0 for all cores
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Config file contents; every key mirrors a long option.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub group_col: Option<String>,
    #[serde(default, deserialize_with = "names")]
    pub outcomes: Option<Vec<String>>,
    #[serde(default, deserialize_with = "names")]
    pub covariates: Option<Vec<String>>,
    #[serde(default, deserialize_with = "names")]
    pub groups: Option<Vec<String>>,
    pub contrast: Option<String>,
    pub bootstrap: Option<String>,
    #[serde(rename = "B", alias = "replicates")]
    pub replicates: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub dump_draws: bool,
    pub workers: Option<usize>,
    pub k: Option<usize>,
    pub d: Option<usize>,
}

impl FileConfig {
    fn data(&self) -> DataOptions {
        DataOptions {
            input: self.input.clone(),
            group_col: self.group_col.clone(),
            outcomes: self.outcomes.clone(),
            covariates: self.covariates.clone(),
            groups: self.groups.clone(),
            contrast: self.contrast.clone(),
        }
    }

    pub fn analyze(&self) -> AnalyzeOptions {
        AnalyzeOptions {
            data: self.data(),
            bootstrap: self.bootstrap.clone(),
            replicates: self.replicates,
            alpha: self.alpha,
            seed: self.seed,
            out: self.out.clone(),
            dump_draws: self.dump_draws,
            workers: self.workers,
        }
    }

    pub fn contrasts(&self) -> ContrastsOptions {
        ContrastsOptions { data: self.data(), k: self.k, d: self.d }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config file: {e}")))
    }
}

pub fn read_config_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}
