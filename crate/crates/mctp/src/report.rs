//! Result document (JSON) and fixed-width table.

use std::fmt::Write as _;

use mctp_core::{ContrastMatrix, Dataset, MctpResult};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub input: Option<String>,
    pub design: DesignInfo,
    pub contrast_family: String,
    pub result: ResultDoc,
    pub meta: MetaDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignInfo {
    pub groups: Vec<String>,
    pub sizes: Vec<usize>,
    pub outcomes: Vec<String>,
    pub covariates: Vec<String>,
    /// Unadjusted group means, one row per group.
    pub group_means: Vec<Vec<f64>>,
    /// Covariate-adjusted means μ̂, one row per group.
    pub adjusted_means: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDoc {
    pub gamma: f64,
    pub gamma_index: usize,
    pub global_p: f64,
    pub global_reject: bool,
    pub contrasts: Vec<ContrastDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastDoc {
    pub label: String,
    pub coefficients: Vec<f64>,
    pub estimate: f64,
    pub std_error: f64,
    pub statistic: f64,
    pub quantile: f64,
    pub p_value: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaDoc {
    pub bootstrap: Option<String>,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub invalid_redraws: usize,
    pub warnings: Vec<String>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl Report {
    pub fn new(
        ds: &Dataset,
        adjusted_means: &DMatrix<f64>,
        contrasts: &ContrastMatrix,
        result: &MctpResult,
        input: Option<String>,
    ) -> Self {
        let contrast_docs = result
            .per_contrast
            .iter()
            .enumerate()
            .map(|(s, c)| ContrastDoc {
                label: c.label.clone(),
                coefficients: contrasts.row(s).to_vec(),
                estimate: c.estimate,
                std_error: c.std_error,
                statistic: c.statistic,
                quantile: c.quantile,
                p_value: c.p_value,
                ci_lower: c.ci_lower,
                ci_upper: c.ci_upper,
                reject: c.reject,
            })
            .collect();
        Self {
            tool: format!("mctp {}", env!("CARGO_PKG_VERSION")),
            input,
            design: DesignInfo {
                groups: ds.groups().to_vec(),
                sizes: ds.sizes().to_vec(),
                outcomes: ds.outcome_names().to_vec(),
                covariates: ds.covariate_names().to_vec(),
                group_means: rows(&ds.group_means()),
                adjusted_means: rows(adjusted_means),
            },
            contrast_family: contrasts.family().to_string(),
            result: ResultDoc {
                gamma: result.gamma,
                gamma_index: result.gamma_index,
                global_p: result.global_p,
                global_reject: result.global_reject,
                contrasts: contrast_docs,
            },
            meta: MetaDoc {
                bootstrap: result.meta.kind.map(|k| k.to_string()),
                replicates: result.meta.replicates,
                seed: result.meta.seed,
                alpha: result.meta.alpha,
                invalid_redraws: result.meta.invalid_redraws,
                warnings: result.meta.warnings.clone(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width table, p-values and γ at four decimals.
    pub fn table(&self) -> String {
        let r = &self.result;
        let width = r.contrasts.iter().map(|c| c.label.len()).max().unwrap_or(0).max("contrast".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>12}  {:>10}  {:>8}  {:>8}  {:>27}  decision",
            "contrast", "estimate", "statistic", "p", "gamma", "simultaneous CI"
        );
        for c in &r.contrasts {
            let ci = format!("[{:.4}, {:.4}]", c.ci_lower, c.ci_upper);
            let _ = writeln!(
                out,
                "{:<width$}  {:>12.4}  {:>10.4}  {:>8.4}  {:>8.4}  {:>27}  {}",
                c.label,
                c.estimate,
                c.statistic,
                c.p_value,
                r.gamma,
                ci,
                if c.reject { "reject" } else { "-" }
            );
        }
        let _ = writeln!(
            out,
            "global: p = {:.4}, gamma = {:.4}, alpha = {}, {}",
            r.global_p,
            r.gamma,
            self.meta.alpha,
            if r.global_reject { "reject" } else { "no rejection" }
        );
        let _ = writeln!(
            out,
            "bootstrap: {} B = {} seed = {}",
            self.meta.bootstrap.as_deref().unwrap_or("-"),
            self.meta.replicates,
            self.meta.seed
        );
        for w in &self.meta.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
