//! Grouped multivariate observations with per-subject covariates.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::DMatrix;

use crate::linalg::numerical_rank;
use crate::{Error, Result};

/// Outcomes `Y` (n × d) and covariates `Z` (n × c) for `k` groups.
///
/// Rows are stored contiguously per group in group order, so every
/// direct-sum structure over groups is an index range.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    groups: Vec<String>,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    y: DMatrix<f64>,
    z: DMatrix<f64>,
    outcome_names: Vec<String>,
    covariate_names: Vec<String>,
    original_rows: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset whose rows are already contiguous per group.
    pub fn new(groups: Vec<String>, sizes: Vec<usize>, y: DMatrix<f64>, z: DMatrix<f64>) -> Result<Self> {
        let n = y.nrows();
        let original_rows = (0..n).collect();
        Self::assemble(groups, sizes, y, z, original_rows)
    }

    /// Builds a dataset from rows in arbitrary order, each tagged with its
    /// group label.
    ///
    /// Groups are ordered by `order` when given, otherwise by first
    /// appearance. Rows are regrouped stably; the original index of every
    /// stored row is kept in [`Dataset::original_rows`].
    pub fn from_labeled_rows(
        labels: &[&str],
        y: DMatrix<f64>,
        z: DMatrix<f64>,
        order: Option<&[&str]>,
    ) -> Result<Self> {
        if labels.len() != y.nrows() {
            return Err(Error::Dimension(format!(
                "{} group labels for {} outcome rows",
                labels.len(),
                y.nrows()
            )));
        }
        let mut groups: Vec<String> = match order {
            Some(o) => o.iter().map(|s| s.to_string()).collect(),
            None => Vec::new(),
        };
        let mut index_of = Vec::with_capacity(labels.len());
        for label in labels {
            match groups.iter().position(|g| g == label) {
                Some(i) => index_of.push(i),
                None if order.is_some() => {
                    return Err(Error::InvalidArgument(format!("group label '{label}' not in the declared group order")))
                }
                None => {
                    groups.push(label.to_string());
                    index_of.push(groups.len() - 1);
                }
            }
        }
        let mut perm: Vec<usize> = (0..labels.len()).collect();
        perm.sort_by_key(|&r| index_of[r]);
        let mut sizes = alloc::vec![0usize; groups.len()];
        for &g in &index_of {
            sizes[g] += 1;
        }
        let y = DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| y[(perm[i], j)]);
        let z = DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| z[(perm[i], j)]);
        Self::assemble(groups, sizes, y, z, perm)
    }

    fn assemble(
        groups: Vec<String>,
        sizes: Vec<usize>,
        y: DMatrix<f64>,
        z: DMatrix<f64>,
        original_rows: Vec<usize>,
    ) -> Result<Self> {
        if groups.len() != sizes.len() {
            return Err(Error::Dimension(format!("{} group labels for {} group sizes", groups.len(), sizes.len())));
        }
        if groups.len() < 2 {
            return Err(Error::TooFewGroups(groups.len()));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::EmptyGroup(groups[i].clone()));
        }
        let n: usize = sizes.iter().sum();
        if y.nrows() != n || z.nrows() != n {
            return Err(Error::Dimension(format!(
                "group sizes sum to {n}, Y has {} rows, Z has {} rows",
                y.nrows(),
                z.nrows()
            )));
        }
        if y.ncols() == 0 {
            return Err(Error::Dimension("at least one outcome (d >= 1) required".into()));
        }
        for (what, m) in [("Y", &y), ("Z", &z)] {
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    if !m[(i, j)].is_finite() {
                        return Err(Error::NonFinite { what, row: i, col: j });
                    }
                }
            }
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for s in &sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        let outcome_names = (1..=y.ncols()).map(|l| format!("y{l}")).collect();
        let covariate_names = (1..=z.ncols()).map(|m| format!("z{m}")).collect();
        Ok(Self { groups, sizes, offsets, y, z, outcome_names, covariate_names, original_rows })
    }

    /// Replaces the default outcome names `y1..yd`.
    pub fn with_outcome_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d() {
            return Err(Error::Dimension(format!("{} outcome names for d = {}", names.len(), self.d())));
        }
        self.outcome_names = names;
        Ok(self)
    }

    /// Replaces the default covariate names `z1..zc`.
    pub fn with_covariate_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.c() {
            return Err(Error::Dimension(format!("{} covariate names for c = {}", names.len(), self.c())));
        }
        self.covariate_names = names;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn d(&self) -> usize {
        self.y.ncols()
    }

    pub fn c(&self) -> usize {
        self.z.ncols()
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn outcome_names(&self) -> &[String] {
        &self.outcome_names
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Row range of group `i`.
    pub fn group_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Group index of every row.
    pub fn row_groups(&self) -> impl Iterator<Item = usize> + '_ {
        self.sizes.iter().enumerate().flat_map(|(i, &s)| core::iter::repeat_n(i, s))
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// Index in the caller's input of every stored row.
    pub fn original_rows(&self) -> &[usize] {
        &self.original_rows
    }

    /// Copy of the dataset with outcomes replaced (same groups and covariates).
    pub fn with_outcomes(&self, y: DMatrix<f64>) -> Result<Self> {
        if y.shape() != self.y.shape() {
            return Err(Error::Dimension(format!("outcome shape {:?} != {:?}", y.shape(), self.y.shape())));
        }
        let mut out = self.clone();
        out.y = y;
        Ok(out)
    }

    /// Copy of the dataset with covariates replaced (same groups and outcomes).
    pub fn with_covariates(&self, z: DMatrix<f64>) -> Result<Self> {
        if z.nrows() != self.n() {
            return Err(Error::Dimension(format!("covariate rows {} != n = {}", z.nrows(), self.n())));
        }
        let mut out = self.clone();
        out.covariate_names = (1..=z.ncols()).map(|m| format!("z{m}")).collect();
        out.z = z;
        Ok(out)
    }

    /// The univariate design `X = (M, Z)`, n × (k + c), with `M` the group
    /// indicator block.
    pub fn univariate_design(&self) -> DMatrix<f64> {
        let (k, c) = (self.k(), self.c());
        let mut x = DMatrix::zeros(self.n(), k + c);
        for (row, g) in self.row_groups().enumerate() {
            x[(row, g)] = 1.0;
        }
        x.view_mut((0, k), (self.n(), c)).copy_from(&self.z);
        x
    }

    /// Raw (unadjusted) group means, k × d.
    pub fn group_means(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.k(), self.d(), |i, l| {
            let r = self.group_range(i);
            let len = r.len() as f64;
            r.map(|row| self.y[(row, l)]).sum::<f64>() / len
        })
    }
}

/// Admissibility report for fitting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// Fatal problems; fitting must not proceed.
    pub errors: Vec<String>,
    /// Advisory problems.
    pub warnings: Vec<String>,
    /// One line per check that was run.
    pub details: Vec<String>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Checks the empirical counterparts of the model assumptions: full column
/// rank of `[group indicators | Z]`, positive within-group outcome variance,
/// and `n_i > c + 1` for the parametric bootstrap divisor.
pub fn validate(ds: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (k, c) = (ds.k(), ds.c());

    let x = ds.univariate_design();
    let rank = numerical_rank(&x);
    report.details.push(format!("design rank {rank} of {} columns (k = {k}, c = {c})", k + c));
    if rank < k + c {
        report
            .errors
            .push(format!("rank deficiency: [group indicators | Z] has rank {rank} < k + c = {}", k + c));
    }

    for i in 0..k {
        let range = ds.group_range(i);
        for l in 0..ds.d() {
            let first = ds.y()[(range.start, l)];
            if range.clone().all(|row| ds.y()[(row, l)] == first) {
                report.warnings.push(format!(
                    "zero within-group variance in component {} ({}) of group {} ({})",
                    l + 1,
                    ds.outcome_names()[l],
                    i + 1,
                    ds.groups()[i]
                ));
            }
        }
        if ds.sizes()[i] <= c + 1 {
            report.warnings.push(format!(
                "n_i <= c+1 in group {} ({}): n_i = {}, c = {c}; parametric bootstrap unavailable",
                i + 1,
                ds.groups()[i],
                ds.sizes()[i]
            ));
        }
    }
    report.details.push(format!("variance and group-size checks over {k} groups, d = {}", ds.d()));
    report
}
