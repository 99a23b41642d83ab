//! Contrast matrices `H = H_u ⊗ I_d` for the supported multiple testing
//! problems, plus validated custom matrices.
//!
//! Columns are indexed group-major (`i * d + l`), matching
//! [`FitResult::mu_vec`](crate::FitResult::mu_vec). Within one group
//! comparison the outcome index varies fastest.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContrastFamily {
    TwoSample,
    Dunnett,
    Tukey,
    GrandMean,
    Custom,
}

impl ContrastFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::TwoSample => "two-sample",
            Self::Dunnett => "dunnett",
            Self::Tukey => "tukey",
            Self::GrandMean => "grand-mean",
            Self::Custom => "custom",
        }
    }

    /// Builds the family for `k` groups and `d` outcomes, labelling rows
    /// with the given group and outcome names.
    pub fn build_named(self, groups: &[String], outcomes: &[String]) -> Result<ContrastMatrix> {
        let (k, d) = (groups.len(), outcomes.len());
        let univariate: Vec<(Vec<f64>, String)> = match self {
            Self::TwoSample => {
                if k != 2 {
                    return Err(family_err(self, format!("k = 2, got k = {k}")));
                }
                alloc::vec![(alloc::vec![1.0, -1.0], format!("{} - {}", groups[0], groups[1]))]
            }
            Self::Dunnett => {
                require_k(self, k)?;
                (1..k)
                    .map(|i| (unit_diff(k, i, 0), format!("{} - {}", groups[i], groups[0])))
                    .collect()
            }
            Self::Tukey => {
                require_k(self, k)?;
                let mut rows = Vec::new();
                for a in 0..k {
                    for b in a + 1..k {
                        rows.push((unit_diff(k, b, a), format!("{} - {}", groups[b], groups[a])));
                    }
                }
                rows
            }
            Self::GrandMean => {
                require_k(self, k)?;
                (0..k)
                    .map(|i| {
                        let row = (0..k).map(|j| if i == j { 1.0 } else { 0.0 } - 1.0 / k as f64).collect();
                        (row, format!("{} - mean", groups[i]))
                    })
                    .collect()
            }
            Self::Custom => {
                return Err(family_err(self, "an explicit matrix (use ContrastMatrix::custom)".to_string()))
            }
        };
        if d == 0 {
            return Err(family_err(self, "d >= 1".to_string()));
        }
        let r = univariate.len() * d;
        let mut rows = alloc::vec![0.0; r * k * d];
        let mut labels = Vec::with_capacity(r);
        for (u, (coef, label)) in univariate.iter().enumerate() {
            for l in 0..d {
                let s = u * d + l;
                for (i, &cv) in coef.iter().enumerate() {
                    rows[s * k * d + i * d + l] = cv;
                }
                labels.push(format!("{label}, {}", outcomes[l]));
            }
        }
        Ok(ContrastMatrix { rows, r, k, d, labels, family: self })
    }

    /// Builds the family with default names `1..k` and `y1..yd`.
    pub fn build(self, k: usize, d: usize) -> Result<ContrastMatrix> {
        let groups: Vec<String> = (1..=k).map(|i| i.to_string()).collect();
        let outcomes: Vec<String> = (1..=d).map(|l| format!("y{l}")).collect();
        self.build_named(&groups, &outcomes)
    }
}

impl fmt::Display for ContrastFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for ContrastFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "two-sample" => Ok(Self::TwoSample),
            "dunnett" => Ok(Self::Dunnett),
            "tukey" => Ok(Self::Tukey),
            "grand-mean" => Ok(Self::GrandMean),
            "custom" => Ok(Self::Custom),
            other => Err(Error::InvalidArgument(format!("unknown contrast family '{other}'"))),
        }
    }
}

fn family_err(family: ContrastFamily, requirement: String) -> Error {
    Error::ContrastFamily { family: family.name(), requirement }
}

fn require_k(family: ContrastFamily, k: usize) -> Result<()> {
    if k < 2 {
        return Err(family_err(family, format!("k >= 2, got k = {k}")));
    }
    Ok(())
}

fn unit_diff(k: usize, plus: usize, minus: usize) -> Vec<f64> {
    let mut v = alloc::vec![0.0; k];
    v[plus] = 1.0;
    v[minus] = -1.0;
    v
}

/// An r × (k·d) matrix of contrast rows with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMatrix {
    rows: Vec<f64>,
    r: usize,
    k: usize,
    d: usize,
    labels: Vec<String>,
    family: ContrastFamily,
}

impl ContrastMatrix {
    /// Validates a user-supplied matrix: r ≥ 1, k·d columns, every row sums
    /// to zero and has a nonzero entry.
    pub fn custom(h: &DMatrix<f64>, labels: Option<Vec<String>>, k: usize, d: usize) -> Result<Self> {
        if h.nrows() == 0 {
            return Err(Error::EmptyContrasts);
        }
        if h.ncols() != k * d {
            return Err(Error::Dimension(format!("contrast matrix has {} columns, expected k·d = {}", h.ncols(), k * d)));
        }
        for (s, row) in h.row_iter().enumerate() {
            if row.iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroContrast(s));
            }
            let sum: f64 = row.iter().sum();
            let scale: f64 = row.iter().map(|v| v.abs()).sum();
            if !sum.is_finite() || sum.abs() > ROW_SUM_TOL * scale.max(1.0) {
                return Err(Error::NotAContrast { row: s, sum });
            }
        }
        let labels = match labels {
            Some(l) if l.len() != h.nrows() => {
                return Err(Error::Dimension(format!("{} labels for {} contrast rows", l.len(), h.nrows())))
            }
            Some(l) => l,
            None => (1..=h.nrows()).map(|s| format!("contrast {s}")).collect(),
        };
        let rows = h.transpose().as_slice().to_vec();
        Ok(Self { rows, r: h.nrows(), k, d, labels, family: ContrastFamily::Custom })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn family(&self) -> ContrastFamily {
        self.family
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Row `s` as a slice of length k·d.
    pub fn row(&self, s: usize) -> &[f64] {
        let w = self.k * self.d;
        &self.rows[s * w..(s + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks(self.k * self.d)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.r, self.k * self.d, &self.rows)
    }

    /// `h_s' μ` for a group-major μ vector of length k·d.
    pub fn apply(&self, mu: &[f64]) -> Vec<f64> {
        self.rows().map(|h| h.iter().zip(mu).map(|(a, b)| a * b).sum()).collect()
    }

    /// Appends a copy of row `s` (used to check duplicate-row invariances).
    pub fn with_duplicate_row(mut self, s: usize) -> Self {
        let row = self.row(s).to_vec();
        let label = format!("{} (copy)", self.labels[s]);
        self.rows.extend_from_slice(&row);
        self.labels.push(label);
        self.r += 1;
        self
    }
}

pub fn two_sample(d: usize) -> Result<ContrastMatrix> {
    ContrastFamily::TwoSample.build(2, d)
}

pub fn dunnett(k: usize, d: usize) -> Result<ContrastMatrix> {
    ContrastFamily::Dunnett.build(k, d)
}

pub fn tukey(k: usize, d: usize) -> Result<ContrastMatrix> {
    ContrastFamily::Tukey.build(k, d)
}

pub fn grand_mean(k: usize, d: usize) -> Result<ContrastMatrix> {
    ContrastFamily::GrandMean.build(k, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, numerical_rank};
    use alloc::vec;

    fn assert_contrast_rows(h: &ContrastMatrix) {
        for row in h.rows() {
            assert!(row.iter().sum::<f64>().abs() < ROW_SUM_TOL);
            assert!(row.iter().any(|&v| v != 0.0));
        }
    }

    #[test]
    fn two_sample_is_kron_with_identity() {
        let h = two_sample(5).unwrap();
        assert_eq!(h.r(), 5);
        let expected = kron(&DMatrix::from_row_slice(1, 2, &[1.0, -1.0]), &DMatrix::identity(5, 5));
        assert_eq!(h.matrix(), expected);
        assert_contrast_rows(&h);
        assert_eq!(two_sample(1).unwrap().matrix(), DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
        assert!(ContrastFamily::TwoSample.build(3, 2).is_err());
    }

    #[test]
    fn dunnett_shape_and_entries() {
        let h = dunnett(3, 2).unwrap();
        assert_eq!(h.r(), 4);
        for row in h.rows() {
            let nz: Vec<f64> = row.iter().copied().filter(|&v| v != 0.0).collect();
            assert_eq!(nz.len(), 2);
            assert!(nz.iter().all(|v| v.abs() == 1.0));
        }
        assert_eq!(h.labels()[0], "2 - 1, y1");
        assert_eq!(h.labels()[3], "3 - 1, y2");
        assert!(dunnett(1, 2).is_err());
    }

    #[test]
    fn dunnett_null_space_is_equal_means() {
        // H·μ = 0 on a basis vector e_i only if ... never; on 1_k always.
        let h = dunnett(3, 1).unwrap().matrix();
        for i in 0..3 {
            let mut e = DMatrix::zeros(3, 1);
            e[(i, 0)] = 1.0;
            assert!((&h * &e).amax() > 0.0);
        }
        assert_eq!((&h * DMatrix::from_element(3, 1, 1.0)).amax(), 0.0);
        assert_eq!(numerical_rank(&h), 2);
    }

    #[test]
    fn tukey_shapes() {
        assert_eq!(tukey(4, 2).unwrap().r(), 12);
        let t2 = tukey(2, 3).unwrap().matrix();
        let ts = two_sample(3).unwrap().matrix();
        assert_eq!(t2, -ts);
        let h = tukey(3, 1).unwrap().matrix();
        assert_eq!(numerical_rank(&h), 2);
        assert_eq!((&h * DMatrix::from_element(3, 1, 1.0)).amax(), 0.0);
    }

    #[test]
    fn grand_mean_two_groups() {
        let h = grand_mean(2, 1).unwrap();
        assert_eq!(h.matrix(), DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]));
        let h = grand_mean(4, 3).unwrap();
        assert_eq!(h.r(), 12);
        assert_contrast_rows(&h);
        assert!(h.apply(&[2.5; 12]).iter().all(|v| v.abs() < 1e-12));
        assert_eq!(h.labels()[4], "2 - mean, y2");
    }

    #[test]
    fn columns_blocks_are_scaled_identities() {
        for h in [dunnett(4, 3).unwrap(), tukey(3, 3).unwrap(), grand_mean(3, 3).unwrap()] {
            let m = h.matrix();
            let d = 3;
            for ub in 0..m.nrows() / d {
                for g in 0..h.k() {
                    let block = m.view((ub * d, g * d), (d, d));
                    let a = block[(0, 0)];
                    assert_eq!(block.into_owned(), DMatrix::identity(d, d) * a);
                }
            }
        }
    }

    #[test]
    fn custom_validation() {
        let ok = DMatrix::from_row_slice(1, 4, &[1.0, 0.0, -1.0, 0.0]);
        assert_eq!(ContrastMatrix::custom(&ok, None, 2, 2).unwrap().family(), ContrastFamily::Custom);
        let bad = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(ContrastMatrix::custom(&bad, None, 2, 2), Err(Error::NotAContrast { row: 1, sum: 1.0 }));
        assert_eq!(ContrastMatrix::custom(&DMatrix::zeros(0, 4), None, 2, 2), Err(Error::EmptyContrasts));
        let zero = DMatrix::zeros(1, 4);
        assert_eq!(ContrastMatrix::custom(&zero, None, 2, 2), Err(Error::ZeroContrast(0)));
        assert!(ContrastMatrix::custom(&ok, Some(vec!["a".into(), "b".into()]), 2, 2).is_err());
    }

    #[test]
    fn named_labels() {
        let groups = vec!["hypnosis".to_string(), "control".to_string()];
        let outcomes: Vec<String> = ["SDNN", "RMSSD"].iter().map(|s| s.to_string()).collect();
        let h = ContrastFamily::TwoSample.build_named(&groups, &outcomes).unwrap();
        assert_eq!(h.labels(), &["hypnosis - control, SDNN".to_string(), "hypnosis - control, RMSSD".to_string()]);
    }

    #[test]
    fn family_parse() {
        assert_eq!("grand_mean".parse::<ContrastFamily>().unwrap(), ContrastFamily::GrandMean);
        assert!("williams".parse::<ContrastFamily>().is_err());
    }
}
