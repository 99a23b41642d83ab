#[path = "support/dense.rs"]
mod dense;

use mctp_core::bootstrap::run_bootstrap;
use mctp_core::contrasts::{dunnett, grand_mean, tukey};
use mctp_core::mctp::{
    adjust_level, estimated_fwer, local_p_values, quantiles_at, run_mctp, Analysis,
};
use mctp_core::{BootstrapConfig, BootstrapDraws, BootstrapKind, ContrastMatrix, Dataset};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn draws_from(rows: &[Vec<f64>]) -> BootstrapDraws {
    let flat = rows.iter().flatten().copied().collect();
    BootstrapDraws::from_matrix(rows.len(), rows[0].len(), flat).unwrap()
}

fn family(ds: &Dataset, which: u8) -> ContrastMatrix {
    match which % 3 {
        0 => dunnett(ds.k(), ds.d()).unwrap(),
        1 => tukey(ds.k(), ds.d()).unwrap(),
        _ => grand_mean(ds.k(), ds.d()).unwrap(),
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn kind(wild: bool) -> BootstrapKind {
    if wild {
        BootstrapKind::Wild
    } else {
        BootstrapKind::Parametric
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn statistics_invariant_under_location_and_covariate_shift(
        seed in any::<u64>(),
        which in any::<u8>(),
        shift in -50.0f64..50.0,
        slope in -5.0f64..5.0,
    ) {
        let ds = dense::random_dataset(seed);
        let h = family(&ds, which);
        let base = Analysis::prepare(&ds, &h).unwrap();
        let z_effect = if ds.c() > 0 { ds.z().column(0).into_owned() * slope } else { nalgebra::DVector::zeros(ds.n()) };
        let y = DMatrix::from_fn(ds.n(), ds.d(), |i, l| ds.y()[(i, l)] + shift * (l + 1) as f64 + z_effect[i]);
        let moved = Analysis::prepare(&ds.with_outcomes(y).unwrap(), &h).unwrap();
        for (a, b) in base.statistics.iter().zip(&moved.statistics) {
            prop_assert!(close(*a, *b, 1e-7), "{a} vs {b}");
        }
    }

    #[test]
    fn group_effects_shift_the_means(seed in any::<u64>(), effect in -20.0f64..20.0) {
        let ds = dense::random_dataset(seed);
        let groups: Vec<usize> = ds.row_groups().collect();
        let y = DMatrix::from_fn(ds.n(), ds.d(), |i, l| ds.y()[(i, l)] + effect * groups[i] as f64 * (l as f64 - 0.5));
        let h = dunnett(ds.k(), ds.d()).unwrap();
        let a = Analysis::prepare(&ds, &h).unwrap();
        let b = Analysis::prepare(&ds.with_outcomes(y).unwrap(), &h).unwrap();
        for i in 0..ds.k() {
            for l in 0..ds.d() {
                let expected = a.fit.mu_hat[(i, l)] + effect * i as f64 * (l as f64 - 0.5);
                prop_assert!(close(b.fit.mu_hat[(i, l)], expected, 1e-9));
            }
        }
        prop_assert_eq!(a.covariance.diag.len(), b.covariance.diag.len());
        for (x, y) in a.covariance.diag.iter().zip(&b.covariance.diag) {
            prop_assert!(close(*x, *y, 1e-7));
        }
    }

    #[test]
    fn statistics_scale_equivariant(seed in any::<u64>(), which in any::<u8>(), scale in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0]) {
        let ds = dense::random_dataset(seed);
        let h = family(&ds, which);
        let base = Analysis::prepare(&ds, &h).unwrap();
        let scaled = Analysis::prepare(&ds.with_outcomes(ds.y() * scale).unwrap(), &h).unwrap();
        for (a, b) in base.statistics.iter().zip(&scaled.statistics) {
            prop_assert!(close(a * scale.signum(), *b, 1e-8));
        }
    }

    #[test]
    fn bootstrap_draws_scale_invariant(seed in any::<u64>(), scale in 0.01f64..100.0, wild in any::<bool>()) {
        let ds = dense::random_dataset(seed);
        let h = dunnett(ds.k(), ds.d()).unwrap();
        let cfg = BootstrapConfig::new(kind(wild), 50, seed ^ 0x55);
        let a = Analysis::prepare(&ds, &h).unwrap();
        let b = Analysis::prepare(&ds.with_outcomes(ds.y() * scale).unwrap(), &h).unwrap();
        let da = run_bootstrap(&cfg, &a.design, &a.fit, &a.covariance, &h).unwrap();
        let db = run_bootstrap(&cfg, &b.design, &b.fit, &b.covariance, &h).unwrap();
        for (x, y) in da.as_slice().iter().zip(db.as_slice()) {
            prop_assert!(close(*x, *y, 1e-6), "{x} vs {y}");
        }
    }

    #[test]
    fn rejection_iff_p_value_at_most_gamma(seed in any::<u64>(), b in 10usize..300, r in 1usize..6, alpha in 0.01f64..0.3) {
        let rows = dense::tied_draws(seed, b, r);
        let draws = draws_from(&rows);
        let observed = dense::tied_draws(seed.wrapping_add(1), 1, r).remove(0);
        let g = adjust_level(&draws, alpha).unwrap();
        let gamma = g as f64 / b as f64;
        let q = quantiles_at(&draws, g);
        let p = local_p_values(&draws, &observed);
        for s in 0..r {
            prop_assert_eq!(p[s] <= gamma, observed[s].abs() > q[s], "s = {}", s);
        }
    }

    #[test]
    fn fwer_nondecreasing_in_gamma(seed in any::<u64>(), b in 5usize..120, r in 1usize..5) {
        let draws = draws_from(&dense::tied_draws(seed, b, r));
        let mut last = 0.0;
        for g in 0..b {
            let f = estimated_fwer(&draws, g as f64 / b as f64).unwrap();
            prop_assert!(f >= last);
            last = f;
        }
        prop_assert_eq!(estimated_fwer(&draws, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_nondecreasing_in_alpha(seed in any::<u64>(), b in 5usize..200, r in 1usize..5, a1 in 0.001f64..0.5, a2 in 0.001f64..0.5) {
        let draws = draws_from(&dense::tied_draws(seed, b, r));
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let (glo, ghi) = (adjust_level(&draws, lo).unwrap(), adjust_level(&draws, hi).unwrap());
        prop_assert!(glo <= ghi);
        prop_assert!(estimated_fwer(&draws, ghi as f64 / b as f64).unwrap() <= hi);
    }

    #[test]
    fn gamma_never_below_single_contrast_bonferroni(seed in any::<u64>(), b in 20usize..200, r in 1usize..5, alpha in 0.01f64..0.3) {
        // the union bound gives FWER(γ) ≤ r·γ on distinct data, so the
        // adjusted level is at least ⌊αB/r⌋ grid steps when ties are absent
        let rows: Vec<Vec<f64>> = (0..b)
            .map(|i| (0..r).map(|s| ((seed as usize + i * 31 + s * 17) % 997) as f64 + i as f64 * 1e-3 + s as f64 * 1e-6).collect())
            .collect();
        let draws = draws_from(&rows);
        let g = adjust_level(&draws, alpha).unwrap();
        let bonf = ((alpha * b as f64) / r as f64).floor() as usize;
        prop_assert!(g >= bonf.min(b - 1));
    }

    #[test]
    fn duplicate_column_leaves_gamma_unchanged(seed in any::<u64>(), b in 5usize..200, r in 1usize..5, dup in any::<prop::sample::Index>(), alpha in 0.01f64..0.3) {
        let rows = dense::tied_draws(seed, b, r);
        let s = dup.index(r);
        let wider: Vec<Vec<f64>> = rows.iter().map(|row| { let mut v = row.clone(); v.push(row[s]); v }).collect();
        prop_assert_eq!(adjust_level(&draws_from(&rows), alpha).unwrap(), adjust_level(&draws_from(&wider), alpha).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn duplicate_contrast_row_changes_nothing(seed in any::<u64>(), which in any::<u8>(), wild in any::<bool>()) {
        let ds = dense::random_dataset(seed);
        let h = family(&ds, which);
        let cfg = BootstrapConfig::new(kind(wild), 200, seed);
        let a = run_mctp(&ds, &h, &cfg, 0.05).unwrap();
        let b = run_mctp(&ds, &h.clone().with_duplicate_row(0), &cfg, 0.05).unwrap();
        prop_assert_eq!(a.gamma_index, b.gamma_index);
        prop_assert_eq!(a.global_reject, b.global_reject);
        prop_assert_eq!(&a.per_contrast[..], &b.per_contrast[..h.r()]);
    }

    #[test]
    fn intervals_dual_to_rejections(seed in any::<u64>(), which in any::<u8>(), wild in any::<bool>()) {
        let ds = dense::random_dataset(seed);
        let groups: Vec<usize> = ds.row_groups().collect();
        // push the last group away so that some rejections occur
        let y = DMatrix::from_fn(ds.n(), ds.d(), |i, l| ds.y()[(i, l)] + if groups[i] + 1 == ds.k() { 4.0 } else { 0.0 });
        let ds = ds.with_outcomes(y).unwrap();
        let h = family(&ds, which);
        let res = run_mctp(&ds, &h, &BootstrapConfig::new(kind(wild), 200, seed), 0.05).unwrap();
        for c in &res.per_contrast {
            prop_assert_eq!(c.reject, c.ci_lower > 0.0 || c.ci_upper < 0.0, "{:?}", c);
            prop_assert_eq!(c.reject, c.p_value <= res.gamma);
        }
        prop_assert_eq!(res.global_reject, res.global_p <= res.gamma);
    }

    #[test]
    fn same_seed_same_result(seed in any::<u64>(), wild in any::<bool>()) {
        let ds = dense::random_dataset(seed);
        let h = dunnett(ds.k(), ds.d()).unwrap();
        let cfg = BootstrapConfig::new(kind(wild), 100, seed);
        prop_assert_eq!(run_mctp(&ds, &h, &cfg, 0.05).unwrap(), run_mctp(&ds, &h, &cfg, 0.05).unwrap());
    }
}
