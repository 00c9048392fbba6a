mod common;

use proptest::prelude::*;
use stripwalk_core::stattest::{
    chi2_1df_cdf, chi2_1df_quantile, chi2_1df_sf, chi2_statistic, std_normal_cdf, std_normal_quantile,
    ContingencyTable,
};

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `P(|N| <= sqrt(x))` by quadrature of the normal density.
fn chi2_cdf_oracle(x: f64) -> f64 {
    2.0 * simpson(phi, 0.0, x.sqrt(), 20_000)
}

fn normal_cdf_oracle(x: f64) -> f64 {
    if x >= 0.0 {
        0.5 + simpson(phi, 0.0, x, 20_000)
    } else {
        0.5 - simpson(phi, 0.0, -x, 20_000)
    }
}

const REFERENCE_POINTS: [f64; 20] = [
    -6.0, -4.5, -3.0, -2.5, -1.959963984540054, -1.5, -1.0, -0.5, -0.1, 0.0, 0.05, 0.3, 0.75, 1.2, 1.644853626951,
    2.0, 2.75, 3.5, 5.0, 7.0,
];

#[test]
fn normal_cdf_matches_quadrature() {
    for x in REFERENCE_POINTS {
        let (got, want) = (std_normal_cdf(x), normal_cdf_oracle(x));
        assert!((got - want).abs() < 1e-12, "x={x}: {got} vs {want}");
    }
}

#[test]
fn chi2_cdf_matches_quadrature() {
    for x in REFERENCE_POINTS.map(|x| x * x) {
        let (got, want) = (chi2_1df_cdf(x).unwrap(), chi2_cdf_oracle(x));
        assert!((got - want).abs() < 1e-12, "x={x}: {got} vs {want}");
    }
}

#[test]
fn chi2_quantile_matches_inverted_quadrature() {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf_oracle(mid) < 0.95 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = chi2_1df_quantile(0.95).unwrap();
    assert!((q - 0.5 * (lo + hi)).abs() < 1e-8);
    assert!((q - 3.8414588207).abs() < 1e-8);
}

#[test]
fn quantiles_invert_cdfs() {
    for p in [1e-12, 1e-6, 0.01, 0.05, 0.5, 0.95, 0.99, 1.0 - 1e-9] {
        let z = std_normal_quantile(p).unwrap();
        assert!((std_normal_cdf(z) - p).abs() <= 1e-12 * p.max(1e-3), "p={p}");
        let x = chi2_1df_quantile(p).unwrap();
        assert!((chi2_1df_cdf(x).unwrap() - p).abs() < 1e-12, "p={p}");
    }
    assert!(std_normal_quantile(0.0).is_err() && chi2_1df_quantile(1.0).is_err());
}

proptest! {
    #[test]
    fn shortcut_identity(l0 in 0u64..5000, l1 in 0u64..5000, e0 in 1u64..5000, e1 in 1u64..5000) {
        let (n0, n1) = (l0 + e0, l1 + e1);
        let t = ContingencyTable::new(l0, l1, n0, n1).unwrap();
        let (l, n) = ((l0 + l1) as f64, (n0 + n1) as f64);
        match chi2_statistic(&t) {
            None => prop_assert_eq!(l0 + l1, 0),
            Some(x) => {
                let cross = l0 as f64 * n1 as f64 - l1 as f64 * n0 as f64;
                let want = n * cross * cross / (n0 as f64 * n1 as f64 * l * (n - l));
                prop_assert!((x - want).abs() <= 1e-9 * want.max(1.0));
                prop_assert!(x >= 0.0);
                let p = chi2_1df_sf(x).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }

    #[test]
    fn scaling_table_scales_statistic(l0 in 1u64..500, l1 in 1u64..500, e0 in 1u64..500, e1 in 1u64..500, k in 2u64..50) {
        let t = ContingencyTable::new(l0, l1, l0 + e0, l1 + e1).unwrap();
        let tk = ContingencyTable::new(k * l0, k * l1, k * (l0 + e0), k * (l1 + e1)).unwrap();
        let (a, b) = (t.chi2().unwrap(), tk.chi2().unwrap());
        prop_assert!((b - k as f64 * a).abs() <= 1e-9 * b.max(1.0));
    }

    #[test]
    fn statistic_is_symmetric_in_arms(l0 in 0u64..500, l1 in 0u64..500, e0 in 1u64..500, e1 in 1u64..500) {
        let a = ContingencyTable::new(l0, l1, l0 + e0, l1 + e1).unwrap().chi2();
        let b = ContingencyTable::new(l1, l0, l1 + e1, l0 + e0).unwrap().chi2();
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0)),
            (a, b) => prop_assert_eq!(a, b),
        }
    }
}

#[test]
fn invalid_tables() {
    assert!(ContingencyTable::new(11, 0, 10, 10).is_err());
    assert_eq!(ContingencyTable::new(0, 0, 10, 10).unwrap().chi2(), None);
    assert_eq!(ContingencyTable::new(10, 10, 10, 10).unwrap().chi2(), None);
    assert_eq!(ContingencyTable::new(0, 3, 0, 10).unwrap().chi2(), None);
}
