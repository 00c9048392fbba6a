mod common;

use common::random_scenario;
use proptest::prelude::*;
use stripwalk_core::{derive_moments, validate_scenario, Atom, OfferDistribution, Scenario};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn component_moments(mu: &OfferDistribution) -> (f64, f64, f64, f64, f64) {
    let mx: f64 = mu.atoms.iter().map(|a| a.prob * a.x as f64).sum();
    let my: f64 = mu.atoms.iter().map(|a| a.prob * a.y as f64).sum();
    let vx: f64 = mu.atoms.iter().map(|a| a.prob * (a.x as f64 - mx).powi(2)).sum();
    let vy: f64 = mu.atoms.iter().map(|a| a.prob * (a.y as f64 - my).powi(2)).sum();
    let cxy: f64 = mu.atoms.iter().map(|a| a.prob * (a.x as f64 - mx) * (a.y as f64 - my)).sum();
    (mx, my, vx, vy, cxy)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_scenarios_are_valid(seed in any::<u64>()) {
        let s = random_scenario(seed);
        prop_assert!(validate_scenario(&s).is_empty(), "{:?}", validate_scenario(&s));
        prop_assert!(s.warnings().is_empty());
    }

    #[test]
    fn mixture_mean_and_total_variance(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let m = derive_moments(&s).unwrap();
        let p = s.p;
        let (m0x, m0y, v0x, v0y, c0) = component_moments(&s.mu0);
        let (m1x, m1y, v1x, v1y, c1) = component_moments(&s.mu1);
        prop_assert!(close(m.m.xi, p * m1x + (1.0 - p) * m0x, 1e-12));
        prop_assert!(close(m.m.eta, p * m1y + (1.0 - p) * m0y, 1e-12));
        let between = p * (1.0 - p);
        prop_assert!(close(m.sigma_xi2, p * v1x + (1.0 - p) * v0x + between * (m1x - m0x).powi(2), 1e-12));
        prop_assert!(close(m.sigma_eta2, p * v1y + (1.0 - p) * v0y + between * (m1y - m0y).powi(2), 1e-12));
        prop_assert!(close(m.rho_xieta, p * c1 + (1.0 - p) * c0 + between * (m1x - m0x) * (m1y - m0y), 1e-12));
        prop_assert!(m.sigma_xi2 * m.sigma_eta2 >= m.rho_xieta * m.rho_xieta - 1e-12);
        let pm = p * m.p1 + (1.0 - p) * m.p0;
        prop_assert!(pm > 0.0 && pm < 1.0);
    }

    #[test]
    fn atom_order_is_irrelevant(seed in any::<u64>(), rot in 0usize..8) {
        let s = random_scenario(seed);
        let mut t = s.clone();
        let k = rot % t.mu0.atoms.len();
        t.mu0.atoms.rotate_left(k);
        t.mu1.atoms.reverse();
        t.nu.atoms.reverse();
        let (a, b) = (derive_moments(&s).unwrap(), derive_moments(&t).unwrap());
        prop_assert!(close(a.m.xi, b.m.xi, 1e-14) && close(a.sigma_eta2, b.sigma_eta2, 1e-13));
        prop_assert!(close(a.p0, b.p0, 1e-14) && close(a.p_theta, b.p_theta, 1e-14));
    }

    #[test]
    fn swapping_arms_swaps_rates(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let (a, b) = (derive_moments(&s).unwrap(), derive_moments(&s.swapped_arms()).unwrap());
        prop_assert_eq!((a.p0, a.p1), (b.p1, b.p0));
        prop_assert!(close(a.m.eta, b.m.eta, 1e-14));
        prop_assert!(close(a.sigma_xi2, b.sigma_xi2, 1e-13));
    }

    #[test]
    fn perturbed_mass_is_rejected(seed in any::<u64>(), eps in 1e-9f64..0.1) {
        let mut s = random_scenario(seed);
        s.mu1.atoms[0].prob += eps;
        let v = validate_scenario(&s);
        prop_assert!(v.iter().any(|v| v.field == "mu1"));
        prop_assert!(derive_moments(&s).is_err());
    }
}

#[test]
fn post_sellout_law_must_be_horizontal() {
    let mut s: Scenario = common::ranking();
    s.nu = OfferDistribution::new(vec![Atom::new(0, 0, 0.9), Atom::new(1, 1, 0.1)]);
    assert!(validate_scenario(&s).iter().any(|v| v.field == "nu"));
}

#[test]
fn out_of_range_parameters() {
    for (p, q) in [(0.0, 0.5), (1.0, 0.5), (0.5, -0.1), (0.5, 1.5), (f64::NAN, 0.5)] {
        let s = Scenario { p, q, ..common::ranking() };
        assert!(!validate_scenario(&s).is_empty(), "p={p} q={q}");
    }
}
