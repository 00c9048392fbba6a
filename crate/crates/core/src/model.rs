//! Scenario parameters and the moments derived from them.
//!
//! A [`Scenario`] fixes the arm probability `p`, the boundary-purchase
//! probability `q`, the offer laws `mu0`, `mu1` of the two arms, the
//! post-sellout law `nu`, and the inventory schedule `c(n) = floor(d n^rho)`.
//! All moments are computed by exact summation over the finitely many atoms.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::math::{floor, ksum, pow, sqrt};
use crate::{Error, Result};

/// Tolerance on the total mass of a pmf.
pub const PMF_SUM_TOLERANCE: f64 = 1e-12;

/// One point mass of an [`OfferDistribution`]: `prob` at `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Atom {
    /// Units of good 1.
    pub x: u64,
    /// Units of good 2.
    #[cfg_attr(feature = "serde", serde(default))]
    pub y: u64,
    pub prob: f64,
}

impl Atom {
    pub const fn new(x: u64, y: u64, prob: f64) -> Self {
        Atom { x, y, prob }
    }

    #[inline]
    pub fn is_purchase(&self) -> bool {
        self.x + self.y > 0
    }
}

/// Finite probability mass function on pairs of purchase counts.
///
/// The post-sellout law is stored in the same type with every `y` equal to 0.
/// Construction does not validate; use [`validate_scenario`] or
/// [`OfferDistribution::violations`].
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct OfferDistribution {
    pub atoms: Vec<Atom>,
}

impl OfferDistribution {
    pub fn new(atoms: Vec<Atom>) -> Self {
        OfferDistribution { atoms }
    }

    /// Point mass at `(x, y)`.
    pub fn point(x: u64, y: u64) -> Self {
        OfferDistribution { atoms: alloc::vec![Atom::new(x, y, 1.0)] }
    }

    /// Law on the first coordinate only, given as `(x, prob)` pairs.
    pub fn horizontal(atoms: &[(u64, f64)]) -> Self {
        OfferDistribution { atoms: atoms.iter().map(|&(x, p)| Atom::new(x, 0, p)).collect() }
    }

    pub fn total_mass(&self) -> f64 {
        ksum(self.atoms.iter().map(|a| a.prob))
    }

    pub fn mean(&self) -> (f64, f64) {
        (
            ksum(self.atoms.iter().map(|a| a.prob * a.x as f64)),
            ksum(self.atoms.iter().map(|a| a.prob * a.y as f64)),
        )
    }

    /// Probability of buying anything.
    pub fn purchase_prob(&self) -> f64 {
        ksum(self.atoms.iter().filter(|a| a.is_purchase()).map(|a| a.prob))
    }

    pub fn max_y(&self) -> u64 {
        self.atoms.iter().filter(|a| a.prob > 0.0).map(|a| a.y).max().unwrap_or(0)
    }

    pub fn max_x(&self) -> u64 {
        self.atoms.iter().filter(|a| a.prob > 0.0).map(|a| a.x).max().unwrap_or(0)
    }

    /// Invariant violations of this pmf, reported under `field`.
    pub fn violations(&self, field: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.atoms.is_empty() {
            out.push(Violation::new(field, "distribution has no atoms"));
            return out;
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if !a.prob.is_finite() || a.prob < 0.0 || a.prob > 1.0 {
                out.push(Violation::new(
                    field,
                    format!("atom {i} at ({}, {}) has probability {} outside [0, 1]", a.x, a.y, a.prob),
                ));
            }
        }
        let total = self.total_mass();
        if !total.is_finite() || (total - 1.0).abs() > PMF_SUM_TOLERANCE {
            out.push(Violation::new(field, format!("probabilities sum to {total}, not 1")));
        }
        for i in 0..self.atoms.len() {
            for j in 0..i {
                let (a, b) = (&self.atoms[i], &self.atoms[j]);
                if a.x == b.x && a.y == b.y {
                    out.push(Violation::new(
                        field,
                        format!("atoms {j} and {i} share the point ({}, {})", a.x, a.y),
                    ));
                }
            }
        }
        out
    }

    fn mass_at(&self, x: u64, y: u64) -> f64 {
        ksum(self.atoms.iter().filter(|a| a.x == x && a.y == y).map(|a| a.prob))
    }
}

/// Inventory schedule `c(n) = floor(d * n^rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct InventorySchedule {
    pub d: f64,
    pub rho: f64,
}

impl InventorySchedule {
    pub const fn new(d: f64, rho: f64) -> Self {
        InventorySchedule { d, rho }
    }

    /// Inventory of the popular good for `n` visitors.
    pub fn inventory(&self, n: u64) -> u64 {
        let nf = n as f64;
        // Exact special cases keep e.g. c(10^6) = 500 for d = 1/2, rho = 1/2.
        let scale = if self.rho == 0.5 {
            sqrt(nf)
        } else if self.rho == 1.0 {
            nf
        } else {
            pow(nf, self.rho)
        };
        let c = floor(self.d * scale);
        if c <= 0.0 {
            0
        } else {
            c as u64
        }
    }

    /// `lim c(n)/sqrt(n)`, which is finite only for `rho <= 1/2`.
    pub fn d_inf(&self) -> Option<f64> {
        if self.rho < 0.5 {
            Some(0.0)
        } else if self.rho == 0.5 {
            Some(self.d)
        } else {
            None
        }
    }

    /// `lim c(n)/n`.
    pub fn c_inf(&self) -> f64 {
        if self.rho < 1.0 {
            0.0
        } else {
            self.d
        }
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.d.is_finite() || self.d < 0.0 {
            out.push(Violation::new("schedule.d", format!("scale {} must be finite and >= 0", self.d)));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            out.push(Violation::new("schedule.rho", format!("index {} must lie in (0, 1]", self.rho)));
        }
        out
    }
}

/// Full parameterization of the shared-inventory model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Scenario {
    /// Probability that a visitor is shown variant 1.
    pub p: f64,
    /// Probability that a visitor whose demand overshoots the remaining
    /// stock buys what is left instead of nothing.
    pub q: f64,
    pub mu0: OfferDistribution,
    pub mu1: OfferDistribution,
    /// Demand for good 1 once good 2 is sold out (all `y` are 0).
    pub nu: OfferDistribution,
    pub schedule: InventorySchedule,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let v = validate_scenario(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(v))
        }
    }

    pub fn inventory(&self, n: u64) -> u64 {
        self.schedule.inventory(n)
    }

    /// The same scenario with the arm labels exchanged.
    pub fn swapped_arms(&self) -> Scenario {
        Scenario {
            p: 1.0 - self.p,
            mu0: self.mu1.clone(),
            mu1: self.mu0.clone(),
            ..self.clone()
        }
    }

    /// Non-binding observations, e.g. offer laws without mass on every
    /// point of `{0,1}^2`.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, mu) in [("mu0", &self.mu0), ("mu1", &self.mu1)] {
            for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                if mu.mass_at(a, b) <= 0.0 {
                    out.push(format!("{name} puts no mass on ({a}, {b})"));
                }
            }
        }
        out
    }
}

/// A failed scenario invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: &str, rule: impl Into<String>) -> Self {
        Violation { field: field.to_string(), rule: rule.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Every violated invariant of `s`; empty iff the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(s.p > 0.0 && s.p < 1.0) {
        out.push(Violation::new("p", format!("arm probability {} must lie in (0, 1)", s.p)));
    }
    if !(s.q >= 0.0 && s.q <= 1.0) {
        out.push(Violation::new("q", format!("boundary-purchase probability {} must lie in [0, 1]", s.q)));
    }
    out.extend(s.mu0.violations("mu0"));
    out.extend(s.mu1.violations("mu1"));
    out.extend(s.nu.violations("nu"));
    for a in &s.nu.atoms {
        if a.y != 0 {
            out.push(Violation::new("nu", format!("atom ({}, {}) buys good 2 after sellout", a.x, a.y)));
        }
    }
    out.extend(s.schedule.violations());
    out
}

/// Mean vector of one offer law.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mean2 {
    pub xi: f64,
    pub eta: f64,
}

/// Moments of a scenario consumed by the limit theory.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DerivedMoments {
    /// Arm probability the mixture moments refer to.
    pub p: f64,
    pub m0: Mean2,
    pub m1: Mean2,
    /// Mean of the mixture `p mu1 + (1-p) mu0`.
    pub m: Mean2,
    pub p0: f64,
    pub p1: f64,
    pub p_theta: f64,
    /// Variance of `xi` under the mixture.
    pub sigma_xi2: f64,
    pub sigma_eta2: f64,
    /// Covariance of `xi` and `eta` under the mixture.
    pub rho_xieta: f64,
    pub m_theta: f64,
    pub sigma_theta2: f64,
}

/// Exact moments of a valid scenario.
///
/// Second moments are those of the mixture law, i.e. they include the
/// between-arm term `p(1-p)(m1 - m0)(m1 - m0)^T`.
pub fn derive_moments(s: &Scenario) -> Result<DerivedMoments> {
    s.validate()?;
    Ok(moments_unchecked(s.p, &s.mu0, &s.mu1, &s.nu))
}

pub(crate) fn moments_unchecked(
    p: f64,
    mu0: &OfferDistribution,
    mu1: &OfferDistribution,
    nu: &OfferDistribution,
) -> DerivedMoments {
    let (m0x, m0y) = mu0.mean();
    let (m1x, m1y) = mu1.mean();
    let m = Mean2 { xi: p * m1x + (1.0 - p) * m0x, eta: p * m1y + (1.0 - p) * m0y };

    // Central moments about the mixture mean, summed over both components.
    let central = |f: &dyn Fn(&Atom) -> f64| {
        ksum(
            mu1.atoms
                .iter()
                .map(|a| p * a.prob * f(a))
                .chain(mu0.atoms.iter().map(|a| (1.0 - p) * a.prob * f(a))),
        )
    };
    let dx = |a: &Atom| a.x as f64 - m.xi;
    let dy = |a: &Atom| a.y as f64 - m.eta;
    let sigma_xi2 = central(&|a| dx(a) * dx(a));
    let sigma_eta2 = central(&|a| dy(a) * dy(a));
    let rho_xieta = central(&|a| dx(a) * dy(a));

    let (m_theta, _) = nu.mean();
    let sigma_theta2 = ksum(nu.atoms.iter().map(|a| {
        let d = a.x as f64 - m_theta;
        a.prob * d * d
    }));

    DerivedMoments {
        p,
        m0: Mean2 { xi: m0x, eta: m0y },
        m1: Mean2 { xi: m1x, eta: m1y },
        m,
        p0: mu0.purchase_prob(),
        p1: mu1.purchase_prob(),
        p_theta: nu.purchase_prob(),
        sigma_xi2,
        sigma_eta2,
        rho_xieta,
        m_theta,
        sigma_theta2,
    }
}
