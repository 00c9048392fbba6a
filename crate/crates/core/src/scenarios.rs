//! Built-in parameter sets.
//!
//! * `ranking`: two ranking algorithms. Arm 0 shows the scarce good late
//!   (5% of visitors find it), arm 1 shows it first. 80% of visitors prefer
//!   the scarce good and buy it with probability 10%; everybody else buys the
//!   plentiful good with probability 5%.
//! * `ranking-separate`: the same parameters, meant to be run with each arm on
//!   its own inventory.
//! * `picky`: `ranking` where 1% of visitors look only for the scarce good and
//!   buy it with probability 1/2 while it lasts.
//!
//! Offer laws are stored as exact decimal fractions; the `f64` scenario is
//! derived from them.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use num_rational::Ratio;

use crate::asymptotics::{self, slln_limits};
use crate::model::{derive_moments, Atom, InventorySchedule, OfferDistribution, Scenario};
use crate::simulate::Engine;
use crate::{Error, Result};

pub type Rational = Ratio<i64>;

/// All built-in ids.
pub const IDS: [&str; 3] = ["ranking", "ranking-separate", "picky"];

/// A pmf atom with exact probability `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactAtom {
    pub x: u64,
    pub y: u64,
    pub num: i64,
    pub den: i64,
}

impl ExactAtom {
    const fn new(x: u64, y: u64, num: i64, den: i64) -> Self {
        ExactAtom { x, y, num, den }
    }

    pub fn prob(&self) -> Rational {
        Ratio::new(self.num, self.den)
    }
}

/// Exact offer laws of a built-in scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLaws {
    pub p: Rational,
    pub mu0: Vec<ExactAtom>,
    pub mu1: Vec<ExactAtom>,
    pub nu: Vec<ExactAtom>,
}

/// Exact first-order quantities used by the theory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactRates {
    pub p0: Rational,
    pub p1: Rational,
    pub p_theta: Rational,
    pub m0_eta: Rational,
    pub m1_eta: Rational,
    pub m_eta: Rational,
}

impl ExactLaws {
    pub fn rates(&self) -> ExactRates {
        let buy = |atoms: &[ExactAtom]| {
            atoms.iter().filter(|a| a.x + a.y > 0).fold(Ratio::from_integer(0), |acc, a| acc + a.prob())
        };
        let eta = |atoms: &[ExactAtom]| {
            atoms.iter().fold(Ratio::from_integer(0), |acc, a| acc + a.prob() * Ratio::from_integer(a.y as i64))
        };
        let (m0, m1) = (eta(&self.mu0), eta(&self.mu1));
        ExactRates {
            p0: buy(&self.mu0),
            p1: buy(&self.mu1),
            p_theta: buy(&self.nu),
            m0_eta: m0,
            m1_eta: m1,
            m_eta: self.p * m1 + (Ratio::from_integer(1) - self.p) * m0,
        }
    }

    /// `d_inf (p_i - p_theta) / m_i_eta` for arm `arm`.
    pub fn marginal_mean(&self, arm: u8, d_inf: Rational) -> Rational {
        let r = self.rates();
        match arm {
            0 => d_inf * (r.p0 - r.p_theta) / r.m0_eta,
            _ => d_inf * (r.p1 - r.p_theta) / r.m1_eta,
        }
    }

    fn to_f64(atoms: &[ExactAtom]) -> OfferDistribution {
        OfferDistribution::new(atoms.iter().map(|a| Atom::new(a.x, a.y, a.num as f64 / a.den as f64)).collect())
    }
}

/// A reference value with its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedScenario {
    pub id: String,
    pub description: &'static str,
    pub scenario: Scenario,
    pub exact: ExactLaws,
    /// Significance level and inventory scale the expected values refer to.
    pub alpha: f64,
    pub d_inf: f64,
    /// Runs default to separate inventories when set.
    pub separate: bool,
    pub default_engine: Engine,
    pub expected: Vec<Expected>,
}

impl NamedScenario {
    pub fn expected(&self, name: &str) -> Option<&Expected> {
        self.expected.iter().find(|e| e.name == name)
    }
}

const RANKING_MU0: [ExactAtom; 3] =
    [ExactAtom::new(0, 0, 948, 1000), ExactAtom::new(0, 1, 4, 1000), ExactAtom::new(1, 0, 48, 1000)];
const RANKING_MU1: [ExactAtom; 3] =
    [ExactAtom::new(0, 0, 91, 100), ExactAtom::new(0, 1, 8, 100), ExactAtom::new(1, 0, 1, 100)];
const RANKING_NU: [ExactAtom; 2] = [ExactAtom::new(0, 0, 95, 100), ExactAtom::new(1, 0, 5, 100)];

// 99% regular visitors as above, 1% buy only the scarce good, with probability 1/2.
const PICKY_MU0: [ExactAtom; 3] = [
    ExactAtom::new(0, 0, 94352, 100000),
    ExactAtom::new(0, 1, 896, 100000),
    ExactAtom::new(1, 0, 4752, 100000),
];
const PICKY_MU1: [ExactAtom; 3] =
    [ExactAtom::new(0, 0, 9059, 10000), ExactAtom::new(0, 1, 842, 10000), ExactAtom::new(1, 0, 99, 10000)];
const PICKY_NU: [ExactAtom; 2] = [ExactAtom::new(0, 0, 9505, 10000), ExactAtom::new(1, 0, 495, 10000)];

fn build(id: &str) -> Option<NamedScenario> {
    let half = Ratio::new(1, 2);
    let (description, exact, separate, expected) = match id {
        "ranking" | "ranking-separate" => (
            "two ranking algorithms selling from one stock of an attractive scarce good",
            ExactLaws { p: half, mu0: RANKING_MU0.to_vec(), mu1: RANKING_MU1.to_vec(), nu: RANKING_NU.to_vec() },
            id == "ranking-separate",
            alloc::vec![
                Expected { name: "p0", value: 0.052, tolerance: 1e-12, note: "exact pmf" },
                Expected { name: "p1", value: 0.09, tolerance: 1e-12, note: "exact pmf" },
                Expected { name: "p_theta", value: 0.05, tolerance: 1e-12, note: "exact pmf" },
                Expected { name: "m_eta", value: 0.042, tolerance: 1e-12, note: "exact pmf" },
                Expected { name: "delta", value: -1.037833, tolerance: 1e-6, note: "closed form -5 sqrt(19)/21" },
                Expected {
                    name: "asym_reject_prob",
                    value: 0.1795898,
                    tolerance: 1e-6,
                    note: "published to 7 digits",
                },
                Expected { name: "slln_l0_rate", value: 0.025, tolerance: 1e-12, note: "(1-p) p_theta" },
                Expected { name: "slln_l1_rate", value: 0.025, tolerance: 1e-12, note: "p p_theta" },
                Expected { name: "d2", value: 0.25 * 0.002 / 0.042, tolerance: 1e-12, note: "d_inf (1-p)(p0-p_theta)/m_eta" },
                Expected { name: "d3", value: 0.25 * 0.04 / 0.042, tolerance: 1e-12, note: "d_inf p (p1-p_theta)/m_eta" },
                Expected { name: "marginal_mean0", value: 0.25, tolerance: 1e-12, note: "equal for both arms" },
                Expected { name: "marginal_mean1", value: 0.25, tolerance: 1e-12, note: "equal for both arms" },
            ],
        ),
        "picky" => (
            "ranking algorithms with 1% picky visitors who only buy the scarce good",
            ExactLaws { p: half, mu0: PICKY_MU0.to_vec(), mu1: PICKY_MU1.to_vec(), nu: PICKY_NU.to_vec() },
            false,
            alloc::vec![
                Expected { name: "p0", value: 0.05648, tolerance: 1e-12, note: "exact pmf" },
                Expected { name: "p1", value: 0.0941, tolerance: 1e-12, note: "exact pmf" },
                Expected { name: "p_theta", value: 0.0495, tolerance: 1e-12, note: "exact pmf" },
                Expected { name: "m_eta", value: 0.04658, tolerance: 1e-12, note: "exact pmf" },
                Expected {
                    name: "delta",
                    value: -0.930852,
                    tolerance: 1e-6,
                    note: "published as +0.930852 with (p1 - p0) in the numerator",
                },
                Expected {
                    name: "asym_reject_prob",
                    value: 0.1536348,
                    tolerance: 1e-6,
                    note: "published to 7 digits",
                },
                Expected { name: "marginal_mean0", value: 349.0 / 896.0, tolerance: 1e-12, note: "exactly 349/896" },
                Expected { name: "marginal_mean1", value: 223.0 / 842.0, tolerance: 1e-12, note: "exactly 223/842" },
                Expected { name: "power", value: 0.001933, tolerance: 5e-4, note: "Monte Carlo, 2e6 draws" },
            ],
        ),
        _ => return None,
    };
    let scenario = Scenario {
        p: *exact.p.numer() as f64 / *exact.p.denom() as f64,
        q: 1.0,
        mu0: ExactLaws::to_f64(&exact.mu0),
        mu1: ExactLaws::to_f64(&exact.mu1),
        nu: ExactLaws::to_f64(&exact.nu),
        schedule: InventorySchedule::new(0.5, 0.5),
    };
    Some(NamedScenario {
        id: id.to_string(),
        description,
        scenario,
        exact,
        alpha: 0.05,
        d_inf: 0.5,
        separate,
        default_engine: Engine::Fast,
        expected,
    })
}

/// Built-in scenario by id.
pub fn get(id: &str) -> Result<NamedScenario> {
    build(id).ok_or_else(|| Error::UnknownScenario { id: id.to_string(), known: IDS.join(", ") })
}

/// Recomputes a named theory value of `ns` from its scenario.
///
/// The power is a Monte Carlo quantity; it is evaluated with `power_iters`
/// draws under a fixed seed.
pub fn theory_value(ns: &NamedScenario, name: &str, power_iters: u64) -> Result<f64> {
    let m = derive_moments(&ns.scenario)?;
    let d_inf = ns.d_inf;
    Ok(match name {
        "p0" => m.p0,
        "p1" => m.p1,
        "p_theta" => m.p_theta,
        "m_eta" => m.m.eta,
        "delta" => asymptotics::noncentrality(&m, d_inf)?,
        "asym_reject_prob" => asymptotics::asym_reject_prob(asymptotics::noncentrality(&m, d_inf)?, ns.alpha)?,
        "slln_l0_rate" => slln_limits(&m, 0.0)?.l0_rate,
        "slln_l1_rate" => slln_limits(&m, 0.0)?.l1_rate,
        "d2" => asymptotics::drift(&m, d_inf)?.d2,
        "d3" => asymptotics::drift(&m, d_inf)?.d3,
        "marginal_mean0" => asymptotics::marginal_conv_rate_limit(&m, 0, d_inf)?.0,
        "marginal_mean1" => asymptotics::marginal_conv_rate_limit(&m, 1, d_inf)?.0,
        "power" => asymptotics::asym_power_mc(&m, d_inf, ns.alpha, power_iters, 0x5EED)?.estimate,
        other => return Err(Error::Domain(alloc::format!("no theory value named {other:?}"))),
    })
}
