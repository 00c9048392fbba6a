//! The shared-inventory random walk.
//!
//! Visitor `k` is assigned arm `I_k` (arm 1 with probability `p`) and would
//! buy `(xi_k, eta_k) ~ mu_{I_k}`. While the stock of good 2 lasts
//! (`T_{k-1} < c_n`) the demand is served in full if `T_{k-1} + eta_k <= c_n`.
//! Otherwise, with probability `q` the visitor buys all of `xi_k` and whatever
//! is left of good 2, and with probability `1 - q` buys nothing. Once
//! `T = c_n` every visitor buys `theta_k ~ nu` units of good 1.
//!
//! Two engines produce identically distributed [`SimRecord`]s:
//!
//! * [`Engine::Exact`] steps through every visitor.
//! * [`Engine::Fast`] draws whole segments of visitors at once from their
//!   multinomial law over `(arm, atom)` categories. Interior segments are only
//!   aggregated while no visitor in them can reach the boundary, so the
//!   overshoot dynamics around the stopping times are still stepped
//!   individually; the post-sellout segment is always drawn in one go.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::alias::AliasTable;
use crate::model::{OfferDistribution, Scenario};
use crate::rng::{derive_seed, stream, StreamRng};
use crate::stattest::{chi2_1df_sf, ContingencyTable};
use crate::{Error, Result};

/// How the walk is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Engine {
    /// One step per visitor.
    #[default]
    Exact,
    /// Segments drawn from their exact joint law.
    Fast,
}

/// A stopping time, or the explicit marker that it did not occur within `n` steps.
///
/// `At(_)` orders before `NotReached`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StoppingTime {
    At(u64),
    NotReached,
}

impl StoppingTime {
    pub fn get(self) -> Option<u64> {
        match self {
            StoppingTime::At(k) => Some(k),
            StoppingTime::NotReached => None,
        }
    }

    pub fn is_reached(self) -> bool {
        matches!(self, StoppingTime::At(_))
    }

    fn from_option(k: Option<u64>) -> Self {
        k.map_or(StoppingTime::NotReached, StoppingTime::At)
    }
}

/// Outcome of one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimRecord {
    pub n: u64,
    pub c_n: u64,
    pub n0: u64,
    pub n1: u64,
    pub l0: u64,
    pub l1: u64,
    pub g1_0: u64,
    pub g1_1: u64,
    pub g2_0: u64,
    pub g2_1: u64,
    /// First visitor whose demand reaches or exceeds the remaining stock.
    pub tau1: StoppingTime,
    /// First visitor after whom the popular good is sold out.
    pub tau2: StoppingTime,
    pub chi2: Option<f64>,
    pub p_value: Option<f64>,
    pub seed: u64,
}

impl SimRecord {
    pub fn table(&self) -> ContingencyTable {
        ContingencyTable { l0: self.l0, l1: self.l1, n0: self.n0, n1: self.n1 }
    }

    pub fn stopping_times(&self) -> (StoppingTime, StoppingTime) {
        (self.tau1, self.tau2)
    }
}

/// `(tau1, tau2)` of a record.
pub fn stopping_times(record: &SimRecord) -> (StoppingTime, StoppingTime) {
    record.stopping_times()
}

/// What the visitor attempted to buy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attempt {
    /// Before sellout; `served` is `None` when the demand fit into the stock,
    /// otherwise the outcome of the buy-what-is-left coin.
    Interior { xi: u64, eta: u64, served: Option<bool> },
    /// After sellout.
    Boundary { theta: u64 },
}

/// One visitor of a traced walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    /// 1-based visitor index.
    pub k: u64,
    pub arm: u8,
    pub attempt: Attempt,
    /// Units of good 1 and good 2 actually bought.
    pub x: u64,
    pub y: u64,
    /// Cumulative sales after this visitor.
    pub s: u64,
    pub t: u64,
}

#[derive(Debug, Clone, Copy)]
struct Category {
    arm: u8,
    x: u64,
    y: u64,
}

/// Joint law of `(arm, demand)` for one phase of the walk.
#[derive(Debug, Clone)]
struct PhaseLaw {
    cats: Vec<Category>,
    table: AliasTable,
    /// Probabilities sorted in decreasing order, aligned with `cats`.
    probs: Vec<f64>,
    /// `tail[j] = probs[j] + probs[j+1] + ...`
    tail: Vec<f64>,
}

impl PhaseLaw {
    fn new(p_arm1: f64, d0: &OfferDistribution, d1: &OfferDistribution) -> Self {
        let mut weighted: Vec<(Category, f64)> = Vec::new();
        for (arm, w, d) in [(0u8, 1.0 - p_arm1, d0), (1u8, p_arm1, d1)] {
            for a in &d.atoms {
                let prob = w * a.prob;
                if prob > 0.0 {
                    weighted.push((Category { arm, x: a.x, y: a.y }, prob));
                }
            }
        }
        weighted.sort_by(|a, b| b.1.total_cmp(&a.1));
        let total: f64 = crate::math::ksum(weighted.iter().map(|w| w.1));
        let probs: Vec<f64> = weighted.iter().map(|w| w.1 / total).collect();
        let mut tail = alloc::vec![0.0; probs.len()];
        let mut acc = crate::math::KahanSum::default();
        for j in (0..probs.len()).rev() {
            acc.add(probs[j]);
            tail[j] = acc.value();
        }
        let table = AliasTable::new(&probs).expect("validated scenario has positive mass");
        PhaseLaw { cats: weighted.into_iter().map(|w| w.0).collect(), table, probs, tail }
    }

    #[inline]
    fn draw(&self, rng: &mut StreamRng) -> Category {
        self.cats[self.table.sample(rng)]
    }

    /// Multinomial counts of `trials` draws, by sequential conditional binomials.
    fn counts(&self, rng: &mut StreamRng, trials: u64, out: &mut Vec<u64>) {
        out.clear();
        out.resize(self.cats.len(), 0);
        let mut left = trials;
        let last = self.cats.len() - 1;
        for j in 0..last {
            if left == 0 {
                return;
            }
            let cond = (self.probs[j] / self.tail[j]).clamp(0.0, 1.0);
            let c = Binomial::new(left, cond).expect("probability in [0, 1]").sample(rng);
            out[j] = c;
            left -= c;
        }
        out[last] = left;
    }
}

/// Precomputed sampling tables for one parameter set.
#[derive(Debug, Clone)]
struct Walker {
    interior: PhaseLaw,
    boundary: PhaseLaw,
    eta_max: u64,
    q: f64,
}

/// Interior segments shorter than this are stepped individually.
const MIN_BLOCK: u64 = 16;

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    n: [u64; 2],
    l: [u64; 2],
    g1: [u64; 2],
    g2: [u64; 2],
}

impl Tally {
    #[inline]
    fn add(&mut self, arm: u8, x: u64, y: u64, count: u64) {
        let a = arm as usize;
        self.n[a] += count;
        if x + y > 0 {
            self.l[a] += count;
        }
        self.g1[a] += count * x;
        self.g2[a] += count * y;
    }
}

struct State {
    k: u64,
    s: u64,
    t: u64,
    c_n: u64,
    tau1: Option<u64>,
    tau2: Option<u64>,
    tally: Tally,
}

impl Walker {
    fn new(s: &Scenario, p_arm1: f64) -> Self {
        Walker {
            interior: PhaseLaw::new(p_arm1, &s.mu0, &s.mu1),
            boundary: PhaseLaw::new(p_arm1, &s.nu, &s.nu),
            eta_max: s.mu0.max_y().max(s.mu1.max_y()),
            q: s.q,
        }
    }

    #[inline]
    fn step<F: FnMut(&Step)>(&self, st: &mut State, rng: &mut StreamRng, observe: &mut F) {
        st.k += 1;
        let (arm, attempt, x, y);
        if st.t < st.c_n {
            let c = self.interior.draw(rng);
            arm = c.arm;
            let reach = st.t + c.y;
            if reach >= st.c_n && st.tau1.is_none() {
                st.tau1 = Some(st.k);
            }
            if reach <= st.c_n {
                x = c.x;
                y = c.y;
                attempt = Attempt::Interior { xi: c.x, eta: c.y, served: None };
            } else {
                let served = rng.random::<f64>() < self.q;
                if served {
                    x = c.x;
                    y = st.c_n - st.t;
                } else {
                    x = 0;
                    y = 0;
                }
                attempt = Attempt::Interior { xi: c.x, eta: c.y, served: Some(served) };
            }
            st.t += y;
            if st.t == st.c_n {
                st.tau2 = Some(st.k);
            }
        } else {
            let c = self.boundary.draw(rng);
            arm = c.arm;
            x = c.x;
            y = 0;
            attempt = Attempt::Boundary { theta: c.x };
        }
        st.s += x;
        st.tally.add(arm, x, y, 1);
        observe(&Step { k: st.k, arm, attempt, x, y, s: st.s, t: st.t });
    }

    fn start(&self, n: u64, c_n: u64) -> State {
        let mut st = State { k: 0, s: 0, t: 0, c_n, tau1: None, tau2: None, tally: Tally::default() };
        // With no stock the walk starts on the boundary: both times are 1.
        if c_n == 0 && n > 0 {
            st.tau1 = Some(1);
            st.tau2 = Some(1);
        }
        st
    }

    fn run_exact<F: FnMut(&Step)>(&self, n: u64, c_n: u64, seed: u64, mut observe: F) -> SimRecord {
        let mut rng = stream(seed);
        let mut st = self.start(n, c_n);
        while st.k < n {
            self.step(&mut st, &mut rng, &mut observe);
        }
        finish(&st, n, seed)
    }

    fn run_fast(&self, n: u64, c_n: u64, seed: u64) -> SimRecord {
        let mut rng = stream(seed);
        let mut st = self.start(n, c_n);
        let mut counts = Vec::new();
        while st.k < n {
            let left = n - st.k;
            if st.t == st.c_n {
                self.boundary.counts(&mut rng, left, &mut counts);
                for (c, &cnt) in self.boundary.cats.iter().zip(&counts) {
                    st.s += cnt * c.x;
                    st.tally.add(c.arm, c.x, 0, cnt);
                }
                st.k = n;
                break;
            }
            // No visitor of a block this long can reach c_n.
            let safe = if self.eta_max == 0 { left } else { (st.c_n - st.t - 1) / self.eta_max };
            if safe >= MIN_BLOCK || safe >= left {
                let len = safe.min(left);
                self.interior.counts(&mut rng, len, &mut counts);
                for (c, &cnt) in self.interior.cats.iter().zip(&counts) {
                    st.s += cnt * c.x;
                    st.t += cnt * c.y;
                    st.tally.add(c.arm, c.x, c.y, cnt);
                }
                st.k += len;
            } else {
                self.step(&mut st, &mut rng, &mut |_| {});
            }
        }
        finish(&st, n, seed)
    }

    fn run(&self, n: u64, c_n: u64, seed: u64, engine: Engine) -> SimRecord {
        match engine {
            Engine::Exact => self.run_exact(n, c_n, seed, |_| {}),
            Engine::Fast => self.run_fast(n, c_n, seed),
        }
    }
}

fn finish(st: &State, n: u64, seed: u64) -> SimRecord {
    let t = &st.tally;
    let table = ContingencyTable { l0: t.l[0], l1: t.l[1], n0: t.n[0], n1: t.n[1] };
    let chi2 = table.chi2();
    let p_value = chi2.map(|x| chi2_1df_sf(x).expect("statistic is non-negative"));
    SimRecord {
        n,
        c_n: st.c_n,
        n0: t.n[0],
        n1: t.n[1],
        l0: t.l[0],
        l1: t.l[1],
        g1_0: t.g1[0],
        g1_1: t.g1[1],
        g2_0: t.g2[0],
        g2_1: t.g2[1],
        tau1: StoppingTime::from_option(st.tau1),
        tau2: StoppingTime::from_option(st.tau2),
        chi2,
        p_value,
        seed,
    }
}

fn check(s: &Scenario, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::NoVisitors);
    }
    s.validate()
}

/// Prepared simulator for repeated replicates of one scenario.
#[derive(Debug, Clone)]
pub struct Simulator {
    walker: Walker,
}

impl Simulator {
    /// Shared-inventory experiment with the scenario's own `p`.
    pub fn shared(s: &Scenario) -> Result<Self> {
        s.validate()?;
        Ok(Simulator { walker: Walker::new(s, s.p) })
    }

    /// Only arm `arm` (0 or 1) is ever shown.
    pub fn single_arm(s: &Scenario, arm: u8) -> Result<Self> {
        s.validate()?;
        if arm > 1 {
            return Err(Error::Domain(alloc::format!("arm {arm} is not 0 or 1")));
        }
        Ok(Simulator { walker: Walker::new(s, f64::from(arm)) })
    }

    pub fn run(&self, n: u64, c_n: u64, seed: u64, engine: Engine) -> Result<SimRecord> {
        if n == 0 {
            return Err(Error::NoVisitors);
        }
        Ok(self.walker.run(n, c_n, seed, engine))
    }

    /// Exact engine, reporting every visitor to `observe`.
    pub fn run_observed<F: FnMut(&Step)>(&self, n: u64, c_n: u64, seed: u64, observe: F) -> Result<SimRecord> {
        if n == 0 {
            return Err(Error::NoVisitors);
        }
        Ok(self.walker.run_exact(n, c_n, seed, observe))
    }
}

/// One shared-inventory replicate with `c_n` from the scenario's schedule.
pub fn run_shared(s: &Scenario, n: u64, seed: u64, engine: Engine) -> Result<SimRecord> {
    check(s, n)?;
    Simulator::shared(s)?.run(n, s.inventory(n), seed, engine)
}

/// Like [`run_shared`] but only arm `arm` is shown; its record has the other arm empty.
pub fn run_single_arm(s: &Scenario, arm: u8, n: u64, seed: u64, engine: Engine) -> Result<SimRecord> {
    check(s, n)?;
    Simulator::single_arm(s, arm)?.run(n, s.inventory(n), seed, engine)
}

/// Seeds used by [`run_separate`] for arm 0 and arm 1.
pub fn separate_seeds(seed: u64) -> (u64, u64) {
    (derive_seed(seed, 0), derive_seed(seed, 1))
}

/// Each arm on its own inventory `c_n` with its own `n` visitors.
pub fn run_separate(s: &Scenario, n: u64, seed: u64, engine: Engine) -> Result<(SimRecord, SimRecord)> {
    check(s, n)?;
    let (s0, s1) = separate_seeds(seed);
    Ok((run_single_arm(s, 0, n, s0, engine)?, run_single_arm(s, 1, n, s1, engine)?))
}

/// Exact run that also returns every step. Memory is `O(n)`.
pub fn run_shared_traced(s: &Scenario, n: u64, seed: u64) -> Result<(SimRecord, Vec<Step>)> {
    check(s, n)?;
    let mut steps = Vec::with_capacity(n.min(1 << 24) as usize);
    let rec = Simulator::shared(s)?.run_observed(n, s.inventory(n), seed, |st| steps.push(*st))?;
    Ok((rec, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Atom, InventorySchedule};
    use crate::scenarios;
    use alloc::vec;

    fn ranking() -> Scenario {
        scenarios::get("ranking").unwrap().scenario
    }

    fn nothing_bought() -> Scenario {
        Scenario {
            p: 0.5,
            q: 0.5,
            mu0: OfferDistribution::point(0, 0),
            mu1: OfferDistribution::point(0, 0),
            nu: OfferDistribution::point(0, 0),
            schedule: InventorySchedule::new(0.5, 0.5),
        }
    }

    #[test]
    fn zero_visitors_is_an_error() {
        assert_eq!(run_shared(&ranking(), 0, 1, Engine::Exact), Err(Error::NoVisitors));
        assert_eq!(run_separate(&ranking(), 0, 1, Engine::Fast), Err(Error::NoVisitors));
    }

    #[test]
    fn invalid_scenario_is_an_error() {
        let mut s = ranking();
        s.p = 0.0;
        assert!(matches!(run_shared(&s, 10, 1, Engine::Exact), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn nobody_buys() {
        for engine in [Engine::Exact, Engine::Fast] {
            let r = run_shared(&nothing_bought(), 10_000, 5, engine).unwrap();
            assert_eq!((r.l0, r.l1), (0, 0));
            assert_eq!(r.n0 + r.n1, 10_000);
            assert_eq!(r.tau1, StoppingTime::NotReached);
            assert_eq!(r.tau2, StoppingTime::NotReached);
            assert_eq!(r.chi2, None);
            assert_eq!(r.p_value, None);
        }
    }

    #[test]
    fn no_stock_starts_on_boundary() {
        let mut s = ranking();
        s.schedule = InventorySchedule::new(0.0, 0.5);
        let n = 400_000;
        for engine in [Engine::Exact, Engine::Fast] {
            let r = run_shared(&s, n, 11, engine).unwrap();
            assert_eq!(r.c_n, 0);
            assert_eq!((r.g2_0, r.g2_1), (0, 0));
            assert_eq!(r.tau1, StoppingTime::At(1));
            assert_eq!(r.tau2, StoppingTime::At(1));
            // L0/n -> (1-p) p_theta = 0.025; sd is about 2.5e-4.
            let rate = r.l0 as f64 / n as f64;
            assert!((rate - 0.025).abs() < 1.5e-3, "{rate}");
            assert_eq!(r.g1_0, r.l0);
        }
    }

    #[test]
    fn single_visitor() {
        for engine in [Engine::Exact, Engine::Fast] {
            let (a, b) = run_separate(&ranking(), 1, 3, engine).unwrap();
            for r in [a, b] {
                assert_eq!(r.n0 + r.n1, 1);
                assert!(r.l0 + r.l1 <= 1);
            }
            assert_eq!(a.n1, 0);
            assert_eq!(b.n0, 0);
        }
    }

    #[test]
    fn separate_is_two_single_arm_runs() {
        let s = ranking();
        let (a, b) = run_separate(&s, 50_000, 99, Engine::Exact).unwrap();
        let (s0, s1) = separate_seeds(99);
        assert_eq!(a, run_single_arm(&s, 0, 50_000, s0, Engine::Exact).unwrap());
        assert_eq!(b, run_single_arm(&s, 1, 50_000, s1, Engine::Exact).unwrap());
    }

    #[test]
    fn unit_eta_steps_with_clamping_hit_boundary_at_tau1() {
        let mut s = ranking();
        s.q = 1.0;
        for seed in 0..20 {
            let r = run_shared(&s, 200_000, seed, Engine::Exact).unwrap();
            assert!(r.tau1.is_reached());
            assert_eq!(r.tau1, r.tau2);
        }
    }

    #[test]
    fn tiny_n_never_reaches_stock() {
        let r = run_shared(&ranking(), 4, 8, Engine::Exact).unwrap();
        assert_eq!(r.c_n, 1);
        let s = Scenario { schedule: InventorySchedule::new(30.0, 0.5), ..ranking() };
        let r = run_shared(&s, 100, 8, Engine::Fast).unwrap();
        assert_eq!(r.c_n, 300);
        assert_eq!(r.tau1, StoppingTime::NotReached);
        assert_eq!(r.tau2, StoppingTime::NotReached);
    }

    #[test]
    fn deterministic_per_seed() {
        let s = ranking();
        for engine in [Engine::Exact, Engine::Fast] {
            let a = run_shared(&s, 100_000, 17, engine).unwrap();
            let b = run_shared(&s, 100_000, 17, engine).unwrap();
            assert_eq!(a, b);
            let c = run_shared(&s, 100_000, 18, engine).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn overshoot_without_service_buys_nothing() {
        // Every visitor wants 3 units of good 2 but only 2 exist.
        let s = Scenario {
            p: 0.5,
            q: 0.0,
            mu0: OfferDistribution::new(vec![Atom::new(1, 3, 1.0)]),
            mu1: OfferDistribution::new(vec![Atom::new(1, 3, 1.0)]),
            nu: OfferDistribution::point(1, 0),
            schedule: InventorySchedule::new(2.0, 1.0),
        };
        let (r, steps) = run_shared_traced(&s, 1, 0).unwrap();
        assert_eq!(r.c_n, 2);
        assert_eq!(r.tau1, StoppingTime::At(1));
        assert_eq!(r.tau2, StoppingTime::NotReached);
        assert_eq!(r.l0 + r.l1, 0);
        assert_eq!(steps[0].attempt, Attempt::Interior { xi: 1, eta: 3, served: Some(false) });

        let s = Scenario { q: 1.0, schedule: InventorySchedule::new(2.0 / 3.0, 1.0), ..s };
        let (r, steps) = run_shared_traced(&s, 3, 0).unwrap();
        assert_eq!(r.c_n, 2);
        assert_eq!(r.tau1, StoppingTime::At(1));
        assert_eq!(r.tau2, StoppingTime::At(1));
        assert_eq!((steps[0].x, steps[0].y), (1, 2));
        assert_eq!(r.g2_0 + r.g2_1, 2);
        assert_eq!(r.g1_0 + r.g1_1, 3);
        assert!(matches!(steps[1].attempt, Attempt::Boundary { theta: 1 }));
    }
}
