//! Curves over a grid of `d_inf` values.
//!
//! Every grid point reuses the same seed, so neighbouring Monte Carlo values
//! share their random numbers and the curves are smooth in `d_inf`.

use std::io::Write;

use rayon::ThreadPool;
use stripwalk_core::asymptotics::{asym_reject_prob, noncentrality, LimitEvent, LimitExperiment};
use stripwalk_core::{derive_moments, Engine, InventorySchedule, Scenario};

use crate::batch::{par_limit_estimate, run_batch, BatchConfig, Mode};
use crate::records::fmt_float;
use crate::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Closed-form limiting rejection probability.
    RejectProb,
    /// Monte Carlo limiting power `P(reject, C0 > C1)`.
    PowerMc,
    /// Simulated rejection rate with `c_n = floor(d_inf sqrt(n))`.
    SimReject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub alpha: f64,
    /// Gaussian draws per point for `PowerMc`.
    pub iters: u64,
    /// Replicates per point for `SimReject`.
    pub replicates: u64,
    /// Visitors per run for `SimReject`.
    pub n: u64,
    pub seed: u64,
    pub engine: Engine,
}

impl SweepSpec {
    pub fn grid(&self) -> AppResult<Vec<f64>> {
        if self.steps < 2 {
            return Err(AppError::Usage(format!("steps = {} must be at least 2", self.steps)));
        }
        if !(self.from < self.to) || !self.from.is_finite() || !self.to.is_finite() {
            return Err(AppError::Usage(format!("need from < to, got {} and {}", self.from, self.to)));
        }
        if self.from < 0.0 {
            return Err(AppError::Usage(format!("d_inf must be >= 0, got from = {}", self.from)));
        }
        let h = (self.to - self.from) / (self.steps - 1) as f64;
        Ok((0..self.steps).map(|i| if i + 1 == self.steps { self.to } else { self.from + i as f64 * h }).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub d_inf: f64,
    pub value: f64,
    pub stderr: f64,
}

pub fn run_sweep(s: &Scenario, kind: SweepKind, spec: &SweepSpec, pool: &ThreadPool) -> AppResult<Vec<SweepPoint>> {
    let grid = spec.grid()?;
    let m = derive_moments(s)?;
    grid.into_iter()
        .map(|d| {
            let (value, stderr) = match kind {
                SweepKind::RejectProb => (asym_reject_prob(noncentrality(&m, d)?, spec.alpha)?, 0.0),
                SweepKind::PowerMc => {
                    let x = LimitExperiment::new(&m, d, spec.alpha)?;
                    let e = par_limit_estimate(&x, LimitEvent::RejectArm0Better, spec.seed, spec.iters, pool)?;
                    (e.estimate, e.std_error)
                }
                SweepKind::SimReject => {
                    let sd = Scenario { schedule: InventorySchedule::new(d, 0.5), ..s.clone() };
                    let cfg = BatchConfig {
                        mode: Mode::Shared,
                        engine: spec.engine,
                        ..BatchConfig::for_scenario(&sd, spec.n, spec.replicates, spec.alpha, spec.seed)
                    };
                    let summary = run_batch(&sd, &cfg, pool)?.summary()?;
                    let r = summary.reject_rate;
                    (r, (r * (1.0 - r) / summary.replicates as f64).sqrt())
                }
            };
            Ok(SweepPoint { d_inf: d, value, stderr })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(out: W, points: &[SweepPoint]) -> AppResult<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["d_inf", "value", "stderr"])?;
    for p in points {
        w.write_record([fmt_float(p.d_inf), fmt_float(p.value), fmt_float(p.stderr)])?;
    }
    w.flush().map_err(|e| AppError::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::thread_pool;
    use stripwalk_core::scenarios;

    fn spec(steps: usize) -> SweepSpec {
        SweepSpec {
            from: 0.0,
            to: 3.0,
            steps,
            alpha: 0.05,
            iters: 10_000,
            replicates: 20,
            n: 10_000,
            seed: 1,
            engine: Engine::Fast,
        }
    }

    #[test]
    fn grid_checks() {
        assert!(matches!(spec(1).grid(), Err(AppError::Usage(_))));
        assert_eq!(spec(4).grid().unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert!(SweepSpec { from: 2.0, to: 1.0, ..spec(3) }.grid().is_err());
    }

    #[test]
    fn reject_prob_curve() {
        let s = scenarios::get("ranking").unwrap().scenario;
        let pts = run_sweep(&s, SweepKind::RejectProb, &spec(7), &thread_pool(1).unwrap()).unwrap();
        assert!((pts[0].value - 0.05).abs() < 1e-10);
        assert!(pts.windows(2).all(|w| w[1].value > w[0].value));
        assert!((pts[1].value - 0.1795898).abs() < 1e-6);
    }
}
