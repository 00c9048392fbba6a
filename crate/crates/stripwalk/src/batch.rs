//! Replicate batches on a thread pool. Replicate `r` always runs on seed
//! `derive_seed(seed, r)` and records come back in replicate order, so the
//! output does not depend on the number of threads.

use rayon::prelude::*;
use rayon::ThreadPool;
use stripwalk_core::asymptotics::{LimitEvent, LimitExperiment, McEstimate};
use stripwalk_core::rng::derive_seed;
use stripwalk_core::simulate::{separate_seeds, Simulator};
use stripwalk_core::summary::{pool_separate, summarize, BatchSummary, TheoryPrediction};
use stripwalk_core::{derive_moments, Engine, Scenario, SimRecord};

use crate::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Both arms sell from one stock.
    Shared,
    /// Each arm sees `n` visitors and has its own stock `c_n`.
    Separate,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Shared => "shared",
            Mode::Separate => "separate",
        }
    }
}

pub fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Exact => "exact",
        Engine::Fast => "fast",
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchConfig {
    /// Visitors per run (per arm in separate mode).
    pub n: u64,
    pub c_n: u64,
    pub replicates: u64,
    pub alpha: f64,
    pub seed: u64,
    pub mode: Mode,
    pub engine: Engine,
}

impl BatchConfig {
    /// `c_n` from the scenario's schedule.
    pub fn for_scenario(s: &Scenario, n: u64, replicates: u64, alpha: f64, seed: u64) -> Self {
        BatchConfig { n, c_n: s.inventory(n), replicates, alpha, seed, mode: Mode::Shared, engine: Engine::Fast }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub index: u64,
    pub seed: u64,
    /// One record in shared mode, arm 0 then arm 1 in separate mode.
    pub runs: Vec<SimRecord>,
    /// The record the test is applied to.
    pub tested: SimRecord,
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub config: BatchConfig,
    pub replicates: Vec<Replicate>,
}

impl Batch {
    pub fn tested(&self) -> Vec<SimRecord> {
        self.replicates.iter().map(|r| r.tested).collect()
    }

    pub fn summary(&self) -> AppResult<BatchSummary> {
        Ok(summarize(&self.tested(), self.config.alpha)?)
    }
}

/// Prediction matching the tested records of a batch in `mode`.
pub fn prediction(s: &Scenario, mode: Mode, n: u64, c_n: u64, alpha: f64) -> AppResult<TheoryPrediction> {
    let m = derive_moments(s)?;
    Ok(match mode {
        Mode::Shared => TheoryPrediction::new(&m, n, c_n, alpha)?,
        Mode::Separate => TheoryPrediction::separate(&m, n, c_n, alpha)?,
    })
}

/// Pool with `threads` workers; 0 picks rayon's default.
pub fn thread_pool(threads: usize) -> AppResult<ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

pub fn run_batch(s: &Scenario, cfg: &BatchConfig, pool: &ThreadPool) -> AppResult<Batch> {
    if cfg.replicates == 0 {
        return Err(AppError::Usage("at least one replicate is required".into()));
    }
    if cfg.n == 0 {
        return Err(stripwalk_core::Error::NoVisitors.into());
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(stripwalk_core::Error::Domain(format!("alpha = {} must lie in (0, 1)", cfg.alpha)).into());
    }
    let sims = match cfg.mode {
        Mode::Shared => vec![Simulator::shared(s)?],
        Mode::Separate => vec![Simulator::single_arm(s, 0)?, Simulator::single_arm(s, 1)?],
    };
    let one = |index: u64| -> AppResult<Replicate> {
        let seed = derive_seed(cfg.seed, index);
        match cfg.mode {
            Mode::Shared => {
                let r = sims[0].run(cfg.n, cfg.c_n, seed, cfg.engine)?;
                Ok(Replicate { index, seed, runs: vec![r], tested: r })
            }
            Mode::Separate => {
                let (s0, s1) = separate_seeds(seed);
                let a = sims[0].run(cfg.n, cfg.c_n, s0, cfg.engine)?;
                let b = sims[1].run(cfg.n, cfg.c_n, s1, cfg.engine)?;
                let mut tested = pool_separate(&a, &b)?;
                tested.seed = seed;
                Ok(Replicate { index, seed, runs: vec![a, b], tested })
            }
        }
    };
    let replicates =
        pool.install(|| (0..cfg.replicates).into_par_iter().map(one).collect::<AppResult<Vec<_>>>())?;
    Ok(Batch { config: *cfg, replicates })
}

/// [`LimitExperiment::estimate`] with chunks spread over the pool.
pub fn par_limit_estimate(
    x: &LimitExperiment,
    event: LimitEvent,
    seed: u64,
    iters: u64,
    pool: &ThreadPool,
) -> AppResult<McEstimate> {
    if iters == 0 {
        return Err(stripwalk_core::Error::Domain("at least one iteration is required".into()).into());
    }
    let hits = pool.install(|| {
        (0..LimitExperiment::chunks(iters)).into_par_iter().map(|c| x.chunk_hits(event, seed, iters, c)).sum()
    });
    Ok(McEstimate::from_hits(hits, iters))
}
