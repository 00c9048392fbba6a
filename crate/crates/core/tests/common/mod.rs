#![allow(dead_code)]

use rand::Rng;
use stripwalk_core::rng::stream;
use stripwalk_core::{Atom, InventorySchedule, OfferDistribution, Scenario};

/// Normalizes positive weights over `points` into a pmf.
fn pmf(points: &[(u64, u64)], weights: &[f64]) -> OfferDistribution {
    let total: f64 = weights.iter().sum();
    OfferDistribution::new(points.iter().zip(weights).map(|(&(x, y), w)| Atom::new(x, y, w / total)).collect())
}

fn offer<R: Rng>(rng: &mut R, max_x: u64, max_y: u64) -> OfferDistribution {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for x in 0..=max_x {
        for y in 0..=max_y {
            // {0,1}^2 always carries mass; other points only sometimes.
            if x <= 1 && y <= 1 || rng.random_bool(0.5) {
                points.push((x, y));
                let w = if (x, y) == (0, 0) { 5.0 + 20.0 * rng.random::<f64>() } else { 0.05 + rng.random::<f64>() };
                weights.push(w);
            }
        }
    }
    pmf(&points, &weights)
}

/// A valid scenario with random laws on a small grid.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = stream(seed);
    let max_y = rng.random_range(1..=3);
    let mu0 = offer(&mut rng, 2, max_y);
    let mu1 = offer(&mut rng, 2, max_y);
    let nu = pmf(&[(0, 0), (1, 0), (2, 0)], &[5.0 + rng.random::<f64>() * 10.0, 0.1 + rng.random::<f64>(), rng.random::<f64>()]);
    Scenario {
        p: rng.random_range(0.1..0.9),
        q: rng.random::<f64>(),
        mu0,
        mu1,
        nu,
        schedule: InventorySchedule::new(rng.random_range(0.1..2.0), 0.5),
    }
}

pub fn ranking() -> Scenario {
    stripwalk_core::scenarios::get("ranking").unwrap().scenario
}

pub fn picky() -> Scenario {
    stripwalk_core::scenarios::get("picky").unwrap().scenario
}

/// Sample mean and standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
