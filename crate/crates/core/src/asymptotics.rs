//! Limit theory for the shared-inventory experiment.
//!
//! With `c_n ~ d_inf sqrt(n)` the centered, `sqrt(n)`-scaled vector
//! `(N0, N1, L0, L1)` converges to `(0, 0, d2, d3) + (G1, -G1, G2, G3)`, where
//! `(G1, G2, G3)` is centered Gaussian with covariance [`build_v1`]. The
//! chi-squared statistic then converges to `(N - delta)^2` with the
//! noncentrality of [`noncentrality`], so the test rejects with probability
//! [`asym_reject_prob`] instead of `alpha`.
//!
//! Sign conventions: `delta = d_inf (p0 - p1) sqrt(p(1-p)) / (m_eta sqrt(p_theta (1-p_theta)))`
//! and the direction event "arm 0 converts better" is `C0 > C1`.

use alloc::format;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, Matrix};
use crate::math::sqrt;
use crate::model::DerivedMoments;
use crate::rng::{derive_seed, stream, StreamRng};
use crate::stattest::{chi2_1df_quantile, std_normal_cdf};
use crate::{Error, Result};

/// Relative distance from the critical value `c_inf = m_eta` treated as critical.
const CRITICAL_REL_TOL: f64 = 1e-12;

/// Draws per independently seeded Monte Carlo chunk.
pub const MC_CHUNK: u64 = 1 << 16;

/// Almost-sure limits of purchase counts and conversion rates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SllnLimits {
    /// `lim L0 / n`
    pub l0_rate: f64,
    /// `lim L1 / n`
    pub l1_rate: f64,
    /// `lim C0 = lim L0 / N0` (0 if arm 0 is never shown)
    pub conv0: f64,
    pub conv1: f64,
}

fn require_positive_eta(m: &DerivedMoments) -> Result<()> {
    if !(m.m.eta > 0.0) {
        return Err(Error::Degenerate("mean demand for good 2 is zero".into()));
    }
    Ok(())
}

fn require_theta_nondegenerate(p_theta: f64) -> Result<()> {
    if !(p_theta > 0.0 && p_theta < 1.0) {
        return Err(Error::Degenerate(format!("post-sellout conversion rate {p_theta} is not in (0, 1)")));
    }
    Ok(())
}

/// Limits of `L0/n`, `L1/n`, `C0`, `C1` when `c_n / n -> c_inf`.
pub fn slln_limits(m: &DerivedMoments, c_inf: f64) -> Result<SllnLimits> {
    if !(c_inf >= 0.0) || !c_inf.is_finite() {
        return Err(Error::Domain(format!("c_inf = {c_inf} must be finite and >= 0")));
    }
    let p = m.p;
    let (l0_rate, l1_rate) = if c_inf == 0.0 {
        ((1.0 - p) * m.p_theta, p * m.p_theta)
    } else {
        require_positive_eta(m)?;
        // The walk meets the boundary after about c_n / m_eta visitors.
        let critical = m.m.eta;
        if ((c_inf - critical) / critical).abs() <= CRITICAL_REL_TOL {
            return Err(Error::UnsupportedRegime(format!("c_inf = m_eta = {critical} is the critical value")));
        }
        if c_inf < critical {
            let w = c_inf / m.m.eta;
            (
                (1.0 - p) * m.p_theta + w * (1.0 - p) * (m.p0 - m.p_theta),
                p * m.p_theta + w * p * (m.p1 - m.p_theta),
            )
        } else {
            ((1.0 - p) * m.p0, p * m.p1)
        }
    };
    let conv = |rate: f64, share: f64| if share > 0.0 { rate / share } else { 0.0 };
    Ok(SllnLimits { l0_rate, l1_rate, conv0: conv(l0_rate, 1.0 - p), conv1: conv(l1_rate, p) })
}

/// Mean shift `(d2, d3)` of the scaled purchase counts.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Drift {
    pub d2: f64,
    pub d3: f64,
}

impl Drift {
    pub const ZERO: Drift = Drift { d2: 0.0, d3: 0.0 };
}

pub fn drift(m: &DerivedMoments, d_inf: f64) -> Result<Drift> {
    require_positive_eta(m)?;
    let p = m.p;
    Ok(Drift {
        d2: d_inf * (1.0 - p) * (m.p0 - m.p_theta) / m.m.eta,
        d3: d_inf * p * (m.p1 - m.p_theta) / m.m.eta,
    })
}

/// Noncentrality of the limiting chi-squared law.
pub fn noncentrality(m: &DerivedMoments, d_inf: f64) -> Result<f64> {
    require_theta_nondegenerate(m.p_theta)?;
    require_positive_eta(m)?;
    let p = m.p;
    Ok(d_inf * (m.p0 - m.p1) * sqrt(p * (1.0 - p)) / (m.m.eta * sqrt(m.p_theta * (1.0 - m.p_theta))))
}

/// `P((N - delta)^2 > q_{1-alpha})` for standard normal `N`.
pub fn asym_reject_prob(delta: f64, alpha: f64) -> Result<f64> {
    let root = sqrt(chi2_1df_quantile(1.0 - alpha)?);
    // Both tails as upper tails to avoid cancellation.
    Ok(std_normal_cdf(delta - root) + std_normal_cdf(-root - delta))
}

/// Covariance of `(G1, G2, G3)`.
pub fn build_v1(m: &DerivedMoments) -> Matrix<3> {
    let p = m.p;
    let pt = m.p_theta;
    let pq = p * (1.0 - p);
    [
        [pq, pq * pt, -pq * pt],
        [pq * pt, pt * (1.0 - p) * (1.0 - pt * (1.0 - p)), -pq * pt * pt],
        [-pq * pt, -pq * pt * pt, p * pt * (1.0 - p * pt)],
    ]
}

/// Covariance of the seven-dimensional Brownian motion driving the
/// functional limit, indexed as
/// `(purchase & arm 0, purchase & arm 1, arm, xi, eta, theta > 0 & arm 0, theta > 0 & arm 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianCov7(pub Matrix<7>);

impl BrownianCov7 {
    /// `(G1, G2, G3) = (-B3, B6, B7)`: the covariance of that selection.
    pub fn select_v1(&self) -> Matrix<3> {
        let v = &self.0;
        let idx = [2usize, 5, 6];
        let sign = [-1.0, 1.0, 1.0];
        core::array::from_fn(|i| core::array::from_fn(|j| sign[i] * sign[j] * v[idx[i]][idx[j]]))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.0)
    }
}

/// The 7x7 increment covariance, with the mixture second moments of `m`.
pub fn build_v(m: &DerivedMoments) -> BrownianCov7 {
    let p = m.p;
    let q = 1.0 - p;
    let (p0, p1, pt) = (m.p0, m.p1, m.p_theta);
    let (m0x, m1x, mx) = (m.m0.xi, m.m1.xi, m.m.xi);
    let (m0y, m1y, my) = (m.m0.eta, m.m1.eta, m.m.eta);
    let upper: [[f64; 7]; 7] = [
        [
            p0 * q * (1.0 - p0 * q),
            -p0 * p1 * p * q,
            -p0 * q * p,
            q * (m0x - mx * p0),
            q * (m0y - my * p0),
            p0 * q * p * pt,
            -p0 * p * q * pt,
        ],
        [0.0, p * p1 * (1.0 - p * p1), p * p1 * q, p * (m1x - p1 * mx), p * (m1y - p1 * my), -p1 * p * q * pt, p * p1 * q * pt],
        [0.0, 0.0, p * q, p * (m1x - mx), p * (m1y - my), -p * q * pt, p * q * pt],
        [0.0, 0.0, 0.0, m.sigma_xi2, m.rho_xieta, q * pt * (m0x - mx), p * pt * (m1x - mx)],
        [0.0, 0.0, 0.0, 0.0, m.sigma_eta2, q * pt * (m0y - my), p * pt * (m1y - my)],
        [0.0, 0.0, 0.0, 0.0, 0.0, pt * q * (1.0 - pt * q), -p * q * pt * pt],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, p * pt * (1.0 - p * pt)],
    ];
    let mut v = upper;
    for i in 0..7 {
        for j in 0..i {
            v[i][j] = upper[j][i];
        }
    }
    BrownianCov7(v)
}

/// Gaussian limit of the scaled `(N0, N1, L0, L1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLimit {
    /// Mean of `(N0, N1, L0, L1)`; the first two entries are 0.
    pub drift: [f64; 4],
    pub cov3: Matrix<3>,
    /// `sqrt3 sqrt3^T = cov3`; lower triangular unless `cov3` is singular.
    pub sqrt3: Matrix<3>,
}

impl GaussianLimit {
    pub fn new(m: &DerivedMoments, d_inf: f64) -> Result<Self> {
        let d = drift(m, d_inf)?;
        Self::from_parts(d, build_v1(m))
    }

    pub fn from_parts(d: Drift, cov3: Matrix<3>) -> Result<Self> {
        if !linalg::is_symmetric(&cov3, 1e-14) {
            return Err(Error::Domain("covariance matrix is not symmetric".into()));
        }
        Ok(GaussianLimit { drift: [0.0, 0.0, d.d2, d.d3], cov3, sqrt3: linalg::psd_factor(&cov3)? })
    }

    pub fn drift(&self) -> Drift {
        Drift { d2: self.drift[2], d3: self.drift[3] }
    }

    /// One centered draw of `(G1, G2, G3)`.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        let z: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let l = &self.sqrt3;
        [
            l[0][0] * z[0] + l[0][1] * z[1] + l[0][2] * z[2],
            l[1][0] * z[0] + l[1][1] * z[1] + l[1][2] * z[2],
            l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2],
        ]
    }
}

/// Stream of `count` i.i.d. draws of `(G1, G2, G3)`.
pub fn sample_gaussian_limit(g: &GaussianLimit, seed: u64, count: u64) -> GaussianDraws<'_> {
    GaussianDraws { g, rng: stream(seed), left: count }
}

pub struct GaussianDraws<'a> {
    g: &'a GaussianLimit,
    rng: StreamRng,
    left: u64,
}

impl Iterator for GaussianDraws<'_> {
    type Item = [f64; 3];

    fn next(&mut self) -> Option<[f64; 3]> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        Some(self.g.draw(&mut self.rng))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.left).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// Limiting chi-squared value for one Gaussian draw, as the sum of the two
/// squared group deviations.
pub fn limit_chi2_sample(g: [f64; 3], drift: Drift, p: f64, p_theta: f64) -> Result<f64> {
    require_theta_nondegenerate(p_theta)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("arm probability {p} must lie in (0, 1)")));
    }
    let [g1, g2, g3] = g;
    let Drift { d2, d3 } = drift;
    let total = d2 + d3 + g2 + g3;
    let a = d2 + g2 - p_theta * g1 - (1.0 - p) * total;
    let b = d3 + g3 + p_theta * g1 - p * total;
    let k = (1.0 - p_theta) * p_theta;
    Ok(a * a / (k * (1.0 - p)) + b * b / (k * p))
}

/// Limit of `sqrt(n) (C0 - C1)` up to a positive factor: positive iff arm 0
/// converts better.
#[inline]
pub fn limit_direction(g: [f64; 3], drift: Drift, p: f64, p_theta: f64) -> f64 {
    -p_theta * g[0] + p * (drift.d2 + g[1]) - (1.0 - p) * (drift.d3 + g[2])
}

/// Monte Carlo estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub iters: u64,
}

impl McEstimate {
    pub fn from_hits(hits: u64, iters: u64) -> Self {
        let est = hits as f64 / iters as f64;
        McEstimate { estimate: est, std_error: sqrt(est * (1.0 - est) / iters as f64), hits, iters }
    }
}

/// Event counted by [`LimitExperiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitEvent {
    /// Limiting chi-squared above the critical value.
    Reject,
    /// Rejection together with `C0 > C1` in the limit.
    RejectArm0Better,
}

/// Monte Carlo over the Gaussian limit, split into independently seeded chunks
/// of [`MC_CHUNK`] draws so that chunk counts can be computed in any order.
#[derive(Debug, Clone, Copy)]
pub struct LimitExperiment {
    pub limit: GaussianLimit,
    pub p: f64,
    pub p_theta: f64,
    pub critical: f64,
}

impl LimitExperiment {
    pub fn new(m: &DerivedMoments, d_inf: f64, alpha: f64) -> Result<Self> {
        require_theta_nondegenerate(m.p_theta)?;
        Ok(LimitExperiment {
            limit: GaussianLimit::new(m, d_inf)?,
            p: m.p,
            p_theta: m.p_theta,
            critical: chi2_1df_quantile(1.0 - alpha)?,
        })
    }

    pub fn chunks(iters: u64) -> u64 {
        iters.div_ceil(MC_CHUNK)
    }

    fn chunk_len(iters: u64, chunk: u64) -> u64 {
        MC_CHUNK.min(iters - chunk * MC_CHUNK)
    }

    /// Hits of `event` in chunk `chunk` of an `iters`-draw run under `seed`.
    pub fn chunk_hits(&self, event: LimitEvent, seed: u64, iters: u64, chunk: u64) -> u64 {
        let mut rng = stream(derive_seed(seed, chunk));
        let drift = self.limit.drift();
        let mut hits = 0;
        for _ in 0..Self::chunk_len(iters, chunk) {
            let g = self.limit.draw(&mut rng);
            let chi2 = limit_chi2_sample(g, drift, self.p, self.p_theta).expect("validated parameters");
            let hit = chi2 > self.critical
                && match event {
                    LimitEvent::Reject => true,
                    LimitEvent::RejectArm0Better => limit_direction(g, drift, self.p, self.p_theta) > 0.0,
                };
            hits += u64::from(hit);
        }
        hits
    }

    /// Serial estimate; any parallel schedule over chunks gives the same result.
    pub fn estimate(&self, event: LimitEvent, seed: u64, iters: u64) -> Result<McEstimate> {
        if iters == 0 {
            return Err(Error::Domain("at least one iteration is required".into()));
        }
        let hits = (0..Self::chunks(iters)).map(|c| self.chunk_hits(event, seed, iters, c)).sum();
        Ok(McEstimate::from_hits(hits, iters))
    }
}

/// Limiting power `lim P(chi2 > q_{1-alpha}, C0 > C1)` by Monte Carlo.
pub fn asym_power_mc(m: &DerivedMoments, d_inf: f64, alpha: f64, iters: u64, seed: u64) -> Result<McEstimate> {
    LimitExperiment::new(m, d_inf, alpha)?.estimate(LimitEvent::RejectArm0Better, seed, iters)
}

/// Mean and variance of the normal limit of `(L_i - n p_theta)/sqrt(n)` when
/// only arm `arm` is shown.
pub fn marginal_conv_rate_limit(m: &DerivedMoments, arm: u8, d_inf: f64) -> Result<(f64, f64)> {
    let (pi, mi) = match arm {
        0 => (m.p0, m.m0.eta),
        1 => (m.p1, m.m1.eta),
        _ => return Err(Error::Domain(format!("arm {arm} is not 0 or 1"))),
    };
    if !(mi > 0.0) {
        return Err(Error::Degenerate(format!("arm {arm} has zero mean demand for good 2")));
    }
    Ok((d_inf * (pi - m.p_theta) / mi, m.p_theta * (1.0 - m.p_theta)))
}
