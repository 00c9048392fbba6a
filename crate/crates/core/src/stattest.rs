//! The classical two-sample chi-squared test for equal conversion rates.
//!
//! Distribution functions are expressed through `erf`/`erfc` (the `libm`
//! port of the FreeBSD routines, accurate to about one ulp), quantiles
//! through bracketed bisection.

use alloc::format;

use crate::math::{erf, erfc, sqrt};
use crate::{Error, Result};

/// Purchases and group sizes of a two-arm experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContingencyTable {
    pub l0: u64,
    pub l1: u64,
    pub n0: u64,
    pub n1: u64,
}

impl ContingencyTable {
    pub fn new(l0: u64, l1: u64, n0: u64, n1: u64) -> Result<Self> {
        let t = ContingencyTable { l0, l1, n0, n1 };
        if l0 > n0 || l1 > n1 {
            return Err(Error::Domain(format!("purchases exceed group size in {t:?}")));
        }
        if n0 + n1 == 0 {
            return Err(Error::Domain("empty table".into()));
        }
        Ok(t)
    }

    /// Pearson statistic, or `None` if a margin is zero.
    ///
    /// Evaluates the four-cell sum of squared deviations from expected counts.
    pub fn chi2(&self) -> Option<f64> {
        let n = (self.n0 + self.n1) as f64;
        let l = (self.l0 + self.l1) as f64;
        if self.l0 + self.l1 == 0 || self.l0 + self.l1 == self.n0 + self.n1 || self.n0 == 0 || self.n1 == 0 {
            return None;
        }
        let mut stat = 0.0;
        for (li, ni) in [(self.l0 as f64, self.n0 as f64), (self.l1 as f64, self.n1 as f64)] {
            let e_buy = l * ni / n;
            let e_none = (n - l) * ni / n;
            let d_buy = li - e_buy;
            let d_none = (ni - li) - e_none;
            stat += d_buy * d_buy / e_buy + d_none * d_none / e_none;
        }
        Some(stat)
    }

    /// Conversion rates `L_i / N_i`, with 0 for an empty group.
    pub fn conversion_rates(&self) -> (f64, f64) {
        let rate = |l: u64, n: u64| if n == 0 { 0.0 } else { l as f64 / n as f64 };
        (rate(self.l0, self.n0), rate(self.l1, self.n1))
    }
}

/// Chi-squared statistic of a table; `None` is the undefined marker.
pub fn chi2_statistic(t: &ContingencyTable) -> Option<f64> {
    t.chi2()
}

/// Strict rejection rule `chi2 > q`; an undefined statistic never rejects.
#[inline]
pub fn rejects(chi2: Option<f64>, critical: f64) -> bool {
    matches!(chi2, Some(x) if x > critical)
}

/// Upper tail `P(X > x)` of the chi-squared law with one degree of freedom.
pub fn chi2_1df_sf(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("chi-squared argument {x} must be >= 0")));
    }
    Ok(erfc(sqrt(x / 2.0)))
}

/// Lower tail `P(X <= x)` with one degree of freedom.
pub fn chi2_1df_cdf(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("chi-squared argument {x} must be >= 0")));
    }
    Ok(erf(sqrt(x / 2.0)))
}

/// `x` with `P(X <= x) = prob` for one degree of freedom.
pub fn chi2_1df_quantile(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain(format!("probability {prob} must lie in (0, 1)")));
    }
    // Work on whichever tail is not rounded away.
    let f = |x: f64| {
        if prob <= 0.5 {
            erf(sqrt(x / 2.0)) - prob
        } else {
            (1.0 - prob) - erfc(sqrt(x / 2.0))
        }
    };
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    Ok(bisect(f, 0.0, hi))
}

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / core::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn std_normal_quantile(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain(format!("probability {prob} must lie in (0, 1)")));
    }
    let f = |x: f64| {
        if prob <= 0.5 {
            std_normal_cdf(x) - prob
        } else {
            (1.0 - prob) - std_normal_cdf(-x)
        }
    };
    Ok(bisect(f, -40.0, 40.0))
}

/// Root of an increasing function bracketed by `[lo, hi]`, to full precision.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
