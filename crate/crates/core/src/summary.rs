//! Replicate summaries and their comparison with the limit theory.
//!
//! Summaries only depend on the multiset of records: every field is sorted
//! before it is summed, so merge order never changes a bit of the output.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::asymptotics::{asym_reject_prob, noncentrality, slln_limits};
use crate::math::{ksum, sqrt};
use crate::model::DerivedMoments;
use crate::simulate::{SimRecord, StoppingTime};
use crate::stattest::{chi2_1df_quantile, chi2_1df_sf, rejects, std_normal_cdf, ContingencyTable};
use crate::{Error, Result};

/// Normal-approximation confidence intervals are flagged below this many replicates.
pub const MIN_REPLICATES_FOR_CI: u64 = 30;

const Z95: f64 = 1.959963984540054;

/// Mean, sample variance and 95% half-width of one field.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldStats {
    /// Records contributing (e.g. only those with a reached stopping time).
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    /// `None` with fewer than two values.
    pub ci95: Option<f64>,
}

impl FieldStats {
    pub fn from_values(mut values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let count = values.len() as u64;
        let mean = ksum(values.iter().copied()) / count as f64;
        let variance = if count > 1 {
            ksum(values.iter().map(|v| (v - mean) * (v - mean))) / (count - 1) as f64
        } else {
            0.0
        };
        let ci95 = (count > 1).then(|| Z95 * sqrt(variance / count as f64));
        Some(FieldStats { count, mean, variance, ci95 })
    }

    pub fn std_error(&self) -> Option<f64> {
        (self.count > 1).then(|| sqrt(self.variance / self.count as f64))
    }
}

/// Names of the summarized record fields, in output order.
pub const FIELD_NAMES: [&str; 15] = [
    "N0", "N1", "L0", "L1", "g1_0", "g1_1", "g2_0", "g2_1", "tau1", "tau2", "chi2", "p_value", "L0_rate", "L1_rate",
    "tau1_over_cn",
];

fn field_value(r: &SimRecord, name: &str) -> Option<f64> {
    let v = match name {
        "N0" => r.n0 as f64,
        "N1" => r.n1 as f64,
        "L0" => r.l0 as f64,
        "L1" => r.l1 as f64,
        "g1_0" => r.g1_0 as f64,
        "g1_1" => r.g1_1 as f64,
        "g2_0" => r.g2_0 as f64,
        "g2_1" => r.g2_1 as f64,
        "tau1" => r.tau1.get()? as f64,
        "tau2" => r.tau2.get()? as f64,
        "chi2" => r.chi2?,
        "p_value" => r.p_value?,
        "L0_rate" => r.l0 as f64 / r.n as f64,
        "L1_rate" => r.l1 as f64 / r.n as f64,
        "tau1_over_cn" if r.c_n > 0 => r.tau1.get()? as f64 / r.c_n as f64,
        _ => return None,
    };
    Some(v)
}

/// Summary of a batch of replicates sharing `n` and `c_n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BatchSummary {
    pub replicates: u64,
    pub n: u64,
    pub c_n: u64,
    pub alpha: f64,
    /// `q_{1-alpha}` of the chi-squared law with one degree of freedom.
    pub critical: f64,
    pub rejections: u64,
    pub undefined: u64,
    /// Fraction with a defined statistic above `critical`.
    pub reject_rate: f64,
    pub reject_ci95: Option<f64>,
    pub undefined_rate: f64,
    pub fields: Vec<(String, FieldStats)>,
    pub warnings: Vec<String>,
}

impl BatchSummary {
    pub fn field(&self, name: &str) -> Option<&FieldStats> {
        self.fields.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }
}

/// Summarizes records of one `(n, c_n)` configuration at level `alpha`.
pub fn summarize(records: &[SimRecord], alpha: f64) -> Result<BatchSummary> {
    let first = records.first().ok_or(Error::EmptyBatch)?;
    if let Some(r) = records.iter().find(|r| r.n != first.n || r.c_n != first.c_n) {
        return Err(Error::Mismatch(format!(
            "records mix (n, c_n) = ({}, {}) and ({}, {})",
            first.n, first.c_n, r.n, r.c_n
        )));
    }
    let critical = chi2_1df_quantile(1.0 - alpha)?;
    let replicates = records.len() as u64;
    let rejections = records.iter().filter(|r| rejects(r.chi2, critical)).count() as u64;
    let undefined = records.iter().filter(|r| r.chi2.is_none()).count() as u64;
    let reject_rate = rejections as f64 / replicates as f64;
    let reject_ci95 = (replicates > 1).then(|| Z95 * sqrt(reject_rate * (1.0 - reject_rate) / replicates as f64));

    let fields = FIELD_NAMES
        .iter()
        .filter_map(|&name| {
            let values: Vec<f64> = records.iter().filter_map(|r| field_value(r, name)).collect();
            FieldStats::from_values(values).map(|s| (String::from(name), s))
        })
        .collect();

    let mut warnings = Vec::new();
    if replicates < MIN_REPLICATES_FOR_CI {
        warnings.push(format!(
            "only {replicates} replicates; normal-approximation intervals are unreliable below {MIN_REPLICATES_FOR_CI}"
        ));
    }
    Ok(BatchSummary {
        replicates,
        n: first.n,
        c_n: first.c_n,
        alpha,
        critical,
        rejections,
        undefined,
        reject_rate,
        reject_ci95,
        undefined_rate: undefined as f64 / replicates as f64,
        fields,
        warnings,
    })
}

/// Which limit theorem a finite `(n, c_n)` is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Regime {
    /// `c_n / n < m_eta`: the stock sells out; `d_inf = c_n / sqrt(n)`.
    SellOut,
    /// `c_n / n > m_eta`: the stock lasts, the classical test applies.
    Classical,
    /// Separate stocks where one arm sells out and the other does not.
    Mixed,
}

/// Predictions for one finite configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoryPrediction {
    pub n: u64,
    pub c_n: u64,
    pub alpha: f64,
    pub regime: Regime,
    /// `c_n / sqrt(n)`
    pub d_inf: f64,
    /// Noncentrality of the normal inside the limiting chi-squared.
    pub delta: Option<f64>,
    pub asym_reject_prob: Option<f64>,
    /// First-order means of `L0/n` and `L1/n` at `c_inf = c_n / n`.
    pub l0_rate: f64,
    pub l1_rate: f64,
    /// `1/m_eta`, the limit of `tau1 / c_n`.
    pub tau1_over_cn: Option<f64>,
}

impl TheoryPrediction {
    pub fn new(m: &DerivedMoments, n: u64, c_n: u64, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoVisitors);
        }
        let nf = n as f64;
        let c_inf = c_n as f64 / nf;
        let d_inf = c_n as f64 / sqrt(nf);
        let slln = slln_limits(m, c_inf)?;
        let sells_out = m.m.eta > 0.0 && c_inf < m.m.eta;
        let (regime, delta) = if sells_out {
            (Regime::SellOut, noncentrality(m, d_inf).ok())
        } else {
            // Local-alternative noncentrality of the classical test.
            let pbar = m.p * m.p1 + (1.0 - m.p) * m.p0;
            let delta = (pbar > 0.0 && pbar < 1.0)
                .then(|| sqrt(nf) * (m.p0 - m.p1) * sqrt(m.p * (1.0 - m.p)) / sqrt(pbar * (1.0 - pbar)));
            (Regime::Classical, delta)
        };
        let asym = match delta {
            Some(d) => Some(asym_reject_prob(d, alpha)?),
            None => None,
        };
        Ok(TheoryPrediction {
            n,
            c_n,
            alpha,
            regime,
            d_inf,
            delta,
            asym_reject_prob: asym,
            l0_rate: slln.l0_rate,
            l1_rate: slln.l1_rate,
            tau1_over_cn: (sells_out && c_n > 0).then(|| 1.0 / m.m.eta),
        })
    }

    /// Prediction for the pooled test when each arm sees `n_per_arm` visitors
    /// and sells from its own stock of `c_n`.
    ///
    /// Compared batches hold pooled records, so `n` is `2 n_per_arm` and the
    /// purchase rates are per pooled visitor.
    pub fn separate(m: &DerivedMoments, n_per_arm: u64, c_n: u64, alpha: f64) -> Result<Self> {
        if n_per_arm == 0 {
            return Err(Error::NoVisitors);
        }
        let nf = n_per_arm as f64;
        let c_inf = c_n as f64 / nf;
        let d_inf = c_n as f64 / sqrt(nf);
        let pt = m.p_theta;
        let arm = |p_i: f64, m_i: f64| -> Result<(bool, f64, f64)> {
            if !(m_i > 0.0) || c_n == 0 {
                let sells = c_n == 0;
                return Ok((sells, if sells { pt } else { p_i }, 0.0));
            }
            let w = c_inf / m_i;
            if (w - 1.0).abs() <= 1e-12 {
                return Err(Error::UnsupportedRegime(format!("c_inf = m_eta = {m_i} for one arm is critical")));
            }
            Ok(if w < 1.0 { (true, pt + w * (p_i - pt), (p_i - pt) / m_i) } else { (false, p_i, 0.0) })
        };
        let (sells0, rate0, marg0) = arm(m.p0, m.m0.eta)?;
        let (sells1, rate1, marg1) = arm(m.p1, m.m1.eta)?;
        let (regime, delta) = match (sells0, sells1) {
            (true, true) => {
                let k = 2.0 * pt * (1.0 - pt);
                (Regime::SellOut, (k > 0.0).then(|| d_inf * (marg0 - marg1) / sqrt(k)))
            }
            (false, false) => {
                let pbar = 0.5 * (m.p0 + m.p1);
                let delta = (pbar > 0.0 && pbar < 1.0)
                    .then(|| sqrt(2.0 * nf) * 0.5 * (m.p0 - m.p1) / sqrt(pbar * (1.0 - pbar)));
                (Regime::Classical, delta)
            }
            _ => (Regime::Mixed, None),
        };
        let asym = match delta {
            Some(d) => Some(asym_reject_prob(d, alpha)?),
            None => None,
        };
        Ok(TheoryPrediction {
            n: 2 * n_per_arm,
            c_n,
            alpha,
            regime,
            d_inf,
            delta,
            asym_reject_prob: asym,
            l0_rate: 0.5 * rate0,
            l1_rate: 0.5 * rate1,
            tau1_over_cn: None,
        })
    }
}

/// One record for the pooled test of two single-arm runs: arm 0 from `a`,
/// arm 1 from `b`. Stopping times are not defined for the pair.
pub fn pool_separate(a: &SimRecord, b: &SimRecord) -> Result<SimRecord> {
    if a.n != b.n || a.c_n != b.c_n {
        return Err(Error::Mismatch(format!("arm runs differ in (n, c_n): ({}, {}) vs ({}, {})", a.n, a.c_n, b.n, b.c_n)));
    }
    let table = ContingencyTable::new(a.l0, b.l1, a.n0, b.n1)?;
    let chi2 = table.chi2();
    Ok(SimRecord {
        n: a.n + b.n,
        c_n: a.c_n,
        n0: a.n0,
        n1: b.n1,
        l0: a.l0,
        l1: b.l1,
        g1_0: a.g1_0,
        g1_1: b.g1_1,
        g2_0: a.g2_0,
        g2_1: b.g2_1,
        tau1: StoppingTime::NotReached,
        tau2: StoppingTime::NotReached,
        chi2,
        p_value: match chi2 {
            Some(x) => Some(chi2_1df_sf(x)?),
            None => None,
        },
        seed: a.seed,
    })
}

/// Standardized differences between a batch and its prediction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoryComparison {
    /// `(quantity, z)` with `z = (empirical - predicted) / SE`.
    pub z_scores: Vec<(String, f64)>,
}

impl TheoryComparison {
    pub fn z(&self, name: &str) -> Option<f64> {
        self.z_scores.iter().find(|(k, _)| k == name).map(|(_, z)| *z)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.z_scores.iter().map(|(_, z)| z.abs()).fold(0.0, f64::max)
    }
}

/// z-scores of the rejection rate, the purchase rates and `tau1 / c_n`.
pub fn compare_to_theory(summary: &BatchSummary, prediction: &TheoryPrediction) -> Result<TheoryComparison> {
    if summary.replicates == 0 {
        return Err(Error::EmptyBatch);
    }
    if summary.n != prediction.n || summary.c_n != prediction.c_n || summary.alpha != prediction.alpha {
        return Err(Error::Mismatch(format!(
            "summary (n, c_n, alpha) = ({}, {}, {}) but prediction ({}, {}, {})",
            summary.n, summary.c_n, summary.alpha, prediction.n, prediction.c_n, prediction.alpha
        )));
    }
    let mut z_scores = Vec::new();
    if let Some(pred) = prediction.asym_reject_prob {
        if pred > 0.0 && pred < 1.0 {
            let se = sqrt(pred * (1.0 - pred) / summary.replicates as f64);
            z_scores.push((String::from("reject_rate"), (summary.reject_rate - pred) / se));
        }
    }
    let mut push_mean = |name: &str, field: &str, pred: Option<f64>| {
        if let (Some(pred), Some(stats)) = (pred, summary.field(field)) {
            if let Some(se) = stats.std_error().filter(|se| *se > 0.0) {
                z_scores.push((String::from(name), (stats.mean - pred) / se));
            }
        }
    };
    push_mean("L0_rate", "L0_rate", Some(prediction.l0_rate));
    push_mean("L1_rate", "L1_rate", Some(prediction.l1_rate));
    push_mean("tau1_over_cn", "tau1_over_cn", prediction.tau1_over_cn);
    Ok(TheoryComparison { z_scores })
}

/// Two-sided normal p-value of a z-score.
pub fn z_to_p_value(z: f64) -> f64 {
    2.0 * std_normal_cdf(-z.abs())
}
