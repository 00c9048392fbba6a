//! Summary JSON.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use stripwalk_core::summary::{compare_to_theory, summarize, Regime, TheoryPrediction};
use stripwalk_core::{Scenario, SimRecord};

use crate::batch::{prediction, Mode};
use crate::AppResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theory {
    pub regime: Regime,
    pub d_inf: f64,
    pub delta: Option<f64>,
    pub asym_reject_prob: Option<f64>,
    #[serde(rename = "L0_rate")]
    pub l0_rate: f64,
    #[serde(rename = "L1_rate")]
    pub l1_rate: f64,
    pub tau1_over_cn: Option<f64>,
}

impl From<&TheoryPrediction> for Theory {
    fn from(p: &TheoryPrediction) -> Self {
        Theory {
            regime: p.regime,
            d_inf: p.d_inf,
            delta: p.delta,
            asym_reject_prob: p.asym_reject_prob,
            l0_rate: p.l0_rate,
            l1_rate: p.l1_rate,
            tau1_over_cn: p.tau1_over_cn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub scenario_id: String,
    pub mode: String,
    pub engine: String,
    /// Visitors per run (per arm in separate mode).
    pub n: u64,
    pub c_n: u64,
    pub alpha: f64,
    pub critical: f64,
    pub replicates: u64,
    pub reject_rate: f64,
    pub reject_ci95: Option<f64>,
    pub undefined_rate: f64,
    pub means: BTreeMap<String, f64>,
    pub variances: BTreeMap<String, f64>,
    pub ci95: BTreeMap<String, Option<f64>>,
    /// `null` when no limit theorem covers the configuration.
    pub theory: Option<Theory>,
    pub z_scores: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Summary of the tested records of one batch.
pub fn build(
    scenario_id: &str,
    scenario: &Scenario,
    mode: Mode,
    engine: &str,
    n: u64,
    tested: &[SimRecord],
    alpha: f64,
) -> AppResult<SummaryReport> {
    let summary = summarize(tested, alpha)?;
    let mut warnings = summary.warnings.clone();
    let (theory, z_scores) = match prediction(scenario, mode, n, summary.c_n, alpha) {
        Ok(pred) => {
            let cmp = compare_to_theory(&summary, &pred)?;
            (Some(Theory::from(&pred)), cmp.z_scores.into_iter().collect())
        }
        Err(e) => {
            warnings.push(format!("no theory prediction: {e}"));
            (None, BTreeMap::new())
        }
    };
    let field_map = |f: fn(&stripwalk_core::summary::FieldStats) -> f64| {
        summary.fields.iter().map(|(k, v)| (k.clone(), f(v))).collect::<BTreeMap<_, _>>()
    };
    Ok(SummaryReport {
        scenario_id: scenario_id.to_string(),
        mode: mode.as_str().into(),
        engine: engine.into(),
        n,
        c_n: summary.c_n,
        alpha,
        critical: summary.critical,
        replicates: summary.replicates,
        reject_rate: summary.reject_rate,
        reject_ci95: summary.reject_ci95,
        undefined_rate: summary.undefined_rate,
        means: field_map(|s| s.mean),
        variances: field_map(|s| s.variance),
        ci95: summary.fields.iter().map(|(k, v)| (k.clone(), v.ci95)).collect(),
        theory,
        z_scores,
        warnings,
    })
}

pub fn to_json(r: &SummaryReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}
