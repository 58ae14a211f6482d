//! Variable selection confidence set: every model not rejected by an F-test
//! against the full model.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::data::Dataset;
use crate::error::{McbError, Result};
use crate::model_set::ModelIndexSet;
use crate::regression::rss;

/// Largest p for which all `2^p` candidates are enumerated.
pub const VSCS_LIMIT: usize = 20;
/// RSS values below this fraction of `||y||^2` count as exact fits.
const EXACT_FIT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct VscsResult {
    /// Survivors ordered by cardinality, then lexicographically.
    pub surviving: Vec<ModelIndexSet>,
    pub alpha: f64,
    pub lbms: Vec<ModelIndexSet>,
    pub cardinality: usize,
}

impl VscsResult {
    pub fn contains(&self, m: &ModelIndexSet) -> bool {
        self.surviving.contains(m)
    }
}

/// Upper tail `P(F > f)` of the F distribution with `(d1, d2)` degrees of
/// freedom, through the regularized incomplete beta function.
pub fn f_upper_tail(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    let x = d2 / (d2 + d1 * f);
    beta_reg(d2 / 2.0, d1 / 2.0, x)
}

/// All candidate models of dimension `p`, by cardinality then lexicographic.
pub fn candidate_models(p: usize) -> Vec<ModelIndexSet> {
    let mut all: Vec<ModelIndexSet> = (0u64..1 << p)
        .map(|mask| ModelIndexSet::from_mask(p, mask))
        .collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all
}

/// F-test p-value of every candidate against the full model, in
/// [`candidate_models`] order. The full model gets 1 by convention. When the
/// full model fits exactly, candidates that also fit exactly get 1 and the
/// rest 0.
pub fn f_test_pvalues(data: &Dataset) -> Result<Vec<(ModelIndexSet, f64)>> {
    let (n, p) = (data.n(), data.p());
    if p > VSCS_LIMIT {
        return Err(McbError::TooManyPredictors {
            p,
            limit: VSCS_LIMIT,
        });
    }
    if n <= p {
        return Err(McbError::InvalidInput(format!(
            "F-test needs n > p, got n = {n}, p = {p}"
        )));
    }
    let full = ModelIndexSet::full(p);
    let rss_full = rss(data, &full)?;
    let floor = EXACT_FIT * data.y.dot(&data.y).max(f64::MIN_POSITIVE);
    let d2 = (n - p) as f64;

    let candidates = candidate_models(p);
    let pvalues: Vec<Result<f64>> = candidates
        .par_iter()
        .map(|m| {
            if m.len() == p {
                return Ok(1.0);
            }
            let rss_m = rss(data, m)?;
            if rss_full <= floor {
                return Ok(if rss_m <= floor { 1.0 } else { 0.0 });
            }
            let d1 = (p - m.len()) as f64;
            let f = ((rss_m - rss_full).max(0.0) / d1) / (rss_full / d2);
            Ok(f_upper_tail(f, d1, d2))
        })
        .collect();
    candidates
        .into_iter()
        .zip(pvalues)
        .map(|(m, pv)| pv.map(|v| (m, v)))
        .collect()
}

/// Runs the F-test of every candidate against the full model at level `alpha`.
pub fn vscs(data: &Dataset, alpha: f64) -> Result<VscsResult> {
    check_alpha(alpha)?;
    Ok(vscs_from_pvalues(&f_test_pvalues(data)?, alpha))
}

/// Confidence sets at several levels from one pass of F-tests.
pub fn vscs_levels(data: &Dataset, alphas: &[f64]) -> Result<Vec<VscsResult>> {
    for &a in alphas {
        check_alpha(a)?;
    }
    let pv = f_test_pvalues(data)?;
    Ok(alphas.iter().map(|&a| vscs_from_pvalues(&pv, a)).collect())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(McbError::InvalidInput(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Survivors are the candidates with p-value at least `alpha`.
pub fn vscs_from_pvalues(pvalues: &[(ModelIndexSet, f64)], alpha: f64) -> VscsResult {
    let surviving: Vec<ModelIndexSet> = pvalues
        .iter()
        .filter(|(_, pv)| *pv >= alpha)
        .map(|(m, _)| m.clone())
        .collect();
    let lbms = minimal_models(&surviving);
    VscsResult {
        cardinality: surviving.len(),
        surviving,
        alpha,
        lbms,
    }
}

/// Members of `models` with no proper subset in `models`.
pub fn minimal_models(models: &[ModelIndexSet]) -> Vec<ModelIndexSet> {
    models
        .iter()
        .filter(|m| !models.iter().any(|s| s.is_proper_subset(m)))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VscsReport {
    pub alpha: f64,
    pub cardinality: usize,
    pub lbms: Vec<Vec<String>>,
    pub surviving_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surviving: Option<Vec<Vec<String>>>,
}

impl VscsReport {
    pub fn new(result: &VscsResult, names: &[String], dump_survivors: bool) -> Self {
        Self {
            alpha: result.alpha,
            cardinality: result.cardinality,
            lbms: result.lbms.iter().map(|m| m.names(names)).collect(),
            surviving_count: result.surviving.len(),
            surviving: dump_survivors
                .then(|| result.surviving.iter().map(|m| m.names(names)).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn set(p: usize, v: &[usize]) -> ModelIndexSet {
        ModelIndexSet::from_indices(p, v.iter().copied()).unwrap()
    }

    /// Simpson quadrature of the F density from 0 to f, subtracted from 1.
    fn tail_by_quadrature(f: f64, d1: f64, d2: f64) -> f64 {
        use statrs::function::gamma::ln_gamma;
        let log_b = ln_gamma(d1 / 2.0) + ln_gamma(d2 / 2.0) - ln_gamma((d1 + d2) / 2.0);
        let dens = |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            ((d1 / 2.0) * (d1 * x).ln() + (d2 / 2.0) * d2.ln()
                - ((d1 + d2) / 2.0) * (d1 * x + d2).ln()
                - x.ln()
                - log_b)
                .exp()
        };
        // substitute x = u^2 to tame the origin for small d1
        let g = |u: f64| 2.0 * u * dens(u * u);
        let steps = 200_000;
        let hi = f.sqrt();
        let h = hi / steps as f64;
        let mut s = g(h * 1e-9) + g(hi);
        for i in 1..steps {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        1.0 - s * h / 3.0
    }

    #[test]
    fn f_tail_matches_quadrature() {
        for &(f, d1, d2) in &[(1.0, 3.0, 90.0), (2.5, 1.0, 50.0), (0.4, 10.0, 10.0), (4.0, 6.0, 200.0)] {
            let got = f_upper_tail(f, d1, d2);
            let want = tail_by_quadrature(f, d1, d2);
            assert_abs_diff_eq!(got, want, epsilon = 1e-9);
        }
        // F(1, d2) at f = t^2 is the two-sided t tail; t_{0.975, inf} = 1.96
        assert_abs_diff_eq!(f_upper_tail(1.959_963_984_540_054f64.powi(2), 1.0, 1e9), 0.05, epsilon = 1e-6);
    }

    #[test]
    fn candidate_order() {
        let c = candidate_models(3);
        assert_eq!(c.len(), 8);
        let idx: Vec<Vec<usize>> = c.iter().map(|m| m.indices()).collect();
        assert_eq!(
            idx,
            vec![vec![], vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]]
        );
    }

    #[test]
    fn minimal_examples() {
        let a = vec![set(2, &[]), set(2, &[0]), set(2, &[0, 1])];
        assert_eq!(minimal_models(&a), vec![set(2, &[])]);
        let b = vec![set(2, &[0]), set(2, &[1]), set(2, &[0, 1])];
        assert_eq!(minimal_models(&b), vec![set(2, &[0]), set(2, &[1])]);
    }

    #[test]
    fn report_shape() {
        let r = VscsResult {
            surviving: vec![set(2, &[0]), set(2, &[0, 1])],
            alpha: 0.05,
            lbms: vec![set(2, &[0])],
            cardinality: 2,
        };
        let names = vec!["a".to_string(), "b".to_string()];
        let v = serde_json::to_value(VscsReport::new(&r, &names, false)).unwrap();
        assert_eq!(v["lbms"], serde_json::json!([["a"]]));
        assert_eq!(v["surviving_count"], 2);
        assert!(v.get("surviving").is_none());
        let v = serde_json::to_value(VscsReport::new(&r, &names, true)).unwrap();
        assert_eq!(v["surviving"].as_array().unwrap().len(), 2);
    }
}
