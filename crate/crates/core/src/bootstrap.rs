//! Residual bootstrap ensembles of selected models.

use ndarray::Array1;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{McbError, Result};
use crate::model_set::ModelIndexSet;
use crate::regression::{fit_ols, FitResult};
use crate::rng::substream;
use crate::selectors::{center, select, SelectorSpec};

/// Extra attempts granted to a failing replicate.
pub const REPLICATE_RETRIES: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMethod {
    /// Resample centered residuals of the OLS refit on the selected support.
    Residual,
    /// Resample residuals around the hard-thresholded penalized estimate.
    ModifiedResidual,
}

/// Hard-threshold level `n^(-1/3)` for the modified residual bootstrap.
pub fn threshold_level(n: usize) -> f64 {
    (n as f64).powf(-1.0 / 3.0)
}

/// `B` bootstrap-selected models with per-predictor selection frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEnsemble {
    pub models: Vec<ModelIndexSet>,
    pub frequencies: Vec<f64>,
    pub method: BootstrapMethod,
    pub selector: Option<SelectorSpec>,
    pub seed: u64,
    /// Model selected on the original data, when built by [`build_ensemble`].
    pub original: Option<ModelIndexSet>,
    p: usize,
}

impl BootstrapEnsemble {
    /// Wraps a list of models; frequencies are computed here.
    pub fn from_models(p: usize, models: Vec<ModelIndexSet>) -> Result<Self> {
        if models.is_empty() {
            return Err(McbError::InvalidInput("ensemble needs B >= 1".into()));
        }
        for m in &models {
            m.check_dim(p)?;
        }
        let frequencies = selection_frequencies(p, &models);
        Ok(Self {
            models,
            frequencies,
            method: BootstrapMethod::Residual,
            selector: None,
            seed: 0,
            original: None,
            p,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn b(&self) -> usize {
        self.models.len()
    }

    /// Fraction of bootstrap models equal to the original-data model.
    pub fn agreement_rate(&self) -> Option<f64> {
        let orig = self.original.as_ref()?;
        let hits = self.models.iter().filter(|m| *m == orig).count();
        Some(hits as f64 / self.b() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&EnsembleJson::from(self)).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: EnsembleJson =
            serde_json::from_str(text).map_err(|e| McbError::InvalidInput(e.to_string()))?;
        let models = wire
            .models
            .into_iter()
            .map(|m| ModelIndexSet::from_indices(wire.p, m))
            .collect::<Result<Vec<_>>>()?;
        let mut ens = Self::from_models(wire.p, models)?;
        if ens.models.len() != wire.b {
            return Err(McbError::InvalidInput(format!(
                "B = {} but {} models listed",
                wire.b,
                ens.models.len()
            )));
        }
        ens.method = wire.method;
        ens.seed = wire.seed;
        Ok(ens)
    }
}

#[derive(Serialize, Deserialize)]
struct EnsembleJson {
    #[serde(rename = "B")]
    b: usize,
    p: usize,
    method: BootstrapMethod,
    seed: u64,
    models: Vec<Vec<usize>>,
    frequencies: Vec<f64>,
}

impl From<&BootstrapEnsemble> for EnsembleJson {
    fn from(e: &BootstrapEnsemble) -> Self {
        Self {
            b: e.b(),
            p: e.p,
            method: e.method,
            seed: e.seed,
            models: e.models.iter().map(ModelIndexSet::indices).collect(),
            frequencies: e.frequencies.clone(),
        }
    }
}

/// `pi_j = (1/B) * #{b : j in m_b}`.
pub fn selection_frequencies(p: usize, models: &[ModelIndexSet]) -> Vec<f64> {
    let mut counts = vec![0usize; p];
    for m in models {
        for j in m.iter() {
            counts[j] += 1;
        }
    }
    let b = models.len() as f64;
    counts.into_iter().map(|c| c as f64 / b).collect()
}

fn resample_around<R: Rng + ?Sized>(
    data: &Dataset,
    center_fit: &Array1<f64>,
    residuals: &Array1<f64>,
    rng: &mut R,
) -> Dataset {
    let n = data.n();
    let mean = residuals.mean().expect("n >= 2");
    let pool = residuals.mapv(|r| r - mean);
    let y = Array1::from_shape_fn(n, |i| center_fit[i] + pool[rng.random_range(0..n)]);
    data.with_response(y)
}

/// `y* = X b + e*` with `e*` drawn with replacement from the centered residuals
/// of `fit`.
pub fn residual_resample<R: Rng + ?Sized>(data: &Dataset, fit: &FitResult, rng: &mut R) -> Dataset {
    let mean = data.x.dot(&fit.coefficients);
    resample_around(data, &mean, &fit.residuals, rng)
}

/// Residual bootstrap around the estimate with entries below `threshold` in
/// absolute value set to zero.
pub fn modified_residual_resample<R: Rng + ?Sized>(
    data: &Dataset,
    penalized_fit: &FitResult,
    threshold: f64,
    rng: &mut R,
) -> Dataset {
    let thresholded = penalized_fit
        .coefficients
        .mapv(|b| if b.abs() < threshold { 0.0 } else { b });
    let mean = data.x.dot(&thresholded);
    let residuals = &data.y - &mean;
    resample_around(data, &mean, &residuals, rng)
}

/// Selects on `data`, then on `b_count` bootstrap datasets.
///
/// Replicate `b` draws from substream `b` of `seed`; a failed replicate is
/// retried on a fresh substream up to [`REPLICATE_RETRIES`] times. The fold
/// seed for cross-validation inside each replicate comes from its substream.
pub fn build_ensemble(
    data: &Dataset,
    selector: &SelectorSpec,
    b_count: usize,
    method: BootstrapMethod,
    seed: u64,
) -> Result<BootstrapEnsemble> {
    if b_count == 0 {
        return Err(McbError::InvalidInput("B must be at least 1".into()));
    }
    let original = select(data, selector)?;
    let base = center(data);
    let resampler: Box<dyn Fn(&mut rand_chacha::ChaCha8Rng) -> Dataset + Sync> = match method {
        BootstrapMethod::Residual => {
            let refit = fit_ols(&base, &original.model)?;
            Box::new(move |rng| residual_resample(&base, &refit, rng))
        }
        BootstrapMethod::ModifiedResidual => {
            let fit = original.fit.clone();
            let a_n = threshold_level(data.n());
            Box::new(move |rng| modified_residual_resample(&base, &fit, a_n, rng))
        }
    };

    let outcomes: Vec<Result<ModelIndexSet>> = (0..b_count)
        .into_par_iter()
        .map(|b| {
            for attempt in 0..=REPLICATE_RETRIES {
                let mut rng = substream(seed, (attempt << 40) | b as u64);
                let boot = resampler(&mut rng);
                let spec = SelectorSpec {
                    seed: rng.random(),
                    ..selector.clone()
                };
                if let Ok(sel) = select(&boot, &spec) {
                    return Ok(sel.model);
                }
            }
            Err(McbError::ReplicateFailed(b))
        })
        .collect();
    let models = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut ens = BootstrapEnsemble::from_models(data.p(), models)?;
    ens.method = method;
    ens.selector = Some(selector.clone());
    ens.seed = seed;
    ens.original = Some(original.model);
    Ok(ens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::standardize;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    fn line_data() -> Dataset {
        let x = array![[1.0, 0.3], [2.0, -1.0], [3.0, 0.7], [4.0, 0.1], [5.0, -0.4]];
        let y = array![1.1, 1.9, 3.2, 3.9, 5.1];
        standardize(&Dataset::unnamed(x, y).unwrap()).unwrap().0
    }

    #[test]
    fn zero_residuals_reproduce_fitted_values() {
        let d = line_data();
        let y = d.x.column(0).to_owned() * 2.0;
        let d = d.with_response(y.clone());
        let fit = fit_ols(&d, &ModelIndexSet::from_indices(2, [0]).unwrap()).unwrap();
        let mut rng = substream(1, 0);
        for _ in 0..5 {
            let boot = residual_resample(&d, &fit, &mut rng);
            for (a, b) in boot.y.iter().zip(y.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn residual_pool_is_centered() {
        let d = line_data();
        let mut fit = fit_ols(&d, &ModelIndexSet::from_indices(2, [1]).unwrap()).unwrap();
        fit.residuals += 3.0;
        // Resampling every index once must reproduce the pool, whose mean is 0.
        let mean = fit.residuals.mean().unwrap();
        let pool = fit.residuals.mapv(|r| r - mean);
        assert_abs_diff_eq!(pool.mean().unwrap(), 0.0, epsilon = 1e-12);
        let boot = residual_resample(&d, &fit, &mut substream(4, 4));
        let fitted = d.x.dot(&fit.coefficients);
        for i in 0..d.n() {
            let e = boot.y[i] - fitted[i];
            assert!(pool.iter().any(|r| (r - e).abs() < 1e-12));
        }
    }

    #[test]
    fn resampling_is_deterministic() {
        let d = line_data();
        let fit = fit_ols(&d, &ModelIndexSet::full(2)).unwrap();
        let a = residual_resample(&d, &fit, &mut substream(9, 2));
        let b = residual_resample(&d, &fit, &mut substream(9, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn full_threshold_centers_on_zero() {
        let d = line_data();
        let fit = FitResult::from_coefficients(&d, array![0.5, -0.1]);
        let mut rng = substream(3, 0);
        let boot = modified_residual_resample(&d, &fit, 10.0, &mut rng);
        // center is zero, so every y* is a draw from centered y
        let yc = d.y.mapv(|v| v - d.y.mean().unwrap());
        for v in boot.y.iter() {
            assert!(yc.iter().any(|r| (r - v).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_threshold_matches_plain_resample() {
        let d = line_data();
        let fit = FitResult::from_coefficients(&d, array![0.5, -0.1]);
        let a = modified_residual_resample(&d, &fit, 0.0, &mut substream(5, 1));
        let b = residual_resample(&d, &fit, &mut substream(5, 1));
        for (u, v) in a.y.iter().zip(b.y.iter()) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn threshold_rule_value() {
        // 100^(-1/3) = 1 / 4.641588833612779
        assert_abs_diff_eq!(threshold_level(100), 0.215_443_469_003_188_4, epsilon = 1e-12);
    }

    #[test]
    fn frequencies_from_models() {
        let m = |v: &[usize]| ModelIndexSet::from_indices(3, v.iter().copied()).unwrap();
        let ens = BootstrapEnsemble::from_models(3, vec![m(&[0, 1]), m(&[0]), m(&[0, 2])]).unwrap();
        assert_eq!(ens.frequencies, vec![1.0, 1.0 / 3.0, 1.0 / 3.0]);
        let one = BootstrapEnsemble::from_models(3, vec![m(&[2])]).unwrap();
        assert_eq!(one.frequencies, vec![0.0, 0.0, 1.0]);
        assert!(BootstrapEnsemble::from_models(3, vec![]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = |v: &[usize]| ModelIndexSet::from_indices(4, v.iter().copied()).unwrap();
        let ens = BootstrapEnsemble::from_models(4, vec![m(&[0, 3]), m(&[])]).unwrap();
        let text = ens.to_json();
        assert!(text.contains("\"B\":2"));
        assert_eq!(BootstrapEnsemble::from_json(&text).unwrap(), ens);
    }

    #[test]
    fn noiseless_signal_is_stable() {
        let mut rng = substream(11, 0);
        let x = Array2::from_shape_fn((60, 5), |_| rng.random::<f64>() - 0.5);
        let y = x.column(0).to_owned() * 3.0 - x.column(1).to_owned() * 2.0;
        let (d, _) = standardize(&Dataset::unnamed(x, y).unwrap()).unwrap();
        let ens = build_ensemble(
            &d,
            &SelectorSpec::adaptive_lasso(),
            10,
            BootstrapMethod::Residual,
            7,
        )
        .unwrap();
        let truth = ModelIndexSet::from_indices(5, [0, 1]).unwrap();
        assert!(ens.models.iter().all(|m| *m == truth));
        assert_eq!(ens.frequencies, vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(ens.agreement_rate(), Some(1.0));
    }
}
