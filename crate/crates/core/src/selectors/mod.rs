//! Variable selection methods: Lasso, Adaptive Lasso, SCAD and MCP by
//! coordinate descent, and stepwise search under an information criterion.
//!
//! Every selector works on a centered copy of its input, which plays the role
//! of an unpenalized intercept. Residuals in the returned [`FitResult`] are
//! relative to the centered response.

mod cv;
pub mod penalized;
mod stepwise;

use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{McbError, Result};
use crate::model_set::ModelIndexSet;
use crate::regression::{fit_ols, FitResult};

pub use cv::{cross_validate_lambda, cross_validate_on_grid, fold_assignment, CvResult};
pub use penalized::{lambda_grid, Penalty, Problem};
pub use stepwise::{information_criterion, stepwise_ic};

/// OLS coefficients smaller than this get an infinite adaptive weight.
pub const ADAPTIVE_ZERO: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    Lasso,
    AdaptiveLasso,
    Scad,
    Mcp,
    StepwiseIc,
}

impl SelectorKind {
    pub fn is_penalized(self) -> bool {
        !matches!(self, SelectorKind::StepwiseIc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaPolicy {
    Fixed(f64),
    CrossValidated,
}

/// The `C_n` term of the information criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcPenalty {
    Aic,
    Bic,
    Custom(f64),
}

impl IcPenalty {
    pub fn c_n(self, n: usize) -> f64 {
        match self {
            IcPenalty::Aic => 2.0,
            IcPenalty::Bic => (n as f64).ln(),
            IcPenalty::Custom(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorSpec {
    pub kind: SelectorKind,
    pub lambda: LambdaPolicy,
    pub ic_penalty: IcPenalty,
    pub adaptive_gamma: f64,
    pub scad_a: f64,
    pub mcp_gamma: f64,
    pub cv_folds: usize,
    pub seed: u64,
}

impl Default for SelectorSpec {
    fn default() -> Self {
        Self {
            kind: SelectorKind::AdaptiveLasso,
            lambda: LambdaPolicy::CrossValidated,
            ic_penalty: IcPenalty::Bic,
            adaptive_gamma: 1.0,
            scad_a: 3.7,
            mcp_gamma: 3.0,
            cv_folds: 10,
            seed: 0,
        }
    }
}

impl SelectorSpec {
    pub fn new(kind: SelectorKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn lasso() -> Self {
        Self::new(SelectorKind::Lasso)
    }

    pub fn adaptive_lasso() -> Self {
        Self::new(SelectorKind::AdaptiveLasso)
    }

    pub fn scad() -> Self {
        Self::new(SelectorKind::Scad)
    }

    pub fn mcp() -> Self {
        Self::new(SelectorKind::Mcp)
    }

    pub fn stepwise(ic: IcPenalty) -> Self {
        Self {
            ic_penalty: ic,
            ..Self::new(SelectorKind::StepwiseIc)
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = LambdaPolicy::Fixed(lambda);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn label(&self) -> String {
        match self.kind {
            SelectorKind::Lasso => "lasso".into(),
            SelectorKind::AdaptiveLasso => "adaptive_lasso".into(),
            SelectorKind::Scad => "scad".into(),
            SelectorKind::Mcp => "mcp".into(),
            SelectorKind::StepwiseIc => match self.ic_penalty {
                IcPenalty::Aic => "stepwise_aic".into(),
                IcPenalty::Bic => "stepwise_bic".into(),
                IcPenalty::Custom(c) => format!("stepwise_ic_{c}"),
            },
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(McbError::InvalidInput(m));
        if self.kind.is_penalized() {
            match self.lambda {
                LambdaPolicy::Fixed(l) if !(l >= 0.0 && l.is_finite()) => {
                    return bad(format!("lambda must be finite and >= 0, got {l}"))
                }
                LambdaPolicy::CrossValidated if self.cv_folds < 2 || self.cv_folds > n => {
                    return bad(format!("cv_folds must lie in [2, {n}], got {}", self.cv_folds))
                }
                _ => {}
            }
        }
        if self.scad_a <= 2.0 {
            return bad(format!("scad_a must exceed 2, got {}", self.scad_a));
        }
        if self.mcp_gamma <= 1.0 {
            return bad(format!("mcp_gamma must exceed 1, got {}", self.mcp_gamma));
        }
        if self.adaptive_gamma.is_nan() || self.adaptive_gamma <= 0.0 {
            return bad("adaptive_gamma must be positive".into());
        }
        if let IcPenalty::Custom(c) = self.ic_penalty {
            if !(c >= 0.0 && c.is_finite()) {
                return bad(format!("IC penalty must be finite and >= 0, got {c}"));
            }
        }
        Ok(())
    }
}

/// A selected model with the estimate that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub model: ModelIndexSet,
    /// The penalized estimate, or the OLS refit for stepwise search.
    pub fit: FitResult,
    /// Tuning parameter used, for penalized kinds.
    pub lambda: Option<f64>,
}

/// Column-centered copy of `data`.
pub fn center(data: &Dataset) -> Dataset {
    let x_mean = data.x.mean_axis(Axis(0)).expect("n >= 2");
    let y_mean = data.y.mean().expect("n >= 2");
    let mut out = data.clone();
    out.x -= &x_mean.insert_axis(Axis(0));
    out.y -= y_mean;
    out
}

/// Penalty function and per-predictor weights for a penalized kind.
#[derive(Debug, Clone)]
pub(crate) struct PenaltySetup {
    pub penalty: Penalty,
    pub weights: Vec<f64>,
}

pub(crate) fn penalty_setup(centered: &Dataset, spec: &SelectorSpec) -> Result<PenaltySetup> {
    let p = centered.p();
    let unit = vec![1.0; p];
    Ok(match spec.kind {
        SelectorKind::Lasso => PenaltySetup {
            penalty: Penalty::L1,
            weights: unit,
        },
        SelectorKind::Scad => PenaltySetup {
            penalty: Penalty::Scad { a: spec.scad_a },
            weights: unit,
        },
        SelectorKind::Mcp => PenaltySetup {
            penalty: Penalty::Mcp {
                gamma: spec.mcp_gamma,
            },
            weights: unit,
        },
        SelectorKind::AdaptiveLasso => {
            let ols = fit_ols(centered, &ModelIndexSet::full(p))?;
            PenaltySetup {
                penalty: Penalty::L1,
                weights: adaptive_weights(&ols.coefficients, spec.adaptive_gamma),
            }
        }
        SelectorKind::StepwiseIc => unreachable!("stepwise search has no penalty"),
    })
}

/// `w_j = 1 / |b_j|^gamma`, infinite for numerically zero `b_j`.
pub fn adaptive_weights(initial: &Array1<f64>, gamma: f64) -> Vec<f64> {
    initial
        .iter()
        .map(|b| {
            if b.abs() < ADAPTIVE_ZERO {
                f64::INFINITY
            } else {
                b.abs().powf(-gamma)
            }
        })
        .collect()
}

/// Penalized estimate at a fixed lambda with explicit weights.
pub fn fit_penalized(
    data: &Dataset,
    penalty: Penalty,
    weights: &[f64],
    lambda: f64,
) -> Result<FitResult> {
    let centered = center(data);
    let problem = Problem::from_dataset(&centered);
    let grid = lambda_grid(problem.lambda_max(weights));
    let beta = penalized::solve_at(&problem, penalty, weights, &grid, lambda)?;
    Ok(FitResult::from_coefficients(&centered, beta))
}

/// Applies the selector to `data`.
pub fn select(data: &Dataset, spec: &SelectorSpec) -> Result<Selection> {
    spec.validate(data.n())?;
    let centered = center(data);
    if spec.kind == SelectorKind::StepwiseIc {
        let model = stepwise_ic(&centered, spec.ic_penalty.c_n(data.n()))?;
        let fit = fit_ols(&centered, &model)?;
        return Ok(Selection {
            model,
            fit,
            lambda: None,
        });
    }
    let setup = penalty_setup(&centered, spec)?;
    let problem = Problem::from_dataset(&centered);
    let grid = lambda_grid(problem.lambda_max(&setup.weights));
    let lambda = match spec.lambda {
        LambdaPolicy::Fixed(l) => l,
        LambdaPolicy::CrossValidated => {
            cv::cross_validate_setup(&centered, spec, &setup, &grid)?.chosen
        }
    };
    let beta = penalized::solve_at(&problem, setup.penalty, &setup.weights, &grid, lambda)?;
    let fit = FitResult::from_coefficients(&centered, beta);
    Ok(Selection {
        model: fit.support.clone(),
        fit,
        lambda: Some(lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand_distr::StandardNormal;

    use crate::data::standardize;
    use crate::rng::substream;

    fn random_data(n: usize, p: usize, seed: u64, signal: &[f64]) -> Dataset {
        let mut rng = substream(seed, 0);
        let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
        let mut y = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
        for (j, &b) in signal.iter().enumerate() {
            y.scaled_add(b, &x.column(j));
        }
        standardize(&Dataset::unnamed(x, y).unwrap()).unwrap().0
    }

    #[test]
    fn lasso_zero_lambda_is_ols() {
        let d = random_data(60, 4, 1, &[1.0, -0.5, 0.0, 0.3]);
        let sel = select(&d, &SelectorSpec::lasso().with_lambda(0.0)).unwrap();
        let ols = fit_ols(&center(&d), &ModelIndexSet::full(4)).unwrap();
        assert_eq!(sel.model, ModelIndexSet::full(4));
        for j in 0..4 {
            assert_abs_diff_eq!(sel.fit.coefficients[j], ols.coefficients[j], epsilon = 1e-6);
        }
    }

    #[test]
    fn lasso_lambda_max_gives_empty_model() {
        let d = random_data(50, 5, 2, &[1.0, 1.0]);
        let lmax = d.x.t().dot(&d.y).iter().fold(0.0f64, |m, v| m.max(v.abs())) / 50.0;
        let sel = select(&d, &SelectorSpec::lasso().with_lambda(lmax)).unwrap();
        assert!(sel.model.is_empty());
        let sel = select(&d, &SelectorSpec::lasso().with_lambda(lmax * 1.5)).unwrap();
        assert!(sel.model.is_empty());
    }

    #[test]
    fn orthonormal_design_soft_thresholds() {
        // Columns orthogonal with ||x_j||^2 = n, so the Lasso solution is the
        // soft-thresholded OLS coefficient.
        let x = array![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0]
        ];
        let y = array![2.0, 0.5, -1.0, -1.5];
        let d = Dataset::unnamed(x.clone(), y.clone()).unwrap();
        let lambda = 0.4;
        let sel = select(&d, &SelectorSpec::lasso().with_lambda(lambda)).unwrap();
        let yc = &y - y.mean().unwrap();
        for j in 0..3 {
            let ols = x.column(j).dot(&yc) / 4.0;
            let expect = penalized::soft_threshold(ols, lambda);
            assert_abs_diff_eq!(sel.fit.coefficients[j], expect, epsilon = 1e-8);
        }
    }

    #[test]
    fn adaptive_with_unit_weights_is_lasso() {
        let d = random_data(80, 6, 3, &[1.0, 0.0, 0.5]);
        let lasso = fit_penalized(&d, Penalty::L1, &[1.0; 6], 0.05).unwrap();
        let sel = select(&d, &SelectorSpec::lasso().with_lambda(0.05)).unwrap();
        assert_eq!(lasso.coefficients, sel.fit.coefficients);
    }

    #[test]
    fn adaptive_weights_rule() {
        let w = adaptive_weights(&array![2.0, -0.5, 1e-9], 1.0);
        assert_eq!(w[0], 0.5);
        assert_eq!(w[1], 2.0);
        assert!(w[2].is_infinite());
    }

    #[test]
    fn spec_validation() {
        assert!(SelectorSpec::lasso().with_lambda(-1.0).validate(10).is_err());
        let mut s = SelectorSpec::scad();
        s.scad_a = 2.0;
        assert!(s.validate(10).is_err());
        let mut s = SelectorSpec::mcp();
        s.mcp_gamma = 1.0;
        assert!(s.validate(10).is_err());
        let mut s = SelectorSpec::lasso();
        s.cv_folds = 11;
        assert!(s.validate(10).is_err());
        assert!(SelectorSpec::stepwise(IcPenalty::Bic).validate(3).is_ok());
    }

    #[test]
    fn scad_and_mcp_find_strong_signal() {
        let d = random_data(200, 6, 4, &[2.0, 0.0, -2.0]);
        for spec in [SelectorSpec::scad(), SelectorSpec::mcp(), SelectorSpec::adaptive_lasso()] {
            let sel = select(&d, &spec).unwrap();
            assert!(sel.model.contains(0) && sel.model.contains(2), "{}", spec.label());
        }
    }

    #[test]
    fn spec_serde_round_trip() {
        let s = SelectorSpec::stepwise(IcPenalty::Custom(3.5)).with_seed(9);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SelectorSpec>(&text).unwrap(), s);
        let partial: SelectorSpec = serde_json::from_str(r#"{"kind":"lasso","lambda":{"fixed":0.1}}"#).unwrap();
        assert_eq!(partial.lambda, LambdaPolicy::Fixed(0.1));
        assert_eq!(partial.cv_folds, 10);
    }
}
