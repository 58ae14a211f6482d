//! Monte Carlo designs for coverage, cardinality and MUC comparisons.
//!
//! Data follow `y = sum_{j <= p*} theta_j x_j + e` with `x ~ N_p(0, Sigma)`,
//! `Sigma_ij = rho^|i-j|` and `theta_j = gamma^j`. Repetition `r` draws its
//! data from substream `r` of the design seed and bootstraps with a seed
//! derived from `(seed, r)`, so results do not depend on thread count.

use std::io::Write;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{build_ensemble, BootstrapEnsemble, BootstrapMethod};
use crate::confidence::{
    amuc, mcb_exhaustive, mcb_ranked, select_final_mcb, Muc, EXHAUSTIVE_LIMIT,
};
use crate::data::{standardize, Dataset};
use crate::error::{McbError, Result};
use crate::model_set::ModelIndexSet;
use crate::rng::{derive_seed, substream};
use crate::selectors::{SelectorKind, SelectorSpec};
use crate::vscs::vscs_levels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorDist {
    Normal,
    /// Laplace with scale `sigma / sqrt(2)`, so the variance is `sigma^2`.
    Laplace,
}

/// Which search builds the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmChoice {
    /// Exhaustive when `p <= 15`, ranked otherwise.
    #[default]
    Auto,
    Exhaustive,
    Ranked,
}

impl AlgorithmChoice {
    pub fn build(self, ens: &BootstrapEnsemble) -> Result<Muc> {
        match self {
            AlgorithmChoice::Exhaustive => mcb_exhaustive(ens),
            AlgorithmChoice::Ranked => Ok(mcb_ranked(ens)),
            AlgorithmChoice::Auto if ens.p() <= EXHAUSTIVE_LIMIT => mcb_exhaustive(ens),
            AlgorithmChoice::Auto => Ok(mcb_ranked(ens)),
        }
    }
}

/// Bootstrap scheme used for a selector unless overridden: modified residual
/// bootstrap for the Lasso, plain residual bootstrap otherwise.
pub fn default_method(kind: SelectorKind) -> BootstrapMethod {
    if kind == SelectorKind::Lasso {
        BootstrapMethod::ModifiedResidual
    } else {
        BootstrapMethod::Residual
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub p_star: usize,
    pub rho: f64,
    /// Coefficient decay, `theta_j = gamma^j`; 1 gives constant coefficients.
    pub gamma: f64,
    pub sigma: f64,
    pub error_dist: ErrorDist,
    #[serde(rename = "B")]
    pub b: usize,
    pub reps: usize,
    pub alpha_grid: Vec<f64>,
    pub selector: SelectorSpec,
    pub method: Option<BootstrapMethod>,
    pub algorithm: AlgorithmChoice,
    pub vscs: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            name: "design".into(),
            n: 100,
            p: 10,
            p_star: 5,
            rho: 0.0,
            gamma: 1.0,
            sigma: 1.0,
            error_dist: ErrorDist::Normal,
            b: 200,
            reps: 200,
            alpha_grid: vec![0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40],
            selector: SelectorSpec::adaptive_lasso(),
            method: None,
            algorithm: AlgorithmChoice::Ranked,
            vscs: false,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(McbError::InvalidInput(m));
        if self.p == 0 || self.p_star > self.p {
            return bad(format!("need 1 <= p and p_star <= p, got p = {}, p_star = {}", self.p, self.p_star));
        }
        if self.n < 2 {
            return bad("n must be at least 2".into());
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.b == 0 || self.reps == 0 {
            return bad("B and reps must be positive".into());
        }
        if let Some(a) = self.alpha_grid.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("alpha {a} outside (0, 1)"));
        }
        self.selector.validate(self.n)
    }

    pub fn coefficients(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.p, |j| {
            if j < self.p_star {
                self.gamma.powi(j as i32 + 1)
            } else {
                0.0
            }
        })
    }

    pub fn truth(&self) -> ModelIndexSet {
        ModelIndexSet::from_indices(self.p, 0..self.p_star).expect("p_star <= p")
    }

    pub fn bootstrap_method(&self) -> BootstrapMethod {
        self.method.unwrap_or_else(|| default_method(self.selector.kind))
    }

    pub fn correlation(&self) -> Array2<f64> {
        power_decay(self.p, self.rho)
    }
}

/// `Sigma_ij = rho^|i-j|`.
pub fn power_decay(p: usize, rho: f64) -> Array2<f64> {
    Array2::from_shape_fn((p, p), |(i, j)| rho.powi(i.abs_diff(j) as i32))
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let p = a.nrows();
    let mut l = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[[i, k]] * l[[j, k]]).sum();
            if i == j {
                let d = a[[i, i]] - s;
                if d <= 0.0 {
                    return Err(McbError::InvalidInput(
                        "covariance is not positive definite".into(),
                    ));
                }
                l[[i, i]] = d.sqrt();
            } else {
                l[[i, j]] = (a[[i, j]] - s) / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Laplace(0, scale) by inverting the CDF at a uniform draw.
fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

/// Raw (unstandardized) dataset for repetition `rep`.
pub fn generate(config: &SimConfig, rep: usize) -> Result<Dataset> {
    let (n, p) = (config.n, config.p);
    let chol = cholesky(&config.correlation())?;
    let mut rng = substream(config.seed, rep as u64);
    let z = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
    let x = z.dot(&chol.t());
    let noise = Array1::from_shape_fn(n, |_| match config.error_dist {
        ErrorDist::Normal => config.sigma * rng.sample::<f64, _>(StandardNormal),
        ErrorDist::Laplace => laplace(&mut rng, config.sigma / 2f64.sqrt()),
    });
    let y = x.dot(&config.coefficients()) + noise;
    Dataset::unnamed(x, y)
}

/// Rates of underfitting, overfitting and exact selection over an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionDiagnostics {
    /// Models missing at least one true predictor.
    pub underfit: f64,
    /// Strict supersets of the truth.
    pub overfit: f64,
    pub exact: f64,
}

pub fn selection_diagnostics(
    ens: &BootstrapEnsemble,
    truth: &ModelIndexSet,
) -> Result<SelectionDiagnostics> {
    truth.check_dim(ens.p())?;
    let (mut under, mut over, mut exact) = (0usize, 0usize, 0usize);
    for m in &ens.models {
        if !truth.is_subset(m) {
            under += 1;
        } else if m == truth {
            exact += 1;
        } else {
            over += 1;
        }
    }
    let b = ens.b() as f64;
    Ok(SelectionDiagnostics {
        underfit: under as f64 / b,
        overfit: over as f64 / b,
        exact: exact as f64 / b,
    })
}

/// One row of the coverage table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub confidence: f64,
    pub method: String,
    pub coverage_rate: f64,
    pub mean_cardinality: f64,
    /// Mean MCB width; `None` for VSCS.
    pub mean_width: Option<f64>,
    /// Fraction of repetitions whose MCB had width 0; `None` for VSCS.
    pub zero_width_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub design: String,
    pub config: SimConfig,
    pub rows: Vec<McRow>,
    /// Curve averaged over repetitions.
    pub mean_cr: Vec<f64>,
    pub mean_amuc: f64,
    pub underfit_rate: f64,
    pub overfit_rate: f64,
    pub exact_rate: f64,
    /// Mean fraction of bootstrap models equal to the original-data model.
    pub agreement_rate: f64,
}

struct RepOutcome {
    mcb: Vec<(bool, f64, usize)>,
    vscs: Vec<(bool, usize)>,
    cr: Vec<f64>,
    amuc: f64,
    diag: SelectionDiagnostics,
    agreement: f64,
}

/// Ensemble and curve for one repetition of a design under `selector`.
fn rep_curve(
    config: &SimConfig,
    data: &Dataset,
    selector: &SelectorSpec,
    method: BootstrapMethod,
    rep: usize,
) -> Result<(BootstrapEnsemble, Muc)> {
    let boot_seed = derive_seed(config.seed, rep as u64);
    let spec = SelectorSpec {
        seed: derive_seed(boot_seed, u64::MAX),
        ..selector.clone()
    };
    let ens = build_ensemble(data, &spec, config.b, method, boot_seed)?;
    let muc = config.algorithm.build(&ens)?;
    Ok((ens, muc))
}

fn run_rep(config: &SimConfig, rep: usize) -> Result<RepOutcome> {
    let raw = generate(config, rep)?;
    let (data, _) = standardize(&raw)?;
    let truth = config.truth();
    let (ens, muc) = rep_curve(config, &data, &config.selector, config.bootstrap_method(), rep)?;
    let mcb = config
        .alpha_grid
        .iter()
        .map(|&a| {
            let pair = select_final_mcb(&muc, a)?;
            let covered = pair.lbm.is_subset(&truth) && truth.is_subset(&pair.ubm);
            Ok((covered, pair.cardinality(), pair.width))
        })
        .collect::<Result<Vec<_>>>()?;
    let vscs = if config.vscs {
        vscs_levels(&data, &config.alpha_grid)?
            .into_iter()
            .map(|v| (v.contains(&truth), v.cardinality))
            .collect()
    } else {
        Vec::new()
    };
    Ok(RepOutcome {
        mcb,
        vscs,
        amuc: amuc(&muc),
        cr: muc.cr,
        diag: selection_diagnostics(&ens, &truth)?,
        agreement: ens.agreement_rate().unwrap_or(0.0),
    })
}

/// Runs every repetition of `config` and aggregates coverage and cardinality.
pub fn run_coverage_experiment(config: &SimConfig) -> Result<McReport> {
    run_coverage_experiment_with(config, |_| {})
}

/// As [`run_coverage_experiment`], calling `on_rep` as each repetition ends.
pub fn run_coverage_experiment_with<F>(config: &SimConfig, on_rep: F) -> Result<McReport>
where
    F: Fn(usize) + Sync,
{
    config.validate()?;
    let outcomes: Vec<Result<RepOutcome>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            let out = run_rep(config, rep).map_err(|e| McbError::RepFailed {
                rep,
                source: Box::new(e),
            });
            on_rep(rep);
            out
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let reps = outcomes.len() as f64;
    let mean = |f: &dyn Fn(&RepOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / reps;

    let mut rows = Vec::new();
    for (i, &alpha) in config.alpha_grid.iter().enumerate() {
        rows.push(McRow {
            confidence: 1.0 - alpha,
            method: "MCB".into(),
            coverage_rate: mean(&|o| o.mcb[i].0 as u8 as f64),
            mean_cardinality: mean(&|o| o.mcb[i].1),
            mean_width: Some(mean(&|o| o.mcb[i].2 as f64)),
            zero_width_rate: Some(mean(&|o| (o.mcb[i].2 == 0) as u8 as f64)),
        });
    }
    if config.vscs {
        for (i, &alpha) in config.alpha_grid.iter().enumerate() {
            rows.push(McRow {
                confidence: 1.0 - alpha,
                method: "VSCS".into(),
                coverage_rate: mean(&|o| o.vscs[i].0 as u8 as f64),
                mean_cardinality: mean(&|o| o.vscs[i].1 as f64),
                mean_width: None,
                zero_width_rate: None,
            });
        }
    }
    let mean_cr = (0..=config.p).map(|w| mean(&|o| o.cr[w])).collect();
    Ok(McReport {
        design: config.name.clone(),
        config: config.clone(),
        rows,
        mean_cr,
        mean_amuc: mean(&|o| o.amuc),
        underfit_rate: mean(&|o| o.diag.underfit),
        overfit_rate: mean(&|o| o.diag.overfit),
        exact_rate: mean(&|o| o.diag.exact),
        agreement_rate: mean(&|o| o.agreement),
    })
}

/// Writes rows `design,rho,gamma,confidence,method,coverage_rate,mean_cardinality,mean_width`.
pub fn write_coverage_csv<W: Write>(reports: &[McReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| McbError::Csv(e.to_string());
    w.write_record([
        "design",
        "rho",
        "gamma",
        "confidence",
        "method",
        "coverage_rate",
        "mean_cardinality",
        "mean_width",
    ])
    .map_err(err)?;
    for r in reports {
        for row in &r.rows {
            w.write_record([
                r.design.clone(),
                r.config.rho.to_string(),
                r.config.gamma.to_string(),
                format!("{:.2}", row.confidence),
                row.method.clone(),
                format!("{:.4}", row.coverage_rate),
                format!("{:.4}", row.mean_cardinality),
                row.mean_width.map(|v| format!("{v:.4}")).unwrap_or_default(),
            ])
            .map_err(err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-selector curve averaged over shared repetitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorCurve {
    pub label: String,
    pub selector: SelectorSpec,
    pub mean_cr: Vec<f64>,
    /// Area under the averaged curve.
    pub amuc: f64,
    /// Mean of the per-repetition areas.
    pub mean_rep_amuc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub design: String,
    pub curves: Vec<SelectorCurve>,
    /// Indices into `curves`, best (largest area) first.
    pub ranking: Vec<usize>,
}

/// Runs each selector on the same simulated datasets and bootstrap seeds.
pub fn compare_selectors(config: &SimConfig, selectors: &[SelectorSpec]) -> Result<CompareReport> {
    config.validate()?;
    if selectors.is_empty() {
        return Err(McbError::InvalidInput("no selectors to compare".into()));
    }
    let per_rep: Vec<Result<Vec<Muc>>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            let (data, _) = standardize(&generate(config, rep)?)?;
            selectors
                .iter()
                .map(|s| {
                    let method = config.method.unwrap_or_else(|| default_method(s.kind));
                    rep_curve(config, &data, s, method, rep).map(|(_, muc)| muc)
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| McbError::RepFailed {
                    rep,
                    source: Box::new(e),
                })
        })
        .collect();
    let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;
    let reps = per_rep.len() as f64;
    let p = config.p as f64;
    let curves: Vec<SelectorCurve> = selectors
        .iter()
        .enumerate()
        .map(|(s, spec)| {
            let mean_cr: Vec<f64> = (0..=config.p)
                .map(|w| per_rep.iter().map(|m| m[s].cr[w]).sum::<f64>() / reps)
                .collect();
            let area = mean_cr
                .windows(2)
                .map(|c| (c[0] + c[1]) / (2.0 * p))
                .sum();
            SelectorCurve {
                label: spec.label(),
                selector: spec.clone(),
                mean_cr,
                amuc: area,
                mean_rep_amuc: per_rep.iter().map(|m| amuc(&m[s])).sum::<f64>() / reps,
            }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..curves.len()).collect();
    ranking.sort_by(|&a, &b| {
        curves[b]
            .amuc
            .partial_cmp(&curves[a].amuc)
            .expect("finite areas")
            .then(a.cmp(&b))
    });
    Ok(CompareReport {
        design: config.name.clone(),
        curves,
        ranking,
    })
}

/// Writes one `w,w_over_p,cr` CSV body for a curve.
pub fn write_muc_csv<W: Write>(cr: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| McbError::Csv(e.to_string());
    w.write_record(["w", "w_over_p", "cr"]).map_err(err)?;
    let p = (cr.len() - 1) as f64;
    for (i, c) in cr.iter().enumerate() {
        w.write_record([i.to_string(), (i as f64 / p).to_string(), c.to_string()])
            .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn set(p: usize, v: &[usize]) -> ModelIndexSet {
        ModelIndexSet::from_indices(p, v.iter().copied()).unwrap()
    }

    #[test]
    fn power_decay_matrix() {
        let s = power_decay(3, 0.5);
        let want = [[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s[[i, j]], want[i][j]);
            }
        }
        let l = cholesky(&s).unwrap();
        let back = l.dot(&l.t());
        for (a, b) in back.iter().zip(s.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn coefficients_follow_decay() {
        let c = SimConfig {
            p: 6,
            p_star: 3,
            gamma: 0.6,
            ..SimConfig::default()
        };
        let th = c.coefficients();
        assert_abs_diff_eq!(th[0], 0.6);
        assert_abs_diff_eq!(th[2], 0.216, epsilon = 1e-15);
        assert_eq!(th[3], 0.0);
        let flat = SimConfig::default().coefficients();
        assert!(flat.iter().take(5).all(|&t| t == 1.0));
    }

    #[test]
    fn independent_columns_are_uncorrelated() {
        let c = SimConfig {
            n: 400,
            p: 4,
            ..SimConfig::default()
        };
        let (d, _) = standardize(&generate(&c, 0).unwrap()).unwrap();
        let bound = 4.0 / (400f64).sqrt();
        for i in 0..4 {
            for j in (i + 1)..4 {
                let r = d.x.column(i).dot(&d.x.column(j)) / 399.0;
                assert!(r.abs() < bound, "corr({i},{j}) = {r}");
            }
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let c = SimConfig::default();
        assert_eq!(generate(&c, 3).unwrap(), generate(&c, 3).unwrap());
        assert_ne!(generate(&c, 3).unwrap(), generate(&c, 4).unwrap());
    }

    #[test]
    fn laplace_variance() {
        let mut rng = substream(5, 0);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| laplace(&mut rng, 2f64.sqrt().recip())).collect();
        let var = draws.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(var, 1.0, epsilon = 0.02);
    }

    #[test]
    fn diagnostics_counts() {
        let truth = set(4, &[0, 1]);
        let all_truth = BootstrapEnsemble::from_models(4, vec![truth.clone(); 3]).unwrap();
        let d = selection_diagnostics(&all_truth, &truth).unwrap();
        assert_eq!((d.underfit, d.overfit, d.exact), (0.0, 0.0, 1.0));
        let over = BootstrapEnsemble::from_models(4, vec![set(4, &[0, 1, 3]); 2]).unwrap();
        let d = selection_diagnostics(&over, &truth).unwrap();
        assert_eq!((d.underfit, d.overfit, d.exact), (0.0, 1.0, 0.0));
        let mixed = BootstrapEnsemble::from_models(
            4,
            vec![set(4, &[0, 1]), set(4, &[0]), set(4, &[0, 1, 2]), set(4, &[1, 2, 3]), set(4, &[])],
        )
        .unwrap();
        let d = selection_diagnostics(&mixed, &truth).unwrap();
        assert_eq!((d.underfit, d.overfit, d.exact), (0.6, 0.2, 0.2));
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { p_star: 11, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { rho: 1.0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { alpha_grid: vec![1.2], ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig::default().validate().is_ok());
    }

    #[test]
    fn config_json_defaults() {
        let c: SimConfig = serde_json::from_str(r#"{"n": 50, "B": 20, "rho": 0.25}"#).unwrap();
        assert_eq!(c.n, 50);
        assert_eq!(c.b, 20);
        assert_eq!(c.p, 10);
        assert_eq!(c.selector.kind, SelectorKind::AdaptiveLasso);
    }
}
