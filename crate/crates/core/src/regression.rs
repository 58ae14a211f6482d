//! Least-squares fits on predictor subsets.

use ndarray::{Array1, ArrayView1};

use crate::data::Dataset;
use crate::error::{McbError, Result};
use crate::model_set::ModelIndexSet;

/// Relative tolerance on the diagonal of R below which a fit is declared
/// rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A fitted (sub)model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Length p; zero off the support.
    pub coefficients: Array1<f64>,
    pub support: ModelIndexSet,
    pub residuals: Array1<f64>,
    pub rss: f64,
    /// Residual standard error with `n - |support|` degrees of freedom.
    pub sigma_hat: f64,
    /// Set when `n == |support|`, in which case `sigma_hat` is 0.
    pub degenerate: bool,
}

impl FitResult {
    /// Builds a result from coefficients, recomputing residuals against `data`.
    pub fn from_coefficients(data: &Dataset, coefficients: Array1<f64>) -> Self {
        let p = data.p();
        let support =
            ModelIndexSet::from_indices(p, (0..p).filter(|&j| coefficients[j] != 0.0))
                .expect("indices in range");
        let residuals = &data.y - &data.x.dot(&coefficients);
        let rss = residuals.dot(&residuals);
        let n = data.n();
        let k = support.len();
        let (sigma_hat, degenerate) = if n > k {
            ((rss / (n - k) as f64).sqrt(), false)
        } else {
            (0.0, true)
        };
        Self {
            coefficients,
            support,
            residuals,
            rss,
            sigma_hat,
            degenerate,
        }
    }

    pub fn fitted(&self, data: &Dataset) -> Array1<f64> {
        &data.y - &self.residuals
    }
}

/// Ordinary least squares of `y` on the columns in `support`, without an
/// intercept. Solved by Householder QR.
pub fn fit_ols(data: &Dataset, support: &ModelIndexSet) -> Result<FitResult> {
    support.check_dim(data.p())?;
    let n = data.n();
    let cols = support.indices();
    let k = cols.len();
    if k > n {
        return Err(McbError::InvalidInput(format!(
            "support of size {k} exceeds n = {n}"
        )));
    }
    let mut coefficients = Array1::zeros(data.p());
    if k > 0 {
        let mut a = Vec::with_capacity(n * k);
        for &j in &cols {
            a.extend(data.x.column(j).iter());
        }
        let beta = qr_solve(&mut a, n, k, data.y.view())?;
        for (&j, b) in cols.iter().zip(beta) {
            coefficients[j] = b;
        }
    }
    let residuals = &data.y - &data.x.dot(&coefficients);
    let rss = residuals.dot(&residuals);
    let (sigma_hat, degenerate) = if n > k {
        ((rss / (n - k) as f64).sqrt(), false)
    } else {
        (0.0, true)
    };
    Ok(FitResult {
        coefficients,
        support: support.clone(),
        residuals,
        rss,
        sigma_hat,
        degenerate,
    })
}

/// Residual sum of squares of the OLS fit on `support`.
pub fn rss(data: &Dataset, support: &ModelIndexSet) -> Result<f64> {
    Ok(fit_ols(data, support)?.rss)
}

/// Solves min ||A b - y|| for column-major `a` (n x k, overwritten).
fn qr_solve(a: &mut [f64], n: usize, k: usize, y: ArrayView1<f64>) -> Result<Vec<f64>> {
    let mut qty: Vec<f64> = y.to_vec();
    let mut diag = vec![0.0; k];
    for c in 0..k {
        let col = &mut a[c * n..(c + 1) * n];
        let norm = col[c..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag[c] = 0.0;
            continue;
        }
        let alpha = if col[c] > 0.0 { -norm } else { norm };
        // v = x - alpha e1, stored in place
        col[c] -= alpha;
        let vnorm2: f64 = col[c..].iter().map(|v| v * v).sum();
        diag[c] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        let v: Vec<f64> = col[c..].to_vec();
        for c2 in (c + 1)..k {
            let other = &mut a[c2 * n + c..(c2 + 1) * n];
            let s = 2.0 * dot(&v, other) / vnorm2;
            for (o, vi) in other.iter_mut().zip(&v) {
                *o -= s * vi;
            }
        }
        let s = 2.0 * dot(&v, &qty[c..]) / vnorm2;
        for (q, vi) in qty[c..].iter_mut().zip(&v) {
            *q -= s * vi;
        }
    }
    let max_diag = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if max_diag == 0.0 || diag.iter().any(|d| d.abs() < RANK_TOLERANCE * max_diag) {
        return Err(McbError::RankDeficient);
    }
    // back substitution on R (upper triangle of a, diagonal in `diag`)
    let mut beta = vec![0.0; k];
    for r in (0..k).rev() {
        let mut s = qty[r];
        for c in (r + 1)..k {
            s -= a[c * n + r] * beta[c];
        }
        beta[r] = s / diag[r];
    }
    Ok(beta)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
