//! K-fold cross-validation of the penalty level.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::penalized::{solve_path, Problem};
use super::{center, lambda_grid, penalty_setup, PenaltySetup, SelectorSpec};
use crate::data::Dataset;
use crate::error::{McbError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    /// Mean out-of-fold squared error per lambda.
    pub mean_error: Vec<f64>,
    pub chosen: f64,
}

/// Fold label for each observation: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 || folds > n {
        return Err(McbError::InvalidInput(format!(
            "cv_folds must lie in [2, {n}], got {folds}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut label = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        label[i] = pos % folds;
    }
    for fold in 0..folds {
        let size = label.iter().filter(|&&l| l == fold).count();
        if size < 2 {
            return Err(McbError::FoldTooSmall { fold, size });
        }
    }
    Ok(label)
}

/// Chooses lambda from the standard grid by strict minimum CV error.
pub fn cross_validate_lambda(data: &Dataset, spec: &SelectorSpec) -> Result<f64> {
    spec.validate(data.n())?;
    if !spec.kind.is_penalized() {
        return Err(McbError::InvalidInput(
            "cross-validation applies to penalized selectors only".into(),
        ));
    }
    let centered = center(data);
    let setup = penalty_setup(&centered, spec)?;
    let grid = lambda_grid(Problem::from_dataset(&centered).lambda_max(&setup.weights));
    Ok(cross_validate_setup(&centered, spec, &setup, &grid)?.chosen)
}

/// Cross-validation over a caller-supplied descending grid.
pub fn cross_validate_on_grid(
    data: &Dataset,
    spec: &SelectorSpec,
    grid: &[f64],
) -> Result<CvResult> {
    let centered = center(data);
    let setup = penalty_setup(&centered, spec)?;
    cross_validate_setup(&centered, spec, &setup, grid)
}

pub(crate) fn cross_validate_setup(
    data: &Dataset,
    spec: &SelectorSpec,
    setup: &PenaltySetup,
    grid: &[f64],
) -> Result<CvResult> {
    let n = data.n();
    let labels = fold_assignment(n, spec.cv_folds, spec.seed)?;
    let mut sse = vec![0.0; grid.len()];
    for fold in 0..spec.cv_folds {
        let train: Vec<usize> = (0..n).filter(|&i| labels[i] != fold).collect();
        let test: Vec<usize> = (0..n).filter(|&i| labels[i] == fold).collect();
        let x_tr = data.x.select(Axis(0), &train);
        let y_tr = data.y.select(Axis(0), &train);
        let x_mean = x_tr.mean_axis(Axis(0)).expect("nonempty fold");
        let y_mean = y_tr.mean().expect("nonempty fold");
        let xc: Array2<f64> = &x_tr - &x_mean.view().insert_axis(Axis(0));
        let yc: Array1<f64> = &y_tr - y_mean;
        let problem = Problem::new(&xc, &yc);
        let path = solve_path(&problem, setup.penalty, &setup.weights, grid)?;
        let x_te = data.x.select(Axis(0), &test) - x_mean.view().insert_axis(Axis(0));
        let y_te = data.y.select(Axis(0), &test);
        for (k, beta) in path.iter().enumerate() {
            let pred = x_te.dot(beta) + y_mean;
            sse[k] += (&y_te - &pred).mapv(|r| r * r).sum();
        }
    }
    let mean_error: Vec<f64> = sse.iter().map(|s| s / n as f64).collect();
    let best = mean_error
        .iter()
        .enumerate()
        .fold(0, |b, (k, &e)| if e < mean_error[b] { k } else { b });
    Ok(CvResult {
        lambdas: grid.to_vec(),
        mean_error,
        chosen: grid[best],
    })
}
