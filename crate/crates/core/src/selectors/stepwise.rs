//! Bidirectional stepwise search under `IC(m) = log(RSS_m / n) + |m| C_n / n`.

use crate::data::Dataset;
use crate::error::Result;
use crate::model_set::ModelIndexSet;
use crate::regression::fit_ols;

/// RSS values below this fraction of `||y||^2` are treated as exact fits.
pub const RSS_FLOOR: f64 = 1e-12;

/// Information criterion of `model`, or `None` when the fit is not possible.
pub fn information_criterion(data: &Dataset, model: &ModelIndexSet, c_n: f64) -> Option<f64> {
    let n = data.n();
    if model.len() >= n {
        return None;
    }
    let rss = fit_ols(data, model).ok()?.rss;
    Some(ic_value(rss, data.y.dot(&data.y), n, model.len(), c_n))
}

pub(crate) fn ic_value(rss: f64, yy: f64, n: usize, k: usize, c_n: f64) -> f64 {
    let floor = RSS_FLOOR * yy.max(f64::MIN_POSITIVE);
    let nf = n as f64;
    (rss.max(floor) / nf).ln() + k as f64 * c_n / nf
}

/// Starts from the empty model; each step takes the single addition or
/// deletion with the largest IC decrease (ties to the smallest index) and
/// stops when no move decreases IC.
pub fn stepwise_ic(data: &Dataset, c_n: f64) -> Result<ModelIndexSet> {
    let p = data.p();
    let mut current = ModelIndexSet::empty(p);
    let mut current_ic = information_criterion(data, &current, c_n)
        .expect("empty model always fits");
    loop {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..p {
            let candidate = if current.contains(j) {
                current.without(j)
            } else {
                current.with(j)
            };
            if let Some(ic) = information_criterion(data, &candidate, c_n) {
                if best.is_none_or(|(b, _)| ic < b) {
                    best = Some((ic, j));
                }
            }
        }
        match best {
            Some((ic, j)) if ic < current_ic => {
                current = if current.contains(j) {
                    current.without(j)
                } else {
                    current.with(j)
                };
                current_ic = ic;
            }
            _ => return Ok(current),
        }
    }
}
