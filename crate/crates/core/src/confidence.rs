//! Model confidence bounds and the model uncertainty curve.
//!
//! For every width `w = |UBM| - |LBM|` the bootstrap coverage rate (BCR) is
//! maximized over nested pairs, either over all pairs ([`mcb_exhaustive`]) or
//! over pairs built from the predictor-importance ranking ([`mcb_ranked`]).
//! The sequence of per-width best pairs is the [`Muc`]; the final bounds at
//! level `1 - alpha` are the narrowest entry that reaches the level.

use serde::{Deserialize, Serialize, Serializer};

use crate::bootstrap::BootstrapEnsemble;
use crate::error::{McbError, Result};
use crate::model_set::{cmp_masks_lex, ModelIndexSet};

/// Largest p accepted by the exhaustive search.
pub const EXHAUSTIVE_LIMIT: usize = 15;
/// Largest width accepted by [`mcs_enumerate`].
pub const MCS_WIDTH_LIMIT: usize = 20;
/// Slack when comparing a coverage rate against `1 - alpha`.
const LEVEL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Exhaustive,
    Ranked,
}

/// Two-sided bounds, or one bound pinned to an extreme model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    #[default]
    TwoSided,
    /// LBM fixed to the empty model.
    LowerEmpty,
    /// UBM fixed to the full model.
    UpperFull,
}

/// A nested pair of lower and upper bound models.
#[derive(Debug, Clone, PartialEq)]
pub struct McbPair {
    pub lbm: ModelIndexSet,
    pub ubm: ModelIndexSet,
    pub width: usize,
    pub bcr: f64,
}

impl McbPair {
    /// Number of models nested between the bounds, `2^width`.
    pub fn cardinality(&self) -> f64 {
        2f64.powi(self.width as i32)
    }
}

/// Per-width best pairs and their coverage rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Muc {
    pub entries: Vec<McbPair>,
    pub cr: Vec<f64>,
    pub p: usize,
    pub algorithm: Algorithm,
    pub sidedness: Sidedness,
    /// Candidate pairs evaluated at each width.
    pub pairs_evaluated: Vec<u64>,
}

impl Muc {
    pub fn total_pairs_evaluated(&self) -> u64 {
        self.pairs_evaluated.iter().sum()
    }
}

/// `(1/B) * #{b : m1 ⊆ m_b ⊆ m2}`.
pub fn bcr(m1: &ModelIndexSet, m2: &ModelIndexSet, ens: &BootstrapEnsemble) -> Result<f64> {
    m1.check_dim(ens.p())?;
    m2.check_dim(ens.p())?;
    if !m1.is_subset(m2) {
        return Err(McbError::NotNested);
    }
    Ok(coverage_count(m1, m2, &ens.models) as f64 / ens.b() as f64)
}

fn coverage_count(m1: &ModelIndexSet, m2: &ModelIndexSet, models: &[ModelIndexSet]) -> usize {
    models
        .iter()
        .filter(|m| m1.is_subset(m) && m.is_subset(m2))
        .count()
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Pairs of width `w` visited by the exhaustive search:
/// `sum_k C(p, k) C(p - k, w)`.
pub fn exhaustive_pair_count(p: usize, w: usize) -> u64 {
    (0..=p.saturating_sub(w))
        .map(|k| binomial(p, k) * binomial(p - k, w))
        .sum()
}

/// Pairs visited by the ranked search over all widths: `(p+1)(p+2)/2`.
pub fn ranked_pair_count(p: usize) -> u64 {
    ((p + 1) * (p + 2) / 2) as u64
}

/// Exhaustive two-sided search.
pub fn mcb_exhaustive(ens: &BootstrapEnsemble) -> Result<Muc> {
    mcb_exhaustive_with(ens, Sidedness::TwoSided)
}

/// Exhaustive search over all nested pairs allowed by `sidedness`.
///
/// A pair is a ternary vector over predictors (out, in both bounds, in the
/// UBM only). Coverage counts for all `3^p` vectors come from a subset-sum
/// pass over the bootstrap model histogram, one predictor at a time.
pub fn mcb_exhaustive_with(ens: &BootstrapEnsemble, sidedness: Sidedness) -> Result<Muc> {
    let p = ens.p();
    if p > EXHAUSTIVE_LIMIT {
        return Err(McbError::TooLarge {
            p,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let pow3: Vec<usize> = (0..=p).map(|j| 3usize.pow(j as u32)).collect();
    let total = pow3[p];
    let mut counts = vec![0u32; total];
    for m in &ens.models {
        let t: usize = m.iter().map(|j| pow3[j]).sum();
        counts[t] += 1;
    }
    for &step in &pow3[..p] {
        for hi in (0..total).step_by(3 * step) {
            for lo in 0..step {
                let base = hi + lo;
                counts[base + 2 * step] = counts[base] + counts[base + step];
            }
        }
    }

    // best (count, m1, m2) per width
    let mut best: Vec<Option<(u32, u64, u64)>> = vec![None; p + 1];
    let mut visited = vec![0u64; p + 1];
    let mut digits = vec![0u8; p];
    let (mut m1, mut m2, mut width, mut ones, mut zeros) = (0u64, 0u64, 0usize, 0usize, p);
    for &count in counts.iter() {
        let allowed = match sidedness {
            Sidedness::TwoSided => true,
            Sidedness::LowerEmpty => ones == 0,
            Sidedness::UpperFull => zeros == 0,
        };
        if allowed {
            visited[width] += 1;
            let better = match best[width] {
                None => true,
                Some((c, b1, b2)) => {
                    count > c
                        || (count == c
                            && cmp_masks_lex(m1, b1)
                                .then_with(|| cmp_masks_lex(m2, b2))
                                .is_lt())
                }
            };
            if better {
                best[width] = Some((count, m1, m2));
            }
        }
        // odometer step to the next ternary vector
        for (j, digit) in digits.iter_mut().enumerate() {
            let bit = 1u64 << j;
            match *digit {
                0 => {
                    *digit = 1;
                    m1 |= bit;
                    m2 |= bit;
                    ones += 1;
                    zeros -= 1;
                    break;
                }
                1 => {
                    *digit = 2;
                    m1 &= !bit;
                    ones -= 1;
                    width += 1;
                    break;
                }
                _ => {
                    *digit = 0;
                    m2 &= !bit;
                    width -= 1;
                    zeros += 1;
                }
            }
        }
    }

    let b = ens.b() as f64;
    let entries: Vec<McbPair> = best
        .into_iter()
        .enumerate()
        .map(|(w, e)| {
            let (c, a, u) = e.expect("every width has a candidate");
            McbPair {
                lbm: ModelIndexSet::from_mask(p, a),
                ubm: ModelIndexSet::from_mask(p, u),
                width: w,
                bcr: c as f64 / b,
            }
        })
        .collect();
    Ok(finish(entries, p, Algorithm::Exhaustive, sidedness, visited))
}

/// Predictors ordered by descending selection frequency, ties by index.
pub fn predictor_ranking(frequencies: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..frequencies.len()).collect();
    order.sort_by(|&a, &b| {
        frequencies[b]
            .partial_cmp(&frequencies[a])
            .expect("frequencies are finite")
            .then(a.cmp(&b))
    });
    order
}

/// Ranked two-sided search.
pub fn mcb_ranked(ens: &BootstrapEnsemble) -> Muc {
    mcb_ranked_with(ens, Sidedness::TwoSided)
}

/// Search over prefix pairs `LBM = {u_1..u_k}`, `UBM = {u_1..u_{k+w}}` of the
/// importance ranking.
pub fn mcb_ranked_with(ens: &BootstrapEnsemble, sidedness: Sidedness) -> Muc {
    let p = ens.p();
    let order = predictor_ranking(&ens.frequencies);
    let mut position = vec![0usize; p];
    for (pos, &j) in order.iter().enumerate() {
        position[j] = pos;
    }
    // For each model: the longest ranking prefix it contains, and one past
    // the lowest-ranked member. m1(k) ⊆ m ⊆ m2(k, w) iff k <= prefix and
    // reach <= k + w.
    let spans: Vec<(usize, usize)> = ens
        .models
        .iter()
        .map(|m| {
            let prefix = order.iter().take_while(|&&j| m.contains(j)).count();
            let reach = m.iter().map(|j| position[j] + 1).max().unwrap_or(0);
            (prefix, reach)
        })
        .collect();

    let prefix_set = |len: usize| {
        ModelIndexSet::from_indices(p, order[..len].iter().copied()).expect("in range")
    };
    let b = ens.b() as f64;
    let mut visited = vec![0u64; p + 1];
    let mut entries = Vec::with_capacity(p + 1);
    for (w, visits) in visited.iter_mut().enumerate() {
        let ks: Vec<usize> = match sidedness {
            Sidedness::TwoSided => (0..=p - w).collect(),
            Sidedness::LowerEmpty => vec![0],
            Sidedness::UpperFull => vec![p - w],
        };
        let mut best: Option<(usize, usize)> = None;
        for k in ks {
            *visits += 1;
            let count = spans
                .iter()
                .filter(|&&(prefix, reach)| k <= prefix && reach <= k + w)
                .count();
            if best.is_none_or(|(c, _)| count > c) {
                best = Some((count, k));
            }
        }
        let (count, k) = best.expect("at least one k");
        entries.push(McbPair {
            lbm: prefix_set(k),
            ubm: prefix_set(k + w),
            width: w,
            bcr: count as f64 / b,
        });
    }
    finish(entries, p, Algorithm::Ranked, sidedness, visited)
}

fn finish(
    entries: Vec<McbPair>,
    p: usize,
    algorithm: Algorithm,
    sidedness: Sidedness,
    pairs_evaluated: Vec<u64>,
) -> Muc {
    let cr = entries.iter().map(|e| e.bcr).collect();
    Muc {
        entries,
        cr,
        p,
        algorithm,
        sidedness,
        pairs_evaluated,
    }
}

/// The narrowest entry whose coverage rate reaches `1 - alpha`.
pub fn select_final_mcb(muc: &Muc, alpha: f64) -> Result<McbPair> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(McbError::InvalidInput(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let level = 1.0 - alpha;
    let w = muc
        .cr
        .iter()
        .position(|&c| c >= level - LEVEL_EPS)
        .unwrap_or(muc.p);
    Ok(muc.entries[w].clone())
}

/// All `2^width` models nested between the bounds.
pub fn mcs_enumerate(pair: &McbPair) -> Result<Vec<ModelIndexSet>> {
    if !pair.lbm.is_subset(&pair.ubm) {
        return Err(McbError::NotNested);
    }
    let free = pair.ubm.difference(&pair.lbm).indices();
    if free.len() > MCS_WIDTH_LIMIT {
        return Err(McbError::WidthTooLarge {
            width: free.len(),
            limit: MCS_WIDTH_LIMIT,
        });
    }
    Ok((0u32..1 << free.len())
        .map(|mask| {
            let mut m = pair.lbm.clone();
            for (i, &j) in free.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    m.insert(j);
                }
            }
            m
        })
        .collect())
}

/// Curve points `(w/p, CR(w))`.
pub fn muc_points(muc: &Muc) -> Vec<(f64, f64)> {
    let p = muc.p as f64;
    muc.cr
        .iter()
        .enumerate()
        .map(|(w, &c)| (w as f64 / p, c))
        .collect()
}

/// Trapezoidal area under the curve.
pub fn amuc(muc: &Muc) -> f64 {
    let pts = muc_points(muc);
    pts.windows(2)
        .map(|s| (s[1].0 - s[0].0) * (s[0].1 + s[1].1) / 2.0)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MucPoint {
    pub w: usize,
    pub w_over_p: f64,
    pub cr: f64,
}

/// Machine-readable summary of a final MCB and its curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McbReport {
    pub alpha: f64,
    pub algorithm: Algorithm,
    pub width: usize,
    pub lbm: Vec<String>,
    pub ubm: Vec<String>,
    pub bcr: f64,
    #[serde(serialize_with = "integral_f64")]
    pub cardinality: f64,
    pub muc: Vec<MucPoint>,
    pub amuc: f64,
}

impl McbReport {
    pub fn new(muc: &Muc, alpha: f64, names: &[String]) -> Result<Self> {
        let pair = select_final_mcb(muc, alpha)?;
        Ok(Self {
            alpha,
            algorithm: muc.algorithm,
            width: pair.width,
            lbm: pair.lbm.names(names),
            ubm: pair.ubm.names(names),
            bcr: pair.bcr,
            cardinality: pair.cardinality(),
            muc: muc_points(muc)
                .into_iter()
                .enumerate()
                .map(|(w, (x, cr))| MucPoint { w, w_over_p: x, cr })
                .collect(),
            amuc: amuc(muc),
        })
    }
}

fn integral_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *v < 9.0e15 {
        s.serialize_u64(*v as u64)
    } else {
        s.serialize_f64(*v)
    }
}
