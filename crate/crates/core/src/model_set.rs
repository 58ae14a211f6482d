//! Subsets of predictor indices.
//!
//! A [`ModelIndexSet`] is the common currency for every model in the crate:
//! selected models, bootstrap models, lower and upper bound models and the
//! true model of a simulation. Indices are zero-based column positions.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{McbError, Result};

const WORD: usize = 64;

/// A subset of `{0, .., p-1}` stored as a bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ModelIndexSet {
    p: usize,
    bits: Vec<u64>,
}

impl ModelIndexSet {
    /// The empty model.
    pub fn empty(p: usize) -> Self {
        Self {
            p,
            bits: vec![0; p.div_ceil(WORD)],
        }
    }

    /// The full model `{0, .., p-1}`.
    pub fn full(p: usize) -> Self {
        let mut m = Self::empty(p);
        for j in 0..p {
            m.insert(j);
        }
        m
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(p: usize, indices: I) -> Result<Self> {
        let mut m = Self::empty(p);
        for j in indices {
            if j >= p {
                return Err(McbError::InvalidInput(format!(
                    "predictor index {j} out of range for p = {p}"
                )));
            }
            m.insert(j);
        }
        Ok(m)
    }

    /// Builds a set from the low `p` bits of `mask`. Requires `p <= 64`.
    pub fn from_mask(p: usize, mask: u64) -> Self {
        assert!(p <= WORD, "mask construction needs p <= 64");
        let mut m = Self::empty(p);
        if p > 0 {
            let keep = if p == WORD { u64::MAX } else { (1u64 << p) - 1 };
            m.bits[0] = mask & keep;
        }
        m
    }

    /// Low word of the bitset. Only meaningful for `p <= 64`.
    pub fn mask(&self) -> u64 {
        self.bits.first().copied().unwrap_or(0)
    }

    pub fn ambient_dim(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn contains(&self, j: usize) -> bool {
        j < self.p && (self.bits[j / WORD] >> (j % WORD)) & 1 == 1
    }

    pub fn insert(&mut self, j: usize) {
        assert!(j < self.p, "index {j} out of range for p = {}", self.p);
        self.bits[j / WORD] |= 1 << (j % WORD);
    }

    pub fn remove(&mut self, j: usize) {
        if j < self.p {
            self.bits[j / WORD] &= !(1 << (j % WORD));
        }
    }

    pub fn with(&self, j: usize) -> Self {
        let mut m = self.clone();
        m.insert(j);
        m
    }

    pub fn without(&self, j: usize) -> Self {
        let mut m = self.clone();
        m.remove(j);
        m
    }

    /// Sorted member indices.
    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + t)
                }
            })
        })
    }

    /// Subset test. Both sets must share the ambient dimension.
    pub fn is_subset(&self, other: &Self) -> bool {
        debug_assert_eq!(self.p, other.p);
        self.bits
            .iter()
            .zip(&other.bits)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_superset(&self, other: &Self) -> bool {
        other.is_subset(self)
    }

    pub fn is_proper_subset(&self, other: &Self) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            p: self.p,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self {
            p: self.p,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & !b).collect(),
        }
    }

    /// Relabels every index through `perm`, where `perm[old] = new`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::empty(self.p);
        for j in self.iter() {
            out.insert(perm[j]);
        }
        out
    }

    pub fn check_dim(&self, p: usize) -> Result<()> {
        if self.p == p {
            Ok(())
        } else {
            Err(McbError::DimensionMismatch(self.p, p))
        }
    }

    /// Member names for reporting.
    pub fn names(&self, labels: &[String]) -> Vec<String> {
        self.iter().map(|j| labels[j].clone()).collect()
    }
}

/// Lexicographic order on the sorted index lists, so `{} < {0} < {0,1} < {1}`.
impl Ord for ModelIndexSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.p
            .cmp(&other.p)
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for ModelIndexSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ModelIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}/{}", self.p)
    }
}

/// Lexicographic comparison of two masks read as sorted index lists.
pub(crate) fn cmp_masks_lex(a: u64, b: u64) -> Ordering {
    let (mut a, mut b) = (a, b);
    loop {
        match (a == 0, b == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (ta, tb) = (a.trailing_zeros(), b.trailing_zeros());
        if ta != tb {
            return ta.cmp(&tb);
        }
        a &= a - 1;
        b &= b - 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_membership() {
        let m = ModelIndexSet::from_indices(5, [3, 1, 3]).unwrap();
        assert_eq!(m.indices(), vec![1, 3]);
        assert_eq!(m.len(), 2);
        assert!(m.contains(1) && !m.contains(0));
        assert!(ModelIndexSet::from_indices(5, [5]).is_err());
    }

    #[test]
    fn wide_sets() {
        let m = ModelIndexSet::from_indices(150, [0, 64, 149]).unwrap();
        assert_eq!(m.indices(), vec![0, 64, 149]);
        let full = ModelIndexSet::full(150);
        assert_eq!(full.len(), 150);
        assert!(m.is_subset(&full));
        assert!(!full.is_subset(&m));
    }

    #[test]
    fn lexicographic_order() {
        let e = ModelIndexSet::empty(4);
        let a = ModelIndexSet::from_indices(4, [0]).unwrap();
        let ab = ModelIndexSet::from_indices(4, [0, 1]).unwrap();
        let b = ModelIndexSet::from_indices(4, [1]).unwrap();
        assert!(e < a && a < ab && ab < b);
        for (x, y) in [(&e, &a), (&a, &ab), (&ab, &b), (&b, &e)] {
            assert_eq!(cmp_masks_lex(x.mask(), y.mask()), x.cmp(y));
        }
    }

    #[test]
    fn permutation_relabels() {
        let m = ModelIndexSet::from_indices(3, [0, 2]).unwrap();
        assert_eq!(m.permuted(&[2, 0, 1]).indices(), vec![1, 2]);
    }
}
