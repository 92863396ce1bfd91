//! Sparse feature vectors over a growing feature space.

use std::collections::BTreeMap;

/// Index/value pairs sorted by index with no stored zeros.
///
/// `dimension_hint` records the size of the feature space the vector was
/// built against; indices are always below it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dimension_hint: usize,
}

impl SparseVector {
    pub fn empty(dimension_hint: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dimension_hint,
        }
    }

    /// Builds a vector from arbitrary pairs. Duplicate indices are summed and
    /// zero results dropped. The dimension hint is raised to cover every
    /// index.
    pub fn from_pairs<I>(pairs: I, dimension_hint: usize) -> Self
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (index, value) in pairs {
            *acc.entry(index).or_insert(0.0) += value;
        }
        let entries: Vec<(usize, f64)> = acc.into_iter().filter(|&(_, v)| v != 0.0).collect();
        let needed = entries.last().map_or(0, |&(i, _)| i + 1);
        SparseVector {
            entries,
            dimension_hint: dimension_hint.max(needed),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dimension_hint(&self) -> usize {
        self.dimension_hint
    }

    /// One past the largest stored index (0 when empty).
    pub fn min_dimension(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i + 1)
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    /// Dot product with a dense vector; indices past its end count as zero.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .filter_map(|&(i, v)| dense.get(i).map(|w| w * v))
            .sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (
            self.entries.iter().peekable(),
            other.entries.iter().peekable(),
        );
        let mut total = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    total += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        total
    }

    /// Multiplies every value by `factor`; a zero factor empties the vector.
    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector::from_pairs(
            self.entries.iter().map(|&(i, v)| (i, v * factor)),
            self.dimension_hint,
        )
    }

    pub fn to_dense(&self, dimension: usize) -> Vec<f64> {
        let mut dense = vec![0.0; dimension.max(self.min_dimension())];
        for &(i, v) in &self.entries {
            dense[i] = v;
        }
        dense
    }
}
