//! Observations with per-dimension order statistics.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One coordinate of the data together with its sort order.
#[derive(Debug, Clone, PartialEq)]
pub struct Column<T> {
    values: Vec<T>,
    /// `order[r]` is the observation holding rank `r` (stable under ties).
    order: Vec<usize>,
    /// `rank[i]` is the rank of observation `i`.
    rank: Vec<usize>,
    sorted: Vec<T>,
}

impl<T: Real> Column<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!("observation {i} is {v}")));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
        let mut rank = vec![0; values.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let sorted = order.iter().map(|&i| values[i]).collect();
        Ok(Self { values, order, rank, sorted })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    #[inline]
    pub fn rank(&self) -> &[usize] {
        &self.rank
    }

    /// Order statistics, ascending.
    #[inline]
    pub fn sorted(&self) -> &[T] {
        &self.sorted
    }

    /// Number of observations strictly below `x`: the index of the gap between
    /// order statistics that contains `x`.
    pub fn gap_of(&self, x: T) -> usize {
        self.sorted.partition_point(|&v| v < x)
    }

    /// Sample median; with an even count the midpoint of the two central values.
    pub fn median(&self) -> Option<T> {
        let n = self.sorted.len();
        match n {
            0 => None,
            _ if n % 2 == 1 => Some(self.sorted[n / 2]),
            _ => Some((self.sorted[n / 2 - 1] + self.sorted[n / 2]) * T::lit(0.5)),
        }
    }

    /// A starting value for the mode: the median, moved off the data if it
    /// coincides with an observation so that every `y - kappa` is non-zero.
    pub fn interior_median(&self) -> Option<T> {
        let m = self.median()?;
        if !self.sorted.contains(&m) {
            return Some(m);
        }
        let above = self.sorted.iter().copied().find(|&v| v > m);
        let below = self.sorted.iter().rev().copied().find(|&v| v < m);
        Some(match (below, above) {
            (_, Some(a)) => (m + a) * T::lit(0.5),
            (Some(b), None) => (m + b) * T::lit(0.5),
            (None, None) => m + T::one(),
        })
    }
}

/// `n` observations in `dim` dimensions, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    columns: Vec<Column<T>>,
}

impl<T: Real> Dataset<T> {
    pub fn new(columns: Vec<Vec<T>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Empty("dataset has no columns".into()));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::Empty("dataset has no observations".into()));
        }
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidParameter("columns differ in length".into()));
        }
        Ok(Self { columns: columns.into_iter().map(Column::new).collect::<Result<_>>()? })
    }

    pub fn univariate(values: Vec<T>) -> Result<Self> {
        Self::new(vec![values])
    }

    pub fn bivariate(first: Vec<T>, second: Vec<T>) -> Result<Self> {
        Self::new(vec![first, second])
    }

    /// Builds a bivariate dataset from observation pairs.
    pub fn from_pairs(pairs: &[[T; 2]]) -> Result<Self> {
        Self::bivariate(pairs.iter().map(|p| p[0]).collect(), pairs.iter().map(|p| p[1]).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.columns[0].is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn column(&self, l: usize) -> &Column<T> {
        &self.columns[l]
    }

    pub fn columns(&self) -> &[Column<T>] {
        &self.columns
    }
}
