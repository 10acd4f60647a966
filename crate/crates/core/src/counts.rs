use num_integer::Integer;

use crate::error::{Error, Result};

/// Column sums of a binary dataset: `sums[i]` rows satisfy predicate `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountVector {
    n: u64,
    sums: Vec<u64>,
}

impl CountVector {
    pub fn new(n: u64, sums: Vec<u64>) -> Result<Self> {
        if sums.is_empty() {
            return Err(Error::Domain(
                "count vector needs at least one query".into(),
            ));
        }
        if let Some((i, s)) = sums.iter().enumerate().find(|(_, s)| **s > n) {
            return Err(Error::Domain(format!("sum[{i}] = {s} exceeds n = {n}")));
        }
        if n > i64::MAX as u64 / 4 {
            return Err(Error::Domain(format!("dataset size {n} too large")));
        }
        Ok(CountVector { n, sums })
    }

    /// Sums of 0/1 rows.
    pub fn from_rows<'a>(d: usize, rows: impl IntoIterator<Item = &'a [bool]>) -> Result<Self> {
        let mut sums = vec![0u64; d];
        let mut n = 0u64;
        for row in rows {
            if row.len() != d {
                return Err(Error::Domain(format!(
                    "row {n} has {} entries, expected {d}",
                    row.len()
                )));
            }
            for (s, bit) in sums.iter_mut().zip(row) {
                *s += u64::from(*bit);
            }
            n += 1;
        }
        CountVector::new(n, sums)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> usize {
        self.sums.len()
    }

    pub fn sums(&self) -> &[u64] {
        &self.sums
    }

    pub(crate) fn sum_i64(&self, i: usize) -> i64 {
        self.sums[i] as i64
    }
}

/// Largest multiple of `k` that is `<= v` (rounds toward negative infinity).
pub fn floor_multiple<T: Integer + Clone>(v: T, k: T) -> T {
    assert!(k > T::zero(), "grid size must be positive");
    v.div_floor(&k) * k
}
