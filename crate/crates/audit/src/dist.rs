use std::collections::BTreeMap;

use meterdp::{Dyadic, IntervalValue};

/// Precision of oracle arithmetic.
pub const ORACLE_PRECISION: i64 = 80;

/// A finite law with interval-valued masses. Mass outside the support is
/// bounded by `deficit`.
#[derive(Clone, Debug)]
pub struct DiscreteDist<K: Ord> {
    mass: BTreeMap<K, IntervalValue>,
    deficit: Dyadic,
}

impl<K: Ord + Clone> DiscreteDist<K> {
    pub fn new(mass: BTreeMap<K, IntervalValue>, deficit: Dyadic) -> Self {
        DiscreteDist { mass, deficit }
    }

    /// Law with exactly known rational-free masses, e.g. `[(0, 1/2), (1, 1/2)]`
    /// given as dyadics.
    pub fn from_points(points: impl IntoIterator<Item = (K, IntervalValue)>) -> Self {
        let mut mass = BTreeMap::new();
        for (k, p) in points {
            accumulate(&mut mass, k, &p);
        }
        DiscreteDist {
            mass,
            deficit: Dyadic::zero(),
        }
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.mass.keys()
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self, k: &K) -> Option<&IntervalValue> {
        self.mass.get(k)
    }

    /// Midpoint probability of `k`, zero off the support.
    pub fn prob(&self, k: &K) -> f64 {
        self.mass.get(k).map_or(0.0, IntervalValue::mid_f64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &IntervalValue)> {
        self.mass.iter()
    }

    /// Upper bound on the mass not represented in the map.
    pub fn deficit(&self) -> &Dyadic {
        &self.deficit
    }

    pub fn total(&self) -> IntervalValue {
        self.mass
            .values()
            .fold(IntervalValue::zero(), |acc, p| acc.add(p))
    }

    /// `Σ w_j D_j` for weights summing to one.
    pub fn mixture(parts: &[(IntervalValue, DiscreteDist<K>)]) -> Self {
        let mut mass = BTreeMap::new();
        let mut deficit = IntervalValue::zero();
        for (w, dist) in parts {
            for (k, p) in &dist.mass {
                accumulate(&mut mass, k.clone(), &w.mul(p).round_out(ORACLE_PRECISION));
            }
            deficit = deficit.add(&w.mul(&IntervalValue::point(dist.deficit.clone())));
        }
        DiscreteDist {
            mass,
            deficit: deficit.hi().ceil_to(ORACLE_PRECISION),
        }
    }

    /// Pushes the law through `f`, merging keys that collide.
    pub fn map<J: Ord + Clone>(&self, mut f: impl FnMut(&K) -> J) -> DiscreteDist<J> {
        let mut mass = BTreeMap::new();
        for (k, p) in &self.mass {
            accumulate(&mut mass, f(k), p);
        }
        DiscreteDist {
            mass,
            deficit: self.deficit.clone(),
        }
    }
}

impl DiscreteDist<i64> {
    /// Law of independent coordinates: the product measure on vectors.
    pub fn product(coords: &[DiscreteDist<i64>]) -> DiscreteDist<Vec<i64>> {
        let mut acc: BTreeMap<Vec<i64>, IntervalValue> = BTreeMap::new();
        acc.insert(Vec::new(), IntervalValue::one());
        let mut deficit = Dyadic::zero();
        for coord in coords {
            let mut next = BTreeMap::new();
            for (prefix, p) in &acc {
                for (v, q) in &coord.mass {
                    let mut key = prefix.clone();
                    key.push(*v);
                    next.insert(key, p.mul(q).round_out(ORACLE_PRECISION));
                }
            }
            acc = next;
            deficit = &deficit + &coord.deficit;
        }
        DiscreteDist { mass: acc, deficit }
    }
}

fn accumulate<K: Ord>(mass: &mut BTreeMap<K, IntervalValue>, k: K, p: &IntervalValue) {
    match mass.get_mut(&k) {
        Some(slot) => *slot = slot.add(p),
        None => {
            mass.insert(k, p.clone());
        }
    }
}

/// Counts of sampled outcomes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram<K: Ord> {
    counts: BTreeMap<K, u64>,
    total: u64,
}

impl<K: Ord> Default for Histogram<K> {
    fn default() -> Self {
        Histogram {
            counts: BTreeMap::new(),
            total: 0,
        }
    }
}

impl<K: Ord + Clone> Histogram<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, k: K) {
        *self.counts.entry(k).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, k: &K) -> u64 {
        self.counts.get(k).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, u64)> {
        self.counts.iter().map(|(k, c)| (k, *c))
    }

    pub fn freq(&self, k: &K) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(k) as f64 / self.total as f64
        }
    }
}

impl<K: Ord + Clone> FromIterator<K> for Histogram<K> {
    fn from_iter<I: IntoIterator<Item = K>>(iter: I) -> Self {
        let mut h = Histogram::new();
        for k in iter {
            h.add(k);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> IntervalValue {
        IntervalValue::point(Dyadic::pow2(-1))
    }

    #[test]
    fn mixture_and_map() {
        let a = DiscreteDist::from_points([(0i64, IntervalValue::one())]);
        let b = DiscreteDist::from_points([(1i64, IntervalValue::one())]);
        let m = DiscreteDist::mixture(&[(half(), a), (half(), b)]);
        assert_eq!(m.prob(&0), 0.5);
        assert_eq!(m.prob(&1), 0.5);
        let collapsed = m.map(|_| 7i64);
        assert_eq!(collapsed.prob(&7), 1.0);
        assert_eq!(collapsed.total(), IntervalValue::one());
    }

    #[test]
    fn product_of_coins() {
        let coin = DiscreteDist::from_points([(0i64, half()), (1, half())]);
        let joint = DiscreteDist::product(&[coin.clone(), coin]);
        assert_eq!(joint.len(), 4);
        assert_eq!(joint.prob(&vec![1, 0]), 0.25);
    }

    #[test]
    fn histogram_counts() {
        let h: Histogram<i64> = [1, 1, 2].into_iter().collect();
        assert_eq!(h.total(), 3);
        assert_eq!(h.count(&1), 2);
        assert_eq!(h.count(&5), 0);
        assert!((h.freq(&2) - 1.0 / 3.0).abs() < 1e-12);
    }
}
