//! Discrete distributions over queue lengths / loads, and their distances.

use crate::error::{Error, Result};

/// Fraction of servers (or of server-time) at each load value; index `i`
/// holds the mass at load `i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadDistribution {
    fractions: Vec<f64>,
}

impl LoadDistribution {
    /// Normalised histogram of a load vector, including load 0.
    pub fn from_loads(loads: &[u64]) -> Self {
        let max = loads.iter().copied().max().unwrap_or(0) as usize;
        let mut counts = vec![0u64; max + 1];
        for &l in loads {
            counts[l as usize] += 1;
        }
        Self::from_counts(&counts)
    }

    /// `counts[i]` servers at load `i`.
    pub fn from_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Self::point_mass(0);
        }
        let mut fractions: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        trim(&mut fractions);
        Self { fractions }
    }

    /// Normalises non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::NoMeasurement);
        }
        let mut fractions: Vec<f64> = weights.iter().map(|w| w / total).collect();
        trim(&mut fractions);
        Ok(Self { fractions })
    }

    pub fn point_mass(i: usize) -> Self {
        let mut fractions = vec![0.0; i + 1];
        fractions[i] = 1.0;
        Self { fractions }
    }

    /// Mass at load `i`.
    pub fn get(&self, i: usize) -> f64 {
        self.fractions.get(i).copied().unwrap_or(0.0)
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    /// One past the largest load with non-zero mass.
    pub fn support_len(&self) -> usize {
        self.fractions.len()
    }

    pub fn mean(&self) -> f64 {
        self.fractions.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
    }

    /// `P(load >= i)`.
    pub fn tail(&self, i: usize) -> f64 {
        self.fractions.iter().skip(i).sum()
    }

    /// Pointwise average of several distributions.
    pub fn average(items: &[LoadDistribution]) -> Self {
        if items.is_empty() {
            return Self::point_mass(0);
        }
        let len = items.iter().map(|d| d.fractions.len()).max().unwrap_or(1);
        let mut acc = vec![0.0; len];
        for d in items {
            for (a, p) in acc.iter_mut().zip(&d.fractions) {
                *a += p;
            }
        }
        let k = items.len() as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        trim(&mut acc);
        Self { fractions: acc }
    }
}

fn trim(v: &mut Vec<f64>) {
    while v.len() > 1 && v[v.len() - 1] == 0.0 {
        v.pop();
    }
}

/// Total variation distance `1/2 * sum_i |a_i - b_i|` over the union of the
/// supports, load 0 included.
pub fn total_variation(a: &LoadDistribution, b: &LoadDistribution) -> f64 {
    let len = a.support_len().max(b.support_len());
    0.5 * (0..len).map(|i| (a.get(i) - b.get(i)).abs()).sum::<f64>()
}

/// Joint distribution of the queue lengths of two servers, as a dense
/// `rows x cols` table.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    cols: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// `weights[i][j]`: unnormalised mass at `(Q_a = i, Q_b = j)`.
    pub fn from_weights(weights: &[Vec<f64>]) -> Result<Self> {
        let cols = weights.iter().map(Vec::len).max().unwrap_or(0);
        let total: f64 = weights.iter().flatten().sum();
        if total.is_nan() || total <= 0.0 || cols == 0 {
            return Err(Error::NoMeasurement);
        }
        let mut probs = vec![0.0; weights.len() * cols];
        for (i, row) in weights.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                probs[i * cols + j] = w / total;
            }
        }
        Ok(Self { cols, probs })
    }

    pub fn rows(&self) -> usize {
        self.probs.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.rows() && j < self.cols {
            self.probs[i * self.cols + j]
        } else {
            0.0
        }
    }

    /// Non-zero cells as `(i, j, p)`, row-major.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(idx, &p)| (idx / self.cols, idx % self.cols, p))
    }

    /// Marginal of the first server.
    pub fn first_marginal(&self) -> LoadDistribution {
        let w: Vec<f64> = (0..self.rows())
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).sum())
            .collect();
        LoadDistribution::from_weights(&w).expect("joint is normalised")
    }

    /// Marginal of the second server.
    pub fn second_marginal(&self) -> LoadDistribution {
        let w: Vec<f64> = (0..self.cols)
            .map(|j| (0..self.rows()).map(|i| self.get(i, j)).sum())
            .collect();
        LoadDistribution::from_weights(&w).expect("joint is normalised")
    }

    /// Product of the two marginals (the independent-servers model).
    pub fn product_of_marginals(&self) -> Self {
        let (a, b) = (self.first_marginal(), self.second_marginal());
        let weights: Vec<Vec<f64>> = (0..self.rows())
            .map(|i| (0..self.cols).map(|j| a.get(i) * b.get(j)).collect())
            .collect();
        Self::from_weights(&weights).expect("product of normalised marginals")
    }
}

/// `1/2 * sum_{u,v} |a(u,v) - b(u,v)|`.
pub fn joint_distance(a: &JointDistribution, b: &JointDistribution) -> f64 {
    let rows = a.rows().max(b.rows());
    let cols = a.cols().max(b.cols());
    let mut sum = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            sum += (a.get(i, j) - b.get(i, j)).abs();
        }
    }
    0.5 * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(xs: &[f64]) -> LoadDistribution {
        LoadDistribution::from_weights(xs).unwrap()
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(LoadDistribution::from_loads(&[0, 0, 1, 3]).fractions(), &[0.5, 0.25, 0.0, 0.25]);
        assert_eq!(LoadDistribution::from_loads(&[1, 1, 1, 1]).fractions(), &[0.0, 1.0]);
        assert_eq!(LoadDistribution::from_loads(&[0, 0, 0]).fractions(), &[1.0]);
    }

    #[test]
    fn tv_examples() {
        let x = dist(&[0.2, 0.5, 0.3]);
        assert_eq!(total_variation(&x, &x), 0.0);
        assert_eq!(total_variation(&LoadDistribution::point_mass(0), &LoadDistribution::point_mass(1)), 1.0);
        assert!((total_variation(&dist(&[0.5, 0.5]), &dist(&[0.25, 0.75])) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn joint_examples() {
        let a = JointDistribution::from_weights(&[vec![1.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(joint_distance(&a, &a), 0.0);
        let b = JointDistribution::from_weights(&[vec![0.0, 0.0], vec![3.0, 0.0]]).unwrap();
        assert!((joint_distance(&a, &b) - 1.0).abs() < 1e-15);
        assert_eq!(a.first_marginal().fractions(), &[0.5, 0.5]);
        assert_eq!(a.second_marginal().fractions(), &[0.25, 0.75]);
        let indep = a.product_of_marginals();
        assert!((indep.get(1, 1) - 0.375).abs() < 1e-15);
    }

    fn arb_dist() -> impl Strategy<Value = LoadDistribution> {
        prop::collection::vec(0.0f64..1.0, 1..8)
            .prop_filter("non-zero mass", |w| w.iter().sum::<f64>() > 1e-6)
            .prop_map(|w| dist(&w))
    }

    proptest! {
        #[test]
        fn tv_is_a_metric(a in arb_dist(), b in arb_dist(), c in arb_dist()) {
            let ab = total_variation(&a, &b);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
            prop_assert!((ab - total_variation(&b, &a)).abs() < 1e-15);
            prop_assert!(total_variation(&a, &a) == 0.0);
            prop_assert!(ab <= total_variation(&a, &c) + total_variation(&c, &b) + 1e-12);
        }

        #[test]
        fn normalised(w in prop::collection::vec(0.0f64..10.0, 1..12)) {
            prop_assume!(w.iter().sum::<f64>() > 1e-6);
            let d = dist(&w);
            prop_assert!((d.fractions().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
