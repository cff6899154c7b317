//! Krippendorff's alpha with the interval (squared difference) metric.

use std::collections::{BTreeMap, BTreeSet};

use super::StatsError;

/// One rating: `rater` assigned `value` to `unit`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rating<U, R> {
    pub unit: U,
    pub rater: R,
    pub value: f64,
}

impl<U, R> Rating<U, R> {
    pub fn new(unit: U, rater: R, value: f64) -> Self {
        Rating { unit, rater, value }
    }
}

/// Coincidences between the distinct pairable values.
#[derive(Debug, Clone)]
pub struct CoincidenceMatrix {
    pub values: Vec<f64>,
    /// `counts[c][k]`: ordered within-unit pairs (c, k), each unit weighted
    /// by `1 / (m_u - 1)`.
    pub counts: Vec<Vec<f64>>,
}

impl CoincidenceMatrix {
    /// Builds the matrix. Units with fewer than two values are not pairable
    /// and are ignored. Returns the matrix and the number of pairable units.
    pub fn build<U, R>(ratings: &[Rating<U, R>]) -> Result<(Self, usize), StatsError>
    where
        U: Ord + Clone,
        R: Ord + Clone,
    {
        let mut units: BTreeMap<U, Vec<f64>> = BTreeMap::new();
        let mut seen: BTreeSet<(U, R)> = BTreeSet::new();
        for r in ratings {
            if !r.value.is_finite() {
                return Err(StatsError::InvalidParameter("rating values must be finite"));
            }
            if !seen.insert((r.unit.clone(), r.rater.clone())) {
                return Err(StatsError::InvalidParameter(
                    "a rater rated the same unit twice",
                ));
            }
            units.entry(r.unit.clone()).or_default().push(r.value);
        }
        let mut values: Vec<f64> = units
            .values()
            .filter(|v| v.len() >= 2)
            .flatten()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let index = |v: f64| {
            values
                .binary_search_by(|x| x.total_cmp(&v))
                .expect("value collected above")
        };
        let mut counts = vec![vec![0.0; values.len()]; values.len()];
        let mut pairable = 0;
        for vals in units.values().filter(|v| v.len() >= 2) {
            pairable += 1;
            let weight = 1.0 / (vals.len() - 1) as f64;
            for (i, &a) in vals.iter().enumerate() {
                for (j, &b) in vals.iter().enumerate() {
                    if i != j {
                        counts[index(a)][index(b)] += weight;
                    }
                }
            }
        }
        Ok((CoincidenceMatrix { values, counts }, pairable))
    }

    /// Marginal totals `n_c`.
    pub fn marginals(&self) -> Vec<f64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }
}

/// Interval-metric alpha, `1 - D_o / D_e`.
///
/// Requires at least two units with two or more ratings. Zero observed
/// disagreement gives exactly 1.0, including when every value is equal.
pub fn krippendorff_alpha<U, R>(ratings: &[Rating<U, R>]) -> Result<f64, StatsError>
where
    U: Ord + Clone,
    R: Ord + Clone,
{
    let (cm, pairable) = CoincidenceMatrix::build(ratings)?;
    if pairable < 2 {
        return Err(StatsError::InsufficientPairs);
    }
    let delta2 = |c: usize, k: usize| (cm.values[c] - cm.values[k]).powi(2);
    let marginals = cm.marginals();
    let n: f64 = marginals.iter().sum();
    let size = cm.values.len();
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..size {
        for k in 0..size {
            if c != k {
                observed += cm.counts[c][k] * delta2(c, k);
                expected += marginals[c] * marginals[k] * delta2(c, k);
            }
        }
    }
    if observed == 0.0 {
        return Ok(1.0);
    }
    let d_o = observed / n;
    let d_e = expected / (n * (n - 1.0));
    Ok(1.0 - d_o / d_e)
}
