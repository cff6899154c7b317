//! Straightforward bootstrap loop and exact enumeration for tiny matrices.
//!
//! A matrix is `rows[evaluator][doc] = (real, generated)` with missing
//! scores as `None`. Statistics are listed in this order: worse, same,
//! better; real tiers 0..5; generated tiers 0..5; real OK and generated bad;
//! generated OK and real bad.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub type Cell = (Option<u8>, Option<u8>);
pub const N_STATS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub median: f64,
    pub hi: f64,
}

/// Statistics over an explicit list of drawn (evaluator, doc) cells.
pub fn statistics(cells: &[Cell]) -> [f64; N_STATS] {
    let mut cmp = [0.0f64; 3];
    let mut real = [0.0f64; 5];
    let mut gen = [0.0f64; 5];
    let mut joint = [0.0f64; 2];
    for &(r, g) in cells {
        if let Some(r) = r {
            real[r as usize] += 1.0;
        }
        if let Some(g) = g {
            gen[g as usize] += 1.0;
        }
        if let (Some(r), Some(g)) = (r, g) {
            let diff = g as i32 - r as i32;
            cmp[(diff.signum() + 1) as usize] += 1.0;
            if r >= 2 && g <= 1 {
                joint[0] += 1.0;
            }
            if g >= 2 && r <= 1 {
                joint[1] += 1.0;
            }
        }
    }
    let pairs: f64 = cmp.iter().sum();
    let nr: f64 = real.iter().sum();
    let ng: f64 = gen.iter().sum();
    let mut out = Vec::with_capacity(N_STATS);
    out.extend(cmp.iter().map(|c| c / pairs));
    out.extend(real.iter().map(|c| c / nr));
    out.extend(gen.iter().map(|c| c / ng));
    out.extend(joint.iter().map(|c| c / pairs));
    out.try_into().unwrap()
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    // smallest value with at least p percent of the data at or below it
    let n = sorted.len();
    for (i, v) in sorted.iter().enumerate() {
        if (i + 1) as f64 * 100.0 >= p * n as f64 {
            return *v;
        }
    }
    sorted[n - 1]
}

fn band(mut values: Vec<f64>) -> Band {
    values.retain(|v| v.is_finite());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Band {
        lo: percentile(&values, 2.5),
        median: percentile(&values, 50.0),
        hi: percentile(&values, 97.5),
    }
}

/// Resamples evaluators and documents with `StdRng`, materializing every
/// drawn cell.
pub fn naive_bootstrap(rows: &[Vec<Cell>], n_resamples: usize, seed: u64) -> Vec<Band> {
    let mut rng = StdRng::seed_from_u64(seed);
    let ne = rows.len();
    let nd = rows[0].len();
    let mut columns = vec![Vec::new(); N_STATS];
    for _ in 0..n_resamples {
        let evaluators: Vec<usize> = (0..ne).map(|_| rng.random_range(0..ne)).collect();
        let docs: Vec<usize> = (0..nd).map(|_| rng.random_range(0..nd)).collect();
        let mut drawn = Vec::new();
        for &e in &evaluators {
            for &d in &docs {
                drawn.push(rows[e][d]);
            }
        }
        for (col, v) in columns.iter_mut().zip(statistics(&drawn)) {
            col.push(v);
        }
    }
    columns.into_iter().map(band).collect()
}

/// Exact replicate distribution of every statistic: (value, probability)
/// pairs sorted by value, undefined replicates dropped and the rest
/// renormalized. Feasible for `ne^ne * nd^nd` small.
pub fn exact_distribution(rows: &[Vec<Cell>]) -> Vec<Vec<(f64, f64)>> {
    let ne = rows.len();
    let nd = rows[0].len();
    let draws = |n: usize| -> Vec<Vec<usize>> {
        let total = n.pow(n as u32);
        (0..total)
            .map(|mut code| {
                (0..n)
                    .map(|_| {
                        let v = code % n;
                        code /= n;
                        v
                    })
                    .collect()
            })
            .collect()
    };
    let ed = draws(ne);
    let dd = draws(nd);
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); N_STATS];
    for es in &ed {
        for ds in &dd {
            let drawn: Vec<Cell> = es
                .iter()
                .flat_map(|&e| ds.iter().map(move |&d| rows[e][d]))
                .collect();
            for (col, v) in columns.iter_mut().zip(statistics(&drawn)) {
                col.push(v);
            }
        }
    }
    columns
        .into_iter()
        .map(|mut vals| {
            vals.retain(|v| v.is_finite());
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let w = 1.0 / vals.len() as f64;
            let mut out: Vec<(f64, f64)> = Vec::new();
            for v in vals {
                match out.last_mut() {
                    Some((last, p)) if (*last - v).abs() < 1e-12 => *p += w,
                    _ => out.push((v, w)),
                }
            }
            out
        })
        .collect()
}

/// Quantile of a discrete distribution and the distance of `q` from the
/// nearest CDF jump, which tells whether a Monte-Carlo estimate of this
/// quantile is stable.
pub fn exact_quantile(dist: &[(f64, f64)], q: f64) -> (f64, f64) {
    let mut cdf = 0.0;
    let mut margin = f64::INFINITY;
    let mut value = None;
    for &(v, p) in dist {
        cdf += p;
        margin = margin.min((cdf - q).abs());
        if value.is_none() && cdf >= q - 1e-12 {
            value = Some(v);
        }
    }
    (value.unwrap_or(dist[dist.len() - 1].0), margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_distribution_sums_to_one() {
        let rows = vec![
            vec![(Some(1), Some(2)), (Some(3), Some(3))],
            vec![(Some(0), Some(4)), (Some(2), None)],
        ];
        for col in exact_distribution(&rows) {
            let total: f64 = col.iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn statistics_counts_pairs() {
        let s = statistics(&[(Some(1), Some(2)), (Some(2), Some(2)), (Some(3), None)]);
        assert_eq!(&s[..3], &[0.0, 0.5, 0.5]);
        assert_eq!(s[3 + 3], 1.0 / 3.0);
    }
}
