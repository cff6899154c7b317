//! Bootstrap over evaluators and documents.
//!
//! Every replicate draws `|evaluators|` evaluators and `|docs|` documents
//! with replacement, independently, and pools all drawn (evaluator, doc)
//! cells. Replicate `i` uses a ChaCha8 stream selected by `i` under the base
//! `seed`, so any execution order reproduces the same replicates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scores::{ScoreMatrix, TitleKind};
use super::StatsError;
use crate::exec::Execution;

/// Scores at or above this tier count as "OK or better".
const OK: u8 = 2;

/// Order of the per-replicate statistics vector.
const COMPARISON: usize = 0; // worse, same, better
const REAL_TIERS: usize = 3;
const GENERATED_TIERS: usize = 8;
const REAL_OK_GENERATED_BAD: usize = 13;
const GENERATED_OK_REAL_BAD: usize = 14;
const N_STATS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
    /// Replicates where the statistic was defined (non-empty denominator).
    pub resamples_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison<T> {
    pub worse: T,
    pub same: T,
    pub better: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tiers<T> {
    pub very_bad: T,
    pub bad: T,
    pub ok: T,
    pub good: T,
    pub very_good: T,
}

impl<T: Copy> Tiers<T> {
    pub fn as_array(&self) -> [T; 5] {
        [self.very_bad, self.bad, self.ok, self.good, self.very_good]
    }

    fn from_slice(v: &[T]) -> Self {
        Tiers {
            very_bad: v[0],
            bad: v[1],
            ok: v[2],
            good: v[3],
            very_good: v[4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ByKind<T> {
    pub real: T,
    pub generated: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointRates<T> {
    /// Real title OK or better while the generated one is Bad or worse.
    pub real_ok_generated_bad: T,
    /// Generated title OK or better while the real one is Bad or worse.
    pub generated_ok_real_bad: T,
}

/// All reported statistics for one data set (the original matrix or one
/// replicate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Statistics<T> {
    pub comparison: Comparison<T>,
    pub scores: ByKind<Tiers<T>>,
    pub joint: JointRates<T>,
}

impl<T: Copy> Statistics<T> {
    fn from_flat(v: &[T; N_STATS]) -> Self {
        Statistics {
            comparison: Comparison {
                worse: v[COMPARISON],
                same: v[COMPARISON + 1],
                better: v[COMPARISON + 2],
            },
            scores: ByKind {
                real: Tiers::from_slice(&v[REAL_TIERS..REAL_TIERS + 5]),
                generated: Tiers::from_slice(&v[GENERATED_TIERS..GENERATED_TIERS + 5]),
            },
            joint: JointRates {
                real_ok_generated_bad: v[REAL_OK_GENERATED_BAD],
                generated_ok_real_bad: v[GENERATED_OK_REAL_BAD],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub n_resamples: usize,
    pub seed: u64,
    pub n_evaluators: usize,
    pub n_docs: usize,
    /// Median and 2.5/97.5 percentiles across replicates.
    pub intervals: Statistics<Interval>,
    /// The same statistics on the original, unresampled matrix.
    pub pooled: Statistics<Option<f64>>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    real: Option<u8>,
    generated: Option<u8>,
}

/// Weighted category counts; proportions are taken at the end.
#[derive(Debug, Default)]
struct Tally {
    comparison: [u64; 3],
    real: [u64; 5],
    generated: [u64; 5],
    real_ok_generated_bad: u64,
    generated_ok_real_bad: u64,
}

impl Tally {
    fn add(&mut self, cell: Cell, weight: u64) {
        if let Some(r) = cell.real {
            self.real[r as usize] += weight;
        }
        if let Some(g) = cell.generated {
            self.generated[g as usize] += weight;
        }
        if let (Some(r), Some(g)) = (cell.real, cell.generated) {
            let bucket = match g.cmp(&r) {
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Greater => 2,
            };
            self.comparison[bucket] += weight;
            if r >= OK && g < OK {
                self.real_ok_generated_bad += weight;
            }
            if g >= OK && r < OK {
                self.generated_ok_real_bad += weight;
            }
        }
    }

    /// Proportions; NaN where the denominator is zero.
    fn proportions(&self) -> [f64; N_STATS] {
        fn ratio(num: u64, den: u64) -> f64 {
            if den == 0 {
                f64::NAN
            } else {
                num as f64 / den as f64
            }
        }
        let pairs: u64 = self.comparison.iter().sum();
        let real: u64 = self.real.iter().sum();
        let generated: u64 = self.generated.iter().sum();
        let mut out = [0.0; N_STATS];
        for k in 0..3 {
            out[COMPARISON + k] = ratio(self.comparison[k], pairs);
        }
        for t in 0..5 {
            out[REAL_TIERS + t] = ratio(self.real[t], real);
            out[GENERATED_TIERS + t] = ratio(self.generated[t], generated);
        }
        out[REAL_OK_GENERATED_BAD] = ratio(self.real_ok_generated_bad, pairs);
        out[GENERATED_OK_REAL_BAD] = ratio(self.generated_ok_real_bad, pairs);
        out
    }
}

fn cells(matrix: &ScoreMatrix) -> Vec<Cell> {
    let (ne, nd) = (matrix.evaluators().len(), matrix.docs().len());
    let mut out = Vec::with_capacity(ne * nd);
    for e in 0..ne {
        for d in 0..nd {
            out.push(Cell {
                real: matrix.get(e, d, TitleKind::Real),
                generated: matrix.get(e, d, TitleKind::Generated),
            });
        }
    }
    out
}

/// Statistics of one replicate given draw multiplicities.
fn replicate(cells: &[Cell], evaluator_counts: &[u64], doc_counts: &[u64]) -> [f64; N_STATS] {
    let nd = doc_counts.len();
    let mut tally = Tally::default();
    for (e, &ce) in evaluator_counts.iter().enumerate() {
        if ce == 0 {
            continue;
        }
        let row = &cells[e * nd..(e + 1) * nd];
        for (cell, &cd) in row.iter().zip(doc_counts) {
            if cd != 0 {
                tally.add(*cell, ce * cd);
            }
        }
    }
    tally.proportions()
}

/// The random stream for replicate `index`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_counts(rng: &mut ChaCha8Rng, n: usize, counts: &mut [u64]) {
    counts.iter_mut().for_each(|c| *c = 0);
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
}

/// Nearest-rank percentile of sorted values, `p` in (0, 100].
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

fn interval(mut values: Vec<f64>) -> Interval {
    values.retain(|v| !v.is_nan());
    if values.is_empty() {
        return Interval {
            median: f64::NAN,
            lo: f64::NAN,
            hi: f64::NAN,
            resamples_used: 0,
        };
    }
    values.sort_by(f64::total_cmp);
    Interval {
        median: nearest_rank(&values, 50.0),
        lo: nearest_rank(&values, 2.5),
        hi: nearest_rank(&values, 97.5),
        resamples_used: values.len(),
    }
}

/// Statistics of the original matrix, every cell weighted once.
pub fn pooled_statistics(matrix: &ScoreMatrix) -> Statistics<Option<f64>> {
    let ones_e = vec![1; matrix.evaluators().len()];
    let ones_d = vec![1; matrix.docs().len()];
    let flat = replicate(&cells(matrix), &ones_e, &ones_d).map(|v| (!v.is_nan()).then_some(v));
    Statistics::from_flat(&flat)
}

/// Replicates are generated in blocks so memory for the per-replicate
/// statistics grows with `n_resamples` only.
const BLOCK: usize = 4096;

pub fn bootstrap(
    matrix: &ScoreMatrix,
    n_resamples: usize,
    seed: u64,
    exec: Execution,
) -> Result<BootstrapSummary, StatsError> {
    if matrix.is_empty() {
        return Err(StatsError::EmptyMatrix);
    }
    if n_resamples == 0 {
        return Err(StatsError::InvalidParameter(
            "n_resamples must be at least 1",
        ));
    }
    let cells = cells(matrix);
    let (ne, nd) = (matrix.evaluators().len(), matrix.docs().len());
    let mut columns: Vec<Vec<f64>> = (0..N_STATS)
        .map(|_| Vec::with_capacity(n_resamples))
        .collect();
    let blocks = n_resamples.div_ceil(BLOCK);
    for b in 0..blocks {
        let start = b * BLOCK;
        let len = BLOCK.min(n_resamples - start);
        let stats = exec.map_range(len, |i| {
            let mut rng = replicate_rng(seed, (start + i) as u64);
            let mut ce = vec![0u64; ne];
            let mut cd = vec![0u64; nd];
            draw_counts(&mut rng, ne, &mut ce);
            draw_counts(&mut rng, nd, &mut cd);
            replicate(&cells, &ce, &cd)
        });
        for s in stats {
            for (col, v) in columns.iter_mut().zip(s) {
                col.push(v);
            }
        }
    }
    let intervals: Vec<Interval> = columns.into_iter().map(interval).collect();
    let intervals: [Interval; N_STATS] = intervals.try_into().expect("one interval per statistic");
    Ok(BootstrapSummary {
        n_resamples,
        seed,
        n_evaluators: ne,
        n_docs: nd,
        intervals: Statistics::from_flat(&intervals),
        pooled: pooled_statistics(matrix),
    })
}

/// Normalized {worse, same, better} proportions of generated versus real
/// scores, pooled over every cell where the evaluator scored both titles.
pub fn comparison_distribution(matrix: &ScoreMatrix) -> Result<Comparison<f64>, StatsError> {
    if matrix.is_empty() {
        return Err(StatsError::EmptyMatrix);
    }
    let c = pooled_statistics(matrix).comparison;
    match (c.worse, c.same, c.better) {
        (Some(worse), Some(same), Some(better)) => Ok(Comparison {
            worse,
            same,
            better,
        }),
        _ => Err(StatsError::NoCompletePairs),
    }
}
