//! Statistics over human evaluation scores.

mod alpha;
mod bootstrap;
mod divergence;
mod scores;

pub use alpha::{krippendorff_alpha, CoincidenceMatrix, Rating};
pub use bootstrap::{
    bootstrap, comparison_distribution, nearest_rank, pooled_statistics, replicate_rng,
    BootstrapSummary, ByKind, Comparison, Interval, JointRates, Statistics, Tiers,
};
pub use divergence::{headline_divergence, DivergenceStats, HeadlinePair};
pub use scores::{read_score_records, Score, ScoreMatrix, ScoreRecord, TitleKind};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("score {0} is outside 0..=4")]
    ScoreOutOfRange(i64),
    #[error("duplicate score for evaluator `{evaluator_id}` on document `{doc_id}`")]
    DuplicateRecord {
        evaluator_id: String,
        doc_id: String,
    },
    #[error("the score matrix is empty")]
    EmptyMatrix,
    #[error("no evaluator scored both titles of any document")]
    NoCompletePairs,
    #[error("alpha needs at least two units with two or more ratings")]
    InsufficientPairs,
    #[error("the input is empty")]
    EmptyInput,
    #[error("{0}")]
    InvalidParameter(&'static str),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Interval alpha for the pooled scores, each kind separately, and the
/// -1/0/+1 comparison of generated versus real. `None` where there are too
/// few pairable ratings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub overall: Option<f64>,
    pub real: Option<f64>,
    pub generated: Option<f64>,
    pub comparison: Option<f64>,
}

pub fn alpha_report(matrix: &ScoreMatrix) -> AlphaReport {
    let (ne, nd) = (matrix.evaluators().len(), matrix.docs().len());
    let mut overall = Vec::new();
    let mut per_kind: [Vec<Rating<usize, usize>>; 2] = [Vec::new(), Vec::new()];
    let mut comparison = Vec::new();
    for e in 0..ne {
        for d in 0..nd {
            let real = matrix.get(e, d, TitleKind::Real);
            let generated = matrix.get(e, d, TitleKind::Generated);
            for (i, (kind, score)) in [(TitleKind::Real, real), (TitleKind::Generated, generated)]
                .into_iter()
                .enumerate()
            {
                if let Some(s) = score {
                    overall.push(Rating::new((d, kind), e, f64::from(s)));
                    per_kind[i].push(Rating::new(d, e, f64::from(s)));
                }
            }
            if let (Some(r), Some(g)) = (real, generated) {
                let sign = (i16::from(g) - i16::from(r)).signum();
                comparison.push(Rating::new(d, e, f64::from(sign)));
            }
        }
    }
    let [real, generated] = per_kind;
    AlphaReport {
        overall: krippendorff_alpha(&overall).ok(),
        real: krippendorff_alpha(&real).ok(),
        generated: krippendorff_alpha(&generated).ok(),
        comparison: krippendorff_alpha(&comparison).ok(),
    }
}
