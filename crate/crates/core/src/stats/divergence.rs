use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadlinePair {
    pub real_title: String,
    pub generated_title: String,
    /// Span count of the real title's decomposition, when it decomposes.
    pub real_answers: Option<usize>,
    /// Non-termination answers in the generation trace.
    pub generated_answers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceStats {
    pub pairs: usize,
    pub exact_match_rate: f64,
    /// Over pairs whose real title decomposes; `None` if none do.
    pub mean_real_answers: Option<f64>,
    pub mean_generated_answers: f64,
    /// Fraction of generated titles equal to some training-set title.
    pub training_repeat_rate: f64,
}

/// How far generated headlines stray from the originals.
pub fn headline_divergence(
    pairs: &[HeadlinePair],
    training_titles: &HashSet<String>,
) -> Result<DivergenceStats, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n = pairs.len() as f64;
    let exact = pairs
        .iter()
        .filter(|p| p.real_title == p.generated_title)
        .count();
    let repeats = pairs
        .iter()
        .filter(|p| training_titles.contains(&p.generated_title))
        .count();
    let real: Vec<usize> = pairs.iter().filter_map(|p| p.real_answers).collect();
    Ok(DivergenceStats {
        pairs: pairs.len(),
        exact_match_rate: exact as f64 / n,
        mean_real_answers: (!real.is_empty())
            .then(|| real.iter().sum::<usize>() as f64 / real.len() as f64),
        mean_generated_answers: pairs.iter().map(|p| p.generated_answers).sum::<usize>() as f64 / n,
        training_repeat_rate: repeats as f64 / n,
    })
}
