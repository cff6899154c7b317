use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TitleKind {
    Real,
    Generated,
}

impl TitleKind {
    pub const ALL: [TitleKind; 2] = [TitleKind::Real, TitleKind::Generated];

    fn index(self) -> usize {
        match self {
            TitleKind::Real => 0,
            TitleKind::Generated => 1,
        }
    }
}

/// A 5-point score: 0 = Very Bad, 1 = Bad, 2 = OK, 3 = Good, 4 = Very Good.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct Score(u8);

impl Score {
    pub const MAX: u8 = 4;
    pub const LABELS: [&'static str; 5] = ["Very Bad", "Bad", "OK", "Good", "Very Good"];

    pub fn new(value: i64) -> Result<Self, StatsError> {
        u8::try_from(value)
            .ok()
            .filter(|v| *v <= Self::MAX)
            .map(Score)
            .ok_or(StatsError::ScoreOutOfRange(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl TryFrom<i64> for Score {
    type Error = StatsError;
    fn try_from(v: i64) -> Result<Self, Self::Error> {
        Score::new(v)
    }
}

impl From<Score> for u8 {
    fn from(s: Score) -> u8 {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub evaluator_id: String,
    pub doc_id: String,
    pub title_kind: TitleKind,
    pub score: Score,
}

/// Reads ScoreRecord JSONL. Unknown fields (such as session flags added by
/// the evaluation service) are ignored.
pub fn read_score_records<R: BufRead>(r: R) -> Result<Vec<ScoreRecord>, StatsError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| StatsError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Dense evaluator x document x kind table of scores. Evaluators and
/// documents are kept in sorted order so the matrix does not depend on the
/// order records arrive in.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScoreMatrix {
    evaluators: Vec<String>,
    docs: Vec<String>,
    cells: Vec<Option<u8>>,
}

impl ScoreMatrix {
    /// An all-missing matrix over the given evaluators and documents.
    pub fn empty(
        evaluators: impl IntoIterator<Item = String>,
        docs: impl IntoIterator<Item = String>,
    ) -> Self {
        let evaluators: Vec<String> = evaluators
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let docs: Vec<String> = docs
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let cells = vec![None; evaluators.len() * docs.len() * 2];
        ScoreMatrix {
            evaluators,
            docs,
            cells,
        }
    }

    /// Builds a matrix from records; a repeated (evaluator, doc, kind) is an
    /// error.
    pub fn from_records(records: &[ScoreRecord]) -> Result<Self, StatsError> {
        let mut m = ScoreMatrix::empty(
            records.iter().map(|r| r.evaluator_id.clone()),
            records.iter().map(|r| r.doc_id.clone()),
        );
        let ev: HashMap<&str, usize> = m
            .evaluators
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_str(), i))
            .collect();
        let dv: HashMap<&str, usize> = m
            .docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.as_str(), i))
            .collect();
        let mut slots = Vec::with_capacity(records.len());
        for r in records {
            slots.push((
                m.slot(
                    ev[r.evaluator_id.as_str()],
                    dv[r.doc_id.as_str()],
                    r.title_kind,
                ),
                r,
            ));
        }
        for (slot, r) in slots {
            if m.cells[slot].replace(r.score.value()).is_some() {
                return Err(StatsError::DuplicateRecord {
                    evaluator_id: r.evaluator_id.clone(),
                    doc_id: r.doc_id.clone(),
                });
            }
        }
        Ok(m)
    }

    fn slot(&self, e: usize, d: usize, kind: TitleKind) -> usize {
        (e * self.docs.len() + d) * 2 + kind.index()
    }

    pub fn evaluators(&self) -> &[String] {
        &self.evaluators
    }

    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    pub fn get(&self, evaluator: usize, doc: usize, kind: TitleKind) -> Option<u8> {
        self.cells[self.slot(evaluator, doc, kind)]
    }

    pub fn set(&mut self, evaluator: usize, doc: usize, kind: TitleKind, score: Option<Score>) {
        let slot = self.slot(evaluator, doc, kind);
        self.cells[slot] = score.map(Score::value);
    }

    pub fn is_empty(&self) -> bool {
        self.evaluators.is_empty() || self.docs.is_empty()
    }

    /// Number of present scores.
    pub fn present(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn records(&self) -> Vec<ScoreRecord> {
        let mut out = Vec::new();
        for (e, ev) in self.evaluators.iter().enumerate() {
            for (d, doc) in self.docs.iter().enumerate() {
                for kind in TitleKind::ALL {
                    if let Some(s) = self.get(e, d, kind) {
                        out.push(ScoreRecord {
                            evaluator_id: ev.clone(),
                            doc_id: doc.clone(),
                            title_kind: kind,
                            score: Score(s),
                        });
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(e: &str, d: &str, kind: TitleKind, s: i64) -> ScoreRecord {
        ScoreRecord {
            evaluator_id: e.into(),
            doc_id: d.into(),
            title_kind: kind,
            score: Score::new(s).unwrap(),
        }
    }

    #[test]
    fn score_range() {
        assert!(Score::new(4).is_ok());
        assert!(matches!(Score::new(5), Err(StatsError::ScoreOutOfRange(5))));
        assert!(Score::new(-1).is_err());
        assert!(serde_json::from_str::<Score>("5").is_err());
    }

    #[test]
    fn record_json() {
        let r = rec("ann", "d1", TitleKind::Generated, 3);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"evaluator_id":"ann","doc_id":"d1","title_kind":"generated","score":3}"#
        );
        let extra = r#"{"evaluator_id":"ann","doc_id":"d1","title_kind":"generated","score":3,"session_complete":false}"#;
        assert_eq!(read_score_records(extra.as_bytes()).unwrap(), vec![r]);
    }

    #[test]
    fn matrix_is_order_independent() {
        let a = vec![
            rec("b", "d2", TitleKind::Real, 1),
            rec("a", "d1", TitleKind::Generated, 3),
        ];
        let mut b = a.clone();
        b.reverse();
        let m = ScoreMatrix::from_records(&a).unwrap();
        assert_eq!(m, ScoreMatrix::from_records(&b).unwrap());
        assert_eq!(m.evaluators(), ["a", "b"]);
        assert_eq!(m.get(0, 0, TitleKind::Generated), Some(3));
        assert_eq!(m.get(0, 0, TitleKind::Real), None);
        assert_eq!(m.records().len(), 2);
    }

    #[test]
    fn duplicate_rejected() {
        let r = rec("a", "d1", TitleKind::Real, 1);
        assert!(matches!(
            ScoreMatrix::from_records(&[r.clone(), r]),
            Err(StatsError::DuplicateRecord { .. })
        ));
    }
}
