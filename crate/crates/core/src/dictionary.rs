//! The in-title-not-in-text dictionary and the decomposability growth curve
//! as the dictionary grows.
//!
//! Construction:
//!
//! 1. count every cased title word that does not occur in its own text;
//! 2. for words seen at least `min_lowercase_count` times all lowercase,
//!    fold the counts of their cased variants into the lowercase entry;
//! 3. drop every entry that is not lowercase;
//! 4. sort by count (descending, ties lexicographic);
//! 5. keep the top `top_n`.

use std::collections::{HashMap, HashSet};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::decompose::{RescueLexicon, SpanOrigin, TextIndex};
use crate::exec::Execution;
use crate::segment::{segment, TokenKind};

pub const DEFAULT_MIN_LOWERCASE_COUNT: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictEntry {
    pub word: String,
    pub count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    entries: Vec<DictEntry>,
    rank: HashMap<String, usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum DictionaryError {
    #[error("cannot build a dictionary from an empty corpus")]
    EmptyCorpus,
    #[error("{0} must be at least 1")]
    InvalidParameter(&'static str),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("growth sizes must be ascending and at most the dictionary length ({len})")]
    InvalidSizes { len: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// All characters are letters and lowercasing leaves the word unchanged.
pub fn is_lowercase_word(word: &str) -> bool {
    !word.is_empty() && word.chars().all(crate::segment::is_letter) && word.to_lowercase() == word
}

impl Dictionary {
    /// Builds a dictionary from already sorted, validated entries.
    fn from_sorted(entries: Vec<DictEntry>) -> Self {
        let rank = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.word.clone(), i))
            .collect();
        Dictionary { entries, rank }
    }

    /// Sorts entries into dictionary order and validates them.
    pub fn from_entries(mut entries: Vec<DictEntry>) -> Result<Self, DictionaryError> {
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if !is_lowercase_word(&e.word) || e.count == 0 || !seen.insert(e.word.as_str()) {
                return Err(DictionaryError::Parse {
                    line: i + 1,
                    message: format!("invalid entry `{}`", e.word),
                });
            }
        }
        sort_entries(&mut entries);
        Ok(Self::from_sorted(entries))
    }

    pub fn entries(&self) -> &[DictEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Zero-based rank of `word` in dictionary order.
    pub fn rank(&self, word: &str) -> Option<usize> {
        self.rank.get(word).copied()
    }

    /// The top `k` entries as a lexicon.
    pub fn prefix(&self, k: usize) -> DictionaryPrefix<'_> {
        DictionaryPrefix {
            dict: self,
            size: k.min(self.len()),
        }
    }

    /// A dictionary holding only the top `k` entries.
    pub fn truncated(&self, k: usize) -> Dictionary {
        Self::from_sorted(self.entries[..k.min(self.len())].to_vec())
    }

    /// Writes `word<TAB>count` lines in stored order.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.entries {
            writeln!(w, "{}\t{}", e.word, e.count)?;
        }
        w.flush()
    }

    /// Reads a TSV file. Entries must already be in dictionary order.
    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self, DictionaryError> {
        let mut entries = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| DictionaryError::Parse {
                line: i + 1,
                message,
            };
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected `word<TAB>count`".into()))?;
            let count: u64 = count
                .trim_end()
                .parse()
                .map_err(|_| parse_err(format!("bad count `{count}`")))?;
            entries.push(DictEntry {
                word: word.to_owned(),
                count,
            });
        }
        let stored = entries.clone();
        let dict = Self::from_entries(entries)?;
        if dict.entries != stored {
            return Err(DictionaryError::Parse {
                line: 0,
                message: "entries are not sorted by count, then word".into(),
            });
        }
        Ok(dict)
    }
}

impl RescueLexicon for Dictionary {
    fn contains_word(&self, word: &str) -> bool {
        self.rank.contains_key(word)
    }
}

/// The top `size` entries of a dictionary, without copying.
#[derive(Debug, Clone, Copy)]
pub struct DictionaryPrefix<'d> {
    dict: &'d Dictionary,
    size: usize,
}

impl RescueLexicon for DictionaryPrefix<'_> {
    fn contains_word(&self, word: &str) -> bool {
        self.dict.rank(word).is_some_and(|r| r < self.size)
    }
}

fn sort_entries(entries: &mut [DictEntry]) {
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
}

/// Occurrence counts of cased title words absent from the same document's
/// text. Case-sensitive on both sides.
pub fn missing_title_words(doc: &Document) -> HashMap<String, u64> {
    let text = segment(&doc.text);
    let in_text: HashSet<&str> = text
        .tokens()
        .iter()
        .filter(|t| t.kind == TokenKind::LetterRun)
        .map(|t| t.text.as_str())
        .collect();
    let mut counts = HashMap::new();
    for tok in segment(&doc.title).tokens() {
        if tok.kind == TokenKind::LetterRun && !in_text.contains(tok.text.as_str()) {
            *counts.entry(tok.text.clone()).or_insert(0) += 1;
        }
    }
    counts
}

fn merge_counts(mut a: HashMap<String, u64>, b: HashMap<String, u64>) -> HashMap<String, u64> {
    for (w, c) in b {
        *a.entry(w).or_insert(0) += c;
    }
    a
}

/// Steps 2-5 applied to raw step-1 counts.
pub fn filter_counts(
    counts: &HashMap<String, u64>,
    min_lowercase_count: u64,
    top_n: usize,
) -> Dictionary {
    let mut merged: HashMap<String, u64> = HashMap::new();
    for (word, &count) in counts {
        let lower = word.to_lowercase();
        if lower == *word
            || counts
                .get(&lower)
                .is_some_and(|&c| c >= min_lowercase_count)
        {
            *merged.entry(lower).or_insert(0) += count;
        }
    }
    let mut entries: Vec<DictEntry> = merged
        .into_iter()
        .filter(|(w, _)| is_lowercase_word(w))
        .map(|(word, count)| DictEntry { word, count })
        .collect();
    sort_entries(&mut entries);
    entries.truncate(top_n);
    Dictionary::from_sorted(entries)
}

pub fn build_dictionary(
    docs: &[Document],
    min_lowercase_count: u64,
    top_n: usize,
    exec: Execution,
) -> Result<Dictionary, DictionaryError> {
    if docs.is_empty() {
        return Err(DictionaryError::EmptyCorpus);
    }
    if min_lowercase_count == 0 {
        return Err(DictionaryError::InvalidParameter("min_lowercase_count"));
    }
    if top_n == 0 {
        return Err(DictionaryError::InvalidParameter("top_n"));
    }
    let counts = exec
        .map(docs, missing_title_words)
        .into_iter()
        .fold(HashMap::new(), merge_counts);
    Ok(filter_counts(&counts, min_lowercase_count, top_n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictGrowthPoint {
    pub dict_size: usize,
    pub decomposable_docs: usize,
    /// `decomposable_docs` over the no-dictionary count; `None` when no
    /// document decomposes without a dictionary.
    pub decomposable_ratio_vs_no_dict: Option<f64>,
    /// Text-span samples plus one termination sample per decomposable
    /// document.
    pub samples_from_text: usize,
    pub samples_from_dict: usize,
}

/// What the full dictionary does for one document: the greedy path taken
/// with every entry available, summarized by the worst rank it needs.
#[derive(Debug, Clone, Copy)]
struct RescueProfile {
    /// Rescues ranks must all be below this size; 0 for text-only titles.
    min_dict_size: usize,
    text_spans: usize,
    dict_spans: usize,
}

fn rescue_profile(doc: &Document, dict: &Dictionary) -> Option<RescueProfile> {
    let title = segment(&doc.title);
    let text = segment(&doc.text);
    let d = TextIndex::new(&text).decompose_with(&title, dict)?;
    let mut min_dict_size = 0;
    let mut dict_spans = 0;
    for s in d
        .spans
        .iter()
        .filter(|s| s.origin == SpanOrigin::DictionaryWord)
    {
        let rank = dict
            .rank(&s.matched_text.to_lowercase())
            .expect("rescued word is in the dictionary");
        min_dict_size = min_dict_size.max(rank + 1);
        dict_spans += 1;
    }
    Some(RescueProfile {
        min_dict_size,
        text_spans: d.spans.len() - dict_spans,
        dict_spans,
    })
}

/// Decomposability as the dictionary grows through `sizes`.
///
/// Text matches never depend on the dictionary and a rescue only happens
/// where no text match exists, so the greedy path under any prefix agrees
/// with the full-dictionary path up to its first rescue that falls outside
/// the prefix, where it fails. One full-dictionary pass per document is
/// therefore enough for every size.
pub fn growth_curve(
    docs: &[Document],
    dict: &Dictionary,
    sizes: &[usize],
    exec: Execution,
) -> Result<Vec<DictGrowthPoint>, DictionaryError> {
    if sizes.windows(2).any(|w| w[0] > w[1]) || sizes.iter().any(|&s| s > dict.len()) {
        return Err(DictionaryError::InvalidSizes { len: dict.len() });
    }
    let profiles: Vec<RescueProfile> = exec
        .map(docs, |d| rescue_profile(d, dict))
        .into_iter()
        .flatten()
        .collect();
    let baseline = profiles.iter().filter(|p| p.min_dict_size == 0).count();
    Ok(sizes
        .iter()
        .map(|&size| {
            let mut point = DictGrowthPoint {
                dict_size: size,
                decomposable_docs: 0,
                decomposable_ratio_vs_no_dict: None,
                samples_from_text: 0,
                samples_from_dict: 0,
            };
            for p in profiles.iter().filter(|p| p.min_dict_size <= size) {
                point.decomposable_docs += 1;
                point.samples_from_text += p.text_spans + 1;
                point.samples_from_dict += p.dict_spans;
            }
            point.decomposable_ratio_vs_no_dict =
                (baseline > 0).then(|| point.decomposable_docs as f64 / baseline as f64);
            point
        })
        .collect())
}
