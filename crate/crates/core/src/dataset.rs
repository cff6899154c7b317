//! Sequential question-answer training samples from decomposed titles.
//!
//! A title decomposed into spans `D1..Dp` yields `p + 1` samples: the
//! question of sample `i` is `D1 + .. + D(i-1)` (empty for the first), its
//! answer is `Di`, and the last sample answers the termination symbol.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, RecordError};
use crate::decompose::{decompose_document, Decomposition, RescueLexicon, SpanOrigin};
use crate::exec::Execution;

/// Answer that ends a title.
pub const TERMINAL_SYMBOL: &str = "_";
/// Appended to every document text; the terminal symbol sits on its own
/// line.
pub const TERMINAL_SUFFIX: &str = "\n_";

/// `text` with the terminal symbol appended.
pub fn with_terminal(text: &str) -> String {
    let mut s = String::with_capacity(text.len() + TERMINAL_SUFFIX.len());
    s.push_str(text);
    s.push_str(TERMINAL_SUFFIX);
    s
}

/// Character offset of the terminal symbol in `with_terminal(text)`.
pub fn terminal_offset(text: &str) -> usize {
    text.chars().count() + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleOrigin {
    TextSpan,
    DictionaryWord,
    Termination,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub doc_id: String,
    pub question: String,
    /// Document text with the terminal suffix.
    pub text: String,
    pub answer: String,
    /// Character offset of `answer` in `text`; `None` for dictionary words.
    #[serde(rename = "answer_start")]
    pub answer_char_start: Option<usize>,
    pub is_termination: bool,
    pub origin: SampleOrigin,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("document `{doc_id}`: {message}")]
    Mismatch { doc_id: String, message: String },
    #[error("document `{doc_id}`: answer offset does not locate `{answer}` in the text")]
    BadOffset { doc_id: String, answer: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `chars[start..start+len(needle)] == needle`, measured in scalar values.
fn occurs_at(haystack: &str, start: usize, needle: &str) -> bool {
    let Some((byte_start, _)) = haystack
        .char_indices()
        .nth(start)
        .or_else(|| (start == haystack.chars().count()).then_some((haystack.len(), ' ')))
    else {
        return false;
    };
    haystack[byte_start..].starts_with(needle)
}

/// Builds the samples for one document.
pub fn build_samples(
    doc: &Document,
    decomp: &Decomposition,
) -> Result<Vec<TrainingSample>, DatasetError> {
    let mismatch = |message: String| DatasetError::Mismatch {
        doc_id: doc.doc_id.clone(),
        message,
    };
    if decomp.spans.is_empty() {
        return Err(mismatch("empty decomposition".into()));
    }
    if decomp.title != doc.title || decomp.span_texts().collect::<String>() != doc.title {
        return Err(mismatch("decomposition does not tile the title".into()));
    }
    let text = with_terminal(&doc.text);
    let mut samples = Vec::with_capacity(decomp.spans.len() + 1);
    let mut question = String::new();
    for span in &decomp.spans {
        let (start, origin) = match span.origin {
            SpanOrigin::TextSpan => {
                let start = span.text_char_range.start;
                if !occurs_at(&doc.text, start, &span.matched_text)
                    || span.text_char_range.len() != span.matched_text.chars().count()
                {
                    return Err(mismatch(format!(
                        "span `{}` is not at {:?} in the text",
                        span.matched_text, span.text_char_range
                    )));
                }
                (Some(start), SampleOrigin::TextSpan)
            }
            SpanOrigin::DictionaryWord => (None, SampleOrigin::DictionaryWord),
        };
        samples.push(TrainingSample {
            doc_id: doc.doc_id.clone(),
            question: question.clone(),
            text: text.clone(),
            answer: span.matched_text.clone(),
            answer_char_start: start,
            is_termination: false,
            origin,
        });
        question.push_str(&span.matched_text);
    }
    samples.push(TrainingSample {
        doc_id: doc.doc_id.clone(),
        question,
        text,
        answer: TERMINAL_SYMBOL.to_owned(),
        answer_char_start: Some(terminal_offset(&doc.text)),
        is_termination: true,
        origin: SampleOrigin::Termination,
    });
    Ok(samples)
}

/// Receives each document's samples as one contiguous block.
pub trait SampleSink {
    fn write_block(&mut self, samples: &[TrainingSample]) -> io::Result<()>;
}

impl SampleSink for Vec<TrainingSample> {
    fn write_block(&mut self, samples: &[TrainingSample]) -> io::Result<()> {
        self.extend_from_slice(samples);
        Ok(())
    }
}

/// One JSON object per line.
pub struct JsonlSampleWriter<W: Write> {
    out: W,
}

impl<W: Write> JsonlSampleWriter<W> {
    pub fn new(out: W) -> Self {
        JsonlSampleWriter { out }
    }

    pub fn into_inner(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> SampleSink for JsonlSampleWriter<W> {
    fn write_block(&mut self, samples: &[TrainingSample]) -> io::Result<()> {
        for s in samples {
            serde_json::to_writer(&mut self.out, s)?;
            self.out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn read_samples_jsonl<R: BufRead>(r: R) -> Result<Vec<TrainingSample>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub documents_seen: usize,
    pub documents_decomposable: usize,
    pub samples_emitted: usize,
    pub termination_samples: usize,
    pub dictionary_samples: usize,
    pub malformed_records: usize,
    /// Mean span count over decomposable documents; 0 when there are none.
    pub mean_spans_per_title: f64,
    #[serde(skip)]
    spans_total: usize,
}

impl DatasetStats {
    fn record(&mut self, samples: &[TrainingSample]) {
        self.documents_decomposable += 1;
        self.samples_emitted += samples.len();
        self.spans_total += samples.len() - 1;
        for s in samples {
            match s.origin {
                SampleOrigin::Termination => self.termination_samples += 1,
                SampleOrigin::DictionaryWord => self.dictionary_samples += 1,
                SampleOrigin::TextSpan => {}
            }
        }
    }

    fn finish(mut self) -> Self {
        self.mean_spans_per_title = if self.documents_decomposable == 0 {
            0.0
        } else {
            self.spans_total as f64 / self.documents_decomposable as f64
        };
        self
    }
}

/// Documents are processed in chunks of this size; each chunk is decomposed
/// with `exec` and written in input order.
const CHUNK: usize = 512;

/// Decomposes every document and streams the samples of each decomposable
/// one into `sink`. Malformed records are counted and skipped.
pub fn build_corpus_dataset<I, L, S>(
    corpus: I,
    lexicon: &L,
    sink: &mut S,
    exec: Execution,
) -> Result<DatasetStats, DatasetError>
where
    I: IntoIterator<Item = Result<Document, RecordError>>,
    L: RescueLexicon + Sync + ?Sized,
    S: SampleSink + ?Sized,
{
    let mut stats = DatasetStats::default();
    let mut chunk = Vec::with_capacity(CHUNK);
    let mut flush =
        |chunk: &mut Vec<Document>, stats: &mut DatasetStats| -> Result<(), DatasetError> {
            let built = exec.map(chunk, |doc| {
                decompose_document(doc, lexicon).map(|d| build_samples(doc, &d))
            });
            for samples in built.into_iter().flatten() {
                let samples = samples?;
                sink.write_block(&samples)?;
                stats.record(&samples);
            }
            chunk.clear();
            Ok(())
        };
    for record in corpus {
        match record {
            Ok(doc) => {
                stats.documents_seen += 1;
                chunk.push(doc);
                if chunk.len() == CHUNK {
                    flush(&mut chunk, &mut stats)?;
                }
            }
            Err(RecordError::Malformed { .. }) => stats.malformed_records += 1,
            Err(RecordError::Io { source, .. }) => return Err(source.into()),
        }
    }
    flush(&mut chunk, &mut stats)?;
    Ok(stats.finish())
}

#[derive(Serialize, Deserialize)]
pub struct SquadFile {
    pub data: Vec<SquadEntry>,
}

#[derive(Serialize, Deserialize)]
pub struct SquadEntry {
    pub id: String,
    pub context: String,
    pub qas: Vec<SquadQa>,
}

#[derive(Serialize, Deserialize)]
pub struct SquadQa {
    pub id: String,
    pub question: String,
    pub answers: Vec<SquadAnswer>,
}

#[derive(Serialize, Deserialize)]
pub struct SquadAnswer {
    pub text: String,
    /// Character offset into the context; `-1` for dictionary words.
    pub answer_start: i64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_dictionary_word: bool,
}

fn check_sample(s: &TrainingSample) -> Result<(), DatasetError> {
    let ok = match (s.origin, s.answer_char_start) {
        (SampleOrigin::DictionaryWord, None) => !s.is_termination,
        (SampleOrigin::Termination, Some(start)) => {
            s.is_termination
                && s.answer == TERMINAL_SYMBOL
                && occurs_at(&s.text, start, TERMINAL_SYMBOL)
        }
        (SampleOrigin::TextSpan, Some(start)) => {
            !s.is_termination && !s.answer.is_empty() && occurs_at(&s.text, start, &s.answer)
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(DatasetError::BadOffset {
            doc_id: s.doc_id.clone(),
            answer: s.answer.clone(),
        })
    }
}

/// Writes an extractive-QA style nested JSON file, one context per run of
/// consecutive samples sharing a document. Returns the number of QA entries
/// written.
pub fn export_squad_format<I, W>(samples: I, mut out: W) -> Result<usize, DatasetError>
where
    I: IntoIterator<Item = TrainingSample>,
    W: Write,
{
    fn flush_entry<W: Write>(out: &mut W, entry: &SquadEntry, first: &mut bool) -> io::Result<()> {
        if !*first {
            out.write_all(b",")?;
        }
        *first = false;
        serde_json::to_writer(&mut *out, entry)?;
        Ok(())
    }

    out.write_all(b"{\"data\":[")?;
    let mut first = true;
    let mut written = 0;
    let mut current: Option<SquadEntry> = None;
    for s in samples {
        check_sample(&s)?;
        let same_doc = current.as_ref().is_some_and(|e| e.id == s.doc_id);
        if same_doc && current.as_ref().is_some_and(|e| e.context != s.text) {
            return Err(DatasetError::Mismatch {
                doc_id: s.doc_id,
                message: "samples disagree on the context".into(),
            });
        }
        if !same_doc {
            if let Some(entry) = current.take() {
                flush_entry(&mut out, &entry, &mut first)?;
            }
            current = Some(SquadEntry {
                id: s.doc_id.clone(),
                context: s.text.clone(),
                qas: Vec::new(),
            });
        }
        let entry = current.as_mut().expect("entry opened above");
        let index = entry.qas.len();
        entry.qas.push(SquadQa {
            id: format!("{}-{index}", s.doc_id),
            question: s.question,
            answers: vec![SquadAnswer {
                text: s.answer,
                answer_start: s.answer_char_start.map_or(-1, |v| v as i64),
                is_dictionary_word: s.origin == SampleOrigin::DictionaryWord,
            }],
        });
        written += 1;
    }
    if let Some(entry) = current.take() {
        flush_entry(&mut out, &entry, &mut first)?;
    }
    out.write_all(b"]}")?;
    out.flush()?;
    Ok(written)
}

/// Re-checks every answer offset in an exported file. Returns the number of
/// QA entries checked.
pub fn verify_squad_export<R: io::Read>(r: R) -> Result<usize, DatasetError> {
    let file: SquadFile = serde_json::from_reader(r).map_err(|e| DatasetError::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    let mut checked = 0;
    for entry in &file.data {
        for qa in &entry.qas {
            for a in &qa.answers {
                let ok = if a.is_dictionary_word {
                    a.answer_start == -1
                } else {
                    a.answer_start >= 0
                        && occurs_at(&entry.context, a.answer_start as usize, &a.text)
                };
                if !ok {
                    return Err(DatasetError::BadOffset {
                        doc_id: entry.id.clone(),
                        answer: a.text.clone(),
                    });
                }
            }
            checked += 1;
        }
    }
    Ok(checked)
}
