//! News corpus records and the JSONL reader.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    /// Publisher domain, e.g. `nytimes.com`.
    pub source: String,
    #[serde(
        serialize_with = "serialize_date",
        deserialize_with = "deserialize_date"
    )]
    pub published_at: NaiveDate,
    pub title: String,
    pub text: String,
}

fn serialize_date<S: Serializer>(date: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(&date.format("%Y-%m-%d"))
}

/// Accepts a plain `YYYY-MM-DD` date or an RFC 3339 timestamp.
fn deserialize_date<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
    let raw = String::deserialize(d)?;
    if let Ok(date) = NaiveDate::parse_from_str(&raw, "%Y-%m-%d") {
        return Ok(date);
    }
    DateTime::parse_from_rfc3339(&raw)
        .map(|dt| dt.date_naive())
        .map_err(|_| serde::de::Error::custom(format!("invalid date `{raw}`")))
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Io { line: usize, source: io::Error },
}

impl Document {
    /// Parses one JSONL record and checks the record-level invariants.
    pub fn from_json_line(line: &str) -> Result<Document, String> {
        let doc: Document = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if doc.title.is_empty() {
            return Err("empty title".into());
        }
        if doc.text.is_empty() {
            return Err("empty text".into());
        }
        Ok(doc)
    }
}

/// Streams documents from JSONL. Blank lines are ignored; malformed records
/// and repeated ids are yielded as [`RecordError::Malformed`] so callers can
/// count and skip them.
pub struct CorpusReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
    seen_ids: HashSet<String>,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R) -> Self {
        CorpusReader {
            lines: reader.lines(),
            line_no: 0,
            seen_ids: HashSet::new(),
        }
    }
}

impl CorpusReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(CorpusReader::new(BufReader::new(File::open(path)?)))
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<Document, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line_no = self.line_no;
            let line = match line {
                Ok(l) => l,
                Err(source) => {
                    return Some(Err(RecordError::Io {
                        line: line_no,
                        source,
                    }))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let result = Document::from_json_line(&line).and_then(|doc| {
                if self.seen_ids.insert(doc.doc_id.clone()) {
                    Ok(doc)
                } else {
                    Err(format!("duplicate id `{}`", doc.doc_id))
                }
            });
            return Some(result.map_err(|message| RecordError::Malformed {
                line: line_no,
                message,
            }));
        }
    }
}

/// A fully loaded corpus plus the number of skipped malformed records.
#[derive(Debug, Default)]
pub struct LoadedCorpus {
    pub documents: Vec<Document>,
    pub malformed: usize,
}

/// Reads every record, skipping malformed ones. I/O failures are fatal.
pub fn load_corpus<R: BufRead>(reader: R) -> io::Result<LoadedCorpus> {
    let mut out = LoadedCorpus::default();
    for record in CorpusReader::new(reader) {
        match record {
            Ok(doc) => out.documents.push(doc),
            Err(RecordError::Malformed { .. }) => out.malformed += 1,
            Err(RecordError::Io { source, .. }) => return Err(source),
        }
    }
    Ok(out)
}

pub fn load_corpus_file(path: impl AsRef<Path>) -> io::Result<LoadedCorpus> {
    load_corpus(BufReader::new(File::open(path)?))
}
