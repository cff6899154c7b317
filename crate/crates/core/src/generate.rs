//! Headline generation as a sequence of extractive question-answer steps.
//!
//! The first question is empty. Each answer is a span of the text and is
//! appended to the question for the next step. Generation stops when the
//! answer is the termination symbol, which is always present because it is
//! appended to every text.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::dataset::{with_terminal, TERMINAL_SYMBOL};
use crate::decompose::{Decomposition, SpanOrigin};
use crate::segment::{segment, TokenKind};

pub const DEFAULT_MAX_STEPS: usize = 32;

/// One answer from an answerer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    /// Character offset into the text the answerer was given.
    pub start: Option<usize>,
    pub is_termination: bool,
}

impl Answer {
    pub fn span(text: impl Into<String>, start: usize) -> Self {
        Answer {
            text: text.into(),
            start: Some(start),
            is_termination: false,
        }
    }

    /// The termination answer for `text` (which already carries the
    /// terminal suffix).
    pub fn termination(text: &str) -> Self {
        Answer {
            text: TERMINAL_SYMBOL.to_owned(),
            start: Some(text.chars().count().saturating_sub(1)),
            is_termination: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AnswererError {
    #[error("request timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("answer `{answer}` is not a substring of the text at {start:?}")]
    NotASubstring {
        answer: String,
        start: Option<usize>,
    },
    #[error("unexpected question `{0}`")]
    QuestionMismatch(String),
}

/// The model slot: given the headline so far and the text, extract the next
/// span.
pub trait Answerer: Send + Sync {
    fn id(&self) -> &str;
    fn answer(&self, question: &str, text: &str) -> Result<Answer, AnswererError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStep {
    pub question: String,
    pub answer: String,
    pub answer_char_start: Option<usize>,
    pub is_termination: bool,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub doc_id: String,
    pub steps: Vec<GenerationStep>,
    pub headline: String,
    pub completed: bool,
    pub answerer_id: String,
    /// Set when the answerer failed; the steps before the failure are kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, thiserror::Error)]
#[error("generation for `{}` aborted after {} steps: {source}", partial.doc_id, partial.steps.len())]
pub struct GenerationAborted {
    pub partial: Box<GenerationTrace>,
    #[source]
    pub source: AnswererError,
}

/// Checks that a non-termination answer occurs verbatim in `text`, resolving
/// a missing offset to the first occurrence.
pub fn locate_answer(answer: &Answer, text: &str) -> Result<usize, AnswererError> {
    let violation = || AnswererError::NotASubstring {
        answer: answer.text.clone(),
        start: answer.start,
    };
    if answer.text.is_empty() {
        return Err(violation());
    }
    match answer.start {
        Some(start) => {
            let byte = text
                .char_indices()
                .nth(start)
                .map(|(b, _)| b)
                .ok_or_else(violation)?;
            if text[byte..].starts_with(&answer.text) {
                Ok(start)
            } else {
                Err(violation())
            }
        }
        None => text
            .find(&answer.text)
            .map(|b| text[..b].chars().count())
            .ok_or_else(violation),
    }
}

/// Runs the question-answer loop for one document, for at most `max_steps`
/// steps.
pub fn generate<A: Answerer + ?Sized>(
    doc: &Document,
    answerer: &A,
    max_steps: usize,
) -> Result<GenerationTrace, GenerationAborted> {
    let text = with_terminal(&doc.text);
    let mut trace = GenerationTrace {
        doc_id: doc.doc_id.clone(),
        steps: Vec::new(),
        headline: String::new(),
        completed: false,
        answerer_id: answerer.id().to_owned(),
        error: None,
    };
    let abort = |mut trace: GenerationTrace, source: AnswererError| {
        trace.error = Some(source.to_string());
        Err(GenerationAborted {
            partial: Box::new(trace),
            source,
        })
    };
    while trace.steps.len() < max_steps.max(1) {
        let started = Instant::now();
        let answer = match answerer.answer(&trace.headline, &text) {
            Ok(a) => a,
            Err(e) => return abort(trace, e),
        };
        let latency_ms = started.elapsed().as_secs_f64() * 1e3;
        let start = if answer.is_termination {
            answer.start
        } else {
            match locate_answer(&answer, &text) {
                Ok(s) => Some(s),
                Err(e) => return abort(trace, e),
            }
        };
        trace.steps.push(GenerationStep {
            question: trace.headline.clone(),
            answer: answer.text.clone(),
            answer_char_start: start,
            is_termination: answer.is_termination,
            latency_ms,
        });
        if answer.is_termination {
            trace.completed = true;
            break;
        }
        trace.headline.push_str(&answer.text);
    }
    Ok(trace)
}

/// Replays a known decomposition: emits span `i` when asked with the
/// concatenation of spans `0..i`, then terminates.
#[derive(Debug, Clone)]
pub struct OracleAnswerer {
    spans: Vec<(String, usize)>,
}

impl OracleAnswerer {
    /// Only text-only decompositions can be replayed, since every answer
    /// must be a span of the text.
    pub fn new(decomp: &Decomposition) -> Result<Self, AnswererError> {
        if decomp.spans.is_empty() {
            return Err(AnswererError::Malformed("empty decomposition".into()));
        }
        decomp
            .spans
            .iter()
            .map(|s| match s.origin {
                SpanOrigin::TextSpan => Ok((s.matched_text.clone(), s.text_char_range.start)),
                SpanOrigin::DictionaryWord => Err(AnswererError::Malformed(format!(
                    "dictionary word `{}` cannot be replayed from the text",
                    s.matched_text
                ))),
            })
            .collect::<Result<_, _>>()
            .map(|spans| OracleAnswerer { spans })
    }
}

impl Answerer for OracleAnswerer {
    fn id(&self) -> &str {
        "oracle"
    }

    fn answer(&self, question: &str, text: &str) -> Result<Answer, AnswererError> {
        let mismatch = || AnswererError::QuestionMismatch(question.to_owned());
        let mut rest = question;
        for (span, start) in &self.spans {
            if rest.is_empty() {
                return Ok(Answer::span(span.clone(), *start));
            }
            rest = rest.strip_prefix(span.as_str()).ok_or_else(mismatch)?;
        }
        if rest.is_empty() {
            Ok(Answer::termination(text))
        } else {
            Err(mismatch())
        }
    }
}

/// Deterministic no-model baseline: answers the opening of the text, up to
/// the end of the first sentence or `max_answer_tokens` word tokens, then
/// terminates.
#[derive(Debug, Clone)]
pub struct LeadAnswerer {
    max_answer_tokens: usize,
}

impl LeadAnswerer {
    pub fn new(max_answer_tokens: usize) -> Self {
        LeadAnswerer {
            max_answer_tokens: max_answer_tokens.max(1),
        }
    }

    fn lead(&self, text: &str) -> String {
        let tokens = segment(text);
        let mut words = 0;
        let mut end = 0;
        for (i, tok) in tokens.tokens().iter().enumerate() {
            let is_word = tok.kind != TokenKind::Other;
            if is_word && words == self.max_answer_tokens {
                break;
            }
            if tok.text == "\n" && i > 0 {
                break;
            }
            words += is_word as usize;
            end = i + 1;
            if matches!(tok.text.as_str(), "." | "!" | "?") {
                break;
            }
        }
        let toks = &tokens.tokens()[..end];
        let trimmed = toks
            .iter()
            .rposition(|t| !t.text.chars().all(char::is_whitespace))
            .map_or(end.max(1), |p| p + 1);
        tokens.slice_text(0..trimmed.min(tokens.len()))
    }
}

impl Answerer for LeadAnswerer {
    fn id(&self) -> &str {
        "lead"
    }

    fn answer(&self, question: &str, text: &str) -> Result<Answer, AnswererError> {
        if question.is_empty() {
            Ok(Answer::span(self.lead(text), 0))
        } else {
            Ok(Answer::termination(text))
        }
    }
}

#[derive(Serialize)]
struct RemoteRequest<'a> {
    question: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct RemoteResponse {
    answer: String,
    answer_start: i64,
    is_termination: bool,
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct InFlight {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
        }
        *active += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut active = self.0.active.lock().unwrap_or_else(|e| e.into_inner());
        *active -= 1;
        self.0.freed.notify_one();
    }
}

/// Answerer behind an HTTP endpoint. Each step POSTs
/// `{"question", "text"}` and expects `{"answer", "answer_start",
/// "is_termination"}`.
pub struct RemoteAnswerer {
    endpoint: String,
    agent: ureq::Agent,
    in_flight: InFlight,
}

impl RemoteAnswerer {
    pub fn new(endpoint: impl Into<String>, timeout_ms: u64, max_in_flight: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteAnswerer {
            endpoint: endpoint.into(),
            agent,
            in_flight: InFlight {
                limit: max_in_flight.max(1),
                active: Mutex::new(0),
                freed: Condvar::new(),
            },
        }
    }
}

impl Answerer for RemoteAnswerer {
    fn id(&self) -> &str {
        &self.endpoint
    }

    fn answer(&self, question: &str, text: &str) -> Result<Answer, AnswererError> {
        let _slot = self.in_flight.acquire();
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(RemoteRequest { question, text })
            .map_err(map_transport)?;
        if resp.status() != 200 {
            return Err(AnswererError::Malformed(format!(
                "status {}",
                resp.status()
            )));
        }
        let body: RemoteResponse = resp.body_mut().read_json().map_err(|e| match e {
            ureq::Error::Timeout(_) => AnswererError::Timeout,
            other => AnswererError::Malformed(other.to_string()),
        })?;
        let start = usize::try_from(body.answer_start).map_err(|_| {
            AnswererError::Malformed(format!("negative answer_start {}", body.answer_start))
        })?;
        let answer = Answer {
            text: body.answer,
            start: Some(start),
            is_termination: body.is_termination,
        };
        if !answer.is_termination {
            locate_answer(&answer, text)?;
        }
        Ok(answer)
    }
}

fn map_transport(e: ureq::Error) -> AnswererError {
    match e {
        ureq::Error::Timeout(_) => AnswererError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => AnswererError::Timeout,
        other => AnswererError::Transport(other.to_string()),
    }
}
