//! SQLite-backed persistence for studies, sessions, tasks and scores.

use std::collections::HashSet;
use std::path::Path;
use std::sync::Mutex;

use headqa_core::stats::{Score, ScoreRecord, TitleKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rusqlite::{params, Connection, OptionalExtension, Transaction};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

pub const DEFAULT_BATCH_SIZE: usize = 100;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS studies (
    serial INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    seed INTEGER NOT NULL,
    batch_size INTEGER NOT NULL,
    one_per_source INTEGER NOT NULL,
    allowed_sources TEXT,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS tasks (
    serial INTEGER PRIMARY KEY,
    study INTEGER NOT NULL REFERENCES studies(serial),
    position INTEGER NOT NULL,
    doc_id TEXT NOT NULL,
    source TEXT NOT NULL,
    text TEXT NOT NULL,
    real_title TEXT NOT NULL,
    generated_title TEXT NOT NULL,
    UNIQUE (study, position),
    UNIQUE (study, doc_id)
);
CREATE TABLE IF NOT EXISTS sessions (
    serial INTEGER PRIMARY KEY,
    study INTEGER NOT NULL REFERENCES studies(serial),
    evaluator_id TEXT NOT NULL,
    complete INTEGER NOT NULL DEFAULT 0,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS session_tasks (
    session INTEGER NOT NULL REFERENCES sessions(serial),
    ordinal INTEGER NOT NULL,
    task INTEGER NOT NULL REFERENCES tasks(serial),
    real_first INTEGER NOT NULL,
    PRIMARY KEY (session, ordinal),
    UNIQUE (session, task)
);
CREATE TABLE IF NOT EXISTS scores (
    session INTEGER NOT NULL REFERENCES sessions(serial),
    task INTEGER NOT NULL REFERENCES tasks(serial),
    title_kind TEXT NOT NULL,
    score INTEGER NOT NULL CHECK (score BETWEEN 0 AND 4),
    submitted_at TEXT NOT NULL,
    PRIMARY KEY (session, task, title_kind)
);
";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyDocument {
    pub id: String,
    pub source: String,
    pub title: String,
    pub text: String,
    #[serde(default)]
    pub generated_title: Option<String>,
    /// Accepted so corpus records can be posted as they are.
    #[serde(default)]
    pub published_at: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub name: String,
    /// Absent: derived from the store's default seed and the study number.
    pub seed: Option<u64>,
    pub batch_size: usize,
    pub one_per_source: bool,
    pub allowed_sources: Option<Vec<String>>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            name: String::new(),
            seed: None,
            batch_size: DEFAULT_BATCH_SIZE,
            one_per_source: true,
            allowed_sources: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct StudyInfo {
    pub study_id: String,
    pub name: String,
    pub seed: u64,
    pub batch_size: usize,
    pub tasks: usize,
    pub sessions: usize,
    pub scored_tasks: usize,
    pub created_at: String,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct SessionInfo {
    pub session_id: String,
    pub study_id: String,
    pub evaluator_id: String,
    pub status: &'static str,
    pub created_at: String,
    pub progress: Progress,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct TitleView {
    pub position: usize,
    pub text: String,
}

/// What an evaluator sees for one task. Titles are in presentation order
/// and carry nothing that identifies which one is real.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct TaskView {
    pub task_id: String,
    pub session_id: String,
    pub doc_id: String,
    pub text: String,
    pub titles: [TitleView; 2],
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct NextTask {
    pub done: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskView>,
    pub progress: Progress,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Ack {
    pub task_id: String,
    pub accepted: bool,
    pub duplicate: bool,
    pub progress: Progress,
}

/// One exported score with the session it came from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ExportRow {
    #[serde(flatten)]
    pub record: ScoreRecord,
    pub session_id: String,
    pub session_complete: bool,
}

fn format_id(prefix: &str, serial: i64) -> String {
    format!("{prefix}-{serial:06}")
}

fn parse_id(prefix: &str, what: &'static str, id: &str) -> Result<i64, ServiceError> {
    id.strip_prefix(prefix)
        .and_then(|s| s.strip_prefix('-'))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ServiceError::not_found(what, id))
}

fn kind_name(kind: TitleKind) -> &'static str {
    match kind {
        TitleKind::Real => "real",
        TitleKind::Generated => "generated",
    }
}

fn kind_from(name: &str) -> Result<TitleKind, ServiceError> {
    match name {
        "real" => Ok(TitleKind::Real),
        "generated" => Ok(TitleKind::Generated),
        other => Err(ServiceError::Corrupt(format!(
            "unknown title kind `{other}`"
        ))),
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Task order of a study: a permutation of document indices drawn from the
/// study seed.
pub fn task_order(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Whether the real title is shown first, for each task of a session. Each
/// session has its own stream under the study seed; stream 0 is reserved for
/// the task order.
pub fn presentation_orders(seed: u64, session_serial: u64, n: usize) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(session_serial);
    (0..n).map(|_| rng.random_bool(0.5)).collect()
}

pub struct Store {
    conn: Mutex<Connection>,
    default_seed: u64,
}

impl Store {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        Self::init(Connection::open(path)?)
    }

    pub fn in_memory() -> Result<Self, ServiceError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self, ServiceError> {
        conn.execute_batch("PRAGMA foreign_keys = ON;")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Store {
            conn: Mutex::new(conn),
            default_seed: 0,
        })
    }

    /// Seed source for studies created without an explicit seed.
    pub fn with_default_seed(mut self, seed: u64) -> Self {
        self.default_seed = seed;
        self
    }

    fn with_tx<T>(
        &self,
        f: impl FnOnce(&Transaction<'_>) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let mut conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        let tx = conn.transaction()?;
        let out = f(&tx)?;
        tx.commit()?;
        Ok(out)
    }

    pub fn create_study(
        &self,
        docs: &[StudyDocument],
        config: &StudyConfig,
    ) -> Result<StudyInfo, ServiceError> {
        if docs.is_empty() {
            return Err(ServiceError::Invalid(
                "a study needs at least one document".into(),
            ));
        }
        if config.batch_size == 0 {
            return Err(ServiceError::Invalid(
                "batch_size must be at least 1".into(),
            ));
        }
        let allowed: Option<HashSet<&str>> = config
            .allowed_sources
            .as_ref()
            .map(|v| v.iter().map(String::as_str).collect());
        let mut sources = HashSet::new();
        let mut ids = HashSet::new();
        for d in docs {
            if d.title.is_empty() || d.text.is_empty() {
                return Err(ServiceError::Invalid(format!(
                    "document `{}` needs a title and text",
                    d.id
                )));
            }
            if d.generated_title.as_deref().is_none_or(str::is_empty) {
                return Err(ServiceError::Invalid(format!(
                    "document `{}` has no generated title",
                    d.id
                )));
            }
            if !ids.insert(d.id.as_str()) {
                return Err(ServiceError::Invalid(format!(
                    "document `{}` appears twice",
                    d.id
                )));
            }
            if let Some(allowed) = &allowed {
                if !allowed.contains(d.source.as_str()) {
                    return Err(ServiceError::Invalid(format!(
                        "source `{}` is not allowed",
                        d.source
                    )));
                }
            }
            if config.one_per_source && !sources.insert(d.source.as_str()) {
                return Err(ServiceError::Invalid(format!(
                    "more than one document from `{}`",
                    d.source
                )));
            }
        }
        let allowed_json = config
            .allowed_sources
            .as_ref()
            .map(|v| serde_json::to_string(v).expect("strings serialize"));
        self.with_tx(|tx| {
            let next: i64 = tx.query_row("SELECT COALESCE(MAX(serial), 0) + 1 FROM studies", [], |r| r.get(0))?;
            let seed = config.seed.unwrap_or_else(|| self.default_seed.wrapping_add(next as u64));
            tx.execute(
                "INSERT INTO studies (name, seed, batch_size, one_per_source, allowed_sources, created_at)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
                params![
                    config.name,
                    seed as i64,
                    config.batch_size as i64,
                    config.one_per_source,
                    allowed_json,
                    now()
                ],
            )?;
            let study = tx.last_insert_rowid();
            let mut insert = tx.prepare(
                "INSERT INTO tasks (study, position, doc_id, source, text, real_title, generated_title)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            )?;
            for (position, &i) in task_order(seed, docs.len()).iter().enumerate() {
                let d = &docs[i];
                insert.execute(params![
                    study,
                    position as i64,
                    d.id,
                    d.source,
                    d.text,
                    d.title,
                    d.generated_title.as_deref().unwrap_or_default()
                ])?;
            }
            drop(insert);
            study_info(tx, study)
        })
    }

    pub fn study(&self, study_id: &str) -> Result<StudyInfo, ServiceError> {
        let study = parse_id("st", "study", study_id)?;
        self.with_tx(|tx| study_info(tx, study))
    }

    /// Resumes the evaluator's active session in the study, or starts a new
    /// one over the next batch of tasks they have not been given yet.
    /// Returns the session and whether it was newly created.
    pub fn open_session(
        &self,
        study_id: &str,
        evaluator_id: &str,
    ) -> Result<(SessionInfo, bool), ServiceError> {
        if evaluator_id.trim().is_empty() {
            return Err(ServiceError::Invalid(
                "evaluator_id must not be empty".into(),
            ));
        }
        let study = parse_id("st", "study", study_id)?;
        self.with_tx(|tx| {
            let (seed, batch_size) = tx
                .query_row("SELECT seed, batch_size FROM studies WHERE serial = ?1", [study], |r| {
                    Ok((r.get::<_, i64>(0)? as u64, r.get::<_, i64>(1)?))
                })
                .optional()?
                .ok_or_else(|| ServiceError::not_found("study", study_id))?;
            let active: Option<i64> = tx
                .query_row(
                    "SELECT serial FROM sessions WHERE study = ?1 AND evaluator_id = ?2 AND complete = 0
                     ORDER BY serial LIMIT 1",
                    params![study, evaluator_id],
                    |r| r.get(0),
                )
                .optional()?;
            if let Some(session) = active {
                return Ok((session_info(tx, session)?, false));
            }
            let remaining: Vec<i64> = tx
                .prepare(
                    "SELECT t.serial FROM tasks t
                     WHERE t.study = ?1 AND t.serial NOT IN (
                         SELECT st.task FROM session_tasks st JOIN sessions s ON s.serial = st.session
                         WHERE s.study = ?1 AND s.evaluator_id = ?2)
                     ORDER BY t.position LIMIT ?3",
                )?
                .query_map(params![study, evaluator_id, batch_size], |r| r.get(0))?
                .collect::<Result<_, _>>()?;
            if remaining.is_empty() {
                return Err(ServiceError::NothingLeft(evaluator_id.to_owned()));
            }
            tx.execute(
                "INSERT INTO sessions (study, evaluator_id, created_at) VALUES (?1, ?2, ?3)",
                params![study, evaluator_id, now()],
            )?;
            let session = tx.last_insert_rowid();
            let orders = presentation_orders(seed, session as u64, remaining.len());
            let mut insert =
                tx.prepare("INSERT INTO session_tasks (session, ordinal, task, real_first) VALUES (?1, ?2, ?3, ?4)")?;
            for (ordinal, (task, real_first)) in remaining.iter().zip(orders).enumerate() {
                insert.execute(params![session, ordinal as i64, task, real_first])?;
            }
            drop(insert);
            Ok((session_info(tx, session)?, true))
        })
    }

    pub fn session(&self, session_id: &str) -> Result<SessionInfo, ServiceError> {
        let session = parse_id("se", "session", session_id)?;
        self.with_tx(|tx| session_info(tx, session))
    }

    /// The first unscored task of an active session. When none is left the
    /// session becomes complete and a done marker is returned; asking again
    /// afterwards is an error.
    pub fn next_task(&self, session_id: &str) -> Result<NextTask, ServiceError> {
        let session = parse_id("se", "session", session_id)?;
        self.with_tx(|tx| {
            let info = session_info(tx, session)?;
            if info.status == "complete" {
                return Err(ServiceError::SessionComplete(session_id.to_owned()));
            }
            let next = tx
                .query_row(
                    "SELECT t.serial, t.doc_id, t.text, t.real_title, t.generated_title, st.real_first
                     FROM session_tasks st JOIN tasks t ON t.serial = st.task
                     WHERE st.session = ?1
                       AND NOT EXISTS (SELECT 1 FROM scores s WHERE s.session = st.session AND s.task = st.task)
                     ORDER BY st.ordinal LIMIT 1",
                    [session],
                    |r| {
                        Ok((
                            r.get::<_, i64>(0)?,
                            r.get::<_, String>(1)?,
                            r.get::<_, String>(2)?,
                            r.get::<_, String>(3)?,
                            r.get::<_, String>(4)?,
                            r.get::<_, bool>(5)?,
                        ))
                    },
                )
                .optional()?;
            let Some((task, doc_id, text, real, generated, real_first)) = next else {
                tx.execute("UPDATE sessions SET complete = 1 WHERE serial = ?1", [session])?;
                return Ok(NextTask {
                    done: true,
                    task: None,
                    progress: info.progress,
                });
            };
            let (first, second) = if real_first { (real, generated) } else { (generated, real) };
            Ok(NextTask {
                done: false,
                task: Some(TaskView {
                    task_id: format_id("tk", task),
                    session_id: info.session_id.clone(),
                    doc_id,
                    text,
                    titles: [
                        TitleView { position: 0, text: first },
                        TitleView { position: 1, text: second },
                    ],
                }),
                progress: info.progress,
            })
        })
    }

    /// Records the two scores of a task in presentation order. Resubmitting
    /// the same scores is acknowledged without new rows; different scores
    /// for an already scored task are a conflict.
    pub fn submit_scores(
        &self,
        session_id: &str,
        task_id: &str,
        scores: &[i64],
    ) -> Result<Ack, ServiceError> {
        let session = parse_id("se", "session", session_id)?;
        let task = parse_id("tk", "task", task_id)?;
        if scores.len() != 2 {
            return Err(ServiceError::Invalid(format!(
                "expected 2 scores, got {}",
                scores.len()
            )));
        }
        let parsed = [
            Score::new(scores[0]).map_err(|_| ServiceError::ScoreOutOfRange(scores[0]))?,
            Score::new(scores[1]).map_err(|_| ServiceError::ScoreOutOfRange(scores[1]))?,
        ];
        self.with_tx(|tx| {
            session_info(tx, session)?;
            let real_first: bool = tx
                .query_row(
                    "SELECT real_first FROM session_tasks WHERE session = ?1 AND task = ?2",
                    params![session, task],
                    |r| r.get(0),
                )
                .optional()?
                .ok_or_else(|| ServiceError::not_found("task", task_id))?;
            let kinds = if real_first {
                [TitleKind::Real, TitleKind::Generated]
            } else {
                [TitleKind::Generated, TitleKind::Real]
            };
            let mut wanted: Vec<(TitleKind, u8)> = kinds.iter().copied().zip(parsed.map(Score::value)).collect();
            wanted.sort();
            let mut existing: Vec<(TitleKind, u8)> = tx
                .prepare("SELECT title_kind, score FROM scores WHERE session = ?1 AND task = ?2")?
                .query_map(params![session, task], |r| Ok((r.get::<_, String>(0)?, r.get::<_, u8>(1)?)))?
                .map(|row| {
                    let (k, s) = row?;
                    Ok((kind_from(&k)?, s))
                })
                .collect::<Result<_, ServiceError>>()?;
            existing.sort();
            let duplicate = if existing.is_empty() {
                let at = now();
                let mut insert = tx.prepare(
                    "INSERT INTO scores (session, task, title_kind, score, submitted_at) VALUES (?1, ?2, ?3, ?4, ?5)",
                )?;
                for (kind, score) in &wanted {
                    insert.execute(params![session, task, kind_name(*kind), score, at])?;
                }
                false
            } else if existing == wanted {
                true
            } else {
                return Err(ServiceError::Conflict(task_id.to_owned()));
            };
            Ok(Ack {
                task_id: task_id.to_owned(),
                accepted: true,
                duplicate,
                progress: session_info(tx, session)?.progress,
            })
        })
    }

    /// All scores of a study, including sessions that are not complete.
    pub fn export(&self, study_id: &str) -> Result<Vec<ExportRow>, ServiceError> {
        let study = parse_id("st", "study", study_id)?;
        self.with_tx(|tx| {
            study_info(tx, study)?;
            let mut stmt = tx.prepare(
                "SELECT se.serial, se.evaluator_id, se.complete, t.doc_id, sc.title_kind, sc.score
                 FROM scores sc
                 JOIN sessions se ON se.serial = sc.session
                 JOIN tasks t ON t.serial = sc.task
                 JOIN session_tasks st ON st.session = sc.session AND st.task = sc.task
                 WHERE se.study = ?1
                 ORDER BY se.serial, st.ordinal, sc.title_kind DESC",
            )?;
            let rows = stmt.query_map([study], |r| {
                Ok((
                    r.get::<_, i64>(0)?,
                    r.get::<_, String>(1)?,
                    r.get::<_, bool>(2)?,
                    r.get::<_, String>(3)?,
                    r.get::<_, String>(4)?,
                    r.get::<_, i64>(5)?,
                ))
            })?;
            let mut out = Vec::new();
            for row in rows {
                let (session, evaluator_id, complete, doc_id, kind, score) = row?;
                out.push(ExportRow {
                    record: ScoreRecord {
                        evaluator_id,
                        doc_id,
                        title_kind: kind_from(&kind)?,
                        score: Score::new(score)
                            .map_err(|e| ServiceError::Corrupt(e.to_string()))?,
                    },
                    session_id: format_id("se", session),
                    session_complete: complete,
                });
            }
            Ok(out)
        })
    }
}

fn study_info(tx: &Transaction<'_>, study: i64) -> Result<StudyInfo, ServiceError> {
    let id = format_id("st", study);
    let (name, seed, batch_size, created_at) = tx
        .query_row(
            "SELECT name, seed, batch_size, created_at FROM studies WHERE serial = ?1",
            [study],
            |r| {
                Ok((
                    r.get::<_, String>(0)?,
                    r.get::<_, i64>(1)? as u64,
                    r.get::<_, i64>(2)? as usize,
                    r.get::<_, String>(3)?,
                ))
            },
        )
        .optional()?
        .ok_or_else(|| ServiceError::not_found("study", &id))?;
    let count = |sql: &str| {
        tx.query_row(sql, [study], |r| r.get::<_, i64>(0))
            .map(|n| n as usize)
    };
    Ok(StudyInfo {
        study_id: id,
        name,
        seed,
        batch_size,
        tasks: count("SELECT COUNT(*) FROM tasks WHERE study = ?1")?,
        sessions: count("SELECT COUNT(*) FROM sessions WHERE study = ?1")?,
        scored_tasks: count(
            "SELECT COUNT(*) FROM (SELECT DISTINCT sc.session, sc.task FROM scores sc
             JOIN sessions se ON se.serial = sc.session WHERE se.study = ?1)",
        )?,
        created_at,
    })
}

fn session_info(tx: &Transaction<'_>, session: i64) -> Result<SessionInfo, ServiceError> {
    let id = format_id("se", session);
    let (study, evaluator_id, complete, created_at) = tx
        .query_row(
            "SELECT study, evaluator_id, complete, created_at FROM sessions WHERE serial = ?1",
            [session],
            |r| {
                Ok((
                    r.get::<_, i64>(0)?,
                    r.get::<_, String>(1)?,
                    r.get::<_, bool>(2)?,
                    r.get::<_, String>(3)?,
                ))
            },
        )
        .optional()?
        .ok_or_else(|| ServiceError::not_found("session", &id))?;
    let total: i64 = tx.query_row(
        "SELECT COUNT(*) FROM session_tasks WHERE session = ?1",
        [session],
        |r| r.get(0),
    )?;
    let done: i64 = tx.query_row(
        "SELECT COUNT(DISTINCT task) FROM scores WHERE session = ?1",
        [session],
        |r| r.get(0),
    )?;
    Ok(SessionInfo {
        session_id: id,
        study_id: format_id("st", study),
        evaluator_id,
        status: if complete { "complete" } else { "active" },
        created_at,
        progress: Progress {
            done: done as usize,
            total: total as usize,
        },
    })
}
