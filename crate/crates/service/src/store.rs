//! Durable session store: one SQLite file with `sessions`, `artifacts`,
//! `metrics` and `jobs` tables.

use std::path::Path;
use std::str::FromStr;
use std::sync::Mutex;

use dialogforge_core::remediator::HistoryPoint;
use rusqlite::{params, Connection, OptionalExtension};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::PipelineError;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS sessions (
    seq        INTEGER PRIMARY KEY AUTOINCREMENT,
    session_id TEXT NOT NULL UNIQUE,
    name       TEXT NOT NULL,
    stage      TEXT NOT NULL,
    created_at TEXT NOT NULL,
    updated_at TEXT NOT NULL,
    config     TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS artifacts (
    session_id TEXT NOT NULL REFERENCES sessions(session_id) ON DELETE CASCADE,
    kind       TEXT NOT NULL,
    path       TEXT NOT NULL,
    PRIMARY KEY (session_id, kind)
);
CREATE TABLE IF NOT EXISTS metrics (
    session_id      TEXT PRIMARY KEY REFERENCES sessions(session_id) ON DELETE CASCADE,
    completion_rate REAL NOT NULL,
    macro_f1        REAL NOT NULL,
    episodes        INTEGER NOT NULL,
    recorded_at     TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS jobs (
    job_id     TEXT PRIMARY KEY,
    session_id TEXT NOT NULL REFERENCES sessions(session_id) ON DELETE CASCADE,
    status     TEXT NOT NULL,
    error      TEXT,
    created_at TEXT NOT NULL,
    updated_at TEXT NOT NULL
);
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Parsed,
    Revised,
    GoalsReady,
    Simulated,
    Remediated,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Parsed => "parsed",
            Stage::Revised => "revised",
            Stage::GoalsReady => "goals_ready",
            Stage::Simulated => "simulated",
            Stage::Remediated => "remediated",
        }
    }
}

impl FromStr for Stage {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "parsed" => Stage::Parsed,
            "revised" => Stage::Revised,
            "goals_ready" => Stage::GoalsReady,
            "simulated" => Stage::Simulated,
            "remediated" => Stage::Remediated,
            other => return Err(PipelineError::Internal(format!("unknown stage {other:?} in store"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    fn as_str(self) -> &'static str {
        match self {
            JobStatus::Queued => "queued",
            JobStatus::Running => "running",
            JobStatus::Done => "done",
            JobStatus::Failed => "failed",
        }
    }

    fn parse(s: &str) -> Self {
        match s {
            "queued" => JobStatus::Queued,
            "running" => JobStatus::Running,
            "done" => JobStatus::Done,
            _ => JobStatus::Failed,
        }
    }

    pub fn is_active(self) -> bool {
        matches!(self, JobStatus::Queued | JobStatus::Running)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEntry {
    pub session_id: String,
    pub name: String,
    pub stage: Stage,
    pub created_at: String,
    pub updated_at: String,
    /// kind → path
    pub artifacts: std::collections::BTreeMap<String, String>,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobEntry {
    pub job_id: String,
    pub session_id: String,
    pub status: JobStatus,
    pub error: Option<String>,
    pub created_at: String,
    pub updated_at: String,
}

pub struct Store {
    conn: Mutex<Connection>,
}

fn db_err(e: rusqlite::Error) -> PipelineError {
    PipelineError::Internal(format!("store: {e}"))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Store {
    /// Opens (creating if needed) the store. Jobs left queued or running by
    /// a previous process are marked failed.
    pub fn open(path: &Path) -> Result<Self, PipelineError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
        }
        Self::init(Connection::open(path).map_err(db_err)?)
    }

    pub fn in_memory() -> Result<Self, PipelineError> {
        Self::init(Connection::open_in_memory().map_err(db_err)?)
    }

    fn init(conn: Connection) -> Result<Self, PipelineError> {
        conn.execute_batch("PRAGMA foreign_keys = ON; PRAGMA journal_mode = WAL;").map_err(db_err)?;
        conn.execute_batch(SCHEMA).map_err(db_err)?;
        conn.execute(
            "UPDATE jobs SET status = 'failed', error = 'interrupted by restart', updated_at = ?1
             WHERE status IN ('queued', 'running')",
            params![now()],
        )
        .map_err(db_err)?;
        Ok(Self { conn: Mutex::new(conn) })
    }

    fn conn(&self) -> std::sync::MutexGuard<'_, Connection> {
        self.conn.lock().expect("store lock")
    }

    /// Allocates the next session id without inserting anything.
    pub fn next_session_id(&self) -> Result<String, PipelineError> {
        let conn = self.conn();
        let seq: i64 = conn
            .query_row("SELECT COALESCE(MAX(seq), 0) + 1 FROM sessions", [], |r| r.get(0))
            .map_err(db_err)?;
        let reserved: i64 = conn
            .query_row("SELECT COALESCE((SELECT seq FROM sqlite_sequence WHERE name = 'sessions'), 0) + 1", [], |r| r.get(0))
            .unwrap_or(seq);
        Ok(format!("session-{:06}", seq.max(reserved)))
    }

    pub fn create_session(
        &self,
        session_id: &str,
        name: &str,
        config: &PipelineConfig,
        artifacts: &[(&str, String)],
    ) -> Result<SessionEntry, PipelineError> {
        let ts = now();
        {
            let mut conn = self.conn();
            let tx = conn.transaction().map_err(db_err)?;
            tx.execute(
                "INSERT INTO sessions (session_id, name, stage, created_at, updated_at, config)
                 VALUES (?1, ?2, ?3, ?4, ?4, ?5)",
                params![session_id, name, Stage::Parsed.as_str(), ts, serde_json::to_string(config).expect("config")],
            )
            .map_err(db_err)?;
            for (kind, path) in artifacts {
                tx.execute(
                    "INSERT OR REPLACE INTO artifacts (session_id, kind, path) VALUES (?1, ?2, ?3)",
                    params![session_id, kind, path],
                )
                .map_err(db_err)?;
            }
            tx.commit().map_err(db_err)?;
        }
        self.session(session_id)
    }

    pub fn session(&self, session_id: &str) -> Result<SessionEntry, PipelineError> {
        let conn = self.conn();
        let row = conn
            .query_row(
                "SELECT session_id, name, stage, created_at, updated_at, config FROM sessions WHERE session_id = ?1",
                params![session_id],
                |r| {
                    Ok((
                        r.get::<_, String>(0)?,
                        r.get::<_, String>(1)?,
                        r.get::<_, String>(2)?,
                        r.get::<_, String>(3)?,
                        r.get::<_, String>(4)?,
                        r.get::<_, String>(5)?,
                    ))
                },
            )
            .optional()
            .map_err(db_err)?
            .ok_or_else(|| PipelineError::NotFound(format!("session {session_id}")))?;
        let mut stmt = conn.prepare("SELECT kind, path FROM artifacts WHERE session_id = ?1").map_err(db_err)?;
        let artifacts = stmt
            .query_map(params![session_id], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?)))
            .map_err(db_err)?
            .collect::<Result<_, _>>()
            .map_err(db_err)?;
        Ok(SessionEntry {
            session_id: row.0,
            name: row.1,
            stage: row.2.parse()?,
            created_at: row.3,
            updated_at: row.4,
            artifacts,
            config: serde_json::from_str(&row.5).map_err(|e| PipelineError::Internal(e.to_string()))?,
        })
    }

    pub fn list_sessions(&self) -> Result<Vec<SessionEntry>, PipelineError> {
        let ids: Vec<String> = {
            let conn = self.conn();
            let mut stmt = conn.prepare("SELECT session_id FROM sessions ORDER BY seq").map_err(db_err)?;
            let ids = stmt.query_map([], |r| r.get(0)).map_err(db_err)?.collect::<Result<_, _>>().map_err(db_err)?;
            ids
        };
        ids.iter().map(|id| self.session(id)).collect()
    }

    /// Moves a session forward and records artifacts. Moving backwards is
    /// refused; staying at the same stage only touches `updated_at`.
    pub fn advance(&self, session_id: &str, stage: Stage, artifacts: &[(&str, String)]) -> Result<(), PipelineError> {
        let current = self.session(session_id)?.stage;
        if stage < current {
            return Err(PipelineError::StageOrder { stage: stage.as_str().into(), needs: current.as_str().into() });
        }
        let mut conn = self.conn();
        let tx = conn.transaction().map_err(db_err)?;
        tx.execute(
            "UPDATE sessions SET stage = ?2, updated_at = ?3 WHERE session_id = ?1",
            params![session_id, stage.as_str(), now()],
        )
        .map_err(db_err)?;
        for (kind, path) in artifacts {
            tx.execute(
                "INSERT OR REPLACE INTO artifacts (session_id, kind, path) VALUES (?1, ?2, ?3)",
                params![session_id, kind, path],
            )
            .map_err(db_err)?;
        }
        tx.commit().map_err(db_err)
    }

    pub fn touch(&self, session_id: &str) -> Result<(), PipelineError> {
        self.conn()
            .execute("UPDATE sessions SET updated_at = ?2 WHERE session_id = ?1", params![session_id, now()])
            .map_err(db_err)
            .map(|_| ())
    }

    pub fn record_metrics(&self, point: &HistoryPoint) -> Result<(), PipelineError> {
        self.conn()
            .execute(
                "INSERT OR REPLACE INTO metrics (session_id, completion_rate, macro_f1, episodes, recorded_at)
                 VALUES (?1, ?2, ?3, ?4, ?5)",
                params![point.session_id, point.completion_rate, point.macro_f1, point.episodes as i64, now()],
            )
            .map_err(db_err)
            .map(|_| ())
    }

    /// Every recorded session in creation order, optionally stopping
    /// before `exclude`.
    pub fn history(&self, exclude: Option<&str>) -> Result<Vec<HistoryPoint>, PipelineError> {
        let conn = self.conn();
        let mut stmt = conn
            .prepare(
                "SELECT m.session_id, m.completion_rate, m.macro_f1, m.episodes
                 FROM metrics m JOIN sessions s ON s.session_id = m.session_id ORDER BY s.seq",
            )
            .map_err(db_err)?;
        let rows = stmt
            .query_map([], |r| {
                Ok(HistoryPoint {
                    session_id: r.get(0)?,
                    completion_rate: r.get(1)?,
                    macro_f1: r.get(2)?,
                    episodes: r.get::<_, i64>(3)? as usize,
                })
            })
            .map_err(db_err)?
            .collect::<Result<Vec<_>, _>>()
            .map_err(db_err)?;
        Ok(rows.into_iter().filter(|p| Some(p.session_id.as_str()) != exclude).collect())
    }

    /// Inserts a queued job unless the session already has an active one.
    pub fn enqueue_job(&self, session_id: &str) -> Result<JobEntry, PipelineError> {
        let job_id = {
            let mut conn = self.conn();
            let tx = conn.transaction().map_err(db_err)?;
            let active: i64 = tx
                .query_row(
                    "SELECT COUNT(*) FROM jobs WHERE session_id = ?1 AND status IN ('queued', 'running')",
                    params![session_id],
                    |r| r.get(0),
                )
                .map_err(db_err)?;
            if active > 0 {
                return Err(PipelineError::JobRunning);
            }
            let n: i64 = tx
                .query_row("SELECT COUNT(*) + 1 FROM jobs WHERE session_id = ?1", params![session_id], |r| r.get(0))
                .map_err(db_err)?;
            let job_id = format!("job-{n:04}");
            let ts = now();
            tx.execute(
                "INSERT INTO jobs (job_id, session_id, status, error, created_at, updated_at)
                 VALUES (?1, ?2, 'queued', NULL, ?3, ?3)",
                params![format!("{session_id}/{job_id}"), session_id, ts],
            )
            .map_err(db_err)?;
            tx.commit().map_err(db_err)?;
            job_id
        };
        self.job(session_id, &job_id)
    }

    pub fn set_job_status(
        &self,
        session_id: &str,
        job_id: &str,
        status: JobStatus,
        error: Option<&str>,
    ) -> Result<(), PipelineError> {
        self.conn()
            .execute(
                "UPDATE jobs SET status = ?2, error = ?3, updated_at = ?4 WHERE job_id = ?1",
                params![format!("{session_id}/{job_id}"), status.as_str(), error, now()],
            )
            .map_err(db_err)
            .map(|_| ())
    }

    pub fn job(&self, session_id: &str, job_id: &str) -> Result<JobEntry, PipelineError> {
        self.conn()
            .query_row(
                "SELECT status, error, created_at, updated_at FROM jobs WHERE job_id = ?1",
                params![format!("{session_id}/{job_id}")],
                |r| {
                    Ok(JobEntry {
                        job_id: job_id.to_owned(),
                        session_id: session_id.to_owned(),
                        status: JobStatus::parse(&r.get::<_, String>(0)?),
                        error: r.get(1)?,
                        created_at: r.get(2)?,
                        updated_at: r.get(3)?,
                    })
                },
            )
            .optional()
            .map_err(db_err)?
            .ok_or_else(|| PipelineError::NotFound(format!("job {job_id}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_are_monotone() {
        let s = Store::in_memory().unwrap();
        let id = s.next_session_id().unwrap();
        s.create_session(&id, "t", &PipelineConfig::default(), &[("maps", "/x/maps".into())]).unwrap();
        s.advance(&id, Stage::Revised, &[]).unwrap();
        s.advance(&id, Stage::Revised, &[]).unwrap();
        assert!(matches!(s.advance(&id, Stage::Parsed, &[]), Err(PipelineError::StageOrder { .. })));
        let e = s.session(&id).unwrap();
        assert_eq!(e.stage, Stage::Revised);
        assert_eq!(e.artifacts["maps"], "/x/maps");
    }

    #[test]
    fn one_active_job_per_session() {
        let s = Store::in_memory().unwrap();
        s.create_session("a", "t", &PipelineConfig::default(), &[]).unwrap();
        let j = s.enqueue_job("a").unwrap();
        assert_eq!(j.status, JobStatus::Queued);
        assert!(matches!(s.enqueue_job("a"), Err(PipelineError::JobRunning)));
        s.set_job_status("a", &j.job_id, JobStatus::Done, None).unwrap();
        assert_eq!(s.enqueue_job("a").unwrap().job_id, "job-0002");
    }

    #[test]
    fn session_ids_increase() {
        let s = Store::in_memory().unwrap();
        let a = s.next_session_id().unwrap();
        s.create_session(&a, "t", &PipelineConfig::default(), &[]).unwrap();
        let b = s.next_session_id().unwrap();
        assert!(b > a);
        assert!(matches!(s.session("nope"), Err(PipelineError::NotFound(_))));
    }
}
