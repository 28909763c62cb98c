//! On-disk layout of one pipeline run.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use dialogforge_core::generator::{DialogActMap, SimulationGoal};
use dialogforge_core::simulator::EpisodeRecord;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::PipelineError;

pub const BOT: &str = "bot.json";
pub const GRAPH: &str = "graph.json";
pub const MAPS_DIR: &str = "maps";
pub const ONTOLOGY: &str = "ontology.json";
pub const TEMPLATES: &str = "templates.json";
pub const EVAL_UTTERANCES: &str = "eval_utterances.json";
pub const PARAPHRASES: &str = "paraphrases.json";
pub const GOALS: &str = "goals.jsonl";
pub const EPISODES: &str = "episodes.jsonl";
pub const INJECTIONS: &str = "injections.jsonl";
pub const REPORT: &str = "report.json";
pub const RETRAIN_DIR: &str = "retrain";

/// Every top-level name a stage may write; `--force` clears exactly these.
pub const ALL: &[&str] = &[
    BOT, GRAPH, MAPS_DIR, ONTOLOGY, TEMPLATES, EVAL_UTTERANCES, PARAPHRASES, GOALS, EPISODES, INJECTIONS, REPORT,
    RETRAIN_DIR,
];

#[derive(Debug, Clone)]
pub struct ArtifactDir {
    root: PathBuf,
}

impl ArtifactDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.path(rel).exists()
    }

    pub fn map_path(&self, dialog: &str) -> PathBuf {
        self.root.join(MAPS_DIR).join(format!("{dialog}.json"))
    }

    pub fn has_content(&self) -> bool {
        fs::read_dir(&self.root).map(|mut d| d.next().is_some()).unwrap_or(false)
    }

    /// Removes every artifact this tool writes, leaving other files alone.
    pub fn clear(&self) -> Result<(), PipelineError> {
        for name in ALL {
            let p = self.path(name);
            let res = if p.is_dir() { fs::remove_dir_all(&p) } else if p.exists() { fs::remove_file(&p) } else { Ok(()) };
            res.map_err(|e| PipelineError::io(&p, e))?;
        }
        Ok(())
    }

    /// Writes via a temporary file and rename so readers never see a torn file.
    pub fn write_bytes(&self, rel: &str, bytes: &[u8]) -> Result<PathBuf, PipelineError> {
        let path = self.path(rel);
        write_atomic(&path, bytes)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<PathBuf, PipelineError> {
        self.write_bytes(rel, &pretty(value))
    }

    pub fn read_bytes(&self, rel: &str) -> Result<Vec<u8>, PipelineError> {
        let p = self.path(rel);
        if !p.exists() {
            return Err(PipelineError::MissingArtifact(rel.to_owned()));
        }
        fs::read(&p).map_err(|e| PipelineError::io(&p, e))
    }

    pub fn read_json<T: DeserializeOwned>(&self, rel: &str) -> Result<T, PipelineError> {
        let bytes = self.read_bytes(rel)?;
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::InvalidInput(format!("{rel}: {e}")))
    }

    pub fn write_maps(&self, maps: &std::collections::BTreeMap<String, DialogActMap>) -> Result<(), PipelineError> {
        let dir = self.path(MAPS_DIR);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
        }
        for (dialog, map) in maps {
            write_atomic(&self.map_path(dialog), &map_bytes(map))?;
        }
        Ok(())
    }

    pub fn read_maps(&self) -> Result<std::collections::BTreeMap<String, DialogActMap>, PipelineError> {
        let dir = self.path(MAPS_DIR);
        if !dir.is_dir() {
            return Err(PipelineError::MissingArtifact(MAPS_DIR.to_owned()));
        }
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| PipelineError::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        entries.sort();
        let mut maps = std::collections::BTreeMap::new();
        for p in entries {
            let bytes = fs::read(&p).map_err(|e| PipelineError::io(&p, e))?;
            let map: DialogActMap = serde_json::from_slice(&bytes)
                .map_err(|e| PipelineError::InvalidInput(format!("{}: {e}", p.display())))?;
            maps.insert(map.dialog.clone(), map);
        }
        if maps.is_empty() {
            return Err(PipelineError::MissingArtifact(MAPS_DIR.to_owned()));
        }
        Ok(maps)
    }

    pub fn write_goals(&self, goals: &[SimulationGoal]) -> Result<PathBuf, PipelineError> {
        self.write_bytes(GOALS, &jsonl(goals))
    }

    pub fn read_goals(&self) -> Result<Vec<SimulationGoal>, PipelineError> {
        read_jsonl(&self.read_bytes(GOALS)?, GOALS)
    }

    pub fn read_episodes(&self) -> Result<Vec<EpisodeRecord>, PipelineError> {
        let bytes = self.read_bytes(EPISODES)?;
        dialogforge_core::simulator::read_jsonl(BufReader::new(bytes.as_slice()))
            .map_err(|e| PipelineError::InvalidInput(format!("{EPISODES}: {e}")))
    }
}

pub fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("artifact serializes");
    v.push(b'\n');
    v
}

pub fn map_bytes(map: &DialogActMap) -> Vec<u8> {
    pretty(map)
}

pub fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for it in items {
        serde_json::to_writer(&mut out, it).expect("record serializes");
        out.push(b'\n');
    }
    out
}

pub fn read_jsonl<T: DeserializeOwned>(bytes: &[u8], name: &str) -> Result<Vec<T>, PipelineError> {
    bytes
        .split(|b| *b == b'\n')
        .enumerate()
        .filter(|(_, l)| !l.iter().all(u8::is_ascii_whitespace))
        .map(|(n, l)| {
            serde_json::from_slice(l).map_err(|e| PipelineError::InvalidInput(format!("{name} line {}: {e}", n + 1)))
        })
        .collect()
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    let tmp = path.with_extension("tmp~");
    let mut f = fs::File::create(&tmp).map_err(|e| PipelineError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| PipelineError::io(&tmp, e))?;
    f.sync_all().map_err(|e| PipelineError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}
