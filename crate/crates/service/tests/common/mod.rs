#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dialogforge::artifacts::ArtifactDir;
use dialogforge::pipeline::{self, ParseInput};
use dialogforge::PipelineConfig;
use dialogforge_core::generator::RevisionDocument;

pub fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/template_bot.json")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/template_bot")
}

/// Defaults with a light bootstrap so debug builds stay quick.
pub fn quick_config() -> PipelineConfig {
    PipelineConfig { bootstrap_iterations: 300, ..PipelineConfig::default() }
}

pub fn dialogforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dialogforge")).args(args).output().expect("binary runs")
}

pub fn stderr_code(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("JSON error on stderr");
    v["error"].as_str().unwrap_or_default().to_owned()
}

/// parse → revise (accept as parsed) → generate, through the library.
pub fn prepared_run(dir: &Path, config: &PipelineConfig) -> ArtifactDir {
    let (bytes, sidecar, eval) = pipeline::load_parse_input(&fixture(), None, None).unwrap();
    let out = ArtifactDir::new(dir.to_path_buf());
    let input = ParseInput { definition: &bytes, utterances: sidecar, eval_utterances: eval };
    pipeline::parse(&input, &out, false, config).unwrap();
    pipeline::revise(&out, &RevisionDocument::default()).unwrap();
    pipeline::generate(&out, config).unwrap();
    out
}

/// Every file below `root`, relative path → bytes.
pub fn tree(root: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut std::collections::BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = std::collections::BTreeMap::new();
    walk(root, root, &mut out);
    out
}
