mod common;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use common::{prepared_run, quick_config};
use dialogforge::artifacts::ArtifactDir;
use dialogforge::http_client::HttpChatClient;
use dialogforge::pipeline;
use dialogforge::{bot_server, PipelineConfig};
use dialogforge_core::simulator::{run_simulation, to_jsonl, ChatClient, Outcome, SimulationContext};

fn injected() -> PipelineConfig {
    let mut cfg = quick_config();
    cfg.runtime.injection.ner_miss_probability.insert("Email".into(), 0.3);
    cfg.runtime.injection.seed = 9;
    cfg
}

fn local() -> SocketAddr {
    "127.0.0.1:0".parse().unwrap()
}

fn serve(dir: &ArtifactDir, cfg: &PipelineConfig) -> dialogforge::serve::ServerHandle {
    let def = pipeline::load_bot(dir).unwrap();
    let rt = pipeline::embedded_runtime(def, cfg, cfg.runtime.injection.clone()).unwrap();
    bot_server::spawn(rt, local()).unwrap()
}

#[test]
fn http_and_in_process_transcripts_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = injected();
    let embedded = prepared_run(&tmp.path().join("a"), &cfg);
    pipeline::simulate(&embedded, &cfg).unwrap();

    let remote = prepared_run(&tmp.path().join("b"), &cfg);
    let server = serve(&remote, &cfg);
    let http_cfg = PipelineConfig { endpoint: Some(server.base_url()), ..cfg.clone() };
    let summary = pipeline::simulate(&remote, &http_cfg).unwrap();
    assert!(summary.outcomes.get("ner_error").copied().unwrap_or(0) > 0);

    assert_eq!(embedded.read_bytes("goals.jsonl").unwrap(), remote.read_bytes("goals.jsonl").unwrap());
    assert_eq!(embedded.read_bytes("episodes.jsonl").unwrap(), remote.read_bytes("episodes.jsonl").unwrap());
    server.stop();
}

#[test]
fn concurrent_sessions_do_not_interfere() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = injected();
    let dir = prepared_run(tmp.path(), &cfg);
    let server = serve(&dir, &cfg);
    let def = pipeline::load_bot(&dir).unwrap();
    let ctx = SimulationContext::from_definition(&def, &dir.read_maps().unwrap(), pipeline::load_templates(&dir).unwrap()).unwrap();
    let goals = dir.read_goals().unwrap();
    let client = HttpChatClient::new(&server.base_url());
    let serial = run_simulation(&goals, &ctx, &client, &PipelineConfig { parallelism: 1, ..cfg.clone() }.simulation()).unwrap();
    let parallel = run_simulation(&goals, &ctx, &client, &PipelineConfig { parallelism: 16, ..cfg.clone() }.simulation()).unwrap();
    assert_eq!(to_jsonl(&serial), to_jsonl(&parallel));
    server.stop();
}

#[test]
fn protocol_status_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let dir = prepared_run(tmp.path(), &cfg);
    let server = serve(&dir, &cfg);
    let client = HttpChatClient::new(&server.base_url());
    let session = client.start_session("probe").unwrap();
    let reply = client.send(&session, "I want to track my order").unwrap();
    assert!(!reply.messages.is_empty());
    client.end(&session).unwrap();
    assert!(client.send(&session, "hello").is_err());
    assert!(client.send("no-such-session", "hello").is_err());
    server.stop();
}

#[test]
fn unreachable_bot_aborts_episodes_not_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let dir = prepared_run(tmp.path(), &cfg);
    let dead = serve(&dir, &cfg);
    let url = dead.base_url();
    dead.stop();
    let summary = pipeline::simulate(&dir, &PipelineConfig { endpoint: Some(url), ..cfg.clone() }).unwrap();
    assert_eq!(summary.outcomes.get("aborted").copied(), Some(summary.episodes));
    let report = pipeline::remediate_stage(&dir, "dead", &[], &cfg).unwrap();
    assert_eq!(report.summary.totals.episodes, 0);
    assert_eq!(report.summary.totals.aborted, summary.episodes);
}

#[test]
fn killing_the_bot_mid_run_aborts_the_remaining_episodes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let dir = prepared_run(tmp.path(), &cfg);
    let server = serve(&dir, &cfg);
    let def = pipeline::load_bot(&dir).unwrap();
    let ctx = SimulationContext::from_definition(&def, &dir.read_maps().unwrap(), pipeline::load_templates(&dir).unwrap()).unwrap();
    let goals = dir.read_goals().unwrap();
    let client = Arc::new(HttpChatClient::with_timeout(&server.base_url(), Duration::from_secs(5)));
    let killer = std::thread::spawn(move || {
        std::thread::sleep(Duration::from_millis(150));
        server.stop();
    });
    let eps = run_simulation(&goals, &ctx, client.as_ref(), &PipelineConfig { parallelism: 2, ..cfg.clone() }.simulation()).unwrap();
    killer.join().unwrap();
    assert_eq!(eps.len(), goals.len());
    let aborted: Vec<_> = eps.iter().filter(|e| e.outcome == Outcome::Aborted).collect();
    assert!(!aborted.is_empty());
    assert!(aborted.iter().all(|e| e.transport_error.is_some()));
    assert!(eps.iter().all(|e| e.outcome != Outcome::InProgress));
}
