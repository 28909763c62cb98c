mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{dialogforge, fixture, quick_config};
use dialogforge::api::{self, AppState};
use dialogforge::serve::ServerHandle;
use dialogforge::store::Store;
use dialogforge::PipelineConfig;
use serde_json::{json, Value};

struct Api {
    server: ServerHandle,
    agent: ureq::Agent,
}

struct Reply {
    status: u16,
    etag: Option<String>,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap()
    }
}

impl Api {
    fn start(db: &Path, data: &Path, defaults: PipelineConfig) -> Self {
        let state = AppState::new(Store::open(db).unwrap(), data.to_path_buf(), defaults, 2);
        let server = ServerHandle::spawn(api::router(state), "127.0.0.1:0".parse().unwrap(), "api").unwrap();
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Self { server, agent }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.server.base_url())
    }

    fn finish(resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Reply {
        let mut resp = resp.unwrap();
        let etag = resp.headers().get("etag").map(|v| v.to_str().unwrap().to_owned());
        Reply { status: resp.status().as_u16(), etag, body: resp.body_mut().read_to_vec().unwrap() }
    }

    fn get(&self, path: &str) -> Reply {
        Self::finish(self.agent.get(&self.url(path)).call())
    }

    fn post(&self, path: &str, body: &[u8]) -> Reply {
        Self::finish(self.agent.post(&self.url(path)).content_type("application/json").send(body))
    }

    fn put(&self, path: &str, body: &[u8], if_match: Option<&str>) -> Reply {
        let mut req = self.agent.put(&self.url(path)).content_type("application/json");
        if let Some(tag) = if_match {
            req = req.header("If-Match", tag);
        }
        Self::finish(req.send(body))
    }

    fn create(&self) -> String {
        let def: Value = serde_json::from_slice(&std::fs::read(fixture()).unwrap()).unwrap();
        let eval: Value = serde_json::from_slice(&std::fs::read(fixture().with_extension("eval.json")).unwrap()).unwrap();
        let r = self.post("/api/sessions", json!({ "definition": def, "eval_utterances": eval }).to_string().as_bytes());
        assert_eq!(r.status, 201, "{}", String::from_utf8_lossy(&r.body));
        r.json()["session_id"].as_str().unwrap().to_owned()
    }

    /// GET maps, mark every map revised, PUT them back.
    fn revise_all(&self, id: &str) -> Reply {
        let got = self.get(&format!("/api/sessions/{id}/dialog-act-maps"));
        let mut maps = got.json();
        for m in maps.as_object_mut().unwrap().values_mut() {
            m["revised"] = json!(true);
        }
        self.put(&format!("/api/sessions/{id}/dialog-act-maps"), maps.to_string().as_bytes(), got.etag.as_deref())
    }

    fn wait_job(&self, id: &str, job: &str) -> Value {
        let start = Instant::now();
        loop {
            let j = self.get(&format!("/api/sessions/{id}/jobs/{job}")).json();
            if j["status"] == "done" || j["status"] == "failed" {
                return j;
            }
            assert!(start.elapsed() < Duration::from_secs(300), "job stuck: {j}");
            std::thread::sleep(Duration::from_millis(50));
        }
    }
}

fn small() -> PipelineConfig {
    PipelineConfig { per_intent_cap: Some(15), ..quick_config() }
}

#[test]
fn session_lifecycle() {
    let tmp = tempfile::tempdir().unwrap();
    let api = Api::start(&tmp.path().join("db.sqlite"), &tmp.path().join("data"), small());
    assert_eq!(api.get("/api/health").status, 200);

    let id = api.create();
    assert_eq!(api.get(&format!("/api/sessions/{id}")).json()["stage"], "parsed");

    // goals refuse unrevised maps
    assert_eq!(api.post(&format!("/api/sessions/{id}/goals"), b"").status, 409);
    assert_eq!(api.post(&format!("/api/sessions/{id}/simulate"), b"").status, 409);

    let stale = api.get(&format!("/api/sessions/{id}/dialog-act-maps")).etag.unwrap();
    let put = api.revise_all(&id);
    assert_eq!(put.status, 200);
    let again = api.get(&format!("/api/sessions/{id}/dialog-act-maps"));
    assert_eq!(again.body, put.body);
    assert_eq!(again.etag, put.etag);
    assert_ne!(again.etag.as_deref(), Some(stale.as_str()));
    assert_eq!(api.put(&format!("/api/sessions/{id}/dialog-act-maps"), &put.body, Some(&stale)).status, 409);
    assert_eq!(api.put(&format!("/api/sessions/{id}/dialog-act-maps"), b"{\"x\": 1}", None).status, 422);
    assert_eq!(api.get(&format!("/api/sessions/{id}")).json()["stage"], "revised");

    let goals = api.post(&format!("/api/sessions/{id}/goals"), b"");
    assert_eq!(goals.status, 200);
    assert_eq!(goals.json()["goals"], 90);
    // edits close once goals exist
    assert_eq!(api.put(&format!("/api/sessions/{id}/dialog-act-maps"), &put.body, None).status, 409);
    assert_eq!(api.get(&format!("/api/sessions/{id}/report")).status, 409);

    let job = api.post(&format!("/api/sessions/{id}/simulate"), b"");
    assert_eq!(job.status, 202);
    let job = job.json();
    assert_eq!(api.post(&format!("/api/sessions/{id}/simulate"), b"").status, 409);
    let done = api.wait_job(&id, job["job_id"].as_str().unwrap());
    assert_eq!(done["status"], "done", "{done}");
    assert_eq!(api.get(&format!("/api/sessions/{id}")).json()["stage"], "remediated");

    let report = api.get(&format!("/api/sessions/{id}/report"));
    assert_eq!(report.status, 200);
    let report = report.json();
    assert_eq!(report["summary"]["totals"]["episodes"], 90);
    assert_eq!(report["history"].as_array().unwrap().len(), 1);

    let ep = api.get(&format!("/api/sessions/{id}/episodes/TA-00000"));
    assert_eq!(ep.status, 200);
    assert_eq!(ep.json()["goal"]["intent"], "TA");
    assert_eq!(api.get(&format!("/api/sessions/{id}/episodes/nope")).status, 404);

    let paths = api.get(&format!("/api/sessions/{id}/paths?source=Check_Issue_Status&target=End_Chat"));
    assert_eq!(paths.json()["paths"].as_array().unwrap().len(), 2);
    assert_eq!(api.get(&format!("/api/sessions/{id}/paths?source=Nope&target=End_Chat")).status, 422);
    assert_eq!(api.get("/api/sessions/session-999999").status, 404);

    // a second session sees the first in its history
    let id2 = api.create();
    api.revise_all(&id2);
    api.post(&format!("/api/sessions/{id2}/goals"), b"");
    let job = api.post(&format!("/api/sessions/{id2}/simulate"), b"").json();
    api.wait_job(&id2, job["job_id"].as_str().unwrap());
    let history = api.get(&format!("/api/sessions/{id2}/report")).json()["history"].clone();
    let ids: Vec<&str> = history.as_array().unwrap().iter().map(|h| h["session_id"].as_str().unwrap()).collect();
    assert_eq!(ids, vec![id.as_str(), id2.as_str()]);
    assert_eq!(api.get("/api/sessions").json().as_array().unwrap().len(), 2);
}

#[test]
fn malformed_requests_are_unprocessable() {
    let tmp = tempfile::tempdir().unwrap();
    let api = Api::start(&tmp.path().join("db.sqlite"), &tmp.path().join("data"), small());
    assert_eq!(api.post("/api/sessions", b"not json").status, 422);
    assert_eq!(api.post("/api/sessions", b"{\"definition\": {\"name\": 3}}").status, 422);
    let bad = json!({ "definition": {
        "schema_version": 1, "name": "x", "dialogs": [], "intents": [], "entities": [], "success_dialogs": ["Nowhere"]
    }});
    let r = api.post("/api/sessions", bad.to_string().as_bytes());
    assert_eq!(r.status, 422);
    assert_eq!(r.json()["error"], "validation_failed");
    let cfg = json!({ "definition": serde_json::from_slice::<Value>(&std::fs::read(fixture()).unwrap()).unwrap(),
                      "config": { "parallelism": 0 } });
    assert_eq!(api.post("/api/sessions", cfg.to_string().as_bytes()).status, 422);
    assert_eq!(api.get("/api/sessions").json().as_array().unwrap().len(), 0);
}

#[test]
fn sessions_survive_a_restart() {
    let tmp = tempfile::tempdir().unwrap();
    let db = tmp.path().join("db.sqlite");
    let data = tmp.path().join("data");
    let (id, report) = {
        let api = Api::start(&db, &data, small());
        let id = api.create();
        api.revise_all(&id);
        api.post(&format!("/api/sessions/{id}/goals"), b"");
        let job = api.post(&format!("/api/sessions/{id}/simulate"), b"").json();
        api.wait_job(&id, job["job_id"].as_str().unwrap());
        let report = api.get(&format!("/api/sessions/{id}/report")).body;
        api.server.stop();
        (id, report)
    };
    let api = Api::start(&db, &data, small());
    assert_eq!(api.get(&format!("/api/sessions/{id}")).json()["stage"], "remediated");
    assert_eq!(api.get(&format!("/api/sessions/{id}/report")).body, report);
    assert_ne!(api.create(), id);
}

#[test]
fn api_and_cli_produce_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let api = Api::start(&tmp.path().join("db.sqlite"), &data, small());
    let id = api.create();
    api.revise_all(&id);
    api.post(&format!("/api/sessions/{id}/goals"), b"");
    let job = api.post(&format!("/api/sessions/{id}/simulate"), b"").json();
    assert_eq!(api.wait_job(&id, job["job_id"].as_str().unwrap())["status"], "done");

    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, serde_json::to_vec(&small()).unwrap()).unwrap();
    let run = tmp.path().join("cli");
    let (c, r) = (cfg.to_str().unwrap(), run.to_str().unwrap());
    for args in [
        vec!["parse", fixture().to_str().unwrap(), "--out", r],
        vec!["revise", "--out", r],
        vec!["generate", "--out", r],
        vec!["simulate", "--out", r],
        vec!["remediate", "--out", r, "--session-id", &id],
    ] {
        let mut full = vec!["--config", c];
        full.extend(args);
        let out = dialogforge(&full);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let session = data.join(&id);
    for name in ["bot.json", "graph.json", "ontology.json", "paraphrases.json", "goals.jsonl", "episodes.jsonl", "report.json"] {
        assert_eq!(std::fs::read(session.join(name)).unwrap(), std::fs::read(run.join(name)).unwrap(), "{name}");
    }
}
