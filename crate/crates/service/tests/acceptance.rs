//! One line per acceptance criterion; exits non-zero if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;
mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use common::{dialogforge, fixture, golden_dir, prepared_run, stderr_code, tree};
use dialogforge::api::{self, AppState};
use dialogforge::config::QuerySource;
use dialogforge::pipeline;
use dialogforge::serve::ServerHandle;
use dialogforge::store::Store;
use dialogforge::PipelineConfig;
use dialogforge_core::generator::{aggregate_map, build_graph};
use dialogforge_core::remediator::{enumerate_paths, intent_report, BootstrapConfig, Interval};
use dialogforge_core::schema::BotDefinition;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn training_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.paraphrase.source = QuerySource::Training;
    cfg
}

fn parse_golden() -> Check {
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let run = tmp.path().join("run");
    let out = dialogforge(&["parse", fixture().to_str().unwrap(), "--out", run.to_str().unwrap()]);
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let produced = tree(&run);
    let golden = tree(&golden_dir());
    for (rel, want) in &golden {
        ensure(produced.get(rel) == Some(want), || format!("{rel} differs from golden"))?;
    }
    let def = BotDefinition::from_path(fixture()).map_err(e2s)?;
    let names: Vec<&str> = def.intents.iter().map(|i| i.name.as_str()).collect();
    ensure(names == ["TA", "EC", "CS", "CI", "CO", "RI"], || format!("intents {names:?}"))?;
    ensure(def.intents.iter().all(|i| i.training_utterances.len() == 150), || "training sizes".into())?;
    Ok(format!("{} golden files byte-exact, 6 intents x 150 utterances", golden.len()))
}

fn aggregation_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for g_idx in 0..200 {
        let g = support::random_graph(&mut rng, 8);
        let n = g.vertices.len();
        let success: BTreeSet<String> = [format!("v{}", n - 1), format!("v{}", n / 2)].into();
        for v in &g.vertices {
            let got = aggregate_map(&g, &v.name, &success);
            match support::brute_force_union(&g, &v.name, &success) {
                None => ensure(got.is_err(), || format!("graph {g_idx} {}: expected no path", v.name))?,
                Some(want) => {
                    let got = got.map_err(|e| format!("graph {g_idx} {}: {e}", v.name))?;
                    ensure(support::as_sets(&got) == want && !support::has_duplicates(&got), || {
                        format!("graph {g_idx} dialog {}: union mismatch", v.name)
                    })?;
                }
            }
            checked += 1;
        }
    }
    Ok(format!("200 graphs, {checked} dialogs agree"))
}

fn perfect_bot() -> Check {
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let cfg = PipelineConfig { parallelism: 8, ..training_config() };
    let dir = prepared_run(tmp.path(), &cfg);
    let sim = pipeline::simulate(&dir, &cfg).map_err(e2s)?;
    let success = sim.outcomes.get("success").copied().unwrap_or(0);
    ensure(sim.episodes == 600, || format!("{} episodes", sim.episodes))?;
    ensure(success == 600, || format!("outcomes {:?}", sim.outcomes))?;
    Ok("completion 600/600 = 1.0".into())
}

/// Wilson score interval.
fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let d = 1.0 + z * z / n;
    let c = (p + z * z / (2.0 * n)) / d;
    let h = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / d;
    (c - h, c + h)
}

fn injection_calibration() -> Check {
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let mut cfg = PipelineConfig { per_intent_cap: Some(125), parallelism: 8, ..training_config() };
    cfg.runtime.injection.ner_miss_probability.insert("Email".into(), 0.3);
    cfg.runtime.injection.seed = 5;
    let dir = prepared_run(tmp.path(), &cfg);
    pipeline::simulate(&dir, &cfg).map_err(e2s)?;
    let episodes = dir.read_episodes().map_err(e2s)?;
    let exposed = episodes.iter().filter(|e| e.goal.inform_slots.contains_key("Email")).count();
    let injected = std::fs::read_to_string(dir.path("injections.jsonl")).map_err(e2s)?.lines().count();
    let report = pipeline::remediate_stage(&dir, "calibration", &[], &cfg).map_err(e2s)?;
    let ner = report.summary.totals.ner_errors;
    let found: usize = report.ner_remediation.iter().filter(|f| f.slot == "Email").map(|f| f.count).sum();
    ensure(exposed == 500, || format!("{exposed} Email episodes"))?;
    ensure(ner == injected && found == injected, || format!("ner_error {ner}, findings {found}, injections {injected}"))?;
    let p = ner as f64 / exposed as f64;
    let (lo, hi) = wilson(ner, exposed, 1.959964);
    ensure((p - 0.3).abs() <= 0.05, || format!("p = {p:.4}"))?;
    ensure(lo <= 0.3 && 0.3 <= hi, || format!("95% CI [{lo:.4}, {hi:.4}] excludes 0.3"))?;
    Ok(format!("p = {p:.4} over {exposed} episodes, CI [{lo:.3}, {hi:.3}], {injected} injections = {ner} ner_errors"))
}

fn interval_ok(i: &Interval<f64>) -> bool {
    i.low <= i.point && i.point <= i.high
}

fn retraining_trend() -> Check {
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let cfg = PipelineConfig::default();
    let dir = prepared_run(tmp.path(), &cfg);
    pipeline::simulate(&dir, &cfg).map_err(e2s)?;
    let cmp = pipeline::retrain(&dir, &cfg).map_err(e2s)?;
    ensure(cmp.bootstrap.iterations == 10_000, || format!("{} resamples", cmp.bootstrap.iterations))?;
    ensure(cmp.intents.len() == 6, || "six intents".into())?;
    for c in &cmp.intents {
        ensure(c.after.f1.point >= c.before.f1.point, || {
            format!("{}: F1 {:.4} -> {:.4}", c.intent, c.before.f1.point, c.after.f1.point)
        })?;
        for s in [&c.before, &c.after] {
            ensure([s.precision, s.recall, s.f1].iter().all(interval_ok), || format!("{}: CI invariant", c.intent))?;
        }
    }
    let mut by_before: Vec<_> = cmp.intents.iter().collect();
    by_before.sort_by(|a, b| a.before.f1.point.total_cmp(&b.before.f1.point));
    for c in &by_before[..2] {
        ensure(c.after.f1.point > c.before.f1.point, || format!("weak intent {} did not improve", c.intent))?;
    }
    ensure(interval_ok(&cmp.macro_f1_before) && interval_ok(&cmp.macro_f1_after), || "macro CI invariant".into())?;

    // all-correct episodes give degenerate [1, 1] intervals
    let perfect = tempfile::tempdir().map_err(e2s)?;
    let tcfg = PipelineConfig { per_intent_cap: Some(20), ..training_config() };
    let pdir = prepared_run(perfect.path(), &tcfg);
    pipeline::simulate(&pdir, &tcfg).map_err(e2s)?;
    let eps = pdir.read_episodes().map_err(e2s)?;
    let labels = cmp.intents.iter().map(|c| c.intent.clone()).collect();
    let rep = intent_report::<f64>(&eps, labels, &BootstrapConfig { iterations: 10_000, level: 0.95, seed: 1 });
    for (name, s) in &rep.intents {
        for i in [s.precision, s.recall, s.f1] {
            ensure((i.low, i.point, i.high) == (1.0, 1.0, 1.0), || format!("{name}: all-correct interval {i:?}"))?;
        }
    }
    let weak: Vec<String> = by_before[..2]
        .iter()
        .map(|c| format!("{} {:.3}->{:.3}", c.intent, c.before.f1.point, c.after.f1.point))
        .collect();
    Ok(format!(
        "macro F1 {:.3} -> {:.3}; weakest {}",
        cmp.macro_f1_before.point,
        cmp.macro_f1_after.point,
        weak.join(", ")
    ))
}

fn path_oracle() -> Check {
    let def = BotDefinition::from_path(fixture()).map_err(e2s)?;
    let mut graphs = vec![build_graph(&def)];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    graphs.extend((0..100).map(|_| support::random_graph(&mut rng, 7)));
    let mut pairs = 0;
    for (gi, g) in graphs.iter().enumerate() {
        for s in &g.vertices {
            for t in &g.vertices {
                for max_len in [None, Some(2)] {
                    let got = enumerate_paths(g, &s.name, &t.name, max_len, 50).map_err(e2s)?;
                    let (want, truncated) = support::brute_force_paths(g, &s.name, &t.name, max_len, 50);
                    let got_v: Vec<Vec<String>> = got.paths.iter().map(|p| p.vertices.clone()).collect();
                    ensure(got_v == want && got.truncated == truncated, || {
                        format!("graph {gi}: {} -> {} (max {max_len:?})", s.name, t.name)
                    })?;
                    if s.name == t.name {
                        ensure(got.paths.len() == 1 && got.paths[0].length == 0, || "source = target".into())?;
                    }
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("fixture + 100 random graphs, {pairs} queries agree; source = target gives one zero-length path"))
}

fn full_run(root: &Path) -> Result<(), String> {
    let cfg = PipelineConfig::default();
    let dir = prepared_run(root, &cfg);
    pipeline::simulate(&dir, &cfg).map_err(e2s)?;
    pipeline::remediate_stage(&dir, "determinism", &[], &cfg).map_err(e2s)?;
    Ok(())
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    full_run(&a)?;
    full_run(&b)?;
    for name in ["goals.jsonl", "episodes.jsonl", "report.json"] {
        let (x, y) = (std::fs::read(a.join(name)).map_err(e2s)?, std::fs::read(b.join(name)).map_err(e2s)?);
        ensure(x == y, || format!("{name} differs"))?;
    }
    Ok("goals, episodes, report byte-identical".into())
}

fn stage_gating() -> Check {
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let run = tmp.path().join("run");
    let r = run.to_str().unwrap();
    dialogforge(&["parse", fixture().to_str().unwrap(), "--out", r]);
    let out = dialogforge(&["generate", "--out", r]);
    ensure(out.status.code() == Some(3), || format!("generate exited {:?}", out.status.code()))?;
    ensure(stderr_code(&out) == "unrevised_map", || "error code".into())?;
    ensure(!run.join("goals.jsonl").exists(), || "goals written".into())?;

    let state = AppState::new(Store::in_memory().map_err(e2s)?, tmp.path().join("data"), PipelineConfig::default(), 1);
    let server = ServerHandle::spawn(api::router(state), "127.0.0.1:0".parse().unwrap(), "api").map_err(e2s)?;
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let url = |p: &str| format!("{}{p}", server.base_url());
    let post = |p: &str, body: Vec<u8>| -> Result<(u16, serde_json::Value), String> {
        let mut resp = agent.post(&url(p)).content_type("application/json").send(&body[..]).map_err(e2s)?;
        let v = resp.body_mut().read_json().unwrap_or_default();
        Ok((resp.status().as_u16(), v))
    };
    let def: serde_json::Value = serde_json::from_slice(&std::fs::read(fixture()).map_err(e2s)?).map_err(e2s)?;
    let (status, created) = post("/api/sessions", serde_json::json!({ "definition": def }).to_string().into_bytes())?;
    ensure(status == 201, || format!("create: {status}"))?;
    let id = created["session_id"].as_str().unwrap_or_default().to_owned();
    let (goals, err) = post(&format!("/api/sessions/{id}/goals"), vec![])?;
    ensure(goals == 409 && err["error"] == "unrevised_map", || format!("goals on unrevised maps: {goals} {err}"))?;
    let (bad, _) = post("/api/sessions", b"{\"definition\": 1}".to_vec())?;
    ensure(bad == 422, || format!("malformed create: {bad}"))?;
    server.stop();
    Ok("CLI exit 3 unrevised_map; API 409 unrevised_map, 422 malformed".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("parser golden", parse_golden, Duration::from_secs(5)),
        ("aggregation oracle", aggregation_oracle, Duration::from_secs(30)),
        ("perfect-bot completion", perfect_bot, Duration::from_secs(60)),
        ("injection calibration", injection_calibration, Duration::MAX),
        ("retraining trend", retraining_trend, Duration::from_secs(180)),
        ("path explorer oracle", path_oracle, Duration::MAX),
        ("determinism", determinism, Duration::MAX),
        ("stage gating", stage_gating, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let result = match result {
            Ok(d) if took > limit => Err(format!("{d}; took {took:.2?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("[PASS] {name}: {detail} ({took:.2?})"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why} ({took:.2?})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
