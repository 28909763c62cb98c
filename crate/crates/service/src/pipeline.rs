//! The pipeline stages over an artifact directory. The CLI and the API both
//! drive these, so the two produce identical files for identical inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use dialogforge_core::generator::{
    apply_revision_document, build_act_maps, build_graph, extract_ontology, generate_goals, generate_paraphrases,
    ingest_paraphrases, ConversationGraph, DialogActMap, GoalConfig, IntentQueries, Lexicon, Ontology,
    ParaphraseConfig, ParaphraseFile, ParaphraseSet, RevisionDocument, SimulationGoal,
};
use dialogforge_core::remediator::{
    intent_report, is_misclassified, remediate, BotInfo, BootstrapConfig, HistoryPoint, IntentScoreCi, Interval,
    ReportDocument,
};
use dialogforge_core::runtime::{train_intent_model, ErrorInjectionConfig, InProcessClient, MockBotRuntime};
use dialogforge_core::schema::{BotDefinition, IntentDefinition, UtteranceSidecar};
use dialogforge_core::simulator::{
    run_simulation, to_jsonl, ChatClient, EpisodeRecord, ResponseTemplateSet, SimulationContext,
};
use dialogforge_core::IntentModel;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self as names, jsonl, ArtifactDir};
use crate::config::{PipelineConfig, QuerySource};
use crate::error::PipelineError;
use crate::http_client::HttpChatClient;

pub const RETRAIN_AUGMENTED: &str = "retrain/augmented_intents.json";
pub const RETRAIN_MODEL: &str = "retrain/model.json";
pub const RETRAIN_COMPARISON: &str = "retrain/comparison.json";
pub const RETRAIN_EVAL_GOALS: &str = "retrain/eval_goals.jsonl";
pub const RETRAIN_EPISODES_BEFORE: &str = "retrain/eval_episodes_before.jsonl";
pub const RETRAIN_EPISODES_AFTER: &str = "retrain/eval_episodes_after.jsonl";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParseSummary {
    pub bot: String,
    pub dialogs: usize,
    pub intents: usize,
    pub maps: Vec<String>,
    pub ontology_entities: usize,
    pub eval_utterances: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub queries: usize,
    pub goals: usize,
    pub per_intent: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub episodes: usize,
    pub outcomes: BTreeMap<String, usize>,
    pub injections: Option<usize>,
}

/// Inputs for [`parse`].
#[derive(Debug, Clone, Default)]
pub struct ParseInput<'a> {
    pub definition: &'a [u8],
    pub utterances: Option<UtteranceSidecar>,
    pub eval_utterances: Option<BTreeMap<String, Vec<String>>>,
}

impl<'a> ParseInput<'a> {
    pub fn new(definition: &'a [u8]) -> Self {
        Self { definition, utterances: None, eval_utterances: None }
    }
}

fn read_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::InvalidInput(format!("{}: {e}", path.display())))
}

/// `<dir>/<stem>.eval.json` next to a definition file, when present.
pub fn eval_sidecar_for(definition: &Path) -> Option<std::path::PathBuf> {
    let stem = definition.file_stem()?.to_str()?;
    let p = definition.with_file_name(format!("{stem}.eval.json"));
    p.exists().then_some(p)
}

/// Held-out utterances per intent.
pub type EvalUtterances = BTreeMap<String, Vec<String>>;
/// Definition bytes plus the optional sidecars, as read from disk.
pub type LoadedInput = (Vec<u8>, Option<UtteranceSidecar>, Option<EvalUtterances>);

pub fn load_parse_input(
    definition: &Path,
    utterances: Option<&Path>,
    eval: Option<&Path>,
) -> Result<LoadedInput, PipelineError> {
    let bytes = std::fs::read(definition).map_err(|e| PipelineError::io(definition, e))?;
    let sidecar = utterances.map(read_json_file).transpose()?;
    let eval_path = eval.map(Path::to_path_buf).or_else(|| eval_sidecar_for(definition));
    let eval = eval_path.as_deref().map(read_json_file).transpose()?;
    Ok((bytes, sidecar, eval))
}

/// Validates the definition and writes bot, graph, aggregated maps,
/// ontology and response templates.
pub fn parse(
    input: &ParseInput<'_>,
    dir: &ArtifactDir,
    force: bool,
    config: &PipelineConfig,
) -> Result<ParseSummary, PipelineError> {
    config.validate()?;
    let def = BotDefinition::from_slice_with_utterances(input.definition, input.utterances.as_ref())?;
    if names::ALL.iter().any(|n| dir.exists(n)) {
        if !force {
            return Err(PipelineError::OutputExists(dir.root().display().to_string()));
        }
        dir.clear()?;
    }
    let graph = build_graph(&def);
    let maps = build_act_maps(&def, &graph)?;
    let ontology = extract_ontology(&def, &maps, config.stage_seed("ontology"), &config.ontology);

    dir.write_bytes(names::BOT, format!("{}\n", def.to_json_pretty()).as_bytes())?;
    dir.write_json(names::GRAPH, &graph)?;
    dir.write_maps(&maps)?;
    dir.write_bytes(names::ONTOLOGY, format!("{}\n", ontology.to_json_pretty()).as_bytes())?;
    dir.write_json(names::TEMPLATES, &ResponseTemplateSet::default())?;
    if let Some(eval) = &input.eval_utterances {
        for intent in eval.keys() {
            if def.intent(intent).is_none() {
                return Err(PipelineError::InvalidInput(format!("eval utterances name unknown intent {intent:?}")));
            }
        }
        dir.write_json(names::EVAL_UTTERANCES, eval)?;
    }
    Ok(ParseSummary {
        bot: def.name.clone(),
        dialogs: def.dialogs.len(),
        intents: def.intents.len(),
        maps: maps.keys().cloned().collect(),
        ontology_entities: ontology.dialogs.values().map(BTreeMap::len).sum(),
        eval_utterances: input.eval_utterances.is_some(),
    })
}

pub fn load_bot(dir: &ArtifactDir) -> Result<BotDefinition, PipelineError> {
    Ok(BotDefinition::from_slice(&dir.read_bytes(names::BOT)?)?)
}

pub fn load_ontology(dir: &ArtifactDir) -> Result<Ontology, PipelineError> {
    dir.read_json(names::ONTOLOGY)
}

pub fn load_templates(dir: &ArtifactDir) -> Result<ResponseTemplateSet, PipelineError> {
    let bytes = dir.read_bytes(names::TEMPLATES)?;
    ResponseTemplateSet::from_json(&bytes).map_err(|e| PipelineError::InvalidInput(format!("{}: {e}", names::TEMPLATES)))
}

fn write_ontology(dir: &ArtifactDir, ontology: &Ontology) -> Result<(), PipelineError> {
    dir.write_bytes(names::ONTOLOGY, format!("{}\n", ontology.to_json_pretty()).as_bytes())?;
    Ok(())
}

/// Checks that replacement maps describe exactly the parsed dialogs.
pub fn check_maps(dir: &ArtifactDir, maps: &BTreeMap<String, DialogActMap>) -> Result<(), PipelineError> {
    let current = dir.read_maps()?;
    for (key, map) in maps {
        if key != &map.dialog {
            return Err(PipelineError::InvalidInput(format!("map keyed {key:?} describes dialog {:?}", map.dialog)));
        }
    }
    let have: BTreeSet<&String> = current.keys().collect();
    let got: BTreeSet<&String> = maps.keys().collect();
    if have != got {
        return Err(PipelineError::InvalidInput(format!(
            "maps must cover exactly the dialogs {:?}",
            have.into_iter().collect::<Vec<_>>()
        )));
    }
    Ok(())
}

/// Replaces the maps wholesale, keeping each map's own `revised` flag.
pub fn replace_maps(dir: &ArtifactDir, maps: &BTreeMap<String, DialogActMap>) -> Result<(), PipelineError> {
    check_maps(dir, maps)?;
    dir.write_maps(maps)
}

pub fn replace_ontology(dir: &ArtifactDir, ontology: &Ontology) -> Result<(), PipelineError> {
    let maps = dir.read_maps()?;
    if let Some(d) = ontology.dialogs.keys().find(|d| !maps.contains_key(*d)) {
        return Err(PipelineError::InvalidInput(format!("ontology names unknown dialog {d:?}")));
    }
    write_ontology(dir, ontology)
}

/// Applies a revision document (an empty one accepts the maps as they are)
/// and marks every map revised.
pub fn revise(dir: &ArtifactDir, revision: &RevisionDocument) -> Result<Vec<String>, PipelineError> {
    let maps = dir.read_maps()?;
    let ontology = load_ontology(dir)?;
    let (maps, ontology) = apply_revision_document(&maps, &ontology, revision)?;
    dir.write_maps(&maps)?;
    write_ontology(dir, &ontology)?;
    Ok(maps.keys().cloned().collect())
}

fn first_unrevised(maps: &BTreeMap<String, DialogActMap>) -> Option<&str> {
    maps.values().find(|m| !m.revised).map(|m| m.dialog.as_str())
}

/// Builds the intent query pool according to `config.paraphrase` and
/// writes goals. Refuses while any map is unrevised.
pub fn generate(dir: &ArtifactDir, config: &PipelineConfig) -> Result<GenerateSummary, PipelineError> {
    config.validate()?;
    let def = load_bot(dir)?;
    let maps = dir.read_maps()?;
    if let Some(d) = first_unrevised(&maps) {
        return Err(PipelineError::UnrevisedMap(d.to_owned()));
    }
    let ontology = load_ontology(dir)?;
    let queries = match config.paraphrase.source {
        QuerySource::Training => IntentQueries::from_training(&def),
        QuerySource::Paraphrases => {
            let set = generate_paraphrases(&def.intents, &paraphrase_config(config)?)?;
            dir.write_json(names::PARAPHRASES, &set)?;
            IntentQueries::from_paraphrases(&set)
        }
        QuerySource::Ingest => {
            let path = config.paraphrase.ingest_file.as_deref().expect("validated");
            let file: ParaphraseFile = read_json_file(path)?;
            let set: ParaphraseSet = ingest_paraphrases(&file);
            dir.write_json(names::PARAPHRASES, &set)?;
            IntentQueries::from_paraphrases(&set)
        }
    };
    let goals = generate_goals(
        &def,
        &maps,
        &ontology,
        &queries,
        &GoalConfig { per_intent_cap: config.per_intent_cap, seed: config.stage_seed("goals") },
    )?;
    dir.write_goals(&goals)?;
    let mut per_intent = BTreeMap::new();
    for g in &goals {
        *per_intent.entry(g.intent.clone()).or_insert(0) += 1;
    }
    Ok(GenerateSummary { queries: queries.len(), goals: goals.len(), per_intent })
}

pub fn embedded_runtime(
    def: BotDefinition,
    config: &PipelineConfig,
    injection: ErrorInjectionConfig,
) -> Result<Arc<MockBotRuntime>, PipelineError> {
    let model = train_intent_model::<f64>(&def.intents, config.runtime.confidence_threshold)
        .map_err(|e| PipelineError::InvalidInput(e.to_string()))?;
    for w in &model.warnings {
        log::warn!("{w}");
    }
    runtime_with_model(def, model, injection)
}

fn runtime_with_model(
    def: BotDefinition,
    model: IntentModel,
    injection: ErrorInjectionConfig,
) -> Result<Arc<MockBotRuntime>, PipelineError> {
    MockBotRuntime::new(Arc::new(def), Arc::new(model), injection)
        .map(Arc::new)
        .map_err(|e| PipelineError::InvalidConfig(e.to_string()))
}

fn summarize(episodes: &[EpisodeRecord], injections: Option<usize>) -> SimulateSummary {
    let mut outcomes = BTreeMap::new();
    for e in episodes {
        let key = serde_json::to_value(e.outcome).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        *outcomes.entry(key).or_insert(0) += 1;
    }
    SimulateSummary { episodes: episodes.len(), outcomes, injections }
}

/// Simulates every goal against the configured endpoint, or against the
/// embedded reference runtime when none is set.
pub fn simulate(dir: &ArtifactDir, config: &PipelineConfig) -> Result<SimulateSummary, PipelineError> {
    config.validate()?;
    let def = load_bot(dir)?;
    let maps = dir.read_maps()?;
    if let Some(d) = first_unrevised(&maps) {
        return Err(PipelineError::UnrevisedMap(d.to_owned()));
    }
    let goals = dir.read_goals()?;
    let templates = load_templates(dir)?;
    let ctx = SimulationContext::from_definition(&def, &maps, templates)?;
    let sim = config.simulation();
    let (episodes, injections) = match &config.endpoint {
        Some(url) => {
            let client = HttpChatClient::new(url);
            (run_simulation(&goals, &ctx, &client, &sim)?, None)
        }
        None => {
            let runtime = embedded_runtime(def, config, config.runtime.injection.clone())?;
            let client = InProcessClient::new(runtime.clone());
            let eps = run_simulation(&goals, &ctx, &client, &sim)?;
            (eps, Some(runtime.injection_log()))
        }
    };
    dir.write_bytes(names::EPISODES, &to_jsonl(&episodes))?;
    let count = match &injections {
        Some(log) => {
            dir.write_bytes(names::INJECTIONS, &jsonl(log))?;
            Some(log.len())
        }
        None => None,
    };
    Ok(summarize(&episodes, count))
}

pub fn bot_info<'a>(def: &BotDefinition, graph: Option<&'a ConversationGraph>) -> BotInfo<'a> {
    BotInfo {
        intents: def.intents.iter().map(|i| i.name.clone()).collect(),
        dialog_intents: def.intents.iter().map(|i| (i.entry_dialog.clone(), i.name.clone())).collect(),
        graph,
        success_dialogs: def.success_dialogs.clone(),
    }
}

/// Analyses the episodes and writes the health report. The written report
/// carries `history` followed by this session.
pub fn remediate_stage(
    dir: &ArtifactDir,
    session_id: &str,
    history: &[HistoryPoint],
    config: &PipelineConfig,
) -> Result<ReportDocument, PipelineError> {
    config.validate()?;
    let episodes = dir.read_episodes()?;
    let def = load_bot(dir)?;
    let graph: ConversationGraph = dir.read_json(names::GRAPH)?;
    let report = remediate(session_id, &episodes, &bot_info(&def, Some(&graph)), history, &config.remediation());
    dir.write_bytes(names::REPORT, report.to_json_pretty().as_bytes())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentComparison {
    pub intent: String,
    pub added_queries: usize,
    pub before: IntentScoreCi<f64>,
    pub after: IntentScoreCi<f64>,
    pub delta_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainComparison {
    pub failing_queries: usize,
    pub eval_goals: usize,
    pub intents: Vec<IntentComparison>,
    pub macro_f1_before: Interval<f64>,
    pub macro_f1_after: Interval<f64>,
    pub bootstrap: BootstrapConfig,
}

impl RetrainComparison {
    /// Fixed-width table: one row per intent, F1 before and after with
    /// their intervals.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let w = self.intents.iter().map(|c| c.intent.len()).max().unwrap_or(6).max(6);
        let _ = writeln!(s, "{:w$}  {:>6}  {:>23}  {:>23}  {:>7}", "intent", "added", "F1 original", "F1 augmented", "delta");
        let fmt = |i: &Interval<f64>| format!("{:.3} [{:.3}, {:.3}]", i.point, i.low, i.high);
        for c in &self.intents {
            let _ = writeln!(
                s,
                "{:w$}  {:>6}  {:>23}  {:>23}  {:>+7.3}",
                c.intent,
                c.added_queries,
                fmt(&c.before.f1),
                fmt(&c.after.f1),
                c.delta_f1
            );
        }
        let _ = writeln!(
            s,
            "{:w$}  {:>6}  {:>23}  {:>23}  {:>+7.3}",
            "macro",
            self.failing_queries,
            fmt(&self.macro_f1_before),
            fmt(&self.macro_f1_after),
            self.macro_f1_after.point - self.macro_f1_before.point
        );
        s
    }
}

/// Original training sets plus every misclassified simulated query of the
/// intent it should have reached. Returns the added count per intent.
pub fn augment_intents(
    intents: &[IntentDefinition],
    episodes: &[EpisodeRecord],
) -> (Vec<IntentDefinition>, BTreeMap<String, usize>) {
    let mut out = intents.to_vec();
    let mut added: BTreeMap<String, usize> = intents.iter().map(|i| (i.name.clone(), 0)).collect();
    for e in episodes.iter().filter(|e| is_misclassified(e)) {
        if let Some(def) = out.iter_mut().find(|i| i.name == e.goal.intent) {
            if !def.training_utterances.contains(&e.goal.intent_query) {
                def.training_utterances.push(e.goal.intent_query.clone());
                *added.entry(def.name.clone()).or_insert(0) += 1;
            }
        }
    }
    (out, added)
}

fn eval_utterances(dir: &ArtifactDir, config: &PipelineConfig) -> Result<BTreeMap<String, Vec<String>>, PipelineError> {
    match &config.retrain.eval_utterances {
        Some(p) => read_json_file(p),
        None => dir.read_json(names::EVAL_UTTERANCES),
    }
}

/// Paraphrases of the held-out utterances, produced the same way as the
/// simulation queries.
fn eval_queries(
    def: &BotDefinition,
    eval: &BTreeMap<String, Vec<String>>,
    config: &PipelineConfig,
) -> Result<IntentQueries, PipelineError> {
    let held_out: Vec<IntentDefinition> = eval
        .iter()
        .map(|(name, utterances)| {
            let intent = def
                .intent(name)
                .ok_or_else(|| PipelineError::InvalidInput(format!("eval utterances name unknown intent {name:?}")))?;
            Ok(IntentDefinition { training_utterances: utterances.clone(), ..intent.clone() })
        })
        .collect::<Result<_, PipelineError>>()?;
    let set = generate_paraphrases(&held_out, &paraphrase_config(config)?)?;
    Ok(IntentQueries::from_paraphrases(&set))
}

fn paraphrase_config(config: &PipelineConfig) -> Result<ParaphraseConfig, PipelineError> {
    let lexicon = match &config.paraphrase.lexicon {
        Some(p) => read_json_file::<Lexicon>(p)?,
        None => Lexicon::bundled(),
    };
    Ok(ParaphraseConfig { max_variants: config.paraphrase.max_variants, lexicon })
}

fn evaluate(
    def: &BotDefinition,
    model: IntentModel,
    goals: &[SimulationGoal],
    ctx: &SimulationContext,
    config: &PipelineConfig,
) -> Result<Vec<EpisodeRecord>, PipelineError> {
    let runtime = runtime_with_model(def.clone(), model, ErrorInjectionConfig::default())?;
    let client = InProcessClient::new(runtime);
    let eps = run_simulation(goals, ctx, &client as &dyn ChatClient, &config.simulation())?;
    Ok(eps)
}

/// Augments the training sets with the misclassified queries, retrains
/// the reference model, and compares both models on held-out goals.
pub fn retrain(dir: &ArtifactDir, config: &PipelineConfig) -> Result<RetrainComparison, PipelineError> {
    config.validate()?;
    let episodes = dir.read_episodes()?;
    let def = load_bot(dir)?;
    let maps = dir.read_maps()?;
    if let Some(d) = first_unrevised(&maps) {
        return Err(PipelineError::UnrevisedMap(d.to_owned()));
    }
    let ontology = load_ontology(dir)?;
    let eval = eval_utterances(dir, config)?;

    let (augmented, added) = augment_intents(&def.intents, &episodes);
    let threshold = config.runtime.confidence_threshold;
    let before = train_intent_model::<f64>(&def.intents, threshold).map_err(|e| PipelineError::InvalidInput(e.to_string()))?;
    let after = train_intent_model::<f64>(&augmented, threshold).map_err(|e| PipelineError::InvalidInput(e.to_string()))?;

    let goals = generate_goals(
        &def,
        &maps,
        &ontology,
        &eval_queries(&def, &eval, config)?,
        &GoalConfig { per_intent_cap: config.retrain.eval_per_intent_cap, seed: config.stage_seed("retrain-eval") },
    )?;
    let ctx = SimulationContext::from_definition(&def, &maps, load_templates(dir)?)?;
    dir.write_json(RETRAIN_AUGMENTED, &augmented)?;
    dir.write_json(RETRAIN_MODEL, &after)?;
    dir.write_bytes(RETRAIN_EVAL_GOALS, &jsonl(&goals))?;

    let eps_before = evaluate(&def, before, &goals, &ctx, config)?;
    let eps_after = evaluate(&def, after, &goals, &ctx, config)?;
    dir.write_bytes(RETRAIN_EPISODES_BEFORE, &to_jsonl(&eps_before))?;
    dir.write_bytes(RETRAIN_EPISODES_AFTER, &to_jsonl(&eps_after))?;

    let labels: Vec<String> = def.intents.iter().map(|i| i.name.clone()).collect();
    let boot = BootstrapConfig {
        iterations: config.bootstrap_iterations,
        level: config.bootstrap_level,
        seed: config.stage_seed("retrain-bootstrap"),
    };
    let rb = intent_report::<f64>(&eps_before, labels.clone(), &boot);
    let ra = intent_report::<f64>(&eps_after, labels.clone(), &boot);
    let intents = labels
        .iter()
        .map(|l| {
            let (b, a) = (rb.intents[l].clone(), ra.intents[l].clone());
            IntentComparison {
                intent: l.clone(),
                added_queries: added.get(l).copied().unwrap_or(0),
                delta_f1: a.f1.point - b.f1.point,
                before: b,
                after: a,
            }
        })
        .collect();
    let comparison = RetrainComparison {
        failing_queries: added.values().sum(),
        eval_goals: goals.len(),
        intents,
        macro_f1_before: rb.macro_f1,
        macro_f1_after: ra.macro_f1,
        bootstrap: boot,
    };
    dir.write_json(RETRAIN_COMPARISON, &comparison)?;
    Ok(comparison)
}
