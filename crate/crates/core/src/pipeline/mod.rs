//! End-to-end orchestration over a run directory.
//!
//! Stages run in a fixed order and each one owns a fixed set of metadata
//! fields. After every stage the metadata store and a stage stamp are
//! written, so an interrupted run resumes at the first stage whose inputs
//! changed or that never finished.
//!
//! Run directory layout:
//!
//! ```text
//! metadata.jsonl   sentence entities with their metadata
//! stages.json      completed stages and their input fingerprints
//! dr_before.json   DR report of the input corpus
//! detect.json, assess.json, filter.json, cda.json   stage statistics
//! debiased.jsonl   the rebuilt corpus
//! dr_after.json    DR report of the rebuilt corpus, re-segmented and re-matched
//! summary.json, summary.txt
//! manifest.json    versions and timings; the only file with wall-clock data
//! ```

mod config;
mod summary;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cda::{self, run_cda, CdaEndpoints, PrecheckLists};
use crate::corpus::{
    build_debiased, load_corpus, read_store, segment_corpus, write_corpus, write_store, Abbreviations,
    Document, SentenceEntity, Segmenter,
};
use crate::error::{Error, Result};
use crate::llm::{HttpBackend, LlmEndpoint, Transcript, TranscriptMode};
use crate::prompts::PromptCatalog;
use crate::repbias::{emit_report, match_all, Matcher, Tokenizer};
use crate::stereotype::{assess_stage, detect_stage, filter, ScoreModel};
use crate::wordlist::Lexicon;

pub use config::{CdaSection, LlmRole, LlmSection, PipelineConfig, StereotypeSection, TranscriptSettings};
pub use summary::{report_summary, summarize_store, Summary};

pub const STORE_FILE: &str = "metadata.jsonl";
pub const STAMPS_FILE: &str = "stages.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEBIASED_FILE: &str = "debiased.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Segment,
    Match,
    Detect,
    Assess,
    Filter,
    Cda,
    Build,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Segment,
        Stage::Match,
        Stage::Detect,
        Stage::Assess,
        Stage::Filter,
        Stage::Cda,
        Stage::Build,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Segment => "segment",
            Stage::Match => "match",
            Stage::Detect => "detect",
            Stage::Assess => "assess",
            Stage::Filter => "filter",
            Stage::Cda => "cda",
            Stage::Build => "build",
        }
    }

    /// Entity fields this stage writes. No other stage may touch them.
    pub fn owned_fields(self) -> &'static [&'static str] {
        match self {
            Stage::Segment => &["doc_id", "sent_id", "char_start", "char_end", "text"],
            Stage::Match => &["words_per_group", "counts_per_group", "relevant_sentence"],
            Stage::Detect => &["potential_stereotype", "detection", "detection_status"],
            Stage::Assess => &["linguistic_indicators", "assessment_status"],
            Stage::Filter => &["score_scsc", "remove_sentence"],
            Stage::Cda => &["text_cda", "counts_per_group_cda", "skip_reason"],
            Stage::Build => &[],
        }
    }

    fn index(self) -> usize {
        Stage::ALL.iter().position(|s| *s == self).unwrap()
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStamp {
    pub stage: Stage,
    pub fingerprint: String,
    /// False when the stage was disabled and only cleared its fields.
    pub ran: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub resumed: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub prompt_version: String,
    pub attribute: String,
    pub seed: u64,
    pub transcript_mode: TranscriptMode,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub stages: Vec<StageTiming>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn stage_err(stage: Stage) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        e @ Error::Stage { .. } => e,
        e => Error::Stage {
            stage: stage.name(),
            source: Box::new(e),
        },
    }
}

/// A configured run: loaded resources, the current entities and the
/// stage stamps of the run directory.
pub struct Pipeline {
    config: PipelineConfig,
    corpus: Vec<Document>,
    lexicon: Lexicon,
    matcher: Matcher,
    segmenter: Segmenter,
    catalog: PromptCatalog,
    score_model: ScoreModel,
    prechecks: PrecheckLists,
    inputs: Vec<String>,
    transcript: OnceLock<Arc<Transcript>>,
    endpoint_override: Option<LlmEndpoint>,
    entities: Vec<SentenceEntity>,
    stamps: Vec<StageStamp>,
    timings: Vec<StageTiming>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("output_dir", &self.config.output_dir)
            .field("entities", &self.entities.len())
            .field("stamps", &self.stamps)
            .finish()
    }
}

impl Pipeline {
    /// Validates the config, loads every input and picks up the store and
    /// stamps already present in the output directory.
    pub fn open(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let corpus = load_corpus(&config.corpus)?;
        let lexicon = Lexicon::load_dir(&config.wordlist_dir, &config.attribute, config.groups.as_deref())?;
        let abbreviations = match &config.abbreviations {
            Some(p) => Abbreviations::load(p)?,
            None => Abbreviations::default(),
        };
        let matcher = Matcher::with_tokenizer(&lexicon, Tokenizer::new(abbreviations.clone()));
        let segmenter = Segmenter::new(abbreviations);
        let catalog = match &config.prompts_dir {
            Some(d) => PromptCatalog::with_overrides(d)?,
            None => PromptCatalog::default(),
        };
        let score_model = match &config.stereotype.score_model {
            Some(p) => ScoreModel::load(p)?,
            None => ScoreModel::default(),
        };
        score_model.validate()?;
        let mut prechecks = PrecheckLists::default();
        if let Some(p) = &config.cda.political_keywords {
            prechecks.political_keywords = cda::load_keywords(p)?;
        }
        if let Some(p) = &config.cda.historical_keywords {
            prechecks.historical_keywords = cda::load_keywords(p)?;
        }
        let inputs = Self::stage_inputs(&config, &corpus, &lexicon, &segmenter, &catalog, &score_model, &prechecks)?;

        fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
        let store = config.output_dir.join(STORE_FILE);
        let stamps_path = config.output_dir.join(STAMPS_FILE);
        let (entities, stamps) = if store.exists() && stamps_path.exists() {
            let raw = fs::read_to_string(&stamps_path).map_err(|e| Error::io(&stamps_path, e))?;
            (read_store(&store)?, serde_json::from_str(&raw)?)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Pipeline {
            config,
            corpus,
            lexicon,
            matcher,
            segmenter,
            catalog,
            score_model,
            prechecks,
            inputs,
            transcript: OnceLock::new(),
            endpoint_override: None,
            entities,
            stamps,
            timings: Vec::new(),
        })
    }

    /// Loads the config file and opens it.
    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::open(PipelineConfig::load(path)?)
    }

    /// Sends every LLM request of this pipeline to `llm`, ignoring the
    /// configured endpoints and transcript.
    pub fn with_endpoint(mut self, llm: LlmEndpoint) -> Self {
        self.endpoint_override = Some(llm);
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn matcher(&self) -> &Matcher {
        &self.matcher
    }

    pub fn entities(&self) -> &[SentenceEntity] {
        &self.entities
    }

    pub fn stamps(&self) -> &[StageStamp] {
        &self.stamps
    }

    pub fn timings(&self) -> &[StageTiming] {
        &self.timings
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.output_dir
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.config.output_dir.join(file)
    }

    /// Per-stage descriptions of everything that can change a stage's
    /// result. Fingerprints chain them so a change invalidates every later
    /// stage too.
    fn stage_inputs(
        config: &PipelineConfig,
        corpus: &[Document],
        lexicon: &Lexicon,
        segmenter: &Segmenter,
        catalog: &PromptCatalog,
        score_model: &ScoreModel,
        prechecks: &PrecheckLists,
    ) -> Result<Vec<String>> {
        let corpus_digest = {
            let mut h = Sha256::new();
            for d in corpus {
                h.update(serde_json::to_vec(d)?);
            }
            hex::encode(h.finalize())
        };
        let abbreviations: Vec<&str> = segmenter.abbreviations().iter().collect();
        let st = &config.stereotype;
        let inputs = [
            serde_json::json!({ "corpus": corpus_digest, "abbreviations": abbreviations }),
            serde_json::json!({ "spec": lexicon.spec, "lists": lexicon.lists }),
            serde_json::json!({ "enabled": st.enabled, "max_tokens": st.max_tokens, "prompts": catalog.version() }),
            serde_json::json!({ "enabled": st.enabled, "prompts": catalog.version() }),
            serde_json::json!({ "enabled": st.enabled, "threshold": st.threshold, "model": score_model }),
            serde_json::json!({
                "cda": config.cda.to_config(config.seed),
                "enabled": config.cda.enabled,
                "political": prechecks.political_keywords,
                "historical": prechecks.historical_keywords,
                "prompts": catalog.version(),
            }),
            serde_json::json!({}),
        ];
        let mut prev = String::new();
        let mut out = Vec::new();
        for v in inputs {
            let mut h = Sha256::new();
            h.update(prev.as_bytes());
            h.update(serde_json::to_vec(&v)?);
            prev = hex::encode(&h.finalize()[..8]);
            out.push(prev.clone());
        }
        Ok(out)
    }

    pub fn fingerprint(&self, stage: Stage) -> &str {
        &self.inputs[stage.index()]
    }

    /// Whether `stage` and every stage before it completed with the
    /// current inputs.
    pub fn is_current(&self, stage: Stage) -> bool {
        Stage::ALL[..=stage.index()].iter().all(|s| {
            self.stamps
                .iter()
                .any(|st| st.stage == *s && st.fingerprint == self.fingerprint(*s))
        })
    }

    fn transcript(&self) -> Result<Arc<Transcript>> {
        if let Some(t) = self.transcript.get() {
            return Ok(t.clone());
        }
        let t = Arc::new(Transcript::open(&self.config.transcript.path)?);
        Ok(self.transcript.get_or_init(|| t).clone())
    }

    /// Endpoint for `role`, honouring the transcript mode.
    pub fn endpoint(&self, role: LlmRole) -> Result<LlmEndpoint> {
        if let Some(llm) = &self.endpoint_override {
            return Ok(llm.clone());
        }
        let mode = self.config.transcript.mode;
        if mode == TranscriptMode::Replay {
            return Ok(LlmEndpoint::replay(self.transcript()?).with_parallelism(self.config.llm.replay_parallelism));
        }
        let cfg = self
            .config
            .llm
            .endpoint(role)
            .ok_or_else(|| Error::InvalidConfig(format!("no endpoint configured for {role:?}")))?
            .clone();
        let parallelism = cfg.parallelism;
        let backend = Arc::new(HttpBackend::new(cfg)?);
        let llm = match mode {
            TranscriptMode::Record => LlmEndpoint::record(backend, self.transcript()?),
            _ => LlmEndpoint::live(backend),
        };
        Ok(llm.with_parallelism(parallelism))
    }

    fn require(&self, stage: Stage) -> Result<()> {
        if stage == Stage::Segment {
            return Ok(());
        }
        let prev = Stage::ALL[stage.index() - 1];
        if self.is_current(prev) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "stage {stage} needs {prev} to have run with the current inputs"
            )))
        }
    }

    fn stamp(&mut self, stage: Stage, ran: bool) -> Result<()> {
        self.stamps.retain(|s| s.stage < stage);
        self.stamps.push(StageStamp {
            stage,
            fingerprint: self.fingerprint(stage).to_string(),
            ran,
        });
        Ok(())
    }

    /// Writes the store and the stamps.
    pub fn checkpoint(&self) -> Result<()> {
        write_store(self.path(STORE_FILE), &self.entities)?;
        write_json(&self.path(STAMPS_FILE), &self.stamps)
    }

    /// Runs one stage on the current entities. The previous stage must be
    /// current. Later stamps are dropped.
    pub fn run_stage(&mut self, stage: Stage) -> Result<()> {
        self.require(stage)?;
        let started = Instant::now();
        let ran = self.execute(stage).map_err(stage_err(stage))?;
        self.stamp(stage, ran)?;
        if self.config.checkpoint || stage == Stage::Build {
            self.checkpoint()?;
        }
        self.timings.push(StageTiming {
            stage,
            resumed: false,
            seconds: started.elapsed().as_secs_f64(),
        });
        log::info!("stage {stage} done in {:.2}s", started.elapsed().as_secs_f64());
        Ok(())
    }

    fn execute(&mut self, stage: Stage) -> Result<bool> {
        let out = self.config.output_dir.clone();
        match stage {
            Stage::Segment => {
                self.entities = segment_corpus(&self.corpus, &self.segmenter);
                self.entities.sort_by(|a, b| a.key().cmp(&b.key()));
                Ok(true)
            }
            Stage::Match => {
                match_all(&self.matcher, &mut self.entities);
                write_json(&out.join("dr_before.json"), &emit_report(&self.lexicon.spec, &self.entities))?;
                Ok(true)
            }
            Stage::Detect => {
                if !self.config.stereotype.enabled {
                    for e in &mut self.entities {
                        e.metadata.potential_stereotype = false;
                        e.metadata.detection = None;
                        e.metadata.detection_status = None;
                    }
                    return Ok(false);
                }
                let llm = self.endpoint(LlmRole::Detection)?;
                let stats = detect_stage(
                    &mut self.entities,
                    &llm,
                    &self.catalog,
                    &self.config.stereotype.to_config(),
                    self.matcher.tokenizer(),
                )?;
                write_json(&out.join("detect.json"), &stats)?;
                Ok(true)
            }
            Stage::Assess => {
                if !self.config.stereotype.enabled {
                    for e in &mut self.entities {
                        e.metadata.linguistic_indicators = None;
                        e.metadata.assessment_status = None;
                    }
                    return Ok(false);
                }
                let llm = self.endpoint(LlmRole::Assessment)?;
                let stats = assess_stage(&mut self.entities, &llm, &self.catalog)?;
                write_json(&out.join("assess.json"), &stats)?;
                Ok(true)
            }
            Stage::Filter => {
                if !self.config.stereotype.enabled {
                    for e in &mut self.entities {
                        e.metadata.score_scsc = None;
                        e.metadata.remove_sentence = false;
                    }
                    return Ok(false);
                }
                let stats = filter(&mut self.entities, &self.score_model, &self.config.stereotype.to_config())?;
                write_json(&out.join("filter.json"), &stats)?;
                Ok(true)
            }
            Stage::Cda => {
                if !self.config.cda.enabled {
                    for e in &mut self.entities {
                        e.metadata.text_cda = None;
                        e.metadata.counts_per_group_cda = None;
                        e.metadata.skip_reason = None;
                    }
                    return Ok(false);
                }
                let cfg = self.config.cda.to_config(self.config.seed);
                let endpoints = if cfg.mode == cda::CdaMode::Gc {
                    Some((self.endpoint(LlmRole::Selection)?, self.endpoint(LlmRole::Verification)?))
                } else {
                    None
                };
                let report = run_cda(
                    &mut self.entities,
                    &self.lexicon,
                    &self.matcher,
                    &cfg,
                    &self.prechecks,
                    endpoints.as_ref().map(|(s, v)| CdaEndpoints {
                        selection: s,
                        verification: v,
                    }),
                    &self.catalog,
                )?;
                write_json(&out.join("cda.json"), &report)?;
                Ok(true)
            }
            Stage::Build => {
                let docs = build_debiased(&self.entities, &self.corpus)?;
                write_corpus(out.join(DEBIASED_FILE), &docs)?;
                let mut rebuilt = segment_corpus(&docs, &self.segmenter);
                match_all(&self.matcher, &mut rebuilt);
                write_json(&out.join("dr_after.json"), &emit_report(&self.lexicon.spec, &rebuilt))?;
                let summary = self.summary();
                write_json(&out.join("summary.json"), &summary)?;
                let table = summary.table();
                fs::write(out.join("summary.txt"), &table).map_err(|e| Error::io(out.join("summary.txt"), e))?;
                Ok(true)
            }
        }
    }

    /// Runs every stage in order. With `resume`, stages that are already
    /// current are skipped.
    pub fn run(&mut self, resume: bool) -> Result<Summary> {
        let started = unix_now();
        if !resume {
            self.stamps.clear();
        }
        for stage in Stage::ALL {
            if resume && self.is_current(stage) && !self.entities.is_empty() {
                log::info!("stage {stage} is current, skipping");
                self.timings.push(StageTiming {
                    stage,
                    resumed: true,
                    seconds: 0.0,
                });
                continue;
            }
            if let Err(e) = self.run_stage(stage) {
                if !self.config.checkpoint {
                    self.checkpoint()?;
                }
                return Err(e);
            }
        }
        self.write_manifest(started)?;
        Ok(self.summary())
    }

    pub fn summary(&self) -> Summary {
        report_summary(&self.lexicon.spec, &self.entities)
    }

    pub fn write_manifest(&self, started_unix: u64) -> Result<()> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            prompt_version: self.catalog.version(),
            attribute: self.config.attribute.clone(),
            seed: self.config.seed,
            transcript_mode: self.config.transcript.mode,
            started_unix,
            finished_unix: unix_now(),
            stages: self.timings.clone(),
        };
        write_json(&self.path(MANIFEST_FILE), &manifest)
    }
}

/// Digest of a file, for comparing run artifacts.
pub fn artifact_digest(path: impl AsRef<Path>) -> Result<String> {
    file_digest(path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ChatRequest;
    use std::sync::atomic::{AtomicUsize, Ordering};

    const NOT_STEREO: &str = r#"{"has_category_label":"yes","full_label":"she","beliefs_expectancies":"no","information":"x","behavior_features_traits":"no","stereotype":"no"}"#;
    const STEREO: &str = r#"{"has_category_label":"yes","full_label":"women","beliefs_expectancies":"yes","information":"x","behavior_features_traits":"yes","stereotype":"yes"}"#;
    const RECORD: &str = r#"{"has_category_label":"yes","full_label":"women","target_type":"generic target","connotation":"negative","gram_form":"noun","ling_form":"generic","information":"x","situation":"enduring characteristics","situation_evaluation":"negative","generalization":"abstract"}"#;

    fn stub() -> LlmEndpoint {
        LlmEndpoint::from_fn(|r: &ChatRequest| {
            Ok(match r.purpose.as_str() {
                "detect" => {
                    if r.last_user().contains("emotional") { STEREO } else { NOT_STEREO }
                }
                "assess" => RECORD,
                "cda-verify" => "VALID",
                _ => "",
            }
            .to_string())
        })
    }

    fn fixture(dir: &Path, mode: &str) -> PipelineConfig {
        let corpus = dir.join("corpus.jsonl");
        let docs = [
            Document::new("d1", "He is a software developer. His brother is a doctor."),
            Document::new("d2", "Women are usually too emotional. The weather was fine."),
            Document::new("d3", "The king met the president. He smiled."),
            Document::new("d4", "She was born in 1984. Her father is a farmer."),
            Document::new("d5", "The men and the boys left. He stayed."),
            Document::new("d6", "Nothing to see here."),
        ];
        write_corpus(&corpus, &docs).unwrap();
        let mut cfg = PipelineConfig::new(
            corpus,
            concat!(env!("CARGO_MANIFEST_DIR"), "/data/wordlists/gender"),
            "gender",
            dir.join("run"),
        );
        cfg.cda.mode = mode.parse().unwrap();
        cfg.seed = 3;
        cfg
    }

    fn open(dir: &Path, mode: &str) -> Pipeline {
        Pipeline::open(fixture(dir, mode)).unwrap().with_endpoint(stub())
    }

    #[test]
    fn full_run_produces_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = open(dir.path(), "gc");
        let s = p.run(true).unwrap();
        for f in [STORE_FILE, STAMPS_FILE, MANIFEST_FILE, DEBIASED_FILE, "dr_before.json", "dr_after.json", "cda.json", "summary.json", "summary.txt"] {
            assert!(p.path(f).exists(), "{f}");
        }
        assert_eq!(s.removed, 1);
        assert!(s.dr_after.unwrap() <= s.dr.unwrap());
        let rebuilt = load_corpus(p.path(DEBIASED_FILE)).unwrap();
        assert!(!rebuilt[1].text.contains("emotional"));
    }

    #[test]
    fn resume_skips_current_stages() {
        let dir = tempfile::tempdir().unwrap();
        open(dir.path(), "gc").run(true).unwrap();
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let counting = LlmEndpoint::from_fn(move |r: &ChatRequest| {
            if r.purpose.starts_with("detect") || r.purpose.starts_with("assess") {
                c.fetch_add(1, Ordering::SeqCst);
            }
            stub().complete(r)
        });
        let mut cfg = fixture(dir.path(), "gc");
        cfg.seed = 4;
        let mut p = Pipeline::open(cfg).unwrap().with_endpoint(counting);
        assert!(p.is_current(Stage::Filter));
        assert!(!p.is_current(Stage::Cda));
        p.run(true).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 0);
        let resumed: Vec<Stage> = p.timings().iter().filter(|t| t.resumed).map(|t| t.stage).collect();
        assert_eq!(resumed, &Stage::ALL[..5]);
    }

    #[test]
    fn rerunning_a_stage_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = open(dir.path(), "base");
        p.run(true).unwrap();
        let before = fs::read(p.path(STORE_FILE)).unwrap();
        for stage in Stage::ALL {
            p.run_stage(stage).unwrap();
        }
        assert_eq!(before, fs::read(p.path(STORE_FILE)).unwrap());
    }

    #[test]
    fn stages_write_only_their_fields() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = open(dir.path(), "gc");
        p.run_stage(Stage::Segment).unwrap();
        for stage in &Stage::ALL[1..] {
            let before: Vec<serde_json::Value> = p.entities().iter().map(|e| serde_json::to_value(e).unwrap()).collect();
            p.run_stage(*stage).unwrap();
            for (b, e) in before.iter().zip(p.entities()) {
                let a = serde_json::to_value(e).unwrap();
                for key in ["doc_id", "sent_id", "char_start", "char_end", "text"] {
                    assert_eq!(a[key], b[key], "{stage} changed {key}");
                }
                let (am, bm) = (a["metadata"].as_object().unwrap(), b["metadata"].as_object().unwrap());
                let keys: std::collections::BTreeSet<&String> = am.keys().chain(bm.keys()).collect();
                for k in keys {
                    if am.get(k) != bm.get(k) {
                        assert!(stage.owned_fields().contains(&k.as_str()), "{stage} wrote {k}");
                    }
                }
            }
        }
    }

    #[test]
    fn missing_word_list_fails_before_processing() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = fixture(dir.path(), "base");
        cfg.groups = Some(vec!["female".into(), "nonbinary".into()]);
        assert!(Pipeline::open(cfg).is_err());
        assert!(!dir.path().join("run").exists());
    }

    #[test]
    fn stage_order_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = open(dir.path(), "base");
        assert!(p.run_stage(Stage::Cda).is_err());
    }
}
