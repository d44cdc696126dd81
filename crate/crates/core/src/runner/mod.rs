//! Seeded batch execution.
//!
//! A run queries one agent `n_init` times on each configured scenario.
//! Trials execute on a bounded worker pool; a single writer appends each
//! finished trial to the JSONL log, so the log is a valid checkpoint after
//! every line. The manifest is written once at start (status `running`) and
//! rewritten when the run completes or aborts.

mod aggregate;
mod log;

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Agent, AgentError, AgentSpec, TrialSeed};
use crate::games::PggSpec;
use crate::scenarios::{sha256_hex, Catalog, Corpus, Prompt, ScenarioError};

pub use aggregate::{aggregate, aggregate_trials, Aggregate, ScenarioAggregate};
pub use log::{canonical_log, read_log, repair_torn_tail, LogWriter, Trial, TrialStatus, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("storage error at {}: {message}", path.display())]
    Storage { path: PathBuf, message: String },
    #[error("trial log line {line}: {message}")]
    LogCorrupt { line: usize, message: String },
    #[error("run aborted after {completed} new trials: {reason}")]
    Aborted { completed: usize, reason: String },
    #[error("manifest does not match: {0}")]
    ManifestMismatch(String),
    #[error("run incomplete: {0}")]
    Incomplete(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

impl RunError {
    pub(crate) fn storage(path: &Path, err: impl std::fmt::Display) -> Self {
        RunError::Storage {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}

fn default_n_init() -> u32 {
    300
}

fn default_parallelism() -> usize {
    1
}

fn default_retry_limit() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenarios: Vec<String>,
    pub agent: AgentSpec,
    #[serde(default = "default_n_init")]
    pub n_init: u32,
    pub run_seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Extra invocations allowed after an unparseable reply.
    #[serde(default = "default_retry_limit")]
    pub parse_retry_limit: u32,
    pub output_path: PathBuf,
    #[serde(default)]
    pub pgg: PggSpec<f64>,
    /// Corpus directory; the built-in corpus when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(scenarios: Vec<String>, agent: AgentSpec, run_seed: u64, output_path: impl Into<PathBuf>) -> Self {
        Self {
            scenarios,
            agent,
            n_init: default_n_init(),
            run_seed,
            parallelism: default_parallelism(),
            parse_retry_limit: default_retry_limit(),
            output_path: output_path.into(),
            pgg: PggSpec::default(),
            corpus_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.n_init == 0 {
            return Err(RunError::Config("n_init must be >= 1".into()));
        }
        if self.parallelism == 0 {
            return Err(RunError::Config("parallelism must be >= 1".into()));
        }
        if self.scenarios.is_empty() {
            return Err(RunError::Config("no scenarios selected".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.scenarios.iter().find(|k| !seen.insert(k.as_str())) {
            return Err(RunError::Config(format!("scenario {dup} listed twice")));
        }
        self.agent.validate()?;
        self.pgg.validate().map_err(|e| RunError::Config(e.to_string()))?;
        Ok(())
    }

    /// Digest of everything that influences trial outcomes. Parallelism and
    /// the output location are excluded.
    pub fn hash(&self) -> String {
        let mut normalized = self.clone();
        normalized.parallelism = 0;
        normalized.output_path = PathBuf::new();
        sha256_hex(&serde_json::to_vec(&normalized).expect("config serializes"))
    }

    pub fn manifest_path(&self) -> PathBuf {
        manifest_path_for(&self.output_path)
    }

    pub fn catalog(&self) -> Result<Catalog, RunError> {
        let corpus = match &self.corpus_dir {
            Some(dir) => Corpus::load(dir)?,
            None => Corpus::builtin()?,
        };
        Ok(Catalog::new(corpus, self.pgg)?)
    }
}

/// `<log>.manifest.json`
pub fn manifest_path_for(log: &Path) -> PathBuf {
    let mut s = OsString::from(log.as_os_str());
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Aborted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotCounts {
    pub ok: u64,
    pub invalid: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub corpus_checksums: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub status: RunStatus,
    pub counts: BTreeMap<String, SlotCounts>,
}

impl RunManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| RunError::storage(path, e))?;
        serde_json::from_str(&text).map_err(|e| RunError::ManifestMismatch(format!("unreadable manifest: {e}")))
    }

    fn write(&self, path: &Path) -> Result<(), RunError> {
        let tmp = path.with_extension("json.tmp");
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&tmp, json).map_err(|e| RunError::storage(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| RunError::storage(path, e))
    }

    pub fn total_trials(&self) -> u64 {
        self.counts.values().map(|c| c.ok + c.invalid).sum()
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Knobs that do not belong in the reproducible config.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Abort after this many newly written trials (leaves a resumable
    /// partial run behind).
    pub stop_after: Option<usize>,
}

/// Runs `config` with the agent it describes.
pub fn run(config: &RunConfig) -> Result<RunManifest, RunError> {
    config.validate()?;
    let catalog = config.catalog()?;
    let agent = config.agent.build()?;
    run_with(&catalog, config, agent.as_ref(), RunOptions::default())
}

/// Runs `config` with an arbitrary agent. `config.agent` is still recorded
/// in the manifest.
pub fn run_with(
    catalog: &Catalog,
    config: &RunConfig,
    agent: &dyn Agent,
    options: RunOptions,
) -> Result<RunManifest, RunError> {
    config.validate()?;
    let prompts = resolve(catalog, config)?;
    let manifest = RunManifest {
        format_version: FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        config_hash: config.hash(),
        corpus_checksums: catalog.corpus.checksums.clone(),
        started_at: now(),
        finished_at: None,
        status: RunStatus::Running,
        counts: BTreeMap::new(),
    };
    let writer = LogWriter::create(&config.output_path)?;
    manifest.write(&config.manifest_path())?;
    finish(manifest, &prompts, agent, writer, &HashSet::new(), options)
}

/// Completes a partial run from its manifest.
pub fn resume(manifest_path: impl AsRef<Path>) -> Result<RunManifest, RunError> {
    let manifest = RunManifest::read(manifest_path.as_ref())?;
    let agent = manifest.config.agent.build()?;
    resume_with(manifest_path, agent.as_ref(), RunOptions::default())
}

/// Like [`resume`], but first checks the stored config against `expected`.
pub fn resume_expecting(manifest_path: impl AsRef<Path>, expected: &RunConfig) -> Result<RunManifest, RunError> {
    let manifest = RunManifest::read(manifest_path.as_ref())?;
    if manifest.config_hash != expected.hash() {
        return Err(RunError::ManifestMismatch(
            "configuration differs from the one that started the run".into(),
        ));
    }
    resume(manifest_path)
}

pub fn resume_with(
    manifest_path: impl AsRef<Path>,
    agent: &dyn Agent,
    options: RunOptions,
) -> Result<RunManifest, RunError> {
    let mut manifest = RunManifest::read(manifest_path.as_ref())?;
    let config = manifest.config.clone();
    if config.hash() != manifest.config_hash {
        return Err(RunError::ManifestMismatch(
            "stored configuration was edited after the run started".into(),
        ));
    }
    config.validate()?;
    let catalog = config.catalog()?;
    if catalog.corpus.checksums != manifest.corpus_checksums {
        return Err(RunError::ManifestMismatch("prompt corpus changed since the run started".into()));
    }
    let prompts = resolve(&catalog, &config)?;

    let log_path = &config.output_path;
    if !log_path.exists() {
        fs::write(log_path, b"").map_err(|e| RunError::storage(log_path, e))?;
    }
    repair_torn_tail(log_path)?;
    let existing = read_log(log_path)?;
    let known: HashSet<&str> = config.scenarios.iter().map(String::as_str).collect();
    let mut done = HashSet::new();
    for t in &existing {
        if !known.contains(t.scenario.as_str()) || t.index >= config.n_init {
            return Err(RunError::ManifestMismatch(format!(
                "log holds trial {}#{} outside the configured run",
                t.scenario, t.index
            )));
        }
        done.insert((t.scenario.clone(), t.index));
    }
    if manifest.status == RunStatus::Complete && done.len() as u64 == config.n_init as u64 * prompts.len() as u64 {
        return Ok(manifest);
    }
    manifest.status = RunStatus::Running;
    manifest.finished_at = None;
    manifest.write(&config.manifest_path())?;
    let writer = LogWriter::append(log_path)?;
    finish(manifest, &prompts, agent, writer, &done, options)
}

fn resolve(catalog: &Catalog, config: &RunConfig) -> Result<Vec<Prompt>, RunError> {
    config
        .scenarios
        .iter()
        .map(|key| catalog.prompt_for_key(key).map_err(RunError::from))
        .collect()
}

fn finish(
    mut manifest: RunManifest,
    prompts: &[Prompt],
    agent: &dyn Agent,
    mut writer: LogWriter,
    done: &HashSet<(String, u32)>,
    options: RunOptions,
) -> Result<RunManifest, RunError> {
    let config = manifest.config.clone();
    let outcome = execute(prompts, &config, agent, &mut writer, done, options);
    drop(writer);

    let trials = read_log(&config.output_path)?;
    manifest.counts = slot_counts(&trials);
    manifest.finished_at = Some(now());
    if let Err(e) = outcome {
        manifest.status = RunStatus::Aborted;
        manifest.write(&config.manifest_path())?;
        return Err(e);
    }
    for p in prompts {
        let key = &p.scenario.scenario_key;
        let got = manifest.counts.get(key).map_or(0, |c| c.ok + c.invalid);
        if got != config.n_init as u64 {
            manifest.status = RunStatus::Aborted;
            manifest.write(&config.manifest_path())?;
            return Err(RunError::Incomplete(format!(
                "{key} has {got} trials, expected {}",
                config.n_init
            )));
        }
    }
    manifest.status = RunStatus::Complete;
    manifest.write(&config.manifest_path())?;
    Ok(manifest)
}

fn slot_counts(trials: &[Trial]) -> BTreeMap<String, SlotCounts> {
    let mut counts: BTreeMap<String, SlotCounts> = BTreeMap::new();
    for t in trials {
        let c = counts.entry(t.scenario.clone()).or_default();
        match t.status {
            TrialStatus::Ok => c.ok += 1,
            TrialStatus::Invalid => c.invalid += 1,
        }
    }
    counts
}

/// Queries the agent until the reply parses or the retry budget is spent.
fn run_trial(agent: &dyn Agent, prompt: &Prompt, config: &RunConfig, index: u32) -> Result<Trial, AgentError> {
    let key = &prompt.scenario.scenario_key;
    let mut attempt = 0;
    loop {
        let seed = TrialSeed::derive(config.run_seed, key, index as u64, attempt);
        let mut response = agent.decide(prompt, seed)?;
        response.attempt = attempt;
        if !response.parsed.is_failure() || attempt >= config.parse_retry_limit {
            return Ok(Trial::from_response(key, index, &response, Utc::now()));
        }
        attempt += 1;
    }
}

fn execute(
    prompts: &[Prompt],
    config: &RunConfig,
    agent: &dyn Agent,
    writer: &mut LogWriter,
    done: &HashSet<(String, u32)>,
    options: RunOptions,
) -> Result<(), RunError> {
    let (slot_tx, slot_rx) = crossbeam_channel::unbounded::<(usize, u32)>();
    for (i, p) in prompts.iter().enumerate() {
        for index in 0..config.n_init {
            if !done.contains(&(p.scenario.scenario_key.clone(), index)) {
                slot_tx.send((i, index)).expect("receiver alive");
            }
        }
    }
    drop(slot_tx);

    let stop = AtomicBool::new(false);
    let (result_tx, result_rx) = crossbeam_channel::bounded::<Result<Trial, AgentError>>(config.parallelism * 4);
    std::thread::scope(|scope| {
        for _ in 0..config.parallelism {
            let slot_rx = slot_rx.clone();
            let result_tx = result_tx.clone();
            let stop = &stop;
            scope.spawn(move || {
                while let Ok((i, index)) = slot_rx.recv() {
                    if stop.load(Ordering::Relaxed) {
                        break;
                    }
                    if result_tx.send(run_trial(agent, &prompts[i], config, index)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(result_tx);

        let mut written = 0usize;
        let mut failure: Option<RunError> = None;
        for result in result_rx {
            if failure.is_some() {
                continue;
            }
            match result {
                Ok(trial) => {
                    if let Err(e) = writer.write(&trial) {
                        stop.store(true, Ordering::Relaxed);
                        failure = Some(RunError::storage(&config.output_path, e));
                        continue;
                    }
                    written += 1;
                    if options.stop_after.is_some_and(|n| written >= n) {
                        stop.store(true, Ordering::Relaxed);
                        failure = Some(RunError::Aborted {
                            completed: written,
                            reason: "stop requested".into(),
                        });
                    }
                }
                Err(e) => {
                    stop.store(true, Ordering::Relaxed);
                    failure = Some(RunError::Aborted {
                        completed: written,
                        reason: e.to_string(),
                    });
                }
            }
        }
        failure.map_or(Ok(()), Err)
    })
}
