//! Run configuration file. Flags given on the command line win over the
//! file. Secrets never live here; `auth_token_env` names the environment
//! variable holding the token.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use dilemma::agents::{AgentSpec, LlmHttpSpec};
use dilemma::games::PggSpec;
use dilemma::runner::RunConfig;
use dilemma::scenarios::{Catalog, SampleClass};

use crate::{CliError, RunArgs};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenarios: Option<Vec<String>>,
    /// Sample class slugs, expanded through the catalog.
    pub sample: Option<Vec<String>>,
    pub agent: Option<AgentSpec>,
    pub n_init: Option<u32>,
    pub run_seed: Option<u64>,
    pub parallelism: Option<usize>,
    pub parse_retry_limit: Option<u32>,
    pub output_path: Option<PathBuf>,
    pub pgg: Option<PggSpec<f64>>,
    pub corpus_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Domain(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

fn samples(slugs: &[String]) -> Result<Vec<SampleClass>, CliError> {
    slugs
        .iter()
        .map(|s| SampleClass::from_slug(s).ok_or_else(|| CliError::Usage(format!("unknown sample class {s:?}"))))
        .collect()
}

fn agent(args: &RunArgs, file: Option<AgentSpec>) -> Result<AgentSpec, CliError> {
    if let Some(s) = &args.agent {
        if args.endpoint.is_some() || args.model.is_some() {
            return Err(CliError::Usage("--agent cannot be combined with --endpoint/--model".into()));
        }
        return s.parse().map_err(|e| CliError::Usage(format!("{e}")));
    }
    let mut spec = match (file, &args.endpoint, &args.model) {
        (Some(AgentSpec::LlmHttp(spec)), _, _) => spec,
        (Some(other), None, None) => return Ok(other),
        (_, Some(endpoint), Some(model)) => LlmHttpSpec::new(endpoint.clone(), model.clone()),
        _ => {
            return Err(CliError::Usage(
                "choose an agent with --agent, or --endpoint and --model, or [agent] in --config".into(),
            ))
        }
    };
    if let Some(e) = &args.endpoint {
        spec.endpoint_url = e.clone();
    }
    if let Some(m) = &args.model {
        spec.model_name = m.clone();
    }
    if let Some(t) = args.temperature {
        spec.temperature = t;
    }
    if let Some(n) = args.max_tokens {
        spec.max_tokens = n;
    }
    if args.motivation {
        spec.ask_motivation = true;
    }
    if args.case_insensitive {
        spec.case_insensitive = true;
    }
    if let Some(v) = &args.token_env {
        spec.auth_token_env = Some(v.clone());
    }
    if let Some(t) = args.timeout {
        spec.timeout_secs = t;
    }
    Ok(AgentSpec::LlmHttp(spec))
}

/// Builds the effective config from `--config` plus flags.
pub fn merge(args: &RunArgs, corpus: Option<&Path>) -> Result<RunConfig, CliError> {
    let file = match &args.config {
        Some(p) => FileConfig::read(p)?,
        None => FileConfig::default(),
    };
    let agent = agent(args, file.agent)?;
    let output_path = args
        .out
        .clone()
        .or(file.output_path)
        .ok_or_else(|| CliError::Usage("--out is required".into()))?;
    let corpus_dir = corpus.map(Path::to_path_buf).or(file.corpus_dir);
    let mut pgg = file.pgg.unwrap_or_default();
    if let Some(n) = args.pgg_players {
        pgg.n_players = n;
    }
    if let Some(e) = args.pgg_endowment {
        pgg.endowment = e;
    }
    if let Some(m) = args.pgg_multiplier {
        pgg.multiplier = m;
    }

    let arg_slugs = args.sample_slugs();
    let scenarios = if let Some(keys) = &args.scenarios {
        keys.clone()
    } else if !arg_slugs.is_empty() {
        expand(&arg_slugs, corpus_dir.as_deref(), pgg)?
    } else if let Some(keys) = file.scenarios {
        keys
    } else if let Some(slugs) = &file.sample {
        expand(slugs, corpus_dir.as_deref(), pgg)?
    } else {
        return Err(CliError::Usage("select scenarios with --scenarios or --sample".into()));
    };

    let mut config = RunConfig::new(scenarios, agent, args.seed.or(file.run_seed).unwrap_or(0), output_path);
    config.n_init = args.n.or(file.n_init).unwrap_or(config.n_init);
    config.parallelism = args.parallelism.or(file.parallelism).unwrap_or(config.parallelism);
    config.parse_retry_limit = args
        .retry_limit
        .or(file.parse_retry_limit)
        .unwrap_or(config.parse_retry_limit);
    config.pgg = pgg;
    config.corpus_dir = corpus_dir;
    Ok(config)
}

fn expand(slugs: &[String], corpus: Option<&Path>, pgg: PggSpec<f64>) -> Result<Vec<String>, CliError> {
    let classes = samples(slugs)?;
    let catalog = crate::catalog(corpus, pgg)?;
    Ok(keys(&catalog, &classes))
}

pub fn keys(catalog: &Catalog, classes: &[SampleClass]) -> Vec<String> {
    catalog
        .enumerate(classes)
        .into_iter()
        .map(|s| s.scenario_key)
        .collect()
}
