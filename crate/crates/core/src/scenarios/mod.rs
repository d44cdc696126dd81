//! Scenario catalog: (context × game) combinations rendered into prompt
//! bundles.
//!
//! Scenario keys are `<context>_<game>` (for example `team_prison` or
//! `IR_delight_x2`). Context ids never contain an underscore, so the key
//! splits at its first one.

mod corpus;
mod template;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::games::{GameError, Payoffs, PggSpec};
use crate::scalar::Rational;

pub use corpus::{sha256_hex, Context, Corpus, GamePrompt, PggPrompt, SampleTag};
pub use template::{extract_payoffs, GameTemplate};

pub const PGG_CONTEXT: &str = "commons";
pub const PGG_GAME: &str = "pgg";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("corpus file {file} failed verification (expected sha256 {expected}, got {actual})")]
    CorpusCorrupt {
        file: String,
        expected: String,
        actual: String,
    },
    #[error("cannot read corpus file {}: {message}", path.display())]
    CorpusIo { path: std::path::PathBuf, message: String },
    #[error("corpus manifest: {0}")]
    ManifestParse(String),
    #[error("game prompt {game}: {reason}")]
    TemplateMismatch { game: String, reason: String },
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SampleClass {
    #[serde(rename = "in")]
    InSample,
    /// In-sample context, rescaled game.
    #[serde(rename = "oos-game")]
    OoSGame,
    /// New context, in-sample game.
    #[serde(rename = "oos-context")]
    OoSContext,
    /// Neither component seen in training.
    #[serde(rename = "oos-both")]
    OoSBoth,
}

impl SampleClass {
    pub const ALL: [SampleClass; 4] = [
        SampleClass::InSample,
        SampleClass::OoSGame,
        SampleClass::OoSContext,
        SampleClass::OoSBoth,
    ];

    fn from_tags(context: SampleTag, game: SampleTag) -> Self {
        match (context, game) {
            (SampleTag::InSample, SampleTag::InSample) => SampleClass::InSample,
            (SampleTag::InSample, SampleTag::OutOfSample) => SampleClass::OoSGame,
            (SampleTag::OutOfSample, SampleTag::InSample) => SampleClass::OoSContext,
            (SampleTag::OutOfSample, SampleTag::OutOfSample) => SampleClass::OoSBoth,
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            SampleClass::InSample => "in",
            SampleClass::OoSGame => "oos-game",
            SampleClass::OoSContext => "oos-context",
            SampleClass::OoSBoth => "oos-both",
        }
    }

    pub fn from_slug(slug: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.slug() == slug)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub context_id: String,
    pub game_id: String,
    pub scenario_key: String,
    pub sample_class: SampleClass,
}

impl Scenario {
    fn new(context_id: &str, game_id: &str, sample_class: SampleClass) -> Self {
        Self {
            context_id: context_id.to_string(),
            game_id: game_id.to_string(),
            scenario_key: format!("{context_id}_{game_id}"),
            sample_class,
        }
    }

    pub fn is_public_good(&self) -> bool {
        self.game_id == PGG_GAME
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.scenario_key)
    }
}

/// System and user messages handed to an agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
}

/// What the agent is being asked to decide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task {
    Matrix(Payoffs<Rational>),
    PublicGood(PggSpec<f64>),
}

/// A scenario together with everything needed to query an agent on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub scenario: Scenario,
    pub bundle: PromptBundle,
    pub task: Task,
}

/// Corpus plus the public good game configuration.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub corpus: Corpus,
    pub pgg: PggSpec<f64>,
}

impl Catalog {
    pub fn new(corpus: Corpus, pgg: PggSpec<f64>) -> Result<Self, ScenarioError> {
        pgg.validate()?;
        Ok(Self { corpus, pgg })
    }

    pub fn builtin() -> Result<Self, ScenarioError> {
        Self::new(Corpus::builtin()?, PggSpec::default())
    }

    /// Scenarios of the requested classes, sorted context-major then
    /// game-minor by byte order. The out-of-sample-both class holds the
    /// public good game only.
    pub fn enumerate(&self, filter: &[SampleClass]) -> Vec<Scenario> {
        let mut out = Vec::new();
        for ctx in &self.corpus.contexts {
            for game in &self.corpus.games {
                let class = SampleClass::from_tags(ctx.sample_tag, game.sample_tag);
                if class != SampleClass::OoSBoth && filter.contains(&class) {
                    out.push(Scenario::new(&ctx.id, &game.game_id, class));
                }
            }
        }
        if filter.contains(&SampleClass::OoSBoth) {
            out.push(self.pgg_scenario());
        }
        out.sort_by(|a, b| (&a.context_id, &a.game_id).cmp(&(&b.context_id, &b.game_id)));
        out
    }

    pub fn pgg_scenario(&self) -> Scenario {
        Scenario::new(PGG_CONTEXT, PGG_GAME, SampleClass::OoSBoth)
    }

    /// Resolves any `<context>_<game>` key, including combinations not
    /// produced by [`Catalog::enumerate`].
    pub fn scenario(&self, key: &str) -> Result<Scenario, ScenarioError> {
        let unknown = || ScenarioError::UnknownScenario(key.to_string());
        let (ctx_id, game_id) = key.split_once('_').ok_or_else(unknown)?;
        if ctx_id == PGG_CONTEXT && game_id == PGG_GAME {
            return Ok(self.pgg_scenario());
        }
        let ctx = self.corpus.context(ctx_id).ok_or_else(unknown)?;
        let game = self.corpus.game(game_id).ok_or_else(unknown)?;
        Ok(Scenario::new(
            &ctx.id,
            &game.game_id,
            SampleClass::from_tags(ctx.sample_tag, game.sample_tag),
        ))
    }

    pub fn render(&self, scenario: &Scenario) -> Result<PromptBundle, ScenarioError> {
        Ok(self.prompt(scenario)?.bundle)
    }

    /// Renders a context with arbitrary payoffs substituted into a game's
    /// template.
    pub fn render_with_payoffs(
        &self,
        scenario: &Scenario,
        payoffs: &Payoffs<Rational>,
    ) -> Result<PromptBundle, ScenarioError> {
        let unknown = || ScenarioError::UnknownScenario(scenario.scenario_key.clone());
        let ctx = self.corpus.context(&scenario.context_id).ok_or_else(unknown)?;
        let game = self.corpus.game(&scenario.game_id).ok_or_else(unknown)?;
        Ok(PromptBundle {
            system: ctx.system_prompt.clone(),
            user: game.template.render(payoffs),
        })
    }

    pub fn prompt(&self, scenario: &Scenario) -> Result<Prompt, ScenarioError> {
        if scenario.is_public_good() {
            return Ok(Prompt {
                scenario: scenario.clone(),
                bundle: pgg_bundle(&self.corpus.pgg, &self.pgg, None),
                task: Task::PublicGood(self.pgg),
            });
        }
        let unknown = || ScenarioError::UnknownScenario(scenario.scenario_key.clone());
        let game = self.corpus.game(&scenario.game_id).ok_or_else(unknown)?;
        let bundle = self.render_with_payoffs(scenario, &game.payoffs)?;
        Ok(Prompt {
            scenario: scenario.clone(),
            bundle,
            task: Task::Matrix(game.payoffs),
        })
    }

    pub fn prompt_for_key(&self, key: &str) -> Result<Prompt, ScenarioError> {
        self.prompt(&self.scenario(key)?)
    }
}

/// Public good game prompt for `spec`. An override replaces the user
/// message verbatim.
pub fn pgg_bundle(prompt: &PggPrompt, spec: &PggSpec<f64>, user_override: Option<&str>) -> PromptBundle {
    let user = match user_override {
        Some(text) => text.to_string(),
        None => prompt
            .user_template
            .replace("{n_players}", &spec.n_players.to_string())
            .replace("{others}", &(spec.n_players - 1).to_string())
            .replace("{endowment}", &spec.endowment.to_string())
            .replace("{multiplier}", &spec.multiplier.to_string()),
    };
    PromptBundle {
        system: prompt.system.clone(),
        user,
    }
}
