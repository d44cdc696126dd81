//! Checksummed prompt corpus.
//!
//! Layout on disk:
//!
//! ```text
//! corpus/manifest              TOML: ids, sample tags, payoffs, sha256 per file
//! corpus/contexts/<id>.txt     system prompts
//! corpus/games/<id>.txt        rendered game prompts (templates are derived)
//! corpus/pgg/{system,user}.txt public good game prompt
//! ```
//!
//! The built-in corpus is compiled into the binary from the same files and
//! goes through the same verification as a corpus loaded from a directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::template::GameTemplate;
use super::ScenarioError;
use crate::games::Payoffs;
use crate::scalar::{exact_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SampleTag {
    #[serde(rename = "in")]
    InSample,
    #[serde(rename = "out")]
    OutOfSample,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub id: String,
    pub sample_tag: SampleTag,
    pub system_prompt: String,
    /// Set when the shipped text is a copy of another context.
    pub duplicate_of: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GamePrompt {
    pub game_id: String,
    /// In-sample game this one rescales (itself for in-sample games).
    pub base_game: String,
    pub payoffs: Payoffs<Rational>,
    pub template: GameTemplate,
    pub sample_tag: SampleTag,
}

impl GamePrompt {
    pub fn render(&self) -> String {
        self.template.render(&self.payoffs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PggPrompt {
    pub system: String,
    pub user_template: String,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub contexts: Vec<Context>,
    pub games: Vec<GamePrompt>,
    pub pgg: PggPrompt,
    /// Relative path → hex sha256, for run manifests.
    pub checksums: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    format_version: u32,
    contexts: Vec<ContextEntry>,
    games: Vec<GameEntry>,
    pgg: PggEntry,
}

#[derive(Debug, Deserialize)]
struct ContextEntry {
    id: String,
    sample: SampleTag,
    sha256: String,
    duplicate_of: Option<String>,
}

#[derive(Debug, Deserialize)]
struct GameEntry {
    id: String,
    sample: SampleTag,
    base: Option<String>,
    payoffs: Payoffs<Number>,
    sha256: String,
}

#[derive(Debug, Deserialize)]
struct PggEntry {
    system_sha256: String,
    user_sha256: String,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn exact(self) -> Option<Rational> {
        match self {
            Number::Int(i) => Some(Rational::from_integer(i)),
            Number::Float(f) => exact_rational(f, 1 << 20),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

const BUILTIN: &[(&str, &str)] = &[
    ("manifest", include_str!("../../corpus/manifest")),
    ("contexts/biz.txt", include_str!("../../corpus/contexts/biz.txt")),
    ("contexts/environment.txt", include_str!("../../corpus/contexts/environment.txt")),
    ("contexts/friendsharing.txt", include_str!("../../corpus/contexts/friendsharing.txt")),
    ("contexts/team.txt", include_str!("../../corpus/contexts/team.txt")),
    ("contexts/IR.txt", include_str!("../../corpus/contexts/IR.txt")),
    ("contexts/sports.txt", include_str!("../../corpus/contexts/sports.txt")),
    ("contexts/ventcap.txt", include_str!("../../corpus/contexts/ventcap.txt")),
    ("contexts/roomsharing.txt", include_str!("../../corpus/contexts/roomsharing.txt")),
    ("games/delight.txt", include_str!("../../corpus/games/delight.txt")),
    ("games/prison.txt", include_str!("../../corpus/games/prison.txt")),
    ("games/snowdrift.txt", include_str!("../../corpus/games/snowdrift.txt")),
    ("games/staghunt.txt", include_str!("../../corpus/games/staghunt.txt")),
    ("games/delight_x2.txt", include_str!("../../corpus/games/delight_x2.txt")),
    ("games/prison_x2.txt", include_str!("../../corpus/games/prison_x2.txt")),
    ("games/snowdrift_x2.txt", include_str!("../../corpus/games/snowdrift_x2.txt")),
    ("games/staghunt_x2.txt", include_str!("../../corpus/games/staghunt_x2.txt")),
    ("pgg/system.txt", include_str!("../../corpus/pgg/system.txt")),
    ("pgg/user.txt", include_str!("../../corpus/pgg/user.txt")),
];

impl Corpus {
    /// The corpus shipped with the crate.
    pub fn builtin() -> Result<Self, ScenarioError> {
        Self::from_source(|rel| {
            BUILTIN
                .iter()
                .find(|(name, _)| *name == rel)
                .map(|(_, text)| text.to_string())
                .ok_or_else(|| ScenarioError::CorpusIo {
                    path: PathBuf::from(rel),
                    message: "not part of the built-in corpus".into(),
                })
        })
    }

    /// Loads and verifies a corpus directory.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let dir = dir.as_ref();
        Self::from_source(|rel| {
            let path = dir.join(rel);
            fs::read_to_string(&path).map_err(|e| ScenarioError::CorpusIo {
                path,
                message: e.to_string(),
            })
        })
    }

    /// Writes the built-in corpus files to `dir`, e.g. as a starting point
    /// for a customised corpus.
    pub fn write_builtin(dir: impl AsRef<Path>) -> std::io::Result<()> {
        for (rel, text) in BUILTIN {
            let path = dir.as_ref().join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, text)?;
        }
        Ok(())
    }

    fn from_source(read: impl Fn(&str) -> Result<String, ScenarioError>) -> Result<Self, ScenarioError> {
        let manifest: Manifest =
            toml::from_str(&read("manifest")?).map_err(|e| ScenarioError::ManifestParse(e.to_string()))?;
        if manifest.format_version != 1 {
            return Err(ScenarioError::ManifestParse(format!(
                "unsupported corpus format_version {}",
                manifest.format_version
            )));
        }
        let mut checksums = BTreeMap::new();
        let mut verified = |rel: String, expected: &str| -> Result<String, ScenarioError> {
            let text = read(&rel)?;
            let actual = sha256_hex(text.as_bytes());
            if !actual.eq_ignore_ascii_case(expected) {
                return Err(ScenarioError::CorpusCorrupt {
                    file: rel,
                    expected: expected.to_string(),
                    actual,
                });
            }
            checksums.insert(rel, actual);
            Ok(text)
        };

        let mut contexts = Vec::with_capacity(manifest.contexts.len());
        for entry in manifest.contexts {
            let system_prompt = verified(format!("contexts/{}.txt", entry.id), &entry.sha256)?;
            if system_prompt.trim().is_empty() {
                return Err(ScenarioError::ManifestParse(format!("context {} is empty", entry.id)));
            }
            contexts.push(Context {
                id: entry.id,
                sample_tag: entry.sample,
                system_prompt,
                duplicate_of: entry.duplicate_of,
            });
        }

        let mut games = Vec::with_capacity(manifest.games.len());
        for entry in manifest.games {
            let text = verified(format!("games/{}.txt", entry.id), &entry.sha256)?;
            let mismatch = |reason: String| ScenarioError::TemplateMismatch {
                game: entry.id.clone(),
                reason,
            };
            let raw = entry.payoffs;
            let payoffs = Payoffs {
                r: raw.r.exact(),
                t: raw.t.exact(),
                s: raw.s.exact(),
                p: raw.p.exact(),
            };
            let payoffs = match payoffs {
                Payoffs { r: Some(r), t: Some(t), s: Some(s), p: Some(p) } => Payoffs { r, t, s, p },
                _ => return Err(mismatch("payoffs are not exactly representable".into())),
            };
            payoffs.validate()?;
            let (template, encoded) = GameTemplate::from_rendered(&text).map_err(mismatch)?;
            if encoded != payoffs {
                return Err(mismatch(format!(
                    "prompt encodes {encoded:?} but manifest declares {payoffs:?}"
                )));
            }
            games.push(GamePrompt {
                base_game: entry.base.unwrap_or_else(|| entry.id.clone()),
                game_id: entry.id,
                payoffs,
                template,
                sample_tag: entry.sample,
            });
        }

        let pgg = PggPrompt {
            system: verified("pgg/system.txt".into(), &manifest.pgg.system_sha256)?,
            user_template: verified("pgg/user.txt".into(), &manifest.pgg.user_sha256)?,
        };

        Ok(Self {
            contexts,
            games,
            pgg,
            checksums,
        })
    }

    pub fn context(&self, id: &str) -> Option<&Context> {
        self.contexts.iter().find(|c| c.id == id)
    }

    pub fn game(&self, id: &str) -> Option<&GamePrompt> {
        self.games.iter().find(|g| g.game_id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_loads_and_verifies() {
        let corpus = Corpus::builtin().unwrap();
        assert_eq!(corpus.contexts.len(), 8);
        assert_eq!(corpus.games.len(), 8);
        let prison = corpus.game("prison").unwrap();
        assert_eq!(prison.payoffs, Payoffs { r: 5.into(), t: 10.into(), s: 2.into(), p: 3.into() });
        assert_eq!(corpus.game("staghunt_x2").unwrap().base_game, "staghunt");
        assert_eq!(corpus.context("sports").unwrap().duplicate_of.as_deref(), Some("IR"));
        assert_eq!(corpus.checksums.len(), 18);
    }

    #[test]
    fn one_byte_edit_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        Corpus::write_builtin(dir.path()).unwrap();
        assert!(Corpus::load(dir.path()).is_ok());

        let path = dir.path().join("contexts/team.txt");
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'y';
        fs::write(&path, bytes).unwrap();
        match Corpus::load(dir.path()) {
            Err(ScenarioError::CorpusCorrupt { file, .. }) => assert_eq!(file, "contexts/team.txt"),
            other => panic!("expected CorpusCorrupt, got {other:?}"),
        }
    }

    #[test]
    fn manifest_payoffs_must_match_prompt_numbers() {
        let dir = tempfile::tempdir().unwrap();
        Corpus::write_builtin(dir.path()).unwrap();
        let manifest = dir.path().join("manifest");
        let text = fs::read_to_string(&manifest)
            .unwrap()
            .replace("payoffs = { r = 5, t = 10, s = 2, p = 3 }", "payoffs = { r = 6, t = 10, s = 2, p = 3 }");
        fs::write(&manifest, text).unwrap();
        assert!(matches!(
            Corpus::load(dir.path()),
            Err(ScenarioError::TemplateMismatch { .. })
        ));
    }
}
