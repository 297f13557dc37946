//! Pipeline configuration: defaults, validation, and the flat key-value
//! config file.
//!
//! Config files hold one `key = value` per line; `#` starts a comment.
//! The `deck` key repeats, once per simulation, as `deck = <id>=<path>` or
//! `deck = <path>` (simulation id defaults to the file stem).
//!
//! ```text
//! store = ./store
//! output = ./report
//! results = ./results.csv
//! deck = sim01=decks/run01.deck
//! deck = decks/run02.deck
//! angle_threshold = 20
//! linkage = average
//! coarse_height = 3.0
//! fine_height = 0.5
//! result_columns = intrusion_1,intrusion_2,intrusion_3,intrusion_4
//! k = 3
//! seed = 42
//! bins = 10
//! tree_confidence = 0.25
//! tree_min_instances = 2
//! ```

use std::path::{Path, PathBuf};

use crate::cluster::Linkage;
use crate::geometry::DEFAULT_ANGLE_THRESHOLD_DEG;
use crate::mining::DEFAULT_KMEANS_SEED;

/// One input deck and the simulation it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeckSource {
    pub simulation_id: String,
    pub path: PathBuf,
}

/// Full pipeline parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub decks: Vec<DeckSource>,
    pub results_path: PathBuf,
    pub store_root: PathBuf,
    pub output_dir: PathBuf,
    pub angle_threshold_deg: f64,
    pub linkage: Linkage,
    pub coarse_height: f64,
    pub fine_height: f64,
    pub weights_path: Option<PathBuf>,
    /// Result columns used for class clustering; empty means all.
    pub result_columns: Vec<String>,
    pub k: usize,
    pub seed: u64,
    pub chi2_bins: usize,
    pub tree_confidence: f64,
    pub tree_min_instances: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            decks: Vec::new(),
            results_path: PathBuf::new(),
            store_root: PathBuf::from("store"),
            output_dir: PathBuf::from("report"),
            angle_threshold_deg: DEFAULT_ANGLE_THRESHOLD_DEG,
            linkage: Linkage::Average,
            coarse_height: 3.0,
            fine_height: 0.5,
            weights_path: None,
            result_columns: Vec::new(),
            k: 3,
            seed: DEFAULT_KMEANS_SEED,
            chi2_bins: 10,
            tree_confidence: 0.25,
            tree_min_instances: 2,
        }
    }
}

impl PipelineConfig {
    /// Loads a config file over the defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = PipelineConfig::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: idx + 1,
                    text: raw.to_string(),
                });
            };
            self.apply(key.trim(), value.trim())
                .map_err(|e| e.at_line(idx + 1))?;
        }
        Ok(())
    }

    /// Applies a single key. Used for both config files and CLI overrides.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |message: &str| ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            message: message.to_string(),
            line: 0,
        };
        match key {
            "store" => self.store_root = PathBuf::from(value),
            "output" => self.output_dir = PathBuf::from(value),
            "results" => self.results_path = PathBuf::from(value),
            "weights" => self.weights_path = Some(PathBuf::from(value)),
            "deck" => self.decks.push(parse_deck_source(value)?),
            "angle_threshold" => {
                self.angle_threshold_deg =
                    value.parse().map_err(|_| bad("expected a number"))?
            }
            "linkage" => {
                self.linkage = value
                    .parse()
                    .map_err(|_| bad("expected average, single, or complete"))?
            }
            "coarse_height" => {
                self.coarse_height = value.parse().map_err(|_| bad("expected a number"))?
            }
            "fine_height" => {
                self.fine_height = value.parse().map_err(|_| bad("expected a number"))?
            }
            "result_columns" => {
                self.result_columns = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "k" => self.k = value.parse().map_err(|_| bad("expected an integer"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an integer"))?,
            "bins" => self.chi2_bins = value.parse().map_err(|_| bad("expected an integer"))?,
            "tree_confidence" => {
                self.tree_confidence = value.parse().map_err(|_| bad("expected a number"))?
            }
            "tree_min_instances" => {
                self.tree_min_instances =
                    value.parse().map_err(|_| bad("expected an integer"))?
            }
            other => {
                return Err(ConfigError::UnknownKey {
                    key: other.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Checks ranges and referenced paths. Called before any stage runs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.decks.is_empty() {
            return Err(ConfigError::Invalid {
                message: "no input decks configured (empty simulation list)".to_string(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for deck in &self.decks {
            if !seen.insert(&deck.simulation_id) {
                return Err(ConfigError::Invalid {
                    message: format!("duplicate simulation id '{}'", deck.simulation_id),
                });
            }
            if !deck.path.exists() {
                return Err(ConfigError::Invalid {
                    message: format!("deck file '{}' not found", deck.path.display()),
                });
            }
        }
        self.validate_analysis()
    }

    /// The deck-independent subset of [`validate`](Self::validate), for
    /// analyses over an already-populated store.
    pub fn validate_analysis(&self) -> Result<(), ConfigError> {
        if self.results_path.as_os_str().is_empty() || !self.results_path.exists() {
            return Err(ConfigError::Invalid {
                message: format!(
                    "results file '{}' not found",
                    self.results_path.display()
                ),
            });
        }
        if let Some(weights) = &self.weights_path {
            if !weights.exists() {
                return Err(ConfigError::Invalid {
                    message: format!("weights file '{}' not found", weights.display()),
                });
            }
        }
        if !(self.angle_threshold_deg > 0.0 && self.angle_threshold_deg < 180.0) {
            return Err(ConfigError::Invalid {
                message: format!(
                    "angle_threshold must be in (0, 180), found {}",
                    self.angle_threshold_deg
                ),
            });
        }
        if !(self.fine_height >= 0.0 && self.fine_height < self.coarse_height) {
            return Err(ConfigError::Invalid {
                message: format!(
                    "cut heights must satisfy 0 <= fine < coarse, found fine={} coarse={}",
                    self.fine_height, self.coarse_height
                ),
            });
        }
        if self.k < 2 {
            return Err(ConfigError::Invalid {
                message: format!("k must be at least 2, found {}", self.k),
            });
        }
        if self.chi2_bins < 2 {
            return Err(ConfigError::Invalid {
                message: format!("bins must be at least 2, found {}", self.chi2_bins),
            });
        }
        if !(self.tree_confidence > 0.0 && self.tree_confidence < 1.0) {
            return Err(ConfigError::Invalid {
                message: format!(
                    "tree_confidence must be in (0, 1), found {}",
                    self.tree_confidence
                ),
            });
        }
        if self.tree_min_instances < 1 {
            return Err(ConfigError::Invalid {
                message: "tree_min_instances must be at least 1".to_string(),
            });
        }
        Ok(())
    }

    /// Key-value echo of the configuration, one per line, for the run
    /// manifest.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for deck in &self.decks {
            out.push_str(&format!(
                "deck = {}={}\n",
                deck.simulation_id,
                deck.path.display()
            ));
        }
        out.push_str(&format!("results = {}\n", self.results_path.display()));
        out.push_str(&format!("store = {}\n", self.store_root.display()));
        out.push_str(&format!("output = {}\n", self.output_dir.display()));
        out.push_str(&format!("angle_threshold = {}\n", self.angle_threshold_deg));
        out.push_str(&format!("linkage = {}\n", self.linkage.as_str()));
        out.push_str(&format!("coarse_height = {}\n", self.coarse_height));
        out.push_str(&format!("fine_height = {}\n", self.fine_height));
        if let Some(w) = &self.weights_path {
            out.push_str(&format!("weights = {}\n", w.display()));
        }
        if !self.result_columns.is_empty() {
            out.push_str(&format!(
                "result_columns = {}\n",
                self.result_columns.join(",")
            ));
        }
        out.push_str(&format!("k = {}\n", self.k));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("bins = {}\n", self.chi2_bins));
        out.push_str(&format!("tree_confidence = {}\n", self.tree_confidence));
        out.push_str(&format!(
            "tree_min_instances = {}\n",
            self.tree_min_instances
        ));
        out
    }
}

/// Parses `<id>=<path>` or `<path>` (id from the file stem).
pub fn parse_deck_source(value: &str) -> Result<DeckSource, ConfigError> {
    if let Some((id, path)) = value.split_once('=') {
        let id = id.trim();
        if id.is_empty() {
            return Err(ConfigError::BadValue {
                key: "deck".to_string(),
                value: value.to_string(),
                message: "empty simulation id".to_string(),
                line: 0,
            });
        }
        return Ok(DeckSource {
            simulation_id: id.to_string(),
            path: PathBuf::from(path.trim()),
        });
    }
    let path = PathBuf::from(value);
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ConfigError::BadValue {
            key: "deck".to_string(),
            value: value.to_string(),
            message: "cannot derive a simulation id from the path".to_string(),
            line: 0,
        })?;
    Ok(DeckSource {
        simulation_id: stem,
        path,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config '{path}': {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config line {line} is not 'key = value': {text}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key '{key}'")]
    UnknownKey { key: String },
    #[error("bad value '{value}' for '{key}': {message}")]
    BadValue {
        key: String,
        value: String,
        message: String,
        line: usize,
    },
    #[error("invalid configuration: {message}")]
    Invalid { message: String },
}

impl ConfigError {
    fn at_line(self, line: usize) -> Self {
        match self {
            ConfigError::BadValue {
                key,
                value,
                message,
                ..
            } => ConfigError::BadValue {
                key,
                value,
                message,
                line,
            },
            other => other,
        }
    }
}
