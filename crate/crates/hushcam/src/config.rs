//! Experiment configuration: one JSON document, with `key=value` overrides.

use std::path::{Path, PathBuf};

use hushcam_core::classify::ClassifierConfig;
use hushcam_core::dataset::{SynthSpec, ValenceMapping};
use hushcam_core::recover::SolverOptions;
use hushcam_core::wavelet::WaveletSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::raster::ImageFormat;

/// Measurement counts of the reference sweep.
pub const DEFAULT_M_VALUES: [usize; 10] = [800, 500, 200, 100, 50, 20, 10, 5, 2, 1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    /// Generated corpus; nothing is read from disk.
    Synth {
        n_per_class: usize,
        seed: u64,
        #[serde(default = "default_noise")]
        noise: f64,
        #[serde(default = "default_offset_jitter")]
        offset_jitter: f64,
    },
    /// Directory of JAFFE-named rasters, or a label CSV when `labels` is set.
    Dir {
        path: PathBuf,
        #[serde(default)]
        labels: Option<PathBuf>,
    },
}

fn default_noise() -> f64 {
    SynthSpec::default().noise
}

fn default_offset_jitter() -> f64 {
    SynthSpec::default().offset_jitter
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "LevelRepr", into = "LevelRepr")]
pub enum Level {
    #[default]
    Max,
    Count(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LevelRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<LevelRepr> for Level {
    type Error = String;

    fn try_from(r: LevelRepr) -> Result<Self, String> {
        match r {
            LevelRepr::Count(n) => Ok(Level::Count(n)),
            LevelRepr::Word(w) if w == "max" => Ok(Level::Max),
            LevelRepr::Word(w) => Err(format!("level must be a count or \"max\", got {w:?}")),
        }
    }
}

impl From<Level> for LevelRepr {
    fn from(l: Level) -> Self {
        match l {
            Level::Max => LevelRepr::Word("max".into()),
            Level::Count(n) => LevelRepr::Count(n),
        }
    }
}

fn default_side() -> usize {
    128
}

fn default_wavelet() -> usize {
    2
}

fn default_m_values() -> Vec<usize> {
    DEFAULT_M_VALUES.to_vec()
}

fn default_folds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_side")]
    pub side: usize,
    /// Daubechies order, 1 (Haar) to 10.
    #[serde(default = "default_wavelet")]
    pub wavelet: usize,
    #[serde(default)]
    pub level: Level,
    #[serde(default = "default_m_values")]
    pub m_values: Vec<usize>,
    pub operator_seed: u64,
    pub fold_seed: u64,
    /// Replaces the seed inside the classifier configuration.
    pub model_seed: u64,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub valence_mapping: ValenceMapping,
    /// Permit bilinear upsampling of directory images smaller than `side`.
    #[serde(default)]
    pub allow_upsample: bool,
    #[serde(default)]
    pub image_format: ImageFormat,
    /// Sweep only: images reconstructed per measurement count for the PSNR
    /// column. Zero leaves the column empty.
    #[serde(default)]
    pub psnr_images: usize,
    /// Sweep only: also fit on the whole corpus and save the model per m.
    #[serde(default)]
    pub save_models: bool,
    /// Reconstruct only: image ids when none are given on the command line.
    #[serde(default)]
    pub reconstruct_ids: Vec<String>,
}

/// Sets `key` (dot-separated path) in `doc` to `raw` parsed as JSON, or as a
/// string when it is not valid JSON.
pub fn apply_override(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(Error::Config(format!("empty segment in key {key:?}")));
        }
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        let map = node.as_object_mut().expect("object");
        if parts.peek().is_none() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part).or_insert(Value::Object(Default::default()));
    }
    Err(Error::Config("empty override key".into()))
}

impl ExperimentConfig {
    /// Reads `path` (or starts from an empty document), applies `KEY=VALUE`
    /// overrides in order and validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not KEY=VALUE")))?;
            apply_override(&mut doc, k.trim(), v)?;
        }
        Self::from_value(doc)
    }

    pub fn from_value(doc: Value) -> Result<Self> {
        let cfg: Self = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn wavelet_spec(&self) -> Result<WaveletSpec> {
        WaveletSpec::daubechies(self.wavelet).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolved_level(&self) -> Result<usize> {
        let spec = self.wavelet_spec()?;
        let max = spec.max_level(self.side).map_err(|e| Error::Config(e.to_string()))?;
        match self.level {
            Level::Max => Ok(max),
            Level::Count(l) if (1..=max).contains(&l) => Ok(l),
            Level::Count(l) => Err(Error::Config(format!("level {l} outside 1..={max} for side {}", self.side))),
        }
    }

    pub fn n(&self) -> usize {
        self.side * self.side
    }

    /// Classifier configuration carrying `model_seed`.
    pub fn classifier_config(&self) -> ClassifierConfig {
        match &self.classifier {
            ClassifierConfig::Mlp(c) => {
                let mut c = c.clone();
                c.seed = self.model_seed;
                ClassifierConfig::Mlp(c)
            }
            other => other.clone(),
        }
    }

    pub fn synth_spec(&self) -> Option<SynthSpec> {
        match &self.dataset {
            DatasetSource::Synth {
                n_per_class,
                seed,
                noise,
                offset_jitter,
            } => Some(SynthSpec {
                n_per_class: *n_per_class,
                side: self.side,
                seed: *seed,
                noise: *noise,
                offset_jitter: *offset_jitter,
            }),
            DatasetSource::Dir { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::Config(s));
        if self.side == 0 || !self.side.is_power_of_two() {
            return bad(format!("side {} is not a power of two", self.side));
        }
        self.resolved_level()?;
        if self.m_values.is_empty() {
            return bad("m_values is empty".into());
        }
        let n = self.n();
        if let Some(&m) = self.m_values.iter().find(|&&m| m == 0 || m > n) {
            return bad(format!("m={m} outside 1..={n}"));
        }
        let mut sorted = self.m_values.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("m_values contains duplicates".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        match &self.classifier {
            ClassifierConfig::Mlp(c) => c.validate().map_err(|e| Error::Config(e.to_string()))?,
            ClassifierConfig::Knn { k } if *k == 0 => return bad("knn k must be at least 1".into()),
            _ => {}
        }
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let DatasetSource::Synth { n_per_class, noise, offset_jitter, .. } = &self.dataset {
            if *n_per_class == 0 {
                return bad("n_per_class must be at least 1".into());
            }
            if !(*noise >= 0.0 && *offset_jitter >= 0.0) {
                return bad("noise and offset_jitter must be non-negative".into());
            }
        }
        Ok(())
    }
}
