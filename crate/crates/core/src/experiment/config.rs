//! TOML experiment specifications.
//!
//! ```toml
//! id = "bmr-snr"
//! kind = "bmr"
//! estimator = "both"
//! snr_db = [-15, -20, -25, -30]
//! samples = [1000]
//! trials = 100
//! seed = 2024
//! sources = ["combined"]
//!
//! [pipeline]
//! n_quan = 7
//! n_encod = 2
//! n_comb = [2, 3]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::AngleOfArrival;
use crate::error::{Error, Result};
use crate::estimators::{Method, StageOrder, DEFAULT_SPACING, MUSIC_ELEMENTS, XSBS_ELEMENTS};
use crate::pipeline::{AngleSource, PipelineConfig, ReferenceConvention, DEFAULT_KEY_SAMPLES};

/// BMR below which a key is considered usable.
pub const BMR_THRESHOLD: f64 = 0.15;

pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    Rmse,
    Bmr,
    Keygen,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Rmse => "rmse",
            ExperimentKind::Bmr => "bmr",
            ExperimentKind::Keygen => "keygen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorChoice {
    Music,
    Xsbs,
    #[default]
    Both,
}

impl EstimatorChoice {
    pub fn methods(&self) -> Vec<Method> {
        match self {
            EstimatorChoice::Music => vec![Method::Music],
            EstimatorChoice::Xsbs => vec![Method::Xsbs],
            EstimatorChoice::Both => vec![Method::Music, Method::Xsbs],
        }
    }
}

/// Randomness source of a BMR experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeySource {
    Amplitude,
    Phase,
    Azimuth,
    Elevation,
    AmpPhaseCombined,
    Combined,
}

impl KeySource {
    pub fn label(&self) -> &'static str {
        match self {
            KeySource::Amplitude => "amplitude",
            KeySource::Phase => "phase",
            KeySource::Azimuth => "azimuth",
            KeySource::Elevation => "elevation",
            KeySource::AmpPhaseCombined => "amp-phase-combined",
            KeySource::Combined => "combined",
        }
    }

    /// Legend label of the curve.
    pub fn legend(&self) -> &'static str {
        match self {
            KeySource::Amplitude => "A: Chan. amp.",
            KeySource::Phase => "B: Chan. phase",
            KeySource::Azimuth => "C: Az. angle",
            KeySource::Elevation => "D: Elev. angle",
            KeySource::AmpPhaseCombined => "E: Comb. amp. & ph",
            KeySource::Combined => "F: Comb. Az. & Elev",
        }
    }

    pub fn angle_source(&self) -> Option<AngleSource> {
        match self {
            KeySource::Azimuth => Some(AngleSource::Azimuth),
            KeySource::Elevation => Some(AngleSource::Elevation),
            KeySource::Combined => Some(AngleSource::Combined),
            _ => None,
        }
    }
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSweep {
    pub n_quan: OneOrMany<u32>,
    pub n_encod: OneOrMany<u32>,
    pub n_comb: OneOrMany<u32>,
    /// AoA samples (or coherence blocks) per key.
    pub key_samples: usize,
    pub reference: ReferenceConvention,
}

impl Default for PipelineSweep {
    fn default() -> Self {
        let d = PipelineConfig::default();
        Self {
            n_quan: OneOrMany::One(d.n_quan),
            n_encod: OneOrMany::One(d.n_encod),
            n_comb: OneOrMany::One(d.n_comb),
            key_samples: DEFAULT_KEY_SAMPLES,
            reference: ReferenceConvention::default(),
        }
    }
}

impl PipelineSweep {
    /// Every combination, `n_quan` varying slowest.
    pub fn configs(&self) -> Result<Vec<PipelineConfig>> {
        let mut out = Vec::new();
        for q in self.n_quan.to_vec() {
            for e in self.n_encod.to_vec() {
                for c in self.n_comb.to_vec() {
                    out.push(PipelineConfig::new(q, e, c)?);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("pipeline parameter lists must be nonempty".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruthSpec {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl Default for TruthSpec {
    fn default() -> Self {
        Self {
            azimuth_deg: 270.0,
            elevation_deg: 90.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RmseAngle {
    /// Azimuth from the in-plane 1-D scan.
    #[default]
    Azimuth,
    /// Elevation from the sequential 2-D estimate.
    Elevation,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RmseSpec {
    pub angle: RmseAngle,
    pub stage_order: StageOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySpec {
    pub music_elements: usize,
    pub xsbs_elements: usize,
    /// Neighbouring element spacing in wavelengths.
    pub spacing: f64,
    pub xsbs_omni_elements: Vec<usize>,
}

impl Default for ArraySpec {
    fn default() -> Self {
        Self {
            music_elements: MUSIC_ELEMENTS,
            xsbs_elements: XSBS_ELEMENTS,
            spacing: DEFAULT_SPACING,
            xsbs_omni_elements: vec![0, 2, 4, 6, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub id: String,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub estimator: EstimatorChoice,
    pub snr_db: Vec<f64>,
    pub samples: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sources: Vec<KeySource>,
    #[serde(default)]
    pub reconciliation: bool,
    #[serde(default)]
    pub truth: TruthSpec,
    #[serde(default)]
    pub rmse: RmseSpec,
    #[serde(default)]
    pub pipeline: PipelineSweep,
    #[serde(default)]
    pub array: ArraySpec,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Canonical TOML of the fully resolved spec.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn truth(&self) -> Result<AngleOfArrival> {
        AngleOfArrival::from_degrees(self.truth.azimuth_deg, self.truth.elevation_deg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.id.is_empty()
            || !self
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return bad(format!("id {:?} must be nonempty [A-Za-z0-9_-]", self.id));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.snr_db.is_empty() || self.samples.is_empty() {
            return bad("snr_db and samples must be nonempty".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db entries must be finite".into());
        }
        if self.samples.contains(&0) {
            return bad("sample counts must be positive".into());
        }
        if self.pipeline.key_samples == 0 {
            return bad("pipeline.key_samples must be positive".into());
        }
        self.pipeline.configs()?;
        self.truth()
            .map_err(|e| Error::Config(format!("truth: {e}")))?;
        if self.array.music_elements < 2 || self.array.xsbs_elements < 2 {
            return bad("arrays need at least two elements".into());
        }
        if !(self.array.spacing.is_finite() && self.array.spacing > 0.0) {
            return bad("array.spacing must be positive".into());
        }
        match self.kind {
            ExperimentKind::Bmr => {
                if self.sources.is_empty() {
                    return bad("a bmr experiment needs at least one source".into());
                }
            }
            ExperimentKind::Keygen => {
                if self.estimator == EstimatorChoice::Both {
                    return bad("keygen needs a single estimator (music or xsbs)".into());
                }
                if self.snr_db.len() != 1 || self.samples.len() != 1 {
                    return bad("keygen takes exactly one snr_db and one samples value".into());
                }
                let aoa: Vec<_> = self.sources.iter().filter_map(|s| s.angle_source()).collect();
                if self.sources.len() > 1 || aoa.len() != self.sources.len() {
                    return bad("keygen takes at most one AoA source".into());
                }
                if self.pipeline.configs()?.len() != 1 {
                    return bad("keygen takes a single pipeline configuration".into());
                }
            }
            ExperimentKind::Spectrum | ExperimentKind::Rmse => {}
        }
        Ok(())
    }
}
