//! From AoA estimates to bit streams.
//!
//! Each node aligns its estimate to the agreed reference, scales it to
//! `[0, 1)`, quantizes it uniformly, Gray-codes the level index and repeats
//! the most significant bit `n_encod` times. Two streams can be combined by
//! keeping the leading `n_comb` bits of every sample from each and
//! concatenating them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::array::{wrap_azimuth, AngleOfArrival, SignalModel};
use crate::error::{Error, Result};
use crate::estimators::{AoaEstimator, StageOrder};
use crate::rng::{derive_seed, rng_from_seed};

/// Largest `f64` strictly below 1.
pub const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// How the two nodes measure azimuth (rotation is clockwise for both).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceConvention {
    /// Both nodes use the same reference; Bob sees `φ_c + π` and subtracts π.
    #[default]
    SharedReference,
    /// Bob uses the opposite reference and sees `φ_c` directly.
    OppositeReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Alice,
    Bob,
}

/// Azimuth a node measures for a common AoA `φ_c` under `conv`.
pub fn observed_by(common: &AngleOfArrival, conv: ReferenceConvention, node: Node) -> AngleOfArrival {
    match (conv, node) {
        (ReferenceConvention::SharedReference, Node::Bob) => common.rotated(PI),
        _ => *common,
    }
}

/// Maps a local estimate back to the common AoA.
pub fn align_reference(
    local: &AngleOfArrival,
    conv: ReferenceConvention,
    node: Node,
) -> AngleOfArrival {
    match (conv, node) {
        (ReferenceConvention::SharedReference, Node::Bob) => local.rotated(-PI),
        _ => *local,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    n_quan: u32,
    low: f64,
    high: f64,
    wrap: bool,
}

impl QuantizerConfig {
    pub fn new(n_quan: u32, low: f64, high: f64, wrap: bool) -> Result<Self> {
        if !(1..=16).contains(&n_quan) {
            return Err(Error::invalid(format!("n_quan {n_quan} outside 1..=16")));
        }
        if !(low.is_finite() && high.is_finite() && high > low) {
            return Err(Error::invalid("quantizer range must satisfy low < high"));
        }
        Ok(Self {
            n_quan,
            low,
            high,
            wrap,
        })
    }

    /// `[0, 2π)`, wrapping out-of-range input.
    pub fn azimuth(n_quan: u32) -> Result<Self> {
        Self::new(n_quan, 0.0, TAU, true)
    }

    /// `[0, π/2]`.
    pub fn elevation(n_quan: u32) -> Result<Self> {
        Self::new(n_quan, 0.0, FRAC_PI_2, false)
    }

    /// `[0, 1)`, the common range of scaled sequences.
    pub fn unit(n_quan: u32) -> Result<Self> {
        Self::new(n_quan, 0.0, 1.0, false)
    }

    pub fn n_quan(&self) -> u32 {
        self.n_quan
    }

    pub fn levels(&self) -> u32 {
        1 << self.n_quan
    }
}

/// Uniform quantizer level of `value`.
///
/// The top of a non-wrapping range maps to the highest level.
pub fn quantize(value: f64, cfg: &QuantizerConfig) -> Result<u32> {
    if !value.is_finite() {
        return Err(Error::NonFinite("quantizer input"));
    }
    let width = cfg.high - cfg.low;
    let offset = if cfg.wrap {
        (value - cfg.low).rem_euclid(width)
    } else if value < cfg.low || value > cfg.high {
        return Err(Error::invalid(format!(
            "{value} outside quantizer range [{}, {}]",
            cfg.low, cfg.high
        )));
    } else {
        value - cfg.low
    };
    let level = (offset / width * cfg.levels() as f64).floor() as u32;
    Ok(level.min(cfg.levels() - 1))
}

/// Where a bit stream came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Azimuth,
    Elevation,
    Amplitude,
    Phase,
    Combined,
}

/// Bits grouped in fixed-width samples, most significant first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    bits: Vec<u8>,
    bits_per_sample: usize,
    provenance: Provenance,
}

impl BitStream {
    pub fn new(bits: Vec<u8>, bits_per_sample: usize, provenance: Provenance) -> Result<Self> {
        if bits_per_sample == 0 {
            return Err(Error::invalid("bits per sample must be positive"));
        }
        if !bits.len().is_multiple_of(bits_per_sample) {
            return Err(Error::invalid(format!(
                "{} bits do not split into samples of {bits_per_sample}",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("bit values must be 0 or 1"));
        }
        Ok(Self {
            bits,
            bits_per_sample,
            provenance,
        })
    }

    /// Unstructured stream (one bit per sample).
    pub fn from_bits(bits: Vec<u8>, provenance: Provenance) -> Result<Self> {
        Self::new(bits, 1, provenance)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits_per_sample(&self) -> usize {
        self.bits_per_sample
    }

    pub fn sample_count(&self) -> usize {
        self.bits.len() / self.bits_per_sample
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn sample(&self, index: usize) -> &[u8] {
        &self.bits[index * self.bits_per_sample..(index + 1) * self.bits_per_sample]
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| b ^ 1).collect(),
            ..self.clone()
        }
    }

    /// Packed bytes, first bit in the most significant position, zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (b << (7 - i)))
            })
            .collect()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }
}

impl fmt::Display for BitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n_quan: u32,
    pub n_encod: u32,
    pub n_comb: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n_quan: 7,
            n_encod: 2,
            n_comb: 2,
        }
    }
}

impl PipelineConfig {
    pub fn new(n_quan: u32, n_encod: u32, n_comb: u32) -> Result<Self> {
        let cfg = Self {
            n_quan,
            n_encod,
            n_comb,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.n_quan) {
            return Err(Error::invalid(format!("n_quan {} outside 1..=16", self.n_quan)));
        }
        if self.n_encod == 0 {
            return Err(Error::invalid("n_encod must be at least 1"));
        }
        if self.n_comb == 0 || self.n_comb > self.n_quan {
            return Err(Error::invalid(format!(
                "n_comb {} outside 1..={}",
                self.n_comb, self.n_quan
            )));
        }
        Ok(())
    }

    /// Bits per sample after encoding: `n_quan + n_encod − 1`.
    pub fn encoded_width(&self) -> usize {
        (self.n_quan + self.n_encod - 1) as usize
    }
}

pub fn gray_code(index: u32) -> u32 {
    index ^ (index >> 1)
}

/// Gray-codes each level index and repeats its most significant bit
/// `n_encod` times.
pub fn encode_levels(
    indices: &[u32],
    cfg: &PipelineConfig,
    provenance: Provenance,
) -> Result<BitStream> {
    cfg.validate()?;
    let n = cfg.n_quan;
    let mut bits = Vec::with_capacity(indices.len() * cfg.encoded_width());
    for &index in indices {
        if index >> n != 0 {
            return Err(Error::invalid(format!("level {index} needs more than {n} bits")));
        }
        let g = gray_code(index);
        let msb = ((g >> (n - 1)) & 1) as u8;
        bits.extend(std::iter::repeat_n(msb, cfg.n_encod as usize));
        bits.extend((0..n - 1).rev().map(|k| ((g >> k) & 1) as u8));
    }
    BitStream::new(bits, cfg.encoded_width(), provenance)
}

/// Concatenates the leading `n_comb` bits of each sample of `a` and of `b`.
pub fn combine_streams(a: &BitStream, b: &BitStream, cfg: &PipelineConfig) -> Result<BitStream> {
    cfg.validate()?;
    if a.sample_count() != b.sample_count() {
        return Err(Error::LengthMismatch {
            left: a.sample_count(),
            right: b.sample_count(),
        });
    }
    let keep = cfg.n_comb as usize;
    if keep > a.bits_per_sample() || keep > b.bits_per_sample() {
        return Err(Error::invalid(format!(
            "n_comb {keep} exceeds a stream's sample width"
        )));
    }
    let mut bits = Vec::with_capacity(2 * keep * a.sample_count());
    for i in 0..a.sample_count() {
        bits.extend_from_slice(&a.sample(i)[..keep]);
        bits.extend_from_slice(&b.sample(i)[..keep]);
    }
    BitStream::new(bits, 2 * keep, Provenance::Combined)
}

/// Fraction of positions where the streams differ.
pub fn bit_mismatch_rate(a: &BitStream, b: &BitStream) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("bit stream"));
    }
    let diff = a.bits().iter().zip(b.bits()).filter(|(x, y)| x != y).count();
    Ok(diff as f64 / a.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaledSource {
    Amplitude,
    Phase,
    Azimuth,
    Elevation,
}

impl From<ScaledSource> for Provenance {
    fn from(s: ScaledSource) -> Self {
        match s {
            ScaledSource::Amplitude => Provenance::Amplitude,
            ScaledSource::Phase => Provenance::Phase,
            ScaledSource::Azimuth => Provenance::Azimuth,
            ScaledSource::Elevation => Provenance::Elevation,
        }
    }
}

/// A randomness source mapped onto `[0, 1)` so that every source goes
/// through the same quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSequence {
    values: Vec<f64>,
    source: ScaledSource,
}

impl ScaledSequence {
    pub fn new(values: Vec<f64>, source: ScaledSource) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("scaled sequence"));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..1.0).contains(*v)) {
            return Err(Error::invalid(format!("scaled value {v} outside [0, 1)")));
        }
        Ok(Self { values, source })
    }

    /// `φ / 2π`.
    pub fn from_azimuths(angles: &[AngleOfArrival]) -> Result<Self> {
        let values = angles
            .iter()
            .map(|a| (wrap_azimuth(a.azimuth()) / TAU).min(BELOW_ONE))
            .collect();
        Self::new(values, ScaledSource::Azimuth)
    }

    /// `θ / (π/2)`, with `θ = π/2` placed in the top level.
    pub fn from_elevations(angles: &[AngleOfArrival]) -> Result<Self> {
        let values = angles
            .iter()
            .map(|a| (a.elevation() / FRAC_PI_2).min(BELOW_ONE))
            .collect();
        Self::new(values, ScaledSource::Elevation)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> ScaledSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Quantized and encoded bits of one scaled sequence.
pub fn sequence_bits(seq: &ScaledSequence, cfg: &PipelineConfig) -> Result<BitStream> {
    let q = QuantizerConfig::unit(cfg.n_quan)?;
    let levels = seq
        .values()
        .iter()
        .map(|&v| quantize(v, &q))
        .collect::<Result<Vec<u32>>>()?;
    encode_levels(&levels, cfg, seq.source().into())
}

/// What one node feeds into the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeSequences {
    /// A single source; the full encoded stream is the key material.
    Single(ScaledSequence),
    /// Two sources combined with the `n_comb` rule.
    Pair(ScaledSequence, ScaledSequence),
}

/// Bits of one node. AoA and channel baselines both go through here.
pub fn node_bits(seq: &NodeSequences, cfg: &PipelineConfig) -> Result<BitStream> {
    cfg.validate()?;
    match seq {
        NodeSequences::Single(s) => sequence_bits(s, cfg),
        NodeSequences::Pair(a, b) => {
            combine_streams(&sequence_bits(a, cfg)?, &sequence_bits(b, cfg)?, cfg)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyPair {
    pub alice: BitStream,
    pub bob: BitStream,
    pub bmr: f64,
}

pub fn key_pair_from_sequences(
    alice: &NodeSequences,
    bob: &NodeSequences,
    cfg: &PipelineConfig,
) -> Result<KeyPair> {
    let alice = node_bits(alice, cfg)?;
    let bob = node_bits(bob, cfg)?;
    let bmr = bit_mismatch_rate(&alice, &bob)?;
    Ok(KeyPair { alice, bob, bmr })
}

/// Which AoA component becomes key material.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleSource {
    /// Azimuth of in-plane arrivals, estimated with a 1-D azimuth scan.
    Azimuth,
    /// Elevation from the sequential 2-D estimate.
    Elevation,
    /// Azimuth and elevation from the 2-D estimate, combined.
    Combined,
}

impl AngleSource {
    pub fn needs_elevation(&self) -> bool {
        !matches!(self, AngleSource::Azimuth)
    }
}

/// Sequence of true common AoAs seen as one node moves.
///
/// Angles are drawn on the 1° estimator grid, so a noiseless estimate is
/// exact at both nodes. Elevation 0 is left out: the array response is the
/// same for every azimuth there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MobilityModel {
    /// Independent uniform azimuth in `{0°, …, 359°}` and elevation in
    /// `{1°, …, 90°}`.
    IidUniform,
    /// Independent uniform azimuth, arrivals in the array plane.
    IidPlanar,
}

pub const DEFAULT_KEY_SAMPLES: usize = 64;

impl MobilityModel {
    pub fn draw(&self, count: usize, seed: u64) -> Vec<AngleOfArrival> {
        let mut rng = rng_from_seed(seed);
        (0..count)
            .map(|_| {
                let az = rng.random_range(0..360u32) as f64;
                let el = match self {
                    MobilityModel::IidUniform => rng.random_range(1..=90u32) as f64,
                    MobilityModel::IidPlanar => 90.0,
                };
                AngleOfArrival::from_degrees(az, el).expect("drawn angles are in range")
            })
            .collect()
    }
}

/// Aligned AoA estimates of both nodes for a sequence of true AoAs.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEstimates {
    pub alice: Vec<AngleOfArrival>,
    pub bob: Vec<AngleOfArrival>,
}

/// Settings shared by both nodes when estimating a key sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationSetup {
    pub convention: ReferenceConvention,
    pub model: SignalModel,
    pub samples: usize,
    pub two_dimensional: bool,
    pub order: StageOrder,
}

/// Steps 0 to 1: each node estimates every true AoA from its own noisy
/// reception and maps it to the common reference.
///
/// With `two_dimensional` unset the nodes run an azimuth-only scan on
/// in-plane arrivals, whatever the elevation of `truths`.
pub fn observe_angles(
    truths: &[AngleOfArrival],
    alice: &dyn AoaEstimator,
    bob: &dyn AoaEstimator,
    setup: &ObservationSetup,
    seed: u64,
) -> Result<NodeEstimates> {
    if truths.is_empty() {
        return Err(Error::Empty("true AoA sequence"));
    }
    let estimate = |est: &dyn AoaEstimator, node: Node, i: usize| -> Result<AngleOfArrival> {
        let tag = match node {
            Node::Alice => 0,
            Node::Bob => 1,
        };
        let trial_seed = derive_seed(seed, &[i as u64, tag]);
        let common = if setup.two_dimensional {
            truths[i]
        } else {
            AngleOfArrival::azimuth_only(truths[i].azimuth())
        };
        let seen = observed_by(&common, setup.convention, node);
        let local = if setup.two_dimensional {
            est.estimate_2d(&seen, &setup.model, setup.samples, trial_seed, setup.order)?
        } else {
            let a = est.estimate_azimuth(&seen, &setup.model, setup.samples, trial_seed)?;
            AngleOfArrival::azimuth_only(a.angle)
        };
        Ok(align_reference(&local, setup.convention, node))
    };
    let mut out = NodeEstimates {
        alice: Vec::with_capacity(truths.len()),
        bob: Vec::with_capacity(truths.len()),
    };
    for i in 0..truths.len() {
        out.alice.push(estimate(alice, Node::Alice, i)?);
        out.bob.push(estimate(bob, Node::Bob, i)?);
    }
    Ok(out)
}

fn angle_sequences(angles: &[AngleOfArrival], source: AngleSource) -> Result<NodeSequences> {
    Ok(match source {
        AngleSource::Azimuth => NodeSequences::Single(ScaledSequence::from_azimuths(angles)?),
        AngleSource::Elevation => NodeSequences::Single(ScaledSequence::from_elevations(angles)?),
        AngleSource::Combined => NodeSequences::Pair(
            ScaledSequence::from_azimuths(angles)?,
            ScaledSequence::from_elevations(angles)?,
        ),
    })
}

/// Steps 2 to 4 on already aligned estimates.
pub fn key_pair_from_estimates(
    estimates: &NodeEstimates,
    source: AngleSource,
    cfg: &PipelineConfig,
) -> Result<KeyPair> {
    key_pair_from_sequences(
        &angle_sequences(&estimates.alice, source)?,
        &angle_sequences(&estimates.bob, source)?,
        cfg,
    )
}

/// Runs Steps 0 to 4 at both nodes for a sequence of true AoAs.
#[allow(clippy::too_many_arguments)]
pub fn generate_key_pair(
    truths: &[AngleOfArrival],
    alice: &dyn AoaEstimator,
    bob: &dyn AoaEstimator,
    convention: ReferenceConvention,
    source: AngleSource,
    cfg: &PipelineConfig,
    model: &SignalModel,
    n: usize,
    seed: u64,
) -> Result<KeyPair> {
    cfg.validate()?;
    let setup = ObservationSetup {
        convention,
        model: *model,
        samples: n,
        two_dimensional: source.needs_elevation(),
        order: StageOrder::default(),
    };
    let estimates = observe_angles(truths, alice, bob, &setup, seed)?;
    key_pair_from_estimates(&estimates, source, cfg)
}
