//! Channel amplitude and phase key generators over a reciprocal Rayleigh
//! channel, the usual physical-layer alternatives to AoA.
//!
//! Each coherence block has one complex gain `h ~ CN(0, 1)` seen by both
//! nodes, each through its own receiver noise. The scaled sequences go
//! through exactly the same quantize/encode/combine path as AoA estimates.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::complex_normal;
use crate::error::{Error, Result};
use crate::pipeline::{
    key_pair_from_sequences, KeyPair, NodeSequences, PipelineConfig, BELOW_ONE,
};
use crate::rng::child_rng;

pub use crate::pipeline::{ScaledSequence, ScaledSource};

/// Percentile of `|obs|` mapped to the top of the amplitude range.
pub const AMPLITUDE_PERCENTILE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fading {
    #[default]
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocalChannelModel {
    pub fading: Fading,
    pub coherence_block_count: usize,
    pub per_node_noise_variance: f64,
}

impl ReciprocalChannelModel {
    /// Unit-power Rayleigh channel; `+∞` dB means noiseless observations.
    pub fn from_snr_db(coherence_block_count: usize, snr_db: f64) -> Result<Self> {
        if coherence_block_count == 0 {
            return Err(Error::invalid("need at least one coherence block"));
        }
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid(format!("unusable SNR {snr_db} dB")));
        }
        let per_node_noise_variance = if snr_db == f64::INFINITY {
            0.0
        } else {
            10f64.powf(-snr_db / 10.0)
        };
        Ok(Self {
            fading: Fading::Rayleigh,
            coherence_block_count,
            per_node_noise_variance,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelObservations {
    pub alice: Vec<Complex64>,
    pub bob: Vec<Complex64>,
}

pub fn simulate_channel_observations(
    model: &ReciprocalChannelModel,
    seed: u64,
) -> Result<ChannelObservations> {
    if model.coherence_block_count == 0 {
        return Err(Error::invalid("need at least one coherence block"));
    }
    let mut channel = child_rng(seed, &[0]);
    let mut noise_a = child_rng(seed, &[1]);
    let mut noise_b = child_rng(seed, &[2]);
    let sigma2 = model.per_node_noise_variance;
    let mut alice = Vec::with_capacity(model.coherence_block_count);
    let mut bob = Vec::with_capacity(model.coherence_block_count);
    for _ in 0..model.coherence_block_count {
        let h = match model.fading {
            Fading::Rayleigh => complex_normal(&mut channel, 1.0),
        };
        alice.push(h + complex_normal(&mut noise_a, sigma2));
        bob.push(h + complex_normal(&mut noise_b, sigma2));
    }
    Ok(ChannelObservations { alice, bob })
}

/// Nearest-rank percentile of `values` (`p` in `(0, 1]`).
fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// `|obs|` divided by its own 99th percentile; the few larger values are
/// clamped just below 1.
pub fn extract_amplitude(obs: &[Complex64]) -> Result<ScaledSequence> {
    if obs.is_empty() {
        return Err(Error::Empty("channel observations"));
    }
    let amp: Vec<f64> = obs.iter().map(|z| z.norm()).collect();
    let scale = percentile(&amp, AMPLITUDE_PERCENTILE);
    let values = amp
        .iter()
        .map(|&a| if scale > 0.0 { (a / scale).min(BELOW_ONE) } else { 0.0 })
        .collect();
    ScaledSequence::new(values, ScaledSource::Amplitude)
}

/// `arg(obs)` mapped affinely from `[−π, π)` to `[0, 1)`.
pub fn extract_phase(obs: &[Complex64]) -> Result<ScaledSequence> {
    if obs.is_empty() {
        return Err(Error::Empty("channel observations"));
    }
    let values = obs
        .iter()
        .map(|z| (((z.arg() + PI) / TAU) % 1.0).min(BELOW_ONE))
        .collect();
    ScaledSequence::new(values, ScaledSource::Phase)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineSource {
    Amplitude,
    Phase,
    Combined,
}

fn node_sequences(obs: &[Complex64], source: BaselineSource) -> Result<NodeSequences> {
    Ok(match source {
        BaselineSource::Amplitude => NodeSequences::Single(extract_amplitude(obs)?),
        BaselineSource::Phase => NodeSequences::Single(extract_phase(obs)?),
        BaselineSource::Combined => {
            NodeSequences::Pair(extract_amplitude(obs)?, extract_phase(obs)?)
        }
    })
}

/// Key material from already simulated channel observations.
pub fn baseline_key_pair_from_observations(
    obs: &ChannelObservations,
    source: BaselineSource,
    cfg: &PipelineConfig,
) -> Result<KeyPair> {
    key_pair_from_sequences(
        &node_sequences(&obs.alice, source)?,
        &node_sequences(&obs.bob, source)?,
        cfg,
    )
}

pub fn baseline_key_pair(
    source: BaselineSource,
    snr_db: f64,
    cfg: &PipelineConfig,
    block_count: usize,
    seed: u64,
) -> Result<KeyPair> {
    cfg.validate()?;
    let model = ReciprocalChannelModel::from_snr_db(block_count, snr_db)?;
    let obs = simulate_channel_observations(&model, seed)?;
    baseline_key_pair_from_observations(&obs, source, cfg)
}
