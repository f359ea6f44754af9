//! Monte Carlo sweeps behind the CLI subcommands.
//!
//! Every trial draws from its own generator, seeded from the master seed and
//! the trial's coordinates, and results are gathered in trial order, so the
//! output does not depend on the number of worker threads.

use std::sync::Arc;

use rayon::prelude::*;

use super::config::{ExperimentKind, ExperimentSpec, KeySource, RmseAngle};
use crate::array::{ArrayGeometry, AngleOfArrival, SignalModel};
use crate::baselines::{
    baseline_key_pair_from_observations, simulate_channel_observations, BaselineSource,
    ReciprocalChannelModel,
};
use crate::error::{Error, Result};
use crate::estimators::{
    AoaEstimator, CovarianceRoute, Method, MusicEstimator, ScanGrid, SpatialSpectrum,
    XsbsConfig, XsbsEstimator,
};
use crate::pipeline::{
    key_pair_from_estimates, observe_angles, AngleSource, BitStream, KeyPair, MobilityModel,
    NodeEstimates, ObservationSetup, PipelineConfig,
};
use crate::rng::derive_seed;
use crate::secrecy::{
    privacy_amplify, reconcile, HashFunctionFamily, ReconciliationSession, Transcript,
    TranscriptRecord,
};

const TAG_RMSE: u64 = 1;
const TAG_SPECTRUM: u64 = 2;
const TAG_TRUTHS: u64 = 3;
const TAG_AOA: u64 = 4;
const TAG_CHANNEL: u64 = 5;
const TAG_KEYGEN: u64 = 6;
const TAG_CASCADE: u64 = 7;
const TAG_HASH: u64 = 8;

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub kind: ExperimentKind,
    pub estimator: String,
    pub source: String,
    pub legend: String,
    pub snr_db: f64,
    pub samples: Option<usize>,
    pub pipeline: Option<PipelineConfig>,
    pub trials: usize,
    pub rmse_deg: Option<f64>,
    pub pfr: Option<f64>,
    pub bmr_mean: Option<f64>,
    pub bmr_std: Option<f64>,
    pub seed: u64,
}

impl ResultRow {
    fn new(spec: &ExperimentSpec, estimator: &str, source: &str, snr_db: f64) -> Self {
        Self {
            experiment: spec.id.clone(),
            kind: spec.kind,
            estimator: estimator.to_string(),
            source: source.to_string(),
            legend: String::new(),
            snr_db,
            samples: None,
            pipeline: None,
            trials: spec.trials,
            rmse_deg: None,
            pfr: None,
            bmr_mean: None,
            bmr_std: None,
            seed: spec.seed,
        }
    }
}

fn method_tag(method: Method) -> u64 {
    match method {
        Method::Music => 0,
        Method::Xsbs => 1,
    }
}

/// Estimator for `method` with the array settings of `spec`.
pub fn build_estimator(spec: &ExperimentSpec, method: Method) -> Result<Arc<dyn AoaEstimator>> {
    Ok(match method {
        Method::Music => {
            let geom =
                ArrayGeometry::with_element_spacing(spec.array.music_elements, spec.array.spacing)?;
            Arc::new(MusicEstimator::new(
                Arc::new(ScanGrid::with_default_grids(geom)?),
                CovarianceRoute::Direct,
            ))
        }
        Method::Xsbs => {
            let geom =
                ArrayGeometry::with_element_spacing(spec.array.xsbs_elements, spec.array.spacing)?;
            let cfg = XsbsConfig {
                total_elements: spec.array.xsbs_elements,
                omni_element_indices: spec.array.xsbs_omni_elements.clone(),
                ..XsbsConfig::default()
            };
            Arc::new(XsbsEstimator::new(
                Arc::new(ScanGrid::with_default_grids(geom)?),
                cfg,
            )?)
        }
    })
}

/// `sqrt(mean(e²))` of plain (unwrapped) differences in degrees.
pub fn rmse_deg(errors: &[f64]) -> f64 {
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn model(snr_db: f64) -> Result<SignalModel> {
    SignalModel::from_snr_db(snr_db)
}

/// RMSE of the angle estimate per (estimator, SNR, N).
pub fn run_rmse_sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let truth = spec.truth()?;
    let mut rows = Vec::new();
    for method in spec.estimator.methods() {
        let est = build_estimator(spec, method)?;
        for (si, &snr) in spec.snr_db.iter().enumerate() {
            let model = model(snr)?;
            for (ni, &n) in spec.samples.iter().enumerate() {
                let errors = (0..spec.trials)
                    .into_par_iter()
                    .map(|t| {
                        let seed = derive_seed(
                            spec.seed,
                            &[TAG_RMSE, method_tag(method), si as u64, ni as u64, t as u64],
                        );
                        match spec.rmse.angle {
                            RmseAngle::Azimuth => {
                                let truth = AngleOfArrival::azimuth_only(truth.azimuth());
                                let est = est.estimate_azimuth(&truth, &model, n, seed)?;
                                Ok(est.degrees() - truth.azimuth_deg())
                            }
                            RmseAngle::Elevation => {
                                let est =
                                    est.estimate_2d(&truth, &model, n, seed, spec.rmse.stage_order)?;
                                Ok(est.elevation_deg() - truth.elevation_deg())
                            }
                        }
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let source = match spec.rmse.angle {
                    RmseAngle::Azimuth => "azimuth",
                    RmseAngle::Elevation => "elevation",
                };
                let mut row = ResultRow::new(spec, method.label(), source, snr);
                row.samples = Some(n);
                row.rmse_deg = Some(rmse_deg(&errors));
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Spectrum of the first trial of one (estimator, SNR, N) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    pub estimator: Method,
    pub snr_db: f64,
    pub samples: usize,
    pub spectrum: SpatialSpectrum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOutput {
    pub rows: Vec<ResultRow>,
    pub traces: Vec<SpectrumTrace>,
}

/// In-plane azimuth spectra at the configured truth. Rows carry the mean PFR
/// and the azimuth RMSE over all trials.
pub fn run_spectrum(spec: &ExperimentSpec) -> Result<SpectrumOutput> {
    spec.validate()?;
    let truth = AngleOfArrival::azimuth_only(spec.truth()?.azimuth());
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for method in spec.estimator.methods() {
        let est = build_estimator(spec, method)?;
        for (si, &snr) in spec.snr_db.iter().enumerate() {
            let model = model(snr)?;
            for (ni, &n) in spec.samples.iter().enumerate() {
                let spectra = (0..spec.trials)
                    .into_par_iter()
                    .map(|t| {
                        let seed = derive_seed(
                            spec.seed,
                            &[TAG_SPECTRUM, method_tag(method), si as u64, ni as u64, t as u64],
                        );
                        let s = est.azimuth_spectrum(&truth, &model, n, seed)?;
                        let pfr = s.pfr()?;
                        let err = s.estimate_azimuth().degrees() - truth.azimuth_deg();
                        Ok((s, pfr, err))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let pfrs: Vec<f64> = spectra.iter().map(|x| x.1).collect();
                let errors: Vec<f64> = spectra.iter().map(|x| x.2).collect();
                let mut row = ResultRow::new(spec, method.label(), "azimuth", snr);
                row.samples = Some(n);
                row.pfr = Some(mean_std(&pfrs).0);
                row.rmse_deg = Some(rmse_deg(&errors));
                rows.push(row);
                let first = spectra.into_iter().next().expect("trials >= 1");
                traces.push(SpectrumTrace {
                    estimator: method,
                    snr_db: snr,
                    samples: n,
                    spectrum: first.0,
                });
            }
        }
    }
    Ok(SpectrumOutput { rows, traces })
}

/// True AoA sequence of one BMR trial, shared by every SNR and estimator.
fn trial_truths(spec: &ExperimentSpec, trial: usize, two_dimensional: bool) -> Vec<AngleOfArrival> {
    let mobility = if two_dimensional {
        MobilityModel::IidUniform
    } else {
        MobilityModel::IidPlanar
    };
    mobility.draw(
        spec.pipeline.key_samples,
        derive_seed(spec.seed, &[TAG_TRUTHS, trial as u64]),
    )
}

/// Both nodes' estimates for one AoA trial.
pub fn aoa_trial_estimates(
    spec: &ExperimentSpec,
    est: &dyn AoaEstimator,
    snr_index: usize,
    snr_db: f64,
    n: usize,
    trial: usize,
    two_dimensional: bool,
) -> Result<NodeEstimates> {
    let truths = trial_truths(spec, trial, two_dimensional);
    let setup = ObservationSetup {
        convention: spec.pipeline.reference,
        model: model(snr_db)?,
        samples: n,
        two_dimensional,
        order: spec.rmse.stage_order,
    };
    let seed = derive_seed(
        spec.seed,
        &[
            TAG_AOA,
            method_tag(est.method()),
            snr_index as u64,
            n as u64,
            trial as u64,
            two_dimensional as u64,
        ],
    );
    observe_angles(&truths, est, est, &setup, seed)
}

fn baseline_of(source: KeySource) -> Option<BaselineSource> {
    match source {
        KeySource::Amplitude => Some(BaselineSource::Amplitude),
        KeySource::Phase => Some(BaselineSource::Phase),
        KeySource::AmpPhaseCombined => Some(BaselineSource::Combined),
        _ => None,
    }
}

/// (source index, estimator, SNR index, N, bmr[trial][config])
type BmrCell = (usize, String, usize, usize, Vec<Vec<f64>>);

/// BMR per (source, estimator, pipeline configuration, SNR, N).
///
/// AoA estimates of a trial are computed once and reused for every source
/// and pipeline configuration, so curves are compared on identical noise.
pub fn run_bmr_sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let configs = spec.pipeline.configs()?;
    let aoa_sources: Vec<(usize, AngleSource)> = spec
        .sources
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.angle_source().map(|a| (i, a)))
        .collect();
    let need_1d = aoa_sources.iter().any(|(_, a)| !a.needs_elevation());
    let need_2d = aoa_sources.iter().any(|(_, a)| a.needs_elevation());

    let mut cells: Vec<BmrCell> = Vec::new();
    if !aoa_sources.is_empty() {
        for method in spec.estimator.methods() {
            let est = build_estimator(spec, method)?;
            for (si, &snr) in spec.snr_db.iter().enumerate() {
                for &n in &spec.samples {
                    // per trial: bmr[source][config]
                    let per_trial = (0..spec.trials)
                        .into_par_iter()
                        .map(|t| {
                            let flat = if need_1d {
                                Some(aoa_trial_estimates(spec, est.as_ref(), si, snr, n, t, false)?)
                            } else {
                                None
                            };
                            let full = if need_2d {
                                Some(aoa_trial_estimates(spec, est.as_ref(), si, snr, n, t, true)?)
                            } else {
                                None
                            };
                            aoa_sources
                                .iter()
                                .map(|(_, angle)| {
                                    let e = if angle.needs_elevation() { &full } else { &flat };
                                    let e = e.as_ref().expect("estimates computed when needed");
                                    configs
                                        .iter()
                                        .map(|cfg| Ok(key_pair_from_estimates(e, *angle, cfg)?.bmr))
                                        .collect::<Result<Vec<f64>>>()
                                })
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()?;
                    for (k, (source_index, _)) in aoa_sources.iter().enumerate() {
                        let bmrs = per_trial.iter().map(|t| t[k].clone()).collect();
                        cells.push((*source_index, method.label().to_string(), si, n, bmrs));
                    }
                }
            }
        }
    }
    for (source_index, source) in spec.sources.iter().enumerate() {
        let Some(baseline) = baseline_of(*source) else {
            continue;
        };
        for (si, &snr) in spec.snr_db.iter().enumerate() {
            let model = ReciprocalChannelModel::from_snr_db(spec.pipeline.key_samples, snr)?;
            let bmrs = (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    let seed = derive_seed(spec.seed, &[TAG_CHANNEL, si as u64, t as u64]);
                    let obs = simulate_channel_observations(&model, seed)?;
                    configs
                        .iter()
                        .map(|cfg| Ok(baseline_key_pair_from_observations(&obs, baseline, cfg)?.bmr))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            // channel sources have no array; N is the number of coherence blocks
            cells.push((source_index, "channel".to_string(), si, spec.pipeline.key_samples, bmrs));
        }
    }

    // curves grouped by configuration, then source, in spec order
    cells.sort_by_key(|c| c.0);
    let mut rows = Vec::new();
    for (ci, cfg) in configs.iter().enumerate() {
        for (source_index, estimator, si, n, bmrs) in &cells {
            let source = spec.sources[*source_index];
            let values: Vec<f64> = bmrs.iter().map(|t| t[ci]).collect();
            let (mean, std) = mean_std(&values);
            let mut row = ResultRow::new(spec, estimator, source.label(), spec.snr_db[*si]);
            row.legend = source.legend().to_string();
            row.samples = Some(*n);
            row.pipeline = Some(*cfg);
            row.bmr_mean = Some(mean);
            row.bmr_std = Some(std);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Everything the keygen demo produces.
#[derive(Debug, Clone, PartialEq)]
pub struct KeygenReport {
    pub estimator: Method,
    pub source: AngleSource,
    pub snr_db: f64,
    pub samples: usize,
    pub pipeline: PipelineConfig,
    pub raw: KeyPair,
    pub reconciled_bob: Option<BitStream>,
    pub bmr_after: f64,
    pub transcript: Transcript,
    pub leakage: usize,
    pub final_alice: BitStream,
    pub final_bob: BitStream,
}

impl KeygenReport {
    pub fn keys_match(&self) -> bool {
        self.final_alice == self.final_bob
    }
}

/// Steps 0 to 6 once. Reconciliation and privacy amplification run only when
/// the spec enables them; Cascade is sized from the measured BMR.
pub fn run_keygen_demo(spec: &ExperimentSpec) -> Result<KeygenReport> {
    spec.validate()?;
    if spec.kind != ExperimentKind::Keygen {
        return Err(Error::Config("run_keygen_demo needs kind = \"keygen\"".into()));
    }
    let method = spec.estimator.methods()[0];
    let source = spec
        .sources
        .first()
        .and_then(|s| s.angle_source())
        .unwrap_or(AngleSource::Combined);
    let cfg = spec.pipeline.configs()?[0];
    let snr = spec.snr_db[0];
    let n = spec.samples[0];
    let est = build_estimator(spec, method)?;

    let mobility = if source.needs_elevation() {
        MobilityModel::IidUniform
    } else {
        MobilityModel::IidPlanar
    };
    let truths = mobility.draw(
        spec.pipeline.key_samples,
        derive_seed(spec.seed, &[TAG_KEYGEN, 0]),
    );
    let setup = ObservationSetup {
        convention: spec.pipeline.reference,
        model: model(snr)?,
        samples: n,
        two_dimensional: source.needs_elevation(),
        order: spec.rmse.stage_order,
    };
    let estimates = observe_angles(
        &truths,
        est.as_ref(),
        est.as_ref(),
        &setup,
        derive_seed(spec.seed, &[TAG_KEYGEN, 1]),
    )?;
    let raw = key_pair_from_estimates(&estimates, source, &cfg)?;

    let mut transcript = Transcript::new();
    let (reconciled_bob, bmr_after, final_alice, final_bob) = if spec.reconciliation {
        let session = ReconciliationSession::from_bmr_estimate(
            derive_seed(spec.seed, &[TAG_CASCADE]),
            raw.bmr.min(0.5),
        )?;
        let rec = reconcile(&raw.alice, &raw.bob, &session)?;
        transcript = rec.transcript;
        let bmr_after = crate::pipeline::bit_mismatch_rate(&raw.alice, &rec.corrected)?;
        let leakage = transcript.parity_count();
        if leakage >= raw.alice.len() {
            return Err(Error::invalid(format!(
                "reconciliation disclosed {leakage} parities for a {}-bit key",
                raw.alice.len()
            )));
        }
        let family = HashFunctionFamily::new(raw.alice.len(), raw.alice.len() - leakage)?;
        let index = derive_seed(spec.seed, &[TAG_HASH]);
        transcript.push(TranscriptRecord::HashIndex(index));
        let fa = privacy_amplify(&raw.alice, &family, index)?;
        let fb = privacy_amplify(&rec.corrected, &family, index)?;
        (Some(rec.corrected), bmr_after, fa, fb)
    } else {
        (None, raw.bmr, raw.alice.clone(), raw.bob.clone())
    };
    let leakage = transcript.parity_count();
    Ok(KeygenReport {
        estimator: method,
        source,
        snr_db: snr,
        samples: n,
        pipeline: cfg,
        raw,
        reconciled_bob,
        bmr_after,
        transcript,
        leakage,
        final_alice,
        final_bob,
    })
}
