//! Experiment harness: TOML specs, Monte Carlo sweeps and CSV output.

pub mod config;
pub mod output;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::{
    EstimatorChoice, ExperimentKind, ExperimentSpec, KeySource, OneOrMany, PipelineSweep,
    RmseAngle, BMR_THRESHOLD,
};
pub use runner::{
    run_bmr_sweep, run_keygen_demo, run_rmse_sweep, run_spectrum, KeygenReport, ResultRow,
    SpectrumOutput, SpectrumTrace,
};

use crate::error::Result;

/// What a run left on disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub directory: PathBuf,
    pub files: Vec<PathBuf>,
    /// Text for the terminal (keygen only).
    pub summary: Option<String>,
}

/// Runs `spec` and writes its files under `out/<id>/`.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path) -> Result<RunOutput> {
    spec.validate()?;
    let dir = out.join(&spec.id);
    let mut files = Vec::new();
    let mut summary = None;
    match spec.kind {
        ExperimentKind::Rmse => {
            let rows = run_rmse_sweep(spec)?;
            files.push(output::write_file(&dir, "results.csv", &output::results_csv(spec, &rows)?)?);
        }
        ExperimentKind::Bmr => {
            let rows = run_bmr_sweep(spec)?;
            files.push(output::write_file(&dir, "results.csv", &output::results_csv(spec, &rows)?)?);
        }
        ExperimentKind::Spectrum => {
            let res = run_spectrum(spec)?;
            files.push(output::write_file(
                &dir,
                "results.csv",
                &output::results_csv(spec, &res.rows)?,
            )?);
            files.push(output::write_file(
                &dir,
                "spectrum.csv",
                &output::spectrum_csv(spec, &res.traces)?,
            )?);
        }
        ExperimentKind::Keygen => {
            let report = run_keygen_demo(spec)?;
            files.push(output::write_file(
                &dir,
                "results.csv",
                &output::keygen_csv(spec, &report)?,
            )?);
            files.push(output::write_file(
                &dir,
                "transcript.log",
                &output::transcript_log(spec, &report)?,
            )?);
            summary = Some(output::keygen_summary(&report));
        }
    }
    let resolved = format!("# seed = {}\n{}", spec.seed, spec.to_toml()?);
    files.push(output::write_file(&dir, "spec.resolved", resolved.as_bytes())?);
    Ok(RunOutput {
        directory: dir,
        files,
        summary,
    })
}
