//! Output files of an experiment run.
//!
//! Every file starts with `#` comment lines holding the master seed and the
//! resolved spec, followed by one CSV header line and the data rows.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::{ExperimentSpec, BMR_THRESHOLD};
use super::runner::{KeygenReport, ResultRow, SpectrumTrace};
use crate::error::Result;

pub const RESULT_COLUMNS: [&str; 16] = [
    "experiment",
    "kind",
    "estimator",
    "source",
    "legend",
    "snr_db",
    "samples",
    "n_quan",
    "n_encod",
    "n_comb",
    "trials",
    "rmse_deg",
    "pfr",
    "bmr_mean",
    "bmr_std",
    "seed",
];

pub const SPECTRUM_COLUMNS: [&str; 6] = [
    "estimator",
    "snr_db",
    "samples",
    "azimuth_deg",
    "power",
    "power_rel_db",
];

pub const KEYGEN_COLUMNS: [&str; 19] = [
    "experiment",
    "estimator",
    "source",
    "snr_db",
    "samples",
    "n_quan",
    "n_encod",
    "n_comb",
    "key_bits",
    "bmr_before",
    "bmr_after",
    "leakage_bits",
    "final_bits",
    "keys_match",
    "alice_key",
    "bob_key",
    "alice_final",
    "bob_final",
    "seed",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fixed(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

/// Comment block written at the top of every output file.
pub fn header_comment(spec: &ExperimentSpec) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("# aoa-keygen {} {}\n", spec.kind.label(), spec.id));
    out.push_str(&format!("# seed = {}\n", spec.seed));
    out.push_str(&format!("# bmr_threshold = {BMR_THRESHOLD}\n"));
    out.push_str("# resolved spec:\n");
    for line in spec.to_toml()?.lines() {
        out.push_str(&format!("#   {line}\n"));
    }
    Ok(out)
}

fn csv_body<I>(header: &[&str], records: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header)?;
    for r in records {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn result_record(row: &ResultRow) -> Vec<String> {
    vec![
        row.experiment.clone(),
        row.kind.label().to_string(),
        row.estimator.clone(),
        row.source.clone(),
        row.legend.clone(),
        format!("{:.2}", row.snr_db),
        opt(row.samples),
        opt(row.pipeline.map(|p| p.n_quan)),
        opt(row.pipeline.map(|p| p.n_encod)),
        opt(row.pipeline.map(|p| p.n_comb)),
        row.trials.to_string(),
        fixed(row.rmse_deg, 4),
        fixed(row.pfr, 4),
        fixed(row.bmr_mean, 6),
        fixed(row.bmr_std, 6),
        row.seed.to_string(),
    ]
}

/// `results.csv` contents for sweep rows.
pub fn results_csv(spec: &ExperimentSpec, rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut out = header_comment(spec)?.into_bytes();
    out.extend(csv_body(&RESULT_COLUMNS, rows.iter().map(result_record))?);
    Ok(out)
}

pub fn spectrum_csv(spec: &ExperimentSpec, traces: &[SpectrumTrace]) -> Result<Vec<u8>> {
    let mut records = Vec::new();
    for t in traces {
        let peak = t.spectrum.power().iter().cloned().fold(0.0, f64::max);
        for (phi, p) in t.spectrum.grid().iter().zip(t.spectrum.power()) {
            let rel = if peak > 0.0 && *p > 0.0 {
                10.0 * (p / peak).log10()
            } else {
                f64::NEG_INFINITY
            };
            records.push(vec![
                t.estimator.label().to_string(),
                format!("{:.2}", t.snr_db),
                t.samples.to_string(),
                format!("{:.1}", phi.to_degrees()),
                format!("{p:.6e}"),
                format!("{rel:.4}"),
            ]);
        }
    }
    let mut out = header_comment(spec)?.into_bytes();
    out.extend(csv_body(&SPECTRUM_COLUMNS, records)?);
    Ok(out)
}

pub fn keygen_csv(spec: &ExperimentSpec, r: &KeygenReport) -> Result<Vec<u8>> {
    let record = vec![
        spec.id.clone(),
        r.estimator.label().to_string(),
        format!("{:?}", r.source).to_lowercase(),
        format!("{:.2}", r.snr_db),
        r.samples.to_string(),
        r.pipeline.n_quan.to_string(),
        r.pipeline.n_encod.to_string(),
        r.pipeline.n_comb.to_string(),
        r.raw.alice.len().to_string(),
        format!("{:.6}", r.raw.bmr),
        format!("{:.6}", r.bmr_after),
        r.leakage.to_string(),
        r.final_alice.len().to_string(),
        r.keys_match().to_string(),
        r.raw.alice.to_hex(),
        r.raw.bob.to_hex(),
        r.final_alice.to_hex(),
        r.final_bob.to_hex(),
        spec.seed.to_string(),
    ];
    let mut out = header_comment(spec)?.into_bytes();
    out.extend(csv_body(&KEYGEN_COLUMNS, [record])?);
    Ok(out)
}

pub fn transcript_log(spec: &ExperimentSpec, r: &KeygenReport) -> Result<Vec<u8>> {
    let mut out = header_comment(spec)?;
    out.push_str(&format!("# leakage_bits = {}\n", r.leakage));
    out.push_str(&r.transcript.to_log());
    Ok(out.into_bytes())
}

/// Human-readable summary printed by the keygen subcommand.
pub fn keygen_summary(r: &KeygenReport) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "estimator {} source {:?} snr {} dB N {}\n",
        r.estimator.label(),
        r.source,
        r.snr_db,
        r.samples
    ));
    s.push_str(&format!("alice key ({} bits): {}\n", r.raw.alice.len(), r.raw.alice.to_hex()));
    s.push_str(&format!("bob key   ({} bits): {}\n", r.raw.bob.len(), r.raw.bob.to_hex()));
    s.push_str(&format!("BMR before reconciliation: {:.4}\n", r.raw.bmr));
    if r.reconciled_bob.is_some() {
        s.push_str(&format!("BMR after reconciliation:  {:.4}\n", r.bmr_after));
        s.push_str(&format!(
            "transcript: {} records, {} parity bits leaked, {} corrections\n",
            r.transcript.records().len(),
            r.leakage,
            r.transcript.corrections().len()
        ));
    }
    s.push_str(&format!("alice final ({} bits): {}\n", r.final_alice.len(), r.final_alice.to_hex()));
    s.push_str(&format!("bob final   ({} bits): {}\n", r.final_bob.len(), r.final_bob.to_hex()));
    s.push_str(if r.keys_match() {
        "keys match\n"
    } else {
        "keys differ\n"
    });
    s
}

/// Writes `bytes` to `dir/name`, creating `dir`.
pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = fs::File::create(&path)?;
    f.write_all(bytes)?;
    Ok(path)
}
