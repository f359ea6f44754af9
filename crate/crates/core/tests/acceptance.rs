//! Acceptance run: every criterion prints one PASS/FAIL line with the values
//! it measured. The process exits non-zero if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;

use aoa_keygen::array::{AngleOfArrival, SignalModel};
use aoa_keygen::estimators::{
    eigendecompose, AoaEstimator, CovarianceMatrix, MusicEstimator, XsbsEstimator,
};
use aoa_keygen::experiment::{
    run_bmr_sweep, run_rmse_sweep, run_spectrum, ExperimentSpec, ResultRow, BMR_THRESHOLD,
};
use aoa_keygen::pipeline::{
    bit_mismatch_rate, generate_key_pair, AngleSource, BitStream, MobilityModel, PipelineConfig,
    Provenance, ReferenceConvention,
};
use aoa_keygen::rng::{derive_seed, rng_from_seed};
use aoa_keygen::secrecy::{reconcile, HashFunctionFamily, ReconciliationSession};
use nalgebra::DMatrix;
use num_complex::Complex64;

const SEED: u64 = 2024;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn spec(text: &str) -> ExperimentSpec {
    ExperimentSpec::from_toml(text).expect("acceptance spec parses")
}

fn cell<'a>(rows: &'a [ResultRow], estimator: &str, source: &str, snr: f64) -> Vec<&'a ResultRow> {
    rows.iter()
        .filter(|r| r.estimator == estimator && r.source == source && r.snr_db == snr)
        .collect()
}

fn rmse(rows: &[ResultRow], estimator: &str, snr: f64, n: usize) -> f64 {
    rows.iter()
        .find(|r| r.estimator == estimator && r.snr_db == snr && r.samples == Some(n))
        .and_then(|r| r.rmse_deg)
        .expect("cell present")
}

fn bmr(rows: &[ResultRow], estimator: &str, source: &str, snr: f64) -> f64 {
    cell(rows, estimator, source, snr)[0].bmr_mean.expect("bmr present")
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; 0 when either side is constant.
fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

fn azimuth_rmse_table() -> Outcome {
    let rows = run_rmse_sweep(&spec(&format!(
        r#"
id = "c1"
kind = "rmse"
snr_db = [-10, -20, -30]
samples = [100, 1000, 2000]
seed = {SEED}
"#
    )))
    .unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for est in ["MUSIC", "XSBS"] {
        for snr in [-10.0, -20.0, -30.0] {
            for n in [100, 1000, 2000] {
                let v = rmse(&rows, est, snr, n);
                detail.push_str(&format!("{est}@{snr}dB/N{n}={v:.2} "));
                if snr == -10.0 {
                    pass &= v <= 2.0;
                }
                if snr == -30.0 {
                    pass &= v >= 50.0;
                }
            }
        }
    }
    pass &= rmse(&rows, "XSBS", -20.0, 1000) <= 2.0;
    pass &= rmse(&rows, "MUSIC", -20.0, 1000) >= 15.0;
    Outcome { pass, detail }
}

fn elevation_rmse() -> Outcome {
    let rows = run_rmse_sweep(&spec(&format!(
        r#"
id = "c2"
kind = "rmse"
snr_db = [-20]
samples = [1000]
seed = {SEED}
[rmse]
angle = "elevation"
"#
    )))
    .unwrap();
    let music = rmse(&rows, "MUSIC", -20.0, 1000);
    let xsbs = rmse(&rows, "XSBS", -20.0, 1000);
    Outcome {
        pass: (3.0..=16.0).contains(&music) && xsbs <= 2.0,
        detail: format!("MUSIC={music:.2} (want 3..16) XSBS={xsbs:.2} (want <=2)"),
    }
}

fn pfr_ordering() -> Outcome {
    let out = run_spectrum(&spec(&format!(
        r#"
id = "c3"
kind = "spectrum"
snr_db = [-15]
samples = [100, 1000, 2000]
seed = {SEED}
"#
    )))
    .unwrap();
    let pfr = |est: &str, n: usize| {
        out.rows
            .iter()
            .find(|r| r.estimator == est && r.samples == Some(n))
            .and_then(|r| r.pfr)
            .unwrap()
    };
    let ns = [100, 1000, 2000];
    let music: Vec<f64> = ns.iter().map(|&n| pfr("MUSIC", n)).collect();
    let xsbs: Vec<f64> = ns.iter().map(|&n| pfr("XSBS", n)).collect();
    let pass = music.windows(2).all(|w| w[1] > w[0])
        && music.iter().zip(&xsbs).all(|(m, x)| x > m)
        && music[2] >= 6.0
        && xsbs[2] >= 12.0;
    Outcome {
        pass,
        detail: format!("MUSIC={music:.2?} XSBS={xsbs:.2?}"),
    }
}

/// Lowest SNR down to which every point from the top of `snrs` meets the
/// threshold.
fn crossover(rows: &[ResultRow], est: &str, snrs: &[f64]) -> Option<f64> {
    let mut last = None;
    for &s in snrs {
        if bmr(rows, est, "combined", s) <= BMR_THRESHOLD {
            last = Some(s);
        } else {
            break;
        }
    }
    last
}

fn operating_range() -> Outcome {
    let sweep = |est: &str, snrs: &[f64]| {
        let list: Vec<String> = snrs.iter().map(|s| s.to_string()).collect();
        run_bmr_sweep(&spec(&format!(
            r#"
id = "c4"
kind = "bmr"
estimator = "{est}"
snr_db = [{}]
samples = [1000]
seed = {SEED}
sources = ["combined"]
[pipeline]
n_quan = 7
n_encod = 2
n_comb = 2
"#,
            list.join(", ")
        )))
        .unwrap()
    };
    let music_snrs: Vec<f64> = (13..=21).map(|s| -(s as f64)).collect();
    let xsbs_snrs: Vec<f64> = (23..=31).map(|s| -(s as f64)).collect();
    let mut music_grid = music_snrs.clone();
    music_grid.push(-30.0);
    let music = sweep("music", &music_grid);
    let xsbs = sweep("xsbs", &xsbs_snrs);

    let m15 = bmr(&music, "MUSIC", "combined", -15.0);
    let m30 = bmr(&music, "MUSIC", "combined", -30.0);
    let x25 = bmr(&xsbs, "XSBS", "combined", -25.0);
    let x30 = bmr(&xsbs, "XSBS", "combined", -30.0);
    let mc = crossover(&music, "MUSIC", &music_snrs);
    let xc = crossover(&xsbs, "XSBS", &xsbs_snrs);
    let pass = m15 <= BMR_THRESHOLD
        && x25 <= BMR_THRESHOLD
        && m30 > BMR_THRESHOLD
        && x30 > BMR_THRESHOLD
        && mc.is_some_and(|c| (-20.0..=-14.0).contains(&c))
        && xc.is_some_and(|c| (-30.0..=-24.0).contains(&c));
    Outcome {
        pass,
        detail: format!(
            "MUSIC@-15={m15:.4} MUSIC@-30={m30:.4} XSBS@-25={x25:.4} XSBS@-30={x30:.4} \
             crossover MUSIC={mc:?} (want -20..-14) XSBS={xc:?} (want -30..-24)"
        ),
    }
}

fn baseline_separation() -> Outcome {
    let rows = run_bmr_sweep(&spec(&format!(
        r#"
id = "c5"
kind = "bmr"
snr_db = [-15]
samples = [1000]
seed = {SEED}
sources = ["amplitude", "phase", "azimuth"]
[pipeline]
n_quan = 7
n_encod = 2
n_comb = 2
"#
    )))
    .unwrap();
    let amp = bmr(&rows, "channel", "amplitude", -15.0);
    let phase = bmr(&rows, "channel", "phase", -15.0);
    let music = bmr(&rows, "MUSIC", "azimuth", -15.0);
    let xsbs = bmr(&rows, "XSBS", "azimuth", -15.0);
    Outcome {
        pass: amp > BMR_THRESHOLD
            && phase > BMR_THRESHOLD
            && music <= BMR_THRESHOLD
            && xsbs <= BMR_THRESHOLD,
        detail: format!(
            "amplitude={amp:.4} phase={phase:.4} azimuth MUSIC={music:.4} XSBS={xsbs:.4}"
        ),
    }
}

fn parameter_trends() -> Outcome {
    let sweep = |pipeline: &str| {
        run_bmr_sweep(&spec(&format!(
            r#"
id = "c6"
kind = "bmr"
estimator = "xsbs"
snr_db = [-20]
samples = [1000]
seed = {SEED}
sources = ["azimuth", "elevation", "combined"]
[pipeline]
{pipeline}
"#
        )))
        .unwrap()
    };
    // (parameter, sweep, required sign of the rank correlation)
    let cases = [
        ("n_quan", "n_quan = [6, 7, 8, 9]\nn_encod = 2\nn_comb = 5", 1.0),
        ("n_encod", "n_quan = 7\nn_encod = [1, 2, 3, 4]\nn_comb = 5", -1.0),
        ("n_comb", "n_quan = 7\nn_encod = 2\nn_comb = [3, 4, 5, 6]", -1.0),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (name, pipeline, sign) in cases {
        let rows = sweep(pipeline);
        let param = |cfg: &PipelineConfig| match name {
            "n_quan" => cfg.n_quan,
            "n_encod" => cfg.n_encod,
            _ => cfg.n_comb,
        } as f64;
        for source in ["combined", "azimuth", "elevation"] {
            let points: Vec<(f64, f64)> = cell(&rows, "XSBS", source, -20.0)
                .iter()
                .map(|r| (param(&r.pipeline.unwrap()), r.bmr_mean.unwrap()))
                .collect();
            let (x, y): (Vec<f64>, Vec<f64>) = points.iter().cloned().unzip();
            let rho = spearman(&x, &y);
            if source == "combined" {
                pass &= rho * sign >= 0.0;
                let ys: Vec<String> = y.iter().map(|v| format!("{v:.4}")).collect();
                detail.push_str(&format!("{name}: combined [{}] rho={rho:.2}", ys.join(" ")));
            } else {
                detail.push_str(&format!(" {source} rho={rho:.2}"));
            }
        }
        detail.push_str("; ");
    }
    Outcome { pass, detail }
}

fn random_hermitian_psd(rng: &mut impl Rng, m: usize) -> DMatrix<Complex64> {
    let rank = rng.random_range(1..=m);
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    let b = DMatrix::from_fn(m, rank, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
    });
    let r = &b * b.adjoint();
    (&r + r.adjoint()) * Complex64::new(0.5, 0.0)
}

fn property_suite() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut check = |ok: bool, note: String| {
        pass &= ok;
        notes.push(format!("{}{}", if ok { "" } else { "!" }, note));
    };

    // noiseless end to end
    let music = MusicEstimator::with_defaults().unwrap();
    let xsbs = XsbsEstimator::with_defaults().unwrap();
    let cfg = PipelineConfig::new(7, 2, 2).unwrap();
    let mut worst = 0.0f64;
    for (i, est) in [&music as &dyn AoaEstimator, &xsbs].into_iter().enumerate() {
        for source in [AngleSource::Azimuth, AngleSource::Elevation, AngleSource::Combined] {
            let mobility = if source.needs_elevation() {
                MobilityModel::IidUniform
            } else {
                MobilityModel::IidPlanar
            };
            let truths = mobility.draw(64, derive_seed(SEED, &[70, i as u64]));
            let kp = generate_key_pair(
                &truths,
                est,
                est,
                ReferenceConvention::SharedReference,
                source,
                &cfg,
                &SignalModel::noiseless(),
                1000,
                SEED,
            )
            .unwrap();
            worst = worst.max(kp.bmr);
        }
    }
    check(worst == 0.0, format!("noiseless BMR max={worst}"));

    // independent random streams
    let mut rng = rng_from_seed(derive_seed(SEED, &[71]));
    let a: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2u8)).collect();
    let b: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2u8)).collect();
    let rand_bmr = bit_mismatch_rate(
        &BitStream::from_bits(a, Provenance::Combined).unwrap(),
        &BitStream::from_bits(b, Provenance::Combined).unwrap(),
    )
    .unwrap();
    check((rand_bmr - 0.5).abs() <= 0.03, format!("random BMR={rand_bmr:.4}"));

    // Cascade at 10% mismatch
    let mut corrected = 0;
    for run in 0..200u64 {
        let mut rng = rng_from_seed(derive_seed(SEED, &[72, run]));
        let alice: Vec<u8> = (0..512).map(|_| rng.random_range(0..2u8)).collect();
        let mut bob = alice.clone();
        for i in sample(&mut rng, 512, 51) {
            bob[i] ^= 1;
        }
        let session =
            ReconciliationSession::from_bmr_estimate(derive_seed(SEED, &[73, run]), 0.1).unwrap();
        let out = reconcile(
            &BitStream::from_bits(alice.clone(), Provenance::Combined).unwrap(),
            &BitStream::from_bits(bob, Provenance::Combined).unwrap(),
            &session,
        )
        .unwrap();
        corrected += (out.corrected.bits() == alice.as_slice()) as usize;
    }
    check(corrected >= 190, format!("cascade fully corrected {corrected}/200"));

    // hash collisions, 8-bit outputs
    let family = HashFunctionFamily::new(64, 8).unwrap();
    let mut rng = rng_from_seed(derive_seed(SEED, &[74]));
    let mut collisions = 0;
    for _ in 0..10_000 {
        let x: Vec<u8> = (0..64).map(|_| rng.random_range(0..2u8)).collect();
        let mut y = x.clone();
        while y == x {
            y = (0..64).map(|_| rng.random_range(0..2u8)).collect();
        }
        let index: u64 = rng.random();
        collisions += (family.apply(&x, index).unwrap() == family.apply(&y, index).unwrap()) as usize;
    }
    let rate = collisions as f64 / 10_000.0;
    check(rate <= 2.0 / 256.0, format!("hash collisions={rate:.4}"));

    // eigendecomposition reconstruction
    let mut rng = rng_from_seed(derive_seed(SEED, &[75]));
    let mut worst_rel = 0.0f64;
    for _ in 0..1000 {
        let m = rng.random_range(2..=16);
        let r = random_hermitian_psd(&mut rng, m);
        let cov = CovarianceMatrix::from_matrix(r.clone(), 1).unwrap();
        let d = eigendecompose(&cov, 1).unwrap();
        worst_rel = worst_rel.max((d.reconstruct() - &r).norm() / r.norm());
    }
    check(worst_rel <= 1e-8, format!("eig rel err max={worst_rel:.2e}"));

    // noiseless argmax on every grid angle
    let mut misses = 0;
    for est in [&music as &dyn AoaEstimator, &xsbs] {
        for deg in 0..360 {
            let truth = AngleOfArrival::azimuth_only((deg as f64).to_radians());
            let e = est
                .estimate_azimuth(&truth, &SignalModel::noiseless(), 100, deg)
                .unwrap();
            misses += ((e.degrees().round() as i64).rem_euclid(360) != deg as i64) as usize;
        }
    }
    check(misses == 0, format!("noiseless argmax misses={misses}/720"));

    Outcome {
        pass,
        detail: notes.join(" "),
    }
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_aoa-keygen");
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let runs = [
        ("spectrum", "spectrum", "3"),
        ("rmse", "azimuth-rmse", "3"),
        ("rmse", "elevation-rmse", "3"),
        ("bmr", "bmr-combining", "2"),
        ("keygen", "keygen", "1"),
    ];
    let mut pass = true;
    let mut compared = 0;
    for (cmd, id, trials) in runs {
        let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
        for (k, dir) in dirs.iter().enumerate() {
            let status = Command::new(bin)
                .args([cmd, "--config"])
                .arg(configs.join(format!("{id}.toml")))
                .args(["--trials", trials, "--parallel", if k == 0 { "1" } else { "2" }])
                .arg("--out")
                .arg(dir.path())
                .output()
                .unwrap();
            pass &= status.status.success();
        }
        let first = dirs[0].path().join(id);
        let Ok(entries) = std::fs::read_dir(&first) else {
            pass = false;
            continue;
        };
        for entry in entries {
            let name = entry.unwrap().file_name();
            let a = std::fs::read(first.join(&name)).unwrap();
            let b = std::fs::read(dirs[1].path().join(id).join(&name)).unwrap_or_default();
            pass &= a == b;
            compared += 1;
        }
    }
    Outcome {
        pass,
        detail: format!("{compared} files compared across reruns with 1 and 2 threads"),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("azimuth RMSE table", azimuth_rmse_table),
        ("elevation RMSE", elevation_rmse),
        ("PFR ordering and magnitude", pfr_ordering),
        ("operating range", operating_range),
        ("baseline separation", baseline_separation),
        ("parameter trends", parameter_trends),
        ("pipeline and protocol properties", property_suite),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        failed += !out.pass as usize;
        println!(
            "criterion {} {}: {} [{:.1}s] {}",
            i + 1,
            name,
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
