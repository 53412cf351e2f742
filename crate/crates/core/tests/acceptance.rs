//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::time::Instant;

use coprguard_core::artifact::canonical_hash;
use coprguard_core::channel::{apply_channel, build_mixed_set, forward_diffuse, ChannelSpec, MixPlan, NoiseSchedule};
use coprguard_core::detect::{
    audit, calibrate, hypothesis_test, load_suspects, t_quantile, CalibrateOptions, CalibrationRecord, DetectionReport, TestConfig,
    Verdict,
};
use coprguard_core::imagecore::{psnr, save_image, ssim, DatasetManifest, ImageFormat, Label, ManifestEntry};
use coprguard_core::spectral::{compare_spectra, CorpusAccumulator, CorpusSpectrum, RapsdProfile, TransformTag};
use coprguard_core::synth::{default_watermark, natural_image, noise_image};
use coprguard_core::watermark::{derive_seed, embed, extract, fit_enhancement, ExtractOptions, WatermarkKey};
use coprguard_core::Image;
use rayon::prelude::*;
use serde_json::{json, Value};

const SIZE: usize = 128;
const KEY_SEED: u64 = 0xC0FF_EE00_2024;
const MIX_SEED: u64 = 77;
const CROP_SEARCH: [f64; 3] = [0.9, 0.8, 0.7];

struct Outcome {
    pass: bool,
    detail: String,
    artifact: Value,
}

fn key() -> WatermarkKey {
    WatermarkKey::with_defaults(default_watermark(64), KEY_SEED).unwrap()
}

/// What an image looks like after 8-bit storage.
fn stored(img: &Image) -> Image {
    let data = img.data().iter().map(|v| (v * 255.0).round() / 255.0).collect();
    Image::new(img.height(), img.width(), img.channels(), data).unwrap()
}

fn natural_set(base: u64, n: usize) -> Vec<(String, Image)> {
    (0..n)
        .into_par_iter()
        .map(|i| (format!("n{:06}", base + i as u64), stored(&natural_image(base + i as u64, SIZE, SIZE))))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn search_options() -> ExtractOptions {
    ExtractOptions { orientation_search: true, crop_search: CROP_SEARCH.to_vec() }
}

fn criterion_1() -> Outcome {
    let mut r = common::rng(1);
    let mut worst = [0.0f64; 7];
    for trial in 0..3 {
        for h in 4..=16 {
            for w in 4..=16 {
                if trial > 0 && (h + w) % 3 != 0 {
                    continue;
                }
                let e = common::transform_errors(&common::random_gray(&mut r, h, w));
                for (slot, v) in worst.iter_mut().zip([e.dft, e.dct, e.haar, e.haar_recon, e.parseval_dft, e.parseval_dct, e.parseval_haar]) {
                    *slot = slot.max(v);
                }
            }
        }
    }
    let [dft, dct, haar, recon, p1, p2, p3] = worst;
    let parseval = p1.max(p2).max(p3);
    Outcome {
        pass: dft <= 1e-9 && dct <= 1e-9 && haar <= 1e-9 && recon <= 1e-12 && parseval <= 1e-9,
        detail: format!("max err dft {dft:.1e}, dct {dct:.1e}, haar {haar:.1e}, haar recon {recon:.1e}, parseval {parseval:.1e}"),
        artifact: Value::Null,
    }
}

fn criterion_2() -> Outcome {
    use common as oracle;
    let mut worst = 0.0f64;
    let mut signs = true;
    for (i, &n) in oracle::GRID_N.iter().enumerate() {
        for (j, &p_u) in oracle::GRID_PU.iter().enumerate() {
            for (k, &p_c) in [0.0, 0.02].iter().enumerate() {
                let out = hypothesis_test(p_u, n, &TestConfig { p_c, ..TestConfig::default() }).unwrap();
                let want = oracle::GRID[i][j][k];
                worst = worst.max((out.statistic - want).abs());
                signs &= out.reject_h0 == (want > 0.0);
            }
        }
    }
    let cfg = TestConfig::default();
    let a = hypothesis_test(0.2, 100, &cfg).unwrap();
    let b = hypothesis_test(0.05, 100, &cfg).unwrap();
    let t99 = t_quantile(0.95, 99).unwrap();
    let worked = (a.statistic - 0.828).abs() < 1e-3 && a.reject_h0 && (b.statistic + 0.362).abs() < 1e-3 && !b.reject_h0;
    Outcome {
        pass: worst <= 1e-4 && signs && worked,
        detail: format!(
            "grid max |err| {worst:.1e}; N=100 cases {:+.4} / {:+.4}; t(0.95, 99) = {t99:.6}",
            a.statistic, b.statistic
        ),
        artifact: Value::Null,
    }
}

fn criterion_3(dir: &Path) -> Outcome {
    let key = key();
    let rows: Vec<(f64, f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let original = stored(&natural_image(30_000 + i, SIZE, SIZE));
            let path = dir.join(format!("c3_{i}.png"));
            save_image(&embed(&original, &key).unwrap(), &path, ImageFormat::Png).unwrap();
            let marked = coprguard_core::imagecore::load_image(&path).unwrap();
            let cos = extract(&marked, &key, None, &ExtractOptions::default()).unwrap().cos;
            (cos, psnr(&original, &marked).unwrap(), ssim(&original, &marked).unwrap())
        })
        .collect();
    let cos: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let ps: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let ss: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let (c, p, s) = (mean(&cos), mean(&ps), mean(&ss));
    Outcome {
        pass: c >= 0.99 && p >= 34.0 && s >= 0.95,
        detail: format!("mean cos {c:.4}, PSNR {p:.2} dB, SSIM {s:.4} (min cos {:.4})", cos.iter().cloned().fold(1.0, f64::min)),
        artifact: json!({"cos": cos, "psnr": ps, "ssim": ss}),
    }
}

fn calibration(options: ExtractOptions) -> CalibrationRecord {
    let clean = natural_set(100_000, 1000);
    calibrate(&clean, &key(), "natural-100000", &CalibrateOptions { extraction: options, seed: KEY_SEED, ..Default::default() }).unwrap()
}

/// A report as it is hashed when written on its own.
fn report_value(r: &DetectionReport) -> Value {
    let mut v = serde_json::to_value(r).unwrap();
    v.as_object_mut().unwrap().remove(coprguard_core::artifact::TIMESTAMPS_FIELD);
    v
}

fn criterion_4(calib: &CalibrationRecord) -> Outcome {
    let suspects = natural_set(200_000, 1000);
    let r = audit(&suspects, &key(), calib, &TestConfig::default(), None, &calib.extraction).unwrap();
    let worst = r.per_image.iter().map(|d| d.cos).fold(f64::MIN, f64::max);
    Outcome {
        pass: r.flagged() == 0 && r.p_u == 0.0 && r.decision == Verdict::NotInfringing,
        detail: format!(
            "gamma {:.4}, tau {:.4}; held-out max cos {worst:.4}; flags {}, P_u {}, {:?}",
            calib.gamma,
            calib.tau,
            r.flagged(),
            r.p_u,
            r.decision
        ),
        artifact: json!({"calibration": calib, "report": report_value(&r)}),
    }
}

fn clean_pool(dir: &Path) -> DatasetManifest {
    let pool_dir = dir.join("pool");
    std::fs::create_dir_all(&pool_dir).unwrap();
    let entries: Vec<ManifestEntry> = natural_set(300_000, 300)
        .into_par_iter()
        .map(|(id, img)| {
            save_image(&img, pool_dir.join(format!("{id}.png")), ImageFormat::Png).unwrap();
            ManifestEntry::new(id.clone(), format!("{id}.png"), Some(Label::Clean))
        })
        .collect();
    let mut m = DatasetManifest::new(None, entries).unwrap();
    m.set_base_dir(&pool_dir);
    m
}

fn mixed_audit(pool: &DatasetManifest, dir: &Path, tag: &str, r: f64, channel: &str, calib: &CalibrationRecord) -> (DetectionReport, usize) {
    let plan = MixPlan::new(r, 300, channel.parse().unwrap(), MIX_SEED).unwrap();
    let mixed = build_mixed_set(pool, &key(), &plan, &dir.join(tag)).unwrap();
    let realized = mixed.meta["realized_watermarked"].as_u64().unwrap() as usize;
    let suspects = load_suspects(&mixed).unwrap();
    let report = audit(&suspects, &key(), calib, &TestConfig::default(), None, &calib.extraction).unwrap();
    (report, realized)
}

fn criterion_5(pool: &DatasetManifest, dir: &Path, calib: &CalibrationRecord) -> Outcome {
    let ratios = [0.0, 0.1, 0.25, 0.5, 1.0];
    let runs: Vec<(f64, DetectionReport, usize)> = ratios
        .iter()
        .map(|&r| {
            let (rep, realized) = mixed_audit(pool, dir, &format!("mix_r{r}"), r, "identity", calib);
            (r, rep, realized)
        })
        .collect();
    let pu: Vec<f64> = runs.iter().map(|r| r.1.p_u).collect();
    let increasing = pu.windows(2).all(|w| w[1] > w[0]);
    let verdicts_ok = runs.iter().all(|(r, rep, _)| (rep.decision == Verdict::Infringing) == (*r >= 0.1));
    let pass = increasing && pu[0] == 0.0 && pu[4] >= 0.99 && verdicts_ok;
    let detail = runs
        .iter()
        .map(|(r, rep, realized)| format!("R={r}: P_u {:.3} ({realized} marked, stat {:+.3})", rep.p_u, rep.statistic))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome {
        pass,
        detail,
        artifact: Value::Array(runs.iter().map(|(r, rep, n)| json!({"R": r, "realized": n, "report": report_value(rep)})).collect()),
    }
}

const ROBUSTNESS: [&str; 9] = ["rot:90", "rot:180", "flip:h", "flip:v", "jpeg:70", "jpeg:50", "noise:0.05", "blur:7:0.5", "crop:0.8"];

fn criterion_6(pool: &DatasetManifest, dir: &Path) -> Outcome {
    let calib = calibration(search_options());
    let mut pass = true;
    let mut parts = vec![format!("tau {:.4}", calib.tau)];
    let mut arts = vec![json!({"calibration": calib})];
    for (i, ch) in ROBUSTNESS.iter().enumerate() {
        let (rep, _) = mixed_audit(pool, dir, &format!("robust_{i}"), 1.0, ch, &calib);
        pass &= rep.decision == Verdict::Infringing;
        parts.push(format!("{ch} {:.3}{}", rep.p_u, if rep.decision == Verdict::Infringing { "" } else { " (not infringing)" }));
        arts.push(json!({"channel": ch, "report": report_value(&rep)}));
    }
    Outcome { pass, detail: format!("P_u: {}", parts.join(", ")), artifact: Value::Array(arts) }
}

fn criterion_7() -> Outcome {
    let key = key();
    let ae: ChannelSpec = "ae:8".parse().unwrap();
    let pair = |seed: u64| {
        let pristine = stored(&embed(&stored(&natural_image(seed, SIZE, SIZE)), &key).unwrap());
        let degraded = stored(&apply_channel(&pristine, &ae, derive_seed(&[seed, 7])).unwrap());
        (degraded, pristine)
    };
    let train: Vec<(Image, Image)> = (0..64u64).into_par_iter().map(|i| pair(400_000 + i)).collect();
    let filter = fit_enhancement(&train, &key, "ae8-train").unwrap();
    let opts = ExtractOptions::default();
    let scores: Vec<(f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let (degraded, _) = pair(410_000 + i);
            (
                extract(&degraded, &key, None, &opts).unwrap().cos,
                extract(&degraded, &key, Some(&filter), &opts).unwrap().cos,
            )
        })
        .collect();
    let without = mean(&scores.iter().map(|s| s.0).collect::<Vec<_>>());
    let with = mean(&scores.iter().map(|s| s.1).collect::<Vec<_>>());
    Outcome {
        pass: with >= without,
        detail: format!(
            "held-out mean cos with filter {with:.5}, without {without:.5}; filter {}",
            if filter.discarded { "discarded (no training benefit)" } else { "active" }
        ),
        artifact: json!({"filter": filter, "with": with, "without": without}),
    }
}

const C8_KINDS: [TransformTag; 3] = [TransformTag::Dft, TransformTag::Dct, TransformTag::CA];

/// Corpus means computed in fixed chunks so only one chunk of images is
/// alive at a time.
fn streamed_means(range: std::ops::Range<u64>, make: fn(u64) -> Image) -> Vec<CorpusSpectrum> {
    let starts: Vec<u64> = range.clone().step_by(50).collect();
    let partial: Vec<Vec<CorpusAccumulator>> = starts
        .par_iter()
        .map(|&s| {
            let mut acc: Vec<CorpusAccumulator> = C8_KINDS.iter().map(|&k| CorpusAccumulator::new(k)).collect();
            for seed in s..(s + 50).min(range.end) {
                let img = make(seed);
                for a in &mut acc {
                    a.push(&img).unwrap();
                }
            }
            acc
        })
        .collect();
    let mut total: Vec<CorpusAccumulator> = C8_KINDS.iter().map(|&k| CorpusAccumulator::new(k)).collect();
    for chunk in partial {
        for (t, a) in total.iter_mut().zip(chunk) {
            t.merge(a).unwrap();
        }
    }
    total.into_iter().map(|a| a.finish().unwrap()).collect()
}

fn as_map(v: Vec<CorpusSpectrum>) -> std::collections::BTreeMap<TransformTag, CorpusSpectrum> {
    v.into_iter().map(|s| (s.kind, s)).collect()
}

fn criterion_8() -> Outcome {
    let natural = |s: u64| natural_image(s, SIZE, SIZE);
    let noise = |s: u64| noise_image(s, SIZE, SIZE);
    let a = as_map(streamed_means(600_000..601_000, natural));
    let b = as_map(streamed_means(601_000..602_000, natural));
    let n = as_map(streamed_means(700_000..701_000, noise));
    let split = compare_spectra("natural-a", &a, "natural-b", &b).unwrap();
    let cross = compare_spectra("natural-a", &a, "noise", &n).unwrap();
    let (sd, sc, sa) = (split.cos.dft.unwrap(), split.cos.dct.unwrap(), split.cos.ca.unwrap());
    let xd = cross.cos.dft.unwrap();
    Outcome {
        pass: sd >= 0.99 && sc >= 0.99 && sa >= 0.99 && sd - xd >= 0.05,
        detail: format!("self-split cos dft {sd:.5}, dct {sc:.5}, cA {sa:.5}; natural vs noise dft {xd:.5}"),
        artifact: json!({"self_split": split, "natural_vs_noise": cross}),
    }
}

fn criterion_9() -> Outcome {
    let sched = NoiseSchedule::default();
    let steps = [0usize, 250, 500, 750, 1000];
    let images: Vec<Image> = (0..50u64).into_par_iter().map(|i| natural_image(800_000 + i, SIZE, SIZE)).collect();
    let flatness: Vec<f64> = steps
        .iter()
        .map(|&t| {
            let profiles: Vec<RapsdProfile> = images
                .par_iter()
                .enumerate()
                .map(|(i, img)| {
                    let x = forward_diffuse(img, t, &sched, derive_seed(&[i as u64, t as u64])).unwrap();
                    coprguard_core::spectral::rapsd(&coprguard_core::imagecore::to_grayscale(&x)).unwrap()
                })
                .collect();
            RapsdProfile::mean(&profiles).unwrap().flatness(2)
        })
        .collect();
    let monotone = flatness.windows(2).all(|w| w[1] <= w[0]);
    Outcome {
        pass: monotone && flatness[4] <= 1.5,
        detail: format!(
            "mean-profile flatness {}",
            steps.iter().zip(&flatness).map(|(t, f)| format!("t={t}: {f:.3}")).collect::<Vec<_>>().join(", ")
        ),
        artifact: json!({"steps": steps, "flatness": flatness}),
    }
}

/// Criteria 3 to 9, in order, with their artifacts.
fn run_pipeline(dir: &Path) -> Vec<(usize, &'static str, Outcome, f64)> {
    let mut out = Vec::new();
    let mut timed = |n, name, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        out.push((n, name, o, t.elapsed().as_secs_f64()));
    };
    timed(3, "roundtrip and quality band", &mut || criterion_3(dir));
    let calib = calibration(ExtractOptions::default());
    timed(4, "calibrated zero false positives", &mut || criterion_4(&calib));
    let pool = clean_pool(dir);
    timed(5, "monotone P_u versus R", &mut || criterion_5(&pool, dir, &calib));
    timed(6, "robustness suite", &mut || criterion_6(&pool, dir));
    timed(7, "enhancement filter benefit", &mut criterion_7);
    timed(8, "spectral signature properties", &mut criterion_8);
    timed(9, "forward-diffusion spectral flattening", &mut criterion_9);
    out
}

fn line(n: usize, name: &str, pass: bool, detail: &str, secs: f64) {
    println!("{} criterion {n:>2} ({name}): {detail} [{secs:.1}s]", if pass { "PASS" } else { "FAIL" });
}

fn main() {
    let mut all = true;
    for (n, name, f) in [(1, "transform oracles", criterion_1 as fn() -> Outcome), (2, "hypothesis-test oracle", criterion_2)] {
        let t = Instant::now();
        let o = f();
        line(n, name, o.pass, &o.detail, t.elapsed().as_secs_f64());
        all &= o.pass;
    }

    let first_dir = tempfile::tempdir().unwrap();
    let first = run_pipeline(first_dir.path());
    drop(first_dir);
    for (n, name, o, secs) in &first {
        line(*n, name, o.pass, &o.detail, *secs);
        all &= o.pass;
    }

    let t = Instant::now();
    let second_dir = tempfile::tempdir().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let second = pool.install(|| run_pipeline(second_dir.path()));
    let mismatched: Vec<usize> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| canonical_hash(&a.2.artifact) != canonical_hash(&b.2.artifact))
        .map(|(a, _)| a.0)
        .collect();
    let pass = mismatched.is_empty();
    let detail = if pass {
        format!("criteria 3-9 rerun on a 3-thread pool, all {} artifact hashes identical", first.len())
    } else {
        format!("artifact hashes differ for criteria {mismatched:?}")
    };
    line(10, "determinism", pass, &detail, t.elapsed().as_secs_f64());
    all &= pass;

    if !all {
        std::process::exit(1);
    }
}
