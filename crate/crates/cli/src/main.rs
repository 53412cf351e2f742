mod cli;
mod exit;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use coprguard_core::artifact::{read_json, write_json, Provenance};
use coprguard_core::channel::{apply_channel, build_mixed_set, forward_diffuse, ChannelSpec, MixPlan, NoiseSchedule};
use coprguard_core::detect::{audit, calibrate, load_suspects, CalibrateOptions, CalibrationRecord, TestConfig, Verdict};
use coprguard_core::imagecore::{load_image, psnr, save_image, ssim, DatasetManifest, ImageFormat, Label, ManifestEntry};
use coprguard_core::spectral::{compare_spectra, manifest_means, read_container_file, write_container_file, CorpusSpectrum, TransformTag};
use coprguard_core::synth::{default_watermark, natural_image, noise_image};
use coprguard_core::watermark::{derive_seed, embed, extract, fit_enhancement, EnhancementFilter, ExtractOptions, Subband, WatermarkKey};
use rayon::prelude::*;
use serde_json::{json, Value};

use cli::{Cli, Command, ExtractArgs, SynthKind};
use exit::{CliResult, Failure};

const THREADS_ENV: &str = "COPRGUARD_THREADS";
const MANIFEST_NAME: &str = "manifest.json";
const CONTAINER_EXT: &str = "cgsp";

/// Prints to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(exit::USAGE) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log_level).format_timestamp(None).init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("coprguard: {f}");
            f.exit_code()
        }
    }
}

fn thread_count(flag: usize) -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            v.trim().parse().map_err(|_| Failure::usage(format!("{THREADS_ENV}={v} is not a thread count")))
        }
        _ => Ok(flag),
    }
}

fn run(cli: &Cli) -> CliResult<u8> {
    let threads = thread_count(cli.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::internal(format!("thread pool: {e}")))?;
    let seed = cli.seed;
    match &cli.command {
        Command::Spectrum { manifest, transform, out } => spectrum(manifest, transform, out),
        Command::Compare { a, b, out } => compare(a, b, out, seed),
        Command::Embed { manifest, key, outdir, manifest_out, strength } => embed_cmd(manifest, key, outdir, manifest_out, *strength, seed),
        Command::Extract { image, key, search, out, estimate_out } => extract_cmd(image, key, search, out.as_deref(), estimate_out.as_deref(), seed),
        Command::Channel { manifest, spec, outdir } => channel_cmd(manifest, spec, outdir, seed),
        Command::Diffuse { image, t, schedule, out } => diffuse_cmd(image, *t, schedule, out, seed),
        Command::Calibrate { manifest, key, margin, search, out } => calibrate_cmd(manifest, key, *margin, search, out, seed),
        Command::Audit { manifest, key, calib, pc, kappa, lambda, search, out } => {
            let cfg = TestConfig { kappa: *kappa, lambda_: *lambda, p_c: *pc };
            audit_cmd(manifest, key, calib, cfg, search, out)
        }
        Command::Mix { clean, key, r, n, spec, outdir } => mix_cmd(clean, key, *r, *n, spec, outdir, seed),
        Command::Keygen { watermark, size, strength, host_rejection, out } => {
            keygen(watermark.as_deref(), *size, *strength, *host_rejection, out, seed)
        }
        Command::FitEnhancement { manifest, key, spec, out } => fit_cmd(manifest, key, spec, out, seed),
        Command::Synth { kind, n, size, outdir } => synth_cmd(*kind, *n, *size, outdir, seed),
    }
}

fn load_manifest(path: &Path) -> CliResult<DatasetManifest> {
    let m = DatasetManifest::load(path)?;
    m.check_paths()?;
    Ok(m)
}

fn with_provenance<T: serde::Serialize>(value: &T, seed: u64) -> Value {
    let mut v = serde_json::to_value(value).expect("artifacts serialize");
    if let Value::Object(map) = &mut v {
        map.entry("provenance").or_insert_with(|| serde_json::to_value(Provenance::new(seed)).expect("serializes"));
    }
    v
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::internal(format!("{}: {e}", dir.display())))
}

/// File name for entry `i`: index prefix plus the id with path-unsafe
/// characters replaced.
fn file_name(i: usize, id: &str) -> String {
    let clean: String = id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect();
    format!("{i:05}_{clean}.png")
}

fn absolute(p: &Path) -> String {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf()).display().to_string()
}

fn image_format(path: &Path) -> ImageFormat {
    ImageFormat::from_path(path).unwrap_or(ImageFormat::Png)
}

fn parse_channel(spec: &str) -> CliResult<ChannelSpec> {
    Ok(spec.parse::<ChannelSpec>()?)
}

fn extract_options(args: &ExtractArgs) -> CliResult<ExtractOptions> {
    let opts = ExtractOptions { orientation_search: args.orientation_search, crop_search: args.crop_search.clone() };
    opts.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(opts)
}

fn load_filter(path: Option<&Path>) -> CliResult<Option<EnhancementFilter>> {
    path.map(|p| read_json::<EnhancementFilter>(p, "enhancement filter")).transpose().map_err(Failure::from)
}

fn spectrum(manifest: &Path, transform: &str, out: &Path) -> CliResult<u8> {
    let m = load_manifest(manifest)?;
    let all = transform == "all";
    let kinds: Vec<TransformTag> = if all {
        TransformTag::ALL.to_vec()
    } else {
        vec![transform.parse().map_err(|_| Failure::usage(format!("unknown transform `{transform}`")))?]
    };
    let means = manifest_means(&m, &kinds)?;
    if all {
        create_dir(out)?;
        for (tag, s) in &means {
            write_container_file(&out.join(format!("{}.{CONTAINER_EXT}", tag.name())), s)?;
        }
    } else {
        write_container_file(out, &means[&kinds[0]])?;
    }
    log::info!("{} images, {} spectra", m.len(), means.len());
    Ok(exit::OK)
}

fn read_spectra(path: &Path) -> CliResult<BTreeMap<TransformTag, CorpusSpectrum>> {
    let mut map = BTreeMap::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Failure { code: exit::NO_INPUT, message: format!("{}: {e}", path.display()) })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == CONTAINER_EXT))
            .collect();
        files.sort();
        for f in files {
            let s = read_container_file(&f)?;
            if map.insert(s.kind, s).is_some() {
                return Err(Failure::data(format!("{} holds two spectra of one kind", path.display())));
            }
        }
        if map.is_empty() {
            return Err(Failure::data(format!("{} holds no .{CONTAINER_EXT} files", path.display())));
        }
    } else {
        let s = read_container_file(path)?;
        map.insert(s.kind, s);
    }
    Ok(map)
}

fn compare(a: &Path, b: &Path, out: &Path, seed: u64) -> CliResult<u8> {
    let ma = read_spectra(a)?;
    let mb = read_spectra(b)?;
    let report = compare_spectra(&a.display().to_string(), &ma, &b.display().to_string(), &mb)?;
    write_json(out, &with_provenance(&report, seed))?;
    Ok(exit::OK)
}

fn embed_cmd(manifest: &Path, key_path: &Path, outdir: &Path, manifest_out: &Path, strength: Option<f64>, seed: u64) -> CliResult<u8> {
    let m = load_manifest(manifest)?;
    let mut key = WatermarkKey::load(key_path)?;
    if let Some(s) = strength {
        key = key.with_strength(s).map_err(|e| Failure::usage(e.to_string()))?;
    }
    create_dir(outdir)?;
    let rows: Vec<(ManifestEntry, f64, f64)> = m
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let img = load_image(m.resolve(e))?;
            let marked = embed(&img, &key)?.quantized8();
            let name = file_name(i, &e.id);
            save_image(&marked, outdir.join(&name), ImageFormat::Png)?;
            let (p, s) = (psnr(&img, &marked)?, ssim(&img, &marked)?);
            log::info!("{}: PSNR {p:.2} dB, SSIM {s:.4}", e.id);
            let mut entry = ManifestEntry::new(&e.id, name, Some(Label::Watermarked));
            entry.extra.insert("psnr".into(), json!(p));
            entry.extra.insert("ssim".into(), json!(s));
            Ok((entry, p, s))
        })
        .collect::<coprguard_core::Result<_>>()?;
    let n = rows.len().max(1) as f64;
    let mean_psnr = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let mean_ssim = rows.iter().map(|r| r.2).sum::<f64>() / n;
    let mut out = DatasetManifest::new(Some(absolute(outdir)), rows.into_iter().map(|r| r.0).collect())?;
    out.meta.insert("key_fingerprint".into(), json!(key.fingerprint()));
    out.meta.insert("strength".into(), json!(key.strength()));
    out.meta.insert("strength_override".into(), json!(strength.is_some()));
    out.meta.insert("mean_psnr".into(), json!(mean_psnr));
    out.meta.insert("mean_ssim".into(), json!(mean_ssim));
    out.meta.insert("provenance".into(), serde_json::to_value(Provenance::new(seed)).expect("serializes"));
    out.save(manifest_out)?;
    log::info!("embedded {} images; mean PSNR {mean_psnr:.2} dB, SSIM {mean_ssim:.4}", out.len());
    Ok(exit::OK)
}

fn extract_cmd(image: &Path, key_path: &Path, search: &ExtractArgs, out: Option<&Path>, estimate_out: Option<&Path>, seed: u64) -> CliResult<u8> {
    let img = load_image(image)?;
    let key = WatermarkKey::load(key_path)?;
    let opts = extract_options(search)?;
    let filter = load_filter(search.enh.as_deref())?;
    let wm = extract(&img, &key, filter.as_ref(), &opts)?;
    if let Some(p) = estimate_out {
        save_image(&wm.to_image(), p, image_format(p))?;
    }
    let mut v = with_provenance(&wm, seed);
    v["key_fingerprint"] = json!(key.fingerprint());
    match out {
        Some(p) => write_json(p, &v)?,
        None => {
            v.as_object_mut().expect("object").remove("estimate");
            say!("{}", coprguard_core::artifact::to_json_pretty(&v));
        }
    }
    Ok(exit::OK)
}

fn channel_cmd(manifest: &Path, spec: &str, outdir: &Path, seed: u64) -> CliResult<u8> {
    let spec = parse_channel(spec)?;
    let m = load_manifest(manifest)?;
    create_dir(outdir)?;
    let entries: Vec<ManifestEntry> = m
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let img = load_image(m.resolve(e))?;
            let out = apply_channel(&img, &spec, derive_seed(&[seed, i as u64]))?;
            let name = file_name(i, &e.id);
            save_image(&out, outdir.join(&name), ImageFormat::Png)?;
            let mut entry = ManifestEntry::new(&e.id, name, e.label);
            entry.extra = e.extra.clone();
            Ok(entry)
        })
        .collect::<coprguard_core::Result<_>>()?;
    let mut out = DatasetManifest::new(None, entries)?;
    out.meta.insert("channel".into(), json!(spec));
    out.meta.insert("source".into(), json!(absolute(manifest)));
    out.meta.insert("provenance".into(), serde_json::to_value(Provenance::new(seed)).expect("serializes"));
    out.save(outdir.join(MANIFEST_NAME))?;
    Ok(exit::OK)
}

fn diffuse_cmd(image: &Path, t: usize, schedule: &str, out: &Path, seed: u64) -> CliResult<u8> {
    let sched: NoiseSchedule = schedule.parse()?;
    let img = load_image(image)?;
    let x = forward_diffuse(&img, t, &sched, seed)?;
    save_image(&x, out, image_format(out))?;
    Ok(exit::OK)
}

fn calibrate_cmd(manifest: &Path, key_path: &Path, margin: f64, search: &ExtractArgs, out: &Path, seed: u64) -> CliResult<u8> {
    let m = load_manifest(manifest)?;
    let key = WatermarkKey::load(key_path)?;
    let extraction = extract_options(search)?;
    let filter = load_filter(search.enh.as_deref())?;
    let clean = load_suspects(&m)?;
    let record = calibrate(
        &clean,
        &key,
        &manifest.display().to_string(),
        &CalibrateOptions { margin, extraction, enhancement: filter.as_ref(), seed },
    )?;
    write_json(out, &record)?;
    say!("gamma {:.6} tau {:.6} over {} images", record.gamma, record.tau, record.n_ref);
    Ok(exit::OK)
}

fn audit_cmd(manifest: &Path, key_path: &Path, calib_path: &Path, cfg: TestConfig, search: &ExtractArgs, out: &Path) -> CliResult<u8> {
    cfg.validate()?;
    let m = load_manifest(manifest)?;
    let key = WatermarkKey::load(key_path)?;
    let calib: CalibrationRecord = read_json(calib_path, "calibration record")?;
    let explicit = search.orientation_search || !search.crop_search.is_empty();
    let opts = if explicit { extract_options(search)? } else { calib.extraction.clone() };
    let filter = load_filter(search.enh.as_deref())?;
    let suspects = load_suspects(&m)?;
    let report = audit(&suspects, &key, &calib, &cfg, filter.as_ref(), &opts)?;
    write_json(out, &report)?;
    say!(
        "{} of {} flagged, P_u {:.4}, statistic {:+.4}: {}",
        report.flagged(),
        report.n,
        report.p_u,
        report.statistic,
        match report.decision {
            Verdict::Infringing => "infringing",
            Verdict::NotInfringing => "not infringing",
        }
    );
    Ok(if report.decision == Verdict::Infringing { exit::INFRINGING } else { exit::OK })
}

fn mix_cmd(clean: &Path, key_path: &Path, r: f64, n: usize, spec: &str, outdir: &Path, seed: u64) -> CliResult<u8> {
    let plan = MixPlan::new(r, n, parse_channel(spec)?, seed)?;
    let m = load_manifest(clean)?;
    let key = WatermarkKey::load(key_path)?;
    let mixed = build_mixed_set(&m, &key, &plan, outdir)?;
    say!("{} images, {} watermarked", mixed.len(), mixed.meta["realized_watermarked"]);
    Ok(exit::OK)
}

fn keygen(watermark: Option<&Path>, size: usize, strength: f64, host_rejection: f64, out: &Path, seed: u64) -> CliResult<u8> {
    let wm = match watermark {
        Some(p) => coprguard_core::imagecore::to_grayscale(&load_image(p)?),
        None => default_watermark(size),
    };
    let key = WatermarkKey::new(wm, seed, strength, Subband::ALL.to_vec())
        .and_then(|k| k.with_host_rejection(host_rejection))
        .map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    key.save(out, None)?;
    say!("{}", key.fingerprint());
    Ok(exit::OK)
}

fn fit_cmd(manifest: &Path, key_path: &Path, spec: &str, out: &Path, seed: u64) -> CliResult<u8> {
    let spec = parse_channel(spec)?;
    let m = load_manifest(manifest)?;
    let key = WatermarkKey::load(key_path)?;
    let pairs: Vec<_> = m
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let pristine = embed(&load_image(m.resolve(e))?, &key)?.quantized8();
            let degraded = apply_channel(&pristine, &spec, derive_seed(&[seed, i as u64]))?.quantized8();
            Ok((degraded, pristine))
        })
        .collect::<coprguard_core::Result<_>>()?;
    let filter = fit_enhancement(&pairs, &key, &format!("{} via {spec}", manifest.display()))?;
    write_json(out, &with_provenance(&filter, seed))?;
    if filter.discarded {
        say!("filter did not improve extraction on its fitting pairs and is stored as discarded");
    }
    Ok(exit::OK)
}

fn synth_cmd(kind: SynthKind, n: usize, size: usize, outdir: &Path, seed: u64) -> CliResult<u8> {
    if n == 0 || size == 0 {
        return Err(Failure::usage("--n and --size must be positive"));
    }
    create_dir(outdir)?;
    let prefix = match kind {
        SynthKind::Natural => "natural",
        SynthKind::Noise => "noise",
    };
    let entries: Vec<ManifestEntry> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(&[seed, i as u64]);
            let img = match kind {
                SynthKind::Natural => natural_image(s, size, size),
                SynthKind::Noise => noise_image(s, size, size),
            };
            let id = format!("{prefix}{i:05}");
            save_image(&img, outdir.join(format!("{id}.png")), ImageFormat::Png)?;
            Ok(ManifestEntry::new(id.clone(), format!("{id}.png"), Some(Label::Clean)))
        })
        .collect::<coprguard_core::Result<_>>()?;
    let mut m = DatasetManifest::new(None, entries)?;
    m.meta.insert("provenance".into(), serde_json::to_value(Provenance::new(seed)).expect("serializes"));
    m.save(outdir.join(MANIFEST_NAME))?;
    Ok(exit::OK)
}
