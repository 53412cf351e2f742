use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "coprguard", version, about = "Watermark image datasets and audit suspect image sets for their use")]
pub struct Cli {
    /// Root seed; every stochastic step derives its own seed from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (0 = one per core). COPRGUARD_THREADS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Natural,
    Noise,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Try all eight rotations and flips of each image.
    #[arg(long)]
    pub orientation_search: bool,

    /// Centre-crop ratios (comma separated, each in (0, 1)) to undo.
    #[arg(long, value_delimiter = ',')]
    pub crop_search: Vec<f64>,

    /// Enhancement filter JSON from `fit-enhancement`.
    #[arg(long)]
    pub enh: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean spectrum of a corpus, written as a CGSP container.
    Spectrum {
        #[arg(long)]
        manifest: PathBuf,
        /// dft, dct, cA, cH, cV, cD, rapsd, or `all` (then --out is a directory).
        #[arg(long)]
        transform: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cosine similarity of two mean spectra, or of two directories of them.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Watermark every image of a manifest.
    Embed {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        outdir: PathBuf,
        #[arg(long)]
        manifest_out: PathBuf,
        /// Override the key's embedding strength.
        #[arg(long)]
        strength: Option<f64>,
    },
    /// Blind extraction from one image.
    Extract {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        search: ExtractArgs,
        /// Result JSON (printed to stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes the recovered watermark as an image.
        #[arg(long)]
        estimate_out: Option<PathBuf>,
    },
    /// Apply a degradation channel to every image of a manifest.
    Channel {
        #[arg(long)]
        manifest: PathBuf,
        /// Channel grammar, for example `then(jpeg:70,noise:0.05)`.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Forward diffusion of one image to step t.
    Diffuse {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        t: usize,
        /// `linear` or `linear:START:END:T`.
        #[arg(long, default_value = "linear")]
        schedule: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Threshold from a clean reference corpus.
    Calibrate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long, default_value_t = 0.005)]
        margin: f64,
        #[command(flatten)]
        search: ExtractArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit a suspect set. Exits 10 on an infringing verdict.
    Audit {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        calib: PathBuf,
        /// Expected clean flag rate.
        #[arg(long, default_value_t = 0.0)]
        pc: f64,
        #[arg(long, default_value_t = 0.05)]
        kappa: f64,
        #[arg(long, default_value_t = 0.05)]
        lambda: f64,
        /// Extraction settings default to the calibration's; flags that
        /// disagree with it are rejected.
        #[command(flatten)]
        search: ExtractArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a suspect set with injection ratio R.
    Mix {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "identity")]
        spec: String,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Create a key file (and its watermark PNG).
    Keygen {
        /// Watermark image; the built-in logo is used when omitted.
        #[arg(long)]
        watermark: Option<PathBuf>,
        /// Side of the built-in logo.
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0.007)]
        strength: f64,
        #[arg(long, default_value_t = 1.0)]
        host_rejection: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an enhancement filter on a manifest passed through a channel.
    FitEnhancement {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long, default_value = "ae:8")]
        spec: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with a manifest.
    Synth {
        #[arg(long, value_enum, default_value_t = SynthKind::Natural)]
        kind: SynthKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long)]
        outdir: PathBuf,
    },
}
