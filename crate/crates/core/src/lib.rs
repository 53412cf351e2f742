//! Wavelet-domain watermarking and dataset-usage auditing for image
//! corpora.
//!
//! * [`imagecore`]: images, I/O, geometry, PSNR/SSIM, manifests.
//! * [`spectral`]: DFT/DCT/Haar/RAPSD statistics and corpus comparison.
//! * [`watermark`]: blind spread-spectrum embedding in Haar detail bands.
//! * [`channel`]: degradation channels, forward diffusion, mixed sets.
//! * [`detect`]: calibration, per-image decisions and the audit test.

pub mod artifact;
pub mod channel;
pub mod detect;
pub mod error;
pub mod imagecore;
pub mod spectral;
pub mod synth;
pub mod watermark;

pub use error::{Error, Result};
pub use imagecore::{Image, Plane};
