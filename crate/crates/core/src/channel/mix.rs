use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{apply_channel, ChannelSpec};
use crate::artifact::Provenance;
use crate::error::{Error, Result};
use crate::imagecore::{save_image, DatasetManifest, Image, ImageFormat, Label, ManifestEntry};
use crate::watermark::{derive_seed, embed, WatermarkKey};

pub const MIXED_MANIFEST_NAME: &str = "manifest.json";

const STREAM_LABEL: u64 = 0x4C41_4245;
const STREAM_CHANNEL: u64 = 0x4348_414E;

/// How to build a suspect set: `n` items, each watermarked with
/// probability `r`, then passed through `channel`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixPlan {
    #[serde(rename = "R")]
    pub r: f64,
    pub n: usize,
    pub channel: ChannelSpec,
    pub seed: u64,
}

impl MixPlan {
    pub fn new(r: f64, n: usize, channel: ChannelSpec, seed: u64) -> Result<Self> {
        let plan = MixPlan { r, n, channel, seed };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.r) {
            return Err(Error::spec("R", format!("injection ratio must be in [0, 1], got {}", self.r)));
        }
        if self.n == 0 {
            return Err(Error::spec("n", "set size must be at least 1"));
        }
        self.channel.validate()
    }
}

#[derive(Clone, Debug)]
pub struct MixedItem {
    pub id: String,
    pub source: String,
    pub label: Label,
    pub image: Image,
}

/// Item `i` takes source `i mod |clean|`, is watermarked when a uniform
/// draw seeded by `(seed, i)` falls below `r`, and goes through the
/// channel with its own derived seed. Output is independent of thread
/// scheduling.
pub fn mix_images(clean: &[(String, Image)], key: &WatermarkKey, plan: &MixPlan) -> Result<Vec<MixedItem>> {
    plan.validate()?;
    if clean.is_empty() {
        return Err(Error::Domain("mixed set needs at least one clean source image".into()));
    }
    (0..plan.n)
        .into_par_iter()
        .map(|i| {
            let (source, img) = &clean[i % clean.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[plan.seed, i as u64, STREAM_LABEL]));
            let marked = rng.random::<f64>() < plan.r;
            let base = if marked { embed(img, key)? } else { img.clone() };
            let image = apply_channel(&base, &plan.channel, derive_seed(&[plan.seed, i as u64, STREAM_CHANNEL]))?;
            Ok(MixedItem {
                id: format!("mix{i:05}"),
                source: source.clone(),
                label: if marked { Label::Watermarked } else { Label::Clean },
                image,
            })
        })
        .collect()
}

/// Builds the mixed set on disk: PNGs plus `manifest.json` in `outdir`.
/// The manifest carries ground-truth labels, the plan and the realized
/// watermarked count.
pub fn build_mixed_set(clean: &DatasetManifest, key: &WatermarkKey, plan: &MixPlan, outdir: &Path) -> Result<DatasetManifest> {
    plan.validate()?;
    if clean.is_empty() {
        return Err(Error::Domain("clean manifest is empty".into()));
    }
    let sources = clean.load_images()?;
    let items = mix_images(&sources, key, plan)?;
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    items
        .par_iter()
        .try_for_each(|it| save_image(&it.image, outdir.join(format!("{}.png", it.id)), ImageFormat::Png))?;
    let realized = items.iter().filter(|it| it.label == Label::Watermarked).count();
    let entries = items
        .iter()
        .map(|it| {
            let mut e = ManifestEntry::new(&it.id, format!("{}.png", it.id), Some(it.label));
            e.extra.insert("source".into(), it.source.clone().into());
            e
        })
        .collect();
    let mut m = DatasetManifest::new(None, entries)?;
    m.meta.insert("plan".into(), serde_json::to_value(plan).expect("plan serializes"));
    m.meta.insert("realized_watermarked".into(), realized.into());
    m.meta.insert("provenance".into(), serde_json::to_value(Provenance::new(plan.seed)).expect("serializes"));
    m.meta.insert("key_fingerprint".into(), key.fingerprint().into());
    m.set_base_dir(outdir);
    m.save(outdir.join(MIXED_MANIFEST_NAME))?;
    Ok(m)
}
