use std::borrow::Borrow;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dct2_plane, dft_magnitude_plane, dwt_haar_plane, rapsd_plane, TransformTag};
use crate::error::{Error, Result};
use crate::imagecore::{load_image, DatasetManifest, Image};

/// Images per work unit in the parallel reductions. Fixed so the summation
/// order, and hence the bits of the result, do not depend on thread count.
const CHUNK: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpectrum {
    pub kind: TransformTag,
    pub height: usize,
    pub width: usize,
    pub count: u64,
    pub mean: Vec<f64>,
}

/// Per-image statistics for several kinds, sharing the FFT and DWT work.
pub(crate) fn image_statistics(img: &Image, kinds: &[TransformTag]) -> Result<Vec<Vec<f64>>> {
    let luma = img.luma_plane();
    let pyr = if kinds.iter().any(|k| k.is_subband()) { Some(dwt_haar_plane(&luma)?) } else { None };
    let dft = kinds.contains(&TransformTag::Dft).then(|| dft_magnitude_plane(&luma).values);
    Ok(kinds
        .iter()
        .map(|k| match k {
            TransformTag::Dft => dft.clone().expect("computed above"),
            TransformTag::Dct => dct2_plane(&luma).values,
            TransformTag::CA => pyr.as_ref().expect("computed above").ca.data.clone(),
            TransformTag::CH => pyr.as_ref().expect("computed above").ch.data.clone(),
            TransformTag::CV => pyr.as_ref().expect("computed above").cv.data.clone(),
            TransformTag::CD => pyr.as_ref().expect("computed above").cd.data.clone(),
            TransformTag::Rapsd => rapsd_plane(&luma).values,
        })
        .collect())
}

/// Streaming sum of per-image statistics. Partial accumulators merge
/// exactly, so sharded reductions agree with a single pass up to rounding.
#[derive(Clone, Debug)]
pub struct CorpusAccumulator {
    kind: TransformTag,
    source_dims: Option<(usize, usize)>,
    count: u64,
    sum: Vec<f64>,
}

impl CorpusAccumulator {
    pub fn new(kind: TransformTag) -> Self {
        CorpusAccumulator { kind, source_dims: None, count: 0, sum: Vec::new() }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, img: &Image) -> Result<()> {
        self.check_dims(img.dims())?;
        let stat = image_statistics(img, &[self.kind])?.pop().expect("one kind requested");
        self.add(img.dims(), &stat);
        Ok(())
    }

    fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        match self.source_dims {
            Some(d) if d != dims => Err(Error::Dimension(format!(
                "corpus mixes resolutions {}x{} and {}x{}",
                d.0, d.1, dims.0, dims.1
            ))),
            _ => Ok(()),
        }
    }

    fn add(&mut self, dims: (usize, usize), stat: &[f64]) {
        if self.source_dims.is_none() {
            self.source_dims = Some(dims);
            self.sum = vec![0.0; stat.len()];
        }
        for (s, v) in self.sum.iter_mut().zip(stat) {
            *s += v;
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: CorpusAccumulator) -> Result<()> {
        if other.kind != self.kind {
            return Err(Error::Domain(format!("cannot merge {} into {}", other.kind, self.kind)));
        }
        let Some(dims) = other.source_dims else { return Ok(()) };
        self.check_dims(dims)?;
        if self.source_dims.is_none() {
            *self = other;
            return Ok(());
        }
        for (s, v) in self.sum.iter_mut().zip(&other.sum) {
            *s += v;
        }
        self.count += other.count;
        Ok(())
    }

    pub fn finish(self) -> Result<CorpusSpectrum> {
        let Some((h, w)) = self.source_dims else {
            return Err(Error::Domain("corpus mean of an empty stream".into()));
        };
        let (height, width) = self.kind.output_dims(h, w);
        let n = self.count as f64;
        Ok(CorpusSpectrum { kind: self.kind, height, width, count: self.count, mean: self.sum.into_iter().map(|s| s / n).collect() })
    }
}

/// Sequential streaming mean; memory is independent of corpus size.
pub fn corpus_mean<I, B>(images: I, kind: TransformTag) -> Result<CorpusSpectrum>
where
    I: IntoIterator<Item = B>,
    B: Borrow<Image>,
{
    let mut acc = CorpusAccumulator::new(kind);
    for img in images {
        acc.push(img.borrow())?;
    }
    acc.finish()
}

/// Parallel mean over an in-memory corpus.
pub fn corpus_mean_par(images: &[Image], kind: TransformTag) -> Result<CorpusSpectrum> {
    Ok(corpus_means(images, &[kind])?.remove(&kind).expect("requested kind"))
}

/// Means for several kinds in one parallel pass.
pub fn corpus_means(images: &[Image], kinds: &[TransformTag]) -> Result<BTreeMap<TransformTag, CorpusSpectrum>> {
    if kinds.is_empty() {
        return Err(Error::Domain("no transform kinds requested".into()));
    }
    let partials: Vec<Vec<CorpusAccumulator>> =
        images.par_chunks(CHUNK).map(|chunk| chunk_accumulators(kinds, chunk.iter().map(Ok))).collect::<Result<_>>()?;
    merge_partials(kinds, partials)
}

/// Means over `n` images produced on demand by `load(i)`; at most one
/// chunk of images per worker is alive at a time. Summation order is the
/// same as [`corpus_means`].
pub fn corpus_means_streamed<F>(n: usize, kinds: &[TransformTag], load: F) -> Result<BTreeMap<TransformTag, CorpusSpectrum>>
where
    F: Fn(usize) -> Result<Image> + Sync,
{
    if kinds.is_empty() {
        return Err(Error::Domain("no transform kinds requested".into()));
    }
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    let partials: Vec<Vec<CorpusAccumulator>> = starts
        .par_iter()
        .map(|&s| chunk_accumulators(kinds, (s..(s + CHUNK).min(n)).map(&load)))
        .collect::<Result<_>>()?;
    merge_partials(kinds, partials)
}

/// Streams every image of a manifest through [`corpus_means_streamed`].
pub fn manifest_means(manifest: &DatasetManifest, kinds: &[TransformTag]) -> Result<BTreeMap<TransformTag, CorpusSpectrum>> {
    if manifest.is_empty() {
        return Err(Error::Domain("manifest is empty".into()));
    }
    corpus_means_streamed(manifest.len(), kinds, |i| load_image(manifest.resolve(&manifest.entries[i])))
}

fn chunk_accumulators<B: Borrow<Image>>(kinds: &[TransformTag], images: impl Iterator<Item = Result<B>>) -> Result<Vec<CorpusAccumulator>> {
    let mut accs: Vec<CorpusAccumulator> = kinds.iter().map(|&k| CorpusAccumulator::new(k)).collect();
    for img in images {
        let img = img?;
        let img = img.borrow();
        accs[0].check_dims(img.dims())?;
        let stats = image_statistics(img, kinds)?;
        for (acc, s) in accs.iter_mut().zip(stats) {
            acc.add(img.dims(), &s);
        }
    }
    Ok(accs)
}

fn merge_partials(kinds: &[TransformTag], partials: Vec<Vec<CorpusAccumulator>>) -> Result<BTreeMap<TransformTag, CorpusSpectrum>> {
    let mut total: Vec<CorpusAccumulator> = kinds.iter().map(|&k| CorpusAccumulator::new(k)).collect();
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p)?;
        }
    }
    total.into_iter().map(|a| Ok((a.kind, a.finish()?))).collect()
}
