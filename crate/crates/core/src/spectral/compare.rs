use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{corpus_means, cosine_similarity_flagged, CorpusSpectrum, TransformTag};
use crate::error::{Error, Result};
use crate::imagecore::Image;

pub const DWT_AVG_NOTE: &str = "dwt_avg is the mean of the cA, cH, cV and cD cosine similarities (toolkit convention)";

/// Cosine similarity per transform; kinds absent from either side are
/// omitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CosTable {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dft: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dct: Option<f64>,
    #[serde(rename = "cA", skip_serializing_if = "Option::is_none", default)]
    pub ca: Option<f64>,
    #[serde(rename = "cH", skip_serializing_if = "Option::is_none", default)]
    pub ch: Option<f64>,
    #[serde(rename = "cV", skip_serializing_if = "Option::is_none", default)]
    pub cv: Option<f64>,
    #[serde(rename = "cD", skip_serializing_if = "Option::is_none", default)]
    pub cd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rapsd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dwt_avg: Option<f64>,
}

impl CosTable {
    pub fn get(&self, tag: TransformTag) -> Option<f64> {
        match tag {
            TransformTag::Dft => self.dft,
            TransformTag::Dct => self.dct,
            TransformTag::CA => self.ca,
            TransformTag::CH => self.ch,
            TransformTag::CV => self.cv,
            TransformTag::CD => self.cd,
            TransformTag::Rapsd => self.rapsd,
        }
    }

    fn slot(&mut self, tag: TransformTag) -> &mut Option<f64> {
        match tag {
            TransformTag::Dft => &mut self.dft,
            TransformTag::Dct => &mut self.dct,
            TransformTag::CA => &mut self.ca,
            TransformTag::CH => &mut self.ch,
            TransformTag::CV => &mut self.cv,
            TransformTag::CD => &mut self.cd,
            TransformTag::Rapsd => &mut self.rapsd,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub a: String,
    pub b: String,
    pub cos: CosTable,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Compares corpus means kind by kind. Means of the same kind must share
/// their dimensions.
pub fn compare_spectra(
    a_id: &str,
    a: &BTreeMap<TransformTag, CorpusSpectrum>,
    b_id: &str,
    b: &BTreeMap<TransformTag, CorpusSpectrum>,
) -> Result<ComparisonReport> {
    let mut cos = CosTable::default();
    let mut notes = Vec::new();
    for (tag, sa) in a {
        let Some(sb) = b.get(tag) else { continue };
        if (sa.height, sa.width) != (sb.height, sb.width) {
            return Err(Error::Dimension(format!(
                "{tag}: {}x{} vs {}x{}",
                sa.height, sa.width, sb.height, sb.width
            )));
        }
        let (c, degenerate) = cosine_similarity_flagged(&sa.mean, &sb.mean)?;
        if degenerate {
            notes.push(format!("{tag}: a zero mean spectrum; cosine defined as 0"));
        }
        *cos.slot(*tag) = Some(c);
    }
    if let (Some(x), Some(y), Some(z), Some(w)) = (cos.ca, cos.ch, cos.cv, cos.cd) {
        cos.dwt_avg = Some((x + y + z + w) / 4.0);
        notes.push(DWT_AVG_NOTE.to_string());
    }
    if a.keys().all(|k| !b.contains_key(k)) {
        return Err(Error::Domain("the two sides share no transform kind".into()));
    }
    Ok(ComparisonReport { a: a_id.to_string(), b: b_id.to_string(), cos, notes })
}

/// Table-style comparison of two corpora over dft, dct and the four Haar
/// sub-bands, plus their average.
pub fn compare_corpora(a_id: &str, a: &[Image], b_id: &str, b: &[Image]) -> Result<ComparisonReport> {
    let ma = corpus_means(a, &TransformTag::COMPARED)?;
    let mb = corpus_means(b, &TransformTag::COMPARED)?;
    compare_spectra(a_id, &ma, b_id, &mb)
}
