//! Time-series imaging: recurrence plots, Gramian angular fields and Markov
//! transition fields, plus assembly of the four-class labeled image set.

mod export;
mod transforms;

use serde::{Deserialize, Serialize};

use crate::dataset::SegmentSet;
use crate::error::{Error, Result};
use crate::series::Component;

pub use export::{export_png, write_png, ImageSidecar};
pub use transforms::{gadf, gasf, mtf, quantile_bins, rescale_minmax, resize_bilinear, rp, rp_thresholded};

/// Default number of quantile bins for MTF.
pub const DEFAULT_MTF_BINS: usize = 8;

/// Square single-channel image, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrayImage {
    side: usize,
    pixels: Vec<f64>,
    value_range: (f64, f64),
}

impl GrayImage {
    pub fn new(side: usize, pixels: Vec<f64>, value_range: (f64, f64)) -> Result<Self> {
        if side < 2 {
            return Err(Error::ShapeMismatch(format!("image side must be at least 2, got {side}")));
        }
        if pixels.len() != side * side {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels for a {side}x{side} image",
                pixels.len()
            )));
        }
        Ok(Self { side, pixels, value_range })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.value_range
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.side + col]
    }

    /// Min-max normalization of the actual pixel values onto `[0, 1]`.
    /// A constant image maps to all zeros.
    pub fn normalized(&self) -> GrayImage {
        let (lo, hi) = self
            .pixels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        let span = hi - lo;
        let pixels = if span > 0.0 {
            self.pixels.iter().map(|p| ((p - lo) / span).clamp(0.0, 1.0)).collect()
        } else {
            vec![0.0; self.pixels.len()]
        };
        GrayImage { side: self.side, pixels, value_range: (0.0, 1.0) }
    }
}

/// The four encodings, with class labels 1..=4 in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ImagingMethod {
    #[serde(rename = "RP")]
    Rp,
    #[serde(rename = "GASF")]
    Gasf,
    #[serde(rename = "GADF")]
    Gadf,
    #[serde(rename = "MTF")]
    Mtf,
}

impl ImagingMethod {
    pub const ALL: [ImagingMethod; 4] =
        [ImagingMethod::Rp, ImagingMethod::Gasf, ImagingMethod::Gadf, ImagingMethod::Mtf];

    /// Class label in `1..=4`.
    pub fn label(self) -> u8 {
        match self {
            ImagingMethod::Rp => 1,
            ImagingMethod::Gasf => 2,
            ImagingMethod::Gadf => 3,
            ImagingMethod::Mtf => 4,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        Self::ALL.get(usize::from(label).checked_sub(1)?).copied()
    }

    /// Zero-based class index.
    pub fn class_index(self) -> usize {
        usize::from(self.label() - 1)
    }

    pub fn name(self) -> &'static str {
        match self {
            ImagingMethod::Rp => "RP",
            ImagingMethod::Gasf => "GASF",
            ImagingMethod::Gadf => "GADF",
            ImagingMethod::Mtf => "MTF",
        }
    }
}

impl std::fmt::Display for ImagingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ImagingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown imaging method: {s}")))
    }
}

/// Knobs shared by all encodings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImagingOptions {
    /// MTF bin count; capped at the window length when encoding short windows.
    pub mtf_bins: usize,
    /// Emit a binary recurrence plot `|w_i - w_j| <= eps` instead of distances.
    pub rp_threshold: Option<f64>,
    /// Bilinear resize of every image to this side (off by default; the
    /// network pools over any spatial size).
    pub resize: Option<usize>,
}

impl Default for ImagingOptions {
    fn default() -> Self {
        Self { mtf_bins: DEFAULT_MTF_BINS, rp_threshold: None, resize: None }
    }
}

impl ImagingOptions {
    /// Encodes one window with `method` (native value range, not normalized).
    pub fn encode(&self, method: ImagingMethod, w: &[f64]) -> Result<GrayImage> {
        let image = match method {
            ImagingMethod::Rp => match self.rp_threshold {
                Some(eps) => rp_thresholded(w, eps),
                None => rp(w),
            },
            ImagingMethod::Gasf => gasf(w),
            ImagingMethod::Gadf => gadf(w),
            ImagingMethod::Mtf => mtf(w, self.mtf_bins.min(w.len())),
        }?;
        match self.resize {
            Some(side) if side != image.side() => resize_bilinear(&image, side),
            _ => Ok(image),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Center,
    Range,
    Merged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    /// Normalized to `[0, 1]`.
    pub image: GrayImage,
    pub method: ImagingMethod,
    pub source: Component,
    pub segment: usize,
}

impl LabeledImage {
    pub fn label(&self) -> u8 {
        self.method.label()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImageSet {
    pub items: Vec<LabeledImage>,
    pub provenance: Provenance,
}

impl LabeledImageSet {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for item in &self.items {
            counts[item.method.class_index()] += 1;
        }
        counts
    }
}

fn images_for(segments: &SegmentSet, opts: &ImagingOptions) -> Result<Vec<LabeledImage>> {
    let mut items = Vec::with_capacity(4 * segments.len());
    for (i, w) in segments.segments.iter().enumerate() {
        for method in ImagingMethod::ALL {
            items.push(LabeledImage {
                image: opts.encode(method, w)?.normalized(),
                method,
                source: segments.source,
                segment: i,
            });
        }
    }
    Ok(items)
}

/// Builds the merged four-class dataset from center and range segmentations.
pub fn build_classification_dataset(
    center_segments: &SegmentSet,
    range_segments: &SegmentSet,
    opts: &ImagingOptions,
) -> Result<LabeledImageSet> {
    let mut items = images_for(center_segments, opts)?;
    items.extend(images_for(range_segments, opts)?);
    Ok(LabeledImageSet { items, provenance: Provenance::Merged })
}

/// Builds the labeled dataset for a single segmentation.
pub fn build_single_dataset(segments: &SegmentSet, opts: &ImagingOptions) -> Result<LabeledImageSet> {
    let provenance = match segments.source {
        Component::Center => Provenance::Center,
        Component::Range => Provenance::Range,
    };
    Ok(LabeledImageSet { items: images_for(segments, opts)?, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::segment;

    #[test]
    fn labels_round_trip() {
        for m in ImagingMethod::ALL {
            assert_eq!(ImagingMethod::from_label(m.label()), Some(m));
            assert_eq!(m.name().parse::<ImagingMethod>().unwrap(), m);
        }
        assert_eq!(ImagingMethod::from_label(0), None);
        assert_eq!(ImagingMethod::from_label(5), None);
    }

    #[test]
    fn dataset_sizes() {
        let x: Vec<f64> = (0..1500).map(|i| ((i * 7919) % 101) as f64).collect();
        let c = segment(&x, 45, Component::Center).unwrap();
        let r = segment(&x, 45, Component::Range).unwrap();
        let set = build_classification_dataset(&c, &r, &ImagingOptions::default()).unwrap();
        assert_eq!(set.len(), 264);
        assert_eq!(set.class_counts(), [66; 4]);
        for item in &set.items {
            assert_eq!(item.image.side(), 45);
            assert!(item.image.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn single_segment_gives_four_labels() {
        let c = segment(&[1.0, 3.0, 2.0, 5.0], 4, Component::Center).unwrap();
        let set = build_single_dataset(&c, &ImagingOptions::default()).unwrap();
        let labels: Vec<u8> = set.items.iter().map(LabeledImage::label).collect();
        assert_eq!(labels, vec![1, 2, 3, 4]);
        assert_eq!(set.provenance, Provenance::Center);
    }

    #[test]
    fn empty_segments_give_empty_set() {
        let empty = SegmentSet { segment_len: 30, segments: vec![], source: Component::Center };
        let set = build_classification_dataset(&empty, &empty, &ImagingOptions::default()).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn short_window_caps_mtf_bins() {
        let img = ImagingOptions::default().encode(ImagingMethod::Mtf, &[1.0, 2.0, 0.5]).unwrap();
        assert_eq!(img.side(), 3);
    }

    #[test]
    fn normalization_of_constant_image() {
        let img = GrayImage::new(2, vec![3.0; 4], (3.0, 3.0)).unwrap().normalized();
        assert_eq!(img.pixels(), &[0.0; 4]);
    }
}
