use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bezier::{diagonal, fit_stroke, BezierSegment};
use super::drawing::RawDrawing;
use super::{Point, Result, SketchError, ROW_WIDTH};
use crate::autograd::Tensor;
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeConfig {
    /// Residual tolerance as a fraction of the sketch bounding-box diagonal.
    pub tol: f64,
    /// Fraction of each class assigned to training.
    pub split: f64,
    pub seed: u64,
    /// Sketches with more segments are dropped.
    pub max_segments: usize,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            tol: 0.02,
            split: 0.8,
            seed: 0,
            max_segments: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSample {
    pub label: usize,
    pub split: Split,
    /// `N × 10` rows of `[control points…, eos, valid]`.
    pub matrix: Tensor,
}

impl EncodedSample {
    pub fn segment_count(&self) -> usize {
        (0..self.matrix.shape()[0])
            .filter(|&r| self.matrix.row(r)[ROW_WIDTH - 1] != 0.0)
            .count()
    }
}

/// Fixed-length padded dataset with its class map.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub class_names: Vec<String>,
    pub n_rows: usize,
    pub samples: Vec<EncodedSample>,
    /// Drawings rejected by the segment cap or for an unknown class.
    pub dropped: usize,
}

impl EncodedDataset {
    pub fn split(&self, which: Split) -> impl Iterator<Item = &EncodedSample> {
        self.samples.iter().filter(move |s| s.split == which)
    }

    pub fn class_counts(&self, which: Option<Split>) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for s in &self.samples {
            if which.is_none_or(|w| s.split == w) {
                counts[s.label] += 1;
            }
        }
        counts
    }
}

/// Sorted category names; the index in this list is the class label.
pub fn class_map(categories: &[String]) -> Vec<String> {
    let mut names = categories.to_vec();
    names.sort();
    names.dedup();
    names
}

/// Fits every stroke of `raw` and maps the control points into the unit
/// square.
///
/// Fitting runs in source coordinates with a residual budget of
/// `tol · diagonal`. Normalization then uses the bounding box of all control
/// points (which contains every curve), scaling the longer side to `[0, 1]`
/// and centering the shorter one. Being a similarity transform it keeps the
/// residual bound relative to the diagonal.
pub fn encode_drawing(raw: &RawDrawing, tol: f64) -> Vec<BezierSegment> {
    let all = raw.strokes.iter().flat_map(|s| s.points());
    let max_error = tol * diagonal(all);
    let segments: Vec<BezierSegment> = raw
        .strokes
        .iter()
        .flat_map(|s| fit_stroke(&s.points(), max_error).into_iter().map(|f| f.segment))
        .collect();
    normalize_segments(&segments)
}

pub(crate) fn normalize_segments(segments: &[BezierSegment]) -> Vec<BezierSegment> {
    let pts = segments.iter().flat_map(|s| s.control_points());
    let (mut lo, mut hi) = (
        Point::new(f64::INFINITY, f64::INFINITY),
        Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for p in pts {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    let side = w.max(h);
    let scale = if side > 0.0 { side } else { 1.0 };
    let (off_x, off_y) = ((1.0 - w / scale) / 2.0, (1.0 - h / scale) / 2.0);
    let map = |p: Point| {
        Point::new(
            ((p.x - lo.x) / scale + off_x).clamp(0.0, 1.0),
            ((p.y - lo.y) / scale + off_y).clamp(0.0, 1.0),
        )
    };
    segments.iter().map(|s| s.map_points(map)).collect()
}

/// Encodes, pads and splits a corpus.
///
/// Labels come from [`class_map`] over `categories`. Work fans out per
/// drawing but results are merged in input order, so `N` and the split
/// assignment depend only on the inputs and `cfg.seed`.
pub fn encode_dataset(
    drawings: &[RawDrawing],
    categories: &[String],
    cfg: &EncodeConfig,
    exec: Execution,
) -> Result<EncodedDataset> {
    if drawings.is_empty() {
        return Err(SketchError::EmptyCorpus);
    }
    if !(cfg.split > 0.0 && cfg.split < 1.0) {
        return Err(SketchError::BadSplit(cfg.split));
    }
    if !(cfg.tol > 0.0) {
        return Err(SketchError::BadTolerance(cfg.tol));
    }
    let class_names = class_map(categories);
    let encoded = par::map(exec, drawings, |d| encode_drawing(d, cfg.tol));

    let mut kept: Vec<(usize, Vec<BezierSegment>)> = Vec::new();
    let mut dropped = 0;
    for (i, (d, segs)) in drawings.iter().zip(encoded).enumerate() {
        let Some(label) = class_names.iter().position(|c| *c == d.category) else {
            warn!("drawing {i}: category `{}` not in the class map, dropped", d.category);
            dropped += 1;
            continue;
        };
        if segs.len() > cfg.max_segments {
            warn!(
                "drawing {i} ({}): {} segments exceeds cap {}, dropped",
                d.category,
                segs.len(),
                cfg.max_segments
            );
            dropped += 1;
            continue;
        }
        kept.push((label, segs));
    }
    if kept.is_empty() {
        return Err(SketchError::EmptyCorpus);
    }
    let n_rows = kept.iter().map(|(_, s)| s.len()).max().unwrap_or(0);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut split_of = vec![Split::Validation; kept.len()];
    for label in 0..class_names.len() {
        let mut members: Vec<usize> = (0..kept.len()).filter(|&i| kept[i].0 == label).collect();
        members.shuffle(&mut rng);
        let n_train = (cfg.split * members.len() as f64).round() as usize;
        for &i in &members[..n_train] {
            split_of[i] = Split::Train;
        }
    }
    let mut order: Vec<usize> = (0..kept.len()).collect();
    order.shuffle(&mut rng);

    let samples = order
        .into_iter()
        .map(|i| {
            let (label, segs) = &kept[i];
            let mut data = Vec::with_capacity(n_rows * ROW_WIDTH);
            for s in segs {
                data.extend_from_slice(&s.to_row());
            }
            data.resize(n_rows * ROW_WIDTH, 0.0);
            EncodedSample {
                label: *label,
                split: split_of[i],
                matrix: Tensor::matrix(n_rows, ROW_WIDTH, data),
            }
        })
        .collect();
    Ok(EncodedDataset {
        class_names,
        n_rows,
        samples,
        dropped,
    })
}
