//! Sketch ingestion and encoding: simplified QuickDraw drawings become
//! fixed-length, zero-padded sequences of cubic Bezier segments.

mod bezier;
mod dataset_file;
mod drawing;
mod encode;
mod fetch;
pub mod synthetic;

pub use bezier::{
    chord_params, diagonal, fit_bezier, fit_stroke, least_squares_cubic, BezierSegment,
    FittedSegment,
};
pub use dataset_file::{
    dataset_from_bytes, dataset_to_bytes, read_dataset, write_dataset, DATASET_MAGIC,
    DATASET_VERSION,
};
pub use drawing::{parse_drawing, to_sequence, RawDrawing, SequencePoint, SketchSequence, Stroke};
pub use encode::{
    class_map, encode_dataset, encode_drawing, EncodeConfig, EncodedDataset, EncodedSample, Split,
};
pub use fetch::{
    category_file, default_cache_dir, fetch_category, fetch_category_from, read_category_file,
    CACHE_ENV, QUICKDRAW_SIMPLIFIED_URL, SUPPORTED_CATEGORIES,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Width of one encoded row: eight control coordinates, `eos`, `valid`.
pub const ROW_WIDTH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SketchError {
    #[error("malformed drawing JSON: {0}")]
    Json(String),
    #[error("drawing has no strokes")]
    EmptyDrawing,
    #[error("stroke {stroke} has {points} point(s); at least 2 required")]
    ShortStroke { stroke: usize, points: usize },
    #[error("stroke {stroke} is ragged: {xs} x values vs {ys} y values")]
    RaggedStroke { stroke: usize, xs: usize, ys: usize },
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("unusable payload: {0}")]
    Payload(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    BadSplit(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("no drawings to encode")]
    EmptyCorpus,
    #[error("bad dataset file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, SketchError>;
