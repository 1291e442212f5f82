//! Binary container for [`EncodedDataset`].
//!
//! All integers are little-endian `u32`, floats little-endian IEEE-754
//! `f64`:
//!
//! ```text
//! magic      8 bytes  "QDSKETCH"
//! version    u32      1
//! n_classes  u32
//!   per class: name_len u32, name bytes (UTF-8)
//! n_rows     u32      N
//! row_width  u32      10
//! n_samples  u32
//!   per sample: label u32, split u8 (0 train, 1 validation),
//!               N × 10 f64 values
//! ```
//!
//! Encoding is a pure function of the dataset, so equal datasets give
//! byte-identical files.

use std::path::Path;

use super::encode::{EncodedDataset, EncodedSample, Split};
use super::{Result, SketchError, ROW_WIDTH};
use crate::autograd::Tensor;

pub const DATASET_MAGIC: &[u8; 8] = b"QDSKETCH";
pub const DATASET_VERSION: u32 = 1;

pub fn dataset_to_bytes(ds: &EncodedDataset) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(DATASET_MAGIC);
    let u32le = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
    u32le(&mut out, DATASET_VERSION as usize);
    u32le(&mut out, ds.class_names.len());
    for name in &ds.class_names {
        u32le(&mut out, name.len());
        out.extend_from_slice(name.as_bytes());
    }
    u32le(&mut out, ds.n_rows);
    u32le(&mut out, ROW_WIDTH);
    u32le(&mut out, ds.samples.len());
    for s in &ds.samples {
        u32le(&mut out, s.label);
        out.push(match s.split {
            Split::Train => 0,
            Split::Validation => 1,
        });
        for v in s.matrix.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(SketchError::Format(format!(
                "truncated at byte {} (wanted {n} more)",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn dataset_from_bytes(bytes: &[u8]) -> Result<EncodedDataset> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != DATASET_MAGIC {
        return Err(SketchError::Format("not a sketch dataset file".into()));
    }
    let version = r.u32()?;
    if version != DATASET_VERSION as usize {
        return Err(SketchError::Format(format!("unsupported version {version}")));
    }
    let n_classes = r.u32()?;
    let mut class_names = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let len = r.u32()?;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| SketchError::Format("class name is not UTF-8".into()))?;
        class_names.push(name.to_string());
    }
    let n_rows = r.u32()?;
    let width = r.u32()?;
    if width != ROW_WIDTH {
        return Err(SketchError::Format(format!("row width {width}, expected {ROW_WIDTH}")));
    }
    let n_samples = r.u32()?;
    let mut samples = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let label = r.u32()?;
        if label >= n_classes {
            return Err(SketchError::Format(format!("sample {i}: label {label} out of range")));
        }
        let split = match r.take(1)?[0] {
            0 => Split::Train,
            1 => Split::Validation,
            b => return Err(SketchError::Format(format!("sample {i}: bad split tag {b}"))),
        };
        let data = (0..n_rows * ROW_WIDTH)
            .map(|_| r.f64())
            .collect::<Result<Vec<f64>>>()?;
        samples.push(EncodedSample {
            label,
            split,
            matrix: Tensor::matrix(n_rows, ROW_WIDTH, data),
        });
    }
    if r.pos != bytes.len() {
        return Err(SketchError::Format("trailing bytes after last sample".into()));
    }
    Ok(EncodedDataset {
        class_names,
        n_rows,
        samples,
        dropped: 0,
    })
}

pub fn write_dataset(ds: &EncodedDataset, path: &Path) -> Result<()> {
    std::fs::write(path, dataset_to_bytes(ds)).map_err(|e| SketchError::Io(format!("{}: {e}", path.display())))
}

pub fn read_dataset(path: &Path) -> Result<EncodedDataset> {
    let bytes = std::fs::read(path).map_err(|e| SketchError::Io(format!("{}: {e}", path.display())))?;
    dataset_from_bytes(&bytes)
}
