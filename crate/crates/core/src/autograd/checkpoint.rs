//! Text checkpoint container.
//!
//! ```text
//! quantumdraw-checkpoint 1
//! meta <key> <value…>
//! tensor <name> <rank> <dim…>
//! <values, space separated>
//! end
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a save/load
//! cycle is bit-exact. Meta values are single-line strings.

use std::fmt::Write as _;
use std::path::Path;

use super::tensor::Tensor;
use super::{AutogradError, Result};

pub const CHECKPOINT_MAGIC: &str = "quantumdraw-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub meta: Vec<(String, String)>,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\n");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta {k} {}", v.replace('\n', " "));
        }
        for (name, t) in &self.tensors {
            let _ = write!(out, "tensor {name} {}", t.rank());
            for d in t.shape() {
                let _ = write!(out, " {d}");
            }
            out.push('\n');
            let vals: Vec<String> = t.data().iter().map(|x| format!("{x:?}")).collect();
            out.push_str(&vals.join(" "));
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| AutogradError::Checkpoint(format!("line {line}: {msg}"));
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l).unwrap_or_default();
        let version = header
            .strip_prefix(CHECKPOINT_MAGIC)
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| bad(1, "missing checkpoint header"))?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(1, &format!("unsupported version {version}")));
        }
        let mut ck = Checkpoint::default();
        let mut ended = false;
        while let Some((i, line)) = lines.next() {
            let ln = i + 1;
            if line == "end" {
                ended = true;
                break;
            }
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                ck.meta.push((k.to_string(), v.to_string()));
            } else if let Some(rest) = line.strip_prefix("tensor ") {
                let fields: Vec<&str> = rest.split_whitespace().collect();
                if fields.len() < 2 {
                    return Err(bad(ln, "truncated tensor header"));
                }
                let rank: usize = fields[1].parse().map_err(|_| bad(ln, "bad rank"))?;
                if rank > 3 || fields.len() != 2 + rank {
                    return Err(bad(ln, "bad tensor shape"));
                }
                let shape: Vec<usize> = fields[2..]
                    .iter()
                    .map(|d| d.parse().map_err(|_| bad(ln, "bad dimension")))
                    .collect::<Result<_>>()?;
                let (_, body) = lines.next().ok_or_else(|| bad(ln, "missing tensor body"))?;
                let data: Vec<f64> = body
                    .split_whitespace()
                    .map(|x| x.parse().map_err(|_| bad(ln + 1, "bad value")))
                    .collect::<Result<_>>()?;
                if data.len() != shape.iter().product::<usize>() {
                    return Err(bad(ln + 1, "value count does not match shape"));
                }
                ck.tensors
                    .push((fields[0].to_string(), Tensor::new(shape, data)));
            } else {
                return Err(bad(ln, "unrecognised record"));
            }
        }
        if !ended {
            return Err(bad(0, "missing end marker"));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| AutogradError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AutogradError::Io(e.to_string()))?;
        Self::parse(&text)
    }
}
