use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::{Point, Result, SketchError};

/// One pen-down stroke as parallel coordinate arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Stroke {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Self { xs, ys }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn points(&self) -> Vec<Point> {
        self.xs
            .iter()
            .zip(&self.ys)
            .map(|(&x, &y)| Point::new(x, y))
            .collect()
    }
}

/// A drawing as read from a simplified category file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDrawing {
    pub category: String,
    pub strokes: Vec<Stroke>,
}

impl RawDrawing {
    /// Checks the structural invariants: at least one stroke, every stroke
    /// with ≥ 2 points and equal-length coordinate arrays.
    pub fn new(category: impl Into<String>, strokes: Vec<Stroke>) -> Result<Self> {
        if strokes.is_empty() {
            return Err(SketchError::EmptyDrawing);
        }
        for (i, s) in strokes.iter().enumerate() {
            if s.xs.len() != s.ys.len() {
                return Err(SketchError::RaggedStroke {
                    stroke: i,
                    xs: s.xs.len(),
                    ys: s.ys.len(),
                });
            }
            if s.xs.len() < 2 {
                return Err(SketchError::ShortStroke {
                    stroke: i,
                    points: s.xs.len(),
                });
            }
        }
        Ok(Self {
            category: category.into(),
            strokes,
        })
    }

    pub fn point_count(&self) -> usize {
        self.strokes.iter().map(Stroke::len).sum()
    }

    /// Serializes back to the simplified-format line shape
    /// (`{"word": …, "drawing": [[xs], [ys]], …}`).
    pub fn to_ndjson_line(&self) -> String {
        let drawing: Vec<Json> = self
            .strokes
            .iter()
            .map(|s| {
                let ints = |v: &[f64]| -> Json {
                    Json::Array(
                        v.iter()
                            .map(|&c| {
                                if c.fract() == 0.0 {
                                    Json::from(c as i64)
                                } else {
                                    Json::from(c)
                                }
                            })
                            .collect(),
                    )
                };
                Json::Array(vec![ints(&s.xs), ints(&s.ys)])
            })
            .collect();
        serde_json::json!({ "word": self.category, "drawing": drawing }).to_string()
    }
}

/// Parses one line of a simplified category file.
pub fn parse_drawing(line: &str) -> Result<RawDrawing> {
    let obj: Json = serde_json::from_str(line).map_err(|e| SketchError::Json(e.to_string()))?;
    let word = obj
        .get("word")
        .and_then(Json::as_str)
        .ok_or_else(|| SketchError::Json("missing string field `word`".into()))?;
    let drawing = obj
        .get("drawing")
        .and_then(Json::as_array)
        .ok_or_else(|| SketchError::Json("missing array field `drawing`".into()))?;
    let coords = |v: &Json, stroke: usize| -> Result<Vec<f64>> {
        v.as_array()
            .ok_or_else(|| SketchError::Json(format!("stroke {stroke}: coordinates are not an array")))?
            .iter()
            .map(|c| {
                c.as_f64()
                    .ok_or_else(|| SketchError::Json(format!("stroke {stroke}: non-numeric coordinate")))
            })
            .collect()
    };
    let mut strokes = Vec::with_capacity(drawing.len());
    for (i, s) in drawing.iter().enumerate() {
        let arrays = s
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| SketchError::Json(format!("stroke {i}: expected an [x, y] array pair")))?;
        strokes.push(Stroke::new(coords(&arrays[0], i)?, coords(&arrays[1], i)?));
    }
    RawDrawing::new(word, strokes)
}

/// One element of the pen-flag sequence: position plus `end_of_stroke`
/// set on the last point of every stroke.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequencePoint {
    pub x: f64,
    pub y: f64,
    pub end_of_stroke: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchSequence {
    pub points: Vec<SequencePoint>,
}

impl SketchSequence {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn stroke_count(&self) -> usize {
        self.points.iter().filter(|p| p.end_of_stroke).count()
    }
}

/// Concatenates strokes in order, flagging each stroke's final point.
pub fn to_sequence(raw: &RawDrawing) -> SketchSequence {
    let points = raw
        .strokes
        .iter()
        .flat_map(|s| {
            let last = s.len() - 1;
            s.xs.iter()
                .zip(&s.ys)
                .enumerate()
                .map(move |(i, (&x, &y))| SequencePoint {
                    x,
                    y,
                    end_of_stroke: i == last,
                })
        })
        .collect();
    SketchSequence { points }
}
