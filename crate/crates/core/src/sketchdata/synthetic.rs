//! Procedural stand-ins for the three sketch classes.
//!
//! Useful for smoke tests, benchmarks and offline demos: the drawings use
//! the simplified format's integer 0–255 coordinates and loosely mimic how
//! people draw each object (a keypad of dashes for calculators, a wide body
//! with a round lens for cameras, a tall body with a screen for phones),
//! with random placement, rotation, jitter and omitted parts.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::drawing::{RawDrawing, Stroke};

struct Pen<'r, R: Rng> {
    rng: &'r mut R,
    angle: f64,
    center: (f64, f64),
    jitter: f64,
}

impl<R: Rng> Pen<'_, R> {
    fn stroke(&mut self, pts: &[(f64, f64)]) -> Stroke {
        let (s, c) = self.angle.sin_cos();
        let (cx, cy) = self.center;
        let mut xs = Vec::with_capacity(pts.len());
        let mut ys = Vec::with_capacity(pts.len());
        for &(x, y) in pts {
            let (dx, dy) = (x - cx, y - cy);
            let jx = self.rng.random_range(-self.jitter..=self.jitter);
            let jy = self.rng.random_range(-self.jitter..=self.jitter);
            xs.push((cx + c * dx - s * dy + jx).round().clamp(0.0, 255.0));
            ys.push((cy + s * dx + c * dy + jy).round().clamp(0.0, 255.0));
        }
        Stroke::new(xs, ys)
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64) -> Stroke {
        self.stroke(&[(x, y), (x + w, y), (x + w, y + h), (x, y + h), (x, y)])
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, n: usize) -> Stroke {
        let pts: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                (cx + r * a.cos(), cy + r * a.sin())
            })
            .collect();
        self.stroke(&pts)
    }
}

fn body<R: Rng>(rng: &mut R, w: (f64, f64), h: (f64, f64)) -> (f64, f64, f64, f64) {
    let w = rng.random_range(w.0..w.1);
    let h = rng.random_range(h.0..h.1);
    let x = rng.random_range(0.0..(255.0 - w).max(1.0));
    let y = rng.random_range(0.0..(255.0 - h).max(1.0));
    (x, y, w, h)
}

pub fn calculator<R: Rng>(rng: &mut R) -> RawDrawing {
    let (x, y, w, h) = body(rng, (130.0, 190.0), (190.0, 250.0));
    let angle = rng.random_range(-0.12..0.12);
    let mut pen = Pen { rng, angle, center: (x + w / 2.0, y + h / 2.0), jitter: 2.0 };
    let mut strokes = vec![pen.rect(x, y, w, h)];
    if pen.rng.random_bool(0.85) {
        strokes.push(pen.rect(x + 0.12 * w, y + 0.08 * h, 0.76 * w, 0.2 * h));
    }
    let rows = pen.rng.random_range(3..=4);
    let cols = pen.rng.random_range(3..=4);
    for r in 0..rows {
        for c in 0..cols {
            if pen.rng.random_bool(0.1) {
                continue;
            }
            let kx = x + (0.15 + 0.7 * (c as f64 + 0.25) / cols as f64) * w;
            let ky = y + (0.38 + 0.55 * (r as f64 + 0.5) / rows as f64) * h;
            let len = 0.35 * 0.7 * w / cols as f64;
            strokes.push(pen.stroke(&[(kx, ky), (kx + len / 2.0, ky), (kx + len, ky)]));
        }
    }
    RawDrawing::new("calculator", strokes).expect("generator emits valid strokes")
}

pub fn camera<R: Rng>(rng: &mut R) -> RawDrawing {
    let (x, y, w, h) = body(rng, (190.0, 250.0), (110.0, 160.0));
    let angle = rng.random_range(-0.12..0.12);
    let mut pen = Pen { rng, angle, center: (x + w / 2.0, y + h / 2.0), jitter: 2.0 };
    let mut strokes = vec![pen.rect(x, y, w, h)];
    let r = pen.rng.random_range(0.25..0.38) * h.min(w);
    let (lx, ly) = (x + w * pen.rng.random_range(0.45..0.55), y + h * 0.55);
    strokes.push(pen.circle(lx, ly, r, 16));
    if pen.rng.random_bool(0.5) {
        strokes.push(pen.circle(lx, ly, 0.5 * r, 10));
    }
    if pen.rng.random_bool(0.7) {
        strokes.push(pen.rect(x + 0.1 * w, y - 0.12 * h, 0.2 * w, 0.12 * h));
    }
    RawDrawing::new("camera", strokes).expect("generator emits valid strokes")
}

pub fn cellphone<R: Rng>(rng: &mut R) -> RawDrawing {
    let (x, y, w, h) = body(rng, (80.0, 130.0), (190.0, 250.0));
    let angle = rng.random_range(-0.12..0.12);
    let mut pen = Pen { rng, angle, center: (x + w / 2.0, y + h / 2.0), jitter: 2.0 };
    let mut strokes = vec![pen.rect(x, y, w, h)];
    if pen.rng.random_bool(0.9) {
        strokes.push(pen.rect(x + 0.1 * w, y + 0.12 * h, 0.8 * w, 0.66 * h));
    }
    if pen.rng.random_bool(0.6) {
        strokes.push(pen.circle(x + 0.5 * w, y + 0.88 * h, 0.07 * h, 8));
    }
    if pen.rng.random_bool(0.3) {
        let sy = y + 0.05 * h;
        strokes.push(pen.stroke(&[(x + 0.4 * w, sy), (x + 0.6 * w, sy)]));
    }
    RawDrawing::new("cellphone", strokes).expect("generator emits valid strokes")
}

/// `per_class` drawings of each class, interleaved class by class.
pub fn corpus(per_class: usize, seed: u64) -> Vec<RawDrawing> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(3 * per_class);
    for _ in 0..per_class {
        out.push(calculator(&mut rng));
        out.push(camera(&mut rng));
        out.push(cellphone(&mut rng));
    }
    out
}

/// Writes `<dir>/<category>.ndjson` files laid out like the downloaded
/// ones.
pub fn write_category_files(dir: &std::path::Path, per_class: usize, seed: u64) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let drawings = corpus(per_class, seed);
    for cat in super::SUPPORTED_CATEGORIES {
        let text: String = drawings
            .iter()
            .filter(|d| d.category == cat)
            .map(|d| d.to_ndjson_line() + "\n")
            .collect();
        std::fs::write(super::category_file(dir, cat), text)?;
    }
    Ok(())
}
