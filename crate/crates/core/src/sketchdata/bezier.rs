//! Least-squares cubic Bezier fitting with recursive splitting.
//!
//! Each stroke is first parameterized by normalized cumulative chord length.
//! The end anchors are pinned to the first and last points and the two inner
//! control points solve a 2×2 normal system. A damped Gauss-Newton pass then
//! refines the inner control points and the per-point parameters together,
//! so points sampled from a cubic at any spacing recover that cubic. When
//! the worst point lies further than the allowed residual from the curve
//! (measured at its refined parameter) the stroke is split at that point and
//! both halves are refit, so neighbouring segments share their anchor
//! exactly.

use super::Point;

/// Four control points plus the two per-row flags of the encoded form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BezierSegment {
    pub p0: Point,
    pub p1: Point,
    pub p2: Point,
    pub p3: Point,
    pub eos: bool,
    pub valid: bool,
}

impl BezierSegment {
    pub fn new(p0: Point, p1: Point, p2: Point, p3: Point) -> Self {
        Self {
            p0,
            p1,
            p2,
            p3,
            eos: false,
            valid: true,
        }
    }

    /// All-zero padding row.
    pub fn padding() -> Self {
        let o = Point::new(0.0, 0.0);
        Self {
            p0: o,
            p1: o,
            p2: o,
            p3: o,
            eos: false,
            valid: false,
        }
    }

    pub fn control_points(&self) -> [Point; 4] {
        [self.p0, self.p1, self.p2, self.p3]
    }

    pub fn eval(&self, t: f64) -> Point {
        let [b0, b1, b2, b3] = bernstein(t);
        Point::new(
            b0 * self.p0.x + b1 * self.p1.x + b2 * self.p2.x + b3 * self.p3.x,
            b0 * self.p0.y + b1 * self.p1.y + b2 * self.p2.y + b3 * self.p3.y,
        )
    }

    /// `[x0 y0 x1 y1 x2 y2 x3 y3 eos valid]`.
    pub fn to_row(&self) -> [f64; 10] {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        [
            self.p0.x,
            self.p0.y,
            self.p1.x,
            self.p1.y,
            self.p2.x,
            self.p2.y,
            self.p3.x,
            self.p3.y,
            flag(self.eos),
            flag(self.valid),
        ]
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Self {
        Self {
            p0: f(self.p0),
            p1: f(self.p1),
            p2: f(self.p2),
            p3: f(self.p3),
            ..*self
        }
    }
}

#[inline]
fn bernstein(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [s * s * s, 3.0 * t * s * s, 3.0 * t * t * s, t * t * t]
}

/// A fitted segment together with the input points it covers
/// (`start..=end`, indices into the stroke), their curve parameters and
/// the worst residual.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedSegment {
    pub segment: BezierSegment,
    pub start: usize,
    pub end: usize,
    pub params: Vec<f64>,
    pub residual: f64,
}

/// Normalized cumulative chord length; all zeros when the points coincide.
pub fn chord_params(points: &[Point]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut d = Vec::with_capacity(points.len());
    d.push(0.0);
    for w in points.windows(2) {
        acc += w[0].dist(w[1]);
        d.push(acc);
    }
    if acc > 0.0 {
        d.iter_mut().for_each(|v| *v /= acc);
        if let Some(last) = d.last_mut() {
            *last = 1.0;
        }
    }
    d
}

/// Single least-squares cubic through fixed end anchors at the given
/// parameters.
///
/// The inner points are solved as offsets from the chord-thirds placement.
/// Rank-deficient systems take the minimum-norm offset, so two-point input
/// gives the straight thirds cubic and three-point input interpolates its
/// middle point.
pub fn least_squares_cubic(points: &[Point], params: &[f64]) -> BezierSegment {
    let p0 = points[0];
    let p3 = points[points.len() - 1];
    let third = Point::new((p3.x - p0.x) / 3.0, (p3.y - p0.y) / 3.0);
    let q1 = Point::new(p0.x + third.x, p0.y + third.y);
    let q2 = Point::new(p0.x + 2.0 * third.x, p0.y + 2.0 * third.y);

    let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
    let (mut rx1, mut rx2, mut ry1, mut ry2) = (0.0, 0.0, 0.0, 0.0);
    for (p, &t) in points.iter().zip(params) {
        let [b0, b1, b2, b3] = bernstein(t);
        let base_x = b0 * p0.x + b1 * q1.x + b2 * q2.x + b3 * p3.x;
        let base_y = b0 * p0.y + b1 * q1.y + b2 * q2.y + b3 * p3.y;
        let (rx, ry) = (p.x - base_x, p.y - base_y);
        a11 += b1 * b1;
        a12 += b1 * b2;
        a22 += b2 * b2;
        rx1 += b1 * rx;
        rx2 += b2 * rx;
        ry1 += b1 * ry;
        ry2 += b2 * ry;
    }
    let solve = solver(a11, a12, a22);
    let (dx1, dx2) = solve(rx1, rx2);
    let (dy1, dy2) = solve(ry1, ry2);
    BezierSegment::new(
        p0,
        Point::new(q1.x + dx1, q1.y + dy1),
        Point::new(q2.x + dx2, q2.y + dy2),
        p3,
    )
}

/// Minimum-norm solver for the symmetric 2×2 system `[[a11, a12], [a12, a22]]`.
fn solver(a11: f64, a12: f64, a22: f64) -> impl Fn(f64, f64) -> (f64, f64) {
    let half_tr = (a11 + a22) / 2.0;
    let disc = (((a11 - a22) / 2.0).powi(2) + a12 * a12).sqrt();
    let (l1, l2) = (half_tr + disc, half_tr - disc);
    let det = a11 * a22 - a12 * a12;
    // leading eigenvector, from whichever row is better conditioned
    let (u, v) = if (l1 - a11).abs() + a12.abs() >= (l1 - a22).abs() + a12.abs() {
        (a12, l1 - a11)
    } else {
        (l1 - a22, a12)
    };
    let norm = u.hypot(v);
    move |r1: f64, r2: f64| {
        if l1 <= 0.0 {
            (0.0, 0.0)
        } else if l2 <= 1e-10 * l1 {
            let (e1, e2) = if norm > 0.0 { (u / norm, v / norm) } else { (1.0, 0.0) };
            let k = (e1 * r1 + e2 * r2) / l1;
            (k * e1, k * e2)
        } else {
            ((a22 * r1 - a12 * r2) / det, (a11 * r2 - a12 * r1) / det)
        }
    }
}

fn sq_error(seg: &BezierSegment, points: &[Point], params: &[f64]) -> f64 {
    points
        .iter()
        .zip(params)
        .map(|(p, &t)| {
            let q = seg.eval(t);
            (q.x - p.x).powi(2) + (q.y - p.y).powi(2)
        })
        .sum()
}

fn derivative(seg: &BezierSegment, t: f64) -> Point {
    let s = 1.0 - t;
    let [a, b, c] = [3.0 * s * s, 6.0 * t * s, 3.0 * t * t];
    let d = |p: Point, q: Point| Point::new(q.x - p.x, q.y - p.y);
    let (d0, d1, d2) = (d(seg.p0, seg.p1), d(seg.p1, seg.p2), d(seg.p2, seg.p3));
    Point::new(a * d0.x + b * d1.x + c * d2.x, a * d0.y + b * d1.y + c * d2.y)
}

const REFINE_ITERS: usize = 60;

/// Levenberg-Marquardt over the unknowns `(p1, p2, t_1 … t_{n−2})`. Each
/// interior parameter touches only its own residual, so the normal matrix
/// is reduced to a 4×4 Schur complement per step.
fn refine(points: &[Point], mut seg: BezierSegment, mut params: Vec<f64>) -> (BezierSegment, Vec<f64>) {
    let n = points.len();
    if n < 4 {
        return (seg, params);
    }
    let scale = diagonal(points.iter().copied()).max(f64::MIN_POSITIVE);
    let floor = (1e-15 * scale).powi(2);
    let mut cost = sq_error(&seg, points, &params);
    let mut lambda = 1e-3;
    for _ in 0..REFINE_ITERS {
        if cost <= floor {
            break;
        }
        // unknown order: p1.x, p2.x, p1.y, p2.y
        let mut acc = [[0.0; 4]; 4];
        let mut gc = [0.0; 4];
        let mut act = vec![[0.0; 4]; n];
        let mut dd = vec![0.0; n];
        let mut gt = vec![0.0; n];
        for i in 1..n - 1 {
            let t = params[i];
            let [_, b1, b2, _] = bernstein(t);
            let q = seg.eval(t);
            let r = [q.x - points[i].x, q.y - points[i].y];
            let db = derivative(&seg, t);
            let rows = [[b1, b2, 0.0, 0.0], [0.0, 0.0, b1, b2]];
            for (row, (ri, di)) in rows.iter().zip(r.iter().zip([db.x, db.y])) {
                for a in 0..4 {
                    gc[a] += row[a] * ri;
                    act[i][a] += row[a] * di;
                    for b in 0..4 {
                        acc[a][b] += row[a] * row[b];
                    }
                }
            }
            dd[i] = db.x * db.x + db.y * db.y;
            gt[i] = db.x * r[0] + db.y * r[1];
        }
        let mut improved = false;
        while lambda < 1e12 {
            let dl: Vec<f64> = dd.iter().map(|d| d * (1.0 + lambda) + lambda).collect();
            let mut s = acc;
            let mut rhs = gc.map(|g| -g);
            for a in 0..4 {
                s[a][a] += lambda * (acc[a][a] + 1.0);
            }
            for i in 1..n - 1 {
                for a in 0..4 {
                    rhs[a] += act[i][a] * gt[i] / dl[i];
                    for b in 0..4 {
                        s[a][b] -= act[i][a] * act[i][b] / dl[i];
                    }
                }
            }
            let Some(dc) = solve4(s, rhs) else {
                lambda *= 10.0;
                continue;
            };
            let mut cand = seg;
            cand.p1 = Point::new(seg.p1.x + dc[0], seg.p1.y + dc[2]);
            cand.p2 = Point::new(seg.p2.x + dc[1], seg.p2.y + dc[3]);
            let mut cand_t = params.clone();
            for i in 1..n - 1 {
                let dt = (-gt[i] - (0..4).map(|a| act[i][a] * dc[a]).sum::<f64>()) / dl[i];
                cand_t[i] = (params[i] + dt).clamp(0.0, 1.0);
            }
            let c = sq_error(&cand, points, &cand_t);
            if c < cost {
                let gain = cost - c;
                seg = cand;
                params = cand_t;
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = gain > 1e-14 * c;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (seg, params)
}

/// Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[piv][col].abs() > 0.0) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn max_residual(seg: &BezierSegment, points: &[Point], params: &[f64]) -> (f64, usize) {
    points
        .iter()
        .zip(params)
        .enumerate()
        .map(|(i, (p, &t))| (seg.eval(t).dist(*p), i))
        .fold((0.0, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// Fits `points` with segments whose residual stays within `max_error`
/// (absolute units). The last segment carries `eos`.
pub fn fit_stroke(points: &[Point], max_error: f64) -> Vec<FittedSegment> {
    assert!(points.len() >= 2, "a stroke needs at least two points");
    let mut out = Vec::new();
    fit_range(points, 0, points.len() - 1, max_error, &mut out);
    if let Some(last) = out.last_mut() {
        last.segment.eos = true;
    }
    out
}

fn fit_range(points: &[Point], start: usize, end: usize, max_error: f64, out: &mut Vec<FittedSegment>) {
    let pts = &points[start..=end];
    let params = chord_params(pts);
    let (segment, params) = if params.last() == Some(&0.0) {
        // every point coincides
        let p = pts[0];
        (BezierSegment::new(p, p, p, p), params)
    } else {
        let seg = least_squares_cubic(pts, &params);
        refine(pts, seg, params)
    };
    let (residual, worst) = max_residual(&segment, pts, &params);
    if residual <= max_error || end - start < 2 || worst == 0 || worst == pts.len() - 1 {
        out.push(FittedSegment {
            segment,
            start,
            end,
            params,
            residual,
        });
        return;
    }
    let split = start + worst;
    fit_range(points, start, split, max_error, out);
    fit_range(points, split, end, max_error, out);
}

/// Bounding-box diagonal of a point set.
pub fn diagonal(points: impl IntoIterator<Item = Point>) -> f64 {
    let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    let mut any = false;
    for p in points {
        any = true;
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if any {
        lo.dist(hi)
    } else {
        0.0
    }
}

/// Fits a single stroke with `tol` taken as a fraction of the stroke's own
/// bounding-box diagonal.
pub fn fit_bezier(points: &[Point], tol: f64) -> Vec<BezierSegment> {
    let max_error = tol * diagonal(points.iter().copied());
    fit_stroke(points, max_error)
        .into_iter()
        .map(|f| f.segment)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn straight_two_point_stroke() {
        let segs = fit_stroke(&[p(0.0, 0.0), p(3.0, 0.0)], 0.01);
        assert_eq!(segs.len(), 1);
        let s = segs[0].segment;
        assert_eq!(s.control_points(), [p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(3.0, 0.0)]);
        assert_eq!(segs[0].residual, 0.0);
        assert!(s.eos && s.valid);
    }

    #[test]
    fn degenerate_stroke_is_a_point() {
        let segs = fit_bezier(&[p(4.0, 4.0); 5], 0.02);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].control_points(), [p(4.0, 4.0); 4]);
        assert!(segs[0].eos);
    }

    #[test]
    fn three_points_interpolate_middle() {
        let pts = [p(0.0, 0.0), p(1.0, 1.0), p(2.0, 0.0)];
        let segs = fit_stroke(&pts, 1e-9);
        assert_eq!(segs.len(), 1, "{segs:?}");
        assert!(segs[0].residual < 1e-9);
    }

    #[test]
    fn split_shares_anchors_and_only_last_has_eos() {
        // a zig-zag needs several segments at a tight tolerance
        let pts: Vec<Point> = (0..40)
            .map(|i| p(i as f64, if i % 10 < 5 { (i % 5) as f64 } else { 5.0 - (i % 5) as f64 }))
            .collect();
        let segs = fit_stroke(&pts, 0.05);
        assert!(segs.len() > 2);
        for w in segs.windows(2) {
            assert_eq!(w[0].segment.p3, w[1].segment.p0);
            assert_eq!(w[0].end, w[1].start);
            assert!(!w[0].segment.eos);
        }
        assert!(segs.last().unwrap().segment.eos);
        assert_eq!(segs[0].start, 0);
        assert_eq!(segs.last().unwrap().end, 39);
        assert!(segs.iter().all(|s| s.residual <= 0.05));
    }

    #[test]
    fn chord_params_normalized() {
        let t = chord_params(&[p(0.0, 0.0), p(3.0, 4.0), p(3.0, 9.0)]);
        assert_eq!(t, vec![0.0, 0.5, 1.0]);
        assert_eq!(chord_params(&[p(1.0, 1.0), p(1.0, 1.0)]), vec![0.0, 0.0]);
    }
}
