use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use quantumdraw::par::Execution;
use quantumdraw::sketchdata::{
    dataset_from_bytes, dataset_to_bytes, diagonal, encode_dataset, encode_drawing, fit_stroke, synthetic,
    BezierSegment, EncodeConfig, Point, RawDrawing, Split, Stroke, ROW_WIDTH, SUPPORTED_CATEGORIES,
};

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

#[test]
fn exact_cubics_are_recovered() {
    let cubics = [
        [p(0.0, 0.0), p(1.0, 2.0), p(3.0, 2.0), p(4.0, 0.0)],
        [p(0.0, 0.0), p(2.0, 1.0), p(4.0, -1.0), p(6.0, 0.5)],
        [p(10.0, 5.0), p(12.0, 9.0), p(17.0, 10.0), p(20.0, 6.0)],
    ];
    for c in cubics {
        let seg = BezierSegment::new(c[0], c[1], c[2], c[3]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let uniform: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let mut random: Vec<f64> = (0..18).map(|_| rng.random_range(0.02..0.98)).collect();
        random.sort_by(f64::total_cmp);
        random.insert(0, 0.0);
        random.push(1.0);
        for ts in [uniform, random] {
            let pts: Vec<Point> = ts.iter().map(|&t| seg.eval(t)).collect();
            let fit = fit_stroke(&pts, 1e-8);
            assert_eq!(fit.len(), 1, "{c:?}");
            assert!(fit[0].residual <= 1e-8, "residual {}", fit[0].residual);
            let got = fit[0].segment.control_points();
            for (a, b) in got.iter().zip(&c) {
                assert!(a.dist(*b) < 1e-6, "{a:?} vs {b:?}");
            }
            for (t, f) in ts.iter().zip(&fit[0].params) {
                assert!((t - f).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn half_circle_needs_several_segments() {
    let pts: Vec<Point> = (0..50)
        .map(|i| {
            let a = PI * i as f64 / 49.0;
            p(a.cos(), a.sin())
        })
        .collect();
    let tol = 0.002;
    let max_error = tol * diagonal(pts.iter().copied());
    let fit = fit_stroke(&pts, max_error);
    assert!(fit.len() >= 2, "{} segments", fit.len());
    check_fit(&pts, max_error);
}

/// Independent residual check: every covered point is evaluated on its
/// segment at the parameter the fit reports for it.
fn check_fit(points: &[Point], max_error: f64) {
    let fit = fit_stroke(points, max_error);
    assert_eq!(fit[0].start, 0);
    assert_eq!(fit.last().unwrap().end, points.len() - 1);
    for (i, f) in fit.iter().enumerate() {
        let covered = &points[f.start..=f.end];
        assert_eq!(f.params.len(), covered.len());
        assert!(f.params.iter().all(|t| (0.0..=1.0).contains(t)));
        for (pt, &t) in covered.iter().zip(&f.params) {
            let d = f.segment.eval(t).dist(*pt);
            assert!(d <= max_error + 1e-9, "segment {i}: {d} > {max_error}");
        }
        assert_eq!(f.segment.p0, points[f.start]);
        assert_eq!(f.segment.p3, points[f.end]);
        if i + 1 < fit.len() {
            assert_eq!(f.segment.p3, fit[i + 1].segment.p0);
            assert!(!f.segment.eos);
        }
    }
    assert!(fit.last().unwrap().segment.eos);
}

#[test]
fn hundred_drawings_reconstruct_within_tolerance() {
    let drawings = synthetic::corpus(34, 77);
    let tol = 0.02;
    for d in drawings.iter().take(100) {
        let all: Vec<Point> = d.strokes.iter().flat_map(|s| s.points()).collect();
        let max_error = tol * diagonal(all.iter().copied());
        for s in &d.strokes {
            check_fit(&s.points(), max_error);
        }
    }
}

#[test]
fn encoded_rows_are_normalized_and_flagged() {
    let drawings = synthetic::corpus(10, 3);
    for d in &drawings {
        let segs = encode_drawing(d, 0.02);
        let eos = segs.iter().filter(|s| s.eos).count();
        assert_eq!(eos, d.strokes.len());
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for s in &segs {
            for q in s.control_points() {
                assert!((0.0..=1.0).contains(&q.x) && (0.0..=1.0).contains(&q.y));
                lo = [lo[0].min(q.x), lo[1].min(q.y)];
                hi = [hi[0].max(q.x), hi[1].max(q.y)];
            }
        }
        let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
        assert!((w.max(h) - 1.0).abs() < 1e-12);
        // the shorter side is centred
        let (short_lo, short_hi) = if w < h { (lo[0], hi[0]) } else { (lo[1], hi[1]) };
        assert!((short_lo - (1.0 - short_hi)).abs() < 1e-9);
    }
}

fn categories() -> Vec<String> {
    SUPPORTED_CATEGORIES.iter().map(|s| s.to_string()).collect()
}

#[test]
fn dataset_encoding_is_deterministic_and_padded() {
    let drawings = synthetic::corpus(10, 1);
    let cfg = EncodeConfig::default();
    let a = encode_dataset(&drawings, &categories(), &cfg, Execution::Parallel).unwrap();
    let b = encode_dataset(&drawings, &categories(), &cfg, Execution::Sequential).unwrap();
    assert_eq!(dataset_to_bytes(&a), dataset_to_bytes(&b));
    assert_eq!(a.class_counts(Some(Split::Train)), vec![8, 8, 8]);
    assert_eq!(a.class_counts(Some(Split::Validation)), vec![2, 2, 2]);
    let n = a.n_rows;
    assert_eq!(n, a.samples.iter().map(|s| s.segment_count()).max().unwrap());
    for s in &a.samples {
        assert_eq!(s.matrix.shape(), [n, ROW_WIDTH]);
        for r in s.segment_count()..n {
            assert!(s.matrix.row(r).iter().all(|&x| x == 0.0));
        }
    }
    assert_eq!(dataset_from_bytes(&dataset_to_bytes(&a)).unwrap(), a);
}

fn stroke_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..255.0, 0.0f64..255.0), 2..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn any_stroke_fits_within_tolerance(raw in stroke_strategy(), tol in 0.005f64..0.1) {
        let pts: Vec<Point> = raw.iter().map(|&(x, y)| p(x.round(), y.round())).collect();
        let max_error = tol * diagonal(pts.iter().copied()).max(1e-9);
        check_fit(&pts, max_error);
    }

    #[test]
    fn encoding_stays_in_unit_square(strokes in prop::collection::vec(stroke_strategy(), 1..5)) {
        let strokes: Vec<Stroke> = strokes
            .into_iter()
            .map(|s| Stroke::new(s.iter().map(|p| p.0).collect(), s.iter().map(|p| p.1).collect()))
            .collect();
        let n = strokes.len();
        let d = RawDrawing::new("camera", strokes).unwrap();
        let segs = encode_drawing(&d, 0.02);
        prop_assert_eq!(segs.iter().filter(|s| s.eos).count(), n);
        for s in &segs {
            for v in s.to_row() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
