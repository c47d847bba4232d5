use waelab_demo::{covering_view, holder_curve, sq_curve};

#[test]
fn sq_curve_respects_bound() {
    for m in 1..=6 {
        let c = sq_curve(m).unwrap();
        assert_eq!(c.xs.len(), c.approx.len());
        assert!(c.max_error <= c.bound + 1e-12, "m={m}: {} > {}", c.max_error, c.bound);
    }
    assert!(sq_curve(0).is_err());
}

#[test]
fn holder_curve_meets_eta() {
    for f in ["sine", "square", "radial"] {
        let c = holder_curve(f, 0.05).unwrap();
        assert!(c.max_error <= 0.05, "{f}: {}", c.max_error);
        assert!(c.weights > 0 && c.boxes > 0);
    }
    assert!(holder_curve("nope", 0.1).is_err());
    assert!(holder_curve("sine", 2.0).is_err());
}

#[test]
fn covering_view_tracks_dimension() {
    let seg = covering_view("segment", 20_000, 1).unwrap();
    assert!((seg.slope - 1.0).abs() < 0.3);
    let sq = covering_view("square", 50_000, 1).unwrap();
    assert!((sq.slope - 2.0).abs() < 0.3);
    assert!(seg.counts.windows(2).all(|w| w[0] <= w[1]));
    assert!(covering_view("blob", 10, 1).is_err());
}
