//! A rigid motion of the polygon moves the skeleton with it; a dilation
//! shifts the Robin constant by `log s` and leaves arc masses unchanged.

use eskel::geom2d::Point2;
use eskel::pipeline::{run_pipeline, Pipeline, RunConfig};

fn run(v: Vec<Point2>) -> Pipeline {
    run_pipeline(&RunConfig {
        panels_per_side: 48,
        grid_resolution: 320,
        samples_per_arc: 96,
        ..RunConfig::with_vertices(v)
    })
    .unwrap()
}

fn base() -> Vec<Point2> {
    vec![
        Point2::new(0.0, 0.0),
        Point2::new(1.2, 0.1),
        Point2::new(1.0, 0.9),
        Point2::new(0.1, 0.7),
    ]
}

fn sorted_masses(p: &Pipeline) -> Vec<f64> {
    let mut m = p.measure.arc_masses.clone();
    m.sort_by(f64::total_cmp);
    m
}

#[test]
fn rigid_motion_carries_the_skeleton() {
    let (c, s) = (0.7f64.cos(), 0.7f64.sin());
    let shift = Point2::new(-0.4, 2.5);
    let motion = |p: Point2| Point2::new(c * p.x - s * p.y, s * p.x + c * p.y) + shift;
    let a = run(base());
    let b = run(base().into_iter().map(motion).collect());
    assert_eq!(a.skeleton.junctions.len(), b.skeleton.junctions.len());
    let cell = a.skeleton.cell_size.max(b.skeleton.cell_size);
    for j in &a.skeleton.junctions {
        let moved = motion(j.location);
        let nearest = b
            .skeleton
            .junctions
            .iter()
            .map(|k| k.location.distance(moved))
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-6, "junction moved by {nearest:e} (cell {cell:e})");
    }
    let dg = (a.fields.solution().robin_constant() - b.fields.solution().robin_constant()).abs();
    assert!(dg < 1e-10, "{dg:e}");
    for (x, y) in sorted_masses(&a).iter().zip(sorted_masses(&b)) {
        assert!((x - y).abs() < 1e-4, "{x} vs {y}");
    }
}

#[test]
fn dilation_shifts_gamma_and_keeps_masses() {
    let scale = 3.0;
    let a = run(base());
    let b = run(base().into_iter().map(|p| p * scale).collect());
    let dg = b.fields.solution().robin_constant() - a.fields.solution().robin_constant() - scale.ln();
    assert!(dg.abs() < 1e-10, "{dg:e}");
    for (j, k) in a.skeleton.junctions.iter().zip(&b.skeleton.junctions) {
        assert!((j.location * scale).distance(k.location) < 1e-6 * scale);
    }
    for (x, y) in sorted_masses(&a).iter().zip(sorted_masses(&b)) {
        assert!((x - y).abs() < 1e-4, "{x} vs {y}");
    }
    let r = b.verify(None).unwrap();
    assert!(r.passed, "{:?}", r.failed_checks().collect::<Vec<_>>());
}
