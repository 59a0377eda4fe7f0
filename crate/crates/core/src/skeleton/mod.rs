//! The ridge set `S[w]`: interior points where the two largest reflected
//! fields tie. Located on a label grid, refined by root finding, chained
//! into arcs that run between junctions and polygon vertices.

mod connectivity;
mod grid;
mod ridges;

pub use connectivity::{connectivity_report, ConnectivityReport, RegionSummary};
pub use grid::{label_grid, CellLabel, LabelGrid};
pub use ridges::{extract_ridges, extract_ridges_with, RidgeOptions};

use serde::Serialize;
use thiserror::Error;

use crate::geom2d::{ConvexPolygon, Point2};

/// Radius around vertex `v` inside which the grid cannot resolve the
/// wedge: the truncation radius plus three cells, stretched by
/// `1 / sin(θ/2)` because a sharp wedge is under a cell wide long before
/// it reaches the vertex.
pub(crate) fn tip_radius(poly: &ConvexPolygon, v: usize, cell: f64, truncation: f64) -> f64 {
    let half = 0.5 * poly.interior_angle(v);
    truncation * poly.diameter() + 3.0 * cell / half.sin().min(1.0)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkeletonError {
    #[error("label grid resolution must be at least 64, got {0}")]
    InvalidResolution(usize),
    #[error("could not chain ridge points of pair {pair:?}: {detail}; raise the grid resolution")]
    ChainingFailure { pair: (usize, usize), detail: String },
    #[error("junction refinement failed near {seed}: {detail}")]
    JunctionFailure { seed: Point2, detail: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Endpoint {
    Vertex(usize),
    Junction(usize),
}

/// A piece of the ridge set along which fields `pair.0` and `pair.1` tie
/// and dominate every other field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RidgeArc {
    pub pair: (usize, usize),
    pub points: Vec<Point2>,
    pub start: Endpoint,
    pub end: Endpoint,
}

impl RidgeArc {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Point where three or more fields tie.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Junction {
    pub location: Point2,
    /// Pairs of the arcs that end here.
    pub incident_pairs: Vec<(usize, usize)>,
    /// Every field within tolerance of the maximum at the location.
    pub tied_fields: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Skeleton {
    pub arcs: Vec<RidgeArc>,
    pub junctions: Vec<Junction>,
    /// Grid cell the arcs were extracted at.
    pub cell_size: f64,
    pub tie_tolerance: f64,
    /// Relative radius around vertices inside which arcs are straight runs.
    pub vertex_truncation: f64,
}

impl Skeleton {
    /// All arc points, tagged with their pair.
    pub fn points(&self) -> impl Iterator<Item = ((usize, usize), Point2)> + '_ {
        self.arcs
            .iter()
            .flat_map(|a| a.points.iter().map(move |&p| (a.pair, p)))
    }

    /// Distance from `p` to the nearest arc segment.
    pub fn distance_to(&self, p: Point2) -> f64 {
        self.arcs
            .iter()
            .flat_map(|a| a.points.windows(2))
            .map(|w| crate::geom2d::distance_to_segment(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_polygon;
    use crate::geom2d::{distance_to_segment, regular_polygon, validate_polygon};
    use crate::reflections::ReflectedFieldSet;

    fn fields(v: &[Point2]) -> ReflectedFieldSet {
        ReflectedFieldSet::new(solve_polygon(&validate_polygon(v).unwrap(), 64, 3.0).unwrap()).unwrap()
    }

    fn pts(v: &[(f64, f64)]) -> Vec<Point2> {
        v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    fn run(f: &ReflectedFieldSet, resolution: usize) -> (LabelGrid, Skeleton) {
        let grid = label_grid(f, resolution).unwrap();
        let skel = extract_ridges(f, &grid, 1e-10).unwrap();
        (grid, skel)
    }

    fn equilateral() -> Vec<Point2> {
        pts(&[(0.0, 0.0), (1.0, 0.0), (0.5, 3f64.sqrt() / 2.0)])
    }

    fn hausdorff(a: &Skeleton, b: &Skeleton) -> f64 {
        let one = |x: &Skeleton, y: &Skeleton| x.points().map(|(_, p)| y.distance_to(p)).fold(0.0, f64::max);
        one(a, b).max(one(b, a))
    }

    #[test]
    fn equilateral_arms_are_bisectors() {
        let f = fields(&equilateral());
        let (grid, skel) = run(&f, 256);
        assert_eq!(skel.arcs.len(), 3);
        assert_eq!(skel.junctions.len(), 1);
        let c = Point2::new(0.5, 3f64.sqrt() / 6.0);
        assert!(skel.junctions[0].location.distance(c) < 1e-4);
        assert_eq!(skel.junctions[0].tied_fields, vec![0, 1, 2]);
        let mut seen = Vec::new();
        for arc in &skel.arcs {
            let Endpoint::Vertex(v) = arc.end else {
                panic!("arc {:?} does not end at a vertex", arc.pair);
            };
            assert_eq!(arc.start, Endpoint::Junction(0));
            seen.push(v);
            let tip = f.polygon().vertices()[v];
            let deviation = arc
                .points
                .iter()
                .map(|&p| distance_to_segment(p, c, tip))
                .fold(0.0, f64::max);
            assert!(deviation < 1e-4, "arc {:?} strays {deviation:e}", arc.pair);
        }
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2]);
        let report = connectivity_report(&grid, &skel);
        assert_eq!(report.region_count(), 3);
        assert!(report.regions_match_faces());
        assert!(report.complement_connected);
    }

    #[test]
    fn square_arms_are_half_diagonals() {
        let f = fields(&pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]));
        let (grid, skel) = run(&f, 256);
        assert_eq!(skel.arcs.len(), 4);
        assert_eq!(skel.junctions.len(), 1);
        let c = Point2::new(0.5, 0.5);
        assert!(skel.junctions[0].location.distance(c) < 1e-6);
        for arc in &skel.arcs {
            let Endpoint::Vertex(v) = arc.end else {
                panic!("arc {:?} does not end at a vertex", arc.pair);
            };
            let tip = f.polygon().vertices()[v];
            assert!(arc.points.iter().all(|&p| distance_to_segment(p, c, tip) < 1e-6));
        }
        let report = connectivity_report(&grid, &skel);
        assert_eq!(report.region_count(), 4);
        assert!(report.regions_match_faces() && report.complement_connected);
    }

    #[test]
    fn scalene_triangle_has_one_junction_and_three_tips() {
        let f = fields(&pts(&[(0.0, 0.0), (1.0, 0.0), (0.3, 0.8)]));
        let (grid, skel) = run(&f, 256);
        assert_eq!(skel.junctions.len(), 1);
        let mut ends: Vec<usize> = skel
            .arcs
            .iter()
            .map(|a| match a.end {
                Endpoint::Vertex(v) => v,
                Endpoint::Junction(_) => panic!("arc {:?} ends at a junction", a.pair),
            })
            .collect();
        ends.sort_unstable();
        assert_eq!(ends, vec![0, 1, 2]);
        assert!(connectivity_report(&grid, &skel).complement_connected);
    }

    #[test]
    fn pentagon_regions_and_connected_complement() {
        let f = fields(&regular_polygon(5, Point2::default(), 1.0, 0.1));
        let (grid, skel) = run(&f, 256);
        let report = connectivity_report(&grid, &skel);
        assert_eq!(report.region_count(), 5);
        assert!(report.regions_match_faces());
        assert!(report.complement_connected);
        assert_eq!(report.arcs, 5);
    }

    #[test]
    fn ridge_points_belong_to_the_max() {
        let f = fields(&pts(&[(0.0, 0.0), (1.0, 0.0), (0.3, 0.8)]));
        let (_, skel) = run(&f, 256);
        let tol = skel.tie_tolerance;
        let cutoff = 1.01 * skel.vertex_truncation * f.polygon().diameter();
        for arc in &skel.arcs {
            let (i, j) = arc.pair;
            for &p in &arc.points {
                if f.polygon().vertices().iter().any(|v| v.distance(p) < cutoff) {
                    continue;
                }
                let u = f.fields_at(p);
                assert!((u[i] - u[j]).abs() < tol, "{p}: {:e}", u[i] - u[j]);
                assert!(u.iter().all(|&uk| u[i] >= uk - tol));
            }
            if let Endpoint::Vertex(v) = arc.end {
                let tip = f.polygon().vertices()[v];
                assert!(arc.points.last().unwrap().distance(tip) < 10.0 * tol);
                let u = f.fields_at(tip);
                assert!(u[i].abs() < 2e-2 && u[j].abs() < 2e-2);
            }
        }
        // consecutive points closer than two cells
        for arc in &skel.arcs {
            assert!(arc
                .points
                .windows(2)
                .all(|w| w[0].distance(w[1]) < 2.0 * skel.cell_size));
        }
    }

    #[test]
    fn skeleton_shares_the_square_symmetry() {
        let f = fields(&pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]));
        let (_, skel) = run(&f, 128);
        let c = Point2::new(0.5, 0.5);
        let worst = skel
            .points()
            .map(|(_, p)| {
                let d = p - c;
                skel.distance_to(c + d.perp())
                    .max(skel.distance_to(Point2::new(p.y, p.x)))
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst:e}");
    }

    #[test]
    fn doubling_resolution_barely_moves_arcs() {
        let f = fields(&pts(&[(0.0, 0.0), (1.0, 0.0), (0.3, 0.8)]));
        let (coarse_grid, coarse) = run(&f, 128);
        let (_, fine) = run(&f, 256);
        assert!(hausdorff(&coarse, &fine) < coarse_grid.cell_size());
    }

    #[test]
    fn short_side_arcs_are_completed() {
        // side 1 is a few cells long at this resolution
        let f = fields(&pts(&[
            (0.894_887_909_460_580_8, 0.446_290_969_549_319_2),
            (-0.493_134_728_083_040_6, 0.869_952_952_727_022_8),
            (-0.500_691_383_629_638_4, 0.865_625_865_116_701_7),
            (0.474_022_025_596_014_9, -0.880_512_986_417_492_3),
        ]));
        let (grid, skel) = run(&f, 512);
        assert_eq!(skel.arcs.len(), 5);
        assert_eq!(skel.junctions.len(), 2);
        let report = connectivity_report(&grid, &skel);
        assert_eq!(report.region_count(), 4);
        assert!(report.complement_connected);
    }
}
