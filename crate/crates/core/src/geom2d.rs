//! Planar geometry: points, supporting lines of polygon sides, reflections
//! across them, and validated convex polygons.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Counterclockwise rotation by a right angle.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n)
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Supporting line of one polygon side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceLine {
    pub origin: Point2,
    pub unit_tangent: Point2,
    /// Points into the polygon.
    pub unit_inward_normal: Point2,
}

impl FaceLine {
    /// Line through `a` and `b` with the inward side on the left, which is
    /// the interior for a counterclockwise polygon.
    pub fn through(a: Point2, b: Point2) -> Self {
        let t = (b - a).normalized();
        Self {
            origin: a,
            unit_tangent: t,
            unit_inward_normal: t.perp(),
        }
    }

    /// Positive on the inward side.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        (p - self.origin).dot(self.unit_inward_normal)
    }

    pub fn reflect(&self, p: Point2) -> Point2 {
        p - self.unit_inward_normal * (2.0 * self.signed_distance(p))
    }

    /// Linear part of the reflection, `I - 2 n n^T`, applied to a vector.
    /// The matrix is symmetric, so this is also its transpose.
    pub fn reflect_vector(&self, v: Point2) -> Point2 {
        v - self.unit_inward_normal * (2.0 * v.dot(self.unit_inward_normal))
    }
}

/// Mirror image of `p` across the line of `face`.
pub fn reflect_point(face: &FaceLine, p: Point2) -> Point2 {
    face.reflect(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Containment {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolygonError {
    #[error("a polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("vertex {0} repeats an earlier vertex")]
    DuplicateVertex(usize),
    #[error("degenerate angle at vertex {index} ({angle_deg:.4} degrees; minimum is {min_deg} degrees)")]
    DegenerateAngle { index: usize, angle_deg: f64, min_deg: f64 },
    #[error("polygon is not convex at vertex {0}; electrostatic skeletons need not exist for non-convex polygons")]
    NonConvex(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonOptions {
    /// Smallest accepted interior angle, degrees.
    pub min_angle_deg: f64,
}

impl Default for PolygonOptions {
    fn default() -> Self {
        Self { min_angle_deg: 5.0 }
    }
}

/// A strictly convex polygon with counterclockwise vertices. Face `j` runs
/// from vertex `j` to vertex `j + 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
    #[serde(skip)]
    faces: Vec<FaceLine>,
    #[serde(skip)]
    diameter: f64,
}

impl ConvexPolygon {
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn faces(&self) -> &[FaceLine] {
        &self.faces
    }

    pub fn face(&self, j: usize) -> &FaceLine {
        &self.faces[j]
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Endpoints of face `j`.
    pub fn side(&self, j: usize) -> (Point2, Point2) {
        let n = self.vertices.len();
        (self.vertices[j], self.vertices[(j + 1) % n])
    }

    pub fn side_length(&self, j: usize) -> f64 {
        let (a, b) = self.side(j);
        a.distance(b)
    }

    /// Interior angle at vertex `i`, radians.
    pub fn interior_angle(&self, i: usize) -> f64 {
        let n = self.vertices.len();
        let prev = self.vertices[(i + n - 1) % n];
        let next = self.vertices[(i + 1) % n];
        let v = self.vertices[i];
        let e1 = prev - v;
        let e2 = next - v;
        e1.cross(e2).abs().atan2(e1.dot(e2))
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len();
        let mut area2 = 0.0;
        let mut c = Point2::default();
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = p.cross(q);
            area2 += w;
            c = c + (p + q) * w;
        }
        c * (1.0 / (3.0 * area2))
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Point2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    /// Smallest signed distance to the face lines: positive inside.
    pub fn depth(&self, p: Point2) -> f64 {
        self.faces
            .iter()
            .map(|f| f.signed_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean distance from `p` to the boundary curve.
    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        (0..self.len())
            .map(|j| {
                let (a, b) = self.side(j);
                distance_to_segment(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the side nearest to `p`.
    pub fn nearest_face(&self, p: Point2) -> usize {
        let mut best = (f64::INFINITY, 0);
        for j in 0..self.len() {
            let (a, b) = self.side(j);
            let d = distance_to_segment(p, a, b);
            if d < best.0 {
                best = (d, j);
            }
        }
        best.1
    }

    /// The polygon scaled by `s` about the origin.
    pub fn scaled(&self, s: f64) -> Result<Self, PolygonError> {
        validate_polygon(&self.vertices.iter().map(|&v| v * s).collect::<Vec<_>>())
    }
}

pub fn distance_to_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Classifies `p` against the polygon with a boundary band of half-width
/// `1e-12 * diameter`.
pub fn contains(poly: &ConvexPolygon, p: Point2) -> Containment {
    let band = 1e-12 * poly.diameter;
    let d = poly.depth(p);
    if d > band {
        Containment::Interior
    } else if d < -band {
        Containment::Exterior
    } else {
        Containment::Boundary
    }
}

pub fn validate_polygon(vertices: &[Point2]) -> Result<ConvexPolygon, PolygonError> {
    validate_polygon_with(vertices, &PolygonOptions::default())
}

/// Builds a convex polygon, reordering clockwise input to counterclockwise.
/// Reported vertex indices refer to the input order.
pub fn validate_polygon_with(vertices: &[Point2], opts: &PolygonOptions) -> Result<ConvexPolygon, PolygonError> {
    let n = vertices.len();
    if n < 3 {
        return Err(PolygonError::TooFewVertices(n));
    }
    if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
        return Err(PolygonError::NonFinite(i));
    }
    let diameter = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| vertices[i].distance(vertices[j]))
        .fold(0.0, f64::max);
    for j in 1..n {
        if (0..j).any(|i| vertices[i].distance(vertices[j]) <= 1e-12 * diameter) {
            return Err(PolygonError::DuplicateVertex(j));
        }
    }

    let signed_area2: f64 = (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum();
    // Input index of each stored vertex.
    let order: Vec<usize> = if signed_area2 < 0.0 {
        (0..n).rev().collect()
    } else {
        (0..n).collect()
    };
    let verts: Vec<Point2> = order.iter().map(|&i| vertices[i]).collect();

    let min_angle = opts.min_angle_deg.to_radians();
    let mut total_turn = 0.0;
    for k in 0..n {
        let prev = verts[(k + n - 1) % n];
        let cur = verts[k];
        let next = verts[(k + 1) % n];
        let e_in = cur - prev;
        let e_out = next - cur;
        let cross = e_in.cross(e_out);
        let scale = e_in.norm() * e_out.norm();
        let sin_turn = cross / scale;
        if sin_turn.abs() <= 1e-12 {
            let angle_deg = if e_in.dot(e_out) > 0.0 { 180.0 } else { 0.0 };
            return Err(PolygonError::DegenerateAngle {
                index: order[k],
                angle_deg,
                min_deg: opts.min_angle_deg,
            });
        }
        if cross < 0.0 {
            return Err(PolygonError::NonConvex(order[k]));
        }
        let turn = cross.atan2(e_in.dot(e_out));
        total_turn += turn;
        let interior = std::f64::consts::PI - turn;
        if interior < min_angle {
            return Err(PolygonError::DegenerateAngle {
                index: order[k],
                angle_deg: interior.to_degrees(),
                min_deg: opts.min_angle_deg,
            });
        }
    }
    // All turns left but winding more than once: a star polygon.
    if (total_turn - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
        return Err(PolygonError::NonConvex(order[0]));
    }

    let faces = (0..n)
        .map(|j| FaceLine::through(verts[j], verts[(j + 1) % n]))
        .collect();
    Ok(ConvexPolygon {
        vertices: verts,
        faces,
        diameter,
    })
}

/// Regular `n`-gon inscribed in the circle of given center and radius, with
/// a vertex at angle `phase`.
pub fn regular_polygon(n: usize, center: Point2, radius: f64, phase: f64) -> Vec<Point2> {
    (0..n)
        .map(|k| {
            let t = phase + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            center + Point2::new(t.cos(), t.sin()) * radius
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn equilateral() -> ConvexPolygon {
        validate_polygon(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 3f64.sqrt() / 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn accepts_equilateral_and_square() {
        let tri = equilateral();
        assert_eq!(tri.faces().len(), 3);
        let sq = validate_polygon(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(sq.len(), 4);
        assert!((sq.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn collinear_is_degenerate() {
        let err = validate_polygon(&[Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)]).unwrap_err();
        assert!(matches!(err, PolygonError::DegenerateAngle { .. }), "{err:?}");
    }

    #[test]
    fn clockwise_input_is_reordered() {
        let poly = validate_polygon(&[
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ])
        .unwrap();
        assert!(poly.area() > 0.0);
        let c = poly.centroid();
        for f in poly.faces() {
            assert!(f.signed_distance(c) > 0.0);
        }
    }

    #[test]
    fn rejects_reflex_vertex() {
        let err = validate_polygon(&[
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 0.5),
            Point2::new(2.0, 2.0),
            Point2::new(0.0, 2.0),
        ])
        .unwrap_err();
        assert_eq!(err, PolygonError::NonConvex(2));
    }

    #[test]
    fn rejects_star_polygon() {
        let pts = regular_polygon(5, Point2::default(), 1.0, 0.0);
        let star: Vec<_> = (0..5).map(|k| pts[(2 * k) % 5]).collect();
        assert!(matches!(validate_polygon(&star), Err(PolygonError::NonConvex(_))));
    }

    #[test]
    fn rejects_duplicates_and_slivers() {
        let err = validate_polygon(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap_err();
        assert_eq!(err, PolygonError::DuplicateVertex(2));

        let err =
            validate_polygon(&[Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, 0.02)]).unwrap_err();
        match err {
            PolygonError::DegenerateAngle { angle_deg, .. } => assert!(angle_deg < 5.0),
            other => panic!("unexpected {other:?}"),
        }
        let relaxed = PolygonOptions { min_angle_deg: 1.0 };
        assert!(validate_polygon_with(
            &[Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, 0.02)],
            &relaxed
        )
        .is_ok());
    }

    #[test]
    fn reflection_fixtures() {
        let axis = FaceLine::through(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        let r = reflect_point(&axis, Point2::new(0.3, 0.4));
        assert!((r.x - 0.3).abs() < 1e-15 && (r.y + 0.4).abs() < 1e-15);
        let on = Point2::new(0.7, 0.0);
        assert_eq!(reflect_point(&axis, on), on);
    }

    #[test]
    fn containment_fixtures() {
        let tri = equilateral();
        assert_eq!(
            contains(&tri, Point2::new(0.5, 3f64.sqrt() / 6.0)),
            Containment::Interior
        );
        assert_eq!(contains(&tri, Point2::new(0.5, 0.0)), Containment::Boundary);
        assert_eq!(contains(&tri, Point2::new(10.0, 10.0)), Containment::Exterior);
    }

    #[test]
    fn reflected_interior_points_are_exterior() {
        let tri = equilateral();
        let c = tri.centroid();
        for f in tri.faces() {
            assert_eq!(contains(&tri, f.reflect(c)), Containment::Exterior);
        }
    }

    fn arb_point() -> impl Strategy<Value = Point2> {
        (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| Point2::new(x, y))
    }

    fn arb_face() -> impl Strategy<Value = FaceLine> {
        (arb_point(), 0.0..std::f64::consts::TAU)
            .prop_map(|(o, t)| FaceLine::through(o, o + Point2::new(t.cos(), t.sin())))
    }

    proptest! {
        #[test]
        fn reflection_is_involutive_isometry(f in arb_face(), p in arb_point(), q in arb_point()) {
            let rp = f.reflect(p);
            let back = f.reflect(rp);
            prop_assert!(back.distance(p) < 1e-12);
            prop_assert!((rp.distance(f.reflect(q)) - p.distance(q)).abs() < 1e-12);
            prop_assert!((f.unit_tangent.norm() - 1.0).abs() < 1e-12);
            prop_assert!(f.unit_tangent.dot(f.unit_inward_normal).abs() < 1e-12);
        }

        #[test]
        fn interior_points_reflect_outside(n in 3usize..9, phase in 0.0..1.0f64, s in 0.05..0.95f64, t in 0.0..std::f64::consts::TAU) {
            let poly = validate_polygon(&regular_polygon(n, Point2::default(), 1.0, phase)).unwrap();
            let p = Point2::new(t.cos(), t.sin()) * (s * (std::f64::consts::PI / n as f64).cos());
            prop_assert_eq!(contains(&poly, p), Containment::Interior);
            for f in poly.faces() {
                prop_assert_eq!(contains(&poly, f.reflect(p)), Containment::Exterior);
            }
        }
    }
}
