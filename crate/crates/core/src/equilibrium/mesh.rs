use serde::Serialize;

use crate::geom2d::{ConvexPolygon, Point2};

use super::EquilibriumError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Panel {
    pub a: Point2,
    pub b: Point2,
    pub face: usize,
}

impl Panel {
    pub fn midpoint(&self) -> Point2 {
        self.a.lerp(self.b, 0.5)
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }
}

/// Piecewise-linear tiling of the polygon boundary, graded toward every
/// vertex. Panels run counterclockwise, so `panels[i].b == panels[i+1].a`.
#[derive(Clone, Debug)]
pub struct BoundaryMesh {
    polygon: ConvexPolygon,
    panels: Vec<Panel>,
    nodes: Vec<Point2>,
    lengths: Vec<f64>,
    panels_per_side: usize,
    grading: f64,
}

/// Grading map on [0, 1], symmetric about 1/2, with derivative zero of
/// order `p - 1` at both ends. `p = 1` is the identity.
fn graded(s: f64, p: f64) -> f64 {
    if s <= 0.5 {
        0.5 * (2.0 * s).powf(p)
    } else {
        1.0 - 0.5 * (2.0 * (1.0 - s)).powf(p)
    }
}

pub fn build_mesh(
    poly: &ConvexPolygon,
    panels_per_side: usize,
    grading_exponent: f64,
) -> Result<BoundaryMesh, EquilibriumError> {
    if panels_per_side < 8 {
        return Err(EquilibriumError::InvalidResolution(format!(
            "panels_per_side must be at least 8, got {panels_per_side}"
        )));
    }
    if !grading_exponent.is_finite() || grading_exponent < 1.0 {
        return Err(EquilibriumError::InvalidResolution(format!(
            "grading exponent must be at least 1, got {grading_exponent}"
        )));
    }
    let n = panels_per_side;
    let mut panels = Vec::with_capacity(poly.len() * n);
    for face in 0..poly.len() {
        let (va, vb) = poly.side(face);
        let mut prev = va;
        for k in 1..=n {
            let next = if k == n {
                vb
            } else {
                va.lerp(vb, graded(k as f64 / n as f64, grading_exponent))
            };
            panels.push(Panel { a: prev, b: next, face });
            prev = next;
        }
    }
    let nodes = panels.iter().map(Panel::midpoint).collect();
    let lengths = panels.iter().map(Panel::length).collect();
    Ok(BoundaryMesh {
        polygon: poly.clone(),
        panels,
        nodes,
        lengths,
        panels_per_side,
        grading: grading_exponent,
    })
}

impl BoundaryMesh {
    pub fn polygon(&self) -> &ConvexPolygon {
        &self.polygon
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    /// Collocation points (panel midpoints).
    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn panels_per_side(&self) -> usize {
        self.panels_per_side
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }
}
