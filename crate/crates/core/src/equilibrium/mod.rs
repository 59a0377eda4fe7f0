//! Equilibrium measure of a convex polygon and its logarithmic potential.
//!
//! The density is piecewise constant on a graded boundary mesh and is found
//! from the first-kind (Symm) equations
//!
//! ```text
//! Σ_i ν_i ∫_{panel i} log|x_k - ζ| ds - γ = 0   at every panel midpoint x_k
//! Σ_i ν_i |panel i|                        = 1
//! ```
//!
//! with `γ` the Robin constant (log of the logarithmic capacity). The
//! equilibrium potential is `u = U^ν - γ`, which vanishes on the boundary
//! and grows like `log|z|` at infinity.

mod kernel;
mod mesh;

pub use kernel::{panel_log_gradient, panel_log_integral};
pub use mesh::{build_mesh, BoundaryMesh, Panel};

use thiserror::Error;

use crate::geom2d::{ConvexPolygon, Point2};
use crate::linalg::DenseMatrix;
use kernel::{panel_gradient_shared, panel_value_shared, EndpointSample};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("invalid mesh resolution: {0}")]
    InvalidResolution(String),
    #[error("singular collocation system (column {column}, pivot {pivot:e})")]
    SingularSystem { column: usize, pivot: f64 },
    #[error("equilibrium density {value:e} on panel {panel} is negative; refine the mesh")]
    NegativeDensity { panel: usize, value: f64 },
    #[error("gradient requested at distance {distance:e} from the boundary (standoff {standoff:e})")]
    TooCloseToBoundary { distance: f64, standoff: f64 },
}

/// Densities below this are treated as a resolution failure.
pub const NEGATIVE_DENSITY_TOLERANCE: f64 = -1e-6;
/// Gradient evaluations need this distance from the boundary, relative to
/// the polygon diameter.
pub const GRADIENT_STANDOFF: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct EquilibriumSolution {
    mesh: BoundaryMesh,
    density: Vec<f64>,
    robin_constant: f64,
    residual: f64,
    tangents: Vec<Point2>,
}

fn panel_tangents(mesh: &BoundaryMesh) -> Vec<Point2> {
    mesh.panels().iter().map(|p| (p.b - p.a).normalized()).collect()
}

pub fn solve_equilibrium(mesh: &BoundaryMesh) -> Result<EquilibriumSolution, EquilibriumError> {
    let m = mesh.len();
    let mut a = DenseMatrix::zeros(m + 1);
    for (k, &node) in mesh.nodes().iter().enumerate() {
        let row = a.row_mut(k);
        for (i, p) in mesh.panels().iter().enumerate() {
            row[i] = panel_log_integral(p.a, p.b, node);
        }
        row[m] = -1.0;
    }
    a.row_mut(m)[..m].copy_from_slice(mesh.lengths());
    let mut rhs = vec![0.0; m + 1];
    rhs[m] = 1.0;

    let x = a.solve(&rhs, 1e-14).map_err(|e| EquilibriumError::SingularSystem {
        column: e.column,
        pivot: e.pivot,
    })?;
    let density = x[..m].to_vec();
    let robin_constant = x[m];

    if let Some((panel, &value)) = density.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
        if value < NEGATIVE_DENSITY_TOLERANCE {
            return Err(EquilibriumError::NegativeDensity { panel, value });
        }
    }

    let mut sol = EquilibriumSolution {
        mesh: mesh.clone(),
        density,
        robin_constant,
        residual: 0.0,
        tangents: panel_tangents(mesh),
    };
    sol.residual = sol
        .mesh
        .nodes()
        .iter()
        .map(|&z| (sol.single_layer(z) - robin_constant).abs())
        .fold(0.0, f64::max);
    Ok(sol)
}

impl EquilibriumSolution {
    pub fn mesh(&self) -> &BoundaryMesh {
        &self.mesh
    }

    pub fn polygon(&self) -> &ConvexPolygon {
        self.mesh.polygon()
    }

    /// Density per unit arclength on each panel.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn robin_constant(&self) -> f64 {
        self.robin_constant
    }

    /// Largest collocation residual `|U^ν(x_k) - γ|`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `Σ ν_i |panel_i|`; one up to rounding.
    pub fn total_mass(&self) -> f64 {
        self.density.iter().zip(self.mesh.lengths()).map(|(d, l)| d * l).sum()
    }

    /// Panel masses `ν_i |panel_i|`.
    pub fn panel_masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.density.iter().zip(self.mesh.lengths()).map(|(d, l)| d * l)
    }

    /// Raw single-layer potential `U^ν(z) = ∫ log|z - ζ| dν(ζ)`.
    pub fn single_layer(&self, z: Point2) -> f64 {
        let panels = self.mesh.panels();
        let lengths = self.mesh.lengths();
        let first = EndpointSample::new(panels[0].a, z);
        let mut ea = first;
        let mut total = 0.0;
        let last = panels.len() - 1;
        for (i, p) in panels.iter().enumerate() {
            let eb = if i == last { first } else { EndpointSample::new(p.b, z) };
            total += self.density[i] * panel_value_shared(&ea, &eb, self.tangents[i], lengths[i]);
            ea = eb;
        }
        total
    }

    fn single_layer_gradient(&self, z: Point2) -> Point2 {
        let panels = self.mesh.panels();
        let first = EndpointSample::new(panels[0].a, z);
        let mut ea = first;
        let mut total = Point2::default();
        let last = panels.len() - 1;
        for (i, p) in panels.iter().enumerate() {
            let eb = if i == last { first } else { EndpointSample::new(p.b, z) };
            total = total + panel_gradient_shared(&ea, &eb, self.tangents[i]) * self.density[i];
            ea = eb;
        }
        total
    }

    /// `(U^ν(z), ∇U^ν(z))` in one pass over the mesh.
    fn single_layer_with_gradient(&self, z: Point2) -> (f64, Point2) {
        let panels = self.mesh.panels();
        let lengths = self.mesh.lengths();
        let first = EndpointSample::new(panels[0].a, z);
        let mut ea = first;
        let mut value = 0.0;
        let mut grad = Point2::default();
        let last = panels.len() - 1;
        for (i, p) in panels.iter().enumerate() {
            let eb = if i == last { first } else { EndpointSample::new(p.b, z) };
            let t = self.tangents[i];
            value += self.density[i] * panel_value_shared(&ea, &eb, t, lengths[i]);
            grad = grad + panel_gradient_shared(&ea, &eb, t) * self.density[i];
            ea = eb;
        }
        (value, grad)
    }

    /// Equilibrium potential `u(z) = U^ν(z) - γ`. Zero on the boundary up to
    /// the collocation residual and positive outside the polygon.
    pub fn eval_u(&self, z: Point2) -> f64 {
        self.single_layer(z) - self.robin_constant
    }

    pub fn eval_grad_u(&self, z: Point2) -> Result<Point2, EquilibriumError> {
        let standoff = GRADIENT_STANDOFF * self.polygon().diameter();
        let distance = self.polygon().distance_to_boundary(z);
        if distance <= standoff {
            return Err(EquilibriumError::TooCloseToBoundary { distance, standoff });
        }
        Ok(self.single_layer_gradient(z))
    }

    /// `(u(z), ∇u(z))` without the standoff check.
    pub(crate) fn u_and_grad_unchecked(&self, z: Point2) -> (f64, Point2) {
        let (v, g) = self.single_layer_with_gradient(z);
        (v - self.robin_constant, g)
    }
}

/// Meshes the polygon and solves for its equilibrium measure.
pub fn solve_polygon(
    poly: &ConvexPolygon,
    panels_per_side: usize,
    grading: f64,
) -> Result<EquilibriumSolution, EquilibriumError> {
    solve_equilibrium(&build_mesh(poly, panels_per_side, grading)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom2d::{regular_polygon, validate_polygon};

    fn equilateral() -> ConvexPolygon {
        validate_polygon(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 3f64.sqrt() / 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn inscribed_64_gon_has_unit_capacity() {
        let poly = validate_polygon(&regular_polygon(64, Point2::default(), 1.0, 0.0)).unwrap();
        let sol = solve_polygon(&poly, 8, 3.0).unwrap();
        assert!(sol.robin_constant().abs() < 5e-3, "{}", sol.robin_constant());
    }

    #[test]
    fn collocation_residual_and_mass() {
        let sol = solve_polygon(&equilateral(), 32, 3.0).unwrap();
        assert!(sol.residual() < 1e-8, "{}", sol.residual());
        assert!((sol.total_mass() - 1.0).abs() < 1e-12);
        assert!(sol.density().iter().all(|&d| d > -1e-10));
        for &node in sol.mesh().nodes() {
            assert!(sol.eval_u(node).abs() < 1e-8);
        }
    }

    #[test]
    fn equilateral_density_is_symmetric() {
        let sol = solve_polygon(&equilateral(), 32, 3.0).unwrap();
        let d = sol.density();
        let n = 32;
        for k in 0..n {
            // rotation: side 0 -> side 1 -> side 2
            assert!((d[k] - d[n + k]).abs() < 1e-8);
            assert!((d[k] - d[2 * n + k]).abs() < 1e-8);
            // reflection within a side
            assert!((d[k] - d[n - 1 - k]).abs() < 1e-8);
        }
    }

    #[test]
    fn far_field_normalization() {
        let sol = solve_polygon(&equilateral(), 32, 3.0).unwrap();
        let z = Point2::new(1e6, 0.0);
        let expected = z.norm().ln() - sol.robin_constant();
        assert!((sol.eval_u(z) - expected).abs() < 1e-5);
        let g = sol.eval_grad_u(Point2::new(1e4, 0.0)).unwrap();
        let g0 = Point2::new(1e-4, 0.0);
        assert!(g.distance(g0) / g0.norm() < 1e-3);
    }

    #[test]
    fn gradient_standoff_is_enforced() {
        let sol = solve_polygon(&equilateral(), 16, 3.0).unwrap();
        let err = sol.eval_grad_u(Point2::new(0.5, -1e-4)).unwrap_err();
        assert!(matches!(err, EquilibriumError::TooCloseToBoundary { .. }));
    }

    #[test]
    fn positive_outside() {
        let poly = equilateral();
        let sol = solve_polygon(&poly, 32, 3.0).unwrap();
        let c = poly.centroid();
        for k in 0..100 {
            let t = k as f64 * 0.731;
            let r = 0.01 + (k % 10) as f64 * 0.3;
            // push outward from the boundary point in direction t
            let dir = Point2::new(t.cos(), t.sin());
            let mut lo = 0.0;
            let mut hi = 2.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if poly.depth(c + dir * mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let z = c + dir * (hi + r);
            assert!(sol.eval_u(z) > 0.0, "u({z}) = {}", sol.eval_u(z));
        }
    }
}
