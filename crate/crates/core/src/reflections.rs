//! Harmonic continuations of the equilibrium potential across each side,
//! `u_j = -u ∘ ℓ_j`, and their pointwise maximum `w` inside the polygon.

use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::{EquilibriumError, EquilibriumSolution};
use crate::geom2d::{contains, Containment, ConvexPolygon, Point2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("point {0} is not in the interior of the polygon")]
    OutsideDomain(Point2),
    #[error("face index {index} out of range for a polygon with {count} sides")]
    NoSuchFace { index: usize, count: usize },
    #[error("reflected field {face} is non-negative ({value:e}) at the centroid")]
    NotNegative { face: usize, value: f64 },
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}

/// Winning field at an interior point and its lead over the runner-up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Label {
    pub index: usize,
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub struct ReflectedFieldSet {
    solution: EquilibriumSolution,
}

impl ReflectedFieldSet {
    pub fn new(solution: EquilibriumSolution) -> Result<Self, FieldError> {
        let fields = Self { solution };
        let c = fields.polygon().centroid();
        for j in 0..fields.count() {
            let value = fields.field(j, c);
            if value >= 0.0 {
                return Err(FieldError::NotNegative { face: j, value });
            }
        }
        Ok(fields)
    }

    pub fn solution(&self) -> &EquilibriumSolution {
        &self.solution
    }

    pub fn polygon(&self) -> &ConvexPolygon {
        self.solution.polygon()
    }

    /// Number of fields, one per side.
    pub fn count(&self) -> usize {
        self.polygon().len()
    }

    fn check(&self, j: usize, x: Point2) -> Result<(), FieldError> {
        if j >= self.count() {
            return Err(FieldError::NoSuchFace {
                index: j,
                count: self.count(),
            });
        }
        if contains(self.polygon(), x) != Containment::Interior {
            return Err(FieldError::OutsideDomain(x));
        }
        Ok(())
    }

    /// `u_j(x)` for interior `x`.
    pub fn u_j(&self, j: usize, x: Point2) -> Result<f64, FieldError> {
        self.check(j, x)?;
        Ok(self.field(j, x))
    }

    /// `∇u_j(x) = -R_j ∇u(ℓ_j x)`, with `R_j` the (symmetric) linear part of
    /// the reflection. The reflected point must respect the gradient
    /// standoff of the equilibrium solution.
    pub fn grad_u_j(&self, j: usize, x: Point2) -> Result<Point2, FieldError> {
        self.check(j, x)?;
        let face = self.polygon().face(j);
        let g = self.solution.eval_grad_u(face.reflect(x))?;
        Ok(-face.reflect_vector(g))
    }

    /// Unchecked `u_j(x)`; defined for any `x`.
    pub(crate) fn field(&self, j: usize, x: Point2) -> f64 {
        -self.solution.eval_u(self.polygon().face(j).reflect(x))
    }

    /// Unchecked `(u_j(x), ∇u_j(x))`.
    pub(crate) fn field_with_grad(&self, j: usize, x: Point2) -> (f64, Point2) {
        let face = self.polygon().face(j);
        let (v, g) = self.solution.u_and_grad_unchecked(face.reflect(x));
        (-v, -face.reflect_vector(g))
    }

    /// All fields at `x`, unchecked.
    pub fn fields_at(&self, x: Point2) -> Vec<f64> {
        (0..self.count()).map(|j| self.field(j, x)).collect()
    }

    /// `w(x)`: the equilibrium potential outside the interior, the largest
    /// reflected field inside.
    pub fn w_value(&self, x: Point2) -> f64 {
        match contains(self.polygon(), x) {
            Containment::Interior => (0..self.count())
                .map(|j| self.field(j, x))
                .fold(f64::NEG_INFINITY, f64::max),
            _ => self.solution.eval_u(x),
        }
    }

    /// Largest field at interior `x`; ties go to the smallest index.
    pub fn argmax_label(&self, x: Point2) -> Result<Label, FieldError> {
        if contains(self.polygon(), x) != Containment::Interior {
            return Err(FieldError::OutsideDomain(x));
        }
        Ok(label_of(&self.fields_at(x)))
    }
}

/// Index of the largest value (first on ties) and its lead over the rest.
pub fn label_of(values: &[f64]) -> Label {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    let second = values
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != best)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    Label {
        index: best,
        margin: values[best] - second,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_polygon;
    use crate::geom2d::validate_polygon;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fields(vertices: &[(f64, f64)]) -> ReflectedFieldSet {
        let poly = validate_polygon(&vertices.iter().map(|&(x, y)| Point2::new(x, y)).collect::<Vec<_>>()).unwrap();
        ReflectedFieldSet::new(solve_polygon(&poly, 32, 3.0).unwrap()).unwrap()
    }

    fn equilateral() -> ReflectedFieldSet {
        fields(&[(0.0, 0.0), (1.0, 0.0), (0.5, 3f64.sqrt() / 2.0)])
    }

    fn random_interior(poly: &ConvexPolygon, rng: &mut ChaCha8Rng) -> Point2 {
        let (lo, hi) = poly.bounding_box();
        loop {
            let p = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
            if poly.depth(p) > 1e-3 {
                return p;
            }
        }
    }

    #[test]
    fn centroid_three_way_tie() {
        let f = equilateral();
        let c = Point2::new(0.5, 3f64.sqrt() / 6.0);
        let v = f.fields_at(c);
        assert!((v[0] - v[1]).abs() < 1e-9 && (v[1] - v[2]).abs() < 1e-9, "{v:?}");
        let label = f.argmax_label(c).unwrap();
        assert!(label.margin < 1e-9);
        assert!((f.w_value(c) - v[0]).abs() < 1e-9);
    }

    #[test]
    fn square_center_four_way_tie() {
        let f = fields(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let label = f.argmax_label(Point2::new(0.5, 0.5)).unwrap();
        assert!(label.margin < 1e-9);
    }

    #[test]
    fn fields_are_negative_inside() {
        let f = equilateral();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = random_interior(f.polygon(), &mut rng);
            for j in 0..3 {
                assert!(f.u_j(j, x).unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn field_vanishes_on_its_own_side() {
        let f = equilateral();
        let mid = Point2::new(0.5, 0.0);
        let near = f.u_j(0, mid + Point2::new(0.0, 1e-3)).unwrap();
        let farther = f.u_j(0, mid + Point2::new(0.0, 2e-3)).unwrap();
        assert!(near.abs() < 2e-2);
        assert!(farther < near);
        let label = f.argmax_label(mid + Point2::new(0.0, 1e-2)).unwrap();
        assert_eq!(label.index, 0);
    }

    #[test]
    fn w_is_continuous_across_the_boundary() {
        let f = equilateral();
        for &(p, n) in &[
            (Point2::new(0.5, 0.0), Point2::new(0.0, 1.0)),
            (Point2::new(0.3, 0.0), Point2::new(0.0, 1.0)),
            (
                Point2::new(0.75, 3f64.sqrt() / 4.0),
                Point2::new(-3f64.sqrt() / 2.0, -0.5),
            ),
        ] {
            let inside = f.w_value(p + n * 1e-3);
            let outside = f.w_value(p - n * 1e-3);
            assert!((inside - outside).abs() < 2e-2, "{inside} {outside}");
        }
        let z = Point2::new(2.0, 2.0);
        assert_eq!(f.w_value(z), f.solution().eval_u(z));
    }

    #[test]
    fn w_dominates_every_field() {
        let f = fields(&[(0.0, 0.0), (1.0, 0.0), (0.3, 0.8)]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = random_interior(f.polygon(), &mut rng);
            let w = f.w_value(x);
            let label = f.argmax_label(x).unwrap();
            for j in 0..3 {
                assert!(w >= f.field(j, x));
            }
            assert_eq!(w, f.field(label.index, x));
        }
    }

    #[test]
    fn fields_are_pairwise_distinct() {
        let f = fields(&[(0.0, 0.0), (1.0, 0.0), (0.3, 0.8)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point2> = (0..2000).map(|_| random_interior(f.polygon(), &mut rng)).collect();
        for j in 0..3 {
            for k in j + 1..3 {
                let max_gap = pts
                    .iter()
                    .map(|&x| (f.field(j, x) - f.field(k, x)).abs())
                    .fold(0.0, f64::max);
                assert!(max_gap > 1e-6);
            }
        }
    }

    #[test]
    fn labels_follow_the_mirror_symmetry() {
        // mirror x -> 1 - x swaps faces 1 and 2 and fixes face 0
        let f = equilateral();
        let perm = [0usize, 2, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x = random_interior(f.polygon(), &mut rng);
            let a = f.argmax_label(x).unwrap();
            if a.margin < 1e-6 {
                continue;
            }
            let b = f.argmax_label(Point2::new(1.0 - x.x, x.y)).unwrap();
            assert_eq!(perm[a.index], b.index);
        }
    }

    #[test]
    fn field_gradient_matches_differences() {
        let f = fields(&[(0.0, 0.0), (1.0, 0.0), (0.3, 0.8)]);
        let x = Point2::new(0.4, 0.25);
        let h = 1e-6;
        for j in 0..3 {
            let g = f.grad_u_j(j, x).unwrap();
            let gx = (f.field(j, x + Point2::new(h, 0.0)) - f.field(j, x - Point2::new(h, 0.0))) / (2.0 * h);
            let gy = (f.field(j, x + Point2::new(0.0, h)) - f.field(j, x - Point2::new(0.0, h))) / (2.0 * h);
            assert!((g.x - gx).abs() < 1e-6 && (g.y - gy).abs() < 1e-6);
            let (_, g2) = f.field_with_grad(j, x);
            assert!(g.distance(g2) < 1e-14);
        }
    }

    #[test]
    fn rejects_exterior_points() {
        let f = equilateral();
        assert!(matches!(
            f.u_j(0, Point2::new(2.0, 2.0)),
            Err(FieldError::OutsideDomain(_))
        ));
        assert!(f.argmax_label(Point2::new(0.5, 0.0)).is_err());
        assert!(matches!(
            f.u_j(5, Point2::new(0.5, 0.3)),
            Err(FieldError::NoSuchFace { .. })
        ));
    }
}
