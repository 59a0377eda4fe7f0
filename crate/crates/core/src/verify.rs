//! Numerical checks of the skeleton: exterior potential match, convex level
//! curves, monotone growth along reflected segments, solver convergence.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::{solve_polygon, EquilibriumError, EquilibriumSolution};
use crate::geom2d::{ConvexPolygon, Point2};
use crate::riesz::{complex_moments, RieszError, RieszMeasure};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("circle of radius {radius} about the centroid meets the polygon (needs > {needed})")]
    CircleIntersectsK { radius: f64, needed: f64 },
    #[error("level {level} not reached within radius {radius:e} along angle {angle}; enlarge the bracket")]
    RootNotBracketed { level: f64, angle: f64, radius: f64 },
    #[error("level must be positive, got {0}")]
    NonPositiveLevel(f64),
    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Riesz(#[from] RieszError),
}

/// Every threshold used by the checks, with their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub match_radii: Vec<f64>,
    pub match_points: usize,
    pub exterior_match: f64,
    pub moment_order: usize,
    pub moment_match: f64,
    pub mass: f64,
    /// Arm-mass perturbation of the negative control.
    pub perturbation: f64,
    /// The perturbed measure must miss by more than this.
    pub negative_control: f64,
    pub levels: Vec<f64>,
    pub level_angles: usize,
    /// Lowest acceptable normalized cross product on a level curve.
    pub convexity: f64,
    pub monotonicity_trials: usize,
    pub monotonicity_samples: usize,
    /// Lowest acceptable step in `u` along a reflected segment.
    pub monotonicity: f64,
    /// `|u|` allowed where a reflected segment leaves the boundary.
    pub boundary_value: f64,
    pub seed: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            match_radii: vec![2.0, 5.0],
            match_points: 128,
            exterior_match: 5e-3,
            moment_order: 6,
            moment_match: 5e-3,
            mass: 5e-3,
            perturbation: 0.1,
            negative_control: 1e-2,
            levels: vec![0.05, 0.3, 1.0],
            level_angles: 256,
            convexity: -1e-6,
            monotonicity_trials: 30,
            monotonicity_samples: 64,
            monotonicity: -1e-8,
            boundary_value: 2e-2,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusError {
    pub radius: f64,
    pub sup_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchReport {
    pub sup_error_by_radius: Vec<RadiusError>,
    /// `|m_k(μ) - m_k(ν)| / R^k`, `k = 0..`, with `R` the larger of 1 and
    /// the largest vertex modulus.
    pub moment_errors: Vec<f64>,
    pub mass_error: f64,
}

impl MatchReport {
    pub fn max_sup_error(&self) -> f64 {
        self.sup_error_by_radius.iter().map(|r| r.sup_error).fold(0.0, f64::max)
    }

    pub fn max_moment_error(&self) -> f64 {
        self.moment_errors.iter().cloned().fold(0.0, f64::max)
    }
}

/// Compares `U^μ` with `U^ν = u + γ` on circles about the centroid, plus
/// moments up to `moment_order` and the total mass.
pub fn match_exterior(
    sol: &EquilibriumSolution,
    mu: &RieszMeasure,
    radii: &[f64],
    points_per_circle: usize,
    moment_order: usize,
) -> Result<MatchReport, VerifyError> {
    let poly = sol.polygon();
    let c = poly.centroid();
    let needed = poly.vertices().iter().map(|v| v.distance(c)).fold(0.0, f64::max);
    let mut sup_error_by_radius = Vec::with_capacity(radii.len());
    for &radius in radii {
        if radius <= needed {
            return Err(VerifyError::CircleIntersectsK { radius, needed });
        }
        let sup_error = (0..points_per_circle)
            .map(|k| {
                let t = TAU * k as f64 / points_per_circle as f64;
                let z = c + Point2::new(t.cos(), t.sin()) * radius;
                (mu.potential(z) - (sol.eval_u(z) + sol.robin_constant())).abs()
            })
            .fold(0.0, f64::max);
        sup_error_by_radius.push(RadiusError { radius, sup_error });
    }
    // k-th error over R^k so the tolerance is scale-free beyond the unit disk
    let scale = poly.vertices().iter().map(|v| v.norm()).fold(1.0, f64::max);
    let moment_errors = complex_moments(mu, moment_order)?
        .errors(&complex_moments(sol, moment_order)?)
        .into_iter()
        .zip(0i32..)
        .map(|(e, k)| e / scale.powi(k))
        .collect();
    Ok(MatchReport {
        sup_error_by_radius,
        moment_errors,
        mass_error: (mu.total_mass() - 1.0).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub level: f64,
    pub polyline: Vec<Point2>,
    /// Smallest `(e_k × e_{k+1}) / (|e_k||e_{k+1}|)` around the closed curve.
    pub min_cross_product: f64,
    /// Largest over smallest distance from the centroid.
    pub radius_ratio: f64,
}

/// Distance from `c` along the unit direction `d` to the polygon boundary.
fn exit_distance(poly: &ConvexPolygon, c: Point2, d: Point2) -> f64 {
    poly.faces()
        .iter()
        .filter_map(|f| {
            let rate = f.unit_inward_normal.dot(d);
            (rate < 0.0).then(|| f.signed_distance(c) / -rate)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Traces `{u = level}` along `n_angles` rays from the centroid.
pub fn trace_level_curve(
    sol: &EquilibriumSolution,
    level: f64,
    n_angles: usize,
) -> Result<ConvexityReport, VerifyError> {
    if level <= 0.0 {
        return Err(VerifyError::NonPositiveLevel(level));
    }
    if n_angles < 32 {
        return Err(VerifyError::TooFew {
            what: "angles",
            needed: 32,
            got: n_angles,
        });
    }
    let poly = sol.polygon();
    let c = poly.centroid();
    let mut polyline = Vec::with_capacity(n_angles);
    for k in 0..n_angles {
        let angle = TAU * k as f64 / n_angles as f64;
        let d = Point2::new(angle.cos(), angle.sin());
        let u = |r: f64| sol.eval_u(c + d * r);
        let mut lo = exit_distance(poly, c, d);
        let mut hi = 2.0 * lo;
        let mut doublings = 0;
        while u(hi) < level {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 60 {
                return Err(VerifyError::RootNotBracketed {
                    level,
                    angle,
                    radius: hi,
                });
            }
        }
        while hi - lo > 1e-14 * hi {
            let mid = 0.5 * (lo + hi);
            if u(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        polyline.push(c + d * (0.5 * (lo + hi)));
    }
    let n = polyline.len();
    let min_cross_product = (0..n)
        .map(|k| {
            let e0 = polyline[(k + 1) % n] - polyline[k];
            let e1 = polyline[(k + 2) % n] - polyline[(k + 1) % n];
            e0.cross(e1) / (e0.norm() * e1.norm())
        })
        .fold(f64::INFINITY, f64::min);
    let radii = polyline.iter().map(|p| p.distance(c));
    let (rmin, rmax) = radii.fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r), b.max(r)));
    Ok(ConvexityReport {
        level,
        polyline,
        min_cross_product,
        radius_ratio: rmax / rmin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub segment: (Point2, Point2),
    /// Face the segment was reflected across.
    pub face: usize,
    pub values: Vec<f64>,
    pub min_increment: f64,
}

impl MonotonicityReport {
    /// Same samples walked the other way.
    pub fn reversed(&self) -> Self {
        let values: Vec<f64> = self.values.iter().rev().copied().collect();
        Self {
            segment: (self.segment.1, self.segment.0),
            face: self.face,
            min_increment: min_increment(&values),
            values,
        }
    }

    pub fn max_decrement(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn min_increment(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Random chords `R` from a point `b` on a face to a vertex `v` off that
/// face, reflected across each face through `v`; `u` is sampled along every
/// image from `v` outward.
pub fn check_ray_monotonicity(
    sol: &EquilibriumSolution,
    trials: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<MonotonicityReport>, VerifyError> {
    if trials == 0 {
        return Err(VerifyError::TooFew {
            what: "trials",
            needed: 1,
            got: 0,
        });
    }
    if samples < 50 {
        return Err(VerifyError::TooFew {
            what: "samples per segment",
            needed: 50,
            got: samples,
        });
    }
    let poly = sol.polygon();
    let n = poly.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(2 * trials);
    for _ in 0..trials {
        let f = rng.gen_range(0..n);
        let (a, b) = poly.side(f);
        let start = a.lerp(b, rng.gen_range(0.05..0.95));
        // vertices f and f + 1 lie on face f
        let v = (f + 2 + rng.gen_range(0..n - 2)) % n;
        let tip = poly.vertices()[v];
        // faces v - 1 and v pass through vertex v
        for face in [(v + n - 1) % n, v] {
            let image = poly.face(face).reflect(start);
            let values: Vec<f64> = (0..samples)
                .map(|k| sol.eval_u(tip.lerp(image, k as f64 / (samples - 1) as f64)))
                .collect();
            reports.push(MonotonicityReport {
                segment: (tip, image),
                face,
                min_increment: min_increment(&values),
                values,
            });
        }
    }
    Ok(reports)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub panels_per_side: usize,
    pub robin_constant: f64,
    pub mass_error: f64,
    pub residual: f64,
    /// `|γ_M - γ_previous|`.
    pub gamma_change: Option<f64>,
    /// Sup of `|U^ν_M - U^ν_finest|` on the circle of radius 2 about the
    /// centroid (scaled by the diameter); none for the finest row.
    pub exterior_change: Option<f64>,
}

/// Robin constant and exterior potential at increasing mesh resolution.
pub fn convergence_study(
    poly: &ConvexPolygon,
    panel_counts: &[usize],
    grading: f64,
) -> Result<Vec<ConvergenceRow>, VerifyError> {
    if panel_counts.len() < 2 {
        return Err(VerifyError::TooFew {
            what: "panel counts",
            needed: 2,
            got: panel_counts.len(),
        });
    }
    let sols = panel_counts
        .iter()
        .map(|&m| solve_polygon(poly, m, grading))
        .collect::<Result<Vec<_>, _>>()?;
    let c = poly.centroid();
    let radius = 2.0 * poly.diameter();
    let probes: Vec<Point2> = (0..64)
        .map(|k| {
            let t = TAU * k as f64 / 64.0;
            c + Point2::new(t.cos(), t.sin()) * radius
        })
        .collect();
    let finest = sols.last().unwrap();
    let raw = |s: &EquilibriumSolution, z: Point2| s.eval_u(z) + s.robin_constant();
    Ok(sols
        .iter()
        .enumerate()
        .map(|(k, s)| ConvergenceRow {
            panels_per_side: panel_counts[k],
            robin_constant: s.robin_constant(),
            mass_error: (s.total_mass() - 1.0).abs(),
            residual: s.residual(),
            gamma_change: (k > 0).then(|| (s.robin_constant() - sols[k - 1].robin_constant()).abs()),
            exterior_change: (k + 1 < sols.len()).then(|| {
                probes
                    .iter()
                    .map(|&z| (raw(s, z) - raw(finest, z)).abs())
                    .fold(0.0, f64::max)
            }),
        })
        .collect())
}

/// Successive Robin-constant changes shrink strictly.
pub fn is_converging(rows: &[ConvergenceRow]) -> bool {
    let changes: Vec<f64> = rows.iter().filter_map(|r| r.gamma_change).collect();
    changes.windows(2).all(|w| w[1] < w[0])
}
