//! Riesz measure of `w`: a line density `(1/2π)|∇u_i - ∇u_j|` on every
//! ridge arc, sampled into point masses.
//!
//! Near a vertex with interior angle `θ` the density behaves like
//! `c₁ r^(β-1) + c₂ r^(2β-1)`, `β = π / (2π - θ)`; that end is integrated
//! from a two-point fit. Junction ends are finite and extrapolated linearly.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::{EquilibriumSolution, GRADIENT_STANDOFF};
use crate::geom2d::Point2;
use crate::reflections::{FieldError, ReflectedFieldSet};
use crate::skeleton::{Endpoint, Junction, RidgeArc, Skeleton};

/// Density evaluations keep this distance (relative to the diameter) from
/// vertices and junctions.
pub const ENDPOINT_STANDOFF: f64 = 1e-3;
/// Highest moment order worth computing.
pub const MAX_MOMENT_ORDER: usize = 12;
/// Smallest accepted `samples_per_arc`.
pub const MIN_SAMPLES_PER_ARC: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RieszError {
    #[error("ridge point {point} is {distance:e} from a junction (standoff {standoff:e})")]
    TooCloseToJunction {
        point: Point2,
        distance: f64,
        standoff: f64,
    },
    #[error("ridge point {point} is {distance:e} from a vertex (standoff {standoff:e})")]
    TooCloseToVertex {
        point: Point2,
        distance: f64,
        standoff: f64,
    },
    #[error("need at least {MIN_SAMPLES_PER_ARC} samples per arc, got {0}")]
    TooFewSamples(usize),
    #[error("moment order {0} exceeds {MAX_MOMENT_ORDER}")]
    MomentOrder(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasureSample {
    pub point: Point2,
    /// Mass carried by this sample.
    pub weight: f64,
    /// Mass per unit length at the point.
    pub density: f64,
    pub pair: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RieszMeasure {
    pub samples: Vec<MeasureSample>,
    /// Total mass per arc, in skeleton arc order.
    pub arc_masses: Vec<f64>,
    /// Arc index of every sample.
    #[serde(skip)]
    arc_of: Vec<usize>,
}

impl RieszMeasure {
    /// Measure from explicit samples, treated as a single arc.
    pub fn from_samples(samples: Vec<MeasureSample>) -> Self {
        let total = samples.iter().map(|s| s.weight).sum();
        let arc_of = vec![0; samples.len()];
        Self {
            samples,
            arc_masses: vec![total],
            arc_of,
        }
    }

    /// Point masses `(point, weight)` as one arc.
    pub fn atoms(atoms: &[(Point2, f64)]) -> Self {
        Self::from_samples(
            atoms
                .iter()
                .map(|&(point, weight)| MeasureSample {
                    point,
                    weight,
                    density: 0.0,
                    pair: (0, 0),
                })
                .collect(),
        )
    }

    pub fn total_mass(&self) -> f64 {
        self.samples.iter().map(|s| s.weight).sum()
    }

    /// `∫ log|z - ζ| dμ(ζ)`.
    pub fn potential(&self, z: Point2) -> f64 {
        potential_of_measure(self, z)
    }

    /// Arc `k` scaled by `1 + fraction·(-1)^k`. Used as a wrong measure
    /// that the exterior match must reject.
    pub fn perturbed(&self, fraction: f64) -> Self {
        let factor = |k: usize| 1.0 + if k.is_multiple_of(2) { fraction } else { -fraction };
        let samples = self
            .samples
            .iter()
            .zip(&self.arc_of)
            .map(|(s, &k)| MeasureSample {
                weight: s.weight * factor(k),
                density: s.density * factor(k),
                ..*s
            })
            .collect();
        Self {
            samples,
            arc_masses: self.arc_masses.iter().enumerate().map(|(k, m)| m * factor(k)).collect(),
            arc_of: self.arc_of.clone(),
        }
    }
}

/// Complex moments `m_k = ∫ ζ^k dμ`, `k = 0..=k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    pub moments: Vec<Complex64>,
}

impl MomentVector {
    pub fn mass(&self) -> f64 {
        self.moments[0].re
    }

    /// `|m_k - other.m_k|` for every shared order.
    pub fn errors(&self, other: &MomentVector) -> Vec<f64> {
        self.moments
            .iter()
            .zip(&other.moments)
            .map(|(a, b)| (a - b).norm())
            .collect()
    }
}

pub trait HasMoments {
    fn moments_to(&self, k_max: usize) -> Vec<Complex64>;
}

impl HasMoments for RieszMeasure {
    fn moments_to(&self, k_max: usize) -> Vec<Complex64> {
        let mut m = vec![Complex64::new(0.0, 0.0); k_max + 1];
        for s in &self.samples {
            let z = Complex64::new(s.point.x, s.point.y);
            let mut p = Complex64::new(s.weight, 0.0);
            for mk in m.iter_mut() {
                *mk += p;
                p *= z;
            }
        }
        m
    }
}

impl HasMoments for EquilibriumSolution {
    /// Exact for the piecewise-constant density:
    /// `∫_a^b ζ^k |dζ| = |b - a| (b^(k+1) - a^(k+1)) / ((k+1)(b - a))`.
    fn moments_to(&self, k_max: usize) -> Vec<Complex64> {
        let mut m = vec![Complex64::new(0.0, 0.0); k_max + 1];
        for ((p, &len), &d) in self
            .mesh()
            .panels()
            .iter()
            .zip(self.mesh().lengths())
            .zip(self.density())
        {
            let a = Complex64::new(p.a.x, p.a.y);
            let b = Complex64::new(p.b.x, p.b.y);
            let scale = d * len / (b - a);
            let (mut pa, mut pb) = (a, b);
            for (k, mk) in m.iter_mut().enumerate() {
                *mk += scale * (pb - pa) / (k + 1) as f64;
                pa *= a;
                pb *= b;
            }
        }
        m
    }
}

pub fn complex_moments(m: &impl HasMoments, k_max: usize) -> Result<MomentVector, RieszError> {
    if k_max > MAX_MOMENT_ORDER {
        return Err(RieszError::MomentOrder(k_max));
    }
    Ok(MomentVector {
        moments: m.moments_to(k_max),
    })
}

/// Point-mass quadrature of `∫ log|z - ζ| dμ(ζ)`.
pub fn potential_of_measure(mu: &RieszMeasure, z: Point2) -> f64 {
    mu.samples
        .iter()
        .map(|s| s.weight * 0.5 * (z - s.point).norm_sq().ln())
        .sum()
}

/// `(1/2π) |(∇u_i - ∇u_j)·normal|` at a ridge point of `pair`.
pub fn ridge_density(
    fields: &ReflectedFieldSet,
    junctions: &[Junction],
    p: Point2,
    pair: (usize, usize),
    normal: Point2,
) -> Result<f64, RieszError> {
    let diameter = fields.polygon().diameter();
    let standoff = ENDPOINT_STANDOFF * diameter;
    let nearest = |pts: &mut dyn Iterator<Item = Point2>| pts.map(|q| q.distance(p)).fold(f64::INFINITY, f64::min);
    let distance = nearest(&mut fields.polygon().vertices().iter().copied());
    if distance < standoff {
        return Err(RieszError::TooCloseToVertex {
            point: p,
            distance,
            standoff,
        });
    }
    let distance = nearest(&mut junctions.iter().map(|j| j.location));
    if distance < standoff {
        return Err(RieszError::TooCloseToJunction {
            point: p,
            distance,
            standoff,
        });
    }
    let g = fields.grad_u_j(pair.0, p)? - fields.grad_u_j(pair.1, p)?;
    Ok(g.dot(normal).abs() / (2.0 * PI))
}

/// Point on the `pair` tie curve reached from `p` by Newton steps along
/// `∇(u_i - u_j)`.
pub fn project_to_ridge(fields: &ReflectedFieldSet, pair: (usize, usize), mut p: Point2) -> Point2 {
    let eps = 1e-15 * fields.polygon().diameter();
    for _ in 0..60 {
        let (vi, gi) = fields.field_with_grad(pair.0, p);
        let (vj, gj) = fields.field_with_grad(pair.1, p);
        let g = gi - gj;
        let step = g * ((vi - vj) / g.norm_sq());
        if !step.is_finite() {
            break;
        }
        p = p - step;
        if step.norm() < eps {
            break;
        }
    }
    p
}

/// Unit tangent of the `pair` tie curve at ridge point `p`, from the chord
/// between two projected neighbors; `guess` fixes the orientation.
pub fn ridge_tangent(fields: &ReflectedFieldSet, pair: (usize, usize), p: Point2, guess: Point2) -> Point2 {
    let delta = 1e-4 * fields.polygon().diameter();
    let a = project_to_ridge(fields, pair, p - guess * delta);
    let b = project_to_ridge(fields, pair, p + guess * delta);
    (b - a).normalized()
}

/// `|(∇u_i - ∇u_j)·tangent|`; zero on an exact tie curve.
pub fn tangential_jump(fields: &ReflectedFieldSet, pair: (usize, usize), p: Point2, tangent: Point2) -> f64 {
    let (_, gi) = fields.field_with_grad(pair.0, p);
    let (_, gj) = fields.field_with_grad(pair.1, p);
    (gi - gj).dot(tangent).abs()
}

/// Arclength parameterization of a polyline.
struct Polyline<'a> {
    points: &'a [Point2],
    cumulative: Vec<f64>,
}

impl<'a> Polyline<'a> {
    fn new(points: &'a [Point2]) -> Self {
        let mut cumulative = Vec::with_capacity(points.len());
        let mut s = 0.0;
        cumulative.push(0.0);
        for w in points.windows(2) {
            s += w[0].distance(w[1]);
            cumulative.push(s);
        }
        Self { points, cumulative }
    }

    fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Point and unit direction at arclength `s`.
    fn at(&self, s: f64) -> (Point2, Point2) {
        let k = self
            .cumulative
            .partition_point(|&c| c <= s)
            .clamp(1, self.points.len() - 1);
        let (a, b) = (self.points[k - 1], self.points[k]);
        let span = self.cumulative[k] - self.cumulative[k - 1];
        let t = if span > 0.0 {
            ((s - self.cumulative[k - 1]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (a.lerp(b, t), (b - a).normalized())
    }

    /// Smallest arclength from which every later point stays at least `r`
    /// from all of `centers`, scanning forward; `None` if never.
    fn clear_of_from_start(&self, centers: &[Point2], r: f64) -> Option<f64> {
        let far = |p: Point2| centers.iter().all(|c| c.distance(p) >= r);
        let k = self.points.iter().position(|&p| far(p))?;
        if k == 0 {
            return Some(0.0);
        }
        // bisect inside segment k-1..k
        let (mut lo, mut hi) = (self.cumulative[k - 1], self.cumulative[k]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if far(self.at(mid).0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    /// Largest arclength at which the point is exactly `r` from `center`,
    /// scanning back from the end.
    fn at_distance_from_end(&self, center: Point2, r: f64) -> Option<f64> {
        let k = self.points.iter().rposition(|&p| p.distance(center) >= r)?;
        if k + 1 == self.points.len() {
            return Some(self.length());
        }
        let (mut lo, mut hi) = (self.cumulative[k], self.cumulative[k + 1]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.at(mid).0.distance(center) >= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }
}

/// Nodes on `[0, 1]` clustered quadratically toward both ends.
fn graded_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            if t <= 0.5 {
                0.5 * (2.0 * t).powi(2)
            } else {
                1.0 - 0.5 * (2.0 * (1.0 - t)).powi(2)
            }
        })
        .collect()
}

struct ArcAssembler<'a> {
    fields: &'a ReflectedFieldSet,
    junctions: &'a [Junction],
    diameter: f64,
}

struct RidgeEval {
    point: Point2,
    density: f64,
}

impl ArcAssembler<'_> {
    fn eval(&self, pair: (usize, usize), p: Point2, guess: Point2) -> Result<RidgeEval, RieszError> {
        let q = project_to_ridge(self.fields, pair, p);
        let t = ridge_tangent(self.fields, pair, q, guess);
        let density = ridge_density(self.fields, self.junctions, q, pair, t.perp())?;
        Ok(RidgeEval { point: q, density })
    }

    /// Density without the endpoint checks, for arcs too short to keep any
    /// standoff.
    fn eval_unchecked(&self, pair: (usize, usize), p: Point2) -> RidgeEval {
        let q = project_to_ridge(self.fields, pair, p);
        let (_, gi) = self.fields.field_with_grad(pair.0, q);
        let (_, gj) = self.fields.field_with_grad(pair.1, q);
        RidgeEval {
            point: q,
            density: (gi - gj).norm() / (2.0 * PI),
        }
    }

    /// Distance from vertex `v` at which ridge densities are evaluated: the
    /// reflected points must clear the gradient standoff.
    fn vertex_cut(&self, v: usize) -> f64 {
        let half = 0.5 * self.fields.polygon().interior_angle(v);
        let need = 2.0 * GRADIENT_STANDOFF.max(ENDPOINT_STANDOFF) * self.diameter;
        need.max(need / half.sin())
    }

    fn arc(&self, arc: &RidgeArc, n: usize, out: &mut Vec<MeasureSample>) -> Result<(), RieszError> {
        let pair = arc.pair;
        let line = Polyline::new(&arc.points);
        let total = line.length();
        let sample = |e: &RidgeEval, weight: f64| MeasureSample {
            point: e.point,
            weight,
            density: e.density,
            pair,
        };
        let junction_locations: Vec<Point2> = self.junctions.iter().map(|j| j.location).collect();
        let clearance = 2.0 * ENDPOINT_STANDOFF * self.diameter;

        // start: always a junction
        let s0 = line.clear_of_from_start(&junction_locations, clearance);
        // end: a vertex (power-law fit) or a junction (linear)
        let (s1, vertex) = match arc.end {
            Endpoint::Vertex(v) => {
                let r = self.vertex_cut(v);
                let s = line.at_distance_from_end(self.fields.polygon().vertices()[v], r);
                (s, Some((v, r)))
            }
            Endpoint::Junction(_) => {
                let reversed: Vec<Point2> = arc.points.iter().rev().copied().collect();
                let back = Polyline::new(&reversed);
                (
                    back.clear_of_from_start(&junction_locations, clearance)
                        .map(|s| total - s),
                    None,
                )
            }
        };
        let (s0, s1) = match (s0, s1) {
            (Some(a), Some(b)) if b - a > 4.0 * clearance => (a, b),
            _ => {
                // too short to resolve: one sample at the middle
                let (p, _) = line.at(0.5 * total);
                let e = self.eval_unchecked(pair, p);
                out.push(sample(&e, e.density * total));
                return Ok(());
            }
        };

        let nodes: Vec<f64> = graded_nodes(n).iter().map(|t| s0 + (s1 - s0) * t).collect();
        let mut evals = Vec::with_capacity(n);
        for &s in &nodes {
            let (p, dir) = line.at(s);
            evals.push(self.eval(pair, p, dir)?);
        }
        for k in 0..n {
            let lo = if k == 0 { nodes[0] } else { nodes[k - 1] };
            let hi = if k + 1 == n { nodes[n - 1] } else { nodes[k + 1] };
            out.push(sample(&evals[k], evals[k].density * 0.5 * (hi - lo)));
        }

        // junction end at the start: linear extrapolation over [0, s0]
        let slope = (evals[1].density - evals[0].density) / (nodes[1] - nodes[0]);
        let mass = (s0 * evals[0].density - 0.5 * slope * s0 * s0).max(0.0);
        if mass > 0.0 {
            let (p, _) = line.at(0.5 * s0);
            out.push(MeasureSample {
                point: p,
                weight: mass,
                density: mass / s0,
                pair,
            });
        }

        match vertex {
            Some((v, r)) => {
                let vertex = self.fields.polygon().vertices()[v];
                let (far_s, far_dir) = {
                    let s = line.at_distance_from_end(vertex, 2.0 * r).unwrap_or(s1);
                    (s, line.at(s).1)
                };
                let far = self.eval(pair, line.at(far_s).0, far_dir)?;
                let near = &evals[n - 1];
                let theta = self.fields.polygon().interior_angle(v);
                let beta = PI / (2.0 * PI - theta);
                let (mass, moment) = corner_end_mass(
                    beta,
                    (near.point.distance(vertex), near.density),
                    (far.point.distance(vertex), far.density),
                );
                let dir = (near.point - vertex).normalized();
                out.push(MeasureSample {
                    point: vertex + dir * (moment / mass),
                    weight: mass,
                    density: mass / near.point.distance(vertex),
                    pair,
                });
            }
            None => {
                let len = total - s1;
                let slope = (evals[n - 1].density - evals[n - 2].density) / (nodes[n - 1] - nodes[n - 2]);
                let mass = (len * evals[n - 1].density + 0.5 * slope * len * len).max(0.0);
                if mass > 0.0 {
                    let (p, _) = line.at(s1 + 0.5 * len);
                    out.push(MeasureSample {
                        point: p,
                        weight: mass,
                        density: mass / len,
                        pair,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Mass and first radial moment of `ρ(r) = c₁ r^(β-1) + c₂ r^(2β-1)` on
/// `[0, r_near]`, with the coefficients fitted to `ρ` at two radii. Falls
/// back to the one-term law if the fit is implausible.
fn corner_end_mass(beta: f64, near: (f64, f64), far: (f64, f64)) -> (f64, f64) {
    let (ra, da) = near;
    let (rb, db) = far;
    let one_term = {
        let c = da / ra.powf(beta - 1.0);
        (c * ra.powf(beta) / beta, c * ra.powf(beta + 1.0) / (beta + 1.0))
    };
    let (xa, xb) = (ra.powf(beta), rb.powf(beta));
    let det = xa * xb * xb - xb * xa * xa;
    if rb <= ra || det.abs() < f64::MIN_POSITIVE {
        return one_term;
    }
    // ρ r = c₁ x + c₂ x², x = r^β
    let (ya, yb) = (da * ra, db * rb);
    let c1 = (ya * xb * xb - yb * xa * xa) / det;
    let c2 = (xa * yb - xb * ya) / det;
    let mass = c1 * xa / beta + c2 * xa * xa / (2.0 * beta);
    let moment = c1 * xa * ra / (beta + 1.0) + c2 * xa * xa * ra / (2.0 * beta + 1.0);
    if mass > 0.5 * one_term.0 && mass < 2.0 * one_term.0 && moment > 0.0 {
        (mass, moment)
    } else {
        one_term
    }
}

/// Samples the Riesz measure on every arc of the skeleton.
pub fn assemble_measure(
    fields: &ReflectedFieldSet,
    skel: &Skeleton,
    samples_per_arc: usize,
) -> Result<RieszMeasure, RieszError> {
    if samples_per_arc < MIN_SAMPLES_PER_ARC {
        return Err(RieszError::TooFewSamples(samples_per_arc));
    }
    let asm = ArcAssembler {
        fields,
        junctions: &skel.junctions,
        diameter: fields.polygon().diameter(),
    };
    let mut samples = Vec::new();
    let mut arc_of = Vec::new();
    let mut arc_masses = Vec::with_capacity(skel.arcs.len());
    for (k, arc) in skel.arcs.iter().enumerate() {
        let before = samples.len();
        asm.arc(arc, samples_per_arc, &mut samples)?;
        arc_masses.push(samples[before..].iter().map(|s| s.weight).sum());
        arc_of.resize(samples.len(), k);
    }
    Ok(RieszMeasure {
        samples,
        arc_masses,
        arc_of,
    })
}
