//! Closed-form integrals of the logarithmic kernel over straight panels.
//!
//! In the panel frame with `z - a = (s, h)`, `x1 = -s`, `x2 = L - s`:
//!
//! ```text
//! I(z) = ∫_0^L log|z - ζ(τ)| dτ = x2 log r_b - x1 log r_a - L + h θ
//! ∇I(z) = (log r_a - log r_b) t + θ n
//! ```
//!
//! where `θ` is the signed angle subtended at `z` by the panel, measured
//! from `a - z` to `b - z`, and `n` is the left normal of the tangent `t`.

use crate::geom2d::Point2;

/// `x log r` with the removable singularity at `r = 0` filled in.
#[inline]
fn x_log_r(x: f64, r_sq: f64) -> f64 {
    if r_sq == 0.0 {
        0.0
    } else {
        0.5 * x * r_sq.ln()
    }
}

/// Integral of `log|z - ζ|` over the segment `[a, b]` with respect to
/// arclength. Finite for every `z`, including points on the segment.
pub fn panel_log_integral(a: Point2, b: Point2, z: Point2) -> f64 {
    let ab = b - a;
    let len = ab.norm();
    let t = ab * (1.0 / len);
    let da = a - z;
    let db = b - z;
    let x1 = da.dot(t);
    let x2 = db.dot(t);
    let h = (z - a).dot(t.perp());
    let theta = da.cross(db).atan2(da.dot(db));
    x_log_r(x2, db.norm_sq()) - x_log_r(x1, da.norm_sq()) - len + h * theta
}

/// Gradient of [`panel_log_integral`] with respect to `z`. Singular on the
/// closed segment.
pub fn panel_log_gradient(a: Point2, b: Point2, z: Point2) -> Point2 {
    let ab = b - a;
    let t = ab * (1.0 / ab.norm());
    let da = a - z;
    let db = b - z;
    let theta = da.cross(db).atan2(da.dot(db));
    let dlog = 0.5 * (da.norm_sq() / db.norm_sq()).ln();
    t * dlog + t.perp() * theta
}

/// Per-point data shared by the two panels meeting at a mesh vertex.
#[derive(Clone, Copy)]
pub(crate) struct EndpointSample {
    pub d: Point2,
    pub r_sq: f64,
    pub half_log_r_sq: f64,
    pub angle: f64,
}

impl EndpointSample {
    #[inline]
    pub fn new(p: Point2, z: Point2) -> Self {
        let d = p - z;
        let r_sq = d.norm_sq();
        Self {
            d,
            r_sq,
            half_log_r_sq: 0.5 * r_sq.ln(),
            angle: d.y.atan2(d.x),
        }
    }
}

#[inline]
fn wrap_angle(mut a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if a > PI {
        a -= TAU;
    } else if a <= -PI {
        a += TAU;
    }
    a
}

/// Same value as [`panel_log_integral`], reusing endpoint logarithms and
/// angles computed once per mesh vertex.
#[inline]
pub(crate) fn panel_value_shared(ea: &EndpointSample, eb: &EndpointSample, t: Point2, len: f64) -> f64 {
    let x1 = ea.d.dot(t);
    let x2 = eb.d.dot(t);
    // h = (z - a)·n
    let h = -ea.d.dot(t.perp());
    let theta = wrap_angle(eb.angle - ea.angle);
    let ta = if ea.r_sq == 0.0 { 0.0 } else { x1 * ea.half_log_r_sq };
    let tb = if eb.r_sq == 0.0 { 0.0 } else { x2 * eb.half_log_r_sq };
    tb - ta - len + h * theta
}

#[inline]
pub(crate) fn panel_gradient_shared(ea: &EndpointSample, eb: &EndpointSample, t: Point2) -> Point2 {
    let theta = wrap_angle(eb.angle - ea.angle);
    t * (ea.half_log_r_sq - eb.half_log_r_sq) + t.perp() * theta
}
