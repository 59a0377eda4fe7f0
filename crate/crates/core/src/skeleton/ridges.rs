use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom2d::Point2;
use crate::reflections::ReflectedFieldSet;

use super::{CellLabel, Endpoint, Junction, LabelGrid, RidgeArc, Skeleton, SkeletonError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeOptions {
    /// `|u_i - u_j|` accepted as a tie.
    pub tie_tolerance: f64,
    /// Junction Newton step size at convergence, relative to the diameter.
    pub junction_tolerance: f64,
    /// Ridge points closer than this (relative to the diameter) to a vertex
    /// are replaced by a straight run into the vertex.
    pub vertex_truncation: f64,
    /// Largest gap, in cells, between consecutive crossings of one arc.
    pub max_gap_cells: f64,
}

impl Default for RidgeOptions {
    fn default() -> Self {
        Self {
            tie_tolerance: 1e-10,
            junction_tolerance: 1e-12,
            vertex_truncation: 1e-3,
            max_gap_cells: 2.0,
        }
    }
}

/// Junction-to-vertex arcs shorter than this many cells may be invisible on
/// the grid and are completed from the junction's tie structure.
const SHORT_ARC_CELLS: f64 = 16.0;

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Field indices sorted by decreasing value at `p`.
fn ranking(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

struct Extractor<'a> {
    fields: &'a ReflectedFieldSet,
    grid: &'a LabelGrid,
    opts: RidgeOptions,
    diameter: f64,
}

impl Extractor<'_> {
    fn diff(&self, i: usize, j: usize, p: Point2) -> f64 {
        self.fields.field(i, p) - self.fields.field(j, p)
    }

    /// Root of `u_i - u_j` on the segment `[p0, p1]` by the Illinois variant
    /// of regula falsi. `None` without a sign change.
    fn tie_on_segment(&self, i: usize, j: usize, p0: Point2, p1: Point2) -> Option<Point2> {
        let tol = self.opts.tie_tolerance;
        let (mut t0, mut t1) = (0.0, 1.0);
        let mut f0 = self.diff(i, j, p0);
        let mut f1 = self.diff(i, j, p1);
        if f0 == 0.0 {
            return Some(p0);
        }
        if f1 == 0.0 {
            return Some(p1);
        }
        if f0 * f1 > 0.0 {
            return None;
        }
        let len = p0.distance(p1);
        let mut side = 0i8;
        let mut p = p0;
        for _ in 0..200 {
            let t = (t0 * f1 - t1 * f0) / (f1 - f0);
            p = p0.lerp(p1, t);
            let f = self.diff(i, j, p);
            if f.abs() < tol || (t1 - t0) * len < 1e-15 * self.diameter {
                return Some(p);
            }
            if f * f1 > 0.0 {
                t1 = t;
                f1 = f;
                if side == -1 {
                    f0 *= 0.5;
                }
                side = -1;
            } else {
                t0 = t;
                f0 = f;
                if side == 1 {
                    f1 *= 0.5;
                }
                side = 1;
            }
        }
        Some(p)
    }

    /// Moves `p` onto the zero set of `u_i - u_j` along its gradient.
    fn project(&self, i: usize, j: usize, mut p: Point2) -> Point2 {
        for _ in 0..40 {
            let (vi, gi) = self.fields.field_with_grad(i, p);
            let (vj, gj) = self.fields.field_with_grad(j, p);
            let f = vi - vj;
            if f.abs() < self.opts.tie_tolerance {
                break;
            }
            let g = gi - gj;
            p = p - g * (f / g.norm_sq());
        }
        p
    }

    /// `p` is in `S[w]` for the pair: both tying fields are maximal.
    fn dominates(&self, i: usize, j: usize, p: Point2) -> bool {
        let v = self.fields.fields_at(p);
        let top = v[i].min(v[j]);
        (v[i] - v[j]).abs() < self.opts.tie_tolerance && v.iter().all(|&x| x <= top + self.opts.tie_tolerance)
    }

    fn near_vertex(&self, p: Point2) -> bool {
        let r = self.opts.vertex_truncation * self.diameter;
        self.fields.polygon().vertices().iter().any(|v| v.distance(p) < r)
    }

    /// Tie points on every grid edge whose end cells carry different labels.
    fn crossings(&self) -> BTreeMap<(usize, usize), Vec<Point2>> {
        let g = self.grid;
        let mut edges = Vec::new();
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                let CellLabel::Face(a) = g.label(ix, iy) else {
                    continue;
                };
                for (jx, jy) in [(ix + 1, iy), (ix, iy + 1)] {
                    if jx >= g.nx() || jy >= g.ny() {
                        continue;
                    }
                    if let CellLabel::Face(b) = g.label(jx, jy) {
                        if a != b {
                            edges.push((a, b, g.center(ix, iy), g.center(jx, jy)));
                        }
                    }
                }
            }
        }
        let found: Vec<Option<((usize, usize), Point2)>> = edges
            .par_iter()
            .map(|&(a, b, p0, p1)| {
                let p = self.tie_on_segment(a, b, p0, p1)?;
                if self.near_vertex(p) || !self.dominates(a, b, p) {
                    return None;
                }
                Some((ordered(a, b), p))
            })
            .collect();
        let mut by_pair: BTreeMap<(usize, usize), Vec<Point2>> = BTreeMap::new();
        for (pair, p) in found.into_iter().flatten() {
            by_pair.entry(pair).or_default().push(p);
        }
        by_pair
    }

    /// Cell corners surrounded by three or more labels, clustered.
    fn junction_seeds(&self) -> Vec<Point2> {
        let g = self.grid;
        let mut seeds: Vec<(Point2, usize)> = Vec::new();
        let radius = 3.0 * g.cell_size();
        for iy in 0..g.ny().saturating_sub(1) {
            for ix in 0..g.nx().saturating_sub(1) {
                let quad = [
                    g.label(ix, iy),
                    g.label(ix + 1, iy),
                    g.label(ix, iy + 1),
                    g.label(ix + 1, iy + 1),
                ];
                if quad.contains(&CellLabel::Exterior) {
                    continue;
                }
                let mut distinct: Vec<CellLabel> = quad.to_vec();
                distinct.sort_by_key(|l| l.face());
                distinct.dedup();
                if distinct.len() < 3 {
                    continue;
                }
                let corner = g.center(ix, iy).lerp(g.center(ix + 1, iy + 1), 0.5);
                match seeds
                    .iter_mut()
                    .find(|(s, n)| (*s * (1.0 / *n as f64)).distance(corner) < radius)
                {
                    Some((sum, n)) => {
                        *sum = *sum + corner;
                        *n += 1;
                    }
                    None => seeds.push((corner, 1)),
                }
            }
        }
        seeds.into_iter().map(|(s, n)| s * (1.0 / n as f64)).collect()
    }

    /// Newton on `(u_a - u_b, u_a - u_c)` for the three largest fields,
    /// re-ranking if another field overtakes them.
    fn refine_junction(&self, seed: Point2) -> Result<Point2, SkeletonError> {
        let fail = |detail: String| SkeletonError::JunctionFailure { seed, detail };
        let tol = self.opts.junction_tolerance * self.diameter;
        let max_step = 2.0 * self.grid.cell_size();
        let mut p = seed;
        for _restart in 0..4 {
            let order = ranking(&self.fields.fields_at(p));
            let (a, b, c) = (order[0], order[1], order[2]);
            let mut converged = false;
            for _ in 0..60 {
                let (va, ga) = self.fields.field_with_grad(a, p);
                let (vb, gb) = self.fields.field_with_grad(b, p);
                let (vc, gc) = self.fields.field_with_grad(c, p);
                let (r1, r2) = (va - vb, va - vc);
                let (j1, j2) = (ga - gb, ga - gc);
                let det = j1.cross(j2);
                if det.abs() < 1e-14 * j1.norm() * j2.norm() {
                    return Err(fail(format!("singular Jacobian for fields {a}, {b}, {c}")));
                }
                // Cramer's rule for J s = -r
                let mut step = Point2::new(-(r1 * j2.y - r2 * j1.y) / det, -(j1.x * r2 - j2.x * r1) / det);
                if step.norm() > max_step {
                    step = step * (max_step / step.norm());
                }
                p = p + step;
                if step.norm() < tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(fail("Newton did not converge".into()));
            }
            let v = self.fields.fields_at(p);
            let top = v[a].max(v[b]).max(v[c]);
            if v.iter().all(|&x| x <= top + self.opts.tie_tolerance) {
                if self.fields.polygon().depth(p) <= 0.0 {
                    return Err(fail(format!("converged outside the polygon at {p}")));
                }
                return Ok(p);
            }
        }
        Err(fail("a fourth field keeps overtaking".into()))
    }

    fn tied_fields(&self, p: Point2) -> Vec<usize> {
        let v = self.fields.fields_at(p);
        let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..v.len()).filter(|&k| v[k] >= top - 1e-8).collect()
    }

    /// Common vertex of two adjacent faces.
    fn shared_vertex(&self, (i, j): (usize, usize)) -> Option<usize> {
        let n = self.fields.count();
        if j == i + 1 {
            Some(j)
        } else if i == 0 && j == n - 1 {
            Some(0)
        } else {
            None
        }
    }
}

/// Splits a cloud of crossings into polylines by nearest-neighbor walks.
fn chain(mut points: Vec<Point2>, max_gap: f64, dedup: f64) -> Vec<Vec<Point2>> {
    let mut lines = Vec::new();
    while !points.is_empty() {
        // a point farthest from the centroid is an end of its arc
        let n = points.len() as f64;
        let centroid = points.iter().fold(Point2::default(), |s, &p| s + p) * (1.0 / n);
        let start = (0..points.len())
            .max_by(|&a, &b| points[a].distance(centroid).total_cmp(&points[b].distance(centroid)))
            .unwrap();
        let mut line = vec![points.swap_remove(start)];
        loop {
            let last = *line.last().unwrap();
            let next = (0..points.len()).min_by(|&a, &b| points[a].distance(last).total_cmp(&points[b].distance(last)));
            match next {
                Some(k) if points[k].distance(last) <= max_gap => line.push(points.swap_remove(k)),
                _ => break,
            }
        }
        // crossings the walk stepped past belong to the same arc
        points.retain(|&p| {
            !line
                .windows(2)
                .any(|w| crate::geom2d::distance_to_segment(p, w[0], w[1]) < dedup)
        });
        lines.push(line);
    }
    lines
}

pub fn extract_ridges(fields: &ReflectedFieldSet, grid: &LabelGrid, tol: f64) -> Result<Skeleton, SkeletonError> {
    extract_ridges_with(
        fields,
        grid,
        &RidgeOptions {
            tie_tolerance: tol,
            ..RidgeOptions::default()
        },
    )
}

pub fn extract_ridges_with(
    fields: &ReflectedFieldSet,
    grid: &LabelGrid,
    opts: &RidgeOptions,
) -> Result<Skeleton, SkeletonError> {
    let ex = Extractor {
        fields,
        grid,
        opts: *opts,
        diameter: fields.polygon().diameter(),
    };
    let h = grid.cell_size();
    let poly = fields.polygon();

    let mut junctions: Vec<Point2> = Vec::new();
    let merge_radius = 1e-6 * ex.diameter;
    let add_junction = |p: Point2, junctions: &mut Vec<Point2>| -> usize {
        if let Some(k) = junctions.iter().position(|q| q.distance(p) < merge_radius) {
            k
        } else {
            junctions.push(p);
            junctions.len() - 1
        }
    };
    for seed in ex.junction_seeds() {
        let p = ex.refine_junction(seed)?;
        add_junction(p, &mut junctions);
    }

    let junction_attach = 4.0 * h;
    let vertex_attach = |v: usize| super::tip_radius(poly, v, h, opts.vertex_truncation);
    let mut arcs = Vec::new();
    for (pair, pts) in ex.crossings() {
        for line in chain(pts, opts.max_gap_cells * h, 1.5 * h) {
            if let Some(v) = ex.shared_vertex(pair) {
                // scraps from the unresolved tip of the wedge; the main arc
                // is run into the vertex anyway
                let tip = poly.vertices()[v];
                if line.iter().all(|p| p.distance(tip) < vertex_attach(v)) {
                    continue;
                }
            }
            let mut ends = [Endpoint::Vertex(usize::MAX); 2];
            for (e, &p) in [line[0], *line.last().unwrap()].iter().enumerate() {
                let near_junction = junctions
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| q.distance(p) < junction_attach)
                    .min_by(|a, b| a.1.distance(p).total_cmp(&b.1.distance(p)))
                    .map(|(k, _)| k);
                let near_vertex = ex
                    .shared_vertex(pair)
                    .filter(|&v| poly.vertices()[v].distance(p) < vertex_attach(v));
                ends[e] = match (near_vertex, near_junction) {
                    (Some(v), Some(k)) if junctions[k].distance(p) < poly.vertices()[v].distance(p) => {
                        Endpoint::Junction(k)
                    }
                    (Some(v), _) => Endpoint::Vertex(v),
                    (None, Some(k)) => Endpoint::Junction(k),
                    (None, None) => {
                        // a junction whose wedge was too thin to show up on
                        // the grid: seed Newton from the loose end
                        let q = ex.refine_junction(p).map_err(|err| SkeletonError::ChainingFailure {
                            pair,
                            detail: format!("loose end at {p}: {err}"),
                        })?;
                        if q.distance(p) >= junction_attach {
                            return Err(SkeletonError::ChainingFailure {
                                pair,
                                detail: format!("loose end at {p} is {:.3e} from the nearest junction", q.distance(p)),
                            });
                        }
                        Endpoint::Junction(add_junction(q, &mut junctions))
                    }
                };
            }
            let (mut start, mut end) = (ends[0], ends[1]);
            let mut line = line;
            let swap = match (start, end) {
                (Endpoint::Vertex(_), Endpoint::Vertex(_)) => {
                    return Err(SkeletonError::ChainingFailure {
                        pair,
                        detail: "arc runs vertex to vertex".into(),
                    })
                }
                (Endpoint::Vertex(_), Endpoint::Junction(_)) => true,
                (Endpoint::Junction(a), Endpoint::Junction(b)) => a > b,
                _ => false,
            };
            if swap {
                line.reverse();
                std::mem::swap(&mut start, &mut end);
            }
            if start == end {
                // both ends at one junction: a stub, not an arc
                continue;
            }
            let points = complete_arc(&ex, pair, line, start, end, &junctions, poly.vertices(), h);
            arcs.push(RidgeArc {
                pair,
                points,
                start,
                end,
            });
        }
    }

    // arcs from a junction hugging a short side to that side's ends can be
    // shorter than the grid resolves; the tie structure still demands them
    let reach = SHORT_ARC_CELLS * h;
    for (k, &loc) in junctions.iter().enumerate() {
        let tied = ex.tied_fields(loc);
        for (a, &i) in tied.iter().enumerate() {
            for &j in &tied[a + 1..] {
                let pair = (i, j);
                let Some(v) = ex.shared_vertex(pair) else {
                    continue;
                };
                let tip = poly.vertices()[v];
                let present = arcs
                    .iter()
                    .any(|arc| arc.pair == pair && arc.end == Endpoint::Vertex(v));
                if present || loc.distance(tip) >= reach {
                    continue;
                }
                let mid = ex.project(i, j, loc.lerp(tip, 0.5));
                if !ex.dominates(i, j, mid) {
                    continue;
                }
                let (start, end) = (Endpoint::Junction(k), Endpoint::Vertex(v));
                let points = complete_arc(&ex, pair, vec![mid], start, end, &junctions, poly.vertices(), h);
                arcs.push(RidgeArc {
                    pair,
                    points,
                    start,
                    end,
                });
            }
        }
    }

    // keep only junctions that arcs actually reach, renumbered in order
    let mut used: Vec<usize> = arcs
        .iter()
        .flat_map(|a| [a.start, a.end])
        .filter_map(|e| match e {
            Endpoint::Junction(k) => Some(k),
            Endpoint::Vertex(_) => None,
        })
        .collect();
    used.sort_unstable();
    used.dedup();
    let renumber = |e: Endpoint| match e {
        Endpoint::Junction(k) => Endpoint::Junction(used.binary_search(&k).unwrap()),
        v => v,
    };
    for arc in &mut arcs {
        arc.start = renumber(arc.start);
        arc.end = renumber(arc.end);
    }
    let junctions: Vec<Junction> = used
        .iter()
        .enumerate()
        .map(|(new, &old)| {
            let location = junctions[old];
            let mut incident_pairs: Vec<(usize, usize)> = arcs
                .iter()
                .filter(|a| a.start == Endpoint::Junction(new) || a.end == Endpoint::Junction(new))
                .map(|a| a.pair)
                .collect();
            incident_pairs.sort_unstable();
            incident_pairs.dedup();
            Junction {
                location,
                incident_pairs,
                tied_fields: ex.tied_fields(location),
            }
        })
        .collect();
    arcs.sort_by(|a, b| {
        a.pair
            .cmp(&b.pair)
            .then(a.points[0].x.total_cmp(&b.points[0].x))
            .then(a.points[0].y.total_cmp(&b.points[0].y))
    });

    Ok(Skeleton {
        arcs,
        junctions,
        cell_size: h,
        tie_tolerance: opts.tie_tolerance,
        vertex_truncation: opts.vertex_truncation,
    })
}

/// Adds the endpoints to a chained polyline and fills gaps wider than one
/// cell: on-ridge points toward junctions, straight runs into vertices.
#[allow(clippy::too_many_arguments)]
fn complete_arc(
    ex: &Extractor<'_>,
    pair: (usize, usize),
    line: Vec<Point2>,
    start: Endpoint,
    end: Endpoint,
    junctions: &[Point2],
    vertices: &[Point2],
    h: f64,
) -> Vec<Point2> {
    let locate = |e: Endpoint| match e {
        Endpoint::Vertex(v) => vertices[v],
        Endpoint::Junction(k) => junctions[k],
    };
    let fill = |from: Point2, to: Point2, toward: Endpoint, out: &mut Vec<Point2>| {
        let gap = from.distance(to);
        let pieces = (gap / h).ceil() as usize;
        let cutoff = ex.opts.vertex_truncation * ex.diameter;
        for k in 1..pieces {
            let q = from.lerp(to, k as f64 / pieces as f64);
            let on_ridge = match toward {
                Endpoint::Vertex(v) => vertices[v].distance(q) > cutoff,
                Endpoint::Junction(_) => true,
            };
            out.push(if on_ridge { ex.project(pair.0, pair.1, q) } else { q });
        }
    };
    let mut out = Vec::with_capacity(line.len() + 8);
    let s = locate(start);
    out.push(s);
    fill(s, line[0], start, &mut out);
    for w in line.windows(2) {
        out.push(w[0]);
        if w[0].distance(w[1]) > h {
            fill(w[0], w[1], start, &mut out);
        }
    }
    let last = *line.last().unwrap();
    out.push(last);
    let e = locate(end);
    let mut tail = Vec::new();
    fill(e, last, end, &mut tail);
    tail.reverse();
    out.extend(tail);
    out.push(e);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_orders_a_curve_and_splits_at_gaps() {
        let mut pts: Vec<Point2> = (0..20)
            .map(|k| {
                let t = k as f64 * 0.05;
                Point2::new(t, t * t)
            })
            .collect();
        pts.extend((0..5).map(|k| Point2::new(5.0 + 0.05 * k as f64, 0.0)));
        // shuffle deterministically
        pts.reverse();
        pts.swap(3, 11);
        let lines = chain(pts, 0.2, 0.03);
        assert_eq!(lines.len(), 2);
        let long = lines.iter().find(|l| l.len() == 20).unwrap();
        let xs: Vec<f64> = long.iter().map(|p| p.x).collect();
        let increasing = xs.windows(2).all(|w| w[0] < w[1]);
        let decreasing = xs.windows(2).all(|w| w[0] > w[1]);
        assert!(increasing || decreasing, "{xs:?}");
    }

    #[test]
    fn ranking_breaks_ties_by_index() {
        assert_eq!(ranking(&[1.0, 3.0, 3.0, -1.0]), vec![1, 2, 0, 3]);
    }
}
