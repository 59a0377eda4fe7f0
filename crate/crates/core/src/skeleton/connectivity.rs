use serde::Serialize;

use super::{tip_radius, CellLabel, LabelGrid, Skeleton};
use crate::geom2d::Point2;

/// Cells around a junction where a narrow wedge may break into loose cells.
const JUNCTION_TIP_CELLS: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionSummary {
    pub label: usize,
    pub cells: usize,
    /// The region reaches the side it is labeled by.
    pub touches_own_face: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectivityReport {
    pub faces: usize,
    pub regions: Vec<RegionSummary>,
    /// Secondary label components lying wholly inside an unresolved vertex
    /// or junction tip, where the grid breaks a narrow wedge into loose
    /// cells. Not counted as regions.
    pub tip_fragments: usize,
    /// Components of the grid with ridge cells removed, interior and
    /// exterior cells merged across the boundary.
    pub complement_components: usize,
    pub complement_connected: bool,
    pub arcs: usize,
    pub junctions: usize,
}

impl ConnectivityReport {
    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    /// One region per side, each reaching its own side.
    pub fn regions_match_faces(&self) -> bool {
        let mut labels: Vec<usize> = self.regions.iter().map(|r| r.label).collect();
        labels.sort_unstable();
        labels == (0..self.faces).collect::<Vec<_>>() && self.regions.iter().all(|r| r.touches_own_face)
    }
}

/// 4-connected components of the cells selected by `member`; returns the
/// per-cell component id (`usize::MAX` for non-members) and the count.
fn components(
    nx: usize,
    ny: usize,
    member: impl Fn(usize) -> bool,
    same: impl Fn(usize, usize) -> bool,
) -> (Vec<usize>, usize) {
    let mut comp = vec![usize::MAX; nx * ny];
    let mut count = 0;
    let mut stack = Vec::new();
    for seed in 0..nx * ny {
        if comp[seed] != usize::MAX || !member(seed) {
            continue;
        }
        comp[seed] = count;
        stack.push(seed);
        while let Some(c) = stack.pop() {
            let (x, y) = (c % nx, c / nx);
            let mut visit = |n: usize| {
                if comp[n] == usize::MAX && member(n) && same(c, n) {
                    comp[n] = count;
                    stack.push(n);
                }
            };
            if x > 0 {
                visit(c - 1);
            }
            if x + 1 < nx {
                visit(c + 1);
            }
            if y > 0 {
                visit(c - nx);
            }
            if y + 1 < ny {
                visit(c + nx);
            }
        }
        count += 1;
    }
    (comp, count)
}

/// Counts label regions, checks each reaches its own side, and tests
/// whether the ridge cells separate any part of the plane.
///
/// A cell is a ridge cell when its right or upper neighbor is an interior
/// cell of a different label, so no two 4-adjacent non-ridge cells carry
/// different labels.
pub fn connectivity_report(grid: &LabelGrid, skel: &Skeleton) -> ConnectivityReport {
    let (nx, ny) = (grid.nx(), grid.ny());
    let labels = grid.labels();

    let (region_of, n_regions) = components(
        nx,
        ny,
        |c| labels[c] != CellLabel::Exterior,
        |a, b| labels[a] == labels[b],
    );
    let mut regions: Vec<RegionSummary> = (0..n_regions)
        .map(|_| RegionSummary {
            label: usize::MAX,
            cells: 0,
            touches_own_face: false,
        })
        .collect();
    let poly = grid.polygon();
    let n = poly.len();
    let tips: Vec<f64> = (0..n)
        .map(|v| tip_radius(poly, v, grid.cell_size(), skel.vertex_truncation))
        .collect();
    // vertex v joins faces v - 1 and v
    let junction_tip = JUNCTION_TIP_CELLS * grid.cell_size();
    let in_own_tip = |j: usize, p: Point2| {
        [j, (j + 1) % n]
            .iter()
            .any(|&v| poly.vertices()[v].distance(p) < tips[v])
            || skel.junctions.iter().any(|q| q.location.distance(p) < junction_tip)
    };
    let mut all_tip = vec![true; n_regions];
    for c in 0..nx * ny {
        let CellLabel::Face(j) = labels[c] else {
            continue;
        };
        let k = region_of[c];
        let r = &mut regions[k];
        r.label = j;
        r.cells += 1;
        all_tip[k] &= in_own_tip(j, grid.center(c % nx, c / nx));
    }
    // boundary cells of each region: nearest side decides which side it meets
    for iy in 0..ny {
        for ix in 0..nx {
            let c = grid.index(ix, iy);
            let CellLabel::Face(j) = labels[c] else {
                continue;
            };
            let on_boundary = [
                (ix.wrapping_sub(1), iy),
                (ix + 1, iy),
                (ix, iy.wrapping_sub(1)),
                (ix, iy + 1),
            ]
            .iter()
            .any(|&(x, y)| x < nx && y < ny && labels[grid.index(x, y)] == CellLabel::Exterior);
            if on_boundary && grid.polygon().nearest_face(grid.center(ix, iy)) == j {
                regions[region_of[c]].touches_own_face = true;
            }
        }
    }

    // the largest component of each label is its region proper
    let mut largest = vec![usize::MAX; n];
    for (k, r) in regions.iter().enumerate() {
        let best = &mut largest[r.label];
        if *best == usize::MAX || regions[*best].cells < r.cells {
            *best = k;
        }
    }
    let fragment: Vec<bool> = (0..n_regions)
        .map(|k| all_tip[k] && largest[regions[k].label] != k)
        .collect();
    let tip_fragments = fragment.iter().filter(|&&f| f).count();
    let regions: Vec<RegionSummary> = regions
        .into_iter()
        .zip(&fragment)
        .filter(|(_, &f)| !f)
        .map(|(r, _)| r)
        .collect();

    let is_ridge = |c: usize| {
        let CellLabel::Face(j) = labels[c] else {
            return false;
        };
        let (x, y) = (c % nx, c / nx);
        let differs = |n: usize| matches!(labels[n], CellLabel::Face(k) if k != j);
        (x + 1 < nx && differs(c + 1)) || (y + 1 < ny && differs(c + nx))
    };
    let (_, complement_components) = components(nx, ny, |c| !is_ridge(c), |_, _| true);

    ConnectivityReport {
        faces: grid.faces(),
        regions,
        tip_fragments,
        complement_components,
        complement_connected: complement_components == 1,
        arcs: skel.arcs.len(),
        junctions: skel.junctions.len(),
    }
}
