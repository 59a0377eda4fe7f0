use rayon::prelude::*;
use serde::Serialize;

use crate::geom2d::{contains, Containment, ConvexPolygon, Point2};
use crate::reflections::{label_of, ReflectedFieldSet};

use super::SkeletonError;

/// Cells of padding around the polygon's bounding box, so the exterior is
/// one ring-shaped region.
const PAD: usize = 2;
/// Edge length, in cells, of the coarsest labeling blocks.
const TOP_BLOCK: usize = 32;
/// A block is filled with one label only when every runner-up field trails
/// by more than this multiple of the first-order variation across it.
const CERTIFY_SAFETY: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellLabel {
    Exterior,
    Face(usize),
}

impl CellLabel {
    pub fn face(self) -> Option<usize> {
        match self {
            CellLabel::Face(j) => Some(j),
            CellLabel::Exterior => None,
        }
    }
}

/// Argmax labels of the reflected fields sampled at cell centers over a
/// padded bounding box of the polygon.
#[derive(Clone, Debug)]
pub struct LabelGrid {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    labels: Vec<CellLabel>,
    margins: Vec<f64>,
    polygon: ConvexPolygon,
    evaluated: usize,
}

impl LabelGrid {
    pub fn polygon(&self) -> &ConvexPolygon {
        &self.polygon
    }

    /// Center of cell `(0, 0)`.
    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn faces(&self) -> usize {
        self.polygon.len()
    }

    pub fn center(&self, ix: usize, iy: usize) -> Point2 {
        self.origin + Point2::new(ix as f64 * self.cell, iy as f64 * self.cell)
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn label(&self, ix: usize, iy: usize) -> CellLabel {
        self.labels[self.index(ix, iy)]
    }

    /// Lead of the winning field over the runner-up at the cell center.
    /// Cells inside certified blocks carry the first-order estimate from
    /// the block center. NaN outside the polygon.
    pub fn margin(&self, ix: usize, iy: usize) -> f64 {
        self.margins[self.index(ix, iy)]
    }

    pub fn labels(&self) -> &[CellLabel] {
        &self.labels
    }

    /// Number of cells whose fields were evaluated individually.
    pub fn evaluated_cells(&self) -> usize {
        self.evaluated
    }

    /// Cell containing `p`, if inside the grid.
    pub fn locate(&self, p: Point2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.cell + 0.5).floor();
        let fy = ((p.y - self.origin.y) / self.cell + 0.5).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            None
        } else {
            Some((fx as usize, fy as usize))
        }
    }
}

struct CellResult {
    index: usize,
    label: CellLabel,
    margin: f64,
    evaluated: bool,
}

struct Labeler<'a> {
    fields: &'a ReflectedFieldSet,
    poly: &'a ConvexPolygon,
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
}

impl Labeler<'_> {
    fn center(&self, ix: usize, iy: usize) -> Point2 {
        self.origin + Point2::new(ix as f64 * self.cell, iy as f64 * self.cell)
    }

    fn exact(&self, ix: usize, iy: usize, out: &mut Vec<CellResult>) {
        let p = self.center(ix, iy);
        let index = iy * self.nx + ix;
        if contains(self.poly, p) != Containment::Interior {
            out.push(CellResult {
                index,
                label: CellLabel::Exterior,
                margin: f64::NAN,
                evaluated: false,
            });
            return;
        }
        let l = label_of(&self.fields.fields_at(p));
        out.push(CellResult {
            index,
            label: CellLabel::Face(l.index),
            margin: l.margin,
            evaluated: true,
        });
    }

    /// Labels the cells `[x0, x1) x [y0, y1)`.
    fn block(&self, x0: usize, x1: usize, y0: usize, y1: usize, out: &mut Vec<CellResult>) {
        let w = x1 - x0;
        let h = y1 - y0;
        if w <= 2 || h <= 2 {
            for iy in y0..y1 {
                for ix in x0..x1 {
                    self.exact(ix, iy, out);
                }
            }
            return;
        }
        if let Some(cells) = self.certify(x0, x1, y0, y1) {
            out.extend(cells);
            return;
        }
        let xm = x0 + w / 2;
        let ym = y0 + h / 2;
        self.block(x0, xm, y0, ym, out);
        self.block(xm, x1, y0, ym, out);
        self.block(x0, xm, ym, y1, out);
        self.block(xm, x1, ym, y1, out);
    }

    /// Fills the whole block with one label when the winning field at its
    /// center leads every other by more than their combined gradients can
    /// close across the block.
    fn certify(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> Option<Vec<CellResult>> {
        let lo = self.center(x0, y0);
        let hi = self.center(x1 - 1, y1 - 1);
        let c = lo.lerp(hi, 0.5);
        let radius = c.distance(hi);
        // the reflected images of the block stay well clear of the boundary
        if self.poly.depth(c) <= 2.0 * radius {
            return None;
        }
        let n = self.fields.count();
        let vg: Vec<(f64, Point2)> = (0..n).map(|j| self.fields.field_with_grad(j, c)).collect();
        let values: Vec<f64> = vg.iter().map(|v| v.0).collect();
        let top = label_of(&values).index;
        let (vt, gt) = vg[top];
        for (k, &(vk, gk)) in vg.iter().enumerate() {
            if k != top && vt - vk <= CERTIFY_SAFETY * (gt.norm() + gk.norm()) * radius {
                return None;
            }
        }
        let mut cells = Vec::with_capacity((x1 - x0) * (y1 - y0));
        for iy in y0..y1 {
            for ix in x0..x1 {
                let d = self.center(ix, iy) - c;
                let margin = vg
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != top)
                    .map(|(_, &(vk, gk))| vt - vk + (gt - gk).dot(d))
                    .fold(f64::INFINITY, f64::min);
                cells.push(CellResult {
                    index: iy * self.nx + ix,
                    label: CellLabel::Face(top),
                    margin,
                    evaluated: false,
                });
            }
        }
        Some(cells)
    }
}

/// Samples the argmax label of the reflected fields on a square grid with
/// `resolution` cells across the longer side of the bounding box.
pub fn label_grid(fields: &ReflectedFieldSet, resolution: usize) -> Result<LabelGrid, SkeletonError> {
    if resolution < 64 {
        return Err(SkeletonError::InvalidResolution(resolution));
    }
    let poly = fields.polygon();
    let (lo, hi) = poly.bounding_box();
    let extent = (hi.x - lo.x).max(hi.y - lo.y);
    let cell = extent / resolution as f64;
    let nx = ((hi.x - lo.x) / cell).ceil() as usize + 2 * PAD;
    let ny = ((hi.y - lo.y) / cell).ceil() as usize + 2 * PAD;
    let origin = lo - Point2::new((PAD as f64 - 0.5) * cell, (PAD as f64 - 0.5) * cell);

    let labeler = Labeler {
        fields,
        poly,
        origin,
        cell,
        nx,
        ny,
    };
    let tiles: Vec<(usize, usize)> = (0..ny)
        .step_by(TOP_BLOCK)
        .flat_map(|y| (0..nx).step_by(TOP_BLOCK).map(move |x| (x, y)))
        .collect();
    let results: Vec<Vec<CellResult>> = tiles
        .par_iter()
        .map(|&(x0, y0)| {
            let mut out = Vec::new();
            labeler.block(
                x0,
                (x0 + TOP_BLOCK).min(labeler.nx),
                y0,
                (y0 + TOP_BLOCK).min(labeler.ny),
                &mut out,
            );
            out
        })
        .collect();

    let mut labels = vec![CellLabel::Exterior; nx * ny];
    let mut margins = vec![f64::NAN; nx * ny];
    let mut evaluated = 0;
    for r in results.into_iter().flatten() {
        labels[r.index] = r.label;
        margins[r.index] = r.margin;
        evaluated += usize::from(r.evaluated);
    }
    Ok(LabelGrid {
        origin,
        cell,
        nx,
        ny,
        labels,
        margins,
        polygon: poly.clone(),
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_polygon;
    use crate::geom2d::validate_polygon;

    fn fields(v: &[(f64, f64)]) -> ReflectedFieldSet {
        let poly = validate_polygon(&v.iter().map(|&(x, y)| Point2::new(x, y)).collect::<Vec<_>>()).unwrap();
        ReflectedFieldSet::new(solve_polygon(&poly, 32, 3.0).unwrap()).unwrap()
    }

    #[test]
    fn rejects_coarse_resolution() {
        let f = fields(&[(0.0, 0.0), (1.0, 0.0), (0.5, 0.8)]);
        assert!(matches!(label_grid(&f, 32), Err(SkeletonError::InvalidResolution(32))));
    }

    #[test]
    fn certified_fill_agrees_with_exact_labels() {
        let f = fields(&[(0.0, 0.0), (1.0, 0.0), (0.3, 0.8)]);
        let grid = label_grid(&f, 96).unwrap();
        let mut interior = 0;
        for iy in 0..grid.ny() {
            for ix in 0..grid.nx() {
                let p = grid.center(ix, iy);
                match grid.label(ix, iy) {
                    CellLabel::Exterior => assert_ne!(contains(f.polygon(), p), Containment::Interior),
                    CellLabel::Face(j) => {
                        interior += 1;
                        let exact = f.argmax_label(p).unwrap();
                        assert_eq!(exact.index, j, "cell ({ix},{iy})");
                        assert!((exact.margin - grid.margin(ix, iy)).abs() < 0.05);
                    }
                }
            }
        }
        assert!(grid.evaluated_cells() < interior);
        // the padding ring is exterior
        for ix in 0..grid.nx() {
            assert_eq!(grid.label(ix, 0), CellLabel::Exterior);
            assert_eq!(grid.label(ix, grid.ny() - 1), CellLabel::Exterior);
        }
    }

    #[test]
    fn side_midpoints_have_clear_margins() {
        let f = fields(&[(0.0, 0.0), (1.0, 0.0), (0.5, 3f64.sqrt() / 2.0)]);
        let grid = label_grid(&f, 128).unwrap();
        let c = f.polygon().centroid();
        let scale = f.fields_at(c)[0].abs();
        for j in 0..3 {
            let (a, b) = f.polygon().side(j);
            let mid = a.lerp(b, 0.5);
            let inward = f.polygon().face(j).unit_inward_normal;
            let (ix, iy) = grid.locate(mid + inward * (1.5 * grid.cell_size())).unwrap();
            assert_eq!(grid.label(ix, iy), CellLabel::Face(j));
            assert!(grid.margin(ix, iy) > 0.05 * scale);
        }
    }
}
