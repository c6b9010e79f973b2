//! Structured generators: stacks of horizontal bands split into triangles.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BoundaryEdge, BoundaryTag, CoupledMesh, MeshError, Point2, SubMesh, Subdomain};

/// How each grid square is cut into two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalPattern {
    /// Every square cut along the lower-left to upper-right diagonal.
    Uniform,
    /// Diagonal direction alternates in a checkerboard pattern.
    #[default]
    Alternating,
}

/// A horizontal strip `y0 < y < y1` belonging to one subdomain.
///
/// `bottom`/`top` are only used where the strip edge is on the exterior
/// boundary; strip edges shared with the other subdomain become interface.
#[derive(Debug, Clone, Copy)]
pub struct Band {
    pub y0: f64,
    pub y1: f64,
    pub ny: usize,
    pub subdomain: Subdomain,
    pub left: BoundaryTag,
    pub right: BoundaryTag,
    pub bottom: BoundaryTag,
    pub top: BoundaryTag,
}

/// Exterior tags for the two-rectangle layout (poroelastic below, fluid above).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RectangleTags {
    pub fluid_left: BoundaryTag,
    pub fluid_right: BoundaryTag,
    pub fluid_top: BoundaryTag,
    pub poro_left: BoundaryTag,
    pub poro_right: BoundaryTag,
    pub poro_bottom: BoundaryTag,
}

impl RectangleTags {
    /// Fluid velocity data on the whole exterior fluid boundary, Darcy
    /// pressure data on the whole exterior poroelastic boundary.
    pub fn mms() -> Self {
        Self {
            fluid_left: BoundaryTag::GammaF,
            fluid_right: BoundaryTag::GammaF,
            fluid_top: BoundaryTag::GammaF,
            poro_left: BoundaryTag::GammaPD,
            poro_right: BoundaryTag::GammaPD,
            poro_bottom: BoundaryTag::GammaPD,
        }
    }
}

/// Rectangle `extents = [x0, x1, y0, y1]` cut at `interface_y`: poroelastic
/// part below, fluid part above.
pub fn build_rectangle_coupled_mesh(
    extents: [f64; 4],
    interface_y: f64,
    nx: usize,
    ny_f: usize,
    ny_p: usize,
    tags: RectangleTags,
    pattern: DiagonalPattern,
) -> Result<CoupledMesh, MeshError> {
    if nx == 0 || ny_f == 0 || ny_p == 0 {
        return Err(MeshError::ZeroSubdivision { nx, ny_f, ny_p });
    }
    let [x0, x1, y0, y1] = extents;
    if !(interface_y > y0 && interface_y < y1) {
        return Err(MeshError::InterfaceOutside { interface_y, y0, y1 });
    }
    let bands = [
        Band {
            y0,
            y1: interface_y,
            ny: ny_p,
            subdomain: Subdomain::Poroelastic,
            left: tags.poro_left,
            right: tags.poro_right,
            bottom: tags.poro_bottom,
            top: BoundaryTag::GammaFP,
        },
        Band {
            y0: interface_y,
            y1,
            ny: ny_f,
            subdomain: Subdomain::Fluid,
            left: tags.fluid_left,
            right: tags.fluid_right,
            bottom: BoundaryTag::GammaFP,
            top: tags.fluid_top,
        },
    ];
    build_banded_mesh(x0, x1, nx, &bands, pattern)
}

struct Builder {
    vertices: Vec<Point2>,
    index: HashMap<(usize, usize), usize>,
    triangles: Vec<[usize; 3]>,
    bedges: Vec<BoundaryEdge>,
}

impl Builder {
    fn new() -> Self {
        Self { vertices: Vec::new(), index: HashMap::new(), triangles: Vec::new(), bedges: Vec::new() }
    }

    fn vertex(&mut self, i: usize, r: usize, xs: &[f64], ys: &[f64]) -> usize {
        *self.index.entry((i, r)).or_insert_with(|| {
            self.vertices.push(Point2::new(xs[i], ys[r]));
            self.vertices.len() - 1
        })
    }
}

/// Stacks `bands` bottom to top over `x0 < x < x1` with `nx` columns.
/// Consecutive bands must share their common `y`.
pub fn build_banded_mesh(
    x0: f64,
    x1: f64,
    nx: usize,
    bands: &[Band],
    pattern: DiagonalPattern,
) -> Result<CoupledMesh, MeshError> {
    if bands.is_empty() {
        return Err(MeshError::Layout("no bands".into()));
    }
    if nx == 0 || bands.iter().any(|b| b.ny == 0) {
        return Err(MeshError::Layout("subdivision counts must be at least 1".into()));
    }
    if !(x1 > x0) {
        return Err(MeshError::Layout(format!("empty x range ({x0}, {x1})")));
    }
    for w in bands.windows(2) {
        if w[0].y1 != w[1].y0 {
            return Err(MeshError::Layout(format!("bands do not abut: {} vs {}", w[0].y1, w[1].y0)));
        }
    }
    for b in bands {
        if !(b.y1 > b.y0) {
            return Err(MeshError::Layout(format!("empty band ({}, {})", b.y0, b.y1)));
        }
    }

    let xs: Vec<f64> = (0..=nx)
        .map(|i| if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 })
        .collect();
    let mut ys = vec![bands[0].y0];
    let mut first_row = Vec::with_capacity(bands.len());
    for b in bands {
        first_row.push(ys.len() - 1);
        for j in 1..=b.ny {
            ys.push(if j == b.ny { b.y1 } else { b.y0 + (b.y1 - b.y0) * j as f64 / b.ny as f64 });
        }
    }

    let mut fluid = Builder::new();
    let mut poro = Builder::new();
    let mut pairs = Vec::new();

    for (k, band) in bands.iter().enumerate() {
        let r0 = first_row[k];
        let bld = match band.subdomain {
            Subdomain::Fluid => &mut fluid,
            Subdomain::Poroelastic => &mut poro,
        };
        for jl in 0..band.ny {
            let r = r0 + jl;
            for i in 0..nx {
                let a = bld.vertex(i, r, &xs, &ys);
                let b = bld.vertex(i + 1, r, &xs, &ys);
                let c = bld.vertex(i + 1, r + 1, &xs, &ys);
                let d = bld.vertex(i, r + 1, &xs, &ys);
                let flip = pattern == DiagonalPattern::Alternating && (i + r) % 2 == 1;
                if flip {
                    bld.triangles.push([a, b, d]);
                    bld.triangles.push([b, c, d]);
                } else {
                    bld.triangles.push([a, b, c]);
                    bld.triangles.push([a, c, d]);
                }
            }
            let l0 = bld.vertex(0, r, &xs, &ys);
            let l1 = bld.vertex(0, r + 1, &xs, &ys);
            bld.bedges.push(BoundaryEdge { vertices: [l0, l1], tag: band.left });
            let q0 = bld.vertex(nx, r, &xs, &ys);
            let q1 = bld.vertex(nx, r + 1, &xs, &ys);
            bld.bedges.push(BoundaryEdge { vertices: [q0, q1], tag: band.right });
        }
        let below = k.checked_sub(1).map(|j| bands[j].subdomain);
        let above = bands.get(k + 1).map(|b| b.subdomain);
        let rtop = r0 + band.ny;
        for (row, neighbour, tag) in [(r0, below, band.bottom), (rtop, above, band.top)] {
            match neighbour {
                Some(s) if s == band.subdomain => {}
                Some(_) => {
                    for i in 0..nx {
                        let a = bld.vertex(i, row, &xs, &ys);
                        let b = bld.vertex(i + 1, row, &xs, &ys);
                        bld.bedges.push(BoundaryEdge { vertices: [a, b], tag: BoundaryTag::GammaFP });
                    }
                }
                None => {
                    for i in 0..nx {
                        let a = bld.vertex(i, row, &xs, &ys);
                        let b = bld.vertex(i + 1, row, &xs, &ys);
                        bld.bedges.push(BoundaryEdge { vertices: [a, b], tag });
                    }
                }
            }
        }
    }

    for k in 0..bands.len() - 1 {
        if bands[k].subdomain == bands[k + 1].subdomain {
            continue;
        }
        let row = first_row[k + 1];
        for i in 0..nx {
            let f = [fluid.index[&(i, row)], fluid.index[&(i + 1, row)]];
            let p = [poro.index[&(i, row)], poro.index[&(i + 1, row)]];
            pairs.push((f, p));
        }
    }

    let fluid = SubMesh::new(fluid.vertices, fluid.triangles, fluid.bedges, Subdomain::Fluid)?;
    let poro = SubMesh::new(poro.vertices, poro.triangles, poro.bedges, Subdomain::Poroelastic)?;
    CoupledMesh::new_validated(fluid, poro, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_counts_and_outside_interface() {
        let t = RectangleTags::mms();
        let p = DiagonalPattern::Alternating;
        assert!(matches!(
            build_rectangle_coupled_mesh([0.0, 1.0, -1.0, 1.0], 0.0, 0, 1, 1, t, p),
            Err(MeshError::ZeroSubdivision { .. })
        ));
        assert!(matches!(
            build_rectangle_coupled_mesh([0.0, 1.0, -1.0, 1.0], 1.0, 1, 1, 1, t, p),
            Err(MeshError::InterfaceOutside { .. })
        ));
    }

    #[test]
    fn areas_match_rectangles() {
        for pattern in [DiagonalPattern::Uniform, DiagonalPattern::Alternating] {
            let m = build_rectangle_coupled_mesh([0.0, 1.0, -1.0, 1.0], 0.0, 8, 8, 8, RectangleTags::mms(), pattern).unwrap();
            assert!((m.fluid.total_area() - 1.0).abs() < 1e-12);
            assert!((m.poro.total_area() - 1.0).abs() < 1e-12);
            assert_eq!(m.fluid.n_cells(), 128);
            assert_eq!(m.interface.len(), 8);
            assert!((m.fluid.max_diameter() - 2f64.sqrt() / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn three_band_channel_has_two_interfaces() {
        let (r, rp, l) = (0.5, 0.1, 6.0);
        let wall = |y0: f64, y1: f64, bottom, top| Band {
            y0,
            y1,
            ny: 2,
            subdomain: Subdomain::Poroelastic,
            left: BoundaryTag::PInlet,
            right: BoundaryTag::POutlet,
            bottom,
            top,
        };
        let bands = [
            wall(-r - rp, -r, BoundaryTag::PExt, BoundaryTag::GammaFP),
            Band {
                y0: -r,
                y1: r,
                ny: 10,
                subdomain: Subdomain::Fluid,
                left: BoundaryTag::FInlet,
                right: BoundaryTag::FOutlet,
                bottom: BoundaryTag::GammaFP,
                top: BoundaryTag::GammaFP,
            },
            wall(r, r + rp, BoundaryTag::GammaFP, BoundaryTag::PExt),
        ];
        let m = build_banded_mesh(0.0, l, 60, &bands, DiagonalPattern::Alternating).unwrap();
        assert!(m.validate().is_empty());
        assert_eq!(m.interface.len(), 120);
        assert!((m.interface_length() - 12.0).abs() < 1e-12);
        assert!((m.fluid.total_area() - 6.0).abs() < 1e-12);
        assert!((m.poro.total_area() - 1.2).abs() < 1e-12);
        let up = m.interface.iter().filter(|e| e.normal_f[1] > 0.0).count();
        assert_eq!(up, 60);
    }
}
