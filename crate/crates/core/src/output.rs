//! Legacy ASCII VTK export of fields on one submesh.

use std::io::{self, Write};

use crate::fem::{eval_reference, DofMap, FemError};
use crate::mesh::SubMesh;

const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Point data attached to the mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub enum PointData {
    Scalar(Vec<f64>),
    Vector(Vec<[f64; 2]>),
}

/// Values of a discrete field at the mesh vertices, averaged over the
/// incident cells (discontinuous fields get a continuous rendering).
pub fn vertex_values(dm: &DofMap, coeffs: &[f64]) -> Result<Vec<[f64; 2]>, FemError> {
    let mesh = dm.mesh();
    let mut sum = vec![[0.0; 2]; mesh.n_vertices()];
    let mut count = vec![0usize; mesh.n_vertices()];
    for cell in 0..mesh.n_cells() {
        for (k, &v) in mesh.triangles[cell].iter().enumerate() {
            let fv = eval_reference(dm, coeffs, cell, REF_VERTICES[k])?;
            sum[v][0] += fv.value[0];
            sum[v][1] += fv.value[1];
            count[v] += 1;
        }
    }
    Ok(sum
        .into_iter()
        .zip(count)
        .map(|(s, c)| if c == 0 { [0.0; 2] } else { [s[0] / c as f64, s[1] / c as f64] })
        .collect())
}

/// Writes an unstructured grid of triangles. `offset`, if given, moves each
/// vertex for rendering only.
pub fn write_vtk<W: Write>(
    out: &mut W,
    title: &str,
    mesh: &SubMesh,
    offset: Option<&[[f64; 2]]>,
    data: &[(&str, PointData)],
) -> io::Result<()> {
    let nv = mesh.n_vertices();
    let nc = mesh.n_cells();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nv} double")?;
    for (i, p) in mesh.vertices.iter().enumerate() {
        let d = offset.map_or([0.0; 2], |o| o[i]);
        writeln!(out, "{:.9e} {:.9e} 0", p.x + d[0], p.y + d[1])?;
    }
    writeln!(out, "CELLS {nc} {}", 4 * nc)?;
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(out, "5")?;
    }
    if data.is_empty() {
        return Ok(());
    }
    writeln!(out, "POINT_DATA {nv}")?;
    for (name, field) in data {
        let name = name.replace(char::is_whitespace, "_");
        match field {
            PointData::Scalar(v) => {
                check_len(v.len(), nv)?;
                writeln!(out, "SCALARS {name} double 1")?;
                writeln!(out, "LOOKUP_TABLE default")?;
                for x in v {
                    writeln!(out, "{x:.9e}")?;
                }
            }
            PointData::Vector(v) => {
                check_len(v.len(), nv)?;
                writeln!(out, "VECTORS {name} double")?;
                for x in v {
                    writeln!(out, "{:.9e} {:.9e} 0", x[0], x[1])?;
                }
            }
        }
    }
    Ok(())
}

fn check_len(got: usize, expected: usize) -> io::Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(io::Error::new(io::ErrorKind::InvalidInput, format!("point data has {got} values for {expected} vertices")))
    }
}
