//! Legacy ASCII VTK output of the mesh, nodal displacement and cell fields.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fespace::NodalField;
use crate::mesh::Mesh;
use crate::postproc::CellField;

/// VTK cell type of a 4-node quadrilateral.
const VTK_QUAD: u8 = 9;

/// Write an `UNSTRUCTURED_GRID`. Split crack nodes appear as distinct points
/// with equal coordinates.
pub fn write_vtk(
    mesh: &Mesh,
    cell_fields: &[CellField],
    displacement: Option<&NodalField>,
    mut out: impl Write,
) -> Result<()> {
    let n_points = mesh.n_nodes();
    let n_cells = mesh.n_cells();
    if let Some(u) = displacement {
        if u.n_nodes() != n_points {
            return Err(Error::DimensionMismatch {
                expected: 2 * n_points,
                found: u.as_slice().len(),
            });
        }
    }
    if let Some(f) = cell_fields.iter().find(|f| f.values.len() != n_cells) {
        return Err(Error::DimensionMismatch {
            expected: n_cells,
            found: f.values.len(),
        });
    }

    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "plane strain solution")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n_points} double")?;
    for p in mesh.nodes() {
        writeln!(out, "{:.16e} {:.16e} 0", p[0], p[1])?;
    }
    writeln!(out, "CELLS {n_cells} {}", 5 * n_cells)?;
    for c in mesh.cells() {
        writeln!(out, "4 {} {} {} {}", c[0], c[1], c[2], c[3])?;
    }
    writeln!(out, "CELL_TYPES {n_cells}")?;
    for _ in 0..n_cells {
        writeln!(out, "{VTK_QUAD}")?;
    }
    if let Some(u) = displacement {
        writeln!(out, "POINT_DATA {n_points}")?;
        writeln!(out, "VECTORS displacement double")?;
        for i in 0..n_points {
            let v = u.node(i);
            writeln!(out, "{:.16e} {:.16e} 0", v[0], v[1])?;
        }
    }
    if !cell_fields.is_empty() {
        writeln!(out, "CELL_DATA {n_cells}")?;
        for f in cell_fields {
            writeln!(out, "SCALARS {} double 1", f.quantity.name())?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in &f.values {
                writeln!(out, "{v:.16e}")?;
            }
        }
    }
    Ok(())
}
