//! Flat CSV serialization of dof vectors with a layout header.

use super::{DofLayout, DofVector, SpaceKind};
use std::io::{BufRead, Write};
use std::path::Path;

/// Write as CSV: a `#` header describing the layout, then `index,value` rows.
pub fn write_dofs_csv(path: &Path, layout: &DofLayout, z: &DofVector) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let space = match z.space {
        SpaceKind::Grad => "grad",
        SpaceKind::Curl => "curl",
        SpaceKind::Div => "div",
    };
    writeln!(
        f,
        "# space={space} k={} vertices={}x{} edges={}x{} faces={}x{} cells={}x{} total={}",
        z.k,
        layout.n_vertices,
        layout.vertex_dim,
        layout.n_edges,
        layout.edge_dim,
        layout.n_faces,
        layout.face_dim,
        layout.n_cells,
        layout.cell_dim,
        layout.total()
    )?;
    writeln!(f, "index,value")?;
    for i in 0..z.data.len() {
        writeln!(f, "{},{:.17e}", i, z.data[i])?;
    }
    Ok(())
}

/// Read a vector written by [`write_dofs_csv`]; the caller provides the
/// expected layout, which is checked against the header total.
pub fn read_dofs_csv(
    path: &Path,
    layout: &DofLayout,
    space: SpaceKind,
    k: i64,
) -> std::io::Result<DofVector> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut data = vec![0.0; layout.total()];
    for line in f.lines() {
        let line = line?;
        if line.starts_with('#') {
            if let Some(t) = line.split("total=").nth(1) {
                let total: usize = t.trim().parse().map_err(bad)?;
                if total != layout.total() {
                    return Err(bad(format!(
                        "layout mismatch: file has {total} dofs, expected {}",
                        layout.total()
                    )));
                }
            }
            continue;
        }
        if line.starts_with("index") || line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let idx: usize = parts.next().ok_or_else(|| bad("missing index"))?.parse().map_err(bad)?;
        let val: f64 = parts.next().ok_or_else(|| bad("missing value"))?.parse().map_err(bad)?;
        if idx >= data.len() {
            return Err(bad(format!("index {idx} out of range")));
        }
        data[idx] = val;
    }
    Ok(DofVector {
        space,
        k,
        data: nalgebra::DVector::from_vec(data),
    })
}

fn bad(e: impl ToString) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dofs::{random_dofs, DdrCore};
    use crate::mesh::gen_hex_cube;
    use crate::poly::{BasisCache, CacheSpec};

    #[test]
    fn round_trip() {
        let mesh = gen_hex_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(1, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 1).unwrap();
        let z = random_dofs(&core, SpaceKind::Curl, 42, None);
        let path = std::env::temp_dir().join("ddr_dofs_roundtrip.csv");
        write_dofs_csv(&path, &core.curl, &z).unwrap();
        let back = read_dofs_csv(&path, &core.curl, SpaceKind::Curl, 1).unwrap();
        assert_eq!(z, back);
        std::fs::remove_file(&path).ok();
    }
}
