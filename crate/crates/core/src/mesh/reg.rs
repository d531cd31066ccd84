//! Mesh regularity measurements used to contextualize experiment constants.

use super::patch::{polytopal_patch, simplicial_patch, SeedEntity};
use super::{MeshError, PolytopalMesh};

/// Shape-regularity summary. Ratios are reported, not asserted against a
/// threshold: the regularity parameter of the theory is never quantified.
#[derive(Clone, Debug)]
pub struct RegularityReport {
    /// min over cells of (inscribed-ball radius) / h_T.
    pub min_cell_inradius_ratio: f64,
    /// min over simplices of inradius / h_S.
    pub min_simplex_inradius_ratio: f64,
    /// max cardinality of S_h(T).
    pub max_simplices_per_cell: usize,
    /// max cardinality of a polytopal patch.
    pub max_polytopal_patch: usize,
    /// max cardinality of a 4-level simplicial patch (seeded at cells).
    pub max_simplicial_patch: usize,
    /// max over cells of h_T.
    pub h_max: f64,
}

/// Compute the regularity report. Degenerate entities are hard errors naming
/// the entity.
pub fn regularity_report(mesh: &PolytopalMesh) -> Result<RegularityReport, MeshError> {
    let mut min_cell_ratio = f64::INFINITY;
    for (c, cell) in mesh.cells.iter().enumerate() {
        if cell.volume <= 0.0 || cell.diameter <= 0.0 {
            return Err(MeshError::Degenerate {
                kind: "cell",
                id: c,
                measure: cell.volume,
            });
        }
        // Radius of the largest ball around x_T inside the cell: distance from
        // the center to the nearest boundary triangle plane (cells are
        // star-shaped around x_T by the validated invariants).
        let mut r = f64::INFINITY;
        for &(f, s) in &cell.faces {
            let face = &mesh.faces[f];
            let d = f64::from(s) * face.normal.dot(&(face.center - cell.center));
            r = r.min(d);
        }
        // A contained simplex ball may be bigger on nonconvex cells.
        for &sx in &cell.simplices {
            let s = &mesh.submesh.simplices[sx];
            r = r.max(simplex_inradius(mesh, sx));
            let _ = s;
        }
        min_cell_ratio = min_cell_ratio.min(r / cell.diameter);
    }

    let mut min_simplex_ratio = f64::INFINITY;
    for (s, sx) in mesh.submesh.simplices.iter().enumerate() {
        if sx.volume <= 0.0 {
            return Err(MeshError::Degenerate {
                kind: "simplex",
                id: s,
                measure: sx.volume,
            });
        }
        min_simplex_ratio = min_simplex_ratio.min(simplex_inradius(mesh, s) / sx.diameter);
    }

    let max_simplices_per_cell = mesh
        .cells
        .iter()
        .map(|c| c.simplices.len())
        .max()
        .unwrap_or(0);
    let mut max_ppatch = 0;
    let mut max_spatch = 0;
    for c in 0..mesh.n_cells() {
        max_ppatch = max_ppatch.max(polytopal_patch(mesh, c).members.len());
        max_spatch = max_spatch.max(simplicial_patch(mesh, SeedEntity::Cell(c)).members.len());
    }

    Ok(RegularityReport {
        min_cell_inradius_ratio: min_cell_ratio,
        min_simplex_inradius_ratio: min_simplex_ratio,
        max_simplices_per_cell,
        max_polytopal_patch: max_ppatch,
        max_simplicial_patch: max_spatch,
        h_max: mesh.h_max(),
    })
}

/// Inradius of a tetrahedron: 3 V / total face area.
fn simplex_inradius(mesh: &PolytopalMesh, s: usize) -> f64 {
    let v = mesh.submesh.simplices[s].verts;
    let p: Vec<_> = v.iter().map(|&i| mesh.points[i]).collect();
    let mut area = 0.0;
    for skip in 0..4 {
        let t: Vec<_> = (0..4).filter(|&i| i != skip).map(|i| p[i]).collect();
        area += 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm();
    }
    3.0 * mesh.submesh.simplices[s].volume / area
}

#[cfg(test)]
mod tests {
    use super::super::gen::{gen_agglomerated, gen_hex_cube, gen_tet_cube};
    use super::*;

    #[test]
    fn hex_inradius_ratio_is_exact() {
        // Cube: inscribed ball radius a/2, diameter a*sqrt(3).
        for n in [1usize, 2, 3] {
            let m = gen_hex_cube(n).unwrap();
            let rep = regularity_report(&m).unwrap();
            let want = 1.0 / (2.0 * 3.0f64.sqrt());
            assert!(
                (rep.min_cell_inradius_ratio - want).abs() < 1e-13,
                "n={n}: {} vs {want}",
                rep.min_cell_inradius_ratio
            );
        }
    }

    #[test]
    fn tet_family_is_self_similar() {
        let a = regularity_report(&gen_tet_cube(1).unwrap()).unwrap();
        let b = regularity_report(&gen_tet_cube(2).unwrap()).unwrap();
        assert!((a.min_cell_inradius_ratio - b.min_cell_inradius_ratio).abs() < 1e-12);
        assert!((a.min_simplex_inradius_ratio - b.min_simplex_inradius_ratio).abs() < 1e-12);
        assert!((a.h_max - 2.0 * b.h_max).abs() < 1e-12);
    }

    #[test]
    fn agglomerated_bookkeeping() {
        let m = gen_agglomerated(2, 0).unwrap();
        let rep = regularity_report(&m).unwrap();
        let largest = m.cells.iter().map(|c| c.simplices.len()).max().unwrap();
        assert_eq!(rep.max_simplices_per_cell, largest);
        assert!(rep.min_cell_inradius_ratio > 0.0);
    }
}
