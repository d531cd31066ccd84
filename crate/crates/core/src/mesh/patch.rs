//! Polytopal and simplicial patches.

use super::PolytopalMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchKind {
    Polytopal,
    Simplicial,
}

/// A patch of cells or simplices around an entity.
#[derive(Clone, Debug)]
pub struct Patch {
    pub kind: PatchKind,
    /// Member cell ids (polytopal) or simplex ids (simplicial), sorted.
    pub members: Vec<usize>,
    /// For simplicial patches: contained in the polytopal patch of the parent
    /// cell (the theory's standing assumption; may fail on very coarse meshes).
    pub contained_in_polytopal: bool,
    /// Euler characteristic of the closed patch complex (1 for a ball); only
    /// computed for simplicial patches.
    pub euler_characteristic: Option<i64>,
}

impl Patch {
    /// Total measure of the covered domain.
    pub fn covered_measure(&self, mesh: &PolytopalMesh) -> f64 {
        match self.kind {
            PatchKind::Polytopal => self.members.iter().map(|&c| mesh.cells[c].volume).sum(),
            PatchKind::Simplicial => self
                .members
                .iter()
                .map(|&s| mesh.submesh.simplices[s].volume)
                .sum(),
        }
    }
}

/// All cells whose closure meets the closure of `cell`, including the cell
/// itself. Closures in the shared complex intersect iff they share a point.
pub fn polytopal_patch(mesh: &PolytopalMesh, cell: usize) -> Patch {
    let mut members: Vec<usize> = Vec::new();
    for &s in &mesh.cells[cell].simplices {
        for &p in &mesh.submesh.simplices[s].verts {
            members.extend(mesh.point_cells[p].iter().copied());
        }
    }
    members.sort_unstable();
    members.dedup();
    Patch {
        kind: PatchKind::Polytopal,
        members,
        contained_in_polytopal: true,
        euler_characteristic: None,
    }
}

/// The 4-level simplicial patch around a polytopal cell or a simplex: all
/// simplices joined to the closure of the seed entity by a chain of at most
/// four pairwise closure-intersecting simplices.
pub fn simplicial_patch(mesh: &PolytopalMesh, seed: SeedEntity) -> Patch {
    let sub = &mesh.submesh;
    let (seed_points, parent_cell): (Vec<usize>, usize) = match seed {
        SeedEntity::Cell(c) => {
            let mut pts = Vec::new();
            for &s in &mesh.cells[c].simplices {
                pts.extend_from_slice(&sub.simplices[s].verts);
            }
            pts.sort_unstable();
            pts.dedup();
            (pts, c)
        }
        SeedEntity::Simplex(s) => (
            sub.simplices[s].verts.to_vec(),
            sub.simplices[s].parent,
        ),
    };

    // Level 0: simplices touching the seed closure (S_4 candidates).
    let mut level = vec![usize::MAX; sub.simplices.len()];
    let mut frontier: Vec<usize> = Vec::new();
    for &p in &seed_points {
        for &s in &sub.point_simplices[p] {
            if level[s] == usize::MAX {
                level[s] = 0;
                frontier.push(s);
            }
        }
    }
    // Three more closure-adjacency hops (S_3, S_2, S_1).
    for lv in 1..=3 {
        let mut next = Vec::new();
        for &s in &frontier {
            for &p in &sub.simplices[s].verts {
                for &t in &sub.point_simplices[p] {
                    if level[t] == usize::MAX {
                        level[t] = lv;
                        next.push(t);
                    }
                }
            }
        }
        frontier = next;
    }
    let members: Vec<usize> = (0..sub.simplices.len())
        .filter(|&s| level[s] != usize::MAX)
        .collect();

    // Containment in the polytopal patch of the parent cell.
    let ppatch = polytopal_patch(mesh, parent_cell);
    let contained = members
        .iter()
        .all(|&s| ppatch.members.binary_search(&sub.simplices[s].parent).is_ok());

    // Euler characteristic of the closed patch complex.
    let mut verts: Vec<usize> = Vec::new();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for &s in &members {
        let v = sub.simplices[s].verts;
        verts.extend_from_slice(&v);
        for i in 0..4 {
            for j in i + 1..4 {
                edges.push([v[i].min(v[j]), v[i].max(v[j])]);
            }
        }
        for skip in 0..4 {
            let mut f: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| v[i]).collect();
            f.sort_unstable();
            faces.push([f[0], f[1], f[2]]);
        }
    }
    verts.sort_unstable();
    verts.dedup();
    edges.sort_unstable();
    edges.dedup();
    faces.sort_unstable();
    faces.dedup();
    let chi = verts.len() as i64 - edges.len() as i64 + faces.len() as i64 - members.len() as i64;

    Patch {
        kind: PatchKind::Simplicial,
        members,
        contained_in_polytopal: contained,
        euler_characteristic: Some(chi),
    }
}

/// Seed entity for a simplicial patch.
#[derive(Clone, Copy, Debug)]
pub enum SeedEntity {
    Cell(usize),
    Simplex(usize),
}

#[cfg(test)]
mod tests {
    use super::super::gen::{gen_hex_cube, gen_tet_cube};
    use super::*;
    use crate::Pt3;

    /// Brute-force oracle: closures intersect iff some pair of simplices of
    /// the two cells shares a pool point.
    fn patch_oracle(mesh: &PolytopalMesh, cell: usize) -> Vec<usize> {
        let pts_of = |c: usize| {
            let mut pts: Vec<usize> = mesh.cells[c]
                .simplices
                .iter()
                .flat_map(|&s| mesh.submesh.simplices[s].verts)
                .collect();
            pts.sort_unstable();
            pts.dedup();
            pts
        };
        let base = pts_of(cell);
        (0..mesh.n_cells())
            .filter(|&c| {
                let other = pts_of(c);
                base.iter().any(|p| other.binary_search(p).is_ok())
            })
            .collect()
    }

    #[test]
    fn corner_cell_of_hex2_sees_all_eight() {
        let m = gen_hex_cube(2).unwrap();
        let p = polytopal_patch(&m, 0);
        assert_eq!(p.members.len(), 8);
        assert_eq!(p.members, patch_oracle(&m, 0));
    }

    #[test]
    fn single_cell_mesh_patch_is_itself() {
        let m = gen_hex_cube(1).unwrap();
        let p = polytopal_patch(&m, 0);
        assert_eq!(p.members, vec![0]);
    }

    #[test]
    fn kuhn_tets_share_the_diagonal() {
        let m = gen_tet_cube(1).unwrap();
        for c in 0..6 {
            let p = polytopal_patch(&m, c);
            assert_eq!(p.members.len(), 6);
            assert_eq!(p.members, patch_oracle(&m, c));
        }
    }

    #[test]
    fn single_simplex_patch() {
        let m = gen_hex_cube(1).unwrap();
        // All 6 simplices share the main diagonal, so any patch is everything.
        let p = simplicial_patch(&m, SeedEntity::Simplex(0));
        assert_eq!(p.members.len(), 6);
        assert_eq!(p.euler_characteristic, Some(1));
    }

    #[test]
    fn interior_patch_in_fine_mesh_is_a_ball() {
        let m = gen_tet_cube(4).unwrap();
        // Pick a simplex near the domain center.
        let s = (0..m.submesh.simplices.len())
            .min_by(|&a, &b| {
                let da = (m.submesh.simplices[a].center - Pt3::new(0.5, 0.5, 0.5)).norm();
                let db = (m.submesh.simplices[b].center - Pt3::new(0.5, 0.5, 0.5)).norm();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        let p = simplicial_patch(&m, SeedEntity::Simplex(s));
        // The patch stays inside the cube and is topologically trivial.
        assert_eq!(p.euler_characteristic, Some(1));
        let vol: f64 = p
            .members
            .iter()
            .map(|&s| m.submesh.simplices[s].volume)
            .sum();
        assert!(vol <= 1.0 + 1e-12);
    }

    #[test]
    fn coarse_mesh_raises_containment_flag() {
        let m = gen_tet_cube(1).unwrap();
        // 4 levels span the whole mesh; the polytopal patch of any cell is
        // also the whole mesh, so containment holds here. Use n=2 where a
        // corner cell's polytopal patch is a strict subset.
        let m2 = gen_tet_cube(2).unwrap();
        let p = simplicial_patch(&m2, SeedEntity::Simplex(0));
        // With 4 levels on a 2x2x2 grid the patch reaches everything, while
        // the corner polytopal patch does not: flag must be raised.
        assert!(!p.contained_in_polytopal);
        let _ = m;
    }
}
