//! Families of unit-cube meshes: Kuhn tetrahedra, hexahedra, and seeded
//! agglomerations of Kuhn tetrahedra into genuinely polytopal cells.

use super::build::{build_mesh, RawMesh};
use super::*;
use crate::rng::SplitMix64;
use std::collections::HashMap;

/// Vertex grid index for the (n+1)^3 lattice.
fn grid_id(n: usize, ix: usize, iy: usize, iz: usize) -> usize {
    (iz * (n + 1) + iy) * (n + 1) + ix
}

fn grid_points(n: usize) -> Vec<Pt3> {
    let mut pts = Vec::with_capacity((n + 1).pow(3));
    let h = 1.0 / n as f64;
    for iz in 0..=n {
        for iy in 0..=n {
            for ix in 0..=n {
                pts.push(Pt3::new(ix as f64 * h, iy as f64 * h, iz as f64 * h));
            }
        }
    }
    pts
}

/// The 6 Kuhn tetrahedra of the cube with lowest corner (ix, iy, iz): vertex
/// chains from the low corner to the high corner, one per axis permutation.
/// All six share the main diagonal of the cube.
fn kuhn_tets(n: usize, ix: usize, iy: usize, iz: usize) -> Vec<[usize; 4]> {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut out = Vec::with_capacity(6);
    for perm in PERMS {
        let mut idx = [ix, iy, iz];
        let mut tet = [grid_id(n, ix, iy, iz), 0, 0, 0];
        for (step, &axis) in perm.iter().enumerate() {
            idx[axis] += 1;
            tet[step + 1] = grid_id(n, idx[0], idx[1], idx[2]);
        }
        out.push(tet);
    }
    out
}

fn all_kuhn_tets(n: usize) -> Vec<[usize; 4]> {
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                tets.extend(kuhn_tets(n, ix, iy, iz));
            }
        }
    }
    tets
}

/// Unit cube split into n^3 sub-cubes, each Kuhn-split into 6 tetrahedra.
/// The submesh coincides with the mesh (identity parent map).
pub fn gen_tet_cube(n: usize) -> Result<PolytopalMesh, MeshError> {
    assert!(n >= 1, "need at least one subdivision per axis");
    let points = grid_points(n);
    let tets = all_kuhn_tets(n);
    let parents = (0..tets.len()).collect();
    build_from_groups(points, &tets, parents)
}

/// n^3 axis-aligned cubes as polytopal cells; the submesh is the Kuhn split.
pub fn gen_hex_cube(n: usize) -> Result<PolytopalMesh, MeshError> {
    assert!(n >= 1, "need at least one subdivision per axis");
    let points = grid_points(n);
    let mut simplices = Vec::new();
    let mut parents = Vec::new();
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let cell = (iz * n + iy) * n + ix;
                for tet in kuhn_tets(n, ix, iy, iz) {
                    simplices.push(tet);
                    parents.push(cell);
                }
            }
        }
    }
    build_from_groups(points, &simplices, parents)
}

/// Greedy seeded agglomeration of the Kuhn tetrahedra of `gen_tet_cube(n)`
/// into star-shaped polytopal cells. Merges that would break star-shapedness
/// or face matching are skipped, never an error.
pub fn gen_agglomerated(n: usize, seed: u64) -> Result<PolytopalMesh, MeshError> {
    assert!(n >= 2, "agglomeration needs n >= 2");
    let points = grid_points(n);
    let tets = all_kuhn_tets(n);
    let n_tets = tets.len();

    let mut tri_map: HashMap<[usize; 3], Vec<(usize, usize)>> = HashMap::new();
    for (t, tet) in tets.iter().enumerate() {
        for skip in 0..4 {
            let mut tri: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| tet[i]).collect();
            tri.sort_unstable();
            tri_map
                .entry([tri[0], tri[1], tri[2]])
                .or_default()
                .push((t, skip));
        }
    }
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n_tets];
    for ts in tri_map.values() {
        if ts.len() == 2 {
            nbrs[ts[0].0].push(ts[1].0);
            nbrs[ts[1].0].push(ts[0].0);
        }
    }

    let mut rng = SplitMix64::new(seed);
    let mut group: Vec<usize> = (0..n_tets).collect();
    let mut members: Vec<Vec<usize>> = (0..n_tets).map(|t| vec![t]).collect();
    const MAX_GROUP: usize = 6;

    let mut order: Vec<usize> = (0..n_tets).collect();
    rng.shuffle(&mut order);
    for &t in &order {
        let g = group[t];
        if members[g].len() >= MAX_GROUP {
            continue;
        }
        let mut cands: Vec<usize> =
            nbrs[t].iter().map(|&u| group[u]).filter(|&h| h != g).collect();
        cands.sort_unstable();
        cands.dedup();
        rng.shuffle(&mut cands);
        for h in cands {
            if members[g].len() + members[h].len() > MAX_GROUP {
                continue;
            }
            let merged: Vec<usize> = members[g].iter().chain(&members[h]).copied().collect();
            if merged_cell_ok(&points, &tets, &merged, &tri_map) {
                for &u in &members[h] {
                    group[u] = g;
                }
                let moved = std::mem::take(&mut members[h]);
                members[g].extend(moved);
                break;
            }
        }
    }

    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut parent = vec![0usize; n_tets];
    for t in 0..n_tets {
        let next = remap.len();
        parent[t] = *remap.entry(group[t]).or_insert(next);
    }
    build_from_groups(points, &tets, parent)
}

/// Boundary triangle of a cell or tentative cell: vertices wound
/// counter-clockwise around the unit outward normal.
#[derive(Clone)]
struct BTri {
    verts: [usize; 3],
    normal: Vec3,
}

/// Triangle opposite `skip` in `tet`, wound CCW around the outward normal.
fn outward_tri(points: &[Pt3], tet: &[usize; 4], skip: usize) -> BTri {
    let tri: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| tet[i]).collect();
    let a = points[tri[0]];
    let b = points[tri[1]];
    let c = points[tri[2]];
    let opp = points[tet[skip]];
    let mut nrm = (b - a).cross(&(c - a));
    let mut verts = [tri[0], tri[1], tri[2]];
    if nrm.dot(&(opp - a)) > 0.0 {
        nrm = -nrm;
        verts = [tri[0], tri[2], tri[1]];
    }
    BTri {
        verts,
        normal: nrm.normalize(),
    }
}

/// Boundary triangles of a tet group, outward-oriented.
fn group_boundary(
    points: &[Pt3],
    tets: &[[usize; 4]],
    members: &[usize],
    tri_map: &HashMap<[usize; 3], Vec<(usize, usize)>>,
) -> Vec<BTri> {
    let mset: std::collections::HashSet<usize> = members.iter().copied().collect();
    let mut out = Vec::new();
    for &t in members {
        let tet = tets[t];
        for skip in 0..4 {
            let mut key: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| tet[i]).collect();
            key.sort_unstable();
            let owners = &tri_map[&[key[0], key[1], key[2]]];
            let inside = owners.iter().filter(|&&(u, _)| mset.contains(&u)).count();
            if inside == 1 {
                out.push(outward_tri(points, &tet, skip));
            }
        }
    }
    out
}

fn merged_cell_ok(
    points: &[Pt3],
    tets: &[[usize; 4]],
    members: &[usize],
    tri_map: &HashMap<[usize; 3], Vec<(usize, usize)>>,
) -> bool {
    let mut volume = 0.0;
    let mut centroid = Vec3::zeros();
    for &t in members {
        let v: Vec<Pt3> = tets[t].iter().map(|&p| points[p]).collect();
        let vol = ((v[1] - v[0]).cross(&(v[2] - v[0])))
            .dot(&(v[3] - v[0]))
            .abs()
            / 6.0;
        volume += vol;
        centroid += vol * (v[0].coords + v[1].coords + v[2].coords + v[3].coords) / 4.0;
    }
    let center = Pt3::from(centroid / volume);
    let boundary = group_boundary(points, tets, members, tri_map);

    // Star-shaped around the centroid: the center sees every boundary plane
    // from the inner side.
    let scale = volume.cbrt();
    for bt in &boundary {
        if (points[bt.verts[0]] - center).dot(&bt.normal) < 1e-9 * scale {
            return false;
        }
    }

    // Every coplanar connected patch must bound a single simple loop.
    for tris in plane_groups(points, &boundary).values() {
        for patch in connected_patches(&boundary, tris) {
            if patch_loop(&boundary, &patch).is_none() {
                return false;
            }
        }
    }
    true
}

/// Group boundary triangles by their (canonically signed) plane.
fn plane_groups(points: &[Pt3], boundary: &[BTri]) -> HashMap<[i64; 4], Vec<usize>> {
    let quant = |x: f64| (x * 1e9).round() as i64;
    let mut groups: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
    for (i, bt) in boundary.iter().enumerate() {
        let mut nn = bt.normal;
        let mut dd = points[bt.verts[0]].coords.dot(&nn);
        for k in 0..3 {
            if nn[k].abs() > 1e-9 {
                if nn[k] < 0.0 {
                    nn = -nn;
                    dd = -dd;
                }
                break;
            }
        }
        groups
            .entry([quant(nn.x), quant(nn.y), quant(nn.z), quant(dd)])
            .or_default()
            .push(i);
    }
    groups
}

/// Split a set of triangle indices into edge-connected components.
fn connected_patches(boundary: &[BTri], tris: &[usize]) -> Vec<Vec<usize>> {
    let mut edge_owner: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for &i in tris {
        let t = boundary[i].verts;
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            edge_owner.entry((a.min(b), a.max(b))).or_default().push(i);
        }
    }
    let mut seen: HashMap<usize, ()> = HashMap::new();
    let mut patches = Vec::new();
    for &start in tris {
        if seen.contains_key(&start) {
            continue;
        }
        let mut stack = vec![start];
        seen.insert(start, ());
        let mut patch = Vec::new();
        while let Some(i) = stack.pop() {
            patch.push(i);
            let t = boundary[i].verts;
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                for &j in &edge_owner[&(a.min(b), a.max(b))] {
                    if !seen.contains_key(&j) {
                        seen.insert(j, ());
                        stack.push(j);
                    }
                }
            }
        }
        patches.push(patch);
    }
    patches
}

/// Boundary loop of a coplanar patch of CCW-wound triangles, or None if the
/// boundary is not one simple loop (pinched or multiply connected patch).
fn patch_loop(boundary: &[BTri], patch: &[usize]) -> Option<Vec<usize>> {
    let mut dir: HashMap<(usize, usize), u32> = HashMap::new();
    for &i in patch {
        let t = boundary[i].verts;
        for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *dir.entry((u, v)).or_insert(0) += 1;
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut n_boundary = 0usize;
    for (&(u, v), &c) in &dir {
        if c > 1 {
            return None; // non-manifold within the patch
        }
        let back = dir.get(&(v, u)).copied().unwrap_or(0);
        if back == 0 {
            if next.insert(u, v).is_some() {
                return None; // pinched vertex
            }
            n_boundary += 1;
        }
    }
    if n_boundary < 3 {
        return None;
    }
    let start = *next.keys().min()?;
    let mut cur = start;
    let mut out = Vec::with_capacity(n_boundary);
    loop {
        out.push(cur);
        cur = *next.get(&cur)?;
        if cur == start {
            break;
        }
        if out.len() > n_boundary {
            return None;
        }
    }
    if out.len() != n_boundary {
        return None; // several disjoint loops
    }
    Some(out)
}

/// Build a polytopal mesh from a grouping of tetrahedra (`parent[t]` = cell of
/// tet `t`). Polytopal faces are the maximal coplanar connected patches of the
/// group interfaces and of the domain boundary.
fn build_from_groups(
    points: Vec<Pt3>,
    tets: &[[usize; 4]],
    parent: Vec<usize>,
) -> Result<PolytopalMesh, MeshError> {
    let n_cells = parent.iter().max().map(|&m| m + 1).unwrap_or(0);

    let mut tri_map: HashMap<[usize; 3], Vec<(usize, usize)>> = HashMap::new();
    for (t, tet) in tets.iter().enumerate() {
        for skip in 0..4 {
            let mut tri: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| tet[i]).collect();
            tri.sort_unstable();
            tri_map
                .entry([tri[0], tri[1], tri[2]])
                .or_default()
                .push((t, skip));
        }
    }

    // Interface triangles, oriented outward from the owner cell.
    struct ITri {
        bt: BTri,
        owner: usize,
        other: Option<usize>,
    }
    let mut itris: Vec<ITri> = Vec::new();
    let mut tri_keys: Vec<[usize; 3]> = tri_map.keys().copied().collect();
    tri_keys.sort_unstable();
    for key in tri_keys {
        let owners = &tri_map[&key];
        match owners.len() {
            1 => {
                let (t, skip) = owners[0];
                itris.push(ITri {
                    bt: outward_tri(&points, &tets[t], skip),
                    owner: parent[t],
                    other: None,
                });
            }
            2 => {
                let (t0, s0) = owners[0];
                let (t1, _) = owners[1];
                if parent[t0] != parent[t1] {
                    itris.push(ITri {
                        bt: outward_tri(&points, &tets[t0], s0),
                        owner: parent[t0],
                        other: Some(parent[t1]),
                    });
                }
            }
            m => {
                return Err(MeshError::NotMatching(format!(
                    "triangle owned by {m} tetrahedra"
                )))
            }
        }
    }

    // Group by (cell pair, plane) then split into connected patches.
    let quant = |x: f64| (x * 1e9).round() as i64;
    let mut groups: HashMap<(usize, usize, [i64; 4]), Vec<usize>> = HashMap::new();
    for (i, it) in itris.iter().enumerate() {
        let lo = it.other.map_or(usize::MAX, |o| o.min(it.owner));
        let hi = it.other.map_or(it.owner, |o| o.max(it.owner));
        let mut nn = it.bt.normal;
        let mut dd = points[it.bt.verts[0]].coords.dot(&nn);
        for k in 0..3 {
            if nn[k].abs() > 1e-9 {
                if nn[k] < 0.0 {
                    nn = -nn;
                    dd = -dd;
                }
                break;
            }
        }
        groups
            .entry((lo, hi, [quant(nn.x), quant(nn.y), quant(nn.z), quant(dd)]))
            .or_default()
            .push(i);
    }

    let mut face_loops: Vec<Vec<usize>> = Vec::new();
    let mut cell_faces: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n_cells];
    let mut keys: Vec<_> = groups.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let tris = &groups[&key];
        let bts: Vec<BTri> = tris.iter().map(|&i| itris[i].bt.clone()).collect();
        let idx: Vec<usize> = (0..bts.len()).collect();
        for patch in connected_patches(&bts, &idx) {
            let lop = patch_loop(&bts, &patch).ok_or_else(|| {
                MeshError::NotMatching("face patch has no simple boundary loop".into())
            })?;
            let f = face_loops.len();
            face_loops.push(lop);
            let it = &itris[tris[patch[0]]];
            // Loop is CCW around the outward normal of the owner: omega = +1.
            cell_faces[it.owner].push((f, 1));
            if let Some(o) = it.other {
                cell_faces[o].push((f, -1));
            }
        }
    }

    build_mesh(RawMesh {
        points,
        face_loops,
        cell_faces,
        gamma_faces: Vec::new(),
        simplices: tets.to_vec(),
        parents: parent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tet_cube_counts() {
        let m = gen_tet_cube(1).unwrap();
        assert_eq!(m.n_cells(), 6);
        assert_eq!(m.n_vertices(), 8);
        let m2 = gen_tet_cube(2).unwrap();
        assert_eq!(m2.n_cells(), 48);
    }

    #[test]
    fn hex_cube_counts() {
        let m = gen_hex_cube(1).unwrap();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.n_faces(), 6);
        assert_eq!(m.n_edges(), 12);
        assert_eq!(m.n_vertices(), 8);
        // Submesh of n=1: 6 Kuhn simplices, all with parent cell 0.
        assert_eq!(m.submesh.simplices.len(), 6);
        assert!(m.submesh.simplices.iter().all(|s| s.parent == 0));

        let m2 = gen_hex_cube(2).unwrap();
        assert_eq!(m2.n_cells(), 8);
        // 3 n^2 (n+1) axis-aligned unit squares.
        assert_eq!(m2.n_faces(), 36);
    }

    #[test]
    fn agglomerated_reduces_cell_count() {
        let m = gen_agglomerated(2, 0).unwrap();
        assert!(m.n_cells() > 1 && m.n_cells() < 48, "{} cells", m.n_cells());
        // Gamma-compliance on the x = 0 plane: tag all xmin faces.
        let xmin = m.faces_on_xmin();
        assert!(!xmin.is_empty());
        let m = m.with_gamma(&xmin).unwrap();
        // Every gamma face must lie entirely on x = 0.
        for (f, &g) in m.gamma.iter().enumerate() {
            if g {
                for &p in &m.faces[f].vloop {
                    assert!(m.points[p].x.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn volumes_sum_to_one() {
        for m in [
            gen_tet_cube(2).unwrap(),
            gen_hex_cube(2).unwrap(),
            gen_agglomerated(2, 1).unwrap(),
        ] {
            assert!((m.volume() - 1.0).abs() < 1e-12);
        }
    }
}
