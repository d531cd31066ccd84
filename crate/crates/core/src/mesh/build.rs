//! Mesh assembly from raw connectivity plus full invariant validation.

use super::*;
use std::collections::HashMap;

/// Raw inputs accepted by the builder. `cell_faces` entries carry the
/// orientation `omega_TF`; a sign of 0 requests automatic orientation (valid
/// for cells that are star-shaped around their centroid).
pub(crate) struct RawMesh {
    pub points: Vec<Pt3>,
    pub face_loops: Vec<Vec<usize>>,
    pub cell_faces: Vec<Vec<(usize, i8)>>,
    pub gamma_faces: Vec<usize>,
    pub simplices: Vec<[usize; 4]>,
    pub parents: Vec<usize>,
}

pub(crate) fn build_mesh(raw: RawMesh) -> Result<PolytopalMesh, MeshError> {
    let n_faces = raw.face_loops.len();
    let n_cells = raw.cell_faces.len();

    // Polytopal vertices: points appearing in some face loop.
    let mut is_vertex = vec![false; raw.points.len()];
    for l in &raw.face_loops {
        for &p in l {
            is_vertex[p] = true;
        }
    }
    let vertices: Vec<usize> = (0..raw.points.len()).filter(|&p| is_vertex[p]).collect();
    let mut point_vertex = vec![None; raw.points.len()];
    for (v, &p) in vertices.iter().enumerate() {
        point_vertex[p] = Some(v);
    }

    // Edges from loops, deduplicated by vertex pair.
    let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut face_edges: Vec<Vec<(usize, i8)>> = Vec::with_capacity(n_faces);
    for l in &raw.face_loops {
        let mut fe = Vec::with_capacity(l.len());
        for i in 0..l.len() {
            let a = l[i];
            let b = l[(i + 1) % l.len()];
            let key = (a.min(b), a.max(b));
            let id = *edge_ids.entry(key).or_insert_with(|| {
                let pa = raw.points[key.0];
                let pb = raw.points[key.1];
                edges.push(Edge {
                    verts: [key.0, key.1],
                    tangent: (pb - pa).normalize(),
                    length: (pb - pa).norm(),
                    center: Pt3::from((pa.coords + pb.coords) * 0.5),
                });
                edges.len() - 1
            });
            // The stored loop is counter-clockwise w.r.t. n_F; omega_FE t_E is
            // clockwise, so omega_FE = -1 when t_E follows the loop direction.
            let along_loop = a == edges[id].verts[0];
            fe.push((id, if along_loop { -1 } else { 1 }));
        }
        face_edges.push(fe);
    }

    // Face geometry from Newell's formula (robust for planar simple polygons).
    let mut faces: Vec<Face> = Vec::with_capacity(n_faces);
    for (f, l) in raw.face_loops.iter().enumerate() {
        let pts: Vec<&Pt3> = l.iter().map(|&p| &raw.points[p]).collect();
        let mut nraw = Vec3::zeros();
        for i in 0..pts.len() {
            let a = pts[i].coords;
            let b = pts[(i + 1) % pts.len()].coords;
            nraw += a.cross(&b);
        }
        nraw *= 0.5;
        let area = nraw.norm();
        if area <= 0.0 {
            return Err(MeshError::Degenerate {
                kind: "face",
                id: f,
                measure: area,
            });
        }
        let normal = nraw / area;
        // Signed fan centroid.
        let mut csum = Vec3::zeros();
        let mut asum = 0.0;
        for i in 1..pts.len() - 1 {
            let a = pts[0];
            let b = pts[i];
            let c = pts[i + 1];
            let s = 0.5 * (b - a).cross(&(c - a)).dot(&normal);
            csum += s * (a.coords + b.coords + c.coords) / 3.0;
            asum += s;
        }
        let center = Pt3::from(csum / asum);
        let mut diameter = 0.0f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                diameter = diameter.max((pts[i] - pts[j]).norm());
            }
        }
        faces.push(Face {
            vloop: l.clone(),
            edges: face_edges[f].clone(),
            normal,
            center,
            diameter,
            area,
            subfaces: Vec::new(),
            cells: Vec::new(),
        });
    }

    // Submesh simplices and cell tiling.
    let mut simplices: Vec<Simplex> = Vec::with_capacity(raw.simplices.len());
    let mut cell_simplices: Vec<Vec<usize>> = vec![Vec::new(); n_cells];
    for (s, vs) in raw.simplices.iter().enumerate() {
        let p: Vec<&Pt3> = vs.iter().map(|&v| &raw.points[v]).collect();
        let vol = (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])) / 6.0;
        if vol.abs() <= 0.0 {
            return Err(MeshError::BadSimplex(s));
        }
        let mut diameter = 0.0f64;
        for i in 0..4 {
            for j in i + 1..4 {
                diameter = diameter.max((p[i] - p[j]).norm());
            }
        }
        simplices.push(Simplex {
            verts: *vs,
            parent: raw.parents[s],
            volume: vol.abs(),
            center: Pt3::from((p[0].coords + p[1].coords + p[2].coords + p[3].coords) / 4.0),
            diameter,
        });
        cell_simplices[raw.parents[s]].push(s);
    }

    // Cells: geometry from their simplices, orientation resolved afterwards.
    let mut cells: Vec<Cell> = Vec::with_capacity(n_cells);
    for (c, cf) in raw.cell_faces.iter().enumerate() {
        let mut volume = 0.0;
        let mut csum = Vec3::zeros();
        for &s in &cell_simplices[c] {
            volume += simplices[s].volume;
            csum += simplices[s].volume * simplices[s].center.coords;
        }
        if volume <= 0.0 {
            return Err(MeshError::Degenerate {
                kind: "cell",
                id: c,
                measure: volume,
            });
        }
        let center = Pt3::from(csum / volume);
        let mut vset: Vec<usize> = Vec::new();
        let mut eset: Vec<usize> = Vec::new();
        for &(f, _) in cf {
            for &p in &faces[f].vloop {
                vset.push(point_vertex[p].expect("loop point is a vertex"));
            }
            for &(e, _) in &faces[f].edges {
                eset.push(e);
            }
        }
        vset.sort_unstable();
        vset.dedup();
        eset.sort_unstable();
        eset.dedup();
        let mut diameter = 0.0f64;
        for i in 0..vset.len() {
            for j in i + 1..vset.len() {
                let a = raw.points[vertices[vset[i]]];
                let b = raw.points[vertices[vset[j]]];
                diameter = diameter.max((a - b).norm());
            }
        }
        let mut sf = Vec::with_capacity(cf.len());
        for &(f, sign) in cf {
            let sign = if sign == 0 {
                let d = faces[f].normal.dot(&(faces[f].center - center));
                if d > 0.0 {
                    1
                } else {
                    -1
                }
            } else {
                sign
            };
            faces[f].cells.push(c);
            sf.push((f, sign));
        }
        cells.push(Cell {
            faces: sf,
            edges: eset,
            verts: vset,
            center,
            diameter,
            volume,
            simplices: cell_simplices[c].clone(),
        });
    }

    // Submesh skeleton: triangles and segments, deduplicated.
    let mut sf_ids: HashMap<[usize; 3], usize> = HashMap::new();
    let mut subfaces: Vec<SubFace> = Vec::new();
    let mut se_ids: HashMap<[usize; 2], usize> = HashMap::new();
    let mut subedges: Vec<SubEdge> = Vec::new();
    for (s, sx) in simplices.iter().enumerate() {
        let v = sx.verts;
        for skip in 0..4 {
            let mut tri: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| v[i]).collect();
            tri.sort_unstable();
            let key = [tri[0], tri[1], tri[2]];
            let id = *sf_ids.entry(key).or_insert_with(|| {
                subfaces.push(SubFace {
                    verts: key,
                    simplices: Vec::new(),
                    parent_face: None,
                });
                subfaces.len() - 1
            });
            subfaces[id].simplices.push(s);
        }
        for i in 0..4 {
            for j in i + 1..4 {
                let key = [v[i].min(v[j]), v[i].max(v[j])];
                se_ids.entry(key).or_insert_with(|| {
                    subedges.push(SubEdge {
                        verts: key,
                        parent_edge: None,
                    });
                    subedges.len() - 1
                });
            }
        }
    }

    // Map boundary-of-cell triangles to the polytopal faces they tile.
    for sub in subfaces.iter_mut() {
        let on_interface = match sub.simplices.len() {
            1 => true,
            2 => {
                simplices[sub.simplices[0]].parent != simplices[sub.simplices[1]].parent
            }
            n => {
                return Err(MeshError::NotMatching(format!(
                    "triangle shared by {n} tetrahedra"
                )))
            }
        };
        if !on_interface {
            continue;
        }
        let ctr = Pt3::from(
            (raw.points[sub.verts[0]].coords
                + raw.points[sub.verts[1]].coords
                + raw.points[sub.verts[2]].coords)
                / 3.0,
        );
        let mut found = None;
        'outer: for &s in &sub.simplices {
            let cell = simplices[s].parent;
            for &(f, _) in &cells[cell].faces {
                let face = &faces[f];
                let tol = 1e-10 * face.diameter;
                if sub
                    .verts
                    .iter()
                    .all(|&p| (raw.points[p] - face.center).dot(&face.normal).abs() <= tol)
                    && point_in_face(&raw.points, face, &ctr)
                {
                    found = Some(f);
                    break 'outer;
                }
            }
        }
        match found {
            Some(f) => sub.parent_face = Some(f),
            None => {
                return Err(MeshError::NotMatching(
                    "interface triangle lies on no polytopal face".into(),
                ))
            }
        }
    }
    for (id, sub) in subfaces.iter().enumerate() {
        if let Some(f) = sub.parent_face {
            faces[f].subfaces.push(id);
        }
    }

    // Map sub-edges to polytopal edges: exact vertex-pair match first, then a
    // local geometric search among the edges of nearby cells.
    let mut edge_subedges: Vec<Vec<usize>> = vec![Vec::new(); edges.len()];
    for (id, se) in subedges.iter_mut().enumerate() {
        if let Some(&e) = edge_ids.get(&(se.verts[0], se.verts[1])) {
            se.parent_edge = Some(e);
            edge_subedges[e].push(id);
        }
    }
    // Geometric pass for sub-edges strictly inside subdivided polytopal edges.
    for (id, se) in subedges.iter_mut().enumerate() {
        if se.parent_edge.is_some() {
            continue;
        }
        let pa = raw.points[se.verts[0]];
        let pb = raw.points[se.verts[1]];
        for (e, ed) in edges.iter().enumerate() {
            let a = raw.points[ed.verts[0]];
            let tol = 1e-10 * ed.length;
            let on = |p: &Pt3| {
                let d = p - a;
                let t = d.dot(&ed.tangent);
                (-tol..=ed.length + tol).contains(&t) && (d - t * ed.tangent).norm() <= tol
            };
            if on(&pa) && on(&pb) {
                se.parent_edge = Some(e);
                edge_subedges[e].push(id);
                break;
            }
        }
    }

    // Point adjacency maps.
    let mut point_simplices: Vec<Vec<usize>> = vec![Vec::new(); raw.points.len()];
    for (s, sx) in simplices.iter().enumerate() {
        for &p in &sx.verts {
            point_simplices[p].push(s);
        }
    }
    let mut point_cells: Vec<Vec<usize>> = vec![Vec::new(); raw.points.len()];
    for (p, ss) in point_simplices.iter().enumerate() {
        let mut cs: Vec<usize> = ss.iter().map(|&s| simplices[s].parent).collect();
        cs.sort_unstable();
        cs.dedup();
        point_cells[p] = cs;
    }

    let mut gamma = vec![false; faces.len()];
    for &f in &raw.gamma_faces {
        gamma[f] = true;
    }

    let mesh = PolytopalMesh {
        points: raw.points,
        vertices,
        point_vertex,
        edges,
        faces,
        cells,
        gamma,
        submesh: SimplicialSubmesh {
            simplices,
            subfaces,
            subedges,
            edge_subedges,
            point_simplices,
        },
        point_cells,
    };
    validate(&mesh)?;
    Ok(mesh)
}

/// Point-in-polygon test for a planar face (winding number in the face plane).
pub(crate) fn point_in_face(points: &[Pt3], face: &Face, p: &Pt3) -> bool {
    let n = face.normal;
    // In-plane frame.
    let e1 = {
        let cand = if n.x.abs() < 0.9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            Vec3::new(0.0, 1.0, 0.0)
        };
        (cand - n.dot(&cand) * n).normalize()
    };
    let e2 = n.cross(&e1);
    let proj = |q: &Pt3| {
        let d = q - face.center;
        (d.dot(&e1), d.dot(&e2))
    };
    let (px, py) = proj(p);
    let mut winding = 0.0f64;
    let m = face.vloop.len();
    for i in 0..m {
        let (ax, ay) = proj(&points[face.vloop[i]]);
        let (bx, by) = proj(&points[face.vloop[(i + 1) % m]]);
        let (ax, ay) = (ax - px, ay - py);
        let (bx, by) = (bx - px, by - py);
        winding += (ax * by - ay * bx).atan2(ax * bx + ay * by);
    }
    winding.abs() > std::f64::consts::PI
}

/// Check every stated mesh invariant; used by all constructors.
pub(crate) fn validate(mesh: &PolytopalMesh) -> Result<(), MeshError> {
    for (e, ed) in mesh.edges.iter().enumerate() {
        if ed.length <= 0.0 {
            return Err(MeshError::Degenerate {
                kind: "edge",
                id: e,
                measure: ed.length,
            });
        }
    }

    for (f, face) in mesh.faces.iter().enumerate() {
        // Incidence.
        let count = face.cells.len();
        if count == 0 || count > 2 {
            return Err(MeshError::BadFaceIncidence { face: f, count });
        }
        if count == 2 {
            let s0 = sign_of(mesh, face.cells[0], f);
            let s1 = sign_of(mesh, face.cells[1], f);
            if s0 * s1 != -1 {
                return Err(MeshError::BadFaceOrientation(f));
            }
        }
        // Planarity over loop and covering triangles.
        let tol = 1e-12 * face.diameter;
        let mut dev = 0.0f64;
        for &p in &face.vloop {
            dev = dev.max((mesh.points[p] - face.center).dot(&face.normal).abs());
        }
        for &sf in &face.subfaces {
            for &p in &mesh.submesh.subfaces[sf].verts {
                dev = dev.max((mesh.points[p] - face.center).dot(&face.normal).abs());
            }
        }
        if dev > tol {
            return Err(MeshError::NonPlanarFace(f, dev));
        }
        if !point_in_face(&mesh.points, face, &face.center) {
            return Err(MeshError::CenterOutsideFace(f));
        }
        // Matching: subfaces tile the face.
        let sub_area: f64 = face
            .subfaces
            .iter()
            .map(|&sf| {
                let v = mesh.submesh.subfaces[sf].verts;
                0.5 * (mesh.points[v[1]] - mesh.points[v[0]])
                    .cross(&(mesh.points[v[2]] - mesh.points[v[0]]))
                    .norm()
            })
            .sum();
        if (sub_area - face.area).abs() > 1e-10 * face.area {
            return Err(MeshError::NotMatching(format!(
                "face {f}: subface area {sub_area} vs face area {}",
                face.area
            )));
        }
    }

    // Matching: sub-edges tile each polytopal edge.
    for (e, subs) in mesh.submesh.edge_subedges.iter().enumerate() {
        let len: f64 = subs
            .iter()
            .map(|&se| {
                let v = mesh.submesh.subedges[se].verts;
                (mesh.points[v[1]] - mesh.points[v[0]]).norm()
            })
            .sum();
        if (len - mesh.edges[e].length).abs() > 1e-10 * mesh.edges[e].length {
            return Err(MeshError::NotMatching(format!(
                "edge {e}: subedge length {len} vs edge length {}",
                mesh.edges[e].length
            )));
        }
    }

    for (c, cell) in mesh.cells.iter().enumerate() {
        // Divergence theorem on constants.
        let mut flux = Vec3::zeros();
        let mut surf = 0.0;
        for &(f, s) in &cell.faces {
            flux += f64::from(s) * mesh.faces[f].area * mesh.faces[f].normal;
            surf += mesh.faces[f].area;
        }
        if flux.norm() > 1e-12 * surf {
            return Err(MeshError::DivergenceTheorem(c, flux.norm()));
        }
        // Boundary-of-boundary orientation identity.
        let mut per_edge: HashMap<usize, i32> = HashMap::new();
        for &(f, s) in &cell.faces {
            for &(e, se) in &mesh.faces[f].edges {
                *per_edge.entry(e).or_insert(0) += i32::from(s) * i32::from(se);
            }
        }
        for (&e, &sum) in &per_edge {
            if sum != 0 {
                return Err(MeshError::BoundaryOfBoundary { cell: c, edge: e, sum });
            }
        }
        // x_T sees every boundary triangle from inside.
        for &(f, s) in &cell.faces {
            let face = &mesh.faces[f];
            let d = f64::from(s) * face.normal.dot(&(face.center - cell.center));
            if d <= 0.0 {
                return Err(MeshError::CenterOutsideCell(c));
            }
        }
    }

    for (f, &g) in mesh.gamma.iter().enumerate() {
        if g && !mesh.is_boundary_face(f) {
            return Err(MeshError::GammaNotBoundary(f));
        }
    }

    Ok(())
}

fn sign_of(mesh: &PolytopalMesh, cell: usize, face: usize) -> i32 {
    mesh.cells[cell]
        .faces
        .iter()
        .find(|&&(f, _)| f == face)
        .map(|&(_, s)| i32::from(s))
        .unwrap_or(0)
}
