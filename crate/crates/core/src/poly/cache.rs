//! Per-entity quadrature rules, frames, orthonormal bases and tabulations.
//!
//! Built once per (mesh, degree menu) and then treated as immutable: all DDR
//! operators, FE spaces and quasi-interpolators read from the same cache.

use super::basis::ScalarBasis;
use super::PolyError;
use crate::mesh::PolytopalMesh;
use crate::quad::{segment_rule, tet_rule, triangle_rule, QuadRule};
use crate::{Pt3, Vec3};
use nalgebra::DMatrix;

/// Range of merged-rule points belonging to one sub-entity.
#[derive(Clone, Copy, Debug)]
pub struct SubRange {
    pub sub_id: usize,
    pub start: usize,
    pub end: usize,
}

/// Frame, rule, orthonormal basis and tabulation for one entity.
#[derive(Clone, Debug)]
pub struct EntityData {
    pub center: Pt3,
    pub scale: f64,
    /// Orthonormal frame: 1 axis for edges, 2 in-plane axes for faces and
    /// subfaces, 3 global axes for cells and simplices.
    pub axes: Vec<Vec3>,
    /// Unit normal for plane entities.
    pub normal: Option<Vec3>,
    pub rule: QuadRule,
    /// Frame coordinates of the rule points.
    pub coords: Vec<[f64; 3]>,
    pub onb: ScalarBasis,
    /// ONB values at the rule points (function x point).
    pub tab: DMatrix<f64>,
    /// Per-sub-entity point ranges (cells: simplices; faces: subfaces;
    /// edges: subedges). Entities without substructure carry one range.
    pub subs: Vec<SubRange>,
}

impl EntityData {
    pub fn frame_coords(&self, pts: &[Pt3]) -> Vec<[f64; 3]> {
        pts.iter()
            .map(|p| {
                let d = p - self.center;
                let mut c = [0.0; 3];
                for (k, a) in self.axes.iter().enumerate() {
                    c[k] = d.dot(a) / self.scale;
                }
                c
            })
            .collect()
    }

    /// Evaluate the scalar ONB at arbitrary physical points.
    pub fn eval_scalar_at(&self, pts: &[Pt3]) -> DMatrix<f64> {
        self.onb.eval_frame(&self.frame_coords(pts))
    }
}

/// Degree menu for the cache.
#[derive(Clone, Copy, Debug)]
pub struct CacheSpec {
    pub cell_deg: i64,
    pub face_deg: i64,
    pub edge_deg: i64,
    pub simplex_deg: i64,
    pub subface_deg: i64,
    pub quad_deg: usize,
}

impl CacheSpec {
    /// Menu covering DDR operators at degree `k` and FE spaces at degree `l`.
    /// The exactness 2 max(l, k+2) + 2 covers every assembled product; the
    /// extra margin of 4 keeps the roundoff coupling between independently
    /// computed operator ingredients below 1e-12 on agglomerated cells.
    pub fn for_degrees(k: i64, l: i64) -> Self {
        let m = l.max(k + 2);
        Self {
            cell_deg: k + 2,
            face_deg: k + 2,
            edge_deg: k + 1,
            simplex_deg: l.max(0),
            subface_deg: l.max(k + 1).max(1),
            quad_deg: (2 * m + 6) as usize,
        }
    }
}

pub struct BasisCache {
    pub spec: CacheSpec,
    pub cells: Vec<EntityData>,
    pub faces: Vec<EntityData>,
    pub edges: Vec<EntityData>,
    pub simplices: Vec<EntityData>,
    pub subfaces: Vec<EntityData>,
    pub subedge_rules: Vec<QuadRule>,
}

impl BasisCache {
    pub fn build(mesh: &PolytopalMesh, spec: CacheSpec) -> Result<Self, PolyError> {
        let qd = spec.quad_deg;

        let mut edges = Vec::with_capacity(mesh.n_edges());
        let mut subedge_rules = Vec::with_capacity(mesh.submesh.subedges.len());
        for se in &mesh.submesh.subedges {
            let a = &mesh.points[se.verts[0]];
            let b = &mesh.points[se.verts[1]];
            subedge_rules.push(segment_rule(a, b, qd));
        }
        for (e, ed) in mesh.edges.iter().enumerate() {
            let mut rules = Vec::new();
            let mut subs = Vec::new();
            let mut offset = 0;
            for &se in &mesh.submesh.edge_subedges[e] {
                let r = subedge_rules[se].clone();
                subs.push(SubRange {
                    sub_id: se,
                    start: offset,
                    end: offset + r.points.len(),
                });
                offset += r.points.len();
                rules.push(r);
            }
            let rule = QuadRule::merged(rules);
            let data = entity_data(
                ed.center,
                ed.length,
                vec![ed.tangent],
                None,
                rule,
                subs,
                1,
                spec.edge_deg,
            )?;
            edges.push(data);
        }

        let mut subfaces = Vec::with_capacity(mesh.submesh.subfaces.len());
        for sf in &mesh.submesh.subfaces {
            let v: Vec<&Pt3> = sf.verts.iter().map(|&p| &mesh.points[p]).collect();
            let rule = triangle_rule([v[0], v[1], v[2]], qd)?;
            let normal = (v[1] - v[0]).cross(&(v[2] - v[0])).normalize();
            let center = Pt3::from((v[0].coords + v[1].coords + v[2].coords) / 3.0);
            let scale = (v[0] - v[1])
                .norm()
                .max((v[1] - v[2]).norm())
                .max((v[2] - v[0]).norm());
            let (e1, e2) = plane_axes(&normal, &(v[1] - v[0]));
            let data = entity_data(
                center,
                scale,
                vec![e1, e2],
                Some(normal),
                rule,
                vec![],
                2,
                spec.subface_deg,
            )?;
            subfaces.push(data);
        }

        let mut faces = Vec::with_capacity(mesh.n_faces());
        for face in mesh.faces.iter() {
            let mut rules = Vec::new();
            let mut subs = Vec::new();
            let mut offset = 0;
            for &sf in &face.subfaces {
                let r = subfaces[sf].rule.clone();
                subs.push(SubRange {
                    sub_id: sf,
                    start: offset,
                    end: offset + r.points.len(),
                });
                offset += r.points.len();
                rules.push(r);
            }
            let rule = QuadRule::merged(rules);
            let seed = mesh.points[face.vloop[0]] - face.center;
            let (e1, e2) = plane_axes(&face.normal, &seed);
            let data = entity_data(
                face.center,
                face.diameter,
                vec![e1, e2],
                Some(face.normal),
                rule,
                subs,
                2,
                spec.face_deg,
            )?;
            faces.push(data);
        }

        let mut simplices = Vec::with_capacity(mesh.submesh.simplices.len());
        for sx in &mesh.submesh.simplices {
            let v: Vec<&Pt3> = sx.verts.iter().map(|&p| &mesh.points[p]).collect();
            let rule = tet_rule([v[0], v[1], v[2], v[3]], qd)?;
            let data = entity_data(
                sx.center,
                sx.diameter,
                global_axes(),
                None,
                rule,
                vec![],
                3,
                spec.simplex_deg,
            )?;
            simplices.push(data);
        }

        let mut cells = Vec::with_capacity(mesh.n_cells());
        for cell in mesh.cells.iter() {
            let mut rules = Vec::new();
            let mut subs = Vec::new();
            let mut offset = 0;
            for &s in &cell.simplices {
                let r = simplices[s].rule.clone();
                subs.push(SubRange {
                    sub_id: s,
                    start: offset,
                    end: offset + r.points.len(),
                });
                offset += r.points.len();
                rules.push(r);
            }
            let rule = QuadRule::merged(rules);
            let data = entity_data(
                cell.center,
                cell.diameter,
                global_axes(),
                None,
                rule,
                subs,
                3,
                spec.cell_deg,
            )?;
            cells.push(data);
        }

        Ok(Self {
            spec,
            cells,
            faces,
            edges,
            simplices,
            subfaces,
            subedge_rules,
        })
    }
}

fn global_axes() -> Vec<Vec3> {
    vec![
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ]
}

/// Deterministic in-plane orthonormal axes with e1 x e2 = n.
fn plane_axes(n: &Vec3, seed: &Vec3) -> (Vec3, Vec3) {
    let mut e1 = seed - n.dot(seed) * n;
    let nrm = e1.norm();
    if nrm < 1e-12 {
        let cand = if n.x.abs() < 0.9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            Vec3::new(0.0, 1.0, 0.0)
        };
        e1 = cand - n.dot(&cand) * n;
    }
    let e1 = e1.normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

#[allow(clippy::too_many_arguments)]
fn entity_data(
    center: Pt3,
    scale: f64,
    axes: Vec<Vec3>,
    normal: Option<Vec3>,
    rule: QuadRule,
    subs: Vec<SubRange>,
    dim: usize,
    degree: i64,
) -> Result<EntityData, PolyError> {
    let coords: Vec<[f64; 3]> = rule
        .points
        .iter()
        .map(|p| {
            let d = p - center;
            let mut c = [0.0; 3];
            for (k, a) in axes.iter().enumerate() {
                c[k] = d.dot(a) / scale;
            }
            c
        })
        .collect();
    let onb = ScalarBasis::build(dim, degree.max(0), scale, &coords, &rule.weights)?;
    let tab = onb.eval_frame(&coords);
    Ok(EntityData {
        center,
        scale,
        axes,
        normal,
        rule,
        coords,
        onb,
        tab,
        subs,
    })
}
