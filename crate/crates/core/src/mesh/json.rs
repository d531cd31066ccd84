//! Mesh file format (JSON).
//!
//! ```text
//! {
//!   "vertices": [[x,y,z], ...],
//!   "faces": [[v0,v1,...], ...],            // oriented loops
//!   "cells": [[±(f+1), ...], ...],          // sign = omega_TF
//!   "gamma_faces": [face ids],
//!   "submesh": { "simplices": [[v0..v3], ...], "parent": [cell ids] }
//! }
//! ```
//!
//! The loader rebuilds all derived data and validates every mesh invariant.

use super::build::{build_mesh, RawMesh};
use super::{MeshError, PolytopalMesh};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct SubmeshFile {
    simplices: Vec<[usize; 4]>,
    parent: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 3]>,
    faces: Vec<Vec<usize>>,
    cells: Vec<Vec<i64>>,
    #[serde(default)]
    gamma_faces: Vec<usize>,
    submesh: SubmeshFile,
}

pub fn read_mesh_json(path: &Path) -> Result<PolytopalMesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|e| MeshError::Io(e.to_string()))?;
    let file: MeshFile =
        serde_json::from_str(&text).map_err(|e| MeshError::Io(format!("parse: {e}")))?;

    let points = file
        .vertices
        .iter()
        .map(|v| crate::Pt3::new(v[0], v[1], v[2]))
        .collect();
    let mut cell_faces = Vec::with_capacity(file.cells.len());
    for (c, refs) in file.cells.iter().enumerate() {
        let mut cf = Vec::with_capacity(refs.len());
        for &r in refs {
            if r == 0 {
                return Err(MeshError::Io(format!("cell {c}: face reference 0")));
            }
            let f = (r.unsigned_abs() as usize) - 1;
            if f >= file.faces.len() {
                return Err(MeshError::Io(format!("cell {c}: face {f} out of range")));
            }
            cf.push((f, if r > 0 { 1i8 } else { -1i8 }));
        }
        cell_faces.push(cf);
    }
    if file.submesh.simplices.len() != file.submesh.parent.len() {
        return Err(MeshError::Io("submesh parent map length mismatch".into()));
    }

    build_mesh(RawMesh {
        points,
        face_loops: file.faces,
        cell_faces,
        gamma_faces: file.gamma_faces,
        simplices: file.submesh.simplices,
        parents: file.submesh.parent,
    })
}

pub fn write_mesh_json(mesh: &PolytopalMesh, path: &Path) -> Result<(), MeshError> {
    let file = MeshFile {
        vertices: mesh.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        faces: mesh.faces.iter().map(|f| f.vloop.clone()).collect(),
        cells: mesh
            .cells
            .iter()
            .map(|c| {
                c.faces
                    .iter()
                    .map(|&(f, s)| i64::from(s) * (f as i64 + 1))
                    .collect()
            })
            .collect(),
        gamma_faces: (0..mesh.n_faces()).filter(|&f| mesh.gamma[f]).collect(),
        submesh: SubmeshFile {
            simplices: mesh.submesh.simplices.iter().map(|s| s.verts).collect(),
            parent: mesh.submesh.simplices.iter().map(|s| s.parent).collect(),
        },
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| MeshError::Io(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| MeshError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::super::gen::{gen_agglomerated, gen_hex_cube};
    use super::*;

    #[test]
    fn round_trip_preserves_structure() {
        let dir = std::env::temp_dir();
        for (name, mesh) in [
            ("hex2", gen_hex_cube(2).unwrap()),
            ("agg2", gen_agglomerated(2, 0).unwrap()),
        ] {
            let mesh = {
                let xmin = mesh.faces_on_xmin();
                mesh.with_gamma(&xmin).unwrap()
            };
            let path = dir.join(format!("ddr_mesh_{name}.json"));
            write_mesh_json(&mesh, &path).unwrap();
            let loaded = read_mesh_json(&path).unwrap();
            assert_eq!(loaded.n_cells(), mesh.n_cells());
            assert_eq!(loaded.n_faces(), mesh.n_faces());
            assert_eq!(loaded.n_edges(), mesh.n_edges());
            assert_eq!(loaded.n_vertices(), mesh.n_vertices());
            assert_eq!(loaded.gamma, mesh.gamma);
            assert!((loaded.volume() - mesh.volume()).abs() < 1e-12);
            std::fs::remove_file(&path).ok();
        }
    }

    #[test]
    fn loader_rejects_broken_files() {
        let dir = std::env::temp_dir();
        let path = dir.join("ddr_mesh_broken.json");
        std::fs::write(&path, "{\"vertices\": []}").unwrap();
        assert!(read_mesh_json(&path).is_err());
        std::fs::remove_file(&path).ok();
    }
}
