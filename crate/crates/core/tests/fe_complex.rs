//! Conforming FE complex: dimension formulas, conforming inclusions, the
//! elementwise differentials, and the D_DDR commuting diagram.

use ddr_core::dofs::{component_norm, interpolate_grad, DdrCore, NormScope};
use ddr_core::fe::{
    apply_fe_differential, ddr_interpolate_fe, exactness_dims, project_broken_scalar,
    ConformingSpace, FeFamily,
};
use ddr_core::mesh::{gen_hex_cube, gen_tet_cube, read_mesh_json};
use ddr_core::ops::assemble_discrete_operators;
use ddr_core::poly::{BasisCache, CacheSpec};
use ddr_core::rng::SplitMix64;
use nalgebra::DVector;

/// A conforming random field: project a random broken vector onto the
/// conforming subspace via the (dense) null-space basis.
fn random_conforming(space: &ConformingSpace, seed: u64) -> DVector<f64> {
    let basis = space.conforming_basis();
    let mut rng = SplitMix64::new(seed);
    let coef = DVector::from_fn(basis.ncols(), |_, _| rng.next_symmetric());
    &basis * coef
}

#[test]
fn dimension_formulas_at_l1() {
    let mesh = gen_tet_cube(1).unwrap();
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
    let lag = ConformingSpace::build(&mesh, &cache, FeFamily::Lagrange, 1, false).unwrap();
    assert_eq!(lag.dim(), mesh.n_vertices());
    let ne = ConformingSpace::build(&mesh, &cache, FeFamily::Nedelec, 1, false).unwrap();
    assert_eq!(ne.dim(), mesh.n_edges());
    let rt = ConformingSpace::build(&mesh, &cache, FeFamily::RaviartThomas, 1, false).unwrap();
    assert_eq!(rt.dim(), mesh.n_faces());
}

#[test]
fn single_tet_rt1_with_full_gamma_is_trivial() {
    // A one-tetrahedron mesh via the JSON interface.
    let json = r#"{
      "vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]],
      "faces": [[1,2,3],[0,3,2],[0,1,3],[0,2,1]],
      "cells": [[1,2,3,4]],
      "gamma_faces": [0,1,2,3],
      "submesh": { "simplices": [[0,1,2,3]], "parent": [0] }
    }"#;
    let path = std::env::temp_dir().join("ddr_single_tet.json");
    std::fs::write(&path, json).unwrap();
    let mesh = read_mesh_json(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(mesh.n_cells(), 1);
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
    let rt = ConformingSpace::build(&mesh, &cache, FeFamily::RaviartThomas, 1, true).unwrap();
    // All 4 faces on gamma: no interior faces, dim = 0.
    assert_eq!(rt.dim(), 0);
}

#[test]
fn gradients_of_lagrange_satisfy_nedelec_constraints() {
    let mesh = gen_tet_cube(1).unwrap();
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 2)).unwrap();
    let lag = ConformingSpace::build(&mesh, &cache, FeFamily::Lagrange, 2, false).unwrap();
    let ne = ConformingSpace::build(&mesh, &cache, FeFamily::Nedelec, 2, false).unwrap();
    for seed in 0..3u64 {
        let xi = lag.field(random_conforming(&lag, seed));
        assert!(lag.constraint_residual(&xi.coeffs) < 1e-11);
        let g = apply_fe_differential(&lag, &ne, &xi);
        assert!(
            ne.constraint_residual(&g.coeffs) < 1e-10,
            "grad of conforming scalar is not NE-conforming: {:e}",
            ne.constraint_residual(&g.coeffs)
        );
    }
}

#[test]
fn differential_complex_property() {
    let mesh = gen_tet_cube(1).unwrap();
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 2)).unwrap();
    let lag = ConformingSpace::build(&mesh, &cache, FeFamily::Lagrange, 2, false).unwrap();
    let ne = ConformingSpace::build(&mesh, &cache, FeFamily::Nedelec, 2, false).unwrap();
    let rt = ConformingSpace::build(&mesh, &cache, FeFamily::RaviartThomas, 2, false).unwrap();
    let broken = ConformingSpace::build(&mesh, &cache, FeFamily::BrokenScalar, 2, false).unwrap();
    for seed in 5..8u64 {
        let xi = lag.field(random_conforming(&lag, seed));
        let g = apply_fe_differential(&lag, &ne, &xi);
        let cg = apply_fe_differential(&ne, &rt, &g);
        assert!(cg.coeffs.amax() < 1e-11, "curl grad = {:e}", cg.coeffs.amax());
        let v = ne.field(random_conforming(&ne, seed + 10));
        let cv = apply_fe_differential(&ne, &rt, &v);
        let dcv = apply_fe_differential(&rt, &broken, &cv);
        assert!(dcv.coeffs.amax() < 1e-11, "div curl = {:e}", dcv.coeffs.amax());
    }
}

#[test]
fn ddr_interpolation_of_global_polynomial_matches_canonical() {
    let mesh = gen_hex_cube(1).unwrap();
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();
    let lag = ConformingSpace::build(&mesh, &cache, FeFamily::Lagrange, 1, false).unwrap();
    let p = |x: &ddr_core::Pt3| 0.3 + 1.2 * x.x - 0.7 * x.y + 0.4 * x.z;
    let xi = lag.field(lag.project_broken(Some(&p), None));
    assert!(lag.constraint_residual(&xi.coeffs) < 1e-11);
    let i_xi = ddr_interpolate_fe(&core, &lag, &xi).unwrap();
    let i_p = interpolate_grad(&core, &p);
    let mut d = i_xi.clone();
    d.data -= &i_p.data;
    let rel = component_norm(&core, &d, NormScope::Global)
        / component_norm(&core, &i_p, NormScope::Global);
    assert!(rel < 1e-12, "{rel:e}");
}

#[test]
fn ddr_diagram_commutes_on_random_conforming_fields() {
    for (k, l) in [(0i64, 1i64), (1, 2)] {
        let mesh = gen_tet_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(k, l)).unwrap();
        let core = DdrCore::new(&mesh, &cache, k).unwrap();
        let bundle = assemble_discrete_operators(&core).unwrap();
        let lag = ConformingSpace::build(&mesh, &cache, FeFamily::Lagrange, l, false).unwrap();
        let ne = ConformingSpace::build(&mesh, &cache, FeFamily::Nedelec, l, false).unwrap();
        let rt = ConformingSpace::build(&mesh, &cache, FeFamily::RaviartThomas, l, false).unwrap();
        let broken =
            ConformingSpace::build(&mesh, &cache, FeFamily::BrokenScalar, l, false).unwrap();

        for seed in 0..4u64 {
            // Square 1: uG I_grad xi = I_curl grad xi.
            let xi = lag.field(random_conforming(&lag, seed));
            let lhs = bundle.apply_ug(&ddr_interpolate_fe(&core, &lag, &xi).unwrap());
            let gxi = apply_fe_differential(&lag, &ne, &xi);
            let rhs = ddr_interpolate_fe(&core, &ne, &gxi).unwrap();
            let mut d = lhs.clone();
            d.data -= &rhs.data;
            let scale = component_norm(&core, &rhs, NormScope::Global).max(1e-12);
            let rel = component_norm(&core, &d, NormScope::Global) / scale;
            assert!(rel < 1e-10, "k={k} l={l} grad square: {rel:e}");

            // Square 2: uC I_curl v = I_div curl v.
            let v = ne.field(random_conforming(&ne, seed + 20));
            let lhs = bundle.apply_uc(&ddr_interpolate_fe(&core, &ne, &v).unwrap());
            let cv = apply_fe_differential(&ne, &rt, &v);
            let rhs = ddr_interpolate_fe(&core, &rt, &cv).unwrap();
            let mut d = lhs.clone();
            d.data -= &rhs.data;
            let scale = component_norm(&core, &rhs, NormScope::Global).max(1e-12);
            let rel = component_norm(&core, &d, NormScope::Global) / scale;
            assert!(rel < 1e-10, "k={k} l={l} curl square: {rel:e}");

            // Square 3: D I_div w = lproj^k div w.
            let w = rt.field(random_conforming(&rt, seed + 40));
            let lhs = bundle.apply_div(&ddr_interpolate_fe(&core, &rt, &w).unwrap());
            let dw = apply_fe_differential(&rt, &broken, &w);
            let rhs = project_broken_scalar(&core, &broken, &dw);
            let num: f64 = lhs
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = rhs.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            assert!(num / den < 1e-10, "k={k} l={l} div square: {:e}", num / den);
        }
    }
}

#[test]
fn interpolation_boundedness_ratio_is_stable() {
    // |||I xi|||_{.,T} <= C ||xi||_{L2(T)}: sample the global ratio on random
    // conforming fields across two refinements and check stability.
    let mut ratios = Vec::new();
    for n in [1usize, 2] {
        let mesh = gen_tet_cube(n).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        let ne = ConformingSpace::build(&mesh, &cache, FeFamily::Nedelec, 1, false).unwrap();
        let mut worst = 0.0f64;
        for seed in 0..20u64 {
            let v = ne.field(random_conforming(&ne, seed));
            let iv = ddr_interpolate_fe(&core, &ne, &v).unwrap();
            let num = component_norm(&core, &iv, NormScope::Global);
            let den = ne.l2_norm(&v.coeffs).max(1e-300);
            worst = worst.max(num / den);
        }
        ratios.push(worst);
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max.is_finite() && max / min < 3.0, "{ratios:?}");
}

#[test]
fn exactness_dims_match_cube_expectations() {
    let mesh = gen_tet_cube(1).unwrap();
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
    let d = exactness_dims(&mesh, &cache, 1, false).unwrap();
    assert_eq!(d.ker_grad, 1);
    assert_eq!(d.ker_curl, d.im_grad);
    assert_eq!(d.ker_div, d.im_curl);
}
