//! Quasi-interpolator contracts: projection property, cochain commutation
//! through the DDR complex, approximation measures, and the lifting
//! left-inverse property.

use ddr_core::dofs::{
    component_norm, interpolate_grad, random_dofs, BoundaryMask, DdrCore, DofVector, NormScope,
    SpaceKind,
};
use ddr_core::fe::FeFamily;
use ddr_core::mesh::{gen_tet_cube, PolytopalMesh};
use ddr_core::ops::assemble_discrete_operators;
use ddr_core::poly::{BasisCache, CacheSpec};
use ddr_core::quasi::{
    appr_global, bppr, lifting_curl, qi_ddr, qi_fe, tppr_scalar, MeasureField, QiField,
    QuasiContext, QuasiInterpolatorConfig,
};
use ddr_core::{Pt3, Vec3};
use std::f64::consts::PI;

fn gamma_mesh(n: usize, gamma: &str) -> PolytopalMesh {
    let mesh = gen_tet_cube(n).unwrap();
    match gamma {
        "none" => mesh,
        "all" => {
            let g: Vec<usize> = mesh.boundary_faces().collect();
            mesh.with_gamma(&g).unwrap()
        }
        "xmin" => {
            let g = mesh.faces_on_xmin();
            mesh.with_gamma(&g).unwrap()
        }
        _ => unreachable!(),
    }
}

// Smooth fields vanishing (with all tangential components) on the whole
// boundary of the unit cube.
fn qfun(p: &Pt3) -> f64 {
    (PI * p.x).sin() * (PI * p.y).sin() * (PI * p.z).sin()
}
fn qgrad(p: &Pt3) -> Vec3 {
    Vec3::new(
        PI * (PI * p.x).cos() * (PI * p.y).sin() * (PI * p.z).sin(),
        PI * (PI * p.x).sin() * (PI * p.y).cos() * (PI * p.z).sin(),
        PI * (PI * p.x).sin() * (PI * p.y).sin() * (PI * p.z).cos(),
    )
}

// A vector field with tangential trace zero on the cube boundary.
fn vfun(p: &Pt3) -> Vec3 {
    let sx = (PI * p.x).sin();
    let sy = (PI * p.y).sin();
    let sz = (PI * p.z).sin();
    Vec3::new(sy * sz, sx * sz, sx * sy)
}
fn vcurl(p: &Pt3) -> Vec3 {
    let (cx, cy, cz) = ((PI * p.x).cos(), (PI * p.y).cos(), (PI * p.z).cos());
    let (sx, sy, sz) = ((PI * p.x).sin(), (PI * p.y).sin(), (PI * p.z).sin());
    // curl of (sy sz, sx sz, sx sy)
    Vec3::new(
        PI * sx * cy - PI * sx * cz,
        PI * sy * cz - PI * cx * sy,
        PI * cx * sz - PI * sz * cy,
    )
}

fn wdiv(p: &Pt3) -> Vec3 {
    Vec3::new((PI * p.y).sin() * (PI * p.z).sin() * p.x, 0.0, 0.0)
}
fn wdiv_div(p: &Pt3) -> f64 {
    (PI * p.y).sin() * (PI * p.z).sin()
}

// Field with zero normal trace on the whole cube boundary (lies in
// H_Gamma(div) for Gamma = boundary; its divergence has zero mean).
fn wn(p: &Pt3) -> Vec3 {
    Vec3::new(
        (PI * p.x).sin() * (PI * p.y).cos(),
        (PI * p.y).sin() * (PI * p.z).cos(),
        (PI * p.z).sin() * (PI * p.x).cos(),
    )
}
fn wn_div(p: &Pt3) -> f64 {
    PI * ((PI * p.x).cos() * (PI * p.y).cos()
        + (PI * p.y).cos() * (PI * p.z).cos()
        + (PI * p.z).cos() * (PI * p.x).cos())
}

#[test]
fn projection_property_on_conforming_inputs() {
    let mesh = gamma_mesh(1, "none");
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();
    let ctx = QuasiContext::new(&core, QuasiInterpolatorConfig::new(0, 1, false)).unwrap();
    for seed in 0..3u64 {
        // Random conforming NE field: minimize distance to a random broken
        // vector subject to the constraints... easier: qi of a random analytic
        // field is conforming, then qi must reproduce it.
        let v = qi_fe(
            &ctx,
            FeFamily::Nedelec,
            &QiField::HCurl {
                f: &|p| vfun(p) * (1.0 + seed as f64),
                curl: &|p| vcurl(p) * (1.0 + seed as f64),
            },
        )
        .unwrap();
        let again = qi_fe(&ctx, FeFamily::Nedelec, &QiField::Fe(&v)).unwrap();
        let rel = (&again.coeffs - &v.coeffs).norm() / v.coeffs.norm();
        assert!(rel < 1e-9, "projection property: {rel:e}");
    }
}

#[test]
fn chain_constraints_hold_by_construction() {
    let mesh = gamma_mesh(2, "all");
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();
    let ctx = QuasiContext::new(&core, QuasiInterpolatorConfig::new(0, 1, true)).unwrap();

    // curl(qi_NE v) = qi_RT(curl v).
    let v = qi_fe(
        &ctx,
        FeFamily::Nedelec,
        &QiField::HCurl {
            f: &vfun,
            curl: &vcurl,
        },
    )
    .unwrap();
    let curl_v = ddr_core::fe::apply_fe_differential(&ctx.ne, &ctx.rt, &v);
    let w = qi_fe(
        &ctx,
        FeFamily::RaviartThomas,
        &QiField::HDiv {
            f: &vcurl,
            div: &|_| 0.0,
        },
    )
    .unwrap();
    let rel = (&curl_v.coeffs - &w.coeffs).norm() / w.coeffs.norm().max(1e-300);
    assert!(rel < 1e-8, "curl chain: {rel:e}");
}

#[test]
fn ddr_cochain_commutation() {
    for gamma in ["none", "all", "xmin"] {
        for (k, l) in [(0i64, 1i64)] {
            let mesh = gamma_mesh(2, gamma);
            let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(k, l)).unwrap();
            let core = DdrCore::new(&mesh, &cache, k).unwrap();
            let bundle = assemble_discrete_operators(&core).unwrap();
            let with_bc = gamma != "none";
            let ctx =
                QuasiContext::new(&core, QuasiInterpolatorConfig::new(k, l, with_bc)).unwrap();

            // uG qi_grad q = qi_curl grad q.
            let qg = qi_ddr(
                &ctx,
                SpaceKind::Grad,
                &QiField::Scalar {
                    f: &qfun,
                    grad: &qgrad,
                },
            )
            .unwrap();
            let lhs = bundle.apply_ug(&qg);
            let rhs = qi_ddr(
                &ctx,
                SpaceKind::Curl,
                &QiField::HCurl {
                    f: &qgrad,
                    curl: &|_| Vec3::zeros(),
                },
            )
            .unwrap();
            let mut d = lhs.clone();
            d.data -= &rhs.data;
            let rel = component_norm(&core, &d, NormScope::Global)
                / component_norm(&core, &rhs, NormScope::Global).max(1e-300);
            assert!(rel < 1e-8, "gamma={gamma} grad square: {rel:e}");

            // uC qi_curl v = qi_div curl v.
            let qv = qi_ddr(
                &ctx,
                SpaceKind::Curl,
                &QiField::HCurl {
                    f: &vfun,
                    curl: &vcurl,
                },
            )
            .unwrap();
            let lhs = bundle.apply_uc(&qv);
            let rhs = qi_ddr(
                &ctx,
                SpaceKind::Div,
                &QiField::HDiv {
                    f: &vcurl,
                    div: &|_| 0.0,
                },
            )
            .unwrap();
            let mut d = lhs.clone();
            d.data -= &rhs.data;
            let rel = component_norm(&core, &d, NormScope::Global)
                / component_norm(&core, &rhs, NormScope::Global).max(1e-300);
            assert!(rel < 1e-8, "gamma={gamma} curl square: {rel:e}");

            // D qi_div w = lproj^k div w (the field must lie in H_Gamma(div),
            // so use the zero-normal-trace field when gamma is the whole
            // boundary).
            let (wf, wd): (&dyn Fn(&Pt3) -> Vec3, &dyn Fn(&Pt3) -> f64) = if gamma == "all" {
                (&wn, &wn_div)
            } else {
                (&wdiv, &wdiv_div)
            };
            let qw = qi_ddr(&ctx, SpaceKind::Div, &QiField::HDiv { f: wf, div: wd }).unwrap();
            let lhs = bundle.apply_div(&qw);
            let nk = ddr_core::poly::dim_p3(k);
            let mut rhs = vec![0.0; bundle.broken_pk_dim()];
            for c in 0..mesh.n_cells() {
                let proj =
                    ddr_core::poly::project::project_scalar(&cache.cells[c], k, |p| wd(p));
                for i in 0..nk {
                    rhs[c * nk + i] = proj[i];
                }
            }
            let num: f64 = lhs
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(num / den < 1e-8, "gamma={gamma} div square: {:e}", num / den);

            // Masked co-domain.
            if with_bc {
                let mask = BoundaryMask::build(&core, SpaceKind::Curl);
                assert!(mask.is_masked(&qv, 1e-9));
            }
        }
    }
}

#[test]
fn qi_of_global_polynomial_reproduces_canonical_interpolation() {
    let mesh = gamma_mesh(1, "none");
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();
    let ctx = QuasiContext::new(&core, QuasiInterpolatorConfig::new(0, 1, false)).unwrap();
    let p = |x: &Pt3| 0.25 + 0.5 * x.x - 1.5 * x.y + 2.0 * x.z;
    let g = Vec3::new(0.5, -1.5, 2.0);
    let qi = qi_ddr(
        &ctx,
        SpaceKind::Grad,
        &QiField::Scalar {
            f: &p,
            grad: &|_| g,
        },
    )
    .unwrap();
    let canonical = interpolate_grad(&core, &p);
    let mut d = qi.clone();
    d.data -= &canonical.data;
    let rel = component_norm(&core, &d, NormScope::Global)
        / component_norm(&core, &canonical, NormScope::Global);
    assert!(rel < 1e-9, "{rel:e}");
}

#[test]
fn approximation_measures_vanish_on_matching_polynomials() {
    let mesh = gamma_mesh(2, "none");
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();

    // Appr of a global polynomial of degree k_bullet vanishes (k_grad = 1).
    let appr = appr_global(
        &core,
        SpaceKind::Grad,
        &MeasureField::Scalar {
            f: &|p| 1.0 + 2.0 * p.x - p.y,
            grad: &|_| Vec3::new(2.0, -1.0, 0.0),
        },
    );
    assert!(appr < 1e-12, "{appr:e}");

    // Bppr^0_grad(x^2) is strictly positive and halves like h.
    let b2 = bppr(
        &core,
        SpaceKind::Grad,
        &MeasureField::Scalar {
            f: &|p| p.x * p.x,
            grad: &|p| Vec3::new(2.0 * p.x, 0.0, 0.0),
        },
    );
    assert!(b2 > 1e-6);
    let mesh4 = gamma_mesh(4, "none");
    let cache4 = BasisCache::build(&mesh4, CacheSpec::for_degrees(0, 1)).unwrap();
    let core4 = DdrCore::new(&mesh4, &cache4, 0).unwrap();
    let b4 = bppr(
        &core4,
        SpaceKind::Grad,
        &MeasureField::Scalar {
            f: &|p| p.x * p.x,
            grad: &|p| Vec3::new(2.0 * p.x, 0.0, 0.0),
        },
    );
    let rate = (b2 / b4).log2();
    assert!((rate - 1.0).abs() < 0.2, "Bppr rate {rate}");

    // Tppr of a zero datum vanishes.
    let t = tppr_scalar(&core, &|_| 0.0);
    assert_eq!(t, 0.0);
}

#[test]
fn lifting_left_inverse_at_k0_ell3() {
    for gamma in ["none", "all"] {
        let mesh = gamma_mesh(1, gamma);
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 3)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        let bundle = assemble_discrete_operators(&core).unwrap();
        let with_bc = gamma != "none";
        let ctx = QuasiContext::new(&core, QuasiInterpolatorConfig::new(0, 3, with_bc)).unwrap();
        let mask = BoundaryMask::build(&core, SpaceKind::Curl);
        let mut checked = 0;
        for seed in 0..6u64 {
            let v = if with_bc {
                random_dofs(&core, SpaceKind::Curl, seed, Some(&mask))
            } else {
                random_dofs(&core, SpaceKind::Curl, seed, None)
            };
            if component_norm(&core, &v, NormScope::Global) < 1e-12 {
                continue;
            }
            checked += 1;
            let lifted = lifting_curl(&ctx, &bundle, &v).unwrap();
            // Conformity of the lifted field.
            assert!(
                ctx.ne.constraint_residual(&lifted.coeffs) < 1e-8,
                "lifting not conforming"
            );
            // lproj^k of the lifting equals the curl potential (imposed).
            // Left inverse: qi_ddr(lifting) = v.
            let back = qi_ddr(&ctx, SpaceKind::Curl, &QiField::Fe(&lifted)).unwrap();
            let mut d = back.clone();
            d.data -= &v.data;
            let rel = component_norm(&core, &d, NormScope::Global)
                / component_norm(&core, &v, NormScope::Global);
            assert!(rel < 1e-8, "gamma={gamma} left inverse: {rel:e}");
        }
        assert!(checked > 0);
    }
}

#[test]
fn lifting_reproduces_compatible_polynomials() {
    // v = I_curl(p) for constant p: the lifting's interpolation returns I(p).
    let mesh = gamma_mesh(1, "none");
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 3)).unwrap();
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();
    let bundle = assemble_discrete_operators(&core).unwrap();
    let ctx = QuasiContext::new(&core, QuasiInterpolatorConfig::new(0, 3, false)).unwrap();
    let p = Vec3::new(0.4, -0.2, 0.9);
    let v = ddr_core::dofs::interpolate_curl(&core, &|_| p);
    let lifted = lifting_curl(&ctx, &bundle, &v).unwrap();
    let back = ddr_core::fe::ddr_interpolate_fe(&core, &ctx.ne, &lifted).unwrap();
    let mut d = back.clone();
    d.data -= &v.data;
    let rel = component_norm(&core, &d, NormScope::Global)
        / component_norm(&core, &v, NormScope::Global);
    assert!(rel < 1e-9, "{rel:e}");
}

#[test]
fn grad_lifting_left_inverse() {
    let mesh = gamma_mesh(1, "none");
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 3)).unwrap();
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();
    let bundle = assemble_discrete_operators(&core).unwrap();
    let ctx = QuasiContext::new(&core, QuasiInterpolatorConfig::new(0, 3, false)).unwrap();
    for seed in 0..3u64 {
        let q = random_dofs(&core, SpaceKind::Grad, seed, None);
        let lifted = ddr_core::quasi::lifting_grad(&ctx, &bundle, &q).unwrap();
        assert!(ctx.lag.constraint_residual(&lifted.coeffs) < 1e-8);
        let back = ddr_core::fe::ddr_interpolate_fe(&core, &ctx.lag, &lifted).unwrap();
        let mut d = back.clone();
        d.data -= &q.data;
        let rel = component_norm(&core, &d, NormScope::Global)
            / component_norm(&core, &q, NormScope::Global);
        assert!(rel < 1e-8, "grad lifting interpolation: {rel:e}");
    }
}
