//! Structural oracles for the discrete operators: complex property,
//! commutation with the canonical interpolators on polynomial inputs,
//! polynomial consistency of potentials and stabilization, and the defining
//! integration-by-parts relation residuals.

use ddr_core::dofs::{
    component_norm, interpolate_curl, interpolate_div, interpolate_grad, random_dofs, DdrCore,
    NormScope, SpaceKind,
};
use ddr_core::mesh::{gen_agglomerated, gen_hex_cube, gen_tet_cube, PolytopalMesh};
use ddr_core::ops::{self, assemble_discrete_operators};
use ddr_core::poly::{BasisCache, CacheSpec};
use ddr_core::rng::SplitMix64;
use ddr_core::{Pt3, Vec3};

fn setup(mesh: &PolytopalMesh, k: i64) -> (BasisCache, ()) {
    (
        BasisCache::build(mesh, CacheSpec::for_degrees(k, k + 1)).unwrap(),
        (),
    )
}

/// Random polynomial of total degree <= deg with analytic gradient.
struct RandPoly {
    coefs: Vec<(f64, [i32; 3])>,
}

impl RandPoly {
    fn new(deg: i32, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut coefs = Vec::new();
        for a in 0..=deg {
            for b in 0..=(deg - a) {
                for c in 0..=(deg - a - b) {
                    coefs.push((rng.next_symmetric(), [a, b, c]));
                }
            }
        }
        Self { coefs }
    }

    fn eval(&self, p: &Pt3) -> f64 {
        self.coefs
            .iter()
            .map(|(w, e)| w * p.x.powi(e[0]) * p.y.powi(e[1]) * p.z.powi(e[2]))
            .sum()
    }

    fn grad(&self, p: &Pt3) -> Vec3 {
        let mut g = Vec3::zeros();
        for (w, e) in &self.coefs {
            if e[0] > 0 {
                g.x += w * e[0] as f64 * p.x.powi(e[0] - 1) * p.y.powi(e[1]) * p.z.powi(e[2]);
            }
            if e[1] > 0 {
                g.y += w * e[1] as f64 * p.x.powi(e[0]) * p.y.powi(e[1] - 1) * p.z.powi(e[2]);
            }
            if e[2] > 0 {
                g.z += w * e[2] as f64 * p.x.powi(e[0]) * p.y.powi(e[1]) * p.z.powi(e[2] - 1);
            }
        }
        g
    }
}

/// Random vector polynomial of degree <= deg with analytic curl/div.
struct RandVecPoly {
    comps: [RandPoly; 3],
}

impl RandVecPoly {
    fn new(deg: i32, seed: u64) -> Self {
        Self {
            comps: [
                RandPoly::new(deg, seed),
                RandPoly::new(deg, seed + 1),
                RandPoly::new(deg, seed + 2),
            ],
        }
    }

    fn eval(&self, p: &Pt3) -> Vec3 {
        Vec3::new(
            self.comps[0].eval(p),
            self.comps[1].eval(p),
            self.comps[2].eval(p),
        )
    }

    fn curl(&self, p: &Pt3) -> Vec3 {
        let g0 = self.comps[0].grad(p);
        let g1 = self.comps[1].grad(p);
        let g2 = self.comps[2].grad(p);
        Vec3::new(g2.y - g1.z, g0.z - g2.x, g1.x - g0.y)
    }

    fn div(&self, p: &Pt3) -> f64 {
        self.comps[0].grad(p).x + self.comps[1].grad(p).y + self.comps[2].grad(p).z
    }
}

fn meshes_for_complex() -> Vec<(&'static str, PolytopalMesh)> {
    vec![
        ("tet2", gen_tet_cube(2).unwrap()),
        ("hex2", gen_hex_cube(2).unwrap()),
        ("agg2", gen_agglomerated(2, 0).unwrap()),
    ]
}

#[test]
fn complex_property_on_random_vectors() {
    for (name, mesh) in meshes_for_complex() {
        for k in 0..=1i64 {
            let cache = setup(&mesh, k).0;
            let core = DdrCore::new(&mesh, &cache, k).unwrap();
            let bundle = assemble_discrete_operators(&core).unwrap();
            for seed in 0..5u64 {
                let q = random_dofs(&core, SpaceKind::Grad, seed, None);
                let ugq = bundle.apply_ug(&q);
                let ucugq = bundle.apply_uc(&ugq);
                let num = component_norm(&core, &ucugq, NormScope::Global);
                let den = component_norm(&core, &q, NormScope::Global);
                assert!(num / den < 1e-11, "{name} k={k}: |uC uG q| / |q| = {:e}", num / den);

                let v = random_dofs(&core, SpaceKind::Curl, seed + 50, None);
                let ucv = bundle.apply_uc(&v);
                let ducv = bundle.apply_div(&ucv);
                let num: f64 = ducv.iter().map(|x| x * x).sum::<f64>().sqrt();
                let den = component_norm(&core, &v, NormScope::Global);
                assert!(num / den < 1e-11, "{name} k={k}: |D uC v| / |v| = {:e}", num / den);
            }
        }
    }
}

#[test]
fn commutation_on_polynomial_inputs() {
    for (name, mesh) in meshes_for_complex() {
        for k in 0..=1i64 {
            let cache = setup(&mesh, k).0;
            let core = DdrCore::new(&mesh, &cache, k).unwrap();
            let bundle = assemble_discrete_operators(&core).unwrap();

            // uG I_grad p = I_curl grad p for p in P^{k+1}.
            let p = RandPoly::new((k + 1) as i32, 17);
            let iq = interpolate_grad(&core, &|x| p.eval(x));
            let lhs = bundle.apply_ug(&iq);
            let rhs = interpolate_curl(&core, &|x| p.grad(x));
            let diff = component_norm_diff(&core, &lhs, &rhs);
            assert!(diff < 1e-11, "{name} k={k}: uG I p vs I grad p: {diff:e}");

            // uC I_curl v = I_div curl v for v in P^{k+1}^3.
            let v = RandVecPoly::new((k + 1) as i32, 23);
            let iv = interpolate_curl(&core, &|x| v.eval(x));
            let lhs = bundle.apply_uc(&iv);
            let rhs = interpolate_div(&core, &|x| v.curl(x));
            let diff = component_norm_diff(&core, &lhs, &rhs);
            assert!(diff < 1e-11, "{name} k={k}: uC I v vs I curl v: {diff:e}");

            // D I_div w = lproj^k div w.
            let w = RandVecPoly::new((k + 1) as i32, 31);
            let iw = interpolate_div(&core, &|x| w.eval(x));
            let lhs = bundle.apply_div(&iw);
            // Oracle: project div w onto each cell's P^k directly.
            let mut err: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for c in 0..mesh.n_cells() {
                let proj = ddr_core::poly::project::project_scalar(&cache.cells[c], k, |x| {
                    w.div(x)
                });
                let nk = ddr_core::poly::dim_p3(k);
                for i in 0..nk {
                    let d = lhs[c * nk + i] - proj[i];
                    err += d * d;
                    scale += proj[i] * proj[i];
                }
            }
            assert!(
                err.sqrt() / scale.sqrt().max(1e-12) < 1e-11,
                "{name} k={k}: D I w vs lproj div w: {:e}",
                err.sqrt() / scale.sqrt().max(1e-12)
            );
        }
    }
}

fn component_norm_diff(
    core: &DdrCore,
    a: &ddr_core::dofs::DofVector,
    b: &ddr_core::dofs::DofVector,
) -> f64 {
    let mut d = a.clone();
    d.data -= &b.data;
    let scale = component_norm(core, b, NormScope::Global).max(1e-12);
    component_norm(core, &d, NormScope::Global) / scale
}

#[test]
fn polynomial_consistency_of_potentials() {
    for (name, mesh) in meshes_for_complex() {
        for k in 0..=1i64 {
            let cache = setup(&mesh, k).0;
            let core = DdrCore::new(&mesh, &cache, k).unwrap();
            let bundle = assemble_discrete_operators(&core).unwrap();

            // P_grad I(p) = p for p in P^{k+1}.
            let p = RandPoly::new((k + 1) as i32, 41);
            let iq = interpolate_grad(&core, &|x| p.eval(x));
            for c in 0..mesh.n_cells() {
                match ops::potential(&bundle, &iq, c) {
                    ops::PotentialValues::Scalar(coef) => {
                        let proj = ddr_core::poly::project::project_scalar(
                            &cache.cells[c],
                            k + 1,
                            |x| p.eval(x),
                        );
                        let err = (&coef - &proj).amax() / proj.amax().max(1e-12);
                        assert!(err < 1e-11, "{name} k={k} cell {c}: P_grad err {err:e}");
                    }
                    _ => unreachable!(),
                }
            }

            // P_curl I(v) = v and P_div I(v) = v for v in P^k vector.
            let v = RandVecPoly::new(k as i32, 43);
            let iv = interpolate_curl(&core, &|x| v.eval(x));
            let iw = interpolate_div(&core, &|x| v.eval(x));
            for c in 0..mesh.n_cells() {
                let want = ddr_core::poly::project::project_vector_components(
                    &cache.cells[c],
                    k,
                    |x| v.eval(x),
                );
                for (z, nameop) in [(&iv, "P_curl"), (&iw, "P_div")] {
                    match ops::potential(&bundle, z, c) {
                        ops::PotentialValues::Vector(comps) => {
                            let err = (&comps - &want).amax() / want.amax().max(1e-12);
                            assert!(err < 1e-11, "{name} k={k} {nameop} cell {c}: {err:e}");
                        }
                        _ => unreachable!(),
                    }
                }
            }

            // Stabilization vanishes on interpolates of P^{k_bullet}.
            let pg = RandPoly::new((k + 1) as i32, 47);
            let ig = interpolate_grad(&core, &|x| pg.eval(x));
            let sg = ops::stabilization(&bundle, &ig, &ig);
            assert!(sg.abs() < 1e-20 * 1e10, "{name} k={k}: s_grad(Ip, Ip) = {sg:e}");
            let sv = ops::stabilization(&bundle, &iv, &iv);
            assert!(sv.abs() < 1e-10, "{name} k={k}: s_curl(Iv, Iv) = {sv:e}");
            let sw = ops::stabilization(&bundle, &iw, &iw);
            assert!(sw.abs() < 1e-10, "{name} k={k}: s_div(Iw, Iw) = {sw:e}");

            // s(I p, z) = 0 for any z (bilinear cross-consistency).
            let z = random_dofs(&core, SpaceKind::Grad, 7, None);
            let cross = ops::stabilization(&bundle, &ig, &z);
            let znorm = ops::stabilization(&bundle, &z, &z).sqrt();
            assert!(
                cross.abs() <= 1e-9 * znorm.max(1.0),
                "{name} k={k}: s(Ip, z) = {cross:e}"
            );
        }
    }
}

#[test]
fn relation_residuals_are_tiny() {
    for (name, mesh) in meshes_for_complex() {
        for k in 0..=1i64 {
            let cache = setup(&mesh, k).0;
            let core = DdrCore::new(&mesh, &cache, k).unwrap();
            let bundle = assemble_discrete_operators(&core).unwrap();
            let rep = ops::relation_residuals(&bundle);
            assert!(rep.r_div < 1e-11, "{name} k={k}: R-div {:e}", rep.r_div);
            assert!(rep.r_curl < 1e-10, "{name} k={k}: R-curl {:e}", rep.r_curl);
            assert!(rep.r_grad < 1e-10, "{name} k={k}: R-grad {:e}", rep.r_grad);
            assert!(
                bundle.max_ls_residual < 1e-10,
                "{name} k={k}: ls residual {:e}",
                bundle.max_ls_residual
            );
        }
    }
}

#[test]
fn divergence_of_radial_interpolate_is_three() {
    // D on the unit-cube cell at k=0 with w = I_div(x - x0): the defining
    // relation reduces to the Gauss theorem, so D = 3.
    let mesh = gen_hex_cube(1).unwrap();
    let cache = setup(&mesh, 0).0;
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();
    let bundle = assemble_discrete_operators(&core).unwrap();
    let x0 = Pt3::new(0.1, -0.2, 0.3);
    let w = interpolate_div(&core, &|p| p - x0);
    let d = bundle.apply_div(&w);
    // The broken P^0 basis function is 1/sqrt(|T|) = 1, so the coefficient
    // equals the value.
    assert_eq!(d.len(), 1);
    assert!((d[0] - 3.0).abs() < 1e-12, "{}", d[0]);
}

#[test]
fn edge_gradient_is_a_finite_difference_at_k0() {
    // k = 0, |E| = 1, q_V = (0, 1) -> G_E = 1.
    let mesh = gen_hex_cube(1).unwrap();
    let cache = setup(&mesh, 0).0;
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();
    let bundle = assemble_discrete_operators(&core).unwrap();
    // Pick any edge; set q to the tangent-endpoint indicator.
    let e = 0;
    let mut q = ddr_core::dofs::DofVector::zeros(&core, SpaceKind::Grad);
    let v2 = core.mesh.point_vertex[core.mesh.edges[e].verts[1]].unwrap();
    q.data[core.grad.vertex_index(v2)] = 1.0;
    let g = ops::edge_gradient(&bundle, &q, e);
    // Constant ONB on the unit edge is 1, so the coefficient is the slope.
    let len = core.mesh.edges[e].length;
    assert!((g[0] * len.sqrt() - 1.0 / len).abs() < 1e-12, "{}", g[0]);
}

#[test]
fn masked_subspaces_are_invariant() {
    let mesh = gen_tet_cube(2).unwrap();
    let gamma: Vec<usize> = mesh.boundary_faces().collect();
    let mesh = mesh.with_gamma(&gamma).unwrap();
    let cache = setup(&mesh, 0).0;
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();
    let bundle = assemble_discrete_operators(&core).unwrap();
    let gmask = ddr_core::dofs::BoundaryMask::build(&core, SpaceKind::Grad);
    let cmask = ddr_core::dofs::BoundaryMask::build(&core, SpaceKind::Curl);
    let dmask = ddr_core::dofs::BoundaryMask::build(&core, SpaceKind::Div);
    for seed in 0..5u64 {
        let q = random_dofs(&core, SpaceKind::Grad, seed, Some(&gmask));
        assert!(cmask.is_masked(&bundle.apply_ug(&q), 1e-12));
        let v = random_dofs(&core, SpaceKind::Curl, seed, Some(&cmask));
        assert!(dmask.is_masked(&bundle.apply_uc(&v), 1e-12));
    }
}

#[test]
fn boundary_traces_vanish_on_masked_inputs() {
    let mesh = gen_tet_cube(1).unwrap();
    let gamma: Vec<usize> = mesh.boundary_faces().collect();
    let mesh = mesh.with_gamma(&gamma).unwrap();
    let cache = setup(&mesh, 1).0;
    let core = DdrCore::new(&mesh, &cache, 1).unwrap();
    let bundle = assemble_discrete_operators(&core).unwrap();
    let gmask = ddr_core::dofs::BoundaryMask::build(&core, SpaceKind::Grad);
    let cmask = ddr_core::dofs::BoundaryMask::build(&core, SpaceKind::Curl);
    let q = random_dofs(&core, SpaceKind::Grad, 3, Some(&gmask));
    let v = random_dofs(&core, SpaceKind::Curl, 4, Some(&cmask));
    for f in 0..mesh.n_faces() {
        if !mesh.gamma[f] {
            continue;
        }
        let tr = ops::face_trace_norm_sq(&bundle, &q, f).sqrt();
        assert!(tr < 1e-12, "face {f}: |tr| = {tr:e}");
        let tt = ops::face_ttrace_values(&bundle, &v, f);
        let m = tt.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        assert!(m < 1e-12, "face {f}: |trt| = {m:e}");
    }
}

#[test]
fn inner_product_properties() {
    let mesh = gen_tet_cube(1).unwrap();
    let cache = setup(&mesh, 0).0;
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();
    let bundle = assemble_discrete_operators(&core).unwrap();
    let mu = ops::PhysicalParameter::identity();

    // (I p, I p)_{mu,grad,h} = int p^2 for p in P^{k_grad} (stabilization
    // vanishes and the potential reproduces p).
    let p = RandPoly::new(1, 3);
    let ip = interpolate_grad(&core, &|x| p.eval(x));
    let got = ops::inner_product(&bundle, &ip, &ip, &mu).unwrap();
    let mut want = 0.0;
    for c in 0..mesh.n_cells() {
        want += cache.cells[c].rule.integrate(|x| p.eval(x) * p.eval(x));
    }
    assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");

    // Bilinearity and symmetry on random triples.
    let a = random_dofs(&core, SpaceKind::Curl, 1, None);
    let b = random_dofs(&core, SpaceKind::Curl, 2, None);
    let c = random_dofs(&core, SpaceKind::Curl, 3, None);
    let ab = ops::inner_product(&bundle, &a, &b, &mu).unwrap();
    let ba = ops::inner_product(&bundle, &b, &a, &mu).unwrap();
    assert!((ab - ba).abs() < 1e-12 * ab.abs().max(1.0));
    let mut apc = a.clone();
    apc.data += &c.data;
    let lhs = ops::inner_product(&bundle, &apc, &b, &mu).unwrap();
    let rhs = ab + ops::inner_product(&bundle, &c, &b, &mu).unwrap();
    assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0));

    // With mu = 1: ||P z||_{L2} <= ||z||_{mu,h}.
    for seed in 0..5u64 {
        let z = random_dofs(&core, SpaceKind::Div, seed, None);
        let pnorm = ops::potential_l2_norm(&bundle, &z);
        let mnorm = ops::l2_norm(&bundle, &z, &mu).unwrap();
        assert!(pnorm <= mnorm * (1.0 + 1e-12), "{pnorm} vs {mnorm}");
    }
}
