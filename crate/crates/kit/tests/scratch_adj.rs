use ddr_core::dofs::{interpolate_curl, interpolate_div, DdrCore, SpaceKind};
use ddr_core::ops::{self, assemble_discrete_operators};
use ddr_core::poly::{BasisCache, CacheSpec};
use ddr_core::{Pt3, Vec3};

#[test]
fn curl_adjoint_identity_polynomial_w() {
    // w constant (in P^0), mu = 1, v arbitrary canonical interpolate:
    // the defect must vanish to machine precision (relation (ii) + interface
    // cancellation of single-valued tangential traces).
    let mesh = ddr_core::mesh::gen_tet_cube(2).unwrap();
    let g = mesh.faces_on_xmin();
    let mesh = mesh.with_gamma(&g).unwrap();
    let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
    let core = DdrCore::new(&mesh, &cache, 0).unwrap();
    let bundle = assemble_discrete_operators(&core).unwrap();
    let mu = ops::PhysicalParameter::identity();

    let wconst = Vec3::new(0.37, -0.81, 0.55);
    let iw = interpolate_div(&core, &|_| wconst);
    let smooth = |p: &Pt3| {
        Vec3::new(
            (2.1 * p.y).sin() + p.z,
            p.x * p.z,
            (1.3 * p.x).cos() * p.y,
        )
    };
    let mask = ddr_core::dofs::BoundaryMask::build(&core, SpaceKind::Curl);
    let vh = mask.apply(&interpolate_curl(&core, &smooth));

    let ucv = bundle.apply_uc(&vh);
    let mut e = ops::inner_product(&bundle, &iw, &ucv, &mu).unwrap();
    // curl(mu w) = 0 for constant w: no volume term.
    // Boundary: - int_{Gamma^c} (w x n_out) . trt v.
    for f in ddr_core::quasi::gamma_complement_faces(&core) {
        let data = &core.cache.faces[f];
        let face = &core.mesh.faces[f];
        let om: f64 = core.mesh.cells[face.cells[0]]
            .faces
            .iter()
            .find(|&&(ff, _)| ff == f)
            .map(|&(_, s)| f64::from(s))
            .unwrap();
        let trt = ops::face_ttrace_values(&bundle, &vh, f);
        for (qq, w) in data.rule.weights.iter().enumerate() {
            let cross = wconst.cross(&(om * face.normal));
            e -= w * cross.dot(&trt[qq]);
        }
    }
    println!("defect with constant w: {e:e}");
    assert!(e.abs() < 1e-10, "{e:e}");
}

#[test]
fn curl_defect_decay_with_fixed_test_vector() {
    use ddr_core::dofs::{component_norm, NormScope};
    use ddr_core::quasi::{qi_ddr, QiField, QuasiContext, QuasiInterpolatorConfig};
    let w = ddr_kit::fields::vector_tangential_bubble();
    let smooth = |p: &Pt3| {
        Vec3::new(
            (2.1 * p.y).sin() + p.z,
            p.x * p.z,
            (1.3 * p.x).cos() * p.y,
        )
    };
    for n in [1usize, 2, 3, 4] {
        let mesh = ddr_core::mesh::gen_tet_cube(n).unwrap();
        let g = mesh.faces_on_xmin();
        let mesh = mesh.with_gamma(&g).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 2)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        let bundle = assemble_discrete_operators(&core).unwrap();
        let mu = ops::PhysicalParameter::identity();
        let ctx = QuasiContext::new(&core, QuasiInterpolatorConfig::new(0, 2, false)).unwrap();
        let qid = qi_ddr(
            &ctx,
            SpaceKind::Div,
            &QiField::HDiv {
                f: &|p| (w.f)(p),
                div: &|p| (w.div)(p),
            },
        )
        .unwrap();
        let mask = ddr_core::dofs::BoundaryMask::build(&core, SpaceKind::Curl);
        let mut vh = mask.apply(&interpolate_curl(&core, &smooth));
        let ucv0 = bundle.apply_uc(&vh);
        let graph = component_norm(&core, &vh, NormScope::Global)
            + component_norm(&core, &ucv0, NormScope::Global);
        vh.data /= graph;
        let ucv = bundle.apply_uc(&vh);

        let mut e = ops::inner_product(&bundle, &qid, &ucv, &mu).unwrap();
        for c in 0..core.mesh.n_cells() {
            let data = &core.cache.cells[c];
            let vals = ops::potential_values_at(&bundle, &vh, c, &data.rule.points);
            for (q, wq) in data.rule.weights.iter().enumerate() {
                e -= wq * (w.curl)(&data.rule.points[q]).dot(&vals[q]);
            }
        }
        for f in ddr_core::quasi::gamma_complement_faces(&core) {
            let data = &core.cache.faces[f];
            let face = &core.mesh.faces[f];
            let om: f64 = core.mesh.cells[face.cells[0]]
                .faces
                .iter()
                .find(|&&(ff, _)| ff == f)
                .map(|&(_, s)| f64::from(s))
                .unwrap();
            let trt = ops::face_ttrace_values(&bundle, &vh, f);
            for (qq, wq) in data.rule.weights.iter().enumerate() {
                let muw = (w.f)(&data.rule.points[qq]);
                let cross = muw.cross(&(om * face.normal));
                e -= wq * cross.dot(&trt[qq]);
            }
        }
        println!("n={n}: defect {:.4e}", e.abs());
    }
}
