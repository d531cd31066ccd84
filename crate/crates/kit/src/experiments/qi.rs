//! Quasi-interpolator verification: cochain-diagram residuals, projection
//! property on FE inputs, lifting left-inverse, and boundedness tables.

use crate::config::ExperimentConfig;
use crate::fields;
use crate::report::{ExperimentReport, Row};
use ddr_core::dofs::{component_norm, random_dofs, BoundaryMask, DdrCore, NormScope, SpaceKind};
use ddr_core::fe::{apply_fe_differential, ddr_interpolate_fe, FeFamily};
use ddr_core::ops::assemble_discrete_operators;
use ddr_core::poly::{BasisCache, CacheSpec};
use ddr_core::quasi::{
    lifting_curl, qi_ddr, qi_fe, QiField, QuasiContext, QuasiInterpolatorConfig,
};
use ddr_core::Vec3;

pub fn run_verify_qi(config: &ExperimentConfig) -> Result<ExperimentReport, String> {
    let mut report = ExperimentReport::default();
    let k = config.k;
    let ell = config.ell.max(k + 1);
    let q = fields::scalar_bubble();
    let v = fields::vector_tangential_bubble();
    let w = fields::vector_normal_bubble();

    for &n in &config.n_list {
        let mesh = config.mesh_for(n).map_err(|e| e.to_string())?;
        let cache =
            BasisCache::build(&mesh, CacheSpec::for_degrees(k, ell)).map_err(|e| e.to_string())?;
        let core = DdrCore::new(&mesh, &cache, k).map_err(|e| e.to_string())?;
        let bundle = assemble_discrete_operators(&core).map_err(|e| e.to_string())?;
        let ctx = QuasiContext::new(
            &core,
            QuasiInterpolatorConfig::new(k, ell, config.gamma.has_bc()),
        )
        .map_err(|e| e.to_string())?;
        let h = mesh.h_max();
        let mut push = |metric: String, value: f64, gate: Option<f64>| {
            report.push(Row {
                experiment: "verify-qi".into(),
                k,
                ell,
                mesh: config.mesh.name().into(),
                n,
                h,
                metric,
                value,
                rate: None,
                pass: gate.map(|g| value <= g),
            });
        };

        // Cochain residuals.
        let qg = qi_ddr(
            &ctx,
            SpaceKind::Grad,
            &QiField::Scalar {
                f: &|p| (q.f)(p),
                grad: &|p| (q.grad)(p),
            },
        )
        .map_err(|e| e.to_string())?;
        let lhs = bundle.apply_ug(&qg);
        let rhs = qi_ddr(
            &ctx,
            SpaceKind::Curl,
            &QiField::HCurl {
                f: &|p| (q.grad)(p),
                curl: &|_| Vec3::zeros(),
            },
        )
        .map_err(|e| e.to_string())?;
        let mut d = lhs.clone();
        d.data -= &rhs.data;
        push(
            "cochain_grad".into(),
            component_norm(&core, &d, NormScope::Global)
                / component_norm(&core, &rhs, NormScope::Global).max(1e-300),
            Some(1e-8),
        );

        let qv = qi_ddr(
            &ctx,
            SpaceKind::Curl,
            &QiField::HCurl {
                f: &|p| (v.f)(p),
                curl: &|p| (v.curl)(p),
            },
        )
        .map_err(|e| e.to_string())?;
        let lhs = bundle.apply_uc(&qv);
        let rhs = qi_ddr(
            &ctx,
            SpaceKind::Div,
            &QiField::HDiv {
                f: &|p| (v.curl)(p),
                div: &|_| 0.0,
            },
        )
        .map_err(|e| e.to_string())?;
        let mut d = lhs.clone();
        d.data -= &rhs.data;
        push(
            "cochain_curl".into(),
            component_norm(&core, &d, NormScope::Global)
                / component_norm(&core, &rhs, NormScope::Global).max(1e-300),
            Some(1e-8),
        );

        let qw = qi_ddr(
            &ctx,
            SpaceKind::Div,
            &QiField::HDiv {
                f: &|p| (w.f)(p),
                div: &|p| (w.div)(p),
            },
        )
        .map_err(|e| e.to_string())?;
        let lhs = bundle.apply_div(&qw);
        let nk = ddr_core::poly::dim_p3(k);
        let mut rhs = vec![0.0; bundle.broken_pk_dim()];
        for c in 0..mesh.n_cells() {
            let proj =
                ddr_core::poly::project::project_scalar(&cache.cells[c], k, |p| (w.div)(p));
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
        let den: f64 = rhs.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        push("cochain_div".into(), num / den, Some(1e-8));

        // FE-input projection property.
        let vfe = qi_fe(
            &ctx,
            FeFamily::Nedelec,
            &QiField::HCurl {
                f: &|p| (v.f)(p),
                curl: &|p| (v.curl)(p),
            },
        )
        .map_err(|e| e.to_string())?;
        let again = qi_fe(&ctx, FeFamily::Nedelec, &QiField::Fe(&vfe)).map_err(|e| e.to_string())?;
        push(
            "fe_projection".into(),
            (&again.coeffs - &vfe.coeffs).norm() / vfe.coeffs.norm().max(1e-300),
            Some(1e-10),
        );

        // Boundedness: |||qi z||| / (||z|| + h ||dz||) over the three spaces.
        let norms_scalar = field_norms_scalar(&core, &q);
        push(
            "qi_bound_grad".into(),
            component_norm(&core, &qg, NormScope::Global)
                / (norms_scalar.0 + h * norms_scalar.1),
            None,
        );
        let (nv, ndv) = field_norms_vec(&core, &|p| (v.f)(p), &|p| (v.curl)(p).norm());
        push(
            "qi_bound_curl".into(),
            component_norm(&core, &qv, NormScope::Global) / (nv + h * ndv),
            None,
        );
        let (nw, ndw) = field_norms_vec(&core, &|p| (w.f)(p), &|p| (w.div)(p).abs());
        push(
            "qi_bound_div".into(),
            component_norm(&core, &qw, NormScope::Global) / (nw + h * ndw),
            None,
        );

        // Lifting left-inverse and boundedness (requires ell = k+3).
        if ell >= k + 3 {
            let mask = BoundaryMask::build(&core, SpaceKind::Curl);
            let use_mask = config.gamma.has_bc();
            let mut worst_li: f64 = 0.0;
            let mut lift_ratio: f64 = 0.0;
            let mut lift_curl_ratio: f64 = 0.0;
            let mut count = 0;
            for s in 0..10u64 {
                let vh = if use_mask {
                    random_dofs(&core, SpaceKind::Curl, config.seed + s, Some(&mask))
                } else {
                    random_dofs(&core, SpaceKind::Curl, config.seed + s, None)
                };
                let tn = component_norm(&core, &vh, NormScope::Global);
                if tn < 1e-12 {
                    continue;
                }
                count += 1;
                let lifted = lifting_curl(&ctx, &bundle, &vh).map_err(|e| e.to_string())?;
                let back =
                    qi_ddr(&ctx, SpaceKind::Curl, &QiField::Fe(&lifted)).map_err(|e| e.to_string())?;
                let mut d = back.clone();
                d.data -= &vh.data;
                worst_li = worst_li.max(component_norm(&core, &d, NormScope::Global) / tn);
                lift_ratio = lift_ratio.max(lifted.coeffs.norm() / tn);
                let curl_l = apply_fe_differential(&ctx.ne, &ctx.rt, &lifted);
                let ucv = bundle.apply_uc(&vh);
                let ucn = component_norm(&core, &ucv, NormScope::Global);
                if ucn > 1e-12 {
                    lift_curl_ratio = lift_curl_ratio.max(curl_l.coeffs.norm() / ucn);
                }
            }
            if count > 0 {
                push("lift_left_inverse".into(), worst_li, Some(1e-8));
                push("lift_bound_l2".into(), lift_ratio, None);
                push("lift_bound_curl".into(), lift_curl_ratio, None);
            }
        }

        // The canonical interpolation of qi must reproduce conforming FE
        // reinterpolation (double application is idempotent): covered by
        // fe_projection above.
        let _ = ddr_interpolate_fe; // re-exported path used elsewhere
    }
    Ok(report)
}

fn field_norms_scalar(core: &DdrCore, q: &fields::ScalarField) -> (f64, f64) {
    let mut n2 = 0.0;
    let mut d2 = 0.0;
    for c in 0..core.mesh.n_cells() {
        let data = &core.cache.cells[c];
        for (i, w) in data.rule.weights.iter().enumerate() {
            let p = &data.rule.points[i];
            n2 += w * (q.f)(p) * (q.f)(p);
            d2 += w * (q.grad)(p).norm_squared();
        }
    }
    (n2.sqrt(), d2.sqrt())
}

fn field_norms_vec(
    core: &DdrCore,
    f: &dyn Fn(&ddr_core::Pt3) -> Vec3,
    dnorm: &dyn Fn(&ddr_core::Pt3) -> f64,
) -> (f64, f64) {
    let mut n2 = 0.0;
    let mut d2 = 0.0;
    for c in 0..core.mesh.n_cells() {
        let data = &core.cache.cells[c];
        for (i, w) in data.rule.weights.iter().enumerate() {
            let p = &data.rule.points[i];
            n2 += w * f(p).norm_squared();
            let dn = dnorm(p);
            d2 += w * dn * dn;
        }
    }
    (n2.sqrt(), d2.sqrt())
}
