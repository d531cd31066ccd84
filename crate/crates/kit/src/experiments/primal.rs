//! Primal consistency rates of the quasi-interpolators: potential error,
//! stabilization seminorm and inner-product consistency on smooth fields.

use super::{potential_l2_error_scalar, potential_l2_error_vec};
use crate::config::ExperimentConfig;
use crate::fields;
use crate::report::{ExperimentReport, Row};
use ddr_core::dofs::{DdrCore, SpaceKind};
use ddr_core::ops::{self, assemble_discrete_operators};
use ddr_core::poly::{BasisCache, CacheSpec};
use ddr_core::quasi::{qi_ddr, QiField, QuasiContext, QuasiInterpolatorConfig};

pub fn run_rates_primal(config: &ExperimentConfig) -> Result<ExperimentReport, String> {
    let mut report = ExperimentReport::default();
    let k = config.k;
    let ell = config.ell.max(k + 1);
    let q = fields::scalar_bubble();
    let v = fields::vector_tangential_bubble();
    let w = fields::vector_normal_bubble();
    let mu = config.mu.build();
    let mu_scalar = config.mu.build_scalar();

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
        let mut row = |metric: String, value: f64| {
            report.push(Row {
                experiment: "rates-primal".into(),
                k,
                ell,
                mesh: config.mesh.name().into(),
                n,
                h,
                metric,
                value,
                rate: None,
                pass: None,
            });
        };

        // --- grad space ---
        let qig = qi_ddr(
            &ctx,
            SpaceKind::Grad,
            &QiField::Scalar {
                f: &|p| (q.f)(p),
                grad: &|p| (q.grad)(p),
            },
        )
        .map_err(|e| e.to_string())?;
        row(
            "err_grad".into(),
            potential_l2_error_scalar(&bundle, &qig, &|p| (q.f)(p)),
        );
        row(
            "stab_grad".into(),
            ops::stabilization_norm(&bundle, &qig),
        );
        row(
            "inner_grad".into(),
            inner_consistency_scalar(&core, &bundle, &qig, &|p| (q.f)(p), &mu_scalar, config.seed),
        );

        // --- curl space ---
        let qic = qi_ddr(
            &ctx,
            SpaceKind::Curl,
            &QiField::HCurl {
                f: &|p| (v.f)(p),
                curl: &|p| (v.curl)(p),
            },
        )
        .map_err(|e| e.to_string())?;
        row(
            "err_curl".into(),
            potential_l2_error_vec(&bundle, &qic, &|p| (v.f)(p)),
        );
        row("stab_curl".into(), ops::stabilization_norm(&bundle, &qic));
        row(
            "inner_curl".into(),
            inner_consistency_vec(&core, &bundle, &qic, &|p| (v.f)(p), &mu, config.seed),
        );

        // --- div space ---
        let qid = qi_ddr(
            &ctx,
            SpaceKind::Div,
            &QiField::HDiv {
                f: &|p| (w.f)(p),
                div: &|p| (w.div)(p),
            },
        )
        .map_err(|e| e.to_string())?;
        row(
            "err_div".into(),
            potential_l2_error_vec(&bundle, &qid, &|p| (w.f)(p)),
        );
        row("stab_div".into(), ops::stabilization_norm(&bundle, &qid));
        row(
            "inner_div".into(),
            inner_consistency_vec(&core, &bundle, &qid, &|p| (w.f)(p), &mu, config.seed),
        );
    }

    // Rate gates: k_bullet + 1 - 0.25.
    let kg = (k + 2) as f64 - 0.25;
    let kc = (k + 1) as f64 - 0.25;
    let floor = 1e-12;
    report.fit_metric_rate("err_grad", Some(kg), floor);
    report.fit_metric_rate("stab_grad", Some(kg), floor);
    report.fit_metric_rate("inner_grad", Some(kg), floor);
    report.fit_metric_rate("err_curl", Some(kc), floor);
    report.fit_metric_rate("stab_curl", Some(kc), floor);
    report.fit_metric_rate("inner_curl", Some(kc), floor);
    report.fit_metric_rate("err_div", Some(kc), floor);
    report.fit_metric_rate("stab_div", Some(kc), floor);
    report.fit_metric_rate("inner_div", Some(kc), floor);
    Ok(report)
}

/// max over random unit-mu-norm y of |(qi z, y)_mu - int mu z . P y|.
fn inner_consistency_vec(
    core: &DdrCore,
    bundle: &ddr_core::ops::OperatorBundle,
    qiz: &ddr_core::dofs::DofVector,
    z: &dyn Fn(&ddr_core::Pt3) -> ddr_core::Vec3,
    mu: &ops::PhysicalParameter,
    seed: u64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for s in 0..5u64 {
        let mut y = ddr_core::dofs::random_dofs(core, qiz.space, seed + 1000 + s, None);
        let nrm = ops::l2_norm(bundle, &y, mu).unwrap();
        if nrm < 1e-300 {
            continue;
        }
        y.data /= nrm;
        let ip = ops::inner_product(bundle, qiz, &y, mu).unwrap();
        // int mu z . P y via cell quadrature.
        let mut exact = 0.0;
        for c in 0..core.mesh.n_cells() {
            let data = &core.cache.cells[c];
            let vals = ops::potential_values_at(bundle, &y, c, &data.rule.points);
            for (q, w) in data.rule.weights.iter().enumerate() {
                let m = mu.matrix_at(&data.rule.points[q]);
                exact += w * (m * z(&data.rule.points[q])).dot(&vals[q]);
            }
        }
        worst = worst.max((ip - exact).abs());
    }
    worst
}

fn inner_consistency_scalar(
    core: &DdrCore,
    bundle: &ddr_core::ops::OperatorBundle,
    qiz: &ddr_core::dofs::DofVector,
    z: &dyn Fn(&ddr_core::Pt3) -> f64,
    mu: &ops::PhysicalParameter,
    seed: u64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for s in 0..5u64 {
        let mut y = ddr_core::dofs::random_dofs(core, SpaceKind::Grad, seed + 2000 + s, None);
        let nrm = ops::l2_norm(bundle, &y, mu).unwrap();
        if nrm < 1e-300 {
            continue;
        }
        y.data /= nrm;
        let ip = ops::inner_product(bundle, qiz, &y, mu).unwrap();
        let mut exact = 0.0;
        for c in 0..core.mesh.n_cells() {
            let data = &core.cache.cells[c];
            let vals = ops::potential_values_at(bundle, &y, c, &data.rule.points);
            for (q, w) in data.rule.weights.iter().enumerate() {
                let m = mu.scalar_at(&data.rule.points[q]).unwrap();
                exact += w * m * z(&data.rule.points[q]) * vals[q].x;
            }
        }
        worst = worst.max((ip - exact).abs());
    }
    worst
}
