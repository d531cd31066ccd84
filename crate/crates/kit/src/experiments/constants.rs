//! Sampled discrete constants: the boundary trace inequalities, the
//! stabilization bound from the discrete Rellich proof, the norm-equivalence
//! brackets, and (optionally) the discrete Poincaré constant.

use super::{maxf, minf};
use crate::config::{ExperimentConfig, GammaSpec};
use crate::report::{ExperimentReport, Row};
use ddr_core::dofs::{
    component_norm, interpolate_grad, norm_weights, random_dofs, BoundaryMask, DdrCore,
    NormScope, SpaceKind,
};
use ddr_core::ops::{self, assemble_discrete_operators};
use ddr_core::poly::{BasisCache, CacheSpec};
use nalgebra::DMatrix;

pub fn run_constants(config: &ExperimentConfig) -> Result<ExperimentReport, String> {
    let mut report = ExperimentReport::default();
    let k = config.k;
    let mu = config.mu.build();
    let mu_scalar = config.mu.build_scalar();
    for &n in &config.n_list {
        let mesh = config.mesh_for(n).map_err(|e| e.to_string())?;
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(k, k + 1))
            .map_err(|e| e.to_string())?;
        let core = DdrCore::new(&mesh, &cache, k).map_err(|e| e.to_string())?;
        let bundle = assemble_discrete_operators(&core).map_err(|e| e.to_string())?;
        let h = mesh.h_max();
        let gmask = BoundaryMask::build(&core, SpaceKind::Grad);

        let mut trace_const: f64 = 0.0;
        let mut trace_comp_const: f64 = 0.0;
        let mut sgrad_ratio: f64 = 0.0;
        let boundary: Vec<usize> = mesh.boundary_faces().collect();
        // Supremum samplers need boundary-concentrated candidates as well:
        // uniformly random vectors dilute the boundary content as interior
        // dofs dominate under refinement.
        let boundary_support = {
            let mut keep = vec![false; core.grad.total()];
            let gv = mesh.gamma_vertices();
            let _ = gv;
            for &f in &boundary {
                for i in core.grad.face_range(f) {
                    keep[i] = true;
                }
                for &(e, _) in &mesh.faces[f].edges {
                    for i in core.grad.edge_range(e) {
                        keep[i] = true;
                    }
                }
                for &p in &mesh.faces[f].vloop {
                    if let Some(v) = mesh.point_vertex[p] {
                        keep[core.grad.vertex_index(v)] = true;
                    }
                }
            }
            keep
        };
        // Candidate set: interpolates of fixed smooth functions (these carry
        // the O(1) content that attains the trace constants; rough random
        // vectors have |||uG q||| ~ 1/h and vanishing ratios), plus random and
        // boundary-concentrated random vectors.
        let mut candidates: Vec<ddr_core::dofs::DofVector> = Vec::new();
        let smooth_fns: Vec<Box<dyn Fn(&ddr_core::Pt3) -> f64>> = vec![
            Box::new(|_| 1.0),
            Box::new(|p| p.x),
            Box::new(|p| p.x * p.x - p.y * p.z),
            Box::new(|p| (2.0 * p.x).cos() + p.y),
            Box::new(|p| (p.x + p.y + p.z).sin()),
            Box::new(|p| (3.0 * p.x).cos() * (2.0 * p.y).sin() + p.z * p.z),
            Box::new(|p| 1.0 / (1.0 + p.x + 0.5 * p.y)),
            Box::new(|p| (4.0 * (p.x - 0.3)).tanh()),
        ];
        for f in &smooth_fns {
            candidates.push(gmask.apply(&interpolate_grad(&core, f)));
        }
        for s in 0..50u64 {
            let mut q = random_dofs(&core, SpaceKind::Grad, config.seed + s, Some(&gmask));
            if s % 2 == 1 {
                for (i, &kb) in boundary_support.iter().enumerate() {
                    if !kb {
                        q.data[i] = 0.0;
                    }
                }
            }
            candidates.push(q);
        }
        for q in candidates {
            let qn = component_norm(&core, &q, NormScope::Global);
            if qn < 1e-12 {
                continue;
            }
            let ug = bundle.apply_ug(&q);
            let ugn = component_norm(&core, &ug, NormScope::Global);
            let graph2 = qn * qn + ugn * ugn;

            let mut tr2 = 0.0;
            let mut comp2 = 0.0;
            for &f in &boundary {
                tr2 += ops::face_trace_norm_sq(&bundle, &q, f);
                comp2 += component_norm(&core, &q, NormScope::Face(f)).powi(2);
            }
            trace_const = trace_const.max(tr2 / graph2);
            trace_comp_const = trace_comp_const.max(comp2 / graph2);

            let sg = ops::stabilization(&bundle, &q, &q).max(0.0);
            if ugn > 1e-12 {
                let r = sg / (h * h * ugn * ugn);
                if std::env::var("DDR_DEBUG_SG").is_ok() && r > 100.0 {
                    eprintln!(
                        "  suspicious sgrad ratio {r:e}: qn {qn:e} ugn {ugn:e} sg {sg:e}"
                    );
                }
                sgrad_ratio = sgrad_ratio.max(r);
            }
        }

        // Norm-equivalence brackets (|| . ||_{mu,.,h} / ||| . |||)^2.
        let mut equiv = Vec::new();
        for (space, label) in [
            (SpaceKind::Grad, "grad"),
            (SpaceKind::Curl, "curl"),
            (SpaceKind::Div, "div"),
        ] {
            let m = if space == SpaceKind::Grad {
                &mu_scalar
            } else {
                &mu
            };
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for s in 0..20u64 {
                let z = random_dofs(&core, space, config.seed + 500 + s, None);
                let tn = component_norm(&core, &z, NormScope::Global);
                if tn < 1e-12 {
                    continue;
                }
                let mn = ops::l2_norm(&bundle, &z, m).map_err(|e| e.to_string())?;
                let r = (mn / tn).powi(2);
                lo = lo.min(r);
                hi = hi.max(r);
            }
            equiv.push((label, lo, hi));
        }

        let mut push = |metric: String, value: f64| {
            report.push(Row {
                experiment: "constants".into(),
                k,
                ell: config.ell,
                mesh: config.mesh.name().into(),
                n,
                h,
                metric,
                value,
                rate: None,
                pass: None,
            });
        };
        push("trace_const".into(), trace_const);
        push("trace_comp_const".into(), trace_comp_const);
        push("sgrad_over_h2_ug".into(), sgrad_ratio);
        for (label, lo, hi) in equiv {
            push(format!("norm_equiv_min_{label}"), lo);
            push(format!("norm_equiv_max_{label}"), hi);
        }

        // Optional discrete Poincaré constant: smallest nonzero generalized
        // singular value of uC against the mu-weighted norm, at desk scale.
        if config.gamma == GammaSpec::None && n <= 3 && core.curl.total() <= 1500 {
            let d_div = norm_weights(&core, SpaceKind::Div);
            let nv = core.curl.total();
            let uc = bundle.uc.to_dense();
            let mut kmat = DMatrix::zeros(nv, nv);
            // K = uC^T diag(d_div) uC.
            for i in 0..uc.nrows() {
                let w = d_div[i];
                if w == 0.0 {
                    continue;
                }
                for a in 0..nv {
                    let ua = uc[(i, a)];
                    if ua == 0.0 {
                        continue;
                    }
                    for b in 0..nv {
                        kmat[(a, b)] += w * ua * uc[(i, b)];
                    }
                }
            }
            let mmat = ops::inner_product_matrix(&bundle, SpaceKind::Curl, &mu)
                .map_err(|e| e.to_string())?
                .to_dense();
            let chol = mmat.clone().cholesky().ok_or("mu Gram not SPD")?;
            let linv = chol
                .l()
                .solve_lower_triangular(&DMatrix::identity(nv, nv))
                .ok_or("triangular solve")?;
            let sym = &linv * &kmat * linv.transpose();
            let eig = sym.symmetric_eigen().eigenvalues;
            let lmax = eig.max();
            let mut nonzero: Vec<f64> = eig
                .iter()
                .cloned()
                .filter(|&l| l > 1e-10 * lmax)
                .collect();
            nonzero.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if let Some(&lmin) = nonzero.first() {
                push("poincare_constant".into(), 1.0 / lmin.sqrt());
            }
        }
    }
    let _ = (maxf(&[]), minf(&[]));
    Ok(report)
}
