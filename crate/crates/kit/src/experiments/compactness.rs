//! Maxwell-compactness demonstrations: solve the discrete saddle problems on
//! a refinement family and record boundedness, stabilization decay and Cauchy
//! differences of the potential reconstructions between consecutive meshes.

use crate::config::{CompactnessSide, ExperimentConfig, MeshFamily};
use crate::fields;
use crate::report::{ExperimentReport, Row};
use ddr_core::dofs::{component_norm, BoundaryMask, DdrCore, DofVector, NormScope, SpaceKind};
use ddr_core::linalg::{SymSaddle, Triplets};
use ddr_core::ops::{self, assemble_discrete_operators, OperatorBundle, PhysicalParameter};
use ddr_core::poly::{BasisCache, CacheSpec};
use ddr_core::{Pt3, Vec3};

pub fn run_compactness(config: &ExperimentConfig) -> Result<ExperimentReport, String> {
    let mut report = ExperimentReport::default();
    for win in config.n_list.windows(2) {
        let (n1, n2) = (win[0], win[1]);
        run_pair(config, n1, Some(n2), &mut report)?;
    }
    // The coarsest mesh contributes its own row (run once alone).
    if let Some(&n0) = config.n_list.first() {
        run_pair(config, n0, None, &mut report)?;
    }
    report.rows.sort_by_key(|r| (r.n, r.metric.clone()));
    report.rows.dedup_by(|a, b| {
        a.n == b.n && a.metric == b.metric && (a.value - b.value).abs() <= 1e-12 * a.value.abs()
    });
    Ok(report)
}

fn run_pair(
    config: &ExperimentConfig,
    n1: usize,
    n2: Option<usize>,
    report: &mut ExperimentReport,
) -> Result<(), String> {
    let k = config.k;
    let mu = config.mu.build();

    let mesh1 = config.mesh_for(n1).map_err(|e| e.to_string())?;
    let cache1 =
        BasisCache::build(&mesh1, CacheSpec::for_degrees(k, k + 1)).map_err(|e| e.to_string())?;
    let core1 = DdrCore::new(&mesh1, &cache1, k).map_err(|e| e.to_string())?;
    let bundle1 = assemble_discrete_operators(&core1).map_err(|e| e.to_string())?;
    let sol1 = solve_side(config, &core1, &bundle1, &mu)?;
    push_rows(config, report, n1, &core1, &bundle1, &sol1);

    if let Some(n2) = n2 {
        let mesh2 = config.mesh_for(n2).map_err(|e| e.to_string())?;
        let cache2 = BasisCache::build(&mesh2, CacheSpec::for_degrees(k, k + 1))
            .map_err(|e| e.to_string())?;
        let core2 = DdrCore::new(&mesh2, &cache2, k).map_err(|e| e.to_string())?;
        let bundle2 = assemble_discrete_operators(&core2).map_err(|e| e.to_string())?;
        let sol2 = solve_side(config, &core2, &bundle2, &mu)?;
        push_rows(config, report, n2, &core2, &bundle2, &sol2);

        // Cauchy difference of the potentials, integrated on the finer mesh.
        if config.mesh.supports_nesting() {
            let diff = potential_cauchy_diff(
                config.mesh,
                n1,
                &bundle1,
                &sol1,
                n2,
                &core2,
                &bundle2,
                &sol2,
            );
            report.push(Row {
                experiment: experiment_name(config),
                k,
                ell: config.ell,
                mesh: config.mesh.name().into(),
                n: n2,
                h: core2.mesh.h_max(),
                metric: "cauchy_diff".into(),
                value: diff,
                rate: None,
                pass: None,
            });
        }
    }
    Ok(())
}

fn experiment_name(config: &ExperimentConfig) -> String {
    match config.side {
        CompactnessSide::Curl => "compactness-curl".into(),
        CompactnessSide::Div => "compactness-div".into(),
    }
}

fn push_rows(
    config: &ExperimentConfig,
    report: &mut ExperimentReport,
    n: usize,
    core: &DdrCore,
    bundle: &OperatorBundle,
    sol: &DofVector,
) {
    let h = core.mesh.h_max();
    let (bound, stab) = match config.side {
        CompactnessSide::Curl => {
            let ucv = bundle.apply_uc(sol);
            (
                component_norm(core, sol, NormScope::Global)
                    + component_norm(core, &ucv, NormScope::Global),
                ops::stabilization(bundle, sol, sol).max(0.0),
            )
        }
        CompactnessSide::Div => {
            let dv = bundle.apply_div(sol);
            (
                component_norm(core, sol, NormScope::Global)
                    + dv.iter().map(|x| x * x).sum::<f64>().sqrt(),
                ops::stabilization(bundle, sol, sol).max(0.0),
            )
        }
    };
    let mut push = |metric: &str, value: f64| {
        report.push(Row {
            experiment: experiment_name(config),
            k: config.k,
            ell: config.ell,
            mesh: config.mesh.name().into(),
            n,
            h,
            metric: metric.into(),
            value,
            rate: None,
            pass: None,
        });
    };
    push("compact_bound", bound);
    push("stabilization", stab);
}

/// Solve the saddle problem of the configured side; returns the primal field
/// (curl side: v in X_curl,Gamma; div side: w in X_div,Gamma).
fn solve_side(
    config: &ExperimentConfig,
    core: &DdrCore,
    bundle: &OperatorBundle,
    mu: &PhysicalParameter,
) -> Result<DofVector, String> {
    match config.side {
        CompactnessSide::Curl => solve_curl_side(config, core, bundle, mu),
        CompactnessSide::Div => solve_div_side(config, core, bundle, mu),
    }
}

/// Free (unmasked) dof indices of a space.
fn free_indices(core: &DdrCore, space: SpaceKind) -> Vec<usize> {
    let mask = BoundaryMask::build(core, space);
    (0..core.layout(space).total())
        .filter(|&i| !mask.zero[i])
        .collect()
}

fn source_vector(
    core: &DdrCore,
    bundle: &OperatorBundle,
    space: SpaceKind,
    f: &dyn Fn(&Pt3) -> Vec3,
) -> Vec<f64> {
    // r_i = int f . P e_i: assemble via per-cell potential matrices.
    let n = core.layout(space).total();
    let mut r = vec![0.0; n];
    for c in 0..core.mesh.n_cells() {
        let idx = ops::cell_indices(core, space, c);
        let data = &core.cache.cells[c];
        let nsc = data.onb.dim_total();
        let pot = match space {
            SpaceKind::Curl => &bundle.cells[c].pot_curl,
            SpaceKind::Div => &bundle.cells[c].pot_div,
            SpaceKind::Grad => unreachable!(),
        };
        // moments m = sum_q w f(x_q) phi(x_q) per component; r_local = pot^T m.
        let mut mom = nalgebra::DVector::zeros(3 * nsc);
        for (q, w) in data.rule.weights.iter().enumerate() {
            let fv = f(&data.rule.points[q]);
            for cmp in 0..3usize {
                for i in 0..nsc {
                    mom[cmp * nsc + i] += w * fv[cmp] * data.tab[(i, q)];
                }
            }
        }
        let local = pot.transpose() * mom;
        for (i, &g) in idx.iter().enumerate() {
            r[g] += local[i];
        }
    }
    r
}

fn solve_curl_side(
    config: &ExperimentConfig,
    core: &DdrCore,
    bundle: &OperatorBundle,
    mu: &PhysicalParameter,
) -> Result<DofVector, String> {
    let id = PhysicalParameter::identity();
    let m_div = ops::inner_product_matrix(bundle, SpaceKind::Div, &id).map_err(|e| e.to_string())?;
    let m_curl =
        ops::inner_product_matrix(bundle, SpaceKind::Curl, mu).map_err(|e| e.to_string())?;

    let curl_free = free_indices(core, SpaceKind::Curl);
    let grad_free = free_indices(core, SpaceKind::Grad);
    let nv = curl_free.len();
    let np = grad_free.len();

    // K = uC^T M_div uC on the free curl dofs (dense product via sparse ops).
    let f = fields::curl_source();
    let rhs_full = source_vector(core, bundle, SpaceKind::Curl, &|p| (f.f)(p));

    // Assemble the saddle in triplets: x = (v, p).
    let mut trip = Triplets::new(nv + np, nv + np);
    // A = uC^T M_div uC: compute column by column on free dofs.
    let n_curl = core.curl.total();
    let n_div = core.div.total();
    for (jc, &cj) in curl_free.iter().enumerate() {
        let mut e = vec![0.0; n_curl];
        e[cj] = 1.0;
        let mut uce = vec![0.0; n_div];
        bundle.uc.matvec_acc(&e, &mut uce, 1.0);
        let mut muce = vec![0.0; n_div];
        m_div.matvec_acc(&uce, &mut muce, 1.0);
        let mut col = vec![0.0; n_curl];
        bundle.uc.tr_matvec_acc(&muce, &mut col, 1.0);
        for (ic, &ci) in curl_free.iter().enumerate() {
            if ic <= jc && col[ci] != 0.0 {
                trip.push(ic, jc, col[ci]);
            }
        }
    }
    // B^T block: (y, uG p)_mu rows y, cols p: M_curl uG restricted.
    let n_grad = core.grad.total();
    for (jp, &pj) in grad_free.iter().enumerate() {
        let mut e = vec![0.0; n_grad];
        e[pj] = 1.0;
        let mut uge = vec![0.0; n_curl];
        bundle.ug.matvec_acc(&e, &mut uge, 1.0);
        let mut muge = vec![0.0; n_curl];
        m_curl.matvec_acc(&uge, &mut muge, 1.0);
        for (ic, &ci) in curl_free.iter().enumerate() {
            if muge[ci] != 0.0 {
                trip.push(ic, nv + jp, muge[ci]);
            }
        }
    }
    let mut dsigns = vec![1i8; nv + np];
    for s in dsigns.iter_mut().skip(nv) {
        *s = -1;
    }
    let solver = SymSaddle::new(&trip.to_csc(), &dsigns).map_err(|e| e.to_string())?;
    let mut rhs = vec![0.0; nv + np];
    for (ic, &ci) in curl_free.iter().enumerate() {
        rhs[ic] = rhs_full[ci];
    }
    let (x, res) = solver.solve(&rhs);
    let scale: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    if res > 1e-6 * scale {
        return Err(format!("singular curl-side saddle (residual {res:e})"));
    }
    let mut sol = DofVector::zeros(core, SpaceKind::Curl);
    for (ic, &ci) in curl_free.iter().enumerate() {
        sol.data[ci] = x[ic];
    }
    let _ = config;
    Ok(sol)
}

fn solve_div_side(
    config: &ExperimentConfig,
    core: &DdrCore,
    bundle: &OperatorBundle,
    mu: &PhysicalParameter,
) -> Result<DofVector, String> {
    let m_div = ops::inner_product_matrix(bundle, SpaceKind::Div, mu).map_err(|e| e.to_string())?;
    let m_curl =
        ops::inner_product_matrix(bundle, SpaceKind::Curl, mu).map_err(|e| e.to_string())?;

    let div_free = free_indices(core, SpaceKind::Div);
    let curl_free = free_indices(core, SpaceKind::Curl);
    let grad_free = free_indices(core, SpaceKind::Grad);
    let (nw, nc, np) = (div_free.len(), curl_free.len(), grad_free.len());

    let f = fields::grad_source();
    let rhs_full = source_vector(core, bundle, SpaceKind::Div, &|p| (f.f)(p));

    let n_div = core.div.total();
    let n_curl = core.curl.total();
    let n_grad = core.grad.total();
    let mut trip = Triplets::new(nw + nc + np, nw + nc + np);
    // A = dh^T dh (broken L2 product of D) on free div dofs.
    let nbrk = bundle.broken_pk_dim();
    for (jw, &wj) in div_free.iter().enumerate() {
        let mut e = vec![0.0; n_div];
        e[wj] = 1.0;
        let mut de = vec![0.0; nbrk];
        bundle.dh.matvec_acc(&e, &mut de, 1.0);
        let mut col = vec![0.0; n_div];
        bundle.dh.tr_matvec_acc(&de, &mut col, 1.0);
        for (iw, &wi) in div_free.iter().enumerate() {
            if iw <= jw && col[wi] != 0.0 {
                trip.push(iw, jw, col[wi]);
            }
        }
    }
    // C block: (y, uC c)_mu,div: rows w-free, cols c-free.
    for (jc, &cj) in curl_free.iter().enumerate() {
        let mut e = vec![0.0; n_curl];
        e[cj] = 1.0;
        let mut uce = vec![0.0; n_div];
        bundle.uc.matvec_acc(&e, &mut uce, 1.0);
        let mut muce = vec![0.0; n_div];
        m_div.matvec_acc(&uce, &mut muce, 1.0);
        for (iw, &wi) in div_free.iter().enumerate() {
            if muce[wi] != 0.0 {
                trip.push(iw, nw + jc, muce[wi]);
            }
        }
    }
    // G block: (c, uG p)_mu,curl: rows c-free, cols p-free.
    for (jp, &pj) in grad_free.iter().enumerate() {
        let mut e = vec![0.0; n_grad];
        e[pj] = 1.0;
        let mut uge = vec![0.0; n_curl];
        bundle.ug.matvec_acc(&e, &mut uge, 1.0);
        let mut muge = vec![0.0; n_curl];
        m_curl.matvec_acc(&uge, &mut muge, 1.0);
        for (ic, &ci) in curl_free.iter().enumerate() {
            if muge[ci] != 0.0 {
                trip.push(nw + ic, nw + nc + jp, muge[ci]);
            }
        }
    }
    let mut dsigns = vec![1i8; nw + nc + np];
    for s in dsigns.iter_mut().skip(nw).take(nc) {
        *s = -1;
    }
    let solver = SymSaddle::new(&trip.to_csc(), &dsigns).map_err(|e| e.to_string())?;
    let mut rhs = vec![0.0; nw + nc + np];
    for (iw, &wi) in div_free.iter().enumerate() {
        rhs[iw] = rhs_full[wi];
    }
    let (x, res) = solver.solve(&rhs);
    let scale: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    if res > 1e-6 * scale {
        return Err(format!("singular div-side saddle (residual {res:e})"));
    }
    let mut sol = DofVector::zeros(core, SpaceKind::Div);
    for (iw, &wi) in div_free.iter().enumerate() {
        sol.data[wi] = x[iw];
    }
    let _ = config;
    Ok(sol)
}

/// Analytic point location in the cube families: cube index plus the Kuhn
/// permutation of the fractional coordinates.
fn locate_cell(family: MeshFamily, n: usize, p: &Pt3) -> usize {
    let clampi = |x: f64| -> (usize, f64) {
        let scaled = x * n as f64;
        let idx = (scaled.floor() as isize).clamp(0, n as isize - 1) as usize;
        (idx, scaled - idx as f64)
    };
    let (ix, fx) = clampi(p.x);
    let (iy, fy) = clampi(p.y);
    let (iz, fz) = clampi(p.z);
    let cube = (iz * n + iy) * n + ix;
    match family {
        MeshFamily::Hex => cube,
        MeshFamily::Tet => {
            // Kuhn tet: permutation ordering the fractional coordinates
            // descending matches the construction chains.
            const PERMS: [[usize; 3]; 6] = [
                [0, 1, 2],
                [0, 2, 1],
                [1, 0, 2],
                [1, 2, 0],
                [2, 0, 1],
                [2, 1, 0],
            ];
            let f = [fx, fy, fz];
            let mut order = [0usize, 1, 2];
            order.sort_by(|&a, &b| f[b].partial_cmp(&f[a]).unwrap());
            let perm_index = PERMS.iter().position(|p| *p == order).unwrap();
            cube * 6 + perm_index
        }
        MeshFamily::Agglo => unreachable!("agglomerated family is not nested"),
    }
}

/// || P z1 - P z2 ||_{L2} with z1 on the coarser mesh, integrated on the
/// finer mesh's quadrature.
#[allow(clippy::too_many_arguments)]
fn potential_cauchy_diff(
    family: MeshFamily,
    n1: usize,
    bundle1: &OperatorBundle,
    sol1: &DofVector,
    _n2: usize,
    core2: &DdrCore,
    bundle2: &OperatorBundle,
    sol2: &DofVector,
) -> f64 {
    let mut total = 0.0;
    for c2 in 0..core2.mesh.n_cells() {
        let data = &core2.cache.cells[c2];
        let fine_vals = ops::potential_values_at(bundle2, sol2, c2, &data.rule.points);
        for (q, w) in data.rule.weights.iter().enumerate() {
            let p = &data.rule.points[q];
            let c1 = locate_cell(family, n1, p);
            let coarse = ops::potential_values_at(bundle1, sol1, c1, &[*p]);
            total += w * (fine_vals[q] - coarse[0]).norm_squared();
        }
    }
    total.max(0.0).sqrt()
}
