//! The constrained-minimization quasi-interpolators.

use super::{QiError, QuasiInterpolatorConfig};
use crate::dofs::{DdrCore, DofVector};
use crate::fe::{ddr_interpolate_fe, ConformingSpace, FeFamily, FeField};
use crate::linalg::{ConstrainedLs, CscMatrix, Triplets};
use crate::poly;
use crate::{Pt3, Vec3};
use nalgebra::DVector;
use std::cell::OnceCell;

/// Field input for a quasi-interpolation: an analytic field with its relevant
/// differential, or an already-conforming FE field.
pub enum QiField<'a> {
    /// Scalar with gradient (Lagrange chain input).
    Scalar {
        f: &'a dyn Fn(&Pt3) -> f64,
        grad: &'a dyn Fn(&Pt3) -> Vec3,
    },
    /// Vector with curl (Nédélec chain input).
    HCurl {
        f: &'a dyn Fn(&Pt3) -> Vec3,
        curl: &'a dyn Fn(&Pt3) -> Vec3,
    },
    /// Vector with divergence (Raviart-Thomas input).
    HDiv {
        f: &'a dyn Fn(&Pt3) -> Vec3,
        div: &'a dyn Fn(&Pt3) -> f64,
    },
    /// Conforming FE coefficients in the context's matching space.
    Fe(&'a FeField),
}

/// Prepared spaces and factored KKT systems for one (mesh, config) pair.
pub struct QuasiContext<'m> {
    pub core: &'m DdrCore<'m>,
    pub config: QuasiInterpolatorConfig,
    pub lag: ConformingSpace<'m>,
    pub ne: ConformingSpace<'m>,
    pub rt: ConformingSpace<'m>,
    /// Whether gamma covers the whole boundary (divergence image loses the
    /// mean in that case).
    gamma_is_full_boundary: bool,
    rt_solver: OnceCell<(ConstrainedLs, usize)>,
    ne_solver: OnceCell<(ConstrainedLs, usize)>,
    lag_solver: OnceCell<(ConstrainedLs, usize)>,
}

impl<'m> QuasiContext<'m> {
    pub fn new(core: &'m DdrCore<'m>, config: QuasiInterpolatorConfig) -> Result<Self, QiError> {
        let mesh = core.mesh;
        let cache = core.cache;
        let bc = config.with_gamma_bc;
        let lag = ConformingSpace::build(mesh, cache, FeFamily::Lagrange, config.ell, bc)?;
        let ne = ConformingSpace::build(mesh, cache, FeFamily::Nedelec, config.ell, bc)?;
        let rt = ConformingSpace::build(mesh, cache, FeFamily::RaviartThomas, config.ell, bc)?;
        let gamma_is_full_boundary =
            mesh.boundary_faces().all(|f| mesh.gamma[f]) && bc;
        Ok(Self {
            core,
            config,
            lag,
            ne,
            rt,
            gamma_is_full_boundary,
            rt_solver: OnceCell::new(),
            ne_solver: OnceCell::new(),
            lag_solver: OnceCell::new(),
        })
    }

    fn identity_gram(n: usize) -> CscMatrix {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 1.0);
        }
        t.to_csc()
    }

    /// RT solver: conformity/gamma rows plus divergence rows (tested against
    /// broken P^{ell-1} per simplex).
    fn rt_solver(&self) -> Result<&(ConstrainedLs, usize), QiError> {
        if let Some(v) = self.rt_solver.get() {
            return Ok(v);
        }
        let mesh = self.core.mesh;
        let nb = self.rt.dim_broken();
        let n_div = poly::dim_p3(self.config.ell - 1);
        let n_conf = self.rt.constraints.nrows;
        let mut trip = Triplets::new(n_conf + mesh.submesh.simplices.len() * n_div, nb);
        copy_rows(&mut trip, &self.rt.constraints, 0);
        for s in 0..mesh.submesh.simplices.len() {
            let vb = match &self.rt.bases[s] {
                crate::fe::SimplexBasis::Vector(vb) => vb,
                _ => unreachable!(),
            };
            let sb = &self.core.cache.simplices[s].onb;
            for j in 0..vb.dim() {
                let comps = vb.coef.column(j).into_owned();
                let d = poly::divergence(sb, &comps, 3);
                for i in 0..n_div {
                    if d[i] != 0.0 {
                        trip.push(n_conf + s * n_div + i, s * self.rt.per_simplex + j, d[i]);
                    }
                }
            }
        }
        let solver = ConstrainedLs::new(&Self::identity_gram(nb), &trip.to_csc())?;
        let _ = self.rt_solver.set((solver, n_conf));
        Ok(self.rt_solver.get().unwrap())
    }

    /// NE solver: conformity/gamma rows plus curl rows (tested against the
    /// broken RT^ell bases).
    fn ne_solver(&self) -> Result<&(ConstrainedLs, usize), QiError> {
        if let Some(v) = self.ne_solver.get() {
            return Ok(v);
        }
        let mesh = self.core.mesh;
        let nb = self.ne.dim_broken();
        let n_curl = self.rt.per_simplex;
        let n_conf = self.ne.constraints.nrows;
        let mut trip = Triplets::new(n_conf + mesh.submesh.simplices.len() * n_curl, nb);
        copy_rows(&mut trip, &self.ne.constraints, 0);
        for s in 0..mesh.submesh.simplices.len() {
            let vb_ne = match &self.ne.bases[s] {
                crate::fe::SimplexBasis::Vector(vb) => vb,
                _ => unreachable!(),
            };
            let vb_rt = match &self.rt.bases[s] {
                crate::fe::SimplexBasis::Vector(vb) => vb,
                _ => unreachable!(),
            };
            let sb = &self.core.cache.simplices[s].onb;
            for j in 0..vb_ne.dim() {
                let comps = vb_ne.expand(&unit(vb_ne.dim(), j));
                let c = poly::curl_3d(sb, &comps);
                let proj = vb_rt.project_from_components(&c);
                for i in 0..n_curl {
                    if proj[i] != 0.0 {
                        trip.push(n_conf + s * n_curl + i, s * self.ne.per_simplex + j, proj[i]);
                    }
                }
            }
        }
        let solver = ConstrainedLs::new(&Self::identity_gram(nb), &trip.to_csc())?;
        let _ = self.ne_solver.set((solver, n_conf));
        Ok(self.ne_solver.get().unwrap())
    }

    /// Lagrange solver: conformity/gamma rows plus gradient rows (tested
    /// against the broken NE^ell bases) plus a mean row when no gamma.
    fn lag_solver(&self) -> Result<&(ConstrainedLs, usize), QiError> {
        if let Some(v) = self.lag_solver.get() {
            return Ok(v);
        }
        let mesh = self.core.mesh;
        let nb = self.lag.dim_broken();
        let n_grad = self.ne.per_simplex;
        let n_conf = self.lag.constraints.nrows;
        let needs_mean = !self.config.with_gamma_bc || !mesh.gamma.iter().any(|&g| g);
        let n_rows = n_conf + mesh.submesh.simplices.len() * n_grad + usize::from(needs_mean);
        let mut trip = Triplets::new(n_rows, nb);
        copy_rows(&mut trip, &self.lag.constraints, 0);
        for s in 0..mesh.submesh.simplices.len() {
            let vb_ne = match &self.ne.bases[s] {
                crate::fe::SimplexBasis::Vector(vb) => vb,
                _ => unreachable!(),
            };
            let sb = &self.core.cache.simplices[s].onb;
            let n_sc = poly::dim_p3(self.config.ell);
            for j in 0..n_sc {
                let mut full = DVector::zeros(sb.dim_total());
                full[j] = 1.0;
                let g = poly::gradient(sb, &full, 3);
                let proj = vb_ne.project_from_components(&g);
                for i in 0..n_grad {
                    if proj[i] != 0.0 {
                        trip.push(n_conf + s * n_grad + i, s * self.lag.per_simplex + j, proj[i]);
                    }
                }
            }
        }
        if needs_mean {
            let row = n_rows - 1;
            for s in 0..mesh.submesh.simplices.len() {
                let data = &self.core.cache.simplices[s];
                // Integral of each ONB function over the simplex.
                for j in 0..poly::dim_p3(self.config.ell) {
                    let mut v = 0.0;
                    for (q, w) in data.rule.weights.iter().enumerate() {
                        v += w * data.tab[(j, q)];
                    }
                    if v != 0.0 {
                        trip.push(row, s * self.lag.per_simplex + j, v);
                    }
                }
            }
        }
        let solver = ConstrainedLs::new(&Self::identity_gram(nb), &trip.to_csc())?;
        let _ = self.lag_solver.set((solver, n_conf));
        Ok(self.lag_solver.get().unwrap())
    }
}

fn unit(n: usize, j: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[j] = 1.0;
    v
}

fn copy_rows(trip: &mut Triplets, m: &CscMatrix, row_offset: usize) {
    for j in 0..m.ncols {
        for (i, v) in m.col(j) {
            trip.push(row_offset + i, j, v);
        }
    }
}

/// Copy a constraint matrix into a growing triplet accumulator (row 0 offset).
pub(crate) fn copy_constraint_rows(trip: &mut Triplets, m: &CscMatrix) {
    copy_rows(trip, m, 0);
}

/// Quasi-interpolation onto the conforming FE space of `family`.
pub fn qi_fe(
    ctx: &QuasiContext,
    family: FeFamily,
    input: &QiField,
) -> Result<FeField, QiError> {
    match family {
        FeFamily::RaviartThomas => qi_rt(ctx, input),
        FeFamily::Nedelec => qi_ne(ctx, input),
        FeFamily::Lagrange => qi_lag(ctx, input),
        FeFamily::BrokenScalar => panic!("no quasi-interpolator on the broken end space"),
    }
}

fn feasibility_check(
    sol: &crate::linalg::KktSolution,
    scale: f64,
    tol: f64,
) -> Result<(), QiError> {
    let gap = sol.constraint_residual / scale.max(1e-300);
    if gap > tol {
        return Err(QiError::Infeasible { gap, tol });
    }
    Ok(())
}

fn qi_rt(ctx: &QuasiContext, input: &QiField) -> Result<FeField, QiError> {
    let mesh = ctx.core.mesh;
    let (solver, n_conf) = ctx.rt_solver()?;
    let n_div = poly::dim_p3(ctx.config.ell - 1);

    // Broken projection of the field (the minimization datum).
    let (b, div_data) = match input {
        QiField::HDiv { f, div } => {
            let b = ctx.rt.project_broken(None, Some(*f));
            // Divergence datum: elementwise projection of div f.
            let mut d = vec![0.0; mesh.submesh.simplices.len() * n_div];
            let mut total_div = 0.0;
            for s in 0..mesh.submesh.simplices.len() {
                let data = &ctx.core.cache.simplices[s];
                for (q, w) in data.rule.weights.iter().enumerate() {
                    let g = div(&data.rule.points[q]);
                    total_div += w * g;
                    for i in 0..n_div {
                        d[s * n_div + i] += w * g * data.tab[(i, q)];
                    }
                }
            }
            mean_correct(ctx, &mut d, total_div, n_div);
            (b, d)
        }
        QiField::Fe(w) => {
            // div of the broken field, elementwise.
            let mut d = vec![0.0; mesh.submesh.simplices.len() * n_div];
            let mut total_div = 0.0;
            for s in 0..mesh.submesh.simplices.len() {
                let vb = match &ctx.rt.bases[s] {
                    crate::fe::SimplexBasis::Vector(vb) => vb,
                    _ => unreachable!(),
                };
                let sb = &ctx.core.cache.simplices[s].onb;
                let local = w.coeffs.rows(s * ctx.rt.per_simplex, ctx.rt.per_simplex);
                let comps = vb.expand(&local.into_owned());
                let dv = poly::divergence(sb, &comps, 3);
                for i in 0..n_div {
                    d[s * n_div + i] = dv[i];
                }
                // Mean: integral of the divergence = sqrt(|S|) * coef_0-ish;
                // use the ONB constant value.
                let data = &ctx.core.cache.simplices[s];
                for (q, wq) in data.rule.weights.iter().enumerate() {
                    let mut val = 0.0;
                    for i in 0..dv.len() {
                        val += dv[i] * data.tab[(i, q)];
                    }
                    total_div += wq * val;
                }
            }
            mean_correct(ctx, &mut d, total_div, n_div);
            (w.coeffs.clone(), d)
        }
        _ => panic!("RT quasi-interpolation needs an H(div) input"),
    };

    let mut rhs = vec![0.0; solver.n_constraints()];
    rhs[*n_conf..].copy_from_slice(&div_data);
    let sol = solver.solve(b.as_slice(), &rhs);
    let scale = b.norm() + div_data.iter().map(|x| x * x).sum::<f64>().sqrt();
    feasibility_check(&sol, scale, ctx.config.solver_tol)?;
    Ok(FeField {
        coeffs: DVector::from_vec(sol.x),
    })
}

/// Remove the global mean from the divergence datum when gamma covers the
/// whole boundary (div RT_Gamma is the mean-zero subspace there).
fn mean_correct(ctx: &QuasiContext, d: &mut [f64], total: f64, n_div: usize) {
    if !ctx.gamma_is_full_boundary {
        return;
    }
    let volume = ctx.core.mesh.volume();
    let mean = total / volume;
    for s in 0..ctx.core.mesh.submesh.simplices.len() {
        let data = &ctx.core.cache.simplices[s];
        for i in 0..n_div {
            let mut int_phi = 0.0;
            for (q, w) in data.rule.weights.iter().enumerate() {
                int_phi += w * data.tab[(i, q)];
            }
            d[s * n_div + i] -= mean * int_phi;
        }
    }
}

fn qi_ne(ctx: &QuasiContext, input: &QiField) -> Result<FeField, QiError> {
    let (solver, n_conf) = ctx.ne_solver()?;

    let (b, curl_target) = match input {
        QiField::HCurl { f, curl } => {
            let b = ctx.ne.project_broken(None, Some(*f));
            let zero = |_: &Pt3| 0.0;
            let w_star = qi_rt(
                ctx,
                &QiField::HDiv {
                    f: *curl,
                    div: &zero,
                },
            )?;
            (b, w_star.coeffs)
        }
        QiField::Fe(v) => {
            let cv = crate::fe::apply_fe_differential(&ctx.ne, &ctx.rt, v);
            let w_star = qi_rt(ctx, &QiField::Fe(&cv))?;
            (v.coeffs.clone(), w_star.coeffs)
        }
        _ => panic!("NE quasi-interpolation needs an H(curl) input"),
    };

    let mut rhs = vec![0.0; solver.n_constraints()];
    rhs[*n_conf..].copy_from_slice(curl_target.as_slice());
    let sol = solver.solve(b.as_slice(), &rhs);
    let scale = b.norm() + curl_target.norm();
    feasibility_check(&sol, scale, ctx.config.solver_tol)?;
    Ok(FeField {
        coeffs: DVector::from_vec(sol.x),
    })
}

fn qi_lag(ctx: &QuasiContext, input: &QiField) -> Result<FeField, QiError> {
    let mesh = ctx.core.mesh;
    let (solver, n_conf) = ctx.lag_solver()?;
    let needs_mean = solver.n_constraints()
        > *n_conf + mesh.submesh.simplices.len() * ctx.ne.per_simplex;

    let (b, grad_target, mean_target) = match input {
        QiField::Scalar { f, grad } => {
            let b = ctx.lag.project_broken(Some(*f), None);
            let zerov = |_: &Pt3| Vec3::zeros();
            let v_star = qi_ne(
                ctx,
                &QiField::HCurl {
                    f: *grad,
                    curl: &zerov,
                },
            )?;
            let mut mean = 0.0;
            for s in 0..mesh.submesh.simplices.len() {
                let data = &ctx.core.cache.simplices[s];
                mean += data.rule.integrate(|p| f(p));
            }
            (b, v_star.coeffs, mean)
        }
        QiField::Fe(q) => {
            let gq = crate::fe::apply_fe_differential(&ctx.lag, &ctx.ne, q);
            let v_star = qi_ne(ctx, &QiField::Fe(&gq))?;
            let mut mean = 0.0;
            for s in 0..mesh.submesh.simplices.len() {
                let data = &ctx.core.cache.simplices[s];
                let local = q.coeffs.rows(s * ctx.lag.per_simplex, ctx.lag.per_simplex);
                for (qq, w) in data.rule.weights.iter().enumerate() {
                    let mut val = 0.0;
                    for i in 0..local.len() {
                        val += local[i] * data.tab[(i, qq)];
                    }
                    mean += w * val;
                }
            }
            (q.coeffs.clone(), v_star.coeffs, mean)
        }
        _ => panic!("Lagrange quasi-interpolation needs a scalar input"),
    };

    let mut rhs = vec![0.0; solver.n_constraints()];
    let grad_rows = mesh.submesh.simplices.len() * ctx.ne.per_simplex;
    rhs[*n_conf..*n_conf + grad_rows].copy_from_slice(grad_target.as_slice());
    if needs_mean {
        rhs[solver.n_constraints() - 1] = mean_target;
    }
    let sol = solver.solve(b.as_slice(), &rhs);
    let scale = b.norm() + grad_target.norm() + mean_target.abs();
    feasibility_check(&sol, scale, ctx.config.solver_tol)?;
    Ok(FeField {
        coeffs: DVector::from_vec(sol.x),
    })
}

/// Composition with the canonical DDR interpolation (the bottom row of the
/// double diagram).
pub fn qi_ddr(
    ctx: &QuasiContext,
    space: crate::dofs::SpaceKind,
    input: &QiField,
) -> Result<DofVector, QiError> {
    let (family, cspace) = match space {
        crate::dofs::SpaceKind::Grad => (FeFamily::Lagrange, &ctx.lag),
        crate::dofs::SpaceKind::Curl => (FeFamily::Nedelec, &ctx.ne),
        crate::dofs::SpaceKind::Div => (FeFamily::RaviartThomas, &ctx.rt),
    };
    let fe = qi_fe(ctx, family, input)?;
    Ok(ddr_interpolate_fe(ctx.core, cspace, &fe)?)
}
