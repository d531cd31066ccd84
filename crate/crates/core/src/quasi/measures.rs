//! Approximation-measure evaluators: local/global best-approximation errors
//! by broken polynomials (Appr), by broken trimmed FE polynomials on the
//! polytopal mesh (Bppr), and boundary-trace measures on the faces outside
//! gamma (Tppr).

use crate::dofs::{DdrCore, SpaceKind};
use crate::mesh::polytopal_patch;
use crate::poly::{self, trimmed_space, Family};
use crate::{Pt3, Vec3};
use nalgebra::{DMatrix, DVector};

/// Generic field with the differential matching a DDR space.
pub enum MeasureField<'a> {
    Scalar {
        f: &'a dyn Fn(&Pt3) -> f64,
        grad: &'a dyn Fn(&Pt3) -> Vec3,
    },
    HCurl {
        f: &'a dyn Fn(&Pt3) -> Vec3,
        curl: &'a dyn Fn(&Pt3) -> Vec3,
    },
    HDiv {
        f: &'a dyn Fn(&Pt3) -> Vec3,
        div: &'a dyn Fn(&Pt3) -> f64,
    },
}

/// Local best-approximation error over the polytopal patch:
/// Appr^k_{.,T}(z)^2 = sum_{T' in patch(T)} ||z - lproj^{k_b} z||^2_{T'} +
/// h_T^2 ||(.z) - lproj^{k_b}(.z)||^2_{T'}.
pub fn appr_local(core: &DdrCore, space: SpaceKind, cell: usize, z: &MeasureField) -> f64 {
    let kb = space.k_bullet(core.k);
    let h_t = core.mesh.cells[cell].diameter;
    let patch = polytopal_patch(core.mesh, cell);
    let mut total = 0.0;
    for &tp in &patch.members {
        let data = &core.cache.cells[tp];
        match z {
            MeasureField::Scalar { f, grad } => {
                total += proj_defect_scalar(data, kb, f);
                total += h_t * h_t * proj_defect_vector(data, kb, grad);
            }
            MeasureField::HCurl { f, curl } => {
                total += proj_defect_vector(data, kb, f);
                total += h_t * h_t * proj_defect_vector(data, kb, curl);
            }
            MeasureField::HDiv { f, div } => {
                total += proj_defect_vector(data, kb, f);
                total += h_t * h_t * proj_defect_scalar(data, kb, div);
            }
        }
    }
    total.max(0.0).sqrt()
}

/// Global version: sum of squared local measures.
pub fn appr_global(core: &DdrCore, space: SpaceKind, z: &MeasureField) -> f64 {
    (0..core.mesh.n_cells())
        .map(|c| appr_local(core, space, c, z).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// ||f - lproj^deg f||^2 on the entity, evaluated pointwise to avoid the
/// catastrophic cancellation of norm^2 - |coef|^2.
fn proj_defect_scalar(
    data: &crate::poly::EntityData,
    deg: i64,
    f: &&dyn Fn(&Pt3) -> f64,
) -> f64 {
    let coef = crate::poly::project::project_scalar(data, deg, |p| f(p));
    let mut out = 0.0;
    for (q, p) in data.rule.points.iter().enumerate() {
        let mut proj = 0.0;
        for i in 0..coef.len() {
            proj += coef[i] * data.tab[(i, q)];
        }
        let d = f(p) - proj;
        out += data.rule.weights[q] * d * d;
    }
    out.max(0.0)
}

fn proj_defect_vector(
    data: &crate::poly::EntityData,
    deg: i64,
    f: &&dyn Fn(&Pt3) -> Vec3,
) -> f64 {
    let nsc = crate::poly::prefix_dim(&data.onb, deg);
    let n = data.onb.dim_total();
    let full = crate::poly::project::project_vector_components(data, deg, |p| f(p));
    let mut out = 0.0;
    for (q, p) in data.rule.points.iter().enumerate() {
        let mut proj = Vec3::zeros();
        for (c, axis) in data.axes.iter().enumerate() {
            let mut sc = 0.0;
            for i in 0..nsc {
                sc += full[c * n + i] * data.tab[(i, q)];
            }
            proj += sc * axis;
        }
        out += data.rule.weights[q] * (f(p) - proj).norm_squared();
    }
    out.max(0.0)
}

/// Global best approximation by broken FE polynomials on the polytopal mesh:
/// gradient seminorm for the grad space, combined L2 + differential norm for
/// the curl/div spaces at trimmed degree k+1.
pub fn bppr(core: &DdrCore, space: SpaceKind, z: &MeasureField) -> f64 {
    let k = core.k;
    let mut total = 0.0;
    for c in 0..core.mesh.n_cells() {
        let data = &core.cache.cells[c];
        let sb = &data.onb;
        match (space, z) {
            (SpaceKind::Grad, MeasureField::Scalar { grad, .. }) => {
                // min over q_T in P^{k+1} of ||grad(q - q_T)||^2: project the
                // gradient onto grad P^{k+1}(T).
                let nk1 = poly::dim_p3(k + 1);
                let mut cols: Vec<DVector<f64>> = Vec::new();
                for i in 1..nk1 {
                    let mut u = DVector::zeros(sb.dim_total());
                    u[i] = 1.0;
                    cols.push(poly::gradient(sb, &u, 3));
                }
                total += ls_defect_vector(data, &cols, None, grad, None);
            }
            (SpaceKind::Curl, MeasureField::HCurl { f, curl }) => {
                let ne = trimmed_space(Family::Ne, k + 1, sb).expect("NE basis");
                let cols: Vec<DVector<f64>> =
                    (0..ne.dim()).map(|j| ne.coef.column(j).into_owned()).collect();
                let dcols: Vec<DVector<f64>> = cols
                    .iter()
                    .map(|v| poly::curl_3d(sb, v))
                    .collect();
                total += ls_defect_vector(data, &cols, Some(&dcols), f, Some(curl));
            }
            (SpaceKind::Div, MeasureField::HDiv { f, div }) => {
                let rt = trimmed_space(Family::Rt, k + 1, sb).expect("RT basis");
                let cols: Vec<DVector<f64>> =
                    (0..rt.dim()).map(|j| rt.coef.column(j).into_owned()).collect();
                let dscal: Vec<DVector<f64>> = cols
                    .iter()
                    .map(|v| poly::divergence(sb, v, 3))
                    .collect();
                total += ls_defect_mixed(data, &cols, &dscal, f, div);
            }
            _ => panic!("field kind does not match the space"),
        }
    }
    total.max(0.0).sqrt()
}

/// min over span(cols) of ||f - v||^2 (+ ||df - dv||^2 when differentials are
/// provided); returns the squared defect on this cell.
fn ls_defect_vector(
    data: &crate::poly::EntityData,
    cols: &[DVector<f64>],
    dcols: Option<&[DVector<f64>]>,
    f: &&dyn Fn(&Pt3) -> Vec3,
    df: Option<&&dyn Fn(&Pt3) -> Vec3>,
) -> f64 {
    let n = cols.len();
    if n == 0 {
        let norm2: f64 = data
            .rule
            .points
            .iter()
            .zip(&data.rule.weights)
            .map(|(p, w)| w * f(p).norm_squared())
            .sum();
        return norm2;
    }
    let mut gram = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut g = cols[i].dot(&cols[j]);
            if let Some(dc) = dcols {
                g += dc[i].dot(&dc[j]);
            }
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let proj_f = crate::poly::project::project_vector_components(
        data,
        data.onb.monos.degree,
        |p| f(p),
    );
    let mut norm2: f64 = data
        .rule
        .points
        .iter()
        .zip(&data.rule.weights)
        .map(|(p, w)| w * f(p).norm_squared())
        .sum();
    for i in 0..n {
        rhs[i] = cols[i].dot(&proj_f);
    }
    if let (Some(dc), Some(dfn)) = (dcols, df) {
        let proj_df = crate::poly::project::project_vector_components(
            data,
            data.onb.monos.degree,
            |p| dfn(p),
        );
        for i in 0..n {
            rhs[i] += dc[i].dot(&proj_df);
        }
        norm2 += data
            .rule
            .points
            .iter()
            .zip(&data.rule.weights)
            .map(|(p, w)| w * dfn(p).norm_squared())
            .sum::<f64>();
    }
    let sol = crate::linalg::lstsq(&gram, &rhs, 1e-12);
    (norm2 - rhs.dot(&sol)).max(0.0)
}

/// Combined L2 + scalar-differential defect (div case).
fn ls_defect_mixed(
    data: &crate::poly::EntityData,
    cols: &[DVector<f64>],
    dscal: &[DVector<f64>],
    f: &&dyn Fn(&Pt3) -> Vec3,
    df: &&dyn Fn(&Pt3) -> f64,
) -> f64 {
    let n = cols.len();
    let mut norm2: f64 = data
        .rule
        .points
        .iter()
        .zip(&data.rule.weights)
        .map(|(p, w)| w * (f(p).norm_squared() + df(p) * df(p)))
        .sum();
    if n == 0 {
        return norm2;
    }
    let mut gram = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let g = cols[i].dot(&cols[j]) + dscal[i].dot(&dscal[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let proj_f = crate::poly::project::project_vector_components(
        data,
        data.onb.monos.degree,
        |p| f(p),
    );
    let proj_df = crate::poly::project::project_scalar(data, data.onb.monos.degree, |p| df(p));
    for i in 0..n {
        rhs[i] = cols[i].dot(&proj_f);
        for m in 0..proj_df.len() {
            rhs[i] += dscal[i][m] * proj_df[m];
        }
    }
    let sol = crate::linalg::lstsq(&gram, &rhs, 1e-12);
    norm2 -= rhs.dot(&sol);
    norm2.max(0.0)
}

/// Boundary weight family for the curl-side trace measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaWeights {
    /// alpha_F = h_F.
    FaceDiameter,
    /// alpha_F = 1.
    One,
}

impl AlphaWeights {
    pub fn value(&self, core: &DdrCore, f: usize) -> f64 {
        match self {
            AlphaWeights::FaceDiameter => core.mesh.faces[f].diameter,
            AlphaWeights::One => 1.0,
        }
    }
}

/// Tppr^k_h: scalar boundary datum approximated by lproj^k on each face of
/// the boundary outside gamma. The datum is face-indexed so outward-normal
/// dependent traces can be evaluated.
pub fn tppr_scalar(core: &DdrCore, xi: &dyn Fn(usize, &Pt3) -> f64) -> f64 {
    let mut total = 0.0;
    for f in gamma_complement_faces(core) {
        let data = &core.cache.faces[f];
        let coef = crate::poly::project::project_scalar(data, core.k, |p| xi(f, p));
        let mut defect = 0.0;
        for (q, p) in data.rule.points.iter().enumerate() {
            let mut proj = 0.0;
            for i in 0..coef.len() {
                proj += coef[i] * data.tab[(i, q)];
            }
            let d = xi(f, p) - proj;
            defect += data.rule.weights[q] * d * d;
        }
        total += defect.max(0.0);
    }
    total.sqrt()
}

/// Tppr^k_{alpha,div,h}: tangent boundary datum approximated by RTproj^{k+1}
/// on each face outside gamma, weighted by alpha^{-1}.
pub fn tppr_div(
    core: &DdrCore,
    zeta: &dyn Fn(usize, &Pt3) -> Vec3,
    alpha: AlphaWeights,
) -> f64 {
    let mut total = 0.0;
    for f in gamma_complement_faces(core) {
        let data = &core.cache.faces[f];
        let nrm = data.normal.unwrap();
        let rt = trimmed_space(Family::Rt, core.k + 1, &data.onb).expect("face RT basis");
        let coef = crate::poly::project::project_onto_vecbasis(data, &rt, |p| zeta(f, p));
        let comps = rt.expand(&coef);
        let nsc = data.onb.dim_total();
        let mut defect = 0.0;
        for (q, p) in data.rule.points.iter().enumerate() {
            let v = zeta(f, p);
            let vt = v - v.dot(&nrm) * nrm;
            let mut proj = Vec3::zeros();
            for (c, axis) in data.axes.iter().enumerate() {
                let mut sc = 0.0;
                for i in 0..nsc {
                    sc += comps[c * nsc + i] * data.tab[(i, q)];
                }
                proj += sc * axis;
            }
            defect += data.rule.weights[q] * (vt - proj).norm_squared();
        }
        total += defect.max(0.0) / alpha.value(core, f);
    }
    total.sqrt()
}

/// Boundary faces outside gamma.
pub fn gamma_complement_faces(core: &DdrCore) -> Vec<usize> {
    core.mesh
        .boundary_faces()
        .filter(|&f| !core.mesh.gamma[f])
        .collect()
}
