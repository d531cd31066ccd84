//! L2-orthogonal projections onto entity polynomial spaces.
//!
//! With orthonormal bases the projection coefficients are plain weighted
//! sums against the tabulated basis values, and projections onto subspaces
//! (trimmed spaces, degree prefixes) are coefficient restrictions.

use super::basis::{prefix_dim, VecBasis};
use super::cache::EntityData;
use crate::{Pt3, Vec3};
use nalgebra::DVector;

/// Project a scalar field onto P^deg on the entity: returns ONB coefficients
/// (length = prefix dim of deg).
pub fn project_scalar(data: &EntityData, deg: i64, f: impl Fn(&Pt3) -> f64) -> DVector<f64> {
    let n = prefix_dim(&data.onb, deg);
    let mut out = DVector::zeros(n);
    for (q, p) in data.rule.points.iter().enumerate() {
        let wf = data.rule.weights[q] * f(p);
        for i in 0..n {
            out[i] += wf * data.tab[(i, q)];
        }
    }
    out
}

/// Project a vector field onto the component-wise P^deg space, in frame
/// components (faces project the tangential part by construction).
pub fn project_vector_components(
    data: &EntityData,
    deg: i64,
    f: impl Fn(&Pt3) -> Vec3,
) -> DVector<f64> {
    let ncomp = data.axes.len();
    let nsc = prefix_dim(&data.onb, deg);
    let n = data.onb.dim_total();
    let mut full = DVector::zeros(ncomp * n);
    for (q, p) in data.rule.points.iter().enumerate() {
        let v = f(p);
        for (c, axis) in data.axes.iter().enumerate() {
            let wv = data.rule.weights[q] * v.dot(axis);
            for i in 0..nsc {
                full[c * n + i] += wv * data.tab[(i, q)];
            }
        }
    }
    full
}

/// Project a vector field onto a `VecBasis` subspace (e.g. RT^k, NE^k):
/// returns the subspace coefficients.
pub fn project_onto_vecbasis(
    data: &EntityData,
    vb: &VecBasis,
    f: impl Fn(&Pt3) -> Vec3,
) -> DVector<f64> {
    let full = project_vector_components(data, data.onb.monos.degree, f);
    vb.project_from_components(&full)
}

/// Evaluate a scalar ONB coefficient vector at physical points.
pub fn eval_scalar(data: &EntityData, coef: &DVector<f64>, pts: &[Pt3]) -> Vec<f64> {
    let vals = data.eval_scalar_at(pts);
    (0..pts.len())
        .map(|q| (0..coef.len()).map(|i| coef[i] * vals[(i, q)]).sum())
        .collect()
}

/// Evaluate a component-wise vector coefficient (layout comp*nscalar+i) at
/// physical points, producing 3D vectors via the entity frame.
pub fn eval_vector_components(data: &EntityData, comps: &DVector<f64>, pts: &[Pt3]) -> Vec<Vec3> {
    let n = data.onb.dim_total();
    let vals = data.eval_scalar_at(pts);
    (0..pts.len())
        .map(|q| {
            let mut v = Vec3::zeros();
            for (c, axis) in data.axes.iter().enumerate() {
                let mut s = 0.0;
                for i in 0..n {
                    s += comps[c * n + i] * vals[(i, q)];
                }
                v += s * axis;
            }
            v
        })
        .collect()
}

/// Values of a component-wise vector coefficient at the entity's own rule
/// points (3D vectors).
pub fn eval_vector_at_rule(data: &EntityData, comps: &DVector<f64>) -> Vec<Vec3> {
    let n = data.onb.dim_total();
    (0..data.rule.points.len())
        .map(|q| {
            let mut v = Vec3::zeros();
            for (c, axis) in data.axes.iter().enumerate() {
                let mut s = 0.0;
                for i in 0..n {
                    s += comps[c * n + i] * data.tab[(i, q)];
                }
                v += s * axis;
            }
            v
        })
        .collect()
}

/// Values of a scalar ONB coefficient at the entity's own rule points.
pub fn eval_scalar_at_rule(data: &EntityData, coef: &DVector<f64>) -> Vec<f64> {
    (0..data.rule.points.len())
        .map(|q| (0..coef.len()).map(|i| coef[i] * data.tab[(i, q)]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_hex_cube;
    use crate::poly::{BasisCache, CacheSpec};

    #[test]
    fn mean_of_linear_on_unit_cube() {
        let mesh = gen_hex_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(1, 1)).unwrap();
        // lproj^0 of f(x) = x on the unit cube: constant 1/2. The ONB constant
        // is 1/sqrt(|T|) = 1, so the coefficient equals the mean.
        let c = project_scalar(&cache.cells[0], 0, |p| p.x);
        assert_eq!(c.len(), 1);
        let mean = c[0] * cache.cells[0].tab[(0, 0)];
        assert!((mean - 0.5).abs() < 1e-13);
    }

    #[test]
    fn projection_is_idempotent_on_members() {
        let mesh = gen_hex_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(2, 1)).unwrap();
        let data = &cache.cells[0];
        // Take p = a fixed ONB combination of degree <= 2, project: identical.
        let n = crate::poly::dim_p3(2);
        let mut coef = DVector::zeros(n);
        for i in 0..n {
            coef[i] = (i as f64 * 0.37).sin();
        }
        let pts = data.rule.points.clone();
        let vals = eval_scalar(data, &coef, &pts);
        let back = project_scalar(data, 2, |p| {
            let q = pts.iter().position(|x| (x - p).norm() < 1e-14).unwrap();
            vals[q]
        });
        for i in 0..n {
            assert!((back[i] - coef[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_is_reproduced_by_rt1() {
        let mesh = gen_hex_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(1, 1)).unwrap();
        let data = &cache.cells[0];
        let rt1 = crate::poly::trimmed_space(crate::poly::Family::Rt, 1, &data.onb).unwrap();
        let c = Vec3::new(0.3, -0.7, 0.2);
        let coefs = project_onto_vecbasis(data, &rt1, |_| c);
        let comps = rt1.expand(&coefs);
        let vals = eval_vector_at_rule(data, &comps);
        for v in vals {
            assert!((v - c).norm() < 1e-12);
        }
    }
}
