//! Exact differentials of polynomials in component-wise ONB coordinates.
//!
//! All maps are in physical units (the 1/h_P factors live in the ScalarBasis
//! derivative maps). Vector coefficient layout matches `VecBasis`:
//! `comp * nscalar + i`.

use super::basis::ScalarBasis;
use nalgebra::DVector;

/// grad: scalar -> ncomp-vector (face frame or cell frame).
pub fn gradient(sb: &ScalarBasis, scalar: &DVector<f64>, ncomp: usize) -> DVector<f64> {
    let n = sb.dim_total();
    let mut out = DVector::zeros(ncomp * n);
    for c in 0..ncomp {
        let d = sb.deriv(c) * scalar;
        for i in 0..n {
            out[c * n + i] = d[i];
        }
    }
    out
}

/// div: ncomp-vector -> scalar.
pub fn divergence(sb: &ScalarBasis, vec: &DVector<f64>, ncomp: usize) -> DVector<f64> {
    let n = sb.dim_total();
    let mut out = DVector::zeros(n);
    for c in 0..ncomp {
        let comp = DVector::from_iterator(n, (0..n).map(|i| vec[c * n + i]));
        out += sb.deriv(c) * comp;
    }
    out
}

/// curl: 3-vector -> 3-vector (cell frames are the global axes).
pub fn curl_3d(sb: &ScalarBasis, vec: &DVector<f64>) -> DVector<f64> {
    let n = sb.dim_total();
    let comp = |c: usize| DVector::from_iterator(n, (0..n).map(|i| vec[c * n + i]));
    let (vx, vy, vz) = (comp(0), comp(1), comp(2));
    let d = |a: usize, v: &DVector<f64>| sb.deriv(a) * v;
    let cx = d(1, &vz) - d(2, &vy);
    let cy = d(2, &vx) - d(0, &vz);
    let cz = d(0, &vy) - d(1, &vx);
    let mut out = DVector::zeros(3 * n);
    for i in 0..n {
        out[i] = cx[i];
        out[n + i] = cy[i];
        out[2 * n + i] = cz[i];
    }
    out
}

/// Face rot of a scalar: rot_F r := grad_F r x n_F, i.e. (d_eta r, -d_xi r)
/// in the (e1, e2) face frame.
pub fn rot_face(sb: &ScalarBasis, scalar: &DVector<f64>) -> DVector<f64> {
    let n = sb.dim_total();
    let dxi = sb.deriv(0) * scalar;
    let deta = sb.deriv(1) * scalar;
    let mut out = DVector::zeros(2 * n);
    for i in 0..n {
        out[i] = deta[i];
        out[n + i] = -dxi[i];
    }
    out
}

/// Scalar curl of a tangent field: curl_s v = d_xi v_eta - d_eta v_xi.
pub fn scalar_curl_face(sb: &ScalarBasis, vec: &DVector<f64>) -> DVector<f64> {
    let n = sb.dim_total();
    let comp = |c: usize| DVector::from_iterator(n, (0..n).map(|i| vec[c * n + i]));
    sb.deriv(0) * comp(1) - sb.deriv(1) * comp(0)
}
