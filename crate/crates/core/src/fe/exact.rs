//! Kernel/image dimension bookkeeping along the conforming FE complex
//! (dense rank computations; intended for coarse cube configurations).

use super::space::{ConformingSpace, FeFamily};
use super::FeError;
use crate::mesh::PolytopalMesh;
use crate::poly::BasisCache;
use nalgebra::DMatrix;

#[derive(Clone, Debug)]
pub struct ExactnessDims {
    pub dim_lag: usize,
    pub dim_ne: usize,
    pub dim_rt: usize,
    pub ker_grad: usize,
    pub im_grad: usize,
    pub ker_curl: usize,
    pub im_curl: usize,
    pub ker_div: usize,
    pub im_div: usize,
}

impl ExactnessDims {
    /// Zero-cohomology bookkeeping: ker(curl) = im(grad) and
    /// ker(div) = im(curl) dimension-wise.
    pub fn is_exact(&self) -> bool {
        self.ker_curl == self.im_grad && self.ker_div == self.im_curl
    }
}

/// Build the three conforming spaces at degree `l` and compute the
/// kernel/image dimensions of grad and curl (and div) on them.
pub fn exactness_dims(
    mesh: &PolytopalMesh,
    cache: &BasisCache,
    l: i64,
    with_gamma_bc: bool,
) -> Result<ExactnessDims, FeError> {
    let lag = ConformingSpace::build(mesh, cache, FeFamily::Lagrange, l, with_gamma_bc)?;
    let ne = ConformingSpace::build(mesh, cache, FeFamily::Nedelec, l, with_gamma_bc)?;
    let rt = ConformingSpace::build(mesh, cache, FeFamily::RaviartThomas, l, with_gamma_bc)?;
    let broken = ConformingSpace::build(mesh, cache, FeFamily::BrokenScalar, l, false)?;

    let n_lag = lag.conforming_basis();
    let n_ne = ne.conforming_basis();
    let n_rt = rt.conforming_basis();

    // Differentials in broken coordinates.
    let grad_mat = differential_matrix(&lag, &ne);
    let curl_mat = differential_matrix(&ne, &rt);
    let div_mat = differential_matrix(&rt, &broken);

    let g = &grad_mat * &n_lag;
    let c = &curl_mat * &n_ne;
    let d = &div_mat * &n_rt;

    let rank_g = crate::linalg::rank(&g, 1e-10);
    let rank_c = crate::linalg::rank(&c, 1e-10);
    let rank_d = crate::linalg::rank(&d, 1e-10);

    Ok(ExactnessDims {
        dim_lag: n_lag.ncols(),
        dim_ne: n_ne.ncols(),
        dim_rt: n_rt.ncols(),
        ker_grad: n_lag.ncols() - rank_g,
        im_grad: rank_g,
        ker_curl: n_ne.ncols() - rank_c,
        im_curl: rank_c,
        ker_div: n_rt.ncols() - rank_d,
        im_div: rank_d,
    })
}

/// Matrix of the exact elementwise differential over broken coefficients.
pub fn differential_matrix(from: &ConformingSpace, to: &ConformingSpace) -> DMatrix<f64> {
    let nb = from.dim_broken();
    let mut m = DMatrix::zeros(to.dim_broken(), nb);
    for j in 0..nb {
        let mut e = nalgebra::DVector::zeros(nb);
        e[j] = 1.0;
        let out = super::space::apply_fe_differential(from, to, &from.field(e));
        m.set_column(j, &out.coeffs);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_tet_cube;
    use crate::poly::CacheSpec;

    #[test]
    fn cube_exactness_at_l1() {
        let mesh = gen_tet_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
        let dims = exactness_dims(&mesh, &cache, 1, false).unwrap();
        // Whitney complex on the Kuhn-split cube: dims follow the skeleton.
        assert_eq!(dims.dim_lag, mesh.n_vertices());
        assert_eq!(dims.dim_ne, mesh.n_edges());
        assert_eq!(dims.dim_rt, mesh.n_faces());
        // No boundary conditions: constants are the gradient kernel.
        assert_eq!(dims.ker_grad, 1);
        assert!(dims.is_exact(), "{dims:?}");
    }

    #[test]
    fn cube_exactness_at_l1_with_full_gamma() {
        let mesh = gen_tet_cube(1).unwrap();
        let gamma: Vec<usize> = mesh.boundary_faces().collect();
        let mesh = mesh.with_gamma(&gamma).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
        let dims = exactness_dims(&mesh, &cache, 1, true).unwrap();
        assert_eq!(dims.ker_grad, 0);
        assert!(dims.is_exact(), "{dims:?}");
    }
}
