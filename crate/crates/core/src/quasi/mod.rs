//! Commuting quasi-interpolators onto the conforming FE subcomplex, the
//! approximation-measure evaluators, and the conforming liftings with the
//! left-inverse property.
//!
//! The quasi-interpolators are global-best constrained minimizers: the
//! Raviart-Thomas one minimizes the L2 distance subject to a divergence
//! constraint, the Nédélec one chains through it via the curl, and the
//! Lagrange one through the Nédélec one via the gradient, so the cochain
//! property holds by construction and conforming inputs are reproduced
//! exactly. Each solve is an equality-constrained least-squares problem over
//! the broken space (conformity and boundary conditions are constraint rows).

mod lift;
mod measures;
mod qi;

pub use lift::{lifting_curl, lifting_grad};
pub use measures::{appr_global, appr_local, bppr, gamma_complement_faces, tppr_div, tppr_scalar, AlphaWeights, MeasureField};
pub use qi::{qi_ddr, qi_fe, QiField, QuasiContext};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QiError {
    #[error(transparent)]
    Fe(#[from] crate::fe::FeError),
    #[error(transparent)]
    Kkt(#[from] crate::linalg::KktError),
    #[error(transparent)]
    Ops(#[from] crate::ops::OpsError),
    #[error("constraint infeasible: gap {gap:e} exceeds tolerance {tol:e} (nontrivial cohomology or solver failure)")]
    Infeasible { gap: f64, tol: f64 },
}

/// Configuration of the quasi-interpolators.
#[derive(Clone, Copy, Debug)]
pub struct QuasiInterpolatorConfig {
    pub k: i64,
    /// FE degree; must be >= k+1 (k+3 for lifting compatibility).
    pub ell: i64,
    /// Apply the homogeneous boundary conditions on the gamma faces.
    pub with_gamma_bc: bool,
    /// Relative feasibility tolerance of the constrained solves.
    pub solver_tol: f64,
}

impl QuasiInterpolatorConfig {
    pub fn new(k: i64, ell: i64, with_gamma_bc: bool) -> Self {
        assert!(ell >= k + 1, "quasi-interpolation needs ell >= k+1");
        Self {
            k,
            ell,
            with_gamma_bc,
            solver_tol: 1e-10,
        }
    }
}
