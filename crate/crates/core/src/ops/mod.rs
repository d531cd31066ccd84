//! Discrete differential operators, trace/potential reconstructions,
//! stabilization forms and weighted inner products.
//!
//! Orientation and sign conventions (fixed so that the integration-by-parts
//! relations checked by [`relations`] hold exactly):
//!
//! - `n_FE := n_F x t_E`; `omega_FE n_FE` is the outward in-plane edge normal;
//! - `rot_F r := grad_F r x n_F`;
//! - edge gradient: `int_E G_E r = -int_E q_E r' + q_2 r(V2) - q_1 r(V1)`;
//! - face gradient: `int_F G_F . v = -int_F q_F div v + sum_E omega_FE int_E
//!   tr_E (v . n_FE)` for `v in P^k(F)^2`;
//! - face curl: `int_F C_F r = int_F v_F . rot_F r - sum_E omega_FE int_E v_E r`;
//! - cell curl: `int_T C_T . z = int_T v_T . curl z + sum_F omega_TF int_F
//!   (n_F x trt_F) . z`;
//! - divergence: `int_T D r = -int_T w_T . grad r + sum_F omega_TF int_F w_F r`.
//!
//! Potentials close these relations against Koszul complements; the face
//! trace and the cell gradient potential are least-squares systems augmented
//! with their `lproj` identities, with consistency residuals monitored.

mod apply;
mod build;
mod mu;
mod relations;

pub use apply::{
    edge_gradient, face_trace_norm_sq, face_trace_values, face_ttrace_values, gather_local,
    inner_product, inner_product_matrix, l2_norm, potential, potential_l2_norm,
    potential_values_at, stabilization, stabilization_cell, stabilization_norm, PotentialValues,
};
pub use build::{assemble_discrete_operators, cell_indices, edge_grad_indices, face_indices};
pub use mu::PhysicalParameter;
pub use relations::{relation_residuals, RelationReport};

use crate::dofs::{DdrCore, SpaceKind};
use crate::linalg::CscMatrix;
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpsError {
    #[error("least-squares closure for {op} on {entity} {id} has residual {residual:e} (tolerance {tol:e})")]
    InconsistentClosure {
        op: &'static str,
        entity: &'static str,
        id: usize,
        residual: f64,
        tol: f64,
    },
    #[error(transparent)]
    Poly(#[from] crate::poly::PolyError),
    #[error("physical parameter is not coercive at a quadrature point (min eigenvalue {0:e})")]
    NonCoercive(f64),
    #[error("physical parameter is not symmetric (deviation {0:e})")]
    NonSymmetric(f64),
    #[error("gradient-space inner products need a scalar parameter")]
    ScalarParameterRequired,
}

/// Per-edge operators over the edge-local grad dofs `[q_E | q_V1 | q_V2]`.
pub struct EdgeOps {
    /// G^k_E: P^k(E) coefficients x local dofs.
    pub grad: DMatrix<f64>,
    /// tr^{k+1}_E: P^{k+1}(E) coefficients x local dofs.
    pub trace: DMatrix<f64>,
}

/// Per-face operators over the face-local dof lists of [`build::face_indices`].
pub struct FaceOps {
    /// G^k_F in face components (2 nsc) x grad-local dofs.
    pub grad: DMatrix<f64>,
    /// tr^{k+1}_F scalar coefficients x grad-local dofs.
    pub trace: DMatrix<f64>,
    /// C^k_F scalar coefficients x curl-local dofs.
    pub curl: DMatrix<f64>,
    /// trt^k_F in face components (2 nsc) x curl-local dofs.
    pub ttrace: DMatrix<f64>,
    /// Worst relative residual of the least-squares closures on this face.
    pub ls_residual: f64,
    /// Residual of the solved trace on the full RT^{k+2}(F) test space
    /// (reported diagnostic; the rot-kernel rows are not imposed).
    pub closure_defect: f64,
    /// Max |lproj^{k-1}_F tr_F - q_F| over unit local dofs (diagnostic).
    pub trace_proj_deviation: f64,
}

/// Per-cell operators over the cell-local dof lists of [`build::cell_indices`].
pub struct CellOps {
    /// G^k_T in cell components (3 nsc) x grad-local dofs.
    pub grad: DMatrix<f64>,
    /// P^{k+1}_{grad,T} scalar coefficients x grad-local dofs.
    pub pot_grad: DMatrix<f64>,
    /// C^k_T in cell components x curl-local dofs.
    pub curl: DMatrix<f64>,
    /// P^k_{curl,T} in cell components x curl-local dofs.
    pub pot_curl: DMatrix<f64>,
    /// D^k_T scalar coefficients x div-local dofs.
    pub div: DMatrix<f64>,
    /// P^k_{div,T} in cell components x div-local dofs.
    pub pot_div: DMatrix<f64>,
    /// Stabilization Gram blocks (local x local, symmetric PSD).
    pub stab_grad: DMatrix<f64>,
    pub stab_curl: DMatrix<f64>,
    pub stab_div: DMatrix<f64>,
    /// Worst relative residual of the least-squares closures on this cell.
    pub ls_residual: f64,
    /// Residual of P_grad on the full RT^{k+2}(T) test space (diagnostic).
    pub closure_defect: f64,
    /// Relative residuals of the three defining integration-by-parts
    /// relations over all test functions and local dofs.
    pub rel_grad: f64,
    pub rel_curl: f64,
    pub rel_div: f64,
}

/// Assembled mesh-level operators.
pub struct OperatorBundle<'a> {
    pub core: &'a DdrCore<'a>,
    pub edges: Vec<EdgeOps>,
    pub faces: Vec<FaceOps>,
    pub cells: Vec<CellOps>,
    /// uG: X_grad -> X_curl.
    pub ug: CscMatrix,
    /// uC: X_curl -> X_div.
    pub uc: CscMatrix,
    /// D: X_div -> P^k(T_h), cells-major broken scalar layout.
    pub dh: CscMatrix,
    /// Worst least-squares closure residual across the mesh.
    pub max_ls_residual: f64,
    /// Worst full-test-space residual of the trace/potential closures
    /// (reported diagnostic).
    pub max_closure_defect: f64,
    /// Max deviation of the lproj^{k-1}_F tr_F = q_F identity (diagnostic).
    pub trace_proj_deviation: f64,
}

impl<'a> OperatorBundle<'a> {
    pub fn k(&self) -> i64 {
        self.core.k
    }

    /// Dimension of the broken target space P^k(T_h) of D.
    pub fn broken_pk_dim(&self) -> usize {
        self.core.mesh.n_cells() * crate::poly::dim_p3(self.core.k)
    }

    /// Apply uG to a grad vector.
    pub fn apply_ug(&self, q: &crate::dofs::DofVector) -> crate::dofs::DofVector {
        assert_eq!(q.space, SpaceKind::Grad);
        let mut out = crate::dofs::DofVector::zeros(self.core, SpaceKind::Curl);
        self.ug.matvec_acc(q.data.as_slice(), out.data.as_mut_slice(), 1.0);
        out
    }

    /// Apply uC to a curl vector.
    pub fn apply_uc(&self, v: &crate::dofs::DofVector) -> crate::dofs::DofVector {
        assert_eq!(v.space, SpaceKind::Curl);
        let mut out = crate::dofs::DofVector::zeros(self.core, SpaceKind::Div);
        self.uc.matvec_acc(v.data.as_slice(), out.data.as_mut_slice(), 1.0);
        out
    }

    /// Apply D to a div vector; returns broken P^k coefficients (cells-major).
    pub fn apply_div(&self, w: &crate::dofs::DofVector) -> Vec<f64> {
        assert_eq!(w.space, SpaceKind::Div);
        let mut out = vec![0.0; self.broken_pk_dim()];
        self.dh.matvec_acc(w.data.as_slice(), &mut out, 1.0);
        out
    }

    /// Write an operator in coordinate text format.
    pub fn export_coordinate(
        &self,
        which: OperatorSelect,
        w: &mut impl std::io::Write,
    ) -> std::io::Result<()> {
        match which {
            OperatorSelect::Ug => self.ug.write_coordinate(w),
            OperatorSelect::Uc => self.uc.write_coordinate(w),
            OperatorSelect::Div => self.dh.write_coordinate(w),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum OperatorSelect {
    Ug,
    Uc,
    Div,
}
