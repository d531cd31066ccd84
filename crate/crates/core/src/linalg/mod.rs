//! Linear-algebra support: small dense decompositions (via nalgebra) and a
//! sparse quasi-definite LDL^T factorization for KKT systems.

mod dense;
mod jacobi;
mod kkt;
mod ldl;
mod order;
mod sparse;

pub use dense::{lstsq, lstsq_cols, nullspace, range_basis, rank, solve_spd, sym_eigen};
pub use jacobi::JacobiSvd;
pub use kkt::{ConstrainedLs, KktError, KktSolution, SymSaddle};
pub use ldl::{LdlError, LdlFactor};
pub use order::reverse_cuthill_mckee;
pub use sparse::{CscMatrix, Triplets};
