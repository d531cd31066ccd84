//! Mesh-level report of the defining integration-by-parts relations: these
//! residuals are the normative correctness oracles for the operator closures.

use super::OperatorBundle;

#[derive(Clone, Copy, Debug)]
pub struct RelationReport {
    /// Relation tested with z in RT^{k+1}(T) against the gradient operators.
    pub r_grad: f64,
    /// Relation tested with z in NE^{k+1}(T) against the curl operators.
    pub r_curl: f64,
    /// Relation tested with q in P^{k+1}(T) against the divergence operators.
    pub r_div: f64,
}

impl RelationReport {
    pub fn max(&self) -> f64 {
        self.r_grad.max(self.r_curl).max(self.r_div)
    }
}

/// Max relative residuals over all cells, test functions and unit local dofs.
pub fn relation_residuals(bundle: &OperatorBundle) -> RelationReport {
    let mut r = RelationReport {
        r_grad: 0.0,
        r_curl: 0.0,
        r_div: 0.0,
    };
    for cell in &bundle.cells {
        r.r_grad = r.r_grad.max(cell.rel_grad);
        r.r_curl = r.r_curl.max(cell.rel_curl);
        r.r_div = r.r_div.max(cell.rel_div);
    }
    r
}
