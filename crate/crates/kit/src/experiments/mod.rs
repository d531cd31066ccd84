//! Experiment drivers: each runs over a mesh family and emits report rows.

mod adjoint;
mod compactness;
mod complex;
mod constants;
mod primal;
mod qi;

pub use adjoint::run_rates_adjoint;
pub use compactness::run_compactness;
pub use complex::run_verify_complex;
pub use constants::run_constants;
pub use primal::run_rates_primal;
pub use qi::run_verify_qi;

use ddr_core::dofs::{component_norm, DdrCore, DofVector, NormScope, SpaceKind};
use ddr_core::ops::OperatorBundle;
use ddr_core::{Pt3, Vec3};

/// ||exact - P z||_{L2(Omega)} for a vector-potential space (curl/div).
pub(crate) fn potential_l2_error_vec(
    bundle: &OperatorBundle,
    z: &DofVector,
    exact: &dyn Fn(&Pt3) -> Vec3,
) -> f64 {
    let core = bundle.core;
    let mut total = 0.0;
    for c in 0..core.mesh.n_cells() {
        let data = &core.cache.cells[c];
        let vals = ddr_core::ops::potential_values_at(bundle, z, c, &data.rule.points);
        for (q, w) in data.rule.weights.iter().enumerate() {
            total += w * (exact(&data.rule.points[q]) - vals[q]).norm_squared();
        }
    }
    total.max(0.0).sqrt()
}

/// ||exact - P z||_{L2(Omega)} for the scalar-potential (grad) space.
pub(crate) fn potential_l2_error_scalar(
    bundle: &OperatorBundle,
    z: &DofVector,
    exact: &dyn Fn(&Pt3) -> f64,
) -> f64 {
    let core = bundle.core;
    let mut total = 0.0;
    for c in 0..core.mesh.n_cells() {
        let data = &core.cache.cells[c];
        let vals = ddr_core::ops::potential_values_at(bundle, z, c, &data.rule.points);
        for (q, w) in data.rule.weights.iter().enumerate() {
            let d = exact(&data.rule.points[q]) - vals[q].x;
            total += w * d * d;
        }
    }
    total.max(0.0).sqrt()
}

/// Random masked vector normalized to unit graph norm |||z||| + |||d z|||.
pub(crate) fn random_unit_graph(
    core: &DdrCore,
    bundle: &OperatorBundle,
    space: SpaceKind,
    seed: u64,
    mask: Option<&ddr_core::dofs::BoundaryMask>,
) -> Option<(DofVector, f64, f64)> {
    let mut z = ddr_core::dofs::random_dofs(core, space, seed, mask);
    let dz_norm = match space {
        SpaceKind::Grad => {
            let dz = bundle.apply_ug(&z);
            component_norm(core, &dz, NormScope::Global)
        }
        SpaceKind::Curl => {
            let dz = bundle.apply_uc(&z);
            component_norm(core, &dz, NormScope::Global)
        }
        SpaceKind::Div => {
            let dz = bundle.apply_div(&z);
            dz.iter().map(|x| x * x).sum::<f64>().sqrt()
        }
    };
    let znorm = component_norm(core, &z, NormScope::Global);
    let graph = znorm + dz_norm;
    if graph < 1e-12 {
        return None;
    }
    z.data /= graph;
    Some((z, znorm / graph, dz_norm / graph))
}

/// Infinity-stable max of a slice.
pub(crate) fn maxf(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn minf(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(f64::INFINITY, f64::min)
}
