//! Physical parameter: scalar or matrix-valued, symmetric, bounded, coercive.

use super::OpsError;
use crate::poly::EntityData;
use crate::Pt3;
use nalgebra::Matrix3;

type ScalarFn = Box<dyn Fn(&Pt3) -> f64 + Sync + Send>;
type MatrixFn = Box<dyn Fn(&Pt3) -> Matrix3<f64> + Sync + Send>;

enum MuField {
    Scalar(ScalarFn),
    Matrix(MatrixFn),
}

/// Physical-parameter callable with a declared smoothness class. Scalar
/// parameters are used by the gradient space; curl/div spaces accept both
/// (scalars act as multiples of the identity).
pub struct PhysicalParameter {
    field: MuField,
    /// Declared piecewise smoothness order (informational).
    pub smoothness: i64,
}

impl PhysicalParameter {
    pub fn identity() -> Self {
        Self {
            field: MuField::Scalar(Box::new(|_| 1.0)),
            smoothness: i64::MAX,
        }
    }

    pub fn scalar(f: impl Fn(&Pt3) -> f64 + Sync + Send + 'static, smoothness: i64) -> Self {
        Self {
            field: MuField::Scalar(Box::new(f)),
            smoothness,
        }
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Self {
            field: MuField::Matrix(Box::new(move |_| Matrix3::from_diagonal(&[a, b, c].into()))),
            smoothness: i64::MAX,
        }
    }

    pub fn matrix(
        f: impl Fn(&Pt3) -> Matrix3<f64> + Sync + Send + 'static,
        smoothness: i64,
    ) -> Self {
        Self {
            field: MuField::Matrix(Box::new(f)),
            smoothness,
        }
    }

    /// Piecewise-smooth parameter split at x = 1/2: `a(x)` on the left,
    /// `b(x)` on the right.
    pub fn piecewise_x_split(
        a: impl Fn(&Pt3) -> f64 + Sync + Send + 'static,
        b: impl Fn(&Pt3) -> f64 + Sync + Send + 'static,
        smoothness: i64,
    ) -> Self {
        Self {
            field: MuField::Scalar(Box::new(move |p| if p.x < 0.5 { a(p) } else { b(p) })),
            smoothness,
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.field, MuField::Scalar(_))
    }

    pub fn scalar_at(&self, p: &Pt3) -> Result<f64, OpsError> {
        match &self.field {
            MuField::Scalar(f) => Ok(f(p)),
            MuField::Matrix(_) => Err(OpsError::ScalarParameterRequired),
        }
    }

    pub fn matrix_at(&self, p: &Pt3) -> Matrix3<f64> {
        match &self.field {
            MuField::Scalar(f) => Matrix3::identity() * f(p),
            MuField::Matrix(f) => f(p),
        }
    }

    /// Sampled symmetry and coercivity checks at the cell quadrature points.
    pub fn validate(&self, cells: &[EntityData]) -> Result<(), OpsError> {
        for data in cells {
            for p in &data.rule.points {
                let m = self.matrix_at(p);
                let dev = (m - m.transpose()).abs().max();
                if dev > 1e-12 * m.abs().max().max(1.0) {
                    return Err(OpsError::NonSymmetric(dev));
                }
                let sym = (m + m.transpose()) * 0.5;
                let eig = sym.symmetric_eigen().eigenvalues;
                let min = eig.min();
                if min <= 0.0 {
                    return Err(OpsError::NonCoercive(min));
                }
            }
        }
        Ok(())
    }

    /// mu_bar_T: spectral norm of the cell average of mu.
    pub fn mu_bar(&self, cell: &EntityData) -> f64 {
        let mut avg = Matrix3::zeros();
        let mut vol = 0.0;
        for (q, p) in cell.rule.points.iter().enumerate() {
            let w = cell.rule.weights[q];
            avg += self.matrix_at(p) * w;
            vol += w;
        }
        avg /= vol;
        let sym = (avg + avg.transpose()) * 0.5;
        sym.symmetric_eigen().eigenvalues.abs().max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_bar_of_diag_is_spectral_norm() {
        let mesh = crate::mesh::gen_hex_cube(1).unwrap();
        let cache =
            crate::poly::BasisCache::build(&mesh, crate::poly::CacheSpec::for_degrees(0, 1))
                .unwrap();
        let mu = PhysicalParameter::diag(1.0, 2.0, 5.0);
        assert!((mu.mu_bar(&cache.cells[0]) - 5.0).abs() < 1e-12);
        mu.validate(&cache.cells).unwrap();
    }

    #[test]
    fn non_coercive_parameter_is_rejected() {
        let mesh = crate::mesh::gen_hex_cube(1).unwrap();
        let cache =
            crate::poly::BasisCache::build(&mesh, crate::poly::CacheSpec::for_degrees(0, 1))
                .unwrap();
        let mu = PhysicalParameter::diag(1.0, -1.0, 1.0);
        assert!(mu.validate(&cache.cells).is_err());
    }
}
