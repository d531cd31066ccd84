//! Manufactured solutions with hand-coded exact derivatives: trigonometric
//! fields, polynomial fields, and gamma-compatible variants built with
//! distance-like factors.

use ddr_core::{Pt3, Vec3};
use std::f64::consts::PI;

/// Scalar field with its gradient.
pub struct ScalarField {
    pub name: &'static str,
    pub f: fn(&Pt3) -> f64,
    pub grad: fn(&Pt3) -> Vec3,
}

/// Vector field with its full first derivatives. `jac[(i, j)] = d v_i / d x_j`;
/// curl and div are the hand-coded contractions of the same derivatives.
pub struct VectorField {
    pub name: &'static str,
    pub f: fn(&Pt3) -> Vec3,
    pub jac: fn(&Pt3) -> nalgebra::Matrix3<f64>,
    pub curl: fn(&Pt3) -> Vec3,
    pub div: fn(&Pt3) -> f64,
}

impl VectorField {
    /// div(mu v) for a constant diagonal parameter.
    pub fn div_mu_diag(&self, p: &Pt3, mu: [f64; 3]) -> f64 {
        let j = (self.jac)(p);
        mu[0] * j[(0, 0)] + mu[1] * j[(1, 1)] + mu[2] * j[(2, 2)]
    }

    /// curl(mu v) for a constant diagonal parameter.
    pub fn curl_mu_diag(&self, p: &Pt3, mu: [f64; 3]) -> Vec3 {
        let j = (self.jac)(p);
        Vec3::new(
            mu[2] * j[(2, 1)] - mu[1] * j[(1, 2)],
            mu[0] * j[(0, 2)] - mu[2] * j[(2, 0)],
            mu[1] * j[(1, 0)] - mu[0] * j[(0, 1)],
        )
    }
}

fn s(x: f64) -> f64 {
    (PI * x).sin()
}
fn c(x: f64) -> f64 {
    (PI * x).cos()
}

/// q = sin(pi x) sin(pi y) sin(pi z): vanishes on the whole cube boundary,
/// hence compatible with every gamma configuration.
pub fn scalar_bubble() -> ScalarField {
    ScalarField {
        name: "sin3",
        f: |p| s(p.x) * s(p.y) * s(p.z),
        grad: |p| {
            Vec3::new(
                PI * c(p.x) * s(p.y) * s(p.z),
                PI * s(p.x) * c(p.y) * s(p.z),
                PI * s(p.x) * s(p.y) * c(p.z),
            )
        },
    }
}

/// Smooth scalar without boundary compatibility (for gamma = none).
pub fn scalar_smooth() -> ScalarField {
    ScalarField {
        name: "cosmix",
        f: |p| (p.x + 2.0 * p.y).cos() + (p.z * 1.5).sin() * p.x,
        grad: |p| {
            Vec3::new(
                -(p.x + 2.0 * p.y).sin() + (p.z * 1.5).sin(),
                -2.0 * (p.x + 2.0 * p.y).sin(),
                1.5 * (p.z * 1.5).cos() * p.x,
            )
        },
    }
}

/// v = (sy sz, sx sz, sx sy): tangential trace vanishes on the whole cube
/// boundary (H_Gamma(curl)-compatible for every gamma), curl nonzero.
pub fn vector_tangential_bubble() -> VectorField {
    VectorField {
        name: "tbubble",
        f: |p| Vec3::new(s(p.y) * s(p.z), s(p.x) * s(p.z), s(p.x) * s(p.y)),
        jac: |p| {
            nalgebra::Matrix3::new(
                0.0,
                PI * c(p.y) * s(p.z),
                PI * s(p.y) * c(p.z),
                PI * c(p.x) * s(p.z),
                0.0,
                PI * s(p.x) * c(p.z),
                PI * c(p.x) * s(p.y),
                PI * s(p.x) * c(p.y),
                0.0,
            )
        },
        curl: |p| {
            Vec3::new(
                PI * s(p.x) * c(p.y) - PI * s(p.x) * c(p.z),
                PI * s(p.y) * c(p.z) - PI * c(p.x) * s(p.y),
                PI * c(p.x) * s(p.z) - PI * s(p.z) * c(p.y),
            )
        },
        div: |_| 0.0,
    }
}

/// w with zero normal trace on the whole cube boundary; its divergence has
/// zero mean (compatible with the H_Gamma(div) space for gamma = boundary).
pub fn vector_normal_bubble() -> VectorField {
    VectorField {
        name: "nbubble",
        f: |p| Vec3::new(s(p.x) * c(p.y), s(p.y) * c(p.z), s(p.z) * c(p.x)),
        jac: |p| {
            nalgebra::Matrix3::new(
                PI * c(p.x) * c(p.y),
                -PI * s(p.x) * s(p.y),
                0.0,
                0.0,
                PI * c(p.y) * c(p.z),
                -PI * s(p.y) * s(p.z),
                -PI * s(p.z) * s(p.x),
                0.0,
                PI * c(p.z) * c(p.x),
            )
        },
        curl: |p| {
            Vec3::new(
                PI * s(p.y) * s(p.z),
                PI * s(p.z) * s(p.x),
                PI * s(p.x) * s(p.y),
            )
        },
        div: |p| PI * (c(p.x) * c(p.y) + c(p.y) * c(p.z) + c(p.z) * c(p.x)),
    }
}

/// Generic smooth vector field (no boundary compatibility).
pub fn vector_smooth() -> VectorField {
    VectorField {
        name: "vsmooth",
        f: |p| {
            Vec3::new(
                (PI * p.y).sin() * (PI * p.z).sin() * p.x,
                (0.5 * PI * p.x).cos() * p.z,
                p.x * p.y + (PI * p.z).cos(),
            )
        },
        jac: |p| {
            nalgebra::Matrix3::new(
                s(p.y) * s(p.z),
                PI * c(p.y) * s(p.z) * p.x,
                PI * s(p.y) * c(p.z) * p.x,
                -0.5 * PI * (0.5 * PI * p.x).sin() * p.z,
                0.0,
                (0.5 * PI * p.x).cos(),
                p.y,
                p.x,
                -PI * s(p.z),
            )
        },
        curl: |p| {
            Vec3::new(
                p.x - (0.5 * PI * p.x).cos(),
                PI * (PI * p.y).sin() * (PI * p.z).cos() * p.x - p.y,
                -0.5 * PI * (0.5 * PI * p.x).sin() * p.z
                    - PI * (PI * p.y).cos() * (PI * p.z).sin() * p.x,
            )
        },
        div: |p| (PI * p.y).sin() * (PI * p.z).sin() - PI * (PI * p.z).sin(),
    }
}

/// v = grad(h) for the harmonic polynomial h = x^2 - y^2 + x y z-free part:
/// divergence-free gradient field with polynomial components.
pub fn gradient_of_harmonic() -> VectorField {
    VectorField {
        name: "gradharm",
        f: |p| Vec3::new(2.0 * p.x, -2.0 * p.y, 0.0),
        jac: |_| nalgebra::Matrix3::new(2.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0),
        curl: |_| Vec3::zeros(),
        div: |_| 0.0,
    }
}

/// Smooth divergence-form source for the compactness runs: f = curl(g) for a
/// smooth g, so the source is orthogonal to gradients.
pub fn curl_source() -> VectorField {
    // g = (0, 0, sin(pi x) sin(pi y)); f = curl g.
    VectorField {
        name: "curlsrc",
        f: |p| {
            Vec3::new(
                PI * s(p.x) * c(p.y),
                -PI * c(p.x) * s(p.y),
                0.0,
            )
        },
        jac: |p| {
            nalgebra::Matrix3::new(
                PI * PI * c(p.x) * c(p.y),
                -PI * PI * s(p.x) * s(p.y),
                0.0,
                PI * PI * s(p.x) * s(p.y),
                -PI * PI * c(p.x) * c(p.y),
                0.0,
                0.0,
                0.0,
                0.0,
            )
        },
        curl: |p| Vec3::new(0.0, 0.0, 2.0 * PI * PI * s(p.x) * s(p.y)),
        div: |_| 0.0,
    }
}

/// Smooth gradient-form source for the div-side compactness runs.
pub fn grad_source() -> VectorField {
    VectorField {
        name: "gradsrc",
        f: |p| {
            Vec3::new(
                PI * c(p.x) * s(p.y) * s(p.z),
                PI * s(p.x) * c(p.y) * s(p.z),
                PI * s(p.x) * s(p.y) * c(p.z),
            )
        },
        jac: |p| {
            let pp = PI * PI;
            nalgebra::Matrix3::new(
                -pp * s(p.x) * s(p.y) * s(p.z),
                pp * c(p.x) * c(p.y) * s(p.z),
                pp * c(p.x) * s(p.y) * c(p.z),
                pp * c(p.x) * c(p.y) * s(p.z),
                -pp * s(p.x) * s(p.y) * s(p.z),
                pp * s(p.x) * c(p.y) * c(p.z),
                pp * c(p.x) * s(p.y) * c(p.z),
                pp * s(p.x) * c(p.y) * c(p.z),
                -pp * s(p.x) * s(p.y) * s(p.z),
            )
        },
        curl: |_| Vec3::zeros(),
        div: |p| -3.0 * PI * PI * s(p.x) * s(p.y) * s(p.z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Finite-difference oracle for the hand-coded derivatives.
    fn fd_grad(f: fn(&Pt3) -> f64, p: &Pt3) -> Vec3 {
        let h = 1e-6;
        let mut g = Vec3::zeros();
        for i in 0..3 {
            let mut a = *p;
            let mut b = *p;
            a[i] += h;
            b[i] -= h;
            g[i] = (f(&a) - f(&b)) / (2.0 * h);
        }
        g
    }

    fn fd_jac(f: fn(&Pt3) -> Vec3, p: &Pt3) -> [[f64; 3]; 3] {
        let h = 1e-6;
        let mut j = [[0.0; 3]; 3];
        for col in 0..3 {
            let mut a = *p;
            let mut b = *p;
            a[col] += h;
            b[col] -= h;
            let d = (f(&a) - f(&b)) / (2.0 * h);
            for row in 0..3 {
                j[row][col] = d[row];
            }
        }
        j
    }

    fn check_vector(v: &VectorField) {
        for pt in [
            Pt3::new(0.3, 0.4, 0.6),
            Pt3::new(0.71, 0.12, 0.95),
            Pt3::new(0.05, 0.85, 0.4),
        ] {
            let j = fd_jac(v.f, &pt);
            let ja = (v.jac)(&pt);
            for r in 0..3 {
                for cidx in 0..3 {
                    assert!(
                        (ja[(r, cidx)] - j[r][cidx]).abs() < 1e-5,
                        "{}: jac[{r},{cidx}] mismatch",
                        v.name
                    );
                }
            }
            let curl = Vec3::new(j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]);
            let div = j[0][0] + j[1][1] + j[2][2];
            assert!(
                ((v.curl)(&pt) - curl).norm() < 1e-5,
                "{}: curl mismatch at {pt:?}: {:?} vs {curl:?}",
                v.name,
                (v.curl)(&pt)
            );
            assert!(
                ((v.div)(&pt) - div).abs() < 1e-5,
                "{}: div mismatch at {pt:?}",
                v.name
            );
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for sf in [scalar_bubble(), scalar_smooth()] {
            for pt in [Pt3::new(0.3, 0.4, 0.6), Pt3::new(0.9, 0.2, 0.5)] {
                let fd = fd_grad(sf.f, &pt);
                assert!(
                    ((sf.grad)(&pt) - fd).norm() < 1e-5,
                    "{}: grad mismatch",
                    sf.name
                );
            }
        }
        for vf in [
            vector_tangential_bubble(),
            vector_normal_bubble(),
            vector_smooth(),
            gradient_of_harmonic(),
            curl_source(),
            grad_source(),
        ] {
            check_vector(&vf);
        }
    }

    #[test]
    fn boundary_compatibility() {
        // Tangential bubble: tangential components vanish on each face.
        let v = vector_tangential_bubble();
        for (pt, normal_axis) in [
            (Pt3::new(0.0, 0.3, 0.7), 0usize),
            (Pt3::new(1.0, 0.5, 0.2), 0),
            (Pt3::new(0.4, 0.0, 0.8), 1),
            (Pt3::new(0.4, 1.0, 0.8), 1),
            (Pt3::new(0.6, 0.25, 0.0), 2),
            (Pt3::new(0.6, 0.25, 1.0), 2),
        ] {
            let val = (v.f)(&pt);
            for i in 0..3 {
                if i != normal_axis {
                    assert!(val[i].abs() < 1e-14, "tangential component on face");
                }
            }
        }
        // Normal bubble: the normal component vanishes on each face.
        let w = vector_normal_bubble();
        for (pt, axis) in [
            (Pt3::new(0.0, 0.3, 0.7), 0usize),
            (Pt3::new(1.0, 0.5, 0.2), 0),
            (Pt3::new(0.4, 0.0, 0.8), 1),
            (Pt3::new(0.4, 1.0, 0.8), 1),
            (Pt3::new(0.6, 0.25, 0.0), 2),
            (Pt3::new(0.6, 0.25, 1.0), 2),
        ] {
            assert!((w.f)(&pt)[axis].abs() < 1e-14, "normal component on face");
        }
    }
}
