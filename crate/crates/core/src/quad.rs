//! Quadrature on segments, triangles and tetrahedra in physical coordinates.
//!
//! Segments use Gauss-Legendre nodes; simplices use Grundmann-Möller rules,
//! which exist for every odd degree. Polytopal entities are integrated as
//! unions of submesh entities, so these three primitives are all that is
//! needed. GM weights are of mixed sign, which is harmless for the polynomial
//! and smooth integrands occurring here.

use crate::{Pt3, Vec3};
use thiserror::Error;

/// Largest simplex exactness degree served before a hard error.
pub const MAX_SIMPLEX_DEGREE: usize = 31;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("requested simplex quadrature degree {0} exceeds the supported maximum {MAX_SIMPLEX_DEGREE}")]
    DegreeTooHigh(usize),
}

/// Quadrature rule with physical points and weights (weights sum to the
/// measure of the integration domain).
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub points: Vec<Pt3>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn integrate(&self, f: impl Fn(&Pt3) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }

    /// Concatenate rules (integration over a union of entities).
    pub fn merged(rules: impl IntoIterator<Item = QuadRule>) -> QuadRule {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut degree = usize::MAX;
        for r in rules {
            degree = degree.min(r.degree);
            points.extend(r.points);
            weights.extend(r.weights);
        }
        QuadRule {
            points,
            weights,
            degree: if degree == usize::MAX { 0 } else { degree },
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(t) and derivative by recurrence.
            let mut p0 = 1.0;
            let mut p1 = t;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Rule on the segment [a, b], exact for polynomials of degree `degree`.
pub fn segment_rule(a: &Pt3, b: &Pt3, degree: usize) -> QuadRule {
    let n = degree / 2 + 1;
    let (xs, ws) = gauss_legendre(n);
    let mid = Pt3::from((a.coords + b.coords) * 0.5);
    let half: Vec3 = (b - a) * 0.5;
    let len = (b - a).norm();
    QuadRule {
        points: xs.iter().map(|&t| mid + half * t).collect(),
        weights: ws.iter().map(|&w| w * 0.5 * len).collect(),
        degree,
    }
}

/// Grundmann-Möller rule on the unit d-simplex in barycentric coordinates.
/// Returns (barycentric points, weights summing to 1/d!).
fn grundmann_moeller(dim: usize, degree: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>), QuadError> {
    if degree > MAX_SIMPLEX_DEGREE {
        return Err(QuadError::DegreeTooHigh(degree));
    }
    let s = degree / 2; // exact for degree 2s+1 >= degree
    let d = dim;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..=s {
        let denom = (d + 1 + 2 * (s - i)) as f64;
        // |w| = d! (d+2s+1-2i)^{2s+1} / (2^{2s} i! (d+2s+1-i)!); the weights
        // over all points sum to 1 (the rule is an average).
        let mut logw = factorial(d).ln() - (2.0 * s as f64) * std::f64::consts::LN_2
            + (2.0 * s as f64 + 1.0) * denom.ln();
        for k in 2..=i {
            logw -= (k as f64).ln();
        }
        for k in 2..=(d + 1 + 2 * s - i) {
            logw -= (k as f64).ln();
        }
        let w = if i % 2 == 0 { logw.exp() } else { -logw.exp() };
        for beta in compositions(s - i, d + 1) {
            let bary: Vec<f64> = beta.iter().map(|&b| (2 * b + 1) as f64 / denom).collect();
            points.push(bary);
            weights.push(w);
        }
    }
    // Rescale the unit-sum weights to the reference simplex volume 1/d!.
    let vol = 1.0 / factorial(d);
    let sum: f64 = weights.iter().sum();
    let fix = vol / sum;
    for w in &mut weights {
        *w *= fix;
    }
    Ok((points, weights))
}

/// All beta in N_0^parts with |beta| = total.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, idx: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if idx + 1 == cur.len() {
            cur[idx] = total;
            out.push(cur.clone());
            return;
        }
        for v in 0..=total {
            cur[idx] = v;
            rec(total - v, idx + 1, cur, out);
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts];
    rec(total, 0, &mut cur, &mut out);
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product::<f64>().max(1.0)
}

/// Rule on the triangle (v0, v1, v2) embedded in 3D.
pub fn triangle_rule(v: [&Pt3; 3], degree: usize) -> Result<QuadRule, QuadError> {
    let (bary, w_ref) = grundmann_moeller(2, degree)?;
    let area = 0.5 * (v[1] - v[0]).cross(&(v[2] - v[0])).norm();
    let scale = area / 0.5; // reference triangle volume 1/2
    let points = bary
        .iter()
        .map(|b| Pt3::from(v[0].coords * b[0] + v[1].coords * b[1] + v[2].coords * b[2]))
        .collect();
    let weights = w_ref.iter().map(|&w| w * scale).collect();
    Ok(QuadRule {
        points,
        weights,
        degree,
    })
}

/// Rule on the tetrahedron (v0..v3).
pub fn tet_rule(v: [&Pt3; 4], degree: usize) -> Result<QuadRule, QuadError> {
    let (bary, w_ref) = grundmann_moeller(3, degree)?;
    let vol = ((v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0])) / 6.0).abs();
    let scale = vol / (1.0 / 6.0);
    let points = bary
        .iter()
        .map(|b| {
            Pt3::from(
                v[0].coords * b[0] + v[1].coords * b[1] + v[2].coords * b[2] + v[3].coords * b[3],
            )
        })
        .collect();
    let weights = w_ref.iter().map(|&w| w * scale).collect();
    Ok(QuadRule {
        points,
        weights,
        degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, z: f64) -> Pt3 {
        Pt3::new(x, y, z)
    }

    /// Exact unit-simplex monomial integral: prod(a_i!)/(d + sum a_i)!.
    fn simplex_monomial(pows: &[usize]) -> f64 {
        let d = pows.len();
        let num: f64 = pows.iter().map(|&p| factorial(p)).product();
        num / factorial(d + pows.iter().sum::<usize>())
    }

    #[test]
    fn segment_exactness() {
        let a = pt(0.25, 0.0, 0.0);
        let b = pt(1.25, 0.5, -0.5);
        for degree in 0..12 {
            let rule = segment_rule(&a, &b, degree);
            let len = (b - a).norm();
            let dir = (b - a) / len;
            let t_of = |p: &Pt3| (p - a).dot(&dir) / len;
            let got = rule.integrate(|p| t_of(p).powi(degree as i32));
            let want = len / (degree as f64 + 1.0);
            assert!(
                (got - want).abs() <= 1e-13 * want.abs().max(1.0),
                "deg {degree}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn triangle_exactness_on_unit_triangle() {
        let v0 = pt(0.0, 0.0, 0.0);
        let v1 = pt(1.0, 0.0, 0.0);
        let v2 = pt(0.0, 1.0, 0.0);
        for degree in 0..=9usize {
            let rule = triangle_rule([&v0, &v1, &v2], degree).unwrap();
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    let got = rule.integrate(|p| p.x.powi(a as i32) * p.y.powi(b as i32));
                    let want = simplex_monomial(&[a, b]);
                    assert!(
                        (got - want).abs() <= 1e-13 * want.max(1.0),
                        "deg {degree} mono ({a},{b}): {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn tet_exactness_on_unit_tet() {
        let v0 = pt(0.0, 0.0, 0.0);
        let v1 = pt(1.0, 0.0, 0.0);
        let v2 = pt(0.0, 1.0, 0.0);
        let v3 = pt(0.0, 0.0, 1.0);
        for degree in 0..=8usize {
            let rule = tet_rule([&v0, &v1, &v2, &v3], degree).unwrap();
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    for c in 0..=(degree - a - b) {
                        let got = rule.integrate(|p| {
                            p.x.powi(a as i32) * p.y.powi(b as i32) * p.z.powi(c as i32)
                        });
                        let want = simplex_monomial(&[a, b, c]);
                        assert!(
                            (got - want).abs() <= 1e-13 * want.max(1.0),
                            "deg {degree} mono ({a},{b},{c}): {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn tet_rule_on_mapped_tet_integrates_affine_exactly() {
        let v0 = pt(0.2, 0.1, -0.3);
        let v1 = pt(1.4, 0.2, 0.1);
        let v2 = pt(0.3, 1.7, 0.4);
        let v3 = pt(0.1, 0.4, 1.9);
        let rule = tet_rule([&v0, &v1, &v2, &v3], 3).unwrap();
        let vol = ((v1 - v0).cross(&(v2 - v0)).dot(&(v3 - v0)) / 6.0).abs();
        let got = rule.integrate(|_| 1.0);
        assert!((got - vol).abs() < 1e-14);
        let cx = rule.integrate(|p| p.x) / vol;
        let want = (v0.x + v1.x + v2.x + v3.x) / 4.0;
        assert!((cx - want).abs() < 1e-13);
    }

    #[test]
    fn degree_cap_is_a_hard_error() {
        let v0 = pt(0.0, 0.0, 0.0);
        let v1 = pt(1.0, 0.0, 0.0);
        let v2 = pt(0.0, 1.0, 0.0);
        let v3 = pt(0.0, 0.0, 1.0);
        let err = tet_rule([&v0, &v1, &v2, &v3], MAX_SIMPLEX_DEGREE + 1).unwrap_err();
        assert!(err.to_string().contains("maximum"));
    }
}
