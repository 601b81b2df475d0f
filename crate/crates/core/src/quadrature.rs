//! Floating-point quadrature for the solver boundary: Gauss-Legendre on
//! segments and a collapsed tensor rule on triangles. Exact polynomial
//! integration elsewhere in the crate goes through the simplex monomial
//! formula; quadrature only enters where transcendental data does.

use crate::geometry::Triangle;
use crate::rational::to_f64;

/// Gauss-Legendre nodes and weights on [0, 1], exact for polynomials of
/// degree `2n - 1`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration from the Chebyshev initial guess on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A quadrature rule on the reference triangle in barycentric form:
/// points `(l0, l1, l2)` with weights summing to 1 (weights are relative to
/// the triangle area).
pub struct TriangleRule {
    pub points: Vec<([f64; 3], f64)>,
}

impl TriangleRule {
    /// A rule exact (up to roundoff) for polynomials of total degree `d`,
    /// built by collapsing a tensor Gauss rule through the Duffy map
    /// `x = u(1-v), y = uv` whose Jacobian is `u`.
    pub fn with_degree(d: usize) -> Self {
        let nu = d / 2 + 2;
        let nv = d / 2 + 1;
        let gu = gauss_legendre_unit(nu);
        let gv = gauss_legendre_unit(nv);
        let mut points = Vec::with_capacity(nu * nv);
        for &(u, wu) in &gu {
            for &(v, wv) in &gv {
                let x = u * (1.0 - v);
                let y = u * v;
                // Weight relative to area: the Duffy Jacobian u integrates
                // to 1/2 over the unit square, and the reference triangle
                // has area 1/2.
                let w = wu * wv * u * 2.0;
                points.push(([1.0 - x - y, x, y], w));
            }
        }
        TriangleRule { points }
    }

    /// Integrate a function given in barycentric coordinates over a
    /// physical triangle.
    pub fn integrate_bary(&self, tri: &Triangle, mut f: impl FnMut([f64; 3]) -> f64) -> f64 {
        let area = to_f64(&tri.area());
        let mut acc = 0.0;
        for (lam, w) in &self.points {
            acc += w * f(*lam);
        }
        acc * area
    }

    /// Integrate a function of Cartesian coordinates over a physical
    /// triangle.
    pub fn integrate_xy(&self, tri: &Triangle, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let xs: Vec<f64> = tri.vertices().iter().map(|p| to_f64(&p.x)).collect();
        let ys: Vec<f64> = tri.vertices().iter().map(|p| to_f64(&p.y)).collect();
        let area = to_f64(&tri.area());
        let mut acc = 0.0;
        for (lam, w) in &self.points {
            let x = lam[0] * xs[0] + lam[1] * xs[1] + lam[2] * xs[2];
            let y = lam[0] * ys[0] + lam[1] * ys[1] + lam[2] * ys[2];
            acc += w * f(x, y);
        }
        acc * area
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::reference_triangle;

    #[test]
    fn gauss_nodes_integrate_polynomials() {
        let rule = gauss_legendre_unit(5);
        // int_0^1 x^8 dx = 1/9, exact for 5 nodes (degree 9).
        let val: f64 = rule.iter().map(|(x, w)| w * x.powi(8)).sum();
        assert!((val - 1.0 / 9.0).abs() < 1e-14);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_rule_exact_on_monomials() {
        let rule = TriangleRule::with_degree(6);
        let tri = reference_triangle();
        // int_T x^3 y^2 dx over the reference triangle:
        // 2|T| 3! 2! 0! / 7! with (a,b,c) = (0,3,2) in barycentric terms.
        let exact = 1.0 * 6.0 * 2.0 / 5040.0;
        let got = rule.integrate_xy(&tri, |x, y| x.powi(3) * y.powi(2));
        assert!((got - exact).abs() < 1e-14, "{got} vs {exact}");
    }

    #[test]
    fn triangle_rule_weights_sum_to_one() {
        let rule = TriangleRule::with_degree(10);
        let s: f64 = rule.points.iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-13);
    }
}
