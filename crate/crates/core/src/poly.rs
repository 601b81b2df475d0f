//! Exact polynomial algebra in barycentric coordinates.
//!
//! A [`BaryPoly`] is kept in canonical homogeneous form: all stored monomials
//! `l0^a l1^b l2^c` have `a + b + c = degree`. Lower-degree terms are
//! homogenized by multiplying with `(l0 + l1 + l2)^m`, which is `1` on the
//! triangle, so the represented function is unchanged. Two homogeneous
//! representations of the same degree agree as functions iff they agree
//! coefficient-wise, which makes equality, traces, and substitutions exact.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::rational::{factorial, qi, to_f64, Q};

/// Trivariate polynomial in barycentric coordinates with exact rational
/// coefficients, homogeneous of `degree`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaryPoly {
    degree: usize,
    coeffs: BTreeMap<[u16; 3], Q>,
}

impl BaryPoly {
    pub fn zero() -> Self {
        BaryPoly { degree: 0, coeffs: BTreeMap::new() }
    }

    pub fn constant(c: Q) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert([0, 0, 0], c);
        }
        BaryPoly { degree: 0, coeffs }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    /// The coordinate `l_i`.
    pub fn lambda(i: usize) -> Self {
        assert!(i < 3);
        let mut e = [0u16; 3];
        e[i] = 1;
        Self::monomial(e, Q::one())
    }

    pub fn monomial(exps: [u16; 3], c: Q) -> Self {
        let degree = (exps[0] + exps[1] + exps[2]) as usize;
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(exps, c);
        }
        BaryPoly { degree, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, exps: [u16; 3]) -> Q {
        self.coeffs.get(&exps).cloned().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u16; 3], &Q)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// Raise the representation degree by `m` via `(l0+l1+l2)^m`.
    pub fn homogenize_to(&self, degree: usize) -> BaryPoly {
        assert!(degree >= self.degree, "cannot lower homogeneous degree");
        let mut out = self.clone();
        for _ in 0..(degree - self.degree) {
            out = out.mul(&(BaryPoly::lambda(0).add(&BaryPoly::lambda(1)).add(&BaryPoly::lambda(2))));
        }
        out
    }

    pub fn add(&self, other: &BaryPoly) -> BaryPoly {
        if self.is_zero() {
            let mut o = other.clone();
            o.degree = o.degree.max(self.degree);
            return o.homogenize_to(self.degree.max(other.degree));
        }
        if other.is_zero() {
            return self.homogenize_to(self.degree.max(other.degree));
        }
        let degree = self.degree.max(other.degree);
        let a = self.homogenize_to(degree);
        let b = other.homogenize_to(degree);
        let mut coeffs = a.coeffs;
        for (e, c) in b.coeffs {
            let entry = coeffs.entry(e).or_insert_with(Q::zero);
            *entry += c;
            if entry.is_zero() {
                coeffs.remove(&e);
            }
        }
        BaryPoly { degree, coeffs }
    }

    pub fn sub(&self, other: &BaryPoly) -> BaryPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> BaryPoly {
        BaryPoly {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }

    pub fn scale(&self, s: &Q) -> BaryPoly {
        if s.is_zero() {
            return BaryPoly { degree: self.degree, coeffs: BTreeMap::new() };
        }
        BaryPoly {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &BaryPoly) -> BaryPoly {
        let degree = self.degree + other.degree;
        let mut coeffs: BTreeMap<[u16; 3], Q> = BTreeMap::new();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                let entry = coeffs.entry(e).or_insert_with(Q::zero);
                *entry += ca * cb;
            }
        }
        coeffs.retain(|_, c| !c.is_zero());
        BaryPoly { degree, coeffs }
    }

    pub fn pow(&self, n: usize) -> BaryPoly {
        let mut out = BaryPoly::one();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Functions are compared after homogenizing both sides to a common
    /// degree, so representations of different degrees compare correctly.
    pub fn eq_fn(&self, other: &BaryPoly) -> bool {
        let degree = self.degree.max(other.degree);
        self.homogenize_to(degree).coeffs == other.homogenize_to(degree).coeffs
    }

    pub fn eval(&self, lam: &[Q; 3]) -> Q {
        let pow_cache: [Vec<Q>; 3] = [
            power_table(&lam[0], self.degree),
            power_table(&lam[1], self.degree),
            power_table(&lam[2], self.degree),
        ];
        let mut acc = Q::zero();
        for (e, c) in &self.coeffs {
            let term = c
                * &pow_cache[0][e[0] as usize]
                * &pow_cache[1][e[1] as usize]
                * &pow_cache[2][e[2] as usize];
            acc += term;
        }
        acc
    }

    /// Formal partial derivative with respect to `l_i`. For a homogeneous
    /// representation this is the correct ingredient of the chain rule
    /// `d_v p = sum_i (dp/dl_i) (grad l_i . v)` because `sum_i grad l_i = 0`.
    pub fn diff_lambda(&self, i: usize) -> BaryPoly {
        assert!(i < 3);
        let mut coeffs: BTreeMap<[u16; 3], Q> = BTreeMap::new();
        for (e, c) in &self.coeffs {
            if e[i] == 0 {
                continue;
            }
            let mut en = *e;
            en[i] -= 1;
            let entry = coeffs.entry(en).or_insert_with(Q::zero);
            *entry += c * qi(e[i] as i64);
        }
        coeffs.retain(|_, c| !c.is_zero());
        BaryPoly { degree: self.degree.saturating_sub(1), coeffs }
    }

    /// Substitute `l_i -> subs[i]` and expand. Used for expressing a
    /// macro-coordinate polynomial in the coordinates of a subtriangle.
    pub fn substitute(&self, subs: &[BaryPoly; 3]) -> BaryPoly {
        let mut tables: Vec<Vec<BaryPoly>> = Vec::with_capacity(3);
        for s in subs {
            let mut t = vec![BaryPoly::one()];
            for p in 1..=self.degree {
                let next = t[p - 1].mul(s);
                t.push(next);
            }
            tables.push(t);
        }
        let mut acc = BaryPoly::zero();
        for (e, c) in &self.coeffs {
            let term = tables[0][e[0] as usize]
                .mul(&tables[1][e[1] as usize])
                .mul(&tables[2][e[2] as usize])
                .scale(c);
            acc = acc.add(&term);
        }
        acc
    }

    /// Trace on the segment whose endpoints have macro barycentric
    /// coordinates `lam_start` and `lam_end`; the result is expressed in the
    /// segment coordinates `(mu0, mu1)` with `mu0 = 1` at the start point.
    pub fn trace_on_segment(&self, lam_start: &[Q; 3], lam_end: &[Q; 3]) -> EdgePoly {
        let mut tables: Vec<Vec<EdgePoly>> = Vec::with_capacity(3);
        for i in 0..3 {
            let lin = EdgePoly::linear(lam_start[i].clone(), lam_end[i].clone());
            let mut t = vec![EdgePoly::one()];
            for p in 1..=self.degree {
                let next = t[p - 1].mul(&lin);
                t.push(next);
            }
            tables.push(t);
        }
        let mut acc = EdgePoly::zero();
        for (e, c) in &self.coeffs {
            let term = tables[0][e[0] as usize]
                .mul(&tables[1][e[1] as usize])
                .mul(&tables[2][e[2] as usize])
                .scale(c);
            acc = acc.add(&term);
        }
        acc
    }

    /// Exact integral over a triangle of area `area`, provided the `l_i`
    /// are the barycentric coordinates of that triangle:
    /// `int l0^a l1^b l2^c dx = 2|T| a! b! c! / (a+b+c+2)!`.
    pub fn integral_over(&self, area: &Q) -> Q {
        let mut acc = Q::zero();
        for (e, c) in &self.coeffs {
            let (a, b, g) = (e[0] as usize, e[1] as usize, e[2] as usize);
            let w = qi(2) * area * factorial(a) * factorial(b) * factorial(g)
                / factorial(a + b + g + 2);
            acc += c * w;
        }
        acc
    }

    /// Coefficient vector in the dense monomial order of the given degree
    /// (entries for all exponent triples with that total, lexicographic).
    pub fn dense_coeffs(&self, degree: usize) -> Vec<Q> {
        let h = self.homogenize_to(degree);
        exponents_of_degree(degree)
            .into_iter()
            .map(|e| h.coeff(e))
            .collect()
    }

    /// Float coefficients in dense order, for fast repeated evaluation.
    pub fn dense_coeffs_f64(&self, degree: usize) -> Vec<f64> {
        self.dense_coeffs(degree).iter().map(to_f64).collect()
    }

    /// Evaluate from dense float coefficients produced by
    /// [`BaryPoly::dense_coeffs_f64`].
    pub fn eval_dense_f64(coeffs: &[f64], degree: usize, lam: [f64; 3]) -> f64 {
        let exps = exponents_of_degree(degree);
        debug_assert_eq!(exps.len(), coeffs.len());
        let mut acc = 0.0;
        for (c, e) in coeffs.iter().zip(exps) {
            if *c == 0.0 {
                continue;
            }
            acc += c
                * lam[0].powi(e[0] as i32)
                * lam[1].powi(e[1] as i32)
                * lam[2].powi(e[2] as i32);
        }
        acc
    }
}

fn power_table(x: &Q, n: usize) -> Vec<Q> {
    let mut t = vec![Q::one()];
    for p in 1..=n {
        let next = &t[p - 1] * x;
        t.push(next);
    }
    t
}

/// All exponent triples of the given total degree, lexicographic.
pub fn exponents_of_degree(degree: usize) -> Vec<[u16; 3]> {
    let mut out = Vec::new();
    for a in (0..=degree).rev() {
        for b in (0..=(degree - a)).rev() {
            let c = degree - a - b;
            out.push([a as u16, b as u16, c as u16]);
        }
    }
    out
}

/// Dimension of `P_d` on a triangle.
pub fn dim_pk_tri(d: i64) -> usize {
    if d < 0 {
        0
    } else {
        ((d + 1) * (d + 2) / 2) as usize
    }
}

/// Dimension of `P_d` on an edge.
pub fn dim_pk_edge(d: i64) -> usize {
    if d < 0 {
        0
    } else {
        (d + 1) as usize
    }
}

/// Univariate polynomial on an edge in homogeneous coordinates
/// `(mu0, mu1)`, `mu0 + mu1 = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePoly {
    degree: usize,
    coeffs: BTreeMap<[u16; 2], Q>,
}

impl EdgePoly {
    pub fn zero() -> Self {
        EdgePoly { degree: 0, coeffs: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::monomial([0, 0], Q::one())
    }

    pub fn monomial(exps: [u16; 2], c: Q) -> Self {
        let degree = (exps[0] + exps[1]) as usize;
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(exps, c);
        }
        EdgePoly { degree, coeffs }
    }

    /// The affine function with the given endpoint values: `a mu0 + b mu1`.
    pub fn linear(a: Q, b: Q) -> Self {
        let mut coeffs = BTreeMap::new();
        if !a.is_zero() {
            coeffs.insert([1, 0], a);
        }
        if !b.is_zero() {
            coeffs.insert([0, 1], b);
        }
        EdgePoly { degree: 1, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, exps: [u16; 2]) -> Q {
        self.coeffs.get(&exps).cloned().unwrap_or_else(Q::zero)
    }

    pub fn homogenize_to(&self, degree: usize) -> EdgePoly {
        assert!(degree >= self.degree);
        let mut out = self.clone();
        let unit = EdgePoly::linear(Q::one(), Q::one());
        for _ in 0..(degree - self.degree) {
            out = out.mul(&unit);
        }
        out
    }

    pub fn add(&self, other: &EdgePoly) -> EdgePoly {
        let degree = self.degree.max(other.degree);
        let a = self.homogenize_to(degree);
        let b = other.homogenize_to(degree);
        let mut coeffs = a.coeffs;
        for (e, c) in b.coeffs {
            let entry = coeffs.entry(e).or_insert_with(Q::zero);
            *entry += c;
            if entry.is_zero() {
                coeffs.remove(&e);
            }
        }
        EdgePoly { degree, coeffs }
    }

    pub fn sub(&self, other: &EdgePoly) -> EdgePoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> EdgePoly {
        EdgePoly {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }

    pub fn scale(&self, s: &Q) -> EdgePoly {
        if s.is_zero() {
            return EdgePoly { degree: self.degree, coeffs: BTreeMap::new() };
        }
        EdgePoly {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &EdgePoly) -> EdgePoly {
        let degree = self.degree + other.degree;
        let mut coeffs: BTreeMap<[u16; 2], Q> = BTreeMap::new();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                let e = [ea[0] + eb[0], ea[1] + eb[1]];
                let entry = coeffs.entry(e).or_insert_with(Q::zero);
                *entry += ca * cb;
            }
        }
        coeffs.retain(|_, c| !c.is_zero());
        EdgePoly { degree, coeffs }
    }

    pub fn eq_fn(&self, other: &EdgePoly) -> bool {
        let degree = self.degree.max(other.degree);
        self.homogenize_to(degree).coeffs == other.homogenize_to(degree).coeffs
    }

    pub fn eval(&self, mu0: &Q, mu1: &Q) -> Q {
        let t0 = power_table(mu0, self.degree);
        let t1 = power_table(mu1, self.degree);
        let mut acc = Q::zero();
        for (e, c) in &self.coeffs {
            acc += c * &t0[e[0] as usize] * &t1[e[1] as usize];
        }
        acc
    }

    /// The exact rational `r` with `int_e q ds = r * |e|`, from
    /// `int_e mu0^a mu1^b ds = |e| a! b! / (a+b+1)!`. The length factor is
    /// kept symbolic so the result stays rational.
    pub fn integral_scaled(&self) -> Q {
        let mut acc = Q::zero();
        for (e, c) in &self.coeffs {
            let (a, b) = (e[0] as usize, e[1] as usize);
            acc += c * factorial(a) * factorial(b) / factorial(a + b + 1);
        }
        acc
    }

    /// `D_e` applied to this trace: the `mu0*mu1` coefficient of the
    /// degree-2 homogeneous representation. Equals
    /// `(6/|e|) int_e q ds - 2 (q(e0) + q(e1))` for quadratic `q`.
    pub fn bernstein_middle_deg2(&self) -> Q {
        assert!(self.degree <= 2, "D_e requires a trace of degree <= 2");
        self.homogenize_to(2).coeff([1, 1])
    }
}

/// Bivariate polynomial in Cartesian coordinates with exact rational
/// coefficients. Used for globally defined trial fields (the mesh-level
/// interpolation and commuting checks) before conversion to barycentric form
/// on each element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CartPoly {
    coeffs: BTreeMap<[u16; 2], Q>,
}

impl CartPoly {
    pub fn zero() -> Self {
        CartPoly { coeffs: BTreeMap::new() }
    }

    pub fn monomial(ex: u16, ey: u16, c: Q) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert([ex, ey], c);
        }
        CartPoly { coeffs }
    }

    pub fn constant(c: Q) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn add(&self, other: &CartPoly) -> CartPoly {
        let mut coeffs = self.coeffs.clone();
        for (e, c) in &other.coeffs {
            let entry = coeffs.entry(*e).or_insert_with(Q::zero);
            *entry += c;
            if entry.is_zero() {
                coeffs.remove(e);
            }
        }
        CartPoly { coeffs }
    }

    pub fn scale(&self, s: &Q) -> CartPoly {
        if s.is_zero() {
            return CartPoly::zero();
        }
        CartPoly { coeffs: self.coeffs.iter().map(|(e, c)| (*e, c * s)).collect() }
    }

    pub fn mul(&self, other: &CartPoly) -> CartPoly {
        let mut coeffs: BTreeMap<[u16; 2], Q> = BTreeMap::new();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                let e = [ea[0] + eb[0], ea[1] + eb[1]];
                let entry = coeffs.entry(e).or_insert_with(Q::zero);
                *entry += ca * cb;
            }
        }
        coeffs.retain(|_, c| !c.is_zero());
        CartPoly { coeffs }
    }

    pub fn diff_x(&self) -> CartPoly {
        let mut coeffs = BTreeMap::new();
        for (e, c) in &self.coeffs {
            if e[0] > 0 {
                coeffs.insert([e[0] - 1, e[1]], c * qi(e[0] as i64));
            }
        }
        CartPoly { coeffs }
    }

    pub fn diff_y(&self) -> CartPoly {
        let mut coeffs = BTreeMap::new();
        for (e, c) in &self.coeffs {
            if e[1] > 0 {
                coeffs.insert([e[0], e[1] - 1], c * qi(e[1] as i64));
            }
        }
        CartPoly { coeffs }
    }

    pub fn eval(&self, x: &Q, y: &Q) -> Q {
        let d = self.coeffs.keys().map(|e| e[0].max(e[1]) as usize).max().unwrap_or(0);
        let tx = power_table(x, d);
        let ty = power_table(y, d);
        let mut acc = Q::zero();
        for (e, c) in &self.coeffs {
            acc += c * &tx[e[0] as usize] * &ty[e[1] as usize];
        }
        acc
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|e| (e[0] + e[1]) as usize).max().unwrap_or(0)
    }

    /// Express this polynomial in the barycentric coordinates of a triangle
    /// with the given vertex coordinates, via `x = sum_i x_i l_i`.
    pub fn to_bary(&self, xs: &[Q; 3], ys: &[Q; 3]) -> BaryPoly {
        let xp = BaryPoly::lambda(0)
            .scale(&xs[0])
            .add(&BaryPoly::lambda(1).scale(&xs[1]))
            .add(&BaryPoly::lambda(2).scale(&xs[2]));
        let yp = BaryPoly::lambda(0)
            .scale(&ys[0])
            .add(&BaryPoly::lambda(1).scale(&ys[1]))
            .add(&BaryPoly::lambda(2).scale(&ys[2]));
        let d = self.degree();
        let mut txs = vec![BaryPoly::one()];
        let mut tys = vec![BaryPoly::one()];
        for p in 1..=d {
            let nx = txs[p - 1].mul(&xp);
            txs.push(nx);
            let ny = tys[p - 1].mul(&yp);
            tys.push(ny);
        }
        let mut acc = BaryPoly::zero();
        for (e, c) in &self.coeffs {
            acc = acc.add(&txs[e[0] as usize].mul(&tys[e[1] as usize]).scale(c));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn l(i: usize) -> BaryPoly {
        BaryPoly::lambda(i)
    }

    #[test]
    fn product_of_coordinates() {
        let p = l(0).mul(&l(1));
        assert_eq!(p.coeff([1, 1, 0]), qi(1));
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn partition_of_unity_multiplication_is_identity() {
        let p = l(0).pow(2).add(&l(1).mul(&l(2)).scale(&q(3, 7)));
        let unit = l(0).add(&l(1)).add(&l(2));
        let q = unit.mul(&p);
        assert!(q.eq_fn(&p));
        assert_ne!(q.degree(), p.degree());
    }

    #[test]
    fn square_of_difference() {
        let p = l(2).sub(&l(1));
        let sq = p.mul(&p);
        assert_eq!(sq.coeff([0, 2, 0]), qi(1));
        assert_eq!(sq.coeff([0, 1, 1]), qi(-2));
        assert_eq!(sq.coeff([0, 0, 2]), qi(1));
    }

    #[test]
    fn homogenize_idempotent() {
        let p = l(0).add(&BaryPoly::one()).homogenize_to(3);
        let again = p.homogenize_to(3);
        assert_eq!(p, again);
    }

    #[test]
    fn triangle_integrals() {
        let area = q(1, 2);
        assert_eq!(BaryPoly::one().integral_over(&area), area);
        assert_eq!(l(0).integral_over(&area), q(1, 6));
        let bt = l(0).mul(&l(1)).mul(&l(2));
        // int b_T = 2|T| (1!)^3 / 5! = |T|/60
        assert_eq!(bt.integral_over(&area), q(1, 120));
    }

    #[test]
    fn edge_integrals() {
        assert_eq!(EdgePoly::one().integral_scaled(), qi(1));
        let be = EdgePoly::monomial([1, 1], qi(1));
        assert_eq!(be.integral_scaled(), q(1, 6));
        let m2 = EdgePoly::monomial([2, 0], qi(1));
        assert_eq!(m2.integral_scaled(), q(1, 3));
    }

    #[test]
    fn edge_traces_of_bubbles_and_coordinates() {
        // Trace of the element bubble on any boundary edge vanishes; the
        // edge bubble restricts to mu0 mu1; a coordinate restricts to the
        // hat of its vertex.
        let one = |v: usize| {
            let mut l = [Q::zero(), Q::zero(), Q::zero()];
            l[v] = Q::one();
            l
        };
        let bt = l(0).mul(&l(1)).mul(&l(2));
        for (a, b) in [(1usize, 2usize), (0, 2), (0, 1)] {
            assert!(bt.trace_on_segment(&one(a), &one(b)).is_zero());
        }
        let be0 = l(1).mul(&l(2));
        let tr = be0.trace_on_segment(&one(1), &one(2));
        assert!(tr.eq_fn(&EdgePoly::monomial([1, 1], qi(1))));
        // l0 on the edge {0, 2}, parametrized from v0: equals mu0.
        let tr = l(0).trace_on_segment(&one(0), &one(2));
        assert!(tr.eq_fn(&EdgePoly::linear(qi(1), qi(0))));
    }

    #[test]
    fn edge_integral_matches_quadrature_oracle() {
        use crate::quadrature::gauss_legendre_unit;
        let p = EdgePoly::monomial([2, 0], qi(1))
            .add(&EdgePoly::monomial([1, 1], q(3, 7)))
            .add(&EdgePoly::monomial([0, 2], q(-2, 5)));
        let exact = crate::rational::to_f64(&p.integral_scaled());
        let c20 = crate::rational::to_f64(&p.coeff([2, 0]));
        let c11 = crate::rational::to_f64(&p.coeff([1, 1]));
        let c02 = crate::rational::to_f64(&p.coeff([0, 2]));
        let approx: f64 = gauss_legendre_unit(4)
            .iter()
            .map(|(s, w)| {
                let mu0 = 1.0 - s;
                w * (c20 * mu0 * mu0 + c11 * mu0 * s + c02 * s * s)
            })
            .sum();
        assert!((exact - approx).abs() < 1e-14, "{exact} vs {approx}");
    }

    #[test]
    fn bernstein_middle_of_affine() {
        // mu0 homogenized to degree 2 is mu0^2 + mu0 mu1.
        let p = EdgePoly::linear(qi(1), qi(0));
        assert_eq!(p.bernstein_middle_deg2(), qi(1));
        let sq = EdgePoly::monomial([2, 0], qi(1));
        assert_eq!(sq.bernstein_middle_deg2(), qi(0));
    }

    #[test]
    fn cart_to_bary_roundtrip_on_reference() {
        let xs = [qi(0), qi(1), qi(0)];
        let ys = [qi(0), qi(0), qi(1)];
        // x^2 y on the reference triangle is l1^2 l2.
        let p = CartPoly::monomial(2, 1, qi(1)).to_bary(&xs, &ys);
        assert!(p.eq_fn(&l(1).pow(2).mul(&l(2))));
    }

    fn arb_poly() -> impl Strategy<Value = BaryPoly> {
        proptest::collection::vec((0usize..10, -6i64..=6, 1i64..=4), 1..6).prop_map(|terms| {
            let exps = exponents_of_degree(3);
            let mut acc = BaryPoly::zero();
            for (idx, n, d) in terms {
                let e = exps[idx % exps.len()];
                acc = acc.add(&BaryPoly::monomial(e, q(n, d)));
            }
            acc
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert!(a.mul(&b).eq_fn(&b.mul(&a)));
            prop_assert!(a.mul(&b.add(&c)).eq_fn(&a.mul(&b).add(&a.mul(&c))));
            prop_assert!(a.add(&b).add(&c).eq_fn(&a.add(&b.add(&c))));
        }

        #[test]
        fn substitution_is_a_ring_map(a in arb_poly(), b in arb_poly()) {
            let subs = [
                l(0).add(&l(1)),
                l(2).scale(&q(1, 2)),
                l(1).sub(&l(0)),
            ];
            let lhs = a.mul(&b).substitute(&subs);
            let rhs = a.substitute(&subs).mul(&b.substitute(&subs));
            prop_assert!(lhs.eq_fn(&rhs));
        }
    }
}
