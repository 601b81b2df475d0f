//! Seeded random generation of rational trial data: triangles, barycentric
//! polynomials, and Cartesian polynomial fields. All verification runs that
//! involve random trials are reproducible from a single `u64` seed.

use num_traits::Zero;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::geometry::{Point2, Triangle};
use crate::poly::{exponents_of_degree, BaryPoly, CartPoly};
use crate::rational::{q, Q};

pub fn rng_from_seed(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A random rational in `[-4, 4]` with denominator at most 8.
pub fn random_rational(rng: &mut StdRng) -> Q {
    let d = rng.gen_range(1..=8i64);
    let n = rng.gen_range(-4 * d..=4 * d);
    q(n, d)
}

/// A nondegenerate triangle with small rational vertices, ccw.
pub fn random_triangle(rng: &mut StdRng) -> Triangle {
    loop {
        let p = |rng: &mut StdRng| Point2::new(random_rational(rng), random_rational(rng));
        let (a, b, c) = (p(rng), p(rng), p(rng));
        if let Ok(t) = Triangle::new(a, b, c) {
            // Skip slivers so that random denominators stay tame.
            if t.area2() >= &q(1, 4) {
                return t;
            }
        }
    }
}

/// A random homogeneous barycentric polynomial of exactly this degree.
pub fn random_bary_poly(rng: &mut StdRng, degree: usize) -> BaryPoly {
    let mut acc = BaryPoly::zero();
    for e in exponents_of_degree(degree) {
        let c = random_rational(rng);
        if !c.is_zero() {
            acc = acc.add(&BaryPoly::monomial(e, c));
        }
    }
    acc
}

/// A random Cartesian polynomial of total degree at most `degree`.
pub fn random_cart_poly(rng: &mut StdRng, degree: usize) -> CartPoly {
    let mut acc = CartPoly::zero();
    for ex in 0..=degree {
        for ey in 0..=(degree - ex) {
            let c = random_rational(rng);
            if !c.is_zero() {
                acc = acc.add(&CartPoly::monomial(ex as u16, ey as u16, c));
            }
        }
    }
    acc
}

/// Three random Cartesian polynomials interpreted as the components
/// `(s_xx, s_xy, s_yy)` of a symmetric tensor field.
pub fn random_cart_sym_tensor(rng: &mut StdRng, degree: usize) -> [CartPoly; 3] {
    [
        random_cart_poly(rng, degree),
        random_cart_poly(rng, degree),
        random_cart_poly(rng, degree),
    ]
}
