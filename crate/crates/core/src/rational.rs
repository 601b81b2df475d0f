//! Exact rational scalars and the small fixed-size vector/matrix types used
//! throughout the geometry and element construction.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number. Every geometric quantity and every
/// polynomial coefficient in this crate is a `Q`.
pub type Q = num_rational::BigRational;

/// Shorthand for an integer rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Shorthand for the fraction `n/d`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Lossy conversion for the float-only solver boundary.
pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Fall back to a manual division when the bigint magnitudes overflow
        // the direct conversion.
        let n = x.numer();
        let d = x.denom();
        let scale = BigInt::from(1_000_000_000_000_000_000i64);
        let scaled = (n * &scale) / d;
        scaled.to_f64().unwrap_or(f64::NAN) / 1e18
    })
}

const MAX_FACTORIAL: usize = 64;

/// `n!` as an exact integer rational, from a table precomputed on first
/// use. The cap is far above any degree this crate produces (integration
/// needs `d + 2` for degree-`d` integrands).
pub fn factorial(n: usize) -> Q {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<Q>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut acc = BigInt::from(1);
        let mut out = vec![Q::from_integer(acc.clone())];
        for i in 1..=MAX_FACTORIAL {
            acc *= BigInt::from(i);
            out.push(Q::from_integer(acc.clone()));
        }
        out
    });
    assert!(n <= MAX_FACTORIAL, "factorial cap exceeded: {n}");
    table[n].clone()
}

/// A 2-vector with exact rational components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vec2Q {
    pub x: Q,
    pub y: Q,
}

impl Vec2Q {
    pub fn new(x: Q, y: Q) -> Self {
        Vec2Q { x, y }
    }

    pub fn zero() -> Self {
        Vec2Q { x: Q::zero(), y: Q::zero() }
    }

    pub fn dot(&self, other: &Vec2Q) -> Q {
        &self.x * &other.x + &self.y * &other.y
    }

    /// 2D cross product `self.x * other.y - self.y * other.x`.
    pub fn cross(&self, other: &Vec2Q) -> Q {
        &self.x * &other.y - &self.y * &other.x
    }

    /// Rotation by +90 degrees: `(x, y) -> (-y, x)`.
    pub fn rot90(&self) -> Vec2Q {
        Vec2Q { x: -self.y.clone(), y: self.x.clone() }
    }

    /// Rotation by -90 degrees: `(x, y) -> (y, -x)`. For a ccw triangle this
    /// turns an edge tangent into the outward normal of the same length.
    pub fn rot_neg90(&self) -> Vec2Q {
        Vec2Q { x: self.y.clone(), y: -self.x.clone() }
    }

    pub fn add(&self, other: &Vec2Q) -> Vec2Q {
        Vec2Q { x: &self.x + &other.x, y: &self.y + &other.y }
    }

    pub fn sub(&self, other: &Vec2Q) -> Vec2Q {
        Vec2Q { x: &self.x - &other.x, y: &self.y - &other.y }
    }

    pub fn scale(&self, s: &Q) -> Vec2Q {
        Vec2Q { x: &self.x * s, y: &self.y * s }
    }

    pub fn neg(&self) -> Vec2Q {
        Vec2Q { x: -self.x.clone(), y: -self.y.clone() }
    }

    pub fn norm2(&self) -> Q {
        self.dot(self)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }
}

/// A symmetric 2x2 matrix with exact rational entries; only the upper
/// triangle is stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymMat2Q {
    pub xx: Q,
    pub xy: Q,
    pub yy: Q,
}

impl SymMat2Q {
    pub fn zero() -> Self {
        SymMat2Q { xx: Q::zero(), xy: Q::zero(), yy: Q::zero() }
    }

    /// `v (x) v`.
    pub fn outer_self(v: &Vec2Q) -> Self {
        SymMat2Q { xx: &v.x * &v.x, xy: &v.x * &v.y, yy: &v.y * &v.y }
    }

    /// `sym(u (x) v) = (u v^T + v u^T) / 2`.
    pub fn sym_outer(u: &Vec2Q, v: &Vec2Q) -> Self {
        let half = q(1, 2);
        SymMat2Q {
            xx: &u.x * &v.x,
            xy: (&u.x * &v.y + &u.y * &v.x) * &half,
            yy: &u.y * &v.y,
        }
    }

    pub fn add(&self, other: &SymMat2Q) -> SymMat2Q {
        SymMat2Q { xx: &self.xx + &other.xx, xy: &self.xy + &other.xy, yy: &self.yy + &other.yy }
    }

    pub fn scale(&self, s: &Q) -> SymMat2Q {
        SymMat2Q { xx: &self.xx * s, xy: &self.xy * s, yy: &self.yy * s }
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &Vec2Q) -> Vec2Q {
        Vec2Q {
            x: &self.xx * &v.x + &self.xy * &v.y,
            y: &self.xy * &v.x + &self.yy * &v.y,
        }
    }
}

/// Signum as an exact rational-friendly integer: -1, 0, or 1.
pub fn sign(x: &Q) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_values() {
        assert_eq!(factorial(0), qi(1));
        assert_eq!(factorial(5), qi(120));
        assert_eq!(factorial(10), qi(3628800));
    }

    #[test]
    fn rotations() {
        let t = Vec2Q::new(qi(-1), qi(1));
        assert_eq!(t.rot_neg90(), Vec2Q::new(qi(1), qi(1)));
        assert_eq!(t.rot90(), Vec2Q::new(qi(-1), qi(-1)));
        assert!(t.dot(&t.rot90()).is_zero());
    }

    #[test]
    fn sym_outer_is_symmetric_part() {
        let u = Vec2Q::new(qi(2), qi(3));
        let v = Vec2Q::new(qi(-1), qi(4));
        let s = SymMat2Q::sym_outer(&u, &v);
        assert_eq!(s.xx, qi(-2));
        assert_eq!(s.xy, q(2 * 4 + 3 * (-1), 2));
        assert_eq!(s.yy, qi(12));
    }
}
