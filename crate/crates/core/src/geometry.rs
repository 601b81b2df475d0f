//! Triangles, barycentric refinements, and edge frames, all in exact
//! rational arithmetic.
//!
//! Edge `e_i` of a triangle is the edge opposite vertex `i`. The ccw tangent
//! of `e_i` is `v_{i+2} - v_{i+1}` and its outward normal is the tangent
//! rotated by -90 degrees; normals are kept unnormalized (length `|e_i|`) so
//! that every derived quantity stays rational.

use num_traits::{One, Signed, Zero};

use crate::poly::BaryPoly;
use crate::rational::{q, qi, Q, Vec2Q};

/// A point in the plane with exact rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Point2 {
    pub x: Q,
    pub y: Q,
}

impl Point2 {
    pub fn new(x: Q, y: Q) -> Self {
        Point2 { x, y }
    }

    pub fn to_vec(&self) -> Vec2Q {
        Vec2Q::new(self.x.clone(), self.y.clone())
    }

    pub fn sub(&self, other: &Point2) -> Vec2Q {
        Vec2Q::new(&self.x - &other.x, &self.y - &other.y)
    }
}

/// Construction errors for the exact geometry types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeometryError {
    /// The three vertices are collinear (twice the signed area is zero).
    DegenerateTriangle,
}

impl std::fmt::Display for GeometryError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeometryError::DegenerateTriangle => write!(f, "degenerate triangle (zero area)"),
        }
    }
}

impl std::error::Error for GeometryError {}

/// A nondegenerate triangle, canonicalized to counterclockwise orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triangle {
    vertices: [Point2; 3],
    signed_area2: Q,
}

impl Triangle {
    /// Builds a triangle, swapping two vertices if needed so the stored
    /// order is counterclockwise. Zero area is a hard error.
    pub fn new(v0: Point2, v1: Point2, v2: Point2) -> Result<Self, GeometryError> {
        let area2 = v1.sub(&v0).cross(&v2.sub(&v0));
        if area2.is_zero() {
            return Err(GeometryError::DegenerateTriangle);
        }
        if area2.is_positive() {
            Ok(Triangle { vertices: [v0, v1, v2], signed_area2: area2 })
        } else {
            Ok(Triangle { vertices: [v0, v2, v1], signed_area2: -area2 })
        }
    }

    /// Builds a triangle and rejects clockwise input instead of flipping it.
    pub fn new_strict_ccw(v0: Point2, v1: Point2, v2: Point2) -> Result<Self, GeometryError> {
        let area2 = v1.sub(&v0).cross(&v2.sub(&v0));
        if area2.is_zero() || area2.is_negative() {
            return Err(GeometryError::DegenerateTriangle);
        }
        Ok(Triangle { vertices: [v0, v1, v2], signed_area2: area2 })
    }

    pub fn vertex(&self, i: usize) -> &Point2 {
        &self.vertices[i % 3]
    }

    pub fn vertices(&self) -> &[Point2; 3] {
        &self.vertices
    }

    /// Twice the (positive) area.
    pub fn area2(&self) -> &Q {
        &self.signed_area2
    }

    pub fn area(&self) -> Q {
        &self.signed_area2 * q(1, 2)
    }

    /// Edge vector `t_{i,j} = v_j - v_i`.
    pub fn edge_vector(&self, i: usize, j: usize) -> Vec2Q {
        self.vertex(j).sub(self.vertex(i))
    }

    /// The ccw tangent of edge `e_i` (opposite vertex `i`):
    /// `v_{i+2} - v_{i+1}`, unnormalized.
    pub fn edge_tangent_ccw(&self, i: usize) -> Vec2Q {
        self.vertex(i + 2).sub(self.vertex(i + 1))
    }

    /// The outward normal of edge `e_i`, unnormalized (length `|e_i|`).
    pub fn edge_normal_out(&self, i: usize) -> Vec2Q {
        self.edge_tangent_ccw(i).rot_neg90()
    }

    /// Exact squared length of edge `e_i`.
    pub fn edge_len2(&self, i: usize) -> Q {
        self.edge_tangent_ccw(i).norm2()
    }

    /// Gradients of the barycentric coordinates:
    /// `grad l_i = rot90(v_{i+2} - v_{i+1}) / (2|T|)`.
    pub fn grad_lambda(&self, i: usize) -> Vec2Q {
        let inv = Q::one() / &self.signed_area2;
        self.edge_tangent_ccw(i).rot90().scale(&inv)
    }

    pub fn grad_lambdas(&self) -> [Vec2Q; 3] {
        [self.grad_lambda(0), self.grad_lambda(1), self.grad_lambda(2)]
    }

    /// `c~_{i,j} = grad l_i . n~_j` with the outward unnormalized normal.
    /// The diagonal entries are `-|e_i|^2 / (2|T|) < 0`.
    pub fn c_tilde(&self, i: usize, j: usize) -> Q {
        self.grad_lambda(i).dot(&self.edge_normal_out(j))
    }

    /// Barycentric coordinates of an arbitrary point.
    pub fn barycentric_of(&self, p: &Point2) -> [Q; 3] {
        let mut out = [Q::zero(), Q::zero(), Q::zero()];
        for i in 0..3 {
            // l_i(p) = cross(v_{i+1} -> v_{i+2}, v_{i+1} -> p) / (2|T|)
            let a = self.edge_tangent_ccw(i);
            let b = p.sub(self.vertex(i + 1));
            out[i] = a.cross(&b) / &self.signed_area2;
        }
        out
    }

    /// The Cartesian point with the given barycentric coordinates.
    pub fn point_at(&self, lam: &[Q; 3]) -> Point2 {
        let mut x = Q::zero();
        let mut y = Q::zero();
        for i in 0..3 {
            x += &lam[i] * &self.vertices[i].x;
            y += &lam[i] * &self.vertices[i].y;
        }
        Point2::new(x, y)
    }

    /// Vertex x coordinates, for Cartesian-to-barycentric conversions.
    pub fn xs(&self) -> [Q; 3] {
        [self.vertices[0].x.clone(), self.vertices[1].x.clone(), self.vertices[2].x.clone()]
    }

    pub fn ys(&self) -> [Q; 3] {
        [self.vertices[0].y.clone(), self.vertices[1].y.clone(), self.vertices[2].y.clone()]
    }

    /// The affine function `x` expressed in barycentric coordinates.
    pub fn x_poly(&self) -> BaryPoly {
        let xs = self.xs();
        BaryPoly::lambda(0)
            .scale(&xs[0])
            .add(&BaryPoly::lambda(1).scale(&xs[1]))
            .add(&BaryPoly::lambda(2).scale(&xs[2]))
    }

    pub fn y_poly(&self) -> BaryPoly {
        let ys = self.ys();
        BaryPoly::lambda(0)
            .scale(&ys[0])
            .add(&BaryPoly::lambda(1).scale(&ys[1]))
            .add(&BaryPoly::lambda(2).scale(&ys[2]))
    }
}

/// A triangle together with its barycentric refinement: the barycenter,
/// the three subtriangles (`sub[i]` opposite vertex `i`), the barycentric
/// gradients, and the subtriangle vertex coordinates expressed in macro
/// barycentric coordinates.
#[derive(Debug, Clone)]
pub struct MacroTriangle {
    parent: Triangle,
    barycenter: Point2,
    sub: [Triangle; 3],
    grad_lambda: [Vec2Q; 3],
    /// `sub_lambdas[i][m]` = macro barycentric coordinates of vertex `m` of
    /// subtriangle `i` (vertex order `v_{i+1}, v_{i+2}, v_c`).
    sub_lambdas: [[[Q; 3]; 3]; 3],
}

impl MacroTriangle {
    pub fn new(parent: Triangle) -> Self {
        let third = q(1, 3);
        let bx = (&parent.vertex(0).x + &parent.vertex(1).x + &parent.vertex(2).x) * &third;
        let by = (&parent.vertex(0).y + &parent.vertex(1).y + &parent.vertex(2).y) * &third;
        let barycenter = Point2::new(bx, by);
        let mk = |i: usize| {
            Triangle::new_strict_ccw(
                parent.vertex(i + 1).clone(),
                parent.vertex(i + 2).clone(),
                barycenter.clone(),
            )
            .expect("subtriangles of a ccw triangle are ccw")
        };
        let sub = [mk(0), mk(1), mk(2)];
        let grad_lambda = parent.grad_lambdas();
        let unit = |i: usize| -> [Q; 3] {
            let mut l = [Q::zero(), Q::zero(), Q::zero()];
            l[i] = Q::one();
            l
        };
        let center = [q(1, 3), q(1, 3), q(1, 3)];
        let mut sub_lambdas: [[[Q; 3]; 3]; 3] = Default::default();
        for i in 0..3 {
            sub_lambdas[i] = [unit((i + 1) % 3), unit((i + 2) % 3), center.clone()];
        }
        MacroTriangle { parent, barycenter, sub, grad_lambda, sub_lambdas }
    }

    pub fn parent(&self) -> &Triangle {
        &self.parent
    }

    pub fn barycenter(&self) -> &Point2 {
        &self.barycenter
    }

    pub fn subtriangle(&self, i: usize) -> &Triangle {
        &self.sub[i % 3]
    }

    pub fn grad_lambda(&self, i: usize) -> &Vec2Q {
        &self.grad_lambda[i % 3]
    }

    pub fn grad_lambdas(&self) -> &[Vec2Q; 3] {
        &self.grad_lambda
    }

    /// Macro barycentric coordinates of the vertices of subtriangle `i`.
    pub fn sub_vertex_lambdas(&self, i: usize) -> &[[Q; 3]; 3] {
        &self.sub_lambdas[i % 3]
    }

    /// Edge vector `t_{c,i}` from the barycenter to vertex `i`.
    pub fn t_c_to(&self, i: usize) -> Vec2Q {
        self.parent.vertex(i).sub(&self.barycenter)
    }

    /// Restriction of a macro-coordinate polynomial to subtriangle `i`,
    /// expressed in the subtriangle's own barycentric coordinates (so that
    /// the exact simplex integration formula applies there).
    pub fn to_sub_coords(&self, p: &BaryPoly, i: usize) -> BaryPoly {
        let ls = self.sub_vertex_lambdas(i);
        let subs = [
            BaryPoly::lambda(0)
                .scale(&ls[0][0])
                .add(&BaryPoly::lambda(1).scale(&ls[1][0]))
                .add(&BaryPoly::lambda(2).scale(&ls[2][0])),
            BaryPoly::lambda(0)
                .scale(&ls[0][1])
                .add(&BaryPoly::lambda(1).scale(&ls[1][1]))
                .add(&BaryPoly::lambda(2).scale(&ls[2][1])),
            BaryPoly::lambda(0)
                .scale(&ls[0][2])
                .add(&BaryPoly::lambda(1).scale(&ls[1][2]))
                .add(&BaryPoly::lambda(2).scale(&ls[2][2])),
        ];
        p.substitute(&subs)
    }

    /// Exact integral of a macro-coordinate polynomial over subtriangle `i`.
    pub fn integrate_sub(&self, p: &BaryPoly, i: usize) -> Q {
        let area = self.sub[i].area();
        self.to_sub_coords(p, i).integral_over(&area)
    }

    /// Exact integral of a piecewise definition `pieces[i]` on subtriangle `i`.
    pub fn integrate_pieces(&self, pieces: &[BaryPoly; 3]) -> Q {
        let mut acc = Q::zero();
        for i in 0..3 {
            acc += self.integrate_sub(&pieces[i], i);
        }
        acc
    }

    /// Which subtriangle a macro barycentric point belongs to (ties go to
    /// the lowest index). `None` if outside the triangle.
    pub fn piece_of(&self, lam: &[Q; 3]) -> Option<usize> {
        if lam.iter().any(|l| l.is_negative()) {
            return None;
        }
        // Subtriangle i is { lam : lam_j >= lam_i for the two j != i }... the
        // interior edges are lam_i = lam_j, and T_i is cut off by the smaller
        // coordinates opposite v_i; the defining property is
        // lam_i <= lam_j for j != i? Checking at v_c all equal; at v_{i+1}
        // lam_{i+1} = 1: T_i contains v_{i+1}, v_{i+2}: lam_i is smallest.
        for i in 0..3 {
            let a = &lam[(i + 1) % 3];
            let b = &lam[(i + 2) % 3];
            if &lam[i] <= a && &lam[i] <= b {
                return Some(i);
            }
        }
        None
    }
}

/// Orientation data for the three edges of a macro triangle, as used by the
/// degree-of-freedom definitions: each edge carries an ordered vertex pair
/// (local indices) fixing the Bernstein parametrization, the tangent, and
/// the normal `rot_neg90(tangent)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeOrientation {
    /// `from_to[i]` = ordered (start, end) local vertex indices of edge `e_i`.
    pub from_to: [(usize, usize); 3],
}

impl EdgeOrientation {
    /// The element-local convention: `e_i` runs ccw, from `v_{i+1}` to
    /// `v_{i+2}`, so the DoF normal coincides with the outward normal.
    pub fn local_ccw() -> Self {
        EdgeOrientation { from_to: [(1, 2), (2, 0), (0, 1)] }
    }

    /// Orientation by ascending local index, the single-triangle analogue of
    /// the mesh convention (global lower vertex index -> higher).
    pub fn sorted_local() -> Self {
        EdgeOrientation { from_to: [(1, 2), (0, 2), (0, 1)] }
    }

    pub fn tangent(&self, tri: &Triangle, i: usize) -> Vec2Q {
        let (a, b) = self.from_to[i];
        tri.edge_vector(a, b)
    }

    pub fn normal(&self, tri: &Triangle, i: usize) -> Vec2Q {
        self.tangent(tri, i).rot_neg90()
    }

    /// Macro barycentric coordinates of the start and end points of edge `i`.
    pub fn endpoints_lambda(&self, i: usize) -> ([Q; 3], [Q; 3]) {
        let unit = |v: usize| {
            let mut l = [Q::zero(), Q::zero(), Q::zero()];
            l[v] = Q::one();
            l
        };
        let (a, b) = self.from_to[i];
        (unit(a), unit(b))
    }

    pub fn flip(&mut self, i: usize) {
        let (a, b) = self.from_to[i];
        self.from_to[i] = (b, a);
    }
}

/// Convenience: the reference triangle `(0,0), (1,0), (0,1)`.
pub fn reference_triangle() -> Triangle {
    Triangle::new(
        Point2::new(qi(0), qi(0)),
        Point2::new(qi(1), qi(0)),
        Point2::new(qi(0), qi(1)),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::sampling::{random_triangle, rng_from_seed};

    #[test]
    fn reference_gradients() {
        let t = reference_triangle();
        assert_eq!(t.grad_lambda(0), Vec2Q::new(qi(-1), qi(-1)));
        assert_eq!(t.grad_lambda(1), Vec2Q::new(qi(1), qi(0)));
        assert_eq!(t.grad_lambda(2), Vec2Q::new(qi(0), qi(1)));
    }

    #[test]
    fn gradient_identities_random() {
        let mut rng = rng_from_seed(7);
        for _ in 0..20 {
            let t = random_triangle(&mut rng);
            let sum = t.grad_lambda(0).add(&t.grad_lambda(1)).add(&t.grad_lambda(2));
            assert!(sum.is_zero());
            for i in 0..3 {
                for j in 0..3 {
                    // grad l_i . (v_i - v_j) = 1 for j != i, and the
                    // difference of the two other vertices is annihilated.
                    let d = t.grad_lambda(i).dot(&t.edge_vector(j, i));
                    if i == j {
                        assert!(d.is_zero());
                    } else {
                        assert_eq!(d, qi(1), "grad l_{i} . (v_{j} -> v_{i})");
                    }
                }
                let other = t.edge_vector((i + 1) % 3, (i + 2) % 3);
                assert!(t.grad_lambda(i).dot(&other).is_zero());
            }
        }
    }

    /// Independent oracle: the gradients are the rows of the inverse of the
    /// 2x2 edge matrix [v1-v0 | v2-v0], negated and summed for row 0.
    #[test]
    fn gradients_match_inverse_oracle_and_halve_under_scaling() {
        let mut rng = rng_from_seed(11);
        for _ in 0..10 {
            let t = random_triangle(&mut rng);
            let e1 = t.edge_vector(0, 1);
            let e2 = t.edge_vector(0, 2);
            let det = e1.cross(&e2);
            // inverse of [[e1.x, e2.x],[e1.y, e2.y]] times det
            let g1 = Vec2Q::new(e2.y.clone(), -e2.x.clone()).scale(&(Q::one() / &det));
            let g2 = Vec2Q::new(-e1.y.clone(), e1.x.clone()).scale(&(Q::one() / &det));
            assert_eq!(t.grad_lambda(1), g1);
            assert_eq!(t.grad_lambda(2), g2);
            assert_eq!(t.grad_lambda(0), g1.neg().sub(&g2));

            // Scaling the triangle by 2 halves the gradients.
            let scaled = Triangle::new(
                Point2::new(&t.vertex(0).x * qi(2), &t.vertex(0).y * qi(2)),
                Point2::new(&t.vertex(1).x * qi(2), &t.vertex(1).y * qi(2)),
                Point2::new(&t.vertex(2).x * qi(2), &t.vertex(2).y * qi(2)),
            )
            .unwrap();
            for i in 0..3 {
                assert_eq!(scaled.grad_lambda(i), t.grad_lambda(i).scale(&q(1, 2)));
            }
        }
    }

    #[test]
    fn degenerate_rejected() {
        let r = Triangle::new(
            Point2::new(qi(0), qi(0)),
            Point2::new(qi(1), qi(1)),
            Point2::new(qi(2), qi(2)),
        );
        assert_eq!(r.unwrap_err(), GeometryError::DegenerateTriangle);
    }

    #[test]
    fn canonicalization_flips_cw_input() {
        let t = Triangle::new(
            Point2::new(qi(0), qi(0)),
            Point2::new(qi(0), qi(1)),
            Point2::new(qi(1), qi(0)),
        )
        .unwrap();
        assert!(t.area2().is_positive());
    }

    #[test]
    fn barycentric_refinement_reference() {
        let m = MacroTriangle::new(reference_triangle());
        assert_eq!(m.barycenter(), &Point2::new(q(1, 3), q(1, 3)));
        // T_0 = conv{(1,0),(0,1),(1/3,1/3)}
        assert_eq!(m.subtriangle(0).vertex(0), &Point2::new(qi(1), qi(0)));
        assert_eq!(m.subtriangle(0).vertex(1), &Point2::new(qi(0), qi(1)));
        assert_eq!(m.subtriangle(0).vertex(2), &Point2::new(q(1, 3), q(1, 3)));
    }

    #[test]
    fn subtriangle_areas_exact_thirds() {
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let t = random_triangle(&mut rng);
            let m = MacroTriangle::new(t.clone());
            let third = t.area() * q(1, 3);
            let mut total = Q::zero();
            for i in 0..3 {
                assert_eq!(m.subtriangle(i).area(), third);
                total += m.subtriangle(i).area();
            }
            assert_eq!(total, t.area());
        }
    }

    #[test]
    fn edge_frames_reference() {
        let t = reference_triangle();
        assert_eq!(t.edge_tangent_ccw(0), Vec2Q::new(qi(-1), qi(1)));
        assert_eq!(t.edge_normal_out(0), Vec2Q::new(qi(1), qi(1)));
    }

    #[test]
    fn outward_normal_sign_random() {
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let t = random_triangle(&mut rng);
            for i in 0..3 {
                // c~_{i,i} < 0 under the outward convention.
                assert!(t.c_tilde(i, i).is_negative());
                // and equals -|e_i|^2 / (2|T|)
                assert_eq!(t.c_tilde(i, i), -t.edge_len2(i) / t.area2());
            }
        }
    }

    #[test]
    fn frames_rotate_with_the_triangle() {
        // Rational rotation by the 3-4-5 angle.
        let rot = |p: &Point2| {
            Point2::new(
                &p.x * q(3, 5) - &p.y * q(4, 5),
                &p.x * q(4, 5) + &p.y * q(3, 5),
            )
        };
        let mut rng = rng_from_seed(9);
        for _ in 0..10 {
            let t = random_triangle(&mut rng);
            let tr = Triangle::new(
                rot(t.vertex(0)),
                rot(t.vertex(1)),
                rot(t.vertex(2)),
            )
            .unwrap();
            for i in 0..3 {
                let n = t.edge_normal_out(i);
                let rotated = Vec2Q::new(
                    &n.x * q(3, 5) - &n.y * q(4, 5),
                    &n.x * q(4, 5) + &n.y * q(3, 5),
                );
                assert_eq!(tr.edge_normal_out(i), rotated);
            }
        }
    }

    #[test]
    fn mirrored_triangle_canonicalizes_and_keeps_invariants() {
        let mut rng = rng_from_seed(13);
        let t = random_triangle(&mut rng);
        let mirrored = Triangle::new(
            Point2::new(-t.vertex(0).x.clone(), t.vertex(0).y.clone()),
            Point2::new(-t.vertex(1).x.clone(), t.vertex(1).y.clone()),
            Point2::new(-t.vertex(2).x.clone(), t.vertex(2).y.clone()),
        )
        .unwrap();
        assert!(mirrored.area2().is_positive());
        for i in 0..3 {
            assert!(mirrored.c_tilde(i, i).is_negative());
        }
    }

    #[test]
    fn barycentric_point_roundtrip() {
        let mut rng = rng_from_seed(17);
        let t = random_triangle(&mut rng);
        let lam = [q(1, 6), q(1, 3), q(1, 2)];
        let p = t.point_at(&lam);
        assert_eq!(t.barycentric_of(&p), lam);
    }
}
