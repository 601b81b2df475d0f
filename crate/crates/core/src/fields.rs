//! Scalar, vector, and symmetric-tensor fields on the barycentric 3-split.
//!
//! Every piece is a [`BaryPoly`] in the *macro* barycentric coordinates, so
//! cross-edge traces compare inside a single polynomial ring. Piece `j`
//! lives on subtriangle `T_j` (the one opposite vertex `j`). The refined
//! hat coordinates satisfy `l_i^R|_{T_j} = l_i - l_j`, so every refined
//! quantity expands into macro coordinates without change of variables.

use num_traits::{One, Zero};

use crate::geometry::MacroTriangle;
use crate::poly::{BaryPoly, EdgePoly};
use crate::rational::{q, qi, Q, Vec2Q};

/// A scalar field on the 3-split: one polynomial per subtriangle, in macro
/// coordinates. Continuity is never assumed; it is checked via jumps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseScalar {
    pub pieces: [BaryPoly; 3],
}

/// A vector field on the 3-split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseVector {
    pub pieces: [[BaryPoly; 2]; 3],
}

/// A symmetric 2x2 tensor field on the 3-split; Cartesian components
/// `(xx, xy, yy)` per piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseSymTensor {
    pub pieces: [[BaryPoly; 3]; 3],
}

/// Index of the refined barycentric coordinate: a macro vertex or the
/// barycenter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefinedIndex {
    Vertex(usize),
    Center,
}

/// The refined hat function `l^R` as a piecewise field in macro coordinates:
/// for a vertex `i`, piece `j` is `l_i - l_j` (piece `i` is zero); for the
/// barycenter, piece `j` is `3 l_j`.
pub fn lambda_refined(idx: RefinedIndex) -> PiecewiseScalar {
    match idx {
        RefinedIndex::Vertex(i) => {
            let i = i % 3;
            let mk = |j: usize| BaryPoly::lambda(i).sub(&BaryPoly::lambda(j));
            PiecewiseScalar { pieces: [mk(0), mk(1), mk(2)] }
        }
        RefinedIndex::Center => {
            let mk = |j: usize| BaryPoly::lambda(j).scale(&qi(3));
            PiecewiseScalar { pieces: [mk(0), mk(1), mk(2)] }
        }
    }
}

impl PiecewiseScalar {
    pub fn zero() -> Self {
        PiecewiseScalar { pieces: [BaryPoly::zero(), BaryPoly::zero(), BaryPoly::zero()] }
    }

    /// A single polynomial viewed as a (continuous) piecewise field.
    pub fn from_poly(p: &BaryPoly) -> Self {
        PiecewiseScalar { pieces: [p.clone(), p.clone(), p.clone()] }
    }

    pub fn add(&self, other: &PiecewiseScalar) -> PiecewiseScalar {
        PiecewiseScalar {
            pieces: [
                self.pieces[0].add(&other.pieces[0]),
                self.pieces[1].add(&other.pieces[1]),
                self.pieces[2].add(&other.pieces[2]),
            ],
        }
    }

    pub fn sub(&self, other: &PiecewiseScalar) -> PiecewiseScalar {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, s: &Q) -> PiecewiseScalar {
        PiecewiseScalar {
            pieces: [self.pieces[0].scale(s), self.pieces[1].scale(s), self.pieces[2].scale(s)],
        }
    }

    pub fn mul_poly(&self, p: &BaryPoly) -> PiecewiseScalar {
        PiecewiseScalar {
            pieces: [self.pieces[0].mul(p), self.pieces[1].mul(p), self.pieces[2].mul(p)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.is_zero())
    }

    pub fn eq_fn(&self, other: &PiecewiseScalar) -> bool {
        (0..3).all(|j| self.pieces[j].eq_fn(&other.pieces[j]))
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Value at a macro barycentric point, evaluated on the piece the point
    /// belongs to (pieces agree on shared edges only if the field is
    /// continuous there).
    pub fn eval(&self, macro_tri: &MacroTriangle, lam: &[Q; 3]) -> Option<Q> {
        let j = macro_tri.piece_of(lam)?;
        Some(self.pieces[j].eval(lam))
    }

    /// Value at a vertex of the macro triangle (taken from an adjacent
    /// piece; single-valued whenever the field is continuous).
    pub fn value_at_vertex(&self, i: usize) -> Q {
        let mut lam = [Q::zero(), Q::zero(), Q::zero()];
        lam[i % 3] = Q::one();
        // Vertex i belongs to pieces i+1 and i+2.
        self.pieces[(i + 1) % 3].eval(&lam)
    }

    /// Cartesian gradient per piece.
    pub fn gradient(&self, macro_tri: &MacroTriangle) -> PiecewiseVector {
        let ex = Vec2Q::new(Q::one(), Q::zero());
        let ey = Vec2Q::new(Q::zero(), Q::one());
        let grads = macro_tri.grad_lambdas();
        let mk = |j: usize| {
            [
                directional(&self.pieces[j], grads, &ex),
                directional(&self.pieces[j], grads, &ey),
            ]
        };
        PiecewiseVector { pieces: [mk(0), mk(1), mk(2)] }
    }

    /// Gradient of one piece, evaluated at a vertex.
    pub fn gradient_at_vertex(&self, macro_tri: &MacroTriangle, i: usize) -> Vec2Q {
        let g = self.gradient(macro_tri);
        let mut lam = [Q::zero(), Q::zero(), Q::zero()];
        lam[i % 3] = Q::one();
        let piece = (i + 1) % 3;
        Vec2Q::new(g.pieces[piece][0].eval(&lam), g.pieces[piece][1].eval(&lam))
    }

    /// Directional derivative along `v` (Cartesian components), per piece.
    pub fn directional(&self, macro_tri: &MacroTriangle, v: &Vec2Q) -> PiecewiseScalar {
        let grads = macro_tri.grad_lambdas();
        PiecewiseScalar {
            pieces: [
                directional(&self.pieces[0], grads, v),
                directional(&self.pieces[1], grads, v),
                directional(&self.pieces[2], grads, v),
            ],
        }
    }

    /// Exact integral over the macro triangle.
    pub fn integral(&self, macro_tri: &MacroTriangle) -> Q {
        macro_tri.integrate_pieces(&self.pieces)
    }

    /// Trace of the piece containing boundary edge `e_i` (that is piece `i`)
    /// on the segment from `lam_start` to `lam_end`.
    pub fn boundary_trace(
        &self,
        i: usize,
        lam_start: &[Q; 3],
        lam_end: &[Q; 3],
    ) -> EdgePoly {
        self.pieces[i % 3].trace_on_segment(lam_start, lam_end)
    }
}

/// `d_v p = sum_i (dp/dl_i) (grad l_i . v)`.
pub fn directional(p: &BaryPoly, grads: &[Vec2Q; 3], v: &Vec2Q) -> BaryPoly {
    let mut acc = BaryPoly::zero();
    for i in 0..3 {
        let w = grads[i].dot(v);
        if w.is_zero() {
            continue;
        }
        acc = acc.add(&p.diff_lambda(i).scale(&w));
    }
    acc
}

impl PiecewiseVector {
    pub fn zero() -> Self {
        let z = || [BaryPoly::zero(), BaryPoly::zero()];
        PiecewiseVector { pieces: [z(), z(), z()] }
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p[0].is_zero() && p[1].is_zero())
    }

    pub fn eq_fn(&self, other: &PiecewiseVector) -> bool {
        (0..3).all(|j| {
            self.pieces[j][0].eq_fn(&other.pieces[j][0])
                && self.pieces[j][1].eq_fn(&other.pieces[j][1])
        })
    }

    /// All pieces equal as functions (the field is one polynomial on the
    /// whole macro triangle).
    pub fn single_poly(&self) -> Option<[BaryPoly; 2]> {
        for j in 1..3 {
            if !self.pieces[j][0].eq_fn(&self.pieces[0][0])
                || !self.pieces[j][1].eq_fn(&self.pieces[0][1])
            {
                return None;
            }
        }
        Some(self.pieces[0].clone())
    }
}

impl PiecewiseSymTensor {
    pub fn zero() -> Self {
        let z = || [BaryPoly::zero(), BaryPoly::zero(), BaryPoly::zero()];
        PiecewiseSymTensor { pieces: [z(), z(), z()] }
    }

    /// A single-polynomial tensor `p * U` for a constant symmetric `U`
    /// given as `(xx, xy, yy)`.
    pub fn from_poly_times_const(p: &BaryPoly, unit: &crate::rational::SymMat2Q) -> Self {
        let mk = || [p.scale(&unit.xx), p.scale(&unit.xy), p.scale(&unit.yy)];
        PiecewiseSymTensor { pieces: [mk(), mk(), mk()] }
    }

    pub fn add(&self, other: &PiecewiseSymTensor) -> PiecewiseSymTensor {
        let mk = |j: usize| {
            [
                self.pieces[j][0].add(&other.pieces[j][0]),
                self.pieces[j][1].add(&other.pieces[j][1]),
                self.pieces[j][2].add(&other.pieces[j][2]),
            ]
        };
        PiecewiseSymTensor { pieces: [mk(0), mk(1), mk(2)] }
    }

    pub fn sub(&self, other: &PiecewiseSymTensor) -> PiecewiseSymTensor {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, s: &Q) -> PiecewiseSymTensor {
        let mk = |j: usize| {
            [
                self.pieces[j][0].scale(s),
                self.pieces[j][1].scale(s),
                self.pieces[j][2].scale(s),
            ]
        };
        PiecewiseSymTensor { pieces: [mk(0), mk(1), mk(2)] }
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.iter().all(|c| c.is_zero()))
    }

    pub fn eq_fn(&self, other: &PiecewiseSymTensor) -> bool {
        (0..3).all(|j| (0..3).all(|c| self.pieces[j][c].eq_fn(&other.pieces[j][c])))
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().flat_map(|p| p.iter().map(|c| c.degree())).max().unwrap_or(0)
    }

    /// Value of piece `j` at a macro barycentric point, as `(xx, xy, yy)`.
    pub fn eval_piece(&self, j: usize, lam: &[Q; 3]) -> [Q; 3] {
        [
            self.pieces[j][0].eval(lam),
            self.pieces[j][1].eval(lam),
            self.pieces[j][2].eval(lam),
        ]
    }

    /// `sigma . n` on piece `j` as two polynomial components.
    pub fn dot_normal(&self, j: usize, n: &Vec2Q) -> [BaryPoly; 2] {
        [
            self.pieces[j][0].scale(&n.x).add(&self.pieces[j][1].scale(&n.y)),
            self.pieces[j][1].scale(&n.x).add(&self.pieces[j][2].scale(&n.y)),
        ]
    }

    /// Frobenius pairing with another tensor field, per piece `j`.
    pub fn contract_piece(&self, other: &PiecewiseSymTensor, j: usize) -> BaryPoly {
        // a : b = a_xx b_xx + 2 a_xy b_xy + a_yy b_yy
        self.pieces[j][0]
            .mul(&other.pieces[j][0])
            .add(&self.pieces[j][1].mul(&other.pieces[j][1]).scale(&qi(2)))
            .add(&self.pieces[j][2].mul(&other.pieces[j][2]))
    }

    pub fn trace_component(&self, j: usize) -> BaryPoly {
        self.pieces[j][0].add(&self.pieces[j][2])
    }
}

/// The rotated Hessian (Airy operator):
/// `J(v) = [[d_yy v, -d_yx v], [-d_xy v, d_xx v]]`, per piece.
pub fn airy(macro_tri: &MacroTriangle, v: &PiecewiseScalar) -> PiecewiseSymTensor {
    let ex = Vec2Q::new(Q::one(), Q::zero());
    let ey = Vec2Q::new(Q::zero(), Q::one());
    let grads = macro_tri.grad_lambdas();
    let mk = |j: usize| {
        let px = directional(&v.pieces[j], grads, &ex);
        let py = directional(&v.pieces[j], grads, &ey);
        let pxx = directional(&px, grads, &ex);
        let pxy = directional(&px, grads, &ey);
        let pyy = directional(&py, grads, &ey);
        [pyy, pxy.neg(), pxx]
    };
    PiecewiseSymTensor { pieces: [mk(0), mk(1), mk(2)] }
}

/// Row-wise divergence of a symmetric tensor field, per piece.
pub fn divergence(macro_tri: &MacroTriangle, s: &PiecewiseSymTensor) -> PiecewiseVector {
    let ex = Vec2Q::new(Q::one(), Q::zero());
    let ey = Vec2Q::new(Q::zero(), Q::one());
    let grads = macro_tri.grad_lambdas();
    let mk = |j: usize| {
        let d1 = directional(&s.pieces[j][0], grads, &ex)
            .add(&directional(&s.pieces[j][1], grads, &ey));
        let d2 = directional(&s.pieces[j][1], grads, &ex)
            .add(&directional(&s.pieces[j][2], grads, &ey));
        [d1, d2]
    };
    PiecewiseVector { pieces: [mk(0), mk(1), mk(2)] }
}

/// Interior edge `i` of the split runs from vertex `i` to the barycenter
/// and separates pieces `i+1` and `i+2`.
pub fn interior_edge_pieces(i: usize) -> (usize, usize) {
    ((i + 1) % 3, (i + 2) % 3)
}

/// Macro barycentric endpoints of interior edge `i`: vertex `i` first, then
/// the barycenter.
pub fn interior_edge_endpoints(i: usize) -> ([Q; 3], [Q; 3]) {
    let mut start = [Q::zero(), Q::zero(), Q::zero()];
    start[i % 3] = Q::one();
    (start, [q(1, 3), q(1, 3), q(1, 3)])
}

/// What to compare across an interior edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    Value,
    Gradient,
    NormalTrace,
}

/// Jump of a scalar field across interior edge `i`, as edge polynomials in
/// the fixed parametrization (vertex `i` first, barycenter second).
/// `Value` yields one component, `Gradient` two.
pub fn jump_scalar(
    macro_tri: &MacroTriangle,
    v: &PiecewiseScalar,
    i: usize,
    kind: JumpKind,
) -> Vec<EdgePoly> {
    let (pa, pb) = interior_edge_pieces(i);
    let (start, end) = interior_edge_endpoints(i);
    match kind {
        JumpKind::Value => {
            let ta = v.pieces[pa].trace_on_segment(&start, &end);
            let tb = v.pieces[pb].trace_on_segment(&start, &end);
            vec![ta.sub(&tb)]
        }
        JumpKind::Gradient => {
            let g = v.gradient(macro_tri);
            (0..2)
                .map(|c| {
                    let ta = g.pieces[pa][c].trace_on_segment(&start, &end);
                    let tb = g.pieces[pb][c].trace_on_segment(&start, &end);
                    ta.sub(&tb)
                })
                .collect()
        }
        JumpKind::NormalTrace => panic!("normal traces apply to tensor fields"),
    }
}

/// Jump of `sigma . n` (unnormalized interior-edge normal) across interior
/// edge `i`; two components. The H(div) condition is invariant under the
/// positive scaling of `n`.
pub fn jump_tensor_normal(
    macro_tri: &MacroTriangle,
    s: &PiecewiseSymTensor,
    i: usize,
) -> Vec<EdgePoly> {
    let (pa, pb) = interior_edge_pieces(i);
    let (start, end) = interior_edge_endpoints(i);
    // Normal of the interior edge: rot of (v_c - v_i).
    let dir = macro_tri.t_c_to(i).neg();
    let n = dir.rot_neg90();
    let da = s.dot_normal(pa, &n);
    let db = s.dot_normal(pb, &n);
    (0..2)
        .map(|c| {
            let ta = da[c].trace_on_segment(&start, &end);
            let tb = db[c].trace_on_segment(&start, &end);
            ta.sub(&tb)
        })
        .collect()
}

/// Whether a scalar field is C1 across all three interior edges (value and
/// gradient jumps vanish identically).
pub fn is_c1(macro_tri: &MacroTriangle, v: &PiecewiseScalar) -> bool {
    (0..3).all(|i| {
        jump_scalar(macro_tri, v, i, JumpKind::Value).iter().all(|e| e.is_zero())
            && jump_scalar(macro_tri, v, i, JumpKind::Gradient).iter().all(|e| e.is_zero())
    })
}

/// Whether a tensor field is H(div)-conforming inside the split (all
/// interior normal-trace jumps vanish identically).
pub fn is_hdiv_conforming(macro_tri: &MacroTriangle, s: &PiecewiseSymTensor) -> bool {
    (0..3).all(|i| jump_tensor_normal(macro_tri, s, i).iter().all(|e| e.is_zero()))
}

/// Exact verification of the rotated-gradient identities on the refined
/// coordinates: `rot(grad(l_1^R|_{T_2})) = 3 t_{c,0} / (2|T|)` and
/// `rot(grad(l_2^R|_{T_1})) = 3 t_{0,c} / (2|T|)`.
pub fn rot_gradient_identity_check(macro_tri: &MacroTriangle) -> bool {
    let grads = macro_tri.grad_lambdas();
    let area2 = macro_tri.parent().area2();
    // grad(l_1^R|_{T_2}) = grad l_1 - grad l_2, rotated by -90 degrees.
    let lhs1 = grads[1].sub(&grads[2]).rot_neg90();
    let rhs1 = macro_tri.t_c_to(0).scale(&(qi(3) / area2));
    // grad(l_2^R|_{T_1}) = grad l_2 - grad l_1.
    let lhs2 = grads[2].sub(&grads[1]).rot_neg90();
    let rhs2 = macro_tri.t_c_to(0).neg().scale(&(qi(3) / area2));
    lhs1 == rhs1 && lhs2 == rhs2
}
