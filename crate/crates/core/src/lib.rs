//! Exact composite finite elements for planar elasticity on barycentric
//! refinements.
//!
//! Each triangle is split into three subtriangles at its barycenter. On the
//! split, the crate builds, in exact rational arithmetic:
//!
//! - the enriched symmetric stress element `P_k(T;S) (+) span{psi_0, psi_1,
//!   psi_2}` with divergence-free, H(div)-conforming enrichments given in
//!   closed form ([`stress`]);
//! - the C1 potential elements `U_{k+2}(T) = P_{k+2}(T) (+) span{v_i}` with
//!   `J(v_i) = psi_i` for the rotated Hessian `J`, plus the cubic and
//!   quadratic composite elements with explicit dual bases ([`c1`]);
//! - global spaces on conforming meshes, the exact operator matrices of `J`
//!   and the divergence, and rank certificates of the discrete elasticity
//!   complex `P_1 -> U -> Sigma -> V -> 0` ([`complex`]);
//! - a mixed Hellinger-Reissner solver with traction boundary conditions
//!   and a manufactured-solution convergence harness ([`solver`]).
//!
//! Everything up to the solver boundary is rational: unit normals never
//! appear, all edge quantities carry exact squared lengths or symbolic
//! length factors, and every algebraic identity is asserted with zero
//! tolerance.

pub mod c1;
pub mod complex;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod poly;
pub mod quadrature;
pub mod rational;
pub mod report;
pub mod sampling;
pub mod solver;
pub mod stress;
