//! Browser bindings for exploring the composite elements on an interactive
//! triangle: sample C1 shape functions and stress enrichments as scalar
//! fields on a barycentric grid, and run the exact element verifications
//! for the current geometry.

use wasm_bindgen::prelude::*;

use macroelast::c1::{c1_dim, shape_basis_u, verify_airy_identity, verify_unisolvence_c1, C1Block};
use macroelast::fields::{divergence, is_c1, is_hdiv_conforming, PiecewiseScalar};
use macroelast::geometry::{MacroTriangle, Point2, Triangle};
use macroelast::poly::BaryPoly;
use macroelast::rational::{q, Q};
use macroelast::stress::{build_psi, stress_dim, verify_unisolvence_stress};

fn snap(x: f64) -> Q {
    // Snap browser coordinates to a fine rational grid so that all exact
    // machinery applies to the dragged triangle.
    q((x * 1024.0).round() as i64, 1024)
}

/// Sample a piecewise field (dense per-piece coefficients) on an `n x n`
/// grid over the `(lambda_1, lambda_2)` barycentric square; entries outside
/// the triangle are NaN.
fn sample_grid(pieces: &[Vec<f64>; 3], degree: usize, n: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; n * n];
    for a in 0..n {
        for b in 0..n {
            let l1 = a as f64 / (n - 1) as f64;
            let l2 = b as f64 / (n - 1) as f64;
            let l0 = 1.0 - l1 - l2;
            if l0 < -1e-12 {
                continue;
            }
            let lam = [l0.max(0.0), l1, l2];
            let piece = if lam[0] <= lam[1] && lam[0] <= lam[2] {
                0
            } else if lam[1] <= lam[2] {
                1
            } else {
                2
            };
            out[a * n + b] = BaryPoly::eval_dense_f64(&pieces[piece], degree, lam);
        }
    }
    out
}

fn field_coeffs(field: &PiecewiseScalar) -> ([Vec<f64>; 3], usize) {
    let degree = field.max_degree();
    let out = [
        field.pieces[0].dense_coeffs_f64(degree),
        field.pieces[1].dense_coeffs_f64(degree),
        field.pieces[2].dense_coeffs_f64(degree),
    ];
    (out, degree)
}

/// Interactive element explorer bound to one triangle and one order `k`.
#[wasm_bindgen]
pub struct Demo {
    macro_tri: MacroTriangle,
    k: usize,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        let tri = Triangle::new(
            Point2::new(q(0, 1), q(0, 1)),
            Point2::new(q(1, 1), q(0, 1)),
            Point2::new(q(0, 1), q(1, 1)),
        )
        .unwrap();
        Demo { macro_tri: MacroTriangle::new(tri), k: 2 }
    }

    /// Set the triangle from `[x0, y0, x1, y1, x2, y2]`; rejects degenerate
    /// input and keeps the previous triangle in that case.
    pub fn set_vertices(&mut self, coords: &[f64]) -> Result<(), String> {
        if coords.len() != 6 {
            return Err("expected 6 coordinates".into());
        }
        let tri = Triangle::new(
            Point2::new(snap(coords[0]), snap(coords[1])),
            Point2::new(snap(coords[2]), snap(coords[3])),
            Point2::new(snap(coords[4]), snap(coords[5])),
        )
        .map_err(|e| e.to_string())?;
        self.macro_tri = MacroTriangle::new(tri);
        Ok(())
    }

    pub fn set_degree(&mut self, k: usize) {
        self.k = k.min(4);
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// Dimension of the C1 space at the current order.
    pub fn c1_dimension(&self) -> usize {
        c1_dim(self.k)
    }

    /// Block label of a C1 basis function.
    pub fn c1_label(&self, index: usize) -> String {
        let basis = shape_basis_u(&self.macro_tri, self.k);
        for (block, cols) in &basis.blocks {
            if let Some(pos) = cols.iter().position(|&c| c == index) {
                let name = match block {
                    C1Block::VertexValue => "vertex value",
                    C1Block::VertexGradient => "vertex gradient",
                    C1Block::EdgeValue => "edge value",
                    C1Block::EdgeNormal => "edge normal / enrichment",
                    C1Block::Interior => "interior",
                };
                return format!("{name} #{pos}");
            }
        }
        "out of range".into()
    }

    /// Sample a C1 shape function on an `n x n` barycentric grid
    /// (`lambda_1`, `lambda_2` axes); entries outside the triangle are NaN.
    pub fn sample_c1_basis(&self, index: usize, n: usize) -> Vec<f64> {
        let basis = shape_basis_u(&self.macro_tri, self.k);
        if index >= basis.functions.len() || n < 2 {
            return vec![];
        }
        let (coeffs, degree) = field_coeffs(&basis.functions[index]);
        sample_grid(&coeffs, degree, n)
    }

    /// Sample a Cartesian component (`0 = xx, 1 = xy, 2 = yy`) of a stress
    /// enrichment `psi_i` on the grid.
    pub fn sample_stress_enrichment(&self, i: usize, comp: usize, n: usize) -> Vec<f64> {
        if i >= 3 || comp >= 3 || n < 2 || self.k < 1 {
            return vec![];
        }
        let psi = build_psi(&self.macro_tri, self.k, i);
        let degree = psi.max_degree();
        let coeffs = [
            psi.pieces[0][comp].dense_coeffs_f64(degree),
            psi.pieces[1][comp].dense_coeffs_f64(degree),
            psi.pieces[2][comp].dense_coeffs_f64(degree),
        ];
        sample_grid(&coeffs, degree, n)
    }

    /// Physical coordinates of the triangle and its barycenter, flattened.
    pub fn geometry(&self) -> Vec<f64> {
        let t = self.macro_tri.parent();
        let b = self.macro_tri.barycenter();
        let f = macroelast::rational::to_f64;
        vec![
            f(&t.vertex(0).x),
            f(&t.vertex(0).y),
            f(&t.vertex(1).x),
            f(&t.vertex(1).y),
            f(&t.vertex(2).x),
            f(&t.vertex(2).y),
            f(&b.x),
            f(&b.y),
        ]
    }

    /// Exact verification of the element algebra on the current triangle,
    /// as a JSON object.
    pub fn verification_summary(&self) -> String {
        let k = self.k.max(1);
        let psi_ok = (0..3).all(|i| {
            let psi = build_psi(&self.macro_tri, k, i);
            divergence(&self.macro_tri, &psi).is_zero()
                && is_hdiv_conforming(&self.macro_tri, &psi)
        });
        let airy_ok = verify_airy_identity(&self.macro_tri, k);
        let c1_basis_ok =
            shape_basis_u(&self.macro_tri, self.k).functions.iter().all(|f| is_c1(&self.macro_tri, f));
        let c1_unisolvent = verify_unisolvence_c1(&self.macro_tri, self.k).is_unisolvent();
        let stress_unisolvent = verify_unisolvence_stress(&self.macro_tri, k).is_unisolvent();
        serde_json::json!({
            "k": self.k,
            "dim_c1": c1_dim(self.k),
            "dim_stress": stress_dim(k),
            "psi_divergence_free": psi_ok,
            "airy_identity": airy_ok,
            "c1_jumps_zero": c1_basis_ok,
            "c1_unisolvent": c1_unisolvent,
            "stress_unisolvent": stress_unisolvent,
        })
        .to_string()
    }
}

impl Default for Demo {
    fn default() -> Self {
        Self::new()
    }
}
