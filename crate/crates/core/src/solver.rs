//! Mixed Hellinger-Reissner elasticity solver on the enriched stress space
//! and discontinuous displacements, with pure-traction boundary handling
//! and a manufactured-solution convergence harness.
//!
//! Find `(sigma_h, u_h)` with
//! `(A sigma_h, tau) + (u_h, div tau) = 0` for all free `tau` and
//! `(div sigma_h, v) = (f, v)` for all `v`, where boundary stress DoFs are
//! eliminated to the traction data and the three rigid-motion modes of the
//! displacement are pinned through scalar Lagrange multipliers.
//!
//! Exact arithmetic produces every element matrix (Gram matrices, DoF
//! matrices, divergence coefficients); conversion to floating point happens
//! once per element at the solver boundary.

use nalgebra::DMatrix;

use crate::complex::{v_local_layout, Family, GlobalSpace};
use crate::fields::divergence;
use crate::geometry::MacroTriangle;
use crate::mesh::Mesh;
use crate::poly::BaryPoly;
use crate::quadrature::{gauss_legendre_unit, TriangleRule};
use crate::rational::{to_f64, Q};
use crate::stress::StressElement;
use num_traits::{One, Zero};

/// Isotropic material in Lame parameters; the compliance acts as
/// `A(sigma) = (sigma - lambda/(2 mu + 2 lambda) tr(sigma) I) / (2 mu)`,
/// positive definite for `mu > 0`, `lambda >= 0`, uniformly in the
/// incompressible limit.
#[derive(Debug, Clone, Copy)]
pub struct MaterialLaw {
    pub lambda: f64,
    pub mu: f64,
}

impl MaterialLaw {
    pub fn new(lambda: f64, mu: f64) -> Self {
        assert!(mu > 0.0 && lambda >= 0.0, "need mu > 0 and lambda >= 0");
        MaterialLaw { lambda, mu }
    }

    fn compliance_factors(&self) -> (f64, f64) {
        // A-Gram = c1 * Gram(sigma:tau) - c2 * Gram(tr tr)
        let c1 = 1.0 / (2.0 * self.mu);
        let c2 = self.lambda / (2.0 * self.mu * (2.0 * self.mu + 2.0 * self.lambda));
        (c1, c2)
    }
}

/// Per-element evaluation data kept for error norms and post-processing.
pub struct ElementEval {
    pub macro_tri: MacroTriangle,
    /// Nodal-to-shape coefficient transform (float).
    pub to_shape: DMatrix<f64>,
    /// Per shape function, per piece: dense float coefficients of the three
    /// tensor components, all homogenized to `degree`.
    shape_coeffs: Vec<[[Vec<f64>; 3]; 3]>,
    shape_degree: usize,
    pub s_map: Vec<usize>,
    pub v_map: Vec<usize>,
}

impl ElementEval {
    /// Evaluate the stress field with the given shape coefficients at a
    /// macro barycentric point (piece chosen by smallest coordinate).
    pub fn eval_stress(&self, shape: &[f64], lam: [f64; 3]) -> [f64; 3] {
        let piece = if lam[0] <= lam[1] && lam[0] <= lam[2] {
            0
        } else if lam[1] <= lam[2] {
            1
        } else {
            2
        };
        let mut out = [0.0f64; 3];
        for (c, coeffs) in shape.iter().zip(&self.shape_coeffs) {
            if *c == 0.0 {
                continue;
            }
            for comp in 0..3 {
                out[comp] += c
                    * BaryPoly::eval_dense_f64(&coeffs[piece][comp], self.shape_degree, lam);
            }
        }
        out
    }
}

/// Assembled mixed system on a mesh.
pub struct MixedAssembly {
    pub k: usize,
    pub space_sigma: GlobalSpace,
    pub space_v: GlobalSpace,
    pub a: DMatrix<f64>,
    /// Pairing `(v_a, div sigma_b)`.
    pub b: DMatrix<f64>,
    /// Rigid-motion moments `(v_a, r_m)`, `r in {(1,0), (0,1), (-y, x)}`.
    pub r: DMatrix<f64>,
    pub mass_v: DMatrix<f64>,
    pub boundary_dofs: Vec<usize>,
    pub elements: Vec<ElementEval>,
}

pub fn assemble_mixed(mesh: &Mesh, k: usize, material: &MaterialLaw) -> MixedAssembly {
    // At k = 1 the enriched space degenerates (the three enrichments and
    // P_1(T;S) overlap), so no unisolvent element exists at that order.
    assert!(k >= 2, "the mixed solver needs k >= 2");
    let space_sigma = GlobalSpace::new(mesh, Family::Sigma, k);
    let space_v = GlobalSpace::new(mesh, Family::V, k);
    let n_s = space_sigma.dim();
    let n_v = space_v.dim();
    let (c1, c2) = material.compliance_factors();

    let mut a = DMatrix::<f64>::zeros(n_s, n_s);
    let mut b = DMatrix::<f64>::zeros(n_v, n_s);
    let mut r = DMatrix::<f64>::zeros(n_v, 3);
    let mut mass_v = DMatrix::<f64>::zeros(n_v, n_v);
    let mut elements = Vec::with_capacity(mesh.num_triangles());

    let layout = v_local_layout(k);
    let nv_loc = layout.len();

    for ti in 0..mesh.num_triangles() {
        let m = MacroTriangle::new(mesh.triangle_geometry(ti));
        let st = StressElement::new(&m, k, space_sigma.orientation(ti).clone());
        let nloc = st.dim();
        let s_map = space_sigma.element_dof_map(mesh, ti);
        let v_map = space_v.element_dof_map(mesh, ti);
        let area = m.parent().area();

        // Exact shape-basis Grams for the compliance. Pairs of plain
        // polynomial basis functions integrate over the macro triangle in
        // one shot; only pairs touching an enrichment need the split.
        let n_mono = nloc - 3;
        let mut g_a = DMatrix::<f64>::zeros(nloc, nloc);
        for ia in 0..nloc {
            for ib in ia..nloc {
                let fa = &st.basis.functions[ia];
                let fb = &st.basis.functions[ib];
                let (frob, trtr) = if ia < n_mono && ib < n_mono {
                    (
                        fa.contract_piece(fb, 0).integral_over(&area),
                        fa.trace_component(0).mul(&fb.trace_component(0)).integral_over(&area),
                    )
                } else {
                    let mut frob = Q::zero();
                    let mut trtr = Q::zero();
                    for j in 0..3 {
                        frob += m.integrate_sub(&fa.contract_piece(fb, j), j);
                        trtr += m.integrate_sub(
                            &fa.trace_component(j).mul(&fb.trace_component(j)),
                            j,
                        );
                    }
                    (frob, trtr)
                };
                let v = c1 * to_f64(&frob) - c2 * to_f64(&trtr);
                g_a[(ia, ib)] = v;
                g_a[(ib, ia)] = v;
            }
        }

        // Exact divergence pairing in the shape basis.
        let divs: Vec<[BaryPoly; 2]> = st
            .basis
            .functions
            .iter()
            .map(|f| divergence(&m, f).single_poly().expect("polynomial divergence"))
            .collect();
        let mut p_shape = DMatrix::<f64>::zeros(nv_loc, nloc);
        for (row, (e, comp)) in layout.iter().enumerate() {
            let mono = BaryPoly::monomial(*e, Q::one());
            for bcol in 0..nloc {
                p_shape[(row, bcol)] = to_f64(&divs[bcol][*comp].mul(&mono).integral_over(&area));
            }
        }

        // Exact local V mass and rigid-motion moments.
        let x_poly = m.parent().x_poly();
        let y_poly = m.parent().y_poly();
        for (row, (er, cr)) in layout.iter().enumerate() {
            let mono_r = BaryPoly::monomial(*er, Q::one());
            for (col, (ec, cc)) in layout.iter().enumerate() {
                if cr != cc {
                    continue;
                }
                let v = to_f64(
                    &mono_r.mul(&BaryPoly::monomial(*ec, Q::one())).integral_over(&area),
                );
                mass_v[(v_map[row], v_map[col])] += v;
            }
            // r_0 = (1, 0), r_1 = (0, 1), r_2 = (-y, x)
            let moment0 = to_f64(&mono_r.integral_over(&area));
            if *cr == 0 {
                r[(v_map[row], 0)] += moment0;
                r[(v_map[row], 2)] += -to_f64(&mono_r.mul(&y_poly).integral_over(&area));
            } else {
                r[(v_map[row], 1)] += moment0;
                r[(v_map[row], 2)] += to_f64(&mono_r.mul(&x_poly).integral_over(&area));
            }
        }

        // Nodal transform.
        let n_f = DMatrix::from_row_slice(nloc, nloc, &st.dof_matrix.to_f64());
        let t = n_f.lu().try_inverse().expect("unisolvent stress element");
        let a_nodal = t.transpose() * g_a * &t;
        let p_nodal = p_shape * &t;
        for ia in 0..nloc {
            for ib in 0..nloc {
                a[(s_map[ia], s_map[ib])] += a_nodal[(ia, ib)];
            }
        }
        for row in 0..nv_loc {
            for bcol in 0..nloc {
                b[(v_map[row], s_map[bcol])] += p_nodal[(row, bcol)];
            }
        }

        // Evaluation data.
        let degree = st.basis.functions.iter().map(|f| f.max_degree()).max().unwrap_or(0);
        let shape_coeffs = st
            .basis
            .functions
            .iter()
            .map(|f| {
                let mut per_piece: [[Vec<f64>; 3]; 3] = Default::default();
                for j in 0..3 {
                    for comp in 0..3 {
                        per_piece[j][comp] = f.pieces[j][comp].dense_coeffs_f64(degree);
                    }
                }
                per_piece
            })
            .collect();
        elements.push(ElementEval {
            macro_tri: m,
            to_shape: t,
            shape_coeffs,
            shape_degree: degree,
            s_map,
            v_map,
        });
    }

    let mut boundary_dofs = Vec::new();
    for (eid, edge) in mesh.edges.iter().enumerate() {
        if edge.is_boundary() {
            for c in 0..space_sigma.per_edge {
                boundary_dofs.push(
                    space_sigma.per_vertex * space_sigma.num_vertices
                        + eid * space_sigma.per_edge
                        + c,
                );
            }
        }
    }
    boundary_dofs.sort_unstable();

    MixedAssembly {
        k,
        space_sigma,
        space_v,
        a,
        b,
        r,
        mass_v,
        boundary_dofs,
        elements,
    }
}

/// Right-hand data of one mixed solve.
pub struct MixedProblem {
    /// `(f, v_a)` for every displacement DoF.
    pub load: Vec<f64>,
    /// Traction data: values for every boundary stress DoF, in the order of
    /// `MixedAssembly::boundary_dofs`.
    pub boundary_values: Vec<f64>,
    /// Rigid-motion moments of the displacement, `(u, r_m)`.
    pub rigid_targets: [f64; 3],
}

/// Solution of a mixed solve.
pub struct MixedSolution {
    pub sigma: Vec<f64>,
    pub u: Vec<f64>,
    pub multipliers: [f64; 3],
    /// Relative residual of the assembled linear system.
    pub residual: f64,
    /// `|| div sigma_h - Q_h f ||_{L2} / max(1, ||Q_h f||_{L2})`:
    /// strong-equilibrium defect.
    pub equilibrium_defect: f64,
}

pub fn solve_mixed(assembly: &MixedAssembly, problem: &MixedProblem) -> Result<MixedSolution, String> {
    let n_s = assembly.space_sigma.dim();
    let n_v = assembly.space_v.dim();
    let fixed = &assembly.boundary_dofs;
    assert_eq!(problem.boundary_values.len(), fixed.len());
    assert_eq!(problem.load.len(), n_v);
    let is_fixed = {
        let mut mask = vec![false; n_s];
        for &d in fixed {
            mask[d] = true;
        }
        mask
    };
    let free: Vec<usize> = (0..n_s).filter(|d| !is_fixed[*d]).collect();
    let nf = free.len();
    let dim = nf + n_v + 3;

    let mut full_sigma = vec![0.0f64; n_s];
    for (&d, &v) in fixed.iter().zip(&problem.boundary_values) {
        full_sigma[d] = v;
    }

    let mut k_mat = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DMatrix::<f64>::zeros(dim, 1);
    for (i, &fi) in free.iter().enumerate() {
        for (j, &fj) in free.iter().enumerate() {
            k_mat[(i, j)] = assembly.a[(fi, fj)];
        }
        for vv in 0..n_v {
            k_mat[(i, nf + vv)] = assembly.b[(vv, fi)];
            k_mat[(nf + vv, i)] = assembly.b[(vv, fi)];
        }
        // Move the known boundary part to the right-hand side.
        let mut acc = 0.0;
        for &d in fixed {
            acc += assembly.a[(fi, d)] * full_sigma[d];
        }
        rhs[(i, 0)] = -acc;
    }
    for vv in 0..n_v {
        let mut acc = problem.load[vv];
        for &d in fixed {
            acc -= assembly.b[(vv, d)] * full_sigma[d];
        }
        rhs[(nf + vv, 0)] = acc;
        for mm in 0..3 {
            k_mat[(nf + vv, nf + n_v + mm)] = assembly.r[(vv, mm)];
            k_mat[(nf + n_v + mm, nf + vv)] = assembly.r[(vv, mm)];
        }
    }
    for mm in 0..3 {
        rhs[(nf + n_v + mm, 0)] = problem.rigid_targets[mm];
    }

    let lu = k_mat.clone().lu();
    let x = lu.solve(&rhs).ok_or("singular saddle-point system")?;
    let residual_vec = &k_mat * &x - &rhs;
    let denom = rhs.norm().max(1.0);
    let residual = residual_vec.norm() / denom;

    for (i, &fi) in free.iter().enumerate() {
        full_sigma[fi] = x[(i, 0)];
    }
    let u: Vec<f64> = (0..n_v).map(|vv| x[(nf + vv, 0)]).collect();
    let multipliers = [x[(dim - 3, 0)], x[(dim - 2, 0)], x[(dim - 1, 0)]];

    // Strong equilibrium: div sigma_h and Q_h f in V coefficients.
    let sig = DMatrix::from_column_slice(n_s, 1, &full_sigma);
    let b_sigma = &assembly.b * &sig;
    let f_vec = DMatrix::from_column_slice(n_v, 1, &problem.load);
    let chol = nalgebra::Cholesky::new(assembly.mass_v.clone()).ok_or("V mass not SPD")?;
    let div_coeff = chol.solve(&b_sigma);
    let qf_coeff = chol.solve(&f_vec);
    let diff = &div_coeff - &qf_coeff;
    let weighted = |v: &DMatrix<f64>| (v.transpose() * &assembly.mass_v * v)[(0, 0)].max(0.0).sqrt();
    let equilibrium_defect = weighted(&diff) / weighted(&qf_coeff).max(1.0);

    Ok(MixedSolution {
        sigma: full_sigma,
        u,
        multipliers,
        residual,
        equilibrium_defect,
    })
}

/// Builds a discrete manufactured pair: a random displacement in the
/// discrete space and the stress that satisfies the first mixed equation
/// exactly, then the matching load and boundary data. Recovering the pair
/// through `solve_mixed` is the patch test.
pub struct PatchData {
    pub problem: MixedProblem,
    pub sigma_star: Vec<f64>,
    pub u_star: Vec<f64>,
}

pub fn manufactured_discrete_pair(assembly: &MixedAssembly, seed: u64) -> PatchData {
    use rand::Rng;
    let mut rng = crate::sampling::rng_from_seed(seed);
    let n_v = assembly.space_v.dim();
    let u_star: Vec<f64> = (0..n_v).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u_vec = DMatrix::from_column_slice(n_v, 1, &u_star);
    // sigma* solves (A sigma*, tau) + (u*, div tau) = 0 for ALL tau.
    let rhs = -(assembly.b.transpose() * &u_vec);
    let sigma_star_vec = assembly
        .a
        .clone()
        .lu()
        .solve(&rhs)
        .expect("compliance Gram is SPD");
    let sigma_star: Vec<f64> = sigma_star_vec.column(0).iter().cloned().collect();
    let load_vec = &assembly.b * &sigma_star_vec;
    let load: Vec<f64> = load_vec.column(0).iter().cloned().collect();
    let boundary_values: Vec<f64> =
        assembly.boundary_dofs.iter().map(|&d| sigma_star[d]).collect();
    let rigid_vec = assembly.r.transpose() * &u_vec;
    let rigid_targets = [rigid_vec[(0, 0)], rigid_vec[(1, 0)], rigid_vec[(2, 0)]];
    PatchData {
        problem: MixedProblem { load, boundary_values, rigid_targets },
        sigma_star,
        u_star,
    }
}

/// A smooth manufactured solution with divergence-free displacement, so the
/// exact stress is independent of the first Lame parameter and the
/// incompressible-limit comparison is meaningful. Built from the stream
/// function `phi = sin(pi x) sin(pi y) + cos(pi x) sin(2 pi y)/4`.
pub struct ManufacturedTrig {
    pub mu: f64,
}

impl ManufacturedTrig {
    pub fn displacement(&self, x: f64, y: f64) -> [f64; 2] {
        use std::f64::consts::PI;
        let u1 = PI * (PI * x).sin() * (PI * y).cos()
            + 0.5 * PI * (PI * x).cos() * (2.0 * PI * y).cos();
        let u2 = -PI * (PI * x).cos() * (PI * y).sin()
            + 0.25 * PI * (PI * x).sin() * (2.0 * PI * y).sin();
        [u1, u2]
    }

    /// Cartesian components `(xx, xy, yy)`.
    pub fn stress(&self, x: f64, y: f64) -> [f64; 3] {
        use std::f64::consts::PI;
        let dxy = PI * PI * (PI * x).cos() * (PI * y).cos()
            - 0.5 * PI * PI * (PI * x).sin() * (2.0 * PI * y).cos();
        let s11 = 2.0 * self.mu * dxy;
        let s12 = -0.75 * self.mu * PI * PI * (PI * x).cos() * (2.0 * PI * y).sin();
        [s11, s12, -s11]
    }

    pub fn body_force(&self, x: f64, y: f64) -> [f64; 2] {
        use std::f64::consts::PI;
        let p3 = PI * PI * PI;
        let dy_lap = -2.0 * p3 * (PI * x).sin() * (PI * y).cos()
            - 2.5 * p3 * (PI * x).cos() * (2.0 * PI * y).cos();
        let dx_lap = -2.0 * p3 * (PI * x).cos() * (PI * y).sin()
            + 1.25 * p3 * (PI * x).sin() * (2.0 * PI * y).sin();
        [self.mu * dy_lap, -self.mu * dx_lap]
    }
}

/// Assembles the mixed problem data for a smooth manufactured solution:
/// quadrature loads, traction boundary values from the exact stress, and
/// exact rigid-motion moments.
pub fn trig_problem(mesh: &Mesh, assembly: &MixedAssembly, exact: &ManufacturedTrig) -> MixedProblem {
    let k = assembly.k;
    let rule = TriangleRule::with_degree(2 * (k + 3) + 2);
    let layout = v_local_layout(k);
    let mut load = vec![0.0f64; assembly.space_v.dim()];
    let mut rigid_targets = [0.0f64; 3];
    for ti in 0..mesh.num_triangles() {
        let tri = mesh.triangle_geometry(ti);
        let elem = &assembly.elements[ti];
        let xs: Vec<f64> = tri.vertices().iter().map(|p| to_f64(&p.x)).collect();
        let ys: Vec<f64> = tri.vertices().iter().map(|p| to_f64(&p.y)).collect();
        let area = to_f64(&tri.area());
        for (lam, w) in &rule.points {
            let x = lam[0] * xs[0] + lam[1] * xs[1] + lam[2] * xs[2];
            let y = lam[0] * ys[0] + lam[1] * ys[1] + lam[2] * ys[2];
            let f = exact.body_force(x, y);
            let u = exact.displacement(x, y);
            let rigid = [[1.0, 0.0], [0.0, 1.0], [-y, x]];
            for (local, (e, comp)) in layout.iter().enumerate() {
                let mono = lam[0].powi(e[0] as i32) * lam[1].powi(e[1] as i32)
                    * lam[2].powi(e[2] as i32);
                load[elem.v_map[local]] += w * area * mono * f[*comp];
            }
            for m in 0..3 {
                rigid_targets[m] += w * area * (u[0] * rigid[m][0] + u[1] * rigid[m][1]);
            }
        }
    }

    // Traction data: edge moments of the exact stress on boundary edges.
    let gauss = gauss_legendre_unit(k + 4);
    let mut boundary_values = Vec::with_capacity(assembly.boundary_dofs.len());
    let edge_dof_base = assembly.space_sigma.per_vertex * assembly.space_sigma.num_vertices;
    let per_edge = assembly.space_sigma.per_edge;
    for &dof in &assembly.boundary_dofs {
        let eid = (dof - edge_dof_base) / per_edge;
        let comp = (dof - edge_dof_base) % per_edge;
        let (a, b) = mesh.edges[eid].vertices;
        let pa = &mesh.vertices[a];
        let pb = &mesh.vertices[b];
        let (ax, ay) = (to_f64(&pa.x), to_f64(&pa.y));
        let (bx, by) = (to_f64(&pb.x), to_f64(&pb.y));
        // Global frame: tangent from lower to higher vertex index, normal
        // rotated by -90 degrees, both unnormalized.
        let (tx, ty) = (bx - ax, by - ay);
        let (nx, ny) = (ty, -tx);
        // DoF layout per edge: k+1 tangent moments then k+1 normal moments,
        // Bernstein exponents descending in mu0.
        let frame_normal = comp >= (k + 1);
        let idx = comp % (k + 1);
        let a_exp = (k - idx) as i32;
        let b_exp = idx as i32;
        let (fx, fy) = if frame_normal { (nx, ny) } else { (tx, ty) };
        let mut acc = 0.0;
        for &(s, w) in &gauss {
            let x = ax + s * tx;
            let y = ay + s * ty;
            let sig = exact.stress(x, y);
            let sn = [sig[0] * nx + sig[1] * ny, sig[1] * nx + sig[2] * ny];
            let bern = (1.0 - s).powi(a_exp) * s.powi(b_exp);
            acc += w * bern * (sn[0] * fx + sn[1] * fy);
        }
        boundary_values.push(acc);
    }

    MixedProblem { load, boundary_values, rigid_targets }
}

/// L2 errors of a mixed solution against the smooth manufactured fields.
pub fn trig_errors(
    mesh: &Mesh,
    assembly: &MixedAssembly,
    solution: &MixedSolution,
    exact: &ManufacturedTrig,
) -> (f64, f64) {
    let k = assembly.k;
    let rule = TriangleRule::with_degree(2 * (k + 3));
    let layout = v_local_layout(k);
    let mut err_sigma2 = 0.0;
    let mut err_u2 = 0.0;
    for ti in 0..mesh.num_triangles() {
        let elem = &assembly.elements[ti];
        let m = &elem.macro_tri;
        // Nodal coefficients -> shape coefficients.
        let nloc = elem.s_map.len();
        let c_nodal = DMatrix::from_fn(nloc, 1, |i, _| solution.sigma[elem.s_map[i]]);
        let c_shape_mat = &elem.to_shape * c_nodal;
        let c_shape: Vec<f64> = c_shape_mat.column(0).iter().cloned().collect();
        let u_coeff: Vec<f64> = elem.v_map.iter().map(|&g| solution.u[g]).collect();

        // Quadrature per subtriangle: the stress pieces differ across the
        // split even though the monomial part does not.
        for j in 0..3 {
            let sub = m.subtriangle(j);
            let xs: Vec<f64> = sub.vertices().iter().map(|p| to_f64(&p.x)).collect();
            let ys: Vec<f64> = sub.vertices().iter().map(|p| to_f64(&p.y)).collect();
            let subl = m.sub_vertex_lambdas(j);
            let lamf: Vec<[f64; 3]> = (0..3)
                .map(|vtx| {
                    [
                        to_f64(&subl[vtx][0]),
                        to_f64(&subl[vtx][1]),
                        to_f64(&subl[vtx][2]),
                    ]
                })
                .collect();
            let area = to_f64(&sub.area());
            for (lam_sub, w) in &rule.points {
                let x = lam_sub[0] * xs[0] + lam_sub[1] * xs[1] + lam_sub[2] * xs[2];
                let y = lam_sub[0] * ys[0] + lam_sub[1] * ys[1] + lam_sub[2] * ys[2];
                let lam_macro = [
                    lam_sub[0] * lamf[0][0] + lam_sub[1] * lamf[1][0] + lam_sub[2] * lamf[2][0],
                    lam_sub[0] * lamf[0][1] + lam_sub[1] * lamf[1][1] + lam_sub[2] * lamf[2][1],
                    lam_sub[0] * lamf[0][2] + lam_sub[1] * lamf[1][2] + lam_sub[2] * lamf[2][2],
                ];
                let sh = elem.eval_stress(&c_shape, lam_macro);
                let se = exact.stress(x, y);
                let d = [sh[0] - se[0], sh[1] - se[1], sh[2] - se[2]];
                err_sigma2 += w * area * (d[0] * d[0] + 2.0 * d[1] * d[1] + d[2] * d[2]);

                let mut uh = [0.0f64; 2];
                for (local, (e, comp)) in layout.iter().enumerate() {
                    let mono = lam_macro[0].powi(e[0] as i32)
                        * lam_macro[1].powi(e[1] as i32)
                        * lam_macro[2].powi(e[2] as i32);
                    uh[*comp] += u_coeff[local] * mono;
                }
                let ue = exact.displacement(x, y);
                let du = [uh[0] - ue[0], uh[1] - ue[1]];
                err_u2 += w * area * (du[0] * du[0] + du[1] * du[1]);
            }
        }
    }
    (err_sigma2.max(0.0).sqrt(), err_u2.max(0.0).sqrt())
}

/// One row of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub err_sigma: f64,
    pub err_u: f64,
    pub order_sigma: Option<f64>,
    pub order_u: Option<f64>,
}

/// Runs the smooth manufactured solution over `levels` uniform red
/// refinements of the input mesh (the input mesh is level 0).
pub fn convergence_study(
    mesh0: &Mesh,
    levels: usize,
    k: usize,
    material: &MaterialLaw,
) -> Result<Vec<ConvergenceRow>, String> {
    assert!(levels >= 1);
    let exact = ManufacturedTrig { mu: material.mu };
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut mesh = mesh0.clone();
    for level in 0..levels {
        if level > 0 {
            mesh = mesh.refine_red();
        }
        let assembly = assemble_mixed(&mesh, k, material);
        let problem = trig_problem(&mesh, &assembly, &exact);
        let solution = solve_mixed(&assembly, &problem)?;
        let (err_sigma, err_u) = trig_errors(&mesh, &assembly, &solution, &exact);
        let h = to_f64(&mesh.max_edge_len2()).sqrt();
        let (order_sigma, order_u) = match rows.last() {
            None => (None, None),
            Some(prev) => {
                let ratio = prev.h / h;
                (
                    Some((prev.err_sigma / err_sigma).ln() / ratio.ln()),
                    Some((prev.err_u / err_u).ln() / ratio.ln()),
                )
            }
        };
        rows.push(ConvergenceRow { level, h, err_sigma, err_u, order_sigma, order_u });
    }
    Ok(rows)
}

/// CSV with a header row and 15-significant-digit floats.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("level,h,err_sigma_L2,err_u_L2,order_sigma,order_u\n");
    for r in rows {
        let fmt = |x: f64| format!("{:.14e}", x);
        let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.level,
            fmt(r.h),
            fmt(r.err_sigma),
            fmt(r.err_u),
            opt(r.order_sigma),
            opt(r.order_u)
        ));
    }
    out
}

/// Relative l2 distance between coefficient vectors.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    (num / den.max(1e-300)).sqrt()
}

/// Exact rational assembly is deterministic; this helper re-runs assembly
/// and reports the max absolute difference of the system matrices, used by
/// the determinism test.
pub fn assembly_discrepancy(mesh: &Mesh, k: usize, material: &MaterialLaw) -> f64 {
    let a1 = assemble_mixed(mesh, k, material);
    let a2 = assemble_mixed(mesh, k, material);
    let d1 = (&a1.a - &a2.a).abs().max();
    let d2 = (&a1.b - &a2.b).abs().max();
    d1.max(d2)
}
