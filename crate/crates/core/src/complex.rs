//! Global spaces on a mesh and the discrete elasticity complex.
//!
//! Three families are assembled: the C1 potential space (vertex, edge, and
//! interior DoFs, single-valued across elements), the H(div) stress space
//! (edge and interior moments), and the discontinuous vector displacement
//! space (per-element monomial coefficients). Edge DoFs are written against
//! the global lower-to-higher vertex orientation, so the local-to-global
//! map needs no sign flips; the operator matrices of the rotated Hessian
//! and the divergence are assembled exactly and the complex property is
//! certified through exact rank arithmetic.

use num_traits::{One, Zero};

use crate::c1::{C1DofSet, C1DofVariant, C1Element};
use crate::fields::{airy, divergence, PiecewiseScalar, PiecewiseSymTensor};
use crate::geometry::{EdgeOrientation, MacroTriangle, Triangle};
use crate::linalg::QMatrix;
use crate::mesh::Mesh;
use crate::poly::{exponents_of_degree, BaryPoly, CartPoly};
use crate::rational::{q, to_f64, Q};
use crate::stress::{sym_units, StressDofSet, StressElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// C1 potentials of degree k+2.
    U,
    /// Symmetric H(div) stresses of degree k (enriched).
    Sigma,
    /// Discontinuous vector displacements of degree k-1.
    V,
}

/// Per-entity DoF counts for a family at order `k`.
fn entity_counts(family: Family, k: usize) -> (usize, usize, usize) {
    match family {
        Family::U => match k {
            0 => (3, 0, 0),
            1 => (3, 1, 0),
            _ => (3, 2 * k - 1, if k >= 4 { (k - 2) * (k - 3) / 2 } else { 0 }),
        },
        Family::Sigma => {
            assert!(k >= 1);
            (0, 2 * (k + 1), 3 * k * (k - 1) / 2)
        }
        Family::V => {
            assert!(k >= 1);
            (0, 0, k * (k + 1))
        }
    }
}

/// A global finite element space: numbering (vertices, then edges in global
/// order, then triangles) and per-element edge orientations.
pub struct GlobalSpace {
    pub family: Family,
    pub k: usize,
    pub per_vertex: usize,
    pub per_edge: usize,
    pub per_triangle: usize,
    pub num_vertices: usize,
    pub num_edges: usize,
    pub num_triangles: usize,
    /// Per-triangle edge orientation induced by the global vertex order.
    orientations: Vec<EdgeOrientation>,
}

impl GlobalSpace {
    pub fn new(mesh: &Mesh, family: Family, k: usize) -> Self {
        let (per_vertex, per_edge, per_triangle) = entity_counts(family, k);
        let orientations = (0..mesh.num_triangles())
            .map(|ti| mesh_edge_orientation(mesh, ti))
            .collect();
        GlobalSpace {
            family,
            k,
            per_vertex,
            per_edge,
            per_triangle,
            num_vertices: mesh.num_vertices(),
            num_edges: mesh.num_edges(),
            num_triangles: mesh.num_triangles(),
            orientations,
        }
    }

    pub fn dim(&self) -> usize {
        self.per_vertex * self.num_vertices
            + self.per_edge * self.num_edges
            + self.per_triangle * self.num_triangles
    }

    pub fn orientation(&self, ti: usize) -> &EdgeOrientation {
        &self.orientations[ti]
    }

    /// Deliberately break the single-valuedness of one element's edge
    /// parametrization; negative-control hook for the conformity checks.
    pub fn flip_local_edge_orientation(&mut self, ti: usize, local_edge: usize) {
        self.orientations[ti].flip(local_edge);
    }

    fn vertex_dof(&self, v: usize, comp: usize) -> usize {
        debug_assert!(comp < self.per_vertex);
        v * self.per_vertex + comp
    }

    fn edge_dof(&self, e: usize, comp: usize) -> usize {
        debug_assert!(comp < self.per_edge);
        self.per_vertex * self.num_vertices + e * self.per_edge + comp
    }

    fn triangle_dof(&self, t: usize, comp: usize) -> usize {
        debug_assert!(comp < self.per_triangle);
        self.per_vertex * self.num_vertices
            + self.per_edge * self.num_edges
            + t * self.per_triangle + comp
    }

    /// Global DoF indices of element `ti`, in the canonical local DoF order
    /// of the element (vertices, then local edges, then interior).
    pub fn element_dof_map(&self, mesh: &Mesh, ti: usize) -> Vec<usize> {
        let tri = &mesh.triangles[ti];
        let mut out = Vec::new();
        for lv in 0..3 {
            for c in 0..self.per_vertex {
                out.push(self.vertex_dof(tri[lv], c));
            }
        }
        for le in 0..3 {
            let (a, b) = (tri[(le + 1) % 3], tri[(le + 2) % 3]);
            let ge = mesh.edge_id(a, b).expect("edge exists");
            for c in 0..self.per_edge {
                out.push(self.edge_dof(ge, c));
            }
        }
        for c in 0..self.per_triangle {
            out.push(self.triangle_dof(ti, c));
        }
        out
    }
}

/// Edge orientation of element `ti` induced by ascending global vertex
/// indices (the mesh convention for single-valued edge DoFs).
pub fn mesh_edge_orientation(mesh: &Mesh, ti: usize) -> EdgeOrientation {
    let tri = &mesh.triangles[ti];
    let mut from_to = [(0usize, 0usize); 3];
    for le in 0..3 {
        let (la, lb) = ((le + 1) % 3, (le + 2) % 3);
        if tri[la] < tri[lb] {
            from_to[le] = (la, lb);
        } else {
            from_to[le] = (lb, la);
        }
    }
    EdgeOrientation { from_to }
}

/// Monomial DoF layout of the local displacement space `P_{k-1}(T; R^2)`:
/// exponent triples of degree `k-1`, two components each.
pub fn v_local_layout(k: usize) -> Vec<([u16; 3], usize)> {
    let mut out = Vec::new();
    for e in exponents_of_degree(k - 1) {
        for comp in 0..2 {
            out.push((e, comp));
        }
    }
    out
}

fn macro_of(mesh: &Mesh, ti: usize) -> MacroTriangle {
    MacroTriangle::new(mesh.triangle_geometry(ti))
}

/// Assembled operators of the discrete complex at order `k`.
pub struct ComplexOperators {
    pub space_u: GlobalSpace,
    pub space_sigma: GlobalSpace,
    pub space_v: GlobalSpace,
    /// `(dim Sigma) x (dim U)`, exact.
    pub j_matrix: QMatrix,
    /// `(dim V) x (dim Sigma)`, exact.
    pub div_matrix: QMatrix,
}

/// Assemble the exact J and div operator matrices on a mesh.
///
/// A column of `j_matrix` is the stress-DoF vector of the rotated Hessian
/// of the corresponding global potential basis function; contributions from
/// the two elements sharing an edge must agree exactly (conformity), which
/// is asserted during assembly.
pub fn assemble_complex(mesh: &Mesh, k: usize) -> ComplexOperators {
    assert!(k >= 2, "the discrete complex needs k >= 2");
    let space_u = GlobalSpace::new(mesh, Family::U, k);
    let space_sigma = GlobalSpace::new(mesh, Family::Sigma, k);
    let space_v = GlobalSpace::new(mesh, Family::V, k);

    let mut j_matrix = QMatrix::zeros(space_sigma.dim(), space_u.dim());
    let mut j_written = vec![false; space_sigma.dim() * space_u.dim()];
    let mut div_matrix = QMatrix::zeros(space_v.dim(), space_sigma.dim());

    for ti in 0..mesh.num_triangles() {
        let m = macro_of(mesh, ti);
        let orient = space_u.orientation(ti).clone();
        let c1 = C1Element::new(&m, k, orient.clone());
        let st = StressElement::new(&m, k, orient.clone());
        let u_map = space_u.element_dof_map(mesh, ti);
        let s_map = space_sigma.element_dof_map(mesh, ti);
        let v_map = space_v.element_dof_map(mesh, ti);

        // J columns: nodal basis function of each local U DoF.
        for (ldof, &gcol) in u_map.iter().enumerate() {
            let coeffs: Vec<Q> =
                (0..c1.dim()).map(|b| c1.dof_matrix_inv[(b, ldof)].clone()).collect();
            let phi = c1.combine(&coeffs);
            let j_phi = airy(&m, &phi);
            for (srow_local, dof) in st.dofs.dofs.iter().enumerate() {
                let val = st.dofs.apply(&m, &j_phi, dof);
                let grow = s_map[srow_local];
                let flat = grow * space_u.dim() + gcol;
                if j_written[flat] {
                    assert_eq!(
                        j_matrix[(grow, gcol)], val,
                        "conformity violated: inconsistent shared edge DoF"
                    );
                } else {
                    j_matrix[(grow, gcol)] = val;
                    j_written[flat] = true;
                }
            }
        }

        // div columns: nodal stress basis functions have single-polynomial
        // divergence by construction of the enriched space.
        for (ldof, &gcol) in s_map.iter().enumerate() {
            let coeffs: Vec<Q> =
                (0..st.dim()).map(|b| st.dof_matrix_inv[(b, ldof)].clone()).collect();
            let sigma = st.combine(&coeffs);
            let div = divergence(&m, &sigma)
                .single_poly()
                .expect("enriched stress has polynomial divergence");
            let cx = div[0].dense_coeffs(k - 1);
            let cy = div[1].dense_coeffs(k - 1);
            for (vrow_local, (_, comp)) in v_local_layout(k).iter().enumerate() {
                let exp_idx = vrow_local / 2;
                let val = if *comp == 0 { cx[exp_idx].clone() } else { cy[exp_idx].clone() };
                div_matrix[(v_map[vrow_local], gcol)] = val;
            }
        }
    }

    ComplexOperators { space_u, space_sigma, space_v, j_matrix, div_matrix }
}

/// Exact-rank certificate of the complex property.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExactnessReport {
    pub dim_u: usize,
    pub dim_sigma: usize,
    pub dim_v: usize,
    pub rank_j: usize,
    pub rank_div: usize,
    pub div_j_is_zero: bool,
    pub alternating_sum: i64,
    pub kernel_of_j_is_rigid: bool,
}

impl ExactnessReport {
    pub fn is_exact(&self) -> bool {
        self.div_j_is_zero
            && self.rank_j + 3 == self.dim_u
            && self.rank_div == self.dim_v
            && self.rank_j + self.rank_div == self.dim_sigma
            && self.alternating_sum == 0
            && self.kernel_of_j_is_rigid
    }
}

/// Verifies exactness of the discrete complex on a simply connected mesh:
/// `rank J = dim U - 3`, `rank div = dim V`, `rank J + rank div = dim Sigma`,
/// `div . J = 0`, and the affine functions span the kernel of `J`.
pub fn verify_exactness(mesh: &Mesh, k: usize) -> Result<ExactnessReport, String> {
    if !mesh.is_simply_connected() {
        return Err(format!(
            "exactness requires a simply connected mesh; Euler characteristic is {}",
            mesh.euler_characteristic()
        ));
    }
    let ops = assemble_complex(mesh, k);
    let rank_j = ops.j_matrix.rank();
    let rank_div = ops.div_matrix.rank();
    let div_j = ops.div_matrix.mul(&ops.j_matrix);
    let dim_u = ops.space_u.dim();
    let dim_sigma = ops.space_sigma.dim();
    let dim_v = ops.space_v.dim();

    // The three global affine functions interpolate to kernel vectors of J.
    let kernel_of_j_is_rigid = {
        let affines = [
            CartPoly::constant(Q::one()),
            CartPoly::monomial(1, 0, Q::one()),
            CartPoly::monomial(0, 1, Q::one()),
        ];
        affines.iter().all(|p| {
            match interpolate_h2_global(mesh, &ops.space_u, k, p) {
                Ok(coeffs) => ops.j_matrix.mul_vec(&coeffs).iter().all(|x| x.is_zero()),
                Err(_) => false,
            }
        })
    };

    Ok(ExactnessReport {
        dim_u,
        dim_sigma,
        dim_v,
        rank_j,
        rank_div,
        div_j_is_zero: div_j.is_zero(),
        alternating_sum: dim_u as i64 - 3 - dim_sigma as i64 + dim_v as i64,
        kernel_of_j_is_rigid,
    })
}

/// Nodal interpolation of a globally smooth scalar polynomial into the C1
/// space: applies every element's DoFs and checks that shared DoFs receive
/// identical values.
pub fn interpolate_h2_global(
    mesh: &Mesh,
    space: &GlobalSpace,
    k: usize,
    v: &CartPoly,
) -> Result<Vec<Q>, String> {
    assemble_single_valued(mesh, space, |ti| {
        let m = macro_of(mesh, ti);
        let tri = mesh.triangle_geometry(ti);
        let field = PiecewiseScalar::from_poly(&v.to_bary(&tri.xs(), &tri.ys()));
        let dofs = C1DofSet::new(k, C1DofVariant::Standard, space.orientation(ti).clone());
        dofs.dofs.iter().map(|d| dofs.apply(&m, &field, d)).collect()
    })
}

/// Nodal interpolation of a globally smooth symmetric tensor polynomial
/// (components `xx, xy, yy`) into the stress space.
pub fn interpolate_hdiv_global(
    mesh: &Mesh,
    space: &GlobalSpace,
    k: usize,
    tensor: &[CartPoly; 3],
) -> Result<Vec<Q>, String> {
    assemble_single_valued(mesh, space, |ti| {
        let m = macro_of(mesh, ti);
        let tri = mesh.triangle_geometry(ti);
        let field = cart_tensor_on(&tri, tensor);
        let dofs = StressDofSet::new(k, space.orientation(ti).clone());
        dofs.dofs.iter().map(|d| dofs.apply(&m, &field, d)).collect()
    })
}

/// A Cartesian-component tensor field restricted to one triangle.
pub fn cart_tensor_on(tri: &Triangle, tensor: &[CartPoly; 3]) -> PiecewiseSymTensor {
    let comps = [
        tensor[0].to_bary(&tri.xs(), &tri.ys()),
        tensor[1].to_bary(&tri.xs(), &tri.ys()),
        tensor[2].to_bary(&tri.xs(), &tri.ys()),
    ];
    let units = sym_units();
    let mut out = PiecewiseSymTensor::zero();
    for (ci, unit) in units.iter().enumerate() {
        let scale = if ci == 1 { q(2, 1) } else { Q::one() };
        out = out.add(&PiecewiseSymTensor::from_poly_times_const(&comps[ci].scale(&scale), unit));
    }
    out
}

fn assemble_single_valued(
    mesh: &Mesh,
    space: &GlobalSpace,
    mut local_values: impl FnMut(usize) -> Vec<Q>,
) -> Result<Vec<Q>, String> {
    let mut out = vec![Q::zero(); space.dim()];
    let mut written = vec![false; space.dim()];
    for ti in 0..mesh.num_triangles() {
        let values = local_values(ti);
        let map = space.element_dof_map(mesh, ti);
        assert_eq!(values.len(), map.len());
        for (val, &g) in values.into_iter().zip(&map) {
            if written[g] {
                if out[g] != val {
                    return Err(format!(
                        "DoF {g} is not single-valued: {} vs {}",
                        out[g], val
                    ));
                }
            } else {
                out[g] = val;
                written[g] = true;
            }
        }
    }
    Ok(out)
}

/// Elementwise exact L2 projection of a smooth vector polynomial onto the
/// displacement space, returned as global V coefficients.
pub fn project_v_global(mesh: &Mesh, space_v: &GlobalSpace, k: usize, f: &[CartPoly; 2]) -> Vec<Q> {
    let mut out = vec![Q::zero(); space_v.dim()];
    for ti in 0..mesh.num_triangles() {
        let tri = mesh.triangle_geometry(ti);
        let fx = f[0].to_bary(&tri.xs(), &tri.ys());
        let fy = f[1].to_bary(&tri.xs(), &tri.ys());
        let coeffs = project_onto_pk(&tri, &[fx, fy], k - 1);
        let map = space_v.element_dof_map(mesh, ti);
        for (local, &g) in map.iter().enumerate() {
            out[g] = coeffs[local].clone();
        }
    }
    out
}

/// Exact L2 projection of a vector polynomial onto `P_d(T; R^2)` in the
/// interleaved monomial layout.
pub fn project_onto_pk(tri: &Triangle, f: &[BaryPoly; 2], d: usize) -> Vec<Q> {
    let exps = exponents_of_degree(d);
    let nb = exps.len();
    let area = tri.area();
    let mass = QMatrix::from_fn(nb, nb, |a, b| {
        BaryPoly::monomial(exps[a], Q::one())
            .mul(&BaryPoly::monomial(exps[b], Q::one()))
            .integral_over(&area)
    });
    let mut out = vec![Q::zero(); 2 * nb];
    for comp in 0..2 {
        let rhs = QMatrix::from_fn(nb, 1, |a, _| {
            f[comp].mul(&BaryPoly::monomial(exps[a], Q::one())).integral_over(&area)
        });
        let sol = mass.solve(&rhs).expect("monomial mass matrix is invertible");
        for a in 0..nb {
            out[2 * a + comp] = sol[(a, 0)].clone();
        }
    }
    out
}

/// One failed identity from the commuting verification.
#[derive(Debug, Clone)]
pub struct CommutingFailure {
    pub identity: &'static str,
    pub trial: usize,
    pub dof: usize,
}

/// Verifies the interpolation identities on random rational polynomial
/// trial fields, exactly:
/// `div(I_sigma tau) = Q_V(div tau)` for tensors of degree `k+2`, and
/// `I_sigma(J v) = J(I_u v)` for scalars of degree `k+4`.
pub fn verify_commuting(
    mesh: &Mesh,
    k: usize,
    seed: u64,
    trials: usize,
) -> Result<(), CommutingFailure> {
    use crate::sampling::{random_cart_poly, random_cart_sym_tensor, rng_from_seed};
    let ops = assemble_complex(mesh, k);
    let mut rng = rng_from_seed(seed);

    for trial in 0..trials {
        // First identity.
        let tensor = random_cart_sym_tensor(&mut rng, k + 2);
        let coeffs = interpolate_hdiv_global(mesh, &ops.space_sigma, k, &tensor)
            .expect("smooth fields have single-valued DoFs");
        let lhs = ops.div_matrix.mul_vec(&coeffs);
        let div_tau = [
            tensor[0].diff_x().add(&tensor[1].diff_y()),
            tensor[1].diff_x().add(&tensor[2].diff_y()),
        ];
        let rhs = project_v_global(mesh, &ops.space_v, k, &div_tau);
        if let Some(dof) = (0..lhs.len()).find(|&i| lhs[i] != rhs[i]) {
            return Err(CommutingFailure { identity: "div-projection", trial, dof });
        }

        // Second identity.
        let v = random_cart_poly(&mut rng, k + 4);
        let u_coeffs = interpolate_h2_global(mesh, &ops.space_u, k, &v)
            .expect("smooth fields have single-valued DoFs");
        let lhs = ops.j_matrix.mul_vec(&u_coeffs);
        let jv = [
            v.diff_y().diff_y(),
            v.diff_x().diff_y().scale(&-Q::one()),
            v.diff_x().diff_x(),
        ];
        let rhs = interpolate_hdiv_global(mesh, &ops.space_sigma, k, &jv)
            .expect("smooth fields have single-valued DoFs");
        if let Some(dof) = (0..lhs.len()).find(|&i| lhs[i] != rhs[i]) {
            return Err(CommutingFailure { identity: "airy-interpolation", trial, dof });
        }
    }
    Ok(())
}

/// Failure witness of the global C1 conformity check.
#[derive(Debug, Clone)]
pub struct C1Violation {
    pub edge: usize,
    pub global_dof: usize,
}

/// Exact global C1 check: across every interior mesh edge, the value and
/// gradient traces of every global basis function agree between the two
/// incident elements.
pub fn global_c1_check(mesh: &Mesh, space: &GlobalSpace, k: usize) -> Result<(), C1Violation> {
    for (eid, edge) in mesh.interior_edges() {
        let t0 = edge.triangles[0];
        let t1 = edge.triangles[1];
        let data: Vec<(usize, MacroTriangle, C1Element, Vec<usize>, usize)> = [t0, t1]
            .iter()
            .map(|&ti| {
                let m = macro_of(mesh, ti);
                let elem = C1Element::new(&m, k, space.orientation(ti).clone());
                let map = space.element_dof_map(mesh, ti);
                let le = mesh.local_edge_of(ti, eid).expect("incident edge");
                (ti, m, elem, map, le)
            })
            .collect();

        // Union of global DoFs supported on either element.
        let mut dofs: Vec<usize> = data.iter().flat_map(|(_, _, _, map, _)| map.clone()).collect();
        dofs.sort_unstable();
        dofs.dedup();

        for &g in &dofs {
            let mut traces = Vec::new();
            for (ti, m, elem, map, le) in &data {
                let local = map.iter().position(|&x| x == g);
                let (value, grad) = match local {
                    None => (crate::poly::EdgePoly::zero(), [
                        crate::poly::EdgePoly::zero(),
                        crate::poly::EdgePoly::zero(),
                    ]),
                    Some(ldof) => {
                        let coeffs: Vec<Q> = (0..elem.dim())
                            .map(|b| elem.dof_matrix_inv[(b, ldof)].clone())
                            .collect();
                        let phi = elem.combine(&coeffs);
                        // Parametrize by the canonical global edge direction,
                        // independent of the element's DoF orientation.
                        let (s, e) = canonical_edge_endpoints(mesh, *ti, eid);
                        let value = phi.boundary_trace(*le, &s, &e);
                        let gradient = phi.gradient(m);
                        let gx = gradient.pieces[*le][0].trace_on_segment(&s, &e);
                        let gy = gradient.pieces[*le][1].trace_on_segment(&s, &e);
                        (value, [gx, gy])
                    }
                };
                traces.push((value, grad));
            }
            let (va, ga) = &traces[0];
            let (vb, gb) = &traces[1];
            if !va.eq_fn(vb) || !ga[0].eq_fn(&gb[0]) || !ga[1].eq_fn(&gb[1]) {
                return Err(C1Violation { edge: eid, global_dof: g });
            }
        }
    }
    Ok(())
}

/// Local barycentric coordinates of the canonical (lower global vertex
/// first) endpoints of a mesh edge inside one of its triangles; this fixes
/// the trace parametrization independently of any stored DoF orientation.
fn canonical_edge_endpoints(mesh: &Mesh, ti: usize, eid: usize) -> ([Q; 3], [Q; 3]) {
    let (a, b) = mesh.edges[eid].vertices;
    let tri = &mesh.triangles[ti];
    let unit = |g: usize| {
        let lv = tri.iter().position(|&v| v == g).expect("edge vertex in triangle");
        let mut l = [Q::zero(), Q::zero(), Q::zero()];
        l[lv] = Q::one();
        l
    };
    (unit(a), unit(b))
}

/// Exact global H(div) conformity check: across every interior mesh edge,
/// the normal traces of every global stress basis function agree between
/// the two incident elements (both parametrized by the canonical global
/// edge direction, independent of the per-element DoF orientations).
pub fn global_hdiv_check(mesh: &Mesh, space: &GlobalSpace, k: usize) -> Result<(), C1Violation> {
    for (eid, edge) in mesh.interior_edges() {
        let (a, b) = edge.vertices;
        let n_global = mesh.vertices[b].sub(&mesh.vertices[a]).rot_neg90();
        let data: Vec<(MacroTriangle, StressElement, Vec<usize>, usize)> = edge
            .triangles
            .iter()
            .map(|&ti| {
                let m = macro_of(mesh, ti);
                let elem = StressElement::new(&m, k, space.orientation(ti).clone());
                let map = space.element_dof_map(mesh, ti);
                let le = mesh.local_edge_of(ti, eid).expect("incident edge");
                (m, elem, map, le)
            })
            .collect();
        let mut dofs: Vec<usize> = data.iter().flat_map(|(_, _, map, _)| map.clone()).collect();
        dofs.sort_unstable();
        dofs.dedup();
        for &g in &dofs {
            let traces: Vec<[crate::poly::EdgePoly; 2]> = data
                .iter()
                .zip(&edge.triangles)
                .map(|((m, elem, map, le), &ti)| match map.iter().position(|&x| x == g) {
                    None => [crate::poly::EdgePoly::zero(), crate::poly::EdgePoly::zero()],
                    Some(ldof) => {
                        let coeffs: Vec<Q> = (0..elem.dim())
                            .map(|bb| elem.dof_matrix_inv[(bb, ldof)].clone())
                            .collect();
                        let sigma = elem.combine(&coeffs);
                        let sn = sigma.dot_normal(*le, &n_global);
                        let (s, e) = canonical_edge_endpoints(mesh, ti, eid);
                        let _ = m;
                        [sn[0].trace_on_segment(&s, &e), sn[1].trace_on_segment(&s, &e)]
                    }
                })
                .collect();
            if !traces[0][0].eq_fn(&traces[1][0]) || !traces[0][1].eq_fn(&traces[1][1]) {
                return Err(C1Violation { edge: eid, global_dof: g });
            }
        }
    }
    Ok(())
}

/// Quasi-interpolation with averaged vertex gradients. The input is one
/// polynomial per element, assumed continuous across edges (checked for
/// vertex values); the vertex-gradient DoFs are replaced by the average of
/// the per-element Lagrange interpolant gradients, and edge
/// normal-derivative moments by the average of the two incident traces, so
/// the result is single-valued by construction.
pub fn quasi_interpolate_h2(
    mesh: &Mesh,
    space: &GlobalSpace,
    k: usize,
    element_polys: &[BaryPoly],
) -> Result<Vec<Q>, String> {
    assert_eq!(element_polys.len(), mesh.num_triangles());
    let degree = k + 2;

    // Averaged gradients of the per-element Lagrange interpolants.
    let mut grad_sum: Vec<[Q; 2]> = vec![[Q::zero(), Q::zero()]; mesh.num_vertices()];
    let mut grad_count = vec![0usize; mesh.num_vertices()];
    for ti in 0..mesh.num_triangles() {
        let tri = mesh.triangle_geometry(ti);
        let lag = lagrange_interpolant(&element_polys[ti], degree);
        let m = MacroTriangle::new(tri);
        let field = PiecewiseScalar::from_poly(&lag);
        for lv in 0..3 {
            let gv = mesh.triangles[ti][lv];
            let g = field.gradient_at_vertex(&m, lv);
            grad_sum[gv][0] += g.x;
            grad_sum[gv][1] += g.y;
            grad_count[gv] += 1;
        }
    }
    let grad_avg: Vec<[Q; 2]> = grad_sum
        .into_iter()
        .zip(&grad_count)
        .map(|(s, &c)| {
            let n = q(c as i64, 1);
            [s[0].clone() / &n, s[1].clone() / &n]
        })
        .collect();

    // Assemble: nodal values for everything except vertex gradients
    // (averaged) and edge normal moments (averaged between the two sides).
    let mut out = vec![Q::zero(); space.dim()];
    let mut counts = vec![0usize; space.dim()];
    let mut value_written = vec![false; space.dim()];
    for ti in 0..mesh.num_triangles() {
        let m = macro_of(mesh, ti);
        let field = PiecewiseScalar::from_poly(&element_polys[ti]);
        let dofs = C1DofSet::new(k, C1DofVariant::Standard, space.orientation(ti).clone());
        let map = space.element_dof_map(mesh, ti);
        for (ldof, dof) in dofs.dofs.iter().enumerate() {
            let g = map[ldof];
            match dof {
                crate::c1::ScalarDof::VertexGradX { vertex } => {
                    out[g] = grad_avg[mesh.triangles[ti][*vertex]][0].clone();
                    value_written[g] = true;
                }
                crate::c1::ScalarDof::VertexGradY { vertex } => {
                    out[g] = grad_avg[mesh.triangles[ti][*vertex]][1].clone();
                    value_written[g] = true;
                }
                crate::c1::ScalarDof::EdgeNormalMoment { .. } => {
                    let val = dofs.apply(&m, &field, dof);
                    out[g] += val;
                    counts[g] += 1;
                }
                crate::c1::ScalarDof::VertexValue { .. }
                | crate::c1::ScalarDof::EdgeValueMoment { .. } => {
                    let val = dofs.apply(&m, &field, dof);
                    if value_written[g] {
                        if out[g] != val {
                            return Err(format!(
                                "input is discontinuous at DoF {g}: {} vs {}",
                                out[g], val
                            ));
                        }
                    } else {
                        out[g] = val;
                        value_written[g] = true;
                    }
                }
                _ => {
                    out[g] = dofs.apply(&m, &field, dof);
                    value_written[g] = true;
                }
            }
        }
    }
    for g in 0..space.dim() {
        if counts[g] > 0 {
            out[g] /= q(counts[g] as i64, 1);
        }
    }
    Ok(out)
}

/// Exact Lagrange interpolant of degree `d` on the principal lattice,
/// expressed in the same barycentric coordinates as the input.
pub fn lagrange_interpolant(p: &BaryPoly, d: usize) -> BaryPoly {
    let exps = exponents_of_degree(d);
    let nb = exps.len();
    let dq = q(d as i64, 1);
    let points: Vec<[Q; 3]> = exps
        .iter()
        .map(|e| [q(e[0] as i64, 1) / &dq, q(e[1] as i64, 1) / &dq, q(e[2] as i64, 1) / &dq])
        .collect();
    let vandermonde = QMatrix::from_fn(nb, nb, |i, j| {
        BaryPoly::monomial(exps[j], Q::one()).eval(&points[i])
    });
    let rhs = QMatrix::from_fn(nb, 1, |i, _| p.eval(&points[i]));
    let sol = vandermonde.solve(&rhs).expect("principal lattice is unisolvent");
    let mut out = BaryPoly::zero();
    for j in 0..nb {
        out = out.add(&BaryPoly::monomial(exps[j], sol[(j, 0)].clone()));
    }
    out
}

/// Smallest generalized singular value of the divergence in the
/// (H(div), L2) norm pair: the discrete inf-sup constant. Floating point;
/// the Gram matrices are assembled from exact integrals.
pub fn inf_sup_estimate(mesh: &Mesh, k: usize) -> f64 {
    use nalgebra::DMatrix;
    let space_sigma = GlobalSpace::new(mesh, Family::Sigma, k);
    let space_v = GlobalSpace::new(mesh, Family::V, k);
    let n_s = space_sigma.dim();
    let n_v = space_v.dim();
    let mut gram_hdiv = DMatrix::<f64>::zeros(n_s, n_s);
    let mut mass_v = DMatrix::<f64>::zeros(n_v, n_v);
    let mut pairing = DMatrix::<f64>::zeros(n_v, n_s);

    for ti in 0..mesh.num_triangles() {
        let m = macro_of(mesh, ti);
        let st = StressElement::new(&m, k, space_sigma.orientation(ti).clone());
        let nloc = st.dim();
        let s_map = space_sigma.element_dof_map(mesh, ti);
        let v_map = space_v.element_dof_map(mesh, ti);

        // Shape-basis Grams, exact then converted. Monomial pairs integrate
        // over the whole macro triangle directly.
        let n_mono = nloc - 3;
        let area = m.parent().area();
        let mut g_shape = vec![0.0; nloc * nloc];
        let divs: Vec<[BaryPoly; 2]> = st
            .basis
            .functions
            .iter()
            .map(|f| divergence(&m, f).single_poly().expect("polynomial divergence"))
            .collect();
        for a in 0..nloc {
            for b in a..nloc {
                let fa = &st.basis.functions[a];
                let fb = &st.basis.functions[b];
                let mut acc = if a < n_mono && b < n_mono {
                    fa.contract_piece(fb, 0).integral_over(&area)
                } else {
                    let mut s = Q::zero();
                    for j in 0..3 {
                        s += m.integrate_sub(&fa.contract_piece(fb, j), j);
                    }
                    s
                };
                acc += divs[a][0].mul(&divs[b][0]).integral_over(&area);
                acc += divs[a][1].mul(&divs[b][1]).integral_over(&area);
                let v = to_f64(&acc);
                g_shape[a * nloc + b] = v;
                g_shape[b * nloc + a] = v;
            }
        }
        let g_shape = DMatrix::from_row_slice(nloc, nloc, &g_shape);

        // Pairing with the local monomial displacement basis.
        let layout = v_local_layout(k);
        let nv_loc = layout.len();
        let area = m.parent().area();
        let mut p_shape = DMatrix::<f64>::zeros(nv_loc, nloc);
        for (r, (e, comp)) in layout.iter().enumerate() {
            let mono = BaryPoly::monomial(*e, Q::one());
            for b in 0..nloc {
                p_shape[(r, b)] = to_f64(&divs[b][*comp].mul(&mono).integral_over(&area));
            }
        }
        let mut mv_loc = DMatrix::<f64>::zeros(nv_loc, nv_loc);
        for (r, (er, cr)) in layout.iter().enumerate() {
            for (c, (ec, cc)) in layout.iter().enumerate() {
                if cr != cc {
                    continue;
                }
                mv_loc[(r, c)] = to_f64(
                    &BaryPoly::monomial(*er, Q::one())
                        .mul(&BaryPoly::monomial(*ec, Q::one()))
                        .integral_over(&area),
                );
            }
        }

        // Transform to the nodal basis.
        let n_f = DMatrix::from_row_slice(nloc, nloc, &st.dof_matrix.to_f64());
        let t = n_f.lu().try_inverse().expect("unisolvent element");
        let g_nodal = t.transpose() * g_shape * &t;
        let p_nodal = p_shape * &t;

        for a in 0..nloc {
            for b in 0..nloc {
                gram_hdiv[(s_map[a], s_map[b])] += g_nodal[(a, b)];
            }
        }
        for r in 0..nv_loc {
            for b in 0..nloc {
                pairing[(v_map[r], s_map[b])] += p_nodal[(r, b)];
            }
            for c in 0..nv_loc {
                mass_v[(v_map[r], v_map[c])] += mv_loc[(r, c)];
            }
        }
    }

    // beta^2 = lambda_min of (B G^{-1} B^T) w = lambda M_V w.
    let chol_g = nalgebra::Cholesky::new(gram_hdiv).expect("H(div) Gram is SPD");
    let bt = pairing.transpose();
    let ginv_bt = chol_g.solve(&bt);
    let s = &pairing * ginv_bt;
    let chol_v = nalgebra::Cholesky::new(mass_v).expect("V mass is SPD");
    let l = chol_v.l();
    let y = l.clone().solve_lower_triangular(&s).expect("triangular solve");
    let z = l.solve_lower_triangular(&y.transpose()).expect("triangular solve");
    let sym = (&z + z.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    min.max(0.0).sqrt()
}
