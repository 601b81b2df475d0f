//! Conforming triangulations: the plain-text mesh format, validation,
//! derived edges and adjacency, and uniform red refinement.
//!
//! Mesh file format (UTF-8 text, `#` starts a comment line):
//! ```text
//! nv nt
//! x y          (nv lines, decimal or rational p/q)
//! i j k        (nt lines, zero-based ccw vertex indices)
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::geometry::{Point2, Triangle};
use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshError {
    Parse { line: usize, message: String },
    Nonconforming(String),
    InvertedTriangle { index: usize },
    DegenerateTriangle { index: usize },
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            MeshError::Nonconforming(msg) => write!(f, "nonconforming mesh: {msg}"),
            MeshError::InvertedTriangle { index } => {
                write!(f, "inverted triangle {index}: vertices must be counterclockwise")
            }
            MeshError::DegenerateTriangle { index } => {
                write!(f, "degenerate triangle {index}: zero area")
            }
        }
    }
}

impl std::error::Error for MeshError {}

/// An edge of the mesh, stored with the global orientation
/// lower vertex index -> higher vertex index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshEdge {
    pub vertices: (usize, usize),
    /// Indices of incident triangles (1 for boundary, 2 for interior).
    pub triangles: Vec<usize>,
}

impl MeshEdge {
    pub fn is_boundary(&self) -> bool {
        self.triangles.len() == 1
    }
}

/// A validated conforming triangulation.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<MeshEdge>,
    /// `edge_of[(a, b)]` with `a < b` -> edge index.
    edge_index: BTreeMap<(usize, usize), usize>,
    /// `vertex_triangles[v]` = indices of triangles sharing vertex `v`.
    pub vertex_triangles: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds and validates a mesh from vertex coordinates and ccw vertex
    /// index triples.
    pub fn new(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        // Duplicate vertices are a conformity hazard.
        for i in 0..vertices.len() {
            for j in (i + 1)..vertices.len() {
                if vertices[i] == vertices[j] {
                    return Err(MeshError::Nonconforming(format!(
                        "vertices {i} and {j} coincide"
                    )));
                }
            }
        }
        for (ti, t) in triangles.iter().enumerate() {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(MeshError::Nonconforming(format!(
                    "triangle {ti} repeats a vertex"
                )));
            }
            for &v in t {
                if v >= vertices.len() {
                    return Err(MeshError::Nonconforming(format!(
                        "triangle {ti} references missing vertex {v}"
                    )));
                }
            }
            let a2 = vertices[t[1]].sub(&vertices[t[0]]).cross(&vertices[t[2]].sub(&vertices[t[0]]));
            if a2.is_zero() {
                return Err(MeshError::DegenerateTriangle { index: ti });
            }
            if a2.is_negative() {
                return Err(MeshError::InvertedTriangle { index: ti });
            }
        }

        // Derive edges in deterministic (sorted) order.
        let mut edge_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut incidence: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (ti, t) in triangles.iter().enumerate() {
            for le in 0..3 {
                let (a, b) = (t[(le + 1) % 3], t[(le + 2) % 3]);
                let key = (a.min(b), a.max(b));
                incidence.entry(key).or_default().push(ti);
            }
        }
        let mut edges = Vec::new();
        for (key, tris) in &incidence {
            if tris.len() > 2 {
                return Err(MeshError::Nonconforming(format!(
                    "edge ({}, {}) is shared by {} triangles",
                    key.0,
                    key.1,
                    tris.len()
                )));
            }
            edge_index.insert(*key, edges.len());
            edges.push(MeshEdge { vertices: *key, triangles: tris.clone() });
        }

        // Interior edges must be traversed in opposite directions by their
        // two ccw triangles; with validated ccw orientation a violation means
        // a duplicated or folded triangle.
        for e in &edges {
            if e.triangles.len() == 2 {
                let dir = |ti: usize| {
                    let t = &triangles[ti];
                    (0..3)
                        .find(|&le| {
                            (t[(le + 1) % 3], t[(le + 2) % 3]) == e.vertices
                        })
                        .is_some()
                };
                let (d0, d1) = (dir(e.triangles[0]), dir(e.triangles[1]));
                if d0 == d1 {
                    return Err(MeshError::Nonconforming(format!(
                        "edge ({}, {}) has inconsistent orientation in its two triangles",
                        e.vertices.0, e.vertices.1
                    )));
                }
            }
        }

        // Hanging nodes: no vertex may lie strictly inside an edge segment.
        for (vi, v) in vertices.iter().enumerate() {
            for e in &edges {
                let (a, b) = e.vertices;
                if vi == a || vi == b {
                    continue;
                }
                let pa = &vertices[a];
                let pb = &vertices[b];
                let d = pb.sub(pa);
                let w = v.sub(pa);
                if d.cross(&w).is_zero() {
                    let t = d.dot(&w);
                    if t.is_positive() && t < d.norm2() {
                        return Err(MeshError::Nonconforming(format!(
                            "hanging node: vertex {vi} lies inside edge ({a}, {b})"
                        )));
                    }
                }
            }
        }

        let mut vertex_triangles = vec![Vec::new(); vertices.len()];
        for (ti, t) in triangles.iter().enumerate() {
            for &v in t {
                vertex_triangles[v].push(ti);
            }
        }

        Ok(Mesh { vertices, triangles, edges, edge_index, vertex_triangles })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = (usize, &MeshEdge)> {
        self.edges.iter().enumerate().filter(|(_, e)| !e.is_boundary())
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn triangle_geometry(&self, ti: usize) -> Triangle {
        let t = &self.triangles[ti];
        Triangle::new_strict_ccw(
            self.vertices[t[0]].clone(),
            self.vertices[t[1]].clone(),
            self.vertices[t[2]].clone(),
        )
        .expect("validated at construction")
    }

    /// Local edge index (0, 1, 2) of the global edge inside triangle `ti`.
    pub fn local_edge_of(&self, ti: usize, edge_id: usize) -> Option<usize> {
        let t = &self.triangles[ti];
        let (a, b) = self.edges[edge_id].vertices;
        (0..3).find(|&le| {
            let (p, q) = (t[(le + 1) % 3], t[(le + 2) % 3]);
            (p.min(q), p.max(q)) == (a, b)
        })
    }

    /// Euler characteristic `V - E + F`; equals 1 for a simply connected
    /// mesh with a single boundary loop.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    /// Simply connected test: connected dual graph plus Euler characteristic 1.
    pub fn is_simply_connected(&self) -> bool {
        if self.num_triangles() == 0 {
            return false;
        }
        let mut seen = vec![false; self.num_triangles()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(t) = stack.pop() {
            for e in &self.edges {
                if e.triangles.contains(&t) {
                    for &o in &e.triangles {
                        if !seen[o] {
                            seen[o] = true;
                            stack.push(o);
                        }
                    }
                }
            }
        }
        seen.iter().all(|&s| s) && self.euler_characteristic() == 1
    }

    /// Maximum squared edge length, exact.
    pub fn max_edge_len2(&self) -> Q {
        let mut best = Q::zero();
        for e in &self.edges {
            let l2 = self.vertices[e.vertices.1].sub(&self.vertices[e.vertices.0]).norm2();
            if l2 > best {
                best = l2;
            }
        }
        best
    }

    /// Uniform red refinement: every triangle is split into four via the
    /// edge midpoints. Orientation is preserved.
    pub fn refine_red(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let half = crate::rational::q(1, 2);
        for e in &self.edges {
            let (a, b) = e.vertices;
            let p = Point2::new(
                (&self.vertices[a].x + &self.vertices[b].x) * &half,
                (&self.vertices[a].y + &self.vertices[b].y) * &half,
            );
            midpoint.insert((a, b), vertices.len());
            vertices.push(p);
        }
        let mid = |a: usize, b: usize| midpoint[&(a.min(b), a.max(b))];
        let mut triangles = Vec::with_capacity(4 * self.num_triangles());
        for t in &self.triangles {
            let (a, b, c) = (t[0], t[1], t[2]);
            let (mab, mbc, mca) = (mid(a, b), mid(b, c), mid(c, a));
            triangles.push([a, mab, mca]);
            triangles.push([mab, b, mbc]);
            triangles.push([mca, mbc, c]);
            triangles.push([mab, mbc, mca]);
        }
        Mesh::new(vertices, triangles).expect("red refinement of a valid mesh is valid")
    }
}

/// Parses the plain-text mesh format.
pub fn load_mesh(input: &str) -> Result<Mesh, MeshError> {
    let mut items: Vec<(usize, &str)> = Vec::new();
    for (ln, raw) in input.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        items.push((ln + 1, line));
    }
    let mut it = items.into_iter();
    let (ln, header) = it.next().ok_or(MeshError::Parse {
        line: 1,
        message: "empty mesh file".into(),
    })?;
    let mut parts = header.split_whitespace();
    let nv: usize = parse_field(parts.next(), ln, "vertex count")?;
    let nt: usize = parse_field(parts.next(), ln, "triangle count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, line) = it.next().ok_or_else(|| MeshError::Parse {
            line: 0,
            message: "unexpected end of file in vertex list".into(),
        })?;
        let mut parts = line.split_whitespace();
        let x = parse_coord(parts.next(), ln)?;
        let y = parse_coord(parts.next(), ln)?;
        vertices.push(Point2::new(x, y));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, line) = it.next().ok_or_else(|| MeshError::Parse {
            line: 0,
            message: "unexpected end of file in triangle list".into(),
        })?;
        let mut parts = line.split_whitespace();
        let i: usize = parse_field(parts.next(), ln, "vertex index")?;
        let j: usize = parse_field(parts.next(), ln, "vertex index")?;
        let k: usize = parse_field(parts.next(), ln, "vertex index")?;
        triangles.push([i, j, k]);
    }
    Mesh::new(vertices, triangles)
}

fn parse_field<T: FromStr>(s: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    let s = s.ok_or_else(|| MeshError::Parse { line, message: format!("missing {what}") })?;
    s.parse().map_err(|_| MeshError::Parse { line, message: format!("invalid {what}: {s}") })
}

/// Coordinates are decimal (`0.25`), integer (`3`), or rational (`1/3`),
/// all read exactly.
fn parse_coord(s: Option<&str>, line: usize) -> Result<Q, MeshError> {
    let s = s.ok_or_else(|| MeshError::Parse { line, message: "missing coordinate".into() })?;
    parse_rational(s).ok_or_else(|| MeshError::Parse {
        line,
        message: format!("invalid coordinate: {s}"),
    })
}

/// Exact parse of `p/q`, integers, and finite decimals.
pub fn parse_rational(s: &str) -> Option<Q> {
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let neg = int_part.starts_with('-');
        let i: BigInt = if int_part == "-" || int_part.is_empty() {
            BigInt::zero()
        } else {
            int_part.parse().ok()?
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let f: BigInt = frac_part.parse().ok()?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let mag = i.magnitude().clone();
        let unsigned = Q::new(BigInt::from(mag), BigInt::from(1)) + Q::new(f, scale.clone());
        return Some(if neg { -unsigned } else { unsigned });
    }
    let n: BigInt = s.parse().ok()?;
    Some(Q::from_integer(n))
}

/// The canonical two-triangle unit square used in tests and docs.
pub fn unit_square_two_triangles() -> Mesh {
    load_mesh(
        "4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n",
    )
    .expect("builtin mesh")
}

/// A single reference triangle as a mesh.
pub fn single_triangle_mesh() -> Mesh {
    load_mesh("3 1\n0 0\n1 0\n0 1\n0 1 2\n").expect("builtin mesh")
}

/// The unit square split into 8 triangles (2x2 blocks, diagonals aligned).
pub fn unit_square_eight_triangles() -> Mesh {
    unit_square_two_triangles().refine_red()
}
