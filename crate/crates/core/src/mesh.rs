//! Triangulations with edge topology.
//!
//! Edges are numbered lexicographically by their sorted vertex pair. Local
//! edge `k` of a triangle is the edge opposite its vertex `k`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{diameter, signed_area, Point};

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Sorted vertex pair.
    pub vertices: [usize; 2],
    /// One incident triangle for boundary edges, two for interior edges.
    pub triangles: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles.len() == 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    h_max: f64,
}

impl Mesh {
    /// Builds edge topology and validates the triangulation.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mut h_max = 0.0f64;
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references vertex {bad}, but there are {} vertices",
                    vertices.len()
                )));
            }
            let pts = tri.map(|v| vertices[v]);
            let area = signed_area(pts[0], pts[1], pts[2]);
            let d = diameter(&pts);
            if !(area > 1e-14 * d * d) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} is degenerate or clockwise (signed area {area:e})"
                )));
            }
            h_max = h_max.max(d);
        }

        let mut keyed: HashMap<[usize; 2], Vec<(usize, usize)>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                keyed.entry([a.min(b), a.max(b)]).or_default().push((t, k));
            }
        }
        let mut keys: Vec<[usize; 2]> = keyed.keys().copied().collect();
        keys.sort_unstable();

        let mut edges = Vec::with_capacity(keys.len());
        let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (e, key) in keys.iter().enumerate() {
            let incident = &keyed[key];
            if incident.len() > 2 {
                return Err(Error::InvalidMesh(format!(
                    "edge ({}, {}) is shared by {} triangles",
                    key[0],
                    key[1],
                    incident.len()
                )));
            }
            if let [(t1, k1), (t2, k2)] = incident[..] {
                // Neighbours must traverse a shared edge in opposite directions.
                let dir = |t: usize, k: usize| triangles[t][(k + 1) % 3];
                if dir(t1, k1) == dir(t2, k2) {
                    return Err(Error::InvalidMesh(format!(
                        "triangles {t1} and {t2} have inconsistent orientation"
                    )));
                }
            }
            for &(t, k) in incident {
                triangle_edges[t][k] = e;
            }
            edges.push(Edge {
                vertices: *key,
                triangles: incident.iter().map(|&(t, _)| t).collect(),
            });
        }

        Ok(Mesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            h_max,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Global edge index of each local edge.
    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        self.edges[e].vertices.map(|v| self.vertices[v])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edge_points(e);
        a.dist(b)
    }

    /// Local index of global edge `e` within triangle `t`.
    pub fn local_edge(&self, t: usize, e: usize) -> Option<usize> {
        self.triangle_edges[t].iter().position(|&x| x == e)
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| {
                let p = self.triangle_points(t);
                signed_area(p[0], p[1], p[2])
            })
            .sum()
    }

    /// Largest ratio of element diameter to inscribed-circle radius.
    pub fn quality_ratio(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| {
                let p = self.triangle_points(t);
                let perimeter = p[0].dist(p[1]) + p[1].dist(p[2]) + p[2].dist(p[0]);
                let inradius = 2.0 * signed_area(p[0], p[1], p[2]) / perimeter;
                diameter(&p) / inradius
            })
            .fold(0.0, f64::max)
    }
}

/// Uniform mesh of `[a, b]²` with `n` cells per side, each cell split along
/// its lower-left to upper-right diagonal.
pub fn gen_square_mesh(n: usize, a: f64, b: f64) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidParameter("square mesh needs n ≥ 1".into()));
    }
    if !(b > a) {
        return Err(Error::InvalidParameter(format!("empty square [{a}, {b}]")));
    }
    let step = (b - a) / n as f64;
    let coord = |i: usize| if i == n { b } else { a + i as f64 * step };
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point::new(coord(i), coord(j)));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Concentric-ring disk mesh: a center vertex and, for ring `j`, `6j`
/// equally spaced vertices at radius `j·radius/rings`.
pub fn gen_disk_mesh(rings: usize, radius: f64) -> Result<Mesh> {
    if rings == 0 {
        return Err(Error::InvalidParameter("disk mesh needs rings ≥ 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("disk radius {radius} is not positive")));
    }
    let ring_start = |j: usize| if j == 0 { 0 } else { 1 + 3 * j * (j - 1) };
    let mut vertices = vec![Point::new(0.0, 0.0)];
    for j in 1..=rings {
        let r = if j == rings { radius } else { radius * j as f64 / rings as f64 };
        let count = 6 * j;
        for i in 0..count {
            let theta = 2.0 * PI * i as f64 / count as f64;
            vertices.push(Point::new(r * theta.cos(), r * theta.sin()));
        }
    }

    // Index of the vertex at position `i` (0..=j within sector `s`) of ring `j`.
    let ring_vertex = |j: usize, s: usize, i: usize| -> usize {
        if j == 0 {
            0
        } else {
            ring_start(j) + (s * j + i) % (6 * j)
        }
    };
    // Angle as a fraction of the sector, for merging consecutive rings.
    let frac = |j: usize, i: usize| if j == 0 { 0.0 } else { i as f64 / j as f64 };

    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for j in 1..=rings {
        let inner = j - 1;
        for s in 0..6 {
            let (mut a, mut b) = (0usize, 0usize);
            while a < inner || b < j {
                let advance_outer = if a == inner {
                    true
                } else if b == j {
                    false
                } else {
                    frac(j, b + 1) <= frac(inner, a + 1)
                };
                let va = ring_vertex(inner, s, a);
                let vb = ring_vertex(j, s, b);
                if advance_outer {
                    triangles.push([va, vb, ring_vertex(j, s, b + 1)]);
                    b += 1;
                } else {
                    triangles.push([va, vb, ring_vertex(inner, s, a + 1)]);
                    a += 1;
                }
            }
        }
    }
    for tri in &mut triangles {
        let p = tri.map(|v| vertices[v]);
        if signed_area(p[0], p[1], p[2]) < 0.0 {
            tri.swap(1, 2);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Disk mesh with the topology of [`gen_disk_mesh`] whose ring `j` starts as
/// the regular hexagon of circumradius `j·radius/rings` and is blended toward
/// the circle with weight `(j/rings)³`, so interior rings are rounded hexagons
/// and the outer ring lies on the circle.
pub fn gen_disk_mesh_hex(rings: usize, radius: f64) -> Result<Mesh> {
    let base = gen_disk_mesh(rings, radius)?;
    let mut vertices = base.vertices().to_vec();
    let corner = |r: f64, s: usize| {
        let a = PI / 3.0 * s as f64;
        Point::new(r * a.cos(), r * a.sin())
    };
    for j in 1..=rings {
        let t = j as f64 / rings as f64;
        let r = radius * t;
        let w = if j == rings { 1.0 } else { t * t * t };
        let start = 1 + 3 * j * (j - 1);
        for s in 0..6 {
            let (a, b) = (corner(r, s), corner(r, s + 1));
            for i in 0..j {
                let p = a.lerp(b, i as f64 / j as f64);
                vertices[start + s * j + i] = p * (1.0 - w + w * r / p.norm());
            }
        }
    }
    Mesh::new(vertices, base.triangles().to_vec())
}

/// Text form: `nv nt`, then `nv` lines `x y`, then `nt` lines `i j k`.
pub fn save_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", mesh.n_vertices(), mesh.n_triangles()).unwrap();
    for p in mesh.vertices() {
        writeln!(out, "{:e} {:e}", p.x, p.y).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    out
}

pub fn load_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    fn fields<T: std::str::FromStr>(line: usize, text: &str, n: usize) -> Result<Vec<T>> {
        let parts: Vec<&str> = text.split_whitespace().collect();
        if parts.len() != n {
            return Err(Error::Parse {
                line,
                message: format!("expected {n} fields, found {}", parts.len()),
            });
        }
        parts
            .iter()
            .map(|s| {
                s.parse::<T>().map_err(|_| Error::Parse {
                    line,
                    message: format!("cannot parse '{s}'"),
                })
            })
            .collect()
    }

    let Some((line, header)) = lines.next() else {
        return Err(Error::EmptyMesh);
    };
    let counts: Vec<usize> = fields(line, header, 2)?;
    let (nv, nt) = (counts[0], counts[1]);
    if nv == 0 || nt == 0 {
        return Err(Error::EmptyMesh);
    }

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(line, format!("expected {nv} vertex lines")))?;
        let xy: Vec<f64> = fields(line, text, 2)?;
        vertices.push(Point::new(xy[0], xy[1]));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(line, format!("expected {nt} triangle lines")))?;
        let ijk: Vec<usize> = fields(line, text, 3)?;
        if let Some(&bad) = ijk.iter().find(|&&v| v >= nv) {
            return Err(parse_err(
                line,
                format!("vertex index {bad} out of range (0..{nv})"),
            ));
        }
        let pts = [vertices[ijk[0]], vertices[ijk[1]], vertices[ijk[2]]];
        if !(signed_area(pts[0], pts[1], pts[2]) > 0.0) {
            return Err(parse_err(line, "triangle is degenerate or clockwise".into()));
        }
        triangles.push([ijk[0], ijk[1], ijk[2]]);
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "unexpected trailing data".into()));
    }
    Mesh::new(vertices, triangles)
}
