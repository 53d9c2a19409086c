//! Global assembly of the penalized bilinear form, the mass form, load
//! vectors, and mesh-dependent error norms.
//!
//! Matrices are first assembled over all edges; [`DofMap`] then eliminates
//! boundary edges, whose averages vanish under the homogeneous Dirichlet
//! condition. Local contributions are computed in parallel and accumulated in
//! element (or edge) order, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::basis::{ImmersedSpace, LocalBasisSet};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::quadrature::{TriangleRule, LINE_GAUSS2, TRI_DEGREE2, TRI_DEGREE4};
use crate::sparse::SymmetricSparseMatrix;

/// Interior edges are the unknowns; boundary edges are eliminated.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    edge_to_dof: Vec<Option<usize>>,
    dof_to_edge: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut edge_to_dof = vec![None; mesh.n_edges()];
        let mut dof_to_edge = Vec::with_capacity(mesh.n_interior_edges());
        for (e, edge) in mesh.edges().iter().enumerate() {
            if !edge.is_boundary() {
                edge_to_dof[e] = Some(dof_to_edge.len());
                dof_to_edge.push(e);
            }
        }
        DofMap {
            edge_to_dof,
            dof_to_edge,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_to_edge.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_to_dof.len()
    }

    pub fn dof(&self, edge: usize) -> Option<usize> {
        self.edge_to_dof[edge]
    }

    pub fn edge(&self, dof: usize) -> usize {
        self.dof_to_edge[dof]
    }

    pub fn restrict_matrix(&self, full: &SymmetricSparseMatrix) -> SymmetricSparseMatrix {
        full.restrict(&self.edge_to_dof, self.n_dofs())
    }

    pub fn restrict_vec(&self, full: &[f64]) -> Vec<f64> {
        self.dof_to_edge.iter().map(|&e| full[e]).collect()
    }

    /// Edge-indexed vector with zeros on boundary edges.
    pub fn extend(&self, dofs: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_edges()];
        for (d, &e) in self.dof_to_edge.iter().enumerate() {
            full[e] = dofs[d];
        }
        full
    }
}

type Local3 = [[f64; 3]; 3];

/// `Σ_R β_R |R| ∇φ_i·∇φ_j`; exact since gradients are constant per region.
pub fn local_stiffness(basis: &LocalBasisSet) -> Local3 {
    let mut k = [[0.0; 3]; 3];
    for (r, region) in basis.decomposition.regions.iter().enumerate() {
        let f = &basis.functions[r];
        let scale = basis.betas[r] * region.area;
        for i in 0..3 {
            for j in 0..3 {
                k[i][j] += scale * f[i].grad.dot(f[j].grad);
            }
        }
    }
    k
}

/// `Σ_R ∫_R φ_i φ_j` with a degree-2 rule per sub-triangle.
pub fn local_mass(basis: &LocalBasisSet) -> Local3 {
    let mut m = [[0.0; 3]; 3];
    for (r, region) in basis.decomposition.regions.iter().enumerate() {
        let f = &basis.functions[r];
        for t in &region.triangles {
            for (p, w) in TRI_DEGREE2.on(t) {
                let v = [f[0].eval(p), f[1].eval(p), f[2].eval(p)];
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] += w * v[i] * v[j];
                    }
                }
            }
        }
    }
    m
}

fn assemble_elementwise(space: &ImmersedSpace, local: impl Fn(&LocalBasisSet) -> Local3 + Sync + Send) -> SymmetricSparseMatrix {
    let locals: Vec<Local3> = space.bases.par_iter().map(local).collect();
    let mut triplets = Vec::with_capacity(6 * locals.len());
    for (t, m) in locals.iter().enumerate() {
        let edges = space.mesh.triangle_edges()[t];
        for i in 0..3 {
            for j in i..3 {
                triplets.push((edges[i], edges[j], m[i][j]));
            }
        }
    }
    SymmetricSparseMatrix::from_triplets(space.mesh.n_edges(), &triplets)
}

/// Broken stiffness form `Σ_K ∫_K β ∇u·∇v` over all edges.
pub fn assemble_stiffness(space: &ImmersedSpace) -> SymmetricSparseMatrix {
    assemble_elementwise(space, local_stiffness)
}

/// `L²` pairing over all edges.
pub fn assemble_mass(space: &ImmersedSpace) -> SymmetricSparseMatrix {
    assemble_elementwise(space, local_mass)
}

/// Region of `basis` holding the point `p` of local edge `k`.
fn trace_region(basis: &LocalBasisSet, k: usize, p: Point) -> usize {
    let segs = &basis.decomposition.edge_segments[k];
    let mut best = (f64::INFINITY, segs[0].region);
    for s in segs {
        let d = s.end - s.start;
        let t = (p - s.start).dot(d) / d.dot(d);
        let outside = (-t).max(t - 1.0).max(0.0);
        if outside < best.0 {
            best = (outside, s.region);
        }
    }
    best.1
}

/// Sub-segments of an interior edge on which both incident traces are affine.
struct EdgeTrace {
    /// Element, local edge index.
    sides: [(usize, usize); 2],
    /// `(start, end, region in first element, region in second element)`.
    pieces: Vec<(Point, Point, usize, usize)>,
}

fn edge_trace(space: &ImmersedSpace, e: usize) -> EdgeTrace {
    let mesh = &space.mesh;
    let [t1, t2] = mesh.edges()[e].triangles[..] else {
        unreachable!("edge trace requested on boundary edge {e}");
    };
    let sides = [t1, t2].map(|t| (t, mesh.local_edge(t, e).expect("edge belongs to its triangles")));
    let [a, b] = mesh.edge_points(e);
    let dir = b - a;
    let len2 = dir.dot(dir);

    let mut params = vec![0.0, 1.0];
    for &(t, k) in &sides {
        for s in &space.bases[t].decomposition.edge_segments[k] {
            for p in [s.start, s.end] {
                params.push(((p - a).dot(dir) / len2).clamp(0.0, 1.0));
            }
        }
    }
    params.sort_by(f64::total_cmp);
    params.dedup_by(|x, y| (*x - *y).abs() < 1e-12);

    let pieces = params
        .windows(2)
        .map(|w| {
            let (p, q) = (a.lerp(b, w[0]), a.lerp(b, w[1]));
            let mid = p.lerp(q, 0.5);
            let r1 = trace_region(&space.bases[sides[0].0], sides[0].1, mid);
            let r2 = trace_region(&space.bases[sides[1].0], sides[1].1, mid);
            (p, q, r1, r2)
        })
        .collect();
    EdgeTrace { sides, pieces }
}

type Local6 = [[f64; 6]; 6];

/// `∫_e σ/|e| [φ_i][φ_j]` over the six shape functions of the two elements
/// sharing `e`, with `σ = κβ` evaluated per sub-segment.
fn local_penalty(space: &ImmersedSpace, trace: &EdgeTrace, kappa: f64, edge_len: f64) -> Local6 {
    let [(t1, _), (t2, _)] = trace.sides;
    let (b1, b2) = (&space.bases[t1], &space.bases[t2]);
    let mut m = [[0.0; 6]; 6];
    for &(p, q, r1, r2) in &trace.pieces {
        let sigma = kappa * b1.betas[r1];
        for (x, w) in LINE_GAUSS2.on(p, q) {
            let mut v = [0.0; 6];
            for i in 0..3 {
                v[i] = b1.functions[r1][i].eval(x);
                v[3 + i] = -b2.functions[r2][i].eval(x);
            }
            let c = w * sigma / edge_len;
            for i in 0..6 {
                for j in 0..6 {
                    m[i][j] += c * v[i] * v[j];
                }
            }
        }
    }
    m
}

/// Interior-penalty jump form `Σ_e ∫_e (κβ/|e|) [u][v]` over all edges.
pub fn assemble_penalty(space: &ImmersedSpace, kappa: f64) -> Result<SymmetricSparseMatrix> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("penalty factor κ must be positive, got {kappa}")));
    }
    let mesh = &space.mesh;
    let interior: Vec<usize> = (0..mesh.n_edges()).filter(|&e| !mesh.edges()[e].is_boundary()).collect();
    let locals: Vec<(EdgeTrace, Local6)> = interior
        .par_iter()
        .map(|&e| {
            let trace = edge_trace(space, e);
            let m = local_penalty(space, &trace, kappa, mesh.edge_length(e));
            (trace, m)
        })
        .collect();

    let mut triplets = Vec::with_capacity(21 * locals.len());
    for (trace, m) in &locals {
        let [(t1, _), (t2, _)] = trace.sides;
        let mut dofs = [0usize; 6];
        dofs[..3].copy_from_slice(&mesh.triangle_edges()[t1]);
        dofs[3..].copy_from_slice(&mesh.triangle_edges()[t2]);
        for i in 0..6 {
            for j in i..6 {
                // The shared edge occurs twice; (i, j) and (j, i) then hit the same diagonal entry.
                let v = if i != j && dofs[i] == dofs[j] { 2.0 * m[i][j] } else { m[i][j] };
                triplets.push((dofs[i], dofs[j], v));
            }
        }
    }
    Ok(SymmetricSparseMatrix::from_triplets(mesh.n_edges(), &triplets))
}

/// `(f, φ_e)` for every edge, with a degree-4 rule per sub-triangle.
pub fn assemble_load<F>(f: F, space: &ImmersedSpace) -> Vec<f64>
where
    F: Fn(Point) -> f64 + Sync,
{
    let locals: Vec<[f64; 3]> = space
        .bases
        .par_iter()
        .map(|basis| {
            let mut v = [0.0; 3];
            for (r, region) in basis.decomposition.regions.iter().enumerate() {
                let fun = &basis.functions[r];
                for t in &region.triangles {
                    for (p, w) in TRI_DEGREE4.on(t) {
                        let fp = f(p);
                        for i in 0..3 {
                            v[i] += w * fp * fun[i].eval(p);
                        }
                    }
                }
            }
            v
        })
        .collect();
    let mut load = vec![0.0; space.mesh.n_edges()];
    for (t, v) in locals.iter().enumerate() {
        for (i, &e) in space.mesh.triangle_edges()[t].iter().enumerate() {
            load[e] += v[i];
        }
    }
    load
}

/// Penalized operator `A = stiffness + penalty` and mass `M` on interior edges.
#[derive(Clone, Debug)]
pub struct DiscreteSystem {
    pub dofs: DofMap,
    pub stiffness: SymmetricSparseMatrix,
    pub mass: SymmetricSparseMatrix,
}

pub fn assemble_system(space: &ImmersedSpace, kappa: f64) -> Result<DiscreteSystem> {
    let dofs = DofMap::new(&space.mesh);
    let a = assemble_stiffness(space).add(&assemble_penalty(space, kappa)?);
    let m = assemble_mass(space);
    Ok(DiscreteSystem {
        stiffness: dofs.restrict_matrix(&a),
        mass: dofs.restrict_matrix(&m),
        dofs,
    })
}

/// A reference solution, piecewise smooth on each side of the interface.
pub trait ExactSolution: Sync {
    fn value(&self, p: Point) -> f64;
    fn grad(&self, p: Point) -> Point;
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BrokenNorms {
    /// `‖u − u_h‖₀`.
    pub l2: f64,
    /// Elementwise `|u − u_h|₁`.
    pub h1_semi: f64,
    /// `(Σ_e |e|⁻¹ ‖[u_h]‖²₀,e)^{1/2}` over interior edges.
    pub jump: f64,
}

impl BrokenNorms {
    /// Broken `H¹` norm `‖·‖₁,h`.
    pub fn broken_h1(&self) -> f64 {
        self.l2.hypot(self.h1_semi)
    }

    /// Mesh-dependent norm `‖·‖₁,J` including the edge jumps.
    pub fn one_j(&self) -> f64 {
        (self.l2 * self.l2 + self.h1_semi * self.h1_semi + self.jump * self.jump).sqrt()
    }
}

/// Errors of the edge-indexed discrete function `u` against `exact`.
pub fn broken_norms(space: &ImmersedSpace, u: &[f64], exact: &dyn ExactSolution) -> BrokenNorms {
    broken_norms_with(space, u, exact, &TRI_DEGREE4)
}

fn broken_norms_with(
    space: &ImmersedSpace,
    u: &[f64],
    exact: &dyn ExactSolution,
    rule: &TriangleRule,
) -> BrokenNorms {
    assert_eq!(u.len(), space.mesh.n_edges(), "broken_norms expects an edge-indexed vector");
    let (l2, h1) = space
        .bases
        .par_iter()
        .enumerate()
        .map(|(t, basis)| {
            let coeffs = space.local_coeffs(t, u);
            let (mut l2, mut h1) = (0.0, 0.0);
            for (r, region) in basis.decomposition.regions.iter().enumerate() {
                let f = &basis.functions[r];
                let grad_h = basis.grad_combination(&coeffs, r);
                for tri in &region.triangles {
                    for (p, w) in rule.on(tri) {
                        let uh: f64 = (0..3).map(|i| coeffs[i] * f[i].eval(p)).sum();
                        let ev = exact.value(p) - uh;
                        let eg = exact.grad(p) - grad_h;
                        l2 += w * ev * ev;
                        h1 += w * eg.dot(eg);
                    }
                }
            }
            (l2, h1)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));

    let mesh = &space.mesh;
    let jump2: f64 = (0..mesh.n_edges())
        .into_par_iter()
        .filter(|&e| !mesh.edges()[e].is_boundary())
        .map(|e| {
            let trace = edge_trace(space, e);
            let [(t1, _), (t2, _)] = trace.sides;
            let (c1, c2) = (space.local_coeffs(t1, u), space.local_coeffs(t2, u));
            let (b1, b2) = (&space.bases[t1], &space.bases[t2]);
            let mut s = 0.0;
            for &(p, q, r1, r2) in &trace.pieces {
                for (x, w) in LINE_GAUSS2.on(p, q) {
                    let v1: f64 = (0..3).map(|i| c1[i] * b1.functions[r1][i].eval(x)).sum();
                    let v2: f64 = (0..3).map(|i| c2[i] * b2.functions[r2][i].eval(x)).sum();
                    s += w * (v1 - v2).powi(2);
                }
            }
            s / mesh.edge_length(e)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();

    BrokenNorms {
        l2: l2.sqrt(),
        h1_semi: h1.sqrt(),
        jump: jump2.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::interpolate;
    use crate::geometry::{InterfaceShape, LevelSetInterface};
    use crate::mesh::{gen_disk_mesh, gen_square_mesh, Mesh};

    fn single_reference_triangle(beta: f64) -> ImmersedSpace {
        let mesh = Mesh::new(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let iface = LevelSetInterface::circle(Point::new(5.0, 5.0), 0.5, beta, beta).unwrap();
        ImmersedSpace::new(mesh, iface).unwrap()
    }

    fn square_with_circle(n: usize, beta_minus: f64, beta_plus: f64) -> ImmersedSpace {
        let mesh = gen_square_mesh(n, -1.0, 1.0).unwrap();
        let iface = LevelSetInterface::circle(Point::new(0.05, -0.03), 0.52, beta_minus, beta_plus).unwrap();
        ImmersedSpace::new(mesh, iface).unwrap()
    }

    #[test]
    fn reference_stiffness_and_mass() {
        let space = single_reference_triangle(1.0);
        let k = local_stiffness(&space.bases[0]);
        // Local edge 2 is AB with φ = 1 − 2y.
        assert!((k[2][2] - 2.0).abs() < 1e-14);

        // ∫ (1 − 2y)² over the reference triangle = 1/2 − 4/6 + 4/12 = 1/6.
        let m = local_mass(&space.bases[0]);
        assert!((m[2][2] - 1.0 / 6.0).abs() < 1e-15);
        // Orthogonality of CR functions: ∫ φ_i φ_j = |K|/3 δ_ij.
        assert!(m[0][1].abs() < 1e-15);
    }

    #[test]
    fn global_matrices_are_symmetric_by_construction() {
        let space = square_with_circle(8, 1.0, 1000.0);
        let a = assemble_stiffness(&space);
        let dense = a.to_dense();
        for i in 0..dense.len() {
            for j in 0..dense.len() {
                assert_eq!(dense[i][j], dense[j][i]);
            }
        }
    }

    #[test]
    fn constant_patch_test() {
        // Σ φ_i = 1 elementwise, so A·𝟙 vanishes for edges away from ∂Ω.
        let space = square_with_circle(8, 1.0, 1000.0);
        assert!(space.n_interface_elements() > 0);
        let a = assemble_stiffness(&space).add(&assemble_penalty(&space, 1.0).unwrap());
        let ones = vec![1.0; space.mesh.n_edges()];
        let r = a.mul_vec(&ones);
        let scale = a.norm_inf();
        let on_boundary: Vec<bool> = {
            let mut b = vec![false; space.mesh.n_vertices()];
            for e in space.mesh.edges().iter().filter(|e| e.is_boundary()) {
                b[e.vertices[0]] = true;
                b[e.vertices[1]] = true;
            }
            b
        };
        for (e, edge) in space.mesh.edges().iter().enumerate() {
            let support_touches_boundary = edge.triangles.iter().any(|&t| {
                space.mesh.triangles()[t].iter().any(|&v| on_boundary[v])
            });
            if !support_touches_boundary {
                assert!(r[e].abs() <= 1e-12 * scale, "edge {e}: {}", r[e]);
            }
        }
    }

    #[test]
    fn penalty_vanishes_on_conforming_functions() {
        // Edge averages of a continuous piecewise-affine hat are reproduced
        // exactly by the standard CR space: zero jumps on every edge.
        let mesh = gen_disk_mesh(6, 1.0).unwrap();
        let iface = LevelSetInterface::circle(Point::new(0.0, 0.0), 0.38, 1.0, 1.0).unwrap();
        let space = ImmersedSpace::new(mesh, iface).unwrap();
        let j = assemble_penalty(&space, 1.0).unwrap();
        let hat_vertex = 20;
        let mut nodal = vec![0.0; space.mesh.n_vertices()];
        nodal[hat_vertex] = 1.0;
        let u: Vec<f64> = space
            .mesh
            .edges()
            .iter()
            .map(|e| 0.5 * (nodal[e.vertices[0]] + nodal[e.vertices[1]]))
            .collect();
        assert!(j.quad_form(&u, &u).abs() < 1e-12);
        // A globally affine function is conforming as well.
        let lin = interpolate(|p| 2.0 * p.x - p.y + 0.3, &space.mesh, &space.iface).unwrap();
        assert!(j.quad_form(&lin, &lin).abs() < 1e-12);
    }

    #[test]
    fn penalty_matches_dense_midpoint_quadrature() {
        // Two standard elements sharing the diagonal of the unit square.
        let mesh = gen_square_mesh(1, 0.0, 1.0).unwrap();
        let iface = LevelSetInterface::circle(Point::new(5.0, 5.0), 0.5, 2.0, 2.0).unwrap();
        let space = ImmersedSpace::new(mesh, iface).unwrap();
        let kappa = 1.5;
        let j = assemble_penalty(&space, kappa).unwrap();
        let shared = space.mesh.edges().iter().position(|e| !e.is_boundary()).unwrap();
        // DOF vector with values only off the shared edge.
        let mut u = vec![0.0; space.mesh.n_edges()];
        for (e, v) in u.iter_mut().enumerate() {
            if e != shared {
                *v = 0.7 - 0.3 * e as f64;
            }
        }
        let [a, b] = space.mesh.edge_points(shared);
        let [t1, t2] = space.mesh.edges()[shared].triangles[..] else { panic!() };
        let n = 50;
        let len = a.dist(b);
        let mut oracle = 0.0;
        for s in 0..n {
            let p = a.lerp(b, (s as f64 + 0.5) / n as f64);
            let jump = space.eval_in(t1, &u, p) - space.eval_in(t2, &u, p);
            oracle += jump * jump * len / n as f64;
        }
        oracle *= kappa * 2.0 / len;
        // The jump is affine, so the midpoint rule error is O(1/n²); refine
        // with Richardson to match at 1e-12.
        let mut coarse = 0.0;
        for s in 0..n / 2 {
            let p = a.lerp(b, (s as f64 + 0.5) / (n / 2) as f64);
            let jump = space.eval_in(t1, &u, p) - space.eval_in(t2, &u, p);
            coarse += jump * jump * len / (n / 2) as f64;
        }
        coarse *= kappa * 2.0 / len;
        let extrapolated = (4.0 * oracle - coarse) / 3.0;
        assert!((j.quad_form(&u, &u) - extrapolated).abs() < 1e-12);
    }

    #[test]
    fn penalty_is_linear_in_kappa() {
        let space = square_with_circle(9, 1000.0, 1.0);
        let j1 = assemble_penalty(&space, 1.0).unwrap();
        let j2 = assemble_penalty(&space, 2.0).unwrap();
        assert_eq!(j1.scaled(2.0), j2);
        assert!(matches!(assemble_penalty(&space, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(assemble_penalty(&space, -1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn total_mass_is_polygon_area() {
        let space = square_with_circle(11, 1.0, 1000.0);
        let m = assemble_mass(&space);
        let ones = vec![1.0; space.mesh.n_edges()];
        assert!((m.quad_form(&ones, &ones) - 4.0).abs() < 1e-10);

        let disk = ImmersedSpace::new(
            gen_disk_mesh(5, 1.0).unwrap(),
            LevelSetInterface::circle(Point::new(0.0, 0.0), 0.38, 1000.0, 1.0).unwrap(),
        )
        .unwrap();
        let m = assemble_mass(&disk);
        let ones = vec![1.0; disk.mesh.n_edges()];
        assert!((m.quad_form(&ones, &ones) - disk.mesh.area()).abs() < 1e-10);
    }

    #[test]
    fn load_examples() {
        let space = square_with_circle(10, 1.0, 10.0);
        assert!(assemble_load(|_| 0.0, &space).iter().all(|&v| v == 0.0));
        let load = assemble_load(|_| 1.0, &space);
        let m = assemble_mass(&space);
        let m1 = m.mul_vec(&vec![1.0; space.mesh.n_edges()]);
        for (a, b) in load.iter().zip(&m1) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn coefficient_scaling() {
        let s1 = square_with_circle(9, 1.0, 1000.0);
        let s2 = ImmersedSpace::new(s1.mesh.clone(), s1.iface.with_betas(3.0, 3000.0).unwrap()).unwrap();
        let a1 = assemble_system(&s1, 1.0).unwrap();
        let a2 = assemble_system(&s2, 1.0).unwrap();
        assert!(a2.stiffness.max_abs_diff(&a1.stiffness.scaled(3.0)) <= 1e-12 * a2.stiffness.norm_inf());
        assert!(a2.mass.max_abs_diff(&a1.mass) <= 1e-14 * a1.mass.norm_inf());
    }

    struct Affine2;
    impl ExactSolution for Affine2 {
        fn value(&self, p: Point) -> f64 {
            1.5 * p.x - 0.5 * p.y + 0.25
        }
        fn grad(&self, _: Point) -> Point {
            Point::new(1.5, -0.5)
        }
    }

    struct One;
    impl ExactSolution for One {
        fn value(&self, _: Point) -> f64 {
            1.0
        }
        fn grad(&self, _: Point) -> Point {
            Point::default()
        }
    }

    #[test]
    fn broken_norm_examples() {
        let mesh = gen_square_mesh(6, 0.0, 1.0).unwrap();
        let iface = LevelSetInterface::new(
            InterfaceShape::Affine {
                normal: Point::new(1.0, 0.3),
                offset: 0.55,
            },
            2.0,
            2.0,
        )
        .unwrap();
        let space = ImmersedSpace::new(mesh, iface).unwrap();
        let u = interpolate(|p| Affine2.value(p), &space.mesh, &space.iface).unwrap();
        let n = broken_norms(&space, &u, &Affine2);
        assert!(n.l2 < 1e-12 && n.one_j() < 1e-12, "{n:?}");

        let zero = vec![0.0; space.mesh.n_edges()];
        let n = broken_norms(&space, &zero, &One);
        assert!((n.l2 - 1.0).abs() < 1e-12);
        assert_eq!(n.jump, 0.0);
    }

    #[test]
    fn dof_map_round_trip() {
        let mesh = gen_square_mesh(3, 0.0, 1.0).unwrap();
        let dofs = DofMap::new(&mesh);
        assert_eq!(dofs.n_dofs(), mesh.n_interior_edges());
        let x: Vec<f64> = (0..dofs.n_dofs()).map(|i| i as f64).collect();
        assert_eq!(dofs.restrict_vec(&dofs.extend(&x)), x);
        for d in 0..dofs.n_dofs() {
            assert_eq!(dofs.dof(dofs.edge(d)), Some(d));
        }
    }
}
