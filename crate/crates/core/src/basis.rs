//! Local shape functions with edge-average degrees of freedom.
//!
//! Non-interface elements carry the standard Crouzeix–Raviart functions
//! `1 − 2λ_k`. On an interface element each shape function is affine on each
//! side of the chord `DE` and is fixed by six conditions: the three edge
//! averages, agreement of the two pieces at `D` and at `E`, and continuity of
//! the conormal flux `β ∂φ/∂n` across the chord.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    centroid, crossing_param, decompose, diameter, ElementDecomposition, LevelSetInterface, Point,
};
use crate::mesh::Mesh;
use crate::quadrature::LINE_GAUSS4;

/// `value + grad · (p − origin)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub origin: Point,
    pub value: f64,
    pub grad: Point,
}

impl Affine {
    pub fn eval(&self, p: Point) -> f64 {
        self.value + self.grad.dot(p - self.origin)
    }

    /// Mean over the segment `a → b`; exact for affine functions.
    pub fn segment_mean(&self, a: Point, b: Point) -> f64 {
        self.eval(a.lerp(b, 0.5))
    }
}

/// Shape functions of one element: three functions per sub-region.
#[derive(Clone, Debug)]
pub struct LocalBasisSet {
    pub decomposition: ElementDecomposition,
    /// Diffusion coefficient of each region.
    pub betas: Vec<f64>,
    /// `functions[region][i]` is shape function `i` restricted to `region`.
    pub functions: Vec<[Affine; 3]>,
}

impl LocalBasisSet {
    pub fn is_interface(&self) -> bool {
        self.decomposition.is_interface()
    }

    pub fn eval(&self, i: usize, p: Point) -> f64 {
        self.functions[self.decomposition.locate(p)][i].eval(p)
    }

    /// Value of `Σ_i coeffs[i] φ_i` at `p`.
    pub fn eval_combination(&self, coeffs: &[f64; 3], p: Point) -> f64 {
        let f = &self.functions[self.decomposition.locate(p)];
        (0..3).map(|i| coeffs[i] * f[i].eval(p)).sum()
    }

    pub fn grad_combination(&self, coeffs: &[f64; 3], region: usize) -> Point {
        let f = &self.functions[region];
        (0..3).fold(Point::default(), |g, i| g + f[i].grad * coeffs[i])
    }

    /// Mean of shape function `i` over local edge `k`.
    pub fn edge_mean(&self, i: usize, k: usize) -> f64 {
        let segs = &self.decomposition.edge_segments[k];
        let len: f64 = segs.iter().map(|s| s.start.dist(s.end)).sum();
        segs.iter()
            .map(|s| s.start.dist(s.end) * self.functions[s.region][i].segment_mean(s.start, s.end))
            .sum::<f64>()
            / len
    }

    /// Largest violation of each defining property.
    pub fn residuals(&self) -> BasisResiduals {
        let mut r = BasisResiduals::default();
        for i in 0..3 {
            for k in 0..3 {
                let target = if i == k { 1.0 } else { 0.0 };
                r.edge_average = r.edge_average.max((self.edge_mean(i, k) - target).abs());
            }
        }
        let h = diameter(&self.decomposition.vertices);
        for f in &self.functions {
            let value: f64 = (0..3).map(|i| f[i].value).sum();
            let grad = f[0].grad + f[1].grad + f[2].grad;
            r.partition_of_unity = r
                .partition_of_unity
                .max((value - 1.0).abs())
                .max(grad.norm() * h);
        }
        if let (Some(chord), [fm, fp]) = (self.decomposition.chord, &self.functions[..]) {
            let normal = (chord[1].point - chord[0].point).perp();
            let normal = normal * (1.0 / normal.norm());
            for i in 0..3 {
                for c in chord {
                    r.continuity = r
                        .continuity
                        .max((fm[i].eval(c.point) - fp[i].eval(c.point)).abs());
                }
                let qm = self.betas[0] * fm[i].grad.dot(normal);
                let qp = self.betas[1] * fp[i].grad.dot(normal);
                let scale = (self.betas[0] * fm[i].grad.norm())
                    .max(self.betas[1] * fp[i].grad.norm())
                    .max(f64::MIN_POSITIVE);
                r.flux = r.flux.max((qm - qp).abs() / scale);
            }
        }
        r
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BasisResiduals {
    pub edge_average: f64,
    pub continuity: f64,
    /// Relative to the larger conormal flux magnitude.
    pub flux: f64,
    pub partition_of_unity: f64,
}

impl BasisResiduals {
    pub fn max(&self) -> f64 {
        self.edge_average
            .max(self.continuity)
            .max(self.flux)
            .max(self.partition_of_unity)
    }

    pub fn merge(self, other: Self) -> Self {
        BasisResiduals {
            edge_average: self.edge_average.max(other.edge_average),
            continuity: self.continuity.max(other.continuity),
            flux: self.flux.max(other.flux),
            partition_of_unity: self.partition_of_unity.max(other.partition_of_unity),
        }
    }
}

/// Standard Crouzeix–Raviart functions: `φ_k = 1 − 2λ_k`, where `λ_k` is the
/// barycentric coordinate of vertex `k` (the vertex opposite edge `k`).
pub fn standard_cr_basis(tri: &[Point; 3]) -> Result<[Affine; 3]> {
    let twice_area = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    let d = diameter(tri);
    if !(twice_area > 2e-14 * d * d) {
        return Err(Error::InvalidMesh(
            "standard basis requested on a degenerate or clockwise triangle".into(),
        ));
    }
    let origin = centroid(tri);
    Ok([0, 1, 2].map(|k| {
        let e = tri[(k + 2) % 3] - tri[(k + 1) % 3];
        let grad_lambda = e.perp() * (1.0 / twice_area);
        Affine {
            origin,
            value: 1.0 / 3.0,
            grad: grad_lambda * -2.0,
        }
    }))
}

/// Immersed shape functions on an interface element.
pub fn immersed_basis(
    decomp: &ElementDecomposition,
    beta_minus: f64,
    beta_plus: f64,
) -> Result<LocalBasisSet> {
    let singular = |detail: String| Error::SingularBasis { element: 0, detail };
    let Some([d, e]) = decomp.chord else {
        return Err(singular("element is not cut by the interface".into()));
    };
    let chord = e.point - d.point;
    if !(chord.norm() > 0.0) {
        return Err(singular("chord DE has zero length".into()));
    }
    let tri = &decomp.vertices;
    let origin = centroid(tri);
    let h = diameter(tri);
    // Unknowns per region: (value, h·gx, h·gy) about the centroid.
    let row = |p: Point| {
        let q = (p - origin) * (1.0 / h);
        [1.0, q.x, q.y]
    };
    let normal = chord.perp() * (1.0 / chord.norm());
    let beta_max = beta_minus.max(beta_plus);

    let mut a = [[0.0f64; 6]; 6];
    let mut rhs = [[0.0f64; 3]; 6];
    for (r, p) in [d.point, e.point].into_iter().enumerate() {
        let v = row(p);
        a[r][..3].copy_from_slice(&v);
        a[r][3..].copy_from_slice(&v.map(|x| -x));
    }
    a[2] = [
        0.0,
        beta_minus * normal.x / beta_max,
        beta_minus * normal.y / beta_max,
        0.0,
        -beta_plus * normal.x / beta_max,
        -beta_plus * normal.y / beta_max,
    ];
    for k in 0..3 {
        let segs = &decomp.edge_segments[k];
        let len: f64 = segs.iter().map(|s| s.start.dist(s.end)).sum();
        for s in segs {
            let w = s.start.dist(s.end) / len;
            let v = row(s.start.lerp(s.end, 0.5));
            let off = 3 * s.region;
            for c in 0..3 {
                a[3 + k][off + c] += w * v[c];
            }
        }
        rhs[3 + k][k] = 1.0;
    }

    let a_orig = a;
    let rhs_orig = rhs;
    gauss_solve(&mut a, &mut rhs).map_err(|pivot| {
        singular(format!(
            "pivot {pivot:e}; D=({}, {}), E=({}, {})",
            d.point.x, d.point.y, e.point.x, e.point.y
        ))
    })?;

    // Every condition, including the average on an uncut edge, must hold.
    let mut worst = 0.0f64;
    for r in 0..6 {
        for i in 0..3 {
            let lhs: f64 = (0..6).map(|c| a_orig[r][c] * rhs[c][i]).sum();
            worst = worst.max((lhs - rhs_orig[r][i]).abs());
        }
    }
    if worst >= 1e-10 {
        return Err(Error::Internal(format!(
            "immersed basis violates its constraints by {worst:e}"
        )));
    }

    let piece = |region: usize, i: usize| Affine {
        origin,
        value: rhs[3 * region][i],
        grad: Point::new(rhs[3 * region + 1][i] / h, rhs[3 * region + 2][i] / h),
    };
    Ok(LocalBasisSet {
        decomposition: decomp.clone(),
        betas: vec![beta_minus, beta_plus],
        functions: vec![[0, 1, 2].map(|i| piece(0, i)), [0, 1, 2].map(|i| piece(1, i))],
    })
}

/// Gaussian elimination with partial pivoting; the solution overwrites `rhs`.
/// On failure returns the offending pivot magnitude.
fn gauss_solve<const N: usize, const M: usize>(
    a: &mut [[f64; N]; N],
    rhs: &mut [[f64; M]; N],
) -> std::result::Result<(), f64> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..N {
        let pivot_row = (col..N)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        let pivot = a[pivot_row][col];
        if !(pivot.abs() > 1e-13 * scale) {
            return Err(pivot.abs());
        }
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for r in col + 1..N {
            let f = a[r][col] / pivot;
            if f == 0.0 {
                continue;
            }
            for c in col..N {
                a[r][c] -= f * a[col][c];
            }
            for c in 0..M {
                rhs[r][c] -= f * rhs[col][c];
            }
        }
    }
    for col in (0..N).rev() {
        for c in 0..M {
            let mut v = rhs[col][c];
            for k in col + 1..N {
                v -= a[col][k] * rhs[k][c];
            }
            rhs[col][c] = v / a[col][col];
        }
    }
    Ok(())
}

/// Shape functions for any element: standard or immersed.
pub fn local_basis(decomp: &ElementDecomposition, iface: &LevelSetInterface) -> Result<LocalBasisSet> {
    if decomp.is_interface() {
        immersed_basis(decomp, iface.beta_minus, iface.beta_plus)
    } else {
        let side = decomp.regions[0].side;
        Ok(LocalBasisSet {
            decomposition: decomp.clone(),
            betas: vec![iface.beta(side)],
            functions: vec![standard_cr_basis(&decomp.vertices)?],
        })
    }
}

/// A mesh, an interface, and the shape functions of every element.
#[derive(Clone, Debug)]
pub struct ImmersedSpace {
    pub mesh: Mesh,
    pub iface: LevelSetInterface,
    pub bases: Vec<LocalBasisSet>,
}

impl ImmersedSpace {
    pub fn new(mesh: Mesh, iface: LevelSetInterface) -> Result<Self> {
        let bases = (0..mesh.n_triangles())
            .into_par_iter()
            .map(|t| {
                let tri = mesh.triangle_points(t);
                decompose(&tri, &iface)
                    .and_then(|d| local_basis(&d, &iface))
                    .map_err(|err| match err {
                        Error::SingularBasis { detail, .. } => Error::SingularBasis { element: t, detail },
                        other => other.context(format!("element {t}")),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ImmersedSpace { mesh, iface, bases })
    }

    pub fn n_interface_elements(&self) -> usize {
        self.bases.iter().filter(|b| b.is_interface()).count()
    }

    /// Edge-indexed coefficients of triangle `t`.
    pub fn local_coeffs(&self, t: usize, u: &[f64]) -> [f64; 3] {
        self.mesh.triangle_edges()[t].map(|e| u[e])
    }

    /// Value of the edge-indexed function `u` at `p` inside triangle `t`.
    pub fn eval_in(&self, t: usize, u: &[f64], p: Point) -> f64 {
        self.bases[t].eval_combination(&self.local_coeffs(t, u), p)
    }

    /// Worst residual of each basis property over all interface elements.
    pub fn interface_residuals(&self) -> BasisResiduals {
        self.bases
            .iter()
            .filter(|b| b.is_interface())
            .map(LocalBasisSet::residuals)
            .fold(BasisResiduals::default(), BasisResiduals::merge)
    }
}

/// Mean of `f` over each edge (edge-indexed), splitting edges where the
/// interface crosses them.
pub fn interpolate<F>(f: F, mesh: &Mesh, iface: &LevelSetInterface) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64 + Sync,
{
    (0..mesh.n_edges())
        .into_par_iter()
        .map(|e| {
            let [a, b] = mesh.edge_points(e);
            let len = a.dist(b);
            let integral = match crossing_param(a, b, iface)? {
                Some(t) if t > 0.0 && t < 1.0 => {
                    let p = a.lerp(b, t);
                    LINE_GAUSS4.integrate(a, p, &f) + LINE_GAUSS4.integrate(p, b, &f)
                }
                _ => LINE_GAUSS4.integrate(a, b, &f),
            };
            Ok(integral / len)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{InterfaceShape, Side};

    const REF: [Point; 3] = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];

    fn reference_cut(beta_minus: f64, beta_plus: f64) -> LevelSetInterface {
        LevelSetInterface::new(
            InterfaceShape::Affine {
                normal: Point::new(0.65, 0.35),
                offset: 0.65 * 0.35,
            },
            beta_minus,
            beta_plus,
        )
        .unwrap()
    }

    #[test]
    fn standard_basis_on_reference_triangle() {
        let b = standard_cr_basis(&REF).unwrap();
        // Edge AB is local edge 2 (opposite C): φ = 1 − 2y.
        for p in [Point::new(0.2, 0.3), Point::new(0.7, 0.1), Point::new(0.0, 0.0)] {
            assert!((b[2].eval(p) - (1.0 - 2.0 * p.y)).abs() < 1e-15);
        }
        assert!((b[2].grad - Point::new(0.0, -2.0)).norm() < 1e-15);
        for i in 0..3 {
            for k in 0..3 {
                let (s, t) = (REF[(k + 1) % 3], REF[(k + 2) % 3]);
                // Two-point Gauss average.
                let g = 0.5 / 3f64.sqrt();
                let avg = 0.5 * (b[i].eval(s.lerp(t, 0.5 - g)) + b[i].eval(s.lerp(t, 0.5 + g)));
                assert!((avg - if i == k { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn standard_basis_partition_of_unity() {
        let tri = [Point::new(0.3, -0.2), Point::new(1.1, 0.4), Point::new(-0.1, 0.9)];
        let b = standard_cr_basis(&tri).unwrap();
        for s in 0..10 {
            let (u, v) = ((s as f64 * 0.37).fract() * 0.5, (s as f64 * 0.61).fract() * 0.5);
            let p = tri[0] + (tri[1] - tri[0]) * u + (tri[2] - tri[0]) * v;
            let sum: f64 = b.iter().map(|f| f.eval(p)).sum();
            assert!((sum - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_standard_basis() {
        let flat = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        assert!(matches!(standard_cr_basis(&flat), Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn equal_coefficients_reduce_to_standard_basis() {
        let iface = reference_cut(3.0, 3.0);
        let d = decompose(&REF, &iface).unwrap();
        let b = immersed_basis(&d, 3.0, 3.0).unwrap();
        let std = standard_cr_basis(&REF).unwrap();
        for region in &b.decomposition.regions {
            for t in &region.triangles {
                for p in t.iter().copied().chain([centroid(t)]) {
                    for i in 0..3 {
                        assert!((b.eval(i, p) - std[i].eval(p)).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn reference_cut_high_contrast_constraints() {
        let iface = reference_cut(1.0, 1000.0);
        let d = decompose(&REF, &iface).unwrap();
        let b = immersed_basis(&d, 1.0, 1000.0).unwrap();
        let r = b.residuals();
        assert!(r.max() <= 1e-10, "{r:?}");

        // Independent check: averages by Gauss quadrature on sub-segments
        // located via point evaluation.
        let dpt = Point::new(0.35, 0.0);
        let ept = Point::new(0.0, 0.65);
        let avg = |i: usize, pieces: &[(Point, Point)]| {
            let total: f64 = pieces.iter().map(|&(a, c)| a.dist(c)).sum();
            pieces
                .iter()
                .map(|&(a, c)| LINE_GAUSS4.integrate(a, c, |p| b.eval(i, p)))
                .sum::<f64>()
                / total
        };
        for i in 0..3 {
            let ab = avg(i, &[(REF[0], dpt), (dpt, REF[1])]);
            let ca = avg(i, &[(REF[2], ept), (ept, REF[0])]);
            let bc = avg(i, &[(REF[1], REF[2])]);
            let expect = |k: usize| if i == k { 1.0 } else { 0.0 };
            assert!((ab - expect(2)).abs() < 1e-10);
            assert!((ca - expect(1)).abs() < 1e-10);
            assert!((bc - expect(0)).abs() < 1e-10);

            // Continuity at D and E.
            let [fm, fp] = [&b.functions[0][i], &b.functions[1][i]];
            assert!((fm.eval(dpt) - fp.eval(dpt)).abs() < 1e-10);
            assert!((fm.eval(ept) - fp.eval(ept)).abs() < 1e-10);

            // Flux by one-sided finite differences along the chord normal.
            let n = (ept - dpt).perp() * (1.0 / (ept - dpt).norm());
            let mid = dpt.lerp(ept, 0.5);
            let step = 1e-4;
            let dm = (fm.eval(mid + n * step) - fm.eval(mid)) / step;
            let dp = (fp.eval(mid + n * step) - fp.eval(mid)) / step;
            assert!((1.0 * dm - 1000.0 * dp).abs() <= 1e-10 * (1000.0 * dp.abs()).max(1.0));
        }
        assert_eq!(b.decomposition.regions[0].side, Side::Minus);
    }

    #[test]
    fn partition_of_unity_on_cut_element() {
        let iface = reference_cut(1000.0, 1.0);
        let d = decompose(&REF, &iface).unwrap();
        let b = immersed_basis(&d, 1000.0, 1.0).unwrap();
        let chord = d.chord.unwrap();
        let mut pts: Vec<Point> = chord.iter().map(|c| c.point).collect();
        for region in &d.regions {
            for s in 0..10 {
                let t = &region.triangles[s % region.triangles.len()];
                let (u, v) = ((s as f64 * 0.37).fract() * 0.5, (s as f64 * 0.61).fract() * 0.5);
                pts.push(t[0] + (t[1] - t[0]) * u + (t[2] - t[0]) * v);
            }
        }
        for p in pts {
            let sum: f64 = (0..3).map(|i| b.eval(i, p)).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vertex_cut_basis() {
        let iface = LevelSetInterface::new(
            InterfaceShape::Affine {
                normal: Point::new(1.0, -1.0),
                offset: 0.0,
            },
            1.0,
            50.0,
        )
        .unwrap();
        let d = decompose(&REF, &iface).unwrap();
        let b = local_basis(&d, &iface).unwrap();
        assert!(b.is_interface());
        assert!(b.residuals().max() < 1e-10);
    }

    #[test]
    fn interpolation_examples() {
        let mesh = crate::mesh::gen_square_mesh(1, 0.0, 1.0).unwrap();
        let iface = LevelSetInterface::circle(Point::new(0.0, 0.0), 0.6, 1.0, 10.0).unwrap();
        let ones = interpolate(|_| 1.0, &mesh, &iface).unwrap();
        assert!(ones.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let xs = interpolate(|p| p.x, &mesh, &iface).unwrap();
        let bottom = mesh
            .edges()
            .iter()
            .position(|e| e.vertices == [0, 1])
            .unwrap();
        assert!((xs[bottom] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interpolation_reproduces_local_immersed_functions() {
        // A function built from the immersed basis on one cut element is
        // recovered exactly by its own edge averages.
        let iface = reference_cut(1.0, 1000.0);
        let d = decompose(&REF, &iface).unwrap();
        let b = immersed_basis(&d, 1.0, 1000.0).unwrap();
        let coeffs = [0.3, -1.2, 2.5];
        for k in 0..3 {
            let (s, t) = (REF[(k + 1) % 3], REF[(k + 2) % 3]);
            let mut pieces = vec![s];
            pieces.extend(crossing_param(s, t, &iface).unwrap().filter(|&t| t > 0.0 && t < 1.0).map(|u| s.lerp(t, u)));
            pieces.push(t);
            let mean: f64 = pieces
                .windows(2)
                .map(|w| LINE_GAUSS4.integrate(w[0], w[1], |p| b.eval_combination(&coeffs, p)))
                .sum::<f64>()
                / s.dist(t);
            assert!((mean - coeffs[k]).abs() < 1e-12);
        }
    }
}
