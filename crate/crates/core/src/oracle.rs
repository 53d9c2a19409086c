//! Exact spectrum of the concentric circular interface problem.
//!
//! On the disk `r < R_O` with interface `r = R_I`, separation of variables
//! gives eigenfunctions `R(r)(d₁ cos mθ + d₂ sin mθ)`, where `R` is `J_m`
//! inside and a combination of `J_m`, `Y_m` outside. Eigenvalues are the roots
//! in `λ` of the determinant of the 3×3 system expressing the outer Dirichlet
//! condition and value and flux continuity at `R_I`.

use std::f64::consts::FRAC_2_PI;

use rayon::prelude::*;

use crate::assembly::ExactSolution;
use crate::error::{Error, Result};
use crate::geometry::Point;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;

/// `J_0(x), …, J_n(x)` for `x > 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 Σ J_{2k} = 1`.
fn j_sequence(n: usize, x: f64) -> Vec<f64> {
    debug_assert!(x > 0.0);
    let top = n.max(x.ceil() as usize);
    let mut start = top + 30 + (3.0 * (top as f64).sqrt()) as usize;
    start += start % 2;
    let mut seq = vec![0.0; start + 2];
    seq[start] = 1e-300;
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        seq[k - 1] = 2.0 * k as f64 / x * seq[k] - seq[k + 1];
        if seq[k - 1].abs() > 1e250 {
            for v in &mut seq[k - 1..] {
                *v *= 1e-250;
            }
            sum *= 1e-250;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            sum += 2.0 * seq[k - 1];
        }
    }
    let norm = seq[0] + sum;
    seq.truncate(start + 1);
    seq.iter_mut().for_each(|v| *v /= norm);
    seq
}

/// Bessel function of the first kind `J_m(x)`.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if x < 0.0 {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        return sign * bessel_j(m, -x);
    }
    j_sequence(m as usize, x)[m as usize]
}

/// `Y_0(x), …, Y_n(x)` from the Neumann series of `Y_0`, `Y_1` in terms of
/// the `J` sequence, then forward recurrence.
fn y_sequence(n: usize, x: f64, j: &[f64]) -> Vec<f64> {
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for k in 1..(j.len() - 1) / 2 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
    }
    let y0 = FRAC_2_PI * (log_term * j[0] - 2.0 * s0);
    let y1 = FRAC_2_PI * (log_term * j[1] - j[0] / x + s1);
    let mut y = vec![y0, y1];
    for k in 1..n {
        y.push(2.0 * k as f64 / x * y[k] - y[k - 1]);
    }
    y.truncate(n + 1);
    y
}

/// Bessel function of the second kind `Y_m(x)`, `x > 0`.
pub fn bessel_y(m: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Y_{m}({x}) requires a positive finite argument")));
    }
    let j = j_sequence(m as usize + 1, x);
    Ok(y_sequence(m as usize, x, &j)[m as usize])
}

/// `(J_m, J_m', Y_m, Y_m')` at `x > 0`.
fn bessel_jy_with_derivatives(m: u32, x: f64) -> [f64; 4] {
    let m = m as usize;
    let j = j_sequence(m + 1, x);
    let y = y_sequence(m + 1, x, &j);
    let (dj, dy) = if m == 0 {
        (-j[1], -y[1])
    } else {
        (0.5 * (j[m - 1] - j[m + 1]), 0.5 * (y[m - 1] - y[m + 1]))
    };
    [j[m], dj, y[m], dy]
}

/// `J_m'(x)`.
pub fn bessel_j_prime(m: u32, x: f64) -> f64 {
    match m {
        0 => -bessel_j(1, x),
        _ => 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x)),
    }
}

/// `Y_m'(x)`, `x > 0`.
pub fn bessel_y_prime(m: u32, x: f64) -> Result<f64> {
    match m {
        0 => Ok(-bessel_y(1, x)?),
        _ => Ok(0.5 * (bessel_y(m - 1, x)? - bessel_y(m + 1, x)?)),
    }
}

/// Concentric disk of radius `r_outer` with interface circle `r_inner`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircularProblem {
    pub r_inner: f64,
    pub r_outer: f64,
    pub beta_minus: f64,
    pub beta_plus: f64,
    /// Highest angular order scanned.
    pub m_max: u32,
    /// Upper end of the scan; `None` picks and extends it automatically.
    pub lambda_max: Option<f64>,
}

impl CircularProblem {
    pub fn new(r_inner: f64, r_outer: f64, beta_minus: f64, beta_plus: f64) -> Result<Self> {
        let p = CircularProblem {
            r_inner,
            r_outer,
            beta_minus,
            beta_plus,
            m_max: 12,
            lambda_max: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_inner > 0.0 && self.r_inner < self.r_outer && self.r_outer.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radii must satisfy 0 < R_I < R_O, got R_I = {}, R_O = {}",
                self.r_inner, self.r_outer
            )));
        }
        if !(self.beta_minus > 0.0 && self.beta_plus > 0.0) || !self.beta_minus.is_finite() || !self.beta_plus.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coefficients must be positive, got β⁻ = {}, β⁺ = {}",
                self.beta_minus, self.beta_plus
            )));
        }
        if let Some(l) = self.lambda_max {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter(format!("λ_max must be positive, got {l}")));
            }
        }
        Ok(())
    }

    pub fn beta_min(&self) -> f64 {
        self.beta_minus.min(self.beta_plus)
    }
}

/// The interface-condition matrix at `λ`, columns `(c₁⁺, c₂⁺, c₁⁻)`.
fn system_matrix(lambda: f64, m: u32, prob: &CircularProblem) -> [[f64; 3]; 3] {
    let kp = (lambda / prob.beta_plus).sqrt();
    let km = (lambda / prob.beta_minus).sqrt();
    let [jo, _, yo, _] = bessel_jy_with_derivatives(m, kp * prob.r_outer);
    let [ji, dji, yi, dyi] = bessel_jy_with_derivatives(m, kp * prob.r_inner);
    let [jm, djm, _, _] = bessel_jy_with_derivatives(m, km * prob.r_inner);
    [
        [jo, yo, 0.0],
        [ji, yi, -jm],
        [
            prob.beta_plus * kp * dji,
            prob.beta_plus * kp * dyi,
            -prob.beta_minus * km * djm,
        ],
    ]
}

/// Scales columns, then rows, to unit maximum magnitude.
fn equilibrate(mut a: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    for j in 0..3 {
        let s = (0..3).map(|i| a[i][j].abs()).fold(0.0, f64::max);
        if s > 0.0 {
            (0..3).for_each(|i| a[i][j] /= s);
        }
    }
    for row in &mut a {
        let s = row.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    a
}

fn det3(a: &[[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Determinant of the equilibrated interface-condition matrix. The positive
/// column and row scalings keep its sign and zeros.
pub fn det_a(lambda: f64, m: u32, prob: &CircularProblem) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("det_A needs λ > 0, got {lambda}")));
    }
    Ok(det3(&equilibrate(system_matrix(lambda, m, prob))))
}

/// One root of the determinant for angular order `m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircularEigenvalue {
    pub lambda: f64,
    pub m: u32,
    /// 1 for `m = 0`, 2 otherwise (`cos mθ` and `sin mθ`).
    pub multiplicity: usize,
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-13 * hi || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn scan_step(prob: &CircularProblem) -> f64 {
    // Spacing of the first two equal-coefficient radial modes.
    const J01: f64 = 2.404_825_557_695_773;
    const J02: f64 = 5.520_078_110_286_311;
    0.05 * prob.beta_min() * (J02 * J02 - J01 * J01) / (prob.r_outer * prob.r_outer)
}

/// Roots of `det_a(·, m)` in `(0, lambda_max]`.
pub fn roots_for_order(m: u32, prob: &CircularProblem, lambda_max: f64) -> Vec<f64> {
    let f = |l: f64| det_a(l, m, prob).expect("scan points are positive");
    let step = scan_step(prob);
    let n = (lambda_max / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (i as f64 * step).max(1e-3 * step).min(lambda_max)).collect();
    let vals: Vec<f64> = grid.iter().map(|&l| f(l)).collect();

    let mut roots = Vec::new();
    let push_brackets = |grid: &[f64], vals: &[f64], roots: &mut Vec<f64>| {
        for i in 0..grid.len() - 1 {
            let (a, b) = (vals[i], vals[i + 1]);
            if a == 0.0 {
                roots.push(grid[i]);
            } else if a * b < 0.0 {
                roots.push(bisect(f, grid[i], grid[i + 1], a));
            }
        }
    };
    push_brackets(&grid, &vals, &mut roots);
    if vals[n] == 0.0 {
        roots.push(grid[n]);
    }

    // Two roots inside one step leave no sign change; look for dips of |det|.
    for i in 1..n {
        let (a, b, c) = (vals[i - 1], vals[i], vals[i + 1]);
        if b.abs() < 1e-6 && b.abs() < a.abs() && b.abs() < c.abs() && a * b > 0.0 && b * c > 0.0 {
            let fine: Vec<f64> = (0..=400).map(|s| grid[i - 1] + (grid[i + 1] - grid[i - 1]) * s as f64 / 400.0).collect();
            let fvals: Vec<f64> = fine.iter().map(|&l| f(l)).collect();
            push_brackets(&fine, &fvals, &mut roots);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * y.abs());
    roots
}

/// `count`-th eigenvalue (with multiplicity) of the homogeneous disk with
/// coefficient `beta_min`, by Weyl's law; a starting scan range.
fn default_lambda_max(prob: &CircularProblem, count: usize) -> f64 {
    2.0 * 4.0 * prob.beta_min() * count as f64 / (prob.r_outer * prob.r_outer)
}

/// The `count` smallest eigenvalues with their angular orders; a pair
/// `cos mθ`, `sin mθ` counts twice but is listed once.
pub fn circular_spectrum(prob: &CircularProblem, count: usize) -> Result<Vec<CircularEigenvalue>> {
    prob.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let mut lambda_max = prob.lambda_max.unwrap_or_else(|| default_lambda_max(prob, count));
    loop {
        let mut all: Vec<CircularEigenvalue> = (0..=prob.m_max)
            .into_par_iter()
            .flat_map_iter(|m| {
                roots_for_order(m, prob, lambda_max).into_iter().map(move |lambda| CircularEigenvalue {
                    lambda,
                    m,
                    multiplicity: if m == 0 { 1 } else { 2 },
                })
            })
            .collect();
        all.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.m.cmp(&b.m)));

        let mut total = 0;
        let mut taken = Vec::new();
        for e in all {
            if total >= count {
                break;
            }
            total += e.multiplicity;
            taken.push(e);
        }
        if total >= count {
            let last = taken.last().expect("count ≥ 1").lambda;
            let beyond = roots_for_order(prob.m_max + 1, prob, last);
            if let Some(&r) = beyond.first() {
                return Err(Error::RangeExhausted(format!(
                    "order m = {} has an eigenvalue {r} among the requested {count}; increase m_max",
                    prob.m_max + 1
                )));
            }
            return Ok(taken);
        }
        if prob.lambda_max.is_some() {
            return Err(Error::RangeExhausted(format!(
                "only {total} eigenvalues below λ_max = {lambda_max} for orders m ≤ {}; increase λ_max or m_max",
                prob.m_max
            )));
        }
        lambda_max *= 2.0;
        if lambda_max > 1e12 * prob.beta_min() {
            return Err(Error::RangeExhausted(format!(
                "found only {total} of {count} eigenvalues for orders m ≤ {}",
                prob.m_max
            )));
        }
    }
}

/// The `count` smallest eigenvalues in ascending order, repeated by multiplicity.
pub fn circular_eigenvalues(prob: &CircularProblem, count: usize) -> Result<Vec<f64>> {
    let spectrum = circular_spectrum(prob, count)?;
    let mut out: Vec<f64> = spectrum
        .iter()
        .flat_map(|e| std::iter::repeat_n(e.lambda, e.multiplicity))
        .collect();
    out.truncate(count);
    Ok(out)
}

/// Radial eigenfunction `R(r) cos mθ` for an eigenvalue of order `m`,
/// scaled so that `R` has unit coefficient `c₁⁻`.
#[derive(Clone, Debug)]
pub struct RadialMode {
    pub prob: CircularProblem,
    pub lambda: f64,
    pub m: u32,
    c_plus: [f64; 2],
}

impl RadialMode {
    pub fn new(prob: &CircularProblem, lambda: f64, m: u32) -> Result<Self> {
        prob.validate()?;
        let a = system_matrix(lambda, m, prob);
        // Null vector from the first row; value continuity fixes c₁⁻ = 1.
        let (c1, c2) = (a[0][1], -a[0][0]);
        let outer = c1 * a[1][0] + c2 * a[1][1];
        let inner = -a[1][2];
        if inner.abs() < 1e-12 * outer.abs().max(1.0) {
            return Err(Error::Domain(format!(
                "J_{m} vanishes at the interface for λ = {lambda}; mode normalization undefined"
            )));
        }
        let scale = inner / outer;
        Ok(RadialMode {
            prob: prob.clone(),
            lambda,
            m,
            c_plus: [c1 * scale, c2 * scale],
        })
    }

    fn radial(&self, r: f64) -> (f64, f64) {
        let p = &self.prob;
        if r < p.r_inner {
            let k = (self.lambda / p.beta_minus).sqrt();
            if r == 0.0 {
                return (bessel_j(self.m, 0.0), k * bessel_j_prime(self.m, 0.0));
            }
            let [j, dj, _, _] = bessel_jy_with_derivatives(self.m, k * r);
            (j, k * dj)
        } else {
            let k = (self.lambda / p.beta_plus).sqrt();
            let [j, dj, y, dy] = bessel_jy_with_derivatives(self.m, k * r);
            (self.c_plus[0] * j + self.c_plus[1] * y, k * (self.c_plus[0] * dj + self.c_plus[1] * dy))
        }
    }
}

impl ExactSolution for RadialMode {
    fn value(&self, p: Point) -> f64 {
        let (r, th) = (p.norm(), p.y.atan2(p.x));
        self.radial(r).0 * (self.m as f64 * th).cos()
    }

    fn grad(&self, p: Point) -> Point {
        let r = p.norm();
        let th = p.y.atan2(p.x);
        let (v, dv) = self.radial(r);
        let m = self.m as f64;
        let (c, s) = ((m * th).cos(), (m * th).sin());
        if r == 0.0 {
            return Point::new(0.0, 0.0);
        }
        let er = Point::new(th.cos(), th.sin());
        let et = Point::new(-th.sin(), th.cos());
        er * (dv * c) + et * (-m * v * s / r)
    }
}

/// Manufactured radial solution with `β ∂u/∂r = 3r²` on both sides,
/// `u(R_O) = 0`, continuous at `R_I`, and source `f = −∇·(β∇u) = −9r`.
#[derive(Clone, Debug)]
pub struct RadialManufactured {
    pub prob: CircularProblem,
    offset_minus: f64,
    offset_plus: f64,
}

impl RadialManufactured {
    pub fn new(prob: &CircularProblem) -> Result<Self> {
        prob.validate()?;
        let offset_plus = -prob.r_outer.powi(3) / prob.beta_plus;
        let offset_minus = prob.r_inner.powi(3) * (1.0 / prob.beta_plus - 1.0 / prob.beta_minus) + offset_plus;
        Ok(RadialManufactured {
            prob: prob.clone(),
            offset_minus,
            offset_plus,
        })
    }

    pub fn source(&self, p: Point) -> f64 {
        -9.0 * p.norm()
    }

    fn side(&self, r: f64) -> (f64, f64) {
        if r < self.prob.r_inner {
            (self.prob.beta_minus, self.offset_minus)
        } else {
            (self.prob.beta_plus, self.offset_plus)
        }
    }
}

impl ExactSolution for RadialManufactured {
    fn value(&self, p: Point) -> f64 {
        let r = p.norm();
        let (beta, offset) = self.side(r);
        r.powi(3) / beta + offset
    }

    fn grad(&self, p: Point) -> Point {
        let r = p.norm();
        let (beta, _) = self.side(r);
        p * (3.0 * r / beta)
    }
}

/// Equal-coefficient check values: `j_{m,k}` by scanning and bisecting `J_m`.
pub fn bessel_j_zeros(m: u32, count: usize) -> Vec<f64> {
    let mut zeros = Vec::with_capacity(count);
    let h = 0.05;
    let mut x = h;
    let mut fx = bessel_j(m, x);
    while zeros.len() < count {
        let next = x + h;
        let fnext = bessel_j(m, next);
        if fx * fnext < 0.0 {
            zeros.push(bisect(|t| bessel_j(m, t), x, next, fx));
        }
        x = next;
        fx = fnext;
        if x > 1e4 {
            break;
        }
    }
    zeros
}
