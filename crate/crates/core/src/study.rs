//! Convergence studies: configuration, per-level solves, error tables and
//! observed orders, and field export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::assembly::{assemble_load, assemble_system, broken_norms, BrokenNorms, DiscreteSystem, ExactSolution};
use crate::basis::{interpolate, ImmersedSpace};
use crate::eigsolve::{solve_gevp, solve_source, EigenOptions, EigenSolution};
use crate::error::{Error, Result, ResultExt};
use crate::geometry::{InterfaceShape, LevelSetInterface, MultiCrossing, Point};
use crate::mesh::{gen_disk_mesh, gen_disk_mesh_hex, gen_square_mesh, Mesh};
use crate::oracle::{circular_eigenvalues, circular_spectrum, CircularProblem, RadialManufactured};

/// Relative gap below which neighbouring eigenvalues form a cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiskMesh {
    /// Rounded-hexagon rings ([`gen_disk_mesh_hex`]).
    Hex,
    /// Circular rings ([`gen_disk_mesh`]).
    Rings,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    /// `[a, b]²`, level `L` meaning `2^L` cells per side.
    Square { a: f64, b: f64 },
    /// Disk about the origin, level `L` meaning `2^L` rings.
    Disk { radius: f64, mesh: DiskMesh },
}

impl Domain {
    pub fn disk(radius: f64) -> Self {
        Domain::Disk {
            radius,
            mesh: DiskMesh::Hex,
        }
    }
}

impl Domain {
    pub fn mesh(&self, level: u32) -> Result<Mesh> {
        let n = 1usize
            .checked_shl(level)
            .filter(|&n| n <= 1 << 14)
            .ok_or_else(|| Error::InvalidParameter(format!("refinement level {level} is too large")))?;
        match *self {
            Domain::Square { a, b } => gen_square_mesh(n, a, b),
            Domain::Disk { radius, mesh: DiskMesh::Hex } => gen_disk_mesh_hex(n, radius),
            Domain::Disk { radius, mesh: DiskMesh::Rings } => gen_disk_mesh(n, radius),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference {
    /// Exact eigenvalues of the concentric circular problem.
    Oracle,
    /// Eigenvalues computed at a finer level.
    SelfLevel(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub domain: Domain,
    pub shape: InterfaceShape,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub kappa: f64,
    pub levels: Vec<u32>,
    pub k: usize,
    pub reference: Reference,
    pub multi_crossing: MultiCrossing,
    pub out: Option<PathBuf>,
    /// Solve levels concurrently.
    pub parallel_levels: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            domain: Domain::disk(1.0),
            shape: InterfaceShape::Circle {
                center: Point::new(0.0, 0.0),
                radius: 0.38,
            },
            beta_minus: 1.0,
            beta_plus: 1000.0,
            kappa: 1.0,
            levels: vec![3, 4, 5, 6],
            k: 10,
            reference: Reference::Oracle,
            multi_crossing: MultiCrossing::Strict,
            out: None,
            parallel_levels: false,
        }
    }
}

fn parse_numbers<T: std::str::FromStr>(line: usize, key: &str, words: &[&str]) -> Result<Vec<T>> {
    words
        .iter()
        .map(|w| {
            w.parse().map_err(|_| Error::Parse {
                line,
                message: format!("`{key}`: cannot parse `{w}` as a number"),
            })
        })
        .collect()
}

fn expect_len<T>(line: usize, key: &str, values: Vec<T>, n: usize) -> Result<Vec<T>> {
    if values.len() == n {
        Ok(values)
    } else {
        Err(Error::Parse {
            line,
            message: format!("`{key}` expects {n} numbers, got {}", values.len()),
        })
    }
}

impl StudyConfig {
    /// Parses `key = value` lines; `#` starts a comment. Unset keys keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = StudyConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let words: Vec<&str> = value.split_whitespace().collect();
            if !seen.insert(key.to_string()) {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            let (head, rest) = words.split_first().map(|(h, r)| (*h, r)).unwrap_or(("", &[]));
            match key {
                "domain" => {
                    cfg.domain = match head {
                        "disk" => {
                            let (mesh, numbers) = match rest.split_last() {
                                Some((&"hex", front)) => (DiskMesh::Hex, front),
                                Some((&"rings", front)) => (DiskMesh::Rings, front),
                                _ => (DiskMesh::Hex, rest),
                            };
                            let v = expect_len(line, key, parse_numbers(line, key, numbers)?, 1)?;
                            Domain::Disk { radius: v[0], mesh }
                        }
                        "square" => {
                            let v = expect_len(line, key, parse_numbers(line, key, rest)?, 2)?;
                            Domain::Square { a: v[0], b: v[1] }
                        }
                        _ => {
                            return Err(Error::Parse {
                                line,
                                message: format!("unknown domain `{head}`; expected `disk R [hex|rings]` or `square a b`"),
                            })
                        }
                    }
                }
                "interface" => {
                    cfg.shape = match head {
                        "circle" => {
                            let v = expect_len(line, key, parse_numbers(line, key, rest)?, 3)?;
                            InterfaceShape::Circle {
                                center: Point::new(v[0], v[1]),
                                radius: v[2],
                            }
                        }
                        "star" if rest.is_empty() => InterfaceShape::Star {
                            r0: 0.5,
                            amp: 0.2,
                            lobes: 5,
                            phase: std::f64::consts::PI / 5.0,
                        },
                        "star" => {
                            let v: Vec<f64> = expect_len(line, key, parse_numbers(line, key, rest)?, 4)?;
                            if v[2] < 1.0 || v[2].fract() != 0.0 {
                                return Err(Error::Parse {
                                    line,
                                    message: format!("star lobe count must be a positive integer, got {}", v[2]),
                                });
                            }
                            InterfaceShape::Star {
                                r0: v[0],
                                amp: v[1],
                                lobes: v[2] as u32,
                                phase: v[3],
                            }
                        }
                        "affine" => {
                            let v = expect_len(line, key, parse_numbers(line, key, rest)?, 3)?;
                            InterfaceShape::Affine {
                                normal: Point::new(v[0], v[1]),
                                offset: v[2],
                            }
                        }
                        _ => {
                            return Err(Error::Parse {
                                line,
                                message: format!("unknown interface `{head}`; expected circle, star or affine"),
                            })
                        }
                    }
                }
                "beta" => {
                    let v = expect_len(line, key, parse_numbers(line, key, &words)?, 2)?;
                    cfg.beta_minus = v[0];
                    cfg.beta_plus = v[1];
                }
                "kappa" => cfg.kappa = expect_len(line, key, parse_numbers(line, key, &words)?, 1)?[0],
                "levels" => cfg.levels = parse_numbers(line, key, &words)?,
                "k" => cfg.k = expect_len(line, key, parse_numbers(line, key, &words)?, 1)?[0],
                "reference" => {
                    cfg.reference = match (head, rest) {
                        ("oracle", []) => Reference::Oracle,
                        ("self", [level]) => Reference::SelfLevel(level.parse().map_err(|_| Error::Parse {
                            line,
                            message: format!("`reference = self L` needs an integer level, got `{level}`"),
                        })?),
                        _ => {
                            return Err(Error::Parse {
                                line,
                                message: format!("expected `oracle` or `self L`, got `{}`", value.trim()),
                            })
                        }
                    }
                }
                "crossings" => {
                    cfg.multi_crossing = match (head, rest) {
                        ("strict", []) => MultiCrossing::Strict,
                        ("vertex", []) => MultiCrossing::VertexSigns,
                        _ => {
                            return Err(Error::Parse {
                                line,
                                message: format!("expected `strict` or `vertex`, got `{}`", value.trim()),
                            })
                        }
                    }
                }
                "out" => cfg.out = Some(PathBuf::from(value.trim())),
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).context(|| path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidParameter("at least one refinement level is required".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "refinement levels must be strictly increasing, got {:?}",
                self.levels
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("κ must be positive, got {}", self.kappa)));
        }
        match self.domain {
            Domain::Square { a, b } if !(a < b) => {
                return Err(Error::InvalidParameter(format!("square domain needs a < b, got [{a}, {b}]")))
            }
            Domain::Disk { radius, .. } if !(radius > 0.0) => {
                return Err(Error::InvalidParameter(format!("disk radius must be positive, got {radius}")))
            }
            _ => {}
        }
        if let Reference::SelfLevel(r) = self.reference {
            if self.levels.iter().any(|&l| l >= r) {
                return Err(Error::InvalidParameter(format!(
                    "self-reference level {r} must exceed every study level {:?}",
                    self.levels
                )));
            }
        }
        self.interface()?;
        Ok(())
    }

    pub fn interface(&self) -> Result<LevelSetInterface> {
        Ok(LevelSetInterface::new(self.shape, self.beta_minus, self.beta_plus)?.with_multi_crossing(self.multi_crossing))
    }

    /// The concentric problem matching this configuration, if there is one.
    pub fn circular_problem(&self) -> Result<CircularProblem> {
        match (self.domain, self.shape) {
            (Domain::Disk { radius, .. }, InterfaceShape::Circle { center, radius: r_inner })
                if center == Point::new(0.0, 0.0) =>
            {
                CircularProblem::new(r_inner, radius, self.beta_minus, self.beta_plus)
            }
            _ => Err(Error::InvalidParameter(
                "the exact reference needs a disk domain with a circle interface centred at the origin".into(),
            )),
        }
    }
}

/// Everything computed on one refinement level.
pub struct LevelSolve {
    pub level: u32,
    pub space: ImmersedSpace,
    pub system: DiscreteSystem,
    pub solution: EigenSolution,
}

impl LevelSolve {
    pub fn summary(&self) -> LevelResult {
        LevelResult {
            level: self.level,
            h: self.space.mesh.h_max(),
            n_dofs: self.system.dofs.n_dofs(),
            n_interface_elements: self.space.n_interface_elements(),
            eigenvalues: self.solution.eigenvalues.clone(),
        }
    }

    /// Eigenvector `i` as an edge-indexed vector.
    pub fn eigenfunction(&self, i: usize) -> Vec<f64> {
        self.system.dofs.extend(&self.solution.eigenvectors[i])
    }
}

pub fn build_space(cfg: &StudyConfig, level: u32) -> Result<ImmersedSpace> {
    let mesh = cfg.domain.mesh(level)?;
    ImmersedSpace::new(mesh, cfg.interface()?)
}

/// Assembles and solves the eigenproblem for `k` pairs on one level.
pub fn solve_level(cfg: &StudyConfig, level: u32, k: usize, opts: &EigenOptions) -> Result<LevelSolve> {
    let run = || -> Result<LevelSolve> {
        let space = build_space(cfg, level)?;
        let system = assemble_system(&space, cfg.kappa)?;
        let k = k.min(system.dofs.n_dofs());
        let solution = solve_gevp(&system.stiffness, &system.mass, k, opts)?;
        Ok(LevelSolve {
            level,
            space,
            system,
            solution,
        })
    };
    run().context(|| format!("level {level}"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelResult {
    pub level: u32,
    pub h: f64,
    pub n_dofs: usize,
    pub n_interface_elements: usize,
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelResult>,
    pub reference: Vec<f64>,
    /// `errors[level][i] = |λ_h,i − λ_i| / |λ_i|`.
    pub errors: Vec<Vec<f64>>,
    /// `orders[level][i]` between `level − 1` and `level`; empty for the first.
    pub orders: Vec<Vec<f64>>,
    /// Pairing ambiguities found while matching clusters.
    pub warnings: Vec<String>,
}

/// `log(e₁/e₂) / log(h₁/h₂)`.
pub fn observed_order(e1: f64, e2: f64, h1: f64, h2: f64) -> f64 {
    (e1 / e2).ln() / (h1 / h2).ln()
}

/// Least-squares slope of `log e` against `log h`.
pub fn least_squares_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Index ranges of clusters in an ascending list.
pub fn clusters(values: &[f64]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || (values[i] - values[i - 1]).abs() > CLUSTER_TOL * values[i].abs() {
            out.push(start..i);
            start = i;
        }
    }
    out
}

impl ConvergenceReport {
    /// Builds errors and orders from level results and `k + 1` (or more)
    /// reference values; the extra value detects clusters cut off at `k`.
    pub fn new(levels: Vec<LevelResult>, reference: &[f64], k: usize) -> Self {
        let k = k.min(reference.len());
        let mut warnings = Vec::new();
        if reference.len() > k && k > 0 && (reference[k] - reference[k - 1]).abs() <= CLUSTER_TOL * reference[k].abs() {
            warnings.push(format!(
                "reference cluster at λ ≈ {} extends beyond the {k} requested eigenvalues; the last pairing is ambiguous",
                reference[k - 1]
            ));
        }
        let reference = reference[..k].to_vec();
        for lv in &levels {
            if lv.eigenvalues.len() < k {
                warnings.push(format!("level {} computed only {} eigenvalues", lv.level, lv.eigenvalues.len()));
            }
            for c in clusters(&lv.eigenvalues) {
                if c.end > k || c.len() < 2 {
                    continue;
                }
                let ref_c = clusters(&reference).into_iter().find(|r| r.contains(&c.start));
                if ref_c.as_ref().is_some_and(|r| r.start > c.start || r.end < c.end) {
                    warnings.push(format!(
                        "level {}: cluster at λ ≈ {:.6} (indices {}..{}) straddles reference clusters",
                        lv.level,
                        lv.eigenvalues[c.start],
                        c.start + 1,
                        c.end
                    ));
                }
            }
        }
        let errors: Vec<Vec<f64>> = levels
            .iter()
            .map(|lv| {
                lv.eigenvalues
                    .iter()
                    .zip(&reference)
                    .map(|(l, r)| (l - r).abs() / r.abs())
                    .collect()
            })
            .collect();
        let orders = (0..levels.len())
            .map(|j| {
                if j == 0 {
                    return Vec::new();
                }
                errors[j - 1]
                    .iter()
                    .zip(&errors[j])
                    .map(|(&e1, &e2)| observed_order(e1, e2, levels[j - 1].h, levels[j].h))
                    .collect()
            })
            .collect();
        ConvergenceReport {
            levels,
            reference,
            errors,
            orders,
            warnings,
        }
    }

    /// Least-squares order of eigenvalue `i` over all levels.
    pub fn slope(&self, i: usize) -> f64 {
        let h: Vec<f64> = self.levels.iter().map(|l| l.h).collect();
        let e: Vec<f64> = self.errors.iter().map(|e| e[i]).collect();
        least_squares_slope(&h, &e)
    }

    pub fn to_csv(&self) -> String {
        let k = self.reference.len();
        let mut s = String::from("level,h,dof");
        for i in 1..=k {
            write!(s, ",lambda_{i},err_{i},ord_{i}").unwrap();
        }
        s.push('\n');
        for (j, lv) in self.levels.iter().enumerate() {
            write!(s, "{},{:.10e},{}", lv.level, lv.h, lv.n_dofs).unwrap();
            for i in 0..k {
                let lambda = lv.eigenvalues.get(i).map_or(String::new(), |v| format!("{v:.12e}"));
                let err = self.errors[j].get(i).map_or(String::new(), |v| format!("{v:.12e}"));
                let ord = self.orders[j].get(i).map_or(String::new(), |v| format!("{v:.6}"));
                write!(s, ",{lambda},{err},{ord}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Human-readable table: reference column, then `λ_h (order)` per level.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        write!(s, "{:>14}", "reference").unwrap();
        for lv in &self.levels {
            write!(s, " | {:>22}", format!("h={:.4e}", lv.h)).unwrap();
        }
        s.push('\n');
        write!(s, "{:>14}", "").unwrap();
        for lv in &self.levels {
            write!(s, " | {:>22}", format!("dof={}", lv.n_dofs)).unwrap();
        }
        s.push('\n');
        for (i, r) in self.reference.iter().enumerate() {
            write!(s, "{r:>14.6}").unwrap();
            for (j, lv) in self.levels.iter().enumerate() {
                let cell = match (lv.eigenvalues.get(i), self.orders[j].get(i)) {
                    (Some(l), Some(o)) => format!("{l:.6} ({o:.2})"),
                    (Some(l), None) => format!("{l:.6}"),
                    _ => String::new(),
                };
                write!(s, " | {cell:>22}").unwrap();
            }
            s.push('\n');
        }
        for w in &self.warnings {
            writeln!(s, "warning: {w}").unwrap();
        }
        s
    }
}

fn solve_levels(cfg: &StudyConfig, levels: &[u32], k: usize, opts: &EigenOptions) -> Result<Vec<LevelResult>> {
    let one = |&l: &u32| solve_level(cfg, l, k, opts).map(|s| s.summary());
    if cfg.parallel_levels {
        levels.par_iter().map(one).collect()
    } else {
        levels.iter().map(one).collect()
    }
}

/// Reference values for `count` eigenvalues.
pub fn reference_eigenvalues(cfg: &StudyConfig, count: usize, opts: &EigenOptions) -> Result<Vec<f64>> {
    match cfg.reference {
        Reference::Oracle => circular_eigenvalues(&cfg.circular_problem()?, count).context(|| "reference".into()),
        Reference::SelfLevel(l) => Ok(solve_level(cfg, l, count, opts)?.solution.eigenvalues),
    }
}

pub fn run_convergence(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    run_convergence_with(cfg, &EigenOptions::default())
}

pub fn run_convergence_with(cfg: &StudyConfig, opts: &EigenOptions) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let reference = reference_eigenvalues(cfg, cfg.k + 1, opts)?;
    let levels = solve_levels(cfg, &cfg.levels, cfg.k, opts)?;
    Ok(ConvergenceReport::new(levels, &reference, cfg.k))
}

/// Errors of the source solve and of the interpolant on one level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceLevel {
    pub level: u32,
    pub h: f64,
    pub n_dofs: usize,
    pub solution: BrokenNorms,
    pub interpolant: BrokenNorms,
}

/// Source problem with the manufactured radial solution on each level.
pub fn source_convergence(prob: &CircularProblem, levels: &[u32], kappa: f64) -> Result<Vec<SourceLevel>> {
    let exact = RadialManufactured::new(prob)?;
    let iface = LevelSetInterface::circle(Point::new(0.0, 0.0), prob.r_inner, prob.beta_minus, prob.beta_plus)?;
    levels
        .iter()
        .map(|&level| {
            let run = || -> Result<SourceLevel> {
                let mesh = Domain::disk(prob.r_outer).mesh(level)?;
                let space = ImmersedSpace::new(mesh, iface)?;
                let system = assemble_system(&space, kappa)?;
                let load = system.dofs.restrict_vec(&assemble_load(|p| exact.source(p), &space));
                let u = system.dofs.extend(&solve_source(&system.stiffness, &load)?);
                let interp = interpolate(|p| exact.value(p), &space.mesh, &space.iface)?;
                Ok(SourceLevel {
                    level,
                    h: space.mesh.h_max(),
                    n_dofs: system.dofs.n_dofs(),
                    solution: broken_norms(&space, &u, &exact),
                    interpolant: broken_norms(&space, &interp, &exact),
                })
            };
            run().context(|| format!("level {level}"))
        })
        .collect()
}

/// Sub-triangulated samples of a discrete field: every sub-triangle of every
/// element contributes its own three vertices.
pub struct FieldSamples {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    pub triangles: Vec<[usize; 3]>,
}

pub fn sample_field(space: &ImmersedSpace, u: &[f64]) -> FieldSamples {
    let mut out = FieldSamples {
        points: Vec::new(),
        values: Vec::new(),
        triangles: Vec::new(),
    };
    for (t, basis) in space.bases.iter().enumerate() {
        let c = space.local_coeffs(t, u);
        for (r, region) in basis.decomposition.regions.iter().enumerate() {
            let f = &basis.functions[r];
            for tri in &region.triangles {
                let base = out.points.len();
                for &p in tri {
                    out.points.push(p);
                    out.values.push((0..3).map(|i| c[i] * f[i].eval(p)).sum());
                }
                out.triangles.push([base, base + 1, base + 2]);
            }
        }
    }
    out
}

/// Legacy-VTK ASCII unstructured grid with point scalars `name`.
pub fn write_vtk(samples: &FieldSamples, name: &str) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nimmersed field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", samples.points.len()).unwrap();
    for p in &samples.points {
        writeln!(s, "{:e} {:e} 0", p.x, p.y).unwrap();
    }
    writeln!(s, "CELLS {} {}", samples.triangles.len(), 4 * samples.triangles.len()).unwrap();
    for t in &samples.triangles {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {}", samples.triangles.len()).unwrap();
    for _ in &samples.triangles {
        s.push_str("5\n");
    }
    writeln!(s, "POINT_DATA {}\nSCALARS {name} double 1\nLOOKUP_TABLE default", samples.points.len()).unwrap();
    for v in &samples.values {
        writeln!(s, "{v:e}").unwrap();
    }
    s
}

pub fn write_csv(samples: &FieldSamples) -> String {
    let mut s = String::from("x,y,value\n");
    for (p, v) in samples.points.iter().zip(&samples.values) {
        writeln!(s, "{:e},{:e},{:e}", p.x, p.y, v).unwrap();
    }
    s
}

/// Writes the field as VTK, or as CSV when `path` ends in `.csv`. Returns
/// the number of exported vertices.
pub fn export_field(space: &ImmersedSpace, u: &[f64], path: &Path) -> Result<usize> {
    let samples = sample_field(space, u);
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => write_csv(&samples),
        _ => write_vtk(&samples, "u"),
    };
    std::fs::write(path, text).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    Ok(samples.points.len())
}

/// Ascending exact eigenvalues with their angular orders and multiplicities.
pub fn oracle_table(prob: &CircularProblem, count: usize) -> Result<String> {
    let spectrum = circular_spectrum(prob, count)?;
    let mut s = String::new();
    writeln!(
        s,
        "# R_I = {}, R_O = {}, beta- = {}, beta+ = {}",
        prob.r_inner, prob.r_outer, prob.beta_minus, prob.beta_plus
    )
    .unwrap();
    writeln!(s, "{:>4} {:>18} {:>4} {:>5}", "i", "lambda", "m", "mult").unwrap();
    let mut index = 1;
    for e in spectrum {
        writeln!(s, "{index:>4} {:>18.9} {:>4} {:>5}", e.lambda, e.m, format!("x{}", e.multiplicity)).unwrap();
        index += e.multiplicity;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_from_error_ratio() {
        assert!((observed_order(4.0e-2, 1.0e-2, 0.1, 0.05) - 2.0).abs() < 1e-12);
        let h = [0.4, 0.2, 0.1, 0.05];
        let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((least_squares_slope(&h, &e) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn config_grammar() {
        let cfg = StudyConfig::parse(
            "# disk study\n\
             domain = disk 1.0\n\
             interface = circle 0 0 0.38\n\
             beta = 1 1000\n\
             kappa = 1\n\
             levels = 3 4 5 6\n\
             k = 10\n\
             reference = oracle\n",
        )
        .unwrap();
        assert_eq!(cfg, StudyConfig::default());

        let star = StudyConfig::parse("domain = square -1 1\ninterface = star\nreference = self 8\nlevels = 4 5").unwrap();
        assert_eq!(star.reference, Reference::SelfLevel(8));
        assert!(matches!(star.shape, InterfaceShape::Star { lobes: 5, .. }));
        assert_eq!(star.multi_crossing, MultiCrossing::Strict);

        let tuned = StudyConfig::parse("domain = disk 2 rings
crossings = vertex").unwrap();
        assert_eq!(tuned.domain, Domain::Disk { radius: 2.0, mesh: DiskMesh::Rings });
        assert_eq!(tuned.interface().unwrap().multi_crossing, MultiCrossing::VertexSigns);
        assert_eq!(StudyConfig::parse("domain = disk 1 hex").unwrap().domain, Domain::disk(1.0));

        for (text, line) in [
            ("k = 1\nfoo = 2", 2),
            ("domain = disk", 1),
            ("kappa = x", 1),
            ("k = 1\nk = 2", 2),
            ("reference = self", 1),
            ("levels", 1),
            ("k = 2\ncrossings = loose", 2),
            ("domain = disk 1 spiral", 1),
        ] {
            match StudyConfig::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(StudyConfig::parse("levels = 4 3").is_err());
        assert!(StudyConfig::parse("kappa = 0").is_err());
        assert!(StudyConfig::parse("k = 0").is_err());
        assert!(StudyConfig::parse("levels = 3 4\nreference = self 4").is_err());
    }

    #[test]
    fn report_orders_and_csv() {
        let levels = vec![
            LevelResult {
                level: 1,
                h: 0.1,
                n_dofs: 10,
                n_interface_elements: 0,
                eigenvalues: vec![1.04, 2.08],
            },
            LevelResult {
                level: 2,
                h: 0.05,
                n_dofs: 40,
                n_interface_elements: 0,
                eigenvalues: vec![1.01, 2.02],
            },
        ];
        let r = ConvergenceReport::new(levels, &[1.0, 2.0, 3.0], 2);
        assert!((r.orders[1][0] - 2.0).abs() < 1e-9);
        assert!(r.warnings.is_empty());
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "level,h,dof,lambda_1,err_1,ord_1,lambda_2,err_2,ord_2");
        assert!(lines.next().unwrap().starts_with("1,1.0000000000e-1,10,1.04"));
        assert!(lines.next().unwrap().contains(",2.000000"));
    }

    #[test]
    fn truncated_cluster_is_reported() {
        let lv = LevelResult {
            level: 1,
            h: 0.1,
            n_dofs: 10,
            n_interface_elements: 0,
            eigenvalues: vec![1.1, 2.1],
        };
        let r = ConvergenceReport::new(vec![lv], &[1.0, 2.0, 2.0], 2);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn exported_constant_field() {
        let cfg = StudyConfig::parse("domain = square -1 1\ninterface = circle 0.1 0 0.5\nlevels = 3").unwrap();
        let space = build_space(&cfg, 3).unwrap();
        let ones = vec![1.0; space.mesh.n_edges()];
        let samples = sample_field(&space, &ones);
        let expected: usize = space.bases.iter().flat_map(|b| &b.decomposition.regions).map(|r| 3 * r.triangles.len()).sum();
        assert_eq!(samples.points.len(), expected);
        assert!(samples.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let vtk = write_vtk(&samples, "u");
        assert!(vtk.contains(&format!("POINTS {expected} double")));
    }

    #[test]
    fn oracle_table_lists_multiplicities() {
        let prob = CircularProblem::new(0.38, 1.0, 1.0, 1.0).unwrap();
        let table = oracle_table(&prob, 3).unwrap();
        assert!(table.contains("5.78318596"));
        assert!(table.contains("x2"));
    }
}
