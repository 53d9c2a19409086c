//! Level-set interfaces and the cut-element decomposition.
//!
//! An interface is the zero set of a signed field `φ`; `φ < 0` is the minus
//! region. Inside an element the curve is replaced by the chord joining its two
//! edge crossings, which splits the triangle into a sub-triangle and a
//! quadrilateral (or into two triangles when the chord starts at a vertex).

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Crossings closer than this fraction of the edge length to an endpoint snap to it.
pub const SNAP_TOL: f64 = 1e-9;
/// Elements whose smaller cut region is below this fraction of the element area are uncut.
pub const SLIVER_TOL: f64 = 1e-12;
const BISECTION_STEPS: usize = 60;
const EDGE_SAMPLES: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise rotation by 90 degrees.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Signed area of the triangle `(a, b, c)`; positive when counter-clockwise.
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * (b - a).cross(c - a)
}

pub fn centroid(tri: &[Point; 3]) -> Point {
    Point::new(
        (tri[0].x + tri[1].x + tri[2].x) / 3.0,
        (tri[0].y + tri[1].y + tri[2].y) / 3.0,
    )
}

pub fn diameter(tri: &[Point; 3]) -> f64 {
    tri[0]
        .dist(tri[1])
        .max(tri[1].dist(tri[2]))
        .max(tri[2].dist(tri[0]))
}

/// Which side of the interface a point or region lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn of(phi: f64) -> Side {
        if phi < 0.0 {
            Side::Minus
        } else {
            Side::Plus
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InterfaceShape {
    Circle { center: Point, radius: f64 },
    /// `r = r0 + amp·sin(lobes·θ − phase)` in polar coordinates about the origin.
    Star {
        r0: f64,
        amp: f64,
        lobes: u32,
        phase: f64,
    },
    /// The line `normal·x = offset`; the minus side is `normal·x < offset`.
    Affine { normal: Point, offset: f64 },
}

/// Treatment of an edge whose endpoints lie on the same side while the
/// interface crosses it in between.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MultiCrossing {
    /// Reject the mesh as too coarse.
    #[default]
    Strict,
    /// Classify the edge by its endpoint signs, dropping the small cap.
    VertexSigns,
}

/// Immersed interface as the zero set of a level-set function, together with
/// the piecewise-constant diffusion coefficient it separates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSetInterface {
    pub shape: InterfaceShape,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub multi_crossing: MultiCrossing,
}

impl LevelSetInterface {
    pub fn new(shape: InterfaceShape, beta_minus: f64, beta_plus: f64) -> Result<Self> {
        if !(beta_minus > 0.0 && beta_plus > 0.0) || !beta_minus.is_finite() || !beta_plus.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "diffusion coefficients must be positive, got ({beta_minus}, {beta_plus})"
            )));
        }
        match shape {
            InterfaceShape::Circle { radius, .. } if !(radius > 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "circle radius must be positive, got {radius}"
                )))
            }
            InterfaceShape::Star { r0, amp, lobes, .. } if !(r0 > amp.abs()) || lobes == 0 => {
                return Err(Error::InvalidParameter(format!(
                    "star interface needs r0 > |amp| and lobes ≥ 1, got r0={r0} amp={amp} lobes={lobes}"
                )))
            }
            InterfaceShape::Affine { normal, .. } if normal.norm() == 0.0 => {
                return Err(Error::InvalidParameter("affine interface normal is zero".into()))
            }
            _ => {}
        }
        Ok(LevelSetInterface {
            shape,
            beta_minus,
            beta_plus,
            multi_crossing: MultiCrossing::Strict,
        })
    }

    pub fn circle(center: Point, radius: f64, beta_minus: f64, beta_plus: f64) -> Result<Self> {
        Self::new(InterfaceShape::Circle { center, radius }, beta_minus, beta_plus)
    }

    /// The five-lobed star `r = 0.5 + 0.2·sin(5θ − π/5)`.
    pub fn default_star(beta_minus: f64, beta_plus: f64) -> Result<Self> {
        Self::new(
            InterfaceShape::Star {
                r0: 0.5,
                amp: 0.2,
                lobes: 5,
                phase: PI / 5.0,
            },
            beta_minus,
            beta_plus,
        )
    }

    pub fn phi(&self, p: Point) -> f64 {
        match self.shape {
            InterfaceShape::Circle { center, radius } => (p - center).norm() - radius,
            InterfaceShape::Star {
                r0,
                amp,
                lobes,
                phase,
            } => {
                let theta = p.y.atan2(p.x);
                p.norm() - (r0 + amp * (lobes as f64 * theta - phase).sin())
            }
            InterfaceShape::Affine { normal, offset } => normal.dot(p) - offset,
        }
    }

    pub fn side(&self, p: Point) -> Side {
        Side::of(self.phi(p))
    }

    pub fn beta(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.beta_minus,
            Side::Plus => self.beta_plus,
        }
    }

    pub fn beta_at(&self, p: Point) -> f64 {
        self.beta(self.side(p))
    }

    /// Same geometry with different coefficients.
    pub fn with_betas(&self, beta_minus: f64, beta_plus: f64) -> Result<Self> {
        Ok(Self {
            multi_crossing: self.multi_crossing,
            ..Self::new(self.shape, beta_minus, beta_plus)?
        })
    }

    pub fn with_multi_crossing(self, multi_crossing: MultiCrossing) -> Self {
        Self { multi_crossing, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementClass {
    NonInterface(Side),
    Interface,
}

/// Where a chord endpoint sits on the element boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutLocation {
    /// Local vertex index (after snapping).
    Vertex(usize),
    /// Interior of local edge `k`, the edge opposite vertex `k`.
    Edge(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutPoint {
    pub point: Point,
    pub location: CutLocation,
}

/// A piece of a local edge lying in a single sub-region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeSegment {
    pub start: Point,
    pub end: Point,
    /// Index into [`ElementDecomposition::regions`].
    pub region: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubRegion {
    pub side: Side,
    /// Polygon vertices, counter-clockwise.
    pub polygon: Vec<Point>,
    /// Sub-triangulation of the polygon, each counter-clockwise.
    pub triangles: Vec<[Point; 3]>,
    pub area: f64,
}

/// Per-element cut record.
///
/// Local edge `k` joins vertices `k+1` and `k+2` (mod 3). For interface
/// elements `regions[0]` is the minus region and `regions[1]` the plus region.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementDecomposition {
    pub vertices: [Point; 3],
    pub class: ElementClass,
    /// The chord endpoints `D` and `E`, present for interface elements.
    pub chord: Option<[CutPoint; 2]>,
    pub regions: Vec<SubRegion>,
    /// Sub-segments of each local edge, ordered from vertex `k+1` to vertex `k+2`.
    pub edge_segments: [Vec<EdgeSegment>; 3],
}

impl ElementDecomposition {
    pub fn is_interface(&self) -> bool {
        self.class == ElementClass::Interface
    }

    pub fn area(&self) -> f64 {
        signed_area(self.vertices[0], self.vertices[1], self.vertices[2])
    }

    pub fn region(&self, side: Side) -> Option<&SubRegion> {
        self.regions.iter().find(|r| r.side == side)
    }

    pub fn area_minus(&self) -> f64 {
        self.region(Side::Minus).map_or(0.0, |r| r.area)
    }

    pub fn area_plus(&self) -> f64 {
        self.region(Side::Plus).map_or(0.0, |r| r.area)
    }

    /// Local indices of the edges whose interior the chord crosses.
    pub fn cut_edges(&self) -> Vec<usize> {
        self.chord
            .iter()
            .flatten()
            .filter_map(|c| match c.location {
                CutLocation::Edge(k) => Some(k),
                CutLocation::Vertex(_) => None,
            })
            .collect()
    }

    /// Index of the region containing `p`, deciding points on the chord by the
    /// first region that claims them.
    pub fn locate(&self, p: Point) -> usize {
        if self.regions.len() == 1 {
            return 0;
        }
        let [d, e] = self.chord.expect("interface element has a chord");
        let s = (e.point - d.point).cross(p - d.point);
        // Which side of the chord each region's polygon lies on.
        let minus_sign = region_orientation(&self.regions[0], d.point, e.point);
        if s == 0.0 || s.signum() == minus_sign {
            0
        } else {
            1
        }
    }
}

fn region_orientation(region: &SubRegion, d: Point, e: Point) -> f64 {
    let mut best = 0.0f64;
    for &q in &region.polygon {
        let s = (e - d).cross(q - d);
        if s.abs() > best.abs() {
            best = s;
        }
    }
    best.signum()
}

/// Crossing parameter `t` of the interface along `p0 → p1`.
///
/// The search always runs from the lexicographically smaller endpoint so that
/// both elements sharing an edge see bitwise-identical crossings.
pub fn crossing_param(p0: Point, p1: Point, iface: &LevelSetInterface) -> Result<Option<f64>> {
    Ok(crossing(p0, p1, iface)?.map(|(t, _)| t))
}

/// Parameter along `p0 → p1` and the crossing point, computed from the
/// lexicographically smaller endpoint so both orientations agree bitwise.
fn crossing(p0: Point, p1: Point, iface: &LevelSetInterface) -> Result<Option<(f64, Point)>> {
    let swap = (p1.x, p1.y) < (p0.x, p0.y);
    let (a, b) = if swap { (p1, p0) } else { (p0, p1) };
    let fa = iface.phi(a);
    let fb = iface.phi(b);

    let mut changes = 0;
    let mut prev = fa;
    for i in 1..=EDGE_SAMPLES + 1 {
        let f = if i == EDGE_SAMPLES + 1 {
            fb
        } else {
            iface.phi(a.lerp(b, i as f64 / (EDGE_SAMPLES + 1) as f64))
        };
        if f != 0.0 {
            if prev != 0.0 && prev * f < 0.0 {
                changes += 1;
            }
            prev = f;
        }
    }
    let same_sign = fa * fb > 0.0;
    if changes > 1 && !(same_sign && iface.multi_crossing == MultiCrossing::VertexSigns) {
        return Err(Error::MeshTooCoarse(format!(
            "interface crosses edge ({}, {})–({}, {}) {changes} times",
            p0.x, p0.y, p1.x, p1.y
        )));
    }

    let t = if fa == 0.0 {
        0.0
    } else if fb == 0.0 {
        1.0
    } else if same_sign {
        return Ok(None);
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut mid = 0.5;
        for _ in 0..BISECTION_STEPS {
            mid = 0.5 * (lo + hi);
            let fm = iface.phi(a.lerp(b, mid));
            if fm == 0.0 {
                break;
            }
            if (fm < 0.0) == (fa < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if mid < SNAP_TOL {
            0.0
        } else if mid > 1.0 - SNAP_TOL {
            1.0
        } else {
            mid
        }
    };
    let point = match t {
        0.0 => a,
        1.0 => b,
        t => a.lerp(b, t),
    };
    Ok(Some((if swap { 1.0 - t } else { t }, point)))
}

/// Point where the interface crosses the segment `p0 → p1`, if it does.
pub fn edge_intersection(p0: Point, p1: Point, iface: &LevelSetInterface) -> Result<Option<Point>> {
    Ok(crossing(p0, p1, iface)?.map(|(_, p)| p))
}

fn check_triangle(tri: &[Point; 3]) -> Result<f64> {
    let area = signed_area(tri[0], tri[1], tri[2]);
    let scale = diameter(tri);
    if !(area > 1e-14 * scale * scale) {
        return Err(Error::InvalidMesh(format!(
            "degenerate or inverted triangle ({}, {}), ({}, {}), ({}, {})",
            tri[0].x, tri[0].y, tri[1].x, tri[1].y, tri[2].x, tri[2].y
        )));
    }
    Ok(area)
}

pub fn classify_element(tri: &[Point; 3], iface: &LevelSetInterface) -> Result<ElementClass> {
    Ok(decompose(tri, iface)?.class)
}

#[derive(Clone, Copy, Debug)]
enum Node {
    Vertex(usize),
    Cut(usize, Point),
}

fn uncut(tri: &[Point; 3], area: f64, side: Side) -> ElementDecomposition {
    let edge_segments = [0, 1, 2].map(|k| {
        vec![EdgeSegment {
            start: tri[(k + 1) % 3],
            end: tri[(k + 2) % 3],
            region: 0,
        }]
    });
    ElementDecomposition {
        vertices: *tri,
        class: ElementClass::NonInterface(side),
        chord: None,
        regions: vec![SubRegion {
            side,
            polygon: tri.to_vec(),
            triangles: vec![*tri],
            area,
        }],
        edge_segments,
    }
}

fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>()
}

fn triangulate_convex(poly: &[Point]) -> Vec<[Point; 3]> {
    match poly.len() {
        3 => vec![[poly[0], poly[1], poly[2]]],
        4 => {
            if poly[0].dist(poly[2]) <= poly[1].dist(poly[3]) {
                vec![[poly[0], poly[1], poly[2]], [poly[0], poly[2], poly[3]]]
            } else {
                vec![[poly[1], poly[2], poly[3]], [poly[1], poly[3], poly[0]]]
            }
        }
        n => unreachable!("cut polygon with {n} corners"),
    }
}

/// Split a triangle along the chord of the interface.
pub fn decompose(tri: &[Point; 3], iface: &LevelSetInterface) -> Result<ElementDecomposition> {
    let area = check_triangle(tri)?;
    let phis = tri.map(|p| iface.phi(p));

    // Crossings per local edge, parameterized from vertex k+1 to vertex k+2.
    let mut crossings = [None; 3];
    for (k, c) in crossings.iter_mut().enumerate() {
        *c = crossing(tri[(k + 1) % 3], tri[(k + 2) % 3], iface)?;
    }

    let has_minus = phis.iter().any(|&f| f < 0.0);
    let has_plus = phis.iter().any(|&f| f > 0.0);
    if !(has_minus && has_plus) {
        let side = if has_minus { Side::Minus } else { Side::Plus };
        return Ok(uncut(tri, area, side));
    }

    // Boundary cycle v0 → v1 → v2, with crossings inserted on the way. The
    // segment v_i → v_{i+1} is local edge (i + 2) % 3.
    let mut cycle = Vec::with_capacity(6);
    let mut cut_vertices = [false; 3];
    for i in 0..3 {
        cycle.push(Node::Vertex(i));
        let k = (i + 2) % 3;
        // Edge k runs v_{k+1} → v_{k+2} = v_{i} → v_{i+1}.
        if let Some((t, p)) = crossings[k] {
            if t == 0.0 {
                cut_vertices[(k + 1) % 3] = true;
            } else if t == 1.0 {
                cut_vertices[(k + 2) % 3] = true;
            } else {
                cycle.push(Node::Cut(k, p));
            }
        }
    }
    let cut_positions: Vec<usize> = cycle
        .iter()
        .enumerate()
        .filter(|(_, n)| match n {
            Node::Vertex(i) => cut_vertices[*i],
            Node::Cut(..) => true,
        })
        .map(|(pos, _)| pos)
        .collect();

    let dominant = |nodes: &[Node]| -> Option<Side> {
        nodes
            .iter()
            .filter_map(|n| match n {
                Node::Vertex(i) if !cut_vertices[*i] => Some(phis[*i]),
                _ => None,
            })
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .map(Side::of)
    };

    match cut_positions.len() {
        0 | 1 => {
            // The interface only touches the element.
            let side = dominant(&cycle).unwrap_or(Side::Plus);
            return Ok(uncut(tri, area, side));
        }
        2 => {}
        n => {
            return Err(Error::MeshTooCoarse(format!(
                "interface meets element boundary at {n} points"
            )))
        }
    }

    let (pd, pe) = (cut_positions[0], cut_positions[1]);
    let chain_a: Vec<Node> = cycle[pd..=pe].to_vec();
    let chain_b: Vec<Node> = cycle[pe..]
        .iter()
        .chain(cycle[..=pd].iter())
        .copied()
        .collect();

    let (side_a, side_b) = match (dominant(&chain_a), dominant(&chain_b)) {
        (Some(a), Some(b)) => (a, b),
        // Chord along an edge: the element lies on one side.
        (Some(a), None) | (None, Some(a)) => return Ok(uncut(tri, area, a)),
        (None, None) => return Ok(uncut(tri, area, Side::Plus)),
    };
    if side_a == side_b {
        return Ok(uncut(tri, area, side_a));
    }

    let node_point = |n: &Node| match *n {
        Node::Vertex(i) => tri[i],
        Node::Cut(_, p) => p,
    };
    let poly_a: Vec<Point> = chain_a.iter().map(node_point).collect();
    let poly_b: Vec<Point> = chain_b.iter().map(node_point).collect();
    let area_a = polygon_area(&poly_a);
    let area_b = area - area_a;
    if area_a.min(area_b) < SLIVER_TOL * area {
        let side = if area_a >= area_b { side_a } else { side_b };
        return Ok(uncut(tri, area, side));
    }

    let to_cut = |n: &Node| CutPoint {
        point: node_point(n),
        location: match *n {
            Node::Vertex(i) => CutLocation::Vertex(i),
            Node::Cut(k, _) => CutLocation::Edge(k),
        },
    };
    let chord = [to_cut(&cycle[pd]), to_cut(&cycle[pe])];

    // Region 0 is minus, region 1 is plus.
    let (minus_poly, minus_area, plus_poly, plus_area, a_index) = if side_a == Side::Minus {
        (poly_a, area_a, poly_b, area_b, 0)
    } else {
        (poly_b, area_b, poly_a, area_a, 1)
    };
    let regions = vec![
        SubRegion {
            side: Side::Minus,
            triangles: triangulate_convex(&minus_poly),
            polygon: minus_poly,
            area: minus_area,
        },
        SubRegion {
            side: Side::Plus,
            triangles: triangulate_convex(&plus_poly),
            polygon: plus_poly,
            area: plus_area,
        },
    ];

    // Boundary segments of the cycle: those between positions pd..pe belong
    // to chain a, the rest to chain b.
    let mut edge_segments: [Vec<EdgeSegment>; 3] = Default::default();
    let len = cycle.len();
    for pos in 0..len {
        let from = cycle[pos];
        let to = cycle[(pos + 1) % len];
        let in_a = pos >= pd && pos < pe;
        let region = if in_a { a_index } else { 1 - a_index };
        let edge = match (from, to) {
            (Node::Vertex(i), _) => (i + 2) % 3,
            (Node::Cut(k, _), _) => k,
        };
        edge_segments[edge].push(EdgeSegment {
            start: node_point(&from),
            end: node_point(&to),
            region,
        });
    }

    Ok(ElementDecomposition {
        vertices: *tri,
        class: ElementClass::Interface,
        chord: Some(chord),
        regions,
        edge_segments,
    })
}
