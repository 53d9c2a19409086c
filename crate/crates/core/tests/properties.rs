use ifem::assembly::{local_mass, local_stiffness};
use ifem::basis::local_basis;
use ifem::geometry::{
    crossing_param, decompose, edge_intersection, signed_area, InterfaceShape, LevelSetInterface, Point, Side,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pt() -> impl Strategy<Value = Point> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y)| Point::new(x, y))
}

fn triangle() -> impl Strategy<Value = [Point; 3]> {
    (pt(), pt(), pt())
        .prop_filter("well shaped", |(a, b, c)| {
            let area = signed_area(*a, *b, *c).abs();
            let d = a.dist(*b).max(b.dist(*c)).max(c.dist(*a));
            area > 0.05 * d * d
        })
        .prop_map(|(a, b, c)| if signed_area(a, b, c) > 0.0 { [a, b, c] } else { [a, c, b] })
}

fn line() -> impl Strategy<Value = (Point, f64)> {
    (0.0..std::f64::consts::TAU, -0.3..0.3f64).prop_map(|(t, o)| (Point::new(t.cos(), t.sin()), o))
}

fn betas() -> impl Strategy<Value = (f64, f64)> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| (10f64.powf(a), 10f64.powf(b)))
}

/// Part of `poly` with `n·x < c` (or `>` when `keep_plus`).
fn clip(poly: &[Point], n: Point, c: f64, keep_plus: bool) -> Vec<Point> {
    let s = |p: Point| if keep_plus { p.dot(n) - c } else { c - p.dot(n) };
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sa, sb) = (s(a), s(b));
        if sa >= 0.0 {
            out.push(a);
        }
        if (sa > 0.0 && sb < 0.0) || (sa < 0.0 && sb > 0.0) {
            out.push(a.lerp(b, sa / (sa - sb)));
        }
    }
    out
}

fn fan(poly: &[Point]) -> Vec<[Point; 3]> {
    (1..poly.len().saturating_sub(1)).map(|i| [poly[0], poly[i], poly[i + 1]]).collect()
}

fn polygon_area(poly: &[Point]) -> f64 {
    fan(poly).iter().map(|t| signed_area(t[0], t[1], t[2])).sum()
}

// Edge-midpoint rule, exact for quadratics.
fn integrate_quadratic(tris: &[[Point; 3]], f: impl Fn(Point) -> f64) -> f64 {
    tris.iter()
        .map(|t| {
            let area = signed_area(t[0], t[1], t[2]);
            let m = [t[0].lerp(t[1], 0.5), t[1].lerp(t[2], 0.5), t[2].lerp(t[0], 0.5)];
            area * m.iter().map(|&p| f(p)).sum::<f64>() / 3.0
        })
        .sum()
}

fn affine(n: Point, c: f64, b: (f64, f64)) -> LevelSetInterface {
    LevelSetInterface::new(InterfaceShape::Affine { normal: n, offset: c }, b.0, b.1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn region_areas_match_half_plane_clipping(tri in triangle(), (n, c) in line()) {
        let iface = affine(n, c, (1.0, 1.0));
        let d = decompose(&tri, &iface).unwrap();
        let scale = d.area();
        let minus = polygon_area(&clip(&tri, n, c, false));
        let plus = polygon_area(&clip(&tri, n, c, true));
        prop_assert!((d.area_minus() - minus).abs() <= 1e-9 * scale);
        prop_assert!((d.area_plus() - plus).abs() <= 1e-9 * scale);
        prop_assert!((d.area_minus() + d.area_plus() - scale).abs() <= 1e-12 * scale);
    }

    #[test]
    fn local_matrices_match_independent_quadrature(tri in triangle(), (n, c) in line(), b in betas()) {
        let iface = affine(n, c, b);
        let d = decompose(&tri, &iface).unwrap();
        let basis = local_basis(&d, &iface).unwrap();
        let k = local_stiffness(&basis);
        let m = local_mass(&basis);
        let mut pieces = Vec::new();
        for side in [Side::Minus, Side::Plus] {
            let poly = clip(&tri, n, c, side == Side::Plus);
            if let Some(r) = basis.decomposition.regions.iter().position(|r| r.side == side) {
                pieces.push((r, fan(&poly)));
            }
        }
        let kscale = k.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let mscale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..3 {
            for j in 0..3 {
                let mut ke = 0.0;
                let mut me = 0.0;
                for (r, tris) in &pieces {
                    let f = &basis.functions[*r];
                    let area: f64 = tris.iter().map(|t| signed_area(t[0], t[1], t[2])).sum();
                    ke += basis.betas[*r] * area * f[i].grad.dot(f[j].grad);
                    me += integrate_quadratic(tris, |p| f[i].eval(p) * f[j].eval(p));
                }
                prop_assert!((k[i][j] - ke).abs() <= 1e-9 * kscale, "K[{i}][{j}] {} vs {ke}", k[i][j]);
                prop_assert!((m[i][j] - me).abs() <= 1e-9 * mscale, "M[{i}][{j}] {} vs {me}", m[i][j]);
                prop_assert_eq!(k[i][j], k[j][i]);
            }
        }
    }

    #[test]
    fn cut_basis_satisfies_defining_properties(tri in triangle(), (n, c) in line(), b in betas()) {
        let iface = affine(n, c, b);
        let d = decompose(&tri, &iface).unwrap();
        let basis = local_basis(&d, &iface).unwrap();
        prop_assert!(basis.residuals().max() <= 1e-10, "{:?}", basis.residuals());
    }

    #[test]
    fn crossing_is_orientation_independent(a in pt(), b in pt(), r in 0.2..0.9f64) {
        prop_assume!(a.dist(b) > 1e-3);
        let iface = LevelSetInterface::circle(Point::new(0.0, 0.0), r, 1.0, 1.0).unwrap();
        let forward = crossing_param(a, b, &iface);
        let backward = crossing_param(b, a, &iface);
        match (forward, backward) {
            (Ok(Some(t)), Ok(Some(s))) => {
                prop_assert!((t - (1.0 - s)).abs() <= 1e-15);
                let p = edge_intersection(a, b, &iface).unwrap().unwrap();
                prop_assert_eq!(Some(p), edge_intersection(b, a, &iface).unwrap());
                prop_assert!((p.norm() - r).abs() <= 1e-12);
                prop_assert!((a.norm() - r) * (b.norm() - r) <= 0.0);
            }
            (Ok(None), Ok(None)) => prop_assert!((a.norm() - r) * (b.norm() - r) > 0.0),
            (Err(_), Err(_)) => {}
            (f, b) => prop_assert!(false, "inconsistent: {f:?} vs {b:?}"),
        }
    }
}

#[test]
fn chord_region_area_agrees_with_monte_carlo() {
    let iface = LevelSetInterface::circle(Point::new(0.1, -0.05), 0.4, 1.0, 10.0).unwrap();
    // Only the first vertex lies inside the circle.
    let tri = [Point::new(0.2, -0.1), Point::new(0.7, 0.0), Point::new(0.3, 0.5)];
    let d = decompose(&tri, &iface).unwrap();
    assert!(d.is_interface());
    let [a, b, c] = tri;
    let [p, q] = d.chord.unwrap().map(|cp| cp.point);
    let side = |x: Point| (q - p).cross(x - p).signum();
    let minus = side(a);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples = 400_000;
    let mut hits = 0usize;
    for _ in 0..samples {
        let (mut u, mut v) = (rng.random::<f64>(), rng.random::<f64>());
        if u + v > 1.0 {
            (u, v) = (1.0 - u, 1.0 - v);
        }
        if side(a + (b - a) * u + (c - a) * v) == minus {
            hits += 1;
        }
    }
    let estimate = d.area() * hits as f64 / samples as f64;
    let sigma = d.area() * (0.25 / samples as f64).sqrt();
    assert!((estimate - d.area_minus()).abs() < 5.0 * sigma, "{estimate} vs {}", d.area_minus());
}
