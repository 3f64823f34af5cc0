use std::f64::consts::PI;

use conewave::geometry::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TORUS: Torus = Torus { side: 64.0 };

/// Membership written out from the tube definition.
fn in_tube(t0: f64, x0: [f64; 2], w: [f64; 2], half: Option<f64>, r: f64, p: Point) -> bool {
    if half.is_some_and(|h| (p.t - t0).abs() > h) {
        return false;
    }
    let wrap = |d: f64| d - 64.0 * (d / 64.0).round();
    let d0 = wrap(p.x[0] - x0[0] - w[0] * (p.t - t0));
    let d1 = wrap(p.x[1] - x0[1] - w[1] * (p.t - t0));
    d0.hypot(d1) <= r
}

fn random_point(rng: &mut ChaCha8Rng, c: Point, spread: f64) -> Point {
    Point::new(
        c.t + rng.random_range(-spread..spread),
        [
            c.x[0] + rng.random_range(-spread..spread),
            c.x[1] + rng.random_range(-spread..spread),
        ],
    )
}

#[test]
fn tube_membership_matches_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = direction(0.3);
    let tube = Tube::finite(1.0, [60.0, 2.0], w, 2);
    let centre = Point::new(1.0, [60.0, 2.0]);
    assert!(tube.contains(TORUS, centre));
    let mut inside = 0;
    for _ in 0..10_000 {
        let p = random_point(&mut rng, centre, 6.0);
        let want = in_tube(1.0, [60.0, 2.0], w, Some(4.0), 1.0, p);
        assert_eq!(tube.contains(TORUS, p), want, "{p:?}");
        inside += want as usize;
    }
    assert!(inside > 100);
}

#[test]
fn tube_ends_at_its_half_length() {
    let w = direction(-0.2);
    let tube = Tube::finite(0.0, [10.0, 10.0], w, 1);
    let s = 2.0 + 0.5;
    assert!(!tube.contains(TORUS, Point::new(s, [10.0 + w[0] * s, 10.0 + w[1] * s])));
    let s = 2.0;
    assert!(tube.contains(TORUS, Point::new(s, [10.0 + w[0] * s, 10.0 + w[1] * s])));
    let span = Tube::spanning([10.0, 10.0], w);
    let s = 15.0;
    assert!(span.contains(TORUS, Point::new(s, [10.0 + w[0] * s, 10.0 + w[1] * s])));
}

#[test]
fn dilation_by_one_is_identity() {
    let t = Tube::finite(0.0, [1.0, 2.0], direction(0.1), 3);
    assert_eq!(t.dilate(1.0).unwrap(), t);
    assert!(t.dilate(0.5).is_err());
}

#[test]
fn dilation_by_two_reaches_distance_one_and_a_half() {
    let t = Tube::finite(0.0, [10.0, 10.0], [1.0, 0.0], 0);
    let p = Point::new(0.0, [10.0, 11.5]);
    assert!(!t.contains(TORUS, p));
    assert!(t.dilate(2.0).unwrap().contains(TORUS, p));
}

#[test]
fn dilations_compose() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for t in [
        Tube::finite(0.5, [30.0, 31.0], direction(0.25), 1),
        Tube::spanning([30.0, 31.0], direction(-0.3)),
    ] {
        let a = t.dilate(2.0).unwrap().dilate(3.0).unwrap();
        let b = t.dilate(6.0).unwrap();
        let c = Point::new(0.5, [30.0, 31.0]);
        for _ in 0..10_000 {
            let p = random_point(&mut rng, c, 16.0);
            assert_eq!(a.contains(TORUS, p), b.contains(TORUS, p));
            if t.contains(TORUS, p) {
                assert!(b.contains(TORUS, p));
            }
        }
    }
}

#[test]
fn unit_cube_cover_is_small_and_complete() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in [0, 3] {
        let tube = Tube::finite(0.0, [20.0, 40.0], direction(0.35), k);
        let cubes = cover_tube_by_unit_cubes(&tube).unwrap();
        assert!(cubes.len() <= CUBE_COVER_CONSTANT * (1 << k));
        let fat = tube.dilate(3.0).unwrap();
        let h = tube.half_length().unwrap();
        let mut hits = 0;
        while hits < 10_000 {
            let t = rng.random_range(-h..=h);
            let a = rng.random_range(0.0..2.0 * PI);
            let r = rng.random_range(0.0f64..1.0).sqrt();
            let c = tube.axis(t);
            let p = Point::new(t, [c[0] + r * a.cos(), c[1] + r * a.sin()]);
            assert!(cubes.iter().any(|q| q.contains(TORUS, p)), "{p:?}");
            hits += 1;
        }
        for q in cubes.iter().step_by(7) {
            for _ in 0..20 {
                let p = random_point(&mut rng, q.center, 0.5);
                assert!(q.contains(TORUS, p));
                assert!(fat.contains(TORUS, p), "{p:?} not in the 3-dilate");
            }
        }
    }
}

#[test]
fn sphere_grid_counts() {
    assert_eq!(dyadic_sphere_grid(0).len(), 2);
    let g = dyadic_sphere_grid(3);
    assert_eq!(g.len(), 16);
    assert!(g.iter().all(|s| s.chart_length() == 1.0 / 8.0));
}

#[test]
fn sphere_grid_partitions_the_circle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for level in [0, 2, 5] {
        let g = dyadic_sphere_grid(level);
        for _ in 0..10_000 {
            let w = direction(rng.random_range(-PI..PI));
            let n = g.iter().filter(|s| s.contains(w)).count();
            assert_eq!(n, 1);
        }
    }
}

#[test]
fn sphere_chart_is_bilipschitz() {
    let (lo, hi) = SPHERE_CHART_BILIPSCHITZ;
    let level = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..2_000 {
        let a = rng.random_range(-PI / 2.0 + 1e-3..PI / 2.0 - 1e-3);
        let b = rng.random_range(-PI / 2.0 + 1e-3..PI / 2.0 - 1e-3);
        let (wa, wb) = (direction(a), direction(b));
        let n = (1u64 << level) as f64;
        let ua = SphereSquare::of(wa, level).index as f64 / n;
        let ub = SphereSquare::of(wb, level).index as f64 / n;
        let dw = (wa[0] - wb[0]).hypot(wa[1] - wb[1]);
        let du = (ua - ub).abs();
        let slack = 2.0 * hi / n;
        assert!(lo * du <= dw + slack && dw <= hi * du + slack);
    }
}

#[test]
fn shrink_scales_the_side() {
    let q = Cube::new(Point::new(0.3, [1.0, 2.0]), 1.0);
    let h = q.shrink(0.5).unwrap();
    assert_eq!(h.side, 0.5);
    assert_eq!(h.center, q.center);
    assert!((q.shrink(1e-12).unwrap().side - 1.0).abs() < 1e-11);
    assert!(q.shrink(0.0).is_err());
    assert!(q.shrink(1.0).is_err());
}

#[test]
fn separation_matches_formula() {
    let a = Tube::finite(0.0, [1.0, 1.0], direction(0.0), 2);
    let b = Tube::finite(0.0, [1.0, 1.4], direction(0.05), 2);
    let dw = (direction(0.0)[0] - direction(0.05)[0]).hypot(direction(0.0)[1] - direction(0.05)[1]);
    assert!((separation(TORUS, &a, &b, 2) - (0.4 + 4.0 * dw)).abs() < 1e-12);
    assert!(separated(TORUS, &a, &b, 2));
    assert!(!separated(TORUS, &a, &a, 2));
}

#[test]
fn tube_list_json_uses_the_documented_fields() {
    let t = Tube::finite(0.0, [1.0, 2.0], [1.0, 0.0], 3).dilate(2.0).unwrap();
    let v: serde_json::Value = serde_json::to_value([t, Tube::spanning([0.0, 0.0], [1.0, 0.0])]).unwrap();
    assert_eq!(v[0]["halflength"], "2^3");
    assert_eq!(v[0]["lambda"], 2.0);
    assert_eq!(v[1]["halflength"], "window");
    let back: Vec<Tube> = serde_json::from_value(v).unwrap();
    assert_eq!(back[0], t);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn membership_agrees_with_formula(
        t0 in -8.0f64..8.0, x in 0.0f64..64.0, y in 0.0f64..64.0, th in -0.4f64..0.4,
        k in 0u32..4, lam in 1.0f64..4.0, pt in -16.0f64..16.0, px in 0.0f64..64.0, py in 0.0f64..64.0,
    ) {
        let tube = Tube::finite(t0, [x, y], direction(th), k).dilate(lam).unwrap();
        let p = Point::new(pt, [px, py]);
        let want = in_tube(t0, [x, y], direction(th), Some(lam * (k as f64).exp2()), lam, p);
        prop_assert_eq!(tube.contains(TORUS, p), want);
    }

    #[test]
    fn region_inclusion_is_monotone(pt in -16.0f64..16.0, px in 0.0f64..64.0, py in 0.0f64..64.0, th in -0.4f64..0.4) {
        let tube = Tube::spanning([32.0, 32.0], direction(th));
        let big = Region::full(16.0);
        let small = Region::full(16.0).excluding(&[tube]);
        let cube = Region::full(16.0).excluding(&[tube]).within(Cube::new(Point::new(0.0, [30.0, 30.0]), 8.0));
        let p = Point::new(pt, [px, py]);
        prop_assert!(!cube.contains(TORUS, p) || small.contains(TORUS, p));
        prop_assert!(!small.contains(TORUS, p) || big.contains(TORUS, p));
    }

    #[test]
    fn child_squares_sit_inside_parents(th in -3.1f64..3.1, level in 0u32..10) {
        let s = SphereSquare::of(direction(th), level + 1);
        let p = s.parent().unwrap();
        prop_assert!(s.is_within(&p));
        prop_assert!(p.contains(direction(th)));
        prop_assert!(p.children().contains(&s));
    }
}
