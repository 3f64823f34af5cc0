use conewave::geometry::{direction, Point, Tube};
use conewave::norms::for_each_in_disc;
use conewave::wavefield::*;
use proptest::prelude::*;
use rustfft::num_complex::Complex64;

const L: f64 = 64.0;

fn lattice(k: u32) -> FrequencyLattice {
    FrequencyLattice::for_band(k, L, 256).unwrap()
}

fn l2x(w: &SpectralWave, t: f64) -> f64 {
    let h = w.lattice().spacing();
    (w.evaluate(t).iter().map(|z| z.norm_sqr()).sum::<f64>() * h * h).sqrt()
}

fn disc_mass(w: &SpectralWave, t: f64, c: [f64; 2], r: f64) -> f64 {
    let g = w.lattice().grid();
    let v = w.evaluate(t);
    let mut s = 0.0;
    for_each_in_disc(g, c, r, |i| s += v[i].norm_sqr());
    s * g.spacing() * g.spacing()
}

/// Distance from `z` to the sector-annulus boundary by dense sampling of the boundary.
fn sampled_boundary_distance(z: [f64; 2]) -> f64 {
    let a = SECTOR_HALF_ANGLE;
    let mut best = f64::INFINITY;
    let n = 20_000;
    for i in 0..=n {
        let s = i as f64 / n as f64;
        let th = -a + 2.0 * a * s;
        for r in [1.0, 2.0] {
            let p = [r * th.cos(), r * th.sin()];
            best = best.min((p[0] - z[0]).hypot(p[1] - z[1]));
        }
        let r = 1.0 + s;
        for th in [-a, a] {
            let p = [r * th.cos(), r * th.sin()];
            best = best.min((p[0] - z[0]).hypot(p[1] - z[1]));
        }
    }
    best
}

fn single_mode(lat: &FrequencyLattice, modes: &[[i64; 2]]) -> SpectralWave {
    let mut plus = vec![Complex64::default(); lat.len()];
    for m in modes {
        plus[lat.index_of_mode(*m).unwrap()] = Complex64::new(L, 0.0);
    }
    let minus = vec![Complex64::default(); lat.len()];
    SpectralWave::from_coefficients(lat.clone(), Color::Red, 0, plus, minus).unwrap()
}

#[test]
fn zero_wave_has_no_mass() {
    assert_eq!(SpectralWave::zero(lattice(0), Color::Red, 0).mass(), 0.0);
}

#[test]
fn unit_coefficient_has_unit_mass() {
    let w = single_mode(&lattice(0), &[[96, 0]]);
    assert!((w.mass() - 1.0).abs() < 1e-14);
}

#[test]
fn normalized_random_wave_has_unit_mass() {
    let lat = lattice(1);
    let mut w = random_colored_wave(&lat, Color::Red, 1, DEFAULT_MARGIN, 5).unwrap();
    w.scale(3.7);
    w.normalize_mass(1.0).unwrap();
    let h = lat.frequency_step();
    let direct: f64 = w.plus().iter().map(|c| c.norm_sqr()).sum::<f64>() * h * h;
    assert!((direct - 1.0).abs() < 1e-12);
}

#[test]
fn margin_matches_sampled_boundary() {
    let lat = lattice(0);
    let w = single_mode(&lat, &[[96, 0]]);
    let m = w.margin().unwrap();
    assert!((m - 0.5).abs() < 1e-12);
    assert!((m - sampled_boundary_distance([1.5, 0.0])).abs() < 1e-6);

    let two = single_mode(&lat, &[[96, 0], [120, 0]]);
    let want = sampled_boundary_distance([1.875, 0.0]);
    assert!((two.margin().unwrap() - want).abs() < 1e-6);
    assert!((two.margin().unwrap() - 0.125).abs() < 1e-12);

    let edge = single_mode(&lat, &[[64, 0]]);
    assert_eq!(edge.margin().unwrap(), 0.0);
}

#[test]
fn plane_wave_has_constant_modulus() {
    let w = single_mode(&lattice(0), &[[96, 3]]);
    let v = w.evaluate(0.0);
    let want = 1.0 / L;
    assert!(v.iter().all(|z| (z.norm() - want).abs() < 1e-12));
}

#[test]
fn evaluator_matches_direct_evaluation() {
    let lat = lattice(0);
    let w = random_colored_wave(&lat, Color::Blue, 0, DEFAULT_MARGIN, 9).unwrap();
    let mut ev = Evaluator::new(&w, lat.grid()).unwrap();
    for t in [-3.0, 0.25, 0.25, 7.5] {
        let fast = ev.eval(t).to_vec();
        let slow = w.evaluate(t);
        let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "t = {t}: {err}");
        let g = lat.grid();
        for idx in [0, 777, g.len() - 1] {
            assert!((fast[idx] - w.evaluate_point(t, g.point(idx))).norm() < 1e-10);
        }
    }
}

#[test]
fn random_waves_are_deterministic() {
    let lat = lattice(2);
    let a = random_colored_wave(&lat, Color::Red, 2, DEFAULT_MARGIN, 17).unwrap();
    let b = random_colored_wave(&lat, Color::Red, 2, DEFAULT_MARGIN, 17).unwrap();
    assert_eq!(a.plus(), b.plus());
    assert!((a.mass() - 1.0).abs() < 1e-12);
    assert!(a.margin().unwrap() >= DEFAULT_MARGIN);
}

#[test]
fn random_waves_respect_color_and_band() {
    for k in 0..4 {
        let lat = lattice(k);
        for color in [Color::Red, Color::Blue] {
            let w = random_colored_wave(&lat, color, k, DEFAULT_MARGIN, 3).unwrap();
            let (live, dead) = match color {
                Color::Red => (w.plus(), w.minus()),
                _ => (w.minus(), w.plus()),
            };
            assert!(dead.iter().all(|c| *c == Complex64::default()));
            let s = 2f64.powi(-(k as i32));
            for (i, c) in live.iter().enumerate() {
                if c.norm() > 0.0 {
                    let xi = lat.frequency(i);
                    assert!(in_sector_annulus([xi[0] * s, xi[1] * s]));
                }
            }
        }
    }
}

#[test]
fn infeasible_margin_is_rejected() {
    assert!(random_colored_wave(&lattice(0), Color::Red, 0, 0.6, 1).is_err());
    assert!(make_red_cube_bump(&lattice(0), Point::new(0.0, [0.0, 0.0]), 0.6).is_err());
}

#[test]
fn cube_bump_is_large_on_its_cube() {
    let c = [32.0, 32.0];
    let w = make_red_cube_bump(&lattice(0), Point::new(0.0, c), DEFAULT_MARGIN).unwrap();
    assert!((w.mass() - 1.0).abs() < 1e-12);
    assert!(w.margin().unwrap() >= DEFAULT_MARGIN);
    let n = 6;
    let mut low = f64::INFINITY;
    for a in 0..=n {
        for b in 0..=n {
            for d in 0..=n {
                let u = |i: i32| i as f64 / n as f64 - 0.5;
                let z = w.evaluate_point(u(a), [c[0] + u(b), c[1] + u(d)]);
                low = low.min(z.norm());
            }
        }
    }
    assert!(low >= KAPPA_0, "min |phi| on the cube {low}");
}

#[test]
fn tube_wave_concentrates_on_its_axis() {
    let x0 = [30.0, 33.0];
    let om = direction(0.2);
    for k in [0, 3] {
        let w = make_blue_tube_wave(&lattice(k), 1.0, x0, om, k).unwrap();
        assert!((w.mass() - 1.0).abs() < 1e-12);
        let h = 2f64.powi(k as i32);
        for dt in [0.0, h / 2.0, -h / 2.0] {
            let t = 1.0 + dt;
            let c = [x0[0] + om[0] * dt, x0[1] + om[1] * dt];
            let m = disc_mass(&w, t, c, 1.0);
            assert!(m >= KAPPA_1, "k = {k}, t = {t}: {m}");
            assert!(disc_mass(&w, t, c, LOCALIZATION_RADIUS) >= 0.5);
        }
    }
}

#[test]
fn one_cube_train_is_a_bump() {
    let lat = lattice(0);
    let tube = Tube::finite(0.0, [32.0, 32.0], [1.0, 0.0], 0);
    let cubes = tube.axis_cubes().unwrap();
    let mut c = vec![0.0; cubes.len()];
    c[cubes.len() / 2] = 1.0;
    let train = make_red_cube_train(&lat, &tube, &c, 4).unwrap();
    let bump = make_red_cube_bump(&lat, cubes[cubes.len() / 2].center, DEFAULT_MARGIN).unwrap();
    let err = train
        .plus()
        .iter()
        .zip(bump.plus())
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-9);
}

#[test]
fn cube_train_masses_are_stable_across_seeds() {
    let lat = lattice(0);
    let tube = Tube::finite(0.0, [32.0, 32.0], direction(0.2094), 3);
    let n = tube.axis_cubes().unwrap().len();
    let c = vec![1.0 / (n as f64).sqrt(); n];
    let masses: Vec<f64> = (0..6)
        .map(|s| make_red_cube_train(&lat, &tube, &c, s).unwrap().mass())
        .collect();
    for m in &masses {
        assert!((0.5..=2.0).contains(m));
    }
    let lo = masses.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = masses.iter().cloned().fold(0.0, f64::max);
    assert!(hi <= 1.1 * lo, "{masses:?}");
}

#[test]
fn random_red_waves_obey_a_common_sup_bound() {
    let lat = lattice(0);
    for seed in 0..100 {
        let w = random_colored_wave(&lat, Color::Red, 0, DEFAULT_MARGIN, seed).unwrap();
        let sup = w.evaluate(0.0).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(sup <= BERNSTEIN_CEILING, "seed {seed}: {sup}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_sided_waves_conserve_l2(seed in 0u64..1000, k in 0u32..2, blue in any::<bool>(), t1 in -16.0f64..16.0, t2 in -16.0f64..16.0) {
        let color = if blue { Color::Blue } else { Color::Red };
        let w = random_colored_wave(&lattice(k), color, k, DEFAULT_MARGIN, seed).unwrap();
        let (a, b) = (l2x(&w, t1), l2x(&w, t2));
        prop_assert!((a - b).abs() <= 1e-9 * w.mass().sqrt());
        prop_assert!((a * a - w.mass()).abs() <= 1e-9);
    }

    #[test]
    fn two_sided_waves_stay_below_mass(seed in 0u64..1000, t in -16.0f64..16.0) {
        let lat = lattice(0);
        let r = random_colored_wave(&lat, Color::Red, 0, DEFAULT_MARGIN, seed).unwrap();
        let b = random_colored_wave(&lat, Color::Blue, 0, DEFAULT_MARGIN, seed + 1).unwrap();
        let both = SpectralWave::from_coefficients(lat.clone(), Color::None, 0, r.plus().to_vec(), b.minus().to_vec()).unwrap();
        // |a + b|^2 <= 2 (|a|^2 + |b|^2) per mode; red and blue modes at the same xi interfere.
        prop_assert!(l2x(&both, t) <= (1.0 + 1e-9) * (2.0 * both.mass()).sqrt());
    }

    #[test]
    fn scaling_is_quadratic_in_mass(seed in 0u64..1000, s in 0.1f64..10.0) {
        let mut w = random_colored_wave(&lattice(0), Color::Red, 0, DEFAULT_MARGIN, seed).unwrap();
        let m = w.mass();
        w.scale(s);
        prop_assert!((w.mass() - s * s * m).abs() <= 1e-12 * s * s);
    }
}
