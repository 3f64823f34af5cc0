use conewave::blue_exceptional::*;
use conewave::geometry::{direction, Point, Torus};
use conewave::norms::QuadratureScheme;
use conewave::wavefield::*;
use rustfft::num_complex::Complex64;

const L: f64 = 64.0;
const TORUS: Torus = Torus { side: L };

fn scheme() -> QuadratureScheme {
    QuadratureScheme::new(0.25, 16.0).unwrap()
}

fn lattice(k: u32) -> FrequencyLattice {
    FrequencyLattice::for_band(k, L, 256).unwrap()
}

fn single_mode_blue(k: u32, mode: [i64; 2]) -> SpectralWave {
    let lat = lattice(k);
    let mut c = vec![Complex64::default(); lat.len()];
    c[lat.index_of_mode(mode).unwrap()] = Complex64::new(L, 0.0);
    SpectralWave::from_coefficients(lat.clone(), Color::Blue, k, vec![Complex64::default(); lat.len()], c).unwrap()
}

#[test]
fn zero_wave_has_nothing_exceptional() {
    let z = SpectralWave::zero(lattice(1), Color::Blue, 1);
    assert!(find_bad_cubes(&z, 0.1, &scheme()).unwrap().is_empty());
    let ex = exceptional_tubes_for_blue(&z, 0.1, 16.0, &ExceptionalOptions::default()).unwrap();
    assert!(ex.tubes.is_empty());
}

#[test]
fn red_waves_are_rejected() {
    let r = random_colored_wave(&lattice(0), Color::Red, 0, DEFAULT_MARGIN, 1).unwrap();
    assert!(find_bad_cubes(&r, 0.1, &scheme()).is_err());
    assert!(sector_pieces(&r).is_err());
}

#[test]
fn tube_wave_axis_cubes_are_bad() {
    let (t0, x0, om) = (0.5, [20.5, 30.5], direction(0.15));
    for k in [0, 2] {
        let psi = make_blue_tube_wave(&lattice(k), t0, x0, om, k).unwrap();
        let norms = CubeNorms::compute(&psi, &scheme()).unwrap();
        let bad = norms.bad(0.1);
        let h = (k as f64).exp2();
        let mut j = -h;
        while j <= h {
            let t = t0 + j;
            let p = Point::new(t, [x0[0] + om[0] * j, x0[1] + om[1] * j]);
            assert!(bad.iter().any(|q| q.contains(TORUS, p)), "k = {k}, t = {t}");
            j += 1.0;
        }
    }
}

#[test]
fn cube_norms_never_exceed_the_mass() {
    let psi = make_blue_tube_wave(&lattice(1), 0.0, [32.0, 32.0], direction(0.0), 1).unwrap();
    let norms = CubeNorms::compute(&psi, &scheme()).unwrap();
    let sup = norms.values.iter().cloned().fold(0.0, f64::max);
    assert!(sup <= psi.mass());
    assert!(norms.bad(1.0).is_empty());
    let total: f64 = norms.values.iter().sum();
    assert!((total - 32.0 * psi.mass()).abs() < 1e-9 * total);
}

#[test]
fn single_cell_wave_has_one_direction() {
    let psi = single_mode_blue(1, [192, 0]);
    let pieces = sector_pieces(&psi).unwrap();
    assert_eq!(pieces.len(), 1);
    let fam = sector_weights(&psi, 0.0).unwrap();
    assert!((fam.total_weight() - 1.0).abs() < 1e-6);
    let w0 = fam.tubes()[0].omega;
    assert!(fam.tubes().iter().all(|t| t.omega == w0));
}

#[test]
fn pieces_carry_the_mass() {
    for seed in 0..3 {
        let psi = random_blue_packets(&lattice(2), 2, 3, seed).unwrap();
        let pieces = sector_pieces(&psi).unwrap();
        let total: f64 = pieces.iter().map(|p| p.wave.mass()).sum();
        assert!(total <= 1.5 * psi.mass());
        assert!((total - psi.mass()).abs() < 1e-9);
    }
}

#[test]
fn distant_pieces_are_orthogonal_under_a_smooth_window() {
    let psi = random_colored_wave(&lattice(1), Color::Blue, 1, DEFAULT_MARGIN, 4).unwrap();
    let pieces = sector_pieces(&psi).unwrap();
    let x0 = [17.0, 40.0];
    let eta = |x: [f64; 2]| {
        let a = (std::f64::consts::PI * (x[0] - x0[0]) / L).cos();
        let b = (std::f64::consts::PI * (x[1] - x0[1]) / L).cos();
        (a * b).powi(2)
    };
    let mut checked = 0;
    for (i, a) in pieces.iter().enumerate() {
        for b in &pieces[i + 1..] {
            let sep = (a.cell[0] - b.cell[0]).abs().max((a.cell[1] - b.cell[1]).abs());
            if sep != 3 {
                continue;
            }
            let g = a.wave.lattice().grid();
            assert_eq!(g, b.wave.lattice().grid());
            let (fa, fb) = (a.wave.evaluate(0.0), b.wave.evaluate(0.0));
            let h2 = g.spacing() * g.spacing();
            let ip: Complex64 = (0..g.len())
                .map(|i| fa[i] * fb[i].conj() * eta(g.point(i)).powi(2) * h2)
                .sum();
            assert!(ip.norm() <= 1e-8, "{:?} {:?}: {}", a.cell, b.cell, ip.norm());
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn tube_wave_weight_sits_near_the_axis() {
    let (x0, om) = ([25.0, 35.0], direction(-0.2));
    for k in [1, 3] {
        let psi = make_blue_tube_wave(&lattice(k), 0.0, x0, om, k).unwrap();
        let fam = sector_weights(&psi, 0.0).unwrap();
        let near: f64 = fam
            .tubes()
            .iter()
            .zip(fam.weights())
            .filter(|(t, _)| TORUS.dist(t.x0, x0) <= 4.0)
            .map(|(_, w)| w)
            .sum();
        assert!(near >= 0.8 * fam.total_weight(), "k = {k}: {near}");
        assert!(fam.weights().iter().all(|w| *w >= 0.0));
    }
}

#[test]
fn tube_wave_gets_an_aligned_exceptional_tube() {
    let (t0, x0, om) = (0.0, [30.0, 30.0], direction(0.25));
    let psi = make_blue_tube_wave(&lattice(2), t0, x0, om, 2).unwrap();
    let ex = exceptional_tubes_for_blue(&psi, 0.2, 16.0, &ExceptionalOptions::default()).unwrap();
    assert!(ex
        .tubes
        .iter()
        .any(|t| angle_between(t.omega, om) <= 0.2 && t.cross_distance(TORUS, Point::new(t0, x0)) <= 4.0));
}

#[test]
fn bad_cubes_of_packet_waves_are_covered() {
    let s = scheme();
    for (k, seed) in [(0, 11), (1, 12), (2, 13)] {
        let psi = random_blue_packets(&lattice(k), k, 3, seed).unwrap();
        let norms = CubeNorms::compute(&psi, &s).unwrap();
        for delta in [0.2, 0.1] {
            let bad = norms.bad(delta);
            let ex = exceptional_tubes_for_blue(&psi, delta, 16.0, &ExceptionalOptions::default()).unwrap();
            let missed = uncovered_cubes(TORUS, &bad, &ex.tubes, TOUCH_DILATION).unwrap();
            assert!(missed.is_empty(), "k = {k}, delta = {delta}: {} missed", missed.len());
            assert!(ex.tubes.len() as f64 <= exceptional_budget(delta));
            assert_eq!(ex.slabs.len(), slabs(k, 16.0).len());
        }
    }
}

#[test]
fn partition_of_unity_squares_sum_to_one() {
    for i in 0..=100 {
        let s = i as f64 / 100.0;
        let sum = cell_profile(s).powi(2) + cell_profile(s - 1.0).powi(2);
        assert!((sum - 1.0).abs() < 1e-12);
    }
    let xi = [2.3, -0.6];
    let mut total = 0.0;
    for a in -2..=5 {
        for b in -3..=3 {
            total += cell_weight(xi, [a, b]).powi(2);
        }
    }
    assert!((total - 1.0).abs() < 1e-12);
}
