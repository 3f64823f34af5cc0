use std::sync::OnceLock;

use conewave::blue_exceptional::{exceptional_tubes_for_blue, ExceptionalOptions};
use conewave::extraction::ExtractionOptions;
use conewave::geometry::{Point, Region, Torus, Tube};
use conewave::norms::{product_l2, QuadratureScheme};
use conewave::profile::*;
use conewave::wavefield::*;

const L: f64 = 64.0;
const DELTA: f64 = 0.2;

fn scheme() -> QuadratureScheme {
    QuadratureScheme::new(0.25, 16.0).unwrap()
}

struct Run {
    phi: SpectralWave,
    fam: UniversalFamily,
}

fn run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let (_, phi) = matched_train(2, L, 4).unwrap();
        let fam = universal_tube_family(&phi, DELTA, C_COMP, &ExtractionOptions::new(DELTA), &scheme()).unwrap();
        Run { phi, fam }
    })
}

#[test]
fn composed_delta_examples() {
    assert_eq!(composed_delta(0.2, 1.0), 0.2);
    assert!((composed_delta(0.2, 2.0) - 0.02).abs() < 1e-15);
    assert!((count_budget(4.0, 0.5) - 32.0).abs() < 1e-12);
}

#[test]
fn zero_wave_has_an_empty_family() {
    let lat = FrequencyLattice::for_band(0, L, 256).unwrap();
    let z = SpectralWave::zero(lat, Color::Red, 0);
    let fam = universal_tube_family(&z, DELTA, 1.0, &ExtractionOptions::new(DELTA), &scheme()).unwrap();
    assert!(fam.tubes.is_empty());
    assert!(universal_tube_family(&z, DELTA, 0.5, &ExtractionOptions::new(DELTA), &scheme()).is_err());
}

#[test]
fn family_is_the_dilated_extraction() {
    let r = run();
    assert_eq!(r.fam.delta_prime, composed_delta(DELTA, C_COMP));
    assert_eq!(r.fam.tubes, r.fam.extraction.tubes);
    assert!(!r.fam.tubes.is_empty());
    assert!(r.fam.tubes.len() as f64 <= count_budget(K_U, DELTA));
}

#[test]
fn specs_round_trip_and_build_deterministically() {
    let specs = vec![
        PsiSpec::Random { k: 1, seed: 3 },
        PsiSpec::Packets { k: 2, seed: 4, count: 3 },
        PsiSpec::Tube { k: 0, t0: 0.5, x0: [10.0, 20.0], theta: 0.1 },
    ];
    let json = serde_json::to_string(&specs).unwrap();
    let back: Vec<PsiSpec> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, specs);
    for s in &specs {
        let a = s.build(L, 256).unwrap();
        let b = s.build(L, 256).unwrap();
        assert_eq!(a.color(), Color::Blue);
        assert_eq!(a.k(), s.k());
        assert_eq!(a.plus(), b.plus());
        assert_eq!(a.minus(), b.minus());
    }
    let suite = random_suite(&[0, 2], 3, 10);
    assert_eq!(suite.len(), 6);
    assert_eq!(suite[4], PsiSpec::Random { k: 2, seed: 11 });
}

#[test]
fn covering_everything_leaves_nothing_outside() {
    let r = run();
    let all = Tube::spanning([32.0, 32.0], [1.0, 0.0]).dilate(100.0).unwrap();
    let suite = random_suite(&[0], 2, 1);
    let rep = verify_profile(&r.phi, &[all], DELTA, &suite, C_V, &scheme()).unwrap();
    for rec in &rep.records {
        assert_eq!(rec.outside, 0.0);
        assert!(rec.unrestricted > 0.0);
    }
    assert!(rep.passes);
}

#[test]
fn outside_ratio_matches_a_direct_norm() {
    let r = run();
    let s = scheme();
    let spec = PsiSpec::Random { k: 1, seed: 7 };
    let psi = spec.build(L, r.phi.lattice().points()).unwrap();
    let rep = verify_profile(&r.phi, &r.fam.tubes, DELTA, &[spec], C_V, &s).unwrap();
    let d = (r.phi.mass() * psi.mass()).sqrt();
    let out = product_l2(&r.phi, &psi, &Region::full(s.window).excluding(&r.fam.tubes), &s).unwrap() / d;
    let full = product_l2(&r.phi, &psi, &Region::full(s.window), &s).unwrap() / d;
    assert!((rep.records[0].outside - out).abs() <= 1e-12 * full);
    assert!((rep.records[0].unrestricted - full).abs() <= 1e-12 * full);
    assert!(out <= full + 1e-12);
}

#[test]
fn train_profile_holds_on_a_small_suite() {
    let r = run();
    let mut suite = random_suite(&[0, 1, 2], 2, 100);
    suite.push(PsiSpec::Packets { k: 1, seed: 5, count: 3 });
    let rep = verify_profile(&r.phi, &r.fam.tubes, DELTA, &suite, C_V, &scheme()).unwrap();
    assert!(rep.passes, "max outside {}", rep.max_outside());
}

#[test]
fn exceptional_tubes_only_shrink_the_outside() {
    let r = run();
    let s = scheme();
    for k in [1, 2] {
        let spec = PsiSpec::Packets { k, seed: 20 + k as u64, count: 3 };
        let psi = spec.build(L, 256).unwrap();
        let ex = exceptional_tubes_for_blue(&psi, DELTA, s.window, &ExceptionalOptions::default()).unwrap();
        let mut both = r.fam.tubes.clone();
        both.extend(ex.tubes.iter().cloned());
        let a = verify_profile(&r.phi, &r.fam.tubes, DELTA, std::slice::from_ref(&spec), C_V, &s).unwrap();
        let b = verify_profile(&r.phi, &both, DELTA, &[spec], C_V, &s).unwrap();
        assert!(b.records[0].outside <= a.records[0].outside + 1e-12);
    }
}

#[test]
fn tube_profile_matches_pointwise_maxima() {
    let r = run();
    let s = QuadratureScheme::new(0.25, 4.0).unwrap();
    let tube = r.fam.tubes[0];
    let g = tube_profile(&r.phi, &[tube, tube], &s);
    let grid = r.phi.lattice().grid();
    let torus = Torus::new(L);
    for (t, v) in s.times().iter().zip(&g) {
        let vals = r.phi.evaluate(*t);
        let best = (0..grid.len())
            .filter(|&i| tube.contains(torus, Point::new(*t, grid.point(i))))
            .map(|i| vals[i].norm_sqr())
            .fold(0.0, f64::max);
        assert!((v - 2.0 * best).abs() <= 1e-12 * (1.0 + best), "t = {t}");
    }
}

#[test]
fn fungibility_intervals_respect_the_budget() {
    let r = run();
    let s = scheme();
    let fung = fungibility_partition(&r.phi, &r.fam.tubes, DELTA, &s);
    let iv = &fung.intervals;
    assert_eq!(iv[0].0, -s.window);
    assert_eq!(iv.last().unwrap().1, s.window);
    for w in iv.windows(2) {
        assert_eq!(w[0].1, w[1].0);
    }
    let mut total = 0.0;
    for &(a, b) in iv {
        assert!(a < b);
        // Quadrature over the cells, clipped to [a, b].
        let mut part = 0.0;
        for (i, v) in fung.g.iter().enumerate() {
            let lo = -s.window + i as f64 * s.dt;
            let hi = lo + s.dt;
            if hi > a && lo < b {
                part += v * (hi.min(b) - lo.max(a));
            }
        }
        assert!(part <= DELTA * DELTA * (1.0 + 1e-9), "{part}");
        total += part;
    }
    assert!((total - fung.integral).abs() <= 1e-9 * fung.integral.max(1.0));
    assert!(iv.len() as f64 <= count_budget(K_I, DELTA));
    assert!(iv.len() as f64 >= (fung.integral / (DELTA * DELTA)).ceil());
}

#[test]
fn no_tubes_gives_one_interval() {
    let r = run();
    let fung = fungibility_partition(&r.phi, &[], DELTA, &scheme());
    assert_eq!(fung.intervals, vec![(-16.0, 16.0)]);
    assert_eq!(fung.integral, 0.0);
}

#[test]
fn whole_window_interval_matches_the_full_norm() {
    let r = run();
    let s = scheme();
    let spec = PsiSpec::Random { k: 0, seed: 2 };
    let psi = spec.build(L, 256).unwrap();
    let rep = verify_fungibility(&r.phi, &[(-16.0, 16.0), (-16.0, 0.0), (0.0, 16.0)], &[spec], DELTA, C_F, &s).unwrap();
    let full = product_l2(&r.phi, &psi, &Region::full(16.0), &s).unwrap() / (r.phi.mass() * psi.mass()).sqrt();
    assert!((rep.records[0].ratio - full).abs() <= 1e-12 * full);
    let (a, b) = (rep.records[1].ratio, rep.records[2].ratio);
    assert!((a * a + b * b - full * full).abs() <= 1e-10 * full * full);
    assert_eq!(rep.max_ratio, full);
}

#[test]
fn sharpness_k0_row() {
    let rows = sharpness_experiment(&[0], &[1], L, &scheme()).unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert!(row.rho >= RHO_MIN, "{}", row.rho);
    assert!(row.lp_scaled <= LP_CEILING);
    assert_eq!(row.lp, row.lp_scaled);
}
