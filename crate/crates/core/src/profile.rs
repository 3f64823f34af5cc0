//! End-to-end harness: the universal tube family of a red wave, its check against
//! suites of blue waves, the fungibility split of the time axis, and the
//! sharpness experiment.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{extract_profile, Extraction, ExtractionOptions};
use crate::geometry::{direction, Region, Tube};
use crate::norms::{lp_product, product_l2_many, product_slices, QuadratureScheme, SliceStack};
use crate::wavefield::{
    make_blue_tube_wave, make_red_cube_train, random_blue_packets, random_colored_wave, Color, FrequencyLattice,
    SpectralWave, DEFAULT_MARGIN,
};

/// Exponent `C` in `delta' = delta^C / C`.
pub const C_COMP: f64 = 1.0;
/// `outside ratio <= C_V delta`.
pub const C_V: f64 = 0.3;
/// `interval ratio <= C_F delta`.
pub const C_F: f64 = 1.0;
/// Budgets `K delta^{-K_P}` on tube and interval counts.
pub const K_P: f64 = 3.0;
pub const K_U: f64 = 1.0;
pub const K_I: f64 = 4.0;

pub fn composed_delta(delta: f64, c_comp: f64) -> f64 {
    delta.powf(c_comp) / c_comp
}

pub fn count_budget(constant: f64, delta: f64) -> f64 {
    constant * delta.powf(-K_P)
}

#[derive(Clone, Debug)]
pub struct UniversalFamily {
    pub delta: f64,
    pub delta_prime: f64,
    pub tubes: Vec<Tube>,
    pub extraction: Extraction,
}

/// Runs the extraction at `delta' = delta^C / C` and keeps its dilated tubes. The
/// result depends on `phi` alone.
pub fn universal_tube_family(
    phi: &SpectralWave,
    delta: f64,
    c_comp: f64,
    opts: &ExtractionOptions,
    scheme: &QuadratureScheme,
) -> Result<UniversalFamily> {
    if !(c_comp >= 1.0) {
        return Err(Error::InvalidArgument(format!("composition exponent {c_comp} < 1")));
    }
    let delta_prime = composed_delta(delta, c_comp);
    let mut o = opts.clone();
    o.delta = delta_prime;
    let extraction = extract_profile(phi, &o, scheme)?;
    Ok(UniversalFamily {
        delta,
        delta_prime,
        tubes: extraction.tubes.clone(),
        extraction,
    })
}

/// A blue test wave.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiSpec {
    /// Gaussian coefficients over the whole sector.
    Random { k: u32, seed: u64 },
    /// A few random tube packets.
    Packets { k: u32, seed: u64, count: usize },
    /// One tube wave.
    Tube { k: u32, t0: f64, x0: [f64; 2], theta: f64 },
}

impl PsiSpec {
    pub fn k(&self) -> u32 {
        match self {
            PsiSpec::Random { k, .. } | PsiSpec::Packets { k, .. } | PsiSpec::Tube { k, .. } => *k,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            PsiSpec::Random { seed, .. } | PsiSpec::Packets { seed, .. } => Some(*seed),
            PsiSpec::Tube { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PsiSpec::Random { k, seed } => format!("random k={k} seed={seed}"),
            PsiSpec::Packets { k, seed, count } => format!("packets({count}) k={k} seed={seed}"),
            PsiSpec::Tube { k, t0, x0, theta } => {
                format!("tube k={k} t0={t0} x0=({}, {}) theta={theta:.4}", x0[0], x0[1])
            }
        }
    }

    pub fn build(&self, box_len: f64, min_points: usize) -> Result<SpectralWave> {
        let lat = FrequencyLattice::for_band(self.k(), box_len, min_points)?;
        match *self {
            PsiSpec::Random { k, seed } => random_colored_wave(&lat, Color::Blue, k, DEFAULT_MARGIN, seed),
            PsiSpec::Packets { k, seed, count } => random_blue_packets(&lat, k, count, seed),
            PsiSpec::Tube { k, t0, x0, theta } => make_blue_tube_wave(&lat, t0, x0, direction(theta), k),
        }
    }
}

/// `per_k` random waves for each `k` in `ks`, seeds `base, base + 1, ...`.
pub fn random_suite(ks: &[u32], per_k: usize, base: u64) -> Vec<PsiSpec> {
    ks.iter()
        .flat_map(|&k| (0..per_k as u64).map(move |s| PsiSpec::Random { k, seed: base + s }))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct PsiRecord {
    pub label: String,
    pub k: u32,
    pub seed: Option<u64>,
    /// `||phi psi||_{L^2(outside tubes)} / (mass mass)^{1/2}`.
    pub outside: f64,
    /// Same over the whole window.
    pub unrestricted: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileReport {
    pub delta: f64,
    pub c_v: f64,
    pub tubes: Vec<Tube>,
    pub records: Vec<PsiRecord>,
    pub intervals: Vec<(f64, f64)>,
    pub runtime_ms: u128,
    pub passes: bool,
}

impl ProfileReport {
    pub fn max_outside(&self) -> f64 {
        self.records.iter().map(|r| r.outside).fold(0.0, f64::max)
    }
}

/// Bilinear ratios of `phi` against each suite wave outside `tubes` and over the
/// whole window; passes when every outside ratio is at most `c_v delta`.
pub fn verify_profile(
    phi: &SpectralWave,
    tubes: &[Tube],
    delta: f64,
    suite: &[PsiSpec],
    c_v: f64,
    scheme: &QuadratureScheme,
) -> Result<ProfileReport> {
    let start = Instant::now();
    let box_len = phi.lattice().box_len();
    let waves: Vec<SpectralWave> = suite
        .iter()
        .map(|s| s.build(box_len, phi.lattice().points()))
        .collect::<Result<_>>()?;
    let refs: Vec<&SpectralWave> = waves.iter().collect();
    let regions = [
        Region::full(scheme.window).excluding(tubes),
        Region::full(scheme.window),
    ];
    let norms = product_l2_many(phi, &refs, &regions, scheme)?;
    let mphi = phi.mass();
    let records: Vec<PsiRecord> = suite
        .iter()
        .zip(&waves)
        .zip(&norms)
        .map(|((s, w), n)| {
            let d = (mphi * w.mass()).sqrt();
            let r = |v: f64| if d > 0.0 { v / d } else { 0.0 };
            PsiRecord {
                label: s.label(),
                k: s.k(),
                seed: s.seed(),
                outside: r(n[0]),
                unrestricted: r(n[1]),
            }
        })
        .collect();
    let passes = records.iter().all(|r| r.outside <= c_v * delta);
    Ok(ProfileReport {
        delta,
        c_v,
        tubes: tubes.to_vec(),
        records,
        intervals: Vec::new(),
        runtime_ms: start.elapsed().as_millis(),
        passes,
    })
}

/// `g(t_i) = sum_beta max_{x in T_beta(t_i)} |phi(t_i, x)|^2` at every quadrature time.
pub fn tube_profile(phi: &SpectralWave, tubes: &[Tube], scheme: &QuadratureScheme) -> Vec<f64> {
    let stack = SliceStack::new(phi, scheme);
    let mut g = vec![0.0; stack.times.len()];
    for tube in tubes {
        for ((v, a), s) in g.iter_mut().zip(stack.tube_argmax(tube, None)).zip(&stack.slices) {
            if let Some(i) = a {
                *v += s[i].norm_sqr();
            }
        }
    }
    g
}

#[derive(Clone, Debug, Serialize)]
pub struct Fungibility {
    /// `g` at the quadrature times, read as constant on each time cell.
    pub g: Vec<f64>,
    pub integral: f64,
    pub intervals: Vec<(f64, f64)>,
}

/// Integral of the cell-wise constant function `values` over `[a, b]`.
pub fn cell_integral(values: &[f64], scheme: &QuadratureScheme, a: f64, b: f64) -> f64 {
    let dt = scheme.dt;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let lo = -scheme.window + i as f64 * dt;
            let overlap = (b.min(lo + dt) - a.max(lo)).max(0.0);
            v * overlap
        })
        .sum()
}

/// Splits `[-W, W]` left to right into intervals with `int_I g <= budget`, cutting
/// inside time cells where needed.
pub fn split_by_budget(g: &[f64], scheme: &QuadratureScheme, budget: f64) -> Vec<(f64, f64)> {
    let dt = scheme.dt;
    let mut out = Vec::new();
    let mut start = -scheme.window;
    let mut acc = 0.0;
    for (i, &v) in g.iter().enumerate() {
        let mut pos = -scheme.window + i as f64 * dt;
        let end = pos + dt;
        while v > 0.0 && v * (end - pos) > budget - acc {
            let cut = pos + (budget - acc) / v;
            if cut > start {
                out.push((start, cut));
            }
            start = cut;
            pos = cut;
            acc = 0.0;
        }
        acc += v * (end - pos);
    }
    out.push((start, scheme.window));
    out
}

/// The fungibility split: each interval carries at most `delta^2` of `g`.
pub fn fungibility_partition(
    phi: &SpectralWave,
    tubes: &[Tube],
    delta: f64,
    scheme: &QuadratureScheme,
) -> Fungibility {
    let g = tube_profile(phi, tubes, scheme);
    let integral = scheme.dt * g.iter().sum::<f64>();
    let intervals = split_by_budget(&g, scheme, delta * delta);
    Fungibility { g, integral, intervals }
}

#[derive(Clone, Debug, Serialize)]
pub struct FungibilityRecord {
    pub label: String,
    pub interval: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FungibilityReport {
    pub delta: f64,
    pub c_f: f64,
    pub intervals: Vec<(f64, f64)>,
    pub records: Vec<FungibilityRecord>,
    pub max_ratio: f64,
    pub passes: bool,
}

/// `||phi psi||_{L^2(I x torus)} / (mass mass)^{1/2}` for every interval and suite wave.
pub fn verify_fungibility(
    phi: &SpectralWave,
    intervals: &[(f64, f64)],
    suite: &[PsiSpec],
    delta: f64,
    c_f: f64,
    scheme: &QuadratureScheme,
) -> Result<FungibilityReport> {
    let box_len = phi.lattice().box_len();
    let waves: Vec<SpectralWave> = suite
        .iter()
        .map(|s| s.build(box_len, phi.lattice().points()))
        .collect::<Result<_>>()?;
    let refs: Vec<&SpectralWave> = waves.iter().collect();
    let all = product_slices(phi, &refs, scheme)?;
    let mut records = Vec::new();
    for ((spec, psi), slices) in suite.iter().zip(&waves).zip(&all) {
        let d = (phi.mass() * psi.mass()).sqrt();
        for (j, &(a, b)) in intervals.iter().enumerate() {
            let v = cell_integral(slices, scheme, a, b);
            records.push(FungibilityRecord {
                label: spec.label(),
                interval: j,
                ratio: if d > 0.0 { v.sqrt() / d } else { 0.0 },
            });
        }
    }
    let max_ratio = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(FungibilityReport {
        delta,
        c_f,
        intervals: intervals.to_vec(),
        passes: max_ratio <= c_f * delta,
        records,
        max_ratio,
    })
}

/// Direction of the sharpness constructions, 12 degrees off e1.
pub const SHARPNESS_ANGLE: f64 = 12.0 * std::f64::consts::PI / 180.0;

#[derive(Clone, Debug, Serialize)]
pub struct SharpnessRow {
    pub k: u32,
    pub seed: u64,
    /// `||phi psi||_{L^2} / (mass mass)^{1/2}`.
    pub rho: f64,
    /// `||phi psi||_{L^p} / (mass mass)^{1/2}`.
    pub lp: f64,
    /// `lp * 2^{-k (1/p - 1/2)}`.
    pub lp_scaled: f64,
}

/// Exponent `(n + 3) / (n + 1)` at `n = 2`.
pub const SHARPNESS_P: f64 = 5.0 / 3.0;
/// Floor `rho_min` of the sharpness ratio.
pub const RHO_MIN: f64 = 0.25;
/// Ceiling of the scaled `L^p` ratio.
pub const LP_CEILING: f64 = 1.0;

/// The cube-train red wave on the tube of length `2^k` through the centre of the
/// torus, with uniform coefficients.
pub fn matched_train(k: u32, box_len: f64, seed: u64) -> Result<(Tube, SpectralWave)> {
    let c = box_len / 2.0;
    let tube = Tube::finite(0.0, [c, c], direction(SHARPNESS_ANGLE), k);
    let lat = FrequencyLattice::for_band(0, box_len, 0)?;
    let n = tube.axis_cubes()?.len();
    let coeffs = vec![1.0 / (n as f64).sqrt(); n];
    let w = make_red_cube_train(&lat, &tube, &coeffs, seed)?;
    Ok((tube, w))
}

/// For each `k` and seed: a blue tube wave and the matched cube-train red wave
/// along the same tube, with their `L^2` and `L^p` product ratios.
pub fn sharpness_experiment(ks: &[u32], seeds: &[u64], box_len: f64, scheme: &QuadratureScheme) -> Result<Vec<SharpnessRow>> {
    let mut rows = Vec::new();
    for &k in ks {
        let lat = FrequencyLattice::for_band(k, box_len, 0)?;
        for &seed in seeds {
            let (tube, phi) = matched_train(k, box_len, seed)?;
            let psi = make_blue_tube_wave(&lat, tube.t0, tube.x0, tube.omega, k)?;
            let d = (phi.mass() * psi.mass()).sqrt();
            let l2 = product_l2_many(&phi, &[&psi], &[Region::full(scheme.window)], scheme)?[0][0];
            let lp = lp_product(&phi, &psi, SHARPNESS_P, scheme)? / d;
            rows.push(SharpnessRow {
                k,
                seed,
                rho: l2 / d,
                lp,
                lp_scaled: lp * (-(k as f64) * (1.0 / SHARPNESS_P - 0.5)).exp2(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_splits_evenly() {
        let scheme = QuadratureScheme::new(0.25, 4.0).unwrap();
        let g = vec![0.3; scheme.steps()];
        let iv = split_by_budget(&g, &scheme, 0.25);
        assert_eq!(iv.len(), (0.3f64 * 8.0 / 0.25).ceil() as usize);
        for &(a, b) in &iv {
            assert!(cell_integral(&g, &scheme, a, b) <= 0.25 + 1e-12);
        }
        assert_eq!(iv.first().unwrap().0, -4.0);
        assert_eq!(iv.last().unwrap().1, 4.0);
    }

    #[test]
    fn zero_profile_is_one_interval() {
        let scheme = QuadratureScheme::new(0.25, 4.0).unwrap();
        assert_eq!(split_by_budget(&vec![0.0; 32], &scheme, 0.01), vec![(-4.0, 4.0)]);
    }
}
