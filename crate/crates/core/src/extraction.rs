//! Mass-decrement extraction: find a light-ray tube on which a red wave
//! concentrates in `L^2_t L^inf_x`, build the dual extractor wave, subtract its
//! optimal multiple, repeat.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{direction, Region, Tube};
use crate::norms::{l2t_linfx_on_tube, QuadratureScheme, SliceStack};
use crate::wavefield::{
    frequency_margin, smooth_step, Color, FrequencyLattice, SpatialGrid, SpectralWave, DEFAULT_MARGIN,
    SECTOR_HALF_ANGLE,
};

/// Candidate tubes: window-spanning, directions `j * direction_step` from e1 inside
/// the sector, offsets on a square grid of spacing `offset_step`.
#[derive(Clone, Copy, Debug)]
pub struct SearchGrid {
    pub direction_step: f64,
    pub offset_step: f64,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            direction_step: 1.0 / 16.0,
            offset_step: 0.5,
        }
    }
}

impl SearchGrid {
    pub fn angles(&self) -> Vec<f64> {
        let j = (SECTOR_HALF_ANGLE / self.direction_step + 1e-9).floor() as i64;
        (-j..=j).map(|i| i as f64 * self.direction_step).collect()
    }
}

/// For each grid point, the max of `values` over the grid disc of radius `r`.
fn disc_max_filter(values: &[f64], grid: SpatialGrid, r: f64) -> Vec<f64> {
    let m = grid.points;
    let rho = r / grid.spacing();
    let d = rho.floor() as i64;
    let widths: Vec<i64> = (-d..=d)
        .map(|dy| ((rho * rho - (dy * dy) as f64).max(0.0).sqrt() + 1e-9).floor() as i64)
        .collect();
    let mut distinct = widths.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let mut row_max: Vec<(i64, Vec<f64>)> = Vec::new();
    for &w in &distinct {
        let mut out = vec![0.0; values.len()];
        for i in 0..m {
            let row = &values[i * m..(i + 1) * m];
            for j in 0..m {
                let mut best = 0.0f64;
                for dj in -w..=w {
                    best = best.max(row[(j as i64 + dj).rem_euclid(m as i64) as usize]);
                }
                out[i * m + j] = best;
            }
        }
        row_max.push((w, out));
    }
    let mut out = vec![0.0f64; values.len()];
    for (dy, &w) in (-d..=d).zip(&widths) {
        let rm = &row_max.iter().find(|(v, _)| *v == w).unwrap().1;
        for i in 0..m {
            let src = (i as i64 + dy).rem_euclid(m as i64) as usize;
            for j in 0..m {
                let v = rm[src * m + j];
                if v > out[i * m + j] {
                    out[i * m + j] = v;
                }
            }
        }
    }
    out
}

/// Best tube over the whole search grid: `(tube, value)` with the largest tube
/// norm, ties broken by (angle, offset) order. Exact norms are computed in order of
/// decreasing upper bound until the bound drops below the best exact value.
pub fn best_tube(stack: &SliceStack, search: &SearchGrid) -> Option<(Tube, f64)> {
    let grid = stack.grid;
    let side = grid.box_len;
    let n_off = (side / search.offset_step).round() as usize;
    let angles = search.angles();
    let radius = 1.0 + grid.spacing() / std::f64::consts::SQRT_2;
    let bounds: Vec<Vec<f64>> = stack
        .slices
        .iter()
        .map(|s| {
            let a: Vec<f64> = s.iter().map(|z| z.norm_sqr()).collect();
            disc_max_filter(&a, grid, radius)
        })
        .collect();
    let per_dir = n_off * n_off;
    let mut ub = vec![0.0f64; angles.len() * per_dir];
    for (d, &theta) in angles.iter().enumerate() {
        let w = direction(theta);
        for (i, &t) in stack.times.iter().enumerate() {
            let u = &bounds[i];
            let shift = [w[0] * t, w[1] * t];
            let cols: Vec<usize> = (0..n_off)
                .map(|b| grid.nearest(b as f64 * search.offset_step + shift[1]))
                .collect();
            for a in 0..n_off {
                let row = grid.nearest(a as f64 * search.offset_step + shift[0]) * grid.points;
                let dst = &mut ub[d * per_dir + a * n_off..d * per_dir + (a + 1) * n_off];
                for (v, c) in dst.iter_mut().zip(&cols) {
                    *v += u[row + c];
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..ub.len()).collect();
    order.sort_by(|&a, &b| ub[b].total_cmp(&ub[a]).then(a.cmp(&b)));
    let mut best: Option<(usize, f64)> = None;
    for idx in order {
        let bound = (stack.dt * ub[idx]).sqrt();
        if let Some((_, v)) = best {
            if bound < v {
                break;
            }
        }
        let tube = candidate(idx, &angles, n_off, search.offset_step);
        let v = stack.tube_norm(&tube, None);
        match best {
            Some((bi, bv)) if v < bv || (v == bv && idx > bi) => {}
            _ => best = Some((idx, v)),
        }
    }
    best.map(|(i, v)| (candidate(i, &angles, n_off, search.offset_step), v))
}

fn candidate(idx: usize, angles: &[f64], n_off: usize, step: f64) -> Tube {
    let d = idx / (n_off * n_off);
    let r = idx % (n_off * n_off);
    let x0 = [(r / n_off) as f64 * step, (r % n_off) as f64 * step];
    Tube::spanning(x0, direction(angles[d]))
}

/// The best tube if its `L^2_t L^inf_x` norm reaches `delta * mass^{1/2}`.
pub fn find_concentrating_tube(
    phi: &SpectralWave,
    delta: f64,
    search: &SearchGrid,
    scheme: &QuadratureScheme,
) -> Option<(Tube, f64)> {
    if phi.is_zero() {
        return None;
    }
    let stack = SliceStack::new(phi, scheme);
    let threshold = delta * phi.mass().sqrt();
    best_tube(&stack, search).filter(|(_, v)| *v >= threshold)
}

/// Time samples `t_i`, trajectory `x(t_i)` inside the tube and unit-`L^2_t`
/// coefficients `f(t_i)` realizing the tube norm as a pairing.
#[derive(Clone, Debug)]
pub struct DualWitness {
    pub lattice: FrequencyLattice,
    pub source_margin: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub f: Vec<Complex64>,
    /// `||g||_{L^2_t}` with `g(t_i) = phi(t_i, x(t_i))`.
    pub tube_norm: f64,
}

impl DualWitness {
    pub fn from_stack(stack: &SliceStack, tube: &Tube, lattice: &FrequencyLattice, source_margin: f64) -> Result<Self> {
        let arg = stack.tube_argmax(tube, None);
        let mut times = Vec::new();
        let mut points = Vec::new();
        let mut g = Vec::new();
        for ((t, a), s) in stack.times.iter().zip(&arg).zip(&stack.slices) {
            if let Some(i) = a {
                times.push(*t);
                points.push(stack.grid.point(*i));
                g.push(s[*i]);
            }
        }
        let norm = (stack.dt * g.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroTubeNorm);
        }
        Ok(Self {
            lattice: lattice.clone(),
            source_margin,
            dt: stack.dt,
            times,
            points,
            f: g.iter().map(|z| z / norm).collect(),
            tube_norm: norm,
        })
    }

    /// `sum_i dt w(t_i, x(t_i)) conj f(t_i)`, with `w` evaluated pointwise.
    pub fn time_pairing(&self, w: &SpectralWave) -> Complex64 {
        self.times
            .iter()
            .zip(&self.points)
            .zip(&self.f)
            .map(|((t, x), f)| w.evaluate_point(*t, *x) * f.conj() * self.dt)
            .sum()
    }
}

pub fn dual_witness(phi: &SpectralWave, tube: &Tube, scheme: &QuadratureScheme) -> Result<DualWitness> {
    let stack = SliceStack::new(phi, scheme);
    DualWitness::from_stack(&stack, tube, phi.lattice(), phi.margin()?)
}

/// Frequency cutoff: 1 where the margin is at least `inner`, 0 where it is at most
/// `outer`, smooth in between; a sharp indicator when `inner == outer`.
pub fn margin_cutoff(xi: [f64; 2], inner: f64, outer: f64) -> f64 {
    let d = frequency_margin(xi, 0);
    if d <= 0.0 {
        return 0.0;
    }
    if inner > outer {
        smooth_step((d - outer) / (inner - outer))
    } else if d >= inner {
        1.0
    } else {
        0.0
    }
}

/// Extractor wave `c_+(xi) = eta(xi) sum_i dt f(t_i) e^{-2 pi i (t_i |xi| + x(t_i).xi)}`.
pub fn build_f(w: &DualWitness, margin_target: f64) -> Result<SpectralWave> {
    if margin_target > w.source_margin {
        return Err(Error::InvalidArgument(format!(
            "margin target {margin_target} exceeds the source margin {}",
            w.source_margin
        )));
    }
    let lat = &w.lattice;
    let mut plus = vec![Complex64::default(); lat.len()];
    let mut live = 0usize;
    for (i, c) in plus.iter_mut().enumerate() {
        let xi = lat.frequency(i);
        let eta = margin_cutoff(xi, w.source_margin, margin_target);
        if eta == 0.0 {
            continue;
        }
        live += 1;
        let r = xi[0].hypot(xi[1]);
        let mut s = Complex64::default();
        for ((t, x), f) in w.times.iter().zip(&w.points).zip(&w.f) {
            let ph = -TAU * (t * r + x[0] * xi[0] + x[1] * xi[1]);
            s += f * Complex64::from_polar(1.0, ph);
        }
        *c = s * (eta * w.dt);
    }
    if live == 0 {
        return Err(Error::InfeasibleMargin {
            requested: margin_target,
            reason: "no lattice frequency survives the cutoff".into(),
        });
    }
    let minus = vec![Complex64::default(); lat.len()];
    SpectralWave::from_coefficients(lat.clone(), Color::Red, 0, plus, minus)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuChoice {
    pub mu: f64,
    pub decrement: f64,
    pub inner: f64,
    pub clamped: bool,
}

/// Minimizes `mass(phi - mu F)` over `mu in (0, 1]`.
pub fn optimal_mu(phi: &SpectralWave, f: &SpectralWave) -> Result<MuChoice> {
    let mf = f.mass();
    if mf == 0.0 {
        return Err(Error::InvalidArgument("extractor wave is zero".into()));
    }
    let ip = phi.inner(f)?.re;
    if !(ip > 0.0) {
        return Err(Error::NoDecrement(ip));
    }
    let raw = ip / mf;
    let mu = raw.min(1.0);
    Ok(MuChoice {
        mu,
        decrement: 2.0 * mu * ip - mu * mu * mf,
        inner: ip,
        clamped: raw > 1.0,
    })
}

#[derive(Clone, Debug)]
pub struct ExtractionOptions {
    pub delta: f64,
    pub max_iter: usize,
    pub c_dilate: f64,
    /// Margin given up per step; `None` means `max(delta^10, 2/L)`.
    pub margin_step: Option<f64>,
    /// Margin targets never go below this.
    pub margin_floor: f64,
    pub search: SearchGrid,
}

impl ExtractionOptions {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            max_iter: 200,
            c_dilate: 2.0,
            margin_step: None,
            margin_floor: DEFAULT_MARGIN,
            search: SearchGrid::default(),
        }
    }

    pub fn dilation(&self) -> f64 {
        self.delta.powf(-self.c_dilate)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionStep {
    pub iteration: usize,
    pub tube: Tube,
    pub value: f64,
    pub inner: f64,
    pub mass_f: f64,
    pub mu: f64,
    pub clamped: bool,
    pub mass_before: f64,
    pub mass_after: f64,
    pub decrement: f64,
    pub margin_target: f64,
    pub margin_f: f64,
}

#[derive(Clone, Debug)]
pub struct Extraction {
    /// Extracted tubes dilated by `delta^{-c_dilate}`.
    pub tubes: Vec<Tube>,
    pub remainder: SpectralWave,
    pub trace: Vec<ExtractionStep>,
    pub extractors: Vec<SpectralWave>,
    pub witnesses: Vec<DualWitness>,
    /// Iteration cap reached while a concentrating tube remained.
    pub partial: bool,
    /// Largest tube norm of the remainder over the search grid.
    pub remainder_concentration: f64,
}

/// Iterated extraction until no tube carries `delta * mass(phi)^{1/2}`.
pub fn extract_profile(phi: &SpectralWave, opts: &ExtractionOptions, scheme: &QuadratureScheme) -> Result<Extraction> {
    if phi.color() != Color::Red || phi.k() != 0 {
        return Err(Error::InvalidArgument("extraction needs a red frequency-1 wave".into()));
    }
    let mut out = Extraction {
        tubes: Vec::new(),
        remainder: phi.clone(),
        trace: Vec::new(),
        extractors: Vec::new(),
        witnesses: Vec::new(),
        partial: false,
        remainder_concentration: 0.0,
    };
    if phi.is_zero() {
        return Ok(out);
    }
    let threshold = opts.delta * phi.mass().sqrt();
    let step = opts
        .margin_step
        .unwrap_or_else(|| opts.delta.powi(10).max(2.0 / phi.lattice().box_len()));
    let lambda = opts.dilation();
    let mut margin = phi.margin()?;
    let mut iteration = 0;
    loop {
        let stack = SliceStack::new(&out.remainder, scheme);
        let (tube, value) = match best_tube(&stack, &opts.search) {
            Some(b) => b,
            None => break,
        };
        out.remainder_concentration = value;
        if value < threshold {
            break;
        }
        if iteration >= opts.max_iter {
            out.partial = true;
            break;
        }
        let witness = DualWitness::from_stack(&stack, &tube, phi.lattice(), margin)?;
        drop(stack);
        let target = (margin - step).max(opts.margin_floor).min(margin);
        let f = build_f(&witness, target)?;
        let choice = optimal_mu(&out.remainder, &f)?;
        let mass_before = out.remainder.mass();
        out.remainder.subtract_scaled(choice.mu, &f)?;
        let mass_after = out.remainder.mass();
        let margin_f = f.margin()?;
        margin = out.remainder.margin()?;
        out.trace.push(ExtractionStep {
            iteration,
            tube,
            value,
            inner: choice.inner,
            mass_f: f.mass(),
            mu: choice.mu,
            clamped: choice.clamped,
            mass_before,
            mass_after,
            decrement: choice.decrement,
            margin_target: target,
            margin_f,
        });
        out.tubes.push(tube.dilate(lambda)?);
        out.extractors.push(f);
        out.witnesses.push(witness);
        iteration += 1;
    }
    Ok(out)
}

/// Largest `||F||_{L^2_t L^inf_x(T' \ dilated)} / mass(F)^{1/2}` over `probes`
/// random window-spanning tubes `T'` with directions in the red sector.
pub fn off_tube_ratio(
    f: &SpectralWave,
    dilated: &Tube,
    probes: usize,
    seed: u64,
    scheme: &QuadratureScheme,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = f.lattice().box_len();
    let region = Region::full(scheme.window).excluding(std::slice::from_ref(dilated));
    let m = f.mass().sqrt();
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let theta = rng.random_range(-SECTOR_HALF_ANGLE..=SECTOR_HALF_ANGLE);
        let x0 = [rng.random_range(0.0..side), rng.random_range(0.0..side)];
        let probe = Tube::spanning(x0, direction(theta));
        worst = worst.max(l2t_linfx_on_tube(f, &probe, Some(&region), scheme) / m);
    }
    worst
}

/// Floor constant `c_dec` in `decrement >= c_dec delta^2 / ln(1/delta)`.
pub const DECREMENT_FLOOR: f64 = 0.1;
/// `mass(F) <= K_F ln(1/delta)`.
pub const EXTRACTOR_MASS_CONSTANT: f64 = 5.0;
/// Ceiling `eps_off` of `off_tube_ratio` for extractors.
pub const OFF_TUBE_CEILING: f64 = 0.4;
