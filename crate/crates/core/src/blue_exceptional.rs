//! Bad unit cubes of a blue wave and a small set of fat tubes touching all of them.
//!
//! The wave is split into pieces `psi_alpha` living on unit frequency cells. On each
//! time slab of length `2^k` the local mass of every piece around each unit cell
//! becomes the weight of a unit tube in the piece's direction, and the greedy
//! covering algorithm turns the resulting family into fat tubes.

use std::collections::BTreeMap;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{direction, Cube, Point, Torus, Tube};
use crate::norms::QuadratureScheme;
use crate::tube_cover::{greedy_tube_cover, CoverOptions, WeightedTubeFamily};
use crate::wavefield::{smooth_step, Color, Evaluator, FrequencyLattice, SpectralWave};

/// Power of the cross-section localization `(1 + |z|)^{-KERNEL_POWER}`.
pub const KERNEL_POWER: i32 = 100;
/// Cells farther than this from the tube axis never contribute.
pub const KERNEL_RADIUS: i64 = 8;
/// Kernel taps below this (relative to the centre tap) are dropped.
pub const KERNEL_CUTOFF: f64 = 1e-16;
/// Weights at or below this are left out of the family.
pub const WEIGHT_FLOOR: f64 = 1e-10;
/// Default `c` in the cover threshold `c delta^2`.
pub const COVER_THRESHOLD_FACTOR: f64 = 0.5;
/// Dilation applied to output tubes when checking that bad cubes are touched.
pub const TOUCH_DILATION: f64 = 3.0;
/// Budget `K_exc delta^{-K_e}` on the number of output tubes.
pub const EXCEPTIONAL_BUDGET: (f64, f64) = (16.0, 3.0);

/// Partition-of-unity profile on one axis: `b(s)^2 + b(s - 1)^2 = 1` on `[0, 1]`.
pub fn cell_profile(s: f64) -> f64 {
    let a = s.abs();
    if a >= 1.0 {
        0.0
    } else {
        smooth_step(1.0 - a).sqrt()
    }
}

/// Frequency cutoff of the cell `alpha` (an integer point of the frequency plane).
pub fn cell_weight(xi: [f64; 2], alpha: [i64; 2]) -> f64 {
    cell_profile(xi[0] - alpha[0] as f64) * cell_profile(xi[1] - alpha[1] as f64)
}

/// The part of a blue wave carried by one unit frequency cell.
#[derive(Clone, Debug)]
pub struct SectorPiece {
    pub cell: [i64; 2],
    /// Mass-weighted mean frequency of the piece.
    pub center: [f64; 2],
    pub omega: [f64; 2],
    pub wave: SpectralWave,
}

/// Splits `psi` into pieces on unit frequency cells, each on its own small lattice
/// centred at the cell. Pieces are ordered by cell.
pub fn sector_pieces(psi: &SpectralWave) -> Result<Vec<SectorPiece>> {
    if psi.color() != Color::Blue {
        return Err(Error::InvalidArgument("sector pieces are defined for blue waves".into()));
    }
    let lat = psi.lattice();
    let side = lat.box_len();
    let mut cells: BTreeMap<[i64; 2], Vec<(usize, Complex64)>> = BTreeMap::new();
    for (i, c) in psi.minus().iter().enumerate() {
        if *c == Complex64::default() {
            continue;
        }
        let xi = lat.frequency(i);
        let (a0, a1) = (xi[0].floor() as i64, xi[1].floor() as i64);
        for alpha in [[a0, a1], [a0 + 1, a1], [a0, a1 + 1], [a0 + 1, a1 + 1]] {
            let b = cell_weight(xi, alpha);
            if b > 0.0 {
                cells.entry(alpha).or_default().push((i, c * b));
            }
        }
    }
    let points = ((4.0 * side).ceil() as usize).next_multiple_of(2).max(16);
    let mut out = Vec::with_capacity(cells.len());
    for (alpha, entries) in cells {
        let center = [
            (alpha[0] as f64 * side).round() as i64,
            (alpha[1] as f64 * side).round() as i64,
        ];
        let small = FrequencyLattice::with_center(2, points, side, center)?;
        let mut minus = vec![Complex64::default(); small.len()];
        let mut acc = [0.0; 2];
        let mut total = 0.0;
        for (i, c) in entries {
            let j = small
                .index_of_mode(lat.mode(i))
                .ok_or_else(|| Error::Resolution("cell lattice too small".into()))?;
            minus[j] = c;
            let xi = lat.frequency(i);
            let w = c.norm_sqr();
            acc[0] += w * xi[0];
            acc[1] += w * xi[1];
            total += w;
        }
        if total == 0.0 {
            continue;
        }
        let center = [acc[0] / total, acc[1] / total];
        let r = center[0].hypot(center[1]);
        let wave = SpectralWave::from_coefficients(
            small.clone(),
            Color::Blue,
            psi.k(),
            vec![Complex64::default(); small.len()],
            minus,
        )?;
        out.push(SectorPiece {
            cell: alpha,
            center,
            omega: [center[0] / r, center[1] / r],
            wave,
        });
    }
    Ok(out)
}

/// Direction bin of width `2^-k` in angle.
fn direction_bin(omega: [f64; 2], k: u32) -> i64 {
    let s = (k as f64).exp2();
    let theta = omega[1].atan2(omega[0]);
    (theta * s).round() as i64
}

fn kernel_taps() -> Vec<([i64; 2], f64)> {
    let mut taps = Vec::new();
    for a in -KERNEL_RADIUS..=KERNEL_RADIUS {
        for b in -KERNEL_RADIUS..=KERNEL_RADIUS {
            let w = (1.0 + (a as f64).hypot(b as f64)).powi(-KERNEL_POWER);
            if w >= KERNEL_CUTOFF {
                taps.push(([a, b], w));
            }
        }
    }
    taps
}

/// Mass of each unit spatial cell at time `t`, row-major over `floor(L)^2` cells.
fn cell_masses(w: &SpectralWave, t: f64) -> Result<Vec<f64>> {
    let grid = w.lattice().grid();
    let cells = unit_cells(grid.box_len)?;
    let h = grid.spacing();
    let mut ev = Evaluator::new(w, grid)?;
    let vals = ev.eval(t);
    let mut out = vec![0.0; cells * cells];
    for i in 0..grid.points {
        let ci = ((grid.coord(i)).floor() as usize).min(cells - 1);
        for j in 0..grid.points {
            let cj = ((grid.coord(j)).floor() as usize).min(cells - 1);
            out[ci * cells + cj] += h * h * vals[i * grid.points + j].norm_sqr();
        }
    }
    Ok(out)
}

fn unit_cells(side: f64) -> Result<usize> {
    if (side - side.round()).abs() > 1e-9 || side < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "unit cubes need an integer torus side, got {side}"
        )));
    }
    Ok(side.round() as usize)
}

/// Time slabs of length `2^k` tiling `[-W, W]`, as `(start, end)`.
pub fn slabs(k: u32, window: f64) -> Vec<(f64, f64)> {
    let len = (k as f64).exp2();
    let n = ((2.0 * window / len).ceil() as usize).max(1);
    (0..n)
        .map(|s| {
            let a = -window + s as f64 * len;
            (a, (a + len).min(window))
        })
        .collect()
}

/// Weighted family of unit tubes at time `t0`: one tube per (direction bin, unit
/// cell), weighted by the localized mass of the pieces in that bin divided by the
/// mass of `psi`.
pub fn sector_weights(psi: &SpectralWave, t0: f64) -> Result<WeightedTubeFamily> {
    let pieces = sector_pieces(psi)?;
    sector_weights_from_pieces(psi, &pieces, t0)
}

fn sector_weights_from_pieces(psi: &SpectralWave, pieces: &[SectorPiece], t0: f64) -> Result<WeightedTubeFamily> {
    let side = psi.lattice().box_len();
    let torus = Torus::new(side);
    let k = psi.k();
    let mass = psi.mass();
    if mass == 0.0 || pieces.is_empty() {
        return WeightedTubeFamily::new(torus, Vec::new(), Vec::new());
    }
    let cells = unit_cells(side)?;
    let taps = kernel_taps();
    let mut bins: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for p in pieces {
        let raw = cell_masses(&p.wave, t0)?;
        let acc = bins
            .entry(direction_bin(p.omega, k))
            .or_insert_with(|| vec![0.0; cells * cells]);
        let n = cells as i64;
        for ci in 0..n {
            for cj in 0..n {
                let v = raw[(ci * n + cj) as usize];
                if v == 0.0 {
                    continue;
                }
                for (z, w) in &taps {
                    let a = (ci + z[0]).rem_euclid(n);
                    let b = (cj + z[1]).rem_euclid(n);
                    acc[(a * n + b) as usize] += w * v;
                }
            }
        }
    }
    let s = (k as f64).exp2();
    let mut tubes = Vec::new();
    let mut weights = Vec::new();
    for (bin, acc) in &bins {
        let omega = direction(*bin as f64 / s);
        for (idx, v) in acc.iter().enumerate() {
            let w = v / mass;
            if w > WEIGHT_FLOOR {
                let x0 = [(idx / cells) as f64 + 0.5, (idx % cells) as f64 + 0.5];
                tubes.push(Tube::finite(t0, x0, omega, k));
                weights.push(w);
            }
        }
    }
    let total: f64 = weights.iter().sum();
    if total > 1.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
    WeightedTubeFamily::new(torus, tubes, weights)
}

/// `||psi||_{L^2(q)}^2` for every unit cube `q` of `[-W, W] x torus`.
#[derive(Clone, Debug)]
pub struct CubeNorms {
    pub window: f64,
    pub cells: usize,
    pub time_cells: usize,
    /// Indexed `[time cell][x0 cell][x1 cell]`, squared norms.
    pub values: Vec<f64>,
    pub mass: f64,
}

impl CubeNorms {
    pub fn compute(psi: &SpectralWave, scheme: &QuadratureScheme) -> Result<Self> {
        let grid = psi.lattice().grid();
        let cells = unit_cells(grid.box_len)?;
        let time_cells = unit_cells(2.0 * scheme.window)?;
        let h = grid.spacing();
        let col: Vec<usize> = (0..grid.points)
            .map(|i| (grid.coord(i).floor() as usize).min(cells - 1))
            .collect();
        let mut values = vec![0.0; time_cells * cells * cells];
        let mut ev = Evaluator::new(psi, grid)?;
        for t in scheme.times() {
            let tc = ((t + scheme.window).floor() as usize).min(time_cells - 1);
            let base = tc * cells * cells;
            let f = ev.eval(t);
            for i in 0..grid.points {
                let row = base + col[i] * cells;
                for j in 0..grid.points {
                    values[row + col[j]] += scheme.dt * h * h * f[i * grid.points + j].norm_sqr();
                }
            }
        }
        Ok(Self {
            window: scheme.window,
            cells,
            time_cells,
            values,
            mass: psi.mass(),
        })
    }

    pub fn cube(&self, idx: usize) -> Cube {
        let c = self.cells;
        let (tc, rest) = (idx / (c * c), idx % (c * c));
        Cube::new(
            Point::new(
                -self.window + tc as f64 + 0.5,
                [(rest / c) as f64 + 0.5, (rest % c) as f64 + 0.5],
            ),
            1.0,
        )
    }

    /// Cubes with `||psi||_{L^2(q)} > delta * mass^{1/2}`, in index order.
    pub fn bad(&self, delta: f64) -> Vec<Cube> {
        let thr = delta * delta * self.mass;
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > thr)
            .map(|(i, _)| self.cube(i))
            .collect()
    }
}

/// Exhaustive scan of the unit cubes of `[-W, W] x torus` for bad cubes.
pub fn find_bad_cubes(psi: &SpectralWave, delta: f64, scheme: &QuadratureScheme) -> Result<Vec<Cube>> {
    if psi.color() != Color::Blue {
        return Err(Error::InvalidArgument("bad cubes are defined for blue waves".into()));
    }
    if psi.is_zero() {
        return Ok(Vec::new());
    }
    Ok(CubeNorms::compute(psi, scheme)?.bad(delta))
}

#[derive(Clone, Copy, Debug)]
pub struct ExceptionalOptions {
    /// `c` in the cover threshold `c delta^2`.
    pub threshold_factor: f64,
    pub cover: CoverOptions,
}

impl Default for ExceptionalOptions {
    fn default() -> Self {
        Self {
            threshold_factor: COVER_THRESHOLD_FACTOR,
            cover: CoverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SlabCover {
    pub t_range: (f64, f64),
    pub family_size: usize,
    pub classes: usize,
    pub tubes: usize,
    pub search_warning: bool,
}

#[derive(Clone, Debug)]
pub struct ExceptionalTubes {
    pub tubes: Vec<Tube>,
    pub slabs: Vec<SlabCover>,
}

/// Fat tubes outside of which the localized sector mass of `psi` is below `c delta^2`,
/// per slab of length `2^k`, for a mass-normalized blue `psi`.
pub fn exceptional_tubes_for_blue(
    psi: &SpectralWave,
    delta: f64,
    window: f64,
    opts: &ExceptionalOptions,
) -> Result<ExceptionalTubes> {
    let mut out = ExceptionalTubes {
        tubes: Vec::new(),
        slabs: Vec::new(),
    };
    if psi.is_zero() {
        return Ok(out);
    }
    let pieces = sector_pieces(psi)?;
    let cover_delta = (opts.threshold_factor * delta * delta).min(1.0);
    for (a, b) in slabs(psi.k(), window) {
        let t0 = 0.5 * (a + b);
        let fam = sector_weights_from_pieces(psi, &pieces, t0)?;
        let res = greedy_tube_cover(&fam, cover_delta, &opts.cover)?;
        out.slabs.push(SlabCover {
            t_range: (a, b),
            family_size: fam.len(),
            classes: res.iterations(),
            tubes: res.tubes.len(),
            search_warning: res.search_warning,
        });
        out.tubes.extend(res.tubes);
    }
    Ok(out)
}

/// Bad cubes that touch no output tube after dilation by `lambda`.
pub fn uncovered_cubes(torus: Torus, bad: &[Cube], tubes: &[Tube], lambda: f64) -> Result<Vec<Cube>> {
    let fat: Vec<Tube> = tubes.iter().map(|t| t.dilate(lambda)).collect::<Result<_>>()?;
    Ok(bad
        .iter()
        .filter(|q| !fat.iter().any(|t| q.touches(torus, t)))
        .copied()
        .collect())
}

/// `K_exc delta^{-K_e}`.
pub fn exceptional_budget(delta: f64) -> f64 {
    EXCEPTIONAL_BUDGET.0 * delta.powf(-EXCEPTIONAL_BUDGET.1)
}
