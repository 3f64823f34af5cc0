//! Quadrature norms over spacetime regions, tubes and cubes.
//!
//! Time integrals use the midpoint rule on `2 T_w / dt` cells; space integrals are
//! grid sums with weight `h^2`. All reductions run in a fixed order.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Region, Torus, Tube};
use crate::wavefield::{Evaluator, FrequencyLattice, SpatialGrid, SpectralWave};

/// Ceiling `C*` of `||phi psi||_{L^2} / (mass mass)^{1/2}` for red/blue pairs.
pub const STRICHARTZ_CEILING: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureScheme {
    pub dt: f64,
    pub window: f64,
}

impl QuadratureScheme {
    pub fn new(dt: f64, window: f64) -> Result<Self> {
        if !(dt > 0.0 && dt <= 0.25) {
            return Err(Error::InvalidArgument(format!("time step {dt} must lie in (0, 1/4]")));
        }
        let steps = 2.0 * window / dt;
        if !(window > 0.0) || (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "time step {dt} does not divide the window [-{window}, {window}]"
            )));
        }
        Ok(Self { dt, window })
    }

    pub fn steps(&self) -> usize {
        (2.0 * self.window / self.dt).round() as usize
    }

    /// Cell midpoints `-T_w + (i + 1/2) dt`.
    pub fn times(&self) -> Vec<f64> {
        (0..self.steps())
            .map(|i| -self.window + (i as f64 + 0.5) * self.dt)
            .collect()
    }
}

/// Rows of a grid met by the torus disc `|x - c| <= r`: `(row, first column, last column)`,
/// columns unwrapped (reduce modulo the grid size before indexing).
pub fn disc_rows(grid: SpatialGrid, c: [f64; 2], r: f64) -> impl Iterator<Item = (usize, i64, i64)> {
    let h = grid.spacing();
    let m = grid.points as i64;
    let mut lo = ((c[0] - r) / h).ceil() as i64;
    let mut hi = ((c[0] + r) / h).floor() as i64;
    if hi - lo + 1 > m {
        // Each row once, at its nearest lift.
        lo = (c[0] / h).round() as i64 - m / 2;
        hi = lo + m - 1;
    }
    (lo..=hi.max(lo - 1)).filter_map(move |i| {
        let dx = i as f64 * h - c[0];
        let w2 = r * r - dx * dx;
        if w2 < 0.0 {
            return None;
        }
        let w = w2.sqrt();
        let a = ((c[1] - w) / h).ceil() as i64;
        let b = ((c[1] + w) / h).floor() as i64;
        if b < a {
            return None;
        }
        Some((i.rem_euclid(m) as usize, a, b.min(a + m - 1)))
    })
}

/// Visits the flat indices of grid points inside the torus disc.
pub fn for_each_in_disc(grid: SpatialGrid, c: [f64; 2], r: f64, mut f: impl FnMut(usize)) {
    let m = grid.points as i64;
    for (row, a, b) in disc_rows(grid, c, r) {
        let base = row * grid.points;
        for j in a..=b {
            f(base + j.rem_euclid(m) as usize);
        }
    }
}

fn fill_row(mask: &mut [bool], m: usize, row: usize, a: i64, b: i64, value: bool) {
    let base = row * m;
    let mi = m as i64;
    if b - a + 1 >= mi {
        mask[base..base + m].fill(value);
        return;
    }
    let s = a.rem_euclid(mi) as usize;
    let e = s + (b - a) as usize;
    if e < m {
        mask[base + s..=base + e].fill(value);
    } else {
        mask[base + s..base + m].fill(value);
        mask[base..=base + e - m].fill(value);
    }
}

/// Points of `grid` at time `t` that belong to `region`; `None` if no point does.
pub fn region_mask(region: &Region, torus: Torus, grid: SpatialGrid, t: f64) -> Option<Vec<bool>> {
    if !region.contains_time(t) {
        return None;
    }
    let m = grid.points;
    let mut mask = match region.cube {
        None => vec![true; grid.len()],
        Some(c) => {
            let mut mask = vec![false; grid.len()];
            let h = grid.spacing();
            let s = c.side / 2.0;
            let lo0 = ((c.center.x[0] - s) / h).ceil() as i64;
            let hi0 = ((c.center.x[0] + s) / h).floor() as i64;
            let lo1 = ((c.center.x[1] - s) / h).ceil() as i64;
            let hi1 = ((c.center.x[1] + s) / h).floor() as i64;
            for i in lo0..=hi0.min(lo0 + m as i64 - 1) {
                if lo1 <= hi1 {
                    fill_row(&mut mask, m, i.rem_euclid(m as i64) as usize, lo1, hi1, true);
                }
            }
            mask
        }
    };
    for tube in &region.excluded {
        if let Some(l) = tube.half_length() {
            if (t - tube.t0).abs() > l {
                continue;
            }
        }
        let c = tube.axis(t);
        let c = [c[0].rem_euclid(torus.side), c[1].rem_euclid(torus.side)];
        for (row, a, b) in disc_rows(grid, c, tube.effective_radius()) {
            fill_row(&mut mask, m, row, a, b, false);
        }
    }
    mask.iter().any(|&b| b).then_some(mask)
}

/// Spatial grid on which both waves are sampled exactly.
pub fn common_grid(a: &FrequencyLattice, b: &FrequencyLattice) -> Result<SpatialGrid> {
    if (a.box_len() - b.box_len()).abs() > 1e-12 * a.box_len() {
        return Err(Error::LatticeMismatch(format!(
            "box lengths {} and {}",
            a.box_len(),
            b.box_len()
        )));
    }
    Ok(SpatialGrid::new(a.points().max(b.points()), a.box_len()))
}

/// `(int_R |phi psi|^2)^{1/2}`.
pub fn product_l2(
    phi: &SpectralWave,
    psi: &SpectralWave,
    region: &Region,
    scheme: &QuadratureScheme,
) -> Result<f64> {
    Ok(product_l2_many(phi, &[psi], std::slice::from_ref(region), scheme)?[0][0])
}

/// `product_l2` for many partners and regions at once; entry `[j][r]` pairs
/// `psis[j]` with `regions[r]`.
pub fn product_l2_many(
    phi: &SpectralWave,
    psis: &[&SpectralWave],
    regions: &[Region],
    scheme: &QuadratureScheme,
) -> Result<Vec<Vec<f64>>> {
    Ok(product_l2_table(&[phi], psis, regions, scheme)?.remove(0))
}

enum SliceMask {
    Full,
    Partial(Vec<bool>),
}

fn slice_mask(region: &Region, torus: Torus, grid: SpatialGrid, t: f64) -> Option<SliceMask> {
    if region.cube.is_none() && region.excluded.is_empty() {
        return region.contains_time(t).then_some(SliceMask::Full);
    }
    region_mask(region, torus, grid, t).map(SliceMask::Partial)
}

/// Entry `[i][j][r]` is `product_l2(phis[i], psis[j], regions[r])`.
pub fn product_l2_table(
    phis: &[&SpectralWave],
    psis: &[&SpectralWave],
    regions: &[Region],
    scheme: &QuadratureScheme,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let slices = product_slice_table(phis, psis, regions, scheme)?;
    Ok(slices
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|per_region| {
                    per_region
                        .into_iter()
                        .map(|s| (scheme.dt * s.iter().sum::<f64>()).sqrt())
                        .collect()
                })
                .collect()
        })
        .collect())
}

/// `int_{R(t_i)} |phi_a psi_b|^2(t_i, x) dx` at every quadrature time, indexed
/// `[a][b][r][i]`. Every wave is evaluated once per time slice and grid size, and
/// every region mask once per slice, so the cost is linear in the number of waves.
pub fn product_slice_table(
    phis: &[&SpectralWave],
    psis: &[&SpectralWave],
    regions: &[Region],
    scheme: &QuadratureScheme,
) -> Result<Vec<Vec<Vec<Vec<f64>>>>> {
    let times = scheme.times();
    let mut out = vec![vec![vec![vec![0.0; times.len()]; regions.len()]; psis.len()]; phis.len()];
    let Some(first) = phis.first().or(psis.first()) else {
        return Ok(out);
    };
    let side = first.lattice().box_len();
    for w in phis.iter().chain(psis) {
        common_grid(first.lattice(), w.lattice())?;
    }
    let phi_points = phis.iter().map(|w| w.lattice().points()).max().unwrap_or(0);
    let size_of = |w: &SpectralWave| w.lattice().points().max(phi_points);
    let mut sizes: Vec<usize> = psis.iter().map(|w| size_of(w)).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let torus = Torus::new(side);
    for size in sizes {
        let grid = SpatialGrid::new(size, side);
        let members: Vec<usize> = (0..psis.len()).filter(|&j| size_of(psis[j]) == size).collect();
        let mut ev_phi: Vec<Evaluator> = phis
            .iter()
            .map(|w| Evaluator::new(w, grid))
            .collect::<Result<_>>()?;
        let mut ev_psi: Vec<Evaluator> = members
            .iter()
            .map(|&j| Evaluator::new(psis[j], grid))
            .collect::<Result<_>>()?;
        let h2 = grid.spacing().powi(2);
        let mut a = vec![vec![0.0f64; grid.len()]; phis.len()];
        let mut b = vec![0.0f64; grid.len()];
        for (ti, &t) in times.iter().enumerate() {
            let masks: Vec<Option<SliceMask>> =
                regions.iter().map(|r| slice_mask(r, torus, grid, t)).collect();
            if masks.iter().all(Option::is_none) {
                continue;
            }
            for (ai, ev) in a.iter_mut().zip(ev_phi.iter_mut()) {
                for (x, z) in ai.iter_mut().zip(ev.eval(t)) {
                    *x = z.norm_sqr();
                }
            }
            for (slot, &j) in members.iter().enumerate() {
                for (y, z) in b.iter_mut().zip(ev_psi[slot].eval(t)) {
                    *y = z.norm_sqr();
                }
                for (i, ai) in a.iter().enumerate() {
                    for (r, mask) in masks.iter().enumerate() {
                        let s: f64 = match mask {
                            None => continue,
                            Some(SliceMask::Full) => ai.iter().zip(&b).map(|(x, y)| x * y).sum(),
                            Some(SliceMask::Partial(m)) => ai
                                .iter()
                                .zip(&b)
                                .zip(m)
                                .map(|((x, y), &keep)| if keep { x * y } else { 0.0 })
                                .sum(),
                        };
                        out[i][j][r][ti] = h2 * s;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `int |phi psi|^2(t_i, x) dx` at every quadrature time, for each partner.
pub fn product_slices(phi: &SpectralWave, psis: &[&SpectralWave], scheme: &QuadratureScheme) -> Result<Vec<Vec<f64>>> {
    let t = product_slice_table(&[phi], psis, &[Region::full(scheme.window)], scheme)?;
    Ok(t.into_iter().next().unwrap().into_iter().map(|mut r| r.remove(0)).collect())
}

/// `(int |phi psi|^p)^{1/p}` over the full window.
pub fn lp_product(phi: &SpectralWave, psi: &SpectralWave, p: f64, scheme: &QuadratureScheme) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("exponent {p} < 1")));
    }
    let grid = common_grid(phi.lattice(), psi.lattice())?;
    let mut a = Evaluator::new(phi, grid)?;
    let mut b = Evaluator::new(psi, grid)?;
    let w = scheme.dt * grid.spacing().powi(2);
    let mut total = 0.0;
    for t in scheme.times() {
        let fa: Vec<f64> = a.eval(t).iter().map(|z| z.norm()).collect();
        let s: f64 = fa
            .iter()
            .zip(b.eval(t))
            .map(|(x, y)| (x * y.norm()).powf(p))
            .sum();
        total += w * s;
    }
    Ok(total.powf(1.0 / p))
}

/// Samples of a wave on its own grid at every quadrature time.
pub struct SliceStack {
    pub grid: SpatialGrid,
    pub times: Vec<f64>,
    pub dt: f64,
    pub window: f64,
    pub slices: Vec<Vec<Complex64>>,
}

impl SliceStack {
    pub fn new(w: &SpectralWave, scheme: &QuadratureScheme) -> Self {
        let grid = w.lattice().grid();
        let mut ev = Evaluator::new(w, grid).expect("own grid always fits");
        let times = scheme.times();
        let slices = times.iter().map(|&t| ev.eval(t).to_vec()).collect();
        Self {
            grid,
            times,
            dt: scheme.dt,
            window: scheme.window,
            slices,
        }
    }

    pub fn torus(&self) -> Torus {
        Torus::new(self.grid.box_len)
    }

    /// Grid argmax of `|w(t_i, .)|` over `tube ∩ omega` at each slice; lowest index
    /// wins ties. `None` for slices where the intersection has no grid point.
    pub fn tube_argmax(&self, tube: &Tube, omega: Option<&Region>) -> Vec<Option<usize>> {
        let torus = self.torus();
        let side = self.grid.box_len;
        self.times
            .iter()
            .zip(&self.slices)
            .map(|(&t, s)| {
                if let Some(l) = tube.half_length() {
                    if (t - tube.t0).abs() > l {
                        return None;
                    }
                }
                if omega.is_some_and(|r| !r.contains_time(t)) {
                    return None;
                }
                let mask = match omega.filter(|r| !r.excluded.is_empty() || r.cube.is_some()) {
                    Some(r) => Some(region_mask(r, torus, self.grid, t)?),
                    None => None,
                };
                let c = tube.axis(t);
                let c = [c[0].rem_euclid(side), c[1].rem_euclid(side)];
                let mut best: Option<(f64, usize)> = None;
                for_each_in_disc(self.grid, c, tube.effective_radius(), |i| {
                    if mask.as_ref().is_some_and(|m| !m[i]) {
                        return;
                    }
                    let v = s[i].norm_sqr();
                    match best {
                        Some((bv, bi)) if v < bv || (v == bv && i > bi) => {}
                        _ => best = Some((v, i)),
                    }
                });
                best.map(|b| b.1)
            })
            .collect()
    }

    /// `( sum_i dt max_{x in T ∩ Omega} |w(t_i, x)|^2 )^{1/2}`.
    pub fn tube_norm(&self, tube: &Tube, omega: Option<&Region>) -> f64 {
        let arg = self.tube_argmax(tube, omega);
        let s: f64 = arg
            .iter()
            .zip(&self.slices)
            .map(|(a, s)| a.map_or(0.0, |i| s[i].norm_sqr()))
            .sum();
        (self.dt * s).sqrt()
    }
}

/// `||phi||_{L^2_t L^inf_x(T ∩ Omega)}` on the wave's own grid.
pub fn l2t_linfx_on_tube(
    phi: &SpectralWave,
    tube: &Tube,
    omega: Option<&Region>,
    scheme: &QuadratureScheme,
) -> f64 {
    let grid = phi.lattice().grid();
    let side = grid.box_len;
    let torus = Torus::new(side);
    let mut ev = Evaluator::new(phi, grid).expect("own grid always fits");
    let mut total = 0.0;
    for t in scheme.times() {
        if let Some(l) = tube.half_length() {
            if (t - tube.t0).abs() > l {
                continue;
            }
        }
        let mask = match omega {
            Some(r) => match region_mask(r, torus, grid, t) {
                Some(m) => Some(m),
                None => continue,
            },
            None => None,
        };
        let c = tube.axis(t);
        let c = [c[0].rem_euclid(side), c[1].rem_euclid(side)];
        let f = ev.eval(t);
        let mut best = 0.0f64;
        for_each_in_disc(grid, c, tube.effective_radius(), |i| {
            if mask.as_ref().is_none_or(|m| m[i]) {
                best = best.max(f[i].norm_sqr());
            }
        });
        total += scheme.dt * best;
    }
    total.sqrt()
}
