//! Cone waves on a periodic box: frequency lattices, coefficient storage,
//! exact spectral propagation, mass and margin, and the standard constructors.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::InverseFft2;
use crate::geometry::{Point, Tube};

/// Half-aperture of the red and blue sectors around e1.
pub const SECTOR_HALF_ANGLE: f64 = PI / 8.0;
/// Smallest margin the constructors are meant to deliver.
pub const DEFAULT_MARGIN: f64 = 1.0 / 20.0;
/// Fourier radius of the unit-cube bump.
pub const CUBE_BUMP_RADIUS: f64 = 0.45;
/// Centre of the unit-cube bump, in units of e1.
pub const CUBE_BUMP_CENTER: f64 = 1.5;
/// Lower bound `kappa_0` of `|phi|` on the unit cube of a cube bump.
pub const KAPPA_0: f64 = 0.25;
/// Lower bound `kappa_1` of the unit-disc mass of a tube wave for `|t - t0| <= 2^k`.
pub const KAPPA_1: f64 = 0.8;
/// Sup bound `C_B` of mass-1 random red waves at frequency 1.
pub const BERNSTEIN_CEILING: f64 = 0.1;
/// A tube wave keeps half its mass within this distance of its axis.
pub const LOCALIZATION_RADIUS: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
    None,
}

impl Color {
    pub fn to_byte(self) -> u8 {
        match self {
            Color::None => 0,
            Color::Red => 1,
            Color::Blue => 2,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Color::None),
            1 => Some(Color::Red),
            2 => Some(Color::Blue),
            _ => None,
        }
    }
}

impl std::str::FromStr for Color {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "red" => Ok(Color::Red),
            "blue" => Ok(Color::Blue),
            "none" => Ok(Color::None),
            _ => Err(Error::InvalidArgument(format!("unknown color {s:?}"))),
        }
    }
}

pub(crate) fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// C-infinity step: 0 for u <= 0, 1 for u >= 1, and `step(u) + step(1-u) = 1`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

/// Angle between a nonzero vector and e1, in [0, pi].
pub fn angle_from_e1(v: [f64; 2]) -> f64 {
    v[1].atan2(v[0]).abs()
}

/// Unsigned angle between two nonzero vectors.
pub fn angle_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a[0] * b[0] + a[1] * b[1];
    cross.atan2(dot).abs()
}

/// Membership in the closed sector-annulus {angle <= pi/8, 1 <= |z| <= 2}.
pub fn in_sector_annulus(z: [f64; 2]) -> bool {
    const TOL: f64 = 1e-12;
    let r = z[0].hypot(z[1]);
    (1.0 - TOL..=2.0 + TOL).contains(&r) && angle_from_e1(z) <= SECTOR_HALF_ANGLE + TOL
}

fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    (p[0] - a[0] - s * d[0]).hypot(p[1] - a[1] - s * d[1])
}

fn dist_to_arc(p: [f64; 2], radius: f64) -> f64 {
    let a = SECTOR_HALF_ANGLE;
    let theta = p[1].atan2(p[0]);
    if theta.abs() <= a {
        (p[0].hypot(p[1]) - radius).abs()
    } else {
        let e = [radius * a.cos(), radius * a.sin() * theta.signum()];
        (p[0] - e[0]).hypot(p[1] - e[1])
    }
}

/// Euclidean distance from `z` to the boundary of the sector-annulus.
pub fn sector_boundary_distance(z: [f64; 2]) -> f64 {
    let a = SECTOR_HALF_ANGLE;
    let (c, s) = (a.cos(), a.sin());
    let upper = dist_to_segment(z, [c, s], [2.0 * c, 2.0 * s]);
    let lower = dist_to_segment(z, [c, -s], [2.0 * c, -2.0 * s]);
    dist_to_arc(z, 1.0)
        .min(dist_to_arc(z, 2.0))
        .min(upper)
        .min(lower)
}

/// Margin contribution of a single frequency of a frequency-2^k wave:
/// boundary distance after rescaling if inside, 0 otherwise.
pub fn frequency_margin(xi: [f64; 2], k: u32) -> f64 {
    let s = (-(k as f64)).exp2();
    let z = [xi[0] * s, xi[1] * s];
    if in_sector_annulus(z) {
        sector_boundary_distance(z)
    } else {
        0.0
    }
}

/// Side length (frequency units) of the smallest square holding the rescaled sector at 2^k.
pub fn sector_span(k: u32) -> f64 {
    let s = (k as f64).exp2();
    let a = SECTOR_HALF_ANGLE;
    (2.0 * s - s * a.cos()).max(4.0 * s * a.sin())
}

/// Frequency-box width used for waves at 2^k: a power of two, at least 4, strictly
/// larger than the support span of a (k=0, k) product so that squared moduli of
/// red-blue products are integrated without aliasing.
pub fn band_box_width(k: u32) -> usize {
    let need = sector_span(0) + sector_span(k);
    let mut w = 4usize;
    while (w as f64) <= need {
        w *= 2;
    }
    w
}

/// A square frequency window of `points^2` lattice frequencies `(center + m) / L`,
/// `m in {-N/2, ..., N/2 - 1}^2`, on the torus of side `L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyLattice {
    dim: usize,
    points: usize,
    box_len: f64,
    center: [i64; 2],
}

impl FrequencyLattice {
    pub fn new(dim: usize, points: usize, box_len: f64) -> Result<Self> {
        Self::with_center(dim, points, box_len, [0, 0])
    }

    pub fn with_center(dim: usize, points: usize, box_len: f64, center: [i64; 2]) -> Result<Self> {
        if dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if points < 16 || !points.is_multiple_of(2) {
            return Err(Error::InvalidLattice(format!(
                "points per axis must be even and >= 16, got {points}"
            )));
        }
        if !(box_len.is_finite() && box_len > 0.0) {
            return Err(Error::InvalidLattice(format!("box length {box_len}")));
        }
        if box_len / points as f64 > 0.25 + 1e-12 {
            return Err(Error::InvalidLattice(format!(
                "spatial step {} exceeds 1/4",
                box_len / points as f64
            )));
        }
        Ok(Self {
            dim,
            points,
            box_len,
            center,
        })
    }

    /// Lattice for waves of frequency 2^k: centred on `1.5 * 2^k * e1`, wide enough
    /// for the sector and for products with frequency-1 waves.
    pub fn for_band(k: u32, box_len: f64, min_points: usize) -> Result<Self> {
        if k > 12 {
            return Err(Error::Resolution(format!("k = {k} is beyond the grid")));
        }
        let need = (box_len * band_box_width(k) as f64).ceil() as usize;
        let points = need.max(min_points).next_multiple_of(2);
        let c = (1.5 * (k as f64).exp2() * box_len).round() as i64;
        Self::with_center(2, points, box_len, [c, 0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn points(&self) -> usize {
        self.points
    }
    pub fn box_len(&self) -> f64 {
        self.box_len
    }
    pub fn center(&self) -> [i64; 2] {
        self.center
    }
    pub fn len(&self) -> usize {
        self.points * self.points
    }
    pub fn is_empty(&self) -> bool {
        self.points == 0
    }
    pub fn spacing(&self) -> f64 {
        self.box_len / self.points as f64
    }
    pub fn frequency_step(&self) -> f64 {
        1.0 / self.box_len
    }

    /// Integer mode of a storage index.
    pub fn mode(&self, idx: usize) -> [i64; 2] {
        let n = self.points;
        let h = (n / 2) as i64;
        [
            self.center[0] + (idx / n) as i64 - h,
            self.center[1] + (idx % n) as i64 - h,
        ]
    }

    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        let m = self.mode(idx);
        [m[0] as f64 / self.box_len, m[1] as f64 / self.box_len]
    }

    pub fn index_of_mode(&self, m: [i64; 2]) -> Option<usize> {
        let h = (self.points / 2) as i64;
        let a = m[0] - self.center[0] + h;
        let b = m[1] - self.center[1] + h;
        let n = self.points as i64;
        (0..n).contains(&a).then_some(())?;
        (0..n).contains(&b).then_some(())?;
        Some((a * n + b) as usize)
    }

    /// Spatial grid with one sample per lattice point.
    pub fn grid(&self) -> SpatialGrid {
        SpatialGrid {
            points: self.points,
            box_len: self.box_len,
        }
    }

    /// Whether every frequency of the sector-annulus at 2^k has a slot in this box.
    pub fn covers_band(&self, k: u32) -> bool {
        let s = (k as f64).exp2();
        let a = SECTOR_HALF_ANGLE;
        let lo = [s * a.cos(), -2.0 * s * a.sin()];
        let hi = [2.0 * s, 2.0 * s * a.sin()];
        let h = (self.points / 2) as f64;
        (0..2).all(|i| {
            let c = self.center[i] as f64;
            (c - h) / self.box_len <= lo[i] && (c + h - 1.0) / self.box_len >= hi[i]
        })
    }
}

/// Uniform grid `x = (i0 h, i1 h)` on the torus of side `L`, stored row-major in `i0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub points: usize,
    pub box_len: f64,
}

impl SpatialGrid {
    pub fn new(points: usize, box_len: f64) -> Self {
        Self { points, box_len }
    }
    pub fn spacing(&self) -> f64 {
        self.box_len / self.points as f64
    }
    pub fn len(&self) -> usize {
        self.points * self.points
    }
    pub fn is_empty(&self) -> bool {
        self.points == 0
    }
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }
    pub fn point(&self, idx: usize) -> [f64; 2] {
        [self.coord(idx / self.points), self.coord(idx % self.points)]
    }
    /// Nearest grid index along one axis, wrapped.
    pub fn nearest(&self, x: f64) -> usize {
        let m = self.points as i64;
        ((x / self.spacing()).round() as i64).rem_euclid(m) as usize
    }
}

/// Fourier coefficients of a wave: `c_plus` for the `+|xi|` sheet (red) and
/// `c_minus` for the `-|xi|` sheet (blue), stored in lattice index order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralWave {
    lattice: FrequencyLattice,
    plus: Vec<Complex64>,
    minus: Vec<Complex64>,
    color: Color,
    k: u32,
}

impl SpectralWave {
    pub fn zero(lattice: FrequencyLattice, color: Color, k: u32) -> Self {
        let n = lattice.len();
        Self {
            lattice,
            plus: vec![Complex64::default(); n],
            minus: vec![Complex64::default(); n],
            color,
            k,
        }
    }

    pub fn from_coefficients(
        lattice: FrequencyLattice,
        color: Color,
        k: u32,
        plus: Vec<Complex64>,
        minus: Vec<Complex64>,
    ) -> Result<Self> {
        if plus.len() != lattice.len() || minus.len() != lattice.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients per sheet",
                lattice.len()
            )));
        }
        let w = Self {
            lattice,
            plus,
            minus,
            color,
            k,
        };
        w.validate()?;
        Ok(w)
    }

    /// Checks the color/support invariant by scanning nonzero coefficients.
    pub fn validate(&self) -> Result<()> {
        let (live, dead) = match self.color {
            Color::None => return Ok(()),
            Color::Red => (&self.plus, &self.minus),
            Color::Blue => (&self.minus, &self.plus),
        };
        if dead.iter().any(|c| *c != Complex64::default()) {
            return Err(Error::InvalidArgument(format!(
                "{:?} wave has coefficients on the wrong sheet",
                self.color
            )));
        }
        let s = (-(self.k as f64)).exp2();
        for (i, c) in live.iter().enumerate() {
            if *c != Complex64::default() {
                let xi = self.lattice.frequency(i);
                if !in_sector_annulus([xi[0] * s, xi[1] * s]) {
                    return Err(Error::InvalidArgument(format!(
                        "coefficient at {xi:?} lies outside the 2^{} sector",
                        self.k
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }
    pub fn color(&self) -> Color {
        self.color
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn plus(&self) -> &[Complex64] {
        &self.plus
    }
    pub fn minus(&self) -> &[Complex64] {
        &self.minus
    }

    pub fn mass(&self) -> f64 {
        let s: f64 = self
            .plus
            .iter()
            .chain(self.minus.iter())
            .map(|c| c.norm_sqr())
            .sum();
        s / self.lattice.box_len().powi(2)
    }

    pub fn is_zero(&self) -> bool {
        self.plus
            .iter()
            .chain(self.minus.iter())
            .all(|c| *c == Complex64::default())
    }

    /// Distance of the rescaled support to the sector-annulus boundary.
    /// A zero wave has margin 1 (vacuous infimum, capped).
    pub fn margin(&self) -> Result<f64> {
        let live = match self.color {
            Color::None => return Err(Error::MarginUndefined),
            Color::Red => &self.plus,
            Color::Blue => &self.minus,
        };
        let mut m = 1.0f64;
        for (i, c) in live.iter().enumerate() {
            if *c != Complex64::default() {
                m = m.min(frequency_margin(self.lattice.frequency(i), self.k));
            }
        }
        Ok(m)
    }

    pub fn scale(&mut self, s: f64) {
        for c in self.plus.iter_mut().chain(self.minus.iter_mut()) {
            *c *= s;
        }
    }

    pub fn normalize_mass(&mut self, target: f64) -> Result<()> {
        let m = self.mass();
        if m == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize a zero wave".into()));
        }
        self.scale((target / m).sqrt());
        Ok(())
    }

    fn check_same_lattice(&self, other: &SpectralWave) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch(format!(
                "{:?} vs {:?}",
                self.lattice, other.lattice
            )));
        }
        Ok(())
    }

    /// `<self(0), other(0)>` in L^2_x, computed from the coefficients.
    pub fn inner(&self, other: &SpectralWave) -> Result<Complex64> {
        self.check_same_lattice(other)?;
        let mut s = Complex64::default();
        for (a, b) in self.plus.iter().zip(&other.plus) {
            s += a * b.conj();
        }
        for (a, b) in self.minus.iter().zip(&other.minus) {
            s += a * b.conj();
        }
        Ok(s / self.lattice.box_len().powi(2))
    }

    /// `self -= mu * other`.
    pub fn subtract_scaled(&mut self, mu: f64, other: &SpectralWave) -> Result<()> {
        self.check_same_lattice(other)?;
        for (a, b) in self.plus.iter_mut().zip(&other.plus) {
            *a -= b * mu;
        }
        for (a, b) in self.minus.iter_mut().zip(&other.minus) {
            *a -= b * mu;
        }
        Ok(())
    }

    /// Direct (non-FFT) evaluation at a single spacetime point.
    pub fn evaluate_point(&self, t: f64, x: [f64; 2]) -> Complex64 {
        let mut s = Complex64::default();
        for i in 0..self.lattice.len() {
            let (p, m) = (self.plus[i], self.minus[i]);
            if p == Complex64::default() && m == Complex64::default() {
                continue;
            }
            let xi = self.lattice.frequency(i);
            let r = xi[0].hypot(xi[1]);
            let e = Complex64::from_polar(1.0, TAU * (x[0] * xi[0] + x[1] * xi[1]));
            s += (p * Complex64::from_polar(1.0, TAU * t * r)
                + m * Complex64::from_polar(1.0, -TAU * t * r))
                * e;
        }
        s / self.lattice.box_len().powi(2)
    }

    /// The spatial field at time `t` on the wave's own grid.
    pub fn evaluate(&self, t: f64) -> Vec<Complex64> {
        let mut ev = Evaluator::new(self, self.lattice.grid()).expect("own grid always fits");
        ev.eval(t).to_vec()
    }
}

struct Entry {
    slot: usize,
    rate: f64,
    plus: Complex64,
    minus: Complex64,
}

/// Repeated evaluation of one wave on a spatial grid. Modes are folded onto the
/// grid, which is exact as long as no two live modes collide modulo the grid size.
pub struct Evaluator {
    grid: SpatialGrid,
    fft: InverseFft2,
    entries: Vec<Entry>,
    rows: Vec<usize>,
    buf: Vec<Complex64>,
    // Phases at `last_t` and the per-entry rotation for the last time step.
    phase: Vec<Complex64>,
    rotation: Vec<Complex64>,
    last_t: Option<f64>,
    last_step: f64,
}

impl Evaluator {
    pub fn new(wave: &SpectralWave, grid: SpatialGrid) -> Result<Self> {
        let lat = wave.lattice();
        if (grid.box_len - lat.box_len()).abs() > 1e-12 * lat.box_len() {
            return Err(Error::LatticeMismatch(format!(
                "grid box {} vs lattice box {}",
                grid.box_len,
                lat.box_len()
            )));
        }
        let m = grid.points as i64;
        let norm = 1.0 / lat.box_len().powi(2);
        let mut used = vec![false; grid.len()];
        let mut entries = Vec::new();
        for i in 0..lat.len() {
            let (p, q) = (wave.plus[i], wave.minus[i]);
            if p == Complex64::default() && q == Complex64::default() {
                continue;
            }
            let mode = lat.mode(i);
            let slot = (mode[0].rem_euclid(m) * m + mode[1].rem_euclid(m)) as usize;
            if used[slot] {
                return Err(Error::Resolution(format!(
                    "modes collide on a {}-point grid",
                    grid.points
                )));
            }
            used[slot] = true;
            let xi = lat.frequency(i);
            entries.push(Entry {
                slot,
                rate: TAU * xi[0].hypot(xi[1]),
                plus: p * norm,
                minus: q * norm,
            });
        }
        let mut rows: Vec<usize> = entries.iter().map(|e| e.slot / grid.points).collect();
        rows.sort_unstable();
        rows.dedup();
        Ok(Self {
            grid,
            fft: InverseFft2::new(grid.points),
            phase: vec![Complex64::default(); entries.len()],
            rotation: vec![Complex64::default(); entries.len()],
            entries,
            rows,
            buf: vec![Complex64::default(); grid.len()],
            last_t: None,
            last_step: f64::NAN,
        })
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    /// Samples at time `t`. Consecutive calls with a repeated time step advance
    /// the phases by rotation instead of recomputing them.
    pub fn eval(&mut self, t: f64) -> &[Complex64] {
        self.advance(t);
        self.buf.fill(Complex64::default());
        for (e, ph) in self.entries.iter().zip(&self.phase) {
            self.buf[e.slot] = e.plus * ph + e.minus * ph.conj();
        }
        self.fft.process_rows(&mut self.buf, &self.rows);
        &self.buf
    }

    fn advance(&mut self, t: f64) {
        let polar = |x: f64| {
            let (s, c) = x.sin_cos();
            Complex64::new(c, s)
        };
        match self.last_t {
            Some(last) if last == t => {}
            Some(last) => {
                let step = t - last;
                if step != self.last_step {
                    for (r, e) in self.rotation.iter_mut().zip(&self.entries) {
                        *r = polar(e.rate * step);
                    }
                    self.last_step = step;
                }
                for (p, r) in self.phase.iter_mut().zip(&self.rotation) {
                    *p *= r;
                }
            }
            None => {
                for (p, e) in self.phase.iter_mut().zip(&self.entries) {
                    *p = polar(e.rate * t);
                }
            }
        }
        self.last_t = Some(t);
    }
}

fn check_band(lattice: &FrequencyLattice, k: u32) -> Result<()> {
    if lattice.dim() != 2 {
        return Err(Error::UnsupportedDimension(lattice.dim()));
    }
    if !lattice.covers_band(k) {
        return Err(Error::Resolution(format!(
            "frequency box does not contain the sector at 2^{k}"
        )));
    }
    Ok(())
}

/// Amplitude of the unit-cube bump at each lattice point (unnormalized).
/// Flat on the inner half of the disc so that neighbouring cubes decorrelate.
fn cube_bump_amplitude(lattice: &FrequencyLattice, radius: f64) -> Vec<f64> {
    (0..lattice.len())
        .map(|i| {
            let xi = lattice.frequency(i);
            smooth_step(2.0 * (1.0 - (xi[0] - CUBE_BUMP_CENTER).hypot(xi[1]) / radius))
        })
        .collect()
}

fn bump_radius(lattice: &FrequencyLattice, m_min: f64) -> Result<f64> {
    let r = CUBE_BUMP_RADIUS.min(0.5 - m_min);
    if r < 3.0 / lattice.box_len() {
        return Err(Error::InfeasibleMargin {
            requested: m_min,
            reason: "no room left for a bump inside the sector".into(),
        });
    }
    Ok(r)
}

/// `e^{-2 pi i (t |xi| + x.xi)}`, the modulation moving a packet to (t, x).
fn translation(xi: [f64; 2], p: Point) -> Complex64 {
    let r = xi[0].hypot(xi[1]);
    Complex64::from_polar(1.0, -TAU * (p.t * r + p.x[0] * xi[0] + p.x[1] * xi[1]))
}

/// Red frequency-1 wave of mass 1 concentrated on the unit cube centred at `center`.
pub fn make_red_cube_bump(lattice: &FrequencyLattice, center: Point, m_min: f64) -> Result<SpectralWave> {
    check_band(lattice, 0)?;
    let radius = bump_radius(lattice, m_min)?;
    let amp = cube_bump_amplitude(lattice, radius);
    let mut w = SpectralWave::zero(lattice.clone(), Color::Red, 0);
    for (i, a) in amp.iter().enumerate() {
        if *a > 0.0 {
            w.plus[i] = translation(lattice.frequency(i), center) * *a;
        }
    }
    w.normalize_mass(1.0)?;
    Ok(w)
}

/// Blue wave of frequency 2^k and mass 1 concentrated on the tube through
/// `(t0, x0)` in direction `(1, omega)` for `|t - t0| <~ 2^k`.
pub fn make_blue_tube_wave(
    lattice: &FrequencyLattice,
    t0: f64,
    x0: [f64; 2],
    omega: [f64; 2],
    k: u32,
) -> Result<SpectralWave> {
    check_band(lattice, k)?;
    let norm = omega[0].hypot(omega[1]);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let omega = [omega[0] / norm, omega[1] / norm];
    if angle_from_e1(omega) > SECTOR_HALF_ANGLE {
        return Err(Error::InvalidArgument(format!(
            "direction is {:.4} rad from e1, outside the blue sector",
            angle_from_e1(omega)
        )));
    }
    let s = (k as f64).exp2();
    let aperture = 1.0 / s;
    let mut w = SpectralWave::zero(lattice.clone(), Color::Blue, k);
    let mut live = 0usize;
    for i in 0..lattice.len() {
        let xi = lattice.frequency(i);
        let r = xi[0].hypot(xi[1]);
        if r == 0.0 {
            continue;
        }
        let a = bump((r - 1.5 * s) / (0.5 * s))
            * bump(angle_between(xi, omega) / aperture)
            * bump(angle_from_e1(xi) / SECTOR_HALF_ANGLE);
        if a > 0.0 {
            live += 1;
            let r = xi[0].hypot(xi[1]);
            let ph = TAU * (t0 * r - x0[0] * xi[0] - x0[1] * xi[1]);
            w.minus[i] = Complex64::from_polar(a, ph);
        }
    }
    if live < 4 {
        return Err(Error::Resolution(format!(
            "sector of aperture 2^-{k} holds only {live} lattice frequencies"
        )));
    }
    w.normalize_mass(1.0)?;
    Ok(w)
}

/// Signed sum of unit-cube bumps on the axis cubes of `tube`, with iid signs
/// drawn from `seed`. `coeffs` is indexed like [`Tube::axis_cubes`].
pub fn make_red_cube_train(
    lattice: &FrequencyLattice,
    tube: &Tube,
    coeffs: &[f64],
    seed: u64,
) -> Result<SpectralWave> {
    check_band(lattice, 0)?;
    let cubes = tube.axis_cubes()?;
    if coeffs.len() != cubes.len() {
        return Err(Error::InvalidArgument(format!(
            "tube has {} axis cubes but {} coefficients were given",
            cubes.len(),
            coeffs.len()
        )));
    }
    let radius = bump_radius(lattice, DEFAULT_MARGIN)?;
    let mut amp = cube_bump_amplitude(lattice, radius);
    let mass: f64 = amp.iter().map(|a| a * a).sum::<f64>() / lattice.box_len().powi(2);
    for a in amp.iter_mut() {
        *a /= mass.sqrt();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs: Vec<f64> = cubes
        .iter()
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let mut w = SpectralWave::zero(lattice.clone(), Color::Red, 0);
    for (i, a) in amp.iter().enumerate() {
        if *a == 0.0 {
            continue;
        }
        let xi = lattice.frequency(i);
        let mut s = Complex64::default();
        for ((q, c), e) in cubes.iter().zip(coeffs).zip(&signs) {
            if *c != 0.0 {
                s += translation(xi, q.center) * (c * e);
            }
        }
        w.plus[i] = s * *a;
    }
    Ok(w)
}

/// Mass-1 wave with iid complex Gaussian coefficients on the lattice frequencies
/// whose margin is at least `m_min`.
pub fn random_colored_wave(
    lattice: &FrequencyLattice,
    color: Color,
    k: u32,
    m_min: f64,
    seed: u64,
) -> Result<SpectralWave> {
    if color == Color::None {
        return Err(Error::InvalidArgument("random waves need a color".into()));
    }
    check_band(lattice, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = SpectralWave::zero(lattice.clone(), color, k);
    let mut live = 0usize;
    for i in 0..lattice.len() {
        if frequency_margin(lattice.frequency(i), k) >= m_min && m_min < 0.5 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let c = Complex64::new(re, im);
            match color {
                Color::Red => w.plus[i] = c,
                _ => w.minus[i] = c,
            }
            live += 1;
        }
    }
    if live == 0 {
        return Err(Error::InfeasibleMargin {
            requested: m_min,
            reason: "no lattice frequency has that margin".into(),
        });
    }
    w.normalize_mass(1.0)?;
    Ok(w)
}

/// Mass-1 blue wave made of `packets` tube waves with random centres in
/// `[-8, 8] x torus`, random in-sector directions and complex Gaussian amplitudes.
pub fn random_blue_packets(lattice: &FrequencyLattice, k: u32, packets: usize, seed: u64) -> Result<SpectralWave> {
    if packets == 0 {
        return Err(Error::InvalidArgument("at least one packet is needed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = lattice.box_len();
    let mut w = SpectralWave::zero(lattice.clone(), Color::Blue, k);
    for _ in 0..packets {
        let t0 = rng.random_range(-8.0..8.0);
        let x0 = [rng.random_range(0.0..side), rng.random_range(0.0..side)];
        let theta = rng.random_range(-0.75 * SECTOR_HALF_ANGLE..0.75 * SECTOR_HALF_ANGLE);
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let p = make_blue_tube_wave(lattice, t0, x0, [theta.cos(), theta.sin()], k)?;
        for (a, b) in w.minus.iter_mut().zip(&p.minus) {
            *a += b * Complex64::new(re, im);
        }
    }
    w.normalize_mass(1.0)?;
    Ok(w)
}
