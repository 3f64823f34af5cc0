//! Greedy covering of a separated weighted tube family by a few fat tubes, outside
//! of which the weighted indicator sum is at most `delta`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{separation, Extent, Point, SphereSquare, Torus, Tube, SEPARATION_MIN};
use crate::norms::disc_rows;
use crate::wavefield::SpatialGrid;

/// Tubes of common length `2^k` centred at a common time, with weights summing to at most 1.
#[derive(Clone, Debug)]
pub struct WeightedTubeFamily {
    k: u32,
    t0: f64,
    torus: Torus,
    tubes: Vec<Tube>,
    weights: Vec<f64>,
}

fn cell_key(x: [f64; 2], cell: f64, torus: Torus) -> (i64, i64) {
    let w = |v: f64| {
        let v = if torus.side.is_finite() { v.rem_euclid(torus.side) } else { v };
        (v / cell).floor() as i64
    };
    (w(x[0]), w(x[1]))
}

impl WeightedTubeFamily {
    pub fn new(torus: Torus, tubes: Vec<Tube>, weights: Vec<f64>) -> Result<Self> {
        if tubes.len() != weights.len() {
            return Err(Error::InvalidFamily("one weight per tube is required".into()));
        }
        let (k, t0) = match tubes.first() {
            Some(t) => match t.extent {
                Extent::Dyadic(k) => (k, t.t0),
                Extent::Window => {
                    return Err(Error::InvalidFamily("family tubes must be finite".into()))
                }
            },
            None => (0, 0.0),
        };
        for t in &tubes {
            if t.extent != Extent::Dyadic(k) || t.t0 != t0 || t.radius != 1.0 || t.lambda != 1.0 {
                return Err(Error::InvalidFamily(
                    "tubes must be unit 1 x 2^k tubes with common k and centre time".into(),
                ));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidFamily("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidFamily(format!("weights sum to {total} > 1")));
        }
        let fam = Self {
            k,
            t0,
            torus,
            tubes,
            weights,
        };
        if let Some((a, b)) = fam.first_unseparated_pair() {
            return Err(Error::InvalidFamily(format!(
                "tubes {a} and {b} are closer than {SEPARATION_MIN}"
            )));
        }
        Ok(fam)
    }

    /// Pairs with separation below the minimum can only have centres within
    /// `SEPARATION_MIN` of each other, so a bucket grid finds them in linear time.
    fn first_unseparated_pair(&self) -> Option<(usize, usize)> {
        let cell = SEPARATION_MIN;
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, t) in self.tubes.iter().enumerate() {
            buckets.entry(cell_key(t.x0, cell, self.torus)).or_default().push(i);
        }
        let n = if self.torus.side.is_finite() {
            (self.torus.side / cell).round() as i64
        } else {
            i64::MAX
        };
        let wrap = |v: i64| if n == i64::MAX { v } else { v.rem_euclid(n) };
        for (i, t) in self.tubes.iter().enumerate() {
            let (a, b) = cell_key(t.x0, cell, self.torus);
            for da in -1..=1 {
                for db in -1..=1 {
                    if let Some(list) = buckets.get(&(wrap(a + da), wrap(b + db))) {
                        for &j in list {
                            if j > i && separation(self.torus, t, &self.tubes[j], self.k) < SEPARATION_MIN {
                                return Some((i, j));
                            }
                        }
                    }
                }
            }
        }
        None
    }

    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn t0(&self) -> f64 {
        self.t0
    }
    pub fn torus(&self) -> Torus {
        self.torus
    }
    pub fn tubes(&self) -> &[Tube] {
        &self.tubes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn len(&self) -> usize {
        self.tubes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.tubes.is_empty()
    }
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn subfamily(&self, idx: &[usize]) -> Self {
        Self {
            k: self.k,
            t0: self.t0,
            torus: self.torus,
            tubes: idx.iter().map(|&i| self.tubes[i]).collect(),
            weights: idx.iter().map(|&i| self.weights[i]).collect(),
        }
    }

    /// `sum_beta c_beta 1_{T_beta}(p)`.
    pub fn weighted_count(&self, p: Point) -> f64 {
        self.tubes
            .iter()
            .zip(&self.weights)
            .filter(|(t, _)| t.contains(self.torus, p))
            .map(|(_, w)| w)
            .sum()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CoverOptions {
    /// Spacing of the spacetime lattice searched for witness points.
    pub spacing: f64,
    /// Dilation of emitted tubes.
    pub big: f64,
    /// `delta' = factor * delta^2`.
    pub square_factor: f64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self {
            spacing: 0.5,
            big: 8.0,
            square_factor: 1.0 / 16.0,
        }
    }
}

/// One greedy step: the witness point, the tubes through it, and the fat tubes emitted for them.
#[derive(Clone, Debug)]
pub struct CoverClass {
    pub witness: Point,
    pub residual: f64,
    pub members: Vec<usize>,
    pub emitted: Vec<Tube>,
}

#[derive(Clone, Debug)]
pub struct CoverResult {
    pub tubes: Vec<Tube>,
    pub classes: Vec<CoverClass>,
    /// Set when the lattice search could not attribute a violating point to any tube.
    pub search_warning: bool,
}

impl CoverResult {
    pub fn iterations(&self) -> usize {
        self.classes.len()
    }
}

/// Residual weighted sum on a spacetime lattice covering the family's time span.
struct ResidualLattice {
    t0: f64,
    step: f64,
    nt: i64,
    grid: SpatialGrid,
    values: Vec<f64>,
}

impl ResidualLattice {
    fn new(fam: &WeightedTubeFamily, step: f64) -> Result<Self> {
        let side = fam.torus.side;
        let nx = (side / step).round();
        if !side.is_finite() || (nx * step - side).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "search spacing {step} must divide the torus side {side}"
            )));
        }
        let nt = ((fam.k as f64).exp2() / step).floor() as i64;
        let grid = SpatialGrid::new(nx as usize, side);
        let values = vec![0.0; (2 * nt as usize + 1) * grid.len()];
        Ok(Self {
            t0: fam.t0,
            step,
            nt,
            grid,
            values,
        })
    }

    fn time(&self, it: usize) -> f64 {
        self.t0 + (it as i64 - self.nt) as f64 * self.step
    }

    fn point(&self, idx: usize) -> Point {
        let it = idx / self.grid.len();
        Point::new(self.time(it), self.grid.point(idx % self.grid.len()))
    }

    fn add(&mut self, tube: &Tube, w: f64) {
        let m = self.grid.points as i64;
        let side = self.grid.box_len;
        let h = tube.half_length().unwrap_or(f64::INFINITY);
        for it in 0..(2 * self.nt + 1) as usize {
            let t = self.time(it);
            if (t - tube.t0).abs() > h {
                continue;
            }
            let c = tube.axis(t);
            let c = [c[0].rem_euclid(side), c[1].rem_euclid(side)];
            let base = it * self.grid.len();
            for (row, a, b) in disc_rows(self.grid, c, tube.effective_radius()) {
                for j in a..=b {
                    self.values[base + row * self.grid.points + j.rem_euclid(m) as usize] += w;
                }
            }
        }
    }

    /// Largest value, lowest index on ties, i.e. lexicographic in (t, x).
    fn argmax(&self) -> (usize, f64) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }
}

/// Large squares (weight >= `threshold`) none of whose descendants down to
/// `max_level` is large.
pub fn minimal_large_squares(
    directions: &[([f64; 2], f64)],
    threshold: f64,
    max_level: u32,
) -> Vec<SphereSquare> {
    let levels: Vec<BTreeMap<SphereSquare, f64>> = (0..=max_level)
        .map(|j| {
            let mut m = BTreeMap::new();
            for (w, c) in directions {
                *m.entry(SphereSquare::of(*w, j)).or_insert(0.0) += c;
            }
            m
        })
        .collect();
    let large = |q: &SphereSquare| levels[q.level as usize].get(q).is_some_and(|w| *w >= threshold);
    let mut out = Vec::new();
    for map in &levels {
        for q in map.keys() {
            if large(q) && (q.level == max_level || !q.children().iter().any(large)) {
                out.push(*q);
            }
        }
    }
    out
}

/// Emitted tubes for a class: one `C x C 2^k` tube per minimal large square, plus
/// one radius-`C` tube of half-length `C` swallowing the ball `|t-t_j| + |x-x_j| <= C`.
fn emit_for_class(
    fam: &WeightedTubeFamily,
    members: &[usize],
    witness: Point,
    delta: f64,
    opts: &CoverOptions,
) -> Result<Vec<Tube>> {
    let k = fam.k;
    let dirs: Vec<([f64; 2], f64)> = members
        .iter()
        .map(|&i| (fam.tubes[i].omega, fam.weights[i]))
        .collect();
    let squares = minimal_large_squares(&dirs, opts.square_factor * delta * delta, k + 2);
    let mut out = Vec::with_capacity(squares.len() + 1);
    for q in squares {
        out.push(Tube::finite(witness.t, witness.x, q.center(), k).dilate(opts.big)?);
    }
    out.push(Tube::finite(witness.t, witness.x, [1.0, 0.0], 0).dilate(opts.big)?);
    Ok(out)
}

/// The greedy covering algorithm. Classes are collected while some lattice point
/// carries residual weight above `delta / 2`; each class is then summarized by
/// fat tubes in the directions of its minimal large dyadic arcs.
pub fn greedy_tube_cover(fam: &WeightedTubeFamily, delta: f64, opts: &CoverOptions) -> Result<CoverResult> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} not in (0, 1]")));
    }
    let mut result = CoverResult {
        tubes: Vec::new(),
        classes: Vec::new(),
        search_warning: false,
    };
    if fam.is_empty() {
        return Ok(result);
    }
    let mut lat = ResidualLattice::new(fam, opts.spacing)?;
    for (t, w) in fam.tubes.iter().zip(&fam.weights) {
        lat.add(t, *w);
    }
    let mut active = vec![true; fam.len()];
    let cap = (2.0 / delta).ceil() as usize + 1;
    loop {
        let (idx, value) = lat.argmax();
        if value <= delta / 2.0 {
            break;
        }
        let witness = lat.point(idx);
        let members: Vec<usize> = (0..fam.len())
            .filter(|&i| {
                active[i] && {
                    let t = &fam.tubes[i];
                    (witness.t - t.t0).abs() <= t.half_length().unwrap() + 1e-9
                        && t.cross_distance(fam.torus, witness) <= t.effective_radius() + 1e-9
                }
            })
            .collect();
        if members.is_empty() || result.classes.len() >= cap {
            result.search_warning = true;
            lat.values[idx] = 0.0;
            if result.classes.len() >= cap {
                break;
            }
            continue;
        }
        for &i in &members {
            active[i] = false;
            lat.add(&fam.tubes[i], -fam.weights[i]);
        }
        let emitted = emit_for_class(fam, &members, witness, delta, opts)?;
        result.tubes.extend_from_slice(&emitted);
        result.classes.push(CoverClass {
            witness,
            residual: value,
            members,
            emitted,
        });
    }
    Ok(result)
}

/// Bucket index of tubes by unit time cell and spatial cell.
pub struct TubeIndex {
    torus: Torus,
    cell: f64,
    n: i64,
    buckets: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl TubeIndex {
    /// Indexes `tubes` over the time span `t_range`.
    pub fn new(torus: Torus, tubes: &[Tube], t_range: (f64, f64)) -> Self {
        let cell = 2.0;
        let n = (torus.side / cell).ceil() as i64;
        let mut buckets: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (id, tube) in tubes.iter().enumerate() {
            let (mut lo, mut hi) = t_range;
            if let Some(h) = tube.half_length() {
                lo = lo.max(tube.t0 - h);
                hi = hi.min(tube.t0 + h);
            }
            if lo > hi {
                continue;
            }
            let r = tube.effective_radius();
            for tc in lo.floor() as i64..=hi.floor() as i64 {
                let a = tube.axis(tc as f64);
                let b = tube.axis(tc as f64 + 1.0);
                let reach = |i: usize| {
                    let (u, v) = (a[i].min(b[i]) - r, a[i].max(b[i]) + r);
                    ((u / cell).floor() as i64, (v / cell).floor() as i64)
                };
                let (x0, x1) = reach(0);
                let (y0, y1) = reach(1);
                let full_x = x1 - x0 + 1 >= n;
                let full_y = y1 - y0 + 1 >= n;
                let xs: Vec<i64> = if full_x { (0..n).collect() } else { (x0..=x1).map(|v| v.rem_euclid(n)).collect() };
                let ys: Vec<i64> = if full_y { (0..n).collect() } else { (y0..=y1).map(|v| v.rem_euclid(n)).collect() };
                for &i in &xs {
                    for &j in &ys {
                        buckets.entry((tc, i, j)).or_default().push(id as u32);
                    }
                }
            }
        }
        Self {
            torus,
            cell,
            n,
            buckets,
        }
    }

    pub fn candidates(&self, p: Point) -> &[u32] {
        let key = (
            p.t.floor() as i64,
            ((p.x[0].rem_euclid(self.torus.side)) / self.cell).floor() as i64 % self.n,
            ((p.x[1].rem_euclid(self.torus.side)) / self.cell).floor() as i64 % self.n,
        );
        self.buckets.get(&key).map_or(&[], |v| v.as_slice())
    }
}

/// Max of the weighted count over sample points outside every exceptional tube.
/// Samples: every input tube's axis at time spacing 1/2, plus `samples` points
/// drawn uniformly from uniformly chosen input tubes.
pub fn verify_pointwise_bound(
    fam: &WeightedTubeFamily,
    exceptional: &[Tube],
    samples: usize,
    seed: u64,
) -> f64 {
    if fam.is_empty() {
        return 0.0;
    }
    let torus = fam.torus;
    let h = (fam.k as f64).exp2();
    let span = (fam.t0 - h - 1.0, fam.t0 + h + 1.0);
    let input = TubeIndex::new(torus, &fam.tubes, span);
    let exc = TubeIndex::new(torus, exceptional, span);
    let residual = |p: Point| -> f64 {
        if exc
            .candidates(p)
            .iter()
            .any(|&i| exceptional[i as usize].contains(torus, p))
        {
            return 0.0;
        }
        input
            .candidates(p)
            .iter()
            .filter(|&&i| fam.tubes[i as usize].contains(torus, p))
            .map(|&i| fam.weights[i as usize])
            .sum()
    };
    let mut worst = 0.0f64;
    let steps = (2.0 * h / 0.5).round() as i64;
    for tube in &fam.tubes {
        for s in 0..=steps {
            let t = tube.t0 - h + 0.5 * s as f64;
            worst = worst.max(residual(Point::new(t, tube.axis(t))));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let tube = &fam.tubes[rng.random_range(0..fam.len())];
        let t = tube.t0 + h * rng.random_range(-1.0..=1.0);
        let r = tube.effective_radius() * rng.random::<f64>().sqrt();
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        let c = tube.axis(t);
        worst = worst.max(residual(Point::new(t, [c[0] + r * a.cos(), c[1] + r * a.sin()])));
    }
    worst
}

/// Random separated family of up to `count` unit tubes at time `t0 = 0`: about
/// 60% of the tubes pass through one of a few hub points (to create heavy spots),
/// the rest are placed uniformly. Directions lie within `pi/8` of e1; weights are
/// heavy-tailed (`0.01 + u^4`, `u` uniform), positive and sum to 1. Candidates violating separation are redrawn a bounded
/// number of times, so the family may come out smaller than `count`.
pub fn random_separated_family(torus: Torus, k: u32, count: usize, seed: u64) -> Result<WeightedTubeFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = (k as f64).exp2();
    let side = torus.side;
    let hubs: Vec<Point> = (0..1 + count / 40)
        .map(|_| {
            Point::new(
                rng.random_range(-h..h),
                [rng.random_range(0.0..side), rng.random_range(0.0..side)],
            )
        })
        .collect();
    let mut tubes: Vec<Tube> = Vec::with_capacity(count);
    let mut attempts = 0;
    while tubes.len() < count && attempts < 50 * count {
        attempts += 1;
        let omega = crate::geometry::direction(rng.random_range(-PI / 8.0..PI / 8.0));
        let x0 = if rng.random::<f64>() < 0.6 {
            let p = hubs[rng.random_range(0..hubs.len())];
            [p.x[0] - omega[0] * p.t, p.x[1] - omega[1] * p.t]
        } else {
            [rng.random_range(0.0..side), rng.random_range(0.0..side)]
        };
        let x0 = [x0[0].rem_euclid(side), x0[1].rem_euclid(side)];
        let cand = Tube::finite(0.0, x0, omega, k);
        if tubes.iter().all(|t| separation(torus, t, &cand, k) >= SEPARATION_MIN) {
            tubes.push(cand);
        }
    }
    let raw: Vec<f64> = tubes.iter().map(|_| 0.01 + rng.random::<f64>().powi(4)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    WeightedTubeFamily::new(torus, tubes, weights)
}

/// Output budget `K_cov * delta^-3`.
pub const COVER_BUDGET_CONSTANT: f64 = 64.0;
