//! Light-ray tubes, spacetime cubes, sampling regions and the dyadic grid on the circle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spacetime point `(t, x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    pub x: [f64; 2],
}

impl Point {
    pub fn new(t: f64, x: [f64; 2]) -> Self {
        Self { t, x }
    }
}

/// Square torus of side `side`; `side = inf` gives the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Torus {
    pub side: f64,
}

impl Torus {
    pub fn new(side: f64) -> Self {
        Self { side }
    }

    pub fn plane() -> Self {
        Self {
            side: f64::INFINITY,
        }
    }

    /// Representative of `d` in `[-side/2, side/2]`.
    pub fn wrap(&self, d: f64) -> f64 {
        if self.side.is_finite() {
            d - self.side * (d / self.side).round()
        } else {
            d
        }
    }

    pub fn diff(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        [self.wrap(a[0] - b[0]), self.wrap(a[1] - b[1])]
    }

    pub fn dist(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d = self.diff(a, b);
        d[0].hypot(d[1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extent {
    /// Half-length `2^k`.
    Dyadic(u32),
    /// Spans the whole time window.
    Window,
}

/// `{ |t - t0| <= lambda 2^k, |x - x0 - omega (t - t0)| <= lambda r }`, or the
/// window-spanning version without the time condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "TubeRecord", try_from = "TubeRecord")]
pub struct Tube {
    pub t0: f64,
    pub x0: [f64; 2],
    pub omega: [f64; 2],
    pub extent: Extent,
    pub radius: f64,
    pub lambda: f64,
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Unit vector at angle `theta` from e1.
pub fn direction(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

impl Tube {
    pub fn finite(t0: f64, x0: [f64; 2], omega: [f64; 2], k: u32) -> Self {
        Self {
            t0,
            x0,
            omega: unit(omega),
            extent: Extent::Dyadic(k),
            radius: 1.0,
            lambda: 1.0,
        }
    }

    pub fn spanning(x0: [f64; 2], omega: [f64; 2]) -> Self {
        Self {
            t0: 0.0,
            x0,
            omega: unit(omega),
            extent: Extent::Window,
            radius: 1.0,
            lambda: 1.0,
        }
    }

    pub fn is_spanning(&self) -> bool {
        self.extent == Extent::Window
    }

    pub fn effective_radius(&self) -> f64 {
        self.radius * self.lambda
    }

    pub fn half_length(&self) -> Option<f64> {
        match self.extent {
            Extent::Dyadic(k) => Some(self.lambda * (k as f64).exp2()),
            Extent::Window => None,
        }
    }

    /// Time interval covered, clipped to `[-window, window]`.
    pub fn time_range(&self, window: f64) -> (f64, f64) {
        match self.half_length() {
            Some(h) => ((self.t0 - h).max(-window), (self.t0 + h).min(window)),
            None => (-window, window),
        }
    }

    pub fn axis(&self, t: f64) -> [f64; 2] {
        let s = t - self.t0;
        [self.x0[0] + self.omega[0] * s, self.x0[1] + self.omega[1] * s]
    }

    /// Torus distance from `p.x` to the axis point at time `p.t`.
    pub fn cross_distance(&self, torus: Torus, p: Point) -> f64 {
        torus.dist(p.x, self.axis(p.t))
    }

    pub fn contains(&self, torus: Torus, p: Point) -> bool {
        if let Some(h) = self.half_length() {
            if (p.t - self.t0).abs() > h {
                return false;
            }
        }
        self.cross_distance(torus, p) <= self.effective_radius()
    }

    pub fn dilate(&self, lambda: f64) -> Result<Tube> {
        if !(lambda >= 1.0) {
            return Err(Error::InvalidArgument(format!("dilation {lambda} < 1")));
        }
        Ok(Tube {
            lambda: self.lambda * lambda,
            ..*self
        })
    }

    /// Unit cubes centred on the axis at unit time spacing, `t0 + j` for `|j| <= ceil(half-length)`.
    pub fn axis_cubes(&self) -> Result<Vec<Cube>> {
        let h = self
            .half_length()
            .ok_or_else(|| Error::InvalidArgument("window-spanning tube has no cube cover".into()))?;
        let j = h.ceil() as i64;
        Ok((-j..=j)
            .map(|i| {
                let t = self.t0 + i as f64;
                Cube::new(Point::new(t, self.axis(t)), 1.0)
            })
            .collect())
    }
}

#[derive(Serialize, Deserialize)]
struct TubeRecord {
    t0: f64,
    x0: [f64; 2],
    omega: [f64; 2],
    halflength: String,
    radius: f64,
    lambda: f64,
}

impl From<Tube> for TubeRecord {
    fn from(t: Tube) -> Self {
        TubeRecord {
            t0: t.t0,
            x0: t.x0,
            omega: t.omega,
            halflength: match t.extent {
                Extent::Dyadic(k) => format!("2^{k}"),
                Extent::Window => "window".into(),
            },
            radius: t.radius,
            lambda: t.lambda,
        }
    }
}

impl TryFrom<TubeRecord> for Tube {
    type Error = String;
    fn try_from(r: TubeRecord) -> std::result::Result<Self, String> {
        let extent = if r.halflength == "window" {
            Extent::Window
        } else {
            let k = r
                .halflength
                .strip_prefix("2^")
                .and_then(|s| s.parse::<u32>().ok())
                .ok_or_else(|| format!("bad halflength {:?}", r.halflength))?;
            Extent::Dyadic(k)
        };
        let n = r.omega[0].hypot(r.omega[1]);
        if (n - 1.0).abs() > 1e-6 {
            return Err(format!("omega has norm {n}"));
        }
        if r.radius < 1.0 || r.lambda < 1.0 {
            return Err("radius and lambda must be at least 1".into());
        }
        Ok(Tube {
            t0: r.t0,
            x0: r.x0,
            omega: unit(r.omega),
            extent,
            radius: r.radius,
            lambda: r.lambda,
        })
    }
}

/// Covers a finite tube by unit cubes: a `(2m+1)^2` stencil around each axis cube,
/// `m = ceil(effective radius)`. For unit tubes that is at most 27 * 2^k cubes.
pub fn cover_tube_by_unit_cubes(tube: &Tube) -> Result<Vec<Cube>> {
    let m = tube.effective_radius().ceil() as i64;
    let mut out = Vec::new();
    for q in tube.axis_cubes()? {
        for a in -m..=m {
            for b in -m..=m {
                let x = [q.center.x[0] + a as f64, q.center.x[1] + b as f64];
                out.push(Cube::new(Point::new(q.center.t, x), 1.0));
            }
        }
    }
    Ok(out)
}

/// Constant in "at most C * 2^k unit cubes" for unit tubes.
pub const CUBE_COVER_CONSTANT: usize = 27;

/// Axis-parallel spacetime cube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Point,
    pub side: f64,
}

impl Cube {
    pub fn new(center: Point, side: f64) -> Self {
        Self { center, side }
    }

    pub fn contains(&self, torus: Torus, p: Point) -> bool {
        let h = self.side / 2.0;
        let d = torus.diff(p.x, self.center.x);
        (p.t - self.center.t).abs() <= h && d[0].abs() <= h && d[1].abs() <= h
    }

    /// Same centre, sidelength `(1 - c) * side`.
    pub fn shrink(&self, c: f64) -> Result<Cube> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidArgument(format!("shrink factor {c} not in (0,1)")));
        }
        Ok(Cube::new(self.center, (1.0 - c) * self.side))
    }

    /// Whether the cube meets `tube`. The distance from a moving axis point to the
    /// cube's cross-section is convex in t, so a coarse scan plus a local ternary
    /// refinement finds its minimum.
    pub fn touches(&self, torus: Torus, tube: &Tube) -> bool {
        let h = self.side / 2.0;
        let (mut lo, mut hi) = (self.center.t - h, self.center.t + h);
        if let Some(l) = tube.half_length() {
            lo = lo.max(tube.t0 - l);
            hi = hi.min(tube.t0 + l);
        }
        if lo > hi {
            return false;
        }
        let r = tube.effective_radius();
        let dist = |t: f64| {
            let d = torus.diff(tube.axis(t), self.center.x);
            let e = [(d[0].abs() - h).max(0.0), (d[1].abs() - h).max(0.0)];
            e[0].hypot(e[1])
        };
        let steps = 16;
        let mut best = (f64::INFINITY, lo);
        for i in 0..=steps {
            let t = lo + (hi - lo) * i as f64 / steps as f64;
            let d = dist(t);
            if d < best.0 {
                best = (d, t);
            }
        }
        let w = (hi - lo) / steps as f64;
        let (mut a, mut b) = ((best.1 - w).max(lo), (best.1 + w).min(hi));
        for _ in 0..60 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if dist(m1) <= dist(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        best.0.min(dist(0.5 * (a + b))) <= r
    }
}

/// Time interval, minus a union of tubes, optionally intersected with a cube.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub t_range: (f64, f64),
    pub excluded: Vec<Tube>,
    pub cube: Option<Cube>,
}

impl Region {
    pub fn slab(t0: f64, t1: f64) -> Self {
        Self {
            t_range: (t0, t1),
            excluded: Vec::new(),
            cube: None,
        }
    }

    pub fn full(window: f64) -> Self {
        Self::slab(-window, window)
    }

    pub fn excluding(mut self, tubes: &[Tube]) -> Self {
        self.excluded.extend_from_slice(tubes);
        self
    }

    pub fn within(mut self, cube: Cube) -> Self {
        self.cube = Some(cube);
        self
    }

    pub fn contains_time(&self, t: f64) -> bool {
        let in_cube = self
            .cube
            .is_none_or(|c| (t - c.center.t).abs() <= c.side / 2.0);
        t >= self.t_range.0 && t <= self.t_range.1 && in_cube
    }

    pub fn contains(&self, torus: Torus, p: Point) -> bool {
        self.contains_time(p.t)
            && self.cube.is_none_or(|c| c.contains(torus, p))
            && !self.excluded.iter().any(|t| t.contains(torus, p))
    }
}

/// Minimum of `|x - x'| + 2^k |omega - omega'|` for separated tube families.
pub const SEPARATION_MIN: f64 = 0.5;

pub fn separation(torus: Torus, a: &Tube, b: &Tube, k: u32) -> f64 {
    let dw = (a.omega[0] - b.omega[0]).hypot(a.omega[1] - b.omega[1]);
    torus.dist(a.x0, b.x0) + (k as f64).exp2() * dw
}

pub fn separated(torus: Torus, a: &Tube, b: &Tube, k: u32) -> bool {
    separation(torus, a, b, k) >= SEPARATION_MIN
}

/// Lipschitz constants `(lower, upper)` of the circle chart: for directions in one
/// hemisphere with chart coordinates `u, u'`, `lower |u - u'| <= |w - w'| <= upper |u - u'|`.
pub const SPHERE_CHART_BILIPSCHITZ: (f64, f64) = (2.0, PI);

/// Dyadic arc of the circle. The circle is split into the hemisphere centred on e1
/// (`hemisphere = 0`) and its opposite; each is charted to `[0, 1)` by normalized
/// angle and cut into `2^level` equal arcs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SphereSquare {
    pub hemisphere: u8,
    pub level: u32,
    pub index: u64,
}

fn chart(omega: [f64; 2]) -> (u8, f64) {
    let u = (omega[1].atan2(omega[0]) + PI / 2.0).rem_euclid(2.0 * PI);
    let h = if u < PI { 0 } else { 1 };
    (h, ((u - PI * h as f64) / PI).clamp(0.0, 1.0 - f64::EPSILON))
}

impl SphereSquare {
    pub fn of(omega: [f64; 2], level: u32) -> Self {
        let (hemisphere, s) = chart(omega);
        let n = 1u64 << level;
        SphereSquare {
            hemisphere,
            level,
            index: ((s * n as f64) as u64).min(n - 1),
        }
    }

    pub fn contains(&self, omega: [f64; 2]) -> bool {
        Self::of(omega, self.level) == *self
    }

    pub fn center(&self) -> [f64; 2] {
        let s = (self.index as f64 + 0.5) / (1u64 << self.level) as f64;
        direction(PI * (self.hemisphere as f64 + s) - PI / 2.0)
    }

    /// Chart length; the arc length is `pi` times this.
    pub fn chart_length(&self) -> f64 {
        1.0 / (1u64 << self.level) as f64
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| SphereSquare {
            hemisphere: self.hemisphere,
            level: self.level - 1,
            index: self.index / 2,
        })
    }

    pub fn children(&self) -> [Self; 2] {
        let c = |i| SphereSquare {
            hemisphere: self.hemisphere,
            level: self.level + 1,
            index: 2 * self.index + i,
        };
        [c(0), c(1)]
    }

    pub fn is_within(&self, other: &SphereSquare) -> bool {
        self.hemisphere == other.hemisphere
            && self.level >= other.level
            && self.index >> (self.level - other.level) == other.index
    }
}

/// All `2 * 2^j` arcs at level `j`.
pub fn dyadic_sphere_grid(level: u32) -> Vec<SphereSquare> {
    (0..2u8)
        .flat_map(|h| {
            (0..1u64 << level).map(move |i| SphereSquare {
                hemisphere: h,
                level,
                index: i,
            })
        })
        .collect()
}
