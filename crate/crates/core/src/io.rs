//! File formats: CWAV1 wave files with a JSON sidecar, tube lists, CSV tables and
//! PPM heatmaps.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Torus, Tube};
use crate::norms::disc_rows;
use crate::wavefield::{Color, FrequencyLattice, SpatialGrid, SpectralWave};

pub const MAGIC: &[u8; 5] = b"CWAV1";

/// Header fields of a wave file, also written as the JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveHeader {
    pub format: String,
    pub n: u32,
    #[serde(rename = "N")]
    pub points: u32,
    #[serde(rename = "L")]
    pub box_len: f64,
    pub color: Color,
    pub k: u32,
    /// Integer mode at the centre of the frequency box.
    pub center: [i64; 2],
    pub mass: f64,
}

impl WaveHeader {
    pub fn of(w: &SpectralWave) -> Self {
        let lat = w.lattice();
        Self {
            format: "CWAV1".into(),
            n: lat.dim() as u32,
            points: lat.points() as u32,
            box_len: lat.box_len(),
            color: w.color(),
            k: w.k(),
            center: lat.center(),
            mass: w.mass(),
        }
    }
}

/// Binary layout: magic, `n` (u32), `N` (u32), `L` (f64), color byte, `k` (u32),
/// the two band-centre modes (i64), then `2 N^2` complex values as pairs of f64,
/// all little-endian, `c_+` block first, lattice index order.
pub fn encode_wave(w: &SpectralWave) -> Vec<u8> {
    let lat = w.lattice();
    let mut out = Vec::with_capacity(42 + 32 * lat.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(lat.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(lat.points() as u32).to_le_bytes());
    out.extend_from_slice(&lat.box_len().to_le_bytes());
    out.push(w.color().to_byte());
    out.extend_from_slice(&w.k().to_le_bytes());
    for c in lat.center() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    for z in w.plus().iter().chain(w.minus()) {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self.pos + K;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Format("wave file is truncated".into()))?;
        self.pos = end;
        Ok(s.try_into().unwrap())
    }
}

pub fn decode_wave(bytes: &[u8]) -> Result<SpectralWave> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if &c.take::<5>()? != MAGIC {
        return Err(Error::Format("missing CWAV1 magic".into()));
    }
    let n = u32::from_le_bytes(c.take()?);
    let points = u32::from_le_bytes(c.take()?) as usize;
    let box_len = f64::from_le_bytes(c.take()?);
    let [color] = c.take::<1>()?;
    let color = Color::from_byte(color).ok_or_else(|| Error::Format(format!("bad color byte {color}")))?;
    let k = u32::from_le_bytes(c.take()?);
    let center = [i64::from_le_bytes(c.take()?), i64::from_le_bytes(c.take()?)];
    let lat = FrequencyLattice::with_center(n as usize, points, box_len, center)?;
    let expected = c.pos + 32 * lat.len();
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes for a {points}-point lattice, found {}",
            bytes.len()
        )));
    }
    let mut read = |len: usize| -> Result<Vec<Complex64>> {
        (0..len)
            .map(|_| Ok(Complex64::new(f64::from_le_bytes(c.take()?), f64::from_le_bytes(c.take()?))))
            .collect()
    };
    let plus = read(lat.len())?;
    let minus = read(lat.len())?;
    SpectralWave::from_coefficients(lat, color, k, plus, minus)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Writes the wave and its `<path>.json` sidecar.
pub fn write_wave(path: &Path, w: &SpectralWave) -> Result<()> {
    std::fs::write(path, encode_wave(w))?;
    let json = serde_json::to_string_pretty(&WaveHeader::of(w))?;
    std::fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

pub fn read_wave(path: &Path) -> Result<SpectralWave> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_wave(&bytes)
}

pub fn write_tubes(path: &Path, tubes: &[Tube]) -> Result<()> {
    let json = serde_json::to_string_pretty(tubes)?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

pub fn read_tubes(path: &Path) -> Result<Vec<Tube>> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

/// Writes a header line and rows; fields are written with `Display`.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "{}", header.join(","))?;
    for r in rows {
        writeln!(f, "{}", r.join(","))?;
    }
    f.flush()?;
    Ok(())
}

/// Linear black-red-yellow-white ramp for `v` in `[0, 1]`.
pub fn heat_color(v: f64) -> [u8; 3] {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let ch = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    [ch(3.0 * v), ch(3.0 * v - 1.0), ch(3.0 * v - 2.0)]
}

/// RGB image of `values` on `grid` (row index `i0` down, `i1` across), scaled to
/// its own maximum, with the boundary of each tube cross-section at time `t` in cyan.
pub fn heatmap(values: &[f64], grid: SpatialGrid, tubes: &[Tube], t: f64) -> Vec<[u8; 3]> {
    let peak = values.iter().cloned().fold(0.0, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    let mut img: Vec<[u8; 3]> = values.iter().map(|v| heat_color(v * scale)).collect();
    let m = grid.points;
    let torus = Torus::new(grid.box_len);
    let mut inside = vec![false; values.len()];
    for tube in tubes {
        if tube.half_length().is_some_and(|l| (t - tube.t0).abs() > l) {
            continue;
        }
        inside.fill(false);
        let c = tube.axis(t);
        let c = [torus.wrap(c[0]).rem_euclid(torus.side), torus.wrap(c[1]).rem_euclid(torus.side)];
        for (row, a, b) in disc_rows(grid, c, tube.effective_radius()) {
            for j in a..=b {
                inside[row * m + j.rem_euclid(m as i64) as usize] = true;
            }
        }
        for i in 0..m {
            for j in 0..m {
                if !inside[i * m + j] {
                    continue;
                }
                let edge = [(1, 0), (m - 1, 0), (0, 1), (0, m - 1)]
                    .iter()
                    .any(|(di, dj)| !inside[((i + di) % m) * m + (j + dj) % m]);
                if edge {
                    img[i * m + j] = [0, 255, 255];
                }
            }
        }
    }
    img
}

/// Binary PPM (P6).
pub fn write_ppm(path: &Path, width: usize, height: usize, pixels: &[[u8; 3]]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::InvalidArgument("pixel count does not match the image size".into()));
    }
    let mut f = BufWriter::new(File::create(path)?);
    write!(f, "P6\n{width} {height}\n255\n")?;
    for p in pixels {
        f.write_all(p)?;
    }
    f.flush()?;
    Ok(())
}
