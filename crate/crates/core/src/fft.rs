use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unnormalized 2-D inverse DFT on an `m x m` row-major array.
pub struct InverseFft2 {
    m: usize,
    plan: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl InverseFft2 {
    pub fn new(m: usize) -> Self {
        let plan = FftPlanner::new().plan_fft_inverse(m);
        let scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        Self {
            m,
            plan,
            scratch,
            tmp: vec![Complex64::default(); m * m],
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    /// `out[j0*m + j1] = sum_{a,b} buf[a*m + b] exp(2 pi i (j0 a + j1 b) / m)`, in place.
    pub fn process(&mut self, buf: &mut [Complex64]) {
        let m = self.m;
        assert_eq!(buf.len(), m * m);
        self.plan.process_with_scratch(buf, &mut self.scratch);
        self.finish(buf);
    }

    /// Same as `process` when every row outside `rows` is zero.
    pub fn process_rows(&mut self, buf: &mut [Complex64], rows: &[usize]) {
        let m = self.m;
        assert_eq!(buf.len(), m * m);
        for &r in rows {
            self.plan.process_with_scratch(&mut buf[r * m..(r + 1) * m], &mut self.scratch);
        }
        self.finish(buf);
    }

    fn finish(&mut self, buf: &mut [Complex64]) {
        let m = self.m;
        transpose::transpose(buf, &mut self.tmp, m, m);
        self.plan.process_with_scratch(&mut self.tmp, &mut self.scratch);
        transpose::transpose(&self.tmp, buf, m, m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matches_direct_sum() {
        let m = 8;
        let mut buf: Vec<Complex64> = (0..m * m)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let input = buf.clone();
        InverseFft2::new(m).process(&mut buf);
        for j0 in 0..m {
            for j1 in 0..m {
                let mut s = Complex64::default();
                for a in 0..m {
                    for b in 0..m {
                        let ph = 2.0 * PI * ((j0 * a + j1 * b) as f64) / m as f64;
                        s += input[a * m + b] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((s - buf[j0 * m + j1]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn sparse_rows_match_full() {
        let m = 16;
        let mut buf = vec![Complex64::default(); m * m];
        for r in [2usize, 5, 11] {
            for c in 0..m {
                buf[r * m + c] = Complex64::new((r * c) as f64 * 0.1, 1.0 / (1 + c) as f64);
            }
        }
        let mut sparse = buf.clone();
        let mut fft = InverseFft2::new(m);
        fft.process(&mut buf);
        fft.process_rows(&mut sparse, &[2, 5, 11]);
        assert_eq!(buf, sparse);
    }
}
