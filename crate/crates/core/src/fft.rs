//! Multi-dimensional FFT and DST-I built on `rustfft`, applied axis by axis
//! to row-major flat buffers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unnormalized complex FFT over a row-major array of arbitrary shape.
pub struct NdFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for NdFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NdFft").field("shape", &self.shape).finish()
    }
}

impl NdFft {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        NdFft {
            shape: shape.to_vec(),
            forward: shape.iter().map(|&l| planner.plan_fft_forward(l)).collect(),
            inverse: shape.iter().map(|&l| planner.plan_fft_inverse(l)).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Inverse transform without the `1/N` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len());
        let nd = self.shape.len();
        for axis in 0..nd {
            let len = self.shape[axis];
            let stride: usize = self.shape[axis + 1..].iter().product();
            let outer: usize = self.shape[..axis].iter().product();
            let plan = &plans[axis];
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let mut line = vec![Complex64::default(); len];
            for o in 0..outer {
                let base = o * len * stride;
                for s in 0..stride {
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + k * stride + s];
                    }
                    plan.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride + s] = *v;
                    }
                }
            }
        }
    }
}

/// Type-I discrete sine transform along every axis of an `n^d` array:
/// `S_k = Σ_{j=1}^{n} v_j sin(π j k / (n + 1))`. Applying it twice returns
/// the input times `((n + 1) / 2)^d`.
pub struct Dst1 {
    n: usize,
    dim: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dst1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dst1")
            .field("n", &self.n)
            .field("dim", &self.dim)
            .finish()
    }
}

impl Dst1 {
    pub fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Dst1 {
            n,
            dim,
            fft: planner.plan_fft_forward(2 * (n + 1)),
        }
    }

    /// Factor such that `dst(dst(v)) = v / normalization()`.
    pub fn normalization(&self) -> f64 {
        (2.0 / (self.n + 1) as f64).powi(self.dim as i32)
    }

    pub fn apply(&self, data: &mut [f64]) {
        let n = self.n;
        assert_eq!(data.len(), n.pow(self.dim as u32));
        let m = 2 * (n + 1);
        let mut buf = vec![Complex64::default(); m];
        let mut scratch = vec![Complex64::default(); self.fft.get_inplace_scratch_len()];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = n.pow(axis as u32);
            // enumerate line start offsets
            let mut starts = Vec::with_capacity(outer * stride);
            for o in 0..outer {
                for s in 0..stride {
                    starts.push(o * n * stride + s);
                }
            }
            // two real lines per complex transform
            for pair in starts.chunks(2) {
                let a = pair[0];
                let b = pair.get(1).copied();
                buf[0] = Complex64::default();
                buf[n + 1] = Complex64::default();
                for j in 0..n {
                    let re = data[a + j * stride];
                    let im = b.map_or(0.0, |b| data[b + j * stride]);
                    buf[j + 1] = Complex64::new(re, im);
                    buf[m - 1 - j] = Complex64::new(-re, -im);
                }
                self.fft.process_with_scratch(&mut buf, &mut scratch);
                for k in 0..n {
                    let z = buf[k + 1];
                    data[a + k * stride] = -0.5 * z.im;
                    if let Some(b) = b {
                        data[b + k * stride] = 0.5 * z.re;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dst_matches_direct_sum() {
        let n = 7;
        let v: Vec<f64> = (0..n * n).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let mut fast = v.clone();
        Dst1::new(n, 2).apply(&mut fast);
        for k1 in 0..n {
            for k2 in 0..n {
                let mut s = 0.0;
                for j1 in 0..n {
                    for j2 in 0..n {
                        s += v[j1 * n + j2]
                            * (PI * ((j1 + 1) * (k1 + 1)) as f64 / (n + 1) as f64).sin()
                            * (PI * ((j2 + 1) * (k2 + 1)) as f64 / (n + 1) as f64).sin();
                    }
                }
                assert!((fast[k1 * n + k2] - s).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dst_is_involution_up_to_scale() {
        let n = 6;
        let dst = Dst1::new(n, 3);
        let v: Vec<f64> = (0..n * n * n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut w = v.clone();
        dst.apply(&mut w);
        dst.apply(&mut w);
        for (a, b) in v.iter().zip(&w) {
            assert!((a - b * dst.normalization()).abs() < 1e-12);
        }
    }

    #[test]
    fn ndfft_roundtrip() {
        let shape = [4, 6, 5];
        let f = NdFft::new(&shape);
        let orig: Vec<Complex64> = (0..120)
            .map(|i| Complex64::new(i as f64, -(i as f64) * 0.5))
            .collect();
        let mut d = orig.clone();
        f.forward(&mut d);
        f.inverse(&mut d);
        for (a, b) in orig.iter().zip(&d) {
            assert!((a - b / 120.0).norm() < 1e-10);
        }
    }
}
