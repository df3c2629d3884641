//! Circulant embedding for stationary Gaussian fields on a lattice.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::fft::NdFft;

/// Largest tolerated ratio of negative to total eigenvalue mass.
pub const NEGATIVE_MASS_TOL: f64 = 1e-8;

/// Number of padding doublings attempted before giving up.
pub const MAX_DOUBLINGS: usize = 3;

/// Spectral factor of a covariance embedded in a periodic torus whose side
/// is `padding` times the lattice side.
pub struct CirculantEmbedding {
    dim: usize,
    side: usize,
    torus: usize,
    fft: NdFft,
    /// `sqrt(λ_k / N)` with clipped negatives.
    scale: Vec<f64>,
    negative_fraction: f64,
}

impl std::fmt::Debug for CirculantEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantEmbedding")
            .field("dim", &self.dim)
            .field("side", &self.side)
            .field("torus", &self.torus)
            .field("negative_fraction", &self.negative_fraction)
            .finish()
    }
}

impl CirculantEmbedding {
    /// Embeds `cov(lag)` (lag in lattice units) for a `side^d` lattice.
    /// Doubles the padding up to [`MAX_DOUBLINGS`] times when the negative
    /// eigenvalue mass exceeds [`NEGATIVE_MASS_TOL`].
    pub fn new(
        dim: usize,
        side: usize,
        padding: usize,
        cov: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        if side == 0 || padding < 2 {
            return invalid("embedding needs a nonempty lattice and padding of at least 2");
        }
        let mut torus = padding * side;
        let mut last = 0.0;
        for _ in 0..=MAX_DOUBLINGS {
            let (emb, frac) = Self::try_side(dim, side, torus, &cov)?;
            if frac <= NEGATIVE_MASS_TOL {
                return Ok(emb);
            }
            last = frac;
            torus *= 2;
        }
        Err(Error::Embedding {
            negative_fraction: last,
            side: torus / 2,
        })
    }

    fn try_side(
        dim: usize,
        side: usize,
        torus: usize,
        cov: &impl Fn(&[f64]) -> f64,
    ) -> Result<(Self, f64)> {
        let shape = vec![torus; dim];
        let fft = NdFft::new(&shape);
        let len = fft.len();
        let mut row = vec![Complex64::default(); len];
        let mut lag = vec![0.0; dim];
        for (flat, slot) in row.iter_mut().enumerate() {
            let mut rem = flat;
            for a in (0..dim).rev() {
                let k = rem % torus;
                rem /= torus;
                // minimum-image distance on the torus
                lag[a] = if k <= torus / 2 { k as f64 } else { k as f64 - torus as f64 };
            }
            let v = cov(&lag);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("covariance at lag {lag:?} is {v}")));
            }
            *slot = Complex64::new(v, 0.0);
        }
        fft.forward(&mut row);
        let mut neg = 0.0;
        let mut total = 0.0;
        let scale = row
            .iter()
            .map(|z| {
                let l = z.re;
                total += l.abs();
                if l < 0.0 {
                    neg += -l;
                    0.0
                } else {
                    (l / len as f64).sqrt()
                }
            })
            .collect();
        let frac = if total > 0.0 { neg / total } else { 0.0 };
        Ok((
            CirculantEmbedding {
                dim,
                side,
                torus,
                fft,
                scale,
                negative_fraction: frac,
            },
            frac,
        ))
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn torus_side(&self) -> usize {
        self.torus
    }

    /// Negative eigenvalue mass that was clipped, relative to the total.
    pub fn negative_fraction(&self) -> f64 {
        self.negative_fraction
    }

    /// One realization on the `side^d` lattice, row-major.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut buf: Vec<Complex64> = self
            .scale
            .iter()
            .map(|s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * s, im * s)
            })
            .collect();
        self.fft.forward(&mut buf);
        let mut out = Vec::with_capacity(self.side.pow(self.dim as u32));
        let count = self.side.pow(self.dim as u32);
        for idx in 0..count {
            let mut rem = idx;
            let mut flat = 0;
            let mut mul = 1;
            for _ in 0..self.dim {
                flat += (rem % self.side) * mul;
                rem /= self.side;
                mul *= self.torus;
            }
            out.push(buf[flat].re);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lattice_indexing_is_row_major() {
        // the flat index reversal must still place the fastest axis last
        let emb = CirculantEmbedding::new(2, 4, 2, |l| if l[0] == 0.0 && l[1] == 0.0 { 1.0 } else { 0.0 })
            .unwrap();
        assert_eq!(emb.torus_side(), 8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(emb.sample(&mut rng).len(), 16);
    }

    #[test]
    fn white_noise_has_unit_variance() {
        let emb = CirculantEmbedding::new(2, 16, 2, |l| if l.iter().all(|v| *v == 0.0) { 1.0 } else { 0.0 })
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut acc = 0.0;
        let mut cnt = 0.0;
        for _ in 0..200 {
            for v in emb.sample(&mut rng) {
                acc += v * v;
                cnt += 1.0;
            }
        }
        let var = acc / cnt;
        // SE of a variance estimate from 51200 normals is about 0.006
        assert!((var - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn indefinite_kernel_is_rejected() {
        // a covariance that is negative at lag one cannot be embedded
        let r = CirculantEmbedding::new(2, 8, 2, |l| {
            let d = (l[0] * l[0] + l[1] * l[1]).sqrt();
            if d == 0.0 {
                1.0
            } else if d <= 1.0 {
                -0.9
            } else {
                0.0
            }
        });
        assert!(matches!(r, Err(Error::Embedding { .. })));
    }
}
