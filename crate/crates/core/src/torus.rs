//! Periodic coefficient matrices `A(y)` sampled on the unit cell.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest accepted ratio `Λ / λ`.
pub const MAX_ANISOTROPY: f64 = 100.0;

/// Symmetric `d×d` matrix samples on an `m^d` grid of the unit cell, with
/// periodic wraparound and multilinear interpolation between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    dim: usize,
    m: usize,
    /// Sample-major, each sample a row-major `d×d` block.
    values: Vec<f64>,
    lambda: f64,
    big_lambda: f64,
    diagonal: bool,
}

/// Built-in coefficient patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    Identity,
    /// `diag(2 + sin 2πy₁, 2 + sin 2πy₁)`: layers normal to the first axis.
    SinLayered,
    /// Scalar `2 + sin 2πy₁ sin 2πy₂`.
    CheckerboardSmooth,
}

impl Pattern {
    pub fn name(self) -> &'static str {
        match self {
            Pattern::Identity => "identity",
            Pattern::SinLayered => "sin-layered",
            Pattern::CheckerboardSmooth => "checkerboard-smooth",
        }
    }
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Pattern::Identity),
            "sin-layered" => Ok(Pattern::SinLayered),
            "checkerboard-smooth" => Ok(Pattern::CheckerboardSmooth),
            other => invalid(format!("unknown coefficient pattern '{other}'")),
        }
    }
}

fn sym_eigen_range(dim: usize, a: &[f64]) -> (f64, f64) {
    if dim == 2 {
        let (p, q, r) = (a[0], a[1], a[3]);
        let tr = 0.5 * (p + r);
        let disc = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        return (tr - disc, tr + disc);
    }
    let m = DMatrix::from_row_slice(dim, dim, a);
    let ev = m.symmetric_eigen().eigenvalues;
    (ev.min(), ev.max())
}

impl TorusField {
    /// Builds a field from sample-major `d×d` blocks; checks symmetry and
    /// ellipticity and records the ellipticity bounds.
    pub fn from_samples(dim: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return invalid(format!("dimension must be 2 or 3, got {dim}"));
        }
        if m == 0 {
            return invalid("sample count per axis must be positive");
        }
        let block = dim * dim;
        let count = m.pow(dim as u32);
        if values.len() != count * block {
            return invalid(format!(
                "expected {} numbers for m={m}, d={dim}, got {}",
                count * block,
                values.len()
            ));
        }
        let mut lambda = f64::INFINITY;
        let mut big_lambda = f64::NEG_INFINITY;
        let mut diagonal = true;
        for (s, a) in values.chunks(block).enumerate() {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("sample {s} has a non-finite entry")));
            }
            let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
            for i in 0..dim {
                for j in (i + 1)..dim {
                    if (a[i * dim + j] - a[j * dim + i]).abs() > 1e-12 * scale {
                        return invalid(format!("sample {s} is not symmetric"));
                    }
                    if a[i * dim + j] != 0.0 {
                        diagonal = false;
                    }
                }
            }
            let (lo, hi) = sym_eigen_range(dim, a);
            lambda = lambda.min(lo);
            big_lambda = big_lambda.max(hi);
        }
        if lambda <= 0.0 {
            return Err(Error::Ellipticity(format!(
                "smallest eigenvalue {lambda:.3e} is not positive"
            )));
        }
        if big_lambda / lambda > MAX_ANISOTROPY {
            return Err(Error::Ellipticity(format!(
                "anisotropy ratio {:.1} exceeds {MAX_ANISOTROPY}",
                big_lambda / lambda
            )));
        }
        Ok(TorusField {
            dim,
            m,
            values,
            lambda,
            big_lambda,
            diagonal,
        })
    }

    /// Samples `f(y)` at `y = k / m`.
    pub fn from_fn(dim: usize, m: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let count = m.pow(dim as u32);
        let mut values = Vec::with_capacity(count * dim * dim);
        let mut y = vec![0.0; dim];
        for s in 0..count {
            let mut rem = s;
            for a in (0..dim).rev() {
                y[a] = (rem % m) as f64 / m as f64;
                rem /= m;
            }
            let block = f(&y);
            if block.len() != dim * dim {
                return invalid("coefficient closure returned a block of the wrong size");
            }
            values.extend_from_slice(&block);
        }
        Self::from_samples(dim, m, values)
    }

    /// The same constant matrix everywhere.
    pub fn constant(dim: usize, matrix: &[f64]) -> Result<Self> {
        Self::from_samples(dim, 1, matrix.to_vec())
    }

    pub fn pattern(pattern: Pattern, dim: usize, m: usize) -> Result<Self> {
        let two_pi = 2.0 * std::f64::consts::PI;
        let eye = move |c: f64| -> Vec<f64> {
            let mut b = vec![0.0; dim * dim];
            for i in 0..dim {
                b[i * dim + i] = c;
            }
            b
        };
        match pattern {
            Pattern::Identity => Self::constant(dim, &eye(1.0)),
            Pattern::SinLayered => {
                Self::from_fn(dim, m, |y| eye(2.0 + (two_pi * y[0]).sin()))
            }
            Pattern::CheckerboardSmooth => Self::from_fn(dim, m, |y| {
                eye(2.0 + (two_pi * y[0]).sin() * (two_pi * y[1]).sin())
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples_per_axis(&self) -> usize {
        self.m
    }

    /// Ellipticity lower bound λ over all samples.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Ellipticity upper bound Λ over all samples.
    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    /// True when every sample has vanishing off-diagonal entries.
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// Raw sample block at an integer multi-index, wrapped periodically.
    pub fn sample(&self, ix: &[isize]) -> &[f64] {
        let m = self.m as isize;
        let flat = ix[..self.dim]
            .iter()
            .fold(0usize, |acc, &i| acc * self.m + i.rem_euclid(m) as usize);
        let b = self.dim * self.dim;
        &self.values[flat * b..(flat + 1) * b]
    }

    /// Entry `a_ij(y)` by periodic multilinear interpolation.
    pub fn entry(&self, y: &[f64], i: usize, j: usize) -> f64 {
        let k = i * self.dim + j;
        if self.m == 1 {
            return self.values[k];
        }
        let mut base = [0isize; 3];
        let mut frac = [0.0; 3];
        for a in 0..self.dim {
            let t = y[a] * self.m as f64;
            let fl = t.floor();
            base[a] = fl as isize;
            frac[a] = t - fl;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut ix = [0isize; 3];
            for a in 0..self.dim {
                let bit = (corner >> a) & 1;
                ix[a] = base[a] + bit as isize;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += w * self.sample(&ix)[k];
            }
        }
        acc
    }

    /// Full matrix at `y`, row-major.
    pub fn matrix(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.entry(y, i, j);
                out[i * self.dim + j] = v;
                out[j * self.dim + i] = v;
            }
        }
        out
    }

    /// Cell average of `A` (arithmetic mean of the samples).
    pub fn arithmetic_mean(&self) -> Vec<f64> {
        let b = self.dim * self.dim;
        let count = self.values.len() / b;
        let mut out = vec![0.0; b];
        for s in self.values.chunks(b) {
            for (o, v) in out.iter_mut().zip(s) {
                *o += v;
            }
        }
        out.iter().map(|v| v / count as f64).collect()
    }

    /// Inverse of the cell average of `A^{-1}`.
    pub fn harmonic_mean(&self) -> Vec<f64> {
        let d = self.dim;
        let b = d * d;
        let count = self.values.len() / b;
        let mut acc = DMatrix::<f64>::zeros(d, d);
        for s in self.values.chunks(b) {
            let inv = DMatrix::from_row_slice(d, d, s)
                .try_inverse()
                .expect("elliptic sample is invertible");
            acc += inv;
        }
        acc /= count as f64;
        let h = acc.try_inverse().expect("mean of SPD inverses is SPD");
        (0..b).map(|k| h[(k / d, k % d)]).collect()
    }

    /// Parses the plain-text format: a header line `m d` followed by `m^d`
    /// lines of `d*d` row-major matrix entries. Blank lines and lines starting
    /// with `#` are ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty coefficient file".into()))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {hline}: bad header: {e}")))?;
        if head.len() != 2 {
            return Err(Error::Parse(format!("line {hline}: header must be 'm d'")));
        }
        let (m, dim) = (head[0], head[1]);
        let mut values = Vec::new();
        for (ln, line) in lines {
            let row: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {ln}: {e}")))?;
            if row.len() != dim * dim {
                return Err(Error::Parse(format!(
                    "line {ln}: expected {} entries, found {}",
                    dim * dim,
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_samples(dim, m, values)
    }

    /// Parses `{"m": .., "d": .., "values": [[a11, a12, ...], ...]}`.
    pub fn parse_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            m: usize,
            d: usize,
            values: Vec<Vec<f64>>,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let flat: Vec<f64> = doc.values.into_iter().flatten().collect();
        Self::from_samples(doc.d, doc.m, flat)
    }

    /// Loads a coefficient file, choosing the parser by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::parse_json(&text),
            _ => Self::parse_text(&text),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layered_bounds() {
        let a = TorusField::pattern(Pattern::SinLayered, 2, 64).unwrap();
        assert!((a.lambda() - 1.0).abs() < 1e-12);
        assert!((a.big_lambda() - 3.0).abs() < 1e-12);
        assert!(a.is_diagonal());
    }

    #[test]
    fn periodic_wraparound() {
        let a = TorusField::pattern(Pattern::CheckerboardSmooth, 2, 16).unwrap();
        assert_eq!(a.sample(&[16, 3]), a.sample(&[0, 3]));
        assert_eq!(a.sample(&[-1, 3]), a.sample(&[15, 3]));
        let y0 = [0.3, 0.7];
        let y1 = [1.3, -0.3];
        assert!((a.entry(&y0, 0, 0) - a.entry(&y1, 0, 0)).abs() < 1e-12);
    }

    #[test]
    fn interpolation_hits_samples() {
        let a = TorusField::pattern(Pattern::SinLayered, 2, 8).unwrap();
        let v = a.entry(&[2.0 / 8.0, 0.5], 0, 0);
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        assert!(TorusField::constant(2, &[1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(matches!(
            TorusField::constant(2, &[1.0, 2.0, 2.0, 1.0]),
            Err(Error::Ellipticity(_))
        ));
        assert!(matches!(
            TorusField::constant(2, &[1.0, 0.0, 0.0, 500.0]),
            Err(Error::Ellipticity(_))
        ));
    }

    #[test]
    fn text_and_json_formats() {
        let text = "# two samples per axis\n2 2\n1 0 0 1\n2 0 0 2\n3 0 0 3\n4 0 0 4\n";
        let a = TorusField::parse_text(text).unwrap();
        assert_eq!(a.sample(&[1, 0])[0], 3.0);
        let json = r#"{"m":2,"d":2,"values":[[1,0,0,1],[2,0,0,2],[3,0,0,3],[4,0,0,4]]}"#;
        assert_eq!(TorusField::parse_json(json).unwrap(), a);
        let bad = "2 2\n1 0 0\n";
        let err = TorusField::parse_text(bad).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn means_sandwich_for_layered() {
        let a = TorusField::pattern(Pattern::SinLayered, 2, 256).unwrap();
        let h = a.harmonic_mean();
        let m = a.arithmetic_mean();
        assert!((h[0] - 3f64.sqrt()).abs() < 1e-8);
        assert!((m[0] - 2.0).abs() < 1e-12);
    }
}
