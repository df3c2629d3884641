//! Fourier-weighted Sobolev norms of Dirichlet grid functions, computed on
//! the zero extension to a periodic box twice the side length.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fft::NdFft;
use crate::grid::GridFunction;

/// `(P^{-d} Σ_ξ (1 + |ξ|²)^s |û(ξ)|²)^{1/2}` with `û = h^d Σ u e^{−iξ·x}`.
/// At `s = 0` this is the grid L² norm exactly.
fn weighted_norm(u: &GridFunction, s: f64) -> Result<f64> {
    if u.grid.periodic {
        return invalid("Sobolev norms are defined for zero-Dirichlet grid functions");
    }
    let g = u.grid;
    let dim = g.dim;
    let n = g.n;
    let side = 2 * (n + 1);
    let shape = vec![side; dim];
    let fft = NdFft::new(&shape);
    let mut buf = vec![Complex64::default(); fft.len()];
    // interior node i sits at padded index i + 1
    for (idx, v) in u.values.iter().enumerate() {
        let ix = g.unravel(idx);
        let mut flat = 0;
        for a in 0..dim {
            flat = flat * side + ix[a] + 1;
        }
        buf[flat] = Complex64::new(*v, 0.0);
    }
    fft.forward(&mut buf);
    let box_len = 2.0 * g.extent;
    let hd = g.cell_volume();
    let mut acc = 0.0;
    for (flat, c) in buf.iter().enumerate() {
        let mut rem = flat;
        let mut xi2 = 0.0;
        for _ in 0..dim {
            let k = rem % side;
            rem /= side;
            let kk = if k <= side / 2 { k as f64 } else { k as f64 - side as f64 };
            let xi = 2.0 * PI * kk / box_len;
            xi2 += xi * xi;
        }
        let w = if s == 0.0 { 1.0 } else { (1.0 + xi2).powf(s) };
        acc += w * c.norm_sqr();
    }
    // Parseval: Σ|U|² = N Σ|u|², with û = h^d U and N h^d = P^d
    Ok((acc * hd * hd / box_len.powi(dim as i32)).sqrt())
}

/// Fractional Sobolev norm for `s ∈ (−1, 1)`.
pub fn sobolev_norm(u: &GridFunction, s: f64) -> Result<f64> {
    if !(s.abs() < 1.0) {
        return invalid(format!("Sobolev exponent must lie in (-1, 1), got {s}"));
    }
    weighted_norm(u, s)
}

/// Negative-order norm with weight `(1 + |ξ|²)^{−s}` for `s ∈ (0, 1]`.
pub fn h_neg_projection_norm(x: &GridFunction, s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return invalid(format!("negative-order exponent must lie in (0, 1], got {s}"));
    }
    weighted_norm(x, -s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn s_zero_is_l2() {
        let g = Grid::dirichlet(2, 31).unwrap();
        let u = GridFunction::from_fn(g, |x| x[0] * x[1] * (1.0 - x[0]) - 0.1 * x[1]);
        let a = sobolev_norm(&u, 0.0).unwrap();
        assert!((a - u.l2_norm()).abs() < 1e-12 * a);
    }

    #[test]
    fn monotone_in_s() {
        let g = Grid::dirichlet(2, 31).unwrap();
        let u = GridFunction::from_fn(g, |x| (-(x[0] - 0.5).powi(2) * 20.0 - (x[1] - 0.5).powi(2) * 20.0).exp());
        let mut last = 0.0;
        for s in [-0.9, -0.5, 0.0, 0.25, 0.5, 0.9] {
            let v = sobolev_norm(&u, s).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn exponent_ranges() {
        let g = Grid::dirichlet(2, 7).unwrap();
        let u = GridFunction::constant(g, 1.0);
        assert!(sobolev_norm(&u, 1.0).is_err());
        assert!(sobolev_norm(&u, -1.0).is_err());
        assert!(h_neg_projection_norm(&u, 0.0).is_err());
        assert!(h_neg_projection_norm(&u, 1.0).is_ok());
        assert!(h_neg_projection_norm(&u, 0.5).unwrap() <= u.l2_norm());
    }
}
