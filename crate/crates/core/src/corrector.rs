//! Cell correctors and the effective (homogenized) matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::operator::PeriodicOperator;
use crate::solver::{solve_periodic, SolverOptions};
use crate::torus::TorusField;

/// Solves the cell problem `−div(A(e_k + ∇χ^k)) = 0` with zero cell mean.
/// `k` is 1-based.
pub fn solve_corrector(a: &TorusField, k: usize, cell_n: usize) -> Result<GridFunction> {
    let op = PeriodicOperator::new(a, cell_n)?;
    corrector_with(&op, a.dim(), k)
}

fn corrector_with(op: &PeriodicOperator, dim: usize, k: usize) -> Result<GridFunction> {
    if k == 0 || k > dim {
        return invalid(format!("corrector index must lie in 1..={dim}, got {k}"));
    }
    // L χ = −L y_k, i.e. minus the affine term
    let b: Vec<f64> = op.affine_term(k - 1).iter().map(|v| -v).collect();
    let (chi, _) = solve_periodic(op, &b, &SolverOptions::default())?;
    Ok(chi)
}

/// `ā_ij` from the discrete energy `B(χ^i + y_i, χ^j + y_j)`, symmetrized.
/// Correctors are ordered by axis and must live on the periodic cell grid.
pub fn effective_matrix(a: &TorusField, correctors: &[GridFunction]) -> Result<Vec<f64>> {
    let dim = a.dim();
    if correctors.len() != dim {
        return invalid(format!("need {dim} correctors, got {}", correctors.len()));
    }
    let grid = correctors[0].grid;
    if !grid.periodic || correctors.iter().any(|c| !c.grid.same_shape(&grid)) {
        return Err(Error::GridMismatch("correctors must share one periodic cell grid".into()));
    }
    let op = PeriodicOperator::new(a, grid.n)?;
    Ok(energy_matrix(&op, dim, correctors))
}

fn energy_matrix(op: &PeriodicOperator, dim: usize, correctors: &[GridFunction]) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            m[i * dim + j] = op.shifted_pairing(&correctors[i].values, i, &correctors[j].values, j);
        }
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let s = 0.5 * (m[i * dim + j] + m[j * dim + i]);
            m[i * dim + j] = s;
            m[j * dim + i] = s;
        }
    }
    m
}

/// Eigenvalues of a symmetric row-major `d×d` matrix in ascending order.
pub fn symmetric_eigenvalues(m: &[f64], dim: usize) -> Vec<f64> {
    let mat = DMatrix::from_row_slice(dim, dim, m);
    let mut ev: Vec<f64> = SymmetricEigen::new(mat).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// The constant coefficients of the homogenized equation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveModel {
    pub dim: usize,
    /// Row-major `d×d`.
    pub a_bar: Vec<f64>,
    pub q_bar: f64,
    #[serde(skip)]
    pub correctors: Vec<GridFunction>,
}

impl EffectiveModel {
    /// Solves all `d` cell problems on an `cell_n^d` grid and assembles `ā`.
    pub fn compute(a: &TorusField, q_bar: f64, cell_n: usize) -> Result<Self> {
        if !(q_bar >= 0.0) {
            return invalid(format!("q_bar must be nonnegative, got {q_bar}"));
        }
        let dim = a.dim();
        let op = PeriodicOperator::new(a, cell_n)?;
        let correctors = (1..=dim)
            .map(|k| corrector_with(&op, dim, k))
            .collect::<Result<Vec<_>>>()?;
        let a_bar = energy_matrix(&op, dim, &correctors);
        let ev = symmetric_eigenvalues(&a_bar, dim);
        let tol = 1e-8 * a.big_lambda();
        if ev[0] < a.lambda() - tol || ev[dim - 1] > a.big_lambda() + tol {
            return Err(Error::Ellipticity(format!(
                "effective spectrum [{}, {}] escapes [{}, {}]",
                ev[0],
                ev[dim - 1],
                a.lambda(),
                a.big_lambda()
            )));
        }
        Ok(EffectiveModel {
            dim,
            a_bar,
            q_bar,
            correctors,
        })
    }

    /// Model with a prescribed matrix and no correctors.
    pub fn constant(dim: usize, a_bar: Vec<f64>, q_bar: f64) -> Result<Self> {
        if a_bar.len() != dim * dim {
            return invalid("effective matrix has the wrong size");
        }
        TorusField::constant(dim, &a_bar)?;
        Ok(EffectiveModel {
            dim,
            a_bar,
            q_bar,
            correctors: Vec::new(),
        })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.a_bar, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::Pattern;

    #[test]
    fn identity_has_zero_correctors() {
        let a = TorusField::pattern(Pattern::Identity, 2, 4).unwrap();
        let m = EffectiveModel::compute(&a, 1.0, 16).unwrap();
        for c in &m.correctors {
            assert!(c.max_abs() < 1e-14);
        }
        assert!((m.a_bar[0] - 1.0).abs() < 1e-14);
        assert!(m.a_bar[1].abs() < 1e-14);
        assert!((m.a_bar[3] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_index() {
        let a = TorusField::pattern(Pattern::Identity, 2, 4).unwrap();
        assert!(solve_corrector(&a, 0, 8).is_err());
        assert!(solve_corrector(&a, 3, 8).is_err());
    }

    #[test]
    fn layered_matches_harmonic_and_arithmetic_means() {
        let a = TorusField::pattern(Pattern::SinLayered, 2, 128).unwrap();
        let m = EffectiveModel::compute(&a, 0.0, 128).unwrap();
        assert!((m.a_bar[0] - 3f64.sqrt()).abs() < 1e-3, "{:?}", m.a_bar);
        assert!((m.a_bar[3] - 2.0).abs() < 1e-3);
        assert!(m.a_bar[1].abs() < 1e-10);
    }
}
