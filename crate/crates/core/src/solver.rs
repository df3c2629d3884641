//! Preconditioned conjugate gradients for the Dirichlet and periodic
//! operators, plus Green-function columns.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft::{Dst1, NdFft};
use crate::grid::{Grid, GridFunction};
use crate::operator::LinearOperator;

/// Default relative residual target.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PreconditionerKind {
    None,
    Jacobi,
    /// Constant-coefficient inverse through fast sine/Fourier transforms.
    #[default]
    FastPoisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    /// Iteration cap; `None` means `50·n`.
    pub max_iter: Option<usize>,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iter: None,
            preconditioner: PreconditionerKind::FastPoisson,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

struct Jacobi(Vec<f64>);

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.0) {
            *z = r / d;
        }
    }
}

/// Exact inverse of `Σ_p c_p (−D_pp) + q` with zero Dirichlet data.
struct DirichletFast {
    dst: Dst1,
    inv_eig: Vec<f64>,
}

fn laplace_eigs_dirichlet(n: usize, h: f64) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            let s = (PI * k as f64 / (2.0 * (n + 1) as f64)).sin();
            4.0 * s * s / (h * h)
        })
        .collect()
}

fn laplace_eigs_periodic(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = (PI * k as f64 / n as f64).sin();
            4.0 * s * s / (h * h)
        })
        .collect()
}

/// Tensor-sum eigenvalues `Σ_p c_p μ_{k_p} + q` over the flat index set.
fn tensor_eigs(dim: usize, n: usize, axis_eigs: &[f64], coeffs: &[f64], q: f64) -> Vec<f64> {
    let len = n.pow(dim as u32);
    let mut out = vec![q; len];
    for (idx, v) in out.iter_mut().enumerate() {
        let mut rem = idx;
        for p in (0..dim).rev() {
            *v += coeffs[p] * axis_eigs[rem % n];
            rem /= n;
        }
    }
    out
}

impl DirichletFast {
    fn new(grid: &Grid, coeffs: &[f64], q: f64) -> Self {
        let dst = Dst1::new(grid.n, grid.dim);
        let eigs = tensor_eigs(
            grid.dim,
            grid.n,
            &laplace_eigs_dirichlet(grid.n, grid.h()),
            coeffs,
            q,
        );
        let norm = dst.normalization();
        DirichletFast {
            dst,
            inv_eig: eigs.iter().map(|e| norm / e).collect(),
        }
    }
}

impl Preconditioner for DirichletFast {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        self.dst.apply(z);
        for (v, s) in z.iter_mut().zip(&self.inv_eig) {
            *v *= s;
        }
        self.dst.apply(z);
    }
}

/// Pseudo-inverse of `Σ_p c_p (−D_pp)` on the periodic grid (constant mode
/// mapped to zero).
struct PeriodicFast {
    fft: NdFft,
    inv_eig: Vec<f64>,
}

impl PeriodicFast {
    fn new(grid: &Grid, coeffs: &[f64]) -> Self {
        let shape = vec![grid.n; grid.dim];
        let eigs = tensor_eigs(
            grid.dim,
            grid.n,
            &laplace_eigs_periodic(grid.n, grid.h()),
            coeffs,
            0.0,
        );
        let len = eigs.len() as f64;
        PeriodicFast {
            fft: NdFft::new(&shape),
            inv_eig: eigs
                .iter()
                .map(|e| if *e > 0.0 { 1.0 / (e * len) } else { 0.0 })
                .collect(),
        }
    }
}

impl Preconditioner for PeriodicFast {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let mut buf: Vec<Complex64> = r.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.fft.forward(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.inv_eig) {
            *b *= s;
        }
        self.fft.inverse(&mut buf);
        for (z, b) in z.iter_mut().zip(&buf) {
            *z = b.re;
        }
    }
}

fn build_preconditioner(op: &dyn LinearOperator, kind: PreconditionerKind) -> Box<dyn Preconditioner> {
    let grid = op.grid();
    match kind {
        PreconditionerKind::None => Box::new(Identity),
        PreconditionerKind::Jacobi => Box::new(Jacobi(op.diagonal())),
        PreconditionerKind::FastPoisson => {
            let (coeffs, q) = op.reference_coefficients();
            if grid.periodic {
                Box::new(PeriodicFast::new(grid, &coeffs))
            } else {
                Box::new(DirichletFast::new(grid, &coeffs, q))
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Core PCG loop. With `periodic` set, residuals and search directions are
/// kept orthogonal to constants.
fn pcg(
    op: &dyn LinearOperator,
    pre: &dyn Preconditioner,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    periodic: bool,
) -> SolveStats {
    let len = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return SolveStats {
            iterations: 0,
            relative_residual: 0.0,
        };
    }
    let mut r = vec![0.0; len];
    let mut z = vec![0.0; len];
    let mut q = vec![0.0; len];
    let mut iterations = 0;
    // outer restarts guard against drift between recursive and true residual
    for _ in 0..4 {
        op.apply(x, &mut q);
        for i in 0..len {
            r[i] = b[i] - q[i];
        }
        if periodic {
            project_mean(&mut r);
        }
        let mut rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol * bnorm || iterations >= max_iter {
            return SolveStats {
                iterations,
                relative_residual: rnorm / bnorm,
            };
        }
        pre.apply(&r, &mut z);
        if periodic {
            project_mean(&mut z);
        }
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            iterations += 1;
            op.apply(&p, &mut q);
            let pq = dot(&p, &q);
            if pq <= 0.0 || !pq.is_finite() {
                break;
            }
            let alpha = rz / pq;
            for i in 0..len {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            if periodic {
                project_mean(&mut r);
            }
            rnorm = dot(&r, &r).sqrt();
            if rnorm <= tol * bnorm {
                break;
            }
            pre.apply(&r, &mut z);
            if periodic {
                project_mean(&mut z);
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..len {
                p[i] = z[i] + beta * p[i];
            }
        }
        if periodic {
            project_mean(x);
        }
    }
    op.apply(x, &mut q);
    for i in 0..len {
        r[i] = b[i] - q[i];
    }
    if periodic {
        project_mean(&mut r);
    }
    SolveStats {
        iterations,
        relative_residual: dot(&r, &r).sqrt() / bnorm,
    }
}

fn finish(stats: SolveStats, tol: f64) -> Result<SolveStats> {
    if stats.relative_residual <= tol {
        Ok(stats)
    } else {
        Err(Error::NotConverged {
            iterations: stats.iterations,
            residual: stats.relative_residual,
        })
    }
}

/// Solves `op u = f` on a Dirichlet grid starting from `x0` (zero if absent).
pub fn solve_with(
    op: &dyn LinearOperator,
    f: &GridFunction,
    x0: Option<&GridFunction>,
    opts: &SolverOptions,
) -> Result<(GridFunction, SolveStats)> {
    let grid = *op.grid();
    if grid.periodic {
        return invalid("use solve_periodic for periodic operators");
    }
    if !f.grid.same_shape(&grid) {
        return Err(Error::GridMismatch("right-hand side grid differs from the operator grid".into()));
    }
    if !(opts.tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {}", opts.tol));
    }
    let mut x = match x0 {
        Some(g) if g.grid.same_shape(&grid) => g.values.clone(),
        Some(_) => return Err(Error::GridMismatch("initial guess grid differs".into())),
        None => vec![0.0; grid.len()],
    };
    let pre = build_preconditioner(op, opts.preconditioner);
    let cap = opts.max_iter.unwrap_or(50 * grid.n);
    let stats = pcg(op, pre.as_ref(), &f.values, &mut x, opts.tol, cap, false);
    let stats = finish(stats, opts.tol)?;
    Ok((GridFunction::new(grid, x)?, stats))
}

/// Solves `op u = f` with zero Dirichlet data to relative residual `tol`.
pub fn solve_dirichlet(op: &dyn LinearOperator, f: &GridFunction, tol: f64) -> Result<GridFunction> {
    solve_with(op, f, None, &SolverOptions::with_tol(tol)).map(|(u, _)| u)
}

/// Solves the singular periodic problem `op u = b` for mean-zero `b`,
/// returning the mean-zero solution.
pub fn solve_periodic(
    op: &dyn LinearOperator,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<(GridFunction, SolveStats)> {
    let grid = *op.grid();
    if !grid.periodic {
        return invalid("solve_periodic needs a periodic operator");
    }
    let mut rhs = b.to_vec();
    project_mean(&mut rhs);
    let mut x = vec![0.0; grid.len()];
    let pre = build_preconditioner(op, opts.preconditioner);
    let cap = opts.max_iter.unwrap_or(50 * grid.n);
    let stats = pcg(op, pre.as_ref(), &rhs, &mut x, opts.tol, cap, true);
    let stats = finish(stats, opts.tol).map_err(|e| match e {
        Error::NotConverged { iterations, residual } => Error::Ellipticity(format!(
            "periodic cell problem stalled after {iterations} iterations at residual {residual:.3e}"
        )),
        other => other,
    })?;
    project_mean(&mut x);
    Ok((GridFunction::new(grid, x)?, stats))
}

/// Discrete Green column `G(·, y)`: solves `op g = δ_y / h^d`.
pub fn greens_column(op: &dyn LinearOperator, y: &[usize], tol: f64) -> Result<GridFunction> {
    let grid = *op.grid();
    if y.len() != grid.dim {
        return invalid(format!("node index has {} entries, grid has dimension {}", y.len(), grid.dim));
    }
    if y.iter().any(|&i| i >= grid.n) {
        return invalid(format!("node {y:?} is not an interior node"));
    }
    let mut f = GridFunction::zeros(grid);
    f.values[grid.ravel(y)] = 1.0 / grid.cell_volume();
    solve_dirichlet(op, &f, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{assemble_oscillatory, homogenized_operator};
    use crate::torus::{Pattern, TorusField};

    fn laplacian(n: usize, q: f64) -> crate::operator::DirichletOperator {
        let g = Grid::dirichlet(2, n).unwrap();
        homogenized_operator(&[1.0, 0.0, 0.0, 1.0], q, &g).unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let op = laplacian(15, 0.0);
        let u = solve_dirichlet(&op, &GridFunction::zeros(*op.grid()), 1e-10).unwrap();
        assert!(u.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fast_preconditioner_is_exact_for_constant_coefficients() {
        let op = laplacian(31, 1.0);
        let g = *op.grid();
        let f = GridFunction::from_fn(g, |x| x[0] * (1.0 - x[1]) + 0.3);
        let (_, stats) = solve_with(&op, &f, None, &SolverOptions::default()).unwrap();
        assert!(stats.iterations <= 2, "{stats:?}");
    }

    #[test]
    fn all_preconditioners_agree() {
        let g = Grid::dirichlet(2, 31).unwrap();
        let a = TorusField::pattern(Pattern::CheckerboardSmooth, 2, 32).unwrap();
        let q = GridFunction::from_fn(g, |x| 1.0 + x[0]);
        let op = assemble_oscillatory(&a, 0.25, &q, &g).unwrap();
        let f = GridFunction::constant(g, 1.0);
        let mut sols = Vec::new();
        for kind in [PreconditionerKind::None, PreconditionerKind::Jacobi, PreconditionerKind::FastPoisson] {
            let opts = SolverOptions {
                preconditioner: kind,
                ..Default::default()
            };
            sols.push(solve_with(&op, &f, None, &opts).unwrap().0);
        }
        for s in &sols[1..] {
            assert!(s.sub(&sols[0]).max_abs() < 1e-8 * sols[0].max_abs());
        }
    }

    #[test]
    fn reports_non_convergence() {
        let op = laplacian(31, 0.0);
        let f = GridFunction::constant(*op.grid(), 1.0);
        let opts = SolverOptions {
            tol: 1e-12,
            max_iter: Some(3),
            preconditioner: PreconditionerKind::None,
        };
        match solve_with(&op, &f, None, &opts) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert!(iterations >= 3);
                assert!(residual > 1e-12);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn green_column_rejects_out_of_range_node() {
        let op = laplacian(7, 0.0);
        assert!(greens_column(&op, &[7, 0], 1e-10).is_err());
        assert!(greens_column(&op, &[3], 1e-10).is_err());
    }

    #[test]
    fn periodic_solve_returns_mean_zero() {
        let a = TorusField::pattern(Pattern::CheckerboardSmooth, 2, 16).unwrap();
        let op = crate::operator::PeriodicOperator::new(&a, 16).unwrap();
        let b = op.affine_term(0);
        let (chi, _) = solve_periodic(&op, &b, &SolverOptions::with_tol(1e-12)).unwrap();
        assert!(chi.mean().abs() < 1e-12);
        let mut lc = vec![0.0; b.len()];
        op.apply(&chi.values, &mut lc);
        let err: f64 = lc.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err <= 1e-11 * bn);
    }
}
