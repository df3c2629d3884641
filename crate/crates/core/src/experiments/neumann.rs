use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::FieldRealization;
use crate::grid::GridFunction;
use crate::operator::DirichletOperator;
use crate::solver::{solve_with, SolverOptions};

/// The Neumann-series split `u − v = w + s + G ν G ν (u − v)` for one
/// realization, with `w = −G ν v` and `s = G ν G ν v`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeumannDecomposition {
    #[serde(skip)]
    pub v: Option<GridFunction>,
    #[serde(skip)]
    pub w: Option<GridFunction>,
    #[serde(skip)]
    pub second: Option<GridFunction>,
    #[serde(skip)]
    pub remainder: Option<GridFunction>,
    pub v_norm: f64,
    pub w_norm: f64,
    pub second_norm: f64,
    pub remainder_norm: f64,
    /// `‖(u − v) − w − s − G ν G ν (u − v)‖ / ‖u − v‖`.
    pub identity_error: f64,
}

/// Identity violations above this multiple of the solver tolerance are
/// reported as inconsistencies.
pub const IDENTITY_FACTOR: f64 = 100.0;

/// Computes the first Neumann terms for `base = L_ε` (potential `q̄`) and
/// checks the algebraic identity with two extra solves.
pub fn neumann_decomposition(
    base: &DirichletOperator,
    f: &GridFunction,
    field: &FieldRealization,
    opts: &SolverOptions,
) -> Result<NeumannDecomposition> {
    let nu = field.nu();
    let (v, _) = solve_with(base, f, None, opts)?;
    let (w, _) = solve_with(base, &nu.mul(&v).scaled(-1.0), None, opts)?;
    let (s, _) = solve_with(base, &nu.mul(&w).scaled(-1.0), None, opts)?;
    let full = base.with_potential(&field.q)?;
    let (u, _) = solve_with(&full, f, Some(&v.add(&w).add(&s)), opts)?;
    let d = u.sub(&v);
    let (y, _) = solve_with(base, &nu.mul(&d), None, opts)?;
    let (t, _) = solve_with(base, &nu.mul(&y), None, opts)?;
    let gap = d.sub(&w).sub(&s).sub(&t);
    let scale = d.l2_norm();
    let identity_error = if scale > 0.0 { gap.l2_norm() / scale } else { gap.l2_norm() };
    if !(identity_error <= IDENTITY_FACTOR * opts.tol) {
        return Err(Error::Inconsistent(format!(
            "Neumann identity violated: relative error {identity_error:.3e} exceeds {:.1e}",
            IDENTITY_FACTOR * opts.tol
        )));
    }
    Ok(NeumannDecomposition {
        v_norm: v.l2_norm(),
        w_norm: w.l2_norm(),
        second_norm: s.l2_norm(),
        remainder_norm: t.l2_norm(),
        identity_error,
        v: Some(v),
        w: Some(w),
        second: Some(s),
        remainder: Some(t),
    })
}
