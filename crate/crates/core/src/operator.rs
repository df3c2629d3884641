//! Divergence-form finite-difference operators `−∂_i(a_ij ∂_j ·) + q·`.
//!
//! Diagonal entries of `A` live on cell faces (harmonic average of the two
//! adjacent nodal values) and give the 5-point / 7-point stencil. Off-diagonal
//! entries live at cell centres and couple the cell-averaged gradients, which
//! keeps the operator symmetric. The operator is defined through its energy:
//! `⟨L u, v⟩_h = B(u, v)` with the grid inner product `⟨·,·⟩_h = h^d Σ`.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFunction};
use crate::torus::TorusField;

/// A symmetric linear map on grid vectors.
pub trait LinearOperator: Sync + Send {
    fn grid(&self) -> &Grid;

    /// `out = L u`.
    fn apply(&self, u: &[f64], out: &mut [f64]);

    /// Diagonal of the matrix representation.
    fn diagonal(&self) -> Vec<f64>;

    /// Per-axis representative diffusion coefficient and a representative
    /// zeroth-order coefficient, used to build spectrally equivalent
    /// fast preconditioners.
    fn reference_coefficients(&self) -> (Vec<f64>, f64);
}

/// Shared coefficient storage for Dirichlet and periodic stencils.
#[derive(Debug, Clone)]
struct Coefficients {
    grid: Grid,
    /// One array per axis; the axis itself has `cells()` faces (Dirichlet:
    /// `n + 1`, periodic: `n`).
    faces: Arc<Vec<Vec<f64>>>,
    /// Off-diagonal entries at cell centres, `pairs.len()` values per cell.
    cross: Option<Arc<Vec<f64>>>,
    pairs: Vec<(usize, usize)>,
}

fn pairs_for(dim: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for p in 0..dim {
        for q in (p + 1)..dim {
            v.push((p, q));
        }
    }
    v
}

/// Iterates the lines of an array along `axis`: yields (line base offset
/// for nodes, line base offset for faces, stride).
fn for_each_line(
    dim: usize,
    n: usize,
    faces_per_line: usize,
    axis: usize,
    mut f: impl FnMut(usize, usize, usize),
) {
    let stride = n.pow((dim - 1 - axis) as u32);
    let outer = n.pow(axis as u32);
    for o in 0..outer {
        for t in 0..stride {
            f(o * n * stride + t, o * faces_per_line * stride + t, stride);
        }
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

impl Coefficients {
    /// Samples `A(x / eps)` (or `A(y)` on the periodic cell when `eps == 1`).
    fn from_torus(a: &TorusField, eps: f64, grid: Grid) -> Self {
        let dim = grid.dim;
        let n = grid.n;
        let h = grid.h();
        let cells = grid.cells();
        // physical position of node with extended index e (Dirichlet: e in
        // 0..=n+1 with 0 and n+1 on the boundary; periodic: e in 0..n)
        let pos = |e: usize| -> f64 { e as f64 * h };
        let ext = if grid.periodic { 0 } else { 1 };
        let mut faces = Vec::with_capacity(dim);
        for p in 0..dim {
            let mut arr = vec![0.0; cells * n.pow(dim as u32 - 1)];
            // layout: row-major multi-index with axis p running over faces
            let mut shape = vec![n; dim];
            shape[p] = cells;
            let total: usize = shape.iter().product();
            let mut mi = vec![0usize; dim];
            for slot in arr.iter_mut().take(total) {
                // face between extended nodes (mi[p]) and (mi[p] + 1) along p
                let mut ya = [0.0; 3];
                let mut yb = [0.0; 3];
                for a_ in 0..dim {
                    if a_ == p {
                        ya[a_] = pos(mi[a_]) / eps;
                        yb[a_] = pos(mi[a_] + 1) / eps;
                    } else {
                        ya[a_] = pos(mi[a_] + ext) / eps;
                        yb[a_] = ya[a_];
                    }
                }
                let va = a.entry(&ya[..dim], p, p);
                let vb = a.entry(&yb[..dim], p, p);
                *slot = harmonic(va, vb);
                // increment multi-index
                for a_ in (0..dim).rev() {
                    mi[a_] += 1;
                    if mi[a_] < shape[a_] {
                        break;
                    }
                    mi[a_] = 0;
                }
            }
            faces.push(arr);
        }
        let pairs = pairs_for(dim);
        let cross = if a.is_diagonal() {
            None
        } else {
            let ncell = cells.pow(dim as u32);
            let mut arr = Vec::with_capacity(ncell * pairs.len());
            for c in 0..ncell {
                let mut rem = c;
                let mut y = [0.0; 3];
                for a_ in (0..dim).rev() {
                    y[a_] = (((rem % cells) as f64) + 0.5) * h / eps;
                    rem /= cells;
                }
                for &(p, q) in &pairs {
                    arr.push(a.entry(&y[..dim], p, q));
                }
            }
            Some(Arc::new(arr))
        };
        Coefficients {
            grid,
            faces: Arc::new(faces),
            cross,
            pairs,
        }
    }

    fn constant(matrix: &[f64], grid: Grid) -> Self {
        let dim = grid.dim;
        let per_axis = grid.cells() * grid.n.pow(dim as u32 - 1);
        let faces = (0..dim).map(|p| vec![matrix[p * dim + p]; per_axis]).collect();
        let pairs = pairs_for(dim);
        let off: Vec<f64> = pairs.iter().map(|&(p, q)| matrix[p * dim + q]).collect();
        let cross = if off.iter().all(|v| *v == 0.0) {
            None
        } else {
            let ncell = grid.cells().pow(dim as u32);
            Some(Arc::new(off.iter().copied().cycle().take(ncell * off.len()).collect()))
        };
        Coefficients {
            grid,
            faces: Arc::new(faces),
            cross,
            pairs,
        }
    }

    /// Accumulates the diffusion part of `L u` (plus the affine term for the
    /// unit gradient along `shift`) into `out`.
    fn apply_diffusion(&self, u: &[f64], shift: Option<usize>, out: &mut [f64]) {
        let g = &self.grid;
        let (dim, n) = (g.dim, g.n);
        let h = g.h();
        let inv_h2 = 1.0 / (h * h);
        let inv_h = 1.0 / h;
        let cells = g.cells();
        for p in 0..dim {
            let faces = &self.faces[p];
            let add = if shift == Some(p) { inv_h } else { 0.0 };
            for_each_line(dim, n, cells, p, |nb, fb, s| {
                if g.periodic {
                    for f in 0..n {
                        let l = nb + f * s;
                        let r = nb + ((f + 1) % n) * s;
                        let a = faces[fb + f * s];
                        let flux = a * ((u[r] - u[l]) * inv_h2 + add);
                        out[l] -= flux;
                        out[r] += flux;
                    }
                } else {
                    for f in 0..=n {
                        let a = faces[fb + f * s];
                        let ul = if f > 0 { u[nb + (f - 1) * s] } else { 0.0 };
                        let ur = if f < n { u[nb + f * s] } else { 0.0 };
                        let flux = a * ((ur - ul) * inv_h2 + add);
                        if f > 0 {
                            out[nb + (f - 1) * s] -= flux;
                        }
                        if f < n {
                            out[nb + f * s] += flux;
                        }
                    }
                }
            });
        }
        if let Some(cross) = &self.cross {
            self.apply_cross(cross, u, shift, out);
        }
    }

    /// Visits every cell with the flat node indices of its `2^d` corners
    /// (`None` for boundary corners).
    fn for_each_cell(&self, mut f: impl FnMut(usize, &[Option<usize>])) {
        let g = &self.grid;
        let (dim, n) = (g.dim, g.n);
        let cells = g.cells();
        let ncell = cells.pow(dim as u32);
        let ncorner = 1usize << dim;
        let mut corners = vec![None; ncorner];
        let mut ci = [0usize; 3];
        for c in 0..ncell {
            let mut rem = c;
            for a in (0..dim).rev() {
                ci[a] = rem % cells;
                rem /= cells;
            }
            for (k, slot) in corners.iter_mut().enumerate() {
                let mut flat = 0usize;
                let mut inside = true;
                for a in 0..dim {
                    let bit = (k >> (dim - 1 - a)) & 1;
                    let idx = if g.periodic {
                        (ci[a] + bit) % n
                    } else {
                        let e = ci[a] + bit; // extended index, 0 and n+1 on boundary
                        if e == 0 || e == n + 1 {
                            inside = false;
                            0
                        } else {
                            e - 1
                        }
                    };
                    flat = flat * n + idx;
                }
                *slot = if inside { Some(flat) } else { None };
            }
            f(c, &corners);
        }
    }

    /// Cell-averaged gradient component along `p` from corner values.
    fn cell_gradient(dim: usize, h: f64, vals: &[f64], p: usize) -> f64 {
        let half = (1usize << (dim - 1)) as f64;
        let mut acc = 0.0;
        for (k, v) in vals.iter().enumerate() {
            if (k >> (dim - 1 - p)) & 1 == 1 {
                acc += v;
            } else {
                acc -= v;
            }
        }
        acc / (half * h)
    }

    fn apply_cross(&self, cross: &[f64], u: &[f64], shift: Option<usize>, out: &mut [f64]) {
        let dim = self.grid.dim;
        let h = self.grid.h();
        let npairs = self.pairs.len();
        let half = (1usize << (dim - 1)) as f64;
        let mut vals = vec![0.0; 1 << dim];
        let mut grad = [0.0; 3];
        self.for_each_cell(|c, corners| {
            for (v, k) in vals.iter_mut().zip(corners) {
                *v = k.map_or(0.0, |k| u[k]);
            }
            for (p, gp) in grad.iter_mut().enumerate().take(dim) {
                *gp = Self::cell_gradient(dim, h, &vals, p);
                if shift == Some(p) {
                    *gp += 1.0;
                }
            }
            for (pi, &(p, q)) in self.pairs.iter().enumerate() {
                let a = cross[c * npairs + pi];
                if a == 0.0 {
                    continue;
                }
                for (k, slot) in corners.iter().enumerate() {
                    if let Some(idx) = slot {
                        let sp = if (k >> (dim - 1 - p)) & 1 == 1 { 1.0 } else { -1.0 };
                        let sq = if (k >> (dim - 1 - q)) & 1 == 1 { 1.0 } else { -1.0 };
                        out[*idx] += a * (sp * grad[q] + sq * grad[p]) / (half * h);
                    }
                }
            }
        });
    }

    fn diagonal_diffusion(&self) -> Vec<f64> {
        let g = &self.grid;
        let (dim, n) = (g.dim, g.n);
        let h = g.h();
        let inv_h2 = 1.0 / (h * h);
        let mut diag = vec![0.0; g.len()];
        for p in 0..dim {
            let faces = &self.faces[p];
            for_each_line(dim, n, g.cells(), p, |nb, fb, s| {
                if g.periodic {
                    for f in 0..n {
                        let a = faces[fb + f * s] * inv_h2;
                        diag[nb + f * s] += a;
                        diag[nb + ((f + 1) % n) * s] += a;
                    }
                } else {
                    for f in 0..=n {
                        let a = faces[fb + f * s] * inv_h2;
                        if f > 0 {
                            diag[nb + (f - 1) * s] += a;
                        }
                        if f < n {
                            diag[nb + f * s] += a;
                        }
                    }
                }
            });
        }
        if let Some(cross) = &self.cross {
            let npairs = self.pairs.len();
            let half = (1usize << (dim - 1)) as f64;
            self.for_each_cell(|c, corners| {
                for (pi, &(p, q)) in self.pairs.iter().enumerate() {
                    let a = cross[c * npairs + pi];
                    for (k, slot) in corners.iter().enumerate() {
                        if let Some(idx) = slot {
                            let sp = if (k >> (dim - 1 - p)) & 1 == 1 { 1.0 } else { -1.0 };
                            let sq = if (k >> (dim - 1 - q)) & 1 == 1 { 1.0 } else { -1.0 };
                            diag[*idx] += a * 2.0 * sp * sq / (half * half * h * h);
                        }
                    }
                }
            });
        }
        diag
    }

    fn reference(&self) -> Vec<f64> {
        self.faces
            .iter()
            .map(|f| {
                let (lo, hi) = f
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
                (lo * hi).sqrt()
            })
            .collect()
    }
}

/// Zero-Dirichlet operator `−∂_i(a_ij ∂_j ·) + q·` on the interior nodes.
#[derive(Debug, Clone)]
pub struct DirichletOperator {
    coeffs: Coefficients,
    potential: Arc<Vec<f64>>,
}

impl DirichletOperator {
    /// Potential values at the nodes.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Same diffusion coefficients with a different zeroth-order term.
    pub fn with_potential(&self, potential: &GridFunction) -> Result<Self> {
        check_potential(potential, &self.coeffs.grid)?;
        Ok(DirichletOperator {
            coeffs: self.coeffs.clone(),
            potential: Arc::new(potential.values.clone()),
        })
    }

    /// Same diffusion coefficients with a constant zeroth-order term.
    pub fn with_constant_potential(&self, q: f64) -> Result<Self> {
        let g = self.coeffs.grid;
        self.with_potential(&GridFunction::constant(g, q))
    }

    /// Applies only the diffusion part.
    pub fn apply_diffusion(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.coeffs.apply_diffusion(u, None, out);
    }

    /// Face coefficients along `axis`.
    pub fn face_coefficients(&self, axis: usize) -> &[f64] {
        &self.coeffs.faces[axis]
    }
}

impl LinearOperator for DirichletOperator {
    fn grid(&self) -> &Grid {
        &self.coeffs.grid
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        for ((o, q), x) in out.iter_mut().zip(self.potential.iter()).zip(u) {
            *o = q * x;
        }
        self.coeffs.apply_diffusion(u, None, out);
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = self.coeffs.diagonal_diffusion();
        for (v, q) in d.iter_mut().zip(self.potential.iter()) {
            *v += q;
        }
        d
    }

    fn reference_coefficients(&self) -> (Vec<f64>, f64) {
        let q = self.potential.iter().sum::<f64>() / self.potential.len() as f64;
        (self.coeffs.reference(), q)
    }
}

fn check_potential(potential: &GridFunction, grid: &Grid) -> Result<()> {
    if !potential.grid.same_shape(grid) {
        return invalid("potential lives on a different grid");
    }
    if let Some(v) = potential.values.iter().find(|v| !(**v >= 0.0)) {
        return invalid(format!("potential must be nonnegative, found {v}"));
    }
    Ok(())
}

/// The oscillatory operator `−∂_i(a_ij(x/ε) ∂_j ·) + q·` on `grid`.
pub fn assemble_oscillatory(
    a: &TorusField,
    eps: f64,
    potential: &GridFunction,
    grid: &Grid,
) -> Result<DirichletOperator> {
    if !(eps > 0.0) || !eps.is_finite() {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    if grid.periodic {
        return invalid("oscillatory operator needs a Dirichlet grid");
    }
    if a.dim() != grid.dim {
        return invalid("coefficient dimension does not match the grid");
    }
    check_potential(potential, grid)?;
    Ok(DirichletOperator {
        coeffs: Coefficients::from_torus(a, eps, *grid),
        potential: Arc::new(potential.values.clone()),
    })
}

/// Constant-coefficient operator `−ā_ij ∂_ij + q̄` of the homogenized problem.
pub fn homogenized_operator(a_bar: &[f64], q_bar: f64, grid: &Grid) -> Result<DirichletOperator> {
    let dim = grid.dim;
    if a_bar.len() != dim * dim {
        return invalid("effective matrix has the wrong size");
    }
    let field = TorusField::constant(dim, a_bar)?;
    let _ = field;
    if !(q_bar >= 0.0) {
        return invalid(format!("q_bar must be nonnegative, got {q_bar}"));
    }
    Ok(DirichletOperator {
        coeffs: Coefficients::constant(a_bar, *grid),
        potential: Arc::new(vec![q_bar; grid.len()]),
    })
}

/// Checks the resolution rule: at least `min_cells` grid cells per period.
pub fn check_resolution(grid: &Grid, eps: f64, min_cells: f64) -> Result<()> {
    let per_period = eps / grid.h();
    if per_period + 1e-9 < min_cells {
        return invalid(format!(
            "eps = {eps} resolved by only {per_period:.2} cells (need {min_cells})"
        ));
    }
    Ok(())
}

/// Periodic cell operator `−∂_i(a_ij ∂_j ·)` used for the correctors.
#[derive(Debug, Clone)]
pub struct PeriodicOperator {
    coeffs: Coefficients,
}

impl PeriodicOperator {
    pub fn new(a: &TorusField, cell_n: usize) -> Result<Self> {
        let grid = Grid::periodic(a.dim(), cell_n)?;
        Ok(PeriodicOperator {
            coeffs: Coefficients::from_torus(a, 1.0, grid),
        })
    }

    /// `L 0` with the unit affine gradient along `axis`, i.e. the discrete
    /// `−div(A e_k)`.
    pub fn affine_term(&self, axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.coeffs.grid.len()];
        let zero = vec![0.0; out.len()];
        self.coeffs.apply_diffusion(&zero, Some(axis), &mut out);
        out
    }

    /// Discrete energy pairing `B(u + y_i, v + y_j)` on the unit cell.
    pub fn shifted_pairing(&self, u: &[f64], i: usize, v: &[f64], j: usize) -> f64 {
        let g = self.coeffs.grid;
        let mut lu = vec![0.0; g.len()];
        self.coeffs.apply_diffusion(u, Some(i), &mut lu);
        // B(u + y_i, v + y_j) = ⟨L(u + y_i), v⟩ + B(u + y_i, y_j);
        // the second term is the flux of u + y_i along j averaged over the cell.
        let vol = g.cell_volume();
        let first: f64 = lu.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * vol;
        first + self.mean_flux(u, i, j)
    }

    /// Cell average of the discrete flux `e_j · A(∇u + e_i)`.
    fn mean_flux(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let c = &self.coeffs;
        let g = c.grid;
        let (dim, n) = (g.dim, g.n);
        let h = g.h();
        let total_faces = g.len() as f64;
        let mut acc = 0.0;
        // diagonal part: faces along j
        let faces = &c.faces[j];
        for_each_line(dim, n, n, j, |nb, fb, s| {
            for f in 0..n {
                let l = nb + f * s;
                let r = nb + ((f + 1) % n) * s;
                let grad = (u[r] - u[l]) / h + if i == j { 1.0 } else { 0.0 };
                acc += faces[fb + f * s] * grad;
            }
        });
        let mut result = acc / total_faces;
        if let Some(cross) = &c.cross {
            let npairs = c.pairs.len();
            let mut vals = vec![0.0; 1 << dim];
            let mut sum = 0.0;
            let ncell = g.len() as f64;
            c.for_each_cell(|cell, corners| {
                for (v, k) in vals.iter_mut().zip(corners) {
                    *v = k.map_or(0.0, |k| u[k]);
                }
                for (pi, &(p, q)) in c.pairs.iter().enumerate() {
                    let other = if p == j {
                        q
                    } else if q == j {
                        p
                    } else {
                        continue;
                    };
                    let mut gr = Coefficients::cell_gradient(dim, h, &vals, other);
                    if other == i {
                        gr += 1.0;
                    }
                    sum += cross[cell * npairs + pi] * gr;
                }
            });
            result += sum / ncell;
        }
        result
    }
}

impl LinearOperator for PeriodicOperator {
    fn grid(&self) -> &Grid {
        &self.coeffs.grid
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.coeffs.apply_diffusion(u, None, out);
    }

    fn diagonal(&self) -> Vec<f64> {
        self.coeffs.diagonal_diffusion()
    }

    fn reference_coefficients(&self) -> (Vec<f64>, f64) {
        (self.coeffs.reference(), 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::Pattern;

    fn rand_vec(len: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn identity_is_five_point_laplacian() {
        let grid = Grid::dirichlet(2, 6).unwrap();
        let a = TorusField::pattern(Pattern::Identity, 2, 1).unwrap();
        let op = assemble_oscillatory(&a, 0.3, &GridFunction::zeros(grid), &grid).unwrap();
        let u = rand_vec(grid.len(), 3);
        let mut out = vec![0.0; grid.len()];
        op.apply(&u, &mut out);
        let n = grid.n;
        let h2 = grid.h() * grid.h();
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                0.0
            } else {
                u[i as usize * n + j as usize]
            }
        };
        for i in 0..n as isize {
            for j in 0..n as isize {
                let lap = (4.0 * at(i, j) - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1)) / h2;
                assert!((out[i as usize * n + j as usize] - lap).abs() < 1e-9 * lap.abs().max(1.0));
            }
        }
    }

    #[test]
    fn constant_potential_shifts_spectrum() {
        let grid = Grid::dirichlet(2, 5).unwrap();
        let a = TorusField::pattern(Pattern::Identity, 2, 1).unwrap();
        let op0 = assemble_oscillatory(&a, 1.0, &GridFunction::zeros(grid), &grid).unwrap();
        let op1 = op0.with_constant_potential(2.5).unwrap();
        let u = rand_vec(grid.len(), 7);
        let (mut a0, mut a1) = (vec![0.0; u.len()], vec![0.0; u.len()]);
        op0.apply(&u, &mut a0);
        op1.apply(&u, &mut a1);
        for ((x, y), v) in a0.iter().zip(&a1).zip(&u) {
            assert!((y - x - 2.5 * v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_eps_and_negative_potential() {
        let grid = Grid::dirichlet(2, 5).unwrap();
        let a = TorusField::pattern(Pattern::Identity, 2, 1).unwrap();
        let z = GridFunction::zeros(grid);
        assert!(assemble_oscillatory(&a, 0.0, &z, &grid).is_err());
        assert!(assemble_oscillatory(&a, -1.0, &z, &grid).is_err());
        let mut q = z.clone();
        q.values[3] = -1e-3;
        assert!(assemble_oscillatory(&a, 0.1, &q, &grid).is_err());
    }

    #[test]
    fn symmetric_with_cross_terms_in_2d_and_3d() {
        for dim in [2, 3] {
            let m = 8;
            let a = TorusField::from_fn(dim, m, |y| {
                let mut b = vec![0.0; dim * dim];
                for i in 0..dim {
                    b[i * dim + i] = 2.0 + (6.2 * y[0]).sin() * 0.5;
                }
                b[1] = 0.3 * (std::f64::consts::TAU * y[1]).cos();
                b[dim] = b[1];
                b
            })
            .unwrap();
            let grid = Grid::dirichlet(dim, 5).unwrap();
            let q = GridFunction::from_fn(grid, |x| x[0]);
            let op = assemble_oscillatory(&a, 0.25, &q, &grid).unwrap();
            let u = rand_vec(grid.len(), 11);
            let v = rand_vec(grid.len(), 12);
            let (mut lu, mut lv) = (vec![0.0; u.len()], vec![0.0; u.len()]);
            op.apply(&u, &mut lu);
            op.apply(&v, &mut lv);
            let (x, y) = (dot(&lu, &v), dot(&u, &lv));
            assert!((x - y).abs() < 1e-10 * x.abs().max(1.0), "{x} vs {y}");
            // diagonal agrees with unit-vector probes
            let d = op.diagonal();
            for k in [0, 7, grid.len() - 1] {
                let mut e = vec![0.0; grid.len()];
                e[k] = 1.0;
                let mut le = vec![0.0; grid.len()];
                op.apply(&e, &mut le);
                assert!((le[k] - d[k]).abs() < 1e-9 * d[k]);
            }
        }
    }

    #[test]
    fn periodic_operator_kills_constants() {
        let a = TorusField::pattern(Pattern::CheckerboardSmooth, 2, 16).unwrap();
        let op = PeriodicOperator::new(&a, 16).unwrap();
        let ones = vec![1.0; 256];
        let mut out = vec![0.0; 256];
        op.apply(&ones, &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-10));
        let b = op.affine_term(0);
        assert!(b.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn resolution_rule() {
        let g = Grid::dirichlet(2, 511).unwrap();
        assert!(check_resolution(&g, 1.0 / 64.0, 8.0).is_ok());
        let g = Grid::dirichlet(2, 255).unwrap();
        assert!(check_resolution(&g, 1.0 / 64.0, 8.0).is_err());
    }
}
