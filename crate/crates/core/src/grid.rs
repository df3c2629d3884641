//! Uniform grids over the unit cube (zero-Dirichlet interior nodes) or the
//! periodic unit cell, and the scalar [`GridFunction`] that lives on them.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::pairwise_sum;

/// A uniform grid with `n` nodes per axis.
///
/// Dirichlet grids store only interior nodes: node `i` sits at `(i + 1) h`
/// with `h = extent / (n + 1)`. Periodic grids store one period: node `i`
/// sits at `i h` with `h = extent / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
    pub periodic: bool,
}

impl Grid {
    pub fn dirichlet(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, 1.0, false)
    }

    pub fn periodic(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, 1.0, true)
    }

    pub fn new(dim: usize, n: usize, extent: f64, periodic: bool) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return invalid(format!("dimension must be 2 or 3, got {dim}"));
        }
        if n < 2 {
            return invalid(format!("need at least 2 nodes per axis, got {n}"));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return invalid(format!("extent must be positive, got {extent}"));
        }
        Ok(Grid {
            dim,
            n,
            extent,
            periodic,
        })
    }

    /// Number of grid intervals per axis.
    pub fn cells(&self) -> usize {
        if self.periodic {
            self.n
        } else {
            self.n + 1
        }
    }

    pub fn h(&self) -> f64 {
        self.extent / self.cells() as f64
    }

    /// Volume weight of one node, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of node index `i` along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        if self.periodic {
            i as f64 * self.h()
        } else {
            (i + 1) as f64 * self.h()
        }
    }

    /// Multi-index of a flat (row-major, last axis fastest) node index.
    #[inline]
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    #[inline]
    pub fn ravel(&self, ix: &[usize]) -> usize {
        ix[..self.dim].iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Physical position of a node.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let ix = self.unravel(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.coord(ix[a]);
        }
        p
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.periodic == other.periodic
            && (self.extent - other.extent).abs() <= 1e-12 * self.extent
    }
}

/// Scalar field on a [`Grid`]. On Dirichlet grids the boundary trace is
/// implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every node position.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let p = grid.point(idx);
                f(&p[..grid.dim])
            })
            .collect();
        GridFunction { grid, values }
    }

    pub fn is_dirichlet(&self) -> bool {
        !self.grid.periodic
    }

    /// Discrete inner product `h^d Σ u v`.
    pub fn inner(&self, other: &GridFunction) -> f64 {
        debug_assert!(self.grid.same_shape(&other.grid));
        let prods: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        pairwise_sum(&prods) * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Cell average `h^d Σ u / extent^d`.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &GridFunction) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// Writes `x, y[, z], value` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let names = ["x", "y", "z"];
        writeln!(w, "{},value", names[..self.grid.dim].join(","))?;
        for (idx, v) in self.values.iter().enumerate() {
            let p = self.grid.point(idx);
            for c in &p[..self.grid.dim] {
                write!(w, "{c},")?;
            }
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    /// Compact binary dump: `n` and `d` as little-endian u64, then the values
    /// as little-endian f64 in row-major order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.grid.n as u64).to_le_bytes())?;
        w.write_all(&(self.grid.dim as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump written by [`GridFunction::write_binary`]. The header does
    /// not record the topology, so the caller states it.
    pub fn read_binary<R: Read>(mut r: R, periodic: bool) -> Result<Self> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let dim = u64::from_le_bytes(word) as usize;
        let grid = Grid::new(dim, n, 1.0, periodic)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut word)?;
            values.push(f64::from_le_bytes(word));
        }
        GridFunction::new(grid, values)
    }
}
