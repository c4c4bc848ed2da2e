use crate::error::{NegfError, Result};
use crate::greens::grid::TimeGrid;
use crate::linalg::{expi, CMatrix, CVector, C64};

/// Matrix-valued function on grid pairs `(t_k, t_k')`, stored block by block.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeKernel {
    grid: TimeGrid,
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

const ZERO: C64 = C64::new(0.0, 0.0);

impl TwoTimeKernel {
    pub fn zeros(grid: TimeGrid, rows: usize, cols: usize) -> Self {
        let n = grid.len();
        Self {
            grid,
            rows,
            cols,
            data: vec![ZERO; n * n * rows * cols],
        }
    }

    pub fn from_fn(grid: TimeGrid, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> CMatrix) -> Self {
        let mut out = Self::zeros(grid, rows, cols);
        for k in 0..grid.len() {
            for kp in 0..grid.len() {
                out.set_matrix(k, kp, &f(k, kp));
            }
        }
        out
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn offset(&self, k: usize, kp: usize) -> usize {
        (k * self.grid.len() + kp) * self.rows * self.cols
    }

    pub fn block(&self, k: usize, kp: usize) -> &[C64] {
        let o = self.offset(k, kp);
        &self.data[o..o + self.rows * self.cols]
    }

    pub fn block_mut(&mut self, k: usize, kp: usize) -> &mut [C64] {
        let o = self.offset(k, kp);
        let len = self.rows * self.cols;
        &mut self.data[o..o + len]
    }

    pub fn get(&self, k: usize, kp: usize, i: usize, j: usize) -> C64 {
        self.data[self.offset(k, kp) + i * self.cols + j]
    }

    pub fn set(&mut self, k: usize, kp: usize, i: usize, j: usize, z: C64) {
        let o = self.offset(k, kp) + i * self.cols + j;
        self.data[o] = z;
    }

    pub fn matrix(&self, k: usize, kp: usize) -> CMatrix {
        CMatrix::from_row_slice(self.rows, self.cols, self.block(k, kp))
    }

    pub fn set_matrix(&mut self, k: usize, kp: usize, m: &CMatrix) {
        assert_eq!((m.nrows(), m.ncols()), (self.rows, self.cols), "block shape");
        let cols = self.cols;
        let b = self.block_mut(k, kp);
        for i in 0..m.nrows() {
            for j in 0..cols {
                b[i * cols + j] = m[(i, j)];
            }
        }
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        self.grid.same_as(&other.grid)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(NegfError::Dimension {
                context: "kernel block shape".into(),
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }

    pub fn scale(&self, z: C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= z);
        out
    }

    /// `self + z·other`
    pub fn axpy(&self, z: C64, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += z * b;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }

    /// Largest entry over grid pairs selected by `keep`.
    pub fn max_abs_where(&self, keep: impl Fn(usize, usize) -> bool) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..self.grid.len() {
            for kp in 0..self.grid.len() {
                if keep(k, kp) {
                    m = self.block(k, kp).iter().fold(m, |acc, z| acc.max(z.norm()));
                }
            }
        }
        m
    }

    /// `K†(s,s') = K(s',s)†`
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.grid, self.cols, self.rows);
        for k in 0..self.grid.len() {
            for kp in 0..self.grid.len() {
                let src = self.block(kp, k);
                let (r, c) = (self.rows, self.cols);
                let dst = out.block_mut(k, kp);
                for i in 0..r {
                    for j in 0..c {
                        dst[j * r + i] = src[i * c + j].conj();
                    }
                }
            }
        }
        out
    }

    /// Scalar kernel `⟨u|K(s,s')|v⟩`.
    pub fn sandwich(&self, u: &CVector, v: &CVector) -> ScalarKernel {
        let n = self.grid.len();
        let mut values = vec![ZERO; n * n];
        for k in 0..n {
            for kp in 0..n {
                let b = self.block(k, kp);
                let mut acc = ZERO;
                for i in 0..self.rows {
                    let ui = u[i].conj();
                    if ui == ZERO {
                        continue;
                    }
                    for j in 0..self.cols {
                        acc += ui * b[i * self.cols + j] * v[j];
                    }
                }
                values[k * n + kp] = acc;
            }
        }
        ScalarKernel { grid: self.grid, values }
    }

    /// Zeroes the grid pairs rejected by `keep` and multiplies the diagonal by `diag`.
    pub fn restricted(&self, keep: impl Fn(usize, usize) -> bool, diag: f64) -> Self {
        let mut out = self.clone();
        for k in 0..self.grid.len() {
            for kp in 0..self.grid.len() {
                let b = out.block_mut(k, kp);
                if k == kp {
                    b.iter_mut().for_each(|z| *z *= diag);
                } else if !keep(k, kp) {
                    b.iter_mut().for_each(|z| *z = ZERO);
                }
            }
        }
        out
    }

    /// Multiplies block `(k,k')` by `e^{i(t_k'−t_k)E}`.
    pub fn with_phase(&self, energy: f64) -> Self {
        if energy == 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        for k in 0..self.grid.len() {
            for kp in 0..self.grid.len() {
                let ph = expi((self.grid.t(kp) - self.grid.t(k)) * energy);
                out.block_mut(k, kp).iter_mut().for_each(|z| *z *= ph);
            }
        }
        out
    }

    /// Same kernel on a sub-block of rows and columns.
    pub fn sub_block(&self, row0: usize, nrows: usize, col0: usize, ncols: usize) -> Self {
        let mut out = Self::zeros(self.grid, nrows, ncols);
        for k in 0..self.grid.len() {
            for kp in 0..self.grid.len() {
                let src = self.block(k, kp);
                let c = self.cols;
                let dst = out.block_mut(k, kp);
                for i in 0..nrows {
                    for j in 0..ncols {
                        dst[i * ncols + j] = src[(row0 + i) * c + col0 + j];
                    }
                }
            }
        }
        out
    }

    /// Places this kernel's blocks at `(row0, col0)` inside zero blocks of the given shape.
    pub fn embedded(&self, rows: usize, cols: usize, row0: usize, col0: usize) -> Self {
        let mut out = Self::zeros(self.grid, rows, cols);
        for k in 0..self.grid.len() {
            for kp in 0..self.grid.len() {
                let src = self.block(k, kp);
                let dst = out.block_mut(k, kp);
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        dst[(row0 + i) * cols + col0 + j] = src[i * self.cols + j];
                    }
                }
            }
        }
        out
    }
}

/// Complex scalar function on grid pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarKernel {
    pub grid: TimeGrid,
    pub values: Vec<C64>,
}

impl ScalarKernel {
    pub fn at(&self, k: usize, kp: usize) -> C64 {
        self.values[k * self.grid.len() + kp]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Lesser,
    Greater,
    Retarded,
    Advanced,
    Spectral,
    Keldysh,
}

impl Species {
    pub fn name(&self) -> &'static str {
        match self {
            Species::Lesser => "lesser",
            Species::Greater => "greater",
            Species::Retarded => "retarded",
            Species::Advanced => "advanced",
            Species::Spectral => "spectral",
            Species::Keldysh => "keldysh",
        }
    }
}

/// A Green's function sampled on the grid. Values are stored at `E = 0`;
/// the energy enters as the phase `e^{i(s'−s)E}` when values are read.
#[derive(Debug, Clone, PartialEq)]
pub struct GFKernel {
    pub species: Species,
    pub block: String,
    energy: f64,
    values: TwoTimeKernel,
}

impl GFKernel {
    pub fn new(species: Species, block: impl Into<String>, values: TwoTimeKernel) -> Self {
        Self {
            species,
            block: block.into(),
            energy: 0.0,
            values,
        }
    }

    pub fn with_energy(&self, energy: f64) -> Self {
        Self {
            energy,
            ..self.clone()
        }
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn grid(&self) -> &TimeGrid {
        self.values.grid()
    }

    pub fn stored(&self) -> &TwoTimeKernel {
        &self.values
    }

    pub fn value(&self, k: usize, kp: usize) -> CMatrix {
        let g = self.grid();
        self.values.matrix(k, kp) * expi((g.t(kp) - g.t(k)) * self.energy)
    }

    /// Values with the energy phase applied.
    pub fn materialize(&self) -> TwoTimeKernel {
        self.values.with_phase(self.energy)
    }

    /// Retarded or advanced kernel with the one-sided limit on the diagonal,
    /// the form that enters time integrals.
    pub fn causal(&self) -> Result<TwoTimeKernel> {
        let keep: fn(usize, usize) -> bool = match self.species {
            Species::Retarded => |k, kp| kp <= k,
            Species::Advanced => |k, kp| kp >= k,
            _ => {
                return Err(NegfError::Precondition(format!(
                    "{} kernel has no causal form",
                    self.species.name()
                )))
            }
        };
        Ok(self.materialize().restricted(keep, 2.0))
    }
}
