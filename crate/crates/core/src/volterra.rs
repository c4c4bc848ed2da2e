//! Discrete Volterra operators `V = I − B` with lower-triangular kernels.
//!
//! All time integrals use the trapezoid rule on the shared grid, with the
//! kernel's one-sided limit on the diagonal.

use crate::error::{NegfError, Result};
use crate::greens::{TimeGrid, TwoTimeKernel};
use crate::linalg::{CMatrix, CVector, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// `out(r×c) += α a(r×m) b(m×c)`, all row-major.
fn gemm_acc(out: &mut [C64], a: &[C64], b: &[C64], r: usize, m: usize, c: usize, alpha: C64) {
    for i in 0..r {
        for l in 0..m {
            let ail = a[i * m + l] * alpha;
            if ail == ZERO {
                continue;
            }
            let brow = &b[l * c..(l + 1) * c];
            let orow = &mut out[i * c..(i + 1) * c];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += ail * bv;
            }
        }
    }
}

fn chain_check(a: &TwoTimeKernel, b: &TwoTimeKernel) -> Result<()> {
    a.grid().same_as(b.grid())?;
    if a.cols() != b.rows() {
        return Err(NegfError::Dimension {
            context: "kernel product inner dimension".into(),
            expected: a.cols(),
            found: b.rows(),
        });
    }
    Ok(())
}

/// `(A∘B)(s,s') = ∫_{s'}^{s} A(s,r)B(r,s')dr` for two lower-triangular kernels.
pub fn compose_lower(a: &TwoTimeKernel, b: &TwoTimeKernel) -> Result<TwoTimeKernel> {
    chain_check(a, b)?;
    let g = *a.grid();
    let (r, m, c) = (a.rows(), a.cols(), b.cols());
    let mut out = TwoTimeKernel::zeros(g, r, c);
    for k in 0..g.len() {
        for kp in 0..k {
            let mut acc = vec![ZERO; r * c];
            for q in kp..=k {
                let w = g.weight(kp, k, q);
                gemm_acc(&mut acc, a.block(k, q), b.block(q, kp), r, m, c, C64::new(w, 0.0));
            }
            out.block_mut(k, kp).copy_from_slice(&acc);
        }
    }
    Ok(out)
}

/// `(L·F)(s,s') = ∫_0^{s} L(s,r)F(r,s')dr` for lower-triangular `L` and any `F`.
pub fn retarded_apply(l: &TwoTimeKernel, f: &TwoTimeKernel) -> Result<TwoTimeKernel> {
    chain_check(l, f)?;
    let g = *l.grid();
    let (r, m, c) = (l.rows(), l.cols(), f.cols());
    let mut out = TwoTimeKernel::zeros(g, r, c);
    for k in 0..g.len() {
        for kp in 0..g.len() {
            let mut acc = vec![ZERO; r * c];
            for q in 0..=k {
                let w = g.weight(0, k, q);
                gemm_acc(&mut acc, l.block(k, q), f.block(q, kp), r, m, c, C64::new(w, 0.0));
            }
            out.block_mut(k, kp).copy_from_slice(&acc);
        }
    }
    Ok(out)
}

/// `(F·U)(s,s') = ∫_0^{s'} F(s,r)U(r,s')dr` for any `F` and upper-triangular `U`.
pub fn advanced_apply(f: &TwoTimeKernel, u: &TwoTimeKernel) -> Result<TwoTimeKernel> {
    chain_check(f, u)?;
    let g = *f.grid();
    let (r, m, c) = (f.rows(), f.cols(), u.cols());
    let mut out = TwoTimeKernel::zeros(g, r, c);
    for k in 0..g.len() {
        for kp in 0..g.len() {
            let mut acc = vec![ZERO; r * c];
            for q in 0..=kp {
                let w = g.weight(0, kp, q);
                gemm_acc(&mut acc, f.block(k, q), u.block(q, kp), r, m, c, C64::new(w, 0.0));
            }
            out.block_mut(k, kp).copy_from_slice(&acc);
        }
    }
    Ok(out)
}

/// `(v·B)(s,s') = v(s)B(s,s')` for a time-local matrix function `v`.
pub fn local_left(v: &[CMatrix], b: &TwoTimeKernel) -> Result<TwoTimeKernel> {
    local_product(v, b, true)
}

/// `(B·v)(s,s') = B(s,s')v(s')`.
pub fn local_right(b: &TwoTimeKernel, v: &[CMatrix]) -> Result<TwoTimeKernel> {
    local_product(v, b, false)
}

fn local_product(v: &[CMatrix], b: &TwoTimeKernel, left: bool) -> Result<TwoTimeKernel> {
    let g = *b.grid();
    if v.len() != g.len() {
        return Err(NegfError::GridMismatch(format!("{} local values for {} grid points", v.len(), g.len())));
    }
    let (r, c) = if left { (v[0].nrows(), b.cols()) } else { (b.rows(), v[0].ncols()) };
    let mut out = TwoTimeKernel::zeros(g, r, c);
    for k in 0..g.len() {
        for kp in 0..g.len() {
            let m = if left { &v[k] * b.matrix(k, kp) } else { b.matrix(k, kp) * &v[kp] };
            out.set_matrix(k, kp, &m);
        }
    }
    Ok(out)
}

/// Lower-triangular kernel of a Volterra operator `V = I − B`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraKernel {
    kernel: TwoTimeKernel,
    /// `(b, γ)` with `‖B(s,s')‖ ≤ b e^{γ(s−s')}`.
    pub bound: Option<(f64, f64)>,
}

pub type GridFunction = Vec<CVector>;

impl VolterraKernel {
    pub fn new(kernel: TwoTimeKernel) -> Result<Self> {
        if kernel.rows() != kernel.cols() {
            return Err(NegfError::Dimension {
                context: "Volterra kernel must be square".into(),
                expected: kernel.rows(),
                found: kernel.cols(),
            });
        }
        if kernel.max_abs_where(|k, kp| kp > k) != 0.0 {
            return Err(NegfError::Precondition("Volterra kernel has support above the diagonal".into()));
        }
        Ok(Self { kernel, bound: None })
    }

    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self {
            kernel: TwoTimeKernel::zeros(grid, dim, dim),
            bound: None,
        }
    }

    /// Kernel with values `f(s, s')` on `s' ≤ s`.
    pub fn from_fn(grid: TimeGrid, dim: usize, f: impl Fn(f64, f64) -> CMatrix) -> Self {
        let kernel = TwoTimeKernel::from_fn(grid, dim, dim, |k, kp| {
            if kp <= k {
                f(grid.t(k), grid.t(kp))
            } else {
                CMatrix::zeros(dim, dim)
            }
        });
        Self { kernel, bound: None }
    }

    pub fn with_bound(mut self, b: f64, gamma: f64) -> Self {
        self.bound = Some((b, gamma));
        self
    }

    pub fn kernel(&self) -> &TwoTimeKernel {
        &self.kernel
    }

    pub fn into_kernel(self) -> TwoTimeKernel {
        self.kernel
    }

    pub fn grid(&self) -> &TimeGrid {
        self.kernel.grid()
    }

    pub fn dim(&self) -> usize {
        self.kernel.rows()
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            kernel: self.kernel.scale(z),
            bound: None,
        }
    }

    /// Largest violation ratio of the declared exponential bound, ≤ 1 when it holds.
    pub fn bound_ratio(&self) -> Option<f64> {
        let (b, gamma) = self.bound?;
        let g = self.grid();
        let mut worst: f64 = 0.0;
        for k in 0..g.len() {
            for kp in 0..=k {
                let norm = block_norm(&self.kernel.matrix(k, kp));
                worst = worst.max(norm / (b * (gamma * (g.t(k) - g.t(kp))).exp()));
            }
        }
        Some(worst)
    }
}

/// Operator 2-norm of a block.
pub fn block_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.singular_values().max()
    }
}

/// `(Vφ)(s) = φ(s) − ∫_0^s B(s,s')φ(s')ds'`
pub fn kernel_apply(b: &VolterraKernel, phi: &[CVector]) -> Result<GridFunction> {
    let g = b.grid();
    if phi.len() != g.len() {
        return Err(NegfError::GridMismatch(format!("{} samples for {} grid points", phi.len(), g.len())));
    }
    Ok((0..g.len())
        .map(|k| {
            let mut out = phi[k].clone();
            for m in 0..=k {
                let w = g.weight(0, k, m);
                if w != 0.0 {
                    out -= b.kernel.matrix(k, m) * &phi[m] * C64::new(w, 0.0);
                }
            }
            out
        })
        .collect())
}

pub fn kernel_compose(b1: &VolterraKernel, b2: &VolterraKernel) -> Result<VolterraKernel> {
    Ok(VolterraKernel {
        kernel: compose_lower(&b1.kernel, &b2.kernel)?,
        bound: None,
    })
}

/// Kernel `R` of `(I − B)^{-1} = I + R`, i.e. the solution of `R = B + B∘R`,
/// by forward substitution with the implicit trapezoid diagonal.
pub fn kernel_invert(b: &VolterraKernel) -> Result<VolterraKernel> {
    let g = *b.grid();
    let d = b.dim();
    let half = C64::new(0.5 * g.dt(), 0.0);
    let mut diag_inv = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let m = CMatrix::identity(d, d) - b.kernel.matrix(k, k) * half;
        let inv = m.clone().try_inverse().ok_or_else(|| NegfError::Numerical {
            op: "Volterra inversion".into(),
            detail: format!("I - (dt/2)B(t,t) is singular at t = {}; reduce dt", g.t(k)),
        })?;
        if !inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(NegfError::Numerical {
                op: "Volterra inversion".into(),
                detail: format!("non-finite diagonal solve at t = {}", g.t(k)),
            });
        }
        diag_inv.push(inv.transpose().as_slice().to_vec());
    }
    let bk = &b.kernel;
    let mut r = TwoTimeKernel::zeros(g, d, d);
    for kp in 0..g.len() {
        r.block_mut(kp, kp).copy_from_slice(bk.block(kp, kp));
        for k in kp + 1..g.len() {
            let mut rhs = bk.block(k, kp).to_vec();
            for q in kp..k {
                let w = C64::new(g.weight(kp, k, q), 0.0);
                gemm_acc(&mut rhs, bk.block(k, q), r.block(q, kp), d, d, d, w);
            }
            let mut sol = vec![ZERO; d * d];
            gemm_acc(&mut sol, &diag_inv[k], &rhs, d, d, d, C64::new(1.0, 0.0));
            r.block_mut(k, kp).copy_from_slice(&sol);
        }
    }
    Ok(VolterraKernel { kernel: r, bound: None })
}

/// Truncated iterated-kernel series `Σ_{n=1}^{N} B^{∘n}`.
pub fn neumann_series(b: &VolterraKernel, max_terms: usize, tol: f64) -> Result<VolterraKernel> {
    let mut sum = b.kernel.clone();
    let mut term = b.kernel.clone();
    for _ in 1..max_terms {
        term = compose_lower(&b.kernel, &term)?;
        sum = sum.add(&term)?;
        if term.max_abs() < tol {
            break;
        }
    }
    Ok(VolterraKernel { kernel: sum, bound: None })
}

/// `(I − B)(I + R) − I = R − B − B∘R`
pub fn right_inverse_residual(b: &VolterraKernel, r: &VolterraKernel) -> Result<f64> {
    let br = compose_lower(&b.kernel, &r.kernel)?;
    Ok(r.kernel.sub(&b.kernel)?.sub(&br)?.max_abs())
}

/// `(I + R)(I − B) − I = R − B − R∘B`
pub fn left_inverse_residual(b: &VolterraKernel, r: &VolterraKernel) -> Result<f64> {
    let rb = compose_lower(&r.kernel, &b.kernel)?;
    Ok(r.kernel.sub(&b.kernel)?.sub(&rb)?.max_abs())
}

/// Largest ratio `‖R(s,s')‖ / (b e^{(γ+b)(s−s')})`, given the bound `(b, γ)` of `B`.
pub fn resolvent_bound_ratio(r: &VolterraKernel, b: f64, gamma: f64) -> f64 {
    VolterraKernel {
        kernel: r.kernel.clone(),
        bound: Some((b, gamma + b)),
    }
    .bound_ratio()
    .unwrap_or(0.0)
}

/// `log2(coarse/fine)`
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
