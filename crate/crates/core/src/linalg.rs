//! Small dense symmetric-matrix kernel.
//!
//! Every network matrix in this crate (the gossip matrix `W` and the combiner
//! pair built from it) is an `n x n` symmetric matrix with `n` at most a few
//! hundred. Agent states are stacked vectors of `n` blocks of length `d`, and
//! an `n x n` matrix acts on them block-wise, i.e. as `M ⊗ I_d`, without ever
//! forming the `nd x nd` operator.

use crate::error::{Error, Result};

/// Relative threshold separating structural zero eigenvalues from round-off.
pub const DEFAULT_NULL_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-14;

/// Dense symmetric matrix stored row-major.
///
/// Construction always symmetrizes, so `get(i, j) == get(j, i)` holds
/// bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds from `n*n` row-major entries, replacing `m` by `(m + mᵀ)/2`.
    pub fn from_row_major(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("matrix order must be at least 1".into()));
        }
        if data.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                found: data.len(),
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let s = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = s;
                data[j * n + i] = s;
            }
        }
        Ok(SymMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(n, data)
    }

    /// Builds from an entry function; only the upper triangle is queried.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n > 0, "matrix order must be at least 1");
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| 0.0)
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// Matrix order `n`.
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &SymMatrix, b: f64) -> Result<SymMatrix> {
        self.check_same_order(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(SymMatrix { n: self.n, data })
    }

    pub fn scale(&self, a: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|v| a * v).collect(),
        }
    }

    /// Plain product `self * other` as row-major entries; not symmetric in general.
    pub fn mul_raw(&self, other: &SymMatrix) -> Result<Vec<f64>> {
        self.check_same_order(other)?;
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let row = self.row(i);
            let out_row = &mut out[i * n..(i + 1) * n];
            for (k, &aik) in row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    /// Product of two commuting symmetric matrices, symmetrized.
    pub fn mul_sym(&self, other: &SymMatrix) -> Result<SymMatrix> {
        SymMatrix::from_row_major(self.n, self.mul_raw(other)?)
    }

    /// `self^k` by repeated multiplication; `k = 0` gives the identity.
    pub fn powi(&self, k: u32) -> SymMatrix {
        let mut out = SymMatrix::identity(self.n);
        for _ in 0..k {
            out = out.mul_sym(self).expect("same order");
        }
        out
    }

    /// `self * v` for a plain length-`n` vector.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: v.len(),
            });
        }
        Ok((0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn check_same_order(&self, other: &SymMatrix) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

/// Stacked agent vector: `blocks` consecutive blocks of length `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stacked {
    blocks: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Stacked {
    pub fn zeros(blocks: usize, dim: usize) -> Self {
        Stacked {
            blocks,
            dim,
            data: vec![0.0; blocks * dim],
        }
    }

    pub fn from_vec(blocks: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != blocks * dim {
            return Err(Error::Dimension {
                expected: blocks * dim,
                found: data.len(),
            });
        }
        Ok(Stacked { blocks, dim, data })
    }

    /// `1_n ⊗ v`.
    pub fn replicate(blocks: usize, v: &[f64]) -> Self {
        let mut data = Vec::with_capacity(blocks * v.len());
        for _ in 0..blocks {
            data.extend_from_slice(v);
        }
        Stacked {
            blocks,
            dim: v.len(),
            data,
        }
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `‖self - other‖²`.
    pub fn dist_sq(&self, other: &Stacked) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn dot(&self, other: &Stacked) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, other: &Stacked) -> Stacked {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Stacked) -> Stacked {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, a: f64) -> Stacked {
        Stacked {
            blocks: self.blocks,
            dim: self.dim,
            data: self.data.iter().map(|v| a * v).collect(),
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Stacked) {
        debug_assert_eq!(self.data.len(), x.data.len());
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    /// `Σ_i block_i`.
    pub fn block_sum(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for i in 0..self.blocks {
            for (o, v) in out.iter_mut().zip(self.block(i)) {
                *o += v;
            }
        }
        out
    }

    pub fn block_mean(&self) -> Vec<f64> {
        let inv = 1.0 / self.blocks as f64;
        self.block_sum().into_iter().map(|v| v * inv).collect()
    }

    fn zip_map(&self, other: &Stacked, f: impl Fn(f64, f64) -> f64) -> Stacked {
        debug_assert_eq!(self.data.len(), other.data.len());
        Stacked {
            blocks: self.blocks,
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

/// Eigen-pairs of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Row-major `n x n`; column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector_entry(&self, row: usize, k: usize) -> f64 {
        self.eigenvectors[row * self.order() + k]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `V diag(f(λ)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.order();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vector_entry(i, k) * mapped[k] * self.vector_entry(j, k))
                .sum()
        })
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius norm drops below
/// `1e-14 * ‖M‖_F`; more than 100 sweeps is reported as a numerical failure.
pub fn sym_eig(m: &SymMatrix) -> Result<SpectralDecomposition> {
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix passed to sym_eig".into()));
    }
    let n = m.order();
    let mut a = m.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let threshold = JACOBI_REL_TOL * m.frobenius();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let eigenvalues = order.iter().map(|&k| a[k * n + k]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[row * n + col] = v[row * n + k];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Principal square root of a PSD matrix. Eigenvalues in `[-tol, 0)` are
/// clamped to zero; anything below `-tol` is rejected. Eigenvalues at or
/// below `tol * λ_max` are also treated as exact zeros, so a round-off
/// eigenvalue of order 1e-17 does not become a 3e-9 entry in the root.
pub fn psd_sqrt(m: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    let eig = sym_eig(m)?;
    let min = eig.min_eigenvalue();
    if min < -tol {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let cut = tol * eig.max_eigenvalue().max(0.0);
    Ok(eig.reconstruct_with(|l| if l <= cut { 0.0 } else { l.sqrt() }))
}

/// Smallest eigenvalue above `tol * λ_max`; zero when there is none.
///
/// For PSD input this is the minimum nonzero singular value.
pub fn min_nonzero_eig(m: &SymMatrix, tol: f64) -> Result<f64> {
    let eig = sym_eig(m)?;
    min_nonzero_of(&eig.eigenvalues, tol)
}

pub(crate) fn min_nonzero_of(eigenvalues: &[f64], tol: f64) -> Result<f64> {
    let max = eigenvalues.last().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return Ok(0.0);
    }
    let cut = tol * max;
    if eigenvalues[0] < -cut {
        return Err(Error::NotPsd {
            min_eigenvalue: eigenvalues[0],
        });
    }
    Ok(eigenvalues
        .iter()
        .copied()
        .find(|&l| l > cut)
        .unwrap_or(0.0))
}

/// Applies `m ⊗ I_d` to a stacked vector.
pub fn kron_apply(m: &SymMatrix, x: &Stacked) -> Result<Stacked> {
    check_blocks(m, x)?;
    let (n, d) = (m.order(), x.dim());
    let mut out = Stacked::zeros(n, d);
    for i in 0..n {
        let row = m.row(i);
        let dst = out.block_mut(i);
        for (j, &mij) in row.iter().enumerate() {
            if mij == 0.0 {
                continue;
            }
            for (o, v) in dst.iter_mut().zip(x.block(j)) {
                *o += mij * v;
            }
        }
    }
    Ok(out)
}

/// Applies `m ⊗ I_d` for a matrix whose rows all sum to `row_sum`, in
/// difference form: `(m x)_i = row_sum * x_i + Σ_{j≠i} m_ij (x_j - x_i)`.
///
/// Mathematically identical to [`kron_apply`]. The difference form keeps
/// `Σ_i (m x)_i` at `row_sum * Σ_i x_i` up to rounding that scales with the
/// disagreement between blocks rather than with their magnitude, so long runs
/// do not accumulate drift along `span(1)`.
pub fn kron_apply_centered(m: &SymMatrix, row_sum: f64, x: &Stacked) -> Result<Stacked> {
    check_blocks(m, x)?;
    let (n, d) = (m.order(), x.dim());
    let mut out = Stacked::zeros(n, d);
    let mut acc = vec![0.0; d];
    for i in 0..n {
        acc.iter_mut().for_each(|a| *a = 0.0);
        let xi = x.block(i);
        for (j, &mij) in m.row(i).iter().enumerate() {
            if j == i || mij == 0.0 {
                continue;
            }
            for ((a, xj), xi) in acc.iter_mut().zip(x.block(j)).zip(xi) {
                *a += mij * (xj - xi);
            }
        }
        for ((o, a), xi) in out.block_mut(i).iter_mut().zip(&acc).zip(xi) {
            *o = row_sum * xi + a;
        }
    }
    Ok(out)
}

/// Minimum-norm solution `u` of `(b ⊗ I_d) u = rhs` for PSD `b`.
///
/// Eigenvalues at or below `tol * λ_max` count as null directions. The part
/// of `rhs` in that null space must be at most `tol * ‖rhs‖`, otherwise the
/// system is inconsistent.
pub fn range_solve(b: &SymMatrix, rhs: &Stacked, tol: f64) -> Result<Stacked> {
    check_blocks(b, rhs)?;
    let eig = sym_eig(b)?;
    range_solve_with(&eig, rhs, tol)
}

pub(crate) fn range_solve_with(
    eig: &SpectralDecomposition,
    rhs: &Stacked,
    tol: f64,
) -> Result<Stacked> {
    let (n, d) = (eig.order(), rhs.dim());
    let max = eig.max_eigenvalue().max(0.0);
    let cut = tol * max;
    if eig.min_eigenvalue() < -cut.max(tol) {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min_eigenvalue(),
        });
    }
    let mut out = Stacked::zeros(n, d);
    let mut null_part_sq = 0.0;
    let mut coeff = vec![0.0; d];
    for k in 0..n {
        // coeff = (v_k ⊗ I_d)ᵀ rhs
        coeff.iter_mut().for_each(|c| *c = 0.0);
        for row in 0..n {
            let vk = eig.vector_entry(row, k);
            for (c, r) in coeff.iter_mut().zip(rhs.block(row)) {
                *c += vk * r;
            }
        }
        let lambda = eig.eigenvalues[k];
        if lambda > cut && lambda > 0.0 {
            for row in 0..n {
                let vk = eig.vector_entry(row, k) / lambda;
                for (o, c) in out.block_mut(row).iter_mut().zip(&coeff) {
                    *o += vk * c;
                }
            }
        } else {
            null_part_sq += coeff.iter().map(|c| c * c).sum::<f64>();
        }
    }
    let null_part = null_part_sq.sqrt();
    let rhs_norm = rhs.norm();
    if null_part > tol * rhs_norm {
        return Err(Error::InconsistentRange {
            residual: null_part,
            rhs_norm,
        });
    }
    Ok(out)
}

fn check_blocks(m: &SymMatrix, x: &Stacked) -> Result<()> {
    if x.blocks() != m.order() {
        return Err(Error::Dimension {
            expected: m.order(),
            found: x.blocks(),
        });
    }
    Ok(())
}
