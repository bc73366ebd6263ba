//! Complex linear algebra on multi-atom Hilbert spaces.
//!
//! Basis convention: a single atom's levels |1⟩..|4⟩ are indices 0..3, and a
//! product state of `n` sites with local dimension `d` has index
//! `Σ level[s]·d^(n−1−s)`, so site 0 is the leftmost ket label (|13⟩ is
//! index `4·0 + 2`).

mod eigen;
mod expm;
mod sparse;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64 as C64;

pub use sparse::CsrMatrix;

use crate::{Error, Result};

/// Largest Hilbert dimension any builder will allocate.
pub const MAX_DIM: usize = 1 << 22;

/// Site count from which embedded operators are stored sparse.
pub const SPARSE_SITE_THRESHOLD: usize = 3;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Backing storage for an [`Operator`].
#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Dense(Array2<C64>),
    Sparse(CsrMatrix),
}

/// Square complex operator on a Hilbert space of dimension [`Operator::dim`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    storage: Storage,
}

impl Operator {
    pub fn from_dense(entries: Array2<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::invalid(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Operator {
            storage: Storage::Dense(entries),
        })
    }

    pub fn from_real(entries: Array2<f64>) -> Result<Self> {
        Self::from_dense(entries.mapv(|x| C64::new(x, 0.0)))
    }

    pub fn from_sparse(m: CsrMatrix) -> Self {
        Operator {
            storage: Storage::Sparse(m),
        }
    }

    pub fn from_triplets(dim: usize, triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::invalid(format!(
                "entry ({r}, {c}) outside dimension {dim}"
            )));
        }
        Ok(Self::from_sparse(CsrMatrix::from_triplets(dim, triplets)))
    }

    pub fn identity(dim: usize) -> Self {
        Operator {
            storage: Storage::Dense(Array2::from_diag_elem(dim, ONE)),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator {
            storage: Storage::Dense(Array2::zeros((dim, dim))),
        }
    }

    /// Diagonal operator, stored sparse.
    pub fn diagonal_from(diag: &[C64]) -> Self {
        let triplets = diag
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != ZERO)
            .map(|(i, v)| (i, i, *v))
            .collect();
        Self::from_sparse(CsrMatrix::from_triplets(diag.len(), triplets))
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Sparse(m) => m.dim(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn to_dense(&self) -> Array2<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(m) => m.to_dense(),
        }
    }

    pub fn into_dense(self) -> Self {
        match self.storage {
            Storage::Dense(_) => self,
            Storage::Sparse(m) => Operator {
                storage: Storage::Dense(m.to_dense()),
            },
        }
    }

    pub fn into_sparse(self) -> Self {
        match self.storage {
            Storage::Sparse(_) => self,
            Storage::Dense(m) => Self::from_sparse(CsrMatrix::from_dense(&m)),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[[row, col]],
            Storage::Sparse(m) => m.get(row, col),
        }
    }

    pub fn diagonal(&self) -> Array1<C64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().sum()
    }

    /// `op · v`.
    pub fn apply(&self, v: ArrayView1<C64>) -> Array1<C64> {
        match &self.storage {
            Storage::Dense(m) => m.dot(&v),
            Storage::Sparse(m) => m.apply(v),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        match &self.storage {
            Storage::Dense(m) => Operator {
                storage: Storage::Dense(m.mapv(|z| z * factor)),
            },
            Storage::Sparse(m) => Self::from_sparse(m.map_values(|z| z * factor)),
        }
    }

    pub fn adjoint(&self) -> Self {
        match &self.storage {
            Storage::Dense(m) => Operator {
                storage: Storage::Dense(m.t().mapv(|z| z.conj())),
            },
            Storage::Sparse(m) => Self::from_sparse(m.adjoint()),
        }
    }

    /// Sum; sparse only when both operands are sparse.
    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => Self::from_sparse(a.add(b)),
            _ => Operator {
                storage: Storage::Dense(self.to_dense() + other.to_dense()),
            },
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    /// Product `self · other`; sparse only when both operands are sparse.
    pub fn matmul(&self, other: &Operator) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => Self::from_sparse(a.matmul(b)),
            (Storage::Dense(a), Storage::Dense(b)) => Operator {
                storage: Storage::Dense(a.dot(b)),
            },
            _ => Operator {
                storage: Storage::Dense(self.to_dense().dot(&other.to_dense())),
            },
        })
    }

    /// Kronecker product `self ⊗ other` (dense).
    pub fn kron(&self, other: &Operator) -> Self {
        Operator {
            storage: Storage::Dense(ndarray::linalg::kron(&self.to_dense(), &other.to_dense())),
        }
    }

    /// max |A − A†|.
    pub fn hermiticity_error(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => hermiticity_error(m.view()),
            Storage::Sparse(m) => m
                .iter()
                .map(|(r, c, v)| (v - m.get(c, r).conj()).norm())
                .fold(0.0, f64::max),
        }
    }

    /// max elementwise |A − B|.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(expm::max_abs_diff(&self.to_dense(), &other.to_dense()))
    }

    pub fn is_finite(&self) -> bool {
        match &self.storage {
            Storage::Dense(m) => m.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            Storage::Sparse(m) => m
                .iter()
                .all(|(_, _, z)| z.re.is_finite() && z.im.is_finite()),
        }
    }

    /// Induced 1-norm (max column sum).
    pub fn norm1(&self) -> f64 {
        expm::norm1(&self.to_dense())
    }

    fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::invalid(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

pub(crate) fn hermiticity_error(m: ArrayView2<C64>) -> f64 {
    let n = m.nrows();
    let mut err = 0.0f64;
    for i in 0..n {
        for j in i..n {
            err = err.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    err
}

/// Pure state amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Array1<C64>) -> Self {
        StateVector { amplitudes }
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amplitudes = Array1::zeros(dim);
        amplitudes[index] = ONE;
        Ok(StateVector { amplitudes })
    }

    /// Product state from per-site level indices.
    pub fn product(levels: &[usize], local_dim: usize) -> Result<Self> {
        let dim = hilbert_dim(local_dim, levels.len())?;
        Self::basis(dim, basis_index(levels, local_dim)?)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Numeric(
                "cannot normalize a zero or non-finite state".into(),
            ));
        }
        Ok(StateVector {
            amplitudes: self.amplitudes.mapv(|z| z / n),
        })
    }

    pub fn populations(&self) -> Array1<f64> {
        self.amplitudes.mapv(|z| z.norm_sqr())
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Density matrix with the invariant checks used by the propagators.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: Array2<C64>,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Wraps raw entries without validation.
    pub fn from_entries(entries: Array2<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::invalid("density matrix must be square"));
        }
        Ok(DensityMatrix { entries })
    }

    pub fn pure(state: &StateVector) -> Self {
        let a = &state.amplitudes;
        let n = a.len();
        DensityMatrix {
            entries: Array2::from_shape_fn((n, n), |(i, j)| a[i] * a[j].conj()),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            entries: Array2::from_diag_elem(dim, C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[[row, col]]
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(self.entries.view())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        // symmetrize so rounding-level anti-Hermitian parts do not stall the solver
        let h = (&self.entries + &self.entries.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        let (vals, _) = eigen::eigh_dense(&h)?;
        Ok(vals.first().copied().unwrap_or(0.0))
    }

    /// Checks Hermiticity, unit trace and positivity at the given tolerances.
    pub fn validate_with(&self, herm_tol: f64, trace_tol: f64, pos_tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > herm_tol {
            return Err(Error::Integrity(format!(
                "hermiticity error {herm:.3e} exceeds {herm_tol:.1e}"
            )));
        }
        let tr = self.trace();
        let drift = (tr - ONE).norm();
        if drift > trace_tol {
            return Err(Error::Integrity(format!(
                "trace drift {drift:.3e} exceeds {trace_tol:.1e}"
            )));
        }
        let min = self.min_eigenvalue()?;
        if min < -pos_tol {
            return Err(Error::Integrity(format!(
                "minimum eigenvalue {min:.3e} below -{pos_tol:.1e}"
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(Self::HERMITIAN_TOL, Self::TRACE_TOL, Self::POSITIVITY_TOL)
    }

    pub fn populations(&self) -> Array1<f64> {
        self.entries.diag().mapv(|z| z.re)
    }

    /// tr(ρ·op).
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::invalid("observable dimension does not match state"));
        }
        let mut acc = ZERO;
        match op.storage() {
            Storage::Sparse(m) => {
                for (r, c, v) in m.iter() {
                    acc += v * self.entries[[c, r]];
                }
            }
            Storage::Dense(m) => {
                for ((r, c), v) in m.indexed_iter() {
                    acc += v * self.entries[[c, r]];
                }
            }
        }
        Ok(acc)
    }
}

/// `local_dim^n_sites`, with overflow and [`MAX_DIM`] mapped to capacity errors.
pub fn hilbert_dim(local_dim: usize, n_sites: usize) -> Result<usize> {
    let dim = u32::try_from(n_sites)
        .ok()
        .and_then(|n| local_dim.checked_pow(n))
        .ok_or_else(|| Error::Capacity(format!("{local_dim}^{n_sites} overflows")))?;
    if dim > MAX_DIM {
        return Err(Error::Capacity(format!(
            "Hilbert dimension {dim} for {n_sites} sites exceeds {MAX_DIM}"
        )));
    }
    Ok(dim)
}

/// Product-basis index of per-site levels (site 0 most significant).
pub fn basis_index(levels: &[usize], local_dim: usize) -> Result<usize> {
    levels.iter().try_fold(0usize, |acc, &l| {
        if l >= local_dim {
            return Err(Error::invalid(format!(
                "level {l} out of range for local dimension {local_dim}"
            )));
        }
        Ok(acc * local_dim + l)
    })
}

/// Inverse of [`basis_index`].
pub fn site_levels(mut index: usize, n_sites: usize, local_dim: usize) -> Vec<usize> {
    let mut levels = vec![0; n_sites];
    for s in (0..n_sites).rev() {
        levels[s] = index % local_dim;
        index /= local_dim;
    }
    levels
}

/// Index of a ket written with the atomic labels 1..=local_dim, e.g. `"1212"`.
pub fn ket_index(label: &str, local_dim: usize) -> Result<usize> {
    let levels = label
        .chars()
        .map(|ch| match ch.to_digit(10) {
            Some(d) if d >= 1 && (d as usize) <= local_dim => Ok(d as usize - 1),
            _ => Err(Error::invalid(format!("bad ket label {label:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    basis_index(&levels, local_dim)
}

/// Ket label of a basis index, e.g. 5 → `"1212"` for four two-level sites.
pub fn ket_label(index: usize, n_sites: usize, local_dim: usize) -> String {
    site_levels(index, n_sites, local_dim)
        .into_iter()
        .map(|l| char::from_digit(l as u32 + 1, 10).unwrap_or('?'))
        .collect()
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` at `site`.
///
/// The result is sparse for [`SPARSE_SITE_THRESHOLD`] or more sites and dense
/// otherwise.
pub fn embed(op: &Operator, site: usize, n_sites: usize, local_dim: usize) -> Result<Operator> {
    if op.dim() != local_dim {
        return Err(Error::invalid(format!(
            "operator dimension {} does not match local dimension {local_dim}",
            op.dim()
        )));
    }
    if site >= n_sites {
        return Err(Error::invalid(format!(
            "site {site} out of range for {n_sites} sites"
        )));
    }
    let dim = hilbert_dim(local_dim, n_sites)?;
    let left = local_dim.pow(site as u32);
    let right = local_dim.pow((n_sites - site - 1) as u32);
    let local: Vec<(usize, usize, C64)> = match op.storage() {
        Storage::Sparse(m) => m.iter().collect(),
        Storage::Dense(m) => m
            .indexed_iter()
            .filter(|(_, v)| **v != ZERO)
            .map(|((r, c), v)| (r, c, *v))
            .collect(),
    };
    if n_sites >= SPARSE_SITE_THRESHOLD {
        let mut triplets = Vec::with_capacity(local.len() * left * right);
        for l in 0..left {
            for &(a, b, v) in &local {
                for r in 0..right {
                    let row = (l * local_dim + a) * right + r;
                    let col = (l * local_dim + b) * right + r;
                    triplets.push((row, col, v));
                }
            }
        }
        Ok(Operator::from_sparse(CsrMatrix::from_triplets(
            dim, triplets,
        )))
    } else {
        let mut m = Array2::zeros((dim, dim));
        for l in 0..left {
            for &(a, b, v) in &local {
                for r in 0..right {
                    m[[
                        (l * local_dim + a) * right + r,
                        (l * local_dim + b) * right + r,
                    ]] = v;
                }
            }
        }
        Operator::from_dense(m)
    }
}

/// `exp(scale · op)`, always dense.
pub fn matrix_exponential(op: &Operator, scale: C64) -> Result<Operator> {
    if !op.is_finite() || !scale.re.is_finite() || !scale.im.is_finite() {
        return Err(Error::Numeric(
            "matrix exponential of non-finite input".into(),
        ));
    }
    let a = op.to_dense().mapv(|z| z * scale);
    Operator::from_dense(expm::expm_dense(&a)?)
}

/// Eigen-decomposition result; eigenvectors are the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Array1<f64>,
    pub vectors: Array2<C64>,
}

impl Eigensystem {
    pub fn vector(&self, k: usize) -> StateVector {
        StateVector::new(self.vectors.column(k).to_owned())
    }
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian operator.
///
/// Only the Hermitian path exists; `hermitian = false` is rejected.
pub fn eigensystem(op: &Operator, hermitian: bool) -> Result<Eigensystem> {
    if !hermitian {
        return Err(Error::invalid(
            "non-Hermitian eigenproblems are not supported",
        ));
    }
    let herm = op.hermiticity_error();
    if herm > 1e-10 {
        return Err(Error::invalid(format!(
            "operator flagged Hermitian but max |A - A†| = {herm:.3e}"
        )));
    }
    if !op.is_finite() {
        return Err(Error::Numeric("eigensystem of non-finite operator".into()));
    }
    let (values, vectors) = eigen::eigh_dense(&op.to_dense())?;
    Ok(Eigensystem { values, vectors })
}

#[cfg(test)]
mod tests;
