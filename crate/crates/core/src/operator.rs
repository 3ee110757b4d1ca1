//! Dense complex linear algebra shared by every model in the crate.
//!
//! Tensor products follow one index convention throughout: the basis index
//! of `A ⊗ B` is `i_a * dim(B) + i_b`, so the left factor is the most
//! significant one. For spin chains this means site 1 is the leading factor,
//! and bit value 0 of a site is the `σ_z = +1` (spin up) state.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Self-adjointness tolerance, relative to `1 + max|M|`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unit-trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of a density matrix.
pub const MIN_EIGENVALUE: f64 = -1e-10;
/// Idempotency tolerance for projectors.
pub const PROJECTOR_TOL: f64 = 1e-10;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entry modulus, 0 for an empty matrix.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise `|a - b|`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |M - M†|` entrywise.
pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Left-to-right Kronecker product of a sequence of factors.
pub fn tensor_product_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Self-adjoint square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator(ComplexMatrix);

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian operator must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = hermiticity_deviation(&matrix);
        if deviation > HERMITIAN_TOL * (1.0 + max_abs(&matrix)) {
            return Err(Error::NonHermitianInput { deviation });
        }
        Ok(Self(matrix))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diagonal: &[f64]) -> Self {
        let d = DVector::from_iterator(diagonal.len(), diagonal.iter().map(|&x| c64(x, 0.0)));
        Self(ComplexMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    pub fn eigen(&self) -> Eigen {
        Eigen::of_hermitian(&self.0)
    }
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let h = HermitianOperator::new(matrix).map_err(|e| match e {
            Error::NonHermitianInput { deviation } => {
                Error::InvalidState(format!("not Hermitian (deviation {deviation:e})"))
            }
            other => other,
        })?;
        let trace = h.0.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let min_eig = h.eigen().values.first().copied().unwrap_or(0.0);
        if min_eig < MIN_EIGENVALUE {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min_eig:e} is negative"
            )));
        }
        Ok(Self(h.0))
    }

    /// Skips the eigenvalue check. For states built by construction
    /// (products of valid factors, unitary conjugates).
    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self(matrix)
    }

    /// `|ψ⟩⟨ψ|` for a vector normalized here.
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite state vector".into()));
        }
        let v = psi.unscale(norm);
        Ok(Self(&v * v.adjoint()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim, dim).unscale(dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Real parts of the diagonal, the populations in the standard basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }
}

/// Orthogonal projector.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector(ComplexMatrix);

impl Projector {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let h = HermitianOperator::new(matrix).map_err(|e| match e {
            Error::NonHermitianInput { deviation } => {
                Error::InvalidProjector(format!("not Hermitian (deviation {deviation:e})"))
            }
            other => other,
        })?;
        let sq = &h.0 * &h.0;
        let dev = max_abs_diff(&sq, &h.0);
        if dev > PROJECTOR_TOL {
            return Err(Error::InvalidProjector(format!(
                "not idempotent (max |P^2 - P| = {dev:e})"
            )));
        }
        Ok(Self(h.0))
    }

    /// Diagonal projector onto the given standard basis vectors.
    pub fn onto_basis_states(dim: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        for i in indices {
            m[(i, i)] = c64(1.0, 0.0);
        }
        Self(m)
    }

    /// Projector onto the span of orthonormal columns.
    pub fn onto_columns(columns: &ComplexMatrix) -> Self {
        Self(columns * columns.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// Spectral decomposition `h = U diag(λ) U†`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    fn of_hermitian(m: &ComplexMatrix) -> Self {
        let n = m.nrows();
        // the solver reads one triangle; symmetrize so both agree exactly
        let sym = (m + m.adjoint()).unscale(2.0);
        let se = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
        Self { values, vectors }
    }

    /// `U f(diag λ) U†` for a complex-valued spectral function.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (c, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            for r in 0..n {
                scaled[(r, c)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(|l| c64(l, 0.0))
    }

    /// `exp(+i h t)`.
    pub fn exp_i(&self, t: f64) -> ComplexMatrix {
        self.apply_fn(|l| Complex64::from_polar(1.0, l * t))
    }
}

/// Eigendecomposition of a matrix claimed to be Hermitian.
pub fn hermitian_eigendecomposition(h: &ComplexMatrix) -> Result<Eigen> {
    Ok(HermitianOperator::new(h.clone())?.eigen())
}

/// `exp(+i h t)`, the propagator sign convention used throughout the crate.
pub fn unitary_exponential(h: &HermitianOperator, t: f64) -> ComplexMatrix {
    if t == 0.0 {
        return ComplexMatrix::identity(h.dim(), h.dim());
    }
    h.eigen().exp_i(t)
}

/// Which factor of a bipartite space survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if !m.is_square() || m.nrows() != da * db {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of a {}x{} matrix over dims ({da}, {db})",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(match keep {
        Keep::A => ComplexMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Keep::B => ComplexMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    })
}

/// Single-qubit Pauli matrices in the `σ_z = diag(1, -1)` basis.
pub mod pauli {
    use super::{c64, ComplexMatrix};

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2, 2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(-1., 0.)])
    }
}
