//! Seeded generators for random operators, states and whole models.
//!
//! Everything here is driven by a caller-supplied RNG so test suites and
//! experiments stay reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::generic::{CompositeModel, Instrument, MicroSystem, PhaseCellSet};
use crate::operator::{c64, ComplexMatrix, DensityMatrix, HermitianOperator, Projector};

pub type ModelRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ModelRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> HermitianOperator {
    let g = random_matrix(rng, dim, dim);
    let h = (&g + g.adjoint()).unscale(2.0) * c64(scale, 0.0);
    HermitianOperator::new(h).expect("symmetrized matrix is Hermitian")
}

/// Full-rank random state `G G† / Tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    let g = random_matrix(rng, dim, dim);
    let mut rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho.unscale_mut(tr);
    rho = (&rho + rho.adjoint()).unscale(2.0);
    DensityMatrix::new_unchecked(rho)
}

/// Haar-ish unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    random_matrix(rng, dim, dim).qr().q()
}

/// A complete family of `cells` mutually orthogonal projectors, each of
/// rank at least one, built from a random orthonormal basis.
pub fn random_cell_family<R: Rng + ?Sized>(rng: &mut R, dim: usize, cells: usize) -> PhaseCellSet {
    assert!(cells >= 1 && cells <= dim, "need 1 <= cells <= dim");
    let basis = random_unitary(rng, dim);
    // each cell gets one basis vector, the rest are scattered at random
    let mut owner: Vec<usize> = (0..dim).map(|i| if i < cells { i } else { rng.random_range(0..cells) }).collect();
    for i in (1..dim).rev() {
        let j = rng.random_range(0..=i);
        owner.swap(i, j);
    }
    let projectors = (0..cells)
        .map(|alpha| {
            let cols: Vec<usize> = (0..dim).filter(|&i| owner[i] == alpha).collect();
            let sub = basis.select_columns(cols.iter());
            Projector::onto_columns(&sub)
        })
        .collect();
    PhaseCellSet::new(projectors).expect("orthonormal basis partition is a valid cell family")
}

/// Shape of a random generic model.
#[derive(Clone, Copy, Debug)]
pub struct RandomModelShape {
    pub n: usize,
    pub dim_k: usize,
    pub cells: usize,
    /// Operator norm scale of the random `K` and `V_r`.
    pub coupling_scale: f64,
}

impl RandomModelShape {
    /// Draws `n ≤ max_n`, `dimK ≤ max_dim_k` and `1 ≤ ν ≤ min(dimK, 6)`.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, max_n: usize, max_dim_k: usize) -> Self {
        let n = rng.random_range(1..=max_n);
        let dim_k = rng.random_range(1..=max_dim_k);
        let cells = rng.random_range(1..=dim_k.min(6));
        Self { n, dim_k, cells, coupling_scale: 1.0 }
    }
}

pub fn random_micro_system<R: Rng + ?Sized>(rng: &mut R, n: usize) -> MicroSystem {
    let eps: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let c = random_matrix(rng, n, 1);
    let norm = c.norm();
    let coeffs = c.iter().map(|z| z / norm).collect();
    MicroSystem::new(eps, coeffs).expect("normalized coefficients")
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, shape: RandomModelShape) -> CompositeModel {
    let system = random_micro_system(rng, shape.n);
    let k = random_hermitian(rng, shape.dim_k, shape.coupling_scale);
    let couplings = (0..shape.n)
        .map(|_| random_hermitian(rng, shape.dim_k, shape.coupling_scale))
        .collect();
    let omega = random_density(rng, shape.dim_k);
    let cells = random_cell_family(rng, shape.dim_k, shape.cells);
    let instrument = Instrument::new(k, couplings, omega, cells).expect("consistent random instrument");
    CompositeModel::build(system, instrument).expect("consistent random model")
}
