//! Micro-system + instrument composites with block-diagonal dynamics.
//!
//! A measurement of the first kind couples each eigenstate `u_r` of the
//! measured observable to its own instrument Hamiltonian
//! `K_r = K + V_r + ε_r I`, so the composite Hamiltonian is
//! `Σ_r P(u_r) ⊗ K_r` and never needs to be formed. Everything observable
//! about the macroscopic pointer is carried by the F-tensor
//! `F[r,s;α] = Tr(U_r(t)† Ω U_s(t) Π_α)` with `U_r(t) = exp(i K_r t)`.

mod classify;
mod json;

pub use classify::{classify_instrument, InstrumentVerdict, VerdictKind};
pub use json::{matrix_from_doc, matrix_to_doc, MatrixDoc, ModelDocument};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{
    c64, max_abs, max_abs_diff, pauli, trace_of_product, ComplexMatrix, ComplexVector, DensityMatrix, Eigen,
    HermitianOperator, Projector,
};

/// Cells with `E(Π_α)` at or below this are excluded from conditional
/// expectations.
pub const CELL_PROBABILITY_FLOOR: f64 = 1e-12;

const NORMALIZATION_TOL: f64 = 1e-12;
const CELL_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;

/// The measured system: eigenvalues `ε_r` of its Hamiltonian and the
/// expansion coefficients `c_r` of its initial pure state in the eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct MicroSystem {
    epsilon: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl MicroSystem {
    pub fn new(epsilon: Vec<f64>, coeffs: Vec<Complex64>) -> Result<Self> {
        if epsilon.is_empty() || epsilon.len() != coeffs.len() {
            return Err(Error::DimensionMismatch(format!(
                "micro-system has {} eigenvalues and {} coefficients",
                epsilon.len(),
                coeffs.len()
            )));
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { epsilon, coeffs })
    }

    /// Equal-weight superposition with all eigenvalues zero.
    pub fn uniform(n: usize) -> Self {
        let w = c64(1.0 / (n as f64).sqrt(), 0.0);
        Self::new(vec![0.0; n], vec![w; n]).expect("uniform superposition is normalized")
    }

    pub fn n(&self) -> usize {
        self.epsilon.len()
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn psi(&self) -> ComplexVector {
        ComplexVector::from_column_slice(&self.coeffs)
    }

    pub fn hamiltonian(&self) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(&self.epsilon)
    }
}

/// Complete family of mutually orthogonal projectors on the instrument space.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCellSet {
    projectors: Vec<Projector>,
}

impl PhaseCellSet {
    pub fn new(projectors: Vec<Projector>) -> Result<Self> {
        let Some(first) = projectors.first() else {
            return Err(Error::InvalidProjector("empty phase-cell family".into()));
        };
        let dim = first.dim();
        if projectors.iter().any(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch("phase cells of different dimensions".into()));
        }
        for (a, pa) in projectors.iter().enumerate() {
            for pb in &projectors[a + 1..] {
                let overlap = max_abs(&(pa.matrix() * pb.matrix()));
                if overlap > CELL_TOL {
                    return Err(Error::InvalidProjector(format!(
                        "cells are not orthogonal (max |Π_a Π_b| = {overlap:e})"
                    )));
                }
            }
        }
        let total = projectors
            .iter()
            .fold(ComplexMatrix::zeros(dim, dim), |acc, p| acc + p.matrix());
        let dev = max_abs_diff(&total, &ComplexMatrix::identity(dim, dim));
        if dev > CELL_TOL {
            return Err(Error::InvalidProjector(format!(
                "cells do not resolve the identity (deviation {dev:e})"
            )));
        }
        Ok(Self { projectors })
    }

    pub fn nu(&self) -> usize {
        self.projectors.len()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    /// The macro-observable `Σ_α M_α Π_α`.
    pub fn observable(&self, values: &[f64]) -> Result<ComplexMatrix> {
        if values.len() != self.nu() {
            return Err(Error::DimensionMismatch(format!(
                "{} macro-observable values for {} cells",
                values.len(),
                self.nu()
            )));
        }
        let dim = self.dim();
        Ok(self
            .projectors
            .iter()
            .zip(values)
            .fold(ComplexMatrix::zeros(dim, dim), |acc, (p, &v)| acc + p.matrix() * c64(v, 0.0)))
    }

    /// Cells reordered so that new cell `i` is old cell `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            projectors: order.iter().map(|&i| self.projectors[i].clone()).collect(),
        }
    }
}

/// The instrument: free Hamiltonian `K`, couplings `V_r`, initial state `Ω`
/// and phase cells.
#[derive(Clone, Debug)]
pub struct Instrument {
    pub k: HermitianOperator,
    pub couplings: Vec<HermitianOperator>,
    pub omega: DensityMatrix,
    pub cells: PhaseCellSet,
}

impl Instrument {
    pub fn new(
        k: HermitianOperator,
        couplings: Vec<HermitianOperator>,
        omega: DensityMatrix,
        cells: PhaseCellSet,
    ) -> Result<Self> {
        let d = k.dim();
        if couplings.iter().any(|v| v.dim() != d) || omega.dim() != d || cells.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "instrument operators must all be {d}x{d}"
            )));
        }
        Ok(Self { k, couplings, omega, cells })
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }
}

#[derive(Clone, Debug)]
enum Dynamics {
    /// Block Hamiltonians `K_r` with cached spectra, plus the parts they
    /// were assembled from.
    Hamiltonian {
        k: HermitianOperator,
        couplings: Vec<HermitianOperator>,
        blocks: Vec<(HermitianOperator, Eigen)>,
    },
    /// Time-independent block propagators `U_r`.
    Fixed(Vec<ComplexMatrix>),
}

/// An assembled composite, immutable after construction.
#[derive(Clone, Debug)]
pub struct CompositeModel {
    system: MicroSystem,
    omega: DensityMatrix,
    cells: PhaseCellSet,
    dynamics: Dynamics,
}

/// The `n²` evolved block states `Ω_{r,s}(t) = U_r† Ω U_s`, row-major in `(r, s)`.
#[derive(Clone, Debug)]
pub struct BlockStates {
    n: usize,
    states: Vec<ComplexMatrix>,
}

impl BlockStates {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, s: usize) -> &ComplexMatrix {
        &self.states[r * self.n + s]
    }
}

impl CompositeModel {
    pub fn build(system: MicroSystem, instrument: Instrument) -> Result<Self> {
        let n = system.n();
        if instrument.couplings.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "micro-system has {n} eigenstates but the instrument has {} couplings",
                instrument.couplings.len()
            )));
        }
        let d = instrument.dim();
        let identity = ComplexMatrix::identity(d, d);
        let blocks = instrument
            .couplings
            .iter()
            .zip(system.epsilon())
            .map(|(v, &eps)| {
                let m = instrument.k.matrix() + v.matrix() + &identity * c64(eps, 0.0);
                let h = HermitianOperator::new(m)?;
                let e = h.eigen();
                Ok((h, e))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            system,
            omega: instrument.omega,
            cells: instrument.cells,
            dynamics: Dynamics::Hamiltonian {
                k: instrument.k,
                couplings: instrument.couplings,
                blocks,
            },
        })
    }

    /// A composite whose block propagators are given directly and do not
    /// depend on time.
    pub fn with_fixed_propagators(
        system: MicroSystem,
        propagators: Vec<ComplexMatrix>,
        omega: DensityMatrix,
        cells: PhaseCellSet,
    ) -> Result<Self> {
        if propagators.len() != system.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} propagators for {} eigenstates",
                propagators.len(),
                system.n()
            )));
        }
        let d = omega.dim();
        if cells.dim() != d {
            return Err(Error::DimensionMismatch("cells and state differ in dimension".into()));
        }
        for u in &propagators {
            if u.shape() != (d, d) {
                return Err(Error::DimensionMismatch(format!("propagator must be {d}x{d}")));
            }
            let dev = max_abs_diff(&(u.adjoint() * u), &ComplexMatrix::identity(d, d));
            if dev > UNITARY_TOL {
                return Err(Error::DimensionMismatch(format!(
                    "propagator is not unitary (deviation {dev:e})"
                )));
            }
        }
        Ok(Self {
            system,
            omega,
            cells,
            dynamics: Dynamics::Fixed(propagators),
        })
    }

    pub fn system(&self) -> &MicroSystem {
        &self.system
    }

    pub fn omega(&self) -> &DensityMatrix {
        &self.omega
    }

    pub fn cells(&self) -> &PhaseCellSet {
        &self.cells
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn dim_k(&self) -> usize {
        self.omega.dim()
    }

    /// Same model with a different initial instrument state.
    pub fn with_omega(&self, omega: DensityMatrix) -> Result<Self> {
        if omega.dim() != self.dim_k() {
            return Err(Error::DimensionMismatch("replacement Ω has the wrong dimension".into()));
        }
        Ok(Self { omega, ..self.clone() })
    }

    /// Same model with a different micro-system state (same `n`).
    pub fn with_system(&self, system: MicroSystem) -> Result<Self> {
        if system.n() != self.n() {
            return Err(Error::DimensionMismatch("replacement micro-system has the wrong n".into()));
        }
        if let Dynamics::Hamiltonian { k, couplings, .. } = &self.dynamics {
            if system.epsilon() != self.system.epsilon() {
                let instrument = Instrument::new(k.clone(), couplings.clone(), self.omega.clone(), self.cells.clone())?;
                return Self::build(system, instrument);
            }
        }
        Ok(Self { system, ..self.clone() })
    }

    /// Same model with its cells reordered.
    pub fn with_cells(&self, cells: PhaseCellSet) -> Result<Self> {
        if cells.dim() != self.dim_k() {
            return Err(Error::DimensionMismatch("replacement cells have the wrong dimension".into()));
        }
        Ok(Self { cells, ..self.clone() })
    }

    /// `K_r`, when the model is Hamiltonian.
    pub fn block_hamiltonian(&self, r: usize) -> Option<&HermitianOperator> {
        match &self.dynamics {
            Dynamics::Hamiltonian { blocks, .. } => blocks.get(r).map(|(h, _)| h),
            Dynamics::Fixed(_) => None,
        }
    }

    /// The `(K, V_r)` the blocks were assembled from.
    pub fn instrument_parts(&self) -> Option<(&HermitianOperator, &[HermitianOperator])> {
        match &self.dynamics {
            Dynamics::Hamiltonian { k, couplings, .. } => Some((k, couplings)),
            Dynamics::Fixed(_) => None,
        }
    }

    /// Block-diagonal `H_c = Σ_r P(u_r) ⊗ K_r` on the full `n·dimK` space.
    pub fn full_hamiltonian(&self) -> Option<HermitianOperator> {
        let Dynamics::Hamiltonian { blocks, .. } = &self.dynamics else {
            return None;
        };
        let d = self.dim_k();
        let n = self.n();
        let mut h = ComplexMatrix::zeros(n * d, n * d);
        for (r, (kr, _)) in blocks.iter().enumerate() {
            h.view_mut((r * d, r * d), (d, d)).copy_from(kr.matrix());
        }
        Some(HermitianOperator::new(h).expect("block-diagonal of Hermitian blocks"))
    }

    /// `U_r(t)` for every block.
    pub fn propagators(&self, t: f64) -> Vec<ComplexMatrix> {
        match &self.dynamics {
            Dynamics::Hamiltonian { blocks, .. } => blocks
                .iter()
                .map(|(h, e)| {
                    if t == 0.0 {
                        ComplexMatrix::identity(h.dim(), h.dim())
                    } else {
                        e.exp_i(t)
                    }
                })
                .collect(),
            Dynamics::Fixed(us) => us.clone(),
        }
    }

    pub fn evolve_block_states(&self, t: f64) -> BlockStates {
        let n = self.n();
        let us = self.propagators(t);
        let left: Vec<ComplexMatrix> = us.iter().map(|u| u.adjoint() * self.omega.matrix()).collect();
        let mut states = Vec::with_capacity(n * n);
        for l in &left {
            for u in &us {
                states.push(l * u);
            }
        }
        BlockStates { n, states }
    }

    pub fn compute_f_tensor(&self, t: f64) -> FTensor {
        let n = self.n();
        let nu = self.cells.nu();
        let blocks = self.evolve_block_states(t);
        let mut values = Vec::with_capacity(n * n * nu);
        for r in 0..n {
            for s in 0..n {
                let omega_rs = blocks.get(r, s);
                for p in self.cells.projectors() {
                    values.push(trace_of_product(omega_rs, p.matrix()));
                }
            }
        }
        FTensor { n, nu, time: t, values }
    }

    /// The composite state `Φ(t) = Σ c_r c̄_s |u_r⟩⟨u_s| ⊗ Ω_{r,s}(t)`.
    pub fn composite_state(&self, t: f64) -> ComplexMatrix {
        let n = self.n();
        let d = self.dim_k();
        let c = self.system.coeffs();
        let blocks = self.evolve_block_states(t);
        let mut phi = ComplexMatrix::zeros(n * d, n * d);
        for r in 0..n {
            for s in 0..n {
                let w = c[r] * c[s].conj();
                phi.view_mut((r * d, s * d), (d, d)).copy_from(&(blocks.get(r, s) * w));
            }
        }
        phi
    }

    /// `E(A ⊗ M)` at time `t` for `M = Σ_α M_α Π_α`.
    pub fn expectation(&self, t: f64, a: &HermitianOperator, m_values: &[f64]) -> Result<f64> {
        expectation_from_tensor(&self.compute_f_tensor(t), &self.system, a, m_values)
    }

    /// `E(A | K_α)` per cell, `None` where `E(Π_α)` does not exceed the floor.
    pub fn conditional_expectation(&self, t: f64, a: &HermitianOperator) -> Result<Vec<Option<f64>>> {
        conditional_from_tensor(&self.compute_f_tensor(t), &self.system, a)
    }

    /// Reduced state of the micro-system, `E(A) = Tr(ρ A)`.
    pub fn reduced_state(&self, t: f64) -> DensityMatrix {
        reduced_from_tensor(&self.compute_f_tensor(t), &self.system)
    }

    /// `E(Π_α)` for every cell.
    pub fn cell_probabilities(&self, t: f64) -> Vec<f64> {
        cell_probabilities(&self.compute_f_tensor(t), &self.system)
    }
}

/// `F[r,s;α] = Tr(Ω_{r,s}(t) Π_α)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FTensor {
    n: usize,
    nu: usize,
    time: f64,
    values: Vec<Complex64>,
}

/// Worst violation of each structural property of an F-tensor.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FTensorReport {
    /// `max_r |Σ_α F[r,r;α] - 1|`
    pub sum_rule: f64,
    /// how far any `F[r,r;α]` leaves `[0, 1]`
    pub range: f64,
    /// `max |F[r,s;α] - conj F[s,r;α]|`
    pub conjugate_symmetry: f64,
    /// most negative eigenvalue over the per-cell `n×n` matrices, 0 if none
    pub psd: f64,
    /// `max (|F[r,s;α]|² - F[r,r;α] F[s,s;α])⁺`
    pub cauchy_schwarz: f64,
    /// `max |F[r,s;α]|` over `r ≠ s`
    pub worst_offdiag: f64,
}

impl FTensorReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.sum_rule <= tol
            && self.range <= tol
            && self.conjugate_symmetry <= tol
            && self.psd <= tol
            && self.cauchy_schwarz <= tol
    }
}

impl FTensor {
    /// Builds a tensor from explicit values, indexed `(r * n + s) * nu + α`.
    pub fn from_values(n: usize, nu: usize, time: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != n * n * nu || n == 0 || nu == 0 {
            return Err(Error::DimensionMismatch(format!(
                "F-tensor with n = {n}, nu = {nu} needs {} values, got {}",
                n * n * nu,
                values.len()
            )));
        }
        Ok(Self { n, nu, time, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn get(&self, r: usize, s: usize, alpha: usize) -> Complex64 {
        self.values[(r * self.n + s) * self.nu + alpha]
    }

    /// `F[r,r;α]`, real by construction.
    pub fn diag(&self, r: usize, alpha: usize) -> f64 {
        self.get(r, r, alpha).re
    }

    /// The `n×n` matrix `(r, s) ↦ F[r,s;α]`.
    pub fn cell_matrix(&self, alpha: usize) -> ComplexMatrix {
        DMatrix::from_fn(self.n, self.n, |r, s| self.get(r, s, alpha))
    }

    pub fn worst_offdiag(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for s in 0..self.n {
                if r != s {
                    for a in 0..self.nu {
                        worst = worst.max(self.get(r, s, a).norm());
                    }
                }
            }
        }
        worst
    }

    pub fn report(&self) -> FTensorReport {
        let mut rep = FTensorReport {
            worst_offdiag: self.worst_offdiag(),
            ..Default::default()
        };
        for r in 0..self.n {
            let total: f64 = (0..self.nu).map(|a| self.diag(r, a)).sum();
            rep.sum_rule = rep.sum_rule.max((total - 1.0).abs());
            for a in 0..self.nu {
                let f = self.get(r, r, a);
                rep.range = rep.range.max(-f.re).max(f.re - 1.0).max(f.im.abs());
            }
        }
        for a in 0..self.nu {
            for r in 0..self.n {
                for s in 0..self.n {
                    let f = self.get(r, s, a);
                    rep.conjugate_symmetry = rep.conjugate_symmetry.max((f - self.get(s, r, a).conj()).norm());
                    let excess = f.norm_sqr() - self.diag(r, a) * self.diag(s, a);
                    rep.cauchy_schwarz = rep.cauchy_schwarz.max(excess);
                }
            }
            let g = self.cell_matrix(a);
            let g = (&g + g.adjoint()).unscale(2.0);
            let min_eig = HermitianOperator::new(g)
                .map(|h| h.eigen().values[0])
                .unwrap_or(f64::NEG_INFINITY);
            rep.psd = rep.psd.max(-min_eig);
        }
        rep
    }

    /// Tensor with cells reordered so new cell `i` is old cell `order[i]`.
    pub fn permute_cells(&self, order: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.n {
            for s in 0..self.n {
                for &a in order {
                    values.push(self.get(r, s, a));
                }
            }
        }
        Self { values, ..self.clone() }
    }
}

fn check_observable(f: &FTensor, system: &MicroSystem, a: &HermitianOperator) -> Result<()> {
    if system.n() != f.n() {
        return Err(Error::DimensionMismatch("F-tensor and micro-system differ in n".into()));
    }
    if a.dim() != f.n() {
        return Err(Error::DimensionMismatch(format!(
            "observable is {}x{}, micro-system has n = {}",
            a.dim(),
            a.dim(),
            f.n()
        )));
    }
    Ok(())
}

/// `E(A ⊗ Π_α)` for each cell.
fn joint_expectations(f: &FTensor, system: &MicroSystem, a: &HermitianOperator) -> Vec<f64> {
    let c = system.coeffs();
    let am = a.matrix();
    (0..f.nu())
        .map(|alpha| {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..f.n() {
                for s in 0..f.n() {
                    acc += c[r] * c[s].conj() * am[(s, r)] * f.get(r, s, alpha);
                }
            }
            acc.re
        })
        .collect()
}

pub fn expectation_from_tensor(
    f: &FTensor,
    system: &MicroSystem,
    a: &HermitianOperator,
    m_values: &[f64],
) -> Result<f64> {
    check_observable(f, system, a)?;
    if m_values.len() != f.nu() {
        return Err(Error::DimensionMismatch(format!(
            "{} macro-observable values for {} cells",
            m_values.len(),
            f.nu()
        )));
    }
    Ok(joint_expectations(f, system, a)
        .iter()
        .zip(m_values)
        .map(|(e, m)| e * m)
        .sum())
}

pub fn cell_probabilities(f: &FTensor, system: &MicroSystem) -> Vec<f64> {
    (0..f.nu())
        .map(|alpha| {
            (0..f.n())
                .map(|r| system.coeffs()[r].norm_sqr() * f.diag(r, alpha))
                .sum()
        })
        .collect()
}

pub fn conditional_from_tensor(
    f: &FTensor,
    system: &MicroSystem,
    a: &HermitianOperator,
) -> Result<Vec<Option<f64>>> {
    check_observable(f, system, a)?;
    let joint = joint_expectations(f, system, a);
    Ok(cell_probabilities(f, system)
        .into_iter()
        .zip(joint)
        .map(|(p, e)| (p > CELL_PROBABILITY_FLOOR).then(|| e / p))
        .collect())
}

pub fn reduced_from_tensor(f: &FTensor, system: &MicroSystem) -> DensityMatrix {
    let c = system.coeffs();
    let n = f.n();
    let rho = DMatrix::from_fn(n, n, |r, s| {
        let total: Complex64 = (0..f.nu()).map(|a| f.get(r, s, a)).sum();
        c[r] * c[s].conj() * total
    });
    DensityMatrix::new_unchecked((&rho + rho.adjoint()).unscale(2.0))
}

/// The two-level demonstration instrument: `Ω = |0⟩⟨0|`, `K_1 = 0`,
/// `K_2 = (π/2) σ_x`, cells `{|0⟩⟨0|, |1⟩⟨1|}`. At `t = 1` the second block
/// flips the pointer, so the instrument is ideal.
pub fn demo_model() -> CompositeModel {
    let system = MicroSystem::uniform(2);
    let k = HermitianOperator::zeros(2);
    let couplings = vec![
        HermitianOperator::zeros(2),
        HermitianOperator::new(pauli::x()).expect("σx").scaled(std::f64::consts::FRAC_PI_2),
    ];
    let omega = DensityMatrix::new_unchecked(Projector::onto_basis_states(2, [0]).matrix().clone());
    let cells = PhaseCellSet::new(vec![
        Projector::onto_basis_states(2, [0]),
        Projector::onto_basis_states(2, [1]),
    ])
    .expect("computational basis cells");
    CompositeModel::build(system, Instrument::new(k, couplings, omega, cells).expect("2x2 operators"))
        .expect("demo model")
}
