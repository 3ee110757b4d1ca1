//! Dense simulation of the chain factor, used as the independent check on
//! the closed-form tails and as the bridge into the generic model.

use super::{ChainParams, MisclassificationPair};
use crate::error::{Error, Result};
use crate::generic::{CompositeModel, MicroSystem, PhaseCellSet};
use crate::operator::{
    c64, pauli, tensor_product_all, unitary_exponential, ComplexMatrix, DensityMatrix, HermitianOperator, Projector,
};

pub const MAX_DENSE_SITES: usize = 13;

pub(crate) fn check_dense(params: &ChainParams) -> Result<()> {
    params.validate()?;
    if params.sites() > MAX_DENSE_SITES {
        return Err(Error::ChainTooLong { sites: params.sites() });
    }
    Ok(())
}

/// `(I + m σ_z) / 2`.
pub fn site_state(m: f64) -> ComplexMatrix {
    (pauli::identity() + pauli::z() * c64(m, 0.0)).unscale(2.0)
}

/// `exp(iJσ_x)` for one site.
pub fn site_rotation(j: f64) -> ComplexMatrix {
    let sx = HermitianOperator::new(pauli::x()).expect("σx is Hermitian");
    unitary_exponential(&sx, j)
}

pub fn initial_chain_state(params: &ChainParams) -> Result<DensityMatrix> {
    check_dense(params)?;
    let site = site_state(params.m);
    Ok(DensityMatrix::new_unchecked(tensor_product_all(std::iter::repeat_n(&site, params.sites()))))
}

/// The full `2^(2L+1)`-dimensional `Z = ⊗ exp(iJσ_x)`.
pub fn chain_rotation(params: &ChainParams) -> Result<ComplexMatrix> {
    check_dense(params)?;
    let u = site_rotation(params.j);
    Ok(tensor_product_all(std::iter::repeat_n(&u, params.sites())))
}

/// `ρ ← (u† on `site`) ρ (u on `site`)` for a `2^sites` dense matrix,
/// with `site` counted from 0 at the most significant factor.
pub(crate) fn conjugate_site(rho: &mut ComplexMatrix, sites: usize, site: usize, u: &ComplexMatrix) {
    let dim = rho.nrows();
    debug_assert_eq!(dim, 1 << sites);
    let bit = 1usize << (sites - 1 - site);
    let ud = u.adjoint();
    let (l00, l01, l10, l11) = (ud[(0, 0)], ud[(0, 1)], ud[(1, 0)], ud[(1, 1)]);
    let (r00, r01, r10, r11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    // column-major storage: entry (row, col) sits at col * dim + row
    let data = rho.as_mut_slice();
    // left multiply by u† acting on the chosen factor: mixes row pairs
    for column in data.chunks_exact_mut(dim) {
        for row in (0..dim).filter(|r| r & bit == 0) {
            let (a, b) = (column[row], column[row | bit]);
            column[row] = l00 * a + l01 * b;
            column[row | bit] = l10 * a + l11 * b;
        }
    }
    // right multiply by u: mixes column pairs
    for col in (0..dim).filter(|c| c & bit == 0) {
        let (lo, hi) = data.split_at_mut((col | bit) * dim);
        let first = &mut lo[col * dim..(col + 1) * dim];
        let second = &mut hi[..dim];
        for (x, y) in first.iter_mut().zip(second.iter_mut()) {
            let (a, b) = (*x, *y);
            *x = a * r00 + b * r10;
            *y = a * r01 + b * r11;
        }
    }
}

/// `Z† ρ Z`, applied one site at a time.
pub fn rotate_chain_state(rho: &ComplexMatrix, sites: usize, j: f64) -> ComplexMatrix {
    let u = site_rotation(j);
    let mut out = rho.clone();
    for site in 0..sites {
        conjugate_site(&mut out, sites, site, &u);
    }
    out
}

/// Number of up spins (`σ_z = +1`, bit value 0) in a basis index.
pub(crate) fn ups(index: usize, sites: usize) -> usize {
    sites - index.count_ones() as usize
}

fn misreading_traces(plus_state: &ComplexMatrix, minus_state: &ComplexMatrix, params: &ChainParams) -> MisclassificationPair {
    let sites = params.sites();
    let mut plus_to_minus = 0.0;
    let mut minus_to_plus = 0.0;
    for i in 0..plus_state.nrows() {
        if ups(i, sites) <= params.l {
            plus_to_minus += plus_state[(i, i)].re;
        } else {
            minus_to_plus += minus_state[(i, i)].re;
        }
    }
    MisclassificationPair::from_values(plus_to_minus.max(0.0), minus_to_plus.max(0.0))
}

/// Both traces from the dense chain state: `Ω̂` is materialized as a
/// `2^(2L+1)` matrix and `Z` is applied factor by factor.
pub fn brute_force_chain(params: &ChainParams) -> Result<MisclassificationPair> {
    let omega = initial_chain_state(params)?;
    let rotated = rotate_chain_state(omega.matrix(), params.sites(), params.j);
    Ok(misreading_traces(omega.matrix(), &rotated, params))
}

/// As [`brute_force_chain`], conjugating by the fully materialized `Z`.
/// Cubic in the chain dimension; meant for short chains.
pub fn brute_force_chain_full_rotation(params: &ChainParams) -> Result<MisclassificationPair> {
    let omega = initial_chain_state(params)?;
    let z = chain_rotation(params)?;
    let rotated = z.adjoint() * omega.matrix() * &z;
    Ok(misreading_traces(omega.matrix(), &rotated, params))
}

/// Pointer cells `Π̂₊` (total `σ_z > 0`) and `Π̂₋`, in that order.
pub(crate) fn pointer_cells(params: &ChainParams) -> PhaseCellSet {
    let sites = params.sites();
    let dim = 1usize << sites;
    let plus = Projector::onto_basis_states(dim, (0..dim).filter(|&i| ups(i, sites) > params.l));
    let minus = Projector::onto_basis_states(dim, (0..dim).filter(|&i| ups(i, sites) <= params.l));
    PhaseCellSet::new(vec![plus, minus]).expect("sign cells partition the basis")
}

/// The post-transit chain as a generic two-state model: eigenstates
/// `(u₊, u₋)` in equal superposition, block propagators `(I, Z)`,
/// initial state `Ω̂` and cells `(Π̂₊, Π̂₋)`. The propagators do not depend
/// on time.
pub fn as_generic_model(params: &ChainParams) -> Result<CompositeModel> {
    let omega = initial_chain_state(params)?;
    let z = chain_rotation(params)?;
    let dim = omega.dim();
    CompositeModel::with_fixed_propagators(
        MicroSystem::uniform(2),
        vec![ComplexMatrix::identity(dim, dim), z],
        omega,
        pointer_cells(params),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::misclassification;
    use crate::operator::max_abs_diff;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn local_rotation_matches_full_rotation() {
        let p = ChainParams::new(1, 0.6, 1.1).unwrap();
        let omega = initial_chain_state(&p).unwrap();
        let z = chain_rotation(&p).unwrap();
        let full = z.adjoint() * omega.matrix() * &z;
        let local = rotate_chain_state(omega.matrix(), 3, p.j);
        assert!(max_abs_diff(&full, &local) < 1e-15);
    }

    #[test]
    fn ideal_three_site_chain() {
        let p = ChainParams::new(1, 1.0, FRAC_PI_2).unwrap();
        let mc = brute_force_chain(&p).unwrap();
        assert!(mc.plus_to_minus <= 1e-14 && mc.minus_to_plus <= 1e-14);
    }

    #[test]
    fn three_site_chain_matches_closed_form() {
        let p = ChainParams::new(1, 0.5, 3.0 * PI / 8.0).unwrap();
        let dense = brute_force_chain(&p).unwrap();
        let closed = misclassification(&p);
        assert!(dense.max_abs_diff(&closed) < 1e-12);
        assert!((dense.plus_to_minus - 0.15625).abs() < 1e-14);
    }

    #[test]
    fn five_site_plus_channel() {
        let p = ChainParams::new(2, 0.9, 0.9 * FRAC_PI_2).unwrap();
        let dense = brute_force_chain(&p).unwrap();
        let tail = crate::chain::binomial_tail(2, 0.95);
        assert!((dense.plus_to_minus - tail.value).abs() < 1e-12);
        let full = brute_force_chain_full_rotation(&p).unwrap();
        assert!(dense.max_abs_diff(&full) < 1e-14);
    }

    #[test]
    fn rotated_site_polarization() {
        // the σz expectation of a rotated site is m cos 2J
        let p = ChainParams::new(1, 0.5, 3.0 * PI / 8.0).unwrap();
        let u = site_rotation(p.j);
        let rotated = u.adjoint() * site_state(p.m) * &u;
        let pol = rotated[(0, 0)].re - rotated[(1, 1)].re;
        assert!((pol - crate::chain::effective_polarization_minus(&p)).abs() < 1e-15);
    }

    #[test]
    fn long_chain_rejected() {
        let p = ChainParams::new(7, 0.5, 1.0).unwrap();
        assert!(matches!(brute_force_chain(&p), Err(Error::ChainTooLong { sites: 15 })));
        assert!(matches!(as_generic_model(&p), Err(Error::ChainTooLong { .. })));
    }

    #[test]
    fn generic_bridge_off_diagonals_obey_cauchy_schwarz() {
        let p = ChainParams::new(1, 0.5, 3.0 * PI / 8.0).unwrap();
        let f = as_generic_model(&p).unwrap().compute_f_tensor(0.0);
        for a in 0..2 {
            let bound = (f.diag(0, a) * f.diag(1, a)).sqrt();
            assert!(f.get(0, 1, a).norm() <= bound + 1e-14);
        }
    }
}
