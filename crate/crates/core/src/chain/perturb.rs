//! Local modifications of the initial chain state.
//!
//! The chain is prepared as before except on a handful of sites `K`, where
//! an arbitrary (possibly entangled) state replaces the product of site
//! states. Only the `σ_z` diagonal of that replacement enters the misreading
//! probabilities (after the local `Z` conjugation in the minus channel), so
//! the exact traces are a `2^|K|`-term mixture of binomial tails over the
//! untouched sites.

use rand::Rng;
use serde::Serialize;

use super::dense::{check_dense, conjugate_site, site_rotation, site_state, ups};
use super::{effective_polarization_minus, ChainParams, MisclassificationPair};
use crate::error::{Error, Result};
use crate::operator::{c64, tensor_product_all, ComplexMatrix, DensityMatrix};
use crate::special::{binomial_cdf_pq, log_sum_exp, LogProb};

pub const MAX_PERTURBED_SITES: usize = 8;

/// A replacement state on the 1-based sites `sites` (ascending); the
/// leading tensor factor of `state` belongs to the first listed site.
#[derive(Clone, Debug)]
pub struct LocalPerturbation {
    sites: Vec<usize>,
    state: DensityMatrix,
}

impl LocalPerturbation {
    pub fn new(mut sites: Vec<usize>, state: DensityMatrix) -> Result<Self> {
        if sites.len() > MAX_PERTURBED_SITES {
            return Err(Error::TooManyPerturbedSites { got: sites.len(), max: MAX_PERTURBED_SITES });
        }
        if sites.is_empty() {
            return Err(Error::InvalidPerturbation("no sites given".into()));
        }
        if sites.contains(&0) {
            return Err(Error::InvalidPerturbation("sites are numbered from 1".into()));
        }
        let before = sites.len();
        let sorted = sites.windows(2).all(|w| w[0] < w[1]);
        sites.sort_unstable();
        sites.dedup();
        if sites.len() != before {
            return Err(Error::InvalidPerturbation("duplicate sites".into()));
        }
        if !sorted {
            return Err(Error::InvalidPerturbation("sites must be listed in ascending order".into()));
        }
        if state.dim() != 1 << sites.len() {
            return Err(Error::InvalidPerturbation(format!(
                "replacement state is {}-dimensional, {} sites need {}",
                state.dim(),
                sites.len(),
                1 << sites.len()
            )));
        }
        Ok(Self { sites, state })
    }

    fn product(sites: Vec<usize>, factor: ComplexMatrix) -> Result<Self> {
        if sites.len() > MAX_PERTURBED_SITES {
            return Err(Error::TooManyPerturbedSites { got: sites.len(), max: MAX_PERTURBED_SITES });
        }
        let state = tensor_product_all(std::iter::repeat_n(&factor, sites.len()));
        Self::new(sites, DensityMatrix::new_unchecked(state))
    }

    /// The original site states, i.e. no perturbation at all.
    pub fn unperturbed(sites: Vec<usize>, m: f64) -> Result<Self> {
        Self::product(sites, site_state(m))
    }

    pub fn maximally_mixed(sites: Vec<usize>) -> Result<Self> {
        Self::product(sites, site_state(0.0))
    }

    /// Site states with the polarization reversed, `(I - m σ_z) / 2`.
    pub fn flipped(sites: Vec<usize>, m: f64) -> Result<Self> {
        Self::product(sites, site_state(-m))
    }

    /// A random full-rank (generally entangled) state on the sites.
    pub fn random<R: Rng + ?Sized>(sites: Vec<usize>, rng: &mut R) -> Result<Self> {
        if sites.len() > MAX_PERTURBED_SITES {
            return Err(Error::TooManyPerturbedSites { got: sites.len(), max: MAX_PERTURBED_SITES });
        }
        let state = crate::random::random_density(rng, 1 << sites.len());
        Self::new(sites, state)
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    fn check_against(&self, params: &ChainParams) -> Result<()> {
        params.validate()?;
        let n = params.sites();
        if let Some(&s) = self.sites.iter().find(|&&s| s > n) {
            return Err(Error::InvalidPerturbation(format!("site {s} is outside the {n}-site chain")));
        }
        Ok(())
    }

    /// `σ_z` populations of the replacement state after `exp(-iJσx) · exp(iJσx)`
    /// conjugation on each of its sites (`j = 0` leaves it untouched).
    fn populations(&self, j: f64) -> Vec<f64> {
        let k = self.sites.len();
        let mut rho = self.state.matrix().clone();
        if j != 0.0 {
            let u = site_rotation(j);
            for site in 0..k {
                conjugate_site(&mut rho, k, site, &u);
            }
        }
        (0..rho.nrows()).map(|i| rho[(i, i)].re.max(0.0)).collect()
    }
}

/// Exact perturbed traces with the product-structure bounds that bracket
/// them for every replacement state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbedMisclassification {
    pub exact: MisclassificationPair,
    /// `(lower, upper)` for `Tr(Ω̂₁₊ Π̂₋)`
    pub plus_bounds: (f64, f64),
    /// `(lower, upper)` for `Tr(Ω̂₁₋ Π̂₊)`
    pub minus_bounds: (f64, f64),
    pub log_plus_bounds: (f64, f64),
    pub log_minus_bounds: (f64, f64),
    pub sandwich_holds: bool,
}

const SANDWICH_LOG_SLACK: f64 = 1e-10;

fn within(lower: f64, exact: f64, upper: f64) -> bool {
    lower <= exact + SANDWICH_LOG_SLACK && exact <= upper + SANDWICH_LOG_SLACK
}

/// Mixture `Σ_k w_k · tail_k` in both linear and log form.
fn mixture(weights: &[f64], tails: impl Iterator<Item = LogProb>) -> LogProb {
    let mut value = 0.0;
    let mut logs = Vec::with_capacity(weights.len());
    for (&w, t) in weights.iter().zip(tails) {
        value += w * t.value;
        logs.push(w.ln() + t.log_value);
    }
    LogProb { value, log_value: log_sum_exp(&logs) }
}

pub fn perturbed_misclassification(
    params: &ChainParams,
    pert: &LocalPerturbation,
) -> Result<PerturbedMisclassification> {
    pert.check_against(params)?;
    let l = params.l as i64;
    let k = pert.sites.len();
    let rest = (params.sites() - k) as u64;
    let rest_i = rest as i64;
    let (p_up, p_down) = ((1.0 + params.m) / 2.0, (1.0 - params.m) / 2.0);
    let x = effective_polarization_minus(params);
    let (pm_up, pm_down) = ((1.0 + x) / 2.0, (1.0 - x) / 2.0);

    // plus channel: misread iff ups(K) + ups(rest) ≤ L
    let weights = pert.populations(0.0);
    let plus = mixture(
        &weights,
        (0..weights.len()).map(|i| binomial_cdf_pq(rest, l - ups(i, k) as i64, p_up, p_down)),
    );

    // minus channel: misread iff ups(K) + ups(rest) ≥ L + 1, i.e.
    // downs(rest) ≤ rest - (L + 1 - ups(K))
    let weights = pert.populations(params.j);
    let minus = mixture(
        &weights,
        (0..weights.len()).map(|i| {
            binomial_cdf_pq(rest, rest_i - (l + 1 - ups(i, k) as i64), pm_down, pm_up)
        }),
    );

    // lower bounds: the untouched sites alone force the reading (needs |K| ≤ L)
    let forced = |p: f64| {
        if k as i64 <= l {
            LogProb { value: p.powi(rest as i32), log_value: rest as f64 * p.ln() }
        } else {
            LogProb::ZERO
        }
    };
    let plus_lower = forced(p_down);
    let minus_lower = forced(pm_up);
    // upper bounds: the perturbed sites take the most favourable values
    let plus_upper = binomial_cdf_pq(rest, l, p_up, p_down);
    let minus_upper = binomial_cdf_pq(rest, rest_i - (l + 1 - k as i64), pm_down, pm_up);

    let sandwich_holds = within(plus_lower.log_value, plus.log_value, plus_upper.log_value)
        && within(minus_lower.log_value, minus.log_value, minus_upper.log_value);

    Ok(PerturbedMisclassification {
        exact: MisclassificationPair::from_parts(plus, minus),
        plus_bounds: (plus_lower.value, plus_upper.value),
        minus_bounds: (minus_lower.value, minus_upper.value),
        log_plus_bounds: (plus_lower.log_value, plus_upper.log_value),
        log_minus_bounds: (minus_lower.log_value, minus_upper.log_value),
        sandwich_holds,
    })
}

/// Dense check: builds the modified chain state `Ω̂₁` in full and
/// conjugates it by `Z`.
pub fn brute_force_perturbed(params: &ChainParams, pert: &LocalPerturbation) -> Result<MisclassificationPair> {
    check_dense(params)?;
    pert.check_against(params)?;
    let sites = params.sites();
    let dim = 1usize << sites;
    let k = pert.sites.len();
    let site_masks: Vec<usize> = pert.sites.iter().map(|&s| 1usize << (sites - s)).collect();
    let rest_mask = (dim - 1) & !site_masks.iter().fold(0, |a, b| a | b);
    let pack = |index: usize| {
        site_masks
            .iter()
            .fold(0usize, |acc, &mask| (acc << 1) | usize::from(index & mask != 0))
    };
    let up = (1.0 + params.m) / 2.0;
    let down = (1.0 - params.m) / 2.0;
    let packed: Vec<usize> = (0..dim).map(pack).collect();
    let rest_weight: Vec<f64> = (0..dim)
        .map(|index| {
            (0..sites)
                .map(|b| 1usize << b)
                .filter(|&bit| rest_mask & bit != 0)
                .map(|bit| if index & bit == 0 { up } else { down })
                .product()
        })
        .collect();
    let replacement = pert.state.matrix();
    let mut omega = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..dim {
            // the untouched sites are diagonal in σz
            if i & rest_mask != j & rest_mask {
                continue;
            }
            omega[(i, j)] = replacement[(packed[i], packed[j])] * c64(rest_weight[i], 0.0);
        }
    }
    debug_assert_eq!(1 << k, replacement.nrows());
    let rotated = super::rotate_chain_state(&omega, sites, params.j);
    let mut plus_to_minus = 0.0;
    let mut minus_to_plus = 0.0;
    for i in 0..dim {
        if ups(i, sites) <= params.l {
            plus_to_minus += omega[(i, i)].re;
        } else {
            minus_to_plus += rotated[(i, i)].re;
        }
    }
    Ok(MisclassificationPair::from_values(plus_to_minus.max(0.0), minus_to_plus.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{brute_force_chain, misclassification};
    use crate::random::rng_from_seed;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn params(l: usize, m: f64, j: f64) -> ChainParams {
        ChainParams::new(l, m, j).unwrap()
    }

    #[test]
    fn null_perturbation_changes_nothing() {
        let p = params(4, 0.5, 3.0 * PI / 8.0);
        let pert = LocalPerturbation::unperturbed(vec![2, 5], p.m).unwrap();
        let got = perturbed_misclassification(&p, &pert).unwrap();
        let base = misclassification(&p);
        assert!((got.exact.plus_to_minus - base.plus_to_minus).abs() < 1e-15);
        assert!((got.exact.minus_to_plus - base.minus_to_plus).abs() < 1e-15);
        assert!(got.sandwich_holds);
    }

    #[test]
    fn ideal_chain_stays_ideal_under_a_flip() {
        let p = params(3, 1.0, FRAC_PI_2);
        for site in 1..=7 {
            let pert = LocalPerturbation::flipped(vec![site], 1.0).unwrap();
            let got = perturbed_misclassification(&p, &pert).unwrap();
            assert_eq!(got.exact.plus_to_minus, 0.0);
            assert!(got.exact.minus_to_plus < 1e-30);
            assert_eq!(got.plus_bounds.1, 0.0);
        }
    }

    #[test]
    fn maximally_mixed_site_matches_dense() {
        let p = params(2, 0.5, 3.0 * PI / 8.0);
        let pert = LocalPerturbation::maximally_mixed(vec![3]).unwrap();
        let exact = perturbed_misclassification(&p, &pert).unwrap();
        let dense = brute_force_perturbed(&p, &pert).unwrap();
        assert!(exact.exact.max_abs_diff(&dense) < 1e-12);
        assert!(exact.sandwich_holds);
    }

    #[test]
    fn entangled_pair_matches_dense() {
        let p = params(2, 0.7, 1.0);
        let mut rng = rng_from_seed(17);
        let pert = LocalPerturbation::random(vec![1, 4], &mut rng).unwrap();
        let exact = perturbed_misclassification(&p, &pert).unwrap();
        let dense = brute_force_perturbed(&p, &pert).unwrap();
        assert!(exact.exact.max_abs_diff(&dense) < 1e-12);
        assert!(exact.sandwich_holds);
    }

    #[test]
    fn dense_oracle_reduces_to_unperturbed() {
        let p = params(2, 0.3, 1.3);
        let pert = LocalPerturbation::unperturbed(vec![2, 3, 5], p.m).unwrap();
        let dense = brute_force_perturbed(&p, &pert).unwrap();
        let base = brute_force_chain(&p).unwrap();
        assert!(dense.max_abs_diff(&base) < 1e-14);
    }

    #[test]
    fn validation() {
        let p = params(1, 0.5, 1.0);
        assert!(matches!(
            LocalPerturbation::maximally_mixed((1..=9).collect()),
            Err(Error::TooManyPerturbedSites { got: 9, .. })
        ));
        assert!(LocalPerturbation::maximally_mixed(vec![0]).is_err());
        assert!(LocalPerturbation::maximally_mixed(vec![2, 2]).is_err());
        assert!(LocalPerturbation::maximally_mixed(vec![3, 1]).is_err());
        let outside = LocalPerturbation::maximally_mixed(vec![4]).unwrap();
        assert!(perturbed_misclassification(&p, &outside).is_err());
        let wrong_dim = LocalPerturbation::new(vec![1, 2], DensityMatrix::maximally_mixed(2));
        assert!(wrong_dim.is_err());
    }
}
