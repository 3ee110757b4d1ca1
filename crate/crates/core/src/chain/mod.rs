//! The finite Coleman-Hepp instrument.
//!
//! An electron spin is read out by a chain of `2L + 1` Pauli spins, each
//! prepared in `(I + m σ_z) / 2`. Once the electron's orbital wave packet
//! has crossed the chain, the chain is left in `Ω̂₊ = Ω̂` if the spin was
//! up and in `Ω̂₋ = Z† Ω̂ Z` with `Z = ⊗ exp(iJσ_x)` if it was down. The
//! pointer reads the sign of the total `σ_z`.
//!
//! Both misreading probabilities are binomial tails over independent
//! sites: site-up probability `(1 + m)/2` in `Ω̂₊` and `(1 + m cos 2J)/2`
//! in `Ω̂₋`.

mod dense;
mod orbital;
mod perturb;

pub use dense::{
    as_generic_model, brute_force_chain, brute_force_chain_full_rotation, chain_rotation, initial_chain_state,
    rotate_chain_state, site_rotation, site_state, MAX_DENSE_SITES,
};
pub use orbital::{critical_time, travel_time_kernel, CriticalTime, KernelTable, OrbitalSetup, KERNEL_TOLERANCE};
pub use perturb::{
    brute_force_perturbed, perturbed_misclassification, LocalPerturbation, PerturbedMisclassification,
    MAX_PERTURBED_SITES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{binomial_cdf_pq, ln_choose, LogProb};

/// Chain length `L` (the chain has `2L + 1` sites), polarization `m` and
/// coupling integral `J = ∫ V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    #[serde(rename = "L")]
    pub l: usize,
    pub m: f64,
    #[serde(rename = "J")]
    pub j: f64,
}

impl ChainParams {
    pub fn new(l: usize, m: f64, j: f64) -> Result<Self> {
        let p = Self { l, m, j };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 1 {
            return Err(Error::InvalidChain("L must be at least 1".into()));
        }
        if !(self.m > 0.0 && self.m <= 1.0) {
            return Err(Error::InvalidChain(format!("polarization m = {} is outside (0, 1]", self.m)));
        }
        if !self.j.is_finite() {
            return Err(Error::InvalidChain("J must be finite".into()));
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        2 * self.l + 1
    }

    /// Site-up probability and its complement in `Ω̂₊`.
    fn plus_channel(&self) -> (f64, f64) {
        ((1.0 + self.m) / 2.0, (1.0 - self.m) / 2.0)
    }

    /// Site-down probability and its complement in `Ω̂₋`.
    fn minus_channel(&self) -> (f64, f64) {
        let x = effective_polarization_minus(self);
        ((1.0 - x) / 2.0, (1.0 + x) / 2.0)
    }
}

/// `Tr(Ω̂₊ Π̂₋)` and `Tr(Ω̂₋ Π̂₊)`, with natural logs that survive underflow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MisclassificationPair {
    pub plus_to_minus: f64,
    pub minus_to_plus: f64,
    pub log_plus: f64,
    pub log_minus: f64,
}

impl MisclassificationPair {
    pub fn from_parts(plus: LogProb, minus: LogProb) -> Self {
        Self {
            plus_to_minus: plus.value,
            minus_to_plus: minus.value,
            log_plus: plus.log_value,
            log_minus: minus.log_value,
        }
    }

    pub fn from_values(plus_to_minus: f64, minus_to_plus: f64) -> Self {
        Self {
            plus_to_minus,
            minus_to_plus,
            log_plus: plus_to_minus.ln(),
            log_minus: minus_to_plus.ln(),
        }
    }

    /// The worse of the two channels: the instrument's `η`.
    pub fn max(&self) -> f64 {
        self.plus_to_minus.max(self.minus_to_plus)
    }

    pub fn log_max(&self) -> f64 {
        self.log_plus.max(self.log_minus)
    }

    /// Largest absolute difference of the linear values.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.plus_to_minus - other.plus_to_minus)
            .abs()
            .max((self.minus_to_plus - other.minus_to_plus).abs())
    }
}

/// Polarization `m cos 2J` of the `σ_z` diagonal of `Ω̂₋`.
pub fn effective_polarization_minus(params: &ChainParams) -> f64 {
    params.m * (2.0 * params.j).cos()
}

fn tail_pq(l: usize, p: f64, q: f64) -> LogProb {
    if p == q {
        // odd trial count: P(X ≤ L) = P(X ≥ L + 1) exactly
        return LogProb { value: 0.5, log_value: -std::f64::consts::LN_2 };
    }
    binomial_cdf_pq(2 * l as u64 + 1, l as i64, p, q)
}

/// `P(X ≤ L)` for `X ~ Binomial(2L + 1, p_up)`.
pub fn binomial_tail(l: usize, p_up: f64) -> LogProb {
    tail_pq(l, p_up, 1.0 - p_up)
}

pub fn misclassification(params: &ChainParams) -> MisclassificationPair {
    let (p, q) = params.plus_channel();
    let plus = tail_pq(params.l, p, q);
    // counting down spins under Ω̂₋: P(#down ≤ L) = P(#up ≥ L + 1)
    let (pd, qd) = params.minus_channel();
    let minus = tail_pq(params.l, pd, qd);
    MisclassificationPair::from_parts(plus, minus)
}

/// Exponential decay rates of the two misreading channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateConstants {
    /// `c = -(1/2) ln(1 - m² cos²(2J))`
    pub minus: f64,
    /// `-(1/2) ln(1 - m²)`, infinite at `m = 1`
    pub plus: f64,
}

impl RateConstants {
    /// Asymptotic slope of `ln Tr(Ω̂₋ Π̂₊)` against `L`, i.e. `-2c`.
    pub fn slope_minus(&self) -> f64 {
        -2.0 * self.minus
    }

    pub fn slope_plus(&self) -> f64 {
        -2.0 * self.plus
    }
}

pub fn rate_constant(params: &ChainParams) -> Result<RateConstants> {
    let x = effective_polarization_minus(params);
    let argument = 1.0 - x * x;
    if argument <= 0.0 {
        return Err(Error::DegenerateRate { argument });
    }
    let m2 = params.m * params.m;
    Ok(RateConstants {
        minus: -0.5 * (-x * x).ln_1p(),
        plus: if m2 >= 1.0 { f64::INFINITY } else { -0.5 * (-m2).ln_1p() },
    })
}

/// `η̂(L) = (1 - m² cos²(2J))^{L/2}`, a threshold every normal chain
/// eventually meets. Zero in the ideal regime.
pub fn suggested_eta(params: &ChainParams) -> f64 {
    let x = effective_polarization_minus(params);
    (1.0 - x * x).max(0.0).powf(params.l as f64 / 2.0)
}

/// Natural logs of the peak-term bounds on the two traces: `L + 1` times
/// the largest summand of each tail.
pub fn peak_term_bounds(params: &ChainParams) -> (f64, f64) {
    let l = params.l as u64;
    let base = ln_choose(2 * l + 1, l) + ((l + 1) as f64).ln();
    let lf = l as f64;
    let bound = |p: f64, q: f64| {
        if p == 0.0 {
            return f64::NEG_INFINITY;
        }
        base + lf * p.ln() + (lf + 1.0) * q.ln()
    };
    let (p, q) = params.plus_channel();
    // the plus summands carry (1+m)^n (1-m)^(2L+1-n), peaked at n = L
    let plus = bound(p, q);
    let (pd, qd) = params.minus_channel();
    let minus = bound(pd, qd);
    (plus, minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn effective_polarization_values() {
        let p = ChainParams::new(1, 0.7, FRAC_PI_2).unwrap();
        assert!((effective_polarization_minus(&p) + 0.7).abs() < 1e-15);
        let p = ChainParams::new(1, 0.7, FRAC_PI_4).unwrap();
        assert!(effective_polarization_minus(&p).abs() < 1e-15);
        let p = ChainParams::new(1, 0.5, 3.0 * PI / 8.0).unwrap();
        assert!((effective_polarization_minus(&p) + 0.5 * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn tail_edge_cases() {
        assert_eq!(binomial_tail(4, 1.0), LogProb::ZERO);
        for l in [1, 7, 1000, 1_000_000] {
            let t = binomial_tail(l, 0.5);
            assert_eq!(t.value, 0.5);
        }
        let t = binomial_tail(1, 0.75);
        assert!((t.value - 0.15625).abs() < 1e-16);
    }

    #[test]
    fn tail_complement_identity() {
        for &p in &[0.01, 0.3, 0.49, 0.6, 0.97] {
            for l in [1, 5, 50, 500] {
                let s = binomial_tail(l, p).value + binomial_tail(l, 1.0 - p).value;
                assert!((s - 1.0).abs() < 1e-12, "p = {p}, L = {l}");
            }
        }
    }

    #[test]
    fn tail_log_finite_at_huge_length() {
        let t = binomial_tail(1_000_000, 0.75);
        assert_eq!(t.value, 0.0);
        assert!(t.log_value.is_finite() && t.log_value < -1e5);
        let smaller = binomial_tail(999_999, 0.75);
        assert!(t.log_value < smaller.log_value);
    }

    #[test]
    fn ideal_chain_never_misreads() {
        let p = ChainParams::new(10, 1.0, FRAC_PI_2).unwrap();
        let mc = misclassification(&p);
        assert_eq!(mc.plus_to_minus, 0.0);
        assert_eq!(mc.minus_to_plus, 0.0);
        assert_eq!(mc.log_plus, f64::NEG_INFINITY);
    }

    #[test]
    fn three_site_chain_by_enumeration() {
        let p = ChainParams::new(1, 0.5, 3.0 * PI / 8.0).unwrap();
        let mc = misclassification(&p);
        assert!((mc.plus_to_minus - 0.15625).abs() < 1e-15);
        // Ω̂₋ site-up probability (1 + m cos 2J)/2; misread needs ≥ 2 of 3 up
        let u = (1.0 + effective_polarization_minus(&p)) / 2.0;
        let expected = 3.0 * u * u * (1.0 - u) + u * u * u;
        assert!((mc.minus_to_plus - expected).abs() < 1e-15);
        assert!((mc.minus_to_plus - 0.245_883_500_511_084_5).abs() < 1e-12);
    }

    #[test]
    fn normal_regime_is_positive_and_bounded() {
        for &m in &[0.2, 0.5, 0.9] {
            for &j in &[0.9, 1.1, 1.4] {
                for l in [1usize, 10, 100, 1000] {
                    let p = ChainParams::new(l, m, j).unwrap();
                    let mc = misclassification(&p);
                    assert!(mc.log_plus.is_finite() && mc.log_minus.is_finite());
                    assert!(mc.log_plus < 0.0 && mc.log_minus < 0.0);
                    let (bp, bm) = peak_term_bounds(&p);
                    assert!(mc.log_plus <= bp + 1e-12);
                    assert!(mc.log_minus <= bm + 1e-12);
                }
            }
        }
    }

    #[test]
    fn rate_constant_values() {
        let p = ChainParams::new(1, 0.5, 3.0 * PI / 8.0).unwrap();
        let c = rate_constant(&p).unwrap();
        assert!((c.minus - (-0.5 * 0.875f64.ln())).abs() < 1e-15);
        assert!((c.minus - 0.066_765_696_312_261_3).abs() < 1e-12);
        assert!((c.plus - (-0.5 * 0.75f64.ln())).abs() < 1e-15);

        let tiny = ChainParams::new(1, 1e-9, 1.2).unwrap();
        assert!(rate_constant(&tiny).unwrap().minus < 1e-17);

        let ideal = ChainParams::new(1, 1.0, FRAC_PI_2).unwrap();
        assert!(matches!(rate_constant(&ideal), Err(Error::DegenerateRate { .. })));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ChainParams::new(0, 0.5, 1.0).is_err());
        assert!(ChainParams::new(1, 0.0, 1.0).is_err());
        assert!(ChainParams::new(1, 1.5, 1.0).is_err());
        assert!(ChainParams::new(1, -0.5, 1.0).is_err());
    }

    #[test]
    fn suggested_eta_matches_rate() {
        let p = ChainParams::new(40, 0.5, 3.0 * PI / 8.0).unwrap();
        let c = rate_constant(&p).unwrap().minus;
        assert!((suggested_eta(&p) - (-c * 40.0).exp()).abs() < 1e-14);
        assert_eq!(suggested_eta(&ChainParams::new(3, 1.0, FRAC_PI_2).unwrap()), 0.0);
    }
}
