//! The orbital factor, checked rather than simulated.
//!
//! With the packet moving at unit speed, site `n` sees the accumulated
//! coupling `F_{n,t}(x) = ∫_0^t V(x + s - n) ds`. Once every site has seen
//! the whole potential for every `x` in the packet's support, `F = J` and
//! the chain decouples from the orbital motion. The kernel is evaluated
//! through the exact antiderivative of the linearly interpolated table, so
//! the only discretization error is the trapezoid error of that table.

use serde::Serialize;

use super::ChainParams;
use crate::error::{Error, Result};

/// Threshold on `max |F_{n,t}(x) - J|` that counts as fully swept.
pub const KERNEL_TOLERANCE: f64 = 1e-6;

const MIN_INTERVALS: usize = 32;
const DEFAULT_INTERVALS: usize = 256;
const J_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitalSetup {
    a: f64,
    b: f64,
    x_lo: f64,
    x_hi: f64,
    /// `V` at `a + i * grid_step`, `i = 0..=intervals`
    potential: Vec<f64>,
    grid_step: f64,
    /// cumulative trapezoid integral at the same nodes
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl OrbitalSetup {
    /// `potential` holds samples on a uniform grid spanning `[a, b]`,
    /// endpoints included.
    pub fn from_table(a: f64, b: f64, x_lo: f64, x_hi: f64, potential: Vec<f64>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidSetup(format!("potential support [{a}, {b}] is empty")));
        }
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo <= x_hi) {
            return Err(Error::InvalidSetup(format!("wave packet support [{x_lo}, {x_hi}] is empty")));
        }
        if x_hi > a + 1.0 {
            return Err(Error::InvalidSetup(format!(
                "wave packet must start left of the first site's potential: x_hi = {x_hi} > a + 1 = {}",
                a + 1.0
            )));
        }
        let intervals = potential.len().saturating_sub(1);
        if intervals < MIN_INTERVALS {
            return Err(Error::GridTooCoarse { samples: potential.len() });
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSetup("potential samples must be finite".into()));
        }
        let grid_step = (b - a) / intervals as f64;
        let mut cumulative = Vec::with_capacity(potential.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in potential.windows(2) {
            acc += 0.5 * grid_step * (w[0] + w[1]);
            cumulative.push(acc);
        }
        Ok(Self { a, b, x_lo, x_hi, potential, grid_step, cumulative })
    }

    pub fn from_fn(
        a: f64,
        b: f64,
        x_lo: f64,
        x_hi: f64,
        intervals: usize,
        v: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let h = (b - a) / intervals as f64;
        let samples = (0..=intervals).map(|i| v(a + i as f64 * h)).collect();
        Self::from_table(a, b, x_lo, x_hi, samples)
    }

    /// Constant potential `J / (b - a)` on `[a, b]`, sampled on the default grid.
    pub fn rectangle(a: f64, b: f64, j: f64, x_lo: f64, x_hi: f64) -> Result<Self> {
        Self::rectangle_with_intervals(a, b, j, x_lo, x_hi, DEFAULT_INTERVALS)
    }

    pub fn rectangle_with_intervals(
        a: f64,
        b: f64,
        j: f64,
        x_lo: f64,
        x_hi: f64,
        intervals: usize,
    ) -> Result<Self> {
        let height = j / (b - a);
        Self::from_table(a, b, x_lo, x_hi, vec![height; intervals + 1])
    }

    pub fn potential_support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn wavepacket_support(&self) -> (f64, f64) {
        (self.x_lo, self.x_hi)
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Quadrature value of `∫ V`.
    pub fn integral(&self) -> f64 {
        *self.cumulative.last().expect("at least two samples")
    }

    /// `∫_{-∞}^y` of the interpolated potential.
    fn antiderivative(&self, y: f64) -> f64 {
        if y <= self.a {
            return 0.0;
        }
        if y >= self.b {
            return self.integral();
        }
        let h = self.grid_step;
        let i = (((y - self.a) / h).floor() as usize).min(self.potential.len() - 2);
        let d = y - (self.a + i as f64 * h);
        let (v0, v1) = (self.potential[i], self.potential[i + 1]);
        self.cumulative[i] + v0 * d + (v1 - v0) * d * d / (2.0 * h)
    }

    /// Grid over the wave packet support at the potential's step.
    fn packet_grid(&self) -> Vec<f64> {
        let width = self.x_hi - self.x_lo;
        let steps = (width / self.grid_step).ceil() as usize;
        if steps == 0 {
            return vec![self.x_lo];
        }
        let h = width / steps as f64;
        (0..=steps).map(|i| self.x_lo + i as f64 * h).collect()
    }

    fn check_against(&self, params: &ChainParams) -> Result<()> {
        params.validate()?;
        let q = self.integral();
        if (q - params.j).abs() > J_TOLERANCE * params.j.abs().max(1.0) {
            return Err(Error::InvalidSetup(format!(
                "potential integrates to {q}, chain coupling J is {}",
                params.j
            )));
        }
        Ok(())
    }

    fn kernel(&self, x: f64, n: usize, t: f64) -> f64 {
        let y = x - n as f64;
        self.antiderivative(y + t) - self.antiderivative(y)
    }

    fn max_deviation(&self, xs: &[f64], sites: usize, t: f64, j: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 1..=sites {
            for &x in xs {
                worst = worst.max((self.kernel(x, n, t) - j).abs());
            }
        }
        worst
    }
}

/// `F_{n,t}(x)` on the packet grid, one row per site `n = 1..=2L+1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelTable {
    pub xs: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub t: f64,
    pub j: f64,
    pub max_deviation: f64,
}

pub fn travel_time_kernel(setup: &OrbitalSetup, params: &ChainParams, t: f64) -> Result<KernelTable> {
    setup.check_against(params)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidSetup(format!("time {t} must be finite and non-negative")));
    }
    let xs = setup.packet_grid();
    let values: Vec<Vec<f64>> = (1..=params.sites())
        .map(|n| xs.iter().map(|&x| setup.kernel(x, n, t)).collect())
        .collect();
    let max_deviation = values
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &f| acc.max((f - params.j).abs()));
    Ok(KernelTable { xs, values, t, j: params.j, max_deviation })
}

/// Time after which the chain decouples from the orbital motion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalTime {
    /// smallest `t` with kernel deviation below [`KERNEL_TOLERANCE`]
    pub numeric: f64,
    /// `b - x_lo + 2L + 1`: the last site finishes sweeping the packet's tail
    pub sweep_formula: f64,
    /// `2L + 1 - b - x_lo`
    pub literal_formula: f64,
    pub grid_step: f64,
    /// `numeric` agrees with `sweep_formula` to within one grid step
    pub matches_sweep: bool,
    /// `numeric` and `literal_formula` differ by more than one grid step
    pub disagrees: bool,
}

const MAX_BRACKET: f64 = 1e12;

pub fn critical_time(setup: &OrbitalSetup, params: &ChainParams) -> Result<CriticalTime> {
    setup.check_against(params)?;
    let xs = setup.packet_grid();
    let sites = params.sites();
    let converged = |t: f64| setup.max_deviation(&xs, sites, t, params.j) < KERNEL_TOLERANCE;
    let h = setup.grid_step;

    let numeric = if converged(0.0) {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = h;
        while !converged(hi) {
            lo = hi;
            hi *= 2.0;
            if hi > MAX_BRACKET {
                return Err(Error::InvalidSetup("kernel never settles at J".into()));
            }
        }
        while hi - lo > h * 1e-6 {
            let mid = 0.5 * (lo + hi);
            if converged(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let chain = sites as f64;
    let sweep_formula = setup.b - setup.x_lo + chain;
    let literal_formula = chain - setup.b - setup.x_lo;
    Ok(CriticalTime {
        numeric,
        sweep_formula,
        literal_formula,
        grid_step: h,
        matches_sweep: (numeric - sweep_formula).abs() <= h,
        disagrees: (numeric - literal_formula).abs() > h,
    })
}
