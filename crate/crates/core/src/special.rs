//! Log-space binomial probabilities.
//!
//! The point masses use Loader's saddle-point form: log-factorials are split
//! into Stirling's approximation plus a tabulated/series correction
//! (`stirlerr`), and the `x ln(x/np)` pieces go through the cancellation-free
//! `bd0`. Tails are accumulated relative to their largest term, which keeps
//! them meaningful far below `f64` underflow.

use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// `ln n! - [(n + 1/2) ln n - n + ln sqrt(2π)]` for n = 0..=15.
#[allow(clippy::excessive_precision)]
const STIRLERR_SMALL: [f64; 16] = [
    0.0, // unused: ln 0! is handled directly
    0.081_061_466_795_327_258_219_670_2,
    0.041_340_695_955_409_294_093_822_1,
    0.027_677_925_684_998_339_148_789_29,
    0.020_790_672_103_765_093_111_522_77,
    0.016_644_691_189_821_192_163_194_87,
    0.013_876_128_823_070_747_998_745_73,
    0.011_896_709_945_891_770_095_055_72,
    0.010_411_265_261_972_096_497_478_567,
    0.009_255_462_182_712_732_917_728_637,
    0.008_330_563_433_362_871_256_469_318,
    0.007_573_675_487_951_840_794_972_024,
    0.006_942_840_107_209_529_865_664_152,
    0.006_408_994_188_004_207_068_439_631,
    0.005_951_370_112_758_847_735_624_416,
    0.005_554_733_551_962_801_371_038_690,
];

const S0: f64 = 1.0 / 12.0;
const S1: f64 = 1.0 / 360.0;
const S2: f64 = 1.0 / 1260.0;
const S3: f64 = 1.0 / 1680.0;
const S4: f64 = 1.0 / 1188.0;

/// Error of Stirling's formula for `ln n!`, `n ≥ 1`.
pub fn stirlerr(n: u64) -> f64 {
    if n <= 15 {
        return STIRLERR_SMALL[n as usize];
    }
    let x = n as f64;
    let nn = x * x;
    if n > 500 {
        (S0 - S1 / nn) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / x
    }
}

/// `ln Γ(n + 1)`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let x = n as f64;
    (x + 0.5) * x.ln() - x + LN_SQRT_2PI + stirlerr(n)
}

/// `ln C(n, k)`, `-inf` when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    let (nf, kf, rf) = (n as f64, k as f64, (n - k) as f64);
    // Stirling parts combined before the corrections so the large terms cancel early
    stirlerr(n) - stirlerr(k) - stirlerr(n - k) - 0.5 * (2.0 * PI * kf * rf / nf).ln()
        + kf * (nf / kf).ln()
        + rf * (nf / rf).ln()
}

/// `x ln(x / np) + np - x`, accurate when `x ≈ np`.
pub fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln P(X = k)`, `X ~ Binomial(n, p)`, with `q = 1 - p` supplied separately
/// so callers can pass an exactly computed complement.
pub fn ln_binomial_pmf_pq(n: u64, k: u64, p: f64, q: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if k == 0 {
        return nf * q.ln();
    }
    if k == n {
        return nf * p.ln();
    }
    let kf = k as f64;
    let rf = nf - kf;
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, nf * p) - bd0(rf, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

pub fn ln_binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    ln_binomial_pmf_pq(n, k, p, 1.0 - p)
}

/// `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (-(a - b).abs()).exp().ln_1p()
}

/// `ln Σ exp(x_i)`, `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.is_infinite() {
        return hi;
    }
    hi + xs.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

/// A probability together with its natural log; the log stays finite when
/// the linear value underflows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogProb {
    pub value: f64,
    pub log_value: f64,
}

impl LogProb {
    pub const ZERO: LogProb = LogProb { value: 0.0, log_value: f64::NEG_INFINITY };
    pub const ONE: LogProb = LogProb { value: 1.0, log_value: 0.0 };

    pub fn from_log(log_value: f64) -> Self {
        Self { value: log_value.exp(), log_value }
    }
}

/// Lower tail summed downward from `k`, assuming `k` sits at or below the
/// mode so the terms shrink monotonically.
fn ln_lower_tail_below_mode(n: u64, k: u64, p: f64, q: f64) -> f64 {
    let lead = ln_binomial_pmf_pq(n, k, p, q);
    if lead == f64::NEG_INFINITY {
        return lead;
    }
    let ln_q_over_p = q.ln() - p.ln();
    let nf = n as f64;
    let mut rel_log = 0.0;
    let mut sum = 1.0;
    let mut j = k;
    while j > 0 {
        let jf = j as f64;
        let step = (jf / (nf - jf + 1.0)).ln() + ln_q_over_p;
        rel_log += step;
        let term = rel_log.exp();
        sum += term;
        // once the ratio is below 0.9 the remainder is under 9 * term
        if step < -0.105 && term < 1e-20 * sum {
            break;
        }
        j -= 1;
    }
    lead + sum.ln()
}

/// `P(X ≤ k)` for `X ~ Binomial(n, p)`, `q = 1 - p` supplied separately.
pub fn binomial_cdf_pq(n: u64, k: i64, p: f64, q: f64) -> LogProb {
    if k < 0 {
        return LogProb::ZERO;
    }
    let k = k as u64;
    if k >= n || p == 0.0 {
        return LogProb::ONE;
    }
    if q == 0.0 {
        return LogProb::ZERO;
    }
    if (k as f64) < n as f64 * p {
        LogProb::from_log(ln_lower_tail_below_mode(n, k, p, q))
    } else {
        // complement: P(X ≥ k+1) = P(n - X ≤ n - k - 1), which is below the mode of n - X
        let upper = ln_lower_tail_below_mode(n, n - k - 1, q, p).exp();
        LogProb { value: 1.0 - upper, log_value: (-upper).ln_1p() }
    }
}

pub fn binomial_cdf(n: u64, k: i64, p: f64) -> LogProb {
    binomial_cdf_pq(n, k, p, 1.0 - p)
}
