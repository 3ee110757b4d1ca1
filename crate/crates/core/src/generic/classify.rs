use serde::Serialize;

use super::FTensor;
use crate::error::{Error, Result};

const MAX_STATES: usize = 8;
const OFFDIAG_SLACK: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    Ideal,
    Normal,
    NotAnInstrument,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Ideal => "Ideal",
            VerdictKind::Normal => "Normal",
            VerdictKind::NotAnInstrument => "NotAnInstrument",
        }
    }
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstrumentVerdict {
    pub kind: VerdictKind,
    /// `a(r)` as 0-based cell indices; absent when no cell assignment
    /// qualifies as a pointer.
    pub assignment: Option<Vec<usize>>,
    /// `max_r (1 - F[r,r;a(r)])` for the best assignment.
    pub eta: f64,
    /// `max |F[r,s;α]|`, `r ≠ s`.
    pub worst_offdiag: f64,
    /// `worst_offdiag ≤ sqrt(eta)` (up to `1e-10`).
    pub offdiag_within_bound: bool,
}

/// Picks the eigenstate-to-cell assignment maximizing `min_r F[r,r;a(r)]`
/// and grades it against the two thresholds.
pub fn classify_instrument(f: &FTensor, ideal_tolerance: f64, eta_threshold: f64) -> Result<InstrumentVerdict> {
    let n = f.n();
    if n != f.nu() {
        return Err(Error::CellCountMismatch { n, cells: f.nu() });
    }
    if n > MAX_STATES {
        return Err(Error::TooManyStates(n));
    }

    let score = |perm: &[usize]| {
        perm.iter()
            .enumerate()
            .map(|(r, &a)| f.diag(r, a))
            .fold(f64::INFINITY, f64::min)
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_score = score(&perm);
    // lexicographic enumeration; strict improvement keeps the earliest on ties
    while next_permutation(&mut perm) {
        let s = score(&perm);
        if s > best_score {
            best_score = s;
            best.clone_from(&perm);
        }
    }

    let eta = (1.0 - best_score).max(0.0);
    let worst_offdiag = f.worst_offdiag();
    let kind = if eta <= ideal_tolerance {
        VerdictKind::Ideal
    } else if eta <= eta_threshold {
        VerdictKind::Normal
    } else {
        VerdictKind::NotAnInstrument
    };
    Ok(InstrumentVerdict {
        kind,
        assignment: (kind != VerdictKind::NotAnInstrument).then_some(best),
        eta,
        worst_offdiag,
        offdiag_within_bound: worst_offdiag <= eta.sqrt() + OFFDIAG_SLACK,
    })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::c64;
    use num_complex::Complex64;

    fn diagonal_pattern(n: usize, diag: impl Fn(usize, usize) -> f64) -> FTensor {
        let mut values = vec![Complex64::new(0.0, 0.0); n * n * n];
        for r in 0..n {
            for a in 0..n {
                values[(r * n + r) * n + a] = c64(diag(r, a), 0.0);
            }
        }
        FTensor::from_values(n, n, 0.0, values).unwrap()
    }

    #[test]
    fn permutations_enumerate_in_order() {
        let mut p = vec![0, 1, 2];
        let mut seen = vec![p.clone()];
        while next_permutation(&mut p) {
            seen.push(p.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[1], vec![0, 2, 1]);
        assert_eq!(seen[5], vec![2, 1, 0]);
    }

    #[test]
    fn exact_identity_pattern_is_ideal() {
        let f = diagonal_pattern(3, |r, a| if r == a { 1.0 } else { 0.0 });
        let v = classify_instrument(&f, 1e-12, 1e-3).unwrap();
        assert_eq!(v.kind, VerdictKind::Ideal);
        assert_eq!(v.assignment, Some(vec![0, 1, 2]));
        assert_eq!(v.eta, 0.0);
        assert!(v.offdiag_within_bound);
    }

    #[test]
    fn near_identity_is_normal() {
        let f = diagonal_pattern(2, |r, a| if r == a { 1.0 - 1e-6 } else { 1e-6 });
        let v = classify_instrument(&f, 1e-12, 1e-3).unwrap();
        assert_eq!(v.kind, VerdictKind::Normal);
        assert!((v.eta - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn permuted_pointer_is_found() {
        let f = diagonal_pattern(3, |r, a| if a == (r + 1) % 3 { 1.0 } else { 0.0 });
        let v = classify_instrument(&f, 1e-12, 1e-3).unwrap();
        assert_eq!(v.assignment, Some(vec![1, 2, 0]));
        assert_eq!(v.kind, VerdictKind::Ideal);
    }

    #[test]
    fn uninformative_pointer_is_rejected() {
        let f = diagonal_pattern(2, |_, _| 0.5);
        let v = classify_instrument(&f, 1e-12, 1e-3).unwrap();
        assert_eq!(v.kind, VerdictKind::NotAnInstrument);
        assert!(v.assignment.is_none());
        assert!((v.eta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ties_prefer_lexicographically_first() {
        let f = diagonal_pattern(2, |_, _| 0.5);
        let v = classify_instrument(&f, 1e-12, 0.9).unwrap();
        assert_eq!(v.assignment, Some(vec![0, 1]));
    }

    #[test]
    fn cell_count_must_match() {
        let f = FTensor::from_values(2, 3, 0.0, vec![Complex64::new(0.0, 0.0); 12]).unwrap();
        assert!(matches!(
            classify_instrument(&f, 1e-12, 1e-3),
            Err(Error::CellCountMismatch { n: 2, cells: 3 })
        ));
    }

    #[test]
    fn too_many_states() {
        let f = diagonal_pattern(9, |r, a| if r == a { 1.0 } else { 0.0 });
        assert!(matches!(classify_instrument(&f, 1e-12, 1e-3), Err(Error::TooManyStates(9))));
    }
}
