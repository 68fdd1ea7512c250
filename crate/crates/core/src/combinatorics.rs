//! Exact overlap counting between Pauli strings.
//!
//! A weight-`n` string overlapping a fixed weight-`w` string on `p` sites with
//! a different Pauli and on `m` sites with the same Pauli anticommutes with it
//! iff `p` is odd. All counts are big integers; they only become `f64` when a
//! generator matrix is assembled.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Result};

/// Coupling strength `a_n` for the `n`-body part of the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSpec {
    pub order: usize,
    pub strength: f64,
}

impl CouplingSpec {
    pub fn new(order: usize, strength: f64) -> Result<Self> {
        if order < 2 {
            return domain(format!("body order must be >= 2, got {order}"));
        }
        if !(strength >= 0.0) || !strength.is_finite() {
            return domain(format!("coupling a_{order} must be finite and >= 0, got {strength}"));
        }
        Ok(Self { order, strength })
    }
}

/// `(n, p, m, w, N)` overlap pattern of a weight-`n` string against a fixed
/// weight-`w` string on `N` qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OverlapPattern {
    pub n: u64,
    pub p: u64,
    pub m: u64,
    pub w: u64,
    pub qubits: u64,
}

/// `C(a, b)`, zero outside `0 <= b <= a`.
pub fn binomial(a: i64, b: i64) -> Result<BigUint> {
    if a < 0 {
        return domain(format!("binomial top argument must be >= 0, got {a}"));
    }
    Ok(choose(a as u64, b))
}

pub(crate) fn choose(a: u64, b: i64) -> BigUint {
    if b < 0 || b as u64 > a {
        return BigUint::zero();
    }
    let b = (b as u64).min(a - b as u64);
    let mut acc = BigUint::one();
    for i in 0..b {
        acc *= a - i;
        acc /= i + 1;
    }
    acc
}

/// Number of weight-`n` strings realizing the overlap pattern, any parity of `p`.
///
/// `2^p 3^(n-m-p) C(w,p) C(w-p,m) C(N-w, n-m-p)`.
pub fn overlap_placements(n: u64, p: u64, m: u64, w: u64, qubits: u64) -> BigUint {
    if p + m > n || w > qubits || p > w || m > w - p {
        return BigUint::zero();
    }
    let outside = n - m - p;
    let placed = choose(w, p as i64) * choose(w - p, m as i64) * choose(qubits - w, outside as i64);
    if placed.is_zero() {
        return placed;
    }
    (BigUint::from(2u32).pow(p as u32)) * BigUint::from(3u32).pow(outside as u32) * placed
}

/// Exact count of weight-`n` strings with the given overlap pattern that
/// anticommute with a fixed weight-`w` string.
pub fn pattern_count(pat: &OverlapPattern) -> Result<BigUint> {
    if pat.p % 2 == 0 {
        return domain(format!("anticommuting overlap needs odd p, got p = {}", pat.p));
    }
    if pat.p + pat.m > pat.n {
        return domain(format!("p + m = {} exceeds n = {}", pat.p + pat.m, pat.n));
    }
    if pat.w > pat.qubits {
        return domain(format!("weight {} exceeds qubit count {}", pat.w, pat.qubits));
    }
    Ok(overlap_placements(pat.n, pat.p, pat.m, pat.w, pat.qubits))
}

/// `C_n^w`: all weight-`n` strings anticommuting with a fixed weight-`w` string.
pub fn anticommute_total(n: u64, w: u64, qubits: u64) -> Result<BigUint> {
    if n < 2 {
        return domain(format!("body order must be >= 2, got {n}"));
    }
    if w > qubits {
        return domain(format!("weight {w} exceeds qubit count {qubits}"));
    }
    Ok(anticommuting_strings(n, w, qubits))
}

// Same sum without the n >= 2 restriction; observables need n = 1.
pub(crate) fn anticommuting_strings(n: u64, w: u64, qubits: u64) -> BigUint {
    let mut total = BigUint::zero();
    for p in (1..=n).step_by(2) {
        for m in 0..=(n - p) {
            total += overlap_placements(n, p, m, w, qubits);
        }
    }
    total
}

/// `N_w = 3^w C(N, w)`.
pub fn pauli_weight_count(w: u64, qubits: u64) -> Result<BigUint> {
    if w > qubits {
        return domain(format!("weight {w} exceeds qubit count {qubits}"));
    }
    Ok(BigUint::from(3u32).pow(w as u32) * choose(qubits, w as i64))
}

/// Per-string coupling variance `mu_n^2 = a_n (n-1)! / (4 3^(n-1) N^(n-1))`.
pub fn coupling_variance(n: usize, strength: f64, qubits: usize) -> f64 {
    let mut factorial = 1.0;
    for i in 2..n {
        factorial *= i as f64;
    }
    let scale = 4.0 * 3f64.powi(n as i32 - 1) * (qubits as f64).powi(n as i32 - 1);
    strength * factorial / scale
}

pub(crate) fn to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}
