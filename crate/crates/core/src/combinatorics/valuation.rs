//! Prime valuations of C(9n², 3n) and P(9n², 3n) without forming either.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_N: i64 = 1_000_000;

/// Distinct prime factors in ascending order.
pub fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            out.push(p);
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// Exponent of `p` in `m`.
fn valuation(mut m: u64, p: u64) -> u32 {
    let mut v = 0;
    while m > 0 && m.is_multiple_of(p) {
        m /= p;
        v += 1;
    }
    v
}

/// Exponent of `p` in `m!`.
pub fn legendre(m: u64, p: u64) -> u64 {
    let mut total = 0;
    let mut q = m;
    while q > 0 {
        q /= p;
        total += q;
    }
    total
}

/// Carries when adding `x` and `y` in base `p`, which by Kummer's theorem is
/// the exponent of `p` in C(x + y, x).
pub fn carries(mut x: u64, mut y: u64, p: u64) -> u64 {
    let mut carry = 0;
    let mut count = 0;
    while x > 0 || y > 0 || carry > 0 {
        let digit = x % p + y % p + carry;
        carry = u64::from(digit >= p);
        count += carry;
        x /= p;
        y /= p;
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ValuationRow {
    pub p: u64,
    /// Exponent of p in 9n².
    pub needed: u64,
    /// Exponent of p in the binomial (or permutation) count.
    pub available: u64,
}

impl ValuationRow {
    fn slack(&self) -> i64 {
        self.available as i64 - self.needed as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisibilityResult {
    pub n: u64,
    pub binom_divisible: bool,
    /// Prime with the largest deficit, if any prime falls short.
    pub witness_prime: Option<ValuationRow>,
    pub valuations: Vec<ValuationRow>,
}

impl DivisibilityResult {
    /// Prime with the smallest slack (ties: smallest p).
    pub fn tightest(&self) -> Option<&ValuationRow> {
        self.valuations.iter().min_by_key(|r| (r.slack(), r.p))
    }
}

fn check_n(n: i64) -> Result<u64> {
    if n < 2 || n % 2 != 0 || n > MAX_N {
        return Err(Error::InvalidN(n));
    }
    Ok(n as u64)
}

fn modulus_rows(n: u64, available: impl Fn(u64) -> u64) -> Vec<ValuationRow> {
    let m = 9 * n * n;
    prime_factors(m)
        .into_iter()
        .map(|p| ValuationRow {
            p,
            needed: u64::from(valuation(m, p)),
            available: available(p),
        })
        .collect()
}

/// Whether 9n² divides C(9n², 3n), decided prime by prime.
pub fn binom_divisibility(n: i64) -> Result<DivisibilityResult> {
    let n = check_n(n)?;
    let (top, k) = (9 * n * n, 3 * n);
    let valuations = modulus_rows(n, |p| carries(k, top - k, p));
    let witness_prime = valuations
        .iter()
        .filter(|r| r.slack() < 0)
        .min_by_key(|r| (r.slack(), r.p))
        .copied();
    Ok(DivisibilityResult {
        n,
        binom_divisible: witness_prime.is_none(),
        witness_prime,
        valuations,
    })
}

/// Divisibility results for every even n in `2..=limit`, in order.
pub fn scan_table(limit: u64) -> Vec<DivisibilityResult> {
    let evens: Vec<i64> = (2..=limit.min(MAX_N as u64) as i64).step_by(2).collect();
    evens
        .into_par_iter()
        .map(|n| binom_divisibility(n).expect("even n in range"))
        .collect()
}

/// Even n ≤ `limit` for which 9n² divides C(9n², 3n).
pub fn scan_even_n(limit: u64) -> Vec<u64> {
    scan_table(limit)
        .into_iter()
        .filter(|r| r.binom_divisible)
        .map(|r| r.n)
        .collect()
}

pub const SCAN_CSV_HEADER: &str = "n,divisible,worst_prime,needed,available";

/// `n,divisible,worst_prime,needed,available`; the worst prime is the one
/// with the smallest slack.
pub fn scan_csv(rows: &[DivisibilityResult]) -> String {
    let mut out = String::from(SCAN_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let t = r.witness_prime.as_ref().or_else(|| r.tightest()).expect("9n² has prime factors");
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n, r.binom_divisible, t.p, t.needed, t.available
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermIntegrality {
    pub n: u64,
    pub div_by_9: bool,
    pub div_by_9n2: bool,
    pub valuations: Vec<ValuationRow>,
}

/// Whether L = P(9n², 3n) = (9n²)!/(9n² - 3n)! is divisible by 9 and by 9n²,
/// so that the multiplicities L/9 and L/(9n²) are integers.
pub fn perm_integrality(n: i64) -> Result<PermIntegrality> {
    let n = check_n(n)?;
    let (top, k) = (9 * n * n, 3 * n);
    let valuations = modulus_rows(n, |p| legendre(top, p) - legendre(top - k, p));
    let div_by_9n2 = valuations.iter().all(|r| r.available >= r.needed);
    let div_by_9 = valuations
        .iter()
        .find(|r| r.p == 3)
        .is_some_and(|r| r.available >= 2);
    Ok(PermIntegrality {
        n,
        div_by_9,
        div_by_9n2,
        valuations,
    })
}
