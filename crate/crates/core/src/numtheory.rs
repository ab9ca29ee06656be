//! Exact 64-bit arithmetic: primality, factorization, divisors and the
//! divisor-derived quantities used throughout the crate (τ, T, P, ρ₁, ρ₂).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest divisor count `divisor_profile` will materialize.
pub const MAX_MATERIALIZED_DIVISORS: u64 = 1_000_000;

/// Trial division is used for all primes below this bound before Pollard rho.
const TRIAL_DIVISION_BOUND: u64 = 10_000;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `n` in `[1, n-1]`, or `None` when `gcd(a, n) != 1`.
pub fn mod_inverse(a: u64, n: u64) -> Option<u64> {
    if n < 2 {
        return None;
    }
    let (mut old_r, mut r) = ((a % n) as i128, n as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(n as i128) as u64)
}

/// Deterministic Miller-Rabin. The first twelve primes as witnesses are
/// exact for every `m < 3.3 * 10^24`, which covers `u64`.
pub fn is_prime(m: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if m < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if m.is_multiple_of(p) {
            return m == p;
        }
    }
    let mut d = m - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, m);
        if x == 1 || x == m - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, m);
            if x == m - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's cycle variant of Pollard rho; returns a nontrivial factor of the
/// odd composite `m`.
fn pollard_brent(m: u64) -> u64 {
    const BATCH: u64 = 128;
    let step = |x: u64, c: u64| (mul_mod(x, x, m) + c) % m;
    for c in 1..m {
        let mut y = 2u64;
        let mut r = 1u64;
        let mut q = 1u64;
        let mut g = 1u64;
        let mut x = y;
        let mut ys = y;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = step(y, c);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = step(y, c);
                    q = mul_mod(q, x.abs_diff(y), m);
                }
                g = gcd(q, m);
                k += BATCH;
            }
            r *= 2;
        }
        if g == m {
            // The batched product overshot; replay one step at a time.
            loop {
                ys = step(ys, c);
                g = gcd(x.abs_diff(ys), m);
                if g > 1 {
                    break;
                }
            }
        }
        if g != m {
            return g;
        }
    }
    unreachable!("pollard_brent called on a prime or unit")
}

fn split_into(m: u64, out: &mut Vec<u64>) {
    if m == 1 {
        return;
    }
    if is_prime(m) {
        out.push(m);
        return;
    }
    let d = pollard_brent(m);
    split_into(d, out);
    split_into(m / d, out);
}

/// Prime factors of `m` with multiplicity, ascending. `factorize(1)` is empty.
pub fn factorize(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if m <= 1 {
        return out;
    }
    while m.is_multiple_of(2) {
        out.push(2);
        m /= 2;
    }
    let mut p = 3u64;
    while p < TRIAL_DIVISION_BOUND && p * p <= m {
        while m.is_multiple_of(p) {
            out.push(p);
            m /= p;
        }
        p += 2;
    }
    if m > 1 {
        if p * p > m {
            out.push(m);
        } else {
            split_into(m, &mut out);
        }
    }
    out.sort_unstable();
    out
}

/// Factorization as `(prime, exponent)` pairs in ascending prime order.
pub fn factor_powers(m: u64) -> Vec<(u64, u32)> {
    let mut out: Vec<(u64, u32)> = Vec::new();
    for p in factorize(m) {
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

/// Number of positive divisors.
pub fn tau(m: u64) -> u64 {
    factor_powers(m)
        .iter()
        .map(|&(_, e)| u64::from(e) + 1)
        .product()
}

/// All positive divisors of `m >= 1`, ascending.
pub fn divisors(m: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (p, e) in factor_powers(m) {
        let len = divs.len();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                divs.push(divs[i] * pk);
            }
        }
    }
    divs.sort_unstable();
    divs
}

/// A nonnegative rational compared exactly by cross-multiplication.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn integer(v: u64) -> Self {
        Ratio { num: v, den: 1 }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `floor(self)`
    pub fn floor(self) -> u64 {
        self.num / self.den
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Maximum ratio of consecutive entries of an ascending divisor list.
/// A single-element list (the divisors of 1) yields 1.
pub fn max_consecutive_ratio(divs: &[u64]) -> Ratio {
    divs.windows(2)
        .map(|w| Ratio::new(w[1], w[0]))
        .max()
        .unwrap_or(Ratio::integer(1))
}

/// `T(s)`: the largest ratio between consecutive divisors of `s`.
pub fn t_ratio(s: u64) -> Ratio {
    max_consecutive_ratio(&divisors(s))
}

/// Largest prime factor, with `P(1) = 1`.
pub fn largest_prime_factor(m: u64) -> u64 {
    factorize(m).last().copied().unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorProfile {
    pub m: u64,
    pub divisors: Vec<u64>,
    pub tau: u64,
    pub t_ratio: Ratio,
    pub p_max: u64,
}

pub fn divisor_profile(m: u64) -> Result<DivisorProfile> {
    if m == 0 {
        return Err(Error::Domain("divisor_profile of 0".into()));
    }
    let powers = factor_powers(m);
    let count: u64 = powers.iter().map(|&(_, e)| u64::from(e) + 1).product();
    if count > MAX_MATERIALIZED_DIVISORS {
        return Err(Error::LimitExceeded {
            what: "divisor count",
            value: count,
            limit: MAX_MATERIALIZED_DIVISORS,
        });
    }
    let divs = divisors(m);
    Ok(DivisorProfile {
        m,
        tau: divs.len() as u64,
        t_ratio: max_consecutive_ratio(&divs),
        p_max: powers.last().map_or(1, |&(p, _)| p),
        divisors: divs,
    })
}

/// Euler's totient via factorization.
pub fn euler_phi(n: u64) -> u64 {
    factor_powers(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

/// Totients of `0..=limit` by a linear-time sieve (`phi[0] = 0`).
pub fn totients(limit: usize) -> Vec<u64> {
    let mut phi: Vec<u64> = (0..=limit as u64).collect();
    for i in 2..=limit {
        if phi[i] == i as u64 {
            for j in (i..=limit).step_by(i) {
                phi[j] -= phi[j] / i as u64;
            }
        }
    }
    phi
}

/// Primes `<= limit` by the sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Largest divisor of `m` that is `<= sqrt(m)`.
pub fn rho1(m: u64) -> u64 {
    divisors(m)
        .into_iter()
        .take_while(|&d| (d as u128) * (d as u128) <= m as u128)
        .last()
        .unwrap_or(1)
}

/// Smallest divisor of `m` that is `>= sqrt(m)`; always `m / rho1(m)`.
pub fn rho2(m: u64) -> u64 {
    m / rho1(m)
}

/// All `n <= bound` of the form `2^r 3^s 5^t + 1`, ascending.
pub fn special_n_values(bound: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if bound < 2 {
        return out;
    }
    let smooth_max = bound - 1;
    let mut a = 1u64;
    while a <= smooth_max {
        let mut b = a;
        while b <= smooth_max {
            let mut c = b;
            while c <= smooth_max {
                out.push(c + 1);
                c *= 5;
            }
            b *= 3;
        }
        a *= 2;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Product of the first `j` odd primes.
pub fn odd_primorial(j: u32) -> u64 {
    primes_up_to(100)
        .into_iter()
        .skip(1)
        .take(j as usize)
        .product()
}

/// Smallest prime `p` with `2p ≡ -1 (mod Q_j)`, searched up to `limit`.
pub fn shifted_prime(j: u32, limit: u64) -> Result<u64> {
    if j == 0 || j > 8 {
        return Err(Error::Domain(format!(
            "shifted_prime level {j} not in 1..=8"
        )));
    }
    let q = odd_primorial(j);
    let mut p = (q - 1) / 2;
    while p <= limit {
        if is_prime(p) {
            return Ok(p);
        }
        p += q;
    }
    Err(Error::SearchExhausted(limit))
}
