//! Exact arithmetic on smooth and rough integers.
//!
//! `S_y` is the multiplicative semigroup of y-smooth integers (all prime factors
//! ≤ y, including 1). Ψ(x,y) counts `S_y ∩ [1,x]`, Φ(x,y) counts the y-rough
//! integers in `[1,x]` (no prime factor ≤ y, again including 1). Both counts
//! depend only on ⌊x⌋.

use crate::caps::ResourceCaps;
use crate::error::{domain, resource, Result};
use crate::scalar::{CompensatedSum, Real, EXP_NEG_GAMMA};

/// ⌊x⌋ for x ≥ 0 as an exact count.
#[inline]
pub fn floor_count<T: Real>(x: T) -> u64 {
    if x < T::one() {
        0
    } else {
        x.floor().to_u64().unwrap_or(u64::MAX)
    }
}

/// All primes up to `limit`.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Primes `p ≤ y`.
    pub fn up_to(&self, y: u64) -> &[u64] {
        let end = self.primes.partition_point(|&p| p <= y);
        &self.primes[..end]
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    fn require(&self, y: u64) -> Result<()> {
        if y < 2 {
            return Err(domain(format!("y = {y} must be at least 2")));
        }
        if self.limit < y {
            return Err(domain(format!(
                "prime table limit {} does not cover y = {y}",
                self.limit
            )));
        }
        Ok(())
    }
}

/// Sieve of Eratosthenes over the odd numbers up to `limit`.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(domain(format!("prime sieve limit {limit} is below 2")));
    }
    let n = usize::try_from(limit).map_err(|_| resource("prime sieve limit too large"))?;
    // index i stands for 2i + 1
    let half = n / 2 + 1;
    let mut composite = vec![false; half];
    composite[0] = true;
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= n {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = (p * p) / 2;
            while j < half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut primes = vec![2u64];
    primes.extend(
        composite
            .iter()
            .enumerate()
            .filter(|&(i, &c)| !c && 2 * i + 1 <= n)
            .map(|(i, _)| (2 * i + 1) as u64),
    );
    Ok(PrimeTable { limit, primes })
}

/// Mertens product Π(y) = ∏_{p≤y} (1 − 1/p).
///
/// The logarithms `log(1 − 1/p)` are accumulated with compensation and
/// exponentiated once, which keeps the relative error near a few ulps even
/// for y around 10^6.
pub fn pi_product<T: Real>(y: u64, primes: &PrimeTable) -> Result<T> {
    Ok(log_pi_product::<T>(y, primes)?.exp())
}

fn log_pi_product<T: Real>(y: u64, primes: &PrimeTable) -> Result<T> {
    primes.require(y)?;
    let mut acc = CompensatedSum::new();
    for &p in primes.up_to(y) {
        acc.add((-T::one() / T::from_count(p)).ln_1p());
    }
    Ok(acc.value())
}

/// Mertens data for a fixed y: Π(y), its reciprocal, α_y and β_y = α_y − 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MertensData<T> {
    pub y: u64,
    pub pi_y: T,
    pub inv_pi_y: T,
    /// α_y = e^{−γ} Π(y)^{−1} / log y
    pub alpha_y: T,
    pub beta_y: T,
}

pub fn mertens_data<T: Real>(y: u64, primes: &PrimeTable) -> Result<MertensData<T>> {
    let log_pi = log_pi_product::<T>(y, primes)?;
    let pi_y = log_pi.exp();
    let inv_pi_y = (-log_pi).exp();
    let alpha_y = T::lit(EXP_NEG_GAMMA) * inv_pi_y / T::from_count(y).ln();
    Ok(MertensData {
        y,
        pi_y,
        inv_pi_y,
        alpha_y,
        beta_y: alpha_y - T::one(),
    })
}

impl<T: Real> MertensData<T> {
    /// Π(y) − e^{−γ}/log y, the linear coefficient separating V from V*.
    pub fn v_gap(&self) -> T {
        self.pi_y - T::lit(EXP_NEG_GAMMA) / T::from_count(self.y).ln()
    }
}

/// The y-smooth integers up to `limit`, ascending, with their Möbius values
/// and natural logarithms.
#[derive(Clone, Debug)]
pub struct SmoothEnumeration<T> {
    y: u64,
    limit: u64,
    values: Vec<u64>,
    mobius: Vec<i8>,
    logs: Vec<T>,
}

impl<T: Real> SmoothEnumeration<T> {
    pub fn y(&self) -> u64 {
        self.y
    }

    /// Largest integer covered (⌊limit⌋ of the request).
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn mobius(&self) -> &[i8] {
        &self.mobius
    }

    pub fn logs(&self) -> &[T] {
        &self.logs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Ψ(m, y) for an integer m ≤ limit.
    #[inline]
    pub fn count_le(&self, m: u64) -> u64 {
        debug_assert!(m <= self.limit);
        self.values.partition_point(|&n| n <= m) as u64
    }

    /// Number of smooth n with `n·y < t`, i.e. n < t/y (strict).
    #[inline]
    pub fn count_below_ratio(&self, t: T) -> usize {
        let bound = t / T::from_count(self.y);
        // n < bound ⇔ n ≤ ⌈bound⌉ − 1
        let c = bound.ceil();
        if c <= T::one() {
            return 0;
        }
        let m = c.to_u64().unwrap_or(u64::MAX) - 1;
        self.values.partition_point(|&n| n <= m)
    }

    /// ∑_{n ∈ S_y, n < threshold} 1/n in ascending order.
    ///
    /// Requires `threshold ≤ limit + 1`; the complement over all of `S_y` is
    /// `inv_pi_y − smooth_harmonic_below`.
    pub fn harmonic_below(&self, threshold: T) -> Result<T> {
        if threshold < T::one() {
            return Err(domain("harmonic threshold must be at least 1"));
        }
        let c = threshold.ceil();
        let m = c.to_u64().unwrap_or(u64::MAX).saturating_sub(1);
        if m > self.limit {
            return Err(domain(format!(
                "threshold {threshold} beyond enumeration limit {}",
                self.limit
            )));
        }
        let end = self.values.partition_point(|&n| n <= m);
        let mut acc = CompensatedSum::new();
        for &n in &self.values[..end] {
            acc.add(T::one() / T::from_count(n));
        }
        Ok(acc.value())
    }
}

/// Enumerates `S_y ∩ [1, limit]` by depth-first multiplication over the primes
/// ≤ y, then sorts.
pub fn enumerate_smooth<T: Real>(
    y: u64,
    limit: T,
    primes: &PrimeTable,
    caps: &ResourceCaps,
) -> Result<SmoothEnumeration<T>> {
    primes.require(y)?;
    if !(limit >= T::one()) {
        return Err(domain(format!("enumeration limit {limit} is below 1")));
    }
    let lim = floor_count(limit);
    caps.check_x(lim, "enumeration limit")?;
    let ps = primes.up_to(y);

    let mut out: Vec<(u64, i8)> = Vec::new();
    // stack of (value, mobius, index of the smallest prime allowed next)
    let mut stack = vec![(1u64, 1i8, 0usize)];
    while let Some((n, mu, start)) = stack.pop() {
        out.push((n, mu));
        if out.len() > caps.max_enumeration {
            return Err(resource(format!(
                "smooth enumeration for y = {y} up to {lim} exceeds {} entries",
                caps.max_enumeration
            )));
        }
        for (i, &p) in ps.iter().enumerate().skip(start) {
            let Some(m) = n.checked_mul(p).filter(|&m| m <= lim) else {
                break;
            };
            // repeated prime (i == start and n divisible by p) kills μ
            let repeat = n % p == 0;
            stack.push((m, if repeat { 0 } else { -mu }, i));
        }
    }
    out.sort_unstable_by_key(|&(n, _)| n);
    let values: Vec<u64> = out.iter().map(|&(n, _)| n).collect();
    let mobius = out.iter().map(|&(_, m)| m).collect();
    let logs = values.iter().map(|&n| T::from_count(n).ln()).collect();
    Ok(SmoothEnumeration {
        y,
        limit: lim,
        values,
        mobius,
        logs,
    })
}

/// Ψ(x, y) by counting a smooth enumeration.
pub fn psi_exact<T: Real>(x: T, y: u64, primes: &PrimeTable, caps: &ResourceCaps) -> Result<u64> {
    if !(x >= T::zero()) {
        return Err(domain(format!("x = {x} must be nonnegative")));
    }
    primes.require(y)?;
    if x < T::one() {
        return Ok(0);
    }
    Ok(enumerate_smooth(y, x, primes, caps)?.len() as u64)
}

/// Smallest-prime-factor sieve, the second, independent route to Ψ.
#[derive(Clone, Debug)]
pub struct FactorSieve {
    /// largest prime factor of each n (0 and 1 map to 1)
    gpf: Vec<u32>,
}

impl FactorSieve {
    pub fn new(limit: u64, caps: &ResourceCaps) -> Result<Self> {
        caps.check_x(limit, "factor sieve limit")?;
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u32> = Vec::new();
        // linear sieve
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                if p > si || i * p as usize > n {
                    break;
                }
                spf[i * p as usize] = p;
            }
        }
        let mut gpf = vec![1u32; n + 1];
        for i in 2..=n {
            let p = spf[i];
            gpf[i] = p.max(gpf[i / p as usize]);
        }
        Ok(Self { gpf })
    }

    pub fn limit(&self) -> u64 {
        (self.gpf.len() - 1) as u64
    }

    pub fn largest_prime_factor(&self, n: u64) -> u64 {
        self.gpf[n as usize] as u64
    }

    /// Ψ(m, y) for every integer m in `[0, limit]`.
    pub fn psi_prefix(&self, y: u64) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.gpf.len());
        let mut c = 0;
        out.push(0);
        for &g in &self.gpf[1..] {
            if g as u64 <= y {
                c += 1;
            }
            out.push(c);
        }
        out
    }

    pub fn psi(&self, m: u64, y: u64) -> u64 {
        self.gpf[1..=m as usize]
            .iter()
            .filter(|&&g| g as u64 <= y)
            .count() as u64
    }
}

/// Ψ(x, y) by a smallest-prime-factor sieve up to ⌊x⌋.
pub fn psi_sieve<T: Real>(x: T, y: u64, caps: &ResourceCaps) -> Result<u64> {
    if !(x >= T::zero()) {
        return Err(domain(format!("x = {x} must be nonnegative")));
    }
    if y < 2 {
        return Err(domain(format!("y = {y} must be at least 2")));
    }
    let m = floor_count(x);
    if m == 0 {
        return Ok(0);
    }
    Ok(FactorSieve::new(m, caps)?.psi(m, y))
}

/// Φ(x, y) by sieving `[1, ⌊x⌋]` with the primes ≤ y.
pub fn phi_exact<T: Real>(x: T, y: u64, primes: &PrimeTable, caps: &ResourceCaps) -> Result<u64> {
    if !(x >= T::zero()) {
        return Err(domain(format!("x = {x} must be nonnegative")));
    }
    primes.require(y)?;
    let m = floor_count(x);
    caps.check_x(m, "x")?;
    if m == 0 {
        return Ok(0);
    }
    let n = m as usize;
    let mut hit = vec![false; n + 1];
    for &p in primes.up_to(y) {
        let p = p as usize;
        if p > n {
            break;
        }
        for j in (p..=n).step_by(p) {
            hit[j] = true;
        }
    }
    Ok(hit[1..].iter().filter(|&&h| !h).count() as u64)
}

/// Φ(m, y) for every integer m in `[0, limit]`.
#[derive(Clone, Debug)]
pub struct RoughPrefixTable {
    y: u64,
    counts: Vec<u32>,
}

impl RoughPrefixTable {
    pub fn y(&self) -> u64 {
        self.y
    }

    pub fn limit(&self) -> u64 {
        (self.counts.len() - 1) as u64
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Φ(m, y), m ≤ limit.
    #[inline]
    pub fn count(&self, m: u64) -> u64 {
        self.counts[m as usize] as u64
    }

    /// Φ(x, y) for real x in `[0, limit + 1)`.
    #[inline]
    pub fn count_at<T: Real>(&self, x: T) -> u64 {
        self.count(floor_count(x))
    }
}

pub fn build_rough_prefix(
    y: u64,
    limit: u64,
    primes: &PrimeTable,
    caps: &ResourceCaps,
) -> Result<RoughPrefixTable> {
    primes.require(y)?;
    if limit < 1 {
        return Err(domain("rough prefix limit must be at least 1"));
    }
    caps.check_x(limit, "rough prefix limit")?;
    if limit > u32::MAX as u64 {
        return Err(resource("rough prefix limit beyond u32 counts"));
    }
    let n = limit as usize;
    let mut hit = vec![false; n + 1];
    for &p in primes.up_to(y) {
        let p = p as usize;
        if p > n {
            break;
        }
        for j in (p..=n).step_by(p) {
            hit[j] = true;
        }
    }
    let mut counts = Vec::with_capacity(n + 1);
    let mut c = 0u32;
    counts.push(0);
    for &h in &hit[1..] {
        if !h {
            c += 1;
        }
        counts.push(c);
    }
    Ok(RoughPrefixTable { y, counts })
}

/// ∑_{n ∈ S_y, n < threshold} 1/n (strict inequality).
pub fn smooth_harmonic_below<T: Real>(
    y: u64,
    threshold: T,
    primes: &PrimeTable,
    caps: &ResourceCaps,
) -> Result<T> {
    if !(threshold >= T::one()) {
        return Err(domain("harmonic threshold must be at least 1"));
    }
    if threshold == T::one() {
        primes.require(y)?;
        return Ok(T::zero());
    }
    let enumeration = enumerate_smooth(y, threshold, primes, caps)?;
    enumeration.harmonic_below(threshold)
}

/// ⌊x⌋ − ∑_{n ∈ S_y, n ≤ x} Φ(x/n, y), in exact integer arithmetic.
///
/// Every m ≤ x factors uniquely as (smooth)·(rough), so the result is 0.
pub fn factorization_identity_residual<T: Real>(
    x: T,
    smooth: &SmoothEnumeration<T>,
    rough: &RoughPrefixTable,
) -> Result<i64> {
    if !(x >= T::one()) {
        return Err(domain(format!("x = {x} must be at least 1")));
    }
    if smooth.y() != rough.y() {
        return Err(domain("smooth enumeration and rough table disagree on y"));
    }
    let m = floor_count(x);
    if m > smooth.limit() || m > rough.limit() {
        return Err(domain(format!("x = {x} beyond table limits")));
    }
    let total: u64 = smooth
        .values()
        .iter()
        .take_while(|&&n| n <= m)
        .map(|&n| rough.count(m / n))
        .sum();
    Ok(m as i64 - total as i64)
}
