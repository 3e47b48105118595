//! Shared evaluation state: certified special-function tables (shared by every
//! y) and a per-y context holding the exact arithmetic tables.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::arith::{
    build_rough_prefix, enumerate_smooth, floor_count, mertens_data, sieve_primes, MertensData, PrimeTable,
    RoughPrefixTable, SmoothEnumeration,
};
use crate::caps::ResourceCaps;
use crate::debruijn::{lambda_approx, MuTable, Query};
use crate::error::{domain, Result};
use crate::quadrature::QuadratureRule;
use crate::scalar::{frac, Real};
use crate::special::{build_buchstab, build_dickman, SpecialFunctionTable, DEFAULT_U_MAX};

/// Counts every Ψ and Λ value produced through a [`Context`] and records the
/// ones breaking `0 ≤ Ψ ≤ ⌊x⌋` or `−{x} ≤ Λ ≤ ⌊x⌋`.
#[derive(Debug, Default)]
pub struct TrivialBoundMonitor {
    checked: AtomicU64,
    violations: AtomicU64,
    first_violation: Mutex<Option<String>>,
}

impl TrivialBoundMonitor {
    pub fn checked(&self) -> u64 {
        self.checked.load(Ordering::Relaxed)
    }

    pub fn violations(&self) -> u64 {
        self.violations.load(Ordering::Relaxed)
    }

    pub fn first_violation(&self) -> Option<String> {
        self.first_violation.lock().map(|g| g.clone()).unwrap_or(None)
    }

    fn record(&self, ok: bool, what: impl FnOnce() -> String) {
        self.checked.fetch_add(1, Ordering::Relaxed);
        if !ok {
            self.violations.fetch_add(1, Ordering::Relaxed);
            if let Ok(mut g) = self.first_violation.lock() {
                g.get_or_insert_with(what);
            }
        }
    }

    /// `0 ≤ Ψ ≤ ⌊x⌋`, exact.
    pub fn check_psi<T: Real>(&self, x: T, y: u64, psi: u64) {
        self.record(psi <= floor_count(x), || format!("Ψ({x}, {y}) = {psi} > ⌊x⌋"));
    }

    /// `−{x} ≤ Λ ≤ ⌊x⌋`, up to `slack · x` of quadrature error.
    pub fn check_lambda<T: Real>(&self, x: T, y: u64, lambda: T, slack: T) {
        let fl = x.floor();
        let ok = lambda >= -frac(x) - slack * x && lambda <= fl + slack * x;
        self.record(ok, || format!("Λ({x}, {y}) = {lambda} outside [−{{x}}, ⌊x⌋]"));
    }
}

/// ρ and ω tables, the quadrature rule and the integration tolerance; shared
/// by all per-y contexts.
#[derive(Debug)]
pub struct Tables<T> {
    pub dickman: SpecialFunctionTable<T>,
    pub buchstab: SpecialFunctionTable<T>,
    pub rule: QuadratureRule<T>,
    /// absolute tolerance for integrals of O(1) integrands in v = log t / log y
    pub tol: T,
    pub caps: ResourceCaps,
    pub monitor: TrivialBoundMonitor,
}

impl<T: Real> Tables<T> {
    /// Default accuracy: 1e-12 tables and 1e-13 integrals in f64, scaled
    /// with the unit roundoff for narrower types.
    pub fn new(caps: ResourceCaps) -> Result<Self> {
        let eps = T::epsilon();
        let accuracy = T::lit(1e-12).max(eps * T::lit(1e3));
        let tol = T::lit(1e-13).max(eps * T::lit(1e3));
        Self::with_accuracy(caps, T::lit(DEFAULT_U_MAX.min(caps.max_u)), accuracy, tol)
    }

    pub fn with_accuracy(caps: ResourceCaps, u_max: T, accuracy: T, tol: T) -> Result<Self> {
        Ok(Self {
            dickman: build_dickman(u_max, accuracy, &caps)?,
            buchstab: build_buchstab(u_max, accuracy, &caps)?,
            rule: QuadratureRule::default(),
            tol,
            caps,
            monitor: TrivialBoundMonitor::default(),
        })
    }

    /// Smaller of the two table ranges.
    pub fn u_max(&self) -> T {
        self.dickman.u_max().min(self.buchstab.u_max())
    }
}

/// Everything needed to evaluate Ψ, Φ, Λ, μ_y and the error terms for one y
/// and all x up to `x_limit`.
#[derive(Debug)]
pub struct Context<T> {
    tables: Arc<Tables<T>>,
    y: u64,
    ln_y: T,
    x_limit: u64,
    primes: PrimeTable,
    mertens: MertensData<T>,
    smooth: SmoothEnumeration<T>,
    rough: RoughPrefixTable,
    mu: MuTable<T>,
}

impl<T: Real> Context<T> {
    pub fn new(tables: Arc<Tables<T>>, y: u64, x_limit: u64) -> Result<Self> {
        if y < 2 {
            return Err(domain(format!("y = {y} must be at least 2")));
        }
        let caps = tables.caps;
        caps.check_x(y, "y")?;
        caps.check_x(x_limit, "x limit")?;
        let x_limit = x_limit.max(1);
        let primes = sieve_primes(y)?;
        let mertens = mertens_data(y, &primes)?;
        let smooth = enumerate_smooth(y, T::from_count(x_limit), &primes, &caps)?;
        let rough = build_rough_prefix(y, x_limit, &primes, &caps)?;
        let ln_y = T::from_count(y).ln();
        let u_top = (T::from_count(x_limit).ln() / ln_y).max(T::one());
        if u_top > tables.u_max() {
            return Err(domain(format!(
                "x limit {x_limit} needs u = {u_top} beyond the table range {}",
                tables.u_max()
            )));
        }
        let mu = MuTable::build(y, u_top, &tables)?;
        Ok(Self {
            tables,
            y,
            ln_y,
            x_limit,
            primes,
            mertens,
            smooth,
            rough,
            mu,
        })
    }

    pub fn tables(&self) -> &Tables<T> {
        &self.tables
    }

    pub fn shared_tables(&self) -> Arc<Tables<T>> {
        Arc::clone(&self.tables)
    }

    pub fn y(&self) -> u64 {
        self.y
    }

    pub fn ln_y(&self) -> T {
        self.ln_y
    }

    pub fn x_limit(&self) -> u64 {
        self.x_limit
    }

    pub fn primes(&self) -> &PrimeTable {
        &self.primes
    }

    pub fn mertens(&self) -> &MertensData<T> {
        &self.mertens
    }

    pub fn smooth(&self) -> &SmoothEnumeration<T> {
        &self.smooth
    }

    pub fn rough(&self) -> &RoughPrefixTable {
        &self.rough
    }

    pub fn mu_table(&self) -> &MuTable<T> {
        &self.mu
    }

    pub fn query(&self, x: T) -> Result<Query<T>> {
        Query::new(x, self.y)
    }

    pub(crate) fn check_x(&self, x: T) -> Result<()> {
        if !(x > T::zero()) || !x.is_finite() {
            return Err(domain(format!("x = {x} must be positive")));
        }
        if floor_count(x) > self.x_limit {
            return Err(domain(format!("x = {x} beyond the context limit {}", self.x_limit)));
        }
        Ok(())
    }

    /// Ψ(x, y), checked against the trivial bounds.
    pub fn psi(&self, x: T) -> Result<u64> {
        self.check_x(x)?;
        let v = self.psi_unchecked(x);
        self.tables.monitor.check_psi(x, self.y, v);
        Ok(v)
    }

    #[inline]
    pub(crate) fn psi_unchecked(&self, x: T) -> u64 {
        self.smooth.count_le(floor_count(x))
    }

    /// Φ(x, y).
    pub fn phi(&self, x: T) -> Result<u64> {
        self.check_x(x)?;
        Ok(self.rough.count_at(x))
    }

    /// μ_y(u) from the cached table (0 for u ≤ 1).
    pub fn mu(&self, u: T) -> Result<T> {
        self.mu.value(u)
    }

    #[inline]
    pub(crate) fn mu_unchecked(&self, u: T) -> T {
        self.mu.value_unchecked(u)
    }

    /// Λ(x, y), checked against the trivial bounds.
    pub fn lambda(&self, x: T) -> Result<T> {
        self.check_x(x)?;
        let q = self.query(x)?;
        let v = lambda_approx(&q, &self.tables)?;
        self.tables.monitor.check_lambda(x, self.y, v, T::lit(1e-9).max(T::epsilon() * T::lit(1e4)));
        Ok(v)
    }
}
