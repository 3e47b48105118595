//! De Bruijn's approximants: μ_y, Λ(x,y), V(x,y), V*(x,y) and W(x,y).
//!
//! ```text
//! μ_y(u)  = ∫_0^u ω(u−v) y^{−v} dv
//! Λ(x,y)  = x ρ(u) − {x} − x ∫_0^u ρ′(u−v) {y^v}/y^v dv
//! V(x,y)  = 1_{x≥1} + x (Π(y) − e^{−γ}/log y + μ_y(u))
//! V*(x,y) = 1_{x≥1} + x μ_y(u)
//! W(x,y)  = x μ_y(u) Π(y) e^{γ} log y
//! ```

use crate::arith::MertensData;
use crate::chebyshev::ChebSeries;
use crate::context::Tables;
use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_piecewise, PiecewiseIntegrand};
use crate::scalar::{frac, Real, EXP_GAMMA};
use crate::special::rho_prime_unchecked;

/// A point (x, y) with u = log x / log y computed once.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Query<T> {
    x: T,
    y: u64,
    ln_y: T,
    u: T,
}

impl<T: Real> Query<T> {
    pub fn new(x: T, y: u64) -> Result<Self> {
        if !(x > T::zero()) || !x.is_finite() {
            return Err(domain(format!("x = {x} must be positive and finite")));
        }
        if y < 2 {
            return Err(domain(format!("y = {y} must be at least 2")));
        }
        let ln_y = T::from_count(y).ln();
        Ok(Self { x, y, ln_y, u: x.ln() / ln_y })
    }

    pub fn x(&self) -> T {
        self.x
    }

    pub fn y(&self) -> u64 {
        self.y
    }

    pub fn u(&self) -> T {
        self.u
    }

    pub fn ln_y(&self) -> T {
        self.ln_y
    }
}

fn check_u<T: Real>(u: T, tables: &Tables<T>) -> Result<()> {
    if u.is_nan() || u > tables.u_max() {
        return Err(domain(format!("u = {u} outside the table range {}", tables.u_max())));
    }
    Ok(())
}

/// μ_y(u) by direct quadrature; 0 for u ≤ 1.
pub fn mu_y<T: Real>(u: T, y: u64, tables: &Tables<T>) -> Result<T> {
    if y < 2 {
        return Err(domain(format!("y = {y} must be at least 2")));
    }
    check_u(u, tables)?;
    mu_direct(u, T::from_count(y).ln(), tables, tables.tol)
}

fn mu_direct<T: Real>(u: T, ln_y: T, tables: &Tables<T>, tol: T) -> Result<T> {
    if u <= T::one() {
        return Ok(T::zero());
    }
    let top = u.floor().to_u64().unwrap_or(0);
    let omega = &tables.buchstab;
    // ω(u−v) vanishes past v = u − 1 and has joints at v = u − k
    let f = PiecewiseIntegrand::with_candidates(
        T::zero(),
        u - T::one(),
        (2..=top).map(|k| u - T::from_count(k)),
        |v: T| omega.value_unchecked(u - v) * (-v * ln_y).exp(),
    )?;
    integrate_piecewise(&f, &tables.rule, tol)
}

/// μ_y(u) log y + μ_y′(u) − ω(u), with μ_y′ by a centred difference of step 1e-5.
pub fn mu_ode_residual<T: Real>(u: T, y: u64, tables: &Tables<T>) -> Result<T> {
    if !(u >= T::zero()) {
        return Err(domain(format!("u = {u} must be nonnegative")));
    }
    if (u - T::one()).abs() < T::lit(1e-4) {
        return Err(domain(format!("u = {u} is within 1e-4 of the jump of μ_y′ at 1")));
    }
    let h = T::lit(1e-5);
    check_u(u + h, tables)?;
    let ln_y = T::from_count(y).ln();
    let tol = tables.tol * T::lit(0.01);
    let mu = mu_y(u, y, tables)?;
    let d = (mu_direct(u + h, ln_y, tables, tol)? - mu_direct(u - h, ln_y, tables, tol)?) / (h + h);
    Ok(mu * ln_y + d - tables.buchstab.value(u)?)
}

/// μ_y on [1, u_top] as Chebyshev panels of width 1/4, fitted to the direct
/// quadrature and checked against it between the fitting nodes.
#[derive(Clone, Debug)]
pub struct MuTable<T> {
    y: u64,
    hi: T,
    panels: Vec<ChebSeries<T>>,
    certified_error: T,
}

const MU_PANELS_PER_UNIT: usize = 4;

impl<T: Real> MuTable<T> {
    pub fn build(y: u64, u_top: T, tables: &Tables<T>) -> Result<Self> {
        if y < 2 {
            return Err(domain(format!("y = {y} must be at least 2")));
        }
        let per = T::from_count(MU_PANELS_PER_UNIT as u64);
        let count = ((u_top.max(T::one()) - T::one()) * per).ceil().to_usize().unwrap_or(0).max(1);
        let hi = T::one() + T::from_count(count as u64) / per;
        check_u(hi, tables)?;
        let ln_y = T::from_count(y).ln();
        let n = tables.dickman.degree() + 1;
        let mut panels = Vec::with_capacity(count);
        let failure = std::cell::RefCell::new(None);
        for i in 0..count {
            let lo = T::one() + T::from_count(i as u64) / per;
            let hi = lo + T::one() / per;
            let p = ChebSeries::fit(lo, hi, n, |u| {
                mu_direct(u, ln_y, tables, tables.tol).unwrap_or_else(|e| {
                    failure.borrow_mut().get_or_insert(e);
                    T::nan()
                })
            });
            panels.push(p);
        }
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let mut worst = T::zero();
        for p in &panels {
            for j in 0..=4 {
                let u = p.lo() + (p.hi() - p.lo()) * T::from_count(j) / T::lit(4.0);
                worst = worst.max((p.eval(u) - mu_direct(u, ln_y, tables, tables.tol)?).abs());
            }
        }
        let accuracy = tables.dickman.target_accuracy();
        if !(worst <= accuracy) {
            return Err(Error::Certification(format!(
                "μ_y table for y = {y} deviates by {worst:e} (target {accuracy:e})"
            )));
        }
        Ok(Self {
            y,
            hi,
            panels,
            certified_error: worst,
        })
    }

    pub fn y(&self) -> u64 {
        self.y
    }

    /// Right end of the tabulated range.
    pub fn u_max(&self) -> T {
        self.hi
    }

    pub fn certified_error(&self) -> T {
        self.certified_error
    }

    pub fn value(&self, u: T) -> Result<T> {
        if u.is_nan() || u > self.hi {
            return Err(domain(format!("u = {u} beyond the μ_y table range {}", self.hi)));
        }
        Ok(self.value_unchecked(u))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, u: T) -> T {
        if u <= T::one() {
            return T::zero();
        }
        let per = T::from_count(MU_PANELS_PER_UNIT as u64);
        let i = ((u - T::one()) * per).to_usize().unwrap_or(0).min(self.panels.len() - 1);
        self.panels[i].eval(u)
    }
}

/// Λ(x, y) for x ≥ 1.
///
/// The integrand vanishes for v > u − 1 (ρ′ = 0 on [0, 1)), so only the jumps
/// of {y^v} at v = log k / log y with k < x/y and the joints of ρ′ at v = u − j
/// are breakpoints. On each piece {y^v}/y^v = 1 − k y^{−v} with k = ⌊y^v⌋.
pub fn lambda_approx<T: Real>(q: &Query<T>, tables: &Tables<T>) -> Result<T> {
    let (x, u, ln_y) = (q.x, q.u, q.ln_y);
    if x < T::one() {
        return Err(domain(format!("Λ needs x ≥ 1, got {x}")));
    }
    check_u(u, tables)?;
    if u <= T::one() {
        return Ok(x.floor());
    }
    let ratio = x / T::from_count(q.y);
    let k_max = ratio.ceil().to_u64().unwrap_or(u64::MAX).saturating_sub(1);
    tables
        .caps
        .check_breakpoints(k_max as usize, "the Λ integral")?;
    let top = u.floor().to_u64().unwrap_or(0);
    let candidates = (2..=k_max)
        .map(|k| T::from_count(k).ln() / ln_y)
        .chain((2..=top).map(|j| u - T::from_count(j)));
    let dickman = &tables.dickman;
    let f = PiecewiseIntegrand::with_candidates(T::zero(), u - T::one(), candidates, |v: T| {
        let t = (v * ln_y).exp();
        (T::one() - t.floor() / t) * rho_prime_unchecked(u - v, dickman)
    })?;
    let integral = integrate_piecewise(&f, &tables.rule, tables.tol)?;
    Ok(x * dickman.value_unchecked(u) - frac(x) - x * integral)
}

/// V(x, y).
pub fn v_approx<T: Real>(q: &Query<T>, mertens: &MertensData<T>, tables: &Tables<T>) -> Result<T> {
    check_mertens(q, mertens)?;
    Ok(v_star_approx(q, tables)? + q.x * mertens.v_gap())
}

/// V*(x, y).
pub fn v_star_approx<T: Real>(q: &Query<T>, tables: &Tables<T>) -> Result<T> {
    let mu = mu_y(q.u, q.y, tables)?;
    Ok(indicator(q.x) + q.x * mu)
}

/// W(x, y).
pub fn w_approx<T: Real>(q: &Query<T>, mertens: &MertensData<T>, tables: &Tables<T>) -> Result<T> {
    check_mertens(q, mertens)?;
    let mu = mu_y(q.u, q.y, tables)?;
    Ok(q.x * mu * mertens.pi_y * T::lit(EXP_GAMMA) * q.ln_y)
}

#[inline]
pub(crate) fn indicator<T: Real>(x: T) -> T {
    if x >= T::one() {
        T::one()
    } else {
        T::zero()
    }
}

fn check_mertens<T: Real>(q: &Query<T>, mertens: &MertensData<T>) -> Result<()> {
    if mertens.y != q.y {
        return Err(domain(format!("Mertens data for y = {} used at y = {}", mertens.y, q.y)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{mertens_data, sieve_primes};
    use crate::caps::ResourceCaps;
    use std::sync::OnceLock;

    fn tables() -> &'static Tables<f64> {
        static T: OnceLock<Tables<f64>> = OnceLock::new();
        T.get_or_init(|| Tables::new(ResourceCaps::default()).unwrap())
    }

    #[test]
    fn query_rejects_bad_input() {
        assert!(Query::new(0.0f64, 5).is_err());
        assert!(Query::new(-1.0f64, 5).is_err());
        assert!(Query::new(f64::NAN, 5).is_err());
        assert!(Query::new(10.0f64, 1).is_err());
        let q = Query::new(125.0f64, 5).unwrap();
        assert!((q.u() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn mu_vanishes_below_one() {
        for y in [2, 7, 101] {
            assert_eq!(mu_y(0.8, y, tables()).unwrap(), 0.0);
            assert_eq!(mu_y(1.0, y, tables()).unwrap(), 0.0);
        }
    }

    #[test]
    fn mu_at_two_against_riemann_sum() {
        // μ_y(2) = ∫_0^1 y^{−v}/(2 − v) dv
        for y in [3u64, 13, 101] {
            let l = (y as f64).ln();
            let n = 200_000;
            let h = 1.0 / n as f64;
            let oracle: f64 = (0..n)
                .map(|i| {
                    let v = (i as f64 + 0.5) * h;
                    (-v * l).exp() / (2.0 - v)
                })
                .sum::<f64>()
                * h;
            let got = mu_y(2.0, y, tables()).unwrap();
            assert!((got - oracle).abs() < 1e-10, "y = {y}: {got} vs {oracle}");
        }
    }

    #[test]
    fn mu_ode_holds() {
        for y in [3, 13, 101] {
            assert_eq!(mu_ode_residual(0.5, y, tables()).unwrap(), 0.0);
            for u in [1.5, 2.5, 3.0, 4.0] {
                let r = mu_ode_residual(u, y, tables()).unwrap();
                assert!(r.abs() <= 1e-7, "y = {y}, u = {u}: {r:e}");
            }
        }
        assert!(matches!(mu_ode_residual(1.00005, 3, tables()), Err(Error::Domain(_))));
    }

    #[test]
    fn mu_table_matches_direct() {
        let t = MuTable::build(7, 6.3, tables()).unwrap();
        assert!(t.u_max() >= 6.3);
        for i in 0..60 {
            let u = 0.9 + i as f64 * 0.0917;
            let d = mu_y(u, 7, tables()).unwrap();
            assert!((t.value(u).unwrap() - d).abs() < 1e-12, "u = {u}");
        }
        assert!(t.value(7.0).is_err());
    }

    #[test]
    fn lambda_in_the_trivial_regime() {
        for (x, y) in [(1.0, 2), (5.0, 7), (7.0, 7), (6.5, 7), (100.0, 101)] {
            let q = Query::new(x, y).unwrap();
            assert_eq!(lambda_approx(&q, tables()).unwrap(), f64::floor(x));
        }
        assert!(lambda_approx(&Query::new(0.5f64, 3).unwrap(), tables()).is_err());
    }

    fn lambda_riemann(x: f64, y: u64, n: usize) -> f64 {
        let d = &tables().dickman;
        let l = (y as f64).ln();
        let u = x.ln() / l;
        let h = u / n as f64;
        let s: f64 = (0..n)
            .map(|i| {
                let v = (i as f64 + 0.5) * h;
                let t = (v * l).exp();
                rho_prime_unchecked(u - v, d) * (t - t.floor()) / t
            })
            .sum();
        x * d.value(u).unwrap() - (x - x.floor()) - x * s * h
    }

    #[test]
    fn lambda_against_dense_oracle() {
        for (x, y) in [(2.5, 2u64), (2.5, 3), (37.5, 3), (200.0, 5), (1000.5, 13)] {
            let q = Query::new(x, y).unwrap();
            let got = lambda_approx(&q, tables()).unwrap();
            let oracle = lambda_riemann(x, y, 1_000_000);
            assert!((got - oracle).abs() <= 1e-6 * x, "({x}, {y}): {got} vs {oracle}");
        }
    }

    #[test]
    fn lambda_two_and_a_half() {
        // x ≤ y: ρ′(u − v) = 0 on [0, u], so Λ = 2.5 ρ(u) − 0.5 = 2
        let q = Query::new(2.5f64, 3).unwrap();
        let got = lambda_approx(&q, tables()).unwrap();
        assert_eq!(got, 2.0);
    }

    #[test]
    fn approximants_compose() {
        let pt = sieve_primes(100).unwrap();
        for y in [2u64, 7, 31] {
            let m = mertens_data::<f64>(y, &pt).unwrap();
            for x in [0.5, 1.0, 3.0, 50.0, 1000.0] {
                let q = Query::new(x, y).unwrap();
                let v = v_approx(&q, &m, tables()).unwrap();
                let vs = v_star_approx(&q, tables()).unwrap();
                assert!((v - vs - x * m.v_gap()).abs() <= 1e-12 * x);
                let w = w_approx(&q, &m, tables()).unwrap();
                if q.u() <= 1.0 {
                    assert_eq!(w, 0.0);
                    let ind = if x >= 1.0 { 1.0 } else { 0.0 };
                    assert_eq!(vs, ind);
                }
            }
        }
        let m2 = mertens_data::<f64>(2, &pt).unwrap();
        assert!(v_approx(&Query::new(3.0, 7).unwrap(), &m2, tables()).is_err());
    }
}
