//! Numerical verification of the exact identities linking Δ, R, R*, Ψ and the
//! special functions.
//!
//! With δ(v) = Δ(y^v)/y^v, r(v) = R(y^v)/y^v, r*(v) = R*(y^v)/y^v:
//!
//! ```text
//! thm1eq1       Δ(x) = β x ρ(u) + R(x) + x ∫_0^u r(v) ρ′(u−v) dv
//! thm1eq1_star  Δ(x) = R*(x) + x ∫_0^u r*(v) ρ′(u−v) dv
//! thm1eq2       R(x) = Δ(x) + x ∫_0^∞ δ(v) (ω(u−v) − e^{−γ}) dv
//! thm1eq2_star  R*(x) = Δ(x) + x ∫_0^u δ(v) ω(u−v) dv
//! eqvar2        Ψ(x) = α x ρ(u) + R(x) − {x} + x ∫_0^u (R(y^v) − {y^v})/y^v ρ′(u−v) dv
//! lemma_sum     Ψ(x) = α x − x ∑_{n∈S_y} μ_y(log(x/n)/log y)/n + R(x) − {x}
//! lemma_integral Ψ(x) = α x − x ∫_1^x Ψ(t)/(t² log y) ω(log(x/t)/log y) dt + R(x) − {x}
//! beta_integral e^{−γ} ∫_0^∞ δ(v) dv = β
//! ```
//!
//! The (−∞, 0) part of the first identity's integral is β x ρ(u) in closed form,
//! since r(v) = −β for v < 0.
//!
//! Supports: r*(v) = 0 and δ(v) = 0 for v ≤ 1, and ρ′(u−v) = 0, ω(u−v) = 0 for
//! v > u − 1, so most integrals live on [1, u − 1], i.e. y ≤ t ≤ x/y. All jumps
//! of r, r*, δ and {y^v} sit at y^v ∈ ℤ.
//!
//! The infinite integral ∫_0^∞ δ is truncated at V with X = y^V and evaluated
//! by exchanging the order of integration in Λ:
//!
//! ```text
//! ∫_0^V δ(v) dv = ∑_{n∈S_y, n≤X} (1/n − 1/X)/log y − ∫_0^V ρ + ∫_0^V g(s) ρ(V−s) ds,
//! g(s) = {y^s}/y^s
//! ```
//!
//! The tail ∫_V^∞ |δ| is bounded using only Ψ ≥ 0, {t} < 1 and ρ′ ≤ 0:
//!
//! ```text
//! (Ψ(X)/X + Π(y)^{−1} − ∑_{n≤X} 1/n)/log y + ∫_V^∞ ρ + 2/(X log y) + ∫_0^V y^{−s} ρ(V−s) ds
//! ```

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::arith::{enumerate_smooth, factorization_identity_residual, floor_count};
use crate::caps::ResourceCaps;
use crate::context::{Context, Tables};
use crate::error::{domain, resource, Result};
use crate::error_terms::{delta, mobius_inversion_residual, r_error, r_star_error, r_star_head, r_unchecked};
use crate::quadrature::{integrate_piecewise, PiecewiseIntegrand};
use crate::scalar::{frac, CompensatedSum, Real, EXP_NEG_GAMMA};
use crate::special::{dickman_buchstab_convolution_residual, rho_prime_unchecked};

/// One identity evaluated at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub identity_id: Suite,
    pub x: f64,
    pub y: u64,
    pub lhs: f64,
    pub rhs: f64,
    /// lhs − rhs
    pub residual: f64,
    /// residual / x
    pub scaled_residual: f64,
    /// bound on the scaled contribution of a truncated tail (0 when exact)
    pub budget: f64,
}

impl IdentityResidual {
    fn new<T: Real>(id: Suite, x: T, y: u64, lhs: T, rhs: T, budget: T) -> Self {
        let residual = lhs - rhs;
        Self {
            identity_id: id,
            x: x.as_f64(),
            y,
            lhs: lhs.as_f64(),
            rhs: rhs.as_f64(),
            residual: residual.as_f64(),
            scaled_residual: (residual / x).as_f64(),
            budget: budget.as_f64(),
        }
    }
}

fn require_x<T: Real>(ctx: &Context<T>, x: T) -> Result<()> {
    if !(x >= T::one()) {
        return Err(domain(format!("identities need x ≥ 1, got {x}")));
    }
    ctx.check_x(x)
}

/// ∫ f over [lo, hi] with breakpoints at v = log k / log y for integers k in
/// (y^lo, y^hi) at or above `k_from`, plus `extra`.
fn integrate_over_jumps<T: Real, F: Fn(T) -> T>(
    ctx: &Context<T>,
    lo: T,
    hi: T,
    k_from: u64,
    extra: &[T],
    f: F,
) -> Result<T> {
    if !(hi > lo) {
        return Ok(T::zero());
    }
    let ln_y = ctx.ln_y();
    let t_hi = (hi * ln_y).exp();
    let k_max = t_hi.ceil().to_u64().unwrap_or(u64::MAX);
    let k_from = k_from.max(2);
    let count = k_max.saturating_sub(k_from) as usize;
    ctx.tables().caps.check_breakpoints(count + extra.len(), "a jump-aware integral")?;
    let candidates = (k_from..=k_max)
        .map(|k| T::from_count(k).ln() / ln_y)
        .chain(extra.iter().copied());
    let g = PiecewiseIntegrand::with_candidates(lo, hi, candidates, f)?;
    integrate_piecewise(&g, &ctx.tables().rule, ctx.tables().tol)
}

/// Joints u − j (j ≥ 1) of ρ′(u − ·) and ω(u − ·).
fn joints<T: Real>(u: T) -> Vec<T> {
    let top = u.floor().to_u64().unwrap_or(0);
    (1..=top).map(|j| u - T::from_count(j)).collect()
}

pub fn residual_thm1eq1_star<T: Real>(ctx: &Context<T>, x: T) -> Result<IdentityResidual> {
    require_x(ctx, x)?;
    let q = ctx.query(x)?;
    let (u, ln_y) = (q.u(), ctx.ln_y());
    let lhs = delta(ctx, x)?;
    let d = &ctx.tables().dickman;
    let integral = integrate_over_jumps(ctx, T::one(), u - T::one(), ctx.y(), &joints(u), |v: T| {
        let ln_t = v * ln_y;
        let t = ln_t.exp();
        r_star_head(ctx, t, ln_t).0 / t * rho_prime_unchecked(u - v, d)
    })?;
    let rhs = r_star_error(ctx, x)? + x * integral;
    Ok(IdentityResidual::new(Suite::Thm1eq1Star, x, ctx.y(), lhs, rhs, T::zero()))
}

pub fn residual_thm1eq1<T: Real>(ctx: &Context<T>, x: T) -> Result<IdentityResidual> {
    require_x(ctx, x)?;
    let q = ctx.query(x)?;
    let (u, ln_y) = (q.u(), ctx.ln_y());
    let lhs = delta(ctx, x)?;
    let d = &ctx.tables().dickman;
    let integral = integrate_over_jumps(ctx, T::zero(), u - T::one(), ctx.y(), &joints(u), |v: T| {
        let ln_t = v * ln_y;
        let t = ln_t.exp();
        r_unchecked(ctx, t, ln_t) / t * rho_prime_unchecked(u - v, d)
    })?;
    let beta = ctx.mertens().beta_y;
    let rhs = beta * x * d.value(u)? + r_error(ctx, x)? + x * integral;
    Ok(IdentityResidual::new(Suite::Thm1eq1, x, ctx.y(), lhs, rhs, T::zero()))
}

/// The Ψ form of the first identity, before Λ is introduced.
pub fn residual_eqvar2<T: Real>(ctx: &Context<T>, x: T) -> Result<IdentityResidual> {
    require_x(ctx, x)?;
    let q = ctx.query(x)?;
    let (u, ln_y) = (q.u(), ctx.ln_y());
    let lhs = T::from_count(ctx.psi(x)?);
    let d = &ctx.tables().dickman;
    let integral = integrate_over_jumps(ctx, T::zero(), u - T::one(), 2, &joints(u), |v: T| {
        let ln_t = v * ln_y;
        let t = ln_t.exp();
        (r_unchecked(ctx, t, ln_t) - frac(t)) / t * rho_prime_unchecked(u - v, d)
    })?;
    let alpha = ctx.mertens().alpha_y;
    let rhs = alpha * x * d.value(u)? + r_error(ctx, x)? - frac(x) + x * integral;
    Ok(IdentityResidual::new(Suite::Eqvar2, x, ctx.y(), lhs, rhs, T::zero()))
}

/// ∫_0^u δ(v) ω(u−v) dv; every integrand value needs its own Λ quadrature.
fn delta_omega_integral<T: Real>(ctx: &Context<T>, u: T) -> Result<T> {
    let ln_y = ctx.ln_y();
    let w = &ctx.tables().buchstab;
    let failure = std::cell::RefCell::new(None);
    let value = integrate_over_jumps(ctx, T::one(), u - T::one(), ctx.y(), &joints(u), |v: T| {
        let t = (v * ln_y).exp();
        match delta(ctx, t) {
            Ok(d) => d / t * w.value_unchecked(u - v),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                T::zero()
            }
        }
    })?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

pub fn residual_thm1eq2_star<T: Real>(ctx: &Context<T>, x: T) -> Result<IdentityResidual> {
    require_x(ctx, x)?;
    let u = ctx.query(x)?.u();
    let lhs = r_star_error(ctx, x)?;
    let rhs = delta(ctx, x)? + x * delta_omega_integral(ctx, u)?;
    Ok(IdentityResidual::new(Suite::Thm1eq2Star, x, ctx.y(), lhs, rhs, T::zero()))
}

/// ∫_0^V δ(v) dv with a bound on the omitted ∫_V^∞ |δ(v)| dv.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedDeltaIntegral<T> {
    pub v_max: T,
    pub value: T,
    pub tail_bound: T,
}

/// Integer t at and above which ∫ {t} f(t) dt is replaced by ½ ∫ f(t) dt.
const EULER_MACLAURIN_FROM: u64 = 200_000;

/// ∫_0^V δ(v) dv for X = y^V up to `caps.max_truncation_x`, with a bound on
/// ∫_V^∞ |δ| plus the Euler–Maclaurin remainder.
///
/// In ∫_0^V g(s) ρ(V−s) ds, pieces with t = y^s below [`EULER_MACLAURIN_FROM`]
/// are integrated between the jumps of {t}. Above it {t} is replaced by ½; with
/// f(t) = ρ(V − log t/log y)/(t² log y) the remainder ∫ ({t} − ½) f is at most
/// (f(T₀) + f(X) + ∫|f′|)/12 ≤ (3 + 1/(2 log y))/(12 T₀² log y).
pub fn truncated_delta_integral<T: Real>(ctx: &Context<T>, v_max: T) -> Result<TruncatedDeltaIntegral<T>> {
    let tables = ctx.tables();
    let caps = tables.caps;
    let ln_y = ctx.ln_y();
    if !(v_max >= T::zero()) || v_max > tables.u_max() {
        return Err(domain(format!("v_max = {v_max} outside [0, {}]", tables.u_max())));
    }
    let big_x = (v_max * ln_y).exp();
    if floor_count(big_x) > caps.max_truncation_x {
        return Err(resource(format!(
            "truncation point {big_x} exceeds max_truncation_x = {}",
            caps.max_truncation_x
        )));
    }
    let d = &tables.dickman;
    let (rule, tol) = (&tables.rule, tables.tol);

    // ∑_{n≤X} 1/n and Ψ(X) over the smooth numbers up to X
    let enum_caps = ResourceCaps {
        max_x: caps.max_truncation_x,
        ..caps
    };
    let smooth = enumerate_smooth::<T>(ctx.y(), big_x.max(T::one()), ctx.primes(), &enum_caps)?;
    let psi_x = smooth.len() as u64;
    tables.monitor.check_psi(big_x, ctx.y(), psi_x);
    let mut h = CompensatedSum::new();
    for &n in smooth.values().iter().rev() {
        h.add(T::one() / T::from_count(n));
    }
    let harmonic = h.value();
    let psi_over_x = T::from_count(psi_x) / big_x;
    let a = (harmonic - psi_over_x) / ln_y;

    let integer_joints = |lo: T, hi: T| {
        (1..=hi.ceil().to_u64().unwrap_or(0))
            .map(T::from_count)
            .filter(move |&k| k > lo && k < hi)
    };
    let rho_integral = |lo: T, hi: T| -> Result<T> {
        if !(hi > lo) {
            return Ok(T::zero());
        }
        let f = PiecewiseIntegrand::with_candidates(lo, hi, integer_joints(lo, hi), |v| d.value_unchecked(v))?;
        integrate_piecewise(&f, rule, tol)
    };
    let rho_head = rho_integral(T::zero(), v_max)?;
    // ∫_{lo}^{hi} y^{−s} ρ(V−s) ds
    let damped = |lo: T, hi: T| -> Result<T> {
        if !(hi > lo) {
            return Ok(T::zero());
        }
        let f = PiecewiseIntegrand::with_candidates(
            lo,
            hi,
            joints(v_max).into_iter().filter(|&s| s > lo && s < hi),
            |s: T| (-s * ln_y).exp() * d.value_unchecked(v_max - s),
        )?;
        integrate_piecewise(&f, rule, tol)
    };

    // ∫_0^V g(s) ρ(V−s) ds
    let t0 = T::from_count(EULER_MACLAURIN_FROM);
    let s0 = (t0.ln() / ln_y).min(v_max);
    let exact = integrate_over_jumps(ctx, T::zero(), s0, 2, &joints(v_max), |s: T| {
        let t = (s * ln_y).exp();
        (T::one() - t.floor() / t) * d.value_unchecked(v_max - s)
    })?;
    let (smoothed, remainder) = if s0 < v_max {
        let half = T::lit(0.5) * damped(s0, v_max)?;
        let r = (T::lit(3.0) + T::lit(0.5) / ln_y) / (T::lit(12.0) * t0 * t0 * ln_y);
        (half, r)
    } else {
        (T::zero(), T::zero())
    };
    let value = a - rho_head + exact + smoothed;

    // tail bound
    let u_top = d.u_max();
    let rho_tail = rho_integral(v_max, u_top)? + T::lit(2.0) * d.value_unchecked(u_top);
    let psi_tail = (psi_over_x + (ctx.mertens().inv_pi_y - harmonic).max(T::zero())) / ln_y;
    let tail_bound =
        psi_tail + rho_tail + T::lit(2.0) / (big_x * ln_y) + damped(T::zero(), v_max)? + remainder;
    Ok(TruncatedDeltaIntegral {
        v_max,
        value,
        tail_bound,
    })
}

/// ∫_{lo}^{hi} δ(v) dv evaluating every δ through its own Λ quadrature; a
/// second route to [`truncated_delta_integral`] for small y^hi.
pub fn delta_integral_nested<T: Real>(ctx: &Context<T>, lo: T, hi: T) -> Result<T> {
    let ln_y = ctx.ln_y();
    let failure = std::cell::RefCell::new(None);
    let value = integrate_over_jumps(ctx, lo, hi, 2, &[], |v: T| {
        let t = (v * ln_y).exp();
        delta(ctx, t).unwrap_or_else(|e| {
            failure.borrow_mut().get_or_insert(e);
            T::zero()
        }) / t
    })?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// e^{−γ} ∫_0^{v_max} δ(v) dv − β_y, reported with the scaled tail budget
/// e^{−γ} · (bound on ∫_{v_max}^∞ |δ|). The `x` of the result is y^{v_max}.
pub fn beta_integral_check<T: Real>(ctx: &Context<T>, v_max: T) -> Result<IdentityResidual> {
    let t = truncated_delta_integral(ctx, v_max)?;
    let e = T::lit(EXP_NEG_GAMMA);
    let lhs = e * t.value;
    let rhs = ctx.mertens().beta_y;
    let mut r = IdentityResidual::new(Suite::BetaIntegral, T::one(), ctx.y(), lhs, rhs, e * t.tail_bound);
    r.x = (v_max * ctx.ln_y()).exp().as_f64();
    Ok(r)
}

/// R(x) against Δ(x) + x ∫_0^u δ ω − e^{−γ} x ∫_0^{V} δ, with the omitted
/// tail reported as budget.
pub fn residual_thm1eq2<T: Real>(
    ctx: &Context<T>,
    x: T,
    tail: &TruncatedDeltaIntegral<T>,
) -> Result<IdentityResidual> {
    require_x(ctx, x)?;
    let u = ctx.query(x)?.u();
    let e = T::lit(EXP_NEG_GAMMA);
    let lhs = r_error(ctx, x)?;
    let rhs = delta(ctx, x)? + x * delta_omega_integral(ctx, u)? - e * x * tail.value;
    Ok(IdentityResidual::new(Suite::Thm1eq2, x, ctx.y(), lhs, rhs, e * tail.tail_bound))
}

pub fn residual_lemma_sum<T: Real>(ctx: &Context<T>, x: T) -> Result<IdentityResidual> {
    require_x(ctx, x)?;
    let lhs = T::from_count(ctx.psi(x)?);
    let smooth = ctx.smooth();
    let count = smooth.count_below_ratio(x);
    let (ln_x, ln_y) = (x.ln(), ctx.ln_y());
    let mut acc = CompensatedSum::new();
    for (&n, &ln_n) in smooth.values()[..count].iter().zip(&smooth.logs()[..count]) {
        acc.add(ctx.mu((ln_x - ln_n) / ln_y)? / T::from_count(n));
    }
    let rhs = ctx.mertens().alpha_y * x - x * acc.value() + r_error(ctx, x)? - frac(x);
    Ok(IdentityResidual::new(Suite::LemmaSum, x, ctx.y(), lhs, rhs, T::zero()))
}

pub fn residual_lemma_integral<T: Real>(ctx: &Context<T>, x: T) -> Result<IdentityResidual> {
    require_x(ctx, x)?;
    let lhs = T::from_count(ctx.psi(x)?);
    let ln_y = ctx.ln_y();
    let y = T::from_count(ctx.y());
    let w = &ctx.tables().buchstab;
    // ω(log(x/t)/log y) vanishes for t > x/y; joints at t = x/y^j
    let hi = x / y;
    let integral = if hi > T::one() {
        let top = hi.ceil().to_u64().unwrap_or(0);
        ctx.tables().caps.check_breakpoints(top as usize, "the lemma integral")?;
        let mut candidates: Vec<T> = (2..=top).map(T::from_count).collect();
        let mut p = hi / y;
        while p > T::one() {
            candidates.push(p);
            p = p / y;
        }
        let f = PiecewiseIntegrand::with_candidates(T::one(), hi, candidates, |t: T| {
            let psi = T::from_count(ctx.psi_unchecked(t));
            psi / (t * t * ln_y) * w.value_unchecked((x / t).ln() / ln_y)
        })?;
        integrate_piecewise(&f, &ctx.tables().rule, ctx.tables().tol)?
    } else {
        T::zero()
    };
    let rhs = ctx.mertens().alpha_y * x - x * integral + r_error(ctx, x)? - frac(x);
    Ok(IdentityResidual::new(Suite::LemmaIntegral, x, ctx.y(), lhs, rhs, T::zero()))
}

/// Suites runnable over a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Thm1eq1,
    Thm1eq1Star,
    Thm1eq2,
    Thm1eq2Star,
    Eqvar2,
    LemmaSum,
    LemmaIntegral,
    BetaIntegral,
    Factorization,
    Mobius,
    MobiusStar,
    Convolution297,
}

impl Suite {
    pub const ALL: [Suite; 12] = [
        Suite::Thm1eq1,
        Suite::Thm1eq1Star,
        Suite::Thm1eq2,
        Suite::Thm1eq2Star,
        Suite::Eqvar2,
        Suite::LemmaSum,
        Suite::LemmaIntegral,
        Suite::BetaIntegral,
        Suite::Factorization,
        Suite::Mobius,
        Suite::MobiusStar,
        Suite::Convolution297,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm1eq1 => "thm1eq1",
            Suite::Thm1eq1Star => "thm1eq1_star",
            Suite::Thm1eq2 => "thm1eq2",
            Suite::Thm1eq2Star => "thm1eq2_star",
            Suite::Eqvar2 => "eqvar2",
            Suite::LemmaSum => "lemma_sum",
            Suite::LemmaIntegral => "lemma_integral",
            Suite::BetaIntegral => "beta_integral",
            Suite::Factorization => "factorization",
            Suite::Mobius => "mobius",
            Suite::MobiusStar => "mobius_star",
            Suite::Convolution297 => "convolution297",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|v| v.name() == s)
    }

    /// Suites whose grid values are u rather than x (y is ignored).
    pub fn is_u_grid(self) -> bool {
        self == Suite::Convolution297
    }
}

/// Points of a suite: x values (u values for the convolution suite) × y values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ys: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErroredPoint {
    pub x: f64,
    pub y: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: Suite,
    pub grid: Grid,
    pub tol: f64,
    pub points: Vec<IdentityResidual>,
    pub errored: Vec<ErroredPoint>,
    pub max_scaled_residual: f64,
    pub worst: Option<(f64, u64)>,
    /// largest truncation budget among points whose residual fits the
    /// tolerance only if the budget is ignored
    pub inconclusive_budget: Option<f64>,
    pub pass: bool,
    pub inconclusive: bool,
}

/// Options that only some suites read.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteOptions {
    /// truncation point X = y^V of ∫_0^∞ δ (thm1eq2, beta_integral)
    pub truncation_x: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { truncation_x: 1_000_000 }
    }
}

/// Evaluates `suite` over the grid and aggregates.
///
/// Per point, with r = |scaled residual| and b its budget: pass if r + b ≤ tol,
/// fail if r > tol + b, inconclusive otherwise. Errored points make the suite
/// inconclusive unless another point fails.
pub fn run_suite<T: Real>(
    suite: Suite,
    grid: &Grid,
    tol: f64,
    tables: &Arc<Tables<T>>,
    options: SuiteOptions,
) -> Result<VerificationReport> {
    if grid.xs.is_empty() || (!suite.is_u_grid() && grid.ys.is_empty()) {
        return Err(domain("verification grid is empty"));
    }
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    if !suite.is_u_grid() && suite != Suite::BetaIntegral {
        if let Some(&x) = grid.xs.iter().find(|&&x| !(x >= 1.0)) {
            return Err(domain(format!("grid contains x = {x} < 1")));
        }
    }
    if suite.is_u_grid() {
        if let Some(&u) = grid.xs.iter().find(|&&u| !(u >= 0.0)) {
            return Err(domain(format!("grid contains u = {u} < 0")));
        }
    }
    let mut points = Vec::new();
    let mut errored = Vec::new();
    let mut record = |x: f64, y: u64, r: Result<IdentityResidual>| match r {
        Ok(p) => points.push(p),
        Err(e) => errored.push(ErroredPoint {
            x,
            y,
            error: e.to_string(),
        }),
    };

    if suite.is_u_grid() {
        for &u in &grid.xs {
            let r = dickman_buchstab_convolution_residual(
                T::lit(u),
                &tables.dickman,
                &tables.buchstab,
                &tables.rule,
                tables.tol,
            )
            .map(|res| IdentityResidual {
                identity_id: Suite::Convolution297,
                x: u,
                y: 0,
                lhs: (T::one() + res).as_f64(),
                rhs: 1.0,
                residual: res.as_f64(),
                scaled_residual: res.as_f64(),
                budget: 0.0,
            });
            record(u, 0, r);
        }
    } else {
        let x_max = grid.xs.iter().fold(1.0f64, |m, &x| m.max(x));
        for &y in &grid.ys {
            let limit = floor_count(x_max).max(y);
            let ctx = match Context::new(Arc::clone(tables), y, limit) {
                Ok(c) => c,
                Err(e) => {
                    for &x in &grid.xs {
                        record(x, y, Err(e.clone()));
                    }
                    continue;
                }
            };
            let v_max = T::from_count(options.truncation_x).ln() / ctx.ln_y();
            if suite == Suite::BetaIntegral {
                record(options.truncation_x as f64, y, beta_integral_check(&ctx, v_max));
                continue;
            }
            let tail = if suite == Suite::Thm1eq2 {
                match truncated_delta_integral(&ctx, v_max) {
                    Ok(t) => Some(t),
                    Err(e) => {
                        for &x in &grid.xs {
                            record(x, y, Err(e.clone()));
                        }
                        continue;
                    }
                }
            } else {
                None
            };
            for &xf in &grid.xs {
                let x = T::lit(xf);
                let r = match suite {
                    Suite::Thm1eq1 => residual_thm1eq1(&ctx, x),
                    Suite::Thm1eq1Star => residual_thm1eq1_star(&ctx, x),
                    Suite::Thm1eq2 => residual_thm1eq2(&ctx, x, tail.as_ref().expect("built above")),
                    Suite::Thm1eq2Star => residual_thm1eq2_star(&ctx, x),
                    Suite::Eqvar2 => residual_eqvar2(&ctx, x),
                    Suite::LemmaSum => residual_lemma_sum(&ctx, x),
                    Suite::LemmaIntegral => residual_lemma_integral(&ctx, x),
                    Suite::Factorization => factorization_point(&ctx, x),
                    Suite::Mobius | Suite::MobiusStar => {
                        mobius_inversion_residual(&ctx, x, suite == Suite::MobiusStar).map(|res| IdentityResidual {
                            identity_id: suite,
                            x: xf,
                            y,
                            lhs: res.as_f64(),
                            rhs: 0.0,
                            residual: res.as_f64(),
                            scaled_residual: (res / x).as_f64(),
                            budget: 0.0,
                        })
                    }
                    Suite::BetaIntegral | Suite::Convolution297 => unreachable!("handled above"),
                };
                record(xf, y, r);
            }
        }
    }
    Ok(aggregate(suite, grid.clone(), tol, points, errored))
}

fn factorization_point<T: Real>(ctx: &Context<T>, x: T) -> Result<IdentityResidual> {
    let res = factorization_identity_residual(x, ctx.smooth(), ctx.rough())?;
    let lhs = floor_count(x) as f64;
    Ok(IdentityResidual {
        identity_id: Suite::Factorization,
        x: x.as_f64(),
        y: ctx.y(),
        lhs,
        rhs: lhs - res as f64,
        residual: res as f64,
        scaled_residual: res as f64 / x.as_f64(),
        budget: 0.0,
    })
}

fn aggregate(
    suite: Suite,
    grid: Grid,
    tol: f64,
    points: Vec<IdentityResidual>,
    errored: Vec<ErroredPoint>,
) -> VerificationReport {
    let mut max_scaled = 0.0f64;
    let mut worst = None;
    let mut failed = false;
    let mut undecided_budget: Option<f64> = None;
    for p in &points {
        let r = p.scaled_residual.abs();
        if worst.is_none() || r > max_scaled || r.is_nan() {
            max_scaled = r;
            worst = Some((p.x, p.y));
        }
        if !(r <= tol + p.budget) {
            failed = true;
        } else if r + p.budget > tol {
            undecided_budget = Some(undecided_budget.map_or(p.budget, |b| b.max(p.budget)));
        }
    }
    let inconclusive = !failed && (undecided_budget.is_some() || !errored.is_empty());
    VerificationReport {
        suite,
        grid,
        tol,
        points,
        errored,
        max_scaled_residual: max_scaled,
        worst,
        inconclusive_budget: undecided_budget,
        pass: !failed && !inconclusive,
        inconclusive,
    }
}

impl VerificationReport {
    /// 0 pass, 1 fail, 4 inconclusive.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else if self.inconclusive {
            4
        } else {
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caps::ResourceCaps;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn tables() -> Arc<Tables<f64>> {
        static T: OnceLock<Arc<Tables<f64>>> = OnceLock::new();
        T.get_or_init(|| Arc::new(Tables::new(ResourceCaps::default()).unwrap()))
            .clone()
    }

    fn ctx(y: u64, limit: u64) -> Context<f64> {
        Context::new(tables(), y, limit).unwrap()
    }

    #[test]
    fn trivial_below_y() {
        let c = ctx(13, 100);
        for x in [1.0, 2.5, 12.0, 13.0] {
            for r in [
                residual_thm1eq1(&c, x).unwrap(),
                residual_thm1eq1_star(&c, x).unwrap(),
                residual_thm1eq2_star(&c, x).unwrap(),
                residual_eqvar2(&c, x).unwrap(),
                residual_lemma_sum(&c, x).unwrap(),
                residual_lemma_integral(&c, x).unwrap(),
            ] {
                assert!(r.scaled_residual.abs() <= 1e-13, "{r:?}");
            }
        }
        assert!(residual_thm1eq1(&c, 0.5).is_err());
        assert!(residual_thm1eq1(&c, 101.0).is_err());
    }

    #[test]
    fn first_identity_both_forms() {
        for (y, xs) in [(5u64, vec![200.0, 1234.5]), (13, vec![10_000.0, 777.5])] {
            let c = ctx(y, 10_000);
            for x in xs {
                let s = residual_thm1eq1_star(&c, x).unwrap();
                let u = residual_thm1eq1(&c, x).unwrap();
                let p = residual_eqvar2(&c, x).unwrap();
                assert!(s.scaled_residual.abs() <= 1e-9, "{s:?}");
                assert!(u.scaled_residual.abs() <= 1e-9, "{u:?}");
                assert!(p.scaled_residual.abs() <= 1e-9, "{p:?}");
                assert_eq!(s.lhs, u.lhs);
            }
        }
    }

    #[test]
    fn second_identity_starred() {
        for (y, x) in [(7u64, 100.0), (31, 1000.0), (7, 333.5)] {
            let c = ctx(y, 1000);
            let r = residual_thm1eq2_star(&c, x).unwrap();
            assert!(r.scaled_residual.abs() <= 1e-9, "{r:?}");
        }
    }

    #[test]
    fn lemmas() {
        for (y, x) in [(11u64, 500.0), (97, 10_000.0), (11, 499.5)] {
            let c = ctx(y, 10_000);
            let r = residual_lemma_sum(&c, x).unwrap();
            assert!(r.scaled_residual.abs() <= 1e-9, "{r:?}");
        }
        let c = ctx(11, 500);
        let r = residual_lemma_integral(&c, 500.0).unwrap();
        assert!(r.scaled_residual.abs() <= 1e-9, "{r:?}");
    }

    #[test]
    fn truncated_integral_two_routes() {
        for (y, big_x) in [(5u64, 200.0f64), (3, 90.5), (7, 2000.0)] {
            let c = ctx(y, big_x as u64);
            let v = big_x.ln() / c.ln_y();
            let fubini = truncated_delta_integral(&c, v).unwrap();
            let nested = delta_integral_nested(&c, 0.0, v).unwrap();
            assert!((fubini.value - nested).abs() <= 1e-10, "y = {y}: {} vs {nested}", fubini.value);
            assert!(fubini.tail_bound > 0.0);
        }
    }

    #[test]
    fn smoothed_part_matches_exact_jumps() {
        // X above the Euler–Maclaurin switch, against a pure jump-aware integral
        let c = ctx(3, 10);
        let v = 5.0e5f64.ln() / c.ln_y();
        let t = truncated_delta_integral(&c, v).unwrap();
        let ln_y = c.ln_y();
        let d = &c.tables().dickman;
        let far = integrate_over_jumps(&c, 0.0, v, 2, &joints(v), |s: f64| {
            let t = (s * ln_y).exp();
            (1.0 - t.floor() / t) * d.value_unchecked(v - s)
        })
        .unwrap();
        let split = (EULER_MACLAURIN_FROM as f64).ln() / ln_y;
        let far_smoothed = {
            let exact = integrate_over_jumps(&c, 0.0, split, 2, &joints(v), |s: f64| {
                let t = (s * ln_y).exp();
                (1.0 - t.floor() / t) * d.value_unchecked(v - s)
            })
            .unwrap();
            let f = PiecewiseIntegrand::with_candidates(split, v, joints(v), |s: f64| {
                0.5 * (-s * ln_y).exp() * d.value_unchecked(v - s)
            })
            .unwrap();
            exact + integrate_piecewise(&f, &c.tables().rule, 1e-15).unwrap()
        };
        let remainder = (3.0 + 0.5 / ln_y) / (12.0 * 4e10 * ln_y);
        assert!((far - far_smoothed).abs() <= remainder + 1e-12, "{far} vs {far_smoothed}");
        assert!(t.tail_bound >= remainder);
    }

    #[test]
    fn beta_within_budget() {
        for y in [29u64, 101] {
            let c = ctx(y, 1000);
            let v = 1.0e6f64.ln() / c.ln_y();
            let r = beta_integral_check(&c, v).unwrap();
            assert!(r.residual.abs() <= 1e-5 + r.budget, "{r:?}");
            assert!((r.x - 1e6).abs() < 1e-3);
        }
    }

    #[test]
    fn second_identity_with_long_truncation() {
        let c = ctx(7, 1000);
        let tail = truncated_delta_integral(&c, 1e10f64.ln() / c.ln_y()).unwrap();
        let r = residual_thm1eq2(&c, 500.0, &tail).unwrap();
        assert!(r.scaled_residual.abs() + r.budget <= 5e-5, "{r:?}");
        // the unstarred and starred forms differ by the β defect only
        let s = residual_thm1eq2_star(&c, 500.0).unwrap();
        let b = beta_integral_check(&c, tail.v_max).unwrap();
        assert!((r.scaled_residual - s.scaled_residual - b.residual).abs() <= 1e-12);
    }

    #[test]
    fn truncation_cap() {
        let c = ctx(7, 100);
        let v = 1e13f64.ln() / c.ln_y();
        assert!(matches!(truncated_delta_integral(&c, v), Err(crate::Error::Resource(_))));
        assert!(truncated_delta_integral(&c, -1.0).is_err());
    }

    #[test]
    fn suite_reports() {
        let t = tables();
        let grid = Grid {
            xs: vec![10.0, 55.5, 300.0],
            ys: vec![5, 13],
        };
        let rep = run_suite(Suite::Thm1eq1Star, &grid, 1e-6, &t, SuiteOptions::default()).unwrap();
        assert!(rep.pass && rep.points.len() == 6 && rep.exit_code() == 0);
        let rep = run_suite(Suite::Factorization, &grid, 1e-12, &t, SuiteOptions::default()).unwrap();
        assert_eq!(rep.max_scaled_residual, 0.0);
        let rep = run_suite(Suite::BetaIntegral, &grid, 1e-5, &t, SuiteOptions::default()).unwrap();
        assert_eq!(rep.points.len(), 2);
        assert!(rep.inconclusive && rep.exit_code() == 4);
        let u_grid = Grid {
            xs: vec![0.5, 2.5, 7.0],
            ys: vec![],
        };
        let rep = run_suite(Suite::Convolution297, &u_grid, 1e-9, &t, SuiteOptions::default()).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn aggregation_rules() {
        let grid = Grid { xs: vec![1.0], ys: vec![2] };
        let point = |r: f64, b: f64| IdentityResidual::new(Suite::Thm1eq2, 1.0, 2, r, 0.0, b);
        let rep = aggregate(Suite::Thm1eq2, grid.clone(), 1e-5, vec![point(1e-6, 1e-6)], vec![]);
        assert_eq!(rep.exit_code(), 0);
        let rep = aggregate(Suite::Thm1eq2, grid.clone(), 1e-5, vec![point(5e-6, 1e-5)], vec![]);
        assert_eq!((rep.exit_code(), rep.inconclusive_budget), (4, Some(1e-5)));
        let rep = aggregate(Suite::Thm1eq2, grid.clone(), 1e-5, vec![point(1e-6, 0.0), point(3e-5, 1e-5)], vec![]);
        assert_eq!(rep.exit_code(), 1);
        assert_eq!(rep.max_scaled_residual, 3e-5);
        let rep = aggregate(Suite::Thm1eq2, grid, 1e-5, vec![point(f64::NAN, 0.0)], vec![]);
        assert_eq!(rep.exit_code(), 1);
    }

    #[test]
    fn suite_errors() {
        let t = tables();
        let opts = SuiteOptions::default();
        let empty = Grid { xs: vec![], ys: vec![5] };
        assert!(run_suite(Suite::Thm1eq1, &empty, 1e-6, &t, opts).is_err());
        let bad = Grid { xs: vec![0.5], ys: vec![5] };
        assert!(run_suite(Suite::Thm1eq1, &bad, 1e-6, &t, opts).is_err());
        let g = Grid { xs: vec![10.0], ys: vec![5] };
        assert!(run_suite(Suite::Thm1eq1, &g, 0.0, &t, opts).is_err());
        // y = 1 is a per-point error, so the suite is inconclusive
        let g = Grid { xs: vec![10.0], ys: vec![1] };
        let rep = run_suite(Suite::Thm1eq1, &g, 1e-6, &t, opts).unwrap();
        assert_eq!(rep.errored.len(), 1);
        assert_eq!(rep.exit_code(), 4);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()), Some(s));
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert_eq!(Suite::parse("nope"), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Δ(y^v) jumps only where y^v is an integer: inside (k, k + 1) it moves with Λ alone
        #[test]
        fn delta_jumps_only_at_integers(k in 1u64..499, a in 0.01f64..0.49, b in 0.51f64..0.99) {
            let c = ctx(5, 500);
            let (ta, tb) = (k as f64 + a, k as f64 + b);
            prop_assert_eq!(c.psi(ta).unwrap(), c.psi(k as f64).unwrap());
            prop_assert_eq!(c.psi(tb).unwrap(), c.psi(ta).unwrap());
            let d = delta(&c, tb).unwrap() - delta(&c, ta).unwrap();
            prop_assert!(d.abs() <= 2.0 * (tb - ta), "{}", d);
        }
    }
}
