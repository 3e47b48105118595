//! The error terms Δ, Q, Q*, R, R* and their Möbius inversion.
//!
//! For 0 < z ≤ y, Φ(z, y) = 1_{z≥1} and μ_y(log z / log y) = 0, so
//! Q*(z, y) = 0 and Q(z, y) = z (Π(y) − e^{−γ}/log y). The infinite sums
//! defining R and R* therefore split at n = x/y: the head n < x/y is summed
//! term by term, the tail n ≥ x/y in closed form through ∑_{n∈S_y} 1/n = Π(y)^{−1}.

use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::debruijn::indicator;
use crate::error::{domain, Result};
use crate::scalar::{CompensatedSum, Real};

/// Δ(x, y) = Ψ(x, y) − Λ(x, y), x ≥ 1.
pub fn delta<T: Real>(ctx: &Context<T>, x: T) -> Result<T> {
    if !(x >= T::one()) {
        return Err(domain(format!("Δ needs x ≥ 1, got {x}")));
    }
    let psi = ctx.psi(x)?;
    Ok(T::from_count(psi) - ctx.lambda(x)?)
}

/// Q*(x, y) = V*(x, y) − Φ(x, y).
pub fn q_star_error<T: Real>(ctx: &Context<T>, x: T) -> Result<T> {
    ctx.check_x(x)?;
    let u = x.ln() / ctx.ln_y();
    Ok(indicator(x) + x * ctx.mu(u)? - T::from_count(ctx.rough().count_at(x)))
}

/// Q(x, y) = V(x, y) − Φ(x, y).
pub fn q_error<T: Real>(ctx: &Context<T>, x: T) -> Result<T> {
    Ok(q_star_error(ctx, x)? + x * ctx.mertens().v_gap())
}

/// Head of the R-type sums: (∑_{n<t/y} Q*(t/n), ∑_{n<t/y} 1/n).
///
/// Caller guarantees 0 < t ≤ x_limit.
pub(crate) fn r_star_head<T: Real>(ctx: &Context<T>, t: T, ln_t: T) -> (T, T) {
    let smooth = ctx.smooth();
    let count = smooth.count_below_ratio(t);
    let rough = ctx.rough();
    let inv_ln_y = T::one() / ctx.ln_y();
    let mut acc = CompensatedSum::new();
    let mut harmonic = CompensatedSum::new();
    for (&n, &ln_n) in smooth.values()[..count].iter().zip(&smooth.logs()[..count]) {
        let inv_n = T::one() / T::from_count(n);
        let z = t * inv_n;
        let mu = ctx.mu_unchecked((ln_t - ln_n) * inv_ln_y);
        // z > y ≥ 2, so the indicator is 1
        acc.add(T::one() + z * mu - T::from_count(rough.count_at(z)));
        harmonic.add(inv_n);
    }
    (acc.value(), harmonic.value())
}

/// R(t) with the head and the closed-form tail t c_y (Π^{−1} − ∑_{n<t/y} 1/n),
/// c_y = Π(y) − e^{−γ}/log y.
pub(crate) fn r_unchecked<T: Real>(ctx: &Context<T>, t: T, ln_t: T) -> T {
    let (head_star, harmonic) = r_star_head(ctx, t, ln_t);
    let m = ctx.mertens();
    let c = m.v_gap();
    // Q(z) = Q*(z) + z c on the head
    head_star + t * c * harmonic + t * c * (m.inv_pi_y - harmonic)
}

/// R*(x, y) as the finite sum over smooth n < x/y.
pub fn r_star_error<T: Real>(ctx: &Context<T>, x: T) -> Result<T> {
    ctx.check_x(x)?;
    Ok(r_star_head(ctx, x, x.ln()).0)
}

/// R(x, y) = ∑_{n∈S_y} Q(x/n, y).
pub fn r_error<T: Real>(ctx: &Context<T>, x: T) -> Result<T> {
    ctx.check_x(x)?;
    Ok(r_unchecked(ctx, x, x.ln()))
}

/// R*(x, y) through R(x, y) + β_y x.
pub fn r_star_via_rreq<T: Real>(ctx: &Context<T>, x: T) -> Result<T> {
    Ok(r_error(ctx, x)? + ctx.mertens().beta_y * x)
}

/// Q(x) − ∑_{n∈S_y} μ(n) R(x/n), or the starred analogue.
///
/// Terms with n ≥ x/y have R(x/n) = −β_y x/n and R*(x/n) = 0; with
/// ∑_{n∈S_y} μ(n)/n = Π(y) the unstarred tail is −β_y x (Π(y) − ∑_{n<x/y} μ(n)/n).
pub fn mobius_inversion_residual<T: Real>(ctx: &Context<T>, x: T, starred: bool) -> Result<T> {
    ctx.check_x(x)?;
    let smooth = ctx.smooth();
    let count = smooth.count_below_ratio(x);
    let ln_x = x.ln();
    let mut sum = CompensatedSum::new();
    let mut mobius_harmonic = CompensatedSum::new();
    for i in 0..count {
        let mu = smooth.mobius()[i];
        if mu == 0 {
            continue;
        }
        let sign = T::from_i8(mu).expect("±1");
        let n = T::from_count(smooth.values()[i]);
        let t = x / n;
        let ln_t = ln_x - smooth.logs()[i];
        let r = if starred {
            r_star_head(ctx, t, ln_t).0
        } else {
            r_unchecked(ctx, t, ln_t)
        };
        sum.add(sign * r);
        mobius_harmonic.add(sign / n);
    }
    let q = if starred {
        q_star_error(ctx, x)?
    } else {
        let m = ctx.mertens();
        sum.add(-m.beta_y * x * (m.pi_y - mobius_harmonic.value()));
        q_error(ctx, x)?
    };
    Ok(q - sum.value())
}

/// All error terms at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorGridPoint {
    pub x: f64,
    pub y: u64,
    pub u: f64,
    pub delta: f64,
    pub q: f64,
    pub q_star: f64,
    pub r: f64,
    pub r_star: f64,
    pub psi: u64,
    pub phi: u64,
}

pub fn error_grid_point<T: Real>(ctx: &Context<T>, x: T) -> Result<ErrorGridPoint> {
    let q = ctx.query(x)?;
    Ok(ErrorGridPoint {
        x: x.as_f64(),
        y: ctx.y(),
        u: q.u().as_f64(),
        delta: delta(ctx, x)?.as_f64(),
        q: q_error(ctx, x)?.as_f64(),
        q_star: q_star_error(ctx, x)?.as_f64(),
        r: r_error(ctx, x)?.as_f64(),
        r_star: r_star_error(ctx, x)?.as_f64(),
        psi: ctx.psi(x)?,
        phi: ctx.phi(x)?,
    })
}
