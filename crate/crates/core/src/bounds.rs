//! Explicit bounds on Δ and the propagation of bounds between Q, R and Δ,
//! audited on desk-scale grids.
//!
//! Observed values are computed, not proven: a row with negative margin under
//! the RH bound is a finding about the data, not a defect of the code.

use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::error::{domain, Error, Result};
use crate::error_terms::{delta, q_error, q_star_error, r_error, r_star_error};
use crate::scalar::{frac, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaBoundKind {
    Unconditional,
    Rh,
}

impl DeltaBoundKind {
    pub fn name(self) -> &'static str {
        match self {
            DeltaBoundKind::Unconditional => "unconditional",
            DeltaBoundKind::Rh => "rh",
        }
    }
}

/// Bound on |Δ(x, y)|/x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaBound<T> {
    pub kind: DeltaBoundKind,
    pub y: u64,
    pub value: T,
}

impl<T: Real> DeltaBound<T> {
    /// At least the trivial bound |Δ| ≤ x.
    pub fn is_trivial(&self) -> bool {
        self.value >= T::one()
    }
}

/// `unconditional`: 15.8 (log y)^{1/4} / exp(√(log y / 6.315)), y ≥ 2.
/// `rh`: 1.66 (log y)² / √y, y ≥ 3.
pub fn delta_bound<T: Real>(kind: DeltaBoundKind, y: u64) -> Result<DeltaBound<T>> {
    let min_y = match kind {
        DeltaBoundKind::Unconditional => 2,
        DeltaBoundKind::Rh => 3,
    };
    if y < min_y {
        return Err(domain(format!("{} bound needs y ≥ {min_y}, got {y}", kind.name())));
    }
    let yf = T::from_count(y);
    let l = yf.ln();
    let value = match kind {
        DeltaBoundKind::Unconditional => T::lit(15.8) * l.sqrt().sqrt() / (l / T::lit(6.315)).sqrt().exp(),
        DeltaBoundKind::Rh => T::lit(1.66) * l * l / yf.sqrt(),
    };
    Ok(DeltaBound { kind, y, value })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundAuditRow {
    pub x: f64,
    pub y: u64,
    pub observed: f64,
    pub bound: f64,
    /// bound − observed
    pub margin: f64,
    /// bound ≥ 1, i.e. no better than |Δ| ≤ x
    pub trivial_flag: bool,
}

impl BoundAuditRow {
    fn new<T: Real>(x: T, y: u64, observed: T, bound: T) -> Self {
        Self {
            x: x.as_f64(),
            y,
            observed: observed.as_f64(),
            bound: bound.as_f64(),
            margin: (bound - observed).as_f64(),
            trivial_flag: bound >= T::one(),
        }
    }
}

/// Allowance for quadrature error in Λ when checking |Δ| ≤ x and the
/// trivial bounds on Λ, relative to x.
fn lambda_slack<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(1e4))
}

/// |Δ(x, y)|/x at each x against the bound.
///
/// |Δ| ≤ x follows from the trivial bounds on Ψ and Λ; a point breaking it
/// is reported as an error, never as a row.
pub fn audit_delta<T: Real>(kind: DeltaBoundKind, ctx: &Context<T>, xs: &[T]) -> Result<Vec<BoundAuditRow>> {
    let b = delta_bound::<T>(kind, ctx.y())?;
    xs.iter()
        .map(|&x| {
            let observed = delta(ctx, x)?.abs() / x;
            if observed > T::one() + lambda_slack::<T>() {
                return Err(Error::Certification(format!(
                    "|Δ({x}, {})|/x = {observed} breaks |Δ| ≤ x",
                    ctx.y()
                )));
            }
            Ok(BoundAuditRow::new(x, ctx.y(), observed, b.value))
        })
        .collect()
}

/// Log-spaced points in [lo, hi] plus integer and half-integer points around
/// y and y², where the regimes change. Sorted, deduplicated.
pub fn audit_grid(lo: f64, hi: f64, n: usize, y: u64) -> Result<Vec<f64>> {
    if !(lo >= 1.0) || !(hi >= lo) || n == 0 {
        return Err(domain(format!("bad audit grid [{lo}, {hi}] with {n} points")));
    }
    let mut xs: Vec<f64> = if n == 1 {
        vec![lo]
    } else {
        let (a, b) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    };
    let yf = y as f64;
    for c in [yf, yf * yf] {
        xs.extend([c - 1.0, c - 0.5, c, c + 0.5, c + 1.0]);
    }
    xs.retain(|&x| x >= lo && x <= hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    Ok(xs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationStatus {
    /// hypothesis and every conclusion hold on the grid
    Verified,
    /// hypothesis fails on the grid; conclusions were not tested
    HypothesisViolated,
    /// hypothesis holds but a conclusion fails
    ConclusionViolated,
}

/// One point of a propagation audit: the hypothesis quantity and both
/// conclusions, each as observed/x against its bound/x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationRow {
    pub hypothesis: BoundAuditRow,
    pub first: BoundAuditRow,
    pub second: BoundAuditRow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub y: u64,
    pub f: f64,
    /// whether f was the grid maximum of the hypothesis quantity
    pub self_calibrated: bool,
    /// largest observed hypothesis quantity (|Q|/x, |Q*|/x or |Δ|/(x ρ(u)))
    pub hypothesis_max: f64,
    pub rows: Vec<PropagationRow>,
    pub status: PropagationStatus,
}

impl PropagationReport {
    pub fn min_margin(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| [r.first.margin, r.second.margin])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Relative allowance for rounding in the computed conclusions.
const CONCLUSION_SLACK: f64 = 1e-9;

struct Sample<T> {
    x: T,
    hyp: T,
    hyp_scale: T,
    first: T,
    second: T,
}

fn finish<T: Real>(
    y: u64,
    f: Option<T>,
    samples: Vec<Sample<T>>,
    first_factor: T,
    second_factor: T,
) -> Result<PropagationReport> {
    if samples.is_empty() {
        return Err(domain("propagation grid is empty"));
    }
    let hypothesis_max = samples
        .iter()
        .map(|s| s.hyp / s.hyp_scale)
        .fold(T::zero(), |m, v| if v > m { v } else { m });
    let self_calibrated = f.is_none();
    let f = f.unwrap_or(hypothesis_max);
    if !(f >= T::zero()) {
        return Err(domain(format!("f(y) = {f} must be non-negative")));
    }
    let slack = T::lit(CONCLUSION_SLACK);
    let mut hypothesis_ok = true;
    let mut conclusions_ok = true;
    let rows = samples
        .iter()
        .map(|s| {
            let hyp_bound = f * s.hyp_scale;
            hypothesis_ok &= s.hyp / s.hyp_scale <= f;
            let (b1, b2) = (f * first_factor, f * second_factor);
            conclusions_ok &= s.first <= b1 + slack && s.second <= b2 + slack;
            PropagationRow {
                hypothesis: BoundAuditRow::new(s.x, y, s.hyp, hyp_bound),
                first: BoundAuditRow::new(s.x, y, s.first, b1),
                second: BoundAuditRow::new(s.x, y, s.second, b2),
            }
        })
        .collect();
    let status = if !hypothesis_ok {
        PropagationStatus::HypothesisViolated
    } else if conclusions_ok {
        PropagationStatus::Verified
    } else {
        PropagationStatus::ConclusionViolated
    };
    Ok(PropagationReport {
        y,
        f: f.as_f64(),
        self_calibrated,
        hypothesis_max: hypothesis_max.as_f64(),
        rows,
        status,
    })
}

/// Hypothesis |Q(x)| ≤ x f on the grid (|Q*| if `starred`); conclusions
/// |R(x)| ≤ x f Π(y)^{−1} (resp. R*) and |Δ(x)| ≤ 2 x f Π(y)^{−1}.
///
/// `f = None` uses the grid maximum of |Q|/x.
pub fn propagate_corexact<T: Real>(
    ctx: &Context<T>,
    f: Option<T>,
    xs: &[T],
    starred: bool,
) -> Result<PropagationReport> {
    let samples = xs
        .iter()
        .map(|&x| {
            let (q, r) = if starred {
                (q_star_error(ctx, x)?, r_star_error(ctx, x)?)
            } else {
                (q_error(ctx, x)?, r_error(ctx, x)?)
            };
            // Δ is defined for x ≥ 1 only; below, Ψ = Λ = 0
            let d = if x >= T::one() { delta(ctx, x)? } else { T::zero() };
            Ok(Sample {
                x,
                hyp: q.abs() / x,
                hyp_scale: T::one(),
                first: r.abs() / x,
                second: d.abs() / x,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let inv_pi = ctx.mertens().inv_pi_y;
    finish(ctx.y(), f, samples, inv_pi, T::lit(2.0) * inv_pi)
}

/// Hypothesis |Δ(x)| ≤ x f ρ(u) on the grid; conclusions |R*(x)| ≤ x f and
/// |Q*(x)| ≤ x f Π(y)^{−1}.
///
/// `f = None` uses the grid maximum of |Δ|/(x ρ(u)).
pub fn propagate_corexact2<T: Real>(ctx: &Context<T>, f: Option<T>, xs: &[T]) -> Result<PropagationReport> {
    let samples = xs
        .iter()
        .map(|&x| {
            if !(x >= T::one()) {
                return Err(domain(format!("Δ needs x ≥ 1, got {x}")));
            }
            let rho = ctx.tables().dickman.value(ctx.query(x)?.u())?;
            Ok(Sample {
                x,
                hyp: delta(ctx, x)?.abs() / x,
                hyp_scale: rho,
                first: r_star_error(ctx, x)?.abs() / x,
                second: q_star_error(ctx, x)?.abs() / x,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    finish(ctx.y(), f, samples, T::one(), ctx.mertens().inv_pi_y)
}

/// The four trivial inequalities at one point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrivialFlags {
    pub psi_nonnegative: bool,
    pub psi_at_most_floor: bool,
    pub lambda_at_least_minus_frac: bool,
    pub lambda_at_most_floor: bool,
}

impl TrivialFlags {
    pub fn all(&self) -> bool {
        self.psi_nonnegative && self.psi_at_most_floor && self.lambda_at_least_minus_frac && self.lambda_at_most_floor
    }
}

/// 0 ≤ Ψ(x, y) ≤ ⌊x⌋ and −{x} ≤ Λ(x, y) ≤ ⌊x⌋, with Λ allowed a quadrature
/// error of 1e-9 x.
pub fn trivial_bounds_check<T: Real>(ctx: &Context<T>, x: T) -> Result<TrivialFlags> {
    if !(x >= T::one()) {
        return Err(domain(format!("trivial bounds need x ≥ 1, got {x}")));
    }
    let psi = T::from_count(ctx.psi(x)?);
    let lambda = ctx.lambda(x)?;
    let fl = x.floor();
    let slack = lambda_slack::<T>() * x;
    Ok(TrivialFlags {
        psi_nonnegative: psi >= T::zero(),
        psi_at_most_floor: psi <= fl,
        lambda_at_least_minus_frac: lambda >= -frac(x) - slack,
        lambda_at_most_floor: lambda <= fl + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caps::ResourceCaps;
    use crate::context::Tables;
    use std::sync::{Arc, OnceLock};

    fn tables() -> Arc<Tables<f64>> {
        static T: OnceLock<Arc<Tables<f64>>> = OnceLock::new();
        T.get_or_init(|| Arc::new(Tables::new(ResourceCaps::default()).unwrap()))
            .clone()
    }

    fn ctx(y: u64, limit: u64) -> Context<f64> {
        Context::new(tables(), y, limit).unwrap()
    }

    #[test]
    fn delta_bound_values() {
        let rh = delta_bound::<f64>(DeltaBoundKind::Rh, 1_000_000).unwrap();
        let l = 1e6f64.ln();
        assert!((rh.value - 1.66 * l * l / 1e3).abs() < 1e-15);
        assert!((rh.value - 0.3169).abs() < 1e-4 && !rh.is_trivial());
        assert!(delta_bound::<f64>(DeltaBoundKind::Unconditional, 1_000_000).unwrap().is_trivial());
        let r3 = delta_bound::<f64>(DeltaBoundKind::Rh, 3).unwrap();
        assert!((r3.value - 1.66 * 3f64.ln().powi(2) / 3f64.sqrt()).abs() < 1e-15);
        assert!(r3.is_trivial());
        assert!(delta_bound::<f64>(DeltaBoundKind::Rh, 2).is_err());
        assert!(delta_bound::<f64>(DeltaBoundKind::Unconditional, 1).is_err());
        let u = delta_bound::<f64>(DeltaBoundKind::Unconditional, 2).unwrap();
        let l2 = 2f64.ln();
        assert!((u.value - 15.8 * l2.powf(0.25) / (l2 / 6.315).sqrt().exp()).abs() < 1e-13);
    }

    #[test]
    fn delta_audit_below_y() {
        let c = ctx(101, 1000);
        let rows = audit_delta(DeltaBoundKind::Rh, &c, &[1.0, 50.5, 101.0]).unwrap();
        for r in rows {
            assert_eq!(r.observed, 0.0);
            assert_eq!(r.margin, r.bound);
        }
    }

    #[test]
    fn unconditional_audit_is_trivial() {
        let c = ctx(1000, 100_000);
        let xs = audit_grid(10.0, 1e5, 30, 1000).unwrap();
        for r in audit_delta(DeltaBoundKind::Unconditional, &c, &xs).unwrap() {
            assert!(r.trivial_flag && r.margin >= 0.0, "{r:?}");
        }
    }

    #[test]
    fn grid_refines_near_regime_changes() {
        let xs = audit_grid(10.0, 1e4, 5, 13).unwrap();
        for x in [12.5, 13.0, 13.5, 168.5, 169.0, 169.5] {
            assert!(xs.contains(&x));
        }
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert!(audit_grid(0.5, 10.0, 3, 2).is_err());
        assert!(audit_grid(10.0, 1.0, 3, 2).is_err());
    }

    #[test]
    fn corexact_self_calibrated() {
        let c = ctx(13, 10_000);
        let xs = audit_grid(1.0, 1e4, 40, 13).unwrap();
        for starred in [false, true] {
            let rep = propagate_corexact(&c, None, &xs, starred).unwrap();
            assert_eq!(rep.status, PropagationStatus::Verified, "{starred}");
            assert!(rep.self_calibrated);
        }
    }

    #[test]
    fn corexact_below_y_is_the_gap() {
        let c = ctx(13, 100);
        let rep = propagate_corexact(&c, None, &[0.5, 2.0, 12.5], false).unwrap();
        let gap = c.mertens().v_gap();
        for r in &rep.rows {
            assert!((r.hypothesis.observed - gap.abs()).abs() < 1e-14);
        }
    }

    #[test]
    fn corexact2_cases() {
        let c = ctx(13, 10_000);
        let rep = propagate_corexact2(&c, Some(0.0), &[1.0, 5.5, 13.0]).unwrap();
        assert_eq!(rep.status, PropagationStatus::Verified);
        let xs = audit_grid(1.0, 1e4, 40, 13).unwrap();
        let rep = propagate_corexact2(&c, None, &xs).unwrap();
        assert_eq!(rep.status, PropagationStatus::Verified);
        assert!(rep.hypothesis_max.is_finite() && rep.hypothesis_max > 0.0);
        let small = propagate_corexact2(&c, Some(rep.hypothesis_max / 2.0), &xs).unwrap();
        assert_eq!(small.status, PropagationStatus::HypothesisViolated);
    }

    #[test]
    fn trivial_flags() {
        let c = ctx(3, 100);
        assert!(trivial_bounds_check(&c, 7.5).unwrap().all());
        assert!(trivial_bounds_check(&c, 3.5).unwrap().all());
        assert!((c.lambda(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(c.psi(1.0).unwrap(), 1);
        for y in [2u64, 7] {
            let c = ctx(y, 100);
            assert!(trivial_bounds_check(&c, 1.0).unwrap().all());
        }
        assert!(trivial_bounds_check(&c, 0.5).is_err());
    }
}
