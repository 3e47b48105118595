//! Dickman's ρ and Buchstab's ω as per-unit-panel Chebyshev tables.
//!
//! Definitions used:
//!
//! * ρ(u) = 1 on [0, 1], ρ(u) = 0 for u < 0, and u ρ′(u) = −ρ(u − 1) for u > 1.
//! * ω(u) = 1/u on [1, 2], (u ω(u))′ = ω(u − 1) for u ≥ 2, and ω(u) = 0 for u < 1.
//!
//! Each panel [k, k+1] is built from the previous one by integrating the
//! delay term exactly in Chebyshev space:
//!
//! ```text
//! u ρ(u) = ∫_{u−1}^u ρ(t) dt            (collocation, no cancellation)
//! u ω(u) = k ω(k) + ∫_k^u ω(t−1) dt
//! ```
//!
//! A table is certified by rebuilding it at twice the degree and bounding the
//! difference on a dense sample of every panel.

use serde::{Deserialize, Serialize};

use crate::caps::ResourceCaps;
use crate::chebyshev::{solve_dense, ChebSeries};
use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_piecewise, PiecewiseIntegrand, QuadratureRule};
use crate::scalar::{Real, EXP_NEG_GAMMA};

pub const DEFAULT_DEGREE: usize = 24;
pub const DEFAULT_ACCURACY: f64 = 1e-12;
pub const DEFAULT_U_MAX: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionKind {
    Dickman,
    Buchstab,
}

#[derive(Clone, Debug)]
pub struct SpecialFunctionTable<T> {
    kind: FunctionKind,
    u_max: T,
    /// left end of `panels[0]`: 0 for ρ, 1 for ω
    start: usize,
    panels: Vec<ChebSeries<T>>,
    derivatives: Vec<ChebSeries<T>>,
    target_accuracy: T,
    certified_error: T,
}

impl<T: Real> SpecialFunctionTable<T> {
    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn u_max(&self) -> T {
        self.u_max
    }

    pub fn target_accuracy(&self) -> T {
        self.target_accuracy
    }

    /// Largest difference observed against the double-degree rebuild.
    pub fn certified_error(&self) -> T {
        self.certified_error
    }

    pub fn degree(&self) -> usize {
        self.panels.last().map_or(0, |p| p.coeffs().len() - 1)
    }

    fn check(&self, u: T) -> Result<()> {
        if u.is_nan() || u > self.u_max {
            return Err(domain(format!(
                "u = {u} outside the {:?} table range (u_max = {})",
                self.kind, self.u_max
            )));
        }
        Ok(())
    }

    #[inline]
    fn panel_index(&self, u: T) -> usize {
        let k = u.floor().to_usize().unwrap_or(0) - self.start;
        k.min(self.panels.len() - 1)
    }

    /// Table value with the extension conventions (0 below the support,
    /// 1 on [0,1) for ρ). Caller guarantees u ≤ u_max.
    #[inline]
    pub(crate) fn value_unchecked(&self, u: T) -> T {
        match self.kind {
            FunctionKind::Dickman => {
                if u < T::zero() {
                    T::zero()
                } else if u < T::one() {
                    T::one()
                } else {
                    // the first panel may overshoot 1 by an ulp at u = 1
                    self.panels[self.panel_index(u)].eval(u).min(T::one())
                }
            }
            FunctionKind::Buchstab => {
                if u < T::one() {
                    T::zero()
                } else {
                    self.panels[self.panel_index(u)].eval(u)
                }
            }
        }
    }

    /// Derivative of the panel polynomial (right-hand at joints).
    pub(crate) fn panel_derivative_unchecked(&self, u: T) -> T {
        let lower = T::from_count(self.start as u64);
        if u < lower || (self.kind == FunctionKind::Dickman && u < T::one()) {
            return T::zero();
        }
        self.derivatives[self.panel_index(u)].eval(u)
    }

    pub fn value(&self, u: T) -> Result<T> {
        self.check(u)?;
        Ok(self.value_unchecked(u))
    }

    /// Derivative of the stored panel polynomial, for consistency checks
    /// against the defining delay equations.
    pub fn panel_derivative(&self, u: T) -> Result<T> {
        self.check(u)?;
        Ok(self.panel_derivative_unchecked(u))
    }
}

fn validate<T: Real>(u_max: T, accuracy: T, caps: &ResourceCaps) -> Result<usize> {
    if !(u_max >= T::lit(2.0)) {
        return Err(domain(format!("u_max = {u_max} must be at least 2")));
    }
    if u_max.as_f64() > caps.max_u {
        return Err(domain(format!(
            "u_max = {u_max} exceeds the configured maximum {}",
            caps.max_u
        )));
    }
    if !(accuracy >= T::lit(1e-14)) {
        return Err(domain(format!("accuracy {accuracy} is below 1e-14")));
    }
    Ok(u_max.ceil().to_usize().expect("finite u_max"))
}

fn dickman_panels<T: Real>(top: usize, degree: usize) -> Vec<ChebSeries<T>> {
    // Collocation for u ρ(u) − ∫_k^u ρ = ∫_{u−1}^k ρ on [k, k+1]. Every term is
    // nonnegative, so relative accuracy survives the super-exponential decay.
    let n = degree + 1;
    let xs: Vec<T> = ChebSeries::nodes(-T::one(), T::one(), n);
    // ∫_{-1}^{x_j} T_i, then halved for the unit-width panel
    let int_basis: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut e = vec![T::zero(); i + 1];
            e[i] = T::one();
            let s = ChebSeries::from_coeffs(-T::one(), T::one(), e).integral(T::zero());
            xs.iter().map(|&x| s.eval(x) * T::lit(0.5)).collect()
        })
        .collect();
    let cheb_basis: Vec<Vec<T>> = xs
        .iter()
        .map(|&x| {
            let mut row = vec![T::one(); n];
            if n > 1 {
                row[1] = x;
            }
            for i in 2..n {
                row[i] = (x + x) * row[i - 1] - row[i - 2];
            }
            row
        })
        .collect();

    let mut panels = vec![ChebSeries::constant(T::zero(), T::one(), T::one())];
    for k in 1..top {
        let prev = &panels[k - 1];
        let (lo, hi) = (T::from_count(k as u64), T::from_count(k as u64 + 1));
        let prev_int = prev.integral(T::zero());
        let total = prev_int.eval(lo);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for j in 0..n {
            let u = lo + (xs[j] + T::one()) * T::lit(0.5);
            a.push((0..n).map(|i| u * cheb_basis[j][i] - int_basis[i][j]).collect());
            b.push((total - prev_int.eval(u - T::one())).max(T::zero()));
        }
        panels.push(ChebSeries::from_coeffs(lo, hi, solve_dense(a, b)));
    }
    panels
}

fn buchstab_panels<T: Real>(top: usize, degree: usize) -> Vec<ChebSeries<T>> {
    let mut panels = vec![ChebSeries::fit(T::one(), T::lit(2.0), degree + 1, |u| T::one() / u)];
    for k in 2..top {
        let prev = &panels[k - 2];
        let (lo, hi) = (T::from_count(k as u64), T::from_count(k as u64 + 1));
        let u_omega_at_k = lo * prev.eval(lo);
        let delay = ChebSeries::fit(lo, hi, degree, |t| prev.eval(t - T::one()));
        let u_omega = delay.integral(u_omega_at_k);
        panels.push(ChebSeries::fit(lo, hi, degree + 1, |u| u_omega.eval(u) / u));
    }
    panels
}

fn certify<T: Real>(
    kind: FunctionKind,
    panels: &[ChebSeries<T>],
    reference: &[ChebSeries<T>],
    accuracy: T,
) -> Result<T> {
    let mut worst = T::zero();
    for (k, (p, r)) in panels.iter().zip(reference).enumerate() {
        for i in 0..=32 {
            let u = p.lo() + (p.hi() - p.lo()) * T::from_count(i) / T::lit(32.0);
            worst = worst.max((p.eval(u) - r.eval(u)).abs());
        }
        if let Some(next) = panels.get(k + 1) {
            worst = worst.max((p.eval(p.hi()) - next.eval(next.lo())).abs());
        }
    }
    if !(worst <= accuracy) {
        return Err(Error::Certification(format!(
            "{kind:?} table error {worst:e} exceeds target {accuracy:e}"
        )));
    }
    Ok(worst)
}

fn assemble<T: Real>(
    kind: FunctionKind,
    start: usize,
    top: usize,
    panels: Vec<ChebSeries<T>>,
    reference: Vec<ChebSeries<T>>,
    accuracy: T,
) -> Result<SpecialFunctionTable<T>> {
    let certified_error = certify(kind, &panels, &reference, accuracy)?;
    let derivatives = panels.iter().map(ChebSeries::derivative).collect();
    Ok(SpecialFunctionTable {
        kind,
        u_max: T::from_count(top as u64),
        start,
        panels,
        derivatives,
        target_accuracy: accuracy,
        certified_error,
    })
}

/// Builds ρ on [0, ⌈u_max⌉] with the default panel degree.
pub fn build_dickman<T: Real>(u_max: T, accuracy: T, caps: &ResourceCaps) -> Result<SpecialFunctionTable<T>> {
    build_dickman_with_degree(u_max, accuracy, DEFAULT_DEGREE, caps)
}

pub fn build_dickman_with_degree<T: Real>(
    u_max: T,
    accuracy: T,
    degree: usize,
    caps: &ResourceCaps,
) -> Result<SpecialFunctionTable<T>> {
    let top = validate(u_max, accuracy, caps)?;
    let panels = dickman_panels(top, degree);
    let reference = dickman_panels(top, 2 * degree);
    assemble(FunctionKind::Dickman, 0, top, panels, reference, accuracy)
}

/// Builds ω on [1, ⌈u_max⌉] with the default panel degree.
pub fn build_buchstab<T: Real>(u_max: T, accuracy: T, caps: &ResourceCaps) -> Result<SpecialFunctionTable<T>> {
    build_buchstab_with_degree(u_max, accuracy, DEFAULT_DEGREE, caps)
}

pub fn build_buchstab_with_degree<T: Real>(
    u_max: T,
    accuracy: T,
    degree: usize,
    caps: &ResourceCaps,
) -> Result<SpecialFunctionTable<T>> {
    let top = validate(u_max, accuracy, caps)?;
    let panels = buchstab_panels(top, degree);
    let reference = buchstab_panels(top, 2 * degree);
    assemble(FunctionKind::Buchstab, 1, top, panels, reference, accuracy)
}

fn expect_kind<T>(table: &SpecialFunctionTable<T>, kind: FunctionKind) -> Result<()> {
    if table.kind != kind {
        return Err(domain(format!("expected a {kind:?} table, got {:?}", table.kind)));
    }
    Ok(())
}

/// ρ(u).
pub fn rho<T: Real>(u: T, table: &SpecialFunctionTable<T>) -> Result<T> {
    expect_kind(table, FunctionKind::Dickman)?;
    table.value(u)
}

/// ρ′(u), right-continuous at u = 0 and u = 1.
pub fn rho_prime<T: Real>(u: T, table: &SpecialFunctionTable<T>) -> Result<T> {
    expect_kind(table, FunctionKind::Dickman)?;
    table.check(u)?;
    Ok(rho_prime_unchecked(u, table))
}

#[inline]
pub(crate) fn rho_prime_unchecked<T: Real>(u: T, table: &SpecialFunctionTable<T>) -> T {
    if u < T::one() {
        T::zero()
    } else {
        -table.value_unchecked(u - T::one()) / u
    }
}

/// ω(u), zero for u < 1.
pub fn omega<T: Real>(u: T, table: &SpecialFunctionTable<T>) -> Result<T> {
    expect_kind(table, FunctionKind::Buchstab)?;
    table.value(u)
}

/// ω(u) − e^{−γ}; equals −e^{−γ} for u < 1.
pub fn omega_minus_egamma<T: Real>(u: T, table: &SpecialFunctionTable<T>) -> Result<T> {
    Ok(omega(u, table)? - T::lit(EXP_NEG_GAMMA))
}

/// ρ(u) + ∫_0^u ρ(v) ω(u−v) dv − 1, which vanishes identically.
pub fn dickman_buchstab_convolution_residual<T: Real>(
    u: T,
    dickman: &SpecialFunctionTable<T>,
    buchstab: &SpecialFunctionTable<T>,
    rule: &QuadratureRule<T>,
    tol: T,
) -> Result<T> {
    expect_kind(dickman, FunctionKind::Dickman)?;
    expect_kind(buchstab, FunctionKind::Buchstab)?;
    if !(u >= T::zero()) {
        return Err(domain(format!("u = {u} must be nonnegative")));
    }
    dickman.check(u)?;
    buchstab.check(u)?;
    let rho_u = dickman.value_unchecked(u);
    // ω(u−v) vanishes for v > u − 1
    let upper = u - T::one();
    if upper <= T::zero() {
        return Ok(rho_u - T::one());
    }
    let top = u.ceil().to_u64().unwrap_or(0);
    // joints of ρ at integers v, joints of ω at v = u − k
    let candidates = (1..=top).flat_map(|k| {
        let k = T::from_count(k);
        [k, u - k]
    });
    let integrand = PiecewiseIntegrand::with_candidates(T::zero(), upper, candidates, |v: T| {
        dickman.value_unchecked(v) * buchstab.value_unchecked(u - v)
    })?;
    let integral = integrate_piecewise(&integrand, rule, tol)?;
    Ok(rho_u + integral - T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tables() -> (SpecialFunctionTable<f64>, SpecialFunctionTable<f64>) {
        let caps = ResourceCaps::default();
        (
            build_dickman(50.0, 1e-12, &caps).unwrap(),
            build_buchstab(50.0, 1e-12, &caps).unwrap(),
        )
    }

    #[test]
    fn dickman_values() {
        let (d, _) = tables();
        assert_eq!(rho(0.5, &d).unwrap(), 1.0);
        assert_eq!(rho(0.0, &d).unwrap(), 1.0);
        assert_eq!(rho(-0.1, &d).unwrap(), 0.0);
        assert!((rho(2.0, &d).unwrap() - (1.0 - 2f64.ln())).abs() < 1e-14);
        assert!((rho(1.5, &d).unwrap() - (1.0 - 1.5f64.ln())).abs() < 1e-15);
        assert!(rho(50.5, &d).is_err());
    }

    #[test]
    fn dickman_on_two_three_matches_dilogarithm_form() {
        // ρ(u) = 1 − (1 − log(u−1)) log u + Li₂(1−u) + π²/12 on [2,3]
        fn li2_small(z: f64) -> f64 {
            (1..200).map(|k| z.powi(k) / (k * k) as f64).sum()
        }
        // Landen: Li₂(z) = −Li₂(z/(z−1)) − ½ log²(1−z) for z < 0
        fn li2(z: f64) -> f64 {
            -li2_small(z / (z - 1.0)) - 0.5 * (1.0 - z).ln().powi(2)
        }
        let (d, _) = tables();
        for u in [2.0, 2.25, 2.5, 2.9] {
            let exact = 1.0 - (1.0 - (u - 1.0f64).ln()) * u.ln() + li2(1.0 - u)
                + std::f64::consts::PI.powi(2) / 12.0;
            assert!((rho(u, &d).unwrap() - exact).abs() < 1e-13, "u = {u}");
        }
    }

    #[test]
    fn rho_prime_conventions() {
        let (d, _) = tables();
        assert_eq!(rho_prime(0.5, &d).unwrap(), 0.0);
        assert_eq!(rho_prime(0.0, &d).unwrap(), 0.0);
        assert_eq!(rho_prime(-1.0, &d).unwrap(), 0.0);
        assert_eq!(rho_prime(1.0, &d).unwrap(), -1.0);
        assert!((rho_prime(2.0, &d).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn buchstab_values() {
        let (_, b) = tables();
        assert!((omega(1.5, &b).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(omega(0.5, &b).unwrap(), 0.0);
        let expect = (1.0 + 1.5f64.ln()) / 2.5;
        assert!((omega(2.5, &b).unwrap() - expect).abs() < 1e-14);
        assert_eq!(omega_minus_egamma(0.0, &b).unwrap(), -EXP_NEG_GAMMA);
        assert!((omega_minus_egamma(1.5, &b).unwrap() - (2.0 / 3.0 - EXP_NEG_GAMMA)).abs() < 1e-15);
        assert!(omega_minus_egamma(40.0, &b).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn monotone_positive_dickman() {
        let (d, _) = tables();
        let mut prev = 1.0;
        for i in 0..=500 {
            let v = rho(i as f64 * 0.1, &d).unwrap();
            assert!(v > 0.0 && v <= prev, "u = {}", i as f64 * 0.1);
            prev = v;
        }
    }

    #[test]
    fn dde_residuals() {
        let (d, b) = tables();
        for i in 11..300 {
            let u = i as f64 * 0.1 + 0.013;
            let lhs = u * d.panel_derivative(u).unwrap() + rho(u - 1.0, &d).unwrap();
            assert!(lhs.abs() <= 1e-11, "dickman u = {u}: {lhs:e}");
        }
        let h = 1e-5;
        for i in 21..300 {
            let u = i as f64 * 0.1 + 0.013;
            let fd = ((u + h) * omega(u + h, &b).unwrap() - (u - h) * omega(u - h, &b).unwrap()) / (2.0 * h);
            let r = fd - omega(u - 1.0, &b).unwrap();
            assert!(r.abs() <= 1e-8, "buchstab u = {u}: {r:e}");
        }
    }

    #[test]
    fn build_validation() {
        let caps = ResourceCaps::default();
        assert!(matches!(build_dickman(60.0f64, 1e-12, &caps), Err(Error::Domain(_))));
        assert!(matches!(build_dickman(1.5f64, 1e-12, &caps), Err(Error::Domain(_))));
        assert!(matches!(build_buchstab(10.0f64, 1e-16, &caps), Err(Error::Domain(_))));
        // a degree too low for the requested accuracy fails certification
        assert!(matches!(
            build_dickman_with_degree(10.0f64, 1e-14, 4, &caps),
            Err(Error::Certification(_))
        ));
    }

    #[test]
    fn f32_tables_work() {
        let caps = ResourceCaps::default();
        let d = build_dickman(20.0f32, 1e-5, &caps).unwrap();
        let b = build_buchstab(20.0f32, 1e-5, &caps).unwrap();
        assert!((rho(2.0f32, &d).unwrap() - (1.0 - 2f32.ln())).abs() < 1e-6);
        assert!((omega(1.5f32, &b).unwrap() - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn convolution_identity_small_cases() {
        let (d, b) = tables();
        let rule = QuadratureRule::default();
        assert_eq!(dickman_buchstab_convolution_residual(0.5, &d, &b, &rule, 1e-13).unwrap(), 0.0);
        let r = dickman_buchstab_convolution_residual(2.0, &d, &b, &rule, 1e-13).unwrap();
        assert!(r.abs() < 1e-10);
        let r = dickman_buchstab_convolution_residual(10.0, &d, &b, &rule, 1e-13).unwrap();
        assert!(r.abs() < 1e-10);
    }
}
