//! Breakpoint-aware adaptive Gauss–Legendre quadrature.
//!
//! Every integrand in this crate is smooth between known jump points (the v
//! where y^v crosses an integer, panel joints of ρ and ω). The integrator is
//! told about those points and never places a node on, or a panel across, one.

use crate::error::{domain, Error, Result};
use crate::scalar::{CompensatedSum, Real};

pub const DEFAULT_ORDER: usize = 16;
pub const DEFAULT_MAX_DEPTH: usize = 40;

/// Gauss–Legendre nodes and weights on [−1, 1].
#[derive(Clone, Debug)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    /// Builds the n-point rule by Newton iteration on P_n (computed in f64).
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(domain("quadrature order must be positive"));
        }
        let n = order;
        let mut nodes = vec![0f64; n];
        let mut weights = vec![0f64; n];
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-17 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Applies the rule on [a, b]; returns (integral, ∫|f| estimate).
    #[inline]
    pub fn apply<F: Fn(T) -> T>(&self, a: T, b: T, f: &F) -> (T, T) {
        let half = (b - a) * T::lit(0.5);
        let mid = a + half;
        let mut s = T::zero();
        let mut m = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            s += w * v;
            m += w * v.abs();
        }
        (s * half, m * half.abs())
    }
}

impl<T: Real> Default for QuadratureRule<T> {
    fn default() -> Self {
        Self::gauss_legendre(DEFAULT_ORDER).expect("default order is valid")
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// An integrand on [lo, hi] that is smooth between consecutive breakpoints.
pub struct PiecewiseIntegrand<T, F> {
    lo: T,
    hi: T,
    breakpoints: Vec<T>,
    f: F,
}

impl<T: Real, F: Fn(T) -> T> PiecewiseIntegrand<T, F> {
    /// Breakpoints must be strictly increasing and strictly inside (lo, hi).
    pub fn new(lo: T, hi: T, breakpoints: Vec<T>, f: F) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(domain(format!("invalid integration domain [{lo}, {hi}]")));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(domain(format!(
                "breakpoints not strictly increasing near {}",
                w[0]
            )));
        }
        if let Some(b) = breakpoints.iter().find(|&&b| !(b > lo && b < hi)) {
            return Err(domain(format!(
                "breakpoint {b} is not strictly inside ({lo}, {hi})"
            )));
        }
        Ok(Self {
            lo,
            hi,
            breakpoints,
            f,
        })
    }

    /// Like [`new`](Self::new) but first discards candidates outside (lo, hi),
    /// sorts and deduplicates.
    pub fn with_candidates<I: IntoIterator<Item = T>>(lo: T, hi: T, candidates: I, f: F) -> Result<Self> {
        let mut bps: Vec<T> = candidates.into_iter().filter(|&b| b > lo && b < hi).collect();
        bps.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        bps.dedup();
        Self::new(lo, hi, bps, f)
    }

    pub fn domain(&self) -> (T, T) {
        (self.lo, self.hi)
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> usize {
        self.breakpoints.len() + 1
    }

    pub fn eval(&self, v: T) -> T {
        (self.f)(v)
    }

    fn segments(&self) -> impl Iterator<Item = (T, T)> + '_ {
        let mut prev = self.lo;
        self.breakpoints
            .iter()
            .copied()
            .chain(std::iter::once(self.hi))
            .map(move |b| {
                let seg = (prev, b);
                prev = b;
                seg
            })
    }
}

/// Integrates piece by piece with the default bisection depth.
pub fn integrate_piecewise<T: Real, F: Fn(T) -> T>(
    f: &PiecewiseIntegrand<T, F>,
    rule: &QuadratureRule<T>,
    tol: T,
) -> Result<T> {
    integrate_piecewise_with_depth(f, rule, tol, DEFAULT_MAX_DEPTH)
}

/// On every piece the rule is compared against its two halves and the piece
/// is bisected until the two agree within tol/(number of pieces), halving the
/// budget at each split. A floor of a few ulps of ∫|f| stops the refinement
/// from chasing rounding noise.
pub fn integrate_piecewise_with_depth<T: Real, F: Fn(T) -> T>(
    f: &PiecewiseIntegrand<T, F>,
    rule: &QuadratureRule<T>,
    tol: T,
    max_depth: usize,
) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(domain("quadrature tolerance must be positive"));
    }
    if f.lo == f.hi {
        return Ok(T::zero());
    }
    let local = tol / T::from_count(f.pieces() as u64);
    let floor_scale = T::epsilon() * T::lit(64.0);
    let mut total = CompensatedSum::new();
    let mut stack: Vec<(T, T, T, T, usize)> = Vec::new();
    for (a, b) in f.segments() {
        if a == b {
            continue;
        }
        let (whole, _) = rule.apply(a, b, &f.f);
        stack.push((a, b, whole, local, 0));
        while let Some((a, b, whole, budget, depth)) = stack.pop() {
            let mid = a + (b - a) * T::lit(0.5);
            let (left, ml) = rule.apply(a, mid, &f.f);
            let (right, mr) = rule.apply(mid, b, &f.f);
            let refined = left + right;
            let change = (refined - whole).abs();
            if change <= budget.max(floor_scale * (ml + mr)) {
                total.add(refined);
                continue;
            }
            if !change.is_finite() || depth >= max_depth || !(a < mid && mid < b) {
                return Err(Error::Numerical {
                    lo: a.as_f64(),
                    hi: b.as_f64(),
                    change: change.as_f64(),
                });
            }
            let half = budget * T::lit(0.5);
            stack.push((mid, b, right, half, depth + 1));
            stack.push((a, mid, left, half, depth + 1));
        }
    }
    Ok(total.value())
}
