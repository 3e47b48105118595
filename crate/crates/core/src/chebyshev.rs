//! Chebyshev series on a finite interval: fitting, Clenshaw evaluation,
//! differentiation and integration.

use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct ChebSeries<T> {
    lo: T,
    hi: T,
    /// f = ∑ c_k T_k(x), x = (2u − lo − hi)/(hi − lo)
    coeffs: Vec<T>,
}

impl<T: Real> ChebSeries<T> {
    pub fn from_coeffs(lo: T, hi: T, coeffs: Vec<T>) -> Self {
        Self { lo, hi, coeffs }
    }

    pub fn constant(lo: T, hi: T, c: T) -> Self {
        Self { lo, hi, coeffs: vec![c] }
    }

    /// Interpolates `f` at the `n` Chebyshev–Gauss points of [lo, hi].
    pub fn fit<F: Fn(T) -> T>(lo: T, hi: T, n: usize, f: F) -> Self {
        let samples: Vec<T> = (0..n)
            .map(|j| {
                let x = T::lit((std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos());
                f(map_from_unit(lo, hi, x))
            })
            .collect();
        Self::from_samples(lo, hi, &samples)
    }

    /// Coefficients from values at the Chebyshev–Gauss points (in the order
    /// produced by [`nodes`]).
    pub fn from_samples(lo: T, hi: T, samples: &[T]) -> Self {
        let n = samples.len();
        let scale = T::lit(2.0 / n as f64);
        let mut coeffs: Vec<T> = (0..n)
            .map(|k| {
                let mut s = T::zero();
                for (j, &fj) in samples.iter().enumerate() {
                    let ang = std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64;
                    s += fj * T::lit(ang.cos());
                }
                s * scale
            })
            .collect();
        coeffs[0] = coeffs[0] * T::lit(0.5);
        Self { lo, hi, coeffs }
    }

    /// The `n` Chebyshev–Gauss points of [lo, hi].
    pub fn nodes(lo: T, hi: T, n: usize) -> Vec<T> {
        (0..n)
            .map(|j| {
                let x = T::lit((std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos());
                map_from_unit(lo, hi, x)
            })
            .collect()
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    #[inline]
    pub fn eval(&self, u: T) -> T {
        let x = (u + u - self.lo - self.hi) / (self.hi - self.lo);
        let x2 = x + x;
        let mut b1 = T::zero();
        let mut b2 = T::zero();
        for &c in self.coeffs[1..].iter().rev() {
            let b0 = c + x2 * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + x * b1 - b2
    }

    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return Self::constant(self.lo, self.hi, T::zero());
        }
        let mut d = vec![T::zero(); n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + T::from_count(2 * k as u64) * self.coeffs[k];
        }
        d[0] = d[0] * T::lit(0.5);
        d.truncate(n - 1);
        let scale = T::lit(2.0) / (self.hi - self.lo);
        Self {
            lo: self.lo,
            hi: self.hi,
            coeffs: d.into_iter().map(|c| c * scale).collect(),
        }
    }

    /// Antiderivative taking the value `at_lo` at the left end.
    pub fn integral(&self, at_lo: T) -> Self {
        let n = self.coeffs.len();
        let c = |k: usize| if k < n { self.coeffs[k] } else { T::zero() };
        let mut out = vec![T::zero(); n + 1];
        out[1] = c(0) - c(2) * T::lit(0.5);
        for (k, slot) in out.iter_mut().enumerate().skip(2) {
            *slot = (c(k - 1) - c(k + 1)) / T::from_count(2 * k as u64);
        }
        let scale = (self.hi - self.lo) * T::lit(0.5);
        for v in &mut out {
            *v = *v * scale;
        }
        // value at x = −1 is ∑ (−1)^k C_k
        let mut left = T::zero();
        for (k, &v) in out.iter().enumerate().skip(1) {
            left += if k % 2 == 0 { v } else { -v };
        }
        out[0] = at_lo - left;
        Self {
            lo: self.lo,
            hi: self.hi,
            coeffs: out,
        }
    }
}

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Vec<T> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite matrix"))
            .expect("nonempty system");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let d = a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / d;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

#[inline]
fn map_from_unit<T: Real>(lo: T, hi: T, x: T) -> T {
    let half = (hi - lo) * T::lit(0.5);
    lo + half + half * x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_reproduces_smooth_function() {
        let s = ChebSeries::<f64>::fit(1.0, 2.0, 24, |u| 1.0 / u);
        for i in 0..=20 {
            let u = 1.0 + i as f64 / 20.0;
            assert!((s.eval(u) - 1.0 / u).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_and_integral_of_exp() {
        let s = ChebSeries::<f64>::fit(0.0, 1.0, 20, f64::exp);
        let d = s.derivative();
        let i = s.integral(1.0);
        for k in 0..=10 {
            let u = k as f64 / 10.0;
            assert!((d.eval(u) - u.exp()).abs() < 1e-11, "{u}");
            assert!((i.eval(u) - u.exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn dense_solve_small_system() {
        let a = vec![vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]];
        let x = solve_dense(a, vec![5.0, 3.0, 6.0]);
        for (v, e) in x.iter().zip([1.4f64, 1.6, 1.8]) {
            assert!((v - e).abs() < 1e-14, "{v} vs {e}");
        }
    }

    #[test]
    fn integral_of_reciprocal_is_log() {
        let s = ChebSeries::<f64>::fit(3.0, 4.0, 24, |u| 1.0 / u).integral(0.0);
        assert!((s.eval(3.7) - (3.7f64 / 3.0).ln()).abs() < 1e-15);
    }
}
