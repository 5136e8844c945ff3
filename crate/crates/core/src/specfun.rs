//! Scalar special functions: complementary error function, Hermite and
//! generalized Laguerre polynomials, and the univariate generating function
//! `eta_2M(x) = pi^{-1/2} L_{M-1}^{(1/2)}(x^2) exp(-x^2)`.
//!
//! Polynomials are evaluated with their three-term recurrences; no
//! coefficient tables are kept for them.

use crate::error::{Error, Result};

/// `1 / sqrt(pi)`.
pub const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Order `M` of the generating function; the approximation order is `N = 2M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolynomialOrder(u32);

impl PolynomialOrder {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("polynomial order M must be at least 1"));
        }
        Ok(Self(m))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Approximation order `N = 2M` (number of vanishing moments).
    pub fn approximation_order(self) -> u32 {
        2 * self.0
    }
}

impl TryFrom<u32> for PolynomialOrder {
    type Error = Error;

    fn try_from(m: u32) -> Result<Self> {
        Self::new(m)
    }
}

/// Complementary error function.
///
/// Infinite arguments map to their limits; NaN is rejected.
pub fn erfc(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("erfc argument is NaN"));
    }
    Ok(erfc_total(x))
}

// Hot-path variant: NaN propagates.
#[inline]
pub(crate) fn erfc_total(x: f64) -> f64 {
    libm::erfc(x)
}

/// Physicists' Hermite polynomial `H_k(x)`.
pub fn hermite(k: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for j in 1..k {
        let next = 2.0 * x * cur - 2.0 * f64::from(j) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[j] = H_j(x)` for `j < out.len()`.
pub(crate) fn hermite_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = 2.0 * x;
    }
    for j in 2..out.len() {
        out[j] = 2.0 * x * out[j - 1] - 2.0 * (j - 1) as f64 * out[j - 2];
    }
}

/// Generalized Laguerre polynomial `L_k^{(gamma)}(x)`, `gamma > -1`.
pub fn laguerre(k: u32, gamma: f64, x: f64) -> Result<f64> {
    if !(gamma > -1.0) {
        return Err(Error::domain(format!(
            "Laguerre parameter gamma = {gamma} must exceed -1"
        )));
    }
    Ok(laguerre_unchecked(k, gamma, x))
}

pub(crate) fn laguerre_unchecked(k: u32, gamma: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 + gamma - x;
    for j in 1..k {
        let j = f64::from(j);
        let next = ((2.0 * j + 1.0 + gamma - x) * cur - (j + gamma) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[j] = L_j^{(gamma)}(x)` for `j < out.len()`.
pub(crate) fn laguerre_all(gamma: f64, x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = 1.0 + gamma - x;
    }
    for j in 2..out.len() {
        let i = (j - 1) as f64;
        out[j] = ((2.0 * i + 1.0 + gamma - x) * out[j - 1] - (i + gamma) * out[j - 2]) / (i + 1.0);
    }
}

/// Univariate generating function `eta_2M`.
pub fn eta_basis(m: PolynomialOrder, x: f64) -> f64 {
    let x2 = x * x;
    FRAC_1_SQRT_PI * laguerre_unchecked(m.get() - 1, 0.5, x2) * (-x2).exp()
}

/// Coefficients (ascending powers of `y`) of `L_{M-1}^{(1/2)}(y^2)`.
///
/// Built by running the Laguerre recurrence on coefficient vectors, so the
/// same recurrence backs both point evaluation and expansion.
pub(crate) fn laguerre_half_in_y_squared(m: PolynomialOrder) -> Vec<f64> {
    let deg = (m.get() - 1) as usize;
    let gamma = 0.5;
    // Coefficients in z = y^2.
    let mut prev = vec![1.0];
    let mut cur = if deg == 0 { vec![1.0] } else { vec![1.0 + gamma, -1.0] };
    for j in 1..deg {
        let jf = j as f64;
        let mut next = vec![0.0; j + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i] += (2.0 * jf + 1.0 + gamma) * c;
            next[i + 1] -= c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= (jf + gamma) * c;
        }
        for c in &mut next {
            *c /= jf + 1.0;
        }
        prev = cur;
        cur = next;
    }
    let mut in_y = vec![0.0; 2 * deg + 1];
    for (i, c) in cur.into_iter().enumerate() {
        in_y[2 * i] = c;
    }
    in_y
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc
}
