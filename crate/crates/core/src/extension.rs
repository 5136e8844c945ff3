//! Hestenes reflection extension of univariate factors beyond `[lo, hi]`.
//!
//! Outside the interval the extension is `sum_s c_s f(-a_s (x - e) + e)`
//! with `e` the nearer endpoint. The coefficients solve
//! `sum_s c_s (-a_s)^k = 1` for `k = 0..=N`, so the extension is `C^N`
//! across the endpoint and reproduces polynomials of degree `N`.

use crate::error::{Error, Result};
use crate::specfun::PolynomialOrder;

const RESIDUAL_TOL: f64 = 1e-9;

/// Reflection rates and matching coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct HestenesScheme {
    rates: Vec<f64>,
    coeffs: Vec<Dd>,
}

impl HestenesScheme {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        let coeffs = solve_dd(&rates)?;
        Ok(Self { rates, coeffs })
    }

    /// `a_s = 2^{-s}`, `s = 1..=N+1`.
    pub fn geometric(order: usize) -> Result<Self> {
        Self::new((1..=order as i32 + 1).map(|s| 2f64.powi(-s)).collect())
    }

    /// `a_s = 1/s`.
    pub fn harmonic(order: usize) -> Result<Self> {
        Self::new((1..=order + 1).map(|s| 1.0 / s as f64).collect())
    }

    /// `a_s = s`.
    pub fn linear(order: usize) -> Result<Self> {
        Self::new((1..=order + 1).map(|s| s as f64).collect())
    }

    /// Default extension order matching the quasi-interpolant, `N = 2M`.
    pub fn default_order(m: PolynomialOrder) -> usize {
        m.approximation_order() as usize
    }

    /// `N`; the scheme has `N + 1` terms.
    pub fn order(&self) -> usize {
        self.rates.len() - 1
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Coefficients rounded to `f64`.
    pub fn coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.hi).collect()
    }

    /// `|sum_s c_s (-a_s)^k - 1|` for `k = 0..=N`.
    pub fn residuals(&self) -> Vec<f64> {
        (0..self.rates.len())
            .map(|k| {
                let terms: Vec<f64> = self.rates.iter().map(|a| (-a).powi(k as i32)).collect();
                (dot_dd(&self.coeffs, &terms) - 1.0).abs()
            })
            .collect()
    }

    /// Largest distance beyond an endpoint of `[lo, hi]` that stays in reach.
    pub fn reach(&self, lo: f64, hi: f64) -> f64 {
        let amax = self.rates.iter().cloned().fold(0.0, f64::max);
        (hi - lo) / amax
    }
}

/// Solves `sum_s c_s (-a_s)^k = 1`, `k = 0..=N`, for the coefficients.
pub fn hestenes_solve(rates: &[f64]) -> Result<Vec<f64>> {
    Ok(solve_dd(rates)?.into_iter().map(|c| c.hi).collect())
}

fn solve_dd(rates: &[f64]) -> Result<Vec<Dd>> {
    if rates.is_empty() {
        return Err(Error::domain("at least one reflection rate is required"));
    }
    if let Some(a) = rates.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::domain(format!("reflection rate {a} must be positive")));
    }
    for (i, a) in rates.iter().enumerate() {
        if rates[..i].contains(a) {
            return Err(Error::Singular(format!("reflection rate {a} is repeated")));
        }
    }
    // The system says sum_s c_s p(-a_s) = p(1) for every polynomial p of
    // degree <= N, so c_s is the Lagrange basis polynomial of node -a_s at 1.
    // Geometric rates give |c_s| ~ 1e7, so the products are carried in
    // double-double arithmetic.
    let coeffs: Vec<Dd> = rates
        .iter()
        .enumerate()
        .map(|(s, &a)| {
            rates
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != s)
                .fold(Dd::from(1.0), |acc, (_, &b)| {
                    acc.mul(Dd::two_sum(1.0, b).div(Dd::two_sum(b, -a)))
                })
        })
        .collect();
    let scheme = HestenesScheme { rates: rates.to_vec(), coeffs };
    let residual = scheme.residuals().into_iter().fold(0.0, f64::max);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::Singular(format!(
            "reflection system residual {residual:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    Ok(scheme.coeffs)
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Dd { hi, lo: 0.0 }
    }
}

impl Dd {
    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let z = s - a;
        Dd { hi: s, lo: (a - (s - z)) + (b - z) }
    }

    fn quick(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        Self::quick(p, e)
    }

    fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = Self::two_sum(self.hi, -(Dd::from(q1).mul(o).hi));
        let rem = (r.hi + r.lo + self.lo) - Dd::from(q1).mul(o).lo;
        Self::quick(q1, rem / o.hi)
    }
}

// Dot product of double-double coefficients with plain values, accumulated
// with error-free transformations.
fn dot_dd(c: &[Dd], v: &[f64]) -> f64 {
    let (mut s, mut comp) = (0.0f64, 0.0f64);
    for (x, &y) in c.iter().zip(v) {
        for part in [x.hi, x.lo] {
            let p = part * y;
            let pe = part.mul_add(y, -p);
            let t = s + p;
            let z = t - s;
            comp += (s - (t - z)) + (p - z) + pe;
            s = t;
        }
    }
    s + comp
}

/// Value of the extension of `f` from `[lo, hi]` at `x`.
pub fn hestenes_extend<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    scheme: &HestenesScheme,
    x: f64,
) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("extension point {x} is not finite")));
    }
    if !(lo < hi) {
        return Err(Error::domain(format!("empty interval [{lo}, {hi}]")));
    }
    if (lo..=hi).contains(&x) {
        return Ok(f(x));
    }
    let edge = if x < lo { lo } else { hi };
    let mut vals = Vec::with_capacity(scheme.rates.len());
    for a in &scheme.rates {
        let y = edge - a * (x - edge);
        if !(lo..=hi).contains(&y) {
            return Err(Error::OutOfReach { x, reflected: y, lo, hi });
        }
        vals.push(f(y));
    }
    Ok(dot_dd(&scheme.coeffs, &vals))
}
