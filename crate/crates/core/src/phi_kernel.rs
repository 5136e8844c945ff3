//! One-dimensional kernel factors of the heat-kernel representation.
//!
//! For a truncated generating function `chi_(p, inf)(y) eta_2M(y)` the
//! one-dimensional factor is
//!
//! ```text
//! Phi_M(x, t, p) = (pi t)^{-1/2} int_p^inf exp(-(x - y)^2 / t) eta_2M(y) dy
//!                = exp(-x^2/(1+t)) / (2 sqrt(pi))
//!                  * ( erfc(F) P_M(t, x) - exp(-F^2) Q_M(t, x, p) / sqrt(pi) )
//! F(t, x, p)     = sqrt((1+t)/t) (p - x/(1+t))
//! ```
//!
//! `P_M` is a sum of Laguerre polynomials. `Q_M` has a displayed form as a
//! double sum of Hermite products ([`q_poly`]); its terms carry `t^{-l/2}`
//! factors that cancel analytically, so for small `t` the double sum loses
//! every significant digit. [`PhiKernel`] therefore evaluates `Q_M` through
//! incomplete Gaussian moments, which is the same polynomial with no
//! cancellation, and the tests pin both forms against each other and against
//! the tabulated `M = 1, 2, 3` closed forms.

use crate::error::{Error, Result};
use crate::specfun::{
    binomial, erfc_total, factorial, hermite_all, laguerre_all, laguerre_half_in_y_squared,
    PolynomialOrder, FRAC_1_SQRT_PI,
};

/// Default far-field truncation radius; `exp(-6^2)` is below double resolution.
pub const DEFAULT_TRUNCATION_RADIUS: f64 = 6.0;

/// Arguments of `Phi_M`: scaled coordinate, heat time, scaled endpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiArgs {
    pub x: f64,
    pub t: f64,
    /// Interval endpoint; `f64::INFINITY` / `f64::NEG_INFINITY` are the exact limits.
    pub p: f64,
}

impl PhiArgs {
    pub fn new(x: f64, t: f64, p: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("heat time t = {t} must be positive and finite")));
        }
        if !x.is_finite() {
            return Err(Error::domain(format!("x = {x} must be finite")));
        }
        if p.is_nan() {
            return Err(Error::domain("endpoint p is NaN"));
        }
        Ok(Self { x, t, p })
    }
}

/// `F(t, x, y) = sqrt((1+t)/t) (y - x/(1+t))`.
pub fn f_arg(t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("heat time t = {t} must be positive")));
    }
    Ok(f_arg_unchecked(t, x, y))
}

#[inline]
fn f_arg_unchecked(t: f64, x: f64, y: f64) -> f64 {
    ((1.0 + t) / t).sqrt() * (y - x / (1.0 + t))
}

/// `F^2` from `p^2 + (x-p)^2/t - x^2/(1+t)`, which avoids forming `F` first.
#[inline]
fn f_squared(t: f64, x: f64, p: f64) -> f64 {
    let d = x - p;
    p * p + d * d / t - x * x / (1.0 + t)
}

/// `P_M(t, x) = sum_{k<M} (1+t)^{-k-1/2} L_k^{(-1/2)}(x^2/(1+t))`.
pub fn p_poly(m: PolynomialOrder, t: f64, x: f64) -> f64 {
    let mut lag = [0.0; 16];
    let mut heap;
    let lag: &mut [f64] = if m.get() as usize <= lag.len() {
        &mut lag[..m.get() as usize]
    } else {
        heap = vec![0.0; m.get() as usize];
        &mut heap
    };
    p_poly_with(lag, t, x)
}

fn p_poly_with(lag: &mut [f64], t: f64, x: f64) -> f64 {
    let s = 1.0 + t;
    laguerre_all(-0.5, x * x / s, lag);
    let inv = 1.0 / s;
    let mut scale = inv.sqrt();
    let mut acc = 0.0;
    for l in lag.iter() {
        acc += scale * l;
        scale *= inv;
    }
    acc
}

/// `Q_M(t, x, y)` as the displayed Hermite double sum.
///
/// Exact in exact arithmetic; numerically usable only away from `t -> 0`.
pub fn q_poly(m: PolynomialOrder, t: f64, x: f64, y: f64) -> f64 {
    let big_m = m.get();
    if big_m == 1 {
        return 0.0;
    }
    let len = (2 * big_m - 1) as usize;
    let mut h_y = vec![0.0; len];
    let mut h_shift = vec![0.0; len];
    let mut h_x = vec![0.0; len];
    let mut h_f = vec![0.0; len];
    let sqrt_t = t.sqrt();
    hermite_all(y, &mut h_y);
    hermite_all((y - x) / sqrt_t, &mut h_shift);
    hermite_all(x / (1.0 + t).sqrt(), &mut h_x);
    hermite_all(f_arg_unchecked(t, x, y), &mut h_f);

    let mut total = 0.0;
    for k in 1..big_m {
        let mut inner = 0.0;
        let damp = (1.0 + t).powf(f64::from(k) + 0.5);
        for l in 1..=2 * k {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let a = h_y[(2 * k - l) as usize] * h_shift[(l - 1) as usize];
            let b = binomial(2 * k, l) * h_x[(2 * k - l) as usize] * h_f[(l - 1) as usize] / damp;
            inner += sign / t.powf(f64::from(l) / 2.0) * (a - b);
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += sign / (factorial(k) * 4f64.powi(k as i32)) * inner;
    }
    2.0 * total
}

/// Tabulated `P_M` for `M = 1, 2, 3`.
pub fn p_poly_closed(m: PolynomialOrder, t: f64, x: f64) -> Option<f64> {
    let s = 1.0 + t;
    let p1 = 1.0 / s.sqrt();
    let p2 = p1 + 1.0 / (2.0 * s.powf(1.5)) - x * x / s.powf(2.5);
    match m.get() {
        1 => Some(p1),
        2 => Some(p2),
        3 => Some(
            p2 + 3.0 / (8.0 * s.powf(2.5)) - 1.5 * x * x / s.powf(3.5)
                + x.powi(4) / (2.0 * s.powf(4.5)),
        ),
        _ => None,
    }
}

/// Tabulated `Q_M` for `M = 1, 2, 3`.
pub fn q_poly_closed(m: PolynomialOrder, t: f64, x: f64, p: f64) -> Option<f64> {
    let s = 1.0 + t;
    match m.get() {
        1 => Some(0.0),
        2 => Some(t.sqrt() / s * (x / s + p)),
        3 => Some(
            -t.sqrt() / (4.0 * s)
                * (2.0 * x.powi(3) / s.powi(3)
                    + (2.0 * p * x * x - 5.0 * x) / (s * s)
                    + ((2.0 * p * p - 5.0) * x - 3.0 * p) / s
                    + p * (2.0 * p * p - 7.0)),
        ),
        _ => None,
    }
}

/// Evaluator for `Phi_M` and its Remark-style far-field truncation at a fixed order.
#[derive(Clone, Debug)]
pub struct PhiKernel {
    order: PolynomialOrder,
    /// `L_{M-1}^{(1/2)}(y^2)` in ascending powers of `y`.
    lag_in_y: Vec<f64>,
}

impl PhiKernel {
    pub fn new(order: PolynomialOrder) -> Self {
        Self {
            order,
            lag_in_y: laguerre_half_in_y_squared(order),
        }
    }

    pub fn order(&self) -> PolynomialOrder {
        self.order
    }

    /// `P_M(t, x)`.
    pub fn p(&self, t: f64, x: f64) -> f64 {
        p_poly(self.order, t, x)
    }

    /// `Q_M(t, x, p)` via incomplete Gaussian moments.
    pub fn q(&self, t: f64, x: f64, p: f64) -> f64 {
        let fv = f_arg_unchecked(t, x, p);
        let (_, b) = self.moment_split(t, x, fv);
        -2.0 * b / (1.0 + t).sqrt()
    }

    /// Splits `sum_i e_i int_F^inf s^i exp(-s^2) ds` into
    /// `(sqrt(pi)/2) erfc(F) A + exp(-F^2) B`, returning `(A, B)`, where
    /// `L_{M-1}^{(1/2)}((mu + sigma s)^2) = sum_i e_i s^i`.
    fn moment_split(&self, t: f64, x: f64, f: f64) -> (f64, f64) {
        let mu = x / (1.0 + t);
        let sigma = (t / (1.0 + t)).sqrt();
        let deg = self.lag_in_y.len() - 1;

        // Horner in polynomial arithmetic: poly(s) <- poly(s) * (mu + sigma s) + c.
        let mut e = [0.0f64; 32];
        let mut heap;
        let e: &mut [f64] = if deg < e.len() {
            &mut e[..=deg]
        } else {
            heap = vec![0.0; deg + 1];
            &mut heap
        };
        for (step, &c) in self.lag_in_y.iter().rev().enumerate() {
            for i in (1..=step).rev() {
                e[i] = e[i] * mu + e[i - 1] * sigma;
            }
            e[0] = e[0] * mu + c;
        }

        // Even moments of exp(-s^2) over R scaled by 2/sqrt(pi): (i-1)!!/2^{i/2}.
        // beta_i: polynomial parts of the incomplete moments, beta_0 = 0, beta_1 = 1/2.
        let mut a = 0.0;
        let mut b = 0.0;
        let mut alpha_prev2 = 0.0; // alpha_{i-2}
        let mut alpha_prev1 = 0.0; // alpha_{i-1}
        let mut beta_prev2 = 0.0;
        let mut beta_prev1 = 0.0;
        let mut f_pow = 1.0; // F^{i-1}
        for (i, &ei) in e.iter().enumerate() {
            let (alpha, beta) = match i {
                0 => (1.0, 0.0),
                1 => (0.0, 0.5),
                _ => {
                    let c = (i as f64 - 1.0) / 2.0;
                    f_pow *= f;
                    (c * alpha_prev2, c * beta_prev2 + 0.5 * f_pow)
                }
            };
            a += ei * alpha;
            b += ei * beta;
            alpha_prev2 = alpha_prev1;
            alpha_prev1 = alpha;
            beta_prev2 = beta_prev1;
            beta_prev1 = beta;
        }
        (a, b)
    }

    /// `Phi_M(x, t, p)`; `t > 0` is assumed.
    pub fn phi(&self, x: f64, t: f64, p: f64) -> f64 {
        if p == f64::INFINITY {
            return 0.0;
        }
        if p == f64::NEG_INFINITY {
            return self.full_line(x, t);
        }
        let fv = f_arg_unchecked(t, x, p);
        let gauss = (-x * x / (1.0 + t)).exp();
        if gauss == 0.0 {
            return 0.0;
        }
        let erfc_f = erfc_total(fv);
        let exp_f2 = (-f_squared(t, x, p)).exp();
        let p_m = self.p(t, x);
        let q_m = if exp_f2 == 0.0 || self.order.get() == 1 {
            0.0
        } else {
            self.q(t, x, p)
        };
        gauss * 0.5 * FRAC_1_SQRT_PI * (erfc_f * p_m - exp_f2 * FRAC_1_SQRT_PI * q_m)
    }

    /// `Phi_M(x, t, -inf) = pi^{-1/2} exp(-x^2/(1+t)) P_M(t, x)`.
    pub fn full_line(&self, x: f64, t: f64) -> f64 {
        let gauss = (-x * x / (1.0 + t)).exp();
        if gauss == 0.0 {
            return 0.0;
        }
        FRAC_1_SQRT_PI * gauss * self.p(t, x)
    }

    /// `Phi_M(x, t, p)` with the far-field replacement: the full-line value
    /// for `p <= -r`, zero for `p >= r`.
    pub fn phi_truncated(&self, x: f64, t: f64, p: f64, r: f64) -> f64 {
        if p <= -r {
            self.full_line(x, t)
        } else if p >= r {
            0.0
        } else {
            self.phi(x, t, p)
        }
    }

    /// `Phi_M(x,t,p) - Phi_M(x,t,q)` with per-endpoint far-field truncation.
    ///
    /// Per-endpoint classification reproduces every branch of the two-sided
    /// rule: both endpoints beyond `r` on one side give zero, `p <= -r <= r <= q`
    /// gives the full-line value, and with one endpoint inside `(-r, r)` only
    /// that endpoint is evaluated exactly.
    pub fn diff_truncated(&self, x: f64, t: f64, p: f64, q: f64, r: f64) -> f64 {
        if p <= -r && q >= r {
            return self.full_line(x, t);
        }
        if (p >= r && q >= r) || (p <= -r && q <= -r) {
            return 0.0;
        }
        self.phi_truncated(x, t, p, r) - self.phi_truncated(x, t, q, r)
    }
}

/// `Phi_M(x, t, p)` (closed form).
pub fn phi_m(m: PolynomialOrder, args: PhiArgs) -> Result<f64> {
    let args = PhiArgs::new(args.x, args.t, args.p)?;
    Ok(PhiKernel::new(m).phi(args.x, args.t, args.p))
}

/// `Phi_M(x,t,p) - Phi_M(x,t,q)` with far-field truncation at radius `r`.
pub fn phi_diff_truncated(
    m: PolynomialOrder,
    x: f64,
    t: f64,
    p: f64,
    q: f64,
    r: f64,
) -> Result<f64> {
    if !(p < q) {
        return Err(Error::domain(format!("endpoints must satisfy p < q, got p = {p}, q = {q}")));
    }
    if !(r > 0.0) {
        return Err(Error::domain(format!("truncation radius r = {r} must be positive")));
    }
    PhiArgs::new(x, t, p)?;
    Ok(PhiKernel::new(m).diff_truncated(x, t, p, q, r))
}
