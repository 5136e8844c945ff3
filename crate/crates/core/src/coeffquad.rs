//! Doubly-exponential substitution of the heat-time integral, the
//! trapezoidal node table, and the cubature coefficients `a_k` and `b_{k,m}`.
//!
//! The time integral `int_0^inf ... dt` is mapped to the real line by
//!
//! ```text
//! t = exp(xi),  xi = alpha (sigma + e^sigma),  sigma = beta (u - e^{-u})
//! ```
//!
//! after which the integrand decays doubly exponentially in `u` and a plain
//! trapezoidal rule with step `tau` over `s = n_lo..=n_hi` is used.

use num_complex::Complex64;

use crate::cubature::BoxDomain;
use crate::error::{Error, Result};
use crate::phi_kernel::PhiKernel;
use crate::specfun::PolynomialOrder;

/// Substitution constants and trapezoid layout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureParams {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub n_lo: i64,
    pub n_hi: i64,
}

impl QuadratureParams {
    pub fn new(alpha: f64, beta: f64, tau: f64, n_lo: i64, n_hi: i64) -> Result<Self> {
        let q = Self { alpha, beta, tau, n_lo, n_hi };
        q.validate()?;
        Ok(q)
    }

    /// alpha = beta = 2, tau = 0.005, s = -400..=300.
    ///
    /// The lower end reaches `t ~ 5e-17`; stopping at `s = -300` leaves
    /// `t ~ 4e-11` uncovered, which shows up as an error floor near `1e-10`.
    pub fn three_dimensional() -> Self {
        Self { alpha: 2.0, beta: 2.0, tau: 0.005, n_lo: -400, n_hi: 300 }
    }

    /// alpha = 6, beta = 5, tau = 0.003, s = -40..=200.
    pub fn high_dimensional() -> Self {
        Self { alpha: 6.0, beta: 5.0, tau: 0.003, n_lo: -40, n_hi: 200 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::domain(format!(
                "substitution constants must be positive: alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::domain(format!("trapezoid step tau = {} must be positive", self.tau)));
        }
        if self.n_lo >= self.n_hi {
            return Err(Error::domain(format!(
                "node range requires n_lo < n_hi, got {}..={}",
                self.n_lo, self.n_hi
            )));
        }
        Ok(())
    }
}

/// The complex parameter `lambda^2` of `-Laplace + lambda^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaSquared(Complex64);

impl LambdaSquared {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::domain("lambda^2 must be finite"));
        }
        if re < 0.0 {
            return Err(Error::domain(format!("Re lambda^2 = {re} must be non-negative")));
        }
        Ok(Self(Complex64::new(re, im)))
    }

    pub fn real(re: f64) -> Result<Self> {
        Self::new(re, 0.0)
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.im == 0.0
    }

    /// The time representation needs `Re lambda^2 > 0` below three dimensions.
    pub fn validate_for_dim(self, n: usize) -> Result<()> {
        if n < 3 && !(self.0.re > 0.0) {
            return Err(Error::domain(format!(
                "Re lambda^2 must be positive in dimension {n} < 3"
            )));
        }
        Ok(())
    }
}

/// `(t, dt/du)` for the doubly-exponential map, or `None` when `t` leaves
/// the positive finite range and the node has to be dropped.
pub fn de_transform(u: f64, alpha: f64, beta: f64) -> Option<(f64, f64)> {
    let emu = (-u).exp();
    let sigma = beta * (u - emu);
    let es = sigma.exp();
    let t = (alpha * (sigma + es)).exp();
    let dt = t * alpha * beta * (1.0 + emu) * (1.0 + es);
    if t > 0.0 && t.is_finite() && dt > 0.0 && dt.is_finite() {
        Some((t, dt))
    } else {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadNode {
    pub s: i64,
    pub u: f64,
    pub t: f64,
    pub dt: f64,
}

/// Immutable trapezoid table for one set of [`QuadratureParams`].
#[derive(Clone, Debug)]
pub struct NodeTable {
    params: QuadratureParams,
    nodes: Vec<QuadNode>,
    flagged: usize,
}

impl NodeTable {
    pub fn params(&self) -> &QuadratureParams {
        &self.params
    }

    /// Usable nodes in increasing `s` (and so increasing `t`).
    pub fn nodes(&self) -> &[QuadNode] {
        &self.nodes
    }

    /// Number of nodes dropped because `t` under- or overflowed.
    pub fn flagged(&self) -> usize {
        self.flagged
    }

    pub fn tau(&self) -> f64 {
        self.params.tau
    }
}

/// Precomputes `(u_s, t_s, dt_s)` for `s = n_lo..=n_hi`.
pub fn trapezoid_weights(quad: &QuadratureParams) -> Result<NodeTable> {
    quad.validate()?;
    let mut nodes = Vec::with_capacity((quad.n_hi - quad.n_lo + 1) as usize);
    let mut flagged = 0;
    for s in quad.n_lo..=quad.n_hi {
        let u = s as f64 * quad.tau;
        match de_transform(u, quad.alpha, quad.beta) {
            Some((t, dt)) => nodes.push(QuadNode { s, u, t, dt }),
            None => flagged += 1,
        }
    }
    Ok(NodeTable { params: *quad, nodes, flagged })
}

/// One-dimensional factor `b^j(P) - b^j(Q)` of the boundary coefficient,
/// with far-field truncation at radius `r`.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn axis_factor(
    kernel: &PhiKernel,
    k: i64,
    m: i64,
    lo: f64,
    hi: f64,
    h: f64,
    d: f64,
    t: f64,
    r: f64,
) -> f64 {
    let sd = d.sqrt();
    let x = (k - m) as f64 / sd;
    let tj = t / (h * h * d);
    let node = h * m as f64;
    let p = (lo - node) / (h * sd);
    let q = (hi - node) / (h * sd);
    kernel.diff_truncated(x, tj, p, q, r)
}

fn check_common(n: usize, h: &[f64], d: f64, lambda2: LambdaSquared) -> Result<()> {
    if h.len() != n {
        return Err(Error::domain(format!("{} steps given for dimension {n}", h.len())));
    }
    if n == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if h.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::domain("grid steps must be positive"));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::domain(format!("shape parameter D = {d} must be positive")));
    }
    lambda2.validate_for_dim(n)
}

/// Convolution coefficient `a_k` by the trapezoidal rule on `table`.
pub fn a_coeff(
    k: &[i64],
    m: PolynomialOrder,
    h: &[f64],
    d: f64,
    lambda2: LambdaSquared,
    table: &NodeTable,
) -> Result<Complex64> {
    check_common(k.len(), h, d, lambda2)?;
    let kernel = PhiKernel::new(m);
    let sd = d.sqrt();
    let norm = 0.25 * d.powf(-(k.len() as f64) / 2.0);
    let lam = lambda2.value();
    let mut acc = Complex64::new(0.0, 0.0);
    for node in table.nodes() {
        let prod: f64 = k
            .iter()
            .zip(h)
            .map(|(&kj, &hj)| kernel.full_line(kj as f64 / sd, node.t / (hj * hj * d)))
            .product();
        if prod == 0.0 {
            continue;
        }
        acc += (-lam * node.t / 4.0).exp() * (prod * node.dt);
    }
    Ok(acc * (norm * table.tau()))
}

/// Boundary coefficient `b_{k,m}` by the trapezoidal rule on `table`.
#[allow(clippy::too_many_arguments)]
pub fn b_coeff(
    k: &[i64],
    m_idx: &[i64],
    domain: &BoxDomain,
    m: PolynomialOrder,
    h: &[f64],
    d: f64,
    lambda2: LambdaSquared,
    table: &NodeTable,
    r: f64,
) -> Result<Complex64> {
    let n = k.len();
    check_common(n, h, d, lambda2)?;
    if m_idx.len() != n || domain.dim() != n {
        return Err(Error::domain("index, box and step dimensions differ"));
    }
    if !(r > 0.0) {
        return Err(Error::domain(format!("truncation radius r = {r} must be positive")));
    }
    let kernel = PhiKernel::new(m);
    let norm = 0.25 * d.powf(-(n as f64) / 2.0);
    let lam = lambda2.value();
    let mut acc = Complex64::new(0.0, 0.0);
    for node in table.nodes() {
        let mut prod = 1.0;
        for j in 0..n {
            prod *= axis_factor(
                &kernel, k[j], m_idx[j], domain.lo()[j], domain.hi()[j], h[j], d, node.t, r,
            );
            if prod == 0.0 {
                break;
            }
        }
        if prod == 0.0 {
            continue;
        }
        acc += (-lam * node.t / 4.0).exp() * (prod * node.dt);
    }
    Ok(acc * (norm * table.tau()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::quad::integrate_adaptive_complex;
    use crate::specfun::eta_basis;
    use approx::assert_relative_eq;

    fn order(m: u32) -> PolynomialOrder {
        PolynomialOrder::new(m).unwrap()
    }

    #[test]
    fn de_transform_values() {
        let (t, _) = de_transform(0.0, 2.0, 2.0).unwrap();
        assert_relative_eq!(t, (-4.0 + 2.0 * (-2.0f64).exp()).exp(), max_relative = 1e-15);
        assert_relative_eq!(t, 0.024_008_930_023_526_85, max_relative = 1e-14);

        let (u, a, b) = (0.5, 2.0, 2.0);
        let step = 1e-5;
        let tp = de_transform(u + step, a, b).unwrap().0;
        let tm = de_transform(u - step, a, b).unwrap().0;
        let fd = (tp - tm) / (2.0 * step);
        let (_, dt) = de_transform(u, a, b).unwrap();
        assert_relative_eq!(fd, dt, max_relative = 1e-8);

        if let Some((t, _)) = de_transform(-5.0, 6.0, 5.0) {
            assert!(t < 1e-300);
        }
        assert!(de_transform(50.0, 2.0, 2.0).is_none());
    }

    #[test]
    fn node_table_layout() {
        let q = QuadratureParams::three_dimensional();
        let table = trapezoid_weights(&q).unwrap();
        assert_eq!(table.nodes().len() + table.flagged(), 701);
        assert!(table.nodes()[0].t < 1e-16);
        assert!(table.nodes().iter().all(|n| n.t > 0.0 && n.t.is_finite()));
        assert!(table.nodes().windows(2).all(|w| w[0].t < w[1].t));

        let wide = QuadratureParams::new(2.0, 2.0, 0.05, -200, 200).unwrap();
        let table = trapezoid_weights(&wide).unwrap();
        assert!(table.flagged() > 0);
        assert_eq!(table.nodes().len() + table.flagged(), 401);
        assert!(table.nodes().windows(2).all(|w| w[0].t < w[1].t));

        assert!(QuadratureParams::new(2.0, 2.0, 0.005, 3, 3).is_err());
        assert!(QuadratureParams::new(-2.0, 2.0, 0.005, -3, 3).is_err());
        assert!(QuadratureParams::new(2.0, 2.0, 0.0, -3, 3).is_err());
    }

    #[test]
    fn lambda_invariants() {
        assert!(LambdaSquared::new(-1.0, 0.0).is_err());
        let zero = LambdaSquared::real(0.0).unwrap();
        assert!(zero.validate_for_dim(3).is_ok());
        assert!(zero.validate_for_dim(2).is_err());
        assert!(LambdaSquared::new(1.0, 1.0).unwrap().validate_for_dim(1).is_ok());
    }

    #[test]
    fn a_coeff_sign_symmetry_and_realness() {
        let table = trapezoid_weights(&QuadratureParams::three_dimensional()).unwrap();
        let h = [0.1, 0.1, 0.1];
        let lam = LambdaSquared::real(1.0).unwrap();
        let a = a_coeff(&[3, -2, 1], order(2), &h, 4.0, lam, &table).unwrap();
        let b = a_coeff(&[3, 2, 1], order(2), &h, 4.0, lam, &table).unwrap();
        let c = a_coeff(&[-3, 2, -1], order(2), &h, 4.0, lam, &table).unwrap();
        assert!((a - b).norm() <= 1e-16 * a.norm().max(1.0));
        assert!((a - c).norm() <= 1e-16 * a.norm().max(1.0));
        assert!(a.im.abs() <= 1e-16);
    }

    #[test]
    fn a_coeff_refinement() {
        let h = [0.1, 0.1, 0.1];
        let lam = LambdaSquared::real(1.0).unwrap();
        let coarse = trapezoid_weights(&QuadratureParams::three_dimensional()).unwrap();
        let fine = trapezoid_weights(&QuadratureParams::new(2.0, 2.0, 0.0005, -4000, 3000).unwrap()).unwrap();
        let a = a_coeff(&[0, 0, 0], order(1), &h, 4.0, lam, &coarse).unwrap();
        let b = a_coeff(&[0, 0, 0], order(1), &h, 4.0, lam, &fine).unwrap();
        assert!((a - b).norm() <= 1e-12 * b.norm(), "{a} vs {b}");

        // Halving tau with the node range doubled.
        let half = trapezoid_weights(&QuadratureParams::new(2.0, 2.0, 0.0025, -800, 600).unwrap()).unwrap();
        for m in 1..=3 {
            for k in [[0, 0, 0], [1, 2, 0], [4, 0, 3]] {
                let a = a_coeff(&k, order(m), &h, 4.0, lam, &coarse).unwrap();
                let b = a_coeff(&k, order(m), &h, 4.0, lam, &half).unwrap();
                assert!((a - b).norm() <= 1e-12 * b.norm(), "M={m} k={k:?}");
            }
        }
    }

    #[test]
    fn short_lower_range_truncates_small_times() {
        let lam = LambdaSquared::real(1.0).unwrap();
        let short = trapezoid_weights(&QuadratureParams::new(2.0, 2.0, 0.005, -300, 300).unwrap()).unwrap();
        let full = trapezoid_weights(&QuadratureParams::three_dimensional()).unwrap();
        let a = a_coeff(&[0, 0, 0], order(1), &[0.1; 3], 4.0, lam, &short).unwrap();
        let b = a_coeff(&[0, 0, 0], order(1), &[0.1; 3], 4.0, lam, &full).unwrap();
        assert!((a - b).norm() > 1e-10 * b.norm());
    }

    #[test]
    fn a_coeff_decays_along_axis() {
        let table = trapezoid_weights(&QuadratureParams::three_dimensional()).unwrap();
        let lam = LambdaSquared::real(1.0).unwrap();
        for m in 1..=3 {
            let vals: Vec<f64> = (3..30)
                .map(|k| a_coeff(&[k], order(m), &[0.1], 4.0, lam, &table).unwrap().re.abs())
                .collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]), "M={m}: {vals:?}");
        }
    }

    #[test]
    fn a_coeff_laplace_limit_is_continuous() {
        let table = trapezoid_weights(&QuadratureParams::three_dimensional()).unwrap();
        let h = [0.1, 0.1, 0.1];
        let zero = a_coeff(&[0, 0, 0], order(2), &h, 4.0, LambdaSquared::real(0.0).unwrap(), &table).unwrap();
        let tiny = a_coeff(&[0, 0, 0], order(2), &h, 4.0, LambdaSquared::real(1e-12).unwrap(), &table).unwrap();
        assert!(zero.re.is_finite());
        assert!((zero - tiny).norm() <= 1e-6 * zero.norm());
        assert!(a_coeff(&[0], order(2), &[0.1], 4.0, LambdaSquared::real(0.0).unwrap(), &table).is_err());
    }

    #[test]
    fn b_coeff_deep_interior_equals_a_coeff() {
        let table = trapezoid_weights(&QuadratureParams::three_dimensional()).unwrap();
        let domain = BoxDomain::cube(3, -1.0, 1.0).unwrap();
        let h = [1.0 / 40.0; 3];
        let lam = LambdaSquared::new(1.0, 1.0).unwrap();
        for m in 1..=3 {
            let k = [3, 3, 0];
            let node = [1, -2, 2];
            let diff: Vec<i64> = k.iter().zip(&node).map(|(a, b)| a - b).collect();
            let b = b_coeff(&k, &node, &domain, order(m), &h, 4.0, lam, &table, 6.0).unwrap();
            let a = a_coeff(&diff, order(m), &h, 4.0, lam, &table).unwrap();
            assert!((a - b).norm() <= 3e-16, "M={m}: {a} vs {b}");
        }
    }

    #[test]
    fn b_coeff_far_outside_vanishes() {
        let table = trapezoid_weights(&QuadratureParams::three_dimensional()).unwrap();
        let domain = BoxDomain::cube(3, -1.0, 1.0).unwrap();
        let lam = LambdaSquared::real(1.0).unwrap();
        // Node beyond Q + r h sqrt(D) on axis 0: both endpoint distances >= r.
        let b = b_coeff(&[-5, 0, 0], &[23, 0, 0], &domain, order(2), &[0.1; 3], 4.0, lam, &table, 6.0)
            .unwrap();
        assert_eq!(b, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn b_coeff_matches_direct_integral_in_one_dimension() {
        // n = 1, kappa(x) = exp(-|x|)/2 for lambda = 1.
        let table = trapezoid_weights(&QuadratureParams::three_dimensional()).unwrap();
        let domain = BoxDomain::new(vec![-1.0], vec![1.0]).unwrap();
        let (h, d) = (0.1, 4.0);
        let lam = LambdaSquared::real(1.0).unwrap();
        let o = order(1);
        for &(k, m) in &[(9i64, 10i64), (10, 12), (-10, -8), (3, 9), (0, 11)] {
            let b = b_coeff(&[k], &[m], &domain, o, &[h], d, lam, &table, 6.0).unwrap();
            let x = h * k as f64;
            let f = |y: f64| {
                let kern = (-(x - y).abs()).exp() / 2.0;
                Complex64::new(kern * eta_basis(o, (y - h * m as f64) / (h * d.sqrt())) / d.sqrt(), 0.0)
            };
            let split = x.clamp(-1.0, 1.0);
            let mut want = Complex64::new(0.0, 0.0);
            for (a, bnd) in [(-1.0, split), (split, 1.0)] {
                if bnd > a {
                    want += integrate_adaptive_complex(f, a, bnd, 1e-15, 1e-13).unwrap();
                }
            }
            assert!((b - want).norm() <= 1e-9, "k={k} m={m}: {b} vs {want}");
        }
    }
}
