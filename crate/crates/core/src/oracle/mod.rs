//! Independent references for the cubature: product profiles with known
//! potentials, closed-form kernels in one and three dimensions, and direct
//! quadrature of the potential integral.

pub mod quad;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::coeffquad::LambdaSquared;
use crate::cubature::BoxDomain;
use crate::error::{Error, Result};

/// Univariate profiles `u` with `u(+-1) = u'(+-1) = 0`.
///
/// For such `u` the zero extension of `prod_j u(x_j)` is `C^1`, so it is
/// the potential of `(-Laplace + lambda^2) prod_j u(x_j)` over `[-1, 1]^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Profile {
    /// `cos^2(pi x / 2)`
    CosSquared,
    /// `(x^2 - 1)^3`
    CubicPower,
    /// `(1 - x^2)^2`
    QuarticBump,
    /// `1 - sin(pi x^2 / 2)`
    SinBump,
    /// `e^x (1 - x^2)^2`
    ExpBump,
}

impl Profile {
    pub const ALL: [Profile; 5] = [
        Profile::CosSquared,
        Profile::CubicPower,
        Profile::QuarticBump,
        Profile::SinBump,
        Profile::ExpBump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Profile::CosSquared => "cos2",
            Profile::CubicPower => "cubic",
            Profile::QuarticBump => "quartic",
            Profile::SinBump => "sinbump",
            Profile::ExpBump => "expbump",
        }
    }

    pub fn u(self, x: f64) -> f64 {
        let w = 1.0 - x * x;
        match self {
            Profile::CosSquared => (PI * x / 2.0).cos().powi(2),
            Profile::CubicPower => -w * w * w,
            Profile::QuarticBump => w * w,
            Profile::SinBump => 1.0 - (PI * x * x / 2.0).sin(),
            Profile::ExpBump => x.exp() * w * w,
        }
    }

    pub fn du(self, x: f64) -> f64 {
        let w = 1.0 - x * x;
        match self {
            Profile::CosSquared => -PI / 2.0 * (PI * x).sin(),
            Profile::CubicPower => 6.0 * x * w * w,
            Profile::QuarticBump => -4.0 * x * w,
            Profile::SinBump => -PI * x * (PI * x * x / 2.0).cos(),
            Profile::ExpBump => x.exp() * (w * w - 4.0 * x * w),
        }
    }

    pub fn d2u(self, x: f64) -> f64 {
        let x2 = x * x;
        let w = 1.0 - x2;
        match self {
            Profile::CosSquared => -PI * PI / 2.0 * (PI * x).cos(),
            Profile::CubicPower => 6.0 * w * w - 24.0 * x2 * w,
            Profile::QuarticBump => 12.0 * x2 - 4.0,
            Profile::SinBump => {
                let a = PI * x2 / 2.0;
                -PI * a.cos() + PI * PI * x2 * a.sin()
            }
            Profile::ExpBump => {
                // v = w^2, v' = -4 x w, v'' = 12 x^2 - 4
                x.exp() * (w * w - 8.0 * x * w + 12.0 * x2 - 4.0)
            }
        }
    }

    /// `prod_j u(x_j)`.
    pub fn product(self, x: &[f64]) -> f64 {
        x.iter().map(|&v| self.u(v)).product()
    }

    /// Checks `|u(+-1)|, |u'(+-1)| <= 1e-12`.
    pub fn check_vanishing(self) -> Result<()> {
        for e in [-1.0, 1.0] {
            let (v, d) = (self.u(e), self.du(e));
            if v.abs() > 1e-12 || d.abs() > 1e-12 {
                return Err(Error::domain(format!(
                    "profile {self} does not vanish to first order at {e}: u = {v:e}, u' = {d:e}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Profile::ALL.iter().map(|p| p.name()).collect();
                Error::domain(format!("unknown profile '{s}', expected one of {}", names.join(", ")))
            })
    }
}

/// Exact potential `prod_j u(x_j)` of the test density at `x in [-1, 1]^n`.
pub fn exact_potential_product(profile: Profile, x: &[f64]) -> Result<f64> {
    profile.check_vanishing()?;
    if x.is_empty() || x.iter().any(|v| !(v.abs() <= 1.0)) {
        return Err(Error::domain("reference point must lie in [-1, 1]^n"));
    }
    Ok(profile.product(x))
}

/// Fundamental solution of `-Laplace + lambda^2` at distance `radius` for
/// `n = 1` or `n = 3`.
pub fn kernel_closed_form(n: usize, lambda: Complex64, radius: f64) -> Result<Complex64> {
    if !(radius > 0.0) {
        return Err(Error::domain(format!("radius {radius} must be positive")));
    }
    match n {
        3 => {
            if lambda.re < 0.0 {
                return Err(Error::domain("Re lambda must be non-negative"));
            }
            Ok((-lambda * radius).exp() / (4.0 * PI * radius))
        }
        1 => {
            if !(lambda.re > 0.0) {
                return Err(Error::domain("Re lambda must be positive in one dimension"));
            }
            Ok((-lambda * radius).exp() / (2.0 * lambda))
        }
        _ => Err(Error::Unsupported(format!("closed-form kernel in dimension {n}"))),
    }
}

const BRUTE_TARGET: f64 = 1e-8;
const BRUTE_ORDERS: [usize; 4] = [16, 24, 32, 48];

/// Direct quadrature of `int_box kappa(x - y) f(y) dy` for `n = 1` or `n = 3`.
///
/// In one dimension the interval is split at `x` and integrated
/// adaptively. In three dimensions the box is cut into the orthants around
/// `x`, each orthant into three pyramids with apex `x`, and each pyramid is
/// mapped to the unit cube, which cancels the `1/|x - y|` singularity; the
/// cube is then integrated by tensor Gauss-Legendre rules of increasing order.
pub fn brute_force_potential<F>(f: F, domain: &BoxDomain, lambda2: LambdaSquared, x: &[f64]) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64,
{
    let n = domain.dim();
    if x.len() != n {
        return Err(Error::domain("point and box dimensions differ"));
    }
    lambda2.validate_for_dim(n)?;
    let lambda = lambda2.value().sqrt();
    match n {
        1 => brute_1d(&f, domain.lo()[0], domain.hi()[0], lambda, x[0]),
        3 => brute_3d(&f, domain, lambda, x),
        _ => Err(Error::Unsupported(format!("direct quadrature in dimension {n}"))),
    }
}

fn brute_1d<F>(f: &F, lo: f64, hi: f64, lambda: Complex64, x: f64) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64,
{
    let g = |y: f64| {
        let r = (x - y).abs();
        let k = if r == 0.0 { 0.5 / lambda } else { (-lambda * r).exp() / (2.0 * lambda) };
        k * f(&[y])
    };
    let split = x.clamp(lo, hi);
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in [(lo, split), (split, hi)] {
        if b > a {
            acc += quad::integrate_adaptive_complex(g, a, b, 0.1 * BRUTE_TARGET, 1e-12)?;
        }
    }
    Ok(acc)
}

fn brute_3d<F>(f: &F, domain: &BoxDomain, lambda: Complex64, x: &[f64]) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64,
{
    // Orthant boxes [0, a_1] x [0, a_2] x [0, a_3] in the local frame y = x + s * w.
    let mut pieces = Vec::new();
    for mask in 0..8u32 {
        let mut a = [0.0; 3];
        let mut s = [0.0; 3];
        for j in 0..3 {
            let up = mask & (1 << j) != 0;
            s[j] = if up { 1.0 } else { -1.0 };
            a[j] = if up { domain.hi()[j] - x[j] } else { x[j] - domain.lo()[j] };
        }
        if a.iter().all(|&v| v > 0.0) {
            pieces.push((a, s));
        }
    }

    let integrate = |order: usize| {
        let (nodes, weights) = quad::gauss_legendre(order);
        // map to [0, 1]
        let pts: Vec<(f64, f64)> = nodes.iter().zip(&weights).map(|(z, w)| (0.5 * (z + 1.0), 0.5 * w)).collect();
        let mut total = Complex64::new(0.0, 0.0);
        let mut y = [0.0; 3];
        for (a, s) in &pieces {
            let vol = a[0] * a[1] * a[2];
            for d in 0..3 {
                let (i1, i2) = ((d + 1) % 3, (d + 2) % 3);
                for &(v1, w1) in &pts {
                    for &(v2, w2) in &pts {
                        let rho = (a[d] * a[d] + (a[i1] * v1).powi(2) + (a[i2] * v2).powi(2)).sqrt();
                        let mut inner = Complex64::new(0.0, 0.0);
                        for &(sig, ws) in &pts {
                            y[d] = x[d] + s[d] * a[d] * sig;
                            y[i1] = x[i1] + s[i1] * a[i1] * sig * v1;
                            y[i2] = x[i2] + s[i2] * a[i2] * sig * v2;
                            inner += (-lambda * (sig * rho)).exp() * (ws * sig) * f(&y);
                        }
                        total += inner * (w1 * w2 * vol / (4.0 * PI * rho));
                    }
                }
            }
        }
        total
    };

    let mut prev = integrate(BRUTE_ORDERS[0]);
    let mut achieved = f64::INFINITY;
    for &order in &BRUTE_ORDERS[1..] {
        let cur = integrate(order);
        achieved = (cur - prev).norm();
        if achieved <= BRUTE_TARGET {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::AccuracyNotMet { achieved, target: BRUTE_TARGET })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubature::test_density;

    #[test]
    fn profiles_vanish_to_first_order() {
        for p in Profile::ALL {
            p.check_vanishing().unwrap();
            assert_eq!(p.name().parse::<Profile>().unwrap(), p);
        }
        assert!("nope".parse::<Profile>().is_err());
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let h = 1e-4;
        for p in Profile::ALL {
            for x in [-0.9, -0.35, 0.0, 0.2, 0.77] {
                let d1 = (p.u(x + h) - p.u(x - h)) / (2.0 * h);
                let d2 = (p.du(x + h) - p.du(x - h)) / (2.0 * h);
                assert!((d1 - p.du(x)).abs() <= 1e-6, "{p} u' at {x}");
                assert!((d2 - p.d2u(x)).abs() <= 1e-6, "{p} u'' at {x}");
            }
        }
    }

    #[test]
    fn exact_product_examples() {
        let c = (0.15 * PI).cos().powi(2);
        let v = exact_potential_product(Profile::CosSquared, &[0.3, 0.3, 0.0]).unwrap();
        assert!((v - c * c).abs() <= 1e-15);
        assert!((c - 0.793_892_626_146_236_6).abs() <= 1e-15);
        let v = exact_potential_product(Profile::CubicPower, &[0.5; 3]).unwrap();
        assert!((v - (-0.421_875f64).powi(3)).abs() <= 1e-15);
        for p in Profile::ALL {
            assert!(exact_potential_product(p, &[0.2, -1.0]).unwrap().abs() <= 1e-12);
        }
        assert!(exact_potential_product(Profile::CosSquared, &[1.5]).is_err());
    }

    // K_{1/2}(z) from its defining series (pi / 2)(I_{-1/2} - I_{1/2}).
    fn bessel_k_half_series(z: f64) -> f64 {
        let i_nu = |nu: f64| {
            let mut gamma = if nu < 0.0 { PI.sqrt() } else { PI.sqrt() / 2.0 };
            let mut sum = 0.0;
            let mut fact = 1.0;
            for k in 0..60 {
                if k > 0 {
                    fact *= k as f64;
                    gamma *= k as f64 + nu;
                }
                sum += (z / 2.0).powf(2.0 * k as f64 + nu) / (fact * gamma);
            }
            sum
        };
        PI / 2.0 * (i_nu(-0.5) - i_nu(0.5))
    }

    #[test]
    fn kernel_closed_forms() {
        let r = 0.8;
        let v = kernel_closed_form(3, Complex64::new(0.0, 0.0), r).unwrap();
        assert!((v.re - 1.0 / (4.0 * PI * r)).abs() <= 1e-16);
        let v = kernel_closed_form(3, Complex64::new(1.0, 0.0), 1.0).unwrap();
        assert!((v.re - (-1.0f64).exp() / (4.0 * PI)).abs() <= 1e-16);
        for (n, z) in [(3usize, 0.7f64), (3, 2.3), (1, 0.4), (1, 1.9)] {
            // kappa(x) = (2 pi)^{-n/2} (lambda / r)^{n/2 - 1} K_{n/2-1}(lambda r), lambda = 1
            let nu = n as f64 / 2.0 - 1.0;
            let want = (2.0 * PI).powf(-(n as f64) / 2.0) * z.powf(-nu) * bessel_k_half_series(z);
            let got = kernel_closed_form(n, Complex64::new(1.0, 0.0), z).unwrap();
            assert!((got.re - want).abs() <= 1e-12 * want, "n={n} r={z}");
        }
        assert!(kernel_closed_form(3, Complex64::new(1.0, 0.0), 800.0).unwrap().norm() < 1e-300);
        assert!(matches!(
            kernel_closed_form(2, Complex64::new(1.0, 0.0), 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn smoothed_kernel_matches_heat_representation() {
        let eps: f64 = 0.1;
        let lambda = Complex64::new(1.0, 0.0);
        for radius in [0.3, 0.5, 1.0, 1.7, 2.5] {
            // Spherical average of the normalized Gaussian against the closed form.
            let g = |rho: f64| {
                let k = if rho == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    kernel_closed_form(3, lambda, rho).unwrap() * rho
                };
                let shell = (-(radius - rho).powi(2) / (eps * eps)).exp() - (-(radius + rho).powi(2) / (eps * eps)).exp();
                k * shell * (PI * eps * eps) / radius * (PI * eps * eps).powf(-1.5)
            };
            let lo = (radius - 10.0 * eps).max(0.0);
            let direct = quad::integrate_adaptive_complex(g, lo, radius + 10.0 * eps, 1e-14, 1e-13).unwrap();
            // Heat representation convolved with the same Gaussian, s = e^v.
            let h = |v: f64| {
                let s = v.exp();
                let var = 4.0 * s + eps * eps;
                (-s - radius * radius / var).exp() * (PI * var).powf(-1.5) * s
            };
            let heat = quad::integrate_adaptive(h, -40.0, 5.0, 1e-15, 1e-13).unwrap();
            assert!((direct.re - heat).abs() <= 1e-8, "r={radius}: {} vs {heat}", direct.re);
        }
    }

    #[test]
    fn brute_force_one_dimension_matches_products() {
        let lam = LambdaSquared::real(1.0).unwrap();
        let domain = BoxDomain::cube(1, -1.0, 1.0).unwrap();
        for p in Profile::ALL {
            let dens = test_density(p, lam, 1);
            for x in [0.3, -0.55, 0.8] {
                let v = brute_force_potential(|y| dens.eval(y), &domain, lam, &[x]).unwrap();
                assert!((v.re - p.u(x)).abs() <= 1e-7 && v.im.abs() <= 1e-12, "{p} x={x}: {v}");
            }
        }
        let zero = brute_force_potential(|_| Complex64::new(0.0, 0.0), &domain, lam, &[0.1]).unwrap();
        assert_eq!(zero, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn brute_force_three_dimensions_matches_product() {
        let lam = LambdaSquared::real(1.0).unwrap();
        let domain = BoxDomain::cube(3, -1.0, 1.0).unwrap();
        let dens = test_density(Profile::QuarticBump, lam, 3);
        let x = [0.4, 0.5, 0.0];
        let v = brute_force_potential(|y| dens.eval(y), &domain, lam, &x).unwrap();
        assert!((v.re - Profile::QuarticBump.product(&x)).abs() <= 1e-6, "{v}");
    }

    #[test]
    fn brute_force_rejects_unsupported_dimensions() {
        let lam = LambdaSquared::real(1.0).unwrap();
        let domain = BoxDomain::cube(2, -1.0, 1.0).unwrap();
        let r = brute_force_potential(|_| Complex64::new(1.0, 0.0), &domain, lam, &[0.0, 0.0]);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }
}
