//! Kernels on C^n for measures radial in the minimal norm
//! N_*(z) = sqrt(|z|² + |z·z|).
//!
//! With A = z·w̄ and B = (z·z)·conj(w·w) the kernel is
//! (n+1)²/(n−1)! · [2A Δ₀F^{(n−1)} + 2 Δ₁F^{(n−1)} + (n−1) Δ₀F^{(n−2)}](A, B)
//! where Δ₀g(x, y²) = (g(x+y) − g(x−y))/y and Δ₁g(x, y²) = g(x+y) + g(x−y).
//! Both operators are even in y, so only y² = B enters.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::geometry::{bilinear, pairing};
use crate::kernels::Analytic;
use crate::numeric::{factorial, ComplexSum};

/// Highest k in the even fallback series Σ_k g^{(2k+ε)}(x) y^{2k}/(2k+ε)!.
const EVEN_SERIES_ORDER: usize = 6;
/// The even series replaces the difference quotient when |y| < this·(1+|x|).
pub const SMALL_Y: f64 = 1e-4;

fn use_series(x: Complex64, ysq: Complex64) -> bool {
    ysq.norm().sqrt() < SMALL_Y * (1.0 + x.norm())
}

fn check_domain(f: &dyn Analytic, x: Complex64, y: Complex64) -> Result<()> {
    let r = f.radius();
    let reach = x.norm() + y.norm();
    if reach >= r {
        return Err(Error::Domain(format!(
            "|x| + |y| = {reach} leaves the disc of radius {r}"
        )));
    }
    Ok(())
}

/// Δ₀(f^{(j)})(x, ysq).
pub fn delta0(f: &dyn Analytic, j: usize, x: Complex64, ysq: Complex64) -> Result<Complex64> {
    let y = ysq.sqrt();
    check_domain(f, x, y)?;
    if use_series(x, ysq) {
        let mut acc = ComplexSum::new();
        let mut pow = Complex64::new(1.0, 0.0);
        for k in 0..=EVEN_SERIES_ORDER {
            acc.add(f.derivative(j + 2 * k + 1, x)? * pow / factorial(2 * k as u64 + 1));
            pow *= ysq;
        }
        return Ok(2.0 * acc.value());
    }
    Ok((f.derivative(j, x + y)? - f.derivative(j, x - y)?) / y)
}

/// Δ₁(f^{(j)})(x, ysq).
pub fn delta1(f: &dyn Analytic, j: usize, x: Complex64, ysq: Complex64) -> Result<Complex64> {
    let y = ysq.sqrt();
    check_domain(f, x, y)?;
    if use_series(x, ysq) {
        let mut acc = ComplexSum::new();
        let mut pow = Complex64::new(1.0, 0.0);
        for k in 0..=EVEN_SERIES_ORDER {
            acc.add(f.derivative(j + 2 * k, x)? * pow / factorial(2 * k as u64));
            pow *= ysq;
        }
        return Ok(2.0 * acc.value());
    }
    Ok(f.derivative(j, x + y)? + f.derivative(j, x - y)?)
}

/// The pair (A, B) = (z·w̄, (z·z)·conj(w·w)).
pub fn pair_invariants(z: &[Complex64], w: &[Complex64]) -> Result<(Complex64, Complex64)> {
    let a = pairing(z, w)?;
    let b = bilinear(z, z)? * bilinear(w, w)?.conj();
    Ok((a, b))
}

/// Kernel on C^n for the weight whose H-side generating function is F.
pub fn minimal_ball_kernel(
    n: u32,
    f: &dyn Analytic,
    z: &[Complex64],
    w: &[Complex64],
) -> Result<Complex64> {
    if n < 2 {
        return Err(invalid(format!("n must be ≥ 2, got {n}")));
    }
    if z.len() != n as usize {
        return Err(Error::LengthMismatch(z.len(), n as usize));
    }
    let (a, b) = pair_invariants(z, w)?;
    let hi = (n - 1) as usize;
    let lo = (n - 2) as usize;
    let bracket = 2.0 * a * delta0(f, hi, a, b)?
        + 2.0 * delta1(f, hi, a, b)?
        + (n - 1) as f64 * delta0(f, lo, a, b)?;
    let n1 = (n + 1) as f64;
    Ok(n1 * n1 / factorial((n - 1) as u64) * bracket)
}

/// S(u) = sinh√u/√u.
pub fn sinh_c(u: Complex64) -> Complex64 {
    if u.norm() < 1.0 {
        even_series(u, 1)
    } else {
        let r = u.sqrt();
        r.sinh() / r
    }
}

/// C(u) = cosh√u.
pub fn cosh_c(u: Complex64) -> Complex64 {
    if u.norm() < 1.0 {
        even_series(u, 0)
    } else {
        u.sqrt().cosh()
    }
}

// Σ_k u^k/(2k+shift)!
fn even_series(u: Complex64, shift: u64) -> Complex64 {
    let mut term = Complex64::new(1.0 / factorial(shift), 0.0);
    let mut acc = ComplexSum::new();
    acc.add(term);
    for k in 1..40u64 {
        let a = 2 * k + shift;
        term *= u / ((a - 1) * a) as f64;
        acc.add(term);
        if term.norm() < 1e-18 * acc.value().norm() {
            break;
        }
    }
    acc.value()
}

/// Kernel for φ(r) = e^{−cr}:
/// 2(n+1)² cⁿ/(n−1)! · e^{cA} [(n−1+2cA) S(c²B) + 2 C(c²B)].
pub fn exb_closed(n: u32, c: f64, z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    if n < 2 || !(c > 0.0) {
        return Err(invalid(format!("need n ≥ 2 and c > 0 (n={n}, c={c})")));
    }
    if z.len() != n as usize {
        return Err(Error::LengthMismatch(z.len(), n as usize));
    }
    let (a, b) = pair_invariants(z, w)?;
    let u = c * c * b;
    let n1 = (n + 1) as f64;
    let pref = 2.0 * n1 * n1 * c.powi(n as i32) / factorial((n - 1) as u64);
    Ok(pref * (c * a).exp() * (((n - 1) as f64 + 2.0 * c * a) * sinh_c(u) + 2.0 * cosh_c(u)))
}
