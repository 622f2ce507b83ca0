//! Closed-form kernels on H. Each one has a series oracle in the tests.

use num_complex::Complex64;

use super::Analytic;
use crate::error::{invalid, Error, Result};
use crate::measures::{PhiProfile, RadialMeasureFamily};
use crate::mittag_leffler::{
    ml_log_eval_with_branch, ml_series_complex, tyz_weight, Branch, MlParams,
};
use crate::numeric::{binomial, factorial, ln_gamma, ln_gamma_ratio, CompensatedSum, ComplexSum};

fn check_n(n: u32) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("n must be ≥ 2, got {n}")));
    }
    Ok(())
}

fn is_nonneg_real(t: Complex64) -> bool {
    t.im == 0.0 && t.re >= 0.0
}

/// [2t F^{(n−1)}(t) + (n−1) F^{(n−2)}(t)] / (n−1)!, the kernel of the
/// measure 2 t^{2n−3} φ(t²) dt when F(t) = Σ t^k / ∫ r^k φ(r) dr.
pub fn kernel_phi_closed(n: u32, f: &dyn Analytic, t: Complex64) -> Result<Complex64> {
    check_n(n)?;
    let hi = f.derivative((n - 1) as usize, t)?;
    let lo = f.derivative((n - 2) as usize, t)?;
    Ok((2.0 * t * hi + (n - 1) as f64 * lo) / factorial((n - 1) as u64))
}

/// The Jacobi-profile family φ(r) = (1 − r)^m on [0, 1].
pub fn exa_family(n: u32, m: f64) -> Result<RadialMeasureFamily> {
    RadialMeasureFamily::phi_radial(n, PhiProfile::Jacobi { m })
}

/// Γ(n+m)/(Γ(m+1)(n−1)!) · [(n−1) + (n+1+2m) t] / (1−t)^{n+m+1}.
pub fn exa_closed(n: u32, m: f64, t: Complex64) -> Result<Complex64> {
    check_n(n)?;
    if !(m > -1.0) {
        return Err(invalid(format!("m must exceed -1, got {m}")));
    }
    if t.norm() >= 1.0 {
        return Err(Error::Domain(format!("|t| = {} ≥ 1", t.norm())));
    }
    let nf = n as f64;
    let pref = (ln_gamma_ratio(nf + m, m + 1.0) - ln_gamma(nf)).exp();
    let one = Complex64::new(1.0, 0.0);
    let denom = (-(nf + m + 1.0) * (one - t).ln()).exp();
    Ok(pref * ((nf - 1.0) + (nf + 1.0 + 2.0 * m) * t) * denom)
}

/// t^{−n} times the ball bracket sum, as ∫₀¹ (1 − t(1−w))^{s+1} w^{n−1} dw
/// expanded in powers of t; used where the closed bracket cancels.
fn ball_bracket_integral_series(n: u32, s: f64, t: Complex64) -> Result<Complex64> {
    // Σ_k (−s−1)_k t^k (n−1)!/(n+k)!
    let nf = n as f64;
    let mut term = Complex64::new(1.0 / nf, 0.0);
    let mut sum = ComplexSum::new();
    sum.add(term);
    for k in 0..2000usize {
        let kf = k as f64;
        term *= t * (kf - s - 1.0) / (nf + kf + 1.0);
        sum.add(term);
        if term == Complex64::new(0.0, 0.0)
            || (k >= 12 && term.norm() <= 1e-18 * sum.value().norm())
        {
            return Ok(sum.value());
        }
    }
    Err(Error::NonConvergence {
        terms: 2000,
        detail: format!("ball bracket series at t = {t}"),
    })
}

/// Below this |t| the ball bracket is evaluated by its Taylor series.
pub const BALL_SERIES_RADIUS: f64 = 0.05;

/// (1 − t)^{n+s+1} K(t) for the Bergman-type weight (1 − |z|²)^s:
/// 2(s+1)_n/(n−1)! · [1 + (n+s+1)/t^{n−1} Σ_j C(n−1,j)(−1)^j ((1−t)^j − (1−t)^{n+s+1})/(n+s+1−j)].
pub fn ball_scaled(n: u32, s: f64, t: Complex64) -> Result<Complex64> {
    check_n(n)?;
    if !(s > -1.0) {
        return Err(invalid(format!("s must exceed -1, got {s}")));
    }
    if t.norm() >= 1.0 {
        return Err(Error::Domain(format!("|t| = {} ≥ 1", t.norm())));
    }
    let nf = n as f64;
    let big_p = nf + s + 1.0;
    // 2 (s+1)_n / (n−1)!
    let c0 = 2.0 * (ln_gamma_ratio(s + 1.0 + nf, s + 1.0) - ln_gamma(nf)).exp();
    let one = Complex64::new(1.0, 0.0);
    let bracket = if t.norm() < BALL_SERIES_RADIUS {
        one + big_p * t * ball_bracket_integral_series(n, s, t)?
    } else {
        let u = one - t;
        let u_p = (big_p * u.ln()).exp();
        let mut sum = ComplexSum::new();
        for j in 0..n {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let coeff = sign * binomial((n - 1) as u64, j as u64) / (big_p - j as f64);
            sum.add(coeff * (u.powu(j) - u_p));
        }
        one + big_p * sum.value() / t.powu(n - 1)
    };
    Ok(c0 * bracket)
}

/// Diagonal (real t) version of [`ball_scaled`].
pub fn ball_scaled_diagonal(n: u32, s: f64, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!(
            "diagonal argument must lie in [0, 1), got {t}"
        )));
    }
    Ok(ball_scaled(n, s, Complex64::new(t, 0.0))?.re)
}

/// K(t) for the measure (1 − t²)^s t^{2n−1} dt on [0, 1], including the
/// factor 2 that comes with the true (halved) moments.
pub fn kernel_ball_closed(n: u32, s: f64, t: Complex64) -> Result<Complex64> {
    if t.im == 0.0 && t.re >= 1.0 {
        return Err(Error::Domain(format!("t = {} lies on [1, ∞)", t.re)));
    }
    let scaled = ball_scaled(n, s, t)?;
    let big_p = n as f64 + s + 1.0;
    let one = Complex64::new(1.0, 0.0);
    Ok(scaled * (-big_p * (one - t).ln()).exp())
}

fn check_tyz(n: u32, m: f64, c: f64, s: f64) -> Result<()> {
    check_n(n)?;
    if !(m > 0.0 && c > 0.0 && s > 0.0) {
        return Err(invalid(format!("need m, c, s > 0 (m={m}, c={c}, s={s})")));
    }
    Ok(())
}

/// The PowerExp kernel
/// s^n/((n−1)! c) Σ_j C(n−1,j)[(n−1)!/j! + (n−2)!/(j−1)!] τ^j E^{(j)}_{1/m,n}(τ),
/// τ = s^{1/m} t. Nonnegative real t uses the validated Mittag-Leffler
/// evaluator; other t sum the complex series.
pub fn kernel_tyz_closed(n: u32, m: f64, c: f64, s: f64, t: Complex64) -> Result<Complex64> {
    check_tyz(n, m, c, s)?;
    let tau = t * s.powf(1.0 / m);
    let pref = (n as f64 * s.ln() - ln_gamma(n as f64)).exp() / c;
    if is_nonneg_real(tau) {
        let params = MlParams::new(1.0 / m, n as f64)?;
        let (ln_sum, _) = tyz_ln_bracket(&params, n, tau.re)?;
        let v = pref * ln_sum.exp();
        if !v.is_finite() {
            return Err(Error::Overflow(format!(
                "PowerExp kernel at t = {t}; use the scaled diagonal"
            )));
        }
        return Ok(Complex64::new(v, 0.0));
    }
    let mut acc = ComplexSum::new();
    for j in 0..n {
        let e = ml_series_complex(1.0 / m, n as f64, j as usize, tau, 1e-17)?;
        acc.add(binomial((n - 1) as u64, j as u64) * tyz_weight(n, j) * tau.powu(j) * e);
    }
    Ok(pref * acc.value())
}

/// ln Σ_j C(n−1,j) w_j τ^j E^{(j)}(τ) for τ ≥ 0, and the branch used.
fn tyz_ln_bracket(params: &MlParams, n: u32, tau: f64) -> Result<(f64, Branch)> {
    let mut terms = Vec::with_capacity(n as usize);
    let mut branch = Branch::Series;
    for j in 0..n {
        let (ln_e, b) = ml_log_eval_with_branch(params, tau, j as usize)?;
        branch = b;
        if j > 0 && tau == 0.0 {
            continue;
        }
        let ln_pow = if j == 0 { 0.0 } else { j as f64 * tau.ln() };
        terms.push((binomial((n - 1) as u64, j as u64) * tyz_weight(n, j)).ln() + ln_pow + ln_e);
    }
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: CompensatedSum = terms.iter().map(|x| (x - top).exp()).collect();
    Ok((top + sum.value().ln(), branch))
}

/// e^{−s t^m} K(t) on the diagonal (t = |z|² ≥ 0) with an explicit
/// Mittag-Leffler configuration; returns the branch that was active.
pub fn kernel_tyz_scaled_diag_with(
    params: &MlParams,
    n: u32,
    m: f64,
    c: f64,
    s: f64,
    t: f64,
) -> Result<(f64, Branch)> {
    check_tyz(n, m, c, s)?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "diagonal argument must be ≥ 0, got {t}"
        )));
    }
    let tau = t * s.powf(1.0 / m);
    let x = tau.powf(m);
    let (ln_sum, branch) = tyz_ln_bracket(params, n, tau)?;
    let ln_pref = n as f64 * s.ln() - ln_gamma(n as f64) - c.ln();
    Ok(((ln_pref + ln_sum - x).exp(), branch))
}

/// e^{−s t^m} K(t) on the diagonal with the validated switch threshold.
pub fn kernel_tyz_scaled_diag(n: u32, m: f64, c: f64, s: f64, t: f64) -> Result<(f64, Branch)> {
    let params = MlParams::new(1.0 / m, n as f64)?;
    kernel_tyz_scaled_diag_with(&params, n, m, c, s, t)
}

/// The kernel of φ(r) = e^{−s r^m}:
/// m s^{(n−1)/m}/(n−1)! · [2τ E^{(n−1)}(τ) + (n−1) E^{(n−2)}(τ)], E = E_{1/m,1/m}, τ = s^{1/m} t.
pub fn kernel_alpha_weight_closed(n: u32, m: f64, s: f64, t: Complex64) -> Result<Complex64> {
    check_n(n)?;
    if !(m > 0.0 && s > 0.0) {
        return Err(invalid(format!("need m, s > 0 (m={m}, s={s})")));
    }
    let tau = t * s.powf(1.0 / m);
    let pref = (m.ln() + (n as f64 - 1.0) / m * s.ln() - ln_gamma(n as f64)).exp();
    let (hi, lo) = if is_nonneg_real(tau) {
        let params = MlParams::new(1.0 / m, 1.0 / m)?;
        let (a, _) = ml_log_eval_with_branch(&params, tau.re, (n - 1) as usize)?;
        let (b, _) = ml_log_eval_with_branch(&params, tau.re, (n - 2) as usize)?;
        (Complex64::new(a.exp(), 0.0), Complex64::new(b.exp(), 0.0))
    } else {
        (
            ml_series_complex(1.0 / m, 1.0 / m, (n - 1) as usize, tau, 1e-17)?,
            ml_series_complex(1.0 / m, 1.0 / m, (n - 2) as usize, tau, 1e-17)?,
        )
    };
    let v = pref * (2.0 * tau * hi + (n - 1) as f64 * lo);
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Overflow(format!(
            "stretched-exponential kernel at t = {t}"
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{kernel_series, ExaGenerating, ExpGenerating, KernelSpec, PhiSeries};
    use crate::measures::RadialMeasureFamily as F;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn phi_closed_examples() {
        let exa = ExaGenerating { m: 0.0 };
        assert_relative_eq!(
            kernel_phi_closed(2, &exa, c(0.5)).unwrap().re,
            20.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            exa_closed(2, 0.0, c(0.5)).unwrap().re,
            20.0,
            max_relative = 1e-14
        );
        let e = ExpGenerating {
            scale: 1.0,
            rate: 1.0,
        };
        assert_relative_eq!(
            kernel_phi_closed(2, &e, c(0.0)).unwrap().re,
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            kernel_phi_closed(3, &ExaGenerating { m: 1.0 }, c(0.0))
                .unwrap()
                .re,
            6.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            exa_closed(3, 1.0, c(0.0)).unwrap().re,
            6.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn exa_closed_matches_generating_function_route() {
        let z = Complex64::new(0.3, 0.5);
        for n in 2..5 {
            for m in [0.0, 1.0, 2.5] {
                let a = exa_closed(n, m, z).unwrap();
                let b = kernel_phi_closed(n, &ExaGenerating { m }, z).unwrap();
                let p = kernel_phi_closed(n, &PhiSeries::new(PhiProfile::Jacobi { m }).unwrap(), z)
                    .unwrap();
                assert!(rel(a, b) < 1e-13 && rel(p, b) < 1e-12, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn ball_closed_examples() {
        assert_relative_eq!(
            kernel_ball_closed(2, 0.0, c(0.0)).unwrap().re,
            4.0,
            max_relative = 1e-15
        );
        let spec = KernelSpec::from_family(F::bergman_beta(2, 0.0).unwrap()).unwrap();
        let t = c(0.5);
        assert!(
            rel(
                kernel_ball_closed(2, 0.0, t).unwrap(),
                kernel_series(&spec, t, 1e-17).unwrap()
            ) < 1e-10
        );
        let spec = KernelSpec::from_family(F::bergman_beta(3, 1.0).unwrap()).unwrap();
        let t = c(0.3);
        assert!(
            rel(
                kernel_ball_closed(3, 1.0, t).unwrap(),
                kernel_series(&spec, t, 1e-17).unwrap()
            ) < 1e-10
        );
        assert!(matches!(
            kernel_ball_closed(2, 0.0, c(1.5)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ball_series_and_bracket_agree_at_the_switch() {
        for n in 2..6 {
            for s in [0.0, 1.0, 2.5, 40.0] {
                let t = Complex64::new(BALL_SERIES_RADIUS, 0.0);
                let below = ball_scaled(n, s, t * (1.0 - 1e-12)).unwrap();
                let above = ball_scaled(n, s, t).unwrap();
                assert!(rel(below, above) < 1e-9, "n={n} s={s}: {below} {above}");
            }
        }
    }

    #[test]
    fn tyz_closed_examples() {
        assert_relative_eq!(
            kernel_tyz_closed(2, 1.0, 1.0, 1.0, c(0.0)).unwrap().re,
            1.0,
            max_relative = 1e-15
        );
        let spec = KernelSpec::from_family(F::power_exp(1.0, 1.0, 2, 1.0).unwrap()).unwrap();
        for t in [0.5, 2.0, 5.0] {
            let a = kernel_tyz_closed(2, 1.0, 1.0, 1.0, c(t)).unwrap();
            let b = kernel_series(&spec, c(t), 1e-17).unwrap();
            assert!(rel(a, b) < 1e-9, "t={t}");
        }
    }

    #[test]
    fn alpha_weight_examples() {
        assert_relative_eq!(
            kernel_alpha_weight_closed(2, 1.0, 1.0, c(0.0)).unwrap().re,
            1.0,
            max_relative = 1e-15
        );
        let spec = KernelSpec::from_family(
            F::phi_radial(2, PhiProfile::StretchedExp { s: 2.0, m: 1.0 }).unwrap(),
        )
        .unwrap();
        for t in [0.7, 1.0] {
            let a = kernel_alpha_weight_closed(2, 1.0, 2.0, c(t)).unwrap();
            let b = kernel_series(&spec, c(t), 1e-17).unwrap();
            assert!(rel(a, b) < 1e-9);
        }
        // m = 1: E_{1,1} = exp, so the bracket is s·e^{st}(2st + 1) for n = 2
        let s = 2.0;
        let v = kernel_alpha_weight_closed(2, 1.0, s, c(1.0)).unwrap().re;
        assert_relative_eq!(
            v,
            s * (s * 1.0f64).exp() * (2.0 * s + 1.0),
            max_relative = 1e-13
        );
    }
}
