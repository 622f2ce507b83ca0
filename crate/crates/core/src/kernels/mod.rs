//! Reproducing kernels on the Kepler manifold as functions of t = z·w̄.
//!
//! [`kernel_series`] sums K(t) = Σ_l N(l) t^l / q_{2l} directly from a moment
//! sequence and is the oracle every closed form in [`closed`] is tested
//! against. [`tyz`] evaluates the large-parameter expansion of the weighted
//! diagonal kernel.

pub mod closed;
pub mod tyz;

use std::sync::RwLock;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::measures::{MomentSequence, PhiProfile, RadialMeasureFamily};
use crate::mittag_leffler::{ml_eval, ml_series_complex, MlParams};
use crate::numeric::{binomial_u128, ln_falling, ScaledSeries};

pub use closed::*;
pub use tyz::*;

/// Fraction of R² beyond which the series is not trusted.
pub const GUARD_BAND: f64 = 0.95;
const MAX_TERMS: usize = 2_000_000;

/// N(l) = C(l+n−1, n−1) + C(l+n−2, n−1), exactly.
pub fn dim_p(n: u32, l: u64) -> Result<u128> {
    if n < 2 {
        return Err(invalid(format!("n must be ≥ 2, got {n}")));
    }
    let n1 = (n - 1) as u64;
    let a =
        binomial_u128(l + n1, n1).ok_or_else(|| Error::Overflow(format!("N({l}) for n={n}")))?;
    let b = binomial_u128(l + n1 - 1, n1)
        .ok_or_else(|| Error::Overflow(format!("N({l}) for n={n}")))?;
    a.checked_add(b)
        .ok_or_else(|| Error::Overflow(format!("N({l}) for n={n}")))
}

/// ln N(l), usable far beyond the u128 range.
pub fn ln_dim_p(n: u32, l: u64) -> f64 {
    // N(l) = (2l+n−1) (l+1)_{n−2} / (n−1)!
    let lf = l as f64;
    let mut acc = (2.0 * lf + n as f64 - 1.0).ln();
    for i in 1..=(n as u64).saturating_sub(2) {
        acc += (lf + i as f64).ln();
    }
    acc - ln_falling((n - 1) as u64, (n - 1) as u64)
}

/// ln(N(l1)/N(l2)) without cancellation when l1 and l2 are close.
pub fn ln_dim_ratio(n: u32, l1: u64, l2: u64) -> f64 {
    let d = l1 as f64 - l2 as f64;
    let l2f = l2 as f64;
    let mut acc = (2.0 * d / (2.0 * l2f + n as f64 - 1.0)).ln_1p();
    for i in 1..=(n as u64).saturating_sub(2) {
        acc += (d / (l2f + i as f64)).ln_1p();
    }
    acc
}

/// N(l+1)/N(l).
pub fn dim_ratio_next(n: u32, l: u64) -> f64 {
    let (lf, nf) = (l as f64, n as f64);
    (2.0 * lf + nf + 1.0) / (2.0 * lf + nf - 1.0) * (lf + nf - 1.0) / (lf + 1.0)
}

/// Memo table of N(l) for one n. Concurrent inserts are idempotent.
#[derive(Debug)]
pub struct DimensionTable {
    n: u32,
    cache: RwLock<Vec<u128>>,
}

impl DimensionTable {
    pub fn new(n: u32) -> Result<Self> {
        dim_p(n, 0)?;
        Ok(DimensionTable {
            n,
            cache: RwLock::new(Vec::new()),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn get(&self, l: u64) -> Result<u128> {
        if let Some(v) = self
            .cache
            .read()
            .ok()
            .and_then(|c| c.get(l as usize).copied())
        {
            return Ok(v);
        }
        let v = dim_p(self.n, l)?;
        if let Ok(mut c) = self.cache.write() {
            // fill densely so the vector index is the degree
            while (c.len() as u64) <= l {
                let next = dim_p(self.n, c.len() as u64)?;
                c.push(next);
            }
        }
        Ok(v)
    }
}

/// One Bergman space on H: dimension n and the moments of its radial measure.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub n: u32,
    pub moments: MomentSequence,
    pub label: String,
}

impl KernelSpec {
    pub fn new(moments: MomentSequence) -> Result<Self> {
        let n = moments
            .family()
            .dimension()
            .ok_or_else(|| invalid("a tabulated family needs an explicit dimension"))?;
        Self::with_dimension(n, moments)
    }

    pub fn with_dimension(n: u32, moments: MomentSequence) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("n must be ≥ 2, got {n}")));
        }
        if let Some(fam_n) = moments.family().dimension() {
            if fam_n != n {
                return Err(invalid(format!(
                    "family dimension {fam_n} does not match n = {n}"
                )));
            }
        }
        let label = moments.family().label().to_string();
        Ok(KernelSpec { n, moments, label })
    }

    pub fn from_family(family: RadialMeasureFamily) -> Result<Self> {
        Self::new(MomentSequence::new(family))
    }

    /// R², the radius of convergence of the series in t.
    pub fn radius_squared(&self) -> f64 {
        self.moments.family().radius_squared()
    }
}

/// A kernel series sum kept as mantissa · e^{ln_scale} so that it cannot overflow.
#[derive(Debug, Clone, Copy)]
pub struct SeriesSum {
    pub mantissa: Complex64,
    pub ln_scale: f64,
    pub terms: usize,
    /// Σ|term| / |sum|; rounding error is about condition · 1e−16 relative.
    pub condition: f64,
}

impl SeriesSum {
    pub fn value(&self) -> Result<Complex64> {
        let v = self.mantissa * self.ln_scale.exp();
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow(
                "kernel series value; use the scaled accessor".into(),
            ))
        }
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.ln_scale
    }
}

/// Cancellation beyond this factor costs more than half the working digits.
pub const MAX_CONDITION: f64 = 1e8;

/// K(t) = Σ_l N(l) t^l / q_{2l}, summed until the geometric tail bound
/// drops below `tol` relative to the partial sum. Fails with
/// `IllConditioned` when cancellation exceeds [`MAX_CONDITION`] (large
/// weights at Re t < 0); the scaled variant returns such sums with their
/// condition number.
pub fn kernel_series(spec: &KernelSpec, t: Complex64, tol: f64) -> Result<Complex64> {
    let sum = kernel_series_scaled(spec, t, tol)?;
    if sum.condition > MAX_CONDITION {
        return Err(Error::IllConditioned(format!(
            "kernel series at t = {t} cancels by a factor {:.3e}; use a closed form",
            sum.condition
        )));
    }
    sum.value()
}

pub fn kernel_series_scaled(spec: &KernelSpec, t: Complex64, tol: f64) -> Result<SeriesSum> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let r2 = spec.radius_squared();
    let at = t.norm();
    if !at.is_finite() {
        return Err(Error::Domain(format!("t = {t}")));
    }
    if at >= r2 {
        return Err(Error::Domain(format!(
            "|t| = {at} lies outside the disc of convergence R² = {r2}"
        )));
    }
    if at > GUARD_BAND * r2 {
        return Err(Error::NonConvergence {
            terms: 0,
            detail: format!(
                "|t| = {at} is inside the guard band ({GUARD_BAND}·R² = {}); use a closed form",
                GUARD_BAND * r2
            ),
        });
    }
    let n = spec.n;
    let q = &spec.moments;
    let mut series = ScaledSeries::start(Complex64::new(1.0, 0.0), -q.ln_moment(0)?);
    if at == 0.0 {
        let (m, s) = series.scaled_value();
        return Ok(SeriesSum {
            mantissa: m,
            ln_scale: s,
            terms: 1,
            condition: 1.0,
        });
    }
    let phase = t / at;
    let ln_t = at.ln();
    for l in 0..MAX_TERMS as u64 {
        let ln_ratio = dim_ratio_next(n, l).ln() + ln_t
            - q.ln_moment_ratio(2 * l as usize + 2, 2 * l as usize)?;
        let ratio = ln_ratio.exp();
        series.push_ratio(phase * ratio);
        // N(l+1)/N(l) and q_{2l}/q_{2l+2} are both nonincreasing, so the
        // current ratio bounds every later one
        if ratio < 1.0 && series.term_over_sum() * ratio / (1.0 - ratio) <= tol {
            let (m, s) = series.scaled_value();
            return Ok(SeriesSum {
                mantissa: m,
                ln_scale: s,
                terms: l as usize + 2,
                condition: series.condition(),
            });
        }
    }
    Err(Error::NonConvergence {
        terms: MAX_TERMS,
        detail: format!("kernel series at t = {t}"),
    })
}

/// A scalar analytic function with access to its derivatives, as used by
/// the closed-form kernel formulas.
pub trait Analytic: Send + Sync {
    /// f^{(order)}(z).
    fn derivative(&self, order: usize, z: Complex64) -> Result<Complex64>;
    /// Radius of convergence of the Taylor series at 0 (∞ for entire functions).
    fn radius(&self) -> f64;
}

/// F(t) = scale · e^{rate·t}.
#[derive(Debug, Clone, Copy)]
pub struct ExpGenerating {
    pub scale: f64,
    pub rate: f64,
}

impl Analytic for ExpGenerating {
    fn derivative(&self, order: usize, z: Complex64) -> Result<Complex64> {
        Ok(self.scale * self.rate.powi(order as i32) * (z * self.rate).exp())
    }

    fn radius(&self) -> f64 {
        f64::INFINITY
    }
}

/// F(t) = (m+1)(1−t)^{−(m+2)}, the generating function of the Jacobi
/// profile φ(r) = (1−r)^m.
#[derive(Debug, Clone, Copy)]
pub struct ExaGenerating {
    pub m: f64,
}

impl Analytic for ExaGenerating {
    fn derivative(&self, order: usize, z: Complex64) -> Result<Complex64> {
        if z.norm() >= 1.0 {
            return Err(Error::Domain(format!("|t| = {} ≥ 1", z.norm())));
        }
        let m = self.m;
        let poch: f64 = (0..order).map(|i| m + 2.0 + i as f64).product();
        let expo = m + 2.0 + order as f64;
        Ok((m + 1.0) * poch * (-expo * (Complex64::new(1.0, 0.0) - z).ln()).exp())
    }

    fn radius(&self) -> f64 {
        1.0
    }
}

/// F(t) = Σ t^k / c_k for a profile with closed-form moments c_k = ∫ r^k φ.
#[derive(Debug, Clone)]
pub struct PhiSeries {
    pub phi: PhiProfile,
    pub tol: f64,
}

impl PhiSeries {
    pub fn new(phi: PhiProfile) -> Result<Self> {
        phi.ln_moment(0.0)?;
        Ok(PhiSeries { phi, tol: 1e-17 })
    }
}

impl Analytic for PhiSeries {
    fn derivative(&self, order: usize, z: Complex64) -> Result<Complex64> {
        let radius = self.radius();
        let az = z.norm();
        if az >= GUARD_BAND * radius {
            return Err(Error::Domain(format!(
                "|t| = {az} is outside {GUARD_BAND}·R = {}",
                GUARD_BAND * radius
            )));
        }
        let j = order as u64;
        let head = ln_falling(j, j) - self.phi.ln_moment(order as f64)?;
        let mut series = ScaledSeries::start(Complex64::new(1.0, 0.0), head);
        if az == 0.0 {
            return series
                .value()
                .ok_or_else(|| Error::Overflow(format!("F^({order})(0)")));
        }
        let phase = z / az;
        let ln_z = az.ln();
        for k in order..order + MAX_TERMS {
            let kf = k as f64;
            let ln_ratio = ((kf + 1.0) / (kf + 1.0 - order as f64)).ln() + ln_z
                - self.phi.ln_moment_ratio(kf + 1.0, kf)?;
            let ratio = ln_ratio.exp();
            series.push_ratio(phase * ratio);
            if ratio < 1.0 && series.term_over_sum() * ratio / (1.0 - ratio) <= self.tol {
                return series
                    .value()
                    .ok_or_else(|| Error::Overflow(format!("F^({order})({z})")));
            }
        }
        Err(Error::NonConvergence {
            terms: MAX_TERMS,
            detail: format!("F^({order}) series at {z}"),
        })
    }

    fn radius(&self) -> f64 {
        self.phi.support_max()
    }
}

/// F(t) = m s^{1/m} E_{1/m,1/m}(s^{1/m} t), the generating function of
/// φ(r) = e^{−s r^m}.
#[derive(Debug, Clone, Copy)]
pub struct MlGenerating {
    pub m: f64,
    pub s: f64,
    params: MlParams,
}

impl MlGenerating {
    pub fn new(m: f64, s: f64) -> Result<Self> {
        if !(m > 0.0 && s > 0.0) {
            return Err(invalid(format!("need m, s > 0 (m={m}, s={s})")));
        }
        Ok(MlGenerating {
            m,
            s,
            params: MlParams::new(1.0 / m, 1.0 / m)?,
        })
    }
}

impl Analytic for MlGenerating {
    fn derivative(&self, order: usize, z: Complex64) -> Result<Complex64> {
        let sm = self.s.powf(1.0 / self.m);
        let tau = z * sm;
        let e = if tau.im == 0.0 && tau.re >= 0.0 {
            Complex64::new(ml_eval(&self.params, tau.re, order)?, 0.0)
        } else {
            ml_series_complex(self.params.alpha, self.params.beta, order, tau, 1e-17)?
        };
        Ok(self.m * sm.powi(order as i32 + 1) * e)
    }

    fn radius(&self) -> f64 {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::RadialMeasureFamily as F;
    use approx::assert_relative_eq;

    #[test]
    fn cancellation_is_reported() {
        let spec = KernelSpec::from_family(F::bergman_beta(2, 7.0).unwrap()).unwrap();
        let t = Complex64::new(-0.856495, -0.227764);
        assert!(matches!(
            kernel_series(&spec, t, 1e-16),
            Err(Error::IllConditioned(_))
        ));
        let scaled = kernel_series_scaled(&spec, t, 1e-16).unwrap();
        assert!(scaled.condition > MAX_CONDITION);
        let pos = kernel_series_scaled(&spec, c(0.5), 1e-16).unwrap();
        assert_relative_eq!(pos.condition, 1.0, max_relative = 1e-14);
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn dimension_examples() {
        assert_eq!(dim_p(2, 0).unwrap(), 1);
        assert_eq!(dim_p(2, 2).unwrap(), 5);
        assert_eq!(dim_p(3, 2).unwrap(), 9);
        for n in 2..8u32 {
            for l in 0..60u64 {
                let d = dim_p(n, l).unwrap() as f64;
                // (2l+n−1)(l+n−2)!/(l!(n−1)!)
                let closed = (2 * l + n as u64 - 1) as f64
                    * crate::numeric::factorial(l + n as u64 - 2)
                    / (crate::numeric::factorial(l) * crate::numeric::factorial(n as u64 - 1));
                assert_relative_eq!(d, closed, max_relative = 1e-13);
                assert_relative_eq!(ln_dim_p(n, l), d.ln(), epsilon = 1e-13);
                assert_relative_eq!(
                    dim_ratio_next(n, l),
                    dim_p(n, l + 1).unwrap() as f64 / d,
                    max_relative = 1e-15
                );
            }
        }
        let table = DimensionTable::new(3).unwrap();
        assert_eq!(table.get(10).unwrap(), 121);
        assert_eq!(table.get(2).unwrap(), 9);
    }

    #[test]
    fn series_examples() {
        let spec = KernelSpec::from_family(F::bergman_beta(2, 0.0).unwrap()).unwrap();
        assert_relative_eq!(
            kernel_series(&spec, c(0.0), 1e-16).unwrap().re,
            4.0,
            max_relative = 1e-15
        );
        let exa = KernelSpec::from_family(F::phi_radial(2, PhiProfile::Jacobi { m: 0.0 }).unwrap())
            .unwrap();
        assert_relative_eq!(
            kernel_series(&exa, c(0.0), 1e-16).unwrap().re,
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            kernel_series(&exa, c(0.5), 1e-16).unwrap().re,
            20.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn series_guards() {
        let spec = KernelSpec::from_family(F::bergman_beta(2, 0.0).unwrap()).unwrap();
        assert!(matches!(
            kernel_series(&spec, c(0.97), 1e-14),
            Err(Error::NonConvergence { .. })
        ));
        assert!(matches!(
            kernel_series(&spec, c(1.2), 1e-14),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hermitian_and_monotone() {
        let spec = KernelSpec::from_family(F::bergman_beta(3, 1.5).unwrap()).unwrap();
        let t = Complex64::new(0.3, 0.4);
        let a = kernel_series(&spec, t, 1e-16).unwrap();
        let b = kernel_series(&spec, t.conj(), 1e-16).unwrap();
        assert!((a - b.conj()).norm() <= 1e-14 * a.norm());
        let mut prev = 0.0;
        for i in 0..19 {
            let v = kernel_series(&spec, c(0.05 * i as f64), 1e-16).unwrap();
            assert!(v.re > prev && v.im == 0.0);
            prev = v.re;
        }
    }

    #[test]
    fn phi_series_matches_closed_generating_functions() {
        let f = PhiSeries::new(PhiProfile::Jacobi { m: 1.5 }).unwrap();
        let g = ExaGenerating { m: 1.5 };
        let z = Complex64::new(0.2, -0.3);
        for d in 0..5 {
            let (a, b) = (f.derivative(d, z).unwrap(), g.derivative(d, z).unwrap());
            assert!((a - b).norm() <= 1e-13 * b.norm(), "d={d}: {a} vs {b}");
        }
        let f = PhiSeries::new(PhiProfile::Exponential { c: 2.0 }).unwrap();
        let g = ExpGenerating {
            scale: 2.0,
            rate: 2.0,
        };
        for d in 0..5 {
            let (a, b) = (f.derivative(d, z).unwrap(), g.derivative(d, z).unwrap());
            assert!((a - b).norm() <= 1e-13 * b.norm());
        }
        let f = PhiSeries::new(PhiProfile::StretchedExp { s: 1.5, m: 2.0 }).unwrap();
        let g = MlGenerating::new(2.0, 1.5).unwrap();
        for z in [Complex64::new(0.7, 0.0), Complex64::new(0.4, 0.9)] {
            for d in 0..4 {
                let (a, b) = (f.derivative(d, z).unwrap(), g.derivative(d, z).unwrap());
                assert!(
                    (a - b).norm() <= 1e-12 * b.norm(),
                    "d={d} z={z}: {a} vs {b}"
                );
            }
        }
    }
}
