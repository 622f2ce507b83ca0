//! Small numerical kernels shared by every module: compensated summation,
//! log-Gamma ratios that survive cancellation, exact binomials.

use num_complex::Complex64;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Multiplies the running total by a power of two (exact).
    pub fn scale_pow2(&mut self, exp: i32) {
        let f = 2f64.powi(exp);
        self.sum *= f;
        self.comp *= f;
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of an iterator of reals.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn scale_pow2(&mut self, exp: i32) {
        self.re.scale_pow2(exp);
        self.im.scale_pow2(exp);
    }
}

/// Running state of a power series whose terms are produced by a ratio
/// recurrence. Terms and the partial sum share one binary exponent so that
/// neither can overflow; `ln_value` recovers the magnitude.
#[derive(Debug, Clone)]
pub struct ScaledSeries {
    exp2: i64,
    term: Complex64,
    sum: ComplexSum,
    // Σ|term| in the same scale, for the condition number
    abs_sum: CompensatedSum,
}

const RESCALE_ABOVE: f64 = 1e250;

impl ScaledSeries {
    /// Starts from a first term given as `mantissa * e^{ln_scale}`.
    pub fn start(mantissa: Complex64, ln_scale: f64) -> Self {
        let exp2 = (ln_scale / std::f64::consts::LN_2).floor();
        let rem = ln_scale - exp2 * std::f64::consts::LN_2;
        let term = mantissa * rem.exp();
        let mut sum = ComplexSum::new();
        sum.add(term);
        let mut abs_sum = CompensatedSum::new();
        abs_sum.add(term.norm());
        let mut s = ScaledSeries {
            exp2: exp2 as i64,
            term,
            sum,
            abs_sum,
        };
        s.renormalize();
        s
    }

    fn renormalize(&mut self) {
        let mag = self.term.norm();
        if mag > RESCALE_ABOVE
            || (mag > 0.0
                && mag < 1.0 / RESCALE_ABOVE
                && self.sum.value().norm() < 1.0 / RESCALE_ABOVE)
        {
            let e = mag.log2().floor() as i32;
            self.term *= 2f64.powi(-e);
            self.sum.scale_pow2(-e);
            self.abs_sum.scale_pow2(-e);
            self.exp2 += e as i64;
        }
    }

    /// Multiplies the current term by `ratio` and adds the result.
    #[inline]
    pub fn push_ratio(&mut self, ratio: Complex64) {
        self.term *= ratio;
        self.sum.add(self.term);
        self.abs_sum.add(self.term.norm());
        if self.term.norm() > RESCALE_ABOVE {
            self.renormalize();
        }
    }

    /// Current term relative to the current partial sum (both carry the same scale).
    pub fn term_over_sum(&self) -> f64 {
        let s = self.sum.value().norm();
        if s == 0.0 {
            f64::INFINITY
        } else {
            self.term.norm() / s
        }
    }

    /// Σ|term| / |Σ term|: roughly the factor by which rounding errors are
    /// amplified through cancellation (1 for series with one phase).
    pub fn condition(&self) -> f64 {
        let s = self.sum.value().norm();
        if s == 0.0 {
            f64::INFINITY
        } else {
            self.abs_sum.value() / s
        }
    }

    pub fn term_mantissa(&self) -> Complex64 {
        self.term
    }

    /// Partial sum as `(mantissa, ln_scale)`.
    pub fn scaled_value(&self) -> (Complex64, f64) {
        (self.sum.value(), self.exp2 as f64 * std::f64::consts::LN_2)
    }

    /// Natural log of the partial sum's modulus.
    pub fn ln_abs(&self) -> f64 {
        let (m, ls) = self.scaled_value();
        m.norm().ln() + ls
    }

    /// Partial sum in linear space, `None` if it does not fit in an f64.
    pub fn value(&self) -> Option<Complex64> {
        let (m, _) = self.scaled_value();
        if self.exp2 > 1023 + 60 {
            return None;
        }
        let v = if self.exp2 >= -1074 - 60 {
            let e = self.exp2.clamp(-2000, 2000) as i32;
            // split to avoid intermediate overflow of 2^e
            let half = e / 2;
            m * 2f64.powi(half) * 2f64.powi(e - half)
        } else {
            Complex64::new(0.0, 0.0)
        };
        if v.re.is_finite() && v.im.is_finite() {
            Some(v)
        } else {
            None
        }
    }
}

/// ln Γ(x) for x > 0.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Γ(x) for moderate positive x.
#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

fn stirling_correction(x: f64) -> f64 {
    // ln Γ(x) − [(x − ½) ln x − x + ½ ln 2π], valid for x ≥ 20
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0
                + r2 * (-1.0 / 1680.0 + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360360.0))))))
}

/// ln Γ(a) − ln Γ(b) for a, b > 0, accurate when a and b are close.
///
/// Integer offsets up to 256 go through an exact product; everything else
/// shifts both arguments past 20 and differences the Stirling series
/// analytically so that the large `x ln x` parts cancel before rounding.
pub fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0, "ln_gamma_ratio({a}, {b})");
    if a == b {
        return 0.0;
    }
    let d = a - b;
    if d.fract() == 0.0 && d.abs() <= 256.0 {
        let k = d.abs() as usize;
        let base = if d > 0.0 { b } else { a };
        let s = compensated_sum((0..k).map(|i| (base + i as f64).ln()));
        return if d > 0.0 { s } else { -s };
    }
    let lo = a.min(b);
    let shift = if lo < 20.0 {
        (20.0 - lo).ceil() as usize
    } else {
        0
    };
    let mut acc = CompensatedSum::new();
    for i in 0..shift {
        acc.add(-(d / (b + i as f64)).ln_1p());
    }
    let big_a = a + shift as f64;
    let big_b = b + shift as f64;
    acc.add(d * big_a.ln());
    acc.add((big_b - 0.5) * (d / big_b).ln_1p());
    acc.add(-d);
    acc.add(stirling_correction(big_a) - stirling_correction(big_b));
    acc.value()
}

/// ln [Γ(a+d) Γ(b) / (Γ(a) Γ(b+d))], the log of a ratio of two Pochhammer
/// symbols `(a)_d / (b)_d`. For integer `d` this is a sum of `ln1p` terms,
/// which keeps full relative accuracy even when the result is tiny.
pub fn ln_pochhammer_ratio(a: f64, b: f64, d: f64) -> f64 {
    if d.fract() == 0.0 && d.abs() <= 4096.0 {
        let k = d.abs() as usize;
        let diff = a - b;
        if d >= 0.0 {
            compensated_sum((0..k).map(|i| (diff / (b + i as f64)).ln_1p()))
        } else {
            // (a)_{-k} = 1 / (a-k)_k
            compensated_sum((1..=k).map(|i| -(diff / (b - i as f64)).ln_1p()))
        }
    } else {
        ln_gamma_ratio(a + d, a) - ln_gamma_ratio(b + d, b)
    }
}

/// Rising factorial (x)_k in floating point.
pub fn pochhammer(x: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (x + i as f64))
}

/// Exact binomial coefficient, `None` on u128 overflow.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

pub fn binomial(n: u64, k: u64) -> f64 {
    match binomial_u128(n, k) {
        Some(v) => v as f64,
        None => ln_binomial(n, k).exp(),
    }
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

pub fn factorial(k: u64) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// ln(k!/(k-d)!) for d ≤ k.
pub fn ln_falling(k: u64, d: u64) -> f64 {
    compensated_sum((0..d).map(|i| ((k - i) as f64).ln()))
}

/// Formats a float with 17 significant digits, locale-free.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{:.16e}", x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn neumaier_recovers_cancelled_mass() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn gamma_ratio_matches_factorials() {
        // Γ(10)/Γ(7) = 9·8·7
        assert_relative_eq!(ln_gamma_ratio(10.0, 7.0).exp(), 504.0, max_relative = 1e-15);
        assert_relative_eq!(
            ln_gamma_ratio(7.0, 10.0).exp(),
            1.0 / 504.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn gamma_ratio_agrees_with_lgamma_on_generic_arguments() {
        for &(a, b) in &[
            (0.3, 2.7),
            (5.5, 5.25),
            (40.1, 3.3),
            (1e3 + 0.5, 1e3),
            (2.5, 101.75),
        ] {
            let direct = ln_gamma(a) - ln_gamma(b);
            assert_relative_eq!(
                ln_gamma_ratio(a, b),
                direct,
                max_relative = 1e-12,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn gamma_ratio_half_integer_shift() {
        // Γ(n + 1/2)/Γ(n) for n = 1: √π / 2
        let v = ln_gamma_ratio(1.5, 1.0).exp();
        assert_relative_eq!(v, std::f64::consts::PI.sqrt() / 2.0, max_relative = 1e-15);
        // large argument: Γ(x+½)/Γ(x) ≈ √x (1 − 1/(8x))
        let x = 1e6;
        let v = ln_gamma_ratio(x + 0.5, x).exp();
        assert_relative_eq!(
            v,
            x.sqrt() * (1.0 - 1.0 / (8.0 * x) + 1.0 / (128.0 * x * x)),
            max_relative = 1e-14
        );
    }

    #[test]
    fn pochhammer_ratio_small_result_keeps_precision() {
        // (l+2)/(l+3) with l = 1e9 : ln = ln1p(-1/(l+3))
        let l = 1e9;
        let v = ln_pochhammer_ratio(l + 2.0, l + 3.0, 1.0);
        assert_relative_eq!(v, (-1.0 / (l + 3.0)).ln_1p(), max_relative = 1e-15);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_u128(5, 2), Some(10));
        assert_eq!(binomial_u128(60, 30), Some(118264581564861424));
        assert_eq!(binomial(4, 7), 0.0);
    }

    #[test]
    fn scaled_series_survives_overflowing_terms() {
        // Σ_{k≤400} e^{5k}: last term e^{2000} overflows f64
        let mut s = ScaledSeries::start(Complex64::new(1.0, 0.0), 0.0);
        let r = Complex64::new(5f64.exp(), 0.0);
        for _ in 0..400 {
            s.push_ratio(r);
        }
        assert!(s.value().is_none());
        let expect = 2000.0 - (-(-5f64).exp()).ln_1p();
        assert_relative_eq!(s.ln_abs(), expect, max_relative = 1e-14);
    }
}
