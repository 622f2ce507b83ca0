//! Radial measures on (0, ∞) and their moment sequences.
//!
//! Every family carries an exact backend (Gamma/Beta formulas evaluated in
//! log-space) and an adaptive-quadrature backend that integrates the density
//! directly. The two are kept independent so one can check the other.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::sync::{Arc, RwLock};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};
use crate::numeric::{fmt17, ln_gamma, ln_gamma_ratio, ln_pochhammer_ratio};
use crate::quadrature::{integrate, integrate_semi_infinite, QuadratureConfig};

/// A nonnegative profile φ on (0, ∞) entering `dρ(t) = 2 t^{2n−3} φ(t²) dt`.
#[derive(Clone)]
pub enum PhiProfile {
    /// φ(r) = (1 − r)^m on [0, 1], zero beyond; m > −1.
    Jacobi { m: f64 },
    /// φ(r) = e^{−c r}, c > 0.
    Exponential { c: f64 },
    /// φ(r) = e^{−s r^m}, s, m > 0.
    StretchedExp { s: f64, m: f64 },
    /// Arbitrary integrable profile; only the quadrature backend applies.
    Callable {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        support_max: f64,
        label: String,
    },
}

impl fmt::Debug for PhiProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiProfile::Jacobi { m } => write!(f, "Jacobi {{ m: {m} }}"),
            PhiProfile::Exponential { c } => write!(f, "Exponential {{ c: {c} }}"),
            PhiProfile::StretchedExp { s, m } => write!(f, "StretchedExp {{ s: {s}, m: {m} }}"),
            PhiProfile::Callable {
                support_max, label, ..
            } => {
                write!(
                    f,
                    "Callable {{ label: {label:?}, support_max: {support_max} }}"
                )
            }
        }
    }
}

impl PhiProfile {
    pub fn callable(
        label: impl Into<String>,
        support_max: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PhiProfile::Callable {
            f: Arc::new(f),
            support_max,
            label: label.into(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PhiProfile::Jacobi { m } if !(m > -1.0) => {
                Err(invalid(format!("Jacobi profile needs m > -1, got {m}")))
            }
            PhiProfile::Exponential { c } if !(c > 0.0) => {
                Err(invalid(format!("exponential profile needs c > 0, got {c}")))
            }
            PhiProfile::StretchedExp { s, m } if !(s > 0.0 && m > 0.0) => Err(invalid(format!(
                "stretched exponential needs s, m > 0, got s={s}, m={m}"
            ))),
            PhiProfile::Callable { support_max, .. } if !(support_max > 0.0) => {
                Err(invalid("callable profile needs a positive support bound"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            PhiProfile::Jacobi { m } => {
                if (0.0..=1.0).contains(&r) {
                    (1.0 - r).powf(*m)
                } else {
                    0.0
                }
            }
            PhiProfile::Exponential { c } => (-c * r).exp(),
            PhiProfile::StretchedExp { s, m } => (-s * r.powf(*m)).exp(),
            PhiProfile::Callable { f, support_max, .. } => {
                if r <= *support_max {
                    f(r)
                } else {
                    0.0
                }
            }
        }
    }

    /// Upper end of the support of φ (in the variable r = t²).
    pub fn support_max(&self) -> f64 {
        match self {
            PhiProfile::Jacobi { .. } => 1.0,
            PhiProfile::Exponential { .. } | PhiProfile::StretchedExp { .. } => f64::INFINITY,
            PhiProfile::Callable { support_max, .. } => *support_max,
        }
    }

    /// ln c_j with c_j = ∫ r^j φ(r) dr, for real j > −1.
    pub fn ln_moment(&self, j: f64) -> Result<f64> {
        match *self {
            PhiProfile::Jacobi { m } => {
                Ok(ln_gamma_ratio(j + 1.0, j + m + 2.0) + ln_gamma(m + 1.0))
            }
            PhiProfile::Exponential { c } => Ok(ln_gamma(j + 1.0) - (j + 1.0) * c.ln()),
            PhiProfile::StretchedExp { s, m } => {
                let a = (j + 1.0) / m;
                Ok(ln_gamma(a) - m.ln() - a * s.ln())
            }
            PhiProfile::Callable { .. } => Err(Error::Unsupported(
                "callable profile has no closed-form moments".into(),
            )),
        }
    }

    /// ln(c_{j1}/c_{j2}).
    pub fn ln_moment_ratio(&self, j1: f64, j2: f64) -> Result<f64> {
        match *self {
            PhiProfile::Jacobi { m } => {
                // Γ(j+1)/Γ(j+m+2)
                Ok(ln_pochhammer_ratio(j2 + 1.0, j2 + m + 2.0, j1 - j2))
            }
            PhiProfile::Exponential { c } => {
                Ok(ln_gamma_ratio(j1 + 1.0, j2 + 1.0) - (j1 - j2) * c.ln())
            }
            PhiProfile::StretchedExp { s, m } => {
                Ok(ln_gamma_ratio((j1 + 1.0) / m, (j2 + 1.0) / m) - (j1 - j2) / m * s.ln())
            }
            PhiProfile::Callable { .. } => Err(Error::Unsupported(
                "callable profile has no closed-form moments".into(),
            )),
        }
    }

    fn quadrature_ln_moment(&self, j: f64, cfg: QuadratureConfig) -> Result<f64> {
        match self {
            PhiProfile::Jacobi { m } => Ok(ln_beta_integral(j + 1.0, *m, cfg)?),
            PhiProfile::Exponential { c } => {
                Ok(ln_gamma_integral(j + 1.0, cfg)? - (j + 1.0) * c.ln())
            }
            PhiProfile::StretchedExp { s, m } => {
                // x = s r^m
                let a = (j + 1.0) / m;
                Ok(ln_gamma_integral(a, cfg)? - m.ln() - a * s.ln())
            }
            PhiProfile::Callable { f, support_max, .. } => {
                let g = |r: f64| if r > 0.0 { r.powf(j) * f(r) } else { 0.0 };
                let res = if support_max.is_finite() {
                    integrate(g, 0.0, *support_max, cfg)?
                } else {
                    integrate_semi_infinite(g, 0.0, 1.0 + j.max(0.0), cfg)?
                };
                if !(res.value > 0.0) {
                    return Err(Error::Domain(format!(
                        "moment of callable profile is not positive: {}",
                        res.value
                    )));
                }
                Ok(res.value.ln())
            }
        }
    }

    pub fn describe(&self) -> Value {
        match self {
            PhiProfile::Jacobi { m } => json!({"profile": "jacobi", "m": m}),
            PhiProfile::Exponential { c } => json!({"profile": "exponential", "c": c}),
            PhiProfile::StretchedExp { s, m } => {
                json!({"profile": "stretched-exp", "s": s, "m": m})
            }
            PhiProfile::Callable {
                label, support_max, ..
            } => {
                json!({"profile": "callable", "label": label, "support_max": support_max})
            }
        }
    }
}

/// Which moments a tabulated list holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// `moments[k] = q_k`.
    All,
    /// `moments[j] = q_{2j}`; odd moments are unavailable.
    EvenOnly,
}

#[derive(Debug, Clone)]
pub enum RadialMeasureFamily {
    /// dρ = 2cm e^{−s t^{2m}} t^{2mn−1} dt.
    PowerExp { c: f64, m: f64, n: u32, s: f64 },
    /// dρ = χ_{[0,1]} (1 − t²)^s t^{2n−1} dt.
    BergmanBeta { n: u32, s: f64 },
    /// dρ = 2 t^{2n−3} φ(t²) dt (geometric constant fixed to 1).
    PhiRadial { n: u32, phi: PhiProfile },
    /// Explicit moment list.
    Tabulated {
        support_max: f64,
        moments: Vec<f64>,
        parity: Parity,
    },
}

impl RadialMeasureFamily {
    pub fn power_exp(c: f64, m: f64, n: u32, s: f64) -> Result<Self> {
        if !(c > 0.0 && m > 0.0 && s > 0.0) || n < 2 {
            return Err(invalid(format!(
                "power-exp needs c, m, s > 0 and n ≥ 2 (c={c}, m={m}, n={n}, s={s})"
            )));
        }
        Ok(RadialMeasureFamily::PowerExp { c, m, n, s })
    }

    pub fn bergman_beta(n: u32, s: f64) -> Result<Self> {
        if n < 2 || !(s > -1.0) {
            return Err(invalid(format!(
                "bergman-beta needs n ≥ 2 and s > -1 (n={n}, s={s})"
            )));
        }
        Ok(RadialMeasureFamily::BergmanBeta { n, s })
    }

    pub fn phi_radial(n: u32, phi: PhiProfile) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("phi-radial needs n ≥ 2, got {n}")));
        }
        phi.validate()?;
        Ok(RadialMeasureFamily::PhiRadial { n, phi })
    }

    pub fn tabulated(support_max: f64, moments: Vec<f64>, parity: Parity) -> Result<Self> {
        if !(support_max > 0.0) {
            return Err(invalid("tabulated family needs a positive support bound"));
        }
        if moments.is_empty() {
            return Err(invalid("tabulated family needs at least one moment"));
        }
        if let Some((i, q)) = moments
            .iter()
            .enumerate()
            .find(|(_, q)| !(**q > 0.0 && q.is_finite()))
        {
            return Err(invalid(format!(
                "tabulated moment #{i} is not a positive finite number: {q}"
            )));
        }
        Ok(RadialMeasureFamily::Tabulated {
            support_max,
            moments,
            parity,
        })
    }

    /// Complex dimension n baked into the family, when it has one.
    pub fn dimension(&self) -> Option<u32> {
        match self {
            RadialMeasureFamily::PowerExp { n, .. }
            | RadialMeasureFamily::BergmanBeta { n, .. }
            | RadialMeasureFamily::PhiRadial { n, .. } => Some(*n),
            RadialMeasureFamily::Tabulated { .. } => None,
        }
    }

    /// R = sup supp ρ.
    pub fn support_radius(&self) -> f64 {
        match self {
            RadialMeasureFamily::PowerExp { .. } => f64::INFINITY,
            RadialMeasureFamily::BergmanBeta { .. } => 1.0,
            RadialMeasureFamily::PhiRadial { phi, .. } => phi.support_max().sqrt(),
            RadialMeasureFamily::Tabulated { support_max, .. } => *support_max,
        }
    }

    /// Density of ρ with respect to dt, where one exists.
    pub fn density(&self, t: f64) -> Option<f64> {
        if t <= 0.0 {
            return Some(0.0);
        }
        match self {
            RadialMeasureFamily::PowerExp { c, m, n, s } => {
                Some(2.0 * c * m * (-s * t.powf(2.0 * m)).exp() * t.powf(2.0 * m * *n as f64 - 1.0))
            }
            RadialMeasureFamily::BergmanBeta { n, s } => {
                if t < 1.0 {
                    Some((1.0 - t * t).powf(*s) * t.powi(2 * *n as i32 - 1))
                } else {
                    Some(0.0)
                }
            }
            RadialMeasureFamily::PhiRadial { n, phi } => {
                Some(2.0 * t.powi(2 * *n as i32 - 3) * phi.eval(t * t))
            }
            RadialMeasureFamily::Tabulated { .. } => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RadialMeasureFamily::PowerExp { .. } => "power-exp",
            RadialMeasureFamily::BergmanBeta { .. } => "bergman-beta",
            RadialMeasureFamily::PhiRadial { .. } => "phi-radial",
            RadialMeasureFamily::Tabulated { .. } => "tabulated",
        }
    }

    pub fn describe(&self) -> Value {
        match self {
            RadialMeasureFamily::PowerExp { c, m, n, s } => {
                json!({"family": "power-exp", "c": c, "m": m, "n": n, "s": s})
            }
            RadialMeasureFamily::BergmanBeta { n, s } => {
                json!({"family": "bergman-beta", "n": n, "s": s})
            }
            RadialMeasureFamily::PhiRadial { n, phi } => {
                json!({"family": "phi-radial", "n": n, "phi": phi.describe()})
            }
            RadialMeasureFamily::Tabulated {
                support_max,
                moments,
                parity,
            } => json!({
                "family": "tabulated",
                "support_max": support_max,
                "len": moments.len(),
                "parity": if *parity == Parity::All { "all" } else { "even-only" },
            }),
        }
    }

    fn tabulated_index(moments: &[f64], parity: Parity, k: usize) -> Result<f64> {
        let idx = match parity {
            Parity::All => k,
            Parity::EvenOnly => {
                if k % 2 == 1 {
                    return Err(Error::Unsupported(format!(
                        "odd moment q_{k} of an even-only table"
                    )));
                }
                k / 2
            }
        };
        moments.get(idx).copied().ok_or_else(|| {
            Error::Unsupported(format!("moment q_{k} lies beyond the tabulated range"))
        })
    }

    /// ln q_k from the closed-form moment formula.
    pub fn exact_ln_moment(&self, k: usize) -> Result<f64> {
        let kf = k as f64;
        match self {
            RadialMeasureFamily::PowerExp { c, m, n, s } => {
                let a = (kf + 2.0 * m * *n as f64) / (2.0 * m);
                Ok(c.ln() + ln_gamma(a) - a * s.ln())
            }
            RadialMeasureFamily::BergmanBeta { n, s } => {
                // ½ B(a, s+1) with a = (k + 2n)/2
                let a = (kf + 2.0 * *n as f64) / 2.0;
                Ok(ln_gamma_ratio(a, a + s + 1.0) + ln_gamma(s + 1.0) - std::f64::consts::LN_2)
            }
            RadialMeasureFamily::PhiRadial { n, phi } => phi.ln_moment(kf / 2.0 + *n as f64 - 2.0),
            RadialMeasureFamily::Tabulated {
                moments, parity, ..
            } => Ok(Self::tabulated_index(moments, *parity, k)?.ln()),
        }
    }

    /// ln(q_{k1}/q_{k2}) in a cancellation-free form.
    pub fn exact_ln_moment_ratio(&self, k1: usize, k2: usize) -> Result<f64> {
        if k1 == k2 {
            // still validate availability
            self.exact_ln_moment(k1)?;
            return Ok(0.0);
        }
        let (k1f, k2f) = (k1 as f64, k2 as f64);
        match self {
            RadialMeasureFamily::PowerExp { m, n, s, .. } => {
                let a1 = (k1f + 2.0 * m * *n as f64) / (2.0 * m);
                let a2 = (k2f + 2.0 * m * *n as f64) / (2.0 * m);
                Ok(ln_gamma_ratio(a1, a2) - (a1 - a2) * s.ln())
            }
            RadialMeasureFamily::BergmanBeta { n, s } => {
                // Γ(a)/Γ(a+s+1) with a = (k+2n)/2: ratio of Pochhammer symbols
                let a2 = (k2f + 2.0 * *n as f64) / 2.0;
                Ok(ln_pochhammer_ratio(a2, a2 + s + 1.0, (k1f - k2f) / 2.0))
            }
            RadialMeasureFamily::PhiRadial { n, phi } => {
                let off = *n as f64 - 2.0;
                phi.ln_moment_ratio(k1f / 2.0 + off, k2f / 2.0 + off)
            }
            RadialMeasureFamily::Tabulated {
                moments, parity, ..
            } => {
                let q1 = Self::tabulated_index(moments, *parity, k1)?;
                let q2 = Self::tabulated_index(moments, *parity, k2)?;
                Ok((q1 / q2).ln())
            }
        }
    }

    /// ln q_k by adaptive quadrature of the density, independent of the
    /// closed-form path.
    pub fn quadrature_ln_moment(&self, k: usize, rel_tol: f64) -> Result<f64> {
        if !(rel_tol > 0.0) {
            return Err(invalid(format!(
                "quadrature tolerance must be positive, got {rel_tol}"
            )));
        }
        let cfg = QuadratureConfig::with_rel_tol(rel_tol);
        let kf = k as f64;
        match self {
            RadialMeasureFamily::PowerExp { c, m, n, s } => {
                // x = s t^{2m}
                let a = (kf + 2.0 * m * *n as f64) / (2.0 * m);
                Ok(c.ln() - a * s.ln() + ln_gamma_integral(a, cfg)?)
            }
            RadialMeasureFamily::BergmanBeta { n, s } => {
                // u = t²
                let a = (kf + 2.0 * *n as f64) / 2.0;
                Ok(ln_beta_integral(a, *s, cfg)? - std::f64::consts::LN_2)
            }
            RadialMeasureFamily::PhiRadial { n, phi } => {
                phi.quadrature_ln_moment(kf / 2.0 + *n as f64 - 2.0, cfg)
            }
            RadialMeasureFamily::Tabulated { .. } => Err(Error::Unsupported(
                "a tabulated family has no density to integrate".into(),
            )),
        }
    }

    /// R² as the limit of q_{2k+2}/q_{2k}; the kernel series converges for |t| < R².
    pub fn radius_squared(&self) -> f64 {
        let r = self.support_radius();
        r * r
    }
}

/// ln ∫₀^∞ x^{a−1} e^{−x} dx by quadrature, split at the mode.
fn ln_gamma_integral(a: f64, cfg: QuadratureConfig) -> Result<f64> {
    if !(a > 0.0) {
        return Err(invalid(format!("gamma integral needs a > 0, got {a}")));
    }
    if a < 1.0 {
        // ∫₀¹ via y = x^a removes the endpoint singularity
        let head = integrate(|y: f64| (-y.powf(1.0 / a)).exp(), 0.0, 1.0, cfg)?.value / a;
        let tail =
            integrate_semi_infinite(|x: f64| ((a - 1.0) * x.ln() - x).exp(), 1.0, 1.0, cfg)?.value;
        return Ok((head + tail).ln());
    }
    let mode = a - 1.0;
    let ln_peak = if mode > 0.0 {
        mode * mode.ln() - mode
    } else {
        0.0
    };
    let g = |x: f64| {
        if x <= 0.0 {
            if a == 1.0 {
                (-ln_peak).exp()
            } else {
                0.0
            }
        } else {
            ((a - 1.0) * x.ln() - x - ln_peak).exp()
        }
    };
    let width = a.sqrt().max(1.0);
    let head = if mode > 0.0 {
        integrate(g, 0.0, mode, cfg)?.value
    } else {
        0.0
    };
    let tail = integrate_semi_infinite(g, mode, width, cfg)?.value;
    Ok(ln_peak + (head + tail).ln())
}

/// ln ∫₀¹ u^{a−1} (1 − u)^s du by quadrature; s > −1, a ≥ 1.
fn ln_beta_integral(a: f64, s: f64, cfg: QuadratureConfig) -> Result<f64> {
    let value = if s >= 0.0 {
        integrate(
            |u: f64| {
                if u <= 0.0 {
                    if a == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    ((a - 1.0) * u.ln() + s * (-u).ln_1p()).exp()
                }
            },
            0.0,
            1.0,
            cfg,
        )?
        .value
    } else {
        // 1 − u = w^q with q = 1/(s+1) makes the endpoint singularity regular
        let q = 1.0 / (s + 1.0);
        q * integrate(
            |w: f64| (1.0 - w.powf(q)).max(0.0).powf(a - 1.0),
            0.0,
            1.0,
            cfg,
        )?
        .value
    };
    if !(value > 0.0) {
        return Err(Error::Domain(format!(
            "beta integral is not positive: {value}"
        )));
    }
    Ok(value.ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Exact,
    Quadrature { rel_tol: f64 },
}

/// The moments q_k of a radial measure, with a concurrent memo table of ln q_k.
pub struct MomentSequence {
    family: RadialMeasureFamily,
    backend: Backend,
    cache: RwLock<HashMap<usize, f64>>,
}

impl fmt::Debug for MomentSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentSequence")
            .field("family", &self.family)
            .field("backend", &self.backend)
            .finish()
    }
}

impl Clone for MomentSequence {
    fn clone(&self) -> Self {
        let cache = self.cache.read().map(|c| c.clone()).unwrap_or_default();
        MomentSequence {
            family: self.family.clone(),
            backend: self.backend,
            cache: RwLock::new(cache),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub k: usize,
    /// `None` when q_k overflows f64.
    pub q_k: Option<f64>,
    pub log_q_k: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_q_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_diff: Option<f64>,
}

impl MomentSequence {
    pub fn new(family: RadialMeasureFamily) -> Self {
        let backend = match &family {
            RadialMeasureFamily::PhiRadial {
                phi: PhiProfile::Callable { .. },
                ..
            } => Backend::Quadrature { rel_tol: 1e-12 },
            _ => Backend::Exact,
        };
        Self::with_backend(family, backend)
    }

    pub fn with_backend(family: RadialMeasureFamily, backend: Backend) -> Self {
        MomentSequence {
            family,
            backend,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn family(&self) -> &RadialMeasureFamily {
        &self.family
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// ln q_k.
    pub fn ln_moment(&self, k: usize) -> Result<f64> {
        if let Some(v) = self.cache.read().ok().and_then(|c| c.get(&k).copied()) {
            return Ok(v);
        }
        let v = match self.backend {
            Backend::Exact => self.family.exact_ln_moment(k)?,
            Backend::Quadrature { rel_tol } => self.family.quadrature_ln_moment(k, rel_tol)?,
        };
        if let Ok(mut c) = self.cache.write() {
            c.insert(k, v);
        }
        Ok(v)
    }

    /// q_k in linear space.
    pub fn moment(&self, k: usize) -> Result<f64> {
        if let (
            Backend::Exact,
            RadialMeasureFamily::Tabulated {
                moments, parity, ..
            },
        ) = (self.backend, &self.family)
        {
            return RadialMeasureFamily::tabulated_index(moments, *parity, k);
        }
        let ln = self.ln_moment(k)?;
        let v = ln.exp();
        if !v.is_finite() {
            return Err(Error::Overflow(format!("q_{k} = exp({ln})")));
        }
        Ok(v)
    }

    /// ln(q_{k1}/q_{k2}).
    pub fn ln_moment_ratio(&self, k1: usize, k2: usize) -> Result<f64> {
        match self.backend {
            Backend::Exact => self.family.exact_ln_moment_ratio(k1, k2),
            Backend::Quadrature { .. } => Ok(self.ln_moment(k1)? - self.ln_moment(k2)?),
        }
    }

    /// q_{k1}/q_{k2}.
    pub fn moment_ratio(&self, k1: usize, k2: usize) -> Result<f64> {
        let v = self.ln_moment_ratio(k1, k2)?.exp();
        if !v.is_finite() {
            return Err(Error::Overflow(format!("q_{k1}/q_{k2}")));
        }
        Ok(v)
    }

    /// Independent quadrature value of q_k regardless of the configured backend.
    pub fn quadrature_oracle(&self, k: usize, rel_tol: f64) -> Result<f64> {
        Ok(self.family.quadrature_ln_moment(k, rel_tol)?.exp())
    }

    /// Rows k = 0..=k_max, optionally with a quadrature cross-check column.
    pub fn table(&self, k_max: usize, check_quadrature: Option<f64>) -> Result<Vec<MomentRow>> {
        (0..=k_max)
            .map(|k| {
                let log_q_k = self.ln_moment(k)?;
                let q = log_q_k.exp();
                let q_k = q.is_finite().then_some(q);
                let (quadrature_q_k, rel_diff) = match check_quadrature {
                    Some(tol) => {
                        let lq = self.family.quadrature_ln_moment(k, tol)?;
                        (Some(lq.exp()), Some((lq - log_q_k).exp_m1().abs()))
                    }
                    None => (None, None),
                };
                Ok(MomentRow {
                    k,
                    q_k,
                    log_q_k,
                    quadrature_q_k,
                    rel_diff,
                })
            })
            .collect()
    }
}

/// Writes moment rows as CSV (columns k, q_k, log_q_k[, quadrature_q_k, rel_diff]).
pub fn write_moments_csv<W: Write>(mut w: W, rows: &[MomentRow]) -> std::io::Result<()> {
    let with_quad = rows.iter().any(|r| r.quadrature_q_k.is_some());
    if with_quad {
        writeln!(w, "k,q_k,log_q_k,quadrature_q_k,rel_diff")?;
    } else {
        writeln!(w, "k,q_k,log_q_k")?;
    }
    for r in rows {
        let q = r.q_k.map(fmt17).unwrap_or_else(|| "inf".into());
        if with_quad {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.k,
                q,
                fmt17(r.log_q_k),
                r.quadrature_q_k.map(fmt17).unwrap_or_default(),
                r.rel_diff.map(fmt17).unwrap_or_default()
            )?;
        } else {
            writeln!(w, "{},{},{}", r.k, q, fmt17(r.log_q_k))?;
        }
    }
    Ok(())
}
