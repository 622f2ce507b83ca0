//! Spectrum of the positive operator H = Σ C(m,α) H̄*_{z^α} H̄_{z^α}, which
//! acts on the degree-l component as the scalar
//! λ_l = q_{2l+2m}/q_{2l} − d_l/d_{l−m}, d_l = q_{2l}/N(l), d_{<0} = ∞,
//! and the Schatten-class diagnostics built on it.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernels::{dim_p, ln_dim_p, ln_dim_ratio};
use crate::measures::{MomentSequence, Parity, RadialMeasureFamily};
use crate::numeric::{fmt17, CompensatedSum};

/// Exponents within this distance of −1 are treated as the harmonic case.
const HARMONIC_BAND: f64 = 0.02;
/// Relative spread allowed between S_{2L'} − S_{L'} at L' = L/100, L/10, L.
const HARMONIC_SPREAD: f64 = 0.10;

#[derive(Debug, Clone)]
pub struct HankelSpectrum {
    pub n: u32,
    pub m: u32,
    pub moments: MomentSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

impl Verdict {
    pub fn letter(self) -> &'static str {
        match self {
            Verdict::Converges => "C",
            Verdict::Diverges => "D",
            Verdict::Inconclusive => "?",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Converges => "converges",
            Verdict::Diverges => "diverges",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SchattenResult {
    pub p: f64,
    pub l_max: u64,
    /// S_L = Σ_{l≤L} λ_l^{p/2} N(l).
    pub partial_sum: f64,
    /// S_{2L} / S_L.
    pub growth_ratio: f64,
    /// Fitted exponent e of the term model l^e.
    pub term_exponent: f64,
    /// Integral-test tail Σ_{l>L} for convergent sums, +∞ otherwise.
    pub tail_estimate: f64,
    /// S_{2L'} − S_{L'} at L' = L/100, L/10, L.
    pub doubling_increments: [f64; 3],
    pub verdict: Verdict,
}

/// λ_0..λ_{len−1} together with ln N(l), shared by every p of a scan.
#[derive(Debug, Clone)]
pub struct SpectrumTable {
    pub lambda: Vec<f64>,
    pub ln_dim: Vec<f64>,
}

impl HankelSpectrum {
    pub fn new(n: u32, m: u32, moments: MomentSequence) -> Result<Self> {
        if n < 2 || m < 1 {
            return Err(invalid(format!("need n ≥ 2 and m ≥ 1 (n={n}, m={m})")));
        }
        if let Some(fam_n) = moments.family().dimension() {
            if fam_n != n {
                return Err(invalid(format!(
                    "family dimension {fam_n} does not match n = {n}"
                )));
            }
        }
        Ok(HankelSpectrum { n, m, moments })
    }

    pub fn multiplicity(&self, l: u64) -> Result<u128> {
        dim_p(self.n, l)
    }

    /// λ_l = e^{lb}·expm1(la − lb) with la = ln(q_{2l+2m}/q_{2l}) and
    /// lb = ln(q_{2l}/q_{2l−2m}) + ln(N(l−m)/N(l)) (lb = −∞ when l < m).
    pub fn eigenvalue(&self, l: u64) -> Result<f64> {
        let m = self.m as u64;
        let k = 2 * l as usize;
        let la = self.moments.ln_moment_ratio(k + 2 * m as usize, k)?;
        if l < m {
            return Ok(la.exp());
        }
        let lb =
            self.moments.ln_moment_ratio(k, k - 2 * m as usize)? + ln_dim_ratio(self.n, l - m, l);
        Ok(lb.exp() * (la - lb).exp_m1())
    }

    /// λ_l in exact rational arithmetic, for the Bergman-type measure with
    /// integer s ≥ 0 where q_{2l} = s!(l+n−1)!/(2(l+n+s)!).
    pub fn eigenvalue_exact(&self, l: u64) -> Result<BigRational> {
        let s = match self.moments.family() {
            RadialMeasureFamily::BergmanBeta { s, .. } if *s >= 0.0 && s.fract() == 0.0 => {
                *s as u64
            }
            _ => {
                return Err(Error::Unsupported(
                    "exact spectrum needs the Bergman-type measure with integer s ≥ 0".into(),
                ))
            }
        };
        let n = self.n as u64;
        let m = self.m as u64;
        // q_{2j+2}/q_{2j} = (j+n)/(j+n+s+1)
        let step = |j: u64| BigRational::new(BigInt::from(j + n), BigInt::from(j + n + s + 1));
        let mut first = BigRational::one();
        for j in l..l + m {
            first *= step(j);
        }
        if l < m {
            return Ok(first);
        }
        let mut second = BigRational::one();
        for j in l - m..l {
            second *= step(j);
        }
        let nr = BigRational::new(
            BigInt::from(dim_p(self.n, l - m)?),
            BigInt::from(dim_p(self.n, l)?),
        );
        Ok(first - second * nr)
    }

    /// λ_l and ln N(l) for l = 0..len.
    pub fn table(&self, len: u64) -> Result<SpectrumTable> {
        let mut lambda = Vec::with_capacity(len as usize);
        let mut ln_dim = Vec::with_capacity(len as usize);
        for l in 0..len {
            lambda.push(self.eigenvalue(l)?);
            ln_dim.push(ln_dim_p(self.n, l));
        }
        Ok(SpectrumTable { lambda, ln_dim })
    }

    pub fn schatten_partial(&self, p: f64, l_max: u64) -> Result<SchattenResult> {
        check_schatten(p, l_max)?;
        let table = self.table(2 * l_max + 1)?;
        schatten_from_table(&table, p, l_max)
    }

    /// One verdict per p, all from a single spectrum table up to 2L.
    pub fn cutoff_scan(&self, p_grid: &[f64], l_max: u64) -> Result<Vec<SchattenResult>> {
        for &p in p_grid {
            check_schatten(p, l_max)?;
        }
        let table = self.table(2 * l_max + 1)?;
        p_grid
            .iter()
            .map(|&p| schatten_from_table(&table, p, l_max))
            .collect()
    }

    /// Largest l·|l λ_l − (n−1)m| over the sampled l ≥ l_min, i.e. the
    /// constant C in |l λ_l − (n−1)m| ≤ C/l.
    pub fn asymptotic_constant(&self, ls: &[u64]) -> Result<f64> {
        let target = (self.n as f64 - 1.0) * self.m as f64;
        let mut c: f64 = 0.0;
        for &l in ls {
            let lf = l as f64;
            c = c.max(lf * (lf * self.eigenvalue(l)? - target).abs());
        }
        Ok(c)
    }
}

fn check_schatten(p: f64, l_max: u64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid(format!("p must be positive, got {p}")));
    }
    if l_max < 10 {
        return Err(invalid(format!("L must be ≥ 10, got {l_max}")));
    }
    Ok(())
}

fn ln_term(table: &SpectrumTable, p: f64, l: usize) -> Result<f64> {
    let lam = table.lambda[l];
    if lam < 0.0 {
        if lam >= -1e-15 {
            return Ok(f64::NEG_INFINITY);
        }
        return Err(Error::Domain(format!("λ_{l} = {lam} is negative")));
    }
    Ok(0.5 * p * lam.ln() + table.ln_dim[l])
}

fn partial_sums(table: &SpectrumTable, p: f64, upto: usize) -> Result<Vec<f64>> {
    // prefix sums S_0..S_upto in ascending order
    let mut out = Vec::with_capacity(upto + 1);
    let mut acc = CompensatedSum::new();
    for l in 0..=upto {
        acc.add(ln_term(table, p, l)?.exp());
        out.push(acc.value());
    }
    Ok(out)
}

fn schatten_from_table(table: &SpectrumTable, p: f64, l_max: u64) -> Result<SchattenResult> {
    let big_l = l_max as usize;
    if table.lambda.len() < 2 * big_l + 1 {
        return Err(Error::LengthMismatch(table.lambda.len(), 2 * big_l + 1));
    }
    let sums = partial_sums(table, p, 2 * big_l)?;
    let s_l = sums[big_l];
    let half = big_l / 2;
    let kappa = (table.lambda[big_l] / table.lambda[half]).ln() / (big_l as f64 / half as f64).ln();
    let nu = (table.ln_dim[big_l] - table.ln_dim[half]) / (big_l as f64 / half as f64).ln();
    let e = 0.5 * p * kappa + nu;
    let increments = [big_l / 100, big_l / 10, big_l].map(|lp| {
        let lp = lp.max(1);
        sums[2 * lp] - sums[lp]
    });
    let term_l = ln_term(table, p, big_l)?.exp();
    let (verdict, tail) = if e < -1.0 - HARMONIC_BAND {
        (Verdict::Converges, term_l * big_l as f64 / (-e - 1.0))
    } else if e > -1.0 + HARMONIC_BAND {
        (Verdict::Diverges, f64::INFINITY)
    } else {
        let lo = increments.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = increments.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo > 0.0 && (hi - lo) / hi <= HARMONIC_SPREAD {
            (Verdict::Diverges, f64::INFINITY)
        } else {
            (Verdict::Inconclusive, f64::NAN)
        }
    };
    Ok(SchattenResult {
        p,
        l_max,
        partial_sum: s_l,
        growth_ratio: sums[2 * big_l] / s_l,
        term_exponent: e,
        tail_estimate: tail,
        doubling_increments: increments,
        verdict,
    })
}

/// Tabulated even moments q_{2k} = a (k+1)^r (1 + b/(k+1)), k = 0..len.
pub fn general_moment_family(a: f64, b: f64, r: f64, len: usize) -> Result<RadialMeasureFamily> {
    if !(a > 0.0) {
        return Err(invalid(format!("a must be positive, got {a}")));
    }
    let q: Vec<f64> = (0..len)
        .map(|k| {
            let k1 = k as f64 + 1.0;
            a * k1.powf(r) * (1.0 + b / k1)
        })
        .collect();
    RadialMeasureFamily::tabulated(f64::INFINITY, q, Parity::EvenOnly)
}

/// Schatten verdict for the model moments q_{2k} = a (k+1)^r (1 + b/(k+1)).
pub fn general_moment_cutoff(
    a: f64,
    b: f64,
    r: f64,
    n: u32,
    m: u32,
    p: f64,
    l_max: u64,
) -> Result<SchattenResult> {
    let len = (2 * l_max + 1 + m as u64 + 1) as usize;
    let family = general_moment_family(a, b, r, len)?;
    let spectrum = HankelSpectrum::new(n, m, MomentSequence::new(family))?;
    spectrum.schatten_partial(p, l_max)
}

/// Writes CSV with columns p, L, S_L, growth_ratio, verdict.
pub fn write_schatten_csv<W: Write>(mut w: W, rows: &[SchattenResult]) -> std::io::Result<()> {
    writeln!(w, "p,L,S_L,growth_ratio,verdict")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt17(r.p),
            r.l_max,
            fmt17(r.partial_sum),
            fmt17(r.growth_ratio),
            r.verdict
        )?;
    }
    Ok(())
}

/// Converts an exact eigenvalue for comparison with the float path.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    q.to_f64().unwrap_or(f64::NAN)
}
