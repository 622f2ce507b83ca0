//! Large-parameter (TYZ) expansion of the weighted diagonal kernel and the
//! ball analogue.

use std::io::Write;

use serde::Serialize;

use super::closed::{ball_scaled_diagonal, kernel_tyz_scaled_diag_with};
use crate::error::{invalid, Error, Result};
use crate::mittag_leffler::{tyz_coeffs, Branch, MlParams};
use crate::numeric::{factorial, fmt17};

/// Which Mittag-Leffler branch the diagonal kernel is evaluated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TyzMode {
    /// Validated switch threshold.
    Auto,
    /// Always sum the power series (exposes the exponentially small remainder).
    Series,
}

#[derive(Debug, Clone, Serialize)]
pub struct TyzRow {
    pub s: f64,
    /// e^{−s|z|^{2m}} K_s(z, z).
    pub lhs: f64,
    /// 2m^n s^n / ((n−1)! c).
    pub leading: f64,
    /// leading · Σ_{j≤k} b_j / (s|z|^{2m})^j for k = 0..n−1.
    pub partial_sums: Vec<f64>,
    pub residual: f64,
    pub branch: Branch,
}

fn ml_params(mode: TyzMode, n: u32, m: f64) -> Result<MlParams> {
    match mode {
        TyzMode::Auto => MlParams::new(1.0 / m, n as f64),
        TyzMode::Series => Ok(MlParams::with_threshold(1.0 / m, n as f64, f64::INFINITY)),
    }
}

pub fn tyz_residual(n: u32, m: f64, c: f64, s: f64, r: f64) -> Result<TyzRow> {
    tyz_residual_with(TyzMode::Auto, n, m, c, s, r)
}

pub fn tyz_residual_with(mode: TyzMode, n: u32, m: f64, c: f64, s: f64, r: f64) -> Result<TyzRow> {
    if !(r > 0.0) {
        return Err(invalid(format!("|z| must be positive, got {r}")));
    }
    let params = ml_params(mode, n, m)?;
    let (lhs, branch) = kernel_tyz_scaled_diag_with(&params, n, m, c, s, r * r)?;
    let b = tyz_coeffs(n, m)?.b;
    let leading = 2.0 * m.powi(n as i32) * s.powi(n as i32) / (factorial((n - 1) as u64) * c);
    let x = s * r.powf(2.0 * m);
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = b
        .iter()
        .enumerate()
        .map(|(j, bj)| {
            acc += bj * x.powi(-(j as i32));
            leading * acc
        })
        .collect();
    let residual = lhs - partial_sums[partial_sums.len() - 1];
    Ok(TyzRow {
        s,
        lhs,
        leading,
        partial_sums,
        residual,
        branch,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct B1Fit {
    pub estimate: f64,
    pub error_estimate: f64,
    /// (s, y(s)) with y = s|z|^{2m}(lhs/leading − 1).
    pub samples: Vec<(f64, f64)>,
}

/// Polynomial extrapolation to h = 0 through (h_i, y_i) (Neville).
fn neville_at_zero(h: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let k = h.len();
    for level in 1..k {
        for i in 0..k - level {
            let (hi, hj) = (h[i], h[i + level]);
            p[i] = (hj * p[i] - hi * p[i + 1]) / (hj - hi);
        }
    }
    p[0]
}

/// Extracts b_1 from y(s) = s|z|^{2m}(lhs/leading − 1) = b_1 + b_2/(s|z|^{2m}) + …
/// by Richardson-style polynomial extrapolation in h = 1/s.
pub fn tyz_fit_b1(n: u32, m: f64, c: f64, r: f64, s_grid: &[f64]) -> Result<B1Fit> {
    if s_grid.len() < 2 {
        return Err(Error::IllConditioned("need at least two s values".into()));
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) || !(s_grid[0] > 0.0) {
        return Err(Error::IllConditioned(
            "s grid must be positive and strictly increasing".into(),
        ));
    }
    let mut samples = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let row = tyz_residual(n, m, c, s, r)?;
        samples.push((s, s * r.powf(2.0 * m) * (row.lhs / row.leading - 1.0)));
    }
    // largest s last so that dropping the first point is the cheaper fit
    let h: Vec<f64> = samples.iter().map(|(s, _)| 1.0 / s).collect();
    let y: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();
    let estimate = neville_at_zero(&h, &y);
    let coarser = neville_at_zero(&h[1..], &y[1..]);
    let error_estimate = (estimate - coarser).abs();
    if !estimate.is_finite() {
        return Err(Error::IllConditioned(format!(
            "extrapolation produced {estimate}"
        )));
    }
    Ok(B1Fit {
        estimate,
        error_estimate,
        samples,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BallTyz {
    /// (1 − t)^{n+s+1} K_s(t).
    pub scaled_kernel: f64,
    /// scaled_kernel / s^n; tends to 4/(n−1)! with true moments.
    pub a0_estimate: f64,
}

pub fn ball_tyz_check(n: u32, s: f64, t: f64) -> Result<BallTyz> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("need 0 < t < 1, got {t}")));
    }
    if !(s > 0.0) {
        return Err(invalid(format!("s must be positive, got {s}")));
    }
    let scaled_kernel = ball_scaled_diagonal(n, s, t)?;
    Ok(BallTyz {
        scaled_kernel,
        a0_estimate: scaled_kernel / s.powi(n as i32),
    })
}

/// Writes rows as CSV with columns s, lhs, partial_0..partial_{n−1}, residual.
pub fn write_tyz_csv<W: Write>(mut w: W, rows: &[TyzRow]) -> std::io::Result<()> {
    let Some(first) = rows.first() else {
        return Ok(());
    };
    let mut header = vec!["s".to_string(), "lhs".to_string()];
    header.extend((0..first.partial_sums.len()).map(|k| format!("partial_{k}")));
    header.push("residual".into());
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let mut cells = vec![fmt17(r.s), fmt17(r.lhs)];
        cells.extend(r.partial_sums.iter().map(|v| fmt17(*v)));
        cells.push(fmt17(r.residual));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mittag_leffler::b1_closed;

    #[test]
    fn leading_correction_at_large_s() {
        let row = tyz_residual(3, 1.0, 1.0, 1000.0, 1.0).unwrap();
        assert_eq!(row.branch, Branch::Asymptotic);
        let rel = row.lhs / row.leading - 1.0;
        assert!((rel / -1e-3 - 1.0).abs() < 0.05, "{rel}");
    }

    #[test]
    fn remainder_decays_exponentially_in_the_series_branch() {
        let a = tyz_residual_with(TyzMode::Series, 3, 1.0, 1.0, 10.0, 1.0).unwrap();
        let b = tyz_residual_with(TyzMode::Series, 3, 1.0, 1.0, 25.0, 1.0).unwrap();
        assert_eq!(a.branch, Branch::Series);
        assert!(a.residual.abs() > 0.0);
        assert!(b.residual.abs() < a.residual.abs() * (-0.25 * 15.0f64).exp() * 10.0);
    }

    #[test]
    fn half_m_last_partial_sum_repeats() {
        for n in [2u32, 3, 4] {
            let row = tyz_residual(n, 0.5, 1.0, 4000.0, 1.0).unwrap();
            let k = row.partial_sums.len();
            assert!(
                (row.partial_sums[k - 1] - row.partial_sums[k - 2]).abs() <= 1e-12 * row.leading
            );
        }
    }

    #[test]
    fn fitted_b1() {
        let grid = [625.0, 1250.0, 2500.0, 5000.0, 10000.0];
        for (n, m) in [(3u32, 1.0), (4, 2.0), (2, 1.0)] {
            let fit = tyz_fit_b1(n, m, 1.0, 1.0, &grid).unwrap();
            let want = b1_closed(n, m);
            assert!(
                (fit.estimate - want).abs() <= 0.01 * want.abs(),
                "n={n} m={m}: {} vs {want}",
                fit.estimate
            );
        }
        let fit = tyz_fit_b1(2, 0.5, 1.0, 1.0, &grid).unwrap();
        assert!(fit.estimate.abs() <= 1e-3);
        assert!(tyz_fit_b1(2, 1.0, 1.0, 1.0, &[10.0, 5.0]).is_err());
    }

    #[test]
    fn ball_a0() {
        let a = ball_tyz_check(2, 1e4, 0.5).unwrap();
        let b = ball_tyz_check(2, 1e5, 0.5).unwrap();
        assert!((a.a0_estimate / b.a0_estimate - 1.0).abs() < 1e-3);
        assert!((b.a0_estimate - 4.0).abs() < 1e-3, "{}", b.a0_estimate);
        let near0 = ball_tyz_check(2, 3.0, 1e-9).unwrap();
        // K(0) = N(0)/q_0 = 2Γ(n+s+1)/(Γ(s+1)Γ(n))
        assert!((near0.scaled_kernel - 2.0 * 20.0).abs() < 1e-6);
    }
}
