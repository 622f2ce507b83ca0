//! Self-verification suites: every closed form is checked against an
//! independent oracle (series, quadrature, exact rationals, Monte Carlo).
//!
//! A suite is a list of independent [`Task`]s. Each task owns its RNG seed,
//! derived from the run seed and the task index, so results do not depend
//! on how tasks are scheduled.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{
    haar_orthogonal, mc_check_orthogonality, minimal_norm, sample_kepler, KeplerPoint,
};
use crate::hankel::{general_moment_cutoff, HankelSpectrum, Verdict};
use crate::kernels::{
    ball_tyz_check, exa_closed, exa_family, kernel_alpha_weight_closed, kernel_ball_closed,
    kernel_series, kernel_tyz_closed, tyz_fit_b1, tyz_residual, ExpGenerating, KernelSpec,
};
use crate::measures::{MomentSequence, PhiProfile, RadialMeasureFamily as F};
use crate::minimal_ball::{exb_closed, minimal_ball_kernel};
use crate::mittag_leffler::{b1_closed, ml_eval, tyz_coeffs, MlParams, VALIDATED_DERIVATIVES};
use crate::report::Check;

const SERIES_TOL: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Kernels,
    Tyz,
    Hankel,
    Geometry,
    Mb,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["all", "kernels", "tyz", "hankel", "geometry", "mb"];

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Kernels => "kernels",
            Suite::Tyz => "tyz",
            Suite::Hankel => "hankel",
            Suite::Geometry => "geometry",
            Suite::Mb => "mb",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "kernels" => Suite::Kernels,
            "tyz" => Suite::Tyz,
            "hankel" => Suite::Hankel,
            "geometry" => Suite::Geometry,
            "mb" => Suite::Mb,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown suite '{s}' (expected one of {:?})",
                    Suite::NAMES
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Monte Carlo samples per geometry check.
    pub samples: usize,
    /// Truncation L for the Schatten cut-off scans.
    pub schatten_l: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 42,
            samples: 100_000,
            schatten_l: 1_000_000,
        }
    }
}

/// One independent unit of verification work.
pub struct Task {
    pub suite: Suite,
    pub label: String,
    run: Box<dyn Fn() -> Vec<Check> + Send + Sync>,
}

impl Task {
    fn new(
        suite: Suite,
        label: impl Into<String>,
        run: impl Fn() -> Vec<Check> + Send + Sync + 'static,
    ) -> Self {
        Task {
            suite,
            label: label.into(),
            run: Box::new(run),
        }
    }

    pub fn run(&self) -> Vec<Check> {
        (self.run)()
    }
}

impl fmt::Debug for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Task")
            .field("suite", &self.suite)
            .field("label", &self.label)
            .finish()
    }
}

/// Independent stream for task `index` of a run with `seed`.
fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index + 1))
}

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).norm() / b.norm()
    }
}

/// A check whose computation can fail; the error becomes a failed check.
fn guarded(suite: Suite, name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::failed(suite.name(), name, e.to_string()))
}

pub fn tasks(suite: Suite, cfg: &VerifyConfig) -> Vec<Task> {
    match suite {
        Suite::All => [
            Suite::Kernels,
            Suite::Tyz,
            Suite::Hankel,
            Suite::Geometry,
            Suite::Mb,
        ]
        .into_iter()
        .flat_map(|s| tasks(s, cfg))
        .collect(),
        Suite::Kernels => kernel_tasks(cfg),
        Suite::Tyz => tyz_tasks(),
        Suite::Hankel => hankel_tasks(cfg),
        Suite::Geometry => geometry_tasks(cfg),
        Suite::Mb => mb_tasks(cfg),
    }
}

/// Runs a suite sequentially, in task order.
pub fn run(suite: Suite, cfg: &VerifyConfig) -> Vec<Check> {
    tasks(suite, cfg).iter().flat_map(Task::run).collect()
}

fn random_disc(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    // uniform in the disc |t| ≤ radius
    let r = radius * rng.random::<f64>().sqrt();
    let a = std::f64::consts::TAU * rng.random::<f64>();
    Complex64::from_polar(r, a)
}

fn kernel_tasks(cfg: &VerifyConfig) -> Vec<Task> {
    const S: Suite = Suite::Kernels;
    let mut out = Vec::new();
    let mut index = 0u64;
    let mut next_seed = || {
        index += 1;
        (cfg.seed, index)
    };

    for n in [2u32, 3] {
        for m in [0.0, 1.0, 2.5] {
            let (seed, idx) = next_seed();
            out.push(Task::new(S, format!("jacobi n={n} m={m}"), move || {
                let name = format!("jacobi_closed_vs_series_n{n}_m{m}");
                vec![guarded(S, &name, || {
                    let spec = KernelSpec::from_family(exa_family(n, m)?)?;
                    let mut rng = task_rng(seed, idx);
                    let mut worst: f64 = 0.0;
                    for _ in 0..50 {
                        let t = random_disc(&mut rng, 0.8);
                        worst = worst.max(rel_err(
                            exa_closed(n, m, t)?,
                            kernel_series(&spec, t, SERIES_TOL)?,
                        ));
                    }
                    Ok(Check::at_most(S.name(), name.clone(), worst, 1e-9)
                        .with_detail("50 random t, |t| ≤ 0.8"))
                })]
            }));
        }
    }

    out.push(Task::new(S, "jacobi spot value", || {
        let name = "jacobi_series_spot_n2_m0_t0.5";
        vec![guarded(S, name, || {
            let spec = KernelSpec::from_family(exa_family(2, 0.0)?)?;
            let v = kernel_series(&spec, Complex64::new(0.5, 0.0), SERIES_TOL)?;
            Ok(Check::absolute(S.name(), name, v.re, 20.0, 1e-9))
        })]
    }));

    for n in [2u32, 3] {
        for s in [0.0, 1.0, 2.5] {
            out.push(Task::new(S, format!("ball n={n} s={s}"), move || {
                let name = format!("ball_closed_vs_series_n{n}_s{s}");
                vec![guarded(S, &name, || {
                    let spec = KernelSpec::from_family(F::bergman_beta(n, s)?)?;
                    let mut worst: f64 = 0.0;
                    for i in 1..=90 {
                        let t = Complex64::new(0.01 * i as f64, 0.0);
                        worst = worst.max(rel_err(
                            kernel_ball_closed(n, s, t)?,
                            kernel_series(&spec, t, SERIES_TOL)?,
                        ));
                    }
                    Ok(Check::at_most(S.name(), name.clone(), worst, 1e-9)
                        .with_detail("t = 0.01, 0.02, …, 0.90"))
                })]
            }));
        }
    }

    for (n, m, c, s) in [
        (2u32, 1.0, 1.0, 1.0),
        (3, 2.0, 1.5, 2.0),
        (2, 0.5, 1.0, 3.0),
    ] {
        let (seed, idx) = next_seed();
        out.push(Task::new(S, format!("power-exp n={n} m={m}"), move || {
            let name = format!("power_exp_closed_vs_series_n{n}_m{m}_c{c}_s{s}");
            vec![guarded(S, &name, || {
                let spec = KernelSpec::from_family(F::power_exp(c, m, n, s)?)?;
                let mut rng = task_rng(seed, idx);
                let mut points: Vec<Complex64> = [0.1, 0.5, 1.0, 2.0]
                    .iter()
                    .map(|&x| Complex64::new(x, 0.0))
                    .collect();
                points.extend((0..20).map(|_| random_disc(&mut rng, 1.5)));
                let mut worst: f64 = 0.0;
                for t in points {
                    worst = worst.max(rel_err(
                        kernel_tyz_closed(n, m, c, s, t)?,
                        kernel_series(&spec, t, SERIES_TOL)?,
                    ));
                }
                Ok(Check::at_most(S.name(), name.clone(), worst, 1e-9)
                    .with_detail("4 real + 20 random complex t"))
            })]
        }));
    }

    for (n, m, s) in [(2u32, 1.0, 1.0), (3, 2.0, 0.5), (2, 1.5, 2.0)] {
        let (seed, idx) = next_seed();
        out.push(Task::new(
            S,
            format!("stretched-exp n={n} m={m}"),
            move || {
                let name = format!("stretched_exp_closed_vs_series_n{n}_m{m}_s{s}");
                vec![guarded(S, &name, || {
                    let spec = KernelSpec::from_family(F::phi_radial(
                        n,
                        PhiProfile::StretchedExp { s, m },
                    )?)?;
                    let mut rng = task_rng(seed, idx);
                    let mut points: Vec<Complex64> = [0.1, 0.5, 1.0, 2.0]
                        .iter()
                        .map(|&x| Complex64::new(x, 0.0))
                        .collect();
                    points.extend((0..20).map(|_| random_disc(&mut rng, 1.5)));
                    let mut worst: f64 = 0.0;
                    for t in points {
                        worst = worst.max(rel_err(
                            kernel_alpha_weight_closed(n, m, s, t)?,
                            kernel_series(&spec, t, SERIES_TOL)?,
                        ));
                    }
                    Ok(Check::at_most(S.name(), name.clone(), worst, 1e-9)
                        .with_detail("4 real + 20 random complex t"))
                })]
            },
        ));
    }

    for (label, family) in moment_families() {
        out.push(Task::new(S, format!("moments {label}"), move || {
            let name = format!("moments_exact_vs_quadrature_{label}");
            vec![guarded(S, &name, || {
                let seq = MomentSequence::new(family()?);
                let rows = seq.table(40, Some(1e-12))?;
                let worst = rows.iter().filter_map(|r| r.rel_diff).fold(0.0, f64::max);
                if rows.iter().any(|r| r.rel_diff.is_none()) {
                    return Err(Error::Quadrature {
                        achieved: f64::NAN,
                        requested: 1e-12,
                    });
                }
                Ok(Check::at_most(S.name(), name.clone(), worst, 1e-9).with_detail("k = 0..40"))
            })]
        }));
    }
    out
}

type FamilyCtor = fn() -> Result<F>;

fn moment_families() -> Vec<(&'static str, FamilyCtor)> {
    vec![
        ("bergman_n2_s0", || F::bergman_beta(2, 0.0)),
        ("bergman_n3_s2.5", || F::bergman_beta(3, 2.5)),
        ("bergman_n2_s-0.5", || F::bergman_beta(2, -0.5)),
        ("power_exp_c1_m1_n2_s1", || F::power_exp(1.0, 1.0, 2, 1.0)),
        ("power_exp_c2_m0.5_n3_s3", || F::power_exp(2.0, 0.5, 3, 3.0)),
        ("jacobi_n2_m1", || {
            F::phi_radial(2, PhiProfile::Jacobi { m: 1.0 })
        }),
        ("exponential_n3_c1.5", || {
            F::phi_radial(3, PhiProfile::Exponential { c: 1.5 })
        }),
        ("stretched_exp_n2_s2_m1.5", || {
            F::phi_radial(2, PhiProfile::StretchedExp { s: 2.0, m: 1.5 })
        }),
    ]
}

fn tyz_tasks() -> Vec<Task> {
    const S: Suite = Suite::Tyz;
    let mut out = Vec::new();
    let grid = [625.0, 1250.0, 2500.0, 5000.0, 10000.0];

    for (n, m) in [(2u32, 1.0), (3, 1.0), (2, 0.5), (4, 2.0)] {
        out.push(Task::new(S, format!("tyz n={n} m={m}"), move || {
            let fit_name = format!("fitted_b1_n{n}_m{m}");
            let fit = guarded(S, &fit_name, || {
                let fit = tyz_fit_b1(n, m, 1.0, 1.0, &grid)?;
                let want = b1_closed(n, m);
                // b_1 vanishes for (n, m) = (2, 1/2); fall back to an absolute scale of one
                let scale = want.abs().max(1.0);
                let pass = (fit.estimate - want).abs() <= 0.01 * scale;
                Ok(Check::new(
                    S.name(),
                    fit_name.clone(),
                    fit.estimate,
                    want,
                    0.01,
                    pass,
                    "s up to 1e4".into(),
                ))
            });
            let lead_name = format!("leading_ratio_n{n}_m{m}_s1e4");
            let lead = guarded(S, &lead_name, || {
                let row = tyz_residual(n, m, 1.0, 1e4, 1.0)?;
                Ok(Check::relative(
                    S.name(),
                    lead_name.clone(),
                    row.lhs / row.leading,
                    1.0,
                    2e-3,
                ))
            });
            vec![fit, lead]
        }));
    }

    out.push(Task::new(S, "tyz coefficients", || {
        let mut checks = Vec::new();
        for n in 2u32..=6 {
            for m in [0.5, 1.0, 2.0, 2.5] {
                let name = format!("coefficients_n{n}_m{m}");
                checks.push(guarded(S, &name, || {
                    let b = tyz_coeffs(n, m)?.b;
                    let want = b1_closed(n, m);
                    let mut err = (b[0] - 1.0).abs();
                    if b.len() > 1 {
                        err = err.max((b[1] - want).abs() / want.abs().max(1.0));
                    }
                    Ok(Check::at_most(S.name(), name.clone(), err, 1e-12)
                        .with_detail("b_0 = 1 and b_1 closed form"))
                }));
            }
            let name = format!("last_coefficient_vanishes_n{n}_m0.5");
            checks.push(guarded(S, &name, || {
                let b = tyz_coeffs(n, 0.5)?.b;
                Ok(Check::absolute(
                    S.name(),
                    name.clone(),
                    b[b.len() - 1],
                    0.0,
                    1e-12,
                ))
            }));
        }
        checks
    }));

    out.push(Task::new(S, "mittag-leffler identities", || {
        let e = std::f64::consts::E;
        let cases: [(&str, f64, f64, f64, f64); 3] = [
            ("ml_e11_at_1", 1.0, 1.0, 1.0, e),
            ("ml_e12_at_1", 1.0, 2.0, 1.0, e - 1.0),
            ("ml_e21_at_4", 2.0, 1.0, 4.0, 2f64.cosh()),
        ];
        cases
            .iter()
            .map(|&(name, a, b, t, want)| {
                guarded(S, name, || {
                    let v = ml_eval(&MlParams::new(a, b)?, t, 0)?;
                    Ok(Check::relative(S.name(), name, v, want, 1e-12))
                })
            })
            .collect()
    }));

    for m in [0.5, 1.0, 2.0] {
        for n in [2u32, 3] {
            out.push(Task::new(S, format!("ml overlap m={m} n={n}"), move || {
                let name = format!("ml_branch_overlap_m{m}_n{n}");
                vec![guarded(S, &name, || {
                    let p = MlParams::new(1.0 / m, n as f64)?;
                    let err = p.overlap_error(VALIDATED_DERIVATIVES)?;
                    Ok(
                        Check::at_most(S.name(), name.clone(), err, 1e-8).with_detail(format!(
                            "switch at t = {}, derivatives 0..={VALIDATED_DERIVATIVES}",
                            p.switch_threshold
                        )),
                    )
                })]
            }));
        }
    }

    out.push(Task::new(S, "ball leading coefficient", || {
        [2u32, 3]
            .iter()
            .map(|&n| {
                let name = format!("ball_leading_coefficient_n{n}");
                guarded(S, &name, || {
                    let v = ball_tyz_check(n, 1e5, 0.5)?.a0_estimate;
                    let want = 4.0 / crate::numeric::factorial((n - 1) as u64);
                    Ok(Check::relative(S.name(), name.clone(), v, want, 1e-3)
                        .with_detail("s = 1e5, t = 0.5"))
                })
            })
            .collect()
    }));
    out
}

fn hankel_tasks(cfg: &VerifyConfig) -> Vec<Task> {
    const S: Suite = Suite::Hankel;
    let mut out = Vec::new();
    let big_l = cfg.schatten_l;

    out.push(Task::new(S, "exact eigenvalue", || {
        let name = "first_eigenvalue_exact_n2_m1";
        vec![guarded(S, name, || {
            let h = HankelSpectrum::new(2, 1, MomentSequence::new(F::bergman_beta(2, 0.0)?))?;
            let exact = h.eigenvalue_exact(1)?;
            let want = BigRational::new(19.into(), 36.into());
            let pass = exact == want;
            Ok(Check::new(
                S.name(),
                name,
                crate::hankel::rational_to_f64(&exact),
                19.0 / 36.0,
                0.0,
                pass,
                format!("{exact}"),
            ))
        })]
    }));

    out.push(Task::new(S, "eigenvalue asymptotics", || {
        let mut checks = Vec::new();
        for n in [2u32, 3] {
            for m in [1u32, 2] {
                let name = format!("l_lambda_l_n{n}_m{m}");
                checks.push(guarded(S, &name, || {
                    let h =
                        HankelSpectrum::new(n, m, MomentSequence::new(F::bergman_beta(n, 0.0)?))?;
                    let v = 1e5 * h.eigenvalue(100_000)?;
                    Ok(
                        Check::relative(S.name(), name.clone(), v, ((n - 1) * m) as f64, 1e-3)
                            .with_detail("l = 1e5"),
                    )
                }));
            }
        }
        checks
    }));

    for n in [2u32, 3] {
        out.push(Task::new(S, format!("cutoff n={n}"), move || {
            let nf = n as f64;
            let grid = [2.0 * nf - 1.0, 2.0 * nf, 2.0 * nf + 0.5, 2.0 * nf + 1.0];
            let want = [
                Verdict::Diverges,
                Verdict::Diverges,
                Verdict::Converges,
                Verdict::Converges,
            ];
            let scan = F::bergman_beta(n, 0.0)
                .and_then(|f| HankelSpectrum::new(n, 1, MomentSequence::new(f)))
                .and_then(|h| h.cutoff_scan(&grid, big_l));
            match scan {
                Err(e) => vec![Check::failed(
                    S.name(),
                    format!("schatten_cutoff_n{n}"),
                    e.to_string(),
                )],
                Ok(rows) => rows
                    .iter()
                    .zip(want)
                    .map(|(r, w)| {
                        let mut detail = format!(
                            "expected {}, got {} (exponent {:.6})",
                            w.letter(),
                            r.verdict.letter(),
                            r.term_exponent
                        );
                        if r.p == 2.0 * nf {
                            let [a, b, c] = r.doubling_increments;
                            detail.push_str(&format!(
                                "; doubling increments {a:.6e} {b:.6e} {c:.6e}"
                            ));
                        }
                        Check::new(
                            S.name(),
                            format!("schatten_verdict_n{n}_p{}", r.p),
                            r.term_exponent,
                            -1.0,
                            0.0,
                            r.verdict == w,
                            detail,
                        )
                    })
                    .collect(),
            }
        }));
    }

    out.push(Task::new(S, "general moment model", move || {
        let l = (big_l / 10).max(10_000);
        let cases: [(f64, f64, f64, u32, u32, f64, Verdict); 3] = [
            (1.0, 0.0, -1.0, 2, 1, 5.0, Verdict::Converges),
            (3.0, 7.0, 2.0, 2, 2, 4.0, Verdict::Diverges),
            (1.0, 0.0, 0.0, 3, 1, 7.0, Verdict::Converges),
        ];
        cases
            .iter()
            .map(|&(a, b, r, n, m, p, want)| {
                let name = format!("general_model_a{a}_b{b}_r{r}_n{n}_m{m}_p{p}");
                guarded(S, &name, || {
                    let res = general_moment_cutoff(a, b, r, n, m, p, l)?;
                    Ok(Check::new(
                        S.name(),
                        name.clone(),
                        res.term_exponent,
                        -1.0,
                        0.0,
                        res.verdict == want,
                        format!("expected {}, got {}", want.letter(), res.verdict.letter()),
                    ))
                })
            })
            .collect()
    }));
    out
}

fn geometry_tasks(cfg: &VerifyConfig) -> Vec<Task> {
    const S: Suite = Suite::Geometry;
    let mut out = Vec::new();
    let samples = cfg.samples;
    let seed = cfg.seed;
    let mut idx = 1000u64;
    for n in [2usize, 3] {
        for k in 0..=3u32 {
            for l in 0..=3u32 {
                idx += 1;
                let i = idx;
                out.push(Task::new(
                    S,
                    format!("orthogonality n={n} k={k} l={l}"),
                    move || {
                        let name = format!("orthogonality_n{n}_k{k}_l{l}");
                        vec![guarded(S, &name, || {
                            let mut rng = task_rng(seed, i);
                            let z = sample_kepler(n, 1.0, &mut rng)?;
                            let xi: Vec<Complex64> = (0..=n)
                                .map(|_| {
                                    Complex64::new(
                                        rng.random::<f64>() - 0.5,
                                        rng.random::<f64>() - 0.5,
                                    )
                                })
                                .collect();
                            let est = mc_check_orthogonality(k, l, &z, &xi, samples, &mut rng)?;
                            let pass = est.within(4.0);
                            Ok(Check::new(
                                S.name(),
                                name.clone(),
                                est.z_score(),
                                0.0,
                                4.0,
                                pass,
                                format!(
                                    "estimate {:.6e}{:+.6e}i, target {:.6e}{:+.6e}i, stderr {:.3e}",
                                    est.estimate.re,
                                    est.estimate.im,
                                    est.target.re,
                                    est.target.im,
                                    est.stderr
                                ),
                            ))
                        })]
                    },
                ));
            }
        }
    }

    for n in [2usize, 3] {
        idx += 1;
        let i = idx;
        out.push(Task::new(S, format!("sampler n={n}"), move || {
            let mut rng = task_rng(seed, i);
            let name = format!("sampler_constraints_n{n}");
            let constraints = guarded(S, &name, || {
                let mut worst: f64 = 0.0;
                for _ in 0..1000 {
                    let w = sample_kepler(n, 1.0, &mut rng)?;
                    let ww: Complex64 = w.coords().iter().map(|c| c * c).sum();
                    worst = worst.max(ww.norm()).max((w.norm() - 1.0).abs());
                }
                Ok(Check::at_most(S.name(), name.clone(), worst, 1e-12)
                    .with_detail("max of |w·w| and |‖w‖ − 1| over 1000 samples"))
            });
            let name = format!("rotation_invariance_n{n}");
            let invariance = guarded(S, &name, || {
                // two samples, one rotated by a fixed Haar matrix: compare E|w_0|²
                let q = haar_orthogonal(n + 1, &mut rng);
                let count = samples.max(10_000);
                let (mut a, mut a2, mut b, mut b2) = (0.0, 0.0, 0.0, 0.0);
                for _ in 0..count {
                    let x = sample_kepler(n, 1.0, &mut rng)?.coords()[0].norm_sqr();
                    let y = sample_kepler(n, 1.0, &mut rng)?.rotate(&q)?.coords()[0].norm_sqr();
                    a += x;
                    a2 += x * x;
                    b += y;
                    b2 += y * y;
                }
                let c = count as f64;
                let (ma, mb) = (a / c, b / c);
                let se = ((a2 / c - ma * ma + b2 / c - mb * mb) / c).sqrt();
                let z = (ma - mb).abs() / se;
                Ok(Check::new(
                    S.name(),
                    name.clone(),
                    z,
                    0.0,
                    4.0,
                    z <= 4.0,
                    format!(
                        "E|w_0|² = {ma:.6e} vs rotated {mb:.6e}, expected {:.6e}",
                        1.0 / (n as f64 + 1.0)
                    ),
                ))
            });
            vec![constraints, invariance]
        }));
    }
    out.push(Task::new(S, "base point", || {
        let name = "base_point_isotropic";
        vec![guarded(S, name, || {
            let p = KeplerPoint::base(3)?;
            let ww: Complex64 = p.coords().iter().map(|c| c * c).sum();
            Ok(Check::at_most(
                S.name(),
                name,
                ww.norm() + (p.norm() - 1.0).abs(),
                1e-15,
            ))
        })]
    }));
    out
}

fn mb_tasks(cfg: &VerifyConfig) -> Vec<Task> {
    const S: Suite = Suite::Mb;
    let mut out = Vec::new();
    for (i, n) in [2usize, 3].into_iter().enumerate() {
        let seed = cfg.seed;
        out.push(Task::new(
            S,
            format!("assembly vs closed n={n}"),
            move || {
                let name = format!("assembly_vs_exponential_closed_n{n}");
                vec![guarded(S, &name, || {
                    let mut rng = task_rng(seed, 2000 + i as u64);
                    let f = ExpGenerating {
                        scale: 1.0,
                        rate: 1.0,
                    };
                    let mut worst: f64 = 0.0;
                    for _ in 0..20 {
                        let mut point = || -> Vec<Complex64> {
                            (0..n)
                                .map(|_| {
                                    Complex64::new(
                                        rng.random_range(-0.4..0.4),
                                        rng.random_range(-0.4..0.4),
                                    )
                                })
                                .collect()
                        };
                        let (z, w) = (point(), point());
                        worst = worst.max(rel_err(
                            minimal_ball_kernel(n as u32, &f, &z, &w)?,
                            exb_closed(n as u32, 1.0, &z, &w)?,
                        ));
                    }
                    Ok(Check::at_most(S.name(), name.clone(), worst, 1e-8)
                        .with_detail("20 random pairs, coordinates in (−0.4, 0.4)²"))
                })]
            },
        ));
    }
    out.push(Task::new(S, "origin", || {
        let name = "exponential_origin_value_n2";
        vec![guarded(S, name, || {
            let zero = [Complex64::new(0.0, 0.0); 2];
            Ok(Check::relative(
                S.name(),
                name,
                exb_closed(2, 1.0, &zero, &zero)?.re,
                54.0,
                1e-12,
            ))
        })]
    }));
    let seed = cfg.seed;
    out.push(Task::new(S, "gram ratio", move || {
        // n/E|z|² on the uniform minimal ball must equal the kernel's
        // degree-one to degree-zero ratio n + 3
        let mut rng = task_rng(seed, 3000);
        [2usize, 3]
            .iter()
            .map(|&n| {
                let name = format!("uniform_ball_gram_ratio_n{n}");
                let (mut sum, mut sum2, mut count) = (0.0, 0.0, 0usize);
                while count < 200_000 {
                    let z: Vec<Complex64> = (0..n)
                        .map(|_| {
                            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                        })
                        .collect();
                    if minimal_norm(&z) < 1.0 {
                        let r2: f64 = z.iter().map(|v| v.norm_sqr()).sum();
                        sum += r2;
                        sum2 += r2 * r2;
                        count += 1;
                    }
                }
                let c = count as f64;
                let mean = sum / c;
                let se = ((sum2 / c - mean * mean) / c).sqrt();
                let predicted = n as f64 / (n as f64 + 3.0);
                let z = (mean - predicted).abs() / se;
                Check::new(
                    S.name(),
                    name,
                    z,
                    0.0,
                    4.0,
                    z <= 4.0,
                    format!("E|z|² = {mean:.6e}, kernel predicts {predicted:.6e}"),
                )
            })
            .collect()
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().name(), name);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn quick_suites_pass() {
        let cfg = VerifyConfig::default();
        for suite in [Suite::Mb, Suite::Tyz] {
            for c in run(suite, &cfg) {
                assert!(c.pass, "{c:?}");
            }
        }
    }
}
