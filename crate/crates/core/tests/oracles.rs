//! Closed forms against independent oracles at random points.

use kepler_core::geometry::{haar_orthogonal, mc_check_orthogonality, sample_kepler};
use kepler_core::kernels::{
    exa_closed, exa_family, kernel_alpha_weight_closed, kernel_ball_closed, kernel_series,
    kernel_series_scaled, kernel_tyz_closed, KernelSpec,
};
use kepler_core::measures::{Backend, MomentSequence, PhiProfile, RadialMeasureFamily as F};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disc(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    Complex64::from_polar(
        r * rng.random::<f64>().sqrt(),
        std::f64::consts::TAU * rng.random::<f64>(),
    )
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

/// Series rounding error is about condition · 1e−16; beyond this the series
/// is no longer a 1e−9 oracle.
const ORACLE_CONDITION: f64 = 1e6;

/// Worst relative error over 50 random points. Points where the series
/// cancels too much to serve as an oracle are skipped, but most must be
/// compared.
fn worst_over(
    seed: u64,
    radius: f64,
    spec: &KernelSpec,
    closed: impl Fn(Complex64) -> Complex64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let t = disc(&mut rng, radius);
        let sum = kernel_series_scaled(spec, t, 1e-16).unwrap();
        if sum.condition > ORACLE_CONDITION {
            // Σ|terms| grows like (1−|t|)^{−P} while |K| ~ |1−t|^{−P}
            assert!(
                (1.0 - t).norm() > 2.0 * (1.0 - t.norm()),
                "cancellation at t = {t}"
            );
            continue;
        }
        worst = worst.max(rel(closed(t), sum.value().unwrap()));
        compared += 1;
    }
    assert!(
        compared >= 35,
        "only {compared} of 50 points were well conditioned"
    );
    worst
}

#[test]
fn jacobi_closed_form_at_random_points() {
    for n in [2u32, 3, 4] {
        for m in [0.0, 0.5, 1.0, 2.5] {
            let spec = KernelSpec::from_family(exa_family(n, m).unwrap()).unwrap();
            let w = worst_over(10 + n as u64, 0.8, &spec, |t| exa_closed(n, m, t).unwrap());
            assert!(w <= 1e-9, "n={n} m={m}: {w:e}");
        }
    }
}

#[test]
fn ball_closed_form_at_random_points() {
    for n in [2u32, 3, 5] {
        for s in [-0.5, 0.0, 1.0, 2.5, 7.0] {
            let spec = KernelSpec::from_family(F::bergman_beta(n, s).unwrap()).unwrap();
            // heavy weights cancel badly near |t| = 1, so stay closer to 0
            let radius = if n as f64 + s + 1.0 <= 6.5 { 0.9 } else { 0.7 };
            let w = worst_over(20 + n as u64, radius, &spec, |t| {
                kernel_ball_closed(n, s, t).unwrap()
            });
            assert!(w <= 1e-9, "n={n} s={s}: {w:e}");
        }
    }
}

#[test]
fn power_exp_closed_form_at_random_points() {
    for (n, m, c, s) in [
        (2u32, 1.0, 1.0, 1.0),
        (3, 0.5, 2.0, 1.5),
        (3, 2.0, 0.7, 3.0),
        (4, 1.5, 1.0, 0.8),
    ] {
        let spec = KernelSpec::from_family(F::power_exp(c, m, n, s).unwrap()).unwrap();
        let w = worst_over(30 + n as u64, 2.0, &spec, |t| {
            kernel_tyz_closed(n, m, c, s, t).unwrap()
        });
        assert!(w <= 1e-9, "n={n} m={m}: {w:e}");
    }
}

#[test]
fn stretched_exp_closed_form_at_random_points() {
    for (n, m, s) in [
        (2u32, 1.0, 1.0),
        (3, 2.0, 0.5),
        (2, 1.5, 2.0),
        (4, 0.75, 1.0),
    ] {
        let spec =
            KernelSpec::from_family(F::phi_radial(n, PhiProfile::StretchedExp { s, m }).unwrap())
                .unwrap();
        let w = worst_over(40 + n as u64, 2.0, &spec, |t| {
            kernel_alpha_weight_closed(n, m, s, t).unwrap()
        });
        assert!(w <= 1e-9, "n={n} m={m} s={s}: {w:e}");
    }
}

#[test]
fn series_from_quadrature_moments_matches_closed_form() {
    // the moments here never touch a gamma function
    let seq = MomentSequence::with_backend(
        F::bergman_beta(2, 1.5).unwrap(),
        Backend::Quadrature { rel_tol: 1e-13 },
    );
    let spec = KernelSpec::new(seq).unwrap();
    for t in [0.1, 0.4, 0.7] {
        let t = Complex64::new(t, 0.0);
        let a = kernel_series(&spec, t, 1e-15).unwrap();
        let b = kernel_ball_closed(2, 1.5, t).unwrap();
        assert!(rel(a, b) <= 1e-9, "t={t}: {a} vs {b}");
    }
}

#[test]
fn moments_exact_against_quadrature() {
    let families = [
        F::bergman_beta(2, 0.0),
        F::bergman_beta(4, 3.5),
        F::power_exp(1.0, 1.0, 2, 1.0),
        F::power_exp(3.0, 0.5, 3, 2.0),
        F::phi_radial(3, PhiProfile::Jacobi { m: 2.0 }),
        F::phi_radial(2, PhiProfile::Exponential { c: 0.5 }),
        F::phi_radial(3, PhiProfile::StretchedExp { s: 1.0, m: 3.0 }),
    ];
    for fam in families {
        let fam = fam.unwrap();
        let label = fam.describe();
        let rows = MomentSequence::new(fam).table(40, Some(1e-12)).unwrap();
        for r in rows {
            let d = r.rel_diff.unwrap();
            assert!(d <= 1e-9, "{label} k={}: {d:e}", r.k);
        }
    }
}

#[test]
fn orthogonality_relations_within_four_sigma() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for n in [2usize, 3] {
        let z = sample_kepler(n, 1.0, &mut rng).unwrap();
        let xi: Vec<Complex64> = (0..=n).map(|_| disc(&mut rng, 1.0)).collect();
        for k in 0..=3 {
            for l in 0..=3 {
                let est = mc_check_orthogonality(k, l, &z, &xi, 100_000, &mut rng).unwrap();
                assert!(est.within(4.0), "n={n} k={k} l={l}: {est:?}");
            }
        }
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn sampler_is_rotation_invariant() {
    // |w·ζ|² for a fixed unit ζ: the law of w and of Qw must coincide
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [2usize, 3] {
        let q = haar_orthogonal(n + 1, &mut rng);
        let zeta: Vec<Complex64> = (0..=n)
            .map(|i| {
                Complex64::new(
                    if i == 0 { 0.6 } else { 0.0 },
                    if i == 1 { 0.8 } else { 0.0 },
                )
            })
            .collect();
        let stat = |w: &[Complex64]| {
            w.iter()
                .zip(&zeta)
                .map(|(a, b)| a * b.conj())
                .sum::<Complex64>()
                .norm_sqr()
        };
        let count = 20_000;
        let plain: Vec<f64> = (0..count)
            .map(|_| stat(sample_kepler(n, 1.0, &mut rng).unwrap().coords()))
            .collect();
        let rotated: Vec<f64> = (0..count)
            .map(|_| {
                stat(
                    sample_kepler(n, 1.0, &mut rng)
                        .unwrap()
                        .rotate(&q)
                        .unwrap()
                        .coords(),
                )
            })
            .collect();
        let d = ks(plain, rotated);
        // 1.95 ≈ the 0.1% critical value of the two-sample KS statistic
        let crit = 1.95 * (2.0 / count as f64).sqrt();
        assert!(d <= crit, "n={n}: D = {d} > {crit}");
    }
}
