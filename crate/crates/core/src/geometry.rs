//! Points on the Kepler manifold and the minimal ball, boundary sampling and
//! the Monte Carlo orthogonality check.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::kernels::dim_p;
use crate::numeric::{fmt17, CompensatedSum, ComplexSum};

/// Tolerance of the isotropy constraint |z·z| ≤ tol·|z|².
pub const ISOTROPY_TOL: f64 = 1e-12;

/// z·w = Σ z_j w_j, no conjugation.
pub fn bilinear(z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    if z.len() != w.len() {
        return Err(Error::LengthMismatch(z.len(), w.len()));
    }
    Ok(bilinear_unchecked(z, w))
}

pub(crate) fn bilinear_unchecked(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    let mut acc = ComplexSum::new();
    for (a, b) in z.iter().zip(w) {
        acc.add(a * b);
    }
    acc.value()
}

/// z·w̄, the pairing every kernel on H depends on.
pub fn pairing(z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    if z.len() != w.len() {
        return Err(Error::LengthMismatch(z.len(), w.len()));
    }
    let mut acc = ComplexSum::new();
    for (a, b) in z.iter().zip(w) {
        acc.add(a * b.conj());
    }
    Ok(acc.value())
}

/// Euclidean norm |z|.
pub fn norm(z: &[Complex64]) -> f64 {
    norm_sqr(z).sqrt()
}

fn norm_sqr(z: &[Complex64]) -> f64 {
    z.iter()
        .map(|c| c.norm_sqr())
        .collect::<CompensatedSum>()
        .value()
}

/// The minimal norm N_*(z) = sqrt(|z|² + |z·z|).
pub fn minimal_norm(z: &[Complex64]) -> f64 {
    (norm_sqr(z) + bilinear_unchecked(z, z).norm()).sqrt()
}

/// A point of the Kepler manifold H ⊂ C^{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct KeplerPoint {
    coords: Vec<Complex64>,
}

impl KeplerPoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(invalid(format!(
                "a Kepler point needs n+1 ≥ 3 coordinates, got {}",
                coords.len()
            )));
        }
        let r2 = norm_sqr(&coords);
        if !(r2 > 0.0) || !r2.is_finite() {
            return Err(Error::Domain(
                "the origin (or a non-finite vector) is not on H".into(),
            ));
        }
        let zz = bilinear_unchecked(&coords, &coords).norm();
        if zz > ISOTROPY_TOL * r2 {
            return Err(Error::Domain(format!(
                "z·z = {zz:e} is not zero relative to |z|² = {r2:e}"
            )));
        }
        Ok(KeplerPoint { coords })
    }

    /// The base point (1, i, 0, …, 0)/√2, normalised to |e| = 1.
    pub fn base(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("n must be ≥ 2, got {n}")));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        c[0] = Complex64::new(h, 0.0);
        c[1] = Complex64::new(0.0, h);
        Self::new(c)
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    /// Complex dimension n of H (the ambient space is C^{n+1}).
    pub fn n(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    /// z·w̄ against another point.
    pub fn pairing(&self, other: &KeplerPoint) -> Result<Complex64> {
        pairing(&self.coords, &other.coords)
    }

    pub fn scaled(&self, r: f64) -> Result<Self> {
        Self::new(self.coords.iter().map(|c| c * r).collect())
    }

    /// Applies a real orthogonal matrix; H is invariant under O(n+1, R).
    pub fn rotate(&self, q: &DMatrix<f64>) -> Result<Self> {
        if q.nrows() != self.coords.len() || q.ncols() != self.coords.len() {
            return Err(Error::LengthMismatch(q.nrows(), self.coords.len()));
        }
        let out = (0..q.nrows())
            .map(|i| {
                let mut acc = ComplexSum::new();
                for (j, c) in self.coords.iter().enumerate() {
                    acc.add(c * q[(i, j)]);
                }
                acc.value()
            })
            .collect();
        Self::new(out)
    }
}

/// A point of C^n carrying the minimal norm.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalBallPoint {
    coords: Vec<Complex64>,
}

impl MinimalBallPoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid(
                "a minimal-ball point needs at least one coordinate",
            ));
        }
        if coords
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        Ok(MinimalBallPoint { coords })
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn minimal_norm(&self) -> f64 {
        minimal_norm(&self.coords)
    }
}

fn gaussian_vec<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x * y)
        .collect::<CompensatedSum>()
        .value()
}

fn normalize(a: &mut [f64]) {
    let s = dot(a, a).sqrt();
    a.iter_mut().for_each(|x| *x /= s);
}

/// Samples z = r(u + iv)/√2 with (u, v) an orthonormal pair drawn from the
/// Haar measure, so z/r is distributed by the O(n+1, R)-invariant measure on ∂M.
pub fn sample_kepler<R: Rng + ?Sized>(n: usize, r: f64, rng: &mut R) -> Result<KeplerPoint> {
    if n < 2 {
        return Err(invalid(format!("n must be ≥ 2, got {n}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!(
            "radius must be positive and finite, got {r}"
        )));
    }
    let dim = n + 1;
    let mut u = gaussian_vec(dim, rng);
    let mut v = gaussian_vec(dim, rng);
    normalize(&mut u);
    // two Gram-Schmidt passes keep u·v at roundoff level
    for _ in 0..2 {
        let p = dot(&u, &v);
        v.iter_mut().zip(&u).for_each(|(y, x)| *y -= p * x);
        normalize(&mut v);
    }
    let c = r * std::f64::consts::FRAC_1_SQRT_2;
    KeplerPoint::new(
        u.iter()
            .zip(&v)
            .map(|(a, b)| Complex64::new(c * a, c * b))
            .collect(),
    )
}

/// A Haar-distributed real orthogonal matrix (QR of a Gaussian matrix with
/// the signs of diag(R) folded into Q).
pub fn haar_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: Complex64,
    pub target: Complex64,
    /// Standard error of the complex mean, sqrt((var re + var im)/N).
    pub stderr: f64,
    pub samples: usize,
}

impl McEstimate {
    /// |estimate − target| in units of the standard error.
    pub fn z_score(&self) -> f64 {
        let d = (self.estimate - self.target).norm();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        (self.estimate - self.target).norm() <= sigmas * self.stderr
    }
}

/// Monte Carlo average of (z·w)^k (ξ·w̄)^l over w ~ μ on ∂M against its
/// exact value δ_{kl} (z·ξ)^k / N(k).
pub fn mc_check_orthogonality<R: Rng + ?Sized>(
    k: u32,
    l: u32,
    z: &KeplerPoint,
    xi: &[Complex64],
    samples: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if k > 8 || l > 8 {
        return Err(invalid(format!(
            "k, l ≤ 8 keeps the variance controlled (k={k}, l={l})"
        )));
    }
    if samples < 10_000 {
        return Err(invalid(format!(
            "at least 10⁴ samples are needed, got {samples}"
        )));
    }
    let n = z.n();
    if xi.len() != n + 1 {
        return Err(Error::LengthMismatch(xi.len(), n + 1));
    }
    let (mut re, mut im, mut sq) = (
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    );
    for _ in 0..samples {
        let w = sample_kepler(n, 1.0, rng)?;
        let wc: Vec<Complex64> = w.coords().iter().map(|c| c.conj()).collect();
        let f = bilinear_unchecked(z.coords(), w.coords()).powu(k)
            * bilinear_unchecked(xi, &wc).powu(l);
        re.add(f.re);
        im.add(f.im);
        sq.add(f.norm_sqr());
    }
    let nf = samples as f64;
    let mean = Complex64::new(re.value() / nf, im.value() / nf);
    let var = ((sq.value() / nf - mean.norm_sqr()) * nf / (nf - 1.0)).max(0.0);
    let target = if k == l {
        bilinear_unchecked(z.coords(), xi).powu(k) / dim_p(n as u32, k as u64)? as f64
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(McEstimate {
        estimate: mean,
        target,
        stderr: (var / nf).sqrt(),
        samples,
    })
}

/// Writes points as CSV with columns re_0, im_0, …, re_n, im_n.
pub fn write_samples_csv<W: Write>(mut w: W, points: &[KeplerPoint]) -> std::io::Result<()> {
    let Some(first) = points.first() else {
        return Ok(());
    };
    let header: Vec<String> = (0..first.coords.len())
        .flat_map(|j| [format!("re_{j}"), format!("im_{j}")])
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for p in points {
        let row: Vec<String> = p
            .coords
            .iter()
            .flat_map(|c| [fmt17(c.re), fmt17(c.im)])
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bilinear_examples() {
        let e = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)];
        assert_eq!(bilinear(&e, &e).unwrap(), c(0.0, 0.0));
        let ebar: Vec<_> = e.iter().map(|x| x.conj()).collect();
        assert_eq!(bilinear(&e, &ebar).unwrap(), c(2.0, 0.0));
        let a = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let b = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(bilinear(&a, &b).unwrap(), c(0.0, 0.0));
        assert_eq!(bilinear(&a, &e), Err(Error::LengthMismatch(4, 3)));
    }

    #[test]
    fn minimal_norm_examples() {
        assert!((minimal_norm(&[c(1.0, 0.0), c(0.0, 0.0)]) - 2f64.sqrt()).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((minimal_norm(&[c(h, 0.0), c(0.0, h)]) - 1.0).abs() < 1e-15);
        assert_eq!(minimal_norm(&[c(0.0, 0.0); 3]), 0.0);
    }

    #[test]
    fn samples_satisfy_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..=10 {
            for _ in 0..200 {
                let z = sample_kepler(n, 1.0, &mut rng).unwrap();
                let zz = bilinear(z.coords(), z.coords()).unwrap().norm();
                assert!(zz <= 1e-13, "n={n} z·z={zz}");
                assert!((z.norm() - 1.0).abs() <= 1e-13);
                let z3 = z.scaled(3.0).unwrap();
                assert!(bilinear(z3.coords(), z3.coords()).unwrap().norm() <= 9e-13);
                assert!((z3.norm() - 3.0).abs() <= 3e-13);
            }
        }
    }

    #[test]
    fn rejects_off_manifold_points() {
        assert!(KeplerPoint::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).is_err());
        assert!(KeplerPoint::new(vec![c(0.0, 0.0); 3]).is_err());
        assert!(KeplerPoint::base(3).is_ok());
    }

    #[test]
    fn haar_matrix_is_orthogonal_and_preserves_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = haar_orthogonal(5, &mut rng);
        let err = (&q.transpose() * &q - DMatrix::<f64>::identity(5, 5)).amax();
        assert!(err < 1e-14);
        let z = sample_kepler(4, 1.0, &mut rng).unwrap();
        let zq = z.rotate(&q).unwrap();
        assert!((zq.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthogonality_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = KeplerPoint::base(2).unwrap();
        let r = mc_check_orthogonality(0, 0, &z, z.coords(), 10_000, &mut rng).unwrap();
        assert_eq!(r.target, c(1.0, 0.0));
        assert!((r.estimate - r.target).norm() < 1e-12);
        // z·ξ = e·e/2 = 0 for ξ = z
        let r = mc_check_orthogonality(1, 1, &z, z.coords(), 10_000, &mut rng).unwrap();
        assert_eq!(r.target, c(0.0, 0.0));
        assert!(r.within(4.0));
        assert!(mc_check_orthogonality(9, 1, &z, z.coords(), 10_000, &mut rng).is_err());
        assert!(mc_check_orthogonality(1, 1, &z, z.coords(), 100, &mut rng).is_err());
    }

    #[test]
    fn second_moment_of_pairing_is_one_over_n_plus_one() {
        // E|w·ξ̄|² = |ξ|²/N(1) = 1/4 for n = 3, |ξ| = 1
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xi = sample_kepler(3, 1.0, &mut rng).unwrap();
        let n = 200_000;
        let mut acc = CompensatedSum::new();
        for _ in 0..n {
            let w = sample_kepler(3, 1.0, &mut rng).unwrap();
            acc.add(w.pairing(&xi).unwrap().norm_sqr());
        }
        let mean = acc.value() / n as f64;
        assert!((mean - 0.25).abs() < 4e-3, "{mean}");
    }

    #[test]
    fn csv_dump_layout() {
        let z = KeplerPoint::base(2).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &[z]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("re_0,im_0,re_1,im_1,re_2,im_2\n"));
    }
}
