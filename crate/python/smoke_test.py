"""Smoke test for the kepler_kernels extension module.

Builds the module with cargo (unless --no-build), loads it from a temporary
directory and checks a handful of values against independent references.
"""

import argparse
import importlib
import math
import shutil
import subprocess
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build(release: bool) -> Path:
    cmd = ["cargo", "build", "-p", "kepler-python", "--features", "extension-module"]
    if release:
        cmd.append("--release")
    subprocess.run(cmd, cwd=ROOT, check=True)
    profile = "release" if release else "debug"
    for name in ("libkepler_kernels.so", "libkepler_kernels.dylib"):
        lib = ROOT / "target" / profile / name
        if lib.exists():
            return lib
    raise FileNotFoundError(f"no built library under target/{profile}")


def load(lib: Path):
    tmp = Path(tempfile.mkdtemp(prefix="kepler_kernels_"))
    shutil.copy(lib, tmp / "kepler_kernels.so")
    sys.path.insert(0, str(tmp))
    return importlib.import_module("kepler_kernels")


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--no-build", action="store_true", help="use the existing release build")
    parser.add_argument("--debug", action="store_true", help="build without optimisations")
    args = parser.parse_args()

    release = not args.debug
    lib = (ROOT / "target" / ("release" if release else "debug") / "libkepler_kernels.so") if args.no_build else build(release)
    kk = load(lib)
    failures = []

    def check(name, ok, detail=""):
        print(f"{'PASS' if ok else 'FAIL'} {name} {detail}")
        if not ok:
            failures.append(name)

    # moments: q_k = 1/(k+4) for n = 2, s = 0
    q = kk.Moments.bergman_beta(2, 0.0)
    check("bergman moments", all(close(q.moment(k), 1 / (k + 4), 1e-14) for k in range(10)))
    row = kk.Moments.power_exp(1.0, 1.0, 2, 1.0).table(3, 1e-12)[0]
    check("power-exp quadrature", row["rel_diff"] <= 1e-10, f"rel_diff={row['rel_diff']:.2e}")

    # kernels: series against closed forms
    jac = kk.Kernel(kk.Moments.phi_radial(2, "jacobi", m=0.0))
    check("jacobi spot value", abs(jac(0.5) - 20) <= 1e-9, f"{jac(0.5)}")
    t = 0.3 + 0.4j
    ball = kk.Kernel(kk.Moments.bergman_beta(3, 1.0))
    check("ball closed form", close(ball(t), kk.ball_closed(3, 1.0, t), 1e-9))
    pe = kk.Kernel(kk.Moments.power_exp(1.5, 2.0, 3, 2.0))
    check("power-exp closed form", close(pe(t), kk.power_exp_closed(3, 2.0, 1.5, 2.0, t), 1e-9))

    # Mittag-Leffler against direct summation with mpmath
    try:
        import mpmath

        mpmath.mp.dps = 30
        ref = mpmath.nsum(lambda k: mpmath.mpf(7) ** k / mpmath.gamma(2 * k + 2), [0, mpmath.inf])
        val = kk.mittag_leffler(2.0, 2.0, 7.0)
        check("E_{2,2}(7) vs mpmath", close(val, float(ref), 1e-12), f"{val}")
    except ImportError:
        print("SKIP mpmath not installed")
    check("E_{1,1}(1) = e", close(kk.mittag_leffler(1.0, 1.0, 1.0), math.e, 1e-12))
    check("log E at large t", math.isfinite(kk.log_mittag_leffler(0.5, 3.0, 1e4)))

    # TYZ coefficients
    b = kk.tyz_coefficients(3, 1.0)
    check("tyz b_0, b_1", b[0] == 1.0 and close(b[1], -1.0, 1e-12), f"{b}")
    est, _ = kk.tyz_fit_b1(3, 1.0, 1.0, 1.0, [625.0, 1250.0, 2500.0, 5000.0, 10000.0])
    check("fitted b_1", close(est, -1.0, 0.01), f"{est}")

    # Hankel spectrum
    h = kk.HankelSpectrum(2, 1, kk.Moments.bergman_beta(2, 0.0))
    check("exact eigenvalue", h.eigenvalue_exact(1) == Fraction(19, 36))
    verdicts = "".join(r["verdict"] for r in h.cutoff_scan([3.0, 5.0], 100_000))
    check("schatten verdicts", verdicts == "DC", verdicts)

    # minimal ball
    zero = [0j, 0j]
    check("minimal ball origin", close(kk.minimal_ball_exponential(2, 1.0, zero, zero).real, 54.0, 1e-14))
    z, w = [0.3 + 0.1j, -0.2j], [0.1 + 0j, 0.25 - 0.05j]
    a = kk.minimal_ball_exponential(2, 1.0, z, w)
    c = kk.minimal_ball_exponential(2, 1.0, z, w, closed=True)
    check("minimal ball assembly vs closed", close(a, c, 1e-8))

    # geometry
    pts = kk.sample_kepler(3, r=2.0, count=5, seed=1)
    iso = max(abs(sum(x * x for x in p)) for p in pts)
    norms = [math.sqrt(sum(abs(x) ** 2 for x in p)) for p in pts]
    check("kepler samples", iso < 1e-12 and all(abs(r - 2.0) < 1e-12 for r in norms))

    # errors surface as Python exceptions
    try:
        ball(1.5)
        check("domain error raised", False)
    except ValueError:
        check("domain error raised", True)

    ok, checks = kk.run_verify("mb", seed=42)
    check("verify mb", ok, f"{len(checks)} checks")

    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
