#!/usr/bin/env python3
"""Smoke test for the circle_rds_py extension module.

Builds nothing itself: run `cargo build -p circle-rds-py` first, then
`python3 python/smoke_test.py`. Exercises the bindings end to end on three
families with closed-form expectations.
"""

import importlib.util
import math
import pathlib
import sys
from importlib.machinery import ExtensionFileLoader


def load_module():
    root = pathlib.Path(__file__).resolve().parents[1]
    for profile in ("release", "debug"):
        cand = root / "target" / profile / "libcircle_rds_py.so"
        if cand.exists():
            loader = ExtensionFileLoader("circle_rds_py", str(cand))
            spec = importlib.util.spec_from_file_location(
                "circle_rds_py", cand, loader=loader
            )
            mod = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(mod)
            return mod
    sys.exit("libcircle_rds_py.so not found; run: cargo build -p circle-rds-py")


def circle_dist(a, b):
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def check(label, ok, detail=""):
    if not ok:
        sys.exit(f"FAIL: {label} {detail}")
    print(f"PASS: {label}")


def main():
    m = load_module()
    check("module loads", m.GENERATOR_ID == "splitmix64-counter/v1", m.GENERATOR_ID)

    # Rotations: isometries, so every exponent is exactly zero and the
    # hypothesis checks must reject the family.
    rot = m.System.uniform([m.Map.rotation(0.3), m.Map.rotation(0.41)])
    (lam, _), (sup, _) = rot.extremal_exponents(n=500, n_samples=8, seed=7)
    check("rotation exponents are exactly zero", lam == 0.0 and sup == 0.0, (lam, sup))
    check("rotation hypothesis verdict is false", not rot.hypothesis_report(seed=1)["verdict"])

    # A single hyperbolic projective map: attractor at 0, repeller at 1/2,
    # exponents -2 log 2 and +2 log 2, matrix oracle at log 2.
    single = m.System([(m.Map.projective(2.0, 0.0, 0.0, 0.5), 1.0)])
    pi = single.attracting_point(seed=3, n=200)
    theta = single.repelling_point(seed=3, n=200)
    check("single-map attractor at 0", circle_dist(pi, 0.0) < 1e-9, pi)
    check("single-map repeller at 1/2", circle_dist(theta, 0.5) < 1e-9, theta)
    two_log2 = 2.0 * math.log(2.0)
    (lam, _), (sup, _) = single.extremal_exponents(n=2000, n_samples=4, seed=5)
    check("single-map exponent inf", abs(lam + two_log2) < 1e-3, lam)
    check("single-map exponent sup", abs(sup - two_log2) < 1e-3, sup)
    top, _ = single.oracle_top_exponent(n=4000, n_samples=16, seed=9)
    check("matrix oracle at log 2", abs(top - math.log(2.0)) < 1e-3, top)
    samples, checked, warnings = single.stationary_sample(n=800, n_samples=200, seed=11)
    check(
        "single-map stationary sample is a Dirac mass at 0",
        all(s == 0.0 for s in samples) and warnings == 0,
        (samples[0], warnings),
    )

    # The hyperbolic pair: contraction on one side, expansion on the other,
    # and the attracting point intertwines one step of the dynamics.
    a = m.Map.projective(2.0, 0.0, 0.0, 0.5)
    b = m.Map.projective(1.25, 0.75, 0.75, 1.25)
    pair = m.System([(a, 0.5), (b, 0.5)])
    (lam, _), (sup, _) = pair.extremal_exponents(n=2000, n_samples=20, seed=13)
    check("pair exponents have a hyperbolic split", lam < -0.5 and sup > 0.5, (lam, sup))
    rate, _ = pair.sync_rate(0.1, 0.6, n=500, n_samples=50, seed=15)
    check("pair synchronizes", rate < -0.5, rate)
    check("pair hypothesis verdict is true", pair.hypothesis_report(seed=17)["verdict"])

    seed = 19
    pi = pair.attracting_point(seed, n=600)
    pi_shift = pair.attracting_point(seed, n=600, shift=1)
    first = pair.word(seed, 1)[0]
    f1 = pair.atoms()[first][0]
    check(
        "one-step equivariance f1(pi(shifted)) = pi",
        circle_dist(f1.eval(pi_shift), pi) < 1e-6,
        (f1.eval(pi_shift), pi),
    )

    ident = pair.dimension_identity(
        n=300, n_samples=20000, mc_draws=40000, probes=1500, seed=23
    )
    check(
        "dimension identity residual is small",
        abs(ident["residual"]) < 0.15,
        ident["residual"],
    )
    dim, _ = ident["dimension"]
    check("dimension lies in (0, 1.05]", 0.0 < dim <= 1.05, dim)

    map_count = len(pair)
    check("system length", map_count == 2, map_count)
    inv_atoms = pair.inverse().atoms()
    check(
        "inverse system round-trips a point",
        circle_dist(inv_atoms[0][0].eval(a.eval(0.2)), 0.2) < 1e-12,
    )

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
