"""Acceptance gate: one test per criterion, each at its stated tolerance.

Run with `pytest -s tests/test_acceptance.py` to see the one-line verdict
per criterion.  The statistical criteria simulate 10^5 replications and
take a few minutes in total; all tolerances are pinned here and in the
verify module, nothing is calibrated after the fact.
"""

import time
from fractions import Fraction

import pytest

from rtcnlab import moments, verify

REPS = 100_000
SEED = verify.DEFAULTS["seed"]
THREADS = 2


def report(criterion: str, passed: bool, detail: str = ""):
    line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    assert passed, line


def test_criterion_01_coupling_exactness():
    t0 = time.time()
    rep = verify.suite_coupling({"n_max": 7})
    elapsed = time.time() - t0
    report("1 coupling exactness n<=7",
           rep.passed and elapsed < 60,
           f"{len(rep.checks)} exact checks, {elapsed:.1f}s")


def test_criterion_02_mean_closed_forms():
    t0 = time.time()
    mu_ok = all(moments.trident_mean_recurrence(n)
                == moments.mean_closed_form("trident", n)
                for n in range(4, 201))
    spot_ok = moments.mean_closed_form("trident", 4) == Fraction(2, 3)
    rho = moments.ci_mean_recurrence(60)
    rho_ok = all(rho[n] == moments.mean_closed_form("c-i", n)
                 for n in range(6, 61))
    tau = moments.h3ci_mean_recurrence(60)
    tau_ok = all(tau[n] == moments.mean_closed_form("h3-ci", n)
                 for n in range(8, 61))
    # the recurrence is ground truth; the commonly quoted polynomial is
    # reported as discrepant rather than failed
    printed_disagrees = [n for n in range(8, 61)
                         if moments.h3ci_printed_closed_form(n) != tau[n]]
    elapsed = time.time() - t0
    detail = (f"mu 4..200 exact, rho 6..60 exact, tau-from-recurrence 8..60 "
              f"exact; quoted tau polynomial disagrees at all of 8..60 "
              f"(missing n^2 term), {elapsed:.1f}s")
    report("2 mean closed forms",
           mu_ok and spot_ok and rho_ok and tau_ok
           and len(printed_disagrees) == 53 and elapsed < 10, detail)


def test_criterion_03_trident_clt():
    rep = verify.suite_theorem1({"n": 2000, "reps": REPS, "seed": SEED,
                                 "threads": THREADS})
    detail = "; ".join(f"{c['name']}={c.get('value', '')!s:.12s}"
                       for c in rep.checks)
    report("3 trident CLT n=2000", rep.passed, detail)


def test_criterion_04_poisson_rates():
    rep = verify.suite_theorem2b({"n": 1000, "reps": REPS, "seed": SEED,
                                  "threads": THREADS})
    fails = [c["name"] for c in rep.checks if not c["passed"]]
    report("4 Poisson rates b-i..b-v", rep.passed,
           "all five chi-square fits and means" if rep.passed
           else f"failing: {fails}")


def test_criterion_05_degenerate_patterns():
    rep = verify.suite_theorem2a({"n": 1000, "reps": REPS, "seed": SEED,
                                  "threads": THREADS, "mean_n": 200})
    fracs = {c["name"]: c.get("fraction") for c in rep.checks
             if "fraction" in c}
    report("5 degenerate patterns", rep.passed,
           f"nonzero fractions {fracs}")


def test_criterion_06_normal_limits_and_covariance():
    rep_c = verify.suite_theorem2c({"n": 2000, "reps": REPS, "seed": SEED,
                                    "threads": THREADS})
    rep_s = verify.suite_prop4({"n": 2000, "reps": REPS, "seed": SEED,
                                "threads": THREADS})
    fails = [c["name"] for c in rep_c.checks + rep_s.checks
             if not c["passed"]]
    report("6 normal limits + covariance matrix",
           rep_c.passed and rep_s.passed,
           "c-i, c-ii normality and all 6 matrix entries" if not fails
           else f"failing: {fails}")


def test_criterion_07_joint_independence():
    rep = verify.suite_prop3({"n": 1000, "reps": REPS, "seed": SEED,
                              "threads": THREADS})
    detail = "; ".join(f"{c['name']}={c.get('value')}" for c in rep.checks)
    report("7 joint Poisson independence", rep.passed, detail)


def test_criterion_08_proof_algebra():
    t0 = time.time()
    sigma = moments.default_sigma()
    gm = moments.GaussianMixedMoments(sigma)
    ident_ok = True
    for tot in range(2, 9):
        for r in range(tot + 1):
            for s in range(tot - r + 1):
                ok, _ = moments.check_proof_identity(r, s, tot - r - s, sigma)
                ident_ok &= ok
    pair_ok = True
    for tot in range(0, 11):
        for r in range(tot + 1):
            for s in range(tot - r + 1):
                t = tot - r - s
                if r > 0:
                    pair_ok &= gm.moment(r, s, t) == (
                        (r - 1) * sigma[0][0] * gm.moment(r - 2, s, t)
                        + s * sigma[0][1] * gm.moment(r - 1, s - 1, t)
                        + t * sigma[0][2] * gm.moment(r - 1, s, t - 1))
                if s > 0:
                    pair_ok &= gm.moment(r, s, t) == (
                        r * sigma[1][0] * gm.moment(r - 1, s - 1, t)
                        + (s - 1) * sigma[1][1] * gm.moment(r, s - 2, t)
                        + t * sigma[1][2] * gm.moment(r, s - 1, t - 1))
                if t > 0:
                    pair_ok &= gm.moment(r, s, t) == (
                        r * sigma[2][0] * gm.moment(r - 1, s, t - 1)
                        + s * sigma[2][1] * gm.moment(r, s - 1, t - 1)
                        + (t - 1) * sigma[2][2] * gm.moment(r, s, t - 2))
    elapsed = time.time() - t0
    report("8 proof algebra",
           ident_ok and pair_ok and elapsed < 5,
           f"identity<=8 and pairings<=10 exact, {elapsed:.2f}s")


def test_criterion_09_conjecture_engine():
    rep = verify.suite_conjecture({})
    report("9 conjecture engine", rep.passed,
           "13 published labels, both base modes")


def test_criterion_10_matcher_oracle():
    rep = verify.suite_matcher({"trials": 1000, "n_max": 30, "seed": SEED})
    detail = next(f"{c['trials']} networks x all catalog patterns"
                  for c in rep.checks)
    report("10 matcher oracle", rep.passed, detail)
