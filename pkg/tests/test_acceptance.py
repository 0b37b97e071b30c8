"""Acceptance criteria 1-11.

Criteria 1, 3 and 5-10 are read from the artifacts of a full-suite CLI run;
criterion 11 compares that run with a second invocation byte for byte.
Criteria 2 and 4 are computed here.  Each criterion prints one PASS/FAIL
line in the terminal summary.
"""
import csv
import json
import math
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
import sympy as sp

from conftest import ACCEPTANCE
from heatlab import commutator as cm
from heatlab import experiments as ex
from heatlab import fields as fl
from heatlab import multiindex as mi

pytestmark = pytest.mark.slow

SUITE_TOML = '[[experiment]]\nkind = "full-suite"\nname = "suite"\nseed = 0\n'

# pinned tolerances
RESIDUAL_MIXTURE = 1e-8
RESIDUAL_GRID = 1e-6
LINEAR_SLOPE_TOL = 0.05
BOUND_REL = 1e-6
C_M_DRIFT = 0.10
SUP_NORM_SLACK = 1e-10
DECAY_SUP_FACTOR = 1.5
PICARD_RATIO = (3.0, 5.0)
GROWTH_SLACK = 0.1
NONLINEAR_SLOPE_TOL = 0.1
PROFILE_TOL = {0: 0.1, 1: 0.15}
TAIL_LIMIT = 0.01
HEAVY_TAIL_DROP = 0.1


def record(k, ok, detail):
    prev_ok, prev = ACCEPTANCE.get(k, (True, ""))
    ACCEPTANCE[k] = (prev_ok and bool(ok), f"{prev}; {detail}" if prev else detail)


def run_suite(root: Path) -> Path:
    cfg = root / "suite.toml"
    cfg.parent.mkdir(parents=True, exist_ok=True)
    cfg.write_text(SUITE_TOML)
    out = root / "out"
    proc = subprocess.run([sys.executable, "-m", "heatlab.cli", "run", str(cfg), "--output-dir", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    return out


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    return run_suite(tmp_path_factory.mktemp("suite-a"))


def summary(suite, name):
    return json.loads((suite / f"suite-{name}" / "summary.json").read_text())


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def rates(suite, name):
    return {r["series_id"]: r for r in json.loads((suite / f"suite-{name}" / "rates.json").read_text())}


# --- 1 -----------------------------------------------------------------------


def test_criterion_1_commutator_identity(suite):
    worst = {}
    for n in (1, 2):
        data = rows(suite / f"suite-commutator-{n}d" / "residuals.csv")
        alphas = {r["alpha"] for r in data}
        want = {ex.alpha_label(a) for k in range(1, 5) for a in mi.of_order(n, k)}
        assert alphas == want
        assert {float(r["t"]) for r in data} == {0.1, 1.0, 10.0}
        for r in data:
            key = (n, r["backend"])
            worst[key] = max(worst.get(key, 0.0), float(r["residual"]))
    ok = all(v <= (RESIDUAL_MIXTURE if b == "mixture" else RESIDUAL_GRID) for (n, b), v in worst.items())
    ok &= len(worst) == 4
    record(1, ok, " ".join(f"n{n}/{b} max={v:.1e}" for (n, b), v in sorted(worst.items())))
    assert ok


# --- 2 -----------------------------------------------------------------------


def _fourier_oracle_residual(alpha: int) -> sp.Expr:
    """R_alpha on the Fourier side for phi = G_s(. - c); returns LHS - RHS divided by E phi_hat.

    With phi_hat(xi) = int e^{-i x xi} phi: F[x psi] = i d/dxi psi_hat, F[d psi] = i xi psi_hat,
    F[e^{t Delta} psi] = e^{-t xi^2} psi_hat.
    """
    xi = sp.Symbol("xi", real=True)
    t, s = sp.symbols("t s", positive=True)
    c = sp.Symbol("c", real=True)
    phi_hat = sp.exp(-s * xi ** 2 - sp.I * c * xi)
    E = sp.exp(-t * xi ** 2)

    def times_x(expr, k):
        for _ in range(k):
            expr = sp.I * sp.diff(expr, xi)
        return expr

    lhs = times_x(E * phi_hat, alpha) - E * times_x(phi_hat, alpha)
    rhs = 0
    for term in cm.build_r_alpha((alpha,)).terms:
        rhs += sp.Rational(term.coeff.numerator, term.coeff.denominator) * t ** term.ell \
            * (sp.I * xi) ** term.beta[0] * E * times_x(phi_hat, term.gamma[0])
    return sp.simplify(sp.expand((lhs - rhs) / (E * phi_hat)))


def test_criterion_2_symbolic_golden():
    exact = cm.build_r_alpha((2,)).as_dict()
    want = {(1, (1,), (1,)): Fraction(-4), (2, (2,), (0,)): Fraction(4), (1, (0,), (0,)): Fraction(2)}
    ok = exact == want
    residuals = {a: _fourier_oracle_residual(a) for a in (1, 2, 3, 4)}
    ok &= all(r == 0 for r in residuals.values())
    record(2, ok, f"R_2 terms {'match' if exact == want else 'differ'}; Fourier oracle zero for |alpha|<=4: "
                  f"{all(r == 0 for r in residuals.values())}")
    assert ok


# --- 3 -----------------------------------------------------------------------


def test_criterion_3_linear_rates(suite):
    s = summary(suite, "linear-expansion")
    got = {r["series_id"]: r for r in s["rates"]}
    assert set(got) == {f"m{m}_q{q}" for m in (0, 1, 2) for q in ("1", "2", "inf")}
    devs = {k: abs(r["exponent"] - r["predicted"]) for k, r in got.items()}
    over = [r for r in rows(suite / "suite-linear-expansion" / "remainders.csv")
            if float(r["scaled_remainder"]) > (1 + BOUND_REL) * float(r["bound"])]
    ok = max(devs.values()) <= LINEAR_SLOPE_TOL and not over
    record(3, ok, f"max |slope - predicted| = {max(devs.values()):.4f} (tol {LINEAR_SLOPE_TOL}), "
                  f"bound violations = {len(over)}")
    assert ok


# --- 4 -----------------------------------------------------------------------


def _family():
    G = fl.GaussianMixtureField.gauss
    return {
        "g1": G(1),
        "two-bump": ex.two_bump(1),
        "shifted": G(1, 0.5, (2.0,)),
        "random": ex.random_mixture(1, 0),
        "dipole": fl.monomial_mul(G(1), (1,)) + G(1, 2.0, (-1.0,), 0.3),
    }


def _box(t, factor):
    # the box follows the spread of x^3 e^{t Delta} phi; factor doubles the resolution
    half = max(40.0, 14.0 * math.sqrt(t))
    return fl.GridSpec(1, half, (1 << math.ceil(math.log2(2 * half / 0.25))) * factor)


def _constants(phi, t_grid, factor):
    out = {}
    for m in (1, 2, 3):
        a = b = 0.0
        for t in t_grid:
            g = fl.mixture_to_grid(phi, _box(t, factor))
            a = max(a, cm.verify_commutator_estimate(g, m, [t]).max_ratio)
            b = max(b, cm.verify_moment_estimate(g, m, [t]).max_ratio)
        out[m] = (a, b)
    return out


def test_criterion_4_estimate_constants():
    t_grid = np.geomspace(1e-2, 1e4, 13)
    drift, ref_dev, worst = 0.0, 0.0, 0.0
    for phi in _family().values():
        coarse = _constants(phi, t_grid, 1)
        fine = _constants(phi, t_grid, 2)
        for m in (1, 2, 3):
            exact = (cm.verify_commutator_estimate(phi, m, t_grid).max_ratio,
                     cm.verify_moment_estimate(phi, m, t_grid).max_ratio)
            for c, f, e in zip(coarse[m], fine[m], exact):
                drift = max(drift, abs(f - c) / c)
                ref_dev = max(ref_dev, abs(f - e) / e)
                worst = max(worst, c, f, e)
    ok = drift < C_M_DRIFT and ref_dev < C_M_DRIFT and math.isfinite(worst)
    record(4, ok, f"largest C_m = {worst:.3f}; max drift under doubling = {drift:.1e}, "
                  f"grid vs exact mixture = {ref_dev:.1e} (tol {C_M_DRIFT})")
    assert ok


# --- 5 -----------------------------------------------------------------------


def test_criterion_5_weighted_window(suite):
    s = summary(suite, "weighted-window")
    win = rows(suite / "suite-weighted-window" / "window.csv")
    sup = rows(suite / "suite-weighted-window" / "sup_norms.csv")
    pairs = {(float(r["eps"]), float(r["t"])) for r in win}
    assert pairs == {(e, t) for e in (1.0, 0.1, 0.01) for t in (0.1, 1.0, 10.0)}
    worst = max(float(r["value"]) / float(r["bound"]) for r in win)
    sup_ok = all(float(r["grad_sup"]) <= float(r["grad_bound"]) + SUP_NORM_SLACK
                 and float(r["lap_sup"]) <= float(r["lap_bound"]) + SUP_NORM_SLACK for r in sup)
    ok = s["all_within_bounds"] and worst <= 1.0 and sup_ok
    record(5, ok, f"max value/bound = {worst:.3f}; sup-norm bounds hold: {sup_ok}")
    assert ok


# --- 6, 7 --------------------------------------------------------------------


def test_criterion_6_small_data_decay(suite):
    s = summary(suite, "semilinear-p4")
    traj = rows(suite / "suite-semilinear-p4" / "trajectory.csv")
    t = np.array([float(r["t"]) for r in traj])
    assert t[-1] == 1e4
    l1 = np.array([float(r["l1"]) for r in traj])
    linf = np.array([float(r["linf"]) * math.sqrt(1 + float(r["t"])) for r in traj])
    factors = (l1.max() / l1[0], linf.max() / linf[0])
    ratio = s["picard_ratio"]
    ok = max(factors) <= DECAY_SUP_FACTOR and PICARD_RATIO[0] <= ratio <= PICARD_RATIO[1]
    record(6, ok, f"sup/initial q=1: {factors[0]:.4f}, q=inf: {factors[1]:.4f}; Picard halving ratio {ratio:.2f}")
    assert ok


def test_criterion_7_weighted_growth(suite):
    s = summary(suite, "semilinear-p4")
    grow = rows(suite / "suite-semilinear-p4" / "growth.csv")
    parts, ok = [], True
    for m in (1, 2):
        expo = s[f"growth_m{m}"]["exponent"]
        ratio = np.array([float(r["ratio"]) for r in grow if int(r["m"]) == m])
        ok &= expo <= m / 2 + GROWTH_SLACK and np.isfinite(ratio).all()
        parts.append(f"m={m}: exponent {expo:.3f} (<= {m / 2 + GROWTH_SLACK}), max ratio {ratio.max():.3f}")
    record(7, ok, "; ".join(parts))
    assert ok


# --- 8 -----------------------------------------------------------------------


def test_criterion_8_power_regimes(suite):
    p4, p6 = rates(suite, "approximants-p4"), rates(suite, "approximants-p6")
    checks = [(p4[f"N1_q{q}"], -0.5) for q in ("1", "inf")] + [(p6[f"N1_q{q}"], -1.0) for q in ("1", "inf")]
    ok = all(abs(r["exponent"] - want) <= NONLINEAR_SLOPE_TOL and r["t_lo"] >= 4.0 for r, want in checks)
    ok &= all(r["t_lo"] >= 8.0 for k, r in p4.items() if k.startswith("N2"))
    record(8, ok, "u-u1 slopes p=4: " + ", ".join(f"{p4[f'N1_q{q}']['exponent']:.3f}" for q in ("1", "inf"))
           + "; p=6: " + ", ".join(f"{p6[f'N1_q{q}']['exponent']:.3f}" for q in ("1", "inf")))
    assert ok


@pytest.mark.xfail(strict=True, reason="u - u_2 at N sigma = 1 does not select the t^-1 log model; see README")
def test_criterion_8_log_regime(suite):
    r = rates(suite, "approximants-p4")["N2_q1"]
    ok = r["log_selected"]
    record(8, ok, f"u-u2 (p=4, q=1) log model selected: {ok} (score {r['log_score']:.2f}, "
                  f"power slope {r['exponent']:.3f})")
    assert ok


# --- 9 -----------------------------------------------------------------------


def test_criterion_9_profiles(suite):
    got = rates(suite, "profiles-p6")
    prof = json.loads((suite / "suite-profiles-p6" / "profile.json").read_text())
    slopes = {m: got[f"m{m}_q1"]["exponent"] for m in (0, 1)}
    ok = all(abs(slopes[m] + (m + 1) / 2) <= PROFILE_TOL[m] for m in (0, 1))
    ok &= prof["tail_fraction"] < TAIL_LIMIT
    record(9, ok, f"m=0 slope {slopes[0]:.3f}, m=1 slope {slopes[1]:.3f}, tail fraction {prof['tail_fraction']:.2e}")
    assert ok


# --- 10 ----------------------------------------------------------------------


def test_criterion_10_heavy_tail(suite):
    data = rows(suite / "suite-heavy-tail" / "remainders.csv")
    t = np.array([float(r["t"]) for r in data])
    v = np.array([float(r["scaled_remainder"]) for r in data])
    assert t[0] == 10.0 and t[-1] == 1e4
    monotone = bool(np.all(np.diff(v) <= 0))
    drop = v[-1] / v[0]
    ok = monotone and drop < HEAVY_TAIL_DROP
    record(10, ok, f"monotone: {monotone}; final/initial = {drop:.4f} (< {HEAVY_TAIL_DROP})")
    assert ok


# --- 11 ----------------------------------------------------------------------


def test_criterion_11_reproducible(suite, tmp_path_factory):
    other = run_suite(tmp_path_factory.mktemp("suite-b"))
    a = sorted(p.relative_to(suite) for p in suite.rglob("*") if p.is_file())
    b = sorted(p.relative_to(other) for p in other.rglob("*") if p.is_file())
    data = [p for p in a if p.suffix in (".csv", ".json")]
    differ = [str(p) for p in a if (suite / p).read_bytes() != (other / p).read_bytes()] if a == b else ["file list"]
    ok = a == b and not differ
    record(11, ok, f"{len(data)} CSV/JSON files (+{len(a) - len(data)} other) identical across two runs"
           if ok else f"differences: {differ[:5]}")
    assert ok
