"""Experiment drivers behind the CLI.

Each driver maps an ExperimentConfig to text artifacts (CSV and JSON, keyed
by relative file name) plus a summary.  Drivers never touch the filesystem,
so two runs of the same config are comparable byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from . import analysis as an
from . import commutator as cm
from . import fields as fl
from . import multiindex as mi
from . import profiles as pr
from . import semilinear as sl
from .config import ExperimentConfig, slug
from .errors import DecayViolation, TailUntrusted, UntrustedWarning

# --- shared helpers ----------------------------------------------------------


def num(x: float) -> str:
    """Locale-free, round-trippable float text."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([num(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def alpha_label(alpha) -> str:
    return "-".join(str(a) for a in alpha)


def q_label(q: float) -> str:
    return "inf" if math.isinf(q) else f"{q:g}"


# --- initial data ------------------------------------------------------------


def two_bump(n: int = 1, amplitude: float = 1.0) -> fl.GaussianMixtureField:
    """Asymmetric pair of Gaussians (unequal weights and widths) with a sizeable first moment."""
    c1 = (1.0,) + (0.0,) * (n - 1)
    c2 = (-1.0,) + (0.5,) * (n - 1)
    return (fl.GaussianMixtureField.gauss(n, 1.0, c1, 0.75 * amplitude)
            + fl.GaussianMixtureField.gauss(n, 0.5, c2, 0.25 * amplitude))


def random_mixture(n: int, seed: int, terms: int = 3, amplitude: float = 1.0) -> fl.GaussianMixtureField:
    """Signed terms (a + b.y) G_s(y - mu) with seeded parameters."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(terms):
        s = float(rng.uniform(0.5, 1.5))
        mu = tuple(float(v) for v in rng.uniform(-2.0, 2.0, n))
        poly = {mi.zero(n): float(rng.uniform(0.2, 1.0))}
        for j in range(n):
            poly[mi.unit(n, j)] = float(rng.uniform(-0.5, 0.5))
        out.append(fl.GaussianTerm(poly, s, mu, amplitude))
    return fl.GaussianMixtureField(n, tuple(out))


HEAVY_TAIL_EXPONENT = 2.5


def heavy_tail(spec: fl.GridSpec, amplitude: float = 1.0, exponent: float = HEAVY_TAIL_EXPONENT) -> fl.GridField:
    """(1 + |x|)^{-exponent} sampled on the grid."""
    return fl.GridField.from_function(
        spec, lambda x: amplitude * (1.0 + np.sqrt(np.sum(x * x, axis=-1))) ** (-exponent))


def heavy_tail_grid(n: int = 1, T_max: float = 1e4, dx: float = 1.0) -> fl.GridSpec:
    """Box wide enough that the algebraic tail stays below the trust threshold relative to the remainder.

    The shell carries about L^{-1.5} of mass, which must be small against the
    remainder at T_max, hence L ~ 5e5 in one dimension.
    """
    if n != 1:
        raise ValueError("heavy-tailed data is sampled in one dimension only")
    half = max(12.0 * math.sqrt(T_max), 524288.0)
    pts = 1 << math.ceil(math.log2(2 * half / dx))
    return fl.GridSpec(n, half, pts)


def mixture_data(e: ExperimentConfig) -> fl.GaussianMixtureField:
    if e.data == "gauss":
        return fl.GaussianMixtureField.gauss(e.n, 1.0, None, e.amplitude)
    if e.data == "two-bump":
        return two_bump(e.n, e.amplitude)
    if e.data == "random-mixture":
        return random_mixture(e.n, e.seed, amplitude=e.amplitude)
    raise ValueError(f"data {e.data!r} is not a mixture")


def grid_spec(e: ExperimentConfig, default: Callable[[], fl.GridSpec]) -> fl.GridSpec:
    g = e.grid
    if g.half_width is None and g.points is None:
        return default()
    base = default()
    half = g.half_width if g.half_width is not None else base.half_width
    pts = g.points if g.points is not None else 1 << math.ceil(math.log2(2 * half / g.dx))
    return fl.GridSpec(e.n, half, pts)


def commutator_grid(n: int) -> fl.GridSpec:
    """Boxes on which the grid identity residual reaches rounding level for t <= 10, |alpha| <= 4."""
    return fl.GridSpec(1, 40.0, 1024) if n == 1 else fl.GridSpec(n, 48.0, 512)


# --- results -----------------------------------------------------------------


@dataclass
class ExperimentResult:
    name: str
    kind: str
    files: Dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)
    status: str = "ok"  # ok | untrusted | guard | error
    message: str = ""

    def add(self, name: str, text: str):
        self.files[name] = text


def _reports(result: ExperimentResult, reports: List[an.RateReport], stem: str = "rates"):
    result.add(f"{stem}.json", dump_json([r.to_dict() for r in reports]))
    result.add(f"{stem}.csv", an.reports_to_csv(reports))
    result.summary.setdefault("rates", []).extend(
        {"series_id": r.series_id, "exponent": r.exponent, "predicted": r.predicted_exponent,
         "log_selected": r.log_selected, "log_score": r.log_score, "pass": r.passed} for r in reports)


# --- drivers -----------------------------------------------------------------


def linear_expansion(e: ExperimentConfig, res: ExperimentResult):
    heavy = e.data == "heavy-tail"
    # heavy-tailed data carries no rate claim; its check starts at t = 10
    times = np.geomspace(10.0 if heavy else 1.0, e.T_max, e.samples)
    window = e.fit_window or (1e2, e.T_max)
    rows, runs = [], []
    if e.data == "heavy-tail":
        spec = grid_spec(e, lambda: heavy_tail_grid(e.n, e.T_max))
        phi = heavy_tail(spec, e.amplitude)
        orders = [0]
        if any(m != 0 for m in e.m):
            res.flags.append("heavy-tail data: only m = 0 is meaningful; other orders skipped")
    else:
        phi = mixture_data(e)
        orders = list(e.m)
    for m in orders:
        prof = pr.build_expansion(phi, m)
        for q in e.q:
            vals = []
            for t in times:
                r = pr.scaled_expansion_remainder(phi, m, float(t), q, prof)
                b = pr.expansion_bound(phi, m, float(t), q) if e.data != "heavy-tail" else math.nan
                rows.append([m, q_label(q), float(t), r, b])
                vals.append(r)
            if e.data != "heavy-tail":
                runs.append(an.SeriesInput(f"m{m}_q{q_label(q)}", times, vals,
                                           predicted_exponent=-(m + 1) / 2, window=window))
            else:
                v = np.array(vals)
                res.summary[f"m0_q{q_label(q)}"] = {
                    "monotone": bool(np.all(np.diff(v) <= 0)),
                    "final_over_first": float(v[-1] / v[0]),
                }
    res.add("remainders.csv", to_csv(["m", "q", "t", "scaled_remainder", "bound"], rows))
    if runs:
        _reports(res, an.build_report(runs))
        over = [r for r in rows if r[3] > (1 + 1e-6) * r[4]]
        res.summary["bound_violations"] = len(over)


def commutator(e: ExperimentConfig, res: ExperimentResult):
    phi_m = mixture_data(e)
    rows = []
    worst = {}
    for order in range(1, e.max_order + 1):
        for alpha in mi.of_order(e.n, order):
            exp = cm.build_r_alpha(alpha)
            res.add(f"r_alpha/{alpha_label(alpha)}.json", dump_json(exp.to_dict()))
            for backend in e.backends:
                phi = phi_m if backend == "mixture" else fl.mixture_to_grid(
                    phi_m, grid_spec(e, lambda: commutator_grid(e.n)))
                for t in e.times:
                    r = cm.identity_residual(phi, alpha, t)
                    rows.append([alpha_label(alpha), t, backend, r])
                    worst[backend] = max(worst.get(backend, 0.0), r)
    res.add("residuals.csv", to_csv(["alpha", "t", "backend", "residual"], rows))
    res.summary["max_residual"] = worst
    est_rows = []
    t_grid = np.geomspace(1e-2, 1e4, e.samples)
    for m in [m for m in e.m if m >= 1]:
        a = cm.verify_commutator_estimate(phi_m, m, t_grid)
        b = cm.verify_moment_estimate(phi_m, m, t_grid)
        for rep, which in ((a, "commutator"), (b, "weighted")):
            for row in rep.to_rows():
                est_rows.append([which, m, row["t"], row["lhs"], row["rhs"], row["ratio"]])
        res.summary[f"C_{m}"] = {"commutator": a.max_ratio, "weighted": b.max_ratio}
    if est_rows:
        res.add("estimates.csv", to_csv(["estimate", "m", "t", "lhs", "rhs", "ratio"], est_rows))


def weighted_window(e: ExperimentConfig, res: ExperimentResult):
    phi = mixture_data(e)
    rows, sup_rows = [], []
    ok = True
    for j in range(e.n):
        for eps in e.eps:
            w = cm.WeightWindow(e.n, j, eps)
            g, lap = cm.window_sup_norms(w)
            sup_rows.append([j, eps, g, w.grad_bound, lap, w.laplacian_bound])
            ok &= g <= w.grad_bound + 1e-10 and lap <= w.laplacian_bound + 1e-10
            for t in e.times:
                value, bound = cm.weighted_window_commutator(phi, w, t)
                rows.append([j, eps, t, value, bound])
                ok &= value <= bound
    res.add("window.csv", to_csv(["axis", "eps", "t", "value", "bound"], rows))
    res.add("sup_norms.csv", to_csv(["axis", "eps", "grad_sup", "grad_bound", "lap_sup", "lap_bound"], sup_rows))
    res.summary["all_within_bounds"] = bool(ok)


def _solver(e: ExperimentConfig, m_track: int = 2) -> Tuple[sl.SolverConfig, fl.GridField]:
    nl = sl.Nonlinearity(e.p, e.form, e.sign)
    cfg = sl.SolverConfig(nl, n=e.n, T_max=e.T_max, refine=e.refine, dx=e.grid.dx, m_track=m_track,
                          require_global=e.sign != 0)
    spec = grid_spec(e, lambda: cfg.grid_spec)
    cfg = replace(cfg, grid=spec)
    phi = fl.mixture_to_grid(mixture_data(e), spec)
    return cfg, phi


def _decay_sup(traj: sl.Trajectory) -> dict:
    n = traj.spec.n
    t = traj.times
    return {
        "q1": float(np.max(traj.norms["l1"])),
        "qinf": float(np.max((1 + t) ** (n / 2) * traj.norms["linf"])),
    }


def semilinear(e: ExperimentConfig, res: ExperimentResult):
    orders = sorted({m for m in e.m if m >= 0} | {1, 2})
    cfg, phi = _solver(e, max(orders))
    traj = sl.solve(phi, cfg)
    res.add("trajectory.csv", traj.series_csv())
    pic = sl.picard_residual(traj)
    cols = [traj.times, pic]
    header = ["t", "picard_residual"]
    res.summary["x_norm"] = traj.x_norm
    res.summary["decay_sup"] = _decay_sup(traj)
    res.summary["picard_max"] = float(pic.max())
    if e.picard_refinement:
        fine = sl.solve(phi, cfg.with_refine(2 * cfg.refine))
        pic2 = sl.picard_residual(fine)
        cols.append(pic2)
        header.append("picard_residual_halved")
        res.summary["picard_ratio"] = float(pic.max() / pic2.max())
        res.summary["halving_l1_change_at_T"] = float(
            fl.lq_norm(traj.states[-1] - fine.states[-1], 1, threshold=math.inf))
    res.add("picard.csv", to_csv(header, list(zip(*cols))))
    grow_rows = []
    for m in orders:
        total, ratio = sl.weighted_growth_series(traj, m)
        for t, a, b in zip(total.t, total.values, ratio.values):
            grow_rows.append([m, t, a, b])
        window = an.default_window(traj.times, 1)
        fit = an.fit_power(total.t, total.values, window)
        res.summary[f"growth_m{m}"] = {"max_ratio": float(np.max(ratio.values)), "exponent": fit.exponent}
    res.add("growth.csv", to_csv(["m", "t", "moment", "ratio"], grow_rows))


def _series_rows(series: List[sl.Series]) -> List[list]:
    return [[t, s.q, v, s.N] for s in series for t, v in zip(s.t, s.values)]


def approximants(e: ExperimentConfig, res: ExperimentResult):
    cfg, phi = _solver(e)
    traj = sl.solve(phi, cfg)
    top = max(e.N)
    chain: List[sl.CorrectedData] = []
    tails = []
    for k in range(1, top + 1):
        try:
            chain.append(sl.corrected_data(traj, k, chain))
        except TailUntrusted as exc:
            res.flags.append(str(exc))
            res.status = "untrusted"
            chain.append(sl.corrected_data(traj, k, chain, check_tail=False))
        c = chain[-1]
        tails.append({"N": k, "tail_mass": c.tail_mass, "tail_fraction": c.tail_fraction,
                      "integrand_exponent": c.tail_exponent})
    res.add("corrected.json", dump_json({"levels": tails,
                                         "mass_phi": fl.signed_moment(phi, mi.zero(e.n), threshold=math.inf),
                                         "mass_phi_1": fl.signed_moment(chain[0].phi_N, mi.zero(e.n),
                                                                        threshold=math.inf)}))
    series, runs = [], []
    for N in sorted(set(e.N)):
        regime = an.predict_regime(N, e.n, e.p)
        for q in e.q:
            s = sl.remainder_series(traj, chain[:N], q)
            series.append(s)
            window = e.fit_window or (max(4.0 * 2 ** (N - 1), 1e2), min(e.T_max, 1e4))
            runs.append(an.SeriesInput(f"N{N}_q{q_label(q)}", s.t, s.values, regime=regime, window=window, N=N))
    res.add("remainders.csv", to_csv(["t", "q", "scaled_remainder", "N"], _series_rows(series)))
    _reports(res, an.build_report(runs))


PROFILE_TOLERANCE = {0: 0.1, 1: 0.15}


def profiles(e: ExperimentConfig, res: ExperimentResult):
    cfg, phi = _solver(e)
    traj = sl.solve(phi, cfg)
    try:
        c1 = sl.corrected_data(traj, 1)
    except TailUntrusted as exc:
        res.flags.append(str(exc))
        res.status = "untrusted"
        c1 = sl.corrected_data(traj, 1, check_tail=False)
    prof = sl.profile_coefficients(c1, 1)
    res.add("profile.json", dump_json({"profile": prof.to_dict(), "tail_fraction": c1.tail_fraction,
                                       "tail_mass": c1.tail_mass}))
    rows, runs = [], []
    window = e.fit_window or (1e2, e.T_max)
    for m in e.m:
        for q in e.q:
            s = sl.profile_remainder_series(traj, c1, m, q)
            rows += [[m, t, q, v] for t, v in zip(s.t, s.values)]
            runs.append(an.SeriesInput(f"m{m}_q{q_label(q)}", s.t, s.values, predicted_exponent=-(m + 1) / 2,
                                       window=window, tolerance=PROFILE_TOLERANCE[m]))
    res.add("profile_remainders.csv", to_csv(["m", "t", "q", "scaled_remainder"], rows))
    _reports(res, an.build_report(runs))


DRIVERS = {
    "linear-expansion": linear_expansion,
    "commutator": commutator,
    "weighted-window": weighted_window,
    "semilinear": semilinear,
    "approximants": approximants,
    "profiles": profiles,
}


def full_suite(seed: int = 0) -> List[ExperimentConfig]:
    """The acceptance configurations as a list of experiments."""
    E = ExperimentConfig
    inf = math.inf
    return [
        E("commutator", "commutator-1d", n=1, max_order=4, backends=("mixture", "grid"), data="two-bump",
          m=(1, 2, 3), seed=seed),
        E("commutator", "commutator-2d", n=2, max_order=4, backends=("mixture", "grid"), data="two-bump",
          seed=seed),
        E("linear-expansion", "linear-expansion", n=1, data="two-bump", m=(0, 1, 2), q=(1.0, 2.0, inf),
          seed=seed),
        E("linear-expansion", "heavy-tail", n=1, data="heavy-tail", m=(0,), q=(1.0,), seed=seed),
        E("weighted-window", "weighted-window", n=1, data="gauss", seed=seed),
        E("semilinear", "semilinear-p4", n=1, p=4.0, amplitude=0.05, m=(1, 2), T_max=1e4, picard_refinement=True,
          seed=seed),
        E("approximants", "approximants-p4", n=1, p=4.0, amplitude=0.05, N=(1, 2), q=(1.0, inf), T_max=1e5,
          seed=seed),
        E("approximants", "approximants-p6", n=1, p=6.0, amplitude=0.05, N=(1,), q=(1.0, inf), T_max=1e4,
          seed=seed),
        E("profiles", "profiles-p6", n=1, p=6.0, amplitude=0.05, data="two-bump", m=(0, 1), q=(1.0,), T_max=1e4,
          seed=seed),
    ]


def run_experiment(e: ExperimentConfig) -> ExperimentResult:
    """Run one experiment, recording trust warnings and guard trips instead of raising."""
    res = ExperimentResult(slug(e.label), e.kind)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UntrustedWarning)
        try:
            DRIVERS[e.kind](e, res)
        except DecayViolation as exc:
            res.status, res.message = "guard", str(exc)
        except TailUntrusted as exc:
            res.status, res.message = "untrusted", str(exc)
        except Exception as exc:  # reported through the manifest and exit code 5
            res.status, res.message = "error", f"{type(exc).__name__}: {exc}"
    msgs = sorted({str(w.message) for w in caught if issubclass(w.category, UntrustedWarning)})
    if msgs:
        res.flags.extend(msgs)
        if res.status == "ok":
            res.status = "untrusted"
    res.summary["status"] = res.status
    if res.flags:
        res.summary["flags"] = res.flags
    if res.message:
        res.summary["message"] = res.message
    res.add("summary.json", dump_json(res.summary))
    return res
