"""Decay-rate fitting, regime prediction and rate reports.

Remainder estimates for the corrected approximants come in three shapes,
selected by N*sigma with sigma = (n/2)(p - 1) - 1:

    N sigma < 1  ->  t^{-N sigma}
    N sigma = 1  ->  t^{-1} log(1 + t)
    N sigma > 1  ->  t^{-1}
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import InsufficientData, NonPositiveSample, SubcriticalExponent

MIN_SAMPLES = 8
LOG_SELECTION_THRESHOLD = 0.5
KNIFE_EDGE = 1e-9

POWER = "power"
POWER_TIMES_LOG = "power_times_log"


def _window(t: np.ndarray, y: np.ndarray, window: Optional[Tuple[float, float]]):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape:
        raise ValueError("t and y must have the same shape")
    if window is not None:
        lo, hi = window
        if not lo < hi:
            raise ValueError("window must satisfy t_lo < t_hi")
        keep = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
        t, y = t[keep], y[keep]
    if len(t) < MIN_SAMPLES:
        raise InsufficientData(f"need at least {MIN_SAMPLES} samples in the fit window, got {len(t)}")
    if np.any(t <= 0) or np.any(~(y > 0)):
        raise NonPositiveSample("log-log fits need strictly positive t and y")
    return t, y


@dataclass(frozen=True)
class PowerFit:
    exponent: float
    stderr: float
    log_prefactor: float
    rss: float
    samples: int


def fit_power(t: Sequence[float], y: Sequence[float], window: Optional[Tuple[float, float]] = None) -> PowerFit:
    """Least-squares slope of log y against log t."""
    t, y = _window(np.asarray(t), np.asarray(y), window)
    X = np.log(t)
    Y = np.log(y)
    A = np.column_stack([X, np.ones_like(X)])
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - A @ coef
    rss = float(resid @ resid)
    k = len(X)
    sxx = float(np.sum((X - X.mean()) ** 2))
    stderr = math.sqrt(rss / (k - 2) / sxx) if sxx > 0 else math.inf
    return PowerFit(float(coef[0]), stderr, float(coef[1]), rss, k)


@dataclass(frozen=True)
class LogFit:
    model: str
    score: float
    rss_power: float
    rss_log: float


def fit_log_corrected(t: Sequence[float], y: Sequence[float], window: Optional[Tuple[float, float]] = None,
                      threshold: float = LOG_SELECTION_THRESHOLD) -> LogFit:
    """Compare y ~ C t^a against y ~ C t^{-1} log(1+t) in log space.

    ``score`` is rss_log / rss_power; the log model is chosen only when it at
    least divides the residual by 1/threshold.
    """
    tw, yw = _window(np.asarray(t), np.asarray(y), window)
    power = fit_power(tw, yw)
    shape = np.log(np.log1p(tw) / tw)
    r = np.log(yw) - shape
    r = r - r.mean()
    rss_log = float(r @ r)
    tiny = 1e-300
    if power.rss <= tiny:
        score = 0.0 if rss_log <= tiny else math.inf
    else:
        score = rss_log / power.rss
    model = POWER_TIMES_LOG if score <= threshold else POWER
    return LogFit(model, score, power.rss, rss_log)


@dataclass(frozen=True)
class RateRegime:
    N: int
    n: int
    p: float
    sigma: float
    form: str  # "t^-Nsigma" | "t^-1 log(1+t)" | "t^-1"

    @property
    def exponent(self) -> float:
        return -self.N * self.sigma if self.form == "t^-Nsigma" else -1.0

    @property
    def log_corrected(self) -> bool:
        return self.form == "t^-1 log(1+t)"

    def to_dict(self) -> dict:
        return {"N": self.N, "n": self.n, "p": self.p, "sigma": self.sigma, "form": self.form,
                "exponent": self.exponent}


def fujita_exponent(n: int) -> float:
    return 1.0 + 2.0 / n


def sigma_of(n: int, p: float) -> float:
    return (n / 2) * (p - 1) - 1


def predict_regime(N: int, n: int, p: float) -> RateRegime:
    if N < 1:
        raise ValueError("N must be >= 1")
    if p <= fujita_exponent(n):
        raise SubcriticalExponent(f"p = {p} does not exceed the Fujita exponent 1 + 2/{n} = {fujita_exponent(n)}")
    sigma = sigma_of(n, p)
    ns = N * sigma
    if abs(ns - 1.0) < KNIFE_EDGE:
        form = "t^-1 log(1+t)"
    elif ns < 1:
        form = "t^-Nsigma"
    else:
        form = "t^-1"
    return RateRegime(N, n, float(p), sigma, form)


def default_window(t: Sequence[float], N: int = 1, decades: float = 2.0) -> Tuple[float, float]:
    """Last ``decades`` of the data, never starting at or below 4 * 2^{N-1}."""
    t = np.asarray(t, dtype=float)
    hi = float(t.max())
    lo = max(hi / 10 ** decades, 4.0 * 2 ** (N - 1))
    if not lo < hi:
        raise InsufficientData("no data beyond the transient cutoff")
    return lo, hi


@dataclass
class SeriesInput:
    """One series with what it is supposed to do.

    Give either ``regime`` (nonlinear remainders) or ``predicted_exponent``
    (linear or profile remainders).
    """

    series_id: str
    t: Sequence[float]
    y: Sequence[float]
    regime: Optional[RateRegime] = None
    predicted_exponent: Optional[float] = None
    window: Optional[Tuple[float, float]] = None
    tolerance: Optional[float] = None
    N: int = 1


@dataclass(frozen=True)
class RateReport:
    series_id: str
    t_lo: float
    t_hi: float
    exponent: float
    stderr: float
    log_selected: bool
    log_score: float
    predicted_exponent: float
    regime: str
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = {"nonlinear": 0.1, "linear": 0.05}


def build_report(runs: Sequence[SeriesInput], tolerances: Optional[dict] = None) -> List[RateReport]:
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    out = []
    for run in runs:
        if run.regime is None and run.predicted_exponent is None:
            raise ValueError(f"series {run.series_id!r} has no prediction")
        window = run.window or default_window(run.t, run.N)
        pf = fit_power(run.t, run.y, window)
        lf = fit_log_corrected(run.t, run.y, window)
        if run.regime is not None:
            predicted = run.regime.exponent
            regime = run.regime.form
            tolerance = run.tolerance if run.tolerance is not None else tol["nonlinear"]
            if run.regime.log_corrected:
                passed = lf.model == POWER_TIMES_LOG
            else:
                passed = abs(pf.exponent - predicted) <= tolerance
        else:
            predicted = float(run.predicted_exponent)
            regime = "power"
            tolerance = run.tolerance if run.tolerance is not None else tol["linear"]
            passed = abs(pf.exponent - predicted) <= tolerance
        out.append(RateReport(run.series_id, float(window[0]), float(window[1]), pf.exponent, pf.stderr,
                              lf.model == POWER_TIMES_LOG, lf.score, predicted, regime, tolerance, bool(passed)))
    return out


def reports_to_json(reports: Sequence[RateReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True, allow_nan=True) + "\n"


CSV_COLUMNS = ("series_id", "exponent", "stderr", "predicted", "regime", "pass")


def reports_to_csv(reports: Sequence[RateReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([r.series_id, repr(r.exponent), repr(r.stderr), repr(r.predicted_exponent), r.regime,
                    "true" if r.passed else "false"])
    return buf.getvalue()
