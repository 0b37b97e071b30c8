"""Experiment configuration files.

A config is a TOML file with top-level ``seed`` and ``output_dir`` and a list
of ``[[experiment]]`` tables.  Every key has a default; ``reference_config()``
renders them all with comments.
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .analysis import fujita_exponent
from .errors import PreconditionViolated, SubcriticalExponent

KINDS = ("linear-expansion", "commutator", "weighted-window", "semilinear", "approximants", "profiles",
         "full-suite")
DATA_KINDS = ("gauss", "two-bump", "random-mixture", "heavy-tail")
FORMS = ("power", "abs_power", "signed_power")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class GridConfig:
    half_width: Optional[float] = None  # None: max(20, 12 sqrt(T_max))
    points: Optional[int] = None  # None: derived from dx
    dx: float = 0.25


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    name: str = ""
    n: int = 1
    p: float = 4.0
    form: str = "signed_power"
    sign: float = 1.0
    N: Tuple[int, ...] = (1,)
    m: Tuple[int, ...] = (0,)
    q: Tuple[float, ...] = (1.0,)
    max_order: int = 3
    times: Tuple[float, ...] = (0.1, 1.0, 10.0)
    eps: Tuple[float, ...] = (1.0, 0.1, 0.01)
    backends: Tuple[str, ...] = ("mixture",)
    data: str = "gauss"
    amplitude: float = 1.0
    T_max: float = 1e4
    samples: int = 25
    refine: int = 1
    picard_refinement: bool = False
    fit_window: Optional[Tuple[float, float]] = None
    grid: GridConfig = GridConfig()
    seed: int = 0

    @property
    def label(self) -> str:
        return self.name or self.kind


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    output_dir: str = "heatlab-out"
    experiments: Tuple[ExperimentConfig, ...] = ()
    source: Optional[str] = None


_TUPLE_KEYS = {"N": int, "m": int, "q": float, "times": float, "eps": float, "backends": str}
_SCALAR_KEYS = {"kind": str, "name": str, "n": int, "p": float, "form": str, "sign": float, "max_order": int,
                "data": str, "amplitude": float, "T_max": float, "samples": int, "refine": int,
                "picard_refinement": bool, "seed": int}


def _q_value(v: Any, where: str) -> float:
    if isinstance(v, str):
        if v.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(f"{where}: q entries are numbers or \"inf\", got {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _coerce(key: str, typ, v: Any, where: str):
    if typ is bool:
        if not isinstance(v, bool):
            raise ConfigError(f"{where}.{key}: expected true/false, got {v!r}")
        return v
    if typ is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
        return v
    if typ is float:
        if key == "q":
            return _q_value(v, f"{where}.{key}")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
        return float(v)
    if not isinstance(v, str):
        raise ConfigError(f"{where}.{key}: expected a string, got {v!r}")
    return v


def _experiment(raw: Mapping, where: str, seed: int) -> ExperimentConfig:
    if "kind" not in raw:
        raise ConfigError(f"{where}: missing required key 'kind'")
    known = set(_TUPLE_KEYS) | set(_SCALAR_KEYS) | {"grid", "fit_window"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kw: Dict[str, Any] = {"seed": seed}
    for key, typ in _SCALAR_KEYS.items():
        if key in raw:
            kw[key] = _coerce(key, typ, raw[key], where)
    for key, typ in _TUPLE_KEYS.items():
        if key in raw:
            v = raw[key]
            if not isinstance(v, list):
                v = [v]
            kw[key] = tuple(_coerce(key, typ, x, where) for x in v)
    if "fit_window" in raw:
        w = raw["fit_window"]
        if not (isinstance(w, list) and len(w) == 2):
            raise ConfigError(f"{where}.fit_window: expected [t_lo, t_hi]")
        kw["fit_window"] = (_coerce("fit_window", float, w[0], where), _coerce("fit_window", float, w[1], where))
    if "grid" in raw:
        g = raw["grid"]
        if not isinstance(g, Mapping):
            raise ConfigError(f"{where}.grid: expected a table")
        bad = sorted(set(g) - {"half_width", "points", "dx"})
        if bad:
            raise ConfigError(f"{where}.grid: unknown key(s) {', '.join(bad)}")
        kw["grid"] = GridConfig(
            half_width=_coerce("half_width", float, g["half_width"], where + ".grid") if "half_width" in g else None,
            points=_coerce("points", int, g["points"], where + ".grid") if "points" in g else None,
            dx=_coerce("dx", float, g.get("dx", 0.25), where + ".grid"),
        )
    return ExperimentConfig(**kw)


def validate_experiment(e: ExperimentConfig, where: str = "experiment") -> None:
    """Check module preconditions before anything runs."""
    if e.kind not in KINDS:
        raise ConfigError(f"{where}.kind: unknown kind {e.kind!r}; choose from {', '.join(KINDS)}")
    if e.kind == "full-suite":
        return
    if e.n < 1 or (e.n > 2 and e.kind not in ("commutator", "weighted-window")):
        raise ConfigError(f"{where}.n: kind {e.kind!r} supports n = 1 or 2, got {e.n}")
    if e.form not in FORMS:
        raise ConfigError(f"{where}.form: unknown form {e.form!r}")
    if e.data not in DATA_KINDS:
        raise ConfigError(f"{where}.data: unknown data {e.data!r}; choose from {', '.join(DATA_KINDS)}")
    if any(q < 1 for q in e.q):
        raise ConfigError(f"{where}.q: every q must satisfy 1 <= q <= inf")
    if any(t <= 0 for t in e.times):
        raise ConfigError(f"{where}.times: times must be positive")
    if any(not 0 < x <= 1 for x in e.eps):
        raise ConfigError(f"{where}.eps: eps must lie in (0, 1]")
    if e.samples < 8:
        raise ConfigError(f"{where}.samples: need at least 8 samples for rate fits")
    if e.refine < 1:
        raise ConfigError(f"{where}.refine: must be >= 1")
    if not e.T_max > 0:
        raise ConfigError(f"{where}.T_max: must be positive")
    if e.fit_window is not None and not 0 < e.fit_window[0] < e.fit_window[1]:
        raise ConfigError(f"{where}.fit_window: need 0 < t_lo < t_hi")
    if e.grid.points is not None and (e.grid.points < 8 or e.grid.points & (e.grid.points - 1)):
        raise ConfigError(f"{where}.grid.points: must be a power of two >= 8")
    if e.kind == "commutator":
        if e.max_order < 1:
            raise ConfigError(f"{where}.max_order: must be >= 1")
        bad = [b for b in e.backends if b not in ("mixture", "grid")]
        if bad:
            raise ConfigError(f"{where}.backends: unknown backend(s) {bad}")
    if e.kind == "linear-expansion" and any(m < 0 for m in e.m):
        raise ConfigError(f"{where}.m: orders must be >= 0")
    if e.kind in ("semilinear", "approximants", "profiles"):
        if e.data == "heavy-tail":
            raise ConfigError(f"{where}.data: heavy-tail data has no finite moments; use it with linear-expansion")
        pf = fujita_exponent(e.n)
        if e.sign != 0 and e.p <= pf:
            raise SubcriticalExponent(f"{where}.p: p = {e.p} does not exceed the Fujita exponent "
                                      f"p_F({e.n}) = {pf:g}")
        if e.form == "power" and float(e.p) != int(e.p):
            raise ConfigError(f"{where}.form: 'power' needs an integer p")
        if any(k < 1 for k in e.N):
            raise ConfigError(f"{where}.N: levels must be >= 1")
    if e.kind == "profiles":
        bad = [m for m in e.m if m not in (0, 1)]
        if bad:
            raise ConfigError(f"{where}.m: profiles exist for m = 0 and 1 only")
        for m in e.m:
            if e.sign != 0 and not e.p > 1 + (3 + m) / e.n:
                raise PreconditionViolated(f"{where}: the order-{m} profile needs p > 1 + (3 + m)/n = "
                                           f"{1 + (3 + m) / e.n:g}, got p = {e.p}")


def parse_config(text: str, source: Optional[str] = None) -> SuiteConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source or 'config'}: {exc}") from exc
    unknown = sorted(set(raw) - {"seed", "output_dir", "experiment"})
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {', '.join(unknown)}")
    seed = _coerce("seed", int, raw.get("seed", 0), "config")
    out = _coerce("output_dir", str, raw.get("output_dir", "heatlab-out"), "config")
    exps_raw = raw.get("experiment", [])
    if not isinstance(exps_raw, list):
        raise ConfigError("'experiment' must be an array of tables ([[experiment]])")
    exps = []
    for i, e in enumerate(exps_raw):
        where = f"experiment[{i}]"
        exp = _experiment(e, where, seed)
        validate_experiment(exp, where)
        exps.append(exp)
    names = [e.label for e in exps]
    dup = sorted({x for x in names if names.count(x) > 1})
    if dup:
        raise ConfigError(f"experiment names must be unique; repeated: {', '.join(dup)} (set 'name')")
    return SuiteConfig(seed, out, tuple(exps), source)


def load_config(path: str | Path) -> SuiteConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", name).strip("-") or "experiment"


REFERENCE = """\
# heatlab reference configuration; every key shows its default.
seed = 0                      # feeds random-mixture data
output_dir = "heatlab-out"    # relative paths resolve against the working directory

[[experiment]]
kind = "commutator"           # linear-expansion | commutator | weighted-window | semilinear
                              # | approximants | profiles | full-suite
name = ""                     # subdirectory name; defaults to kind
n = 1                         # space dimension (1 or 2 on grids)
p = 4.0                       # nonlinearity exponent, must exceed 1 + 2/n
form = "signed_power"         # power | abs_power | signed_power
sign = 1.0                    # 0 switches the nonlinearity off
N = [1]                       # approximant levels
m = [0]                       # expansion / profile / moment orders
q = [1.0]                     # Lebesgue exponents; "inf" allowed
max_order = 3                 # commutator: all |alpha| <= max_order
times = [0.1, 1.0, 10.0]      # commutator and window evaluation times
eps = [1.0, 0.1, 0.01]        # window widths
backends = ["mixture"]        # commutator backends: mixture, grid
data = "gauss"                # gauss | two-bump | random-mixture | heavy-tail
amplitude = 1.0               # multiplies the initial data
T_max = 1e4                   # final time
samples = 25                  # log-spaced sample times for linear runs
refine = 1                    # step refinement factor for nonlinear runs
picard_refinement = false     # also solve with halved steps and report the residual ratio
# fit_window = [100.0, 10000.0]  # default: last two decades above 4 * 2^(N-1)

[experiment.grid]
# half_width = 1200.0         # default max(20, 12 sqrt(T_max))
# points = 16384              # default: smallest power of two with spacing <= dx
dx = 0.25
"""


def reference_config() -> str:
    return REFERENCE
