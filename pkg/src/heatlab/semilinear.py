"""Small-data solutions of u_t = Delta u + f(u), corrected data and approximants.

The solver marches the Duhamel form

    u(t) = e^{t Delta} phi + int_0^t e^{(t-s) Delta} f(u(s)) ds

with ETD2RK (exact heat propagator, trapezoidal predictor-corrector for f) on
a periodic grid.  Steps are grouped between checkpoints that are geometric in
1 + t; within one interval all substeps have the same length, so ``refine=2``
halves every step exactly.

Remainders u - u_N are never formed as differences of two O(1) fields.  For
each level k with source g_k = f(u) - f(u_{k-1}) (u_0 = 0) the march also
carries

    C_k(t) = int_0^t g_k ds,
    K_k(t) = int_0^t (e^{(t-s) Delta} - e^{t Delta}) g_k(s) ds,

and then D_k(t) = u(t) - u_k(t) = K_k(t) - e^{t Delta} (C_k(inf) - C_k(t)),
where C_k(inf) is C_k(T) plus a power-law tail.  Level k+1 needs D_k at every
step, so level N costs one more march over the same step plan ("companion
pass"); the marches are deterministic, so u is reproduced bit for bit.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import fields as fl
from . import multiindex as mi
from .analysis import fit_power, fujita_exponent, sigma_of
from .errors import DecayViolation, InsufficientData, NonPositiveSample, PreconditionViolated, \
    SubcriticalExponent, TailUntrusted
from .profiles import ExpansionProfile, eval_expansion
from .semigroup import propagate

FORMS = ("power", "abs_power", "signed_power")


@dataclass(frozen=True)
class Nonlinearity:
    """f(xi) = sign * xi^p, sign * |xi|^p or sign * |xi|^{p-1} xi; sign = 0 switches f off."""

    p: float
    form: str = "signed_power"
    sign: float = 1.0

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("the exponent p must exceed 1")
        if self.form not in FORMS:
            raise ValueError(f"unknown form {self.form!r}; choose from {FORMS}")
        if self.form == "power" and float(self.p) != int(self.p):
            raise ValueError("form 'power' needs an integer p; use abs_power or signed_power otherwise")

    @classmethod
    def zero(cls, p: float = 3.0) -> "Nonlinearity":
        return cls(p, "signed_power", 0.0)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    @property
    def K(self) -> float:
        """Constant in |f(a) - f(b)| <= K (|a|^{p-1} + |b|^{p-1}) |a - b| (mean value bound)."""
        return self.p * abs(self.sign)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.sign == 0:
            return np.zeros_like(v)
        if self.form == "power":
            out = v ** int(self.p)
        elif self.form == "abs_power":
            out = np.abs(v) ** self.p
        else:
            out = np.abs(v) ** (self.p - 1) * v
        return self.sign * out

    def lipschitz_ratio(self, a: np.ndarray, b: np.ndarray) -> float:
        """max |f(a)-f(b)| / (K (|a|^{p-1}+|b|^{p-1}) |a-b|) over the sample pairs."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        den = self.K * (np.abs(a) ** (self.p - 1) + np.abs(b) ** (self.p - 1)) * np.abs(a - b)
        num = np.abs(self(a) - self(b))
        ok = den > 0
        return float(np.max(num[ok] / den[ok], initial=0.0))

    def to_dict(self) -> dict:
        return {"p": self.p, "form": self.form, "sign": self.sign}


def apply_f(f: fl.GridField, nl: Nonlinearity) -> fl.GridField:
    if not isinstance(f, fl.GridField):
        raise TypeError("apply_f works on grid fields; sample mixtures with mixture_to_grid first")
    return fl.GridField(f.spec, nl(f.values))


@dataclass(frozen=True)
class SolverConfig:
    nonlinearity: Nonlinearity
    n: int = 1
    T_max: float = 1e4
    amplitude: float = 1.0
    h0: float = 0.01
    growth: float = 1.0
    h_max: float = 1e3
    refine: int = 1
    checkpoint_ratio: float = 2 ** 0.125
    grid: Optional[fl.GridSpec] = None
    dx: float = 0.25
    m_track: int = 2
    guard: float = 10.0
    budget: float = 1.0
    tail_limit: float = 0.01
    track_picard: bool = True
    require_global: bool = True

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("nonlinear runs support n = 1 or 2")
        if not self.T_max > 0:
            raise ValueError("T_max must be positive")
        if not (self.h0 > 0 and self.h_max > 0 and self.growth >= 0):
            raise ValueError("step parameters must be positive")
        if int(self.refine) != self.refine or self.refine < 1:
            raise ValueError("refine must be a positive integer")
        if not self.checkpoint_ratio > 1:
            raise ValueError("checkpoint_ratio must exceed 1")
        if self.grid is not None and self.grid.n != self.n:
            raise ValueError("grid dimension does not match n")
        if self.require_global and not self.nonlinearity.is_zero and self.nonlinearity.p <= self.p_F:
            raise SubcriticalExponent(
                f"p = {self.nonlinearity.p} does not exceed the Fujita exponent p_F({self.n}) = {self.p_F}")

    @property
    def p(self) -> float:
        return self.nonlinearity.p

    @property
    def p_F(self) -> float:
        return fujita_exponent(self.n)

    @property
    def sigma(self) -> float:
        return sigma_of(self.n, self.p)

    @property
    def grid_spec(self) -> fl.GridSpec:
        return self.grid if self.grid is not None else fl.GridSpec.for_horizon(self.n, self.T_max, self.dx)

    def checkpoints(self) -> np.ndarray:
        """t_k = r^k - 1 up to T_max; the last interval is never shorter than a quarter step."""
        r = self.checkpoint_ratio
        kmax = math.ceil(math.log1p(self.T_max) / math.log(r))
        ts = [r ** k - 1.0 for k in range(kmax)]
        ts = [t for t in ts if t < self.T_max]
        if len(ts) > 1 and (self.T_max - ts[-1]) < 0.25 * (ts[-1] - ts[-2]):
            ts.pop()
        ts.append(float(self.T_max))
        return np.array(ts)

    def step_plan(self) -> List[Tuple[float, float, int]]:
        """(t_start, h, substeps) for each checkpoint interval."""
        ts = self.checkpoints()
        plan = []
        for a, b in zip(ts[:-1], ts[1:]):
            h_target = min(self.h_max, self.h0 * (1.0 + a) ** self.growth)
            k = max(1, math.ceil((b - a) / h_target - 1e-9)) * int(self.refine)
            plan.append((float(a), (b - a) / k, k))
        return plan

    def with_refine(self, refine: int) -> "SolverConfig":
        return replace(self, refine=refine)


# --- the march ---------------------------------------------------------------


def _phi_functions(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, with Taylor series near 0."""
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    phi1 = np.where(small, 1 + z / 2 + z ** 2 / 6 + z ** 3 / 24, np.expm1(zs) / zs)
    phi2 = np.where(small, 0.5 + z / 6 + z ** 2 / 24 + z ** 3 / 120, (np.expm1(zs) - zs) / zs ** 2)
    return phi1, phi2


class _Level:
    """Running K, C and flux for one correction level."""

    def __init__(self, shape_hat, c_inf_hat=None):
        self.K = np.zeros(shape_hat, dtype=complex)
        self.C = np.zeros(shape_hat, dtype=complex)
        self.c_inf = c_inf_hat
        self.g_hat = None
        self.g = None
        self.snap_K: List[np.ndarray] = []
        self.snap_C: List[np.ndarray] = []
        self.flux: List[float] = []


@dataclass
class _MarchResult:
    times: np.ndarray
    states: List[np.ndarray]
    picard_images: List[np.ndarray]
    accumulator: np.ndarray
    norms: Dict[str, np.ndarray]
    moments: Dict[mi.MultiIndex, np.ndarray]
    levels: List[_Level]
    final_g: List[np.ndarray]
    x_norm: float


def _march(phi: np.ndarray, cfg: SolverConfig, c_infs: Sequence[np.ndarray], new_level: bool,
           record: bool = True) -> _MarchResult:
    spec = cfg.grid_spec
    nl = cfg.nonlinearity
    n = spec.n
    dv = spec.cell_volume
    irfft = lambda a: np.fft.irfftn(a, s=spec.shape, axes=tuple(range(spec.n)))  # noqa: E731
    rfft = np.fft.rfftn
    lap = -sum(k * k for k in spec.wavenumbers(real=True))

    u = phi.copy()
    uh = rfft(u)
    Fu = nl(u)
    Fh = rfft(Fu)
    phi_hat = uh.copy()
    picard_I = np.zeros_like(uh) if cfg.track_picard else None

    levels = [_Level(uh.shape, rfft(c)) for c in c_infs]
    if new_level:
        levels.append(_Level(uh.shape, None))

    def update_levels(u_phys, Fu_phys, E_t, step=None):
        """Set g_k for every level at the current time; with ``step`` also advance K_k and C_k.

        Level k's source needs D_{k-1} at the same time, so levels go in order.
        """
        prev_D = None
        for k, lv in enumerate(levels):
            g = Fu_phys if k == 0 else Fu_phys - nl(u_phys - prev_D)
            g_hat = rfft(g)
            if step is not None:
                E, P1, P2, h = step
                go = lv.g_hat
                lv.K = E * lv.K + P1 * go + P2 * (g_hat - go) - E_t * (0.5 * h) * (go + g_hat)
                lv.C = lv.C + 0.5 * h * (go + g_hat)
            lv.g, lv.g_hat = g, g_hat
            if k < len(levels) - 1:
                prev_D = irfft(lv.K - E_t * (lv.c_inf - lv.C))

    update_levels(u, Fu, np.ones_like(lap))

    times = cfg.checkpoints()
    alphas = [a for a in mi.up_to_order(n, cfg.m_track)]
    coords = spec.points_array()
    weights = {a: np.prod([coords[..., j] ** a[j] for j in range(n)], axis=0) for a in alphas}

    states, images, acc_series = [], [], []
    norms = {"l1": [], "l2": [], "linf": []}
    moments = {a: [] for a in alphas}
    accumulator = 0.0
    x_norm = 0.0
    linf0 = float(np.max(np.abs(u))) or 1.0

    def snapshot(t):
        nonlocal x_norm
        a_u = np.abs(u)
        l1 = float(a_u.sum() * dv)
        linf = float(a_u.max())
        x_norm = max(x_norm, l1 + (1 + t) ** (n / 2) * linf)
        if not record:
            for lv in levels:
                lv.snap_K.append(irfft(lv.K))
                lv.snap_C.append(irfft(lv.C))
                lv.flux.append(float(np.abs(lv.g).sum() * dv))
            return
        states.append(u.copy())
        if picard_I is not None:
            images.append(irfft(np.exp(t * lap) * phi_hat + picard_I))
        norms["l1"].append(l1)
        norms["l2"].append(float(math.sqrt(np.sum(a_u ** 2) * dv)))
        norms["linf"].append(linf)
        for a in alphas:
            moments[a].append(float(np.sum(a_u * np.abs(weights[a])) * dv))
        acc_series.append(accumulator)
        for lv in levels:
            lv.snap_K.append(irfft(lv.K))
            lv.snap_C.append(irfft(lv.C))
            lv.flux.append(float(np.abs(lv.g).sum() * dv))

    snapshot(0.0)
    t = 0.0
    for (t_start, h, k_sub) in cfg.step_plan():
        z = h * lap
        E = np.exp(z)
        p1, p2 = _phi_functions(z)
        P1, P2 = h * p1, h * p2
        for i in range(k_sub):
            t_new = t_start + (i + 1) * h
            a_hat = E * uh + P1 * Fh
            Fa = rfft(nl(irfft(a_hat)))
            uh_new = a_hat + P2 * (Fa - Fh)
            u_new = irfft(uh_new)
            Fu_new = nl(u_new)
            Fh_new = rfft(Fu_new)
            if not np.all(np.isfinite(u_new)):
                raise DecayViolation(f"non-finite values at t = {t_new:.4g}")
            linf = float(np.max(np.abs(u_new)))
            if (1 + t_new) ** (n / 2) * linf > cfg.guard * linf0 * 1.0 and not nl.is_zero:
                raise DecayViolation(
                    f"(1+t)^(n/2)||u||_inf = {(1 + t_new) ** (n / 2) * linf:.3e} exceeds {cfg.guard} x initial "
                    f"at t = {t_new:.4g}")
            accumulator += 0.5 * h * (Fh[(0,) * n].real + Fh_new[(0,) * n].real) * dv
            if picard_I is not None:
                picard_I = E * (picard_I + 0.5 * h * Fh) + 0.5 * h * Fh_new
            if levels:
                update_levels(u_new, Fu_new, np.exp(t_new * lap), (E, P1, P2, h))
            u, uh, Fu, Fh = u_new, uh_new, Fu_new, Fh_new
            t = t_new
        snapshot(t)

    return _MarchResult(
        times=times,
        states=states,
        picard_images=images,
        accumulator=np.array(acc_series),
        norms={k: np.array(v) for k, v in norms.items()},
        moments={a: np.array(v) for a, v in moments.items()},
        levels=levels,
        final_g=[lv.g.copy() for lv in levels],
        x_norm=x_norm,
    )


# --- public types ------------------------------------------------------------


@dataclass(frozen=True)
class LevelData:
    """Raw checkpoint data of one correction level: K_k(t_j), C_k(t_j), ||g_k(t_j)||_1, g_k(T)."""

    K: Tuple[np.ndarray, ...]
    C: Tuple[np.ndarray, ...]
    flux: np.ndarray
    g_final: np.ndarray


@dataclass(frozen=True, eq=False)
class Trajectory:
    config: SolverConfig
    phi: fl.GridField
    times: np.ndarray
    states: Tuple[fl.GridField, ...]
    norms: Dict[str, np.ndarray]
    moments: Dict[mi.MultiIndex, np.ndarray]
    accumulator: np.ndarray
    picard_images: Tuple[fl.GridField, ...]
    level1: LevelData
    x_norm: float

    @property
    def spec(self) -> fl.GridSpec:
        return self.phi.spec

    def index_of(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, t):
            raise ValueError(f"t = {t} is not a checkpoint")
        return k

    def state(self, t: float) -> fl.GridField:
        return self.states[self.index_of(t)]

    def perturbed(self, k: int, delta: fl.GridField) -> "Trajectory":
        """Copy with checkpoint k replaced by u(t_k) + delta (sensitivity probes)."""
        states = list(self.states)
        states[k] = states[k] + delta
        return replace(self, states=tuple(states))

    def series_csv(self) -> str:
        """Columns t, l1, l2, linf, moment columns keyed by alpha, accumulator."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        alphas = sorted(self.moments, key=lambda a: (mi.order(a), tuple(-x for x in a)))
        w.writerow(["t", "l1", "l2", "linf"] + ["x^" + "_".join(map(str, a)) for a in alphas] + ["accumulator"])
        for i, t in enumerate(self.times):
            w.writerow([repr(float(t)), repr(float(self.norms["l1"][i])), repr(float(self.norms["l2"][i])),
                        repr(float(self.norms["linf"][i]))]
                       + [repr(float(self.moments[a][i])) for a in alphas] + [repr(float(self.accumulator[i]))])
        return buf.getvalue()


def _check_data(phi: fl.GridField, cfg: SolverConfig) -> fl.GridField:
    if not isinstance(phi, fl.GridField):
        raise TypeError("solve needs a GridField; sample mixtures with mixture_to_grid first")
    spec = cfg.grid_spec
    if phi.spec != spec:
        raise ValueError(f"initial data grid {phi.spec} differs from the solver grid {spec}")
    phi = phi * cfg.amplitude if cfg.amplitude != 1.0 else phi
    size = fl.lq_norm(phi, 1) + fl.lq_norm(phi, math.inf)
    if size > cfg.budget:
        raise PreconditionViolated(f"||phi||_1 + ||phi||_inf = {size:.3e} exceeds the smallness budget {cfg.budget}")
    if phi.boundary_mass > fl.DEFAULT_TRUST_THRESHOLD:
        fl._warn_untrusted("solve (initial data)", phi.boundary_mass, fl.DEFAULT_TRUST_THRESHOLD)
    return phi


def solve(phi: fl.GridField, cfg: SolverConfig) -> Trajectory:
    """Trajectory on [0, T_max]; also collects the level-1 data for phi_1."""
    phi = _check_data(phi, cfg)
    res = _march(phi.values, cfg, [], new_level=True)
    spec = phi.spec
    lv = res.levels[0]
    level1 = LevelData(tuple(lv.snap_K), tuple(lv.snap_C), np.array(lv.flux), res.final_g[0])
    return Trajectory(
        config=cfg,
        phi=phi,
        times=res.times,
        states=tuple(fl.GridField(spec, s) for s in res.states),
        norms=res.norms,
        moments=res.moments,
        accumulator=res.accumulator,
        picard_images=tuple(fl.GridField(spec, s) for s in res.picard_images),
        level1=level1,
        x_norm=res.x_norm,
    )


def picard_residual(traj: Trajectory, cfg: SolverConfig | None = None) -> np.ndarray:
    """||u(t_k) - (Phi u)(t_k)||_1 at each checkpoint.

    Phi u is the trapezoidal Duhamel sum over every step state of the march
    with exact propagators; it is a different quadrature from the ETD2RK
    update, so the residual measures the discretisation error.
    """
    if not traj.picard_images:
        raise ValueError("trajectory was solved with track_picard = False")
    dv = traj.spec.cell_volume
    return np.array([float(np.abs(s.values - im.values).sum() * dv)
                     for s, im in zip(traj.states, traj.picard_images)])


# --- corrected data and approximants -----------------------------------------


@dataclass(frozen=True, eq=False)
class CorrectedData:
    N: int
    phi_N: fl.GridField
    correction: fl.GridField
    tail: fl.GridField
    tail_mass: float
    tail_fraction: float
    tail_exponent: float
    level: LevelData

    @property
    def c_inf(self) -> np.ndarray:
        return self.correction.values


def _tail(times: np.ndarray, flux: np.ndarray, g_final: np.ndarray, T: float):
    """Power-law tail int_T^inf g ds ~ g(T) T / (a - 1), with ||g(s)||_1 ~ s^{-a} fitted on the last decade."""
    if not np.any(flux > 0):
        return np.zeros_like(g_final), 0.0, math.nan
    try:
        fit = fit_power(times, flux, (T / 10.0, T))
    except (InsufficientData, NonPositiveSample) as exc:
        raise TailUntrusted(f"cannot fit the integrand decay on the last decade: {exc}") from exc
    a = -fit.exponent
    if not a > 1:
        raise TailUntrusted(f"integrand decays like s^{fit.exponent:.3f}; the time integral does not converge")
    return g_final * (T / (a - 1.0)), float(flux[-1] * T / (a - 1.0)), fit.exponent


def _corrected(traj: Trajectory, N: int, level: LevelData, check_tail: bool) -> CorrectedData:
    cfg = traj.config
    spec = traj.spec
    T = float(traj.times[-1])
    tail, tail_mass, expo = _tail(traj.times, level.flux, level.g_final, T)
    c_T = level.C[-1]
    c_norm = float(np.abs(c_T).sum() * spec.cell_volume)
    fraction = tail_mass / c_norm if c_norm > 0 else 0.0
    if check_tail and fraction > cfg.tail_limit:
        raise TailUntrusted(f"tail {tail_mass:.3e} is {fraction:.2%} of the level-{N} correction "
                            f"(limit {cfg.tail_limit:.0%}); extend T_max")
    correction = fl.GridField(spec, c_T + tail)
    return CorrectedData(N, traj.phi + correction, correction, fl.GridField(spec, tail), tail_mass, fraction,
                         expo, level)


def corrected_data(traj: Trajectory, N: int, prior: Sequence[CorrectedData] = (),
                   check_tail: bool = True) -> CorrectedData:
    """phi_N = phi + int_0^inf (f(u) - f(u_{N-1})) ds; ``prior`` holds levels 1..N-1."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if N == 1:
        return _corrected(traj, 1, traj.level1, check_tail)
    if len(prior) != N - 1 or [c.N for c in prior] != list(range(1, N)):
        raise ValueError(f"level {N} needs corrected data for levels 1..{N - 1}")
    res = _march(traj.phi.values, traj.config, [c.c_inf for c in prior], new_level=True, record=False)
    lv = res.levels[-1]
    level = LevelData(tuple(lv.snap_K), tuple(lv.snap_C), np.array(lv.flux), res.final_g[-1])
    return _corrected(traj, N, level, check_tail)


def corrected_chain(traj: Trajectory, N: int, check_tail: bool = True) -> List[CorrectedData]:
    out: List[CorrectedData] = []
    for k in range(1, N + 1):
        out.append(corrected_data(traj, k, out, check_tail))
    return out


def remainder_field(traj: Trajectory, corrected: CorrectedData, k: int) -> fl.GridField:
    """u(t_k) - u_N(t_k) at checkpoint index k, built without cancellation."""
    t = float(traj.times[k])
    lv = corrected.level
    ahead = fl.GridField(traj.spec, corrected.c_inf - lv.C[k])
    with_tail = propagate(ahead, t) if t > 0 else ahead
    return fl.GridField(traj.spec, lv.K[k] - with_tail.values)


def approximant(traj: Trajectory, corrected: Sequence[CorrectedData], t: float) -> fl.GridField:
    """u_N(t) for N = len(corrected).

    N = 1 is the free flow e^{t Delta} phi_1 at any t.  For N >= 2, t must be a
    checkpoint and u_N = u - (u - u_N).
    """
    N = len(corrected)
    if N < 1:
        raise ValueError("need corrected data for at least level 1")
    if N == 1:
        return propagate(corrected[0].phi_N, t)
    k = traj.index_of(t)
    return traj.states[k] - remainder_field(traj, corrected[-1], k)


@dataclass(frozen=True)
class Series:
    label: str
    t: np.ndarray
    values: np.ndarray
    q: float = math.nan
    N: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "q", "scaled_remainder", "N"])
        for t, v in zip(self.t, self.values):
            w.writerow([repr(float(t)), repr(float(self.q)), repr(float(v)), self.N])
        return buf.getvalue()


def _select(traj: Trajectory, t_grid: Optional[Sequence[float]], t_min: float) -> List[int]:
    if t_grid is None:
        return [k for k, t in enumerate(traj.times) if t > t_min]
    idx = [traj.index_of(t) for t in t_grid]
    if any(traj.times[k] <= t_min for k in idx):
        raise ValueError(f"t_grid must lie in ({t_min}, T_max]")
    return idx


def remainder_series(traj: Trajectory, corrected: Sequence[CorrectedData], q: float,
                     t_grid: Optional[Sequence[float]] = None) -> Series:
    """t^{(n/2)(1-1/q)} ||u(t) - u_N(t)||_q on checkpoints in (2^{N-1}, T_max]."""
    N = len(corrected)
    n = traj.spec.n
    idx = _select(traj, t_grid, 2.0 ** (N - 1))
    vals = []
    for k in idx:
        t = float(traj.times[k])
        r = remainder_field(traj, corrected[-1], k)
        vals.append(t ** ((n / 2) * (1 - 1 / q)) * fl.lq_norm(r, q, threshold=math.inf))
    return Series(f"u-u{N}", traj.times[idx], np.array(vals), float(q), N)


def weighted_growth_series(traj: Trajectory, m: int) -> Tuple[Series, Series]:
    """(sum_{|alpha|=m} ||x^alpha u||_1, the same divided by 1 + t^{m/2})."""
    n = traj.spec.n
    alphas = list(mi.of_order(n, m))
    if all(a in traj.moments for a in alphas):
        total = sum(traj.moments[a] for a in alphas)
    else:
        total = np.array([sum(fl.weighted_l1_moment(s, a, threshold=math.inf) for a in alphas)
                          for s in traj.states])
    ratio = total / (1.0 + traj.times ** (m / 2))
    return Series(f"moment{m}", traj.times, total), Series(f"moment{m}_ratio", traj.times, ratio)


def profile_coefficients(corrected1: CorrectedData, m: int) -> ExpansionProfile:
    """c_0 = int phi_1 and c_j = int y_j phi_1 (no factorials at order <= 1)."""
    phi1 = corrected1.phi_N
    moments = {a: fl.signed_moment(phi1, a, threshold=math.inf) for a in mi.up_to_order(phi1.n, m)}
    return ExpansionProfile(phi1.n, m, moments)


def profile_remainder_series(traj: Trajectory, corrected1: CorrectedData, m: int, q: float,
                             t_grid: Optional[Sequence[float]] = None) -> Series:
    """t^{(n/2)(1-1/q)} ||u(t) - c_0 delta_t G_1 [- (1/2) t^{-1/2} sum c_j delta_t(x_j G_1)]||_q."""
    n = traj.spec.n
    p = traj.config.p
    if m not in (0, 1):
        raise ValueError("profiles are available for m = 0 and m = 1")
    if not p > 1 + (3 + m) / n:
        raise PreconditionViolated(f"the order-{m} profile needs p > 1 + (3 + m)/n = {1 + (3 + m) / n}")
    if corrected1.N != 1:
        raise ValueError("profile coefficients come from the level-1 corrected data")
    prof = profile_coefficients(corrected1, m)
    idx = _select(traj, t_grid, 0.0)
    vals = []
    for k in idx:
        t = float(traj.times[k])
        approx = fl.mixture_to_grid(eval_expansion(prof, t), traj.spec)
        diff = traj.states[k] - approx
        vals.append(t ** ((n / 2) * (1 - 1 / q)) * fl.lq_norm(diff, q, threshold=math.inf))
    return Series(f"profile{m}", traj.times[idx], np.array(vals), float(q), 0)
