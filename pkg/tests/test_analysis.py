import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatlab import analysis as an
from heatlab.errors import InsufficientData, NonPositiveSample, SubcriticalExponent

T = np.logspace(2, 4, 33)


@given(st.floats(-3, -0.1), st.floats(1e-6, 1e3))
def test_power_fit_recovers_exponent(a, c):
    fit = an.fit_power(T, c * T ** a)
    assert fit.exponent == pytest.approx(a, abs=1e-10)
    assert fit.log_prefactor == pytest.approx(math.log(c), abs=1e-8)
    assert fit.samples == len(T)


def test_fit_window_and_errors():
    fit = an.fit_power(T, T ** -0.5 * (1 + (T > 2e3)), window=(1e2, 1e3))
    assert fit.exponent == pytest.approx(-0.5, abs=1e-12)
    with pytest.raises(InsufficientData):
        an.fit_power(T[:5], T[:5] ** -1.0)
    with pytest.raises(NonPositiveSample):
        an.fit_power(T, np.where(T > 1e3, 0.0, 1.0))
    with pytest.raises(ValueError):
        an.fit_power(T, T, window=(10.0, 1.0))


def test_stderr_matches_scipy():
    from scipy import stats

    rng = np.random.default_rng(0)
    y = T ** -0.7 * np.exp(rng.normal(scale=0.05, size=T.size))
    fit = an.fit_power(T, y)
    ref = stats.linregress(np.log(T), np.log(y))
    assert fit.exponent == pytest.approx(ref.slope, rel=1e-12)
    assert fit.stderr == pytest.approx(ref.stderr, rel=1e-9)


@settings(max_examples=30)
@given(st.floats(-2.0, -0.2), st.floats(0.1, 10.0), st.integers(0, 2 ** 31))
def test_log_model_separation(a, c, seed):
    rng = np.random.default_rng(seed)
    noise = np.exp(rng.normal(scale=1e-3, size=T.size))
    log_series = c * np.log1p(T) / T * noise
    assert an.fit_log_corrected(T, log_series).model == an.POWER_TIMES_LOG
    power_series = c * T ** a * noise
    # pure powers away from the apparent slope of t^{-1} log t are never mistaken for it
    if abs(a + 0.87) > 0.05:
        assert an.fit_log_corrected(T, power_series).model == an.POWER


def test_regimes():
    assert an.fujita_exponent(1) == 3.0 and an.fujita_exponent(2) == 2.0
    assert an.predict_regime(1, 1, 4.0).exponent == -0.5
    assert an.predict_regime(2, 1, 4.0).log_corrected
    assert an.predict_regime(3, 1, 4.0).form == "t^-1"
    # knife edge: N sigma within 1e-9 of 1 counts as the log case
    assert an.predict_regime(1, 1, 5.0 + 5e-10).log_corrected
    with pytest.raises(SubcriticalExponent):
        an.predict_regime(1, 1, 3.0)
    with pytest.raises(ValueError):
        an.predict_regime(0, 1, 4.0)


def test_regimes_match_golden():
    stored = json.loads((Path(__file__).parent / "golden" / "regimes.json").read_text())
    for row in stored:
        assert an.predict_regime(row["N"], row["n"], row["p"]).to_dict() == row


@given(st.integers(1, 4), st.integers(1, 3), st.floats(0.01, 5.0))
def test_regime_exponent_never_beyond_minus_one(N, n, extra):
    r = an.predict_regime(N, n, an.fujita_exponent(n) + extra)
    assert -1.0 <= r.exponent < 0


def test_default_window():
    assert an.default_window(T, 1) == (100.0, 1e4)
    assert an.default_window(np.logspace(0, 2, 20), 2)[0] == 8.0
    with pytest.raises(InsufficientData):
        an.default_window([1.0, 2.0], 3)


def test_report_and_serialisation():
    runs = [
        an.SeriesInput("a", T, T ** -0.52, regime=an.predict_regime(1, 1, 4.0)),
        an.SeriesInput("b", T, np.log1p(T) / T, regime=an.predict_regime(2, 1, 4.0)),
        an.SeriesInput("c", T, T ** -1.2, predicted_exponent=-1.0),
    ]
    reps = an.build_report(runs)
    assert [r.passed for r in reps] == [True, True, False]
    assert json.loads(an.reports_to_json(reps))[1]["log_selected"] is True
    lines = an.reports_to_csv(reps).splitlines()
    assert lines[0] == ",".join(an.CSV_COLUMNS) and lines[3].endswith("false")
    with pytest.raises(ValueError):
        an.build_report([an.SeriesInput("d", T, T)])
