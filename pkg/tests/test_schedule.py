from __future__ import annotations

import math

import numpy as np
import pytest

from adiabatic_tn.schedule import Schedule, beta_incomplete, smoothness_order

ALL = [Schedule("sin2-1d"), Schedule("sin2-2d"), Schedule("beta", 1), Schedule("beta", 2), Schedule("beta", 3)]


@pytest.mark.parametrize("sched", ALL, ids=str)
def test_endpoints(sched):
    assert sched(0.0) == 0.0 and sched(1.0) == 1.0


@pytest.mark.parametrize("sched", ALL, ids=str)
def test_monotone(sched):
    s = sched(np.linspace(0.0, 1.0, 1001))
    assert np.all(np.diff(s) >= -1e-15)


@pytest.mark.parametrize("sched", ALL, ids=str)
@pytest.mark.parametrize("lam", [-0.1, 1.5, math.nan])
def test_domain(sched, lam):
    with pytest.raises(ValueError):
        sched(lam)


def test_sin2_1d_midpoint():
    assert Schedule("sin2-1d")(0.5) == pytest.approx(0.5, abs=1e-15)


def test_beta1_closed_form():
    lam = np.linspace(0.0, 1.0, 101)
    np.testing.assert_allclose(Schedule("beta", 1)(lam), 3 * lam**2 - 2 * lam**3, atol=1e-12)
    assert Schedule("beta", 1)(0.25) == pytest.approx(0.15625, abs=1e-15)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_beta_symmetry(k):
    lam = np.linspace(0.0, 1.0, 201)
    sched = Schedule("beta", k)
    np.testing.assert_allclose(sched(lam) + sched(1 - lam), 1.0, atol=1e-12)


def test_beta_incomplete_values():
    assert beta_incomplete(2, 2, 1.0) == pytest.approx(1 / 6, abs=1e-15)
    assert beta_incomplete(1, 1, 0.3) == pytest.approx(0.3, abs=1e-15)
    assert beta_incomplete(2, 2, 0.5) == pytest.approx(1 / 12, abs=1e-15)
    with pytest.raises(ValueError):
        beta_incomplete(1.5, 2, 0.3)


@pytest.mark.parametrize("spec, expected", [("sin2-1d", "sin2-1d"), ("beta(2)", "beta(2)"), ("beta:k=3", "beta(3)")])
def test_parse(spec, expected):
    assert str(Schedule.parse(spec)) == expected


@pytest.mark.parametrize("spec", ["beta", "beta(-1)", "cosine", "sin2-1d(2)"])
def test_parse_errors(spec):
    with pytest.raises(ValueError):
        Schedule.parse(spec)


def _vanishing(verdicts):
    return {(v.order, v.at): v.vanishes for v in verdicts}


@pytest.mark.parametrize("k", [1, 2, 3])
def test_beta_smoothness(k):
    verdict = _vanishing(smoothness_order(Schedule("beta", k), k + 1))
    for at in (0.0, 1.0):
        assert all(verdict[(n, at)] for n in range(1, k + 1))
        assert not verdict[(k + 1, at)]


def test_sin2_2d_smoothness():
    verdict = _vanishing(smoothness_order(Schedule("sin2-2d"), 2))
    for at in (0.0, 1.0):
        assert verdict[(1, at)] and not verdict[(2, at)]


def test_sin2_2d_second_derivative_value():
    v = [x for x in smoothness_order(Schedule("sin2-2d"), 2) if x.order == 2 and x.at == 0.0][0]
    assert v.value == pytest.approx(math.pi**2 / 2, rel=1e-6)


def test_smoothness_probe_limit():
    with pytest.raises(ValueError):
        smoothness_order(Schedule("beta", 1), 7)
