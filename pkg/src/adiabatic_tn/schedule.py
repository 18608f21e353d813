"""Interpolation schedules ``s(lambda)`` on ``[0, 1]``.

``sin2-1d``  ``sin^2[(pi/2) sin^2(pi lambda / 2)]``
``sin2-2d``  ``sin^2(pi lambda / 2)``
``beta(k)``  regularised incomplete Beta function ``B_lambda(k+1, k+1) / B_1(k+1, k+1)``;
             its derivatives of orders 1..k vanish at both endpoints.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

__all__ = [
    "DerivativeVerdict",
    "Schedule",
    "beta_incomplete",
    "evaluate",
    "smoothness_order",
]

KINDS = ("sin2-1d", "sin2-2d", "beta")


def beta_incomplete(a: int, b: int, lam):
    """``B_lam(a, b) = int_0^lam y^(a-1) (1-y)^(b-1) dy`` for integer ``a, b >= 1``.

    Exact polynomial from the binomial expansion of ``(1 - y)^(b - 1)``.
    Accepts scalars or arrays.
    """
    if int(a) != a or int(b) != b or a < 1 or b < 1:
        raise ValueError(f"a and b must be integers >= 1, got {a}, {b}")
    lam = np.asarray(lam, dtype=float)
    total = np.zeros_like(lam)
    for j in range(int(b)):
        total = total + math.comb(int(b) - 1, j) * (-1) ** j * lam ** (a + j) / (a + j)
    return total if total.ndim else float(total)


@dataclass(frozen=True)
class Schedule:
    kind: str
    k: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "beta":
            if self.k is None or self.k < 0:
                raise ValueError("beta schedule needs an order k >= 0")
        elif self.k is not None:
            raise ValueError(f"{self.kind} takes no order")

    @classmethod
    def parse(cls, spec: str) -> Schedule:
        spec = spec.strip()
        if spec in ("sin2-1d", "sin2-2d"):
            return cls(spec)
        m = re.fullmatch(r"beta(?:\((\d+)\)|:k=(\d+))", spec)
        if m:
            return cls("beta", int(m.group(1) or m.group(2)))
        raise ValueError(f"cannot parse schedule {spec!r}; expected sin2-1d, sin2-2d or beta(k)")

    def __str__(self) -> str:
        return f"beta({self.k})" if self.kind == "beta" else self.kind

    def _raw(self, lam):
        """Analytic continuation of the schedule, no domain check."""
        if self.kind == "sin2-1d":
            return np.sin(0.5 * np.pi * np.sin(0.5 * np.pi * lam) ** 2) ** 2
        if self.kind == "sin2-2d":
            return np.sin(0.5 * np.pi * lam) ** 2
        a = self.k + 1
        return beta_incomplete(a, a, lam) / _beta_complete(a)

    def _raw_mp(self, lam):
        """Extended-precision analytic continuation (mpmath scalar)."""
        if self.kind == "sin2-1d":
            return mpmath.sin(mpmath.pi / 2 * mpmath.sin(mpmath.pi * lam / 2) ** 2) ** 2
        if self.kind == "sin2-2d":
            return mpmath.sin(mpmath.pi * lam / 2) ** 2
        a = self.k + 1
        poly = mpmath.fsum(
            math.comb(a - 1, j) * (-1) ** j * lam ** (a + j) / (a + j) for j in range(a)
        )
        return poly / mpmath.beta(a, a)

    def __call__(self, lam):
        return evaluate(self, lam)


@lru_cache(maxsize=None)
def _beta_complete(a: int) -> float:
    return float(beta_incomplete(a, a, 1.0))


def evaluate(sched: Schedule, lam):
    """``s(lambda)``; raises ``ValueError`` outside ``[0, 1]``."""
    arr = np.asarray(lam, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(~np.isfinite(arr)):
        raise ValueError("lambda must lie in [0, 1]")
    out = sched._raw(arr)
    if arr.ndim == 0:
        # exact endpoints regardless of rounding in the closed forms
        if arr == 0.0:
            return 0.0
        if arr == 1.0:
            return 1.0
        return float(out)
    out = np.asarray(out, dtype=float)
    out[arr == 0.0] = 0.0
    out[arr == 1.0] = 1.0
    return out


@lru_cache(maxsize=None)
def _central_weights(order: int, half_width: int) -> tuple[Fraction, ...]:
    """Finite-difference weights on offsets ``-half_width .. half_width``.

    Solved exactly in rational arithmetic from the moment conditions
    ``sum_j w_j j^m = order! * [m == order]``.
    """
    offsets = range(-half_width, half_width + 1)
    size = 2 * half_width + 1
    rows = [[Fraction(j) ** m for j in offsets] + [Fraction(math.factorial(order) if m == order else 0)]
            for m in range(size)]
    for col in range(size):
        piv = next(r for r in range(col, size) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        p = rows[col][col]
        rows[col] = [x / p for x in rows[col]]
        for r in range(size):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
    return tuple(rows[i][-1] for i in range(size))


@dataclass(frozen=True)
class DerivativeVerdict:
    order: int
    at: float
    value: float
    error_estimate: float
    vanishes: bool


def _derivative(sched: Schedule, order: int, at: float, h: float, half_width: int) -> float:
    w = _central_weights(order, half_width)
    with mpmath.workdps(40):
        hh = mpmath.mpf(h)
        acc = mpmath.fsum(
            mpmath.mpf(c.numerator) / c.denominator * sched._raw_mp(mpmath.mpf(at) + j * hh)
            for j, c in zip(range(-half_width, half_width + 1), w)
        )
        return float(acc / hh**order)


def smoothness_order(sched: Schedule, probe_order: int, tol: float = 1e-6) -> list[DerivativeVerdict]:
    """Numerical derivatives of orders ``1..probe_order`` at both endpoints.

    Central differences on a 15-point stencil (exact rational weights,
    function values in 40-digit arithmetic), evaluated at step ``h`` and
    ``h / 2``; the finer value is reported and their gap is the error
    estimate. A derivative "vanishes" when its magnitude is below ``tol``.
    """
    if not 1 <= probe_order <= 6:
        raise ValueError(f"probe_order must be between 1 and 6, got {probe_order}")
    out = []
    half_width = 7
    h = 0.02
    for n in range(1, probe_order + 1):
        for at in (0.0, 1.0):
            coarse = _derivative(sched, n, at, h, half_width)
            fine = _derivative(sched, n, at, h / 2, half_width)
            out.append(DerivativeVerdict(n, at, fine, abs(fine - coarse), abs(fine) < tol))
    return out
