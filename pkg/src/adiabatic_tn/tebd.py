"""Quasi-adiabatic TEBD along the interpolation path.

At step ``n`` the Hamiltonian is frozen at ``s_n = s((n + 1/2) / n_steps)``
and the symmetric second-order product formula is applied as one
left-to-right and one right-to-left sweep of two-site gates.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .hamiltonian import LocalTerm, ParentHamiltonian, energy, path_hamiltonian
from .linalg import hermitian_expm
from .mps import MatrixProductState, TruncationPolicy, fidelity, log_fidelity
from .schedule import Schedule
from .states import StateFamily

__all__ = [
    "TebdConfig",
    "Trajectory",
    "TrajectorySample",
    "run_adiabatic",
    "trotter_gates",
    "trotter_sweep",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TebdConfig:
    family: StateFamily
    n: int
    total_time: float
    tau: float = 0.04
    schedule: Schedule = Schedule("sin2-1d")
    truncation: TruncationPolicy = TruncationPolicy()
    refresh: str = "every-step"
    sample_stride: int = 50
    checkpoint_path: str | None = None
    checkpoint_interval: float = 600.0

    def validate(self) -> None:
        self.family.validate_for_path()
        self.family.n_bulk(self.n)
        if not self.total_time > 0.0:
            raise ValueError(f"total time must be positive, got {self.total_time}")
        if not self.tau > 0.0:
            raise ValueError(f"Trotter step must be positive, got {self.tau}")
        if self.tau > self.total_time:
            raise ValueError(f"Trotter step {self.tau} exceeds total time {self.total_time}")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        _refresh_points(self.refresh)

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.total_time / self.tau)))

    def to_json_dict(self) -> dict:
        return {
            "family": str(self.family),
            "n": self.n,
            "n_bulk_sites": self.family.n_bulk(self.n),
            "total_time": self.total_time,
            "tau": self.tau,
            "schedule": str(self.schedule),
            "cutoff": self.truncation.cutoff,
            "max_bond": self.truncation.max_bond,
            "refresh": self.refresh,
            "sample_stride": self.sample_stride,
        }


def _refresh_points(refresh: str) -> int | None:
    if refresh == "every-step":
        return None
    if refresh.startswith("grid:"):
        k = int(refresh.split(":", 1)[1])
        if k < 2:
            raise ValueError("grid refresh needs at least 2 points")
        return k
    raise ValueError(f"unknown refresh policy {refresh!r}; use 'every-step' or 'grid:<points>'")


@dataclass(frozen=True)
class TrajectorySample:
    step: int
    t: float
    s: float
    fidelity: float
    max_bond: int
    energy: float


@dataclass
class Trajectory:
    config: dict
    samples: list[TrajectorySample]
    final_fidelity: float
    final_log_fidelity: float
    n_steps: int
    tau_effective: float
    truncation_saturated: bool
    discarded_weight: float
    norm_drift: float
    final_state: MatrixProductState | None = field(default=None, repr=False)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("final_state")
        d.pop("samples")
        d["n_samples"] = len(self.samples)
        return d


def trotter_gates(terms: list[LocalTerm], tau: float) -> list[tuple[int, NDArray, bool]]:
    """Gate list ``(first_site, gate, absorb_right)`` for one symmetric step.

    Order of application: ``h_1 .. h_{M-1}`` for ``tau / 2`` moving right,
    ``h_M`` for a full ``tau``, then ``h_{M-1} .. h_1`` for ``tau / 2``
    moving left. Exponentials of terms that share one matrix object are
    computed once.
    """
    if not terms:
        return []
    cache: dict[tuple[int, float], NDArray] = {}

    def gate(term: LocalTerm, dt: float) -> NDArray:
        key = (id(term.matrix), dt)
        if key not in cache:
            cache[key] = hermitian_expm(term.matrix, dt)
        return cache[key]

    ordered = sorted(terms, key=lambda t: t.first_site)
    half = 0.5 * tau
    seq = [(t.first_site, gate(t, half), True) for t in ordered[:-1]]
    seq.append((ordered[-1].first_site, gate(ordered[-1], tau), False))
    seq += [(t.first_site, gate(t, half), False) for t in reversed(ordered[:-1])]
    return seq


def _apply_gates(state: MatrixProductState, gates, policy: TruncationPolicy) -> None:
    for site, g, absorb_right in gates:
        state.apply_two_site_gate(g, site, policy, absorb_right)


def trotter_sweep(
    state: MatrixProductState,
    terms: list[LocalTerm],
    tau: float,
    policy: TruncationPolicy = TruncationPolicy(),
) -> MatrixProductState:
    """One second-order Trotter step ``exp(-i H tau)`` on a copy of ``state``.

    The state must be canonical at its first site; so is the result.
    """
    out = state.copy()
    if out.ortho_center != 0:
        out.canonicalize(0)
    _apply_gates(out, trotter_gates(terms, tau), policy)
    return out


class _TermSource:
    """Instantaneous parent Hamiltonians under a refresh policy."""

    def __init__(self, family: StateFamily, n: int, refresh: str) -> None:
        self.family, self.n = family, n
        points = _refresh_points(refresh)
        self.grid = None if points is None else np.linspace(0.0, 1.0, points)
        self._cache: dict[float, ParentHamiltonian] = {}

    def __call__(self, s: float) -> ParentHamiltonian:
        if self.grid is not None:
            s = float(self.grid[np.argmin(np.abs(self.grid - s))])
        h = self._cache.get(s)
        if h is None:
            h = path_hamiltonian(self.family, s, self.n)
            if self.grid is not None:
                self._cache[s] = h
        return h


def _load_checkpoint(path: Path, config: dict):
    if not path.exists():
        return None
    data = json.loads(path.read_text())
    if data.get("config") != config:
        log.warning("ignoring checkpoint %s written for a different configuration", path)
        return None
    state = MatrixProductState.from_json_dict(data["state"])
    state.discarded_weight = data["discarded_weight"]
    state.truncation_saturated = data["truncation_saturated"]
    samples = [TrajectorySample(**s) for s in data["samples"]]
    return data["next_step"], state, samples


def _write_checkpoint(path: Path, config: dict, next_step: int, state, samples) -> None:
    payload = {
        "config": config,
        "next_step": next_step,
        "discarded_weight": state.discarded_weight,
        "truncation_saturated": state.truncation_saturated,
        "samples": [asdict(s) for s in samples],
        "state": state.to_json_dict(),
    }
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload))
    os.replace(tmp, path)


def run_adiabatic(config: TebdConfig, keep_state: bool = False) -> Trajectory:
    """Evolve from the entangled-pair chain along the path and record fidelities.

    Samples are taken at ``t = 0``, every ``sample_stride`` steps and at the
    end. Fidelity is measured against the ``s = 1`` path state.
    """
    config.validate()
    fam, n = config.family, config.n
    n_steps = config.n_steps
    tau = config.total_time / n_steps
    policy = config.truncation
    terms_at = _TermSource(fam, n, config.refresh)
    target = fam.path_state(1.0, n)
    cfg_dict = config.to_json_dict()

    state = fam.path_state(0.0, n)
    samples = [TrajectorySample(0, 0.0, 0.0, fidelity(target, state), state.max_bond_dim, 0.0)]
    start = 0
    ckpt = Path(config.checkpoint_path) if config.checkpoint_path else None
    if ckpt is not None:
        resumed = _load_checkpoint(ckpt, cfg_dict)
        if resumed is not None:
            start, state, samples = resumed
            log.info("resuming %s at step %d", ckpt, start)
    last_ckpt = time.monotonic()

    for step in range(start, n_steps):
        s = float(config.schedule((step + 0.5) / n_steps))
        h = terms_at(s)
        _apply_gates(state, trotter_gates(h.terms, tau), policy)
        done = step + 1
        if done % config.sample_stride == 0 or done == n_steps:
            samples.append(
                TrajectorySample(
                    done, done * tau, s, fidelity(target, state), state.max_bond_dim, energy(state, h)
                )
            )
        if ckpt is not None and time.monotonic() - last_ckpt > config.checkpoint_interval:
            _write_checkpoint(ckpt, cfg_dict, done, state, samples)
            last_ckpt = time.monotonic()

    norm_drift = abs(state.log_norm + math.log(np.linalg.norm(state.tensors[state.ortho_center])))
    lf = log_fidelity(target, state)
    return Trajectory(
        config=cfg_dict,
        samples=samples,
        final_fidelity=math.exp(lf),
        final_log_fidelity=lf,
        n_steps=n_steps,
        tau_effective=tau,
        truncation_saturated=state.truncation_saturated,
        discarded_weight=state.discarded_weight,
        norm_drift=norm_drift,
        final_state=state if keep_state else None,
    )
