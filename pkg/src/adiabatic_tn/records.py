"""Experiment manifests, run records and the CSV/JSON files written to disk.

Every file carries the manifest hash and the toolkit version. Wall-clock
information lives under a separate ``timing`` key so the remainder of a
record is byte-identical across reruns of the same manifest.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from . import __version__
from .mps import TruncationPolicy
from .schedule import Schedule
from .states import StateFamily

__all__ = [
    "ExperimentManifest",
    "ManifestError",
    "RunRecord",
    "TOOLKIT",
    "file_digest",
    "manifest_hash",
    "read_csv",
    "write_csv",
    "write_json",
]

TOOLKIT = f"adiabatic_tn {__version__}"

TRAJECTORY_COLUMNS = ("step", "t", "s", "fidelity", "max_bond", "energy")
ED_TRAJECTORY_COLUMNS = ("step", "t", "s", "fidelity")
GAP_COLUMNS = ("s", "gap", "e0")
SCHEDULE_COLUMNS = ("lambda", "s")


class ManifestError(ValueError):
    """A manifest field is missing or invalid."""


def _canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def manifest_hash(manifest: dict) -> str:
    return hashlib.sha256(_canonical(manifest).encode()).hexdigest()[:16]


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


@dataclass(frozen=True)
class ExperimentManifest:
    experiment_id: str
    family: str
    n: list[int]
    T: list[float]
    schedule: str = "sin2-1d"
    tau: float = 0.04
    cutoff: float = 1e-10
    max_bond: int = 64
    refresh: str = "every-step"
    out: str = "runs"
    jobs: int = 1
    seed: int = 0
    sample_stride: int = 50
    checkpoint_interval: float = 600.0
    ed_method: str = "krylov"

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentManifest:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ManifestError(f"unknown manifest fields: {sorted(unknown)}")
        for name in ("experiment_id", "family", "n", "T"):
            if name not in data:
                raise ManifestError(f"manifest is missing {name!r}")
        try:
            m = cls(**data)
        except TypeError as exc:
            raise ManifestError(str(exc)) from exc
        m.validate()
        return m

    @classmethod
    def load(cls, path: str | Path) -> ExperimentManifest:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ManifestError(f"manifest not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ManifestError("manifest must be a JSON object")
        return cls.from_dict(data)

    def validate(self) -> None:
        """Check every field before any run starts."""
        if not self.experiment_id or "/" in self.experiment_id:
            raise ManifestError(f"invalid experiment_id {self.experiment_id!r}")
        try:
            fam = StateFamily.parse(self.family)
            fam.validate_for_path()
            Schedule.parse(self.schedule)
            TruncationPolicy(self.cutoff, self.max_bond)
        except ValueError as exc:
            raise ManifestError(str(exc)) from exc
        if not self.n:
            raise ManifestError("n list is empty")
        if not self.T:
            raise ManifestError("T list is empty")
        for n in self.n:
            if not isinstance(n, int) or isinstance(n, bool):
                raise ManifestError(f"system size {n!r} is not an integer")
            try:
                fam.n_bulk(n)
            except ValueError as exc:
                raise ManifestError(str(exc)) from exc
        for t in self.T:
            if not isinstance(t, (int, float)) or not math.isfinite(t) or t <= 0:
                raise ManifestError(f"total time {t!r} must be a positive number")
            if t < self.tau:
                raise ManifestError(f"total time {t} is shorter than the step {self.tau}")
        if not self.tau > 0:
            raise ManifestError(f"tau must be positive, got {self.tau}")
        if self.jobs < 1:
            raise ManifestError("jobs must be >= 1")
        if self.sample_stride < 1:
            raise ManifestError("sample_stride must be >= 1")
        if self.refresh != "every-step" and not self.refresh.startswith("grid:"):
            raise ManifestError(f"unknown refresh policy {self.refresh!r}")
        if self.ed_method not in ("eigh", "krylov", "trotter"):
            raise ManifestError(f"unknown ed_method {self.ed_method!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def hash(self) -> str:
        # output location and parallelism do not change results
        d = self.to_dict()
        d.pop("out")
        d.pop("jobs")
        return manifest_hash(d)


@dataclass
class RunRecord:
    kind: str
    manifest_hash: str
    config: dict
    summary: dict
    outputs: dict = field(default_factory=dict)
    toolkit_version: str = TOOLKIT
    timing: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, data: dict) -> RunRecord:
        return cls(**{f.name: data[f.name] for f in fields(cls) if f.name in data})

    @classmethod
    def load(cls, path: str | Path) -> RunRecord:
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def write_json(path: str | Path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _fmt(v: Any) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_csv(path: str | Path | None, columns, rows, mhash: str) -> str:
    """Write rows under ``#`` provenance comments; returns the text."""
    buf = io.StringIO()
    buf.write(f"# manifest_hash={mhash}\n# toolkit={TOOLKIT}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path: str | Path) -> tuple[dict, list[dict]]:
    """Return ``(provenance, rows)`` of a file written by :func:`write_csv`."""
    meta, body = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))
