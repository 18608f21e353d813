"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import glob as globmod
import json
import logging
import os
import sys
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import FitError, fit_error_density, fit_exponential_decay, fit_power_law
from .ed import ResourceLimitError, ed_evolve, gap_sweep
from .hamiltonian import energy, path_hamiltonian
from .mps import TruncationPolicy
from .records import (
    ED_TRAJECTORY_COLUMNS,
    GAP_COLUMNS,
    SCHEDULE_COLUMNS,
    TOOLKIT,
    TRAJECTORY_COLUMNS,
    ExperimentManifest,
    ManifestError,
    RunRecord,
    file_digest,
    manifest_hash,
    write_csv,
    write_json,
)
from .schedule import Schedule
from .states import StateFamily
from .tebd import TebdConfig, run_adiabatic

log = logging.getLogger("adiabatic_tn")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3
ENV_OUT = "ADIABATIC_TN_OUT"
ENV_JOBS = "ADIABATIC_TN_JOBS"


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be LO:HI, got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"window needs LO < HI, got {text!r}")
    return lo, hi


def _grid(text: str) -> list[float]:
    """``LO:HI:COUNT`` or a comma-separated list of values in [0, 1]."""
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            count = int(count)
            if count < 2:
                raise ValueError
            vals = np.linspace(float(lo), float(hi), count).tolist()
        else:
            vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed grid {text!r}; use LO:HI:COUNT or s1,s2,...") from None
    if not vals or any(not 0.0 <= v <= 1.0 for v in vals):
        raise argparse.ArgumentTypeError(f"grid values must lie in [0, 1]: {text!r}")
    return vals


def _unit(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"value must lie in [0, 1], got {v}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _family(text: str) -> StateFamily:
    try:
        return StateFamily.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _schedule(text: str) -> Schedule:
    try:
        return Schedule.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _out_dir(args, manifest: ExperimentManifest | None = None) -> Path:
    out = args.out or os.environ.get(ENV_OUT) or (manifest.out if manifest else "runs")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _jobs(args, manifest: ExperimentManifest | None = None) -> int:
    if args.jobs is not None:
        return args.jobs
    if ENV_JOBS in os.environ:
        return max(1, int(os.environ[ENV_JOBS]))
    return manifest.jobs if manifest else 1


def _load_manifest(path: str) -> ExperimentManifest:
    try:
        return ExperimentManifest.load(path)
    except ManifestError as exc:
        raise ValidationError(str(exc)) from exc


def _fan_out(fn, cells: list, jobs: int) -> list:
    """Run ``fn`` over ``cells`` in order; failures come back as exceptions."""
    if jobs <= 1 or len(cells) <= 1:
        return [_guard(fn, c) for c in cells]
    with ProcessPoolExecutor(max_workers=min(jobs, len(cells))) as pool:
        return list(pool.map(_guard, [fn] * len(cells), cells))


def _guard(fn, cell):
    try:
        return fn(cell)
    except Exception as exc:  # noqa: BLE001 - isolate per-cell failures
        return exc


def _tebd_cell(cell: tuple) -> dict:
    m, n, T, out = cell
    stem = f"run_N{n}_T{T:g}"
    started = time.time()
    cfg = TebdConfig(
        family=StateFamily.parse(m.family),
        n=n,
        total_time=float(T),
        tau=m.tau,
        schedule=Schedule.parse(m.schedule),
        truncation=TruncationPolicy(m.cutoff, m.max_bond),
        refresh=m.refresh,
        sample_stride=m.sample_stride,
        checkpoint_path=str(Path(out) / f"{stem}.ckpt.json"),
        checkpoint_interval=m.checkpoint_interval,
    )
    traj = run_adiabatic(cfg)
    rows = [(x.step, x.t, x.s, x.fidelity, x.max_bond, x.energy) for x in traj.samples]
    csv_name = f"{stem}.csv"
    write_csv(Path(out) / csv_name, TRAJECTORY_COLUMNS, rows, m.hash)
    summary = traj.summary()
    summary.pop("config")
    rec = RunRecord(
        kind="tebd",
        manifest_hash=m.hash,
        config=traj.config,
        summary=summary,
        outputs={"trajectory": csv_name, "trajectory_digest": file_digest(Path(out) / csv_name)},
        timing={"started": started, "wall_seconds": time.time() - started},
    )
    write_json(Path(out) / f"{stem}.json", rec.to_json_dict())
    ckpt = Path(cfg.checkpoint_path)
    if ckpt.exists():
        ckpt.unlink()
    return {"n": n, "T": T, "final_fidelity": traj.final_fidelity, "record": f"{stem}.json"}


def _ed_cell(cell: tuple) -> dict:
    m, n, T, out = cell
    stem = f"ed_N{n}_T{T:g}"
    started = time.time()
    traj = ed_evolve(
        StateFamily.parse(m.family),
        n,
        float(T),
        tau=m.tau,
        schedule=Schedule.parse(m.schedule),
        method=m.ed_method,
        sample_stride=m.sample_stride,
    )
    rows = [(x.step, x.t, x.s, x.fidelity) for x in traj.samples]
    csv_name = f"{stem}.csv"
    write_csv(Path(out) / csv_name, ED_TRAJECTORY_COLUMNS, rows, m.hash)
    summary = {
        "final_fidelity": traj.final_fidelity,
        "infidelity": traj.infidelity,
        "n_steps": traj.n_steps,
        "tau_effective": traj.tau_effective,
    }
    rec = RunRecord(
        kind="ed",
        manifest_hash=m.hash,
        config=traj.config,
        summary=summary,
        outputs={"trajectory": csv_name, "trajectory_digest": file_digest(Path(out) / csv_name)},
        timing={"started": started, "wall_seconds": time.time() - started},
    )
    write_json(Path(out) / f"{stem}.json", rec.to_json_dict())
    return {"n": n, "T": T, "final_fidelity": traj.final_fidelity, "record": f"{stem}.json"}


def _run_manifest(args, cell_fn) -> int:
    m = _load_manifest(args.manifest)
    out = _out_dir(args, m) / m.experiment_id
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "manifest.json", {"manifest": m.to_dict(), "manifest_hash": m.hash, "toolkit": TOOLKIT})
    cells = [(m, n, T, str(out)) for n in m.n for T in m.T]
    results = _fan_out(cell_fn, cells, _jobs(args, m))
    failed = 0
    for (_, n, T, _), res in zip(cells, results):
        if isinstance(res, Exception):
            failed += 1
            log.error("cell N=%s T=%s failed: %s", n, T, res)
        else:
            log.info("cell N=%s T=%s final fidelity %.10f", n, T, res["final_fidelity"])
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_prepare(args) -> int:
    return _run_manifest(args, _tebd_cell)


def cmd_ed_evolve(args) -> int:
    return _run_manifest(args, _ed_cell)


def _gap_cell(cell: tuple):
    family, n, grid = cell
    return gap_sweep(StateFamily.parse(family), grid, n)


def cmd_gap(args) -> int:
    fam = args.family
    try:
        fam.validate_for_path()
        for n in args.n:
            fam.n_bulk(n)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    out = _out_dir(args)
    spec = {"command": "gap", "family": str(fam), "n": args.n, "grid": args.grid}
    mhash = manifest_hash(spec)
    results = _fan_out(_gap_cell, [(str(fam), n, args.grid) for n in args.n], _jobs(args))
    summary = []
    status = EXIT_OK
    for n, prof in zip(args.n, results):
        if isinstance(prof, ResourceLimitError):
            raise ValidationError(str(prof))
        if isinstance(prof, Exception):
            log.error("gap sweep N=%d failed: %s", n, prof)
            status = EXIT_RUNTIME
            continue
        stem = f"gap_{_slug(fam)}_N{n}"
        if args.format == "csv":
            rows = zip(prof.s_grid, prof.gaps, prof.ground_energies)
            write_csv(out / f"{stem}.csv", GAP_COLUMNS, rows, mhash)
        else:
            write_json(out / f"{stem}.json", {"manifest_hash": mhash, "toolkit": TOOLKIT, **vars(prof)})
        summary.append({"n": n, "delta_min": prof.delta_min, "argmin_s": prof.argmin_s})
    print(json.dumps({"family": str(fam), "manifest_hash": mhash, "profiles": summary}, indent=2))
    return status


def _slug(fam: StateFamily) -> str:
    return str(fam).replace(":", "_").replace("=", "")


def _records(pattern: str) -> list[tuple[Path, RunRecord]]:
    paths = sorted(Path(p) for p in globmod.glob(pattern))
    paths = [p for p in paths if p.suffix == ".json" and p.name != "manifest.json"]
    if not paths:
        raise ValidationError(f"no run records match {pattern!r}")
    recs = []
    for p in paths:
        try:
            rec = RunRecord.load(p)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValidationError(f"{p} is not a run record: {exc}") from exc
        recs.append((p, rec))
    return recs


def cmd_fit(args) -> int:
    recs = _records(args.input)
    inputs = [{"file": str(p), "digest": file_digest(p), "manifest_hash": r.manifest_hash} for p, r in recs]
    by_t: dict[float, list[tuple[int, float]]] = defaultdict(list)
    for _, r in recs:
        by_t[float(r.config["total_time"])].append((int(r.config["n"]), float(r.summary["final_fidelity"])))
    try:
        if args.model == "error-density":
            fits = [vars(fit_error_density(pts, t)) for t, pts in sorted(by_t.items())]
            result = {"fits": fits}
        elif args.model == "exp-decay":
            kappas = [(t, fit_error_density(pts, t).kappa) for t, pts in sorted(by_t.items())]
            fit = fit_exponential_decay(kappas, args.window)
            result = {"kappa": kappas, "fit": vars(fit)}
        else:
            pts = [(float(r.config["total_time"]), 1.0 - float(r.summary["final_fidelity"])) for _, r in recs]
            result = {"fit": vars(fit_power_law(pts, args.window))}
    except FitError as exc:
        raise ValidationError(str(exc)) from exc
    doc = {"model": args.model, "window": args.window, "toolkit": TOOLKIT, "inputs": inputs, **result}
    text = json.dumps(doc, indent=2, sort_keys=True, default=list)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_schedule(args) -> int:
    sched = args.kind
    lam = np.linspace(0.0, 1.0, args.samples)
    vals = sched(lam)
    mhash = manifest_hash({"command": "schedule", "kind": str(sched), "samples": args.samples})
    if args.format == "csv":
        text = write_csv(None, SCHEDULE_COLUMNS, zip(lam.tolist(), np.atleast_1d(vals).tolist()), mhash)
    else:
        text = json.dumps(
            {"schedule": str(sched), "manifest_hash": mhash, "toolkit": TOOLKIT,
             "lambda": lam.tolist(), "s": np.atleast_1d(vals).tolist()}
        ) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_state(args) -> int:
    fam = args.family
    try:
        fam.validate_for_path()
        state = fam.path_state(args.s, args.n)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    h = path_hamiltonian(fam, args.s, args.n)
    doc = {
        "family": str(fam),
        "n": args.n,
        "s": args.s,
        "phys_dims": state.phys_dims,
        "bond_dims": state.bond_dims,
        "max_bond": state.max_bond_dim,
        "correlation_length": fam.correlation_length(args.s),
        "energy": energy(state, h),
        "toolkit": TOOLKIT,
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="adiabatic-tn", description="Quasi-adiabatic preparation of matrix-product states.")
    p.add_argument("--version", action="version", version=TOOLKIT)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, manifest=False):
        if manifest:
            sp.add_argument("--manifest", required=True, help="experiment manifest (JSON)")
        sp.add_argument("--out", help=f"output directory (env {ENV_OUT})")
        sp.add_argument("--jobs", type=_positive_int, help=f"worker processes (env {ENV_JOBS})")

    sp = sub.add_parser("prepare", help="TEBD runs for every (N, T) cell of a manifest")
    common(sp, manifest=True)
    sp.set_defaults(func=cmd_prepare)

    sp = sub.add_parser("ed-evolve", help="exact-evolution runs for every (N, T) cell of a manifest")
    common(sp, manifest=True)
    sp.set_defaults(func=cmd_ed_evolve)

    sp = sub.add_parser("gap", help="gap profile of H(s) by exact diagonalisation")
    sp.add_argument("--family", type=_family, required=True)
    sp.add_argument("--n", type=int, nargs="+", required=True)
    sp.add_argument("--grid", type=_grid, default=_grid("0:1:41"), help="LO:HI:COUNT or s1,s2,...")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    common(sp)
    sp.set_defaults(func=cmd_gap)

    sp = sub.add_parser("fit", help="fit a scaling model to run records")
    sp.add_argument("--input", required=True, help="glob of run-record JSON files")
    sp.add_argument("--model", choices=("error-density", "exp-decay", "power-law"), required=True)
    sp.add_argument("--window", type=_window, help="T window LO:HI")
    sp.add_argument("--out", help="output JSON file")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("schedule", help="tabulate a schedule s(lambda)")
    sp.add_argument("--kind", type=_schedule, required=True, help="sin2-1d, sin2-2d or beta(k)")
    sp.add_argument("--samples", type=_positive_int, default=101)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out", help="output file (default stdout)")
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("state", help="summary of the path state |psi(s)>")
    sp.add_argument("--family", type=_family, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--s", type=_unit, default=1.0)
    sp.set_defaults(func=cmd_state)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
