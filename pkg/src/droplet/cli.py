"""Command-line front end: ``droplet solve|evolve|spectrum|decompose|verify``."""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .errors import ConfigError, ContactLawError, DecompositionError, ShapeError, SolverError

FORMAT_VERSION = 1
TRAJECTORY_COLUMNS = (
    "t", "v1", "v2", "rho_bar_l2", "rho_bar_max", "lambda",
    "mode_0", "mode_2", "mode_3", "mode_4", "g_max", "cond",
)
SOLVE_COLUMNS = ("theta", "rho", "flux", "lambda")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER, EXIT_HALTED = 0, 1, 2, 3, 4

log = logging.getLogger("droplet")


def _fmt(x) -> str:
    x = float(x)
    return format(x, ".17g") if math.isfinite(x) else "nan"


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


class _Nullable:
    """Collects ``None`` replacements for non-finite numbers together with a reason."""

    def __init__(self):
        self.reasons: dict[str, str] = {}

    def num(self, key: str, value, reason: str):
        if value is None or not np.all(np.isfinite(value)):
            self.reasons[key] = reason
            return None
        return np.asarray(value, dtype=float).tolist()


def _out(cfg: ExperimentConfig, args, key: str) -> Path:
    return Path(args.out_dir) / cfg.outputs[key]


def cmd_solve(cfg: ExperimentConfig, args) -> tuple[int, dict]:
    from .solver import solve_base

    shape = cfg.initial_shape()
    sol = solve_base(shape, cfg.dynamics.V0)
    rows = zip(shape.theta, shape.samples, sol.flux, np.full(shape.n, sol.lam))
    path = _out(cfg, args, "solve_csv")
    atomic_write(path, csv_text(SOLVE_COLUMNS, rows))
    return EXIT_OK, {
        "format_version": FORMAT_VERSION,
        "r_e": cfg.r_e,
        "lambda": sol.lam,
        "I": sol.I,
        "flux_min": float(sol.flux.min()),
        "flux_max": float(sol.flux.max()),
        "collocation_residual": sol.harmonic.residual,
        "cond": sol.cond_estimate,
        "csv": str(path),
    }


def _trajectory_rows(traj, tr):
    d = traj.diagnostics
    for i, t in enumerate(traj.times):
        m = tr.rho_bar_modes[i]
        yield (
            t, tr.v[i, 0], tr.v[i, 1], tr.rho_bar_l2[i], tr.rho_bar_max[i], d["lambda"][i],
            m[0], m[2], m[3], m[4], d["g_max"][i], d["cond"][i],
        )


def summary_report(cfg: ExperimentConfig, traj, tr, wall_clock: float) -> dict:
    """Run summary; numbers that cannot be reported are ``null`` with a reason."""
    dyn = cfg.dynamics
    nul = _Nullable()
    lam = traj.diagnostics["lambda"]
    vol_defect = np.abs(lam * traj.diagnostics["I"] - dyn.V0)
    ortho = [
        max(abs(float(dec.rho_bar.coeffs[0][1])), abs(float(dec.rho_bar.coeffs[1][1])))
        for dec in tr.decompositions if dec is not None
    ]
    rate_reason = tr.rate_note if tr.decay_rate is None else ""
    return {
        "format_version": FORMAT_VERSION,
        "r_e": dyn.r_e,
        "metric_mode": dyn.metric,
        "contact_law": dyn.law.to_dict(),
        "N": dyn.n,
        "T_requested": dyn.T,
        "T_reached": float(traj.times[-1]) if len(traj.times) else 0.0,
        "steps": traj.steps,
        "final_lambda": nul.num("final_lambda", lam[-1] if lam.size else None, "no snapshot recorded"),
        "final_v": nul.num("final_v", tr.v[-1] if len(tr.v) else None, "final snapshot could not be decomposed"),
        "v_inf": nul.num("v_inf", tr.v_inf, "no decomposable snapshot"),
        "fitted_decay_rate": nul.num("fitted_decay_rate", tr.decay_rate, rate_reason),
        "decay_rate_reliable": tr.rate_reliable,
        "decay_rate_note": tr.rate_note,
        "analytic_slow_rate": dyn.law.slope_at_one * dyn.rate_scale,
        "invariant_violations": {
            "max_volume_constraint": nul.num(
                "max_volume_constraint", float(vol_defect.max()) if vol_defect.size else None,
                "no snapshot recorded"),
            "max_mode1_in_rho_bar": nul.num(
                "max_mode1_in_rho_bar", max(ortho) if ortho else None, "no decomposable snapshot"),
            "decomposition_failures": len(tr.failures),
        },
        "halt_reason": traj.halt_reason,
        "wall_clock_s": wall_clock,
        "null_reasons": nul.reasons,
    }


def cmd_evolve(cfg: ExperimentConfig, args) -> tuple[int, dict]:
    from .coords import track
    from .dynamics import evolve

    t0 = time.perf_counter()
    traj = evolve(cfg.initial_shape(), cfg.dynamics)
    if not traj.snapshots:
        raise SolverError(f"no snapshot could be computed: {traj.halt_reason}")
    tr = track(traj)
    csv_path = _out(cfg, args, "trajectory_csv")
    atomic_write(csv_path, csv_text(TRAJECTORY_COLUMNS, _trajectory_rows(traj, tr)))
    report = summary_report(cfg, traj, tr, time.perf_counter() - t0)
    atomic_write(_out(cfg, args, "summary_json"), json_text(report))
    if traj.halt_reason:
        print(f"trajectory halted: {traj.halt_reason}", file=sys.stderr)
        return EXIT_HALTED, report
    return EXIT_OK, report


def cmd_spectrum(cfg: ExperimentConfig, args) -> tuple[int, dict]:
    from .linearization import spectrum

    opts = cfg.spectrum
    max_mode = int(opts.get("max_mode", 16))
    if max_mode > cfg.dynamics.n // 4:
        raise ConfigError(f"spectrum.max_mode must be at most N/4 = {cfg.dynamics.n // 4}")
    eps = opts.get("eps")
    try:
        rep = spectrum(cfg.dynamics, max_mode=max_mode, eps=eps, richardson=opts.get("richardson", True))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = rep.to_dict()
    atomic_write(_out(cfg, args, "spectrum_json"), json_text(out))
    return EXIT_OK, out


def cmd_decompose(cfg: ExperimentConfig, args) -> tuple[int, dict]:
    from .coords import decompose

    shape = cfg.initial_shape()
    dec = decompose(shape)
    a, b = dec.rho_bar.coeffs
    out = {
        "format_version": FORMAT_VERSION,
        "r_e": cfg.r_e,
        "v": dec.v.tolist(),
        "rho_bar": {"cos": a.tolist(), "sin": b.tolist()},
        "rho_bar_max": float(np.max(np.abs(dec.rho_bar.samples))),
        "newton_iters": dec.newton_iters,
        "residual": dec.residual,
    }
    atomic_write(_out(cfg, args, "decompose_json"), json_text(out))
    return EXIT_OK, out


def cmd_verify(args) -> tuple[int, dict]:
    from .acceptance import run_all

    names = [n.strip().upper() for n in args.only.split(",")] if args.only else None
    try:
        results = run_all(names)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    out = {
        "format_version": FORMAT_VERSION,
        "passed": all(r.passed for r in results),
        "criteria": [r.to_dict() for r in results],
    }
    for r in out["criteria"]:
        r["info"].pop("traceback", None)
    if not args.json:
        for r in results:
            print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"acceptance failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY, out
    return EXIT_OK, out


COMMANDS = {
    "solve": cmd_solve,
    "evolve": cmd_evolve,
    "spectrum": cmd_spectrum,
    "decompose": cmd_decompose,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="droplet", description="Droplet contact-line simulator.")
    p.add_argument("command", choices=[*COMMANDS, "verify"])
    p.add_argument("--config", help="JSON experiment configuration (not used by verify)")
    p.add_argument("--json", action="store_true", help="print machine-readable results to stdout")
    p.add_argument("--out-dir", default=".", help="directory for output files (default: .)")
    p.add_argument("--only", help="verify: comma-separated subset, e.g. A1,A4")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            code, out = cmd_verify(args)
        else:
            if not args.config:
                raise ConfigError(f"'{args.command}' requires --config")
            cfg = load_config(args.config)
            code, out = COMMANDS[args.command](cfg, args)
    except (ConfigError, ContactLawError, ShapeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, DecompositionError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.json:
        sys.stdout.write(json_text(out))
    elif args.command != "verify":
        for key in ("lambda", "final_lambda", "fitted_decay_rate", "kernel_dim", "v", "halt_reason"):
            if key in out:
                print(f"{key}: {out[key]}")
    return code


if __name__ == "__main__":
    sys.exit(main())
