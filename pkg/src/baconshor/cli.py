"""Command-line front end: ``baconshor {sweep,sitecount,validate} --config C --out D``.

Configs are flat JSON objects.  Schema problems exit with status 2 and a
message naming the offending key; engine failures exit with status 1.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__
from .bacon_shor import round_positions
from .checks import ValidateOptions, run_checks
from .experiment import DEFAULT_DEPTHS, ConfigError, ExperimentConfig, fit_all, sweep
from .sitecount import COMPARISONS, SiteCountParams, optimal_gap, ps_bound, sitecount_rows, sitecount_threshold

log = logging.getLogger("baconshor")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

SWEEP_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)} | {"noisy_measurements"}
SITECOUNT_KEYS = {"depths", "comparison"}
VALIDATE_KEYS = {f.name for f in dataclasses.fields(ValidateOptions)} | {"noisy_measurements"}


# ------------------------------------------------------------------ config


def load_config(path: Path, allowed: set, required: Iterable[str] = ()) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError("config", f"cannot read {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")
    for key, value in raw.items():
        if key not in allowed:
            raise ConfigError(key, "unknown key")
        if isinstance(value, dict):
            raise ConfigError(key, "nested objects are not allowed")
    for key in required:
        if key not in raw:
            raise ConfigError(key, "required key is missing")
    if raw.pop("noisy_measurements", False) is not False:
        raise ConfigError("noisy_measurements", "noisy measurements are not supported")
    return raw


def _check_depths(depths: Any) -> list[int]:
    if not isinstance(depths, list) or not depths:
        raise ConfigError("depths", "must be a non-empty list")
    for d in depths:
        if not isinstance(d, int) or isinstance(d, bool) or d < 1:
            raise ConfigError("depths", f"entries must be integers >= 1, got {d!r}")
    return depths


# ------------------------------------------------------------------ output


def fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, config: dict, files: list[Path], started: str, **extra) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "started": started,
        "finished": _now(),
        "files": {p.name: sha256(p) for p in files},
        **extra,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


# ------------------------------------------------------------------ commands


SWEEP_HEADER = (
    "depth", "gap", "p", "mean_delta_L", "mean_p_ps", "mean_delta_s", "weighted_delta", "n_circuits", "engine", "seed",
)
THRESHOLD_HEADER = (
    "depth", "gap", "threshold", "q2", "q1", "q0", "l1", "l0", "residual_q", "residual_l", "status",
    "ps_at_threshold", "n_rounds", "sitecount_threshold", "sitecount_ps_bound",
)


def cmd_sweep(config_path: Path, out: Path) -> int:
    started = _now()
    raw = load_config(config_path, SWEEP_KEYS, required=("depths",))
    _check_depths(raw["depths"])
    config = ExperimentConfig(**raw)
    out.mkdir(parents=True, exist_ok=True)
    try:
        points, metas = sweep(config, lambda d, g: log.info("finished depth=%d gap=%d", d, g))
        estimates = fit_all(points)
    except Exception as exc:
        log.error("engine failure: %s", exc)
        return EXIT_FAIL
    rows = []
    for e in estimates:
        n_rounds = len(round_positions(e.depth, e.gap)) + int(config.after_prep_round)
        sc = sitecount_threshold(e.depth, n_rounds)
        ps_sc = ps_bound(SiteCountParams(e.depth, n_rounds, e.threshold)) if e.status == "ok" else float("nan")
        rows.append(
            (e.depth, e.gap, e.threshold, *e.q, *e.l, e.residual_q, e.residual_l, e.status,
             e.ps_at_threshold, n_rounds, sc, ps_sc)
        )
    files = [
        write_csv(
            out / "sweep.csv", SWEEP_HEADER, ((*dataclasses.astuple(p), config.engine, config.seed) for p in points)
        ),
        write_csv(out / "thresholds.csv", THRESHOLD_HEADER, rows),
    ]
    write_manifest(
        out, "sweep", config.to_dict(), files, started,
        seed=config.seed, engine=config.engine,
        schedule={"after_prep_round": config.after_prep_round, "final_parity_check": config.final_parity_check},
        fit={"encoded": "quadratic, unweighted", "bare": "linear with intercept"},
        grids=metas,
    )
    return EXIT_OK


def cmd_sitecount(config_path: Path, out: Path) -> int:
    started = _now()
    raw = load_config(config_path, SITECOUNT_KEYS)
    depths = _check_depths(raw.get("depths", list(DEFAULT_DEPTHS)))
    comparison = raw.get("comparison", "conditional")
    if comparison not in COMPARISONS:
        raise ConfigError("comparison", f"must be one of {COMPARISONS}")
    out.mkdir(parents=True, exist_ok=True)
    table = sitecount_rows(depths, comparison)
    best = [optimal_gap(T, comparison) for T in depths]
    files = [
        write_csv(
            out / "sitecount.csv",
            ("T", "M", "gap", "threshold", "ps_at_threshold", "validity"),
            (dataclasses.astuple(r) for r in table),
        ),
        write_csv(out / "optimal_gaps.csv", ("T", "gap", "M", "threshold"), ((b.T, b.gap, b.M, b.threshold) for b in best)),
    ]
    write_manifest(out, "sitecount", {"depths": depths, "comparison": comparison}, files, started)
    return EXIT_OK


def cmd_validate(config_path: Path, out: Path) -> int:
    started = _now()
    raw = load_config(config_path, VALIDATE_KEYS)
    for key, value in raw.items():
        if not isinstance(value, int) or isinstance(value, bool) or value < (0 if key == "seed" else 1):
            raise ConfigError(key, "must be a positive integer")
    opts = ValidateOptions(**raw)
    out.mkdir(parents=True, exist_ok=True)
    results = run_checks(opts)
    path = out / "validate.json"
    path.write_text(json.dumps([r.to_dict() for r in results], indent=2) + "\n")
    write_manifest(out, "validate", dataclasses.asdict(opts), [path], started)
    for r in results:
        log.info("%s %s: %s", "PASS" if r.passed else "FAIL", r.name, r.detail)
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"check failed: {failed[0].name}: {failed[0].detail}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "sitecount": cmd_sitecount, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="baconshor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, required=True, help="flat JSON config file")
        p.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args.config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
