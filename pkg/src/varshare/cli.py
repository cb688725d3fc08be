"""Command-line interface: a thin client over the service.

Subcommands: ``alloc`` (allocations from a value-table CSV), ``toycase``
(exact sweeps of the reference cases), ``estimate`` (replicated estimation
studies).  Every run goes through the service layer: in-process by default,
or a remote instance via ``--server``.

Options come from flags plus an optional JSON config file (flat object of
option names; flags override the file).  Output CSVs start with comment
lines carrying the package version and a hash of the resolved options, so a
repeated run with the same configuration and seed is byte-identical.

Exit codes: 0 success, 1 usage or parse failure, 2 degenerate game, 3
numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .client import ServiceClient, ServiceError
from .coalitions import Allocation
from .errors import TableParseError, VarshareError
from .io import (
    read_game_csv,
    write_allocation_csv,
    write_report_csv,
    write_sweep_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DEGENERATE = 2
EXIT_NUMERICAL = 3

ALLOC_DEFAULTS = {
    "table": None,
    "method": "shapley,pme",
    "zero_tol": 0.0,
    "out": None,
    "server": None,
}
TOYCASE_DEFAULTS = {
    "case": "exogenous-linear",
    "param": "rho",
    "grid": None,
    "values": None,
    "rho": 0.0,
    "beta": 2.0,
    "alpha": 0.0,
    "zero_tol": 0.0,
    "out": None,
    "server": None,
}
ESTIMATE_DEFAULTS = {
    "model": "ishigami",
    "method": "mc",
    "case": "exogenous-linear",
    "rho": 0.0,
    "beta": 2.0,
    "n": 2000,
    "k": 6,
    "nv": 20000,
    "no": 500,
    "ni": 100,
    "reps": 20,
    "scheme": None,
    "level": 0.9,
    "seed": 0,
    "zero_tol": 0.0,
    "jobs": 1,
    "out": None,
    "server": None,
}
DEFAULT_GRIDS = {"rho": "-0.99:0.99:0.01", "alpha": "0:1:0.05", "beta": "2:10:2"}
# transport and output location do not affect the computation, so they stay
# out of the config hash
UNHASHED = {"out", "server", "config"}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="varshare", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"varshare {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON file of option defaults")
        p.add_argument("--server", help="service URL; default runs in-process")
        p.add_argument("--out", help="output CSV path; default writes to stdout")
        p.add_argument("--zero-tol", dest="zero_tol", type=float, help="null-coalition threshold")

    p = sub.add_parser("alloc", help="allocations from a value-table CSV")
    p.add_argument("--table", help="value-table CSV (coalition,value)")
    p.add_argument("--method", help="comma list from shapley,pme,pv,pv0")
    common(p)

    p = sub.add_parser("toycase", help="exact Shapley/PME sweep of a reference case")
    p.add_argument(
        "--case",
        choices=[
            "exogenous-linear",
            "unbalanced-linear",
            "interaction-linear",
            "shapley-joke",
        ],
    )
    p.add_argument("--param", choices=["rho", "beta", "alpha"])
    p.add_argument("--grid", help="start:stop:step inclusive grid")
    p.add_argument("--values", help="comma list of grid values")
    p.add_argument("--rho", type=float, help="fixed correlation when not swept")
    p.add_argument("--beta", type=float, help="fixed coefficient when not swept")
    p.add_argument("--alpha", type=float, help="fixed interaction weight when not swept")
    common(p)

    p = sub.add_parser("estimate", help="replicated estimation study with CIs")
    p.add_argument("--model", choices=["ishigami", "robot", "gaussian-linear"])
    p.add_argument("--method", choices=["mc", "knn"])
    p.add_argument(
        "--case", choices=["exogenous-linear", "unbalanced-linear", "shapley-joke"]
    )
    p.add_argument("--rho", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--n", type=int, help="dataset rows for given-data estimation")
    p.add_argument("--k", type=int, help="neighbors per point, self included")
    p.add_argument("--nv", type=int, help="variance-estimate draws")
    p.add_argument("--no", type=int, help="outer conditioning draws")
    p.add_argument("--ni", type=int, help="inner conditional draws")
    p.add_argument("--reps", type=int, help="replicates for the CI")
    p.add_argument("--scheme", choices=["independent-seeds", "subsample-80"])
    p.add_argument("--level", type=float, help="CI level in (0,1)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--jobs", type=int, help="worker threads")
    common(p)
    return parser


def _effective(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults <- config file <- explicit flags."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise TableParseError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise TableParseError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise TableParseError("config must be a JSON object")
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise TableParseError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _config_hash(cfg: dict) -> str:
    hashable = {k: v for k, v in cfg.items() if k not in UNHASHED}
    blob = json.dumps(hashable, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _comment(command: str, cfg: dict, seed: int | None = None) -> str:
    lines = [f"varshare {__version__}", f"command: {command}"]
    if seed is not None:
        lines.append(f"seed: {seed}")
    lines.append(f"config-sha256: {_config_hash(cfg)}")
    return "\n".join(lines)


def _out_target(path: str | None):
    return sys.stdout if path is None else path


def _parse_grid(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise TableParseError(f"grid must be start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise TableParseError(f"grid has non-numeric parts: {spec!r}") from None
    if not (math.isfinite(start) and math.isfinite(stop) and math.isfinite(step)):
        raise TableParseError("grid bounds must be finite")
    if step <= 0 or stop < start:
        raise TableParseError("grid needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def _parse_values(spec: str) -> list[float]:
    try:
        return [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise TableParseError(f"bad values list: {spec!r}") from None


def _run_alloc(args: argparse.Namespace) -> int:
    cfg = _effective(args, ALLOC_DEFAULTS)
    if not cfg["table"]:
        raise TableParseError("alloc needs --table")
    methods = [m.strip() for m in str(cfg["method"]).split(",") if m.strip()]
    bad = [m for m in methods if m not in ("shapley", "pme", "pv", "pv0")]
    if bad or not methods:
        raise TableParseError(f"unknown methods: {bad or 'none given'}")
    try:
        game = read_game_csv(cfg["table"])
    except OSError as exc:
        raise TableParseError(f"cannot read table: {exc}") from exc
    payload = {
        "table": {"d": game.d, "values": [float(v) for v in game.values]},
        "methods": methods,
        "zero_tol": float(cfg["zero_tol"]),
    }
    with ServiceClient(cfg["server"]) as client:
        resp = client.alloc(payload)
    for note in resp["warnings"]:
        print(f"warning: {note}", file=sys.stderr)
    degenerate = [a["method"] for a in resp["allocations"] if a["degenerate"]]
    if degenerate:
        print(
            f"degenerate game: no value to share ({', '.join(degenerate)})",
            file=sys.stderr,
        )
        return EXIT_DEGENERATE
    if resp["exogenous"]:
        labels = ", ".join(str(p) for p in resp["exogenous"])
        print(f"exogenous players (zero share): {labels}", file=sys.stderr)
    comment = _comment("alloc", cfg)
    out = cfg["out"]
    for n, payload_alloc in enumerate(resp["allocations"]):
        alloc = Allocation(
            np.array(payload_alloc["shares"]),
            payload_alloc["total"],
            payload_alloc["method"],
            degenerate=payload_alloc["degenerate"],
        )
        if out is None:
            write_allocation_csv(sys.stdout, alloc, comment)
        elif len(resp["allocations"]) == 1:
            write_allocation_csv(out, alloc, comment)
        else:
            path = Path(out)
            target = path.with_name(f"{path.stem}.{alloc.method.value}{path.suffix}")
            write_allocation_csv(target, alloc, comment)
    return EXIT_OK


def _run_toycase(args: argparse.Namespace) -> int:
    cfg = _effective(args, TOYCASE_DEFAULTS)
    if cfg["grid"] and cfg["values"]:
        raise TableParseError("give --grid or --values, not both")
    if cfg["values"]:
        values = (
            list(cfg["values"])
            if isinstance(cfg["values"], list)
            else _parse_values(str(cfg["values"]))
        )
    else:
        values = _parse_grid(str(cfg["grid"] or DEFAULT_GRIDS[cfg["param"]]))
    payload = {
        "case": cfg["case"],
        "param": cfg["param"],
        "values": [float(v) for v in values],
        "rho": float(cfg["rho"]),
        "beta": float(cfg["beta"]),
        "alpha": float(cfg["alpha"]),
        "zero_tol": float(cfg["zero_tol"]),
    }
    with ServiceClient(cfg["server"]) as client:
        resp = client.toycase(payload)
    write_sweep_csv(_out_target(cfg["out"]), resp["rows"], _comment("toycase", cfg))
    return EXIT_OK


def _run_estimate(args: argparse.Namespace) -> int:
    cfg = _effective(args, ESTIMATE_DEFAULTS)
    payload = {
        "model": cfg["model"],
        "method": cfg["method"],
        "case": cfg["case"],
        "rho": float(cfg["rho"]),
        "beta": float(cfg["beta"]),
        "n": int(cfg["n"]),
        "k": int(cfg["k"]),
        "nv": int(cfg["nv"]),
        "no": int(cfg["no"]),
        "ni": int(cfg["ni"]),
        "reps": int(cfg["reps"]),
        "scheme": cfg["scheme"],
        "level": float(cfg["level"]),
        "seed": int(cfg["seed"]),
        "zero_tol": float(cfg["zero_tol"]),
        "jobs": int(cfg["jobs"]),
    }
    with ServiceClient(cfg["server"]) as client:
        resp = client.estimate(payload)
    print(f"elapsed: {resp['elapsed_seconds']:.2f}s", file=sys.stderr)
    if resp["degenerate"]:
        print("degenerate response: zero variance in every replicate", file=sys.stderr)
        return EXIT_DEGENERATE
    write_report_csv(
        _out_target(cfg["out"]),
        resp["rows"],
        _comment("estimate", cfg, seed=int(cfg["seed"])),
    )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    runners = {"alloc": _run_alloc, "toycase": _run_toycase, "estimate": _run_estimate}
    try:
        return runners[args.command](args)
    except ServiceError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        if exc.code == "degenerate":
            return EXIT_DEGENERATE
        if exc.code == "contract":
            return EXIT_USAGE
        return EXIT_NUMERICAL
    except TableParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VarshareError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
