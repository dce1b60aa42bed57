"""Command-line entry point: ``retailrank <command> [options]``.

Every command is a pure function of its input files and options. Options can
also come from a flat ``key = value`` file passed with ``--config``; flags on
the command line win over the file, and the file wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .evaluation import CVConfig, RankerSpec, chain_feature_table, cross_validate_table
from .geo_features import jensen_coefficients
from .ingestion import DataError, UnknownChain, dataset_stats, load_dataset
from .mobility import transition_tables
from .model import DEFAULT_RADIUS_M, FEATURE_NAMES
from .ranking import DEFAULT_RIDGE_GAMMA, RankNetConfig
from .synthgen import ConfigError, config_from_mapping, generate_city, write_city


class CLIError(Exception):
    """A user-facing failure; the message is printed and the exit code is nonzero."""


# --------------------------------------------------------------------------
# Config file and run configuration


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    out: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise CLIError(f"{path}:{n}: expected 'key = value', got {line!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in str(text).split(",") if t.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in str(text).split(",") if t.strip())


def _names(text: str) -> tuple[str, ...]:
    names = tuple(t.strip() for t in str(text).split(",") if t.strip())
    unknown = [n for n in names if n not in FEATURE_NAMES]
    if unknown:
        raise ValueError(f"unknown feature(s) {unknown}; choose from {', '.join(FEATURE_NAMES)}")
    return names


@dataclass
class RunConfig:
    """Resolved options for one command."""

    venues: Optional[Path] = None
    checkins: Optional[Path] = None
    chain: Optional[str] = None
    r: float = DEFAULT_RADIUS_M
    features: tuple[str, ...] = FEATURE_NAMES
    model: str = "ridge"
    k: tuple[int, ...] = (10,)
    x: tuple[float, ...] = (5, 10, 15, 20, 30)
    n_experiments: int = 1000
    seed: int = 0
    gamma: float = DEFAULT_RIDGE_GAMMA
    hidden: int = RankNetConfig.hidden
    learning_rate: float = RankNetConfig.learning_rate
    epochs: int = RankNetConfig.epochs
    baseline_trials: int = 10_000
    max_gap_s: Optional[int] = None
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    out: Optional[Path] = None
    rho_out: Optional[Path] = None

    def ranker(self) -> RankerSpec:
        if self.model in ("ridge", "ranknet"):
            return RankerSpec(self.model, self.features)
        return RankerSpec.parse(self.model)

    def cv_config(self) -> CVConfig:
        return CVConfig(
            radius_m=self.r,
            k_list=self.k,
            x_list=self.x,
            n_experiments=self.n_experiments,
            seed=self.seed,
            ridge_gamma=self.gamma,
            ranknet=RankNetConfig(self.hidden, self.learning_rate, self.epochs, self.seed),
            baseline_trials=self.baseline_trials,
            jobs=self.jobs,
        )


_CONVERT = {
    "venues": Path,
    "checkins": Path,
    "chain": str,
    "r": float,
    "features": _names,
    "model": str,
    "k": _int_list,
    "x": _float_list,
    "n_experiments": int,
    "seed": int,
    "gamma": float,
    "hidden": int,
    "learning_rate": float,
    "epochs": int,
    "baseline_trials": int,
    "max_gap_s": int,
    "jobs": int,
    "out": Path,
    "rho_out": Path,
}


def resolve(args: argparse.Namespace, file_values: dict[str, str]) -> RunConfig:
    """Merge flags over config-file values over defaults."""
    cfg = RunConfig()
    for key, conv in _CONVERT.items():
        flag = getattr(args, key, None)
        if flag is not None:
            value = flag
        elif key in file_values:
            try:
                value = conv(file_values[key])
            except ValueError as exc:
                raise CLIError(f"config value {key} = {file_values[key]!r}: {exc}") from exc
        else:
            continue
        setattr(cfg, key, value)
    if cfg.jobs < 1:
        raise CLIError("--jobs must be >= 1")
    return cfg


# --------------------------------------------------------------------------
# Commands


def _load(cfg: RunConfig):
    if cfg.venues is None or cfg.checkins is None:
        raise CLIError("--venues and --checkins are required")
    return load_dataset(cfg.venues, cfg.checkins, cfg.max_gap_s)


def _emit(text: str, path: Optional[Path], stdout) -> None:
    if path is None:
        stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_generate(cfg: RunConfig, city_values: dict[str, str], stdout) -> int:
    if cfg.out is None:
        raise CLIError("generate needs --out DIR")
    values = dict(city_values)
    values["seed"] = str(cfg.seed)
    city = config_from_mapping(values)
    d = generate_city(city)
    vpath, cpath = write_city(d, cfg.out)
    stdout.write(f"wrote {len(d.venues)} venues to {vpath} and {len(d.checkins)} check-ins to {cpath}\n")
    return 0


def cmd_stats(cfg: RunConfig, stdout) -> int:
    d = _load(cfg)
    chains = [cfg.chain] if cfg.chain else None
    report = dataset_stats(d, chains)
    _emit(_json(report.to_json()), cfg.out, stdout)
    return 0


def _rho_csv(tables) -> str:
    rows = [(a, b, repr(v)) for (a, b), v in sorted(tables.rho.items())]
    return _csv(["from_category", "to_category", "rho"], rows)


def cmd_coefficients(cfg: RunConfig, stdout) -> int:
    d = _load(cfg)
    coeffs = jensen_coefficients(d, cfg.r)
    rows = [
        (a, b, repr(k), repr(coeffs.baseline_mean[(a, b)]))
        for (a, b), k in sorted(coeffs.kappa.items())
    ]
    _emit(_csv(["from_category", "to_category", "kappa", "baseline_mean"], rows), cfg.out, stdout)
    if cfg.rho_out is not None:
        _emit(_rho_csv(transition_tables(d)), cfg.rho_out, stdout)
    return 0


def cmd_transition_ratios(cfg: RunConfig, stdout) -> int:
    d = _load(cfg)
    _emit(_rho_csv(transition_tables(d)), cfg.out, stdout)
    return 0


def _require_chain(cfg: RunConfig) -> str:
    if not cfg.chain:
        raise CLIError("--chain is required")
    return cfg.chain


def cmd_features(cfg: RunConfig, stdout) -> int:
    d = _load(cfg)
    chain = _require_chain(cfg)
    table = _chain_table(d, chain, cfg.r)
    rows = [(i, *(repr(float(v)) for v in row), int(y)) for i, row, y in zip(table.ids, table.X, table.y)]
    _emit(_csv(["area_id", *table.names, "checkins"], rows), cfg.out, stdout)
    return 0


def _chain_table(d, chain: str, r: float):
    try:
        return chain_feature_table(d, chain, r)
    except KeyError:
        known = ", ".join(sorted(d.chains)) or "none"
        raise CLIError(f"unknown chain {chain!r} (chains in data: {known})") from None


def cmd_evaluate(cfg: RunConfig, stdout) -> int:
    d = _load(cfg)
    chain = _require_chain(cfg)
    spec = cfg.ranker()
    table = _chain_table(d, chain, cfg.r)
    report = cross_validate_table(table, spec, cfg.cv_config(), chain)
    _emit(_json(report.to_json()), cfg.out, stdout)
    return 0


# --------------------------------------------------------------------------
# Argument parsing


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--venues", type=Path, help="venues CSV (id,lat,lon,category[,chain])")
    p.add_argument("--checkins", type=Path, help="check-ins CSV (user,venue,timestamp)")
    p.add_argument(
        "--max-gap-s", type=int, dest="max_gap_s",
        help="only link consecutive check-ins at most this many seconds apart (default: no limit)",
    )


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat 'key = value' file; flags override it")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retailrank",
        description="Rank candidate areas for new retail stores from venue and check-in data.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("generate", help="write a synthetic city (venues.csv, checkins.csv)")
    p.add_argument("--config", type=Path, help="city config file (n_venues, chain, planted, ...)")
    p.add_argument("--out", type=Path, help="output directory (required)")
    p.add_argument("--seed", type=int, help="random seed (default: 0)")
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override one city config key, e.g. --set n_venues=500",
    )

    p = sub.add_parser("stats", help="dataset statistics as a JSON report")
    _common(p)
    _data_args(p)
    p.add_argument("--chain", help="report only this chain (default: every chain)")

    p = sub.add_parser("coefficients", help="category attraction table as CSV")
    _common(p)
    _data_args(p)
    p.add_argument("--r", type=float, help=f"neighborhood radius in meters (default: {DEFAULT_RADIUS_M:g})")
    p.add_argument("--rho-out", type=Path, dest="rho_out", help="also write the transition-ratio CSV here")

    p = sub.add_parser("transition-ratios", help="category transition ratios as CSV")
    _common(p)
    _data_args(p)

    p = sub.add_parser("features", help="per-store-area feature vectors as CSV")
    _common(p)
    _data_args(p)
    p.add_argument("--chain", help="chain whose store areas are described (required)")
    p.add_argument("--r", type=float, help=f"neighborhood radius in meters (default: {DEFAULT_RADIUS_M:g})")

    p = sub.add_parser("evaluate", help="cross-validated ranking evaluation as a JSON report")
    _common(p)
    _data_args(p)
    p.add_argument("--chain", help="chain to evaluate (required)")
    p.add_argument("--r", type=float, help=f"neighborhood radius in meters (default: {DEFAULT_RADIUS_M:g})")
    p.add_argument(
        "--model",
        help="ranker: a feature name, 'ridge', 'ranknet' or 'oracle' (default: ridge)",
    )
    p.add_argument(
        "--features", type=_names,
        help="comma-separated features for ridge/ranknet (default: all eight)",
    )
    p.add_argument("--k", type=_int_list, help="comma-separated NDCG cutoffs (default: 10)")
    p.add_argument("--x", type=_float_list, help="comma-separated Accuracy@X%% levels (default: 5,10,15,20,30)")
    p.add_argument("--n-experiments", type=int, dest="n_experiments", help="random holdouts (default: 1000)")
    p.add_argument("--seed", type=int, help="base seed; experiment i uses seed+i (default: 0)")
    p.add_argument("--gamma", type=float, help=f"ridge penalty (default: {DEFAULT_RIDGE_GAMMA:g})")
    p.add_argument("--hidden", type=int, help=f"RankNet hidden units (default: {RankNetConfig.hidden})")
    p.add_argument(
        "--learning-rate", type=float, dest="learning_rate",
        help=f"RankNet step size (default: {RankNetConfig.learning_rate})",
    )
    p.add_argument("--epochs", type=int, help=f"RankNet epochs (default: {RankNetConfig.epochs})")
    p.add_argument(
        "--baseline-trials", type=int, dest="baseline_trials",
        help="Monte Carlo trials for the random baseline (default: 10000)",
    )
    p.add_argument("--jobs", type=int, help="worker threads for experiments (default: number of cores)")
    return parser


def _parse_sets(items: Sequence[str]) -> dict[str, str]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise CLIError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    file_values = read_config_file(args.config) if args.config else {}

    if args.command == "generate":
        city_values = {**file_values, **_parse_sets(args.set)}
        seed = args.seed if args.seed is not None else int(city_values.pop("seed", 0))
        city_values.pop("out", None)
        out = args.out if args.out is not None else (Path(file_values["out"]) if "out" in file_values else None)
        return cmd_generate(RunConfig(seed=seed, out=out), city_values, stdout)

    cfg = resolve(args, file_values)
    handlers = {
        "stats": cmd_stats,
        "coefficients": cmd_coefficients,
        "transition-ratios": cmd_transition_ratios,
        "features": cmd_features,
        "evaluate": cmd_evaluate,
    }
    return handlers[args.command](cfg, stdout)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        return run(argv)
    except (CLIError, ConfigError, DataError, UnknownChain, ValueError, np.linalg.LinAlgError) as exc:
        print(f"retailrank: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"retailrank: error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
