"""Batch runner: ``suptest <command> --config cfg.json [--seed S] [--out DIR]``.

Every run writes its artifacts plus ``manifest.json`` into the output
directory.  Exit codes: 0 success, 2 configuration error, 3 finding
(a level violation or a failed verification, reported in ``finding.json``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import tempfile
from pathlib import Path
from typing import Literal, Union

import numpy as np
import scipy
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import _json
from .adversary import (
    CSV_COLUMNS,
    AdversarySchedule,
    build_adversary,
    build_dual_adversary,
    verify_adversary,
)
from .dist import (
    FinitePmf,
    GeometricPmf,
    IntegerLaw,
    SampleSizeMap,
    law_from_json,
    mix_with_tail,
    normalize_finite,
    tv_distance,
)
from .errors import LevelViolation, TooLarge, VerificationFailure
from .teststat import (
    TestFamily,
    bounded_support_family,
    constant_family,
    expectation,
    split_max_family,
    split_max_rejection_family,
)
from .tsirelson import (
    EventFamily,
    PathEvent,
    PushforwardLaw,
    classify,
    event_probability,
    pushforward,
    reduce_event,
    simulate_uniform_solution,
    torus_law_from_json,
)

EXIT_OK, EXIT_CONFIG, EXIT_FINDING = 0, 2, 3
VERSION = "0.1.0"


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# Config schema


class _Base(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    schema_: Literal[1] = Field(alias="schema")
    command: str | None = None
    seed: int = Field(0, ge=0, lt=2**64)


class StatConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: Literal["split_max", "split_max_rejection", "bounded_support", "constant"]
    N: int | None = None
    value: float | None = None
    dual: bool = False


class RankRange(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: int = Field(ge=1)
    stop: int = Field(ge=1)
    step: int = Field(1, ge=1)


Ranks = Union[list[int], RankRange]


class EvalTestConfig(_Base):
    law: dict
    test: StatConfig
    ranks: Ranks
    evaluator: Literal["exact", "brute_force", "monte_carlo"] = "exact"
    tol: float = Field(1e-13, gt=0)
    reps: int = Field(10_000, ge=1)
    conf: float = Field(0.99, gt=0, lt=1)
    output: str = "expectation.csv"


class BuildAdversaryConfig(_Base):
    test: StatConfig
    alpha: float = Field(ge=0, lt=1)
    num_ranks: int = Field(ge=1)
    horizon: Union[Literal["analytic"], dict] = "analytic"
    evaluator: Literal["exact", "brute_force", "monte_carlo"] = "exact"
    dual_alpha_prime: float | None = Field(None, gt=0, lt=1)
    tol: float = Field(1e-13, gt=0)
    reps: int = Field(20_000, ge=1)
    conf: float = Field(0.99, gt=0, lt=1)
    search_budget: int = Field(200_000, ge=1)
    eps: float = Field(1e-14, gt=0)
    output: str = "schedule.json"
    ranks_output: str = "ranks.csv"


class VerifyAdversaryConfig(_Base):
    schedule: str
    test: StatConfig
    evaluator: Literal["exact", "monte_carlo"] = "exact"
    tol: float = Field(1e-10, gt=0)
    reps: int = Field(20_000, ge=1)
    conf: float = Field(0.99, gt=0, lt=1)
    output: str = "verification.csv"


class SimulateConfig(_Base):
    law: dict
    depth: int = Field(ge=0)
    paths: int = Field(1, ge=1)
    mode: Literal["float", "grid"] = "float"
    grid_den: int = Field(2**31, ge=1)
    output: str = "paths.csv"


class ClassifyConfig(_Base):
    law: dict
    output: str = "classification.json"


class ReduceEventConfig(_Base):
    law: dict
    event: dict
    ranks: Ranks
    phi: Union[Literal["identity"], dict] = "identity"
    mode: Literal["exact", "monte_carlo"] = "exact"
    u_samples: int = Field(4096, ge=1)
    expectation: Literal["brute_force", "monte_carlo"] = "brute_force"
    event_evaluator: Literal["grid", "monte_carlo"] = "monte_carlo"
    paths: int = Field(100_000, ge=1)
    reps: int = Field(10_000, ge=1)
    conf: float = Field(0.99, gt=0, lt=1)
    output: str = "reduce_event.csv"


class TvDemoConfig(_Base):
    mu1: dict
    delta: float = Field(gt=0, lt=1)
    n: int = Field(ge=1)
    output: str = "tv_demo.json"


COMMANDS = {
    "eval-test": EvalTestConfig,
    "build-adversary": BuildAdversaryConfig,
    "verify-adversary": VerifyAdversaryConfig,
    "simulate-tsirelson": SimulateConfig,
    "classify": ClassifyConfig,
    "reduce-event": ReduceEventConfig,
    "tv-demo": TvDemoConfig,
}


# ---------------------------------------------------------------------------
# Config entries -> objects


def integer_law(entry: dict) -> IntegerLaw:
    """Law from a config entry; accepts shorthand kinds on top of the JSON form."""
    kind = entry.get("kind")
    try:
        if kind == "dirac":
            return FinitePmf.dirac(int(entry["point"]))
        if kind == "uniform":
            return FinitePmf.uniform([int(v) for v in entry["values"]])
        if kind == "weights":
            return normalize_finite(entry["weights"], entry.get("support"))
        if kind == "geometric":
            return GeometricPmf(float(entry["p"]), int(entry.get("shift", 0)))
        return law_from_json(entry)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad law {entry!r}: {exc}") from exc


def torus_law(entry: dict):
    try:
        if entry.get("kind") == "pushforward":
            return pushforward(integer_law(entry["base"]))
        return torus_law_from_json(entry)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad torus law {entry!r}: {exc}") from exc


def make_test_family(entry: StatConfig) -> TestFamily:
    if entry.name == "split_max":
        fam = split_max_family()
    elif entry.name == "split_max_rejection":
        fam = split_max_rejection_family()
    elif entry.name == "bounded_support":
        if entry.N is None or entry.N < 0:
            raise ConfigError("bounded_support needs a nonnegative N")
        fam = bounded_support_family(entry.N)
    else:
        if entry.value is None or not 0 <= entry.value <= 1:
            raise ConfigError("constant needs a value in [0, 1]")
        fam = constant_family(entry.value)
    return fam.dual() if entry.dual else fam


def rank_list(ranks) -> list[int]:
    if isinstance(ranks, RankRange):
        if ranks.stop < ranks.start:
            raise ConfigError("rank range stop is below start")
        return list(range(ranks.start, ranks.stop + 1, ranks.step))
    if not ranks or any(r < 1 for r in ranks):
        raise ConfigError("ranks must be a nonempty list of positive integers")
    return list(ranks)


def phi_map(entry) -> SampleSizeMap:
    try:
        return SampleSizeMap.from_json(entry)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad phi {entry!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# Output


class Writer:
    """Collects artifacts for one run; every file is written atomically."""

    def __init__(self, out: Path, config_hash: str):
        self.out = out
        self.config_hash = config_hash
        self.files: list[str] = []

    def _write(self, name: str, text: str):
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        if name not in self.files:
            self.files.append(name)

    def json(self, name: str, obj: dict):
        self._write(name, _json.dumps({"config_sha256": self.config_hash, **obj}) + "\n")

    def csv(self, name: str, columns: list[str], rows):
        lines = [f"# config_sha256={self.config_hash}", ",".join(columns)]
        for row in rows:
            lines.append(",".join(_cell(v) for v in row))
        self._write(name, "\n".join(lines) + "\n")

    def manifest(self, command: str, seed: int, status: str):
        digests = {}
        for name in self.files:
            digests[name] = hashlib.sha256((self.out / name).read_bytes()).hexdigest()
        self._write("manifest.json", _json.dumps({
            "command": command,
            "config_sha256": self.config_hash,
            "seed": seed,
            "status": status,
            "versions": {"suptest": VERSION, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "artifacts": digests,
        }) + "\n")


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _json.fmt_real(v)
    return str(v)


# ---------------------------------------------------------------------------
# Commands


def run_eval_test(cfg: EvalTestConfig, w: Writer) -> int:
    law, fam = integer_law(cfg.law), make_test_family(cfg.test)
    rows = []
    for n in rank_list(cfg.ranks):
        r = expectation(fam, law, n, cfg.evaluator, tol=cfg.tol, reps=cfg.reps, conf=cfg.conf,
                        seed=np.random.default_rng([cfg.seed, n]))
        rows.append([n, fam.phi(n), r.value, r.half_width, r.error_kind])
    w.csv(cfg.output, ["n", "sample_size", "value", "half_width", "error_kind"], rows)
    return EXIT_OK


def run_build_adversary(cfg: BuildAdversaryConfig, w: Writer) -> int:
    fam = make_test_family(cfg.test)
    kw = dict(horizon_policy=cfg.horizon, evaluator=cfg.evaluator, tol=cfg.tol, reps=cfg.reps,
              conf=cfg.conf, seed=cfg.seed, search_budget=cfg.search_budget, eps=cfg.eps)
    try:
        if cfg.dual_alpha_prime is not None:
            sched = build_dual_adversary(fam, cfg.dual_alpha_prime, cfg.num_ranks, **kw)
        else:
            sched = build_adversary(fam, cfg.alpha, cfg.num_ranks, **kw)
    except LevelViolation as exc:
        w.json("finding.json", exc.to_json())
        return EXIT_FINDING
    w.json(cfg.output, sched.to_json())
    rows = [[r.n, r.psi, r.c_n, r.certificate.max_expectation, r.certificate.bound,
             r.certificate.label] for r in sched.ranks]
    w.csv(cfg.ranks_output, ["rank", "psi", "c_n", "max_expectation", "bound", "label"], rows)
    return EXIT_OK


def run_verify_adversary(cfg: VerifyAdversaryConfig, w: Writer, base: Path) -> int:
    path = Path(cfg.schedule)
    if not path.is_absolute():
        path = base / path
    try:
        obj = json.loads(path.read_text())
        obj.pop("config_sha256", None)
        sched = AdversarySchedule.from_json(obj)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot load schedule {path}: {exc}") from exc
    fam = make_test_family(cfg.test)
    bounds = verify_adversary(sched, fam, cfg.evaluator, tol=cfg.tol, reps=cfg.reps, conf=cfg.conf,
                              seed=cfg.seed, strict=False)
    w.csv(cfg.output, CSV_COLUMNS, [b.csv_row() for b in bounds])
    failed = [b for b in bounds if not b.passed]
    if failed:
        w.json("finding.json", {**VerificationFailure(failed[0].rank, failed).to_json(),
                                "failed_ranks": [b.rank for b in failed]})
        return EXIT_FINDING
    return EXIT_OK


def run_simulate(cfg: SimulateConfig, w: Writer) -> int:
    nu = torus_law(cfg.law)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    exact = cfg.mode == "grid"
    for i in range(cfg.paths):
        path = simulate_uniform_solution(nu, cfg.depth, rng, cfg.mode, cfg.grid_den)
        for k, p in enumerate(path):
            rows.append([i, -k, p.num, p.den] if exact else [i, -k, float(p)])
    cols = ["path", "k", "num", "den"] if exact else ["path", "k", "value"]
    w.csv(cfg.output, cols, rows)
    return EXIT_OK


def run_classify(cfg: ClassifyConfig, w: Writer) -> int:
    try:
        label = classify(torus_law(cfg.law))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    w.json(cfg.output, {"label": str(label), **label.to_json()})
    return EXIT_OK


def run_reduce_event(cfg: ReduceEventConfig, w: Writer) -> int:
    mu = integer_law(cfg.law)
    phi = phi_map(cfg.phi)
    try:
        products = PathEvent.from_json(cfg.event, 1 + max(len(p) for p in cfg.event["arcs"])).products
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad event {cfg.event!r}: {exc}") from exc
    fam = EventFamily.of_arcs(products, phi)
    test = reduce_event(fam, mode=cfg.mode, u_samples=cfg.u_samples, seed=cfg.seed)
    nu = pushforward(mu) if mu.finite_support else PushforwardLaw(mu)
    rows = []
    for n in rank_list(cfg.ranks):
        try:
            event = fam(n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        r = expectation(test, mu, n, cfg.expectation, reps=cfg.reps, conf=cfg.conf,
                        seed=np.random.default_rng([cfg.seed, n]))
        e = event_probability(nu, event, evaluator=cfg.event_evaluator, paths=cfg.paths, conf=cfg.conf,
                              seed=np.random.default_rng([cfg.seed, n, 1]))
        rows.append([n, r.value, r.half_width, e.value, e.half_width,
                     abs(r.value - e.value), e.error_kind])
    w.csv(cfg.output, ["n", "reduced_value", "reduced_half_width", "event_value", "event_half_width",
                       "abs_diff", "event_error_kind"], rows)
    return EXIT_OK


def run_tv_demo(cfg: TvDemoConfig, w: Writer) -> int:
    mu1 = integer_law(cfg.mu1)
    if not isinstance(mu1, FinitePmf):
        raise ConfigError("mu1 must have finite support")
    mixed = mix_with_tail(mu1, cfg.delta)
    w.json(cfg.output, {"delta": cfg.delta, "tv_distance": tv_distance(mu1, mixed), "n": cfg.n,
                        "product_tv_bound": mixed.product_tv_bound(cfg.n),
                        "mixture": mixed.to_json()})
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point


def config_hash(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode()).hexdigest()


def load_config(command: str, path: Path, seed: int | None) -> tuple[BaseModel, dict]:
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("command", command) != command:
        raise ConfigError(f"config is for {raw['command']!r}, not {command!r}")
    if seed is not None:
        raw["seed"] = seed
    try:
        cfg = COMMANDS[command].model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg, raw


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="suptest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=Path, default=Path("."))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        cfg, raw = load_config(args.command, args.config, args.seed)
        w = Writer(args.out, config_hash(raw))
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "eval-test":
            code = run_eval_test(cfg, w)
        elif args.command == "build-adversary":
            code = run_build_adversary(cfg, w)
        elif args.command == "verify-adversary":
            code = run_verify_adversary(cfg, w, args.config.parent)
        elif args.command == "simulate-tsirelson":
            code = run_simulate(cfg, w)
        elif args.command == "classify":
            code = run_classify(cfg, w)
        elif args.command == "reduce-event":
            code = run_reduce_event(cfg, w)
        else:
            code = run_tv_demo(cfg, w)
    except (ConfigError, TooLarge) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    w.manifest(args.command, cfg.seed, "finding" if code == EXIT_FINDING else "ok")
    if code == EXIT_FINDING:
        print(f"finding reported in {args.out / 'finding.json'}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
