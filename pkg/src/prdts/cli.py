"""``prdts`` command line: sample, validate, bench.

Exit status: 0 success, 1 validation failure, 2 usage or parameter error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from .composer import WORKERS_ENV, BilateralParams, Params, RdtsParams, default_workers, sample_batch
from .errors import DomainError, QuadratureError
from .rejection import acceptance_rate_f1, acceptance_rate_f2, f1_many, f2_many
from .rng import RngStream
from .suite import DEFAULT_GRID, F1_BOUND, F2_BOUND, validation_suite
from .tts import TtsBackend, TtsBackendChoice, tts_many

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
FORMATS = ("csv", "txt", "f64le")
SEED_MAX = (1 << 64) - 1


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str
    params: list = field(default_factory=list)
    n: int = 1000
    seed: int = 0
    workers: int = 1
    backend: TtsBackendChoice = field(default_factory=TtsBackendChoice)
    output: str = "-"
    format: str = "csv"
    inject_mismatch: bool = False

    def __post_init__(self):
        if self.format not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.n < 1:
            raise UsageError(f"n must be positive, got {self.n}")
        if not 0 <= self.seed <= SEED_MAX:
            raise UsageError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.workers < 1:
            raise UsageError(f"workers must be positive, got {self.workers}")


# -- parsing ------------------------------------------------------------------------

_PARAM_KEYS = ("alpha", "p", "b", "C", "a", "D")
_CONFIG_KEYS = set(_PARAM_KEYS) | {"n", "seed", "workers", "backend", "eps", "compensate_mean", "output", "format", "grid"}


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON file whose keys mirror the flags; flags win")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--b", type=float, help="scale of the positive side (default 1)")
    sp.add_argument("--C", type=float, help="intensity of the positive side (default 1)")
    sp.add_argument("--a", type=float, help="scale of the negative side; makes the law bilateral")
    sp.add_argument("--D", type=float, help="intensity of the negative side; makes the law bilateral")
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int, help=f"worker threads (default ${WORKERS_ENV} or CPU count)")
    sp.add_argument("--backend", choices=[k.value for k in TtsBackend])
    sp.add_argument("--eps", type=float, help="truncation level of the eps-cp backend")
    sp.add_argument("--no-compensate", dest="compensate_mean", action="store_const", const=False, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prdts", description="Exact sampling of p-RDTS laws.")
    sub = parser.add_subparsers(dest="mode", required=True)

    sp = sub.add_parser("sample", help="write draws to a file")
    _add_common(sp)
    sp.add_argument("--output", "-o", help="output path, '-' for stdout (default)")
    sp.add_argument("--format", choices=FORMATS)

    vp = sub.add_parser("validate", help="run the diagnostics suite")
    _add_common(vp)
    vp.add_argument("--grid", action="store_true", help="use the built-in grid (default when no --alpha)")
    vp.add_argument("--output", "-o", help="JSONL report path, '-' for stdout (default)")
    vp.add_argument("--inject-mismatch", action="store_true", help=argparse.SUPPRESS)

    bp = sub.add_parser("bench", help="throughput and rejection iterations per stage")
    _add_common(bp)
    bp.add_argument("--grid", action="store_true", help="use the built-in grid (default when no --alpha)")
    bp.add_argument("--output", "-o", help="JSON table path, '-' for the text table on stdout (default)")
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def _params_from(values: dict) -> Params:
    if values.get("alpha") is None or values.get("p") is None:
        raise UsageError("--alpha and --p are required")
    alpha, p = float(values["alpha"]), float(values["p"])
    b = float(values.get("b") if values.get("b") is not None else 1.0)
    C = float(values.get("C") if values.get("C") is not None else 1.0)
    if values.get("a") is not None or values.get("D") is not None:
        a = float(values.get("a") if values.get("a") is not None else 1.0)
        D = float(values.get("D") if values.get("D") is not None else 1.0)
        return BilateralParams(alpha, p, a=a, b=b, C=C, D=D)
    return RdtsParams(alpha, p, b, C)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = _load_config(args.config) if args.config else {}
    for key, val in vars(args).items():
        if val is not None and key not in ("config", "mode"):
            values[key] = val
    mode = args.mode
    grid = bool(values.get("grid")) or (mode != "sample" and values.get("alpha") is None)
    params = list(DEFAULT_GRID) if grid else [_params_from(values)]

    kind = values.get("backend", TtsBackend.EXACT_REFERENCE.value)
    backend = TtsBackendChoice(
        TtsBackend(kind),
        float(values.get("eps", 1e-6)),
        bool(values.get("compensate_mean", True)),
    )
    default_n = {"sample": 1000, "validate": 100_000, "bench": 1_000_000}[mode]
    workers = values.get("workers")
    return RunConfig(
        mode=mode,
        params=params,
        n=int(values.get("n", default_n)),
        seed=int(values.get("seed", 0)),
        workers=int(workers) if workers is not None else default_workers(),
        backend=backend,
        output=values.get("output", "-"),
        format=values.get("format", "csv"),
        inject_mismatch=bool(values.get("inject_mismatch", False)),
    )


# -- output -------------------------------------------------------------------------


def format_values(values: np.ndarray, fmt: str) -> bytes:
    """Serialize draws; text formats use 17 significant digits, which round-trips doubles."""
    if fmt == "f64le":
        return np.ascontiguousarray(values, dtype="<f8").tobytes()
    body = "".join(f"{v:.17g}\n" for v in values.tolist())
    if fmt == "csv":
        body = "value\n" + body
    return body.encode("ascii")


def read_values(data: bytes, fmt: str) -> np.ndarray:
    """Inverse of :func:`format_values`."""
    if fmt == "f64le":
        return np.frombuffer(data, dtype="<f8").copy()
    lines = data.decode("ascii").splitlines()
    if fmt == "csv":
        lines = lines[1:]
    return np.array([float(s) for s in lines])


def _write(path: str, payload: bytes) -> None:
    if path == "-":
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(payload)


def _params_label(params: Params) -> str:
    d = {f.name: getattr(params, f.name) for f in fields(params)}
    return " ".join(f"{k}={v:g}" for k, v in d.items())


# -- commands -----------------------------------------------------------------------


def cmd_sample(config: RunConfig) -> int:
    params = config.params[0]
    t0 = time.perf_counter()
    batch = sample_batch(params, config.n, config.seed, config.backend, config.workers)
    wall = time.perf_counter() - t0
    _write(config.output, format_values(batch.values, config.format))
    meta = {
        "params": batch.meta["params"],
        "n": config.n,
        "seed": config.seed,
        "workers": config.workers,
        "backend": batch.meta["backend"],
        "acceptance_rates": batch.acceptance_rates(),
        "wall_time_s": round(wall, 6),
    }
    print(json.dumps(meta), file=sys.stderr)
    return EXIT_OK


def cmd_validate(config: RunConfig) -> int:
    lines = []
    failures = []
    for i, params in enumerate(config.params):
        report = validation_suite(
            params, config.n, (config.seed + i) & SEED_MAX, config.backend, config.workers, config.inject_mismatch
        )
        lines.append(report.to_jsonl())
        failures += [(params, rec) for rec in report.failures()]
    _write(config.output, "".join(line + "\n" for line in lines).encode())
    for params, rec in failures:
        print(f"FAIL [{_params_label(params)}] {rec.name}: statistic={rec.statistic:.6g} threshold={rec.threshold:.6g}", file=sys.stderr)
    return EXIT_FAIL if failures else EXIT_OK


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def bench_point(params: Params, n: int, seed: int, backend: TtsBackendChoice, workers: int) -> list:
    """Rows of (stage, draws/s, mean proposals per accepted draw, acceptance rate, expected rate)."""
    rows = []
    a, p = params.alpha, params.p
    if a >= 0:
        for stage, draw, expected in (
            ("f1", f1_many, acceptance_rate_f1(a, p)),
            ("f2", f2_many, acceptance_rate_f2(a, p)),
        ):
            rng = RngStream(seed, 0)
            _, dt = _timed(lambda: draw(a, p, n, rng))
            acc = rng.acceptance(stage)
            rows.append({"stage": stage, "workers": 1, "draws_per_s": n / dt, "iterations_per_draw": 1.0 / acc.rate,
                         "acceptance_rate": acc.rate, "expected_rate": expected})
        c_unit = params.C * params.b**a if isinstance(params, RdtsParams) else params.positive.C * params.b**a
        if c_unit > 0:
            rng = RngStream(seed, 0)
            n_tts = max(1, n // 10)
            _, dt = _timed(lambda: tts_many(a, c_unit, backend, n_tts, rng))
            rows.append({"stage": "tts", "workers": 1, "draws_per_s": n_tts / dt,
                         "iterations_per_draw": rng.counters()["tts_iterations"] / n_tts})
    worker_counts = sorted({1, workers})
    for w in worker_counts:
        batch, dt = _timed(lambda: sample_batch(params, n, seed, backend, w))
        rows.append({"stage": "rdts", "workers": w, "draws_per_s": n / dt, "mean": float(np.mean(batch.values)),
                     "var": float(np.var(batch.values))})
    return rows


def cmd_bench(config: RunConfig) -> int:
    table = []
    for params in config.params:
        for row in bench_point(params, config.n, config.seed, config.backend, config.workers):
            table.append({"params": _params_label(params), **row})
    if config.output != "-":
        _write(config.output, json.dumps(table, indent=1).encode())
        return EXIT_OK
    out = sys.stdout
    out.write(f"{'params':<44} {'stage':<6} {'workers':>7} {'draws/s':>12} {'iter/draw':>10} {'accept':>8} {'expected':>8}\n")
    for r in table:
        it = f"{r['iterations_per_draw']:.4f}" if "iterations_per_draw" in r else "-"
        acc = f"{r['acceptance_rate']:.4f}" if "acceptance_rate" in r else "-"
        exp = f"{r['expected_rate']:.4f}" if "expected_rate" in r else "-"
        out.write(f"{r['params']:<44} {r['stage']:<6} {r['workers']:>7} {r['draws_per_s']:>12.0f} {it:>10} {acc:>8} {exp:>8}\n")
    out.write(f"uniform acceptance bounds: f1 >= {F1_BOUND:.5f}, f2 >= {F2_BOUND:.5f}\n")
    return EXIT_OK


COMMANDS = {"sample": cmd_sample, "validate": cmd_validate, "bench": cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        config = config_from_args(args)
    except (UsageError, DomainError, ValueError) as exc:
        print(f"prdts {args.mode}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"prdts {args.mode}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return COMMANDS[config.mode](config)
    except OSError as exc:
        print(f"prdts {config.mode}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except QuadratureError as exc:
        # an oracle that cannot be evaluated is a failed check, not a crash
        print(f"prdts {config.mode}: numerical error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
