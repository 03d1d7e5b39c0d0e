"""Monte Carlo experiment runner.

An :class:`ExperimentConfig` sweeps one model parameter over a grid. For each
grid point and replication a single instance is simulated and shared by all
methods; each method estimates (Pi, Theta) with the true K and, separately,
selects K by modularity. One CSV row is written per (point, rep, method), in
that order, whatever the degree of parallelism.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import BundleFormatError, ConfigError, MLGoMError
from .estimators import METHODS, estimate
from .metrics import MetricRecord, relative_l1_error, relative_l2_error
from .model import InstanceConfig, generate_experiment_instance
from .selection import select_num_classes

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "experiment", "point_param", "point_value", "rep", "method",
    "rel_l1", "rel_l2", "k_true", "k_selected", "q_at_selected", "wall_ms",
)

SWEEPABLE = ("N", "J", "K", "L", "M", "N0", "rho")

# Parameters that may be given as a rule relative to other parameters.
RULES = {
    "N": {"100*K": lambda p: 100 * p["K"]},
    "J": {"N/5": lambda p: _exact_div(p["N"], 5, "J = N/5")},
    "N0": {
        "N/5": lambda p: _exact_div(p["N"], 5, "N0 = N/5"),
        "N/K": lambda p: _exact_div(p["N"], p["K"], "N0 = N/K"),
    },
}


def _exact_div(a: int, b: int, what: str) -> int:
    if a % b:
        raise ConfigError(f"{what} needs N divisible by {b}, got N={a}")
    return a // b


Param = Union[int, float, str]


@dataclass
class ExperimentConfig:
    experiment: str
    param: str
    values: list
    N: Param = 500
    J: Param = "N/5"
    K: Param = 3
    L: Param = 5
    M: Param = 5
    N0: Param = "N/5"
    rho: Param = 0.2
    reps: int = 50
    kc: int = 8
    seed_base: int = 0
    methods: tuple = METHODS

    def __post_init__(self):
        self.values = list(self.values)
        self.methods = tuple(self.methods)
        if self.param not in SWEEPABLE:
            raise ConfigError(f"swept parameter must be one of {SWEEPABLE}, got {self.param!r}")
        if not self.values:
            raise ConfigError("value grid is empty")
        if self.reps < 1:
            raise ConfigError(f"reps must be at least 1, got {self.reps}")
        if self.kc < 0:
            raise ConfigError(f"kc must be non-negative, got {self.kc}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}, got {list(self.methods)}")
        for name in SWEEPABLE:
            v = getattr(self, name)
            if isinstance(v, str) and v not in RULES.get(name, {}):
                raise ConfigError(f"unknown rule {v!r} for {name}; known: {sorted(RULES.get(name, {}))}")
        for v in self.values:
            self.instance(v)

    def instance(self, value) -> InstanceConfig:
        """Resolve every parameter at one grid value."""
        p = {name: getattr(self, name) for name in SWEEPABLE}
        p[self.param] = value
        for name in ("K", "L", "M", "rho", "N", "J", "N0"):
            v = p[name]
            if isinstance(v, str):
                p[name] = RULES[name][v](p)
        for name in ("N", "J", "K", "L", "M", "N0"):
            if float(p[name]) != int(p[name]):
                raise ConfigError(f"{name} must be an integer, got {p[name]}")
            p[name] = int(p[name])
        p["rho"] = float(p["rho"])
        cfg = InstanceConfig(seed_base=self.seed_base, **p)
        if cfg.N0 < 1 or cfg.N0 * cfg.K > cfg.N:
            raise ConfigError(f"need 1 <= N0 and N0*K <= N, got N0={cfg.N0}, K={cfg.K}, N={cfg.N}")
        if cfg.K > min(cfg.N, cfg.J):
            raise ConfigError(f"K={cfg.K} exceeds min(N, J) = {min(cfg.N, cfg.J)}")
        if self.kc > min(cfg.N, cfg.J):
            raise ConfigError(f"kc={self.kc} exceeds min(N, J) = {min(cfg.N, cfg.J)}")
        if not 0 < cfg.rho <= cfg.M:
            raise ConfigError(f"rho={cfg.rho} must lie in (0, M={cfg.M}]")
        return cfg

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)


def _grid(start, stop, step):
    n = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(n)]


def _presets() -> dict[str, ExperimentConfig]:
    sparse_dense = {"sparse": 0.2, "dense": 5.0}
    out = {}
    for regime, rho in sparse_dense.items():
        out[f"exp1-{regime}"] = ExperimentConfig(
            f"exp1-{regime}", "N", list(range(100, 1001, 100)), L=5, N0="N/5", K=3, rho=rho)
        out[f"exp2-{regime}"] = ExperimentConfig(
            f"exp2-{regime}", "L", list(range(1, 11)), N=500, N0=100, K=3, rho=rho)
        out[f"exp4-{regime}"] = ExperimentConfig(
            f"exp4-{regime}", "N0", list(range(20, 201, 20)), N=600, L=10, K=3, rho=rho)
    out["exp3-sparse"] = ExperimentConfig(
        "exp3-sparse", "rho", _grid(0.05, 0.5, 0.05), N=500, L=5, N0=100, K=3)
    out["exp3-dense"] = ExperimentConfig(
        "exp3-dense", "rho", _grid(0.5, 5.0, 0.5), N=500, L=5, N0=100, K=3)
    for regime, rho in {"sparse": 0.5, "dense": 5.0}.items():
        out[f"exp5-{regime}"] = ExperimentConfig(
            f"exp5-{regime}", "K", list(range(1, 9)), N="100*K", N0="N/K", L=5, rho=rho)
    return dict(sorted(out.items()))


PRESETS = _presets()


def preset(name: str) -> ExperimentConfig:
    try:
        return dataclasses.replace(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from a JSON file."""
    path = Path(path)
    text = path.read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BundleFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    if "preset" in d:
        base = preset(d.pop("preset")).to_dict()
        base.update(d)
        d = base
    try:
        return ExperimentConfig.from_dict(d)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


@dataclass
class ResultRow:
    experiment: str
    point_param: str
    point_value: float
    rep: int
    method: str
    rel_l1: float
    rel_l2: float
    k_true: int
    k_selected: Optional[int]
    q_at_selected: Optional[float]
    wall_ms: Optional[float]

    def to_record(self) -> MetricRecord:
        return MetricRecord(
            self.rel_l1, self.rel_l2, -1 if self.k_selected is None else self.k_selected,
            self.k_true, self.method,
            {"experiment": self.experiment, self.point_param: self.point_value, "rep": self.rep},
        )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    return str(v)


def _fmt_float(v) -> str:
    return "" if v is None else repr(float(v))


def row_to_csv(row: ResultRow) -> list[str]:
    return [
        row.experiment, row.point_param, _fmt(row.point_value), str(row.rep), row.method,
        _fmt_float(row.rel_l1), _fmt_float(row.rel_l2), str(row.k_true), _fmt(row.k_selected),
        _fmt_float(row.q_at_selected), "" if row.wall_ms is None else f"{row.wall_ms:.3f}",
    ]


@dataclass
class ExperimentResult:
    rows: list[ResultRow] = field(default_factory=list)
    config: Optional[ExperimentConfig] = None

    def __len__(self):
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(row_to_csv(r))
        return buf.getvalue()

    def methods(self) -> list[str]:
        return list(dict.fromkeys(r.method for r in self.rows))

    def points(self) -> list[float]:
        return list(dict.fromkeys(r.point_value for r in self.rows))

    def mean(self, metric: str, method: str, point) -> float:
        """Mean of a metric over reps at one point; failed reps (nan) are skipped."""
        vals = [getattr(r, metric) for r in self.rows if r.method == method and r.point_value == point]
        vals = [v for v in vals if v is not None and not math.isnan(v)]
        return float(np.mean(vals)) if vals else float("nan")

    def accuracy(self, method: str, point) -> float:
        rows = [r for r in self.rows if r.method == method and r.point_value == point and r.k_selected is not None]
        if not rows:
            return float("nan")
        return sum(r.k_selected == r.k_true for r in rows) / len(rows)

    def summary(self) -> list[dict]:
        out = []
        for point in self.points():
            for m in self.methods():
                out.append({
                    "point_value": point, "method": m,
                    "rel_l1": self.mean("rel_l1", m, point),
                    "rel_l2": self.mean("rel_l2", m, point),
                    "accuracy": self.accuracy(m, point),
                })
        return out


def _parse_float(s: str) -> Optional[float]:
    return None if s == "" else float(s)


def read_results_csv(path) -> ExperimentResult:
    """Parse a results CSV written by :func:`run_experiment`."""
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise BundleFormatError(f"{path}:1: expected header {','.join(CSV_COLUMNS)}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(CSV_COLUMNS):
                raise BundleFormatError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields, got {len(rec)}")
            d = dict(zip(CSV_COLUMNS, rec))
            try:
                rows.append(ResultRow(
                    d["experiment"], d["point_param"], float(d["point_value"]), int(d["rep"]), d["method"],
                    float(d["rel_l1"]), float(d["rel_l2"]), int(d["k_true"]),
                    None if d["k_selected"] == "" else int(d["k_selected"]),
                    float(d["q_at_selected"]) if d["q_at_selected"] else float("nan"),
                    _parse_float(d["wall_ms"]),
                ))
            except ValueError as exc:
                raise BundleFormatError(f"{path}:{lineno}: {exc}") from None
    return ExperimentResult(rows)


def default_threads() -> int:
    env = os.environ.get("MLGOM_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"MLGOM_THREADS must be an integer, got {env!r}") from None
        return max(1, min(n, cpus)) if n > 0 else cpus
    return cpus


def run_replication(cfg: ExperimentConfig, value, rep: int, timing: bool = True) -> list[ResultRow]:
    """Simulate one instance and evaluate every configured method on it."""
    inst = cfg.instance(value)
    params, R = generate_experiment_instance(inst, rep)
    rows = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        rel_l1 = rel_l2 = float("nan")
        k_sel = q = None
        try:
            res = estimate(R, inst.K, method)
            rel_l1 = relative_l1_error(res.Pi_hat, params.Pi)
            rel_l2 = relative_l2_error(res.Theta_hat, params.Theta)
        except (MLGoMError, np.linalg.LinAlgError) as exc:
            log.warning("%s %s=%s rep %d: %s failed: %s", cfg.experiment, cfg.param, value, rep, method, exc)
        if cfg.kc:
            report = select_num_classes(R, cfg.kc, method)
            k_sel, q = report.selected_k, report.q_at_selected
        wall = (time.perf_counter() - t0) * 1000.0 if timing else None
        rows.append(ResultRow(
            cfg.experiment, cfg.param, value, rep, method,
            rel_l1, rel_l2, inst.K, k_sel, q, wall,
        ))
    return rows


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: Optional[int] = None,
                   timing: bool = True, progress: bool = False) -> ExperimentResult:
    """Run every (point, rep) of ``cfg``.

    With ``out_dir`` the config is saved as ``config.json`` and rows are
    appended to ``results.csv`` as soon as all earlier rows are done. The seed
    of replication ``rep`` is ``cfg.seed_base + rep`` at every grid point, so
    results do not depend on ``threads``. ``timing=False`` leaves the
    ``wall_ms`` column empty, making the CSV byte-reproducible.
    """
    threads = default_threads() if threads is None else max(1, threads)
    tasks = [(v, rep) for v in cfg.values for rep in range(cfg.reps)]
    result = ExperimentResult(config=cfg)
    fh = writer = None
    if out_dir is not None:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
            fh = (out / "results.csv").open("w", newline="")
        except OSError as exc:
            raise OSError(f"cannot write to output directory {out}: {exc}") from exc
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)

    def job(task):
        return run_replication(cfg, task[0], task[1], timing)

    def consume(stream: Iterable):
        for i, rows in enumerate(stream, start=1):
            result.rows.extend(rows)
            if writer is not None:
                writer.writerows(row_to_csv(r) for r in rows)
                fh.flush()
            if progress:
                log.info("%s: %d/%d replications done", cfg.experiment, i, len(tasks))

    try:
        if threads == 1:
            consume(map(job, tasks))
        else:
            # map() yields in submission order, so rows land in (point, rep, method) order
            with ThreadPoolExecutor(max_workers=threads) as pool:
                consume(pool.map(job, tasks))
    finally:
        if fh is not None:
            fh.close()
    return result
