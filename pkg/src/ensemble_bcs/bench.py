"""Random benchmark instances, penalty sweeps and recovery-statistics reports."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .ensemble import EnsembleConfig, aggregate, best_sample, sample_lambda
from .model import BcsInstance, recovery_error, sparsity
from .qubo import build_qubo

log = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (12.0, 14.0, 16.0, 18.0, 20.0)
DEFAULT_ENSEMBLE = (12.0, 16.0, 20.0)
MANIFEST = "manifest.json"


class ProtocolError(ValueError):
    """Raised when instances cannot be used for the requested experiment."""


class MatrixModel(str, Enum):
    GAUSSIAN_UNIT = "gaussian_unit"
    GAUSSIAN_SCALED = "gaussian_scaled"
    BERNOULLI_PM1 = "bernoulli_pm1"


class LambdaMode(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


@dataclass(frozen=True)
class GenConfig:
    n_vars: int = 60
    m: int = 30
    k: int = 5
    n_instances: int = 50
    matrix_model: MatrixModel = MatrixModel.GAUSSIAN_UNIT
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "matrix_model", MatrixModel(self.matrix_model))
        if self.n_vars < 1 or self.m < 1 or self.n_instances < 1:
            raise ValueError("n_vars, m and n_instances must be positive")
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        if self.k > self.n_vars:
            raise ValueError(f"k exceeds n ({self.k} > {self.n_vars})")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["matrix_model"] = self.matrix_model.value
        return d


def _draw_matrix(rng: np.random.Generator, model: MatrixModel, m: int, n: int) -> np.ndarray:
    if model is MatrixModel.GAUSSIAN_UNIT:
        return rng.standard_normal((m, n))
    if model is MatrixModel.GAUSSIAN_SCALED:
        return rng.standard_normal((m, n)) / np.sqrt(m)
    return rng.choice(np.array([-1.0, 1.0]), size=(m, n))


def generate(cfg: GenConfig) -> list:
    """Draw ``cfg.n_instances`` k-sparse binary problems from one seeded stream."""
    rng = np.random.default_rng(cfg.seed)
    out = []
    for _ in range(cfg.n_instances):
        x = np.zeros(cfg.n_vars, dtype=np.int8)
        x[rng.choice(cfg.n_vars, size=cfg.k, replace=False)] = 1
        a = _draw_matrix(rng, cfg.matrix_model, cfg.m, cfg.n_vars)
        y = a @ x
        if cfg.noise_sigma > 0:
            y = y + rng.normal(0.0, cfg.noise_sigma, size=cfg.m)
        out.append(BcsInstance(a, y, x, cfg.k))
    return out


def save_instances(instances: Sequence[BcsInstance], directory, cfg: Optional[GenConfig] = None) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(len(instances) - 1)))
    paths = []
    for i, inst in enumerate(instances):
        p = directory / f"instance_{i:0{width}d}.json"
        inst.save(p)
        paths.append(p.name)
    manifest = {"gen_config": cfg.to_dict() if cfg else None, "instances": paths}
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")
    return paths


def load_instances(directory) -> tuple:
    """Return ``(instances, manifest)``; falls back to sorted ``*.json`` without a manifest."""
    directory = Path(directory)
    mpath = directory / MANIFEST
    if mpath.exists():
        manifest = json.loads(mpath.read_text())
        names = manifest["instances"]
    else:
        manifest = {"gen_config": None}
        names = sorted(p.name for p in directory.glob("*.json"))
    return [BcsInstance.load(directory / n) for n in names], manifest


def lambda_unit(inst: BcsInstance) -> float:
    """Mean ``|Q_ii|`` at zero penalty; the unit for relative penalty values."""
    return float(np.abs(build_qubo(inst, 0.0).linear).mean())


def effective_lambda(inst: BcsInstance, lam: float, mode: LambdaMode = LambdaMode.ABSOLUTE) -> float:
    if LambdaMode(mode) is LambdaMode.RELATIVE:
        return lam * lambda_unit(inst)
    return lam


def instance_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Stats:
    min: float
    max: float
    mean: float
    var: float

    @classmethod
    def of(cls, values) -> "Stats":
        v = np.asarray(values, dtype=np.float64)
        lo, hi = float(v.min()), float(v.max())
        if lo == hi:
            return cls(lo, hi, lo, 0.0)
        mean = min(max(float(v.mean()), lo), hi)
        # squared subnormal spreads underflow; keep var > 0 for unequal values
        var = max(float(v.var()), float(np.nextafter(0.0, 1.0)))
        return cls(lo, hi, mean, var)


@dataclass(frozen=True)
class ReportRow:
    label: str
    error: Stats
    sparsity: Stats

    def to_dict(self) -> dict:
        return {"label": self.label, "error": asdict(self.error), "sparsity": asdict(self.sparsity)}

    @classmethod
    def from_dict(cls, d: dict) -> "ReportRow":
        return cls(d["label"], Stats(**d["error"]), Stats(**d["sparsity"]))


@dataclass(frozen=True)
class RecoveryReport:
    rows: tuple
    metadata: dict = field(default_factory=dict)

    def row(self, label: str) -> ReportRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "RecoveryReport":
        return cls(tuple(ReportRow.from_dict(r) for r in d["rows"]), d["metadata"])


def lambda_label(lam: float) -> str:
    return f"λ={lam:g}"


def run_sweep(
    instances: Sequence[BcsInstance],
    lambdas: Sequence[float],
    ensemble_cfgs: Sequence[EnsembleConfig],
    sampler,
    post_process: bool,
    *,
    lambda_mode: LambdaMode = LambdaMode.ABSOLUTE,
    seed: int = 0,
    metadata: Optional[dict] = None,
    progress: Optional[Callable[[int, int], None]] = None,
) -> RecoveryReport:
    """Recover every instance at each single penalty and each ensemble.

    Each instance gets its own sampler seed derived from ``seed`` and its
    index; sample sets are shared between single-penalty rows and ensembles
    containing the same penalty value.
    """
    instances = list(instances)
    if not instances:
        raise ProtocolError("no instances")
    shape = (instances[0].m, instances[0].n_vars)
    for i, inst in enumerate(instances):
        if (inst.m, inst.n_vars) != shape:
            raise ProtocolError(f"instance {i} has shape {(inst.m, inst.n_vars)}, expected {shape}")
        if inst.x_true is None:
            raise ProtocolError(f"instance {i} has no x_true; ground truth is required")
    lambdas = [float(v) for v in lambdas]
    mode = LambdaMode(lambda_mode)

    labels = [lambda_label(v) for v in lambdas] + [c.label for c in ensemble_cfgs]
    errors = {lab: [] for lab in labels}
    sparsities = {lab: [] for lab in labels}
    needed = sorted(set(lambdas).union(*(c.lambdas for c in ensemble_cfgs)))

    for idx, inst in enumerate(instances):
        s = instance_seed(seed, idx)
        sets = {
            lam: sample_lambda(inst, effective_lambda(inst, lam, mode), sampler, post_process, s)
            for lam in needed
        }
        recovered = [(lambda_label(lam), best_sample(sets[lam]).x) for lam in lambdas]
        recovered += [(c.label, aggregate(inst, sets, c).x_hat) for c in ensemble_cfgs]
        for lab, x in recovered:
            errors[lab].append(recovery_error(inst.x_true, x))
            sparsities[lab].append(sparsity(x))
        if progress is not None:
            progress(idx + 1, len(instances))
        log.debug("instance %d/%d done", idx + 1, len(instances))

    rows = tuple(ReportRow(lab, Stats.of(errors[lab]), Stats.of(sparsities[lab])) for lab in labels)
    ks = sorted({int(inst.x_true.sum()) for inst in instances})
    meta = {
        "m": shape[0],
        "n_vars": shape[1],
        "k": ks[0] if len(ks) == 1 else ks,
        "n_instances": len(instances),
        "sampler": sampler.describe() if hasattr(sampler, "describe") else getattr(sampler, "name", "?"),
        "post_process": bool(post_process),
        "lambda_mode": mode.value,
        "aggregation": {c.label: c.aggregation_source.value for c in ensemble_cfgs},
        "tie_policy": {c.label: c.tie_policy.value for c in ensemble_cfgs},
        "seed": seed,
        "variance": "population",
    }
    meta.update(metadata or {})
    return RecoveryReport(rows, meta)


CSV_HEADER = ["label", "err_min", "err_max", "err_mean", "err_var", "sp_min", "sp_max", "sp_mean", "sp_var"]


def _g(v: float) -> str:
    return f"{v:.6g}"


def _cells(row: ReportRow) -> list:
    e, s = row.error, row.sparsity
    return [row.label] + [_g(v) for v in (e.min, e.max, e.mean, e.var, s.min, s.max, s.mean, s.var)]


def emit_report(report: RecoveryReport, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in report.rows:
            writer.writerow(_cells(row))
        return buf.getvalue()
    if fmt == "markdown":
        md = report.metadata
        lines = [
            f"m={md.get('m')}, N={md.get('n_vars')}, k={md.get('k')}, "
            f"instances={md.get('n_instances')}, variance={md.get('variance', 'population')}",
            "",
            "| penalty | err min | err max | err mean | err var | sp min | sp max | sp mean | sp var |",
            "|---|---|---|---|---|---|---|---|---|",
        ]
        lines += ["| " + " | ".join(_cells(row)) + " |" for row in report.rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")
