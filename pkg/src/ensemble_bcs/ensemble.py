"""Penalty-ensemble recovery: one QUBO per penalty value, per-bit majority vote."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .model import BcsInstance
from .qubo import build_qubo
from .samplers import Sample, SampleSet, Sampler, descend_all, tie_tolerance


class Aggregation(str, Enum):
    BEST_PER_LAMBDA = "best_per_lambda"
    ALL_READS_WEIGHTED = "all_reads_weighted"


class TiePolicy(str, Enum):
    ROUND_DOWN = "round_down"
    ROUND_UP = "round_up"


@dataclass(frozen=True)
class EnsembleConfig:
    lambdas: tuple
    aggregation_source: Aggregation = Aggregation.BEST_PER_LAMBDA
    tie_policy: TiePolicy = TiePolicy.ROUND_DOWN

    def __post_init__(self):
        lams = tuple(float(v) for v in self.lambdas)
        if not lams:
            raise ValueError("lambdas must be non-empty")
        if any(v < 0 for v in lams):
            raise ValueError("lambdas must be nonnegative")
        if len(set(lams)) != len(lams):
            raise ValueError("lambdas must be distinct")
        object.__setattr__(self, "lambdas", tuple(sorted(lams)))
        object.__setattr__(self, "aggregation_source", Aggregation(self.aggregation_source))
        object.__setattr__(self, "tie_policy", TiePolicy(self.tie_policy))

    @property
    def label(self) -> str:
        return "Λ={" + ",".join(f"{v:g}" for v in self.lambdas) + "}"


@dataclass(frozen=True)
class EnsembleResult:
    x_hat: tuple
    per_lambda: tuple  # of (lambda, Sample)
    bit_means: tuple
    aggregation_source: Aggregation = Aggregation.BEST_PER_LAMBDA

    def to_dict(self) -> dict:
        return {
            "x_hat": list(self.x_hat),
            "bit_means": list(self.bit_means),
            "aggregation_source": Aggregation(self.aggregation_source).value,
            "per_lambda": [
                {"lambda": lam, "x": list(s.x), "energy": s.energy} for lam, s in self.per_lambda
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def best_sample(samples: SampleSet) -> Sample:
    """Lowest energy; near-ties go to the sparsest, then lexicographically smallest."""
    e_min = samples.first.energy
    tied = [s for s in samples if s.energy <= e_min + tie_tolerance(e_min)]
    return min(tied, key=lambda s: (sum(s.x), s.x))


def sample_lambda(
    inst: BcsInstance, lam: float, sampler: Sampler, post_process: bool, seed=None
) -> SampleSet:
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    q = build_qubo(inst, lam)
    samples = sampler.sample(q, seed=seed)
    if post_process:
        samples = descend_all(q, samples)
    return samples


def recover_single(
    inst: BcsInstance, lam: float, sampler: Sampler, post_process: bool = False, seed=None
) -> Sample:
    return best_sample(sample_lambda(inst, lam, sampler, post_process, seed))


def round_means(bit_means: np.ndarray, tie_policy: TiePolicy) -> np.ndarray:
    if TiePolicy(tie_policy) is TiePolicy.ROUND_UP:
        return (bit_means >= 0.5).astype(np.int8)
    return (bit_means > 0.5).astype(np.int8)


def aggregate(inst: BcsInstance, sets: dict, cfg: EnsembleConfig) -> EnsembleResult:
    """Fold per-lambda sample sets (keyed by lambda) into an ensemble estimate."""
    per_lambda = tuple((lam, best_sample(sets[lam])) for lam in cfg.lambdas)
    if cfg.aggregation_source is Aggregation.BEST_PER_LAMBDA:
        bits = np.array([s.x for _, s in per_lambda], dtype=np.int64)
        # exact integer counts keep the means on the 1/|Λ| grid
        means = bits.sum(axis=0) / len(per_lambda)
    else:
        total = np.zeros(inst.n_vars, dtype=np.int64)
        reads = 0
        for lam in cfg.lambdas:
            ss = sets[lam]
            total += (ss.array().astype(np.int64) * ss.occurrences()[:, None]).sum(axis=0)
            reads += ss.total_reads
        means = total / reads
    x_hat = round_means(means, cfg.tie_policy)
    return EnsembleResult(
        tuple(int(b) for b in x_hat),
        per_lambda,
        tuple(float(v) for v in means),
        cfg.aggregation_source,
    )


def recover_ensemble(
    inst: BcsInstance, cfg: EnsembleConfig, sampler: Sampler, post_process: bool = False, seed=None
) -> EnsembleResult:
    sets = {lam: sample_lambda(inst, lam, sampler, post_process, seed) for lam in cfg.lambdas}
    return aggregate(inst, sets, cfg)


def majority(recoveries: Sequence, tie_policy: TiePolicy = TiePolicy.ROUND_DOWN) -> tuple:
    """Per-bit majority of already-recovered bit vectors."""
    means = np.asarray(recoveries, dtype=np.int64).sum(axis=0) / len(recoveries)
    return tuple(int(b) for b in round_means(means, tie_policy))
