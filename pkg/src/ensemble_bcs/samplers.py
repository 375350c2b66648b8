"""Low-energy samplers for :class:`~ensemble_bcs.qubo.Qubo` problems.

Three routes are provided:

* :func:`solve_exact` enumerates every assignment (Gray-code order) and
  returns the full set of ground states.
* :func:`solve_sa` runs independent single-bit Metropolis annealing reads
  under a geometric inverse-temperature schedule.
* :func:`descend` is a greedy steepest-descent repair used as a
  post-processing step on annealer output.

All heavy loops are numba kernels. Each annealing read owns an RNG stream
derived from ``seed ^ read_index`` (splitmix64), so results do not depend on
how reads are scheduled across threads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Optional, Protocol, Sequence

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

from .model import as_bits
from .qubo import Qubo, energy

EXACT_CAP = 25

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_U63 = np.uint64(63)
_INV53 = 1.0 / 9007199254740992.0


class CapacityError(ValueError):
    """Raised when a problem exceeds what a sampler can handle."""


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _U30)) * _MIX1
    z = (z ^ (z >> _U27)) * _MIX2
    return z ^ (z >> _U31)


@njit(cache=True, inline="always")
def _next(state):
    state = state + _GOLDEN
    return state, _mix64(state)


@njit(cache=True)
def _local_fields(w, x):
    n = x.shape[0]
    h = np.zeros(n)
    for j in range(n):
        if x[j]:
            for i in range(n):
                h[i] += w[i, j]
    return h


@njit(cache=True, parallel=True)
def _anneal(diag, w, betas, seed, num_reads, out_x, out_e):
    n = diag.shape[0]
    for r in prange(num_reads):
        state = _mix64(seed ^ np.uint64(r))
        x = np.empty(n, dtype=np.int8)
        for i in range(n):
            state, z = _next(state)
            x[i] = np.int8(z >> _U63)
        h = _local_fields(w, x)
        e = 0.0
        for i in range(n):
            if x[i]:
                e += diag[i] + 0.5 * h[i]
        best_e = e
        best = x.copy()
        for s in range(betas.shape[0]):
            beta = betas[s]
            for i in range(n):
                d = diag[i] + h[i]
                if x[i]:
                    d = -d
                accept = d <= 0.0
                if not accept:
                    state, z = _next(state)
                    u = np.float64(z >> _U11) * _INV53
                    accept = u < np.exp(-beta * d)
                if accept:
                    step = 1.0 - 2.0 * x[i]
                    x[i] = 1 - x[i]
                    for j in range(n):
                        h[j] += w[j, i] * step
                    e += d
                    if e < best_e:
                        best_e = e
                        best[:] = x
        out_x[r, :] = best
        out_e[r] = best_e


@njit(cache=True)
def _descend_inplace(diag, w, x, eps):
    n = x.shape[0]
    h = _local_fields(w, x)
    while True:
        best_d = -eps
        best_i = -1
        for i in range(n):
            d = diag[i] + h[i]
            if x[i]:
                d = -d
            if d < best_d:
                best_d = d
                best_i = i
        if best_i < 0:
            return
        step = 1.0 - 2.0 * x[best_i]
        x[best_i] = 1 - x[best_i]
        for j in range(n):
            h[j] += w[j, best_i] * step


@njit(cache=True)
def _descend_rows(diag, w, xs, eps):
    for r in range(xs.shape[0]):
        _descend_inplace(diag, w, xs[r], eps)


@njit(cache=True)
def _trailing_zeros(t):
    c = 0
    while (t & 1) == 0:
        t >>= 1
        c += 1
    return c


@njit(cache=True)
def _gray_scan(diag, w, threshold, collect, out):
    """Walk all 2^n states in Gray-code order.

    Returns the minimum energy seen. When ``collect`` is set, writes the codes
    of states with energy <= threshold into ``out`` and returns their count
    as the second value.
    """
    n = diag.shape[0]
    x = np.zeros(n, dtype=np.int8)
    h = np.zeros(n)
    e = 0.0
    code = np.int64(0)
    best = 0.0
    count = 0
    if collect and e <= threshold:
        if count < out.shape[0]:
            out[count] = code
        count += 1
    total = np.int64(1) << n
    for t in range(1, total):
        i = _trailing_zeros(t)
        d = diag[i] + h[i]
        if x[i]:
            d = -d
        step = 1.0 - 2.0 * x[i]
        x[i] = 1 - x[i]
        code ^= np.int64(1) << i
        for j in range(n):
            h[j] += w[j, i] * step
        e += d
        if e < best:
            best = e
        if collect and e <= threshold:
            if count < out.shape[0]:
                out[count] = code
            count += 1
    return best, count


def set_threads(n: int) -> int:
    """Set the numba thread count, clamped to what the runtime allows."""
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def _energy_scale(q: Qubo) -> float:
    return max(1.0, float(np.abs(q.coeffs).sum()))


def tie_tolerance(energy_value: float) -> float:
    """Energies closer than this to ``energy_value`` are treated as ties."""
    return 1e-9 * max(1.0, abs(energy_value))


@dataclass(frozen=True)
class Sample:
    x: tuple
    energy: float
    occurrences: int = 1

    @property
    def bits(self) -> np.ndarray:
        return np.array(self.x, dtype=np.int8)

    def to_dict(self) -> dict:
        return {"x": list(self.x), "energy": self.energy, "occurrences": self.occurrences}

    @classmethod
    def from_dict(cls, doc: dict) -> "Sample":
        return cls(tuple(int(b) for b in doc["x"]), float(doc["energy"]), int(doc["occurrences"]))


@dataclass(frozen=True)
class SampleSet:
    """Distinct samples sorted by (energy, bit vector), with read counts."""

    samples: tuple
    total_reads: int

    @classmethod
    def from_array(cls, q: Qubo, xs: np.ndarray, counts: Optional[np.ndarray] = None) -> "SampleSet":
        xs = np.asarray(xs, dtype=np.int8).reshape(-1, q.n_vars)
        if counts is None:
            counts = np.ones(xs.shape[0], dtype=np.int64)
        uniq, inverse = np.unique(xs, axis=0, return_inverse=True)
        occ = np.zeros(uniq.shape[0], dtype=np.int64)
        np.add.at(occ, inverse.ravel(), np.asarray(counts, dtype=np.int64))
        xf = uniq.astype(np.float64)
        energies = np.einsum("ri,ij,rj->r", xf, q.coeffs, xf)
        keys = [uniq[:, c] for c in range(q.n_vars - 1, -1, -1)] + [energies]
        order = np.lexsort(keys)
        samples = tuple(
            Sample(tuple(int(b) for b in uniq[r]), float(energies[r]), int(occ[r])) for r in order
        )
        return cls(samples, int(occ.sum()))

    @property
    def first(self) -> Sample:
        return self.samples[0]

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def array(self) -> np.ndarray:
        return np.array([s.x for s in self.samples], dtype=np.int8)

    def occurrences(self) -> np.ndarray:
        return np.array([s.occurrences for s in self.samples], dtype=np.int64)

    def to_dict(self) -> dict:
        return {"total_reads": self.total_reads, "samples": [s.to_dict() for s in self.samples]}

    @classmethod
    def from_dict(cls, doc: dict) -> "SampleSet":
        return cls(tuple(Sample.from_dict(s) for s in doc["samples"]), int(doc["total_reads"]))


def solve_exact(q: Qubo) -> SampleSet:
    """All minimum-energy assignments of ``q``, each with one occurrence."""
    n = q.n_vars
    if n > EXACT_CAP:
        raise CapacityError(f"exact solver is capped at {EXACT_CAP} variables, got {n}")
    diag = np.ascontiguousarray(q.linear)
    w = np.ascontiguousarray(q.coupling_matrix())
    tol = 1e-9 * _energy_scale(q)
    scratch = np.empty(0, dtype=np.int64)
    best, _ = _gray_scan(diag, w, 0.0, False, scratch)
    threshold = best + tol
    _, count = _gray_scan(diag, w, threshold, True, scratch)
    codes = np.empty(count, dtype=np.int64)
    _gray_scan(diag, w, threshold, True, codes)

    xs = ((codes[:, None] >> np.arange(n)) & 1).astype(np.int8)
    xf = xs.astype(np.float64)
    exact = np.einsum("ri,ij,rj->r", xf, q.coeffs, xf)
    keep = exact <= exact.min() + tol
    return SampleSet.from_array(q, xs[keep])


def default_beta_final(q: Qubo, beta_initial: float = 0.1) -> float:
    """``10 / median |nonzero coefficient|``, never below ``beta_initial``."""
    mags = np.abs(q.coeffs[q.coeffs != 0])
    if mags.size == 0:
        return beta_initial
    return max(beta_initial, 10.0 / float(np.median(mags)))


@dataclass(frozen=True)
class SaConfig:
    """Simulated annealing settings.

    ``beta_final=None`` selects :func:`default_beta_final` for each Qubo.
    """

    num_reads: int = 1000
    sweeps_per_read: int = 1000
    beta_initial: float = 0.1
    beta_final: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1:
            raise ValueError("num_reads must be >= 1")
        if self.sweeps_per_read < 1:
            raise ValueError("sweeps_per_read must be >= 1")
        if not self.beta_initial > 0:
            raise ValueError("beta_initial must be positive")
        if self.beta_final is not None and self.beta_final < self.beta_initial:
            raise ValueError("beta_final must be >= beta_initial")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def schedule(self, q: Qubo) -> np.ndarray:
        beta_final = self.beta_final
        if beta_final is None:
            beta_final = default_beta_final(q, self.beta_initial)
        return np.geomspace(self.beta_initial, beta_final, self.sweeps_per_read)


def solve_sa(q: Qubo, cfg: SaConfig = SaConfig()) -> SampleSet:
    n = q.n_vars
    diag = np.ascontiguousarray(q.linear)
    w = np.ascontiguousarray(q.coupling_matrix())
    out_x = np.empty((cfg.num_reads, n), dtype=np.int8)
    out_e = np.empty(cfg.num_reads)
    _anneal(diag, w, cfg.schedule(q), np.uint64(cfg.seed), cfg.num_reads, out_x, out_e)
    return SampleSet.from_array(q, out_x)


def descend(q: Qubo, x) -> Sample:
    """Steepest single-bit-flip descent to a 1-flip local minimum.

    Equal decreases are resolved toward the lowest index.
    """
    bits = as_bits(x, q.n_vars).copy()
    _descend_inplace(
        np.ascontiguousarray(q.linear),
        np.ascontiguousarray(q.coupling_matrix()),
        bits,
        1e-12 * _energy_scale(q),
    )
    return Sample(tuple(int(b) for b in bits), energy(q, bits), 1)


def descend_all(q: Qubo, samples: SampleSet) -> SampleSet:
    """Apply :func:`descend` to every distinct sample and re-merge."""
    xs = samples.array().copy()
    _descend_rows(
        np.ascontiguousarray(q.linear),
        np.ascontiguousarray(q.coupling_matrix()),
        xs,
        1e-12 * _energy_scale(q),
    )
    return SampleSet.from_array(q, xs, samples.occurrences())


class Sampler(Protocol):
    name: str

    def sample(self, q: Qubo, reads: Optional[int] = None, seed: Optional[int] = None) -> SampleSet:
        ...


class ExactSampler:
    """Ground-state enumeration; ``reads`` and ``seed`` are ignored."""

    name = "exact"

    def sample(self, q, reads=None, seed=None):
        return solve_exact(q)

    def describe(self) -> dict:
        return {"sampler": self.name}


@dataclass(frozen=True)
class SimulatedAnnealingSampler:
    config: SaConfig = field(default_factory=SaConfig)
    name = "sa"

    def sample(self, q, reads=None, seed=None):
        cfg = self.config
        if reads is not None:
            cfg = replace(cfg, num_reads=reads)
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        return solve_sa(q, cfg)

    def describe(self) -> dict:
        c = self.config
        return {
            "sampler": self.name,
            "num_reads": c.num_reads,
            "sweeps_per_read": c.sweeps_per_read,
            "beta_initial": c.beta_initial,
            "beta_final": "auto" if c.beta_final is None else c.beta_final,
        }


def make_sampler(name: str, reads: int = 1000, sweeps: int = 1000, seed: int = 0) -> Sampler:
    if name == "exact":
        return ExactSampler()
    if name == "sa":
        return SimulatedAnnealingSampler(SaConfig(num_reads=reads, sweeps_per_read=sweeps, seed=seed))
    raise ValueError(f"unknown sampler {name!r}")


__all__: Sequence[str] = [
    "CapacityError",
    "EXACT_CAP",
    "ExactSampler",
    "Sample",
    "SampleSet",
    "SaConfig",
    "Sampler",
    "SimulatedAnnealingSampler",
    "default_beta_final",
    "descend",
    "descend_all",
    "make_sampler",
    "set_threads",
    "solve_exact",
    "solve_sa",
]
