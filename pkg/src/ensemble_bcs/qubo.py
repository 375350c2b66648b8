"""Upper-triangular QUBO matrices and the cast from a penalized BCS problem."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import BcsInstance, as_bits


@dataclass(frozen=True, eq=False)
class Qubo:
    """QUBO with energy ``sum_{i<=j} x_i Q_ij x_j``.

    ``coeffs`` is stored as a dense upper-triangular matrix; the strictly
    lower triangle is always zero.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        q = np.array(self.coeffs, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
            raise ValueError("coeffs must be a non-empty square matrix")
        if not np.all(np.isfinite(q)):
            raise ValueError("coefficients must be finite")
        if np.any(np.tril(q, -1) != 0):
            raise ValueError("coeffs must be upper triangular")
        q.setflags(write=False)
        object.__setattr__(self, "coeffs", q)

    @property
    def n_vars(self) -> int:
        return self.coeffs.shape[0]

    @property
    def linear(self) -> np.ndarray:
        return np.diag(self.coeffs).copy()

    def coupling_matrix(self) -> np.ndarray:
        """Symmetric zero-diagonal matrix W with ``W_ij = W_ji = Q_ij`` for i < j."""
        off = np.triu(self.coeffs, 1)
        return off + off.T

    def __eq__(self, other):
        if not isinstance(other, Qubo):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    @classmethod
    def from_terms(cls, n: int, terms) -> "Qubo":
        q = np.zeros((n, n))
        for i, j, value in terms:
            i, j = int(i), int(j)
            if not (0 <= i <= j < n):
                raise ValueError(f"invalid term index ({i}, {j}) for n={n}")
            q[i, j] += value
        return cls(q)

    def terms(self) -> list:
        rows, cols = np.nonzero(self.coeffs)
        return [[int(i), int(j), float(self.coeffs[i, j])] for i, j in zip(rows, cols)]

    def to_json(self) -> str:
        return json.dumps({"n": self.n_vars, "terms": self.terms()})

    @classmethod
    def from_json(cls, text: str) -> "Qubo":
        doc = json.loads(text)
        return cls.from_terms(doc["n"], doc["terms"])

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "Qubo":
        return cls.from_json(Path(path).read_text())


def energy(q: Qubo, x) -> float:
    bits = as_bits(x, q.n_vars).astype(np.float64)
    return float(bits @ q.coeffs @ bits)


def build_qubo(inst: BcsInstance, lam: float) -> Qubo:
    """Cast ``||y - A x||^2 + lam ||x||_0`` over binary x to QUBO form.

    Diagonal: ``lam + sum_l A_li (A_li - 2 y_l)``. Off-diagonal (i < j):
    ``2 sum_l A_li A_lj``. The constant ``||y||^2`` is dropped; see
    :func:`qubo_offset`.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    a, y = inst.a, inst.y
    gram = a.T @ a
    q = np.triu(2.0 * gram, 1)
    q[np.diag_indices_from(q)] = lam + np.diag(gram) - 2.0 * (a.T @ y)
    return Qubo(q)


def qubo_offset(inst: BcsInstance) -> float:
    """Constant dropped by :func:`build_qubo`: objective = energy + offset."""
    return float(inst.y @ inst.y)


def rescaled(q: Qubo) -> Qubo:
    """Divide all coefficients by the largest magnitude (argmin is unchanged)."""
    scale = np.abs(q.coeffs).max()
    if scale == 0:
        return q
    return Qubo(q.coeffs / scale)
