"""Binary compressive sensing instances and the penalized least-squares objective."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np


class DimensionError(ValueError):
    """Raised when a vector or matrix has the wrong length for the problem."""

    def __init__(self, what: str, expected: int, actual: int):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected length {expected}, got {actual}")


def as_bits(x, n_vars: Optional[int] = None, what: str = "x") -> np.ndarray:
    """Coerce ``x`` to an int8 array of 0/1 entries, checking length if given."""
    bits = np.asarray(x)
    if bits.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional")
    if not np.all((bits == 0) | (bits == 1)):
        raise ValueError(f"{what} must contain only 0 and 1")
    if n_vars is not None and bits.shape[0] != n_vars:
        raise DimensionError(what, n_vars, bits.shape[0])
    return bits.astype(np.int8)


@dataclass(frozen=True, eq=False)
class BcsInstance:
    """Measurement matrix ``a``, measurements ``y`` and optional ground truth."""

    a: np.ndarray
    y: np.ndarray
    x_true: Optional[np.ndarray] = None
    k: Optional[int] = None

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64)
        y = np.array(self.y, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("a must be a non-empty 2-D matrix")
        if y.ndim != 1:
            raise ValueError("y must be one-dimensional")
        if y.shape[0] != a.shape[0]:
            raise DimensionError("y", a.shape[0], y.shape[0])
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(y))):
            raise ValueError("a and y must be finite")
        a.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)

        if self.k is not None:
            if int(self.k) != self.k or self.k < 0:
                raise ValueError("k must be a nonnegative integer")
            object.__setattr__(self, "k", int(self.k))
        if self.x_true is not None:
            x = as_bits(self.x_true, a.shape[1], "x_true")
            x.setflags(write=False)
            object.__setattr__(self, "x_true", x)
            if self.k is not None and int(x.sum()) != self.k:
                raise ValueError(f"x_true has {int(x.sum())} nonzeros but k={self.k}")

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def n_vars(self) -> int:
        return self.a.shape[1]

    def __eq__(self, other):
        if not isinstance(other, BcsInstance):
            return NotImplemented
        same_truth = (self.x_true is None and other.x_true is None) or (
            self.x_true is not None
            and other.x_true is not None
            and np.array_equal(self.x_true, other.x_true)
        )
        return (
            np.array_equal(self.a, other.a)
            and np.array_equal(self.y, other.y)
            and same_truth
            and self.k == other.k
        )

    def to_dict(self) -> dict:
        doc = {
            "m": self.m,
            "n": self.n_vars,
            "a": self.a.tolist(),
            "y": self.y.tolist(),
        }
        if self.x_true is not None:
            doc["x_true"] = self.x_true.astype(int).tolist()
        if self.k is not None:
            doc["k"] = self.k
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "BcsInstance":
        inst = cls(
            a=doc["a"],
            y=doc["y"],
            x_true=doc.get("x_true"),
            k=doc.get("k"),
        )
        if inst.m != doc["m"] or inst.n_vars != doc["n"]:
            raise ValueError(
                f"declared shape ({doc['m']}, {doc['n']}) does not match a {inst.a.shape}"
            )
        return inst

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "BcsInstance":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "BcsInstance":
        return cls.from_json(Path(path).read_text())


def residual_norm2(inst: BcsInstance, x) -> float:
    bits = as_bits(x, inst.n_vars)
    r = inst.y - inst.a @ bits
    return float(r @ r)


def objective(inst: BcsInstance, x, lam: float) -> float:
    """Return ``||y - A x||^2 + lam * ||x||_0``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    bits = as_bits(x, inst.n_vars)
    return residual_norm2(inst, bits) + lam * int(bits.sum())


def sparsity(x) -> int:
    return int(as_bits(x).sum())


def recovery_error(x_true, x_hat) -> float:
    """Fraction of mismatched bits, i.e. ``||x_true - x_hat||^2 / N`` for binaries."""
    t = as_bits(x_true, what="x_true")
    h = as_bits(x_hat, t.shape[0], "x_hat")
    return int(np.count_nonzero(t != h)) / t.shape[0]
