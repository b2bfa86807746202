"""Probability vectors, entropy kernels, simplex grids and seeded sampling.

All entropies are in nats. Stochastic matrices are column-stochastic:
``T[j, i] = Pr(out = j | in = i)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, InvalidInputError

SUM_TOL = 1e-12
ENT_TOL = 1e-9
CLAMP = 1e-15


def as_prob_vector(p, tol: float = SUM_TOL, name: str = "vector") -> np.ndarray:
    """Validate ``p`` as a probability vector and return it as a float array."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if np.any(arr < -tol) or np.any(arr > 1 + tol):
        raise InvalidInputError(f"{name} has entries outside [0, 1]: {arr}")
    total = arr.sum()
    if abs(total - 1.0) > tol:
        raise InvalidInputError(f"{name} sums to {total!r}, not 1")
    return np.clip(arr, 0.0, 1.0)


def as_stochastic(T, tol: float = SUM_TOL, name: str = "matrix") -> np.ndarray:
    """Validate a column-stochastic matrix; the error names the first bad column."""
    arr = np.asarray(T, dtype=float)
    if arr.ndim != 2 or 0 in arr.shape:
        raise InvalidInputError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    for i in range(arr.shape[1]):
        col = arr[:, i]
        if np.any(col < -tol):
            raise InvalidInputError(f"{name} column {i} has a negative entry")
        if abs(col.sum() - 1.0) > tol:
            raise InvalidInputError(f"{name} column {i} sums to {col.sum():.12g}, not 1")
    return np.clip(arr, 0.0, 1.0)


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.where(p < CLAMP, 0.0, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return out


def entropy(p) -> float:
    """Shannon entropy ``-sum p_i ln p_i`` with ``0 ln 0 = 0``."""
    arr = np.asarray(p, dtype=float)
    if arr.size == 0:
        raise InvalidInputError("entropy of an empty vector")
    return float(max(0.0, -_xlogx(arr).sum()))


def entropy_columns(P: np.ndarray) -> np.ndarray:
    """Entropy of every column of ``P`` (shape ``(dim, count)``)."""
    return np.maximum(0.0, -_xlogx(np.asarray(P, dtype=float)).sum(axis=0))


def binary_entropy(x) -> float:
    """``h(x) = -x ln x - (1-x) ln(1-x)``."""
    x = float(x)
    if x < -SUM_TOL or x > 1 + SUM_TOL:
        raise DomainError(f"binary entropy argument {x!r} outside [0, 1]")
    x = min(1.0, max(0.0, x))
    return entropy([x, 1.0 - x])


def binary_entropy_array(x: np.ndarray) -> np.ndarray:
    """Vectorised binary entropy; no domain checking."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return -_xlogx(x) - _xlogx(1.0 - x)


@dataclass(frozen=True)
class TransmissionStrategy:
    """Auxiliary variable U given by branch weights and conditional input columns.

    ``columns[:, j]`` is the law of X given U = j, so the induced input law
    is ``columns @ weights``.
    """

    weights: np.ndarray
    columns: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        P = np.asarray(self.columns, dtype=float)
        if P.ndim == 1:
            P = P.reshape(-1, 1)
        if P.shape[1] != w.size:
            raise InvalidInputError(
                f"strategy has {w.size} weights but {P.shape[1]} columns")
        object.__setattr__(self, "weights", as_prob_vector(w, tol=1e-9, name="strategy weights"))
        object.__setattr__(self, "columns", as_stochastic(P, tol=1e-9, name="strategy columns"))

    @property
    def branches(self) -> int:
        return int(self.weights.size)

    @property
    def dim(self) -> int:
        return int(self.columns.shape[0])

    def input_law(self) -> np.ndarray:
        return self.columns @ self.weights

    def merged(self, tol: float = 1e-12) -> "TransmissionStrategy":
        """Drop zero-weight branches and merge branches with identical columns."""
        keep_w: list[float] = []
        keep_c: list[np.ndarray] = []
        for j in range(self.branches):
            wj = self.weights[j]
            if wj <= tol:
                continue
            col = self.columns[:, j]
            for idx, c in enumerate(keep_c):
                if np.max(np.abs(c - col)) <= tol:
                    keep_w[idx] += wj
                    break
            else:
                keep_w.append(wj)
                keep_c.append(col)
        w = np.array(keep_w)
        return TransmissionStrategy(w / w.sum(), np.column_stack(keep_c))

    def to_json(self) -> dict:
        return {
            "weights": [float(f"{x:.12g}") for x in self.weights],
            "columns": [[float(f"{x:.12g}") for x in self.columns[:, j]]
                        for j in range(self.branches)],
        }

    @classmethod
    def constant(cls, q) -> "TransmissionStrategy":
        q = as_prob_vector(q)
        return cls(np.array([1.0]), q.reshape(-1, 1))

    @classmethod
    def identity(cls, q) -> "TransmissionStrategy":
        """U = X: one branch per input symbol with positive probability."""
        q = as_prob_vector(q)
        idx = np.flatnonzero(q > 0)
        cols = np.eye(q.size)[:, idx]
        return cls(q[idx], cols)


def conditional_entropy_given_strategy(T, strategy: TransmissionStrategy) -> float:
    """``sum_j w_j H(T p_j)``: the conditional entropy of the output given U."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[1] != strategy.dim:
        raise InvalidInputError(
            f"channel has {T.shape[-1]} inputs but strategy columns have dim {strategy.dim}")
    return float(entropy_columns(T @ strategy.columns) @ strategy.weights)


class SimplexGrid:
    """All points ``i/m`` with nonnegative integer ``i`` summing to ``m``.

    Points are stored row-wise in lexicographic order of the compositions;
    every vertex ``e_i`` is included.
    """

    def __init__(self, k: int, m: int):
        if k < 1 or m < 1:
            raise InvalidInputError(f"simplex grid needs k >= 1 and m >= 1, got k={k}, m={m}")
        self.k = int(k)
        self.m = int(m)

    @cached_property
    def compositions(self) -> np.ndarray:
        k, m = self.k, self.m
        if k == 1:
            return np.array([[m]], dtype=np.int64)
        if k == 2:
            i = np.arange(m, -1, -1, dtype=np.int64)
            return np.column_stack([i, m - i])
        # stars and bars: bar positions choose k-1 of m+k-1 slots
        bars = np.array(list(itertools.combinations(range(m + k - 1), k - 1)), dtype=np.int64)
        edges = np.column_stack([np.full(len(bars), -1), bars, np.full(len(bars), m + k - 1)])
        return np.diff(edges, axis=1) - 1

    @cached_property
    def points(self) -> np.ndarray:
        return self.compositions / float(self.m)

    def __len__(self) -> int:
        return math.comb(self.m + self.k - 1, self.k - 1)

    def __repr__(self) -> str:
        return f"SimplexGrid(k={self.k}, m={self.m})"


def uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def deterministic_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator (O'Neill's PCG XSL-RR 128/64)."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidInputError(f"seed must be an integer, got {seed!r}")
    return np.random.Generator(np.random.PCG64(int(seed) % (1 << 64)))


def mutual_information(joint: np.ndarray) -> float:
    """``I(A;B)`` in nats from a 2-D joint table (normalised internally)."""
    P = np.asarray(joint, dtype=float)
    total = P.sum()
    if total <= 0:
        return 0.0
    P = P / total
    return max(0.0, entropy(P.sum(axis=1)) + entropy(P.sum(axis=0)) - entropy(P.ravel()))
