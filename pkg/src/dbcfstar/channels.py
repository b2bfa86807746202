"""Degraded broadcast channel models, group tables and named channel families.

Conventions
-----------
Matrices are column-stochastic, ``T[j, i] = Pr(out = j | in = i)``.
Symbols are 0-based in code; documentation that numbers symbols from 1
refers to index ``i - 1``.

For the broadcast Z family, input index 0 is the noiseless symbol and index
1 the noisy one; the scalar ``q`` used by the Z closed forms is the
probability of index 1, so the input law is ``(1 - q, q)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lp
from .errors import DomainError, InvalidInputError
from .prob import as_prob_vector, as_stochastic

FACTOR_TOL = 1e-9
DEGRADE_TOL = 1e-7
FILE_SUM_TOL = 1e-9


@dataclass(frozen=True)
class DbcModel:
    T_YX: np.ndarray
    T_ZX: np.ndarray
    T_ZY: np.ndarray | None = None
    family: dict = field(default_factory=dict)

    def __post_init__(self):
        T_YX = as_stochastic(self.T_YX, tol=FILE_SUM_TOL, name="T_YX")
        T_ZX = as_stochastic(self.T_ZX, tol=FILE_SUM_TOL, name="T_ZX")
        if T_YX.shape[1] != T_ZX.shape[1]:
            raise InvalidInputError(
                f"T_YX has {T_YX.shape[1]} inputs but T_ZX has {T_ZX.shape[1]}")
        object.__setattr__(self, "T_YX", T_YX)
        object.__setattr__(self, "T_ZX", T_ZX)
        if self.T_ZY is not None:
            T_ZY = as_stochastic(self.T_ZY, tol=FILE_SUM_TOL, name="T_ZY")
            if T_ZY.shape != (T_ZX.shape[0], T_YX.shape[0]):
                raise InvalidInputError(
                    f"T_ZY must be {T_ZX.shape[0]}x{T_YX.shape[0]}, got {T_ZY.shape}")
            object.__setattr__(self, "T_ZY", T_ZY)

    @property
    def k(self) -> int:
        return self.T_YX.shape[1]

    @property
    def n(self) -> int:
        return self.T_YX.shape[0]

    @property
    def m(self) -> int:
        return self.T_ZX.shape[0]

    def factor_residual(self) -> float | None:
        if self.T_ZY is None:
            return None
        return float(np.max(np.abs(self.T_ZX - self.T_ZY @ self.T_YX)))

    def to_json(self) -> dict:
        doc = {
            "k": self.k, "n": self.n, "m": self.m,
            "T_YX": self.T_YX.tolist(),
            "T_ZX": self.T_ZX.tolist(),
        }
        if self.T_ZY is not None:
            doc["T_ZY"] = self.T_ZY.tolist()
        if self.family:
            doc["family"] = self.family
        return doc


class GroupTable:
    """Cayley table of a finite group on ``{0, ..., n-1}``; ``op[i, j] = i (+) j``."""

    def __init__(self, table):
        op = np.asarray(table, dtype=np.int64)
        n = op.shape[0]
        if op.ndim != 2 or op.shape != (n, n) or n == 0:
            raise InvalidInputError("group table must be a non-empty square array")
        if op.min() < 0 or op.max() >= n:
            raise InvalidInputError("group table entries must lie in {0..n-1}")
        full = np.arange(n)
        for i in range(n):
            if not (np.array_equal(np.sort(op[i]), full) and np.array_equal(np.sort(op[:, i]), full)):
                raise InvalidInputError(f"group table is not a Latin square (row/column {i})")
        # (i+j)+l == i+(j+l), all triples
        lhs = op[op[:, :, None], np.arange(n)[None, None, :]]
        rhs = op[np.arange(n)[:, None, None], op[None, :, :]]
        if not np.array_equal(lhs, rhs):
            raise InvalidInputError("group table is not associative")
        ids = [e for e in range(n) if np.array_equal(op[e], full) and np.array_equal(op[:, e], full)]
        if not ids:
            raise InvalidInputError("group table has no identity element")
        self.identity = ids[0]
        for i in range(n):
            if not np.any(op[i] == self.identity):
                raise InvalidInputError(f"element {i} has no inverse")
        self.op = op
        self.order = n

    def inverse(self, i: int) -> int:
        return int(np.flatnonzero(self.op[i] == self.identity)[0])

    def shift(self, x: int) -> np.ndarray:
        """Permutation matrix ``G_x`` with ``G_x[i, j] = 1`` iff ``j (+) x = i``."""
        G = np.zeros((self.order, self.order))
        G[self.op[:, x], np.arange(self.order)] = 1.0
        return G

    @classmethod
    def cyclic(cls, n: int) -> "GroupTable":
        i = np.arange(n)
        return cls((i[:, None] + i[None, :]) % n)


class MultTable:
    """Multiplication on ``{0, ..., n}``: 0 absorbs, the nonzero part is a group."""

    def __init__(self, table):
        op = np.asarray(table, dtype=np.int64)
        size = op.shape[0]
        if op.ndim != 2 or op.shape != (size, size) or size < 2:
            raise InvalidInputError("multiplication table must be square with at least 2 symbols")
        if np.any(op[0] != 0) or np.any(op[:, 0] != 0):
            raise InvalidInputError("row and column 0 of a multiplication table must be all zero")
        sub = op[1:, 1:]
        if sub.min() < 1:
            raise InvalidInputError("product of nonzero symbols must be nonzero")
        self.nonzero = GroupTable(sub - 1)
        self.op = op
        self.n = size - 1

    @classmethod
    def prime_field(cls, p: int) -> "MultTable":
        """Multiplication table of GF(p) for a prime ``p``."""
        i = np.arange(p)
        return cls((i[:, None] * i[None, :]) % p)


def validate_dbc(model: DbcModel) -> dict:
    """Consistency report; raises :class:`InvalidInputError` on bad matrices."""
    report = {
        "k": model.k, "n": model.n, "m": model.m,
        "stochastic": True,
        "factor_residual": model.factor_residual(),
    }
    report["valid"] = report["factor_residual"] is None or report["factor_residual"] <= FACTOR_TOL
    return report


def find_degrading_channel(T_YX, T_ZX, tol: float = DEGRADE_TOL) -> np.ndarray | None:
    """Search for a column-stochastic ``T_ZY`` with ``T_ZY @ T_YX = T_ZX``.

    Solved as an L1 phase-one feasibility LP over the ``m*n`` entries of
    ``T_ZY``. Returns the factor if its entrywise residual is within ``tol``,
    otherwise ``None``.
    """
    T_YX = np.asarray(T_YX, dtype=float)
    T_ZX = np.asarray(T_ZX, dtype=float)
    n, k = T_YX.shape
    m = T_ZX.shape[0]
    if T_ZX.shape[1] != k:
        raise InvalidInputError("T_YX and T_ZX must have the same number of inputs")
    # variable index v = z * n + y for T_ZY[z, y]
    rows, rhs = [], []
    for y in range(n):
        r = np.zeros(m * n)
        r[np.arange(m) * n + y] = 1.0
        rows.append(r)
        rhs.append(1.0)
    for z in range(m):
        for x in range(k):
            r = np.zeros(m * n)
            r[z * n + np.arange(n)] = T_YX[:, x]
            rows.append(r)
            rhs.append(T_ZX[z, x])
    x, infeas, *_ = lp.phase_one(np.array(rows), np.array(rhs))
    T_ZY = np.clip(x.reshape(m, n), 0.0, None)
    T_ZY = T_ZY / np.where(T_ZY.sum(axis=0) > 0, T_ZY.sum(axis=0), 1.0)
    if np.any(T_ZY.sum(axis=0) == 0):
        return None
    if np.max(np.abs(T_ZY @ T_YX - T_ZX)) > tol:
        return None
    return T_ZY


def bsc(alpha: float) -> np.ndarray:
    return np.array([[1 - alpha, alpha], [alpha, 1 - alpha]])


def z_channel(alpha: float) -> np.ndarray:
    return np.array([[1.0, alpha], [0.0, 1 - alpha]])


def bec(a: float) -> np.ndarray:
    return np.array([[1 - a, 0.0], [a, a], [0.0, 1 - a]])


def make_broadcast_bsc(alpha1: float, alpha2: float) -> DbcModel:
    if not (0 < alpha1 <= alpha2 < 0.5):
        raise DomainError(f"broadcast BSC needs 0 < alpha1 <= alpha2 < 1/2, got {alpha1}, {alpha2}")
    delta = (alpha2 - alpha1) / (1 - 2 * alpha1)
    return DbcModel(bsc(alpha1), bsc(alpha2), bsc(delta),
                    {"name": "broadcast_bsc", "alpha1": alpha1, "alpha2": alpha2})


def make_broadcast_z(alpha1: float, alpha2: float) -> DbcModel:
    if not (0 < alpha1 <= alpha2 < 1):
        raise DomainError(f"broadcast Z needs 0 < alpha1 <= alpha2 < 1, got {alpha1}, {alpha2}")
    delta = (alpha2 - alpha1) / (1 - alpha1)
    return DbcModel(z_channel(alpha1), z_channel(alpha2), z_channel(delta),
                    {"name": "broadcast_z", "alpha1": alpha1, "alpha2": alpha2})


def make_broadcast_bec(a1: float, a2: float) -> DbcModel:
    if not (0 <= a1 <= a2 <= 1):
        raise DomainError(f"broadcast BEC needs 0 <= a1 <= a2 <= 1, got {a1}, {a2}")
    if a1 >= 1:
        T_ZY = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0]])
    else:
        d = (a2 - a1) / (1 - a1)
        # erase a surviving symbol with probability d, keep erasures
        T_ZY = np.array([[1 - d, 0.0, 0.0], [d, 1.0, d], [0.0, 0.0, 1 - d]])
    return DbcModel(bec(a1), bec(a2), T_ZY, {"name": "broadcast_bec", "a1": a1, "a2": a2})


def make_group_additive(group: GroupTable, noise1, noise2) -> DbcModel:
    """``Y = X (+) N1`` and ``Z = Y (+) N2`` over the group."""
    if not isinstance(group, GroupTable):
        group = GroupTable(group)
    n = group.order
    g1 = as_prob_vector(noise1, name="noise1")
    g2 = as_prob_vector(noise2, name="noise2")
    if g1.size != n or g2.size != n:
        raise InvalidInputError(f"noise laws must have dimension {n}")
    shifts = [group.shift(x) for x in range(n)]
    T_YX = sum(g1[x] * shifts[x] for x in range(n))
    T_ZY = sum(g2[x] * shifts[x] for x in range(n))
    return DbcModel(T_YX, T_ZY @ T_YX, T_ZY,
                    {"name": "group_additive", "order": n,
                     "noise1": g1.tolist(), "noise2": g2.tolist(), "table": group.op.tolist()})


def make_multiplicative(mult: MultTable, alpha1: float, alpha_delta: float,
                        sub_noise1, sub_noise2) -> DbcModel:
    """``Y = X (x) N1``, ``Z = Y (x) N2`` over ``{0..n}``; erasure-to-zero shell."""
    if not isinstance(mult, MultTable):
        mult = MultTable(mult)
    if not (0 <= alpha1 < 1 and 0 <= alpha_delta < 1):
        raise DomainError("alpha1 and alpha_delta must lie in [0, 1)")
    n = mult.n
    g1 = as_prob_vector(sub_noise1, name="sub_noise1")
    g2 = as_prob_vector(sub_noise2, name="sub_noise2")
    if g1.size != n or g2.size != n:
        raise InvalidInputError(f"sub-channel noise laws must have dimension {n}")
    group = mult.nonzero
    shifts = [group.shift(x) for x in range(n)]
    T_sub_Y = sum(g1[x] * shifts[x] for x in range(n))
    T_sub_ZY = sum(g2[x] * shifts[x] for x in range(n))

    def shell(a, sub):
        T = np.zeros((n + 1, n + 1))
        T[0, 0] = 1.0
        T[0, 1:] = a
        T[1:, 1:] = (1 - a) * sub
        return T

    T_YX = shell(alpha1, T_sub_Y)
    T_ZY = shell(alpha_delta, T_sub_ZY)
    alpha2 = alpha1 + (1 - alpha1) * alpha_delta
    return DbcModel(T_YX, T_ZY @ T_YX, T_ZY,
                    {"name": "multiplicative", "n": n, "alpha1": alpha1,
                     "alpha_delta": alpha_delta, "alpha2": alpha2,
                     "sub_noise1": g1.tolist(), "sub_noise2": g2.tolist(),
                     "table": mult.op.tolist()})


def make_is_example(y_entries=(0.4, 0.3, 0.2, 0.1), zy_entries=(0.7, 0.6, 0.3, 0.4)) -> DbcModel:
    """Input-symmetric DBC whose degrading channel is not input-symmetric.

    ``T_YX`` columns are ``(a, b, c, d)`` and ``(c, d, a, b)``; ``T_ZY`` rows
    are ``(e, f, g, h)`` and ``(g, h, e, f)``. Column-stochasticity needs
    ``a + b + c + d = 1`` and ``e + g = f + h = 1``.
    """
    a, b, c, d = y_entries
    e, f, g, h = zy_entries
    T_YX = np.array([[a, c], [b, d], [c, a], [d, b]])
    T_ZY = np.array([[e, f, g, h], [g, h, e, f]])
    return DbcModel(T_YX, T_ZY @ T_YX, T_ZY, {"name": "is_example"})


def _parse_matrix(doc: dict, key: str, shape: tuple[int, int]) -> np.ndarray:
    raw = doc.get(key)
    if raw is None:
        raise InvalidInputError(f"field {key!r}: missing")
    try:
        arr = np.array([[float(v) for v in row] for row in raw], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"field {key!r}: entries must be numbers or decimal strings ({exc})")
    if arr.shape != shape:
        raise InvalidInputError(f"field {key!r}: expected {shape[0]} rows of {shape[1]} entries, got shape {arr.shape}")
    for i in range(shape[1]):
        s = arr[:, i].sum()
        if abs(s - 1.0) > FILE_SUM_TOL or np.any(arr[:, i] < 0):
            raise InvalidInputError(f"field {key!r}: column {i} sums to {s:.12g} (must be 1 within {FILE_SUM_TOL:g})")
    return arr


def model_from_json(doc: dict) -> DbcModel:
    """Build a model from the channel-file schema (see README)."""
    if not isinstance(doc, dict):
        raise InvalidInputError("channel file must hold a JSON object")
    try:
        k, n, m = (int(doc[f]) for f in ("k", "n", "m"))
    except KeyError as exc:
        raise InvalidInputError(f"field {exc.args[0]!r}: missing")
    except (TypeError, ValueError):
        raise InvalidInputError("fields 'k', 'n', 'm' must be integers")
    T_YX = _parse_matrix(doc, "T_YX", (n, k))
    T_ZX = _parse_matrix(doc, "T_ZX", (m, k))
    T_ZY = _parse_matrix(doc, "T_ZY", (m, n)) if doc.get("T_ZY") is not None else None
    return DbcModel(T_YX, T_ZX, T_ZY, dict(doc.get("family") or {}))


def load_model(path) -> DbcModel:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}")
    return model_from_json(doc)


def save_model(model: DbcModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_json(), indent=2) + "\n")
