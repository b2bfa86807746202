"""Natural and permutation encoding combiners, the independent-encoding
construction, and Monte-Carlo checks of the resulting information rates.

Codebooks are abstracted to their symbol laws: X1 (user 1) and X2 (user 2,
which plays the role of U) are drawn independently and combined by a
single-letter map ``x = f(x2, x1)``.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channels import DbcModel, GroupTable, MultTable
from .errors import InvalidInputError
from .prob import as_prob_vector, mutual_information

CHUNK = 1 << 18
KINDS = ("binary-or", "group-add", "mult", "permutation")


@dataclass(frozen=True)
class CombinerSpec:
    """Single-letter combiner ``table[x2, x1] = x`` with the two input laws."""

    kind: str
    table: np.ndarray
    p_x1: np.ndarray
    p_x2: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown combiner kind {self.kind!r}; expected one of {KINDS}")
        f = np.asarray(self.table, dtype=np.int64)
        p1 = as_prob_vector(self.p_x1, tol=1e-9, name="p_x1")
        p2 = as_prob_vector(self.p_x2, tol=1e-9, name="p_x2")
        if f.shape != (p2.size, p1.size):
            raise InvalidInputError(f"table must be {p2.size}x{p1.size}, got {f.shape}")
        if self.kind == "permutation":
            full = np.arange(f.shape[1])
            for r, row in enumerate(f):
                if not np.array_equal(np.sort(row), full):
                    raise InvalidInputError(f"permutation combiner row {r} is not a bijection")
        object.__setattr__(self, "table", f)
        object.__setattr__(self, "p_x1", p1)
        object.__setattr__(self, "p_x2", p2)

    @property
    def k(self) -> int:
        return int(self.table.max()) + 1

    @classmethod
    def binary_or(cls, p_x1, p_x2) -> "CombinerSpec":
        """Z-channel combiner. In index space the noisy symbol 1 results only
        when both inputs are 1 (the noisy symbol absorbs like logical OR on
        the complementary labels)."""
        return cls("binary-or", np.array([[0, 0], [0, 1]]), p_x1, p_x2)

    @classmethod
    def group_add(cls, group: GroupTable, p_x1, p_x2) -> "CombinerSpec":
        return cls("group-add", group.op.T.copy(), p_x1, p_x2)

    @classmethod
    def mult(cls, table: MultTable, p_x1, p_x2) -> "CombinerSpec":
        return cls("mult", table.op.T.copy(), p_x1, p_x2)

    @classmethod
    def permutation(cls, perms, p_x1, p_x2=None) -> "CombinerSpec":
        """Rows ``sigma_{x2}`` of a permutation set; X2 is uniform by default."""
        perms = np.asarray(perms, dtype=np.int64)
        if p_x2 is None:
            p_x2 = np.full(len(perms), 1.0 / len(perms))
        return cls("permutation", perms, p_x1, p_x2)


def combiner_joint(comb: CombinerSpec, k: int | None = None) -> np.ndarray:
    """Exact law of ``(X2, X)`` as an ``l2 x k`` table."""
    k = k or comb.k
    J = np.zeros((comb.p_x2.size, k))
    for x2 in range(comb.p_x2.size):
        np.add.at(J[x2], comb.table[x2], comb.p_x2[x2] * comb.p_x1)
    return J


def joint_law(model: DbcModel, comb: CombinerSpec) -> np.ndarray:
    """Exact law of ``(X2, X, Y, Z)`` with Y and Z drawn from the marginal channels."""
    J = combiner_joint(comb, model.k)
    return np.einsum("ax,yx,zx->axyz", J, model.T_YX, model.T_ZX)


def rates_from_joint(P: np.ndarray) -> tuple[float, float]:
    """``(I(X;Y|X2), I(X2;Z))`` in nats from a (X2, X, Y, Z) table of counts or probabilities."""
    P = np.asarray(P, dtype=float)
    total = P.sum()
    if total <= 0:
        raise InvalidInputError("empty joint table")
    P = P / total
    pxy = P.sum(axis=3)
    r1 = 0.0
    for a in range(pxy.shape[0]):
        wa = pxy[a].sum()
        if wa > 0:
            r1 += wa * mutual_information(pxy[a])
    r2 = mutual_information(P.sum(axis=(1, 2)))
    return r1, r2


def analytic_rates(model: DbcModel, comb: CombinerSpec) -> tuple[float, float]:
    return rates_from_joint(joint_law(model, comb))


def _draw(rng: np.random.Generator, cdf: np.ndarray, size: int) -> np.ndarray:
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return np.minimum(idx, cdf.size - 1)


def _draw_columns(rng: np.random.Generator, cdf_cols: np.ndarray, cols: np.ndarray) -> np.ndarray:
    u = rng.random(cols.size)
    idx = (u[None, :] >= cdf_cols[:, cols]).sum(axis=0)
    return np.minimum(idx, cdf_cols.shape[0] - 1)


def _chunk_counts(model: DbcModel, comb: CombinerSpec, seed: int, chunk: int, size: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) % (1 << 64), chunk])))
    x1 = _draw(rng, np.cumsum(comb.p_x1), size)
    x2 = _draw(rng, np.cumsum(comb.p_x2), size)
    x = comb.table[x2, x1]
    y = _draw_columns(rng, np.cumsum(model.T_YX, axis=0), x)
    z = _draw_columns(rng, np.cumsum(model.T_ZX, axis=0), x)
    l2, k, n, m = comb.p_x2.size, model.k, model.n, model.m
    flat = ((x2 * k + x) * n + y) * m + z
    return np.bincount(flat, minlength=l2 * k * n * m).reshape(l2, k, n, m)


def simulate_joint(model: DbcModel, comb: CombinerSpec, samples: int, seed: int,
                   threads: int = 1) -> np.ndarray:
    """Counts over ``(X2, X, Y, Z)`` from ``samples`` independent draws.

    Work is split into fixed chunks, each seeded from ``(seed, chunk index)``,
    so the counts do not depend on the thread count.
    """
    if samples < 1:
        raise InvalidInputError("samples must be at least 1")
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidInputError(f"seed must be an integer, got {seed!r}")
    if comb.k > model.k:
        raise InvalidInputError(f"combiner produces symbol {comb.k - 1}, model has k={model.k}")
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)

    def run(i):
        return _chunk_counts(model, comb, seed, i, sizes[i])

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    return sum(parts)


def empirical_rates(counts: np.ndarray) -> tuple[float, float]:
    """Plug-in ``(I(X;Y|X2), I(X2;Z))`` from simulated counts."""
    return rates_from_joint(counts)


def simulation_report(model: DbcModel, comb: CombinerSpec, samples: int, seed: int,
                      threads: int = 1) -> dict:
    counts = simulate_joint(model, comb, samples, seed, threads)
    emp = empirical_rates(counts)
    ana = analytic_rates(model, comb)
    return {
        "samples": int(samples),
        "seed": int(seed),
        "combiner": comb.kind,
        "empirical_rates_nats": [float(f"{v:.12g}") for v in emp],
        "analytic_rates_nats": [float(f"{v:.12g}") for v in ana],
        "abs_error": [float(f"{abs(a - b):.12g}") for a, b in zip(emp, ana)],
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class IndepEncoding:
    """``X = f(V, U) = V_U`` with ``V = (V_1..V_l)`` independent of U.

    ``p_V`` is indexed by the mixed-radix number ``v_1 + k v_2 + ...``;
    ``f[v, u]`` is the symbol ``v_u``.
    """

    p_U: np.ndarray
    conditionals: np.ndarray
    p_V: np.ndarray
    f: np.ndarray
    filled_rows: tuple

    @property
    def l(self) -> int:
        return self.conditionals.shape[0]

    @property
    def k(self) -> int:
        return self.conditionals.shape[1]


def build_independent_encoding(p_UX) -> IndepEncoding:
    """Independent components ``Pr(V_j = i) = p(i | U = j)`` and the selector ``f(v, u) = v_u``.

    Rows of ``p_UX`` with zero mass have no conditional; they get the
    uniform law and are listed in ``filled_rows``.
    """
    J = np.asarray(p_UX, dtype=float)
    if J.ndim != 2 or J.size == 0:
        raise InvalidInputError("p_UX must be a non-empty 2-D table")
    as_prob_vector(J.ravel(), tol=1e-9, name="p_UX")
    l, k = J.shape
    if k ** l > 1 << 20:
        raise InvalidInputError(f"k^l = {k ** l} too large for a table encoding")
    p_U = J.sum(axis=1)
    cond = np.empty_like(J)
    filled = []
    for u in range(l):
        if p_U[u] > 0:
            cond[u] = J[u] / p_U[u]
        else:
            cond[u] = 1.0 / k
            filled.append(u)
    # digits[v, j] = v_j
    v = np.arange(k ** l)
    digits = (v[:, None] // k ** np.arange(l)[None, :]) % k
    p_V = np.prod(cond[np.arange(l)[None, :], digits], axis=1)
    return IndepEncoding(p_U, cond, p_V, digits, tuple(filled))


def induced_joint(enc: IndepEncoding) -> np.ndarray:
    """Exact law of ``(U, f(V, U))`` with V drawn from ``p_V`` independently of U."""
    out = np.zeros((enc.l, enc.k))
    for u in range(enc.l):
        np.add.at(out[u], enc.f[:, u], enc.p_V)
        out[u] *= enc.p_U[u]
    return out


def strategy_joint(weights, columns) -> np.ndarray:
    """Joint table ``p_UX[u, x] = w_u p_u(x)`` of a transmission strategy."""
    return np.asarray(weights)[:, None] * np.asarray(columns).T
