"""Input-permutation symmetry of channel pairs.

A permutation is stored as an integer array ``sigma`` with matrix
``G[i, j] = 1`` iff ``sigma[j] == i``, so ``T @ G == T[:, sigma]`` and the
product ``G_a @ G_b`` corresponds to ``a[b]``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import hull
from .capacity import objective_table, q_candidates
from .channels import DbcModel
from .errors import InvalidInputError, UnsupportedError
from .fstar import endpoints, fstar_primal, psi
from .prob import SimplexGrid, entropy_columns, uniform

MATCH_TOL = 1e-12
MAX_K = 8


def perm_matrix(sigma) -> np.ndarray:
    sigma = np.asarray(sigma)
    G = np.zeros((sigma.size, sigma.size))
    G[sigma, np.arange(sigma.size)] = 1.0
    return G


def _match_rows(A: np.ndarray, B: np.ndarray, tol: float = MATCH_TOL) -> np.ndarray | None:
    """Row permutation ``pi`` with ``A[pi[r]] == B[r]`` for all r, or None.

    Rows are matched as a multiset after quantising to integer keys; if that
    fails (rounding across a quantisation boundary) a greedy match within
    ``tol`` is tried. The result is always verified.
    """
    n = A.shape[0]
    keys_a = np.round(A / tol).astype(np.int64)
    keys_b = np.round(B / tol).astype(np.int64)
    buckets: dict = {}
    for r in range(n):
        buckets.setdefault(keys_a[r].tobytes(), []).append(r)
    pi = np.empty(n, dtype=np.int64)
    ok = True
    for r in range(n):
        lst = buckets.get(keys_b[r].tobytes())
        if not lst:
            ok = False
            break
        pi[r] = lst.pop(0)
    if not ok:
        used = np.zeros(n, dtype=bool)
        for r in range(n):
            diff = np.max(np.abs(A - B[r]), axis=1)
            diff[used] = np.inf
            j = int(np.argmin(diff))
            if diff[j] > tol:
                return None
            used[j] = True
            pi[r] = j
    if np.max(np.abs(A[pi] - B)) > tol:
        return None
    return pi


@dataclass(frozen=True)
class PermutationPair:
    """Input permutation with output permutations for each matrix: ``T G = Pi T``."""

    G: np.ndarray
    outputs: tuple

    def output_matrix(self, idx: int) -> np.ndarray:
        """``Pi`` for the idx-th matrix, with ``(Pi T)[r] = T[pi[r]]``."""
        pi = self.outputs[idx]
        Pi = np.zeros((pi.size, pi.size))
        Pi[np.arange(pi.size), pi] = 1.0
        return Pi

    def residual(self, matrices) -> float:
        """Max entrywise error of ``T G = Pi T`` over the given matrices."""
        G = perm_matrix(self.G)
        return max(float(np.max(np.abs(T @ G - self.output_matrix(i) @ T)))
                   for i, T in enumerate(matrices))


def _compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[b]


def _generate(gens: list, k: int) -> set:
    ident = tuple(range(k))
    seen = {ident}
    frontier = [np.arange(k)]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = tuple(_compose(g, x))
                if y not in seen:
                    seen.add(y)
                    nxt.append(np.array(y))
        frontier = nxt
    return seen


@dataclass
class PermutationSet:
    k: int
    perms: np.ndarray
    witnesses: list = field(default_factory=list)

    def __post_init__(self):
        self.perms = np.asarray(self.perms, dtype=np.int64).reshape(-1, self.k)
        if len({tuple(p) for p in self.perms}) != len(self.perms):
            raise InvalidInputError("permutations must be distinct")

    def __len__(self) -> int:
        return len(self.perms)

    def matrices(self) -> list:
        return [perm_matrix(p) for p in self.perms]

    def generators(self) -> list:
        """A small generating set of the group the permutations generate, greedily chosen."""
        gens: list = []
        span = {tuple(range(self.k))}
        for p in self.perms:
            if tuple(p) not in span:
                gens.append(p)
                span = _generate(gens, self.k)
        return gens

    @property
    def is_group(self) -> bool:
        members = {tuple(p) for p in self.perms}
        if tuple(range(self.k)) not in members:
            return False
        return _generate(self.generators(), self.k) == members

    @property
    def is_transitive(self) -> bool:
        return len(self.orbit(0)) == self.k

    def orbit(self, i: int) -> set:
        return {int(p[i]) for p in self.perms} if len(self.perms) else {i}

    def orbits(self) -> list:
        seen, out = set(), []
        for i in range(self.k):
            if i in seen:
                continue
            orb = {i}
            frontier = [i]
            while frontier:
                x = frontier.pop()
                for p in self.perms:
                    y = int(p[x])
                    if y not in orb:
                        orb.add(y)
                        frontier.append(y)
            seen |= orb
            out.append(sorted(orb))
        return out


def symmetry_group_of(*matrices, tol: float = MATCH_TOL) -> PermutationSet:
    """All input permutations ``G`` with ``T G = Pi_T T`` for every given matrix."""
    mats = [np.asarray(T, dtype=float) for T in matrices]
    k = mats[0].shape[1]
    if any(T.shape[1] != k for T in mats):
        raise InvalidInputError("all matrices must share the input alphabet")
    if k > MAX_K:
        raise UnsupportedError(f"symmetry enumeration is capped at k={MAX_K}, got k={k}")
    perms, wit = [], []
    for sigma in itertools.permutations(range(k)):
        sigma = np.array(sigma)
        outs = []
        for T in mats:
            pi = _match_rows(T, T[:, sigma], tol)
            if pi is None:
                break
            outs.append(pi)
        else:
            perms.append(sigma)
            wit.append(PermutationPair(sigma, tuple(outs)))
    return PermutationSet(k, np.array(perms), wit)


def compute_symmetry_group(model: DbcModel) -> PermutationSet:
    """The set of input permutations common to T_YX and T_ZX."""
    return symmetry_group_of(model.T_YX, model.T_ZX)


def group_sum_check(pset: PermutationSet) -> tuple[int, float, float]:
    """``(l, l/k, residual)`` with residual = max |sum G - (l/k) 11^T|.

    For a transitive group l/k is an integer and the residual is zero; other
    groups give a positive residual.
    """
    if not pset.is_group:
        raise InvalidInputError("group_sum_check needs a group")
    S = sum(pset.matrices())
    l = len(pset)
    c = l / pset.k
    return l, (l // pset.k if l % pset.k == 0 else c), float(np.max(np.abs(S - c)))


def smallest_transitive_subset(pset: PermutationSet) -> np.ndarray | None:
    """Smallest subset whose permutation matrices sum to ``c 11^T``.

    Exact backtracking over multiples ``c = 1, 2, ...``; the subset has
    ``l_s = c k`` members. Returns the rows of ``pset.perms`` selected, or
    None when the set is not transitive (no constant sum exists).
    """
    if not pset.is_transitive:
        return None
    k = pset.k
    perms = pset.perms
    # cover[p] = flat cells (sigma(j), j) hit by permutation p
    cover = perms * k + np.arange(k)[None, :]
    by_cell = [[] for _ in range(k * k)]
    for idx, cells in enumerate(cover):
        for cell in cells:
            by_cell[cell].append(idx)

    def search(c: int):
        counts = np.zeros(k * k, dtype=np.int64)
        chosen: list[int] = []
        last_for_cell = np.full(k * k, -1)

        def rec() -> bool:
            deficit = np.flatnonzero(counts < c)
            if deficit.size == 0:
                return True
            # most constrained cell first
            cell = min(deficit, key=lambda x: len(by_cell[x]))
            start = last_for_cell[cell]
            for idx in by_cell[cell]:
                if idx <= start or idx in chosen:
                    continue
                cells = cover[idx]
                if np.any(counts[cells] >= c):
                    continue
                counts[cells] += 1
                chosen.append(idx)
                saved = last_for_cell[cell]
                last_for_cell[cell] = idx
                if rec():
                    return True
                last_for_cell[cell] = saved
                chosen.pop()
                counts[cells] -= 1
            return False

        return sorted(chosen) if rec() else None

    for c in range(1, len(perms) // k + 1):
        found = search(c)
        if found is not None:
            return perms[found]
    return None


def symmetry_report(model: DbcModel) -> dict:
    """JSON-ready summary of the symmetry structure of a model."""
    pset = compute_symmetry_group(model)
    sub = smallest_transitive_subset(pset)
    l_s = None if sub is None else int(len(sub))
    report = {
        "group_size": len(pset),
        "is_transitive": pset.is_transitive,
        "l_s": l_s,
        "conjecture1_holds": None if l_s is None else l_s == model.k,
        "generators": [p.tolist() for p in pset.generators()],
        "orbits": pset.orbits(),
    }
    if pset.is_group:
        l, c, res = group_sum_check(pset)
        report["group_sum_multiple"] = c
        report["group_sum_residual"] = res
    if sub is not None:
        report["smallest_transitive_subset"] = [p.tolist() for p in sub]
    if model.T_ZY is not None and model.T_ZY.shape[1] <= MAX_K:
        zy = symmetry_group_of(model.T_ZY)
        report["T_ZY_group_size"] = len(zy)
        report["T_ZY_is_transitive"] = zy.is_transitive
    return report


def require_input_symmetric(model: DbcModel) -> PermutationSet:
    pset = compute_symmetry_group(model)
    if not pset.is_transitive:
        raise InvalidInputError(
            f"model is not input-symmetric: orbits of the symmetry group are {pset.orbits()}, "
            "transitivity fails")
    return pset


@dataclass
class EncodingRegion:
    points: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    envelope: np.ndarray

    def envelope_at(self, s) -> np.ndarray:
        return hull.evaluate(self.envelope, s)


def permutation_encoding_region(model: DbcModel, pset: PermutationSet | None = None,
                                grid=None) -> EncodingRegion:
    """Rates of permutation encoding over first-user laws ``p_1`` on a grid.

    ``R1 = H(T_YX p_1) - H(T_YX e_1)``, ``R2 = H(T_ZX u) - H(T_ZX p_1)``; the
    envelope is the lower hull of ``(H(T_YX p_1), H(T_ZX p_1))``.
    """
    if pset is None:
        pset = require_input_symmetric(model)
    elif not pset.is_transitive:
        raise InvalidInputError(f"permutation set is not transitive (orbits {pset.orbits()})")
    if grid is None:
        grid = SimplexGrid(model.k, 2000 if model.k == 2 else 200)
    elif isinstance(grid, (int, np.integer)):
        grid = SimplexGrid(model.k, int(grid))
    P = grid.points.T
    xi = entropy_columns(model.T_YX @ P)
    eta = entropy_columns(model.T_ZX @ P)
    u = uniform(model.k)
    e1 = np.eye(model.k)[:, 0]
    R1 = xi - entropy_columns((model.T_YX @ e1)[:, None])[0]
    R2 = entropy_columns((model.T_ZX @ u)[:, None])[0] - eta
    env = hull.lower_hull(xi, eta)
    return EncodingRegion(P, R1, R2, xi, eta, env)


def envelope_gap(model: DbcModel, region: EncodingRegion, samples: int = 50, grid=None) -> float:
    """Sup-norm gap between the encoding envelope and F*(u, .) over the s-domain."""
    u = uniform(model.k)
    e = endpoints(model, u)
    lo = max(e.HY_X, region.envelope[0, 0])
    hi = min(e.HY, region.envelope[-1, 0])
    gap = 0.0
    for s in np.linspace(lo, hi, samples):
        env = float(region.envelope_at(s))
        # F* is the lower boundary of eta over xi >= s
        right = region.envelope[region.envelope[:, 0] >= s, 1]
        if right.size:
            env = min(env, float(right.min()))
        gap = max(gap, abs(env - fstar_primal(model, u, s, grid)[0]))
    return gap


def uniform_optimality_check(model: DbcModel, lambdas, q_grid=12, grid=None,
                             tol: float = 1e-6, threads: int | None = None) -> dict:
    """Check that uniform q maximises the weighted-rate objective at every lambda."""
    pset = compute_symmetry_group(model)
    if not pset.is_transitive:
        return {"skipped": True,
                "message": f"model is not input-symmetric (orbits {pset.orbits()}); check skipped"}
    lambdas = np.asarray(lambdas, dtype=float)
    Q = q_candidates(model.k, q_grid)
    obj, _ = objective_table(model, lambdas, Q, grid, threads)
    u = uniform(model.k)
    e = endpoints(model, u)
    ou = np.array([e.HZ - lam * e.HY_X - psi(model, u, lam, grid).value for lam in lambdas])
    deficit = obj.max(axis=0) - ou
    fails = [float(lam) for lam, d in zip(lambdas, deficit) if d > tol]
    return {"skipped": False, "max_deficit": float(max(deficit.max(), 0.0)),
            "failures": fails, "passed": not fails}


def multiplicative_shape_check(model: DbcModel, lambdas, q_grid=12, grid=None,
                               tol: float = 1e-6, threads: int | None = None) -> dict:
    """Check that laws of the form ``(1 - t, t u)`` attain the grid optimum.

    Each grid law is also symmetrised over the nonzero symbols, so the shaped
    candidates include the symmetrisation of every grid point.
    """
    if model.family.get("name") != "multiplicative":
        raise InvalidInputError("model was not built by make_multiplicative")
    lambdas = np.asarray(lambdas, dtype=float)
    Q = q_candidates(model.k, q_grid)
    t = np.unique(np.round(1.0 - Q[:, 0], 15))
    n = model.k - 1
    shaped = np.column_stack([1.0 - t, np.repeat(t[:, None] / n, n, axis=1)])
    obj_all, _ = objective_table(model, lambdas, Q, grid, threads)
    obj_shaped, _ = objective_table(model, lambdas, shaped, grid, threads)
    deficit = obj_all.max(axis=0) - obj_shaped.max(axis=0)
    fails = [float(lam) for lam, d in zip(lambdas, deficit) if d > tol]
    return {"max_deficit": float(max(deficit.max(), 0.0)), "failures": fails, "passed": not fails}
