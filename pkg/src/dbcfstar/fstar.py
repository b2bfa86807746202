"""The conditional entropy bound F*(q, s) and the envelope function psi.

``phi(p, lam) = H(T_ZX p) - lam H(T_YX p)``; ``psi(., lam)`` is its lower
convex envelope on the simplex. Both ``psi`` and ``F*`` are evaluated as
small linear programs over the points of a :class:`SimplexGrid`, so the
simplex is never materialised as a geometric object. The point ``q`` itself
is always appended as an extra column, so constant ``U`` is exactly
representable even when ``q`` is off the grid.

Discretisation error decays like O(1/m) away from the simplex boundary
(phi is Lipschitz there); vertices are grid points, so the endpoint
identities hold to LP precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize

from . import hull, lp
from .channels import DbcModel
from .errors import DomainError, InvalidInputError, UnsupportedError
from .prob import (
    SimplexGrid,
    TransmissionStrategy,
    as_prob_vector,
    conditional_entropy_given_strategy,
    deterministic_rng,
    entropy,
    entropy_columns,
)

S_CLAMP = 1e-9
LAMBDA_SAMPLES = 401
WEIGHT_TOL = 1e-12


def default_resolution(k: int) -> int:
    if k <= 2:
        return 2000
    if k == 3:
        return 200
    # keep the grid near 2e5 points
    m = 1
    while math.comb(m + 1 + k - 1, k - 1) <= 200_000:
        m += 1
    return m


def phi(model: DbcModel, p, lam: float) -> float:
    p = as_prob_vector(p, tol=1e-9, name="p")
    if p.size != model.k:
        raise InvalidInputError(f"p has dimension {p.size}, model has k={model.k}")
    return entropy(model.T_ZX @ p) - lam * entropy(model.T_YX @ p)


@dataclass(frozen=True)
class Endpoints:
    """``H(Y|X), H(Y), H(Z|X), H(Z)`` for one input law."""

    HY_X: float
    HY: float
    HZ_X: float
    HZ: float


def endpoints(model: DbcModel, q) -> Endpoints:
    q = as_prob_vector(q, tol=1e-9, name="q")
    hy = entropy_columns(model.T_YX)
    hz = entropy_columns(model.T_ZX)
    return Endpoints(float(hy @ q), entropy(model.T_YX @ q), float(hz @ q), entropy(model.T_ZX @ q))


def check_s(model: DbcModel, q, s: float) -> float:
    """Clamp ``s`` into ``[H(Y|X), H(Y)]`` if within 1e-9, else raise."""
    e = endpoints(model, q)
    if s < e.HY_X - S_CLAMP or s > e.HY + S_CLAMP:
        raise DomainError(
            f"s = {s:.12g} outside [H(Y|X), H(Y)] = [{e.HY_X:.12g}, {e.HY:.12g}]")
    return min(max(s, e.HY_X), e.HY)


class EnvelopeTable:
    """Grid points with their output entropies, built once per (model, grid)."""

    def __init__(self, model: DbcModel, grid: SimplexGrid):
        if grid.k != model.k:
            raise InvalidInputError(f"grid dimension {grid.k} does not match k={model.k}")
        self.model = model
        self.grid = grid
        self.P = np.ascontiguousarray(grid.points.T)
        self.xi = entropy_columns(model.T_YX @ self.P)
        self.eta = entropy_columns(model.T_ZX @ self.P)
        comp = grid.compositions
        self.vertices = np.array([int(np.flatnonzero(comp[:, i] == grid.m)[0]) for i in range(model.k)])

    @property
    def size(self) -> int:
        return self.P.shape[1]

    def with_q(self, q: np.ndarray):
        """Column matrix, xi and eta with ``q`` appended as the last column."""
        P = np.column_stack([self.P, q])
        xi = np.append(self.xi, entropy(self.model.T_YX @ q))
        eta = np.append(self.eta, entropy(self.model.T_ZX @ q))
        return P, xi, eta

    def strategy(self, P: np.ndarray, x: np.ndarray) -> TransmissionStrategy:
        idx = np.flatnonzero(x > WEIGHT_TOL)
        w = x[idx]
        return TransmissionStrategy(w / w.sum(), P[:, idx])


_TABLES: dict = {}


def envelope_table(model: DbcModel, grid=None) -> EnvelopeTable:
    """Cached :class:`EnvelopeTable`; ``grid`` may be None, an int or a SimplexGrid."""
    if grid is None:
        grid = SimplexGrid(model.k, default_resolution(model.k))
    elif isinstance(grid, (int, np.integer)):
        grid = SimplexGrid(model.k, int(grid))
    elif isinstance(grid, EnvelopeTable):
        return grid
    key = (id(model), grid.k, grid.m)
    hit = _TABLES.get(key)
    if hit is not None and hit.model is model:
        return hit
    if len(_TABLES) > 32:
        _TABLES.clear()
    table = EnvelopeTable(model, grid)
    _TABLES[key] = table
    return table


@dataclass
class PsiResult:
    value: float
    strategy: TransmissionStrategy
    basis: np.ndarray
    xi: float
    eta: float
    duals: np.ndarray


def _feasible_basis(P: np.ndarray, q: np.ndarray, basis) -> bool:
    if basis is None:
        return False
    B = P[:, basis]
    try:
        xB = np.linalg.solve(B, q)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(xB >= -1e-12)) and np.linalg.cond(B) < 1e10


def psi(model: DbcModel, q, lam: float, grid=None, *, basis=None) -> PsiResult:
    """Lower convex envelope of phi(., lam) at ``q`` and a witness with at most k branches.

    ``basis`` (column indices, as returned in a previous result) warm-starts
    the simplex; it is ignored when infeasible for this ``q``.
    """
    if not (0.0 <= lam <= 1.0):
        raise DomainError(f"lambda = {lam!r} outside [0, 1]")
    q = as_prob_vector(q, tol=1e-9, name="q")
    table = envelope_table(model, grid)
    P, xi, eta = table.with_q(q)
    c = eta - lam * xi
    if not _feasible_basis(P, q, basis):
        basis = table.vertices
    res = lp.solve(c, P, q, basis=np.asarray(basis))
    strat = table.strategy(P, res.x)
    return PsiResult(res.objective, strat, res.basis, float(res.x @ xi), float(res.x @ eta), res.duals)


def psi_profile(model: DbcModel, q, lambdas, grid=None) -> list[PsiResult]:
    """psi at each lambda for fixed ``q``, warm-starting each LP from the last basis."""
    out = []
    basis = None
    for lam in lambdas:
        r = psi(model, q, float(lam), grid, basis=basis)
        basis = r.basis
        out.append(r)
    return out


def fstar_primal(model: DbcModel, q, s: float, grid=None) -> tuple[float, TransmissionStrategy]:
    """F*(q, s) by the LP ``min sum w eta  s.t.  sum w p = q, sum w xi >= s``.

    The starting basis is the constant strategy (column q) with the slack of
    the entropy constraint; it is feasible for every admissible ``s``, so no
    phase one is needed.
    """
    q = as_prob_vector(q, tol=1e-9, name="q")
    s = check_s(model, q, s)
    table = envelope_table(model, grid)
    P, xi, eta = table.with_q(q)
    N = P.shape[1]
    k = model.k
    A = np.zeros((k + 1, N + 1))
    A[:k, :N] = P
    A[k, :N] = xi
    A[k, N] = -1.0
    b = np.append(q, s)
    c = np.append(eta, 0.0)
    skip = int(np.argmax(q))
    basis = [N - 1, N] + [int(v) for i, v in enumerate(table.vertices) if i != skip]
    res = lp.solve(c, A, b, basis=np.array(basis))
    x = res.x[:N]
    return float(x @ eta), table.strategy(P, x)


def fstar_dual(model: DbcModel, q, s: float, lambdas=LAMBDA_SAMPLES, grid=None,
               profile: list[PsiResult] | None = None) -> float:
    """``max over lam in [0, 1] of psi(q, lam) + lam s`` on a uniform lambda grid."""
    q = as_prob_vector(q, tol=1e-9, name="q")
    s = check_s(model, q, s)
    if profile is None:
        profile = psi_profile(model, q, lambda_grid(lambdas), grid)
    lam = lambda_grid(len(profile))
    vals = np.array([r.value for r in profile]) + lam * s
    return float(vals.max())


def lambda_grid(count: int) -> np.ndarray:
    if isinstance(count, np.ndarray):
        return count
    if count < 2:
        raise InvalidInputError("lambda grid needs at least 2 samples")
    return np.linspace(0.0, 1.0, int(count))


def _oracle_k2(model: DbcModel, q: np.ndarray, s: float, points: int = 5001) -> float:
    """F* over strategies supported on a dense grid, solved by HiGHS.

    Any number of branches is allowed, so this is exact up to the grid.
    """
    p = np.union1d(np.linspace(0.0, 1.0, points), [q[1]])
    cols = np.vstack([1 - p, p])
    xi = entropy_columns(model.T_YX @ cols)
    eta = entropy_columns(model.T_ZX @ cols)
    A_eq = np.vstack([np.ones_like(p), p])
    res = linprog(eta, A_ub=-xi[None, :], b_ub=[-(s - 1e-12)], A_eq=A_eq, b_eq=[1.0, q[1]],
                  bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    return float(res.fun) if res.status == 0 else np.inf


def _oracle_local(model: DbcModel, q: np.ndarray, s: float, starts: int, seed: int) -> float:
    k = model.k
    l = k + 1
    Ty, Tz = model.T_YX, model.T_ZX
    eps = 1e-300

    def perspective(T, J):
        A = T @ J
        w = J.sum(axis=0)
        val = -np.sum(A * np.log(np.maximum(A, eps))) + np.sum(w * np.log(np.maximum(w, eps)))
        grad = -T.T @ np.log(np.maximum(A, eps)) + np.log(np.maximum(w, eps))[None, :]
        return val, grad

    def f(x):
        v, g = perspective(Tz, x.reshape(k, l))
        return v, g.ravel()

    def con_xi(x):
        return perspective(Ty, x.reshape(k, l))[0] - s

    def con_xi_jac(x):
        return perspective(Ty, x.reshape(k, l))[1].ravel()

    rows = np.zeros((k, k * l))
    for i in range(k):
        rows[i, i * l:(i + 1) * l] = 1.0
    cons = [
        {"type": "eq", "fun": lambda x: rows @ x - q, "jac": lambda x: rows},
        {"type": "ineq", "fun": con_xi, "jac": con_xi_jac},
    ]
    rng = deterministic_rng(seed)
    best = np.inf
    for _ in range(starts):
        W = rng.dirichlet(np.ones(l), size=k) * q[:, None]
        res = minimize(f, W.ravel(), jac=True, method="SLSQP", constraints=cons,
                       bounds=[(0.0, 1.0)] * (k * l), options={"maxiter": 500, "ftol": 1e-12})
        x = np.clip(res.x, 0.0, None)
        J = x.reshape(k, l)
        J *= (q / np.maximum(J.sum(axis=1), eps))[:, None]
        if perspective(Ty, J)[0] >= s - 1e-7:
            best = min(best, perspective(Tz, J)[0])
    return best


def fstar_oracle(model: DbcModel, q, s: float, *, starts: int = 24, seed: int = 0) -> float:
    """Brute-force upper estimate of F*(q, s), independent of the LP engine.

    k = 2 solves the strategy LP on a 5001-point grid with HiGHS;
    k = 3 uses multi-start SLSQP over joint laws of (X, U) with k + 1 branches.
    The best achievable value found is returned.
    """
    q = as_prob_vector(q, tol=1e-9, name="q")
    if model.k > 3:
        raise UnsupportedError(f"oracle supports k <= 3, got k={model.k}")
    s = check_s(model, q, s)
    e = endpoints(model, q)
    cand = [e.HZ]
    if s <= e.HY_X:
        cand.append(e.HZ_X)
    if model.k == 2:
        cand.append(_oracle_k2(model, q, s))
    else:
        cand.append(_oracle_local(model, q, s, starts, seed))
    return float(min(cand))


@dataclass
class FStarCurve:
    q: np.ndarray
    s: np.ndarray
    values: np.ndarray
    witnesses: list = field(default_factory=list)

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.s)


def s_samples(model: DbcModel, q, count: int) -> np.ndarray:
    e = endpoints(model, q)
    return np.linspace(e.HY_X, e.HY, int(count))


def fstar_curve(model: DbcModel, q, count: int = 50, method: str = "primal", grid=None,
                lambdas=LAMBDA_SAMPLES) -> FStarCurve:
    """Sample F*(q, .) at ``count`` evenly spaced s values over its domain.

    ``method`` is ``primal`` (witnesses attached), ``dual`` or ``oracle``.
    """
    q = as_prob_vector(q, tol=1e-9, name="q")
    ss = s_samples(model, q, count)
    vals, wit = [], []
    if method == "primal":
        for s in ss:
            v, w = fstar_primal(model, q, s, grid)
            vals.append(v)
            wit.append(w)
    elif method == "dual":
        prof = psi_profile(model, q, lambda_grid(lambdas), grid)
        vals = [fstar_dual(model, q, s, profile=prof) for s in ss]
    elif method == "oracle":
        vals = [fstar_oracle(model, q, s) for s in ss]
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    return FStarCurve(q, ss, np.array(vals), wit)


def product_strategy(a: TransmissionStrategy, b: TransmissionStrategy) -> TransmissionStrategy:
    """Independent pair ``U = (U1, U2)`` with product conditional input laws."""
    w = np.kron(a.weights, b.weights)
    cols = np.column_stack([np.kron(a.columns[:, i], b.columns[:, j])
                            for i in range(a.branches) for j in range(b.branches)])
    return TransmissionStrategy(w, cols)


def _closed_fstar(model: DbcModel):
    """Closed-form F* for the binary families, or None."""
    from . import closed_forms

    fam = model.family.get("name")
    if fam == "broadcast_z":
        b1, b2 = 1 - model.family["alpha1"], 1 - model.family["alpha2"]
        return lambda q, s: closed_forms.z_fstar(q[1], b1, b2, s)
    if fam == "broadcast_bsc":
        a1, a2 = model.family["alpha1"], model.family["alpha2"]
        return lambda q, s: closed_forms.bsc_fstar(q[1], a1, a2, s)
    return None


def tensorization_check(model: DbcModel, q, s: float, *, trials: int = 10_000, seed: int = 0,
                        grid=None) -> dict:
    """Two-letter tensorization test for k = 2.

    (a) The product of two copies of the F* witness is evaluated on the
    product channel and must double (xi, eta) exactly.
    (b) Random strategies on the 4-letter product channel (half Dirichlet,
    half perturbations of the product optimum) are checked against
    ``H(Z^2|U) >= 2 F*(qbar, H(Y^2|U)/2)``, where ``qbar`` is the mean of the
    two single-letter marginals.
    """
    if model.k != 2:
        raise UnsupportedError("tensorization check is implemented for k = 2 only")
    q = as_prob_vector(q, tol=1e-9, name="q")
    s = check_s(model, q, s)
    value, wit = fstar_primal(model, q, s, grid)
    xi1 = conditional_entropy_given_strategy(model.T_YX, wit)
    eta1 = conditional_entropy_given_strategy(model.T_ZX, wit)
    TY2 = np.kron(model.T_YX, model.T_YX)
    TZ2 = np.kron(model.T_ZX, model.T_ZX)
    prod = product_strategy(wit, wit)
    xi2 = conditional_entropy_given_strategy(TY2, prod)
    eta2 = conditional_entropy_given_strategy(TZ2, prod)

    closed = _closed_fstar(model)
    if closed is None:
        def closed(qq, ss):
            return fstar_primal(model, qq, ss, grid)[0]

    rng = deterministic_rng(seed)
    worst = np.inf
    l = 5
    for t in range(trials):
        if t % 2 == 0:
            w = rng.dirichlet(np.full(l, 0.5))
            cols = rng.dirichlet(np.full(4, 0.5), size=l).T
        else:
            mix = rng.uniform(0.0, 0.2)
            base = prod.columns
            noise = rng.dirichlet(np.ones(4), size=base.shape[1]).T
            cols = (1 - mix) * base + mix * noise
            w = prod.weights * rng.uniform(0.5, 1.5, size=prod.branches)
            w = w / w.sum()
        joint = cols @ w
        marg1 = np.array([joint[0] + joint[1], joint[2] + joint[3]])
        marg2 = np.array([joint[0] + joint[2], joint[1] + joint[3]])
        qbar = (marg1 + marg2) / 2
        xi = float(entropy_columns(TY2 @ cols) @ w)
        eta = float(entropy_columns(TZ2 @ cols) @ w)
        e = endpoints(model, qbar)
        sbar = min(max(xi / 2, e.HY_X), e.HY)
        gap = eta - 2 * closed(qbar, sbar)
        worst = min(worst, gap)
    return {
        "fstar": value,
        "witness_xi": xi1,
        "witness_eta": eta1,
        "product_xi": xi2,
        "product_eta": eta2,
        "product_error": max(abs(xi2 - 2 * xi1), abs(eta2 - 2 * eta1)),
        "trials": trials,
        "min_gap": float(worst),
    }
