"""Capacity-region boundaries from the envelope psi.

For a weight ``lam`` in [0, 1] the boundary point maximising ``R2 + lam R1``
at input law q has value ``H(Z) - lam H(Y|X) - psi(q, lam)``. The psi witness
``(w_j, p_j)`` is itself the optimal strategy: ``Pr(U = j) = w_j`` and
``p_{X|U=j} = p_j``, giving ``R1 = H(Y|U) - H(Y|X)`` and ``R2 = H(Z) - H(Z|U)``.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import hull
from .channels import DbcModel
from .closed_forms import minimize_scalar_golden
from .errors import InvalidInputError
from .fstar import endpoints, envelope_table, phi, psi, psi_profile
from .prob import SimplexGrid, TransmissionStrategy, as_prob_vector

TIE_TOL = 1e-12


@dataclass
class RatePoint:
    lam: float
    q: np.ndarray
    R1: float
    R2: float
    strategy: TransmissionStrategy
    objective: float
    psi: float


def _rate_point(model: DbcModel, q, lam: float, res) -> RatePoint:
    e = endpoints(model, q)
    R1 = res.xi - e.HY_X
    R2 = e.HZ - res.eta
    obj = e.HZ - lam * e.HY_X - res.value
    return RatePoint(float(lam), np.asarray(q, dtype=float), R1, R2, res.strategy, obj, res.value)


def max_weighted_rate(model: DbcModel, q, lam: float, grid=None) -> RatePoint:
    """Boundary point of weight ``lam`` for fixed input law ``q``."""
    q = as_prob_vector(q, tol=1e-9, name="q")
    return _rate_point(model, q, lam, psi(model, q, lam, grid))


def default_threads() -> int:
    env = os.environ.get("DBC_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise InvalidInputError(f"DBC_THREADS must be a positive integer, got {env!r}")
        if n < 1:
            raise InvalidInputError(f"DBC_THREADS must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def q_candidates(k: int, q_grid) -> np.ndarray:
    """Rows of input laws: an int is a SimplexGrid resolution, else an array of laws."""
    if isinstance(q_grid, (int, np.integer)):
        return SimplexGrid(k, int(q_grid)).points
    Q = np.atleast_2d(np.asarray(q_grid, dtype=float))
    if Q.shape[1] != k:
        raise InvalidInputError(f"q_grid rows must have dimension {k}")
    for row in Q:
        as_prob_vector(row, tol=1e-9, name="q_grid row")
    return Q


def objective_table(model: DbcModel, lambdas, Q, grid=None, threads: int | None = None):
    """``psiCapa`` objective for every (q, lam) pair plus the psi results."""
    lambdas = np.asarray(lambdas, dtype=float)
    table = envelope_table(model, grid)

    def run(q):
        return psi_profile(model, q, lambdas, table)

    threads = threads or 1
    if threads > 1 and len(Q) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            profiles = list(pool.map(run, list(Q)))
    else:
        profiles = [run(q) for q in Q]
    obj = np.empty((len(Q), lambdas.size))
    for i, (q, prof) in enumerate(zip(Q, profiles)):
        e = endpoints(model, q)
        obj[i] = e.HZ - lambdas * e.HY_X - np.array([r.value for r in prof])
    return obj, profiles


@dataclass
class RegionBoundary:
    samples: list = field(default_factory=list)
    on_hull: np.ndarray | None = None

    def rates(self) -> np.ndarray:
        return np.array([[p.R1, p.R2] for p in self.samples])

    def hull_points(self) -> list:
        if self.on_hull is None:
            return list(self.samples)
        return [p for p, keep in zip(self.samples, self.on_hull) if keep]

    def support(self, lam: float) -> float:
        """``max R2 + lam R1`` over the sampled points."""
        R = self.rates()
        return float(np.max(R[:, 1] + lam * R[:, 0]))


def convexify(samples: list) -> np.ndarray:
    """Mask of samples on the upper-right boundary of the rate-pair hull."""
    R = np.array([[p.R1, p.R2] for p in samples])
    mask = np.zeros(len(samples), dtype=bool)
    if len(samples):
        mask[hull.upper_right_hull(R[:, 0], R[:, 1])] = True
    return mask


def trace_region(model: DbcModel, lambdas, q_grid=20, grid=None, *, refine: bool = True,
                 threads: int | None = None) -> RegionBoundary:
    """Boundary samples maximising the weighted sum rate over ``q_grid`` at each lambda.

    For k = 2 the best grid cell is refined by golden-section search; the
    objective is concave in q, so the refinement is global. Exact ties are
    broken toward the smallest R1.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    Q = q_candidates(model.k, q_grid)
    table = envelope_table(model, grid)
    obj, profiles = objective_table(model, lambdas, Q, table, threads)
    samples = []
    for j, lam in enumerate(lambdas):
        col = obj[:, j]
        best = col.max()
        ties = np.flatnonzero(col >= best - TIE_TOL)
        i = min(ties, key=lambda t: (profiles[t][j].xi - endpoints(model, Q[t]).HY_X, t))
        point = _rate_point(model, Q[i], lam, profiles[i][j])
        if refine and model.k == 2 and len(Q) > 2:
            point = _refine_k2(model, lam, Q, i, table, point)
        samples.append(point)
    bound = RegionBoundary(samples)
    bound.on_hull = convexify(samples)
    return bound


def _refine_k2(model, lam, Q, i, table, point: RatePoint) -> RatePoint:
    order = np.argsort(Q[:, 1])
    pos = int(np.flatnonzero(order == i)[0])
    lo = Q[order[max(pos - 1, 0)], 1]
    hi = Q[order[min(pos + 1, len(Q) - 1)], 1]

    def neg(t):
        qq = np.array([1 - t, t])
        e = endpoints(model, qq)
        return -(e.HZ - lam * e.HY_X - psi(model, qq, lam, table).value)

    t = minimize_scalar_golden(neg, lo, hi, tol=1e-9)
    if -neg(t) > point.objective:
        qq = np.array([1 - t, t])
        return _rate_point(model, qq, lam, psi(model, qq, lam, table))
    return point


def strategy_from_support(model: DbcModel, q, lam: float, points, weights, grid=None,
                          tol: float = 1e-6) -> dict:
    """Check that a claimed support reproduces psi(q, lam).

    Residuals are measured against the supporting hyperplane ``y . p`` of
    psi at q obtained from the LP duals: each support point should satisfy
    ``phi(p_j) - y . p_j = 0``.
    """
    q = as_prob_vector(q, tol=1e-9, name="q")
    P = np.atleast_2d(np.asarray(points, dtype=float))
    w = as_prob_vector(weights, tol=1e-9, name="weights")
    if P.shape != (w.size, model.k):
        raise InvalidInputError(f"need {w.size} points of dimension {model.k}, got shape {P.shape}")
    mean_err = float(np.max(np.abs(P.T @ w - q)))
    res = psi(model, q, lam, grid)
    phis = np.array([phi(model, p, lam) for p in P])
    claimed = float(phis @ w)
    tangency = phis - P @ res.duals
    ok = mean_err <= 1e-9 and abs(claimed - res.value) <= tol and np.all(np.abs(tangency) <= tol)
    return {
        "psi": res.value,
        "claimed": claimed,
        "gap": claimed - res.value,
        "mean_error": mean_err,
        "tangency_residuals": tangency.tolist(),
        "ok": bool(ok),
    }


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def region_csv(bound: RegionBoundary, *, scale: float = 1.0, hull_only: bool = False) -> str:
    """CSV text ``lambda,R1_nats,R2_nats,q1..qk,strategy_json``; ``scale`` converts units."""
    pts = bound.hull_points() if hull_only else bound.samples
    k = pts[0].q.size if pts else 0
    unit = "nats" if scale == 1.0 else "bits"
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["lambda", f"R1_{unit}", f"R2_{unit}"] + [f"q{i + 1}" for i in range(k)] + ["strategy_json"])
    for p in pts:
        wr.writerow([_fmt(p.lam), _fmt(max(p.R1, 0.0) * scale), _fmt(max(p.R2, 0.0) * scale)]
                    + [_fmt(x) for x in p.q]
                    + [json.dumps(p.strategy.to_json(), separators=(",", ":"))])
    return buf.getvalue()
