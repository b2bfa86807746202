"""Closed-form F*, tangent points and rate formulas for the binary and
multiplicative families.

Every scalar inversion is a bisection to 1e-12 on a function whose
monotonicity is noted next to it.

Z-channel convention: ``q`` is the probability of the noisy input (index 1),
``beta_j = 1 - alpha_j`` is the probability that it survives to receiver j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .channels import DbcModel
from .errors import DomainError, InvalidInputError
from .prob import (
    SimplexGrid,
    TransmissionStrategy,
    as_prob_vector,
    binary_entropy as h,
    entropy,
    entropy_columns,
)

BISECT_TOL = 1e-12


def _bisect(f, lo: float, hi: float, tol: float = BISECT_TOL) -> float:
    """Root of ``f`` on ``[lo, hi]`` assuming ``f(lo) <= 0 <= f(hi)`` or the reverse."""
    flo = f(lo)
    sign = 1.0 if flo <= 0 else -1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sign * f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def z_p_lambda(beta1: float, beta2: float, lam: float) -> float:
    """Tangency point of the line through the origin with phi on the Z channel.

    ``d/dp [phi(p)/p] = g(p)/p^2`` with ``g(p) = ln(1 - b2 p) - lam ln(1 - b1 p)``.
    ``g(p)/p`` starts at ``lam b1 - b2 < 0``; the first sign change is p_lam.
    Returns 1 when g stays negative on (0, 1] (the chord reaches the endpoint).
    """
    if not (0 < beta2 <= beta1 < 1):
        raise DomainError(f"need 0 < beta2 <= beta1 < 1, got beta1={beta1}, beta2={beta2}")
    if not (0 <= lam < beta2 / beta1):
        raise DomainError(
            f"lambda = {lam!r} outside [0, beta2/beta1) = [0, {beta2 / beta1:.12g}); psi equals phi there")

    def G(p):
        return (np.log1p(-beta2 * p) - lam * np.log1p(-beta1 * p)) / p

    if G(1.0) <= 0:
        return 1.0
    lo = 1e-300
    # G(lo) ~ lam b1 - b2 < 0
    return _bisect(G, lo, 1.0)


def z_fstar(q: float, beta1: float, beta2: float, s: float) -> float:
    """F*(q, s) on the broadcast Z channel.

    ``s(p) = q h(b1 p)/p`` decreases on [q, 1] from H(Y) to H(Y|X); the
    value is ``q h(b2 p)/p`` at the inverting p.
    """
    if not (0 <= q <= 1):
        raise DomainError(f"q = {q!r} outside [0, 1]")
    if q == 0:
        if abs(s) > 1e-9:
            raise DomainError(f"s = {s!r} outside [0, 0]")
        return 0.0
    lo_s, hi_s = q * h(beta1), h(q * beta1)
    if s < lo_s - 1e-9 or s > hi_s + 1e-9:
        raise DomainError(f"s = {s:.12g} outside [q h(beta1), h(q beta1)] = [{lo_s:.12g}, {hi_s:.12g}]")
    s = min(max(s, lo_s), hi_s)
    p = z_invert(q, beta1, s)
    return q * h(beta2 * p) / p


def z_invert(q: float, beta1: float, s: float) -> float:
    """The p in [q, 1] with ``q h(beta1 p)/p = s``."""
    return _bisect(lambda p: s - q * h(beta1 * p) / p, q, 1.0)


def z_capacity(beta: float) -> tuple[float, float]:
    """Single-user Z-channel capacity (nats) and the optimal Pr(noisy input)."""
    best = minimize_scalar_golden(lambda p: -(h(beta * p) - p * h(beta)), 0.0, 1.0)
    return h(beta * best) - best * h(beta), best


def minimize_scalar_golden(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Golden-section search for a unimodal function."""
    g = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _bsc_dphi(alpha1: float, alpha2: float, lam: float, p: float) -> float:
    a2 = alpha2 + (1 - 2 * alpha2) * p
    a1 = alpha1 + (1 - 2 * alpha1) * p
    return (1 - 2 * alpha2) * np.log((1 - a2) / a2) - lam * (1 - 2 * alpha1) * np.log((1 - a1) / a1)


def bsc_threshold(alpha1: float, alpha2: float) -> float:
    return (1 - 2 * alpha2) ** 2 / (1 - 2 * alpha1) ** 2


def bsc_p_lambda(alpha1: float, alpha2: float, lam: float) -> float:
    """Minimiser of phi(., lam) on [0, 1/2] for the broadcast BSC.

    Below the threshold, phi'' < 0 at 1/2, so phi' > 0 just left of 1/2.
    If phi'(0) >= 0 the minimum sits on the boundary and 0 is returned;
    otherwise the root of phi' in (0, 1/2) is found by bisection.
    """
    if not (0 < alpha1 < alpha2 < 0.5):
        raise DomainError(f"need 0 < alpha1 < alpha2 < 1/2, got {alpha1}, {alpha2}")
    thr = bsc_threshold(alpha1, alpha2)
    if not (0 <= lam < thr):
        raise DomainError(f"lambda = {lam!r} outside [0, {thr:.12g}); psi equals phi there")
    if _bsc_dphi(alpha1, alpha2, lam, 0.0) >= 0:
        return 0.0

    # phi'(p)/(1/2 - p) is continuous at 1/2 with limit -phi''(1/2) > 0
    def r(p):
        return _bsc_dphi(alpha1, alpha2, lam, p) / (0.5 - p)

    hi = 0.5 - 1e-9
    return _bisect(r, 0.0, hi)


def bsc_fstar(q: float, alpha1: float, alpha2: float, s: float) -> float:
    """F*(q, s) on the broadcast BSC via ``s = h(alpha1 + (1 - 2 alpha1) p)``, p in [0, min(q, 1-q)]."""
    if not (0 <= q <= 1):
        raise DomainError(f"q = {q!r} outside [0, 1]")
    q = min(q, 1 - q)
    lo_s = h(alpha1)
    hi_s = h(alpha1 + (1 - 2 * alpha1) * q)
    if s < lo_s - 1e-9 or s > hi_s + 1e-9:
        raise DomainError(f"s = {s:.12g} outside [h(alpha1), h(alpha1 + (1-2 alpha1) q)] = [{lo_s:.12g}, {hi_s:.12g}]")
    s = min(max(s, lo_s), hi_s)
    if q == 0:
        p = 0.0
    else:
        p = _bisect(lambda x: h(alpha1 + (1 - 2 * alpha1) * x) - s, 0.0, q)
    return h(alpha2 + (1 - 2 * alpha2) * p)


@dataclass(frozen=True)
class KUserZParams:
    """K-user broadcast Z channel: survival probabilities and thresholds.

    ``betas`` is nonincreasing in (0, 1); ``thresholds`` holds t_1..t_{K-1};
    with t_0 = 1 and t_K = q the chain ``1 >= t_1 >= ... >= t_K = q`` holds.
    """

    q: float
    betas: tuple
    thresholds: tuple

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float)
        t = self.chain
        if b.ndim != 1 or b.size < 1:
            raise InvalidInputError("betas must be a non-empty sequence")
        if len(self.thresholds) != b.size - 1:
            raise InvalidInputError(f"K={b.size} users need {b.size - 1} thresholds, got {len(self.thresholds)}")
        if np.any(b <= 0) or np.any(b >= 1) or np.any(np.diff(b) > 1e-12):
            raise DomainError(f"betas must satisfy 0 < beta_K <= ... <= beta_1 < 1, got {b.tolist()}")
        if not (0 < self.q <= 1):
            raise DomainError(f"q = {self.q!r} outside (0, 1]")
        if np.any(np.diff(t) > 1e-12):
            raise DomainError(f"thresholds must satisfy 1 >= t_1 >= ... >= t_K = q, got {t.tolist()}")

    @property
    def K(self) -> int:
        return len(self.betas)

    @property
    def chain(self) -> np.ndarray:
        return np.array([1.0, *self.thresholds, self.q], dtype=float)


def kuser_z_rates(params: KUserZParams) -> np.ndarray:
    """``R_j = q/t_j h(b_j t_j) - q/t_{j-1} h(b_j t_{j-1})`` for j = 1..K."""
    t = np.clip(params.chain, params.q, 1.0)
    q = params.q
    R = np.empty(params.K)
    for j in range(1, params.K + 1):
        b = params.betas[j - 1]
        R[j - 1] = q / t[j] * h(b * t[j]) - q / t[j - 1] * h(b * t[j - 1])
    return R


def _require_mult(model: DbcModel) -> dict:
    fam = model.family
    if fam.get("name") != "multiplicative":
        raise InvalidInputError("model was not built by make_multiplicative")
    return fam


def _sub_blocks(model: DbcModel):
    fam = _require_mult(model)
    a1, ad = fam["alpha1"], fam["alpha_delta"]
    a2 = fam["alpha2"]
    T_sub_Y = model.T_YX[1:, 1:] / (1 - a1)
    T_sub_Z = model.T_ZX[1:, 1:] / (1 - a2)
    return a1, ad, a2, T_sub_Y, T_sub_Z


def multi_phi_decomposition(model: DbcModel, q: float, p_sub, lam: float) -> tuple[float, float, float]:
    """Both sides of the phi identity on inputs ``(1 - q, q p_sub)``."""
    a1, ad, a2, T_sub_Y, T_sub_Z = _sub_blocks(model)
    p_sub = as_prob_vector(p_sub, tol=1e-9, name="p_sub")
    b1, b2 = 1 - a1, 1 - a2
    p = np.concatenate([[1 - q], q * p_sub])
    lhs = entropy(model.T_ZX @ p) - lam * entropy(model.T_YX @ p)
    inner = entropy(T_sub_Z @ p_sub) - lam / (1 - ad) * entropy(T_sub_Y @ p_sub)
    rhs = h(q * b2) - lam * h(q * b1) + q * b2 * inner
    return lhs, rhs, abs(lhs - rhs)


def sub_minimiser(model: DbcModel, lam_sub: float, resolution: int = 60) -> np.ndarray:
    """Minimiser over the nonzero sub-simplex of ``H(T_Z~ p) - lam_sub H(T_Y~ p)``."""
    _, _, _, T_sub_Y, T_sub_Z = _sub_blocks(model)
    n = T_sub_Y.shape[1]
    if n == 1:
        return np.array([1.0])
    P = SimplexGrid(n, resolution).points.T
    vals = entropy_columns(T_sub_Z @ P) - lam_sub * entropy_columns(T_sub_Y @ P)
    start = P[:, int(np.argmin(vals))]

    def f(x):
        x = np.clip(x, 0.0, None)
        x = x / x.sum()
        return entropy(T_sub_Z @ x) - lam_sub * entropy(T_sub_Y @ x)

    res = minimize(f, start, method="SLSQP", bounds=[(0.0, 1.0)] * n,
                   constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0}],
                   options={"ftol": 1e-14, "maxiter": 200})
    best = np.clip(res.x, 0.0, None)
    best /= best.sum()
    return best if f(best) <= f(start) else start


def multiplicative_strategy(model: DbcModel, q: float, lam: float) -> TransmissionStrategy:
    """Envelope witness at ``(1 - q, q u)`` for a multiplicative model.

    The outer mixture follows the Z channel (branch e_0 with weight
    (p_lam - q)/p_lam); the remaining mass is split evenly over the n group
    shifts of the sub-channel minimiser ``p~*``, so the induced input law is
    ``(1 - q, q u)``. When ``q >= p_lam`` the e_0 branch disappears and the
    n shifted columns ``(1 - q, q G_j p~*)`` remain; they collapse to a single
    branch only when ``p~*`` is uniform.
    """
    fam = _require_mult(model)
    if not (0 <= q <= 1):
        raise DomainError(f"q = {q!r} outside [0, 1]")
    a1, ad = fam["alpha1"], fam["alpha_delta"]
    b1, b2 = 1 - a1, 1 - fam["alpha2"]
    # past b2/b1 the shell phi is convex and the tangency point has reached 0
    p_lam = z_p_lambda(b1, b2, lam) if lam < b2 / b1 else 0.0
    n = model.k - 1
    p_star = sub_minimiser(model, lam / (1 - ad))
    table = np.asarray(fam["table"], dtype=np.int64)[1:, 1:] - 1
    shifted = []
    for x in range(n):
        col = np.zeros(n)
        # G_x moves sub-symbol j to j (x) x
        col[table[:, x]] = p_star
        shifted.append(col)
    if q >= p_lam:
        cols = [np.concatenate([[1 - q], q * c]) for c in shifted]
        return TransmissionStrategy(np.full(n, 1.0 / n), np.column_stack(cols)).merged()
    cols = [np.eye(n + 1)[:, 0]] + [np.concatenate([[1 - p_lam], p_lam * c]) for c in shifted]
    w = np.concatenate([[(p_lam - q) / p_lam], np.full(n, q / (p_lam * n))])
    return TransmissionStrategy(w, np.column_stack(cols)).merged()
