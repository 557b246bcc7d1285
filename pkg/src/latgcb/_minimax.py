"""Shared saddle-point machinery for ``min_m ||m||_p`` over a polytope.

Both the transport functional and the integral metric reduce to

    min over conv(vertices) of ||m||_p  =  max over alpha in K_q of  phi(alpha)

where ``phi(alpha) = min_v <alpha, v>`` is available only through an oracle
returning the minimizing vertex. Column generation (simplicial decomposition
on the primal side, Kelley's cutting planes on the dual side; the two are the
same iteration) solves a small restricted master problem over the vertices
seen so far and asks the oracle for a new one at the aligned weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import SolverError
from .exponents import as_exponent, is_inf, lp_norm


def align(m: np.ndarray, p) -> np.ndarray:
    """The unit ``l^q`` vector attaining ``<alpha, m> = ||m||_p``.

    For ``p = inf`` the indicator of the first maximal coordinate is used.
    """
    p = as_exponent(p)
    m = np.maximum(np.asarray(m, dtype=float), 0.0)
    if is_inf(p):
        alpha = np.zeros_like(m)
        alpha[int(np.argmax(m))] = 1.0
        return alpha
    if p == 1:
        return np.ones_like(m)
    norm = lp_norm(m, p)
    if norm == 0.0:
        alpha = np.ones_like(m)
        q = float(p) / (float(p) - 1.0)
        return alpha / lp_norm(alpha, q)
    return (m / norm) ** (float(p) - 1.0)


def _line_min(m, d, pf, hi):
    """Minimize ``sum (m + g d)^p`` over ``g in [0, hi]`` by bisection on the derivative."""

    def deriv(g):
        return float(np.dot(np.maximum(m + g * d, 0.0) ** (pf - 1.0), d))

    if deriv(0.0) >= 0.0:
        return 0.0
    if deriv(hi) <= 0.0:
        return hi
    lo, up = 0.0, hi
    for _ in range(60):
        mid = 0.5 * (lo + up)
        if deriv(mid) > 0.0:
            up = mid
        else:
            lo = mid
    return 0.5 * (lo + up)


def min_norm_hull(V: np.ndarray, p, lam0: np.ndarray | None = None, polish: int = 400):
    """Minimize ``||V lam||_p`` over the probability simplex.

    Returns ``(lam, m, alpha)``; for ``p = inf`` ``alpha`` holds the master LP
    duals (a point of ``K_1``), otherwise ``None``.
    """
    p = as_exponent(p)
    n, K = V.shape
    if K == 1:
        lam = np.ones(1)
        return lam, V[:, 0].copy(), None
    if is_inf(p):
        # variables (lam, t): min t, V lam - t <= 0, sum lam = 1
        c = np.zeros(K + 1)
        c[-1] = 1.0
        A_ub = np.hstack([V, -np.ones((n, 1))])
        A_eq = np.zeros((1, K + 1))
        A_eq[0, :K] = 1.0
        res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=[1.0],
                      bounds=[(0, None)] * K + [(None, None)], method="highs")
        if res.status != 0:
            raise SolverError(f"master LP failed: {res.message}")
        lam = np.clip(res.x[:K], 0.0, None)
        lam /= lam.sum()
        alpha = np.clip(-res.ineqlin.marginals, 0.0, None)
        s = alpha.sum()
        alpha = alpha / s if s > 0 else align(V @ lam, p)
        return lam, V @ lam, alpha
    pf = float(p)
    scale = float(V.max()) or 1.0
    W = V / scale
    if lam0 is None or lam0.size != K:
        lam0 = np.full(K, 1.0 / K)

    def obj(lam):
        mm = np.maximum(W @ lam, 0.0)
        return float(np.sum(mm**pf)), W.T @ (pf * mm ** (pf - 1.0))

    res = minimize(obj, lam0, jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * K,
                   constraints=[{"type": "eq", "fun": lambda l: l.sum() - 1.0,
                                 "jac": lambda l: np.ones_like(l)}],
                   options={"ftol": 1e-16, "maxiter": 500})
    lam = np.clip(res.x, 0.0, None)
    lam /= lam.sum()
    # pairwise conditional-gradient polish on the fixed vertex set
    for _ in range(polish):
        mm = W @ lam
        grad = W.T @ (pf * np.maximum(mm, 0.0) ** (pf - 1.0))
        s = int(np.argmin(grad))
        active = np.flatnonzero(lam > 0)
        a = int(active[np.argmax(grad[active])])
        if grad[a] - grad[s] <= 1e-15 * max(1.0, abs(grad[a])):
            break
        g = _line_min(mm, W[:, s] - W[:, a], pf, lam[a])
        if g == 0.0:
            break
        lam[s] += g
        lam[a] -= g
    return lam, V @ lam, None


@dataclass
class SaddleResult:
    upper: float
    lower: float
    alpha: np.ndarray
    m: np.ndarray
    lam: np.ndarray
    payloads: list = field(repr=False)
    best_payload: Any = field(repr=False)
    iterations: int = 0
    converged: bool = False

    @property
    def gap(self) -> float:
        return max(self.upper - self.lower, 0.0)


def column_generation(oracle: Callable, p, v0: np.ndarray, payload0: Any, tol: float = 1e-9,
                      max_iter: int = 200, extra_alphas: Callable | None = None) -> SaddleResult:
    """Close the gap between ``min ||m||_p`` over the hull and ``max phi``.

    ``oracle(alpha)`` returns ``(phi(alpha), vertex, payload)`` where ``vertex``
    attains ``phi(alpha) = <alpha, vertex>``. ``extra_alphas(m)`` may propose
    further dual points whose oracle values only tighten the lower bound.
    """
    p = as_exponent(p)
    vertices = [np.asarray(v0, dtype=float)]
    payloads = [payload0]
    lam = np.ones(1)
    lower, best_alpha, best_payload = -np.inf, None, None
    upper = lp_norm(v0, p)
    m = vertices[0]
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        V = np.column_stack(vertices)
        lam_prev = np.append(lam, 0.0) if lam.size < V.shape[1] else lam
        lam, m, dual = min_norm_hull(V, p, lam_prev)
        upper = min(upper, lp_norm(m, p))
        alphas = [dual if dual is not None else align(m, p)]
        if extra_alphas is not None:
            alphas.extend(extra_alphas(m))
        new_vertex = None
        for alpha in alphas:
            val, vertex, payload = oracle(alpha)
            if val > lower:
                lower, best_alpha, best_payload = val, alpha, payload
            if new_vertex is None:
                new_vertex, new_payload = vertex, payload
        if upper - lower <= tol:
            converged = True
            break
        if any(np.allclose(new_vertex, v, rtol=0, atol=1e-13) for v in vertices):
            # no new column: the master is as good as the oracle can certify
            break
        vertices.append(np.asarray(new_vertex, dtype=float))
        payloads.append(new_payload)
    if lam.size < len(payloads):
        lam = np.append(lam, np.zeros(len(payloads) - lam.size))
    return SaddleResult(upper, max(lower, 0.0), best_alpha, m, lam, payloads, best_payload,
                        it, converged)
