"""Optimal transport on ``S^Lambda x S^Lambda`` and the functionals ``Q_p``.

``Q_p(mu, nu) = inf_Pi ||m(Pi)||_p`` where ``m_i(Pi)`` is the probability
that the two coupled configurations disagree at site ``i``. For ``p = 1`` this
is a single Hamming transport problem. Otherwise the infimum is computed by
column generation over optimal plans, each certified from below by the
transport value at the aligned weights ``alpha`` (see :mod:`latgcb._minimax`).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ._minimax import align, column_generation
from .errors import DomainError, SolverError
from .exponents import INF, as_exponent, is_inf, lp_norm, to_json_exponent
from .lattice import ConfigSpace, Volume
from .measures import ZERO_FLOOR, Measure, marginal
from .simplex import TransportSimplex, complete_duals

SIMPLEX_MAX_CELLS = 256

_ot = None


def _pot():
    global _ot
    if _ot is None:
        # keep POT from importing the deep-learning backends it can find
        for name in ("PYTORCH", "TENSORFLOW", "JAX", "CUPY"):
            os.environ.setdefault(f"POT_BACKEND_DISABLE_{name}", "1")
        import ot

        _ot = ot
    return _ot


@dataclass(frozen=True, eq=False)
class Coupling:
    """A sparse joint law on ``S^Lambda x S^Lambda``.

    ``rows`` index the first (``mu``) configuration, ``cols`` the second
    (``nu``) one, and ``mass`` the joint probabilities.
    """

    space: ConfigSpace
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    mass: np.ndarray = field(repr=False)

    @classmethod
    def from_dense(cls, space: ConfigSpace, joint, rows=None, cols=None, floor: float = 0.0):
        """Build from a dense block whose axes are indexed by ``rows`` / ``cols``."""
        joint = np.asarray(joint, dtype=float)
        rows = np.arange(joint.shape[0]) if rows is None else np.asarray(rows)
        cols = np.arange(joint.shape[1]) if cols is None else np.asarray(cols)
        r, c = np.nonzero(joint > floor)
        return cls(space, rows[r].astype(np.int64), cols[c].astype(np.int64), joint[r, c])

    @classmethod
    def diagonal(cls, mu: Measure) -> "Coupling":
        idx = np.flatnonzero(mu.probs > 0)
        return cls(mu.space, idx, idx.copy(), mu.probs[idx].copy())

    @classmethod
    def product(cls, mu: Measure, nu: Measure) -> "Coupling":
        return cls.from_dense(mu.space, np.outer(mu.probs, nu.probs))

    def joint(self) -> np.ndarray:
        N = self.space.n_states
        out = np.zeros((N, N))
        np.add.at(out, (self.rows, self.cols), self.mass)
        return out

    def first_marginal(self) -> np.ndarray:
        return np.bincount(self.rows, weights=self.mass, minlength=self.space.n_states)

    def second_marginal(self) -> np.ndarray:
        return np.bincount(self.cols, weights=self.mass, minlength=self.space.n_states)

    def check(self, mu: Measure, nu: Measure, tol: float = 1e-10) -> None:
        if np.any(self.mass < -tol):
            raise DomainError("coupling has negative mass")
        if np.max(np.abs(self.first_marginal() - mu.probs)) > tol:
            raise DomainError("first marginal does not match mu")
        if np.max(np.abs(self.second_marginal() - nu.probs)) > tol:
            raise DomainError("second marginal does not match nu")

    def disagreement(self) -> "DisagreementMarginals":
        D = self.space.digits
        vals = (D[self.rows] != D[self.cols]).T.astype(float) @ self.mass
        return DisagreementMarginals(self.space.volume, np.clip(vals, 0.0, 1.0))

    def expect(self, cost: np.ndarray) -> float:
        return float(np.dot(cost[self.rows, self.cols], self.mass))


@dataclass(frozen=True, eq=False)
class DisagreementMarginals:
    """``m_i = Pi{sigma_i != sigma'_i}`` for every site of the volume."""

    volume: Volume
    values: np.ndarray

    def __getitem__(self, site) -> float:
        return float(self.values[self.volume.index(site)])

    def norm(self, p) -> float:
        return lp_norm(self.values, p)


def coupling_cost(plan: Coupling, p, sub: Volume | None = None) -> float:
    """``Psi(Pi, Lambda) = ||m(Pi)||_p`` restricted to ``sub`` (default: all sites)."""
    m = plan.disagreement()
    if sub is None:
        return m.norm(p)
    if not sub.issubset(m.volume):
        raise DomainError("sub-volume is not contained in the coupling volume")
    return lp_norm([m[s] for s in sub.sites], p)


@dataclass
class OTResult:
    """Optimal value, plan and dual potentials of one transport problem."""

    value: float
    plan: Coupling
    u: np.ndarray
    v: np.ndarray
    method: str


def _check_pair(mu: Measure, nu: Measure) -> None:
    if mu.space != nu.space:
        raise DomainError("measures live on different configuration spaces")


class _OTOracle:
    """Repeated transport between fixed marginals under weighted Hamming costs.

    Supports, per-site disagreement masks and (for small problems) the simplex
    basis are kept across calls.
    """

    def __init__(self, mu: Measure, nu: Measure, method: str = "auto"):
        _check_pair(mu, nu)
        self.space = mu.space
        self.rows = np.flatnonzero(mu.probs > ZERO_FLOOR)
        self.cols = np.flatnonzero(nu.probs > ZERO_FLOOR)
        self.a = mu.probs[self.rows]
        self.b = nu.probs[self.cols]
        self.b = self.b * (self.a.sum() / self.b.sum())
        D = self.space.digits
        self.masks = (D[self.rows][:, None, :] != D[self.cols][None, :, :]).transpose(2, 0, 1)
        self.method = _pick(method, self.rows.size * self.cols.size)
        self._simplex = None

    def cost(self, alpha) -> np.ndarray:
        return np.tensordot(np.asarray(alpha, dtype=float), self.masks, axes=1)

    def solve_block(self, C: np.ndarray):
        if self.method == "simplex":
            if self._simplex is None:
                self._simplex = TransportSimplex(self.a, self.b)
            return self._simplex.solve(C)
        return _solve_block(self.a, self.b, C, self.method)

    def __call__(self, alpha):
        C = self.cost(alpha)
        val, X, _, _ = self.solve_block(C)
        m = np.tensordot(self.masks, X, axes=([1, 2], [0, 1]))
        return val, np.clip(m, 0.0, 1.0), X

    def coupling(self, X) -> Coupling:
        return Coupling.from_dense(self.space, X, self.rows, self.cols)


def _pick(method: str, cells: int) -> str:
    if method == "auto":
        return "simplex" if cells <= SIMPLEX_MAX_CELLS else "emd"
    if method not in ("simplex", "emd", "highs"):
        raise DomainError(f"unknown transport method {method!r}")
    return method


def _solve_block(a, b, C, method):
    if method == "simplex":
        return TransportSimplex(a, b).solve(C)
    if method == "emd":
        ot = _pot()
        X, log = ot.emd(a, b, C, numItermax=50_000_000, log=True)
        if log.get("warning"):
            raise SolverError(f"network simplex did not finish: {log['warning']}")
        u = np.asarray(log["u"], dtype=float)
        v = np.asarray(log["v"], dtype=float)
        return float(np.sum(C * X)), np.asarray(X), u, v
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix, vstack

    m, n = C.shape
    ii, jj = np.divmod(np.arange(m * n), n)
    A_r = coo_matrix((np.ones(m * n), (ii, np.arange(m * n))), shape=(m, m * n))
    A_c = coo_matrix((np.ones(m * n), (jj, np.arange(m * n))), shape=(n, m * n))
    res = linprog(C.ravel(), A_eq=vstack([A_r, A_c]).tocsr(), b_eq=np.r_[a, b],
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise SolverError(f"HiGHS failed: {res.message}")
    duals = res.eqlin.marginals
    return float(res.fun), res.x.reshape(m, n), duals[:m], duals[m:]


def solve_ot(mu: Measure, nu: Measure, cost, method: str = "auto") -> OTResult:
    """Exact optimal transport between ``mu`` and ``nu``.

    Parameters
    ----------
    mu, nu : Measure
        Marginals on the same configuration space.
    cost : array-like, shape (N, N)
        Finite nonnegative cost; ``cost[x, y]`` is the price of moving ``x``
        (a ``mu`` configuration) to ``y``.
    method : {"auto", "simplex", "emd", "highs"}
        ``"simplex"`` is the in-house transportation simplex with Bland's rule,
        ``"emd"`` the network simplex of POT and ``"highs"`` a generic LP.
        ``"auto"`` uses the first for small supports and the second otherwise.

    Returns
    -------
    OTResult
        Value, plan and potentials ``u, v`` with ``u_x + v_y <= cost[x, y]``
        and ``<mu, u> + <nu, v> = value``.
    """
    _check_pair(mu, nu)
    C = np.asarray(cost, dtype=float)
    N = mu.space.n_states
    if C.shape != (N, N):
        raise DomainError(f"cost must be {N}x{N}")
    if not np.all(np.isfinite(C)) or np.any(C < 0):
        raise DomainError("cost must be finite and nonnegative")
    rows = np.flatnonzero(mu.probs > ZERO_FLOOR)
    cols = np.flatnonzero(nu.probs > ZERO_FLOOR)
    a = mu.probs[rows]
    b = nu.probs[cols]
    b = b * (a.sum() / b.sum())
    block = C[np.ix_(rows, cols)]
    method = _pick(method, rows.size * cols.size)
    val, X, u_s, v_s = _solve_block(a, b, block, method)
    u, v = complete_duals(C, rows, cols, np.asarray(u_s), np.asarray(v_s))
    plan = Coupling.from_dense(mu.space, X, rows, cols)
    return OTResult(val, plan, u, v, method)


def hamming_w1(mu: Measure, nu: Measure, method: str = "auto") -> float:
    """Hamming Kantorovich distance ``W_1 = min_Pi sum_i m_i(Pi)``."""
    _check_pair(mu, nu)
    if np.array_equal(mu.probs, nu.probs):
        return 0.0
    return solve_ot(mu, nu, mu.space.hamming(), method).value


def wasserstein_p_hamming(mu: Measure, nu: Measure, p, method: str = "auto") -> float:
    """``(min_Pi E[d_H^p])^(1/p)`` for finite ``p >= 1``."""
    p = as_exponent(p)
    if is_inf(p):
        raise DomainError("wasserstein_p_hamming needs a finite exponent")
    _check_pair(mu, nu)
    if np.array_equal(mu.probs, nu.probs):
        return 0.0
    val = solve_ot(mu, nu, mu.space.hamming() ** float(p), method).value
    return max(val, 0.0) ** (1.0 / float(p))


@dataclass
class TransportCertificate:
    """Two-sided bounds on ``Q_p`` with the plan and dual weights behind them."""

    p: object
    value_upper: float
    value_lower: float
    alpha: np.ndarray
    m: np.ndarray
    plan: Coupling = field(repr=False)
    converged: bool = True
    iterations: int = 0

    @property
    def gap(self) -> float:
        return max(self.value_upper - self.value_lower, 0.0)

    @property
    def value(self) -> float:
        return self.value_upper

    def to_json(self) -> dict:
        return {
            "p": to_json_exponent(self.p),
            "value_upper": float(self.value_upper),
            "value_lower": float(self.value_lower),
            "gap": float(self.gap),
            "alpha": [float(x) for x in self.alpha],
            "m": [float(x) for x in self.m],
        }


def q_p(mu: Measure, nu: Measure, p, tol: float = 1e-9, max_iter: int = 500,
        method: str = "auto") -> TransportCertificate:
    """Compute ``Q_p(mu, nu) = inf over couplings of ||m(Pi)||_p``.

    Parameters
    ----------
    mu, nu : Measure
    p : exponent in ``[1, inf]`` (Fraction, int, float or ``"inf"``)
    tol : float
        Target for ``value_upper - value_lower``.
    max_iter : int
        Cap on oracle calls; when hit, the certificate carries the best bounds
        with ``converged=False``.

    Returns
    -------
    TransportCertificate
        ``value_upper`` is ``||m||_p`` of the returned plan and
        ``value_lower`` is the transport value at ``alpha`` (``||alpha||_q <= 1``),
        so ``value_lower <= Q_p <= value_upper``.

    Examples
    --------
    >>> from latgcb import ConfigSpace, Measure, Volume
    >>> sp = ConfigSpace(Volume.cube(0), 2)
    >>> cert = q_p(Measure(sp, [0.5, 0.5]), Measure(sp, [0.8, 0.2]), 2)
    >>> round(cert.value_upper, 9)
    0.3
    """
    p = as_exponent(p)
    _check_pair(mu, nu)
    n = mu.space.n_sites
    if np.array_equal(mu.probs, nu.probs):
        zero = np.zeros(n)
        return TransportCertificate(p, 0.0, 0.0, align(zero, p), zero, Coupling.diagonal(mu))
    oracle = _OTOracle(mu, nu, method)
    ones = np.ones(n)
    val1, m1, X1 = oracle(ones)
    if p == 1:
        return TransportCertificate(p, float(m1.sum()), val1, ones, m1, oracle.coupling(X1))
    extra = (lambda m: [align(m, INF)]) if is_inf(p) else None
    res = column_generation(oracle, p, m1, X1, tol=tol, max_iter=max_iter, extra_alphas=extra)
    X = sum(l * Xk for l, Xk in zip(res.lam, res.payloads) if l > 0)
    plan = oracle.coupling(X)
    m = plan.disagreement().values
    upper = lp_norm(m, p)
    return TransportCertificate(p, upper, min(res.lower, upper), res.alpha, m, plan,
                                converged=upper - res.lower <= max(tol, 1e-12),
                                iterations=res.iterations)


def q_inf_lp(mu: Measure, nu: Measure) -> float:
    """``Q_inf`` as one LP over the full transportation polytope (reference route)."""
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix, hstack, vstack

    _check_pair(mu, nu)
    N, n = mu.space.n_states, mu.space.n_sites
    D = mu.space.digits
    cells = N * N
    ii, jj = np.divmod(np.arange(cells), N)
    A_r = coo_matrix((np.ones(cells), (ii, np.arange(cells))), shape=(N, cells))
    A_c = coo_matrix((np.ones(cells), (jj, np.arange(cells))), shape=(N, cells))
    A_eq = hstack([vstack([A_r, A_c]), coo_matrix((2 * N, 1))])
    H = (D[ii] != D[jj]).T.astype(float)
    A_ub = hstack([coo_matrix(H), coo_matrix(-np.ones((n, 1)))])
    c = np.zeros(cells + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub.tocsr(), b_ub=np.zeros(n), A_eq=A_eq.tocsr(),
                  b_eq=np.r_[mu.probs, nu.probs], bounds=[(0, None)] * cells + [(None, None)],
                  method="highs")
    if res.status != 0:
        raise SolverError(f"HiGHS failed: {res.message}")
    return float(res.fun)


def marton_bound(mu: Measure, nu: Measure, plan: Coupling) -> float:
    """``sum_i sum_xi Pi{s_i != s'_i | s' = xi}^2 nu(xi)``, conditioning on the ``nu`` side."""
    _check_pair(mu, nu)
    D = mu.space.digits
    N = mu.space.n_states
    total = 0.0
    dis = D[plan.rows] != D[plan.cols]
    for j in range(mu.space.n_sites):
        joint = np.bincount(plan.cols, weights=plan.mass * dis[:, j], minlength=N)
        keep = nu.probs > ZERO_FLOOR
        total += float(np.sum(joint[keep] ** 2 / nu.probs[keep]))
    return total


def extend_coupling(plan: Coupling, target: Volume, filler: Measure) -> Coupling:
    """Extend ``plan`` from its volume to ``target``.

    Both copies of the configuration on ``target \\ Lambda`` are drawn
    independently from the marginal of ``filler`` there, independently of
    the ``Lambda`` block.
    """
    vol = plan.space.volume
    if not vol.issubset(target):
        raise DomainError("target volume must contain the coupling volume")
    if filler.space.volume != target or filler.space.alphabet_size != plan.space.alphabet_size:
        raise DomainError("filler must be a measure on the target volume with the same alphabet")
    if target == vol:
        return plan
    rest = target.difference(vol)
    rho = marginal(filler, rest)
    big = filler.space
    # rank in target = rank of the Lambda part + rank of the rest part, mapped via digits
    lam_idx = big.restriction_index(vol)
    rest_idx = big.restriction_index(rest)
    lookup = np.full((plan.space.n_states, rho.space.n_states), -1, dtype=np.int64)
    lookup[lam_idx, rest_idx] = np.arange(big.n_states)
    rsup = np.flatnonzero(rho.probs > 0)
    w = rho.probs[rsup]
    # every (plan entry, rest1, rest2) triple
    e, r1, r2 = np.meshgrid(np.arange(plan.mass.size), np.arange(rsup.size), np.arange(rsup.size),
                            indexing="ij")
    e, r1, r2 = e.ravel(), r1.ravel(), r2.ravel()
    rows = lookup[plan.rows[e], rsup[r1]]
    cols = lookup[plan.cols[e], rsup[r2]]
    mass = plan.mass[e] * w[r1] * w[r2]
    return Coupling(big, rows, cols, mass)
