"""Gaussian concentration bounds and their transport-entropy counterparts.

Convention: ``mu`` satisfies GCB with constant ``C`` for the ``l^q`` norm when

    log int exp(f - mu(f)) dmu <= (C/2) ||delta f||_q^2

for every local ``f``. Fair coins satisfy it with ``C = 1/4`` at ``q = 2``
(McDiarmid), and ``1/4`` is optimal: it is approached as ``f`` shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .exponents import as_exponent, to_json_exponent
from .ipm import d_p
from .lattice import ConfigSpace, LocalFunction, Volume, osc_norm
from .measures import (Measure, ProcessSpec, log_mgf, marginal, realize, relative_entropy,
                       tilt)
from .transport import q_p

VIOLATION_TOL = 1e-9
BOUND_TOL = 1e-8


# ---------------------------------------------------------------- suites ---

def function_suite(space: ConfigSpace, rng: np.random.Generator, size: int = 20) -> list:
    """Random nonconstant local functions of mixed shape and scale."""
    vals = space.values
    n, N = space.n_sites, space.n_states
    out = []
    kinds = ("linear", "pair", "table", "indicator", "max")
    while len(out) < size:
        kind = kinds[len(out) % len(kinds)]
        scale = float(np.exp(rng.uniform(np.log(0.05), np.log(4.0))))
        if kind == "linear":
            table = vals @ rng.normal(size=n)
        elif kind == "pair" and n >= 2:
            i, j = rng.choice(n, 2, replace=False)
            table = vals[:, i] * vals[:, j]
        elif kind == "indicator":
            table = (rng.random(N) < 0.3).astype(float)
        elif kind == "max":
            table = vals.max(axis=1)
        else:
            table = rng.normal(size=N)
        f = LocalFunction(space, scale * table)
        if not f.is_constant(1e-12):
            out.append(f)
    return out


def mcdiarmid_suite(space: ConfigSpace, rng: np.random.Generator, size: int = 20) -> list:
    """The random suite plus sums of single-site functions at several scales."""
    vals = space.values
    base = [LocalFunction(space, a * vals.sum(axis=1)) for a in (0.01, 0.5, 1.0, 3.0)]
    return base + function_suite(space, rng, size)


def sample_nu(mu: Measure, rng: np.random.Generator, kind: str | None = None,
              direction: LocalFunction | None = None) -> Measure:
    """Draw a test measure: Dirichlet(1), sparse support, or a tilt of ``mu``.

    ``direction`` pins the tilt to a given function (e.g. an optimal-constant
    witness); the tilt strength is drawn log-uniformly.
    """
    N = mu.space.n_states
    if kind is None:
        kind = ("dirichlet", "sparse", "tilt")[int(rng.integers(3))]
    if kind == "dirichlet":
        return Measure.normalized(mu.space, rng.dirichlet(np.ones(N)))
    if kind == "sparse":
        k = int(rng.integers(1, max(2, N // 2) + 1))
        w = np.zeros(N)
        idx = rng.choice(N, size=k, replace=False)
        w[idx] = rng.dirichlet(np.ones(k))
        return Measure.normalized(mu.space, w)
    if kind == "tilt":
        f = direction if direction is not None else function_suite(mu.space, rng, 1)[0]
        beta = float(np.exp(rng.uniform(np.log(1e-2), np.log(3.0))))
        beta *= 1.0 if rng.random() < 0.5 else -1.0
        return tilt(mu, f * (beta / max(osc_norm(f, 2), 1e-300)))
    raise DomainError(f"unknown sampler kind {kind!r}")


# ------------------------------------------------------------- gcb check ---

@dataclass
class GcbReport:
    """Outcome of checking the exponential-moment bound on a suite."""

    C: float
    q: object
    violations: list
    max_ratio: float
    n_functions: int
    rows: list = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"C": self.C, "q": to_json_exponent(self.q), "n_functions": self.n_functions,
                "max_ratio": self.max_ratio, "tolerance": VIOLATION_TOL,
                "violations": [list(v) for v in self.violations], "passed": self.passed}


def gcb_check(mu: Measure, C: float, q, suite: list) -> GcbReport:
    """Compare ``log int e^{f - mu f} dmu`` with ``(C/2) ||delta f||_q^2`` on ``suite``.

    ``max_ratio`` is the largest ``lhs / ((1/2) ||delta f||_q^2)`` over
    nonconstant members, i.e. the best constant this suite can certify.
    """
    if C <= 0:
        raise DomainError("C must be positive")
    if not suite:
        raise DomainError("empty function suite")
    q = as_exponent(q)
    violations, rows = [], []
    max_ratio = 0.0
    for k, f in enumerate(suite):
        lhs = log_mgf(mu, f)
        norm2 = osc_norm(f, q) ** 2
        rhs = 0.5 * C * norm2
        rows.append((k, lhs, rhs))
        if norm2 > 0:
            max_ratio = max(max_ratio, lhs / (0.5 * norm2))
        if lhs > rhs + VIOLATION_TOL:
            violations.append((k, lhs, rhs))
    return GcbReport(float(C), q, violations, max_ratio, len(suite), rows)


# ------------------------------------------------------ optimal constant ---

@dataclass
class OptimalConstant:
    """A certified lower bound on the best GCB constant, with its witness."""

    C_lower: float
    witness: LocalFunction | None
    variance_limit: float
    failed: bool = False


SCALES = (1e-3, 0.25, 0.5, 1.0, 2.0, 4.0)


def _ratio(mu, f, q):
    n2 = osc_norm(f, q) ** 2
    return 0.0 if n2 == 0 else log_mgf(mu, f) / (0.5 * n2)


def optimal_constant(mu: Measure, q=2, restarts: int = 8, steps: int = 200,
                     seed: int = 0) -> OptimalConstant:
    """Lower-bound ``sup_f log int e^{f - mu f} dmu / ((1/2) ||delta f||_q^2)``.

    Multistart gradient ascent over function tables normalized to
    ``||delta f||_q = 1``, run at several scales ``t`` of ``t f``. The ratio is
    scale-dependent and its small-``t`` limit is ``Var_mu(f) / ||delta f||_q^2``
    (times 1, by the second-order expansion), so the smallest scale tracks the
    variance limit. Only attained ratios are reported; the result is a lower
    bound, never a claim of optimality.
    """
    q = as_exponent(q)
    rng = np.random.default_rng(seed)
    space = mu.space
    sup = mu.support()
    if sup.sum() <= 1:
        return OptimalConstant(0.0, None, 0.0)
    best, best_f, best_var = 0.0, None, 0.0
    starts = [LocalFunction(space, space.values.sum(axis=1))]
    starts += [LocalFunction(space, rng.normal(size=space.n_states)) for _ in range(restarts - 1)]
    for f0 in starts:
        if f0.is_constant(1e-12):
            continue
        for t in SCALES:
            g = f0 / osc_norm(f0, q)
            cur = _ratio(mu, g * t, q)
            eta = 0.5
            for _ in range(steps):
                tf = g * t
                grad = (tilt(mu, tf).probs - mu.probs) / t
                cand = LocalFunction(space, g.values + eta * grad)
                nrm = osc_norm(cand, q)
                if nrm == 0:
                    eta *= 0.5
                    continue
                cand = cand / nrm
                val = _ratio(mu, cand * t, q)
                if val > cur:
                    g, cur = cand, val
                    eta = min(eta * 1.5, 10.0)
                else:
                    eta *= 0.5
                    if eta < 1e-10:
                        break
            if cur > best:
                best, best_f = cur, g * t
            c = g.values - mu.expect(g)
            best_var = max(best_var, float(np.dot(mu.probs, c * c)))
    return OptimalConstant(best, best_f, best_var, failed=best_f is None)


# ------------------------------------------------------- EDI-type checks ---

@dataclass
class InequalityReport:
    """Rows ``(trial, entropy, distance, bound, slack)``; slack < 0 is a violation."""

    name: str
    C: float
    rows: list = field(repr=False)
    violations: list
    ambiguous: list
    tolerance: float = BOUND_TOL

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"check": self.name, "C": self.C, "trials": len(self.rows),
                "tolerance": self.tolerance, "violations": len(self.violations),
                "ambiguous": len(self.ambiguous), "passed": self.passed,
                "min_slack": min((r[4] for r in self.rows), default=0.0)}

    def violation_rows(self) -> list:
        return [self.rows[i] for i in self.violations]


def _judge(rows, violations, ambiguous, k, s, lo, hi, bound):
    """Pass when the upper bound clears, violate when the lower bound breaks."""
    if hi <= bound + BOUND_TOL:
        rows.append((k, s, hi, bound, bound - hi))
    elif lo > bound + BOUND_TOL:
        rows.append((k, s, lo, bound, bound - lo))
        violations.append(len(rows) - 1)
    else:
        rows.append((k, s, hi, bound, bound - hi))
        ambiguous.append(len(rows) - 1)


def _draws(mu, trials, seed, directions=()):
    ss = np.random.SeedSequence(seed)
    for k, child in enumerate(ss.spawn(trials)):
        rng = np.random.default_rng(child)
        if k == 0:
            yield k, mu
            continue
        if directions and k % 4 == 0:
            yield k, sample_nu(mu, rng, "tilt", directions[(k // 4) % len(directions)])
        else:
            yield k, sample_nu(mu, rng)


def edi_check(mu: Measure, C: float, p=2, trials: int = 500, seed: int = 0,
              directions=()) -> InequalityReport:
    """Check ``D_p(nu, mu) <= sqrt(2 C s(nu|mu))`` on sampled ``nu``.

    ``D_p`` is bracketed by the metric LP (witnessed lower value and certified
    upper value); a trial passes when the upper value clears the bound and
    fails only when the witnessed value exceeds it. Infinite entropy passes
    vacuously.
    """
    rows, viol, amb = [], [], []
    for k, nu in _draws(mu, trials, seed, tuple(directions)):
        s = relative_entropy(nu, mu)
        if s.infinite:
            rows.append((k, math.inf, math.nan, math.inf, math.inf))
            continue
        bound = math.sqrt(2.0 * C * s.value)
        cert = d_p(mu, nu, p)
        _judge(rows, viol, amb, k, s.value, cert.value, cert.upper, bound)
    return InequalityReport("edi", float(C), rows, viol, amb)


def characterization_check(spec: ProcessSpec, C: float, volumes, trials: int = 500,
                           seed: int = 0, suite_size: int = 20) -> dict:
    """Transport-entropy side ``Q_2 <= sqrt(2 C s)`` and the GCB side, per volume.

    Returns per-volume reports for both statements so their pass/fail
    direction can be compared.
    """
    out = {}
    ss = np.random.SeedSequence(seed)
    for vol, child in zip(volumes, ss.spawn(len(volumes))):
        mu = realize(spec, vol)
        rng = np.random.default_rng(child)
        suite = mcdiarmid_suite(mu.space, rng, suite_size)
        g = gcb_check(mu, C, 2, suite)
        dirs = tuple(suite[:4])
        rows, viol, amb = [], [], []
        for k, nu in _draws(mu, trials, int(rng.integers(2**32)), dirs):
            s = relative_entropy(nu, mu)
            if s.infinite:
                rows.append((k, math.inf, math.nan, math.inf, math.inf))
                continue
            bound = math.sqrt(2.0 * C * s.value)
            cert = q_p(mu, nu, 2)
            _judge(rows, viol, amb, k, s.value, cert.value_lower, cert.value_upper, bound)
        out[len(vol)] = {"transport": InequalityReport("characterization", float(C), rows, viol, amb),
                         "gcb": g}
    return out


def etuve_check(mu: Measure, trials: int = 200, seed: int = 0) -> InequalityReport:
    """Marton-type bound ``min_Pi sum_i m_i^2 <= 2 (1/4) s(nu|mu)`` for product ``mu``."""
    if not _is_product(mu):
        raise DomainError("the entropy-transport check needs a product measure")
    rows, viol, amb = [], [], []
    for k, nu in _draws(mu, trials, seed):
        s = relative_entropy(nu, mu)
        if s.infinite:
            rows.append((k, math.inf, math.nan, math.inf, math.inf))
            continue
        cert = q_p(mu, nu, 2)
        bound = 0.5 * s.value
        _judge(rows, viol, amb, k, s.value, cert.value_lower**2, cert.value_upper**2, bound)
    return InequalityReport("etuve", 0.25, rows, viol, amb)


def _is_product(mu: Measure, tol: float = 1e-12) -> bool:
    space = mu.space
    margs = [marginal(mu, Volume([s])).probs for s in space.volume.sites]
    prod = np.ones(space.n_states)
    for j, m in enumerate(margs):
        prod = prod * m[space.digits[:, j]]
    return bool(np.max(np.abs(prod - mu.probs)) <= tol)


# -------------------------------------------------------------- pressure ---

@dataclass
class PressureValue:
    value: float
    method: str
    lower: float = math.nan
    upper: float = math.nan


def _chain(spec: ProcessSpec):
    if spec.kind == "iid":
        pi = np.asarray(spec.single_site)
        return np.tile(pi, (pi.size, 1)), pi
    if spec.kind == "markov":
        P = np.asarray(spec.transition)
        if np.any(P.sum(axis=1) == 0):
            raise DomainError("transition matrix has a zero row")
        return P, spec.initial_law()
    raise DomainError("pressure is implemented for iid and markov specs (d=1)")


def _window(f: LocalFunction) -> int:
    vol = f.space.volume
    if not vol.is_interval():
        raise DomainError("pressure needs a function on a d=1 interval")
    return len(vol)


def transfer_matrix(spec: ProcessSpec, f: LocalFunction) -> np.ndarray:
    """Positive operator on words of length ``r = |dep f|``.

    ``T[(x_1..x_r), (x_2..x_{r+1})] = P(x_r, x_{r+1}) exp(f(x_2..x_{r+1}))``.
    """
    P, _ = _chain(spec)
    k = P.shape[0]
    if f.space.alphabet_size != k:
        raise DomainError("function alphabet does not match the process")
    r = _window(f)
    W = k**r
    T = np.zeros((W, W))
    words = np.arange(W)
    # rank is little-endian: x_1 is the lowest digit
    last = (words // k ** (r - 1)) % k
    tail = words // k
    for a in range(k):
        nxt = tail + a * k ** (r - 1)
        T[words, nxt] = P[last, a] * np.exp(f.values[nxt])
    return T


def pressure(spec: ProcessSpec, f: LocalFunction, tol: float = 1e-12,
             max_iter: int = 100_000) -> PressureValue:
    """``lim (1/n) log int exp(sum of n translates of f) dmu`` via the transfer operator.

    Power iteration with Collatz-Wielandt bracketing: for any positive ``x``,
    ``min (Tx)/x <= rho(T) <= max (Tx)/x``.
    """
    spec.validate()
    T = transfer_matrix(spec, f)
    shift = float(np.max(f.values))
    T = T * math.exp(-shift)
    x = np.ones(T.shape[0])
    lo, hi = 0.0, math.inf
    for _ in range(max_iter):
        y = x @ T
        pos = x > 0
        ratios = y[pos] / x[pos]
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * hi:
            break
        x = y / y.max()
        x = np.maximum(x, 1e-300)
    else:
        # periodic or reducible operator: fall back to a dense eigensolve
        lam = float(np.max(np.abs(np.linalg.eigvals(T))))
        return PressureValue(math.log(lam) + shift, "transfer-eig")
    lam = 0.5 * (lo + hi)
    return PressureValue(math.log(lam) + shift, "transfer", math.log(lo) + shift,
                         math.log(hi) + shift)


def finite_pressure(spec: ProcessSpec, f: LocalFunction, n: int) -> float:
    """``(1/n) log int exp(sum_{i<n} tau_i f) dmu`` on the window of ``n + r - 1`` sites."""
    P, init = _chain(spec)
    k = P.shape[0]
    r = _window(f)
    W = k**r
    digits = (np.arange(W)[:, None] // k ** np.arange(r)[None, :]) % k
    logv = np.log(np.maximum(init[digits[:, 0]], 1e-300))
    for j in range(1, r):
        logv += np.log(np.maximum(P[digits[:, j - 1], digits[:, j]], 1e-300))
    logv += f.values
    T = transfer_matrix(spec, f)
    logZ = 0.0
    v = np.exp(logv - logv.max())
    logZ += logv.max()
    for _ in range(n - 1):
        v = v @ T
        s = v.sum()
        logZ += math.log(s)
        v /= s
    return (logZ + math.log(v.sum())) / n


def brute_pressure(spec: ProcessSpec, f: LocalFunction, n: int) -> float:
    """The same finite-``n`` quantity by enumeration of the whole window."""
    r = _window(f)
    vol = Volume.interval(0, n + r - 1)
    mu = realize(spec, vol)
    total = np.zeros(mu.space.n_states)
    for i in range(n):
        sub = Volume.interval(i, i + r)
        total += f.values[mu.space.restriction_index(sub)]
    logw = total + np.log(np.maximum(mu.probs, 1e-300))
    top = logw.max()
    return float((top + math.log(np.sum(np.exp(logw - top)))) / n)


def stationary_mean(spec: ProcessSpec, f: LocalFunction) -> float:
    r = _window(f)
    mu = realize(spec, Volume.interval(0, r))
    return float(np.dot(mu.probs, f.values))


@dataclass
class ThermoGcbReport:
    C: float
    rows: list = field(repr=False)
    violations: list
    weak_violations: list

    @property
    def passed(self) -> bool:
        return not self.violations and not self.weak_violations

    def to_json(self) -> dict:
        return {"C": self.C, "n_functions": len(self.rows), "tolerance": BOUND_TOL,
                "violations": len(self.violations), "weak_violations": len(self.weak_violations),
                "max_lhs_over_rhs": max((r[1] / r[2] for r in self.rows if r[2] > 0), default=0.0),
                "passed": self.passed}


def thermo_gcb_check(spec: ProcessSpec, C: float, suite: list,
                     n_grid=(8, 10, 12, 14)) -> ThermoGcbReport:
    """``p(f - mu f | mu) <= (C/2) ||delta f||_1^2`` for each ``f`` in ``suite``.

    The weak form replaces the pressure by the largest finite-``n`` value on
    ``n_grid`` (an empirical upper envelope of the limsup).
    """
    rows, viol, weak = [], [], []
    for k, f in enumerate(suite):
        mean = stationary_mean(spec, f)
        lhs = pressure(spec, f).value - mean
        rhs = 0.5 * C * osc_norm(f, 1) ** 2
        env = max(finite_pressure(spec, f, n) for n in n_grid) - mean
        rows.append((k, lhs, rhs, env))
        if lhs > rhs + BOUND_TOL:
            viol.append(k)
        if env > rhs + BOUND_TOL:
            weak.append(k)
    return ThermoGcbReport(float(C), rows, viol, weak)


def range_suite(spec: ProcessSpec, rng: np.random.Generator, size: int = 20, max_range: int = 3,
                symbols=None) -> list:
    """Finite-range functions on intervals ``[0, r)`` with ``r <= max_range``."""
    out = []
    while len(out) < size:
        r = 1 + len(out) % max_range
        space = ConfigSpace(Volume.interval(0, r), spec.alphabet_size,
                            symbols if symbols is not None else spec.symbols)
        out.extend(function_suite(space, rng, 1))
    return out


__all__ = ["GcbReport", "InequalityReport", "OptimalConstant", "PressureValue",
           "ThermoGcbReport", "brute_pressure", "characterization_check", "edi_check",
           "etuve_check", "finite_pressure", "function_suite", "gcb_check", "mcdiarmid_suite",
           "optimal_constant", "pressure", "range_suite", "sample_nu", "stationary_mean",
           "thermo_gcb_check", "transfer_matrix"]
