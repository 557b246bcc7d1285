"""Finite-volume sequences along cubes and the d-bar sandwich.

All quantities here are exact computations on ``Lambda_n = [-n, n]^d`` for
growing ``n``. The limits themselves are never claimed: sequences come with
monotonicity flags and a crude extrapolation, and the d-bar distance is
bracketed between an exact finite-volume lower bound and the disagreement
rate of an explicit stationary coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .exponents import as_exponent, to_json_exponent, volume_power
from .ipm import d_p
from .lattice import Volume
from .measures import ProcessSpec, realize, relative_entropy
from .transport import q_p

TRANSPORT_CAP = 2048


def _volume(n: int, d: int) -> Volume:
    return Volume.cube(n, d)


def _within_cap(spec: ProcessSpec, vol: Volume, cap: int) -> bool:
    return spec.alphabet_size ** len(vol) <= cap


@dataclass
class LimitSequence:
    """Per-cube values of ``D_p`` (or ``Q_p``) and their normalized versions."""

    p: object
    quantity: str
    ns: list
    sizes: list
    raw: list
    normalized: list
    upper: list = field(default_factory=list)
    truncated: bool = False

    @property
    def nondecreasing(self) -> bool:
        return all(b >= a - 1e-9 for a, b in zip(self.normalized, self.normalized[1:]))

    def extrapolate(self) -> dict:
        """Last value plus the slope of the last three points against ``1/|Lambda|``."""
        if not self.normalized:
            return {"last": math.nan, "slope": math.nan, "intercept": math.nan}
        last = self.normalized[-1]
        if len(self.normalized) < 3:
            return {"last": last, "slope": math.nan, "intercept": math.nan}
        x = 1.0 / np.asarray(self.sizes[-3:], dtype=float)
        y = np.asarray(self.normalized[-3:])
        slope, intercept = np.polyfit(x, y, 1)
        return {"last": last, "slope": float(slope), "intercept": float(intercept)}

    def rows(self) -> list:
        return [(n, size, raw, norm) for n, size, raw, norm in
                zip(self.ns, self.sizes, self.raw, self.normalized)]

    def to_json(self) -> dict:
        return {"p": to_json_exponent(self.p), "quantity": self.quantity, "n": self.ns,
                "volume": self.sizes, "raw": self.raw, "normalized": self.normalized,
                "nondecreasing": self.nondecreasing, "truncated": self.truncated,
                "extrapolation": self.extrapolate()}


def limit_sequence(spec_a: ProcessSpec, spec_b: ProcessSpec, p, n_max: int, d: int = 1,
                   quantity: str = "d", cap: int = TRANSPORT_CAP) -> LimitSequence:
    """``X_{p, Lambda_n}(nu, mu) / |Lambda_n|^(1/p)`` for ``n = 0..n_max``.

    ``quantity`` is ``"d"`` (the metric LP, value = witnessed lower value) or
    ``"q"`` (the transport functional, value = certified upper value). Cubes
    past ``cap`` states are dropped and the sequence is flagged truncated.
    """
    p = as_exponent(p)
    if quantity not in ("d", "q"):
        raise DomainError("quantity must be 'd' or 'q'")
    if spec_a.alphabet_size != spec_b.alphabet_size:
        raise DomainError("processes use different alphabets")
    if d != 1 and "markov" in (spec_a.kind, spec_b.kind):
        raise DomainError("markov processes are realized in d=1 only")
    seq = LimitSequence(p, quantity, [], [], [], [])
    for n in range(n_max + 1):
        vol = _volume(n, d)
        if not _within_cap(spec_a, vol, cap):
            seq.truncated = True
            break
        mu, nu = realize(spec_a, vol), realize(spec_b, vol)
        if quantity == "d":
            cert = d_p(mu, nu, p)
            val, up = cert.value, cert.upper
        else:
            cert = q_p(mu, nu, p)
            val, up = cert.value_upper, cert.value_lower
        w = volume_power(len(vol), p)
        seq.ns.append(n)
        seq.sizes.append(len(vol))
        seq.raw.append(float(val))
        seq.normalized.append(float(val) / w)
        seq.upper.append(float(up) / w)
    return seq


@dataclass
class SuperadditivityRow:
    n: int
    p: object
    whole: float
    parts: tuple
    slack: float


def superadditivity_check(spec_a: ProcessSpec, spec_b: ProcessSpec, p, n: int,
                          quantity: str = "q") -> SuperadditivityRow:
    """``X_{A u B}^p >= X_A^p + X_B^p`` for ``A = [-n, 0)``, ``B = [0, n]`` (d = 1).

    The whole-volume value enters through its lower bound and the parts
    through their upper bounds, so a nonnegative slack is certified.
    """
    p = as_exponent(p)
    if n < 1:
        raise DomainError("need n >= 1 for a nontrivial split")
    whole = Volume.cube(n, 1)
    A, B = Volume.interval(-n, 0), Volume.interval(0, n + 1)
    pf = math.inf if p == math.inf else float(p)

    def bounds(vol):
        mu, nu = realize(spec_a, vol), realize(spec_b, vol)
        if quantity == "q":
            c = q_p(mu, nu, p)
            return c.value_lower, c.value_upper
        c = d_p(mu, nu, p)
        return c.value, c.upper

    w_lo, _ = bounds(whole)
    a_hi = bounds(A)[1]
    b_hi = bounds(B)[1]
    if math.isinf(pf):
        slack = w_lo - max(a_hi, b_hi)
    else:
        slack = w_lo**pf - (a_hi**pf + b_hi**pf)
    return SuperadditivityRow(n, p, w_lo, (a_hi, b_hi), float(slack))


@dataclass
class PIndependenceReport:
    ps: list
    sequences: dict = field(repr=False)
    per_n_spread: list
    final_spread: float
    extrapolated_spread: float

    @property
    def spread_decreasing(self) -> bool:
        s = self.per_n_spread
        return all(b <= a + 1e-12 for a, b in zip(s[1:], s[2:])) if len(s) > 2 else True

    def to_json(self) -> dict:
        return {"p": [to_json_exponent(p) for p in self.ps], "per_n_spread": self.per_n_spread,
                "final_spread": self.final_spread,
                "extrapolated_spread": self.extrapolated_spread,
                "sequences": {to_json_exponent(p) if not isinstance(to_json_exponent(p), int)
                              else str(to_json_exponent(p)): s.to_json()
                              for p, s in self.sequences.items()}}


def p_independence_check(spec_a: ProcessSpec, spec_b: ProcessSpec, ps, n_max: int,
                         quantity: str = "d") -> PIndependenceReport:
    """Spread ``max_p - min_p`` of the normalized values per ``n`` and at the end.

    At ``n = 0`` every normalized value is the single-site distance, so the
    spread there is zero; decrease is judged from ``n = 1`` on.
    """
    ps = [as_exponent(p) for p in ps]
    seqs = {p: limit_sequence(spec_a, spec_b, p, n_max, quantity=quantity) for p in ps}
    length = min(len(s.normalized) for s in seqs.values())
    spread = [max(s.normalized[i] for s in seqs.values()) - min(s.normalized[i] for s in seqs.values())
              for i in range(length)]
    ex = [s.extrapolate()["intercept"] for s in seqs.values()]
    ex_spread = float(np.nanmax(ex) - np.nanmin(ex)) if not all(map(math.isnan, ex)) else math.nan
    return PIndependenceReport(ps, seqs, spread, spread[-1] if spread else math.nan, ex_spread)


# --------------------------------------------------------------- d-bar ---

def _kernel(spec: ProcessSpec) -> np.ndarray:
    if spec.kind == "iid":
        pi = np.asarray(spec.single_site)
        return np.tile(pi, (pi.size, 1))
    if spec.kind == "markov":
        return np.asarray(spec.transition)
    raise DomainError("stationary couplings are built for iid and markov specs")


def maximal_coupling_kernel(spec_a: ProcessSpec, spec_b: ProcessSpec) -> np.ndarray:
    """Transition matrix on ``S x S`` coupling the two chains maximally at each step.

    From ``(x, y)`` both chains move to a common letter ``z`` with probability
    ``min(P(x, z), Q(y, z))``; the remaining mass is spread as the product of
    the normalized residuals. State ``(x, y)`` has index ``x * k + y``.
    """
    P, Q = _kernel(spec_a), _kernel(spec_b)
    k = P.shape[0]
    K = np.zeros((k * k, k * k))
    for x in range(k):
        for y in range(k):
            common = np.minimum(P[x], Q[y])
            rest = 1.0 - common.sum()
            row = np.zeros((k, k))
            row[np.arange(k), np.arange(k)] = common
            if rest > 1e-15:
                row += np.outer(P[x] - common, Q[y] - common) / rest
            K[x * k + y] = row.ravel()
    return K


def _stationary(K: np.ndarray) -> np.ndarray:
    n = K.shape[0]
    A = np.vstack([K.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass
class DbarSandwich:
    lower: float
    upper_exact: float
    upper_mc: float
    half_width: float
    lower_n: int
    steps: int
    flags: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.lower <= self.upper_mc + 3.0 * self.half_width + 1e-9

    def to_json(self) -> dict:
        return {"lower": self.lower, "lower_n": self.lower_n, "upper_exact": self.upper_exact,
                "upper_mc": self.upper_mc, "half_width_95": self.half_width,
                "steps": self.steps, "consistent": self.consistent, "flags": self.flags}


def dbar_sandwich(spec_a: ProcessSpec, spec_b: ProcessSpec, n_max: int = 3,
                  mc_steps: int = 1_000_000, seed: int = 0, burn_in: int = 10_000,
                  chains: int = 1000) -> DbarSandwich:
    """Bracket the d-bar distance of two stationary d=1 processes.

    Lower: ``max_n D_{1, Lambda_n} / |Lambda_n|`` (superadditive, so every term
    is below the limit). Upper: the per-site disagreement of the stationary
    maximal Markov coupling, computed exactly from its stationary law on
    ``S x S`` and estimated by simulation of ``chains`` independent stationary
    copies (``mc_steps`` site draws in total after ``burn_in`` steps per copy);
    the 95% half-width uses the spread of per-copy means.
    """
    flags = []
    seq = limit_sequence(spec_a, spec_b, 1, n_max, quantity="d")
    if seq.truncated:
        flags.append("lower bound sequence truncated at capacity")
    best = int(np.argmax(seq.normalized))
    lower, lower_n = seq.normalized[best], seq.ns[best]
    try:
        K = maximal_coupling_kernel(spec_a, spec_b)
    except DomainError:
        flags.append("no stationary coupling for this process kind; upper bound omitted")
        return DbarSandwich(lower, math.nan, math.nan, math.nan, lower_n, 0, flags)
    k = _kernel(spec_a).shape[0]
    pi = _stationary(K)
    diag = np.arange(k) * (k + 1)
    upper = float(1.0 - pi[diag].sum())
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    cum = np.cumsum(K, axis=1)
    cum[:, -1] = 1.0
    length = max(1, mc_steps // chains)
    state = rng.choice(k * k, size=chains, p=pi)
    for _ in range(burn_in // max(1, length) if burn_in else 0):
        state = _step(cum, state, rng)
    disagree = np.zeros(chains)
    for _ in range(length):
        state = _step(cum, state, rng)
        disagree += (state // k) != (state % k)
    means = disagree / length
    est = float(means.mean())
    hw = float(1.96 * means.std(ddof=1) / math.sqrt(chains)) if chains > 1 else math.inf
    return DbarSandwich(lower, upper, est, hw, lower_n, length * chains, flags)


def _step(cum: np.ndarray, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(state.size)
    return (u[:, None] > cum[state]).sum(axis=1)


# ----------------------------------------------------- entropy density ---

def entropy_rate(nu_spec: ProcessSpec, mu_spec: ProcessSpec) -> float:
    """Closed-form limit of ``s_{Lambda_n}(nu|mu) / |Lambda_n|`` (``inf`` if singular)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        if nu_spec.kind == "iid" and mu_spec.kind == "iid":
            a, b = np.asarray(nu_spec.single_site), np.asarray(mu_spec.single_site)
            if np.any((a > 0) & (b == 0)):
                return math.inf
            keep = a > 0
            return float(np.sum(a[keep] * np.log(a[keep] / b[keep])))
        Pn, Pm = _kernel(nu_spec), _kernel(mu_spec)
        pi = nu_spec.stationary() if nu_spec.kind == "markov" else np.asarray(nu_spec.single_site)
        if np.any((Pn > 0) & (Pm == 0) & (pi[:, None] > 0)):
            return math.inf
        keep = (Pn > 0) & (pi[:, None] > 0)
        terms = np.where(keep, Pn * np.log(np.where(keep, Pn / np.where(Pm > 0, Pm, 1.0), 1.0)), 0.0)
        return float(np.sum(pi[:, None] * terms))


@dataclass
class EntropyDensity:
    ns: list
    sizes: list
    values: list
    rate: float
    infinite: bool = False

    def to_json(self) -> dict:
        return {"n": self.ns, "volume": self.sizes, "density": self.values, "rate": self.rate,
                "infinite": self.infinite}


def entropy_density(nu_spec: ProcessSpec, mu_spec: ProcessSpec, n_max: int, d: int = 1,
                    cap: int = 2**20) -> EntropyDensity:
    """``s_{Lambda_n}(nu|mu) / |Lambda_n|`` with the closed-form rate as oracle."""
    out = EntropyDensity([], [], [], entropy_rate(nu_spec, mu_spec))
    for n in range(n_max + 1):
        vol = _volume(n, d)
        if not _within_cap(mu_spec, vol, cap):
            break
        s = relative_entropy(realize(nu_spec, vol), realize(mu_spec, vol))
        out.ns.append(n)
        out.sizes.append(len(vol))
        if s.infinite:
            out.infinite = True
            out.values.append(math.inf)
        else:
            out.values.append(s.value / len(vol))
    return out


@dataclass
class AverseReport:
    C: float
    rows: list
    tolerance: float = 1e-8

    @property
    def passed(self) -> bool:
        return all(r[1] <= r[2] + self.tolerance for r in self.rows)

    def to_json(self) -> dict:
        return {"C": self.C, "tolerance": self.tolerance, "passed": self.passed,
                "rows": [{"n": n, "dbar_lower": lo, "bound": b, "entropy_density": s}
                         for n, lo, b, s in self.rows]}


def averse_check(mu_spec: ProcessSpec, nu_spec: ProcessSpec, C: float, n_max: int,
                 tol: float = 1e-8) -> AverseReport:
    """``dbar(mu, nu) <= sqrt(2 C s(nu|mu))`` along cubes, for ``mu`` with a checked GCB.

    At each ``n`` the left side is the running lower estimate
    ``max_{m <= n} D_{1, Lambda_m} / |Lambda_m|`` and the right side uses the
    entropy density ``s_{Lambda_n}(nu|mu) / |Lambda_n|`` at the same ``n``.
    For product pairs that density is constant in ``n``; for Markov pairs it
    carries an ``O(1/n)`` boundary term, so rows are a finite-volume check
    rather than a statement about the limit.
    """
    seq = limit_sequence(mu_spec, nu_spec, 1, n_max, quantity="d")
    dens = entropy_density(nu_spec, mu_spec, seq.ns[-1] if seq.ns else 0)
    rows, best = [], 0.0
    for n, lo, s in zip(seq.ns, seq.normalized, dens.values):
        best = max(best, lo)
        rows.append((n, best, math.sqrt(2.0 * C * s) if math.isfinite(s) else math.inf, s))
    return AverseReport(float(C), rows, tol)
