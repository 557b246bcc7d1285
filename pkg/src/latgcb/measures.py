"""Probability measures on ``S^Lambda`` and relative entropy.

Logarithms are natural throughout, so entropies and concentration constants
are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError
from .lattice import ConfigSpace, LocalFunction, Volume

PROB_TOL = 1e-12
ZERO_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class Measure:
    """A probability table over the configurations of ``space``."""

    space: ConfigSpace
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if p.shape != (self.space.n_states,):
            raise DomainError(f"table has {p.size} entries, expected {self.space.n_states}")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0):
            raise DomainError("probabilities must be finite and nonnegative")
        total = p.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def normalized(cls, space: ConfigSpace, weights) -> "Measure":
        w = np.asarray(weights, dtype=float)
        return cls(space, w / w.sum())

    @classmethod
    def uniform(cls, space: ConfigSpace) -> "Measure":
        return cls(space, np.full(space.n_states, 1.0 / space.n_states))

    @classmethod
    def dirac(cls, space: ConfigSpace, config) -> "Measure":
        """Point mass at a rank or at a configuration (sequence or site mapping)."""
        p = np.zeros(space.n_states)
        p[config if isinstance(config, (int, np.integer)) else space.rank(config)] = 1.0
        return cls(space, p)

    @classmethod
    def product(cls, space: ConfigSpace, marginals) -> "Measure":
        """Product of per-site laws; ``marginals`` is one vector or one per site."""
        marginals = np.asarray(marginals, dtype=float)
        if marginals.ndim == 1:
            marginals = np.tile(marginals, (space.n_sites, 1))
        if marginals.shape != (space.n_sites, space.alphabet_size):
            raise DomainError("need a single-site law of length |S| for every site")
        logp = np.zeros(space.n_states)
        with np.errstate(divide="ignore"):
            for j in range(space.n_sites):
                logp += np.log(marginals[j])[space.digits[:, j]]
        p = np.exp(logp)
        return cls(space, p / p.sum())

    def support(self) -> np.ndarray:
        return self.probs > ZERO_FLOOR

    def expect(self, f: LocalFunction) -> float:
        _same_space(self.space, f.space)
        return float(np.dot(self.probs, f.values))

    def allclose(self, other: "Measure", atol: float = 1e-10) -> bool:
        return self.space == other.space and bool(np.allclose(self.probs, other.probs, rtol=0, atol=atol))

    def to_json(self) -> dict:
        out = {
            "alphabet": self.space.alphabet_size,
            "volume": self.space.volume.to_json(),
            "probs": [float(x) for x in self.probs],
        }
        if self.space.symbols != tuple(float(a) for a in range(self.space.alphabet_size)):
            out["symbols"] = list(self.space.symbols)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Measure":
        try:
            vol = Volume(obj["volume"])
            space = ConfigSpace(vol, int(obj["alphabet"]), obj.get("symbols"))
            return cls(space, obj["probs"])
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed measure object: {exc}") from exc


def _same_space(a: ConfigSpace, b: ConfigSpace) -> None:
    if a != b:
        raise DomainError("objects live on different configuration spaces")


@dataclass(frozen=True)
class EntropyValue:
    """A relative entropy, possibly ``+inf`` (kept as a flag, never a float)."""

    value: float
    infinite: bool = False

    @classmethod
    def inf(cls) -> "EntropyValue":
        return cls(math.nan, True)

    @property
    def finite(self) -> bool:
        return not self.infinite

    def __float__(self) -> float:
        if self.infinite:
            raise DomainError("relative entropy is +inf")
        return self.value

    def __repr__(self) -> str:
        return "EntropyValue(+inf)" if self.infinite else f"EntropyValue({self.value!r})"


@dataclass(frozen=True)
class ProcessSpec:
    """A translation-invariant instance family.

    ``kind`` is ``"iid"`` (``single_site``), ``"markov"`` (``transition`` and
    optional ``initial``; the stationary vector is used when omitted) or
    ``"ising"`` (``beta``, ``h``, ``boundary`` in ``{"free", "plus",
    "periodic"}``).
    """

    kind: str
    single_site: tuple | None = None
    transition: tuple | None = None
    initial: tuple | None = None
    beta: float = 0.0
    h: float = 0.0
    boundary: str = "free"
    symbols: tuple | None = None

    @classmethod
    def iid(cls, single_site: Sequence[float], symbols=None) -> "ProcessSpec":
        spec = cls("iid", single_site=tuple(float(x) for x in single_site),
                   symbols=None if symbols is None else tuple(symbols))
        spec.validate()
        return spec

    @classmethod
    def bernoulli(cls, a: float, symbols=None) -> "ProcessSpec":
        """Law ``P(letter 1) = a`` on a two-letter alphabet."""
        return cls.iid((1.0 - a, a), symbols)

    @classmethod
    def markov(cls, transition, initial=None, symbols=None) -> "ProcessSpec":
        P = tuple(tuple(float(x) for x in row) for row in transition)
        init = None if initial is None else tuple(float(x) for x in initial)
        spec = cls("markov", transition=P, initial=init,
                   symbols=None if symbols is None else tuple(symbols))
        spec.validate()
        return spec

    @classmethod
    def ising(cls, beta: float, h: float = 0.0, boundary: str = "free") -> "ProcessSpec":
        spec = cls("ising", beta=float(beta), h=float(h), boundary=boundary, symbols=(-1.0, 1.0))
        spec.validate()
        return spec

    @property
    def alphabet_size(self) -> int:
        if self.kind == "iid":
            return len(self.single_site)
        if self.kind == "markov":
            return len(self.transition)
        return 2

    def validate(self) -> None:
        if self.kind == "iid":
            p = np.asarray(self.single_site)
            if p.ndim != 1 or p.size < 2 or np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
                raise DomainError("single-site law must be a probability vector of length >= 2")
        elif self.kind == "markov":
            P = np.asarray(self.transition)
            if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
                raise DomainError("transition matrix must be square with >= 2 states")
            if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > PROB_TOL):
                raise DomainError("transition rows must be probability vectors")
            pi = self.initial_law()
            if self.initial is None and np.any(pi <= 0):
                raise DomainError("stationary vector must be strictly positive")
            if self.initial is not None:
                init = np.asarray(self.initial)
                if init.shape != (P.shape[0],) or np.any(init < 0) or abs(init.sum() - 1) > PROB_TOL:
                    raise DomainError("initial law must be a probability vector")
        elif self.kind == "ising":
            if not (math.isfinite(self.beta) and math.isfinite(self.h)):
                raise DomainError("beta and h must be finite")
            if self.boundary not in ("free", "plus", "periodic"):
                raise DomainError(f"unknown boundary condition {self.boundary!r}")
        else:
            raise DomainError(f"unknown process kind {self.kind!r}")
        if self.symbols is not None and len(self.symbols) != self.alphabet_size:
            raise DomainError("need one symbol value per letter")

    def stationary(self) -> np.ndarray:
        """Stationary vector of the transition matrix (markov only)."""
        P = np.asarray(self.transition)
        k = P.shape[0]
        A = np.vstack([P.T - np.eye(k), np.ones((1, k))])
        b = np.zeros(k + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(A, b, rcond=None)
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()

    def initial_law(self) -> np.ndarray:
        if self.kind == "iid":
            return np.asarray(self.single_site)
        if self.kind == "markov":
            return self.stationary() if self.initial is None else np.asarray(self.initial)
        raise DomainError("initial law is defined for iid and markov only")

    def space(self, volume: Volume) -> ConfigSpace:
        return ConfigSpace(volume, self.alphabet_size, self.symbols)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "iid":
            out["single_site"] = list(self.single_site)
        elif self.kind == "markov":
            out["transition"] = [list(r) for r in self.transition]
            if self.initial is not None:
                out["initial"] = list(self.initial)
        else:
            out.update(beta=self.beta, h=self.h, boundary=self.boundary)
        if self.symbols is not None and self.kind != "ising":
            out["symbols"] = list(self.symbols)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ProcessSpec":
        kind = obj.get("kind")
        if kind == "iid":
            return cls.iid(obj["single_site"], obj.get("symbols"))
        if kind == "markov":
            return cls.markov(obj["transition"], obj.get("initial"), obj.get("symbols"))
        if kind == "ising":
            return cls.ising(obj.get("beta", 0.0), obj.get("h", 0.0), obj.get("boundary", "free"))
        raise DomainError(f"unknown process kind {kind!r}")


def realize(spec: ProcessSpec, volume: Volume) -> Measure:
    """The exact finite-volume law of ``spec`` on ``volume``."""
    spec.validate()
    space = spec.space(volume)
    if spec.kind == "iid":
        return Measure.product(space, spec.single_site)
    if spec.kind == "markov":
        if not volume.is_interval():
            raise DomainError("markov laws are realized on d=1 intervals only")
        P = np.asarray(spec.transition)
        init = spec.initial_law()
        D = space.digits
        with np.errstate(divide="ignore"):
            logP = np.log(P)
            logp = np.log(init)[D[:, 0]]
            for j in range(1, space.n_sites):
                logp = logp + logP[D[:, j - 1], D[:, j]]
        p = np.exp(logp)
        return Measure(space, p / p.sum())
    return _ising(spec, space)


def _neighbor_pairs(volume: Volume) -> list[tuple[int, int]]:
    pairs = []
    for a, s in enumerate(volume.sites):
        for axis in range(volume.d):
            t = list(s)
            t[axis] += 1
            t = tuple(t)
            if t in volume:
                pairs.append((a, volume.index(t)))
    return pairs


def _outside_neighbors(volume: Volume, site) -> int:
    count = 0
    for axis in range(volume.d):
        for step in (-1, 1):
            t = list(site)
            t[axis] += step
            if tuple(t) not in volume:
                count += 1
    return count


def _ising(spec: ProcessSpec, space: ConfigSpace) -> Measure:
    vol = space.volume
    spins = space.values
    energy = spec.h * spins.sum(axis=1)
    for a, b in _neighbor_pairs(vol):
        energy += spec.beta * spins[:, a] * spins[:, b]
    if spec.boundary == "plus":
        for a, s in enumerate(vol.sites):
            energy += spec.beta * _outside_neighbors(vol, s) * spins[:, a]
    elif spec.boundary == "periodic":
        if not vol.is_interval():
            raise DomainError("periodic boundary is implemented for d=1 intervals")
        if len(vol) > 2:
            energy += spec.beta * spins[:, 0] * spins[:, -1]
    logw = energy - logsumexp(energy)
    return Measure(space, np.exp(logw))


def marginal(m: Measure, sub: Volume) -> Measure:
    """Push ``m`` forward under restriction to ``sub``."""
    if not sub.issubset(m.space.volume):
        raise DomainError("sub-volume is not contained in the volume")
    if sub == m.space.volume:
        return m
    sub_space = m.space.subspace(sub)
    idx = m.space.restriction_index(sub)
    probs = np.bincount(idx, weights=m.probs, minlength=sub_space.n_states)
    return Measure(sub_space, probs / probs.sum())


def relative_entropy(nu: Measure, mu: Measure) -> EntropyValue:
    """``s(nu|mu) = sum nu log(nu/mu)`` with ``0 log 0 = 0``."""
    _same_space(nu.space, mu.space)
    sup_nu = nu.support()
    if np.any(sup_nu & ~mu.support()):
        return EntropyValue.inf()
    a = nu.probs[sup_nu]
    b = mu.probs[sup_nu]
    val = float(np.sum(a * (np.log(a) - np.log(b))))
    return EntropyValue(max(val, 0.0))


def _log_expect_exp(mu: Measure, values: np.ndarray) -> float:
    """``log sum mu e^values`` over the support of ``mu``, overflow-safe."""
    sup = mu.support()
    v = values[sup]
    w = mu.probs[sup]
    top = v.max()
    if top - v.min() < 30.0 and abs(top) < 30.0:
        # log1p/expm1 keep full relative precision when values are tiny.
        return float(np.log1p(np.dot(w, np.expm1(v))))
    return float(top + np.log(np.dot(w, np.exp(v - top))))


def log_mgf(mu: Measure, f: LocalFunction) -> float:
    """``log int e^{f - mu(f)} dmu``; nonnegative by Jensen."""
    _same_space(mu.space, f.space)
    centered = f.values - mu.expect(f)
    return max(_log_expect_exp(mu, centered), 0.0)


def log_partition(mu: Measure, f: LocalFunction) -> float:
    """``log int e^f dmu``."""
    _same_space(mu.space, f.space)
    return _log_expect_exp(mu, f.values)


def tilt(mu: Measure, f: LocalFunction) -> Measure:
    """The Gibbs tilt ``e^f mu / Z``."""
    _same_space(mu.space, f.space)
    sup = mu.support()
    logw = np.full(mu.space.n_states, -np.inf)
    logw[sup] = np.log(mu.probs[sup]) + f.values[sup]
    logw -= logsumexp(logw[sup])
    return Measure(mu.space, np.exp(logw))


def log_density(nu: Measure, mu: Measure) -> LocalFunction:
    """``log(dnu/dmu)`` on the support of ``nu``; requires full support of ``nu``."""
    _same_space(nu.space, mu.space)
    if not np.all(nu.support()):
        raise DomainError("log-density is only tabulated for fully supported nu")
    if not np.all(mu.support()):
        raise DomainError("nu is not absolutely continuous with respect to mu")
    return LocalFunction(nu.space, np.log(nu.probs) - np.log(mu.probs))


def entropy_variational_gap(nu: Measure, mu: Measure, f: LocalFunction) -> float:
    """``s(nu|mu) - (nu(f) - log int e^f dmu)``, zero at ``f = log dnu/dmu``."""
    s = relative_entropy(nu, mu)
    if s.infinite:
        raise DomainError("nu is not absolutely continuous with respect to mu; gap undefined")
    return s.value - (nu.expect(f) - log_partition(mu, f))


def legendre_gap(mu: Measure, f: LocalFunction, nu: Measure) -> EntropyValue:
    """``log int e^f dmu - (nu(f) - s(nu|mu))``, zero at the tilt ``e^f mu / Z``."""
    s = relative_entropy(nu, mu)
    if s.infinite:
        return EntropyValue.inf()
    return EntropyValue(log_partition(mu, f) - (nu.expect(f) - s.value))
