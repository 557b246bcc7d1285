"""Finite volumes of Z^d, configuration spaces S^Lambda and local functions.

Configurations are indexed by a mixed-radix, little-endian rank: the symbol
at the j-th site of the volume (lexicographic order) is digit j in base
``|S|``.  Reshaping a table of length ``|S|^|Lambda|`` with
``order="F"`` therefore gives an array whose axis ``j`` is site ``j``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CapacityError, DomainError
from .exponents import as_exponent, is_inf, lp_norm

MAX_STATES = 2**20

Site = tuple


def _as_site(s, d: int | None = None) -> Site:
    if isinstance(s, (int, np.integer)):
        s = (int(s),)
    site = tuple(int(c) for c in s)
    if not site:
        raise DomainError("a site needs at least one coordinate")
    if d is not None and len(site) != d:
        raise DomainError(f"site {site} is not {d}-dimensional")
    return site


@dataclass(frozen=True)
class Volume:
    """A finite, lexicographically ordered set of lattice sites."""

    sites: tuple
    d: int

    def __init__(self, sites: Iterable, d: int | None = None):
        sites = [_as_site(s) for s in sites]
        if d is None:
            if not sites:
                raise DomainError("cannot infer the dimension of an empty volume")
            d = len(sites[0])
        if d < 1:
            raise DomainError("dimension must be >= 1")
        for s in sites:
            if len(s) != d:
                raise DomainError(f"site {s} is not {d}-dimensional")
        object.__setattr__(self, "sites", tuple(sorted(set(sites))))
        object.__setattr__(self, "d", int(d))

    @classmethod
    def cube(cls, n: int, d: int = 1) -> "Volume":
        """The cube ``Lambda_n = {-n..n}^d`` of side ``2n+1``."""
        if n < 0:
            raise DomainError("cube radius must be >= 0")
        r = range(-n, n + 1)
        return cls(itertools.product(r, repeat=d), d)

    @classmethod
    def interval(cls, start: int, stop: int) -> "Volume":
        """Sites ``start, ..., stop - 1`` of Z."""
        return cls(((i,) for i in range(start, stop)), 1)

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, site) -> bool:
        try:
            return _as_site(site, self.d) in self._position
        except DomainError:
            return False

    @cached_property
    def _position(self) -> dict:
        return {s: j for j, s in enumerate(self.sites)}

    def index(self, site) -> int:
        """Position of ``site`` in the volume order."""
        key = _as_site(site, self.d)
        try:
            return self._position[key]
        except KeyError:
            raise DomainError(f"site {key} is not in the volume") from None

    def issubset(self, other: "Volume") -> bool:
        return self.d == other.d and all(s in other._position for s in self.sites)

    def union(self, other: "Volume") -> "Volume":
        if self.d != other.d:
            raise DomainError("volumes of different dimension")
        return Volume(self.sites + other.sites, self.d)

    def difference(self, other: "Volume") -> "Volume":
        keep = [s for s in self.sites if s not in other._position]
        return Volume(keep, self.d)

    def shifted(self, shift) -> "Volume":
        shift = _as_site(shift, self.d)
        return Volume((tuple(a + b for a, b in zip(s, shift)) for s in self.sites), self.d)

    def is_interval(self) -> bool:
        if self.d != 1 or not self.sites:
            return False
        lo, hi = self.sites[0][0], self.sites[-1][0]
        return hi - lo + 1 == len(self.sites)

    def radius(self) -> int:
        """Smallest r with the volume inside ``Lambda_r``."""
        return max(max(abs(c) for c in s) for s in self.sites)

    def to_json(self) -> list:
        return [list(s) for s in self.sites]


class ConfigSpace:
    """The configuration space ``S^Lambda`` with ``|S| = alphabet_size``.

    ``symbols`` gives the real value carried by each letter (default
    ``0, 1, ..., |S|-1``); spin systems use ``(-1, 1)``.
    """

    def __init__(self, volume: Volume, alphabet_size: int, symbols: Sequence[float] | None = None):
        if alphabet_size < 2:
            raise DomainError("alphabet size must be >= 2")
        if len(volume) == 0:
            raise DomainError("configuration space over an empty volume")
        n_states = alphabet_size ** len(volume)
        if n_states > MAX_STATES:
            raise CapacityError(
                f"|S|^|Lambda| = {alphabet_size}^{len(volume)} exceeds the cap {MAX_STATES}"
            )
        if symbols is None:
            symbols = tuple(float(a) for a in range(alphabet_size))
        symbols = tuple(float(a) for a in symbols)
        if len(symbols) != alphabet_size:
            raise DomainError("need one symbol value per letter")
        self.volume = volume
        self.alphabet_size = int(alphabet_size)
        self.symbols = symbols
        self.n_states = n_states

    @classmethod
    def spins(cls, volume: Volume) -> "ConfigSpace":
        return cls(volume, 2, (-1.0, 1.0))

    def __repr__(self) -> str:
        return f"ConfigSpace(|Lambda|={len(self.volume)}, |S|={self.alphabet_size})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ConfigSpace)
            and self.volume == other.volume
            and self.alphabet_size == other.alphabet_size
            and self.symbols == other.symbols
        )

    def __hash__(self) -> int:
        return hash((self.volume, self.alphabet_size, self.symbols))

    @property
    def n_sites(self) -> int:
        return len(self.volume)

    @property
    def shape(self) -> tuple:
        return (self.alphabet_size,) * self.n_sites

    @cached_property
    def digits(self) -> np.ndarray:
        """``(n_states, n_sites)`` array of letter indices, row = rank."""
        k, n = self.alphabet_size, self.n_sites
        ranks = np.arange(self.n_states, dtype=np.int64)
        powers = k ** np.arange(n, dtype=np.int64)
        return ((ranks[:, None] // powers[None, :]) % k).astype(np.int8 if k < 128 else np.int64)

    @cached_property
    def values(self) -> np.ndarray:
        """Symbol values of every configuration, same layout as :attr:`digits`."""
        return np.asarray(self.symbols)[self.digits]

    def rank(self, config) -> int:
        """Mixed-radix index of a per-site letter assignment.

        ``config`` is a sequence in volume order or a mapping site -> letter.
        """
        if isinstance(config, dict):
            if len(config) != self.n_sites:
                raise DomainError("assignment must cover exactly the volume")
            letters = [None] * self.n_sites
            for site, a in config.items():
                letters[self.volume.index(site)] = a
        else:
            letters = list(config)
            if len(letters) != self.n_sites:
                raise DomainError("assignment must cover exactly the volume")
        r = 0
        for j in reversed(range(self.n_sites)):
            a = letters[j]
            if not (0 <= int(a) < self.alphabet_size) or int(a) != a:
                raise DomainError(f"letter {a!r} out of range [0, {self.alphabet_size})")
            r = r * self.alphabet_size + int(a)
        return r

    def unrank(self, index: int) -> tuple:
        if not 0 <= index < self.n_states:
            raise DomainError(f"index {index} out of range")
        out = []
        for _ in range(self.n_sites):
            index, a = divmod(index, self.alphabet_size)
            out.append(a)
        return tuple(out)

    def site_column(self, site) -> int:
        return self.volume.index(site)

    def restriction_index(self, sub: Volume) -> np.ndarray:
        """Rank in ``S^sub`` of the restriction of every configuration."""
        cols = [self.volume.index(s) for s in sub.sites]
        k = self.alphabet_size
        powers = k ** np.arange(len(cols), dtype=np.int64)
        return (self.digits[:, cols].astype(np.int64) * powers).sum(axis=1)

    def subspace(self, sub: Volume) -> "ConfigSpace":
        if not sub.issubset(self.volume):
            raise DomainError("sub-volume is not contained in the volume")
        return ConfigSpace(sub, self.alphabet_size, self.symbols)

    def hamming(self) -> np.ndarray:
        """Dense Hamming distance matrix between all configurations."""
        return self.weighted_hamming(np.ones(self.n_sites))

    def weighted_hamming(self, alpha) -> np.ndarray:
        """``d_alpha(s, s') = sum_i alpha_i 1{s_i != s'_i}`` as a dense matrix."""
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (self.n_sites,):
            raise DomainError("need one weight per site")
        D = self.digits
        out = np.zeros((self.n_states, self.n_states))
        for j in range(self.n_sites):
            if alpha[j] != 0.0:
                col = D[:, j]
                out += alpha[j] * (col[:, None] != col[None, :])
        return out

    def single_site_pairs(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Ordered pairs ``(a, b)`` of ranks that differ exactly at site position ``j``."""
        k = self.alphabet_size
        stride = k**j
        digit = self.digits[:, j].astype(np.int64)
        base = np.arange(self.n_states, dtype=np.int64) - digit * stride
        rows, cols = [], []
        for shift in range(1, k):
            other = base + ((digit + shift) % k) * stride
            rows.append(np.arange(self.n_states, dtype=np.int64))
            cols.append(other)
        return np.concatenate(rows), np.concatenate(cols)


class _SiteView:
    """Lets ``fn`` in :meth:`LocalFunction.from_callable` read ``s[site]``."""

    def __init__(self, space: ConfigSpace):
        self._space = space

    def __getitem__(self, site):
        return self._space.values[:, self._space.volume.index(site)]

    def __iter__(self):
        for j in range(self._space.n_sites):
            yield self._space.values[:, j]

    @property
    def sites(self):
        return self._space.volume.sites


@dataclass(frozen=True, eq=False)
class LocalFunction:
    """A real function on ``S^Lambda`` stored as a table indexed by rank."""

    space: ConfigSpace
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.shape != (self.space.n_states,):
            raise DomainError(f"table has {vals.size} entries, expected {self.space.n_states}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, space: ConfigSpace, fn: Callable) -> "LocalFunction":
        """Tabulate ``fn(s)``, where ``s[site]`` is the column of symbol values at ``site``."""
        vals = np.broadcast_to(np.asarray(fn(_SiteView(space)), dtype=float), (space.n_states,))
        return cls(space, np.array(vals))

    @classmethod
    def constant(cls, space: ConfigSpace, c: float = 0.0) -> "LocalFunction":
        return cls(space, np.full(space.n_states, float(c)))

    def __add__(self, other):
        if isinstance(other, LocalFunction):
            _check_same(self.space, other.space)
            return LocalFunction(self.space, self.values + other.values)
        return LocalFunction(self.space, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, LocalFunction):
            _check_same(self.space, other.space)
            return LocalFunction(self.space, self.values - other.values)
        return LocalFunction(self.space, self.values - float(other))

    def __mul__(self, c: float):
        return LocalFunction(self.space, self.values * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c: float):
        return LocalFunction(self.space, self.values / float(c))

    def __neg__(self):
        return LocalFunction(self.space, -self.values)

    def __call__(self, config) -> float:
        return float(self.values[self.space.rank(config)])

    def is_constant(self, tol: float = 0.0) -> bool:
        return float(np.ptp(self.values)) <= tol

    def oscillations(self) -> "OscillationVector":
        return oscillations(self)

    def dependence_set(self, tol: float = 0.0) -> Volume:
        osc = oscillations(self).values
        return Volume([s for s, o in zip(self.space.volume.sites, osc) if o > tol], self.space.volume.d)


def _check_same(a: ConfigSpace, b: ConfigSpace) -> None:
    if a != b:
        raise DomainError("functions live on different configuration spaces")


@dataclass(frozen=True)
class OscillationVector:
    """Per-site oscillations ``delta_i f`` in volume order."""

    volume: Volume
    values: np.ndarray

    def __getitem__(self, site) -> float:
        return float(self.values[self.volume.index(site)])

    def norm(self, q) -> float:
        return lp_norm(self.values, q)


def oscillations(f: LocalFunction) -> OscillationVector:
    """All oscillations of ``f`` by exhaustive enumeration of single-site changes.

    The supremum of ``f(s) - f(s')`` over pairs equal off site ``i`` is the
    largest spread along axis ``i``; the sup is symmetric in the pair, so this
    equals the absolute oscillation.
    """
    space = f.space
    table = f.values.reshape(space.shape, order="F")
    out = np.empty(space.n_sites)
    for j in range(space.n_sites):
        out[j] = np.ptp(table, axis=j).max()
    return OscillationVector(space.volume, out)


def oscillation(f: LocalFunction, site) -> float:
    """``delta_i f`` at a single site."""
    j = f.space.volume.index(site)
    table = f.values.reshape(f.space.shape, order="F")
    return float(np.ptp(table, axis=j).max())


def osc_norm(f: LocalFunction, q) -> float:
    """The l^q seminorm ``||delta f||_q`` (``q = INF`` gives the max)."""
    q = as_exponent(q)
    return lp_norm(oscillations(f).values, q)


def translate(f: LocalFunction, shift, target: ConfigSpace) -> LocalFunction:
    """``tau_shift f`` tabulated on ``target``.

    ``(tau_j f)(eta) = f(tau_j eta)`` with ``(tau_j eta)_k = eta_{k-j}``, so the
    shifted function reads ``eta`` at ``site - j`` for each site of ``f``.
    """
    if target.alphabet_size != f.space.alphabet_size or target.symbols != f.space.symbols:
        raise DomainError("target space has a different alphabet")
    moved = f.space.volume.shifted(tuple(-c for c in _as_site(shift, f.space.volume.d)))
    if not moved.issubset(target.volume):
        raise DomainError("shifted dependence set does not fit the target volume")
    # f's site order and moved order agree because a shift preserves lexicographic order.
    idx = target.restriction_index(moved)
    return LocalFunction(target, f.values[idx])


def block_sum(f: LocalFunction, n: int) -> LocalFunction:
    """``T_{Lambda_n} f = sum_{j in Lambda_n} tau_j f`` on ``Lambda_{n+r}``.

    ``r`` is the radius of the smallest cube containing ``f``'s volume.
    """
    if n < 0:
        raise DomainError("block radius must be >= 0")
    vol = f.space.volume
    r = vol.radius()
    target_vol = Volume.cube(n + r, vol.d)
    target = ConfigSpace(target_vol, f.space.alphabet_size, f.space.symbols)
    total = np.zeros(target.n_states)
    for shift in Volume.cube(n, vol.d):
        total += translate(f, shift, target).values
    return LocalFunction(target, total)


def block_average(f: LocalFunction, n: int) -> LocalFunction:
    """``A_{Lambda_n} f = T_{Lambda_n} f / |Lambda_n|``."""
    d = f.space.volume.d
    return block_sum(f, n) / float((2 * n + 1) ** d)


def young_bound(f: LocalFunction, n: int, q) -> float:
    """Right-hand side ``|Lambda_n|^(1/q) ||delta f||_1`` of the block-sum bound."""
    q = as_exponent(q)
    n_sites = (2 * n + 1) ** f.space.volume.d
    scale = 1.0 if is_inf(q) else n_sites ** (1.0 / float(q))
    return scale * osc_norm(f, 1)
