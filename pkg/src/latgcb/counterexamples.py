"""Two explicit families showing what oscillation norms cannot be replaced by.

``lip_cost_gap``
    ``f_n`` = scaled magnetization with ``||delta f_n||_p = 1`` whose extreme
    values differ by ``|Lambda_n|^(1/q)``; no fixed cost function on
    configurations can make all of them 1-Lipschitz.
``dattes_*``
    ``g_L = sqrt(|m_L|)`` with ``m_L = sum_{|i| <= L} sigma_i`` for fair spins.
    Its Lipschitz constant for ``d_2 = sqrt(Hamming)`` stays bounded while the
    centered log-moment grows without bound, so a Lipschitz-type Gaussian bound
    cannot hold uniformly in the volume (McDiarmid's oscillation bound is fine,
    since ``||delta g_L||_2^2`` grows linearly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import CapacityError, DomainError
from .exponents import as_exponent, volume_power
from .lattice import ConfigSpace, LocalFunction, Volume, osc_norm

L_CAP = 100_000
EXHAUSTIVE_STATES = 2**16


@dataclass
class CostGap:
    n: int
    p: object
    osc_norm: float
    extreme_gap: float
    closed_form: float
    verified: bool


def lip_cost_gap(n: int, p, k: int = 2, d: int = 1) -> CostGap:
    """Oscillation norm and extreme gap of ``f_n = sum sigma_i / ((k-1) |Lambda_n|^(1/p))``.

    Letters are ``1..k``. The closed forms are ``||delta f_n||_p = 1`` and
    ``f_n(k..k) - f_n(1..1) = |Lambda_n|^(1/q)``; when ``k^|Lambda_n|`` is
    small the table is built and both are recomputed from it.
    """
    p = as_exponent(p)
    if p == 1:
        raise DomainError("the gap family needs p > 1")
    if k < 2 or n < 0:
        raise DomainError("need k >= 2 and n >= 0")
    vol = Volume.cube(n, d)
    size = len(vol)
    # |Lambda|^(1/q) = |Lambda|^(1 - 1/p)
    closed = size / volume_power(size, p)
    osc, gap, verified = 1.0, closed, False
    if k**size <= EXHAUSTIVE_STATES:
        space = ConfigSpace(vol, k, tuple(range(1, k + 1)))
        f = LocalFunction(space, space.values.sum(axis=1) / ((k - 1) * volume_power(size, p)))
        osc = osc_norm(f, p)
        gap = float(f.values[-1] - f.values[0])
        verified = abs(osc - 1.0) <= 1e-12 and abs(gap - closed) <= 1e-12 * max(1.0, closed)
    return CostGap(n, p, osc, gap, closed, verified)


def _magnetization_law(L: int):
    """Atoms ``m = -(2L+1), ..., 2L+1`` (step 2) and their log-probabilities."""
    if L < 1:
        raise DomainError("need L >= 1")
    if L > L_CAP:
        raise CapacityError(f"L={L} above the binomial cap {L_CAP}")
    n = 2 * L + 1
    j = np.arange(n + 1)
    m = 2 * j - n
    logp = gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1) - n * math.log(2.0)
    return m, logp


def dattes_lip2_closed(L: int) -> float:
    """``sqrt(2 (sqrt(2L+1) - 1) / (sqrt(2L+1) + 1))``, the value at ``|m| = 2L+1, |m'| = 1``."""
    r = math.sqrt(2 * L + 1)
    return math.sqrt(2.0 * (r - 1.0) / (r + 1.0))


def dattes_lip2(L: int, chunk: int = 2048) -> float:
    """``Lip(g_L)`` for ``d_2(s, s') = sqrt(#{i : s_i != s'_i})``.

    ``g_L`` only sees the magnetization, two magnetizations ``m != m'`` are
    joined by configurations at Hamming distance ``|m - m'| / 2`` and no
    closer, so the constant is the maximum of
    ``|sqrt|m| - sqrt|m'|| / sqrt(|m - m'| / 2)`` over attainable pairs.
    """
    _magnetization_law(L)
    # g is even in m: scan |m| = a, |m'| = b with equal signs (distance |a-b|/2)
    # and opposite signs (distance (a+b)/2)
    a = np.arange(1, 2 * L + 2, 2, dtype=float)
    ga = np.sqrt(a)
    best = 0.0
    for start in range(0, a.size, chunk):
        x = a[start:start + chunk, None]
        gx = ga[start:start + chunk, None]
        num = np.abs(gx - ga[None, :])
        same = np.abs(x - a[None, :]) / 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(same > 0, num / np.sqrt(same), 0.0)
        best = max(best, float(r.max()), float(np.max(num / np.sqrt((x + a[None, :]) / 2.0))))
    return best


def dattes_lip2_exhaustive(L: int) -> float:
    """The same constant by scanning every pair of configurations (small ``L``)."""
    space = ConfigSpace.spins(Volume.cube(L, 1))
    if space.n_states**2 > 2**22:
        raise CapacityError("exhaustive scan limited to L <= 5")
    g = np.sqrt(np.abs(space.values.sum(axis=1)))
    H = space.hamming()
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(H > 0, np.abs(g[:, None] - g[None, :]) / np.sqrt(H), 0.0)
    return float(r.max())


def dattes_mgf(L: int) -> float:
    """Exact ``log int exp(g_L - mu(g_L)) dmu`` under fair spins, from the binomial law."""
    m, logp = _magnetization_law(L)
    g = np.sqrt(np.abs(m).astype(float))
    mean = math.fsum(np.exp(logp) * g)
    return max(float(logsumexp(logp + g - mean)), 0.0)


def dattes_osc_sq(L: int) -> float:
    """``||delta g_L||_2^2 = (2L+1)(sqrt 3 - 1)^2``: each flip moves ``|m|`` between 1 and 3 at worst."""
    if L < 1:
        raise DomainError("need L >= 1")
    return (2 * L + 1) * (math.sqrt(3.0) - 1.0) ** 2


@dataclass
class ContrastRecord:
    L: int
    lip2: float
    log_moment: float
    ratio_to_L_quarter: float
    osc_sq: float
    mcdiarmid_rhs: float

    def csv_row(self) -> tuple:
        return (self.L, self.lip2, self.log_moment, self.ratio_to_L_quarter, self.mcdiarmid_rhs)


CSV_HEADER = ("L", "lip2", "log_moment", "ratio_to_L_quarter", "mcdiarmid_rhs")


def mcdiarmid_contrast(L: int, C: float = 0.25) -> ContrastRecord:
    """Bounded Lipschitz constant next to the growing oscillation bound for ``g_L``."""
    lip = dattes_lip2(L)
    lm = dattes_mgf(L)
    osc = dattes_osc_sq(L)
    return ContrastRecord(L, lip, lm, lm / L**0.25, osc, 0.5 * C * osc)


def lipschitz_failure(records, K: float, lip_bound: float = 4.0):
    """First record whose log-moment beats ``(K/2) lip_bound^2``, or ``None``."""
    for r in records:
        if r.log_moment > 0.5 * K * lip_bound**2:
            return r
    return None
