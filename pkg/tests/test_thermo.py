import math

import numpy as np
import pytest

from latgcb import INF, DomainError, ProcessSpec
from latgcb.thermo import (averse_check, dbar_sandwich, entropy_density, entropy_rate,
                           limit_sequence, maximal_coupling_kernel, p_independence_check,
                           superadditivity_check)

A, B = ProcessSpec.bernoulli(0.5), ProcessSpec.bernoulli(0.2)
FLIP1 = ProcessSpec.markov([[0.9, 0.1], [0.1, 0.9]])
FLIP3 = ProcessSpec.markov([[0.7, 0.3], [0.3, 0.7]])


@pytest.mark.parametrize("quantity", ["d", "q"])
def test_iid_sequence_is_tv(quantity):
    seq = limit_sequence(A, B, 2, 2, quantity=quantity)
    assert seq.ns == [0, 1, 2] and seq.sizes == [1, 3, 5]
    assert np.allclose(seq.normalized, 0.3, atol=1e-9)
    assert seq.nondecreasing and not seq.truncated
    assert set(seq.to_json()) >= {"p", "normalized", "raw", "extrapolation"}


def test_sequence_truncates_at_cap():
    seq = limit_sequence(A, B, 1, 6, cap=64)
    assert seq.truncated and seq.ns[-1] == 2


def test_sequence_errors():
    with pytest.raises(DomainError):
        limit_sequence(A, B, 1, 1, quantity="w")
    with pytest.raises(DomainError):
        limit_sequence(FLIP1, FLIP3, 1, 1, d=2)


def test_superadditivity_markov():
    for p in ("3/2", 2, INF):
        for n in (1, 2):
            assert superadditivity_check(FLIP1, FLIP3, p, n).slack >= -1e-6
            assert superadditivity_check(FLIP1, FLIP3, p, n, quantity="d").slack >= -1e-6
    with pytest.raises(DomainError):
        superadditivity_check(A, B, 2, 0)


def test_p_independence_iid_zero_spread():
    rep = p_independence_check(A, B, [1, 2, INF], 2)
    assert max(rep.per_n_spread) <= 1e-9
    assert rep.spread_decreasing


def test_per_n_chain_ordering():
    # D_1/|L| <= D_2/|L|^(1/2) <= D_inf at each n
    seqs = [limit_sequence(FLIP1, FLIP3, p, 2).normalized for p in (1, 2, INF)]
    for a, b, c in zip(*seqs):
        assert a <= b + 1e-8 <= c + 2e-8


def test_maximal_coupling_kernel_iid():
    K = maximal_coupling_kernel(A, B)
    assert np.allclose(K.sum(axis=1), 1.0)
    # every row: agree with probability 1 - TV = 0.7
    diag = [0, 3]
    assert np.allclose(K[:, diag].sum(axis=1), 0.7)


def test_dbar_iid_and_markov():
    res = dbar_sandwich(A, B, n_max=2, mc_steps=100_000, chains=200, burn_in=100)
    assert res.lower == pytest.approx(0.3, abs=1e-9)
    assert res.upper_exact == pytest.approx(0.3, abs=1e-12)
    assert abs(res.upper_mc - 0.3) <= 3 * res.half_width
    assert res.consistent
    m = dbar_sandwich(FLIP1, FLIP3, n_max=2, mc_steps=50_000, chains=100, burn_in=100)
    assert m.lower <= m.upper_exact + 1e-9 and m.consistent
    ising = dbar_sandwich(ProcessSpec.ising(0.1), ProcessSpec.ising(0.2), n_max=1,
                          mc_steps=10, chains=2)
    assert math.isnan(ising.upper_exact) and ising.flags


def test_entropy_rate_oracles():
    assert entropy_rate(A, ProcessSpec.bernoulli(0.25)) == pytest.approx(
        0.5 * math.log(2) + 0.5 * math.log(2 / 3), abs=1e-15)
    assert entropy_rate(ProcessSpec.bernoulli(1.0), ProcessSpec.bernoulli(0.0)) == math.inf
    dens = entropy_density(FLIP3, FLIP1, 4)
    # Markov density -> rate from below with an O(1/n) boundary term; stationary pi equal here
    assert all(v <= dens.rate + 1e-12 for v in dens.values)
    assert abs(dens.values[-1] - dens.rate) < abs(dens.values[1] - dens.rate)
    iid = entropy_density(B, A, 3)
    assert np.allclose(iid.values, iid.rate, atol=1e-12)


def test_averse_examples():
    r1 = averse_check(ProcessSpec.bernoulli(0.25), ProcessSpec.bernoulli(0.5), 0.25, 2)
    assert r1.passed
    n, lo, bound, s = r1.rows[-1]
    assert lo == pytest.approx(0.25, abs=1e-9) and bound == pytest.approx(0.26819, abs=1e-5)
    r2 = averse_check(A, B, 0.25, 2)
    assert r2.rows[-1][1] == pytest.approx(0.3, abs=1e-9)
    assert r2.rows[-1][2] == pytest.approx(0.31044, abs=1e-5)
    assert r2.passed
