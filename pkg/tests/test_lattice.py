import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latgcb import (INF, CapacityError, ConfigSpace, DomainError, LocalFunction, Volume,
                    block_average, block_sum, osc_norm, oscillation, oscillations, translate,
                    young_bound)


def test_rank_examples():
    sp = ConfigSpace(Volume([0, 1]), 2)
    assert sp.rank((0, 0)) == 0
    assert sp.rank((1, 1)) == 3
    assert ConfigSpace(Volume([0]), 3).rank((2,)) == 2
    assert sp.rank({0: 1, 1: 0}) == 1


def test_rank_rejects_bad_letters():
    sp = ConfigSpace(Volume([0, 1]), 2)
    with pytest.raises(DomainError):
        sp.rank((0, 2))
    with pytest.raises(DomainError):
        sp.rank((0,))


@pytest.mark.parametrize("k,n", [(2, 1), (2, 5), (3, 4), (4, 6), (2, 12)])
def test_rank_unrank_roundtrip(k, n):
    sp = ConfigSpace(Volume.interval(0, n), k)
    assert sp.n_states <= 4096
    for i in range(sp.n_states):
        assert sp.rank(sp.unrank(i)) == i
    assert np.array_equal(sp.digits[7 % sp.n_states], sp.unrank(7 % sp.n_states))


def test_capacity_cap():
    with pytest.raises(CapacityError):
        ConfigSpace(Volume.interval(0, 21), 2)
    ConfigSpace(Volume.interval(0, 20), 2)


def test_volume_ordering_is_lexicographic():
    v = Volume([(1, 0), (0, 1), (0, 0), (0, 1)])
    assert v.sites == ((0, 0), (0, 1), (1, 0))
    assert len(Volume.cube(1, 2)) == 9
    assert Volume.cube(2).sites == tuple((i,) for i in range(-2, 3))


def test_oscillation_examples():
    sp = ConfigSpace(Volume([0]), 2)
    f = LocalFunction.from_callable(sp, lambda s: s[0])
    assert oscillation(f, 0) == 1.0
    sp2 = ConfigSpace(Volume([0, 1]), 2)
    g = LocalFunction.from_callable(sp2, lambda s: s[0] + s[1])
    assert oscillation(g, 0) == 1.0 and oscillation(g, 1) == 1.0
    assert osc_norm(g, 2) == pytest.approx(math.sqrt(2), abs=1e-15)
    with pytest.raises(DomainError):
        oscillation(g, 5)


def test_oscillation_weighted_spin_sum():
    sp = ConfigSpace.spins(Volume.cube(1))
    f = LocalFunction.from_callable(sp, lambda s: sum(s[i] / (1 + abs(i)) for i in (-1, 0, 1)))
    osc = oscillations(f)
    assert [osc[i] for i in (-1, 0, 1)] == pytest.approx([1.0, 2.0, 1.0], abs=1e-15)
    assert osc_norm(f, 2) == pytest.approx(math.sqrt(6), abs=1e-14)


@pytest.mark.parametrize("q", [1, 2, "3/2", INF])
def test_constant_has_zero_norm(q):
    sp = ConfigSpace(Volume.interval(0, 3), 3)
    assert osc_norm(LocalFunction.constant(sp, 4.2), q) == 0.0
    f = LocalFunction.from_callable(ConfigSpace(Volume([0]), 2), lambda s: s[0])
    assert osc_norm(f, q) == 1.0


def test_norm_rejects_q_below_one():
    f = LocalFunction.constant(ConfigSpace(Volume([0]), 2))
    with pytest.raises(DomainError):
        osc_norm(f, 0.5)


def brute_oscillation(f, j):
    sp = f.space
    best = 0.0
    for a, b in itertools.product(range(sp.n_states), repeat=2):
        da, db = sp.digits[a], sp.digits[b]
        if np.all(np.delete(da, j) == np.delete(db, j)):
            best = max(best, f.values[a] - f.values[b])
    return best


@settings(max_examples=40, deadline=None)
@given(k=st.integers(2, 3), n=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
def test_basic_estimate_and_global_oscillation(k, n, seed):
    rng = np.random.default_rng(seed)
    sp = ConfigSpace(Volume.interval(0, n), k)
    f = LocalFunction(sp, rng.normal(size=sp.n_states))
    osc = oscillations(f).values
    for j in range(n):
        assert osc[j] == pytest.approx(brute_oscillation(f, j), abs=1e-12)
    D = sp.digits
    diff = np.abs(f.values[:, None] - f.values[None, :])
    bound = sum(osc[j] * (D[:, j][:, None] != D[:, j][None, :]) for j in range(n))
    assert np.all(diff <= bound + 1e-12)
    assert np.ptp(f.values) <= osc.sum() + 1e-12
    norms = [osc_norm(f, q) for q in (1, "3/2", 2, 5, INF)]
    assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))


def test_dependence_set():
    sp = ConfigSpace(Volume.interval(0, 3), 2)
    f = LocalFunction.from_callable(sp, lambda s: s[0] * 2 + s[2])
    assert f.dependence_set().sites == ((0,), (2,))


def test_translate_reads_shifted_site():
    base = ConfigSpace.spins(Volume([0]))
    f = LocalFunction.from_callable(base, lambda s: s[0])
    target = ConfigSpace.spins(Volume.cube(1))
    g = translate(f, 1, target)
    for i in range(target.n_states):
        assert g.values[i] == target.values[i, target.volume.index((-1,))]
    with pytest.raises(DomainError):
        translate(f, 5, target)


def test_block_sum_examples():
    f = LocalFunction.from_callable(ConfigSpace.spins(Volume([0])), lambda s: s[0])
    assert np.array_equal(block_sum(f, 0).values, f.values)
    T = block_sum(f, 1)
    assert T.space.volume == Volume.cube(1)
    assert np.allclose(T.values, T.space.values.sum(axis=1))
    assert osc_norm(T, 1) == 6.0


@pytest.mark.parametrize("q", [1, 2, "3/2", INF])
def test_young_bound(q, rng):
    sp = ConfigSpace(Volume.interval(0, 2), 2)
    f = LocalFunction(sp, rng.normal(size=4))
    for n in (0, 1, 2):
        T = block_sum(f, n)
        assert osc_norm(T, q) <= young_bound(f, n, q) + 1e-12
        A = block_average(f, n)
        size = len(Volume.cube(n))
        p = 1 if q == INF else (INF if q == 1 else None)
        if p is None:
            from latgcb import conjugate

            p = conjugate(q)
        from latgcb.exponents import volume_power

        assert osc_norm(A, q) <= osc_norm(f, 1) / volume_power(size, p) + 1e-12
