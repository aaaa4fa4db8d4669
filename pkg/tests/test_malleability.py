import pytest
from hypothesis import given, strategies as st

from malsim.malleability import (
    CostParams,
    InhibitorCounter,
    SpawnStrategy,
    check_allowed,
    effective_strategy,
    reconfiguration_overhead,
    spawn_count,
)

B, M = SpawnStrategy.BASELINE, SpawnStrategy.MERGE


def test_inhibitor_period_two():
    inh = InhibitorCounter(2)
    assert [check_allowed(inh, i) for i in range(4)] == [True, False, True, False]


def test_inhibitor_period_one():
    inh = InhibitorCounter(1)
    assert all(check_allowed(inh, i) for i in range(10))


def test_first_attempt_allowed_anywhere():
    assert check_allowed(InhibitorCounter(5), 7)


@given(st.integers(1, 6), st.lists(st.integers(0, 3), min_size=1, max_size=40))
def test_allowed_checks_are_period_apart(period, gaps):
    inh = InhibitorCounter(period)
    it, allowed = 0, []
    for g in gaps:
        it += g
        if check_allowed(inh, it):
            allowed.append(it)
    assert allowed[0] == gaps[0]
    assert all(b - a >= period for a, b in zip(allowed, allowed[1:]))


def test_spawn_examples():
    assert spawn_count(B, 32, 64) == 64
    assert spawn_count(M, 32, 64) == 32
    assert spawn_count(M, 64, 32) == 0


@given(st.integers(1, 256), st.integers(1, 256))
def test_spawn_property(np_, nt):
    assert spawn_count(B, np_, nt) == nt
    assert spawn_count(M, np_, nt) == max(0, nt - np_)
    assert spawn_count(M, np_, nt) < spawn_count(B, np_, nt)


def test_spawn_rejects_zero():
    with pytest.raises(ValueError):
        spawn_count(B, 0, 4)


def test_effective_strategy():
    assert effective_strategy(M, 0) is B
    assert effective_strategy(M, 1) is M
    assert all(effective_strategy(B, k) is B for k in range(4))


def test_overhead_zero_params():
    zero = CostParams(0.0, 0.0, 0.0, 0.0)
    assert reconfiguration_overhead(B, 32, 64, 10**9, 100, zero) == 0.0


def test_overhead_merge_shrink_has_no_spawn_term():
    p = CostParams(spawn_cost=0.3, redist_bandwidth=0.0, redist_latency=0.0, base_overhead=0.0)
    assert reconfiguration_overhead(M, 64, 32, 0, 0, p) == 0.0


def test_overhead_baseline_spawn_term_doubles_merge():
    p = CostParams(spawn_cost=0.01, redist_bandwidth=1e9, redist_latency=1e-6, base_overhead=0.2)
    common = 0.2 + 1e-6 * 5 + 4096 / 1e9
    b = reconfiguration_overhead(B, 32, 64, 4096, 5, p) - common
    m = reconfiguration_overhead(M, 32, 64, 4096, 5, p) - common
    assert b == pytest.approx(2 * m, rel=1e-12)
    assert b == pytest.approx(0.64, rel=1e-12)


def test_overhead_composition():
    p = CostParams(spawn_cost=0.02, redist_bandwidth=1e9, redist_latency=1e-5, base_overhead=0.5)
    got = reconfiguration_overhead(B, 16, 32, 2 * 10**9, 10, p)
    assert got == pytest.approx(0.5 + 0.02 * 32 + 1e-4 + 2.0)


def test_cost_params_validation_and_scaling():
    with pytest.raises(ValueError):
        CostParams(spawn_cost=-1)
    p = CostParams().scaled(2.0)
    assert p.base_overhead == 1.0 and p.redist_bandwidth == 6.25e9
