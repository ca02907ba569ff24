import numpy as np
import pytest

from services import generator
from services.generator import GeneratorCache, build, reduce, reduction_matrices
from services.rates import constant_scenario
from services.state_space import enumerate_states


def test_table1_generator_validity(table1):
    space = enumerate_states(table1.N)
    rng = np.random.default_rng(3)
    for t in rng.uniform(0.0, table1.period, size=100):
        g = build(space, table1, t)
        assert np.max(np.abs(g.Q.sum(axis=1))) <= 1e-12
        fuera = g.Q[~np.eye(space.size, dtype=bool)]
        assert np.all(fuera >= 0)
        assert np.array_equal(g.M_class.sum(axis=0), g.M_comp)
        con_buffer = np.array([any(s.B) for s in space.states], dtype=float)
        assert np.array_equal(g.M_next.sum(axis=0), con_buffer[:, None] * g.M_comp)


def test_single_class_generator_and_stationary_distribution(single_class):
    space = enumerate_states(1)
    g = build(space, single_class, 0.3)
    esperado = np.array([
        [-1.0, 1.0, 0.0],
        [2.0, -3.0, 1.0],
        [0.0, 2.0, -2.0],
    ])
    assert np.allclose(g.Q, esperado)
    p = np.array([4.0, 2.0, 1.0]) / 7.0
    assert np.allclose(p @ g.Q, 0.0, atol=1e-14)


def test_indicators_single_class():
    ind = generator.indicators(enumerate_states(1))
    assert list(ind.d_J_neq_0) == [0, 1, 1]
    assert list(ind.d_J_eq_i(1)) == [0, 1, 1]
    assert list(ind.d_B_i_eq_1(1)) == [0, 0, 1]
    assert list(ind.d_next_eq_i(1)) == [0, 0, 1]


def test_indicator_vectors_are_consistent(table1):
    ind = generator.indicators(enumerate_states(table1.N))
    assert np.array_equal(ind.d_J_eq.sum(axis=0), ind.d_J_neq_0)
    # next = i sólo en estados ocupados con B_i = 1
    assert np.all(ind.d_next_eq <= ind.d_B_eq_1)
    assert np.all(ind.d_next_eq.sum(axis=0) <= 1)


def test_reduce_matches_projection(table1):
    space = enumerate_states(table1.N)
    g = build(space, table1, 1.7)
    red = reduce(g)
    T, E, b = reduction_matrices(space.size)
    assert np.allclose(red.Q_red, T @ g.Q @ E)
    assert np.allclose(red.beta, b @ g.Q @ E)


def test_reduced_rows_strictly_negative_when_last_state_exits(table1):
    space = enumerate_states(table1.N)
    g = build(space, table1, 2.5)
    assert generator.last_state_exit_rate(g) > 0
    red = reduce(g)
    assert np.all(red.Q_red.sum(axis=1) < 0)


def test_reduced_dynamics_match_full_kolmogorov(table1):
    space = enumerate_states(table1.N)
    g = build(space, table1, 3.1)
    red = reduce(g)
    rng = np.random.default_rng(5)
    p = rng.random(space.size)
    p /= p.sum()
    assert np.allclose(p[:-1] @ red.Q_red + red.beta, (p @ g.Q)[:-1])


def test_generator_cache_reuses_entries():
    escenario = constant_scenario([1.0, 0.5], [2.0, 1.0])
    space = enumerate_states(2)
    cache = GeneratorCache(space, escenario, maxsize=2)
    primero = cache.get(0.25)
    assert cache.get(0.25) is primero
    cache.get(0.5)
    cache.get(0.75)
    assert cache.hits == 1
    assert cache.misses == 3
    assert cache.get(0.25) is not primero


def test_build_rejects_mismatched_space(table1):
    from utils.exceptions import StateLogicError
    with pytest.raises(StateLogicError):
        build(enumerate_states(2), table1, 0.0)


@pytest.mark.parametrize("t", [5.5, 7.0, 9.9])
def test_completion_matrices_vanish_during_outage(table1, t):
    g = build(enumerate_states(table1.N), table1, t)
    assert not np.any(g.M_comp)
    assert not np.any(g.M_class)
    assert not np.any(g.M_next)
    assert np.allclose(g.Q.sum(axis=1), 0.0)
