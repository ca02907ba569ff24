import pytest

from services.state_space import (
    SystemState,
    arrival_target,
    dest,
    enumerate_states,
    next_class,
    sigma,
)
from utils.exceptions import ConfigurationError, StateLogicError


def S(J, *B):
    return SystemState(J, tuple(B))


def test_enumerate_sizes():
    space = enumerate_states(1)
    assert space.size == 3
    assert list(space.states) == [S(0, 0), S(1, 0), S(1, 1)]
    assert enumerate_states(3).size == 25


def test_sigma_closed_form_example():
    space = enumerate_states(2)
    s = S(2, 1, 0)
    assert sigma(s) == 7
    assert space.index_of(s) == 7
    assert space.position(s) == 6


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_index_is_bijection(n):
    space = enumerate_states(n)
    indices = [space.index_of(s) for s in space.states]
    assert indices == list(range(1, 1 + n * 2 ** n + 1))
    assert all(sigma(s) == space.index_of(s) for s in space.states)
    assert space.state_at(space.size) == space.last_state


@pytest.mark.parametrize("n", [0, 11, 2.5])
def test_enumerate_rejects_out_of_range(n):
    with pytest.raises(ConfigurationError):
        enumerate_states(n)


@pytest.mark.parametrize("state, expected", [
    (S(1, 0, 1, 1), 2),
    (S(3, 0, 0, 0), 0),
    (S(2, 1, 1, 1), 1),
])
def test_next_class(state, expected):
    assert next_class(state) == expected


@pytest.mark.parametrize("state, expected", [
    (S(1, 0, 1, 0), S(2, 0, 0, 0)),
    (S(2, 0, 0, 0), S(0, 0, 0, 0)),
    (S(1, 1, 0, 1), S(1, 0, 0, 1)),
])
def test_dest(state, expected):
    assert dest(state) == expected


def test_dest_on_idle_is_a_logic_error():
    with pytest.raises(StateLogicError):
        dest(SystemState.idle(3))


def test_arrival_target():
    idle = SystemState.idle(3)
    assert arrival_target(idle, 2) == S(2, 0, 0, 0)
    assert arrival_target(S(1, 0, 0, 0), 3) == S(1, 0, 0, 1)
    # Reemplazo: auto-transición
    assert arrival_target(S(1, 0, 0, 1), 3) == S(1, 0, 0, 1)


def test_idle_with_buffers_is_unrepresentable():
    with pytest.raises(StateLogicError):
        S(0, 1, 0)
    with pytest.raises(StateLogicError):
        S(4, 0, 0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_structural_maps_stay_in_space(n):
    space = enumerate_states(n)
    for s in space.states:
        if not s.is_idle:
            d = dest(s)
            assert space.index_of(d) >= 1
            if next_class(s) != 0:
                assert d.J == next_class(s)
            else:
                assert d.is_idle
        for k in range(1, n + 1):
            a = arrival_target(s, k)
            space.index_of(a)
            if not s.is_idle and s.B[k - 1] == 1:
                assert arrival_target(a, k) == a
