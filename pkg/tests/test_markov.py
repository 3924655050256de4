import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import closed_classes_bruteforce, power_stationary, two_state_stationary
from sluggish import MultipleRecurrentClasses, is_unichain, recurrent_classes, stationary_distribution


def test_recurrent_classes_examples():
    assert recurrent_classes([[1, 0], [0, 1]]) == [{0}, {1}]
    assert recurrent_classes([[0, 1], [0.99, 0.01]]) == [{0, 1}]
    assert recurrent_classes([[0.5, 0.5], [0, 1]]) == [{1}]


def test_stationary_examples():
    np.testing.assert_allclose(stationary_distribution([[0.5, 0.5], [0.5, 0.5]]), [0.5, 0.5])
    # closed form (b/(1+b), 1/(1+b)) with b = 0.99
    np.testing.assert_allclose(
        stationary_distribution([[0, 1], [0.99, 0.01]]), [0.4974874371859296, 0.5025125628140703], atol=1e-9
    )
    with pytest.raises(MultipleRecurrentClasses) as exc:
        stationary_distribution(np.eye(2))
    assert exc.value.classes == [[0], [1]]


def test_is_unichain_examples():
    assert is_unichain([[0, 1], [0.3, 0.7]])
    assert not is_unichain(np.eye(2))
    assert is_unichain([[1.0]])


@pytest.mark.parametrize("bad", [[[0.5, 0.6], [0, 1]], [[1.2, -0.2], [0, 1]], [[1, 0]], []])
def test_invalid_matrices_rejected(bad):
    with pytest.raises(ValueError):
        recurrent_classes(bad)


@settings(max_examples=200, deadline=None)
@given(
    a=st.floats(min_value=1e-6, max_value=1.0),
    b=st.floats(min_value=1e-6, max_value=1.0),
)
def test_two_state_closed_form(a, b):
    P = [[1 - a, a], [b, 1 - b]]
    np.testing.assert_allclose(stationary_distribution(P), two_state_stationary(a, b), atol=1e-9)


def test_transient_states_get_zero_weight():
    P = np.array([[0.2, 0.5, 0.3, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.4, 0.0, 0.6], [0.0, 1.0, 0.0, 0.0]])
    pi = stationary_distribution(P)
    assert pi[0] == 0.0
    assert np.abs(pi @ P - pi).max() < 1e-12
    np.testing.assert_allclose(pi, power_stationary(P), atol=1e-10)


def test_periodic_chain():
    P = np.roll(np.eye(5), 1, axis=1)
    np.testing.assert_allclose(stationary_distribution(P), np.full(5, 0.2), atol=1e-14)


def test_classes_match_transitive_closure(rng):
    for _ in range(200):
        n = int(rng.integers(1, 9))
        P = rng.random((n, n)) * (rng.random((n, n)) < 0.3)
        for i in range(n):
            if P[i].sum() == 0:
                P[i, rng.integers(n)] = 1.0
        P /= P.sum(axis=1, keepdims=True)
        assert recurrent_classes(P) == closed_classes_bruteforce(P)
