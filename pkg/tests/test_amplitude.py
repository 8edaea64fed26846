import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifmlab.amplitude import apply, basis_state, inner, is_unitary, norm2, tensor
from ifmlab.errors import DimensionError

BS50 = np.array([[1, 1j], [1j, 1]]) / math.sqrt(2)


def e(i, n=2):
    return basis_state(n, i)


def test_inner_basis():
    assert inner(e(0), e(0)) == 1
    assert inner(e(0), e(1)) == 0
    plus = (e(0) + e(1)) / math.sqrt(2)
    assert inner(plus, e(1)) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_inner_conjugates_first_argument():
    a = np.array([1j, 0])
    assert inner(a, e(0)) == -1j


def test_inner_dimension_mismatch():
    with pytest.raises(DimensionError):
        inner(e(0, 2), e(0, 3))


def test_apply():
    s = np.array([0.6, 0.8j])
    np.testing.assert_array_equal(apply(np.eye(2), s), s)
    np.testing.assert_array_equal(apply(np.diag([-1, 1]), e(0)), -e(0))
    np.testing.assert_allclose(apply(BS50, e(0)), (e(0) + 1j * e(1)) / math.sqrt(2), atol=1e-15)
    with pytest.raises(DimensionError):
        apply(np.eye(3), e(0))


def test_tensor():
    np.testing.assert_array_equal(tensor(e(0, 2), e(1, 3)), basis_state(6, 1))
    np.testing.assert_array_equal(tensor(np.eye(2), np.eye(3)), np.eye(6))
    s, t = np.array([3, 4j]), np.array([1, 1, 1])
    assert math.sqrt(norm2(tensor(s, t))) == pytest.approx(5 * math.sqrt(3))


def test_is_unitary():
    assert is_unitary(np.eye(4), 1e-12)
    assert not is_unitary(np.diag([2, 1]), 1e-12)
    # U^dag U by hand: off-diagonal (1)(i) + (-i)(1) = 0, diagonal 1/2 + 1/2
    assert is_unitary(BS50, 1e-12)
    with pytest.raises(ValueError):
        is_unitary(np.eye(2), 0)


complexes = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@settings(max_examples=200)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.lists(complexes, min_size=n, max_size=n), st.lists(complexes, min_size=n, max_size=n))))
def test_inner_hermitian_symmetry(pair):
    a, b = (np.array(x, dtype=complex) for x in pair)
    lhs, rhs = inner(a, b), inner(b, a).conjugate()
    assert abs(lhs - rhs) <= 1e-15 * max(1.0, abs(lhs))


@settings(max_examples=100)
@given(st.lists(complexes, min_size=2, max_size=3), st.lists(complexes, min_size=1, max_size=3),
       st.lists(complexes, min_size=2, max_size=2))
def test_tensor_associative(a, b, c):
    a, b, c = (np.array(x, dtype=complex) for x in (a, b, c))
    left, right = tensor(tensor(a, b), c), tensor(a, tensor(b, c))
    assert np.max(np.abs(left - right), initial=0) <= 1e-15 * max(1.0, np.max(np.abs(left)))


@settings(max_examples=100)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_unitary_apply_preserves_norm(n, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    assert is_unitary(q, 1e-12)
    s = rng.normal(size=n) + 1j * rng.normal(size=n)
    s /= math.sqrt(norm2(s))
    assert abs(norm2(apply(q, s)) - 1) <= 1e-12
