import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from scarmodes.hermite_core import (
    SqueezedHermiteState,
    dilate,
    dilation_overlap,
    evaluate,
    excited_state,
    ground_state,
    inner_product,
    lower,
    raise_,
)


def test_ground_state_value_at_origin():
    g = ground_state(0.01, 1)
    assert evaluate(g, np.array([0.0]))[0] == pytest.approx((np.pi * 0.01) ** -0.25, rel=1e-13)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        ground_state(0.0, 1)
    with pytest.raises(ValueError):
        ground_state(1.5, 1)
    with pytest.raises(ValueError):
        ground_state(0.1, 0)
    with pytest.raises(ValueError):
        SqueezedHermiteState(0.1, (0.0,), {(0, 1): 1.0})


def test_ladder_rejects_squeezed_state():
    with pytest.raises(ValueError):
        raise_(dilate(ground_state(0.1, 1), 0.3), 0)


@given(
    st.dictionaries(
        st.tuples(st.integers(0, 6), st.integers(0, 6)),
        st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
        max_size=6,
    ),
    st.dictionaries(
        st.tuples(st.integers(0, 6), st.integers(0, 6)),
        st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
        max_size=6,
    ),
    st.integers(0, 1),
)
def test_ladder_adjointness(ca, cb, axis):
    a = SqueezedHermiteState(0.2, (0.0, 0.0), ca)
    b = SqueezedHermiteState(0.2, (0.0, 0.0), cb)
    lhs = inner_product(raise_(a, axis), b)
    rhs = inner_product(a, lower(b, axis))
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


@pytest.mark.parametrize("lam", [1.0, 2.0, 4.0])
def test_ground_overlap_law(lam):
    g = ground_state(0.05, 1)
    for t in np.linspace(-5, 5, 21):
        val = inner_product(g, dilate(g, lam * t))
        assert abs(val - 1 / np.sqrt(np.cosh(lam * t))) <= 1e-10


def test_ground_overlap_multi_dim_factorizes():
    g = ground_state(0.05, 2)
    val = inner_product(g, dilate(g, (0.7, -1.3)))
    assert val == pytest.approx((np.cosh(0.7) * np.cosh(1.3)) ** -0.5, abs=1e-12)


@settings(max_examples=30)
@given(st.floats(-4, 4), st.integers(0, 12))
def test_dilation_is_unitary(s, m):
    st_ = excited_state(0.1, (m,))
    d = dilate(st_, s)
    assert abs(inner_product(d, d) - 1) < 1e-12
    # column norms approach one once the tail tanh(|s|)^rows is negligible
    if abs(s) > 1.5:
        return
    col = dilation_overlap(s, 400, m + 1)[:, m]
    assert np.sum(np.abs(col) ** 2) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("m", [0, 1, 2, 3, 5, 8])
@pytest.mark.parametrize("s", [0.5, 2.0])
def test_excited_to_ground_ratio(m, s):
    g = ground_state(0.1, 1)
    em = excited_state(0.1, (m,))
    ratio = inner_product(em, dilate(em, s)) / inner_product(g, dilate(g, s))
    if m % 2 == 1:
        # odd states against even: overlap with ground vanishes
        assert abs(inner_product(g, dilate(em, s))) < 1e-13
    assert abs(ratio) <= 1 + 1e-12


@pytest.mark.parametrize("s", [-1.7, 0.4, 2.5])
def test_overlap_against_quadrature(s):
    hbar = 0.3
    for m, n in [(0, 0), (2, 0), (3, 1), (4, 6)]:
        a = excited_state(hbar, (m,))
        b = dilate(excited_state(hbar, (n,)), s)
        f = lambda x: float(np.real(evaluate(a, np.array([x]))[0] * evaluate(b, np.array([x]))[0]))
        ref = quad(f, -15, 15, limit=400, epsabs=1e-13)[0]
        assert inner_product(a, b).real == pytest.approx(ref, abs=1e-10)


def test_overlap_is_hbar_independent():
    vals = []
    for hbar in (0.5, 0.01):
        a = excited_state(hbar, (2,))
        vals.append(inner_product(a, dilate(a, 1.1)))
    assert vals[0] == pytest.approx(vals[1], abs=1e-14)


def test_json_round_trip():
    s = SqueezedHermiteState(0.125, (0.3, -1.0), {(0, 1): 1 + 2j, (3, 0): -0.5j}, phase=np.exp(0.4j))
    back = SqueezedHermiteState.from_json(s.to_json())
    assert back == s


def test_dense_round_trip():
    s = SqueezedHermiteState(0.125, (0.3,), {(0,): 0.6, (4,): 0.8j})
    arr = s.to_dense()
    back = SqueezedHermiteState.from_dense(arr, 0.125, (0.3,))
    assert back.coeffs == s.coeffs
