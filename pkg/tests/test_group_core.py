import numpy as np
import pytest

from heis_besov.group_core import (GroupPoint, Weight, cc_distance, dilate, homogeneous_norm, inverse,
                                   multiply, star_norm, symplectic)

rng = np.random.default_rng(0)
Q = rng.normal(size=(20, 3))


def test_identity_and_inverse():
    e = np.zeros(3)
    assert np.allclose(multiply(e, Q), Q)
    assert np.allclose(multiply(Q, inverse(Q)), 0.0)


def test_known_product():
    assert np.allclose(multiply([1, 0, 0], [0, 1, 0]), [1, 1, -2])
    p = GroupPoint((1.0,), (0.0,), 0.0) * GroupPoint((0.0,), (1.0,), 0.0)
    assert p == GroupPoint((1.0,), (1.0,), -2.0)


def test_associativity_and_symplectic():
    a, b, c = Q[:5], Q[5:10], Q[10:15]
    assert np.allclose(multiply(multiply(a, b), c), multiply(a, multiply(b, c)))
    assert np.allclose(symplectic(a, b), -symplectic(b, a))


def test_dilation():
    assert np.allclose(dilate(1.0, Q), Q)
    assert np.allclose(dilate(2.0, [1, 1, -2]), [2, 2, -8])
    # automorphism and norm homogeneity
    assert np.allclose(dilate(3.0, multiply(Q[:5], Q[5:10])), multiply(dilate(3.0, Q[:5]), dilate(3.0, Q[5:10])))
    assert np.allclose(homogeneous_norm(dilate(3.0, Q)), 3.0 * homogeneous_norm(Q))
    with pytest.raises(ValueError):
        dilate(0.0, Q)


def test_norms():
    assert homogeneous_norm([1, 1, -2]) == pytest.approx(2.0)
    assert star_norm(np.zeros(3)) == pytest.approx(1.0)
    assert np.allclose(cc_distance(Q, Q), 0.0)
    # left invariance of the distance surrogate
    g = Q[0]
    assert np.allclose(cc_distance(multiply(g, Q[1:]), multiply(g, Q[:-1])), cc_distance(Q[1:], Q[:-1]))


def test_weights():
    assert np.allclose(Weight.exponential(0.0)(Q), 1.0)
    assert Weight.exponential(0.3)(np.zeros(3)) == pytest.approx(np.exp(-0.3))
    assert Weight.polynomial(2.0, 1.0, "decay")(np.zeros(3)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        Weight.exponential(0.1, 1.5)
    with pytest.raises(ValueError):
        Weight(kind="bogus")


def test_dimension_errors():
    with pytest.raises(ValueError):
        multiply(np.zeros(3), np.zeros(5))
    with pytest.raises(ValueError):
        multiply(np.zeros(4), np.zeros(4))
    with pytest.raises(ValueError):
        GroupPoint((1.0,), (), 0.0)
