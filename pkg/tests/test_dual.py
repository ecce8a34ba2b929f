import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smoothcontact.dual import (POSE_WIDTH, BranchError, Dual, extract_jacobian, primal, seed,
                                seed_pose_tangents, strict_branches, variable)

from oracles import derivatives_agree, directional_check


def test_seed_pose_tangents_identity_block():
    p1, p2 = seed_pose_tangents(np.zeros(6), np.arange(6.0))
    np.testing.assert_array_equal(primal(p1), np.zeros(6))
    np.testing.assert_array_equal(primal(p2), np.arange(6.0))
    J = np.concatenate([p1.tan, p2.tan])
    np.testing.assert_array_equal(J, np.eye(12))
    np.testing.assert_array_equal(p1.tan, np.hstack([np.eye(6), np.zeros((6, 6))]))


def test_seed_rejects_narrow_width():
    with pytest.raises(ValueError):
        seed_pose_tangents(np.zeros(6), np.zeros(6), width=11)


def test_square_derivative_in_slot():
    s, _ = seed_pose_tangents(np.array([0, 0, 0, 2.0, 0, 0]), np.zeros(6))
    y = s[3] ** 2
    assert y.tan[3] == 4.0
    assert np.count_nonzero(y.tan) == 1


def test_extract_jacobian_rows():
    p1, p2 = seed_pose_tangents(np.ones(6), np.ones(6))
    J = extract_jacobian([p1[2], 3.0, p2[0] * p1[2]])
    assert J.shape == (3, POSE_WIDTH)
    np.testing.assert_array_equal(J[0], np.eye(12)[2])
    np.testing.assert_array_equal(J[1], np.zeros(12))
    np.testing.assert_array_equal(J[2], np.eye(12)[2] + np.eye(12)[6])


FUNCS = {
    "exp": np.exp, "log": lambda x: np.log(x + 3.0), "log1p": lambda x: np.log1p(x + 1.5),
    "tanh": np.tanh, "sqrt": lambda x: np.sqrt(x + 3.0), "sin": np.sin, "cos": np.cos,
    "div": lambda x: 1.0 / (x + 3.0), "pow": lambda x: (x + 3.0) ** 1.7,
    "logaddexp": lambda x: np.logaddexp(x, 0.3 * x), "arctan2": lambda x: np.arctan2(x, 2.0 + x * x),
    "matmul": lambda x: x.reshape(-1, 2, 2) @ np.array([[1.0, 2.0], [0.5, -1.0]]),
    "cross": lambda x: np.cross(x.reshape(-1, 3), x.reshape(-1, 3)[::-1]),
    "sum_mean": lambda x: np.sum(x.reshape(-1, 4), axis=1) * np.mean(x),
}


@pytest.mark.parametrize("name", sorted(FUNCS))
def test_chain_rule_matches_finite_differences(name):
    rng = np.random.default_rng(len(name))
    x = rng.uniform(-1, 1, 24)
    fwd, fd = directional_check(FUNCS[name], x, rng.normal(size=24))
    assert derivatives_agree(fwd, fd)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
def test_primal_bit_matches_plain(xs):
    x = np.array(xs)
    f = lambda z: np.tanh(z) * np.exp(-z * z) + np.sqrt(z * z + 1.0) / (2.0 + np.sin(z))
    np.testing.assert_array_equal(primal(f(variable(x, 0, 1))), f(x))


def test_seed_places_slots():
    d = seed(np.array([[1.0, 2.0]]), offset=1, width=4)
    np.testing.assert_array_equal(d.tan[0], [[0, 1, 0, 0], [0, 0, 1, 0]])


def test_unsupported_ufunc_raises():
    with pytest.raises(TypeError):
        np.arcsinh(Dual(np.ones(2), np.ones((2, 1))))


def test_strict_mode_flags_data_dependent_branches():
    x = Dual(np.array([0.5, -0.5]), np.ones((2, 1)))
    with strict_branches():
        with pytest.raises(BranchError):
            _ = x > 0
        with pytest.raises(BranchError):
            np.maximum(x, 0.0)
        with pytest.raises(BranchError):
            bool(x[0])
        # explicit stop-gradient is allowed
        np.where(primal(x) > 0, x, -x)
    assert np.all((x > 0) == [True, False])
