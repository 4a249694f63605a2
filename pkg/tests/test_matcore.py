import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cstarincl.matcore import (
    ToleranceConfig,
    apply_function,
    cutoff_apply,
    cutoff_function,
    direct_sum,
    haar_unitary,
    is_positive,
    matrix_from_json,
    matrix_to_json,
    min_eigenvalue,
    positive_part_shift,
    psd_sqrt,
    random_hermitian,
    random_positive,
    swap_operator,
    tensor,
)
from oracles import charpoly_min_eig


@pytest.mark.parametrize("n", [2, 3, 5, 7])
def test_min_eigenvalue_matches_characteristic_polynomial(rng, n):
    for _ in range(3):
        h = random_hermitian(n, rng)
        assert min_eigenvalue(h) == pytest.approx(charpoly_min_eig(h), abs=1e-9)


def test_min_eigenvalue_rejects_nonhermitian():
    with pytest.raises(ValueError):
        min_eigenvalue(np.array([[0, 1], [0, 0]]))


def test_min_eigenvalue_rank_deficient_positive(rng):
    a = random_positive(6, rng, rank=2)
    assert abs(min_eigenvalue(a)) < 1e-10
    assert abs(charpoly_min_eig(a)) < 1e-8


def test_tolerance_config_validation():
    with pytest.raises(ValueError):
        ToleranceConfig(cert_margin=1.5)
    with pytest.raises(ValueError):
        ToleranceConfig(eig_floor=-1.0)


def test_positive_part_shift_on_known_spectrum():
    q = haar_unitary(4, 3)
    a = q @ np.diag([0.0, 0.5, 1.0, 3.0]) @ q.conj().T
    out = positive_part_shift(a, 0.75)
    assert np.allclose(np.linalg.eigvalsh(out), [0, 0, 0.25, 2.25], atol=1e-12)
    with pytest.raises(ValueError):
        positive_part_shift(a, 0.0)
    with pytest.raises(ValueError):
        positive_part_shift(-a, 0.1)


def test_cutoff_ramp_values():
    phi = cutoff_function(0.2, 0.6)
    assert np.allclose(phi(np.array([0.0, 0.2, 0.4, 0.6, 5.0])), [0, 0, 0.5, 1, 1])
    with pytest.raises(ValueError):
        cutoff_function(0.6, 0.6)
    with pytest.raises(ValueError):
        cutoff_apply(np.eye(2), 0.7, 0.3)


def test_cutoff_apply_is_positive_contraction(rng):
    b = random_positive(5, rng)
    f = cutoff_apply(b, 0.1, 1.0)
    w = np.linalg.eigvalsh(f)
    assert w.min() > -1e-12 and w.max() < 1 + 1e-12


def test_haar_unitary_is_unitary_and_batched():
    us = haar_unitary(4, 0, size=50)
    eye = np.eye(4)
    assert np.allclose(np.einsum("bij,bkj->bik", us, us.conj()), eye, atol=1e-12)


def test_haar_second_moment():
    # E |tr U|^2 = 1 for Haar U(n), any n >= 1
    us = haar_unitary(3, 11, size=40000)
    m2 = np.mean(np.abs(np.trace(us, axis1=1, axis2=2)) ** 2)
    assert abs(m2 - 1.0) < 0.05


def test_haar_rejects_bad_size():
    with pytest.raises(ValueError):
        haar_unitary(0)


def test_tensor_convention_left_factor_outermost():
    a = np.array([[1, 2], [3, 4]])
    b = np.eye(2)
    t = tensor(a, b)
    assert np.allclose(t[:2, 2:], 2 * b)


def test_swap_operator_flips_factors(rng):
    x = rng.standard_normal(2) + 0j
    y = rng.standard_normal(3) + 0j
    s = swap_operator(2, 3)
    assert np.allclose(s @ np.kron(x, y), np.kron(y, x))
    assert np.allclose(s.conj().T @ s, np.eye(6))


def test_direct_sum_shapes():
    d = direct_sum(np.eye(2), 3 * np.eye(1))
    assert np.allclose(np.diag(d), [1, 1, 3])


def test_matrix_json_round_trip(rng):
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.array_equal(matrix_from_json(matrix_to_json(a)), a)
    r = rng.standard_normal((3, 2)) + 0j
    assert np.array_equal(matrix_from_json(matrix_to_json(r)), r)
    with pytest.raises(ValueError):
        matrix_from_json({"dim": 3, "re": [[1, 2]], "im": [[0, 0]]})
    with pytest.raises(ValueError):
        matrix_from_json({"re": [[1]], "im": [[0]]})


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_functional_calculus_properties(n, seed):
    rng = np.random.default_rng(seed)
    a = random_positive(n, rng)
    assert np.allclose(apply_function(a, lambda t: t), a, atol=1e-9 * max(1, np.linalg.norm(a)))
    r = psd_sqrt(a)
    assert np.allclose(r @ r, a, atol=1e-8 * max(1, np.linalg.norm(a)))
    assert is_positive(a)
