import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clockfds.oracle import LatticeSpec, brute_force_Z, brute_force_observable
from clockfds.tensors import (
    ClockParams,
    _character_coefficients_direct,
    _clock_z,
    bulk_tensor,
    character_coefficients,
    contract_torus,
    cos_weight,
    gate_matrix,
    gauge_factor,
    impurity_tensor,
    peps_norm_tensor,
    peps_tensor,
    peps_torus_norm,
    verify_gate_decomposition,
)

TINY_BETA = 1e-300


def torus_Z(tensor: np.ndarray, L: int) -> complex:
    return contract_torus([[tensor] * L for _ in range(L)])


def test_params_validation():
    for bad in [dict(N=1, beta=1.0), dict(N=3, beta=0.0), dict(N=3, beta=-1.0), dict(N=3, beta=1.0, h=-0.1)]:
        with pytest.raises(ValueError):
            ClockParams(**bad)
    p = ClockParams.from_temperature(6, 0.8)
    assert p.T == pytest.approx(0.8, rel=1e-15)
    assert p.with_field(0.5).h == 0.5


@given(st.integers(2, 16), st.floats(0.01, 40.0))
def test_character_coefficients_properties(N, x):
    c = character_coefficients(N, x).c
    assert np.all(c > 0)
    np.testing.assert_allclose(c[1:], c[1:][::-1], rtol=1e-12)
    assert c.sum() == pytest.approx(np.exp(x), rel=1e-12)


@given(st.integers(2, 12), st.floats(0.01, 5.0))
def test_character_coefficients_match_direct_sum(N, x):
    np.testing.assert_allclose(character_coefficients(N, x).c, _character_coefficients_direct(N, x),
                               rtol=1e-10, atol=1e-14)


def test_character_coefficient_examples():
    np.testing.assert_array_equal(character_coefficients(4, 0.0).c, [1, 0, 0, 0])
    np.testing.assert_allclose(character_coefficients(2, 0.5).c, [np.cosh(0.5), np.sinh(0.5)], rtol=1e-14)
    assert character_coefficients(2, 0.5).c[0] == pytest.approx(1.127626, abs=1e-6)
    assert character_coefficients(6, 1.0).c.sum() == pytest.approx(np.e, rel=1e-14)


def test_gate_matrix_entries():
    np.testing.assert_allclose(gate_matrix(ClockParams(4, TINY_BETA)), np.eye(16), atol=1e-15)
    G = np.diag(gate_matrix(ClockParams(3, 1.0))).reshape(3, 3)
    np.testing.assert_allclose(np.diag(G), np.exp(0.5))
    assert G[1, 0] == pytest.approx(0.778801, abs=1e-6)


@pytest.mark.parametrize("N,beta", [(2, 1.0), (6, 2.0), (3, TINY_BETA), (12, 0.5), (9, 2.0)])
def test_gate_decomposition(N, beta):
    assert verify_gate_decomposition(ClockParams(N, beta)) < 1e-12


def test_gauge_factor():
    np.testing.assert_allclose(np.abs(gauge_factor(2) @ gauge_factor(2).T - np.eye(2)), 0, atol=1e-15)
    for N in range(2, 11):
        O = gauge_factor(N)
        m = np.arange(N)
        U = np.zeros((N, N))
        U[(N - m) % N, m] = 1
        assert np.max(np.abs(O @ O.T - U)) < 1e-13
    U3 = np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]])
    assert np.max(np.abs(gauge_factor(3) @ gauge_factor(3).T - U3)) < 1e-13


@given(st.integers(2, 9), st.floats(0.05, 3.0), st.sampled_from([0.0, 0.3]))
def test_bulk_tensor_symmetry(N, beta, h):
    a = bulk_tensor(ClockParams(N, beta, h)).entries
    assert np.all(np.isfinite(a))
    assert np.max(np.abs(a)) == pytest.approx(1.0)
    assert np.max(np.abs(a - a.transpose(1, 2, 3, 0))) < 1e-13
    if h == 0:
        assert np.max(np.abs(a - a.transpose(2, 1, 0, 3))) < 1e-13


def test_bulk_tensor_high_temperature_is_rank_one():
    b = bulk_tensor(ClockParams(5, TINY_BETA))
    raw = b.entries * np.exp(b.log_scale)
    assert raw[0, 0, 0, 0] == pytest.approx(5.0)
    raw[0, 0, 0, 0] = 0
    assert np.max(np.abs(raw)) < 1e-12


def test_bond_matrix_eigenvalues():
    from clockfds.tensors import bond_factor

    p = ClockParams(6, 1.0)
    P = bond_factor(p)
    W = P @ P.T
    n = np.arange(6)
    np.testing.assert_allclose(W, np.exp(np.cos(2 * np.pi * np.subtract.outer(n, n) / 6)), rtol=1e-13)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(W)), np.sort(6 * character_coefficients(6, 1.0).c),
                               rtol=1e-12)


@pytest.mark.parametrize("N", [2, 3, 4])
@pytest.mark.parametrize("beta", [0.3, 1.0])
@pytest.mark.parametrize("L", [2, 3])
def test_single_layer_double_layer_and_enumeration_agree(N, beta, L):
    p = ClockParams(N, beta)
    exact = brute_force_Z(LatticeSpec(L, L, N, beta))
    b = bulk_tensor(p)
    z1 = torus_Z(b.entries, L)
    assert abs(z1.imag) < 1e-12 * abs(z1)
    log_single = np.log(z1.real) + L * L * b.log_scale
    z2 = peps_torus_norm(peps_tensor(p), L, L)
    assert abs(np.expm1(log_single - exact)) < 1e-10
    assert abs(np.expm1(np.log(z2) - exact)) < 1e-10


@pytest.mark.parametrize("N", [2, 3])
def test_double_layer_network_matches_state_norm(N):
    peps = peps_tensor(ClockParams(N, 0.8, 0.2))
    z = torus_Z(peps_norm_tensor(peps), 2)
    assert abs(z.imag) < 1e-10 * abs(z)
    assert z.real == pytest.approx(peps_torus_norm(peps, 2, 2), rel=1e-11)
    exact = brute_force_Z(LatticeSpec(2, 2, N, 0.8, 0.2))
    assert np.log(z.real) == pytest.approx(exact, rel=1e-11)


def test_peps_tensor_rotation_and_high_temperature():
    B = peps_tensor(ClockParams(5, 1.0)).entries
    assert np.max(np.abs(B - B.transpose(0, 2, 3, 4, 1))) < 1e-13
    B0 = peps_tensor(ClockParams(3, TINY_BETA)).entries
    # only c_0 survives: every virtual leg is the fixed vector O[0, :]
    O = gauge_factor(3)
    v = O[0]
    ref = np.einsum("i,j,k,l->ijkl", v, v, v, v)
    for s in range(3):
        np.testing.assert_allclose(B0[s], ref, atol=1e-12)


def test_impurity_tensor():
    p = ClockParams(3, 0.7)
    b = bulk_tensor(p)
    one = impurity_tensor(p, lambda n: np.ones_like(n, dtype=float), b)
    np.testing.assert_allclose(one.entries, b.entries, rtol=1e-14)
    cos0 = impurity_tensor(ClockParams(4, TINY_BETA), cos_weight(4))
    assert np.max(np.abs(cos0.entries)) < 1e-12
    with pytest.raises(ValueError):
        impurity_tensor(p, [1.0, 2.0])


@pytest.mark.parametrize("h", [0.0, 0.1])
def test_impurity_ratio_matches_enumeration(h):
    p = ClockParams(2, 0.5 if h else 0.4, h)
    b = bulk_tensor(p)
    imp = impurity_tensor(p, cos_weight(2), b)
    grid = [[imp.entries, b.entries], [b.entries, b.entries]]
    ratio = (contract_torus(grid) / torus_Z(b.entries, 2)).real
    exact = brute_force_observable(LatticeSpec(2, 2, 2, p.beta, h), lambda n: np.cos(np.pi * n))
    assert ratio == pytest.approx(exact, abs=1e-12)
    if h:
        assert exact > 0


def test_clock_z_is_unitary_root_of_identity():
    for N in (2, 5):
        Z = _clock_z(N)
        np.testing.assert_allclose(np.linalg.matrix_power(Z, N), np.eye(N), atol=1e-13)
        np.testing.assert_allclose(Z @ Z.conj().T, np.eye(N), atol=1e-15)


def test_full_permutation_symmetry_of_bulk_tensor():
    a = bulk_tensor(ClockParams(4, 0.9)).entries
    for perm in itertools.permutations(range(4)):
        assert np.max(np.abs(a - a.transpose(perm))) < 1e-13
