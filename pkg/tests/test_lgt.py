import math

import numpy as np
import pytest

from clockfds.lgt import (
    ChargeSector,
    DualLattice,
    _single_star_check,
    apply_hamiltonian,
    build_ground_state,
    build_qtilde,
    clock_ops,
    diagonal_small_beta_residual,
    gauss_law_check,
    lowest_eigenpair,
    partition_equivalence,
    qtilde_min_eigenvalue,
    verification_report,
    verify_psd_identity,
)
from clockfds.oracle import brute_force_Z

SQUARE = DualLattice(2, 2)


def test_clock_algebra():
    a2 = clock_ops(2)
    np.testing.assert_allclose(a2.Z, np.diag([1, -1]), atol=1e-15)
    np.testing.assert_allclose(a2.X, [[0, 1], [1, 0]])
    assert clock_ops(3).residuals()["XZ"] < 1e-15
    r8 = clock_ops(8).residuals()
    assert r8["Z^N"] < 1e-13 and r8["X^N"] < 1e-13
    with pytest.raises(ValueError):
        clock_ops(1)


def test_charge_sector():
    assert ChargeSector(2, 0, 0, 0).c == 4
    assert len(list(ChargeSector.all(3))) == 27
    with pytest.raises(ValueError):
        ChargeSector(3, 0, 3, 0)


def test_qtilde_two_state_trivial_sector():
    beta = 0.7
    Q = build_qtilde(2, beta, ChargeSector(2, 0, 0, 0))
    np.testing.assert_allclose(Q, [[np.exp(-4 * beta), -1], [-1, np.exp(4 * beta)]], rtol=1e-14)
    w = np.linalg.eigvalsh(Q)
    assert w[0] == pytest.approx(0.0, abs=1e-12)
    assert w[1] == pytest.approx(np.exp(4 * beta) + np.exp(-4 * beta), rel=1e-14)


@pytest.mark.parametrize("N", range(2, 9))
@pytest.mark.parametrize("beta", [0.1, 0.5, 1.0, 2.0, 4.0])
def test_qtilde_positive_semidefinite(N, beta):
    mins = [qtilde_min_eigenvalue(N, beta, s) for s in ChargeSector.all(N)]
    assert min(mins) >= -1e-12
    # the trivial sector carries the ground-state zero mode
    triv = qtilde_min_eigenvalue(N, beta, ChargeSector(N, 0, 0, 0))
    assert abs(triv) < 1e-10 * np.max(np.abs(build_qtilde(N, beta, ChargeSector(N, 0, 0, 0))))


def test_qtilde_high_temperature_limit():
    N = 5
    Q = build_qtilde(N, 1e-12, ChargeSector(N, 1, 2, 3))
    shift = np.roll(np.eye(N), 1, axis=0)
    np.testing.assert_allclose(Q, 0.5 * (2 * np.eye(N) - shift - shift.T), atol=1e-10)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(Q)), np.sort(1 - np.cos(2 * np.pi * np.arange(N) / N)),
                               atol=1e-10)


@pytest.mark.parametrize("N,beta,sector", [(2, 1.0, (0, 0, 0)), (7, 3.0, (1, 2, 3)), (4, 0.5, (3, 1, 2))])
def test_psd_identity(N, beta, sector):
    assert verify_psd_identity(N, beta, ChargeSector(N, *sector)) < 1e-10


def test_psd_identity_zero_vector():
    assert verify_psd_identity(5, 1.0, ChargeSector(5, 1, 1, 1), n_vectors=0) < 1e-10


def test_dual_lattice():
    lat = DualLattice(3, 2)
    assert lat.legs(0) == (lat.index(0, -1), 1, 3, 2)
    with pytest.raises(ValueError):
        DualLattice(1, 3)


def test_ground_state_amplitudes():
    gs0 = build_ground_state(3, 1e-300, SQUARE)
    assert gs0.dim == 27
    assert gs0.norm2 == pytest.approx(27.0)
    gs = build_ground_state(3, 0.5, SQUARE)
    assert np.all(gs.amplitudes > 0)


@pytest.mark.parametrize("N", [2, 3, 4, 5])
@pytest.mark.parametrize("beta", [0.2, 0.5, 1.0])
def test_hamiltonian_annihilates_ground_state(N, beta):
    gs = build_ground_state(N, beta, SQUARE)
    Hpsi = apply_hamiltonian(N, beta, SQUARE, gs)
    assert np.linalg.norm(Hpsi) / np.linalg.norm(gs.amplitudes) < 1e-10


def test_ground_state_on_rectangle():
    lat = DualLattice(3, 2)
    gs = build_ground_state(3, 0.8, lat)
    assert np.linalg.norm(apply_hamiltonian(3, 0.8, lat, gs)) / np.linalg.norm(gs.amplitudes) < 1e-10


def test_exact_diagonalization_finds_the_state():
    e0, v = lowest_eigenpair(3, 0.5, SQUARE)
    gs = build_ground_state(3, 0.5, SQUARE).amplitudes.reshape(-1)
    assert abs(e0) < 1e-10
    assert abs(v @ gs) / np.linalg.norm(gs) > 1 - 1e-10


def test_iterative_eigensolver_path():
    lat = DualLattice(4, 4)
    e0, v = lowest_eigenpair(2, 0.5, lat)
    gs = build_ground_state(2, 0.5, lat).amplitudes.reshape(-1)
    assert abs(e0) < 1e-10
    assert abs(v @ gs) / np.linalg.norm(gs) > 1 - 1e-10


def test_sparse_and_matrix_free_hamiltonians_agree():
    from clockfds.lgt import hamiltonian_sparse

    lat = DualLattice(3, 2)
    x = np.random.default_rng(1).standard_normal(3**5)
    np.testing.assert_allclose(hamiltonian_sparse(3, 0.9, lat) @ x, apply_hamiltonian(3, 0.9, lat, x), atol=1e-12)


def test_hamiltonian_is_hermitian_and_nonnegative():
    from clockfds.lgt import hamiltonian_matrix

    H = hamiltonian_matrix(3, 0.7, SQUARE)
    np.testing.assert_allclose(H, H.T, atol=1e-13)
    assert np.linalg.eigvalsh(H)[0] > -1e-10


def test_apply_hamiltonian_rejects_wrong_size():
    with pytest.raises(ValueError):
        apply_hamiltonian(3, 0.5, SQUARE, np.ones(10))


def test_small_beta_expansion_is_second_order():
    r1 = diagonal_small_beta_residual(4, 1e-2, SQUARE)
    r2 = diagonal_small_beta_residual(4, 5e-3, SQUARE)
    assert r1 / r2 == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize("N", [2, 3])
def test_gauss_law(N):
    assert gauss_law_check(N, SQUARE) < 1e-12


def test_single_star_commutators():
    for N in (2, 3, 5):
        assert _single_star_check(clock_ops(N)) < 1e-14


def test_gauss_law_falls_back_to_single_star_for_large_spaces():
    # 4^8 link states exceed the explicit-operator budget
    assert gauss_law_check(4, SQUARE) < 1e-12


@pytest.mark.parametrize("N,beta", [(3, 0.3), (5, 1.0), (2, 2.0)])
def test_partition_function_equivalence(N, beta):
    assert partition_equivalence(N, beta, SQUARE) < 1e-12
    gs = build_ground_state(N, beta, SQUARE)
    assert math.log(gs.norm2) == pytest.approx(brute_force_Z(SQUARE.oracle_spec(N, beta)) - math.log(N), rel=1e-12)


def test_partition_function_infinite_temperature():
    gs = build_ground_state(3, 1e-300, SQUARE)
    assert 3 * gs.norm2 == pytest.approx(3.0**4)


def test_verification_report():
    rep = verification_report(2, 0.5, SQUARE)
    assert rep["pass"]
    assert set(rep["checks"]) >= {"qtilde_min_eig", "annihilation", "gauss_law", "partition_equivalence"}
