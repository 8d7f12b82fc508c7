"""Tensors of the N-state clock model network.

Everything here is built from the clock Hamiltonian

    H = -sum_<ij> cos(theta_i - theta_j) - h sum_i cos(theta_i),   theta = 2 pi n / N

The production path is the single-layer tensor `bulk_tensor` (bond dimension N),
obtained by splitting the bond Boltzmann matrix ``W = P P^T`` in a real Fourier
basis. The double-layer PEPS tensor `peps_tensor` (norm bond dimension N^2) is
the symmetric-gauge construction of the quantum state whose norm is Z; it is kept
for cross-checks only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

__all__ = [
    "ClockParams",
    "CharacterCoefficients",
    "BulkTensor",
    "PepsTensor",
    "character_coefficients",
    "gate_matrix",
    "verify_gate_decomposition",
    "gauge_factor",
    "peps_tensor",
    "bond_factor",
    "bulk_tensor",
    "impurity_tensor",
    "peps_norm_tensor",
    "peps_torus_norm",
    "contract_torus",
    "GATE_TOLERANCE",
]

GATE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ClockParams:
    """Model definition: ``N`` clock states, inverse temperature ``beta``, bias ``h``."""

    N: int
    beta: float
    h: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.h >= 0:
            raise ValueError(f"h must be non-negative, got {self.h}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def from_temperature(cls, N: int, T: float, h: float = 0.0) -> "ClockParams":
        return cls(N, 1.0 / T, h)

    @property
    def T(self) -> float:
        return 1.0 / self.beta

    def with_field(self, h: float) -> "ClockParams":
        return ClockParams(self.N, self.beta, h)

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.N) / self.N


@dataclass(frozen=True)
class CharacterCoefficients:
    N: int
    x: float
    c: np.ndarray


@dataclass(frozen=True)
class BulkTensor:
    """Rank-4 real tensor ``a[up, right, down, left]`` with max-abs entry 1.

    The true tensor is ``exp(log_scale) * entries``.
    """

    N: int
    entries: np.ndarray
    log_scale: float
    params: ClockParams | None = field(default=None, compare=False)

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True)
class PepsTensor:
    """Rank-5 complex tensor ``B[s, up, right, down, left]``."""

    N: int
    entries: np.ndarray


def character_coefficients(N: int, x: float) -> CharacterCoefficients:
    """Discrete Fourier coefficients of ``exp(x cos(2 pi k / N))``.

    ``c_m = (1/N) sum_k cos(2 pi k m / N) exp(x cos(2 pi k / N))``.

    Evaluated as the aliased Bessel sum ``c_m = sum_{j} I_{m + jN}(x)``, which is
    identical but keeps tiny coefficients positive where the cosine sum would
    lose them to cancellation.
    """
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N}")
    N = int(N)
    x = float(x)
    if x == 0.0:
        c = np.zeros(N)
        c[0] = 1.0
        return CharacterCoefficients(N, x, c)
    ax = abs(x)
    nmax = int(np.ceil((ax + 60.0 + 12.0 * np.sqrt(ax)) / N) + 1) * N
    orders = np.arange(-nmax, nmax + 1)
    # I_n(-x) = (-1)^n I_n(x); ive keeps exp(-|x|) scaling, restored below
    terms = special.ive(np.abs(orders), ax)
    if x < 0:
        terms = terms * np.where(orders % 2 == 0, 1.0, -1.0)
    c = np.zeros(N)
    np.add.at(c, orders % N, terms)
    c *= np.exp(ax)
    return CharacterCoefficients(N, x, c)


def _character_coefficients_direct(N: int, x: float) -> np.ndarray:
    k = np.arange(N)
    phase = np.cos(2 * np.pi * np.outer(k, k) / N)
    return phase @ np.exp(x * np.cos(2 * np.pi * k / N)) / N


def gate_matrix(params: ClockParams) -> np.ndarray:
    """Diagonal two-site gate ``exp(-beta h_ij / 2)`` as an N^2 x N^2 matrix."""
    N = params.N
    n = np.arange(N)
    diff = np.subtract.outer(n, n)
    diag = np.exp(0.5 * params.beta * np.cos(2 * np.pi * diff / N))
    return np.diag(diag.reshape(-1))


def _clock_z(N: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(N) / N))


def verify_gate_decomposition(params: ClockParams) -> float:
    """Max-abs residual of ``G - sum_m c_m(beta/2) Z^m (x) (Z^dag)^m``.

    Raises
    ------
    ArithmeticError
        If the residual reaches ``GATE_TOLERANCE``.
    """
    N = params.N
    c = character_coefficients(N, params.beta / 2).c
    Z = _clock_z(N)
    recon = np.zeros((N * N, N * N), dtype=complex)
    Zm = np.eye(N, dtype=complex)
    for m in range(N):
        recon += c[m] * np.kron(Zm, Zm.conj())
        Zm = Zm @ Z
    residual = float(np.max(np.abs(gate_matrix(params) - recon)))
    if not residual < GATE_TOLERANCE:
        raise ArithmeticError(f"gate decomposition residual {residual:.3e} for {params}")
    return residual


def gauge_factor(N: int) -> np.ndarray:
    """Complex ``O`` with ``O @ O.T == U``, ``U[m, m'] = delta(m, (N - m') mod N)``.

    ``U`` is a real symmetric permutation, so ``U = V diag(lam) V^T`` with
    ``lam = +-1`` and ``O = V diag(sqrt(lam))`` taking ``sqrt(-1) = 1j``.
    """
    m = np.arange(N)
    U = np.zeros((N, N))
    U[(N - m) % N, m] = 1.0
    lam, V = np.linalg.eigh(U)
    lam = np.rint(lam)
    return V * np.sqrt(lam.astype(complex))


def peps_tensor(params: ClockParams) -> PepsTensor:
    """Rotation-invariant PEPS tensor whose norm network is the partition function.

    ``B[s, i, j, k, l] = V_i(s) V_j(s) V_k(s) V_l(s)`` with
    ``V_k(s) = sum_m O[m, k] sqrt(c_m) omega^(m s)``; bias-field weights, if any,
    are split as a square root onto the ket.
    """
    N = params.N
    c = character_coefficients(N, params.beta / 2).c
    O = gauge_factor(N)
    s = np.arange(N)
    omega_ms = np.exp(2j * np.pi * np.outer(s, s) / N)  # [s, m]
    V = (omega_ms * np.sqrt(c)[None, :]) @ O  # [s, k]
    B = np.einsum("si,sj,sk,sl->sijkl", V, V, V, V)
    if params.h:
        B = B * np.exp(0.5 * params.beta * params.h * np.cos(params.angles))[:, None, None, None, None]
    return PepsTensor(N, B)


def peps_norm_tensor(peps: PepsTensor) -> np.ndarray:
    """Double-layer tensor ``E[(i i'), (j j'), (k k'), (l l')]`` of the norm network."""
    B = peps.entries
    N = peps.N
    E = np.einsum("sijkl,sabcd->iajbkcld", B, B.conj())
    return E.reshape(N * N, N * N, N * N, N * N)


def peps_torus_norm(peps: PepsTensor, Lx: int, Ly: int) -> float:
    """Norm ``<psi|psi>`` of the PEPS on an ``Ly x Lx`` torus.

    Equivalent to contracting the double-layer network but far cheaper:
    single-layer row operators keep the row's physical configuration as a
    batch index, amplitudes are traces of their products, and the squared
    amplitudes are summed.  Memory grows as ``N^(Lx (Ly - 1)) D^(2 Lx)``.
    """
    B = peps.entries
    N = peps.N
    D = B.shape[1]
    acc = B.transpose(0, 4, 1, 3, 2)  # [s, l, u, d, r]
    for _ in range(Lx - 1):
        S, L0, U, Dn, _r = acc.shape
        acc = np.tensordot(acc, B.transpose(0, 4, 1, 3, 2), axes=([4], [1]))  # [S, l0, U, Dn, s, u, d, r]
        acc = acc.transpose(0, 4, 1, 2, 5, 3, 6, 7).reshape(S * N, L0, U * D, Dn * D, D)
    R = np.einsum("slUDl->sUD", acc)  # [row config, up, down]
    X = R.shape[1]
    if Ly == 1:
        amp = np.einsum("sii->s", R)
        return float(np.sum(np.abs(amp) ** 2))
    P = R
    for _ in range(Ly - 2):
        P = np.tensordot(P, R, axes=([2], [1])).transpose(0, 2, 1, 3).reshape(-1, X, X)
    amp = P.reshape(len(P), X * X) @ R.transpose(0, 2, 1).reshape(len(R), X * X).T
    return float(np.sum(np.abs(amp) ** 2))


def _real_fourier_basis(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal real eigenbasis of symmetric N x N circulants and its Fourier labels.

    Columns are ordered k = 0, cos 1, sin 1, cos 2, sin 2, ..., (N/2 for even N).
    """
    n = np.arange(N)
    cols = [np.full(N, 1 / np.sqrt(N))]
    labels = [0]
    for k in range(1, (N - 1) // 2 + 1):
        cols.append(np.sqrt(2 / N) * np.cos(2 * np.pi * k * n / N))
        cols.append(np.sqrt(2 / N) * np.sin(2 * np.pi * k * n / N))
        labels += [k, k]
    if N % 2 == 0:
        cols.append((-1.0) ** n / np.sqrt(N))
        labels.append(N // 2)
    return np.stack(cols, axis=1), np.asarray(labels)


def bond_factor(params: ClockParams) -> np.ndarray:
    """Real ``P`` with ``P @ P.T = W``, ``W[n, n'] = exp(beta cos(2 pi (n - n') / N))``.

    Raises
    ------
    ArithmeticError
        If an eigenvalue ``N c_k(beta)`` of ``W`` is negative (underflow to zero is allowed).
    """
    N = params.N
    Q, labels = _real_fourier_basis(N)
    eig = N * character_coefficients(N, params.beta).c[labels]
    if np.any(eig < 0) or not np.all(np.isfinite(eig)):
        raise ArithmeticError(f"bond Boltzmann matrix has a negative eigenvalue for {params}")
    return Q * np.sqrt(eig)[None, :]


def _site_tensor(P: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.einsum("n,ni,nj,nk,nl->ijkl", weights, P, P, P, P)


def _field_weights(params: ClockParams) -> np.ndarray:
    return np.exp(params.beta * params.h * np.cos(params.angles))


def bulk_tensor(params: ClockParams) -> BulkTensor:
    """Single-layer site tensor ``a[i,j,k,l] = sum_n e^{beta h cos} P[n,i] P[n,j] P[n,k] P[n,l]``."""
    P = bond_factor(params)
    a = _site_tensor(P, _field_weights(params))
    scale = np.max(np.abs(a))
    return BulkTensor(params.N, a / scale, float(np.log(scale)), params)


def impurity_tensor(
    params: ClockParams,
    weight: Callable[[np.ndarray], np.ndarray] | Sequence[float],
    reference: BulkTensor | None = None,
) -> BulkTensor:
    """Site tensor with the spin sum weighted by ``weight(n)``.

    Normalized with the bulk tensor's scale so impurity/bulk contraction ratios
    are expectation values.
    """
    if reference is None:
        reference = bulk_tensor(params)
    n = np.arange(params.N)
    w = np.asarray(weight(n) if callable(weight) else weight, dtype=float)
    if w.shape != (params.N,):
        raise ValueError(f"weight must give {params.N} values, got shape {w.shape}")
    P = bond_factor(params)
    a = _site_tensor(P, w * _field_weights(params))
    return BulkTensor(params.N, a / np.exp(reference.log_scale), reference.log_scale, params)


def cos_weight(N: int) -> np.ndarray:
    return np.cos(2 * np.pi * np.arange(N) / N)


def contract_torus(grid: Sequence[Sequence[np.ndarray]]) -> complex:
    """Exactly contract an ``Ly x Lx`` periodic grid of rank-4 tensors ``[u, r, d, l]``.

    Each row is turned into a dense row-to-row transfer matrix and the trace of
    their product is returned. Meant for tiny tori (D^Lx up to a few thousand).
    """
    rows = []
    for row in grid:
        D = row[0].shape[0]
        acc = row[0].transpose(3, 0, 2, 1)  # [l0, u0, d0, r0]
        for k, t in enumerate(row[1:], start=1):
            # [l0, u0..u_{k-1}, d0..d_{k-1}, u_k, r_k, d_k]
            acc = np.tensordot(acc, t, axes=([acc.ndim - 1], [3]))
            ups = list(range(1, k + 1)) + [2 * k + 1]
            downs = list(range(k + 1, 2 * k + 1)) + [2 * k + 3]
            acc = acc.transpose([0] + ups + downs + [2 * k + 2])
        Lx = len(row)
        acc = np.trace(acc, axis1=0, axis2=acc.ndim - 1)
        rows.append(acc.reshape(D**Lx, D**Lx))
    M = rows[0]
    for R in rows[1:]:
        M = M @ R
    return np.trace(M)
