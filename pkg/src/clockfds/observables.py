"""Local observables from a converged isotropic environment."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, eigsh, eigs

from .ctmrg import ConvergenceReport, Environment
from .tensors import BulkTensor, cos_weight, impurity_tensor

__all__ = [
    "ObservableRecord",
    "magnetization",
    "correlation_length",
    "transfer_eigenvalues",
    "free_energy_density",
    "measure",
    "DENSE_CHANNEL_LIMIT",
    "SECTOR_COUPLING_FLOOR",
    "dominant_sector",
]

DENSE_CHANNEL_LIMIT = 1024
# Half-row couplings below this fraction of max|T| are treated as absent when
# splitting the environment into vacuum sectors.  Within one vacuum couplings
# are percent-level; between vacua they are ~1e-6 or smaller.
SECTOR_COUPLING_FLOOR = 1e-4


@dataclass(frozen=True)
class ObservableRecord:
    """One converged data point. ``xi`` is ``inf`` when the channel is degenerate."""

    N: int
    T: float
    beta: float
    chi: int
    h: float
    M: float
    xi: float
    f: float
    iterations: int = 0
    converged: bool = True
    eps_final: float = 0.0
    run_id: str = ""
    config_hash: str = ""

    @property
    def report(self) -> ConvergenceReport:
        return ConvergenceReport(self.iterations, self.eps_final, self.converged, float("nan"), self.h)


def _site_network(env: Environment, a: np.ndarray) -> float:
    """Contraction of four corners, four half-rows and the site tensor ``a``."""
    C, T = env.C, env.T
    # top/bottom rows: C[x] T[x, s, y] C[y]
    row = C[:, None, None] * T * C[None, None, :]
    # left column half-row T[x, l, x'], right column T[y, r, y']
    # Z = sum row[x,u,y] T[x,l,x'] a[u,r,d,l] T[y,r,y'] row[x',d,y']
    top_left = np.tensordot(row, T, axes=([0], [0]))  # [u, y, l, x']
    top_left = np.tensordot(top_left, T, axes=([1], [0]))  # [u, l, x', r, y']
    bottom = np.tensordot(top_left, row, axes=([2, 4], [0, 2]))  # [u, l, r, d]
    return float(np.einsum("ulrd,urdl->", bottom, a))


def _corner_networks(env: Environment) -> tuple[float, float]:
    C, T = env.C, env.T
    z0 = float(np.sum(C**4))
    cc = (C[:, None] * C[None, :]) ** 2
    z2 = float(np.einsum("xy,xsy->", cc, T**2))
    return z0, z2


def magnetization(env: Environment, bulk: BulkTensor, bulk_imp: BulkTensor | None = None) -> float:
    """``<cos theta>`` on one site: impurity network over plain network.

    Raises
    ------
    ArithmeticError
        If the plain network contracts to a non-positive value.
    """
    if bulk_imp is None:
        bulk_imp = impurity_tensor(bulk.params, cos_weight(bulk.N), reference=bulk)
    norm = _site_network(env, bulk.entries)
    if not norm > 0:
        raise ArithmeticError(f"non-positive norm contraction {norm:.3e}")
    return _site_network(env, bulk_imp.entries) / norm


def _channel_operator(env: Environment, bulk: BulkTensor | None):
    T = env.T
    D, N = env.dim, env.N
    if bulk is None:
        dim = D * D

        def matvec(v):
            X = v.reshape(D, D)
            # sum_s T_s X T_s^T
            Y = np.tensordot(T, X, axes=([2], [0]))  # [u, s, d']
            Y = np.tensordot(Y, T, axes=([1, 2], [1, 2]))  # [u, d]
            return Y.reshape(-1)

    else:
        a = bulk.entries
        dim = D * N * D

        def matvec(v):
            X = v.reshape(D, N, D)  # [u', s', d']
            Y = np.tensordot(T, X, axes=([2], [0]))  # [u, l, s', d']
            Y = np.tensordot(Y, a, axes=([1, 2], [3, 2]))  # [u, d', s, r]  (a[s, r, s', l])
            Y = np.tensordot(Y, T, axes=([1, 3], [2, 1]))  # [u, s, d]
            return Y.reshape(-1)

    return dim, matvec


def _dense_channel(env: Environment, bulk: BulkTensor | None) -> np.ndarray:
    T = env.T
    D, N = env.dim, env.N
    if bulk is None:
        return np.einsum("usv,dse->udve", T, T).reshape(D * D, D * D)
    M = np.einsum("ulv,srtl,dre->usdvte", T, bulk.entries, T, optimize=True)
    return M.reshape(D * N * D, D * N * D)


def dominant_sector(env: Environment, floor: float = SECTOR_COUPLING_FLOOR) -> Environment:
    """Restriction of ``env`` to the states connected to its largest corner value.

    In an ordered phase the annealed environment can keep a trace (corner
    weight ~1e-11) of another vacuum.  Both vacua are fixed points at ``h = 0``,
    so that trace never decays, and its block of the column operator repeats
    the leading eigenvalue of the selected vacuum.  Components of the graph
    ``max_s |T[u, s, u']| > floor * max|T|`` separate the vacua.
    """
    A = np.abs(env.T).max(axis=1)
    scale = A.max()
    if scale == 0:
        return env
    _, labels = connected_components(A > floor * scale, directed=False)
    keep = np.flatnonzero(labels == labels[int(np.argmax(np.abs(env.C)))])
    if len(keep) == env.dim:
        return env
    par = None if env.parity is None else env.parity[keep]
    return Environment(env.chi, env.C[keep], env.T[np.ix_(keep, np.arange(env.N), keep)],
                       env.log_scale_C, env.log_scale_T, par)


def transfer_eigenvalues(
    env: Environment, bulk: BulkTensor | None = None, k: int = 2, sector: bool = True
) -> np.ndarray:
    """Largest-magnitude eigenvalues of the column transfer operator, by decreasing magnitude.

    With ``bulk=None`` the operator is ``sum_s T[u,s,u'] T[d,s,d']`` (half-row
    against half-row); otherwise the site tensor is inserted between them.
    ``sector=True`` first restricts to the dominant vacuum (`dominant_sector`).
    """
    if sector:
        env = dominant_sector(env)
    dim, matvec = _channel_operator(env, bulk)
    if dim <= DENSE_CHANNEL_LIMIT:
        M = _dense_channel(env, bulk)
        if bulk is None:
            w = np.linalg.eigvalsh(0.5 * (M + M.T))
        else:
            w = np.linalg.eigvals(M)
    else:
        op = LinearOperator((dim, dim), matvec=matvec, dtype=float)
        v0 = np.ones(dim)
        if bulk is None:
            w = eigsh(op, k=k, which="LM", tol=1e-10, v0=v0, return_eigenvectors=False)
        else:
            w = eigs(op, k=k, which="LM", tol=1e-10, v0=v0, return_eigenvectors=False)
    w = np.asarray(w)
    order = np.argsort(-np.abs(w), kind="stable")
    return w[order][:k]


def correlation_length(env: Environment, bulk: BulkTensor | None = None, sector: bool = True) -> float:
    """``1 / ln(|lambda_1| / |lambda_2|)`` of the column transfer operator; ``inf`` if degenerate."""
    lam = np.abs(transfer_eigenvalues(env, bulk, k=2, sector=sector))
    if len(lam) < 2 or lam[1] == 0:
        return 0.0
    if abs(lam[0] - lam[1]) <= 1e-14 * lam[0]:
        return math.inf
    return float(1.0 / np.log(lam[0] / lam[1]))


def free_energy_density(env: Environment, bulk: BulkTensor) -> float:
    """Free energy per site ``-T log kappa`` with ``kappa = Z_site Z_corners / Z_edges^2``."""
    z1 = _site_network(env, bulk.entries)
    z0, z2 = _corner_networks(env)
    if not (z1 > 0 and z0 > 0 and z2 > 0):
        raise ArithmeticError(f"non-positive contraction (site {z1:.3e}, corners {z0:.3e}, edges {z2:.3e})")
    log_kappa = np.log(z1) + np.log(z0) - 2 * np.log(z2) + bulk.log_scale
    beta = bulk.params.beta
    return float(-log_kappa / beta)


def measure(env: Environment, bulk: BulkTensor, **record_fields) -> ObservableRecord:
    """All observables of one environment bundled into a record."""
    p = bulk.params
    return ObservableRecord(
        N=p.N,
        T=p.T,
        beta=p.beta,
        chi=env.chi,
        h=p.h,
        M=magnetization(env, bulk),
        xi=correlation_length(env),
        f=free_energy_density(env, bulk),
        **record_fields,
    )
