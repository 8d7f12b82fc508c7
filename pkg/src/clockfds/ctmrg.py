"""Isotropic corner transfer matrix renormalization group.

The environment of a rotation- and reflection-symmetric site tensor
``a[up, right, down, left]`` is a single diagonal corner ``C`` (stored as a
vector) and one half-row tensor ``T[chi, N, chi]`` whose outer indices are
interchangeable.  One step grows the corner by one row and column,

    C'[(x, d), (y, r)] = sum C[g] T[g, l, x] T[g, u, y] a[u, r, d, l]

diagonalizes it and keeps the ``chi`` dominant eigenvectors, which also
renormalize the half-row.  ``C'`` is a non-negative combination of rank-one
projectors (for non-negative ``C`` and site weights), so the dominant eigenvalues
by magnitude are the largest ones by value.

The reflection ``theta -> -theta`` survives the bias field.  Bond indices in the
real Fourier basis are even (cosine) or odd (sine), the site tensor conserves
total parity, and environments built from it carry a parity label per index;
``C'`` is then block diagonal and each block is diagonalized on its own.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .tensors import BulkTensor, ClockParams, bulk_tensor

__all__ = [
    "Environment",
    "CtmrgConfig",
    "ConvergenceReport",
    "NonFiniteEnvironmentError",
    "DEFAULT_SCHEDULE",
    "init_environment",
    "ctmrg_step",
    "converge",
    "anneal_run",
    "physical_parity",
]

logger = logging.getLogger(__name__)

# corner values below this fraction of the largest carry no weight in any
# contraction; their half-row entries would be noise, so they are dropped
SPECTRUM_CUTOFF = 1e-14

DEFAULT_SCHEDULE: tuple[tuple[float, float], ...] = ((1e-2, 1e-5), (1e-4, 1e-5), (0.0, 1e-8))


class NonFiniteEnvironmentError(FloatingPointError):
    pass


@dataclass(frozen=True)
class Environment:
    """Corner spectrum ``C`` (descending, ``C[0] = 1``) and half-row ``T[a, s, b]``.

    The leading dimension may be smaller than ``chi`` while the environment is
    still growing from a small initial state.
    """

    chi: int
    C: np.ndarray
    T: np.ndarray
    log_scale_C: float = 0.0
    log_scale_T: float = 0.0
    parity: np.ndarray | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return len(self.C)

    @property
    def N(self) -> int:
        return self.T.shape[1]

    def padded(self) -> "Environment":
        """Copy with ``C`` and ``T`` zero-padded to the full ``chi``."""
        D = self.dim
        if D >= self.chi:
            return self
        C = np.zeros(self.chi)
        C[:D] = self.C
        T = np.zeros((self.chi, self.N, self.chi))
        T[:D, :, :D] = self.T
        par = None
        if self.parity is not None:
            par = np.zeros(self.chi, dtype=np.int8)
            par[:D] = self.parity
        return replace(self, C=C, T=T, parity=par)

    def trimmed(self) -> "Environment":
        """Copy with trailing exactly-zero corner values removed."""
        nz = np.flatnonzero(self.C)
        D = int(nz[-1]) + 1 if len(nz) else 1
        if D == self.dim:
            return self
        par = None if self.parity is None else self.parity[:D].copy()
        return replace(self, C=self.C[:D].copy(), T=self.T[:D, :, :D].copy(), parity=par)


@dataclass(frozen=True)
class ConvergenceReport:
    iterations: int
    final_delta: float
    converged: bool
    spectrum_tail: float
    h: float = 0.0
    eps: float = 0.0


@dataclass(frozen=True)
class CtmrgConfig:
    """CTMRG controls.

    ``init_mode`` is one of ``"bulk"``, ``"random"`` (uses ``seed``) or ``"warm"``
    (uses ``warm_env``).
    """

    chi: int
    eps: float = 1e-8
    max_iters: int = 5000
    schedule: tuple[tuple[float, float], ...] = DEFAULT_SCHEDULE
    init_mode: str = "bulk"
    seed: int = 0
    warm_env: Environment | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.chi < 1:
            raise ValueError("chi must be >= 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.init_mode not in ("bulk", "random", "warm"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")
        if self.init_mode == "warm" and self.warm_env is None:
            raise ValueError("init_mode 'warm' needs warm_env")
        sched = tuple((float(h), float(e)) for h, e in self.schedule)
        if not sched:
            raise ValueError("anneal schedule must not be empty")
        if sched[-1][0] != 0.0:
            raise ValueError("anneal schedule must end with h = 0")
        if any(h < 0 or not e > 0 for h, e in sched):
            raise ValueError("schedule needs h >= 0 and eps > 0")
        object.__setattr__(self, "schedule", sched)


def _normalize(C: np.ndarray, T: np.ndarray, env_scales=(0.0, 0.0)):
    c0 = np.max(np.abs(C))
    t0 = np.max(np.abs(T))
    if not (np.isfinite(c0) and np.isfinite(t0)) or c0 == 0 or t0 == 0:
        raise NonFiniteEnvironmentError("environment became non-finite or vanished")
    return C / c0, T / t0, env_scales[0] + float(np.log(c0)), env_scales[1] + float(np.log(t0))


def _fix_signs(U: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs[None, :]


def _top_eigenpairs(M: np.ndarray, keep: int) -> tuple[np.ndarray, np.ndarray]:
    n = M.shape[0]
    if keep < n:
        return sla.eigh(M, subset_by_index=[n - keep, n - 1], driver="evr")
    return np.linalg.eigh(M)


def _dominant_eigenpairs(
    Cmat: np.ndarray, chi: int, parity: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Keep ``min(chi, n)`` dominant eigenpairs, sorted by decreasing value, signs fixed.

    With ``parity`` (one 0/1 label per row) the two parity blocks are
    diagonalized separately and the kept vectors inherit their block's label.
    """
    Cmat = 0.5 * (Cmat + Cmat.T)
    n = Cmat.shape[0]
    keep = min(chi, n)
    if parity is None:
        w, U = _top_eigenpairs(Cmat, keep)
        labels = None
    else:
        ws, Us, ls = [], [], []
        for b in (0, 1):
            idx = np.flatnonzero(parity == b)
            if len(idx) == 0:
                continue
            wb, Ub = _top_eigenpairs(Cmat[np.ix_(idx, idx)], min(keep, len(idx)))
            full = np.zeros((n, len(wb)))
            full[idx] = Ub
            ws.append(wb)
            Us.append(full)
            ls.append(np.full(len(wb), b, dtype=np.int8))
        w, U, labels = np.concatenate(ws), np.concatenate(Us, axis=1), np.concatenate(ls)
    order = np.argsort(-w, kind="stable")[:keep]
    order = order[w[order] > SPECTRUM_CUTOFF * w[order[0]]] if w[order[0]] > 0 else order[:1]
    return w[order], _fix_signs(U[:, order]), None if labels is None else labels[order]


def physical_parity(N: int) -> np.ndarray:
    """Reflection parity of the real Fourier bond basis: 1 for sine columns."""
    par = np.zeros(N, dtype=np.int8)
    par[2 : 2 * ((N - 1) // 2) + 1 : 2] = 1
    return par


def _product_parity(env_par: np.ndarray | None, N: int) -> np.ndarray | None:
    if env_par is None:
        return None
    return (env_par[:, None] ^ physical_parity(N)[None, :]).reshape(-1)


def init_environment(bulk: BulkTensor, config: CtmrgConfig) -> Environment:
    """Initial environment for ``bulk`` according to ``config.init_mode``."""
    a = bulk.entries
    N = bulk.N
    chi = config.chi
    if config.init_mode == "warm":
        env = config.warm_env
        if env.N != N:
            raise ValueError(f"warm-start environment has middle dimension {env.N}, bulk has {N}")
        if env.chi == chi:
            return env
        D = min(env.dim, chi)
        par = None if env.parity is None else env.parity[:D].copy()
        return Environment(chi, env.C[:D].copy(), env.T[:D, :, :D].copy(), env.log_scale_C, env.log_scale_T, par)
    if config.init_mode == "random":
        rng = np.random.default_rng(config.seed)
        C = np.sort(rng.random(chi))[::-1]
        T = rng.random((chi, N, chi))
        T = 0.5 * (T + T.transpose(2, 1, 0))
        C, T, lc, lt = _normalize(C, T)
        return Environment(chi, C, T, lc, lt)
    # free boundary: summing the outer spin of a bond weight leaves only the
    # k = 0 component of the bond index, so outward legs are fixed to index 0
    Cmat = a[0, :, :, 0].T  # corner with legs (down, right)
    Tfull = a[:, :, :, 0]  # [up, right, down]: outer legs up/down, middle leg right
    w, U, par = _dominant_eigenpairs(Cmat, chi, physical_parity(N))
    Tnew = np.einsum("ia,isj,jb->asb", U, Tfull, U, optimize=True)
    C, T, lc, lt = _normalize(w, Tnew)
    return Environment(chi, C, T, lc, lt, par)


def _enlarged_corner(env: Environment, a: np.ndarray) -> np.ndarray:
    C, T = env.C, env.T
    D, N = env.dim, a.shape[0]
    # X[l, x, u, y] = sum_g C_g T[g, l, x] T[g, u, y]
    X = np.einsum("g,glx,guy->lxuy", C, T, T, optimize=True)
    # C'[x, d, y, r] = sum_{l,u} X[l,x,u,y] a[u,r,d,l]
    Cp = np.tensordot(X, a, axes=([0, 2], [3, 0]))  # [x, y, r, d]
    return Cp.transpose(0, 3, 1, 2).reshape(D * N, D * N)


def _projected_edge(env: Environment, a: np.ndarray, U: np.ndarray) -> np.ndarray:
    """``T'[p, r, q] = sum U[(g,u), p] T[g, l, x] a[u, r, d, l] U[(x,d), q]``.

    Contracted in the order that never forms the ``(chi N) x N x (chi N)`` edge.
    """
    T = env.T
    D, N = env.dim, a.shape[0]
    K = U.shape[1]
    U3 = U.reshape(D, N, K)
    Y = np.tensordot(U3, T, axes=([0], [0]))  # [u, p, l, x]
    Y = np.tensordot(Y, a, axes=([0, 2], [0, 3]))  # [p, x, r, d]
    return np.tensordot(Y, U3, axes=([1, 3], [0, 1]))  # [p, r, q]


def ctmrg_step(env: Environment, bulk: BulkTensor) -> tuple[Environment, float]:
    """One isotropic growth-and-truncation step; returns the new environment and delta.

    ``delta`` is the max-abs change of the normalized corner values, with the
    shorter spectrum zero-padded (a value appearing or disappearing counts
    fully).  Eigenpairs below ``SPECTRUM_CUTOFF`` relative to the largest are
    discarded, so the dimension can stay below ``chi``.
    """
    a = bulk.entries
    if env.N != bulk.N:
        raise ValueError(f"environment middle dimension {env.N} != bulk dimension {bulk.N}")
    Cp = _enlarged_corner(env, a)
    if not np.all(np.isfinite(Cp)):
        raise NonFiniteEnvironmentError("non-finite entries in the enlarged corner")
    w, U, par = _dominant_eigenpairs(Cp, env.chi, _product_parity(env.parity, env.N))
    Tnew = _projected_edge(env, a, U)
    C, T, lc, lt = _normalize(w, Tnew, (env.log_scale_C, env.log_scale_T))
    k = max(len(C), env.dim)
    delta = float(np.max(np.abs(np.pad(C, (0, k - len(C))) - np.pad(env.C, (0, k - env.dim)))))
    return Environment(env.chi, C, T, lc, lt, par), delta


def converge(
    env: Environment, bulk: BulkTensor, eps: float, max_iters: int
) -> tuple[Environment, ConvergenceReport]:
    """Iterate `ctmrg_step` until ``delta < eps`` or ``max_iters`` steps are done."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    delta = float("inf")
    it = 0
    while it < max_iters:
        env, delta = ctmrg_step(env, bulk)
        it += 1
        if delta < eps:
            break
    h = bulk.params.h if bulk.params is not None else 0.0
    report = ConvergenceReport(it, delta, bool(delta < eps), float(abs(env.C[-1])), h, eps)
    logger.debug("converge: %s", report)
    return env, report


def anneal_run(
    params: ClockParams, config: CtmrgConfig
) -> tuple[Environment, list[ConvergenceReport]]:
    """Run the bias-field ladder ``config.schedule`` and return the final ``h = 0`` environment.

    Each stage rebuilds the site tensor with its field and starts from the
    previous stage's environment; the first stage starts from ``config.init_mode``.
    ``params.h`` is ignored.
    """
    reports: list[ConvergenceReport] = []
    env = None
    for h, eps in config.schedule:
        bulk = bulk_tensor(params.with_field(h))
        if env is None:
            env = init_environment(bulk, config)
        env, rep = converge(env, bulk, eps, config.max_iters)
        reports.append(rep)
        logger.info(
            "N=%d T=%.5g chi=%d h=%.0e: %d iters, delta=%.2e%s",
            params.N, params.T, config.chi, h, rep.iterations, rep.final_delta,
            "" if rep.converged else " (not converged)",
        )
    return env, reports
