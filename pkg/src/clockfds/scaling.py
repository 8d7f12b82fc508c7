"""Finite-entanglement analysis: chi -> infinity extrapolation, the ordered-phase
correlation-length fit, scaling collapses and their quality score.

Reduced temperature is ``t = (T - T_L) / T_L`` throughout.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .observables import ObservableRecord

__all__ = [
    "ExtrapolationResult",
    "XiFitResult",
    "CollapseResult",
    "CriticalTemps",
    "InsufficientDataError",
    "FitError",
    "NotBracketedError",
    "extrapolate_chi",
    "extrapolate_all",
    "fit_xi_scaling",
    "xi_scaling_model",
    "collapse_score",
    "grouped_collapse_score",
    "collapse_ansatz_N",
    "collapse_kappa",
    "collapse_crossover",
    "estimate_T_L",
    "delta_magnetization",
    "xi0_default",
    "CHI_MIN",
    "MAX_REL_ERR",
]

logger = logging.getLogger(__name__)

CHI_MIN = 70
MAX_REL_ERR = 0.035
KAPPA_RANGE = (1.0, 1.5)


class InsufficientDataError(ValueError):
    pass


class FitError(RuntimeError):
    pass


class NotBracketedError(ValueError):
    pass


def delta_magnetization(N) -> float:
    """Magnetization scaling dimension ``2 / N^2``."""
    return 2.0 / np.asarray(N, dtype=float) ** 2


def xi0_default(N) -> float:
    return math.log(2) / float(N) ** 1.5


# chi extrapolation -------------------------------------------------------------


@dataclass(frozen=True)
class ExtrapolationResult:
    """Intercept of an ordinary least-squares fit in ``1/chi``."""

    value: float
    stderr: float
    used_chis: tuple[int, ...]
    N: int | None = None
    T: float | None = None
    field: str = "xi"

    @property
    def rel_err(self) -> float:
        return self.stderr / abs(self.value) if self.value != 0 else math.inf

    @property
    def accepted(self) -> bool:
        return bool(np.isfinite(self.value) and self.rel_err <= MAX_REL_ERR)


def extrapolate_chi(
    records: Sequence[ObservableRecord], field: str = "xi", chi_min: int = CHI_MIN
) -> ExtrapolationResult:
    """Fit ``y = y_inf + b / chi`` to records of one ``(N, T)`` with ``chi >= chi_min``.

    Non-converged records are rejected.  ``stderr`` is the intercept's standard
    error from the OLS covariance (zero for an exact fit with one degree of
    freedom left over or none).

    Raises
    ------
    InsufficientDataError
        Fewer than three usable records.
    ValueError
        Records from more than one ``(N, T)`` or an unknown field.
    """
    if field not in ("M", "xi"):
        raise ValueError(f"field must be 'M' or 'xi', got {field!r}")
    keys = {(r.N, round(r.T, 12)) for r in records}
    if len(keys) > 1:
        raise ValueError(f"records span several (N, T): {sorted(keys)}")
    use = [r for r in records if r.chi >= chi_min and r.converged and np.isfinite(getattr(r, field))]
    by_chi = {}
    for r in use:
        by_chi[r.chi] = r  # one record per chi
    if len(by_chi) < 3:
        raise InsufficientDataError(f"need >= 3 converged records with chi >= {chi_min}, got {len(by_chi)}")
    chis = np.array(sorted(by_chi))
    y = np.array([getattr(by_chi[c], field) for c in chis])
    X = np.column_stack([np.ones(len(chis)), 1.0 / chis])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    dof = len(y) - 2
    resid = y - X @ coef
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    r0 = use[0]
    return ExtrapolationResult(
        float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0))), tuple(int(c) for c in chis), r0.N, r0.T, field
    )


def extrapolate_all(
    records: Iterable[ObservableRecord], field: str = "xi", chi_min: int = CHI_MIN
) -> tuple[dict[tuple[int, float], ExtrapolationResult], list[dict]]:
    """Extrapolate every ``(N, T)`` group; returns accepted results and an audit log.

    The audit log has one entry per group that was dropped, with the reason.
    """
    groups: dict[tuple[int, float], list[ObservableRecord]] = defaultdict(list)
    for r in records:
        groups[(r.N, round(r.T, 12))].append(r)
    accepted, audit = {}, []
    for key in sorted(groups):
        try:
            res = extrapolate_chi(groups[key], field, chi_min)
        except InsufficientDataError as exc:
            audit.append({"N": key[0], "T": key[1], "reason": "insufficient", "detail": str(exc)})
            continue
        if not res.accepted:
            audit.append({"N": key[0], "T": key[1], "reason": "rel_err", "rel_err": res.rel_err, "value": res.value})
            logger.info("excluded N=%d T=%.5g: relative error %.3g > %.3g", key[0], key[1], res.rel_err, MAX_REL_ERR)
            continue
        accepted[key] = res
    return accepted, audit


# critical temperatures ------------------------------------------------------------


@dataclass(frozen=True)
class CriticalTemps:
    """Lower transition temperature ``T_L`` per ``N``."""

    values: Mapping[int, float]

    def __post_init__(self):
        for N, T in self.values.items():
            if not T > 0:
                raise ValueError(f"T_L({N}) must be positive, got {T}")

    def __getitem__(self, N: int) -> float:
        try:
            return self.values[int(N)]
        except KeyError:
            raise KeyError(f"no T_L for N={N}") from None

    def reduced(self, N: int, T) -> np.ndarray:
        TL = self[N]
        return (np.asarray(T, dtype=float) - TL) / TL


# correlation-length fit ----------------------------------------------------------


def xi_scaling_model(t, N, a: float, b: float, eps0: float):
    """``log xi = log eps0 - a log N + (pi/4) / sqrt(|t| / N^b)``."""
    t = np.asarray(t, dtype=float)
    N = np.asarray(N, dtype=float)
    return np.log(eps0) - a * np.log(N) + (math.pi / 4) / np.sqrt(np.abs(t) / N**b)


@dataclass(frozen=True)
class XiFitResult:
    a: float
    b: float
    eps0: float
    covariance: np.ndarray
    residual: float
    n_points: int = 0

    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))

    def as_dict(self) -> dict:
        return {
            "a": self.a, "b": self.b, "eps0": self.eps0,
            "stderr": self.stderr().tolist(), "covariance": np.asarray(self.covariance).tolist(),
            "residual": self.residual, "n_points": self.n_points,
        }


def fit_xi_scaling(
    xi_inf: Mapping[tuple[int, float], float],
    temps: CriticalTemps,
    init: tuple[float, float, float] = (1.5, 1.0, math.log(2)),
) -> XiFitResult:
    """Nonlinear least squares of ``log xi_inf`` against `xi_scaling_model`.

    Bounds are ``a in [0, 4]``, ``b in [0, 3]``, ``eps0 in (0, 10]``.  Only
    points with ``t < 0`` are used; at least two distinct ``N`` are required.
    """
    rows = []
    for (N, T), xi in xi_inf.items():
        t = float(temps.reduced(N, T))
        if t < 0 and xi > 0 and np.isfinite(xi):
            rows.append((N, t, math.log(xi)))
    if len({r[0] for r in rows}) < 2:
        raise InsufficientDataError("the N exponent is not identifiable from fewer than two distinct N")
    if len(rows) < 3:
        raise InsufficientDataError("need at least three ordered-phase points")
    N, t, y = (np.array(c, dtype=float) for c in zip(*rows))

    def resid(p):
        return xi_scaling_model(t, N, p[0], p[1], p[2]) - y

    sol = least_squares(
        resid, np.asarray(init, dtype=float), bounds=([0.0, 0.0, 1e-12], [4.0, 3.0, 10.0]),
        x_scale="jac", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=10000,
    )
    if not sol.success:
        raise FitError(f"scaling fit did not converge: {sol.message} (cost {sol.cost:.3e}, nfev {sol.nfev})")
    J = sol.jac
    dof = max(len(y) - 3, 1)
    s2 = 2 * sol.cost / dof
    try:
        cov = np.linalg.inv(J.T @ J) * s2
    except np.linalg.LinAlgError:
        cov = np.full((3, 3), np.inf)
    a, b, eps0 = (float(v) for v in sol.x)
    return XiFitResult(a, b, eps0, cov, float(np.sqrt(2 * sol.cost / len(y))), len(y))


# collapse score ------------------------------------------------------------------


def _bin_slices(x: np.ndarray, reverse: bool) -> list[np.ndarray]:
    """Equal-count bins over sorted ``x`` whose edges never split a run of equal ``x``.

    Each equal-count cut is moved to the nearest tie boundary, so repeated
    abscissae always share a bin and the tie-breaking order cannot matter.
    """
    n = len(x)
    n_bins = max(1, min(math.ceil(math.sqrt(n)), n // 2))
    order = np.arange(n)[::-1] if reverse else np.arange(n)
    xs = x[order]
    edges = np.flatnonzero(xs[1:] != xs[:-1]) + 1
    cuts = set()
    if len(edges):
        for c in np.linspace(0, n, n_bins + 1)[1:-1]:
            cuts.add(int(edges[np.argmin(np.abs(edges - c))]))
    return np.split(order, sorted(cuts))


LOCAL_DEGREE = 3


def _bin_residual_var(x: np.ndarray, y: np.ndarray) -> float:
    m = len(x)
    distinct = len(np.unique(x))
    deg = max(0, min(LOCAL_DEGREE, m - 2, distinct - 1))
    if deg == 0:
        return float(np.var(y))
    xs = (x - x.mean()) / (np.ptp(x) or 1.0)
    V = np.vander(xs, deg + 1)
    coef, *_ = np.linalg.lstsq(V, y, rcond=None)
    return float(np.var(y - V @ coef))


def collapse_score(points) -> float:
    """Binned-variance collapse score; 0 for a perfect collapse.

    Points ``(x, y)`` are sorted by ``x`` and split into
    ``min(ceil(sqrt(n)), n // 2)`` equal-count bins.  Bin edges are moved to
    the nearest change in ``x``, so points with equal ``x`` share a bin.
    Within each bin the local trend is removed with a polynomial in ``x`` of degree
    ``min(3, m - 2, distinct_x - 1)`` (``m`` points in the bin) and the residual
    variance is taken.  The score is the mean of these variances over the total
    variance of ``y``.  The partition is done from both ends of the sorted order
    and the two results averaged, so reversing ``x`` leaves the score unchanged.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] < 2:
        raise ValueError("collapse score needs at least two points")
    x, y = P[:, 0], P[:, 1]
    total = float(np.var(y))
    if total == 0:
        return 0.0
    order = np.lexsort((y, x))
    x, y = x[order], y[order]
    scores = []
    for rev in (False, True):
        vals = [_bin_residual_var(x[s], y[s]) for s in _bin_slices(x, rev)]
        scores.append(float(np.mean(vals)) / total)
    return 0.5 * (scores[0] + scores[1])


def grouped_collapse_score(points, groups) -> float:
    """Mean of `collapse_score` computed separately within each group label."""
    P = np.asarray(points, dtype=float)
    g = np.asarray(groups)
    vals = [collapse_score(P[g == lab]) for lab in np.unique(g) if np.sum(g == lab) >= 2]
    if not vals:
        raise ValueError("no group has two or more points")
    return float(np.mean(vals))


@dataclass
class CollapseResult:
    """Rescaled point cloud with columns ``x, y, N, chi, T`` and its score.

    ``baseline_score`` is the score of the same data on unrescaled axes.
    """

    points: np.ndarray
    score: float
    kappa: float | None = None
    delta: dict = field(default_factory=dict)
    baseline_score: float | None = None
    kind: str = ""

    @property
    def improvement(self) -> float:
        if self.baseline_score is None or self.score == 0:
            return math.inf
        return self.baseline_score / self.score

    def as_dict(self) -> dict:
        return {
            "kind": self.kind, "score": self.score, "baseline_score": self.baseline_score,
            "improvement": self.improvement, "kappa": self.kappa,
            "delta": {str(k): v for k, v in self.delta.items()}, "n_points": int(len(self.points)),
        }

    def write_csv(self, path) -> None:
        np.savetxt(path, self.points, delimiter=",", header="x,y,N,chi,T", comments="", fmt="%.12g")


def _delta_table(deltaO: Callable[[int], float], Ns) -> dict[int, float]:
    out = {}
    for N in sorted(set(int(n) for n in Ns)):
        d = float(deltaO(N))
        if not d > 0:
            raise ValueError(f"scaling dimension must be positive, got {d} for N={N}")
        out[N] = d
    return out


def collapse_ansatz_N(
    o_inf: Mapping[tuple[int, float], float],
    temps: CriticalTemps,
    deltaO: Callable[[int], float] = delta_magnetization,
) -> CollapseResult:
    """``x = |t| / (N Delta(N)^2)``, ``y = O_inf N^(-3 Delta(N) / 2)`` for ``t < 0`` data.

    The baseline score uses the raw ``(T, O_inf)`` axes.
    """
    rows = []
    for (N, T), o in o_inf.items():
        temps[N]  # raises naming N
        t = float(temps.reduced(N, T))
        if t < 0:
            rows.append((int(N), float(T), t, float(o)))
    if len(rows) < 2:
        raise InsufficientDataError("need at least two ordered-phase points")
    delta = _delta_table(deltaO, [r[0] for r in rows])
    pts = np.array([
        (abs(t) / (N * delta[N] ** 2), o * N ** (-1.5 * delta[N]), N, 0, T) for N, T, t, o in rows
    ])
    raw = np.array([(T, o) for _, T, _, o in rows])
    return CollapseResult(pts, collapse_score(pts[:, :2]), None, delta, collapse_score(raw), "ansatz-n")


def _records_array(records: Iterable[ObservableRecord], field: str) -> np.ndarray:
    rows = [(r.N, r.chi, r.T, getattr(r, field)) for r in records if r.converged and np.isfinite(getattr(r, field))]
    if not rows:
        raise InsufficientDataError("no usable records")
    return np.array(rows, dtype=float)


def collapse_kappa(
    records: Iterable[ObservableRecord],
    window: Mapping[int, tuple[float, float]] | None = None,
    kappa_range: tuple[float, float] = KAPPA_RANGE,
    n_grid: int = 51,
) -> tuple[float, CollapseResult]:
    """Find the ``kappa`` that best collapses ``xi / chi^kappa`` versus ``T``.

    ``window`` maps ``N`` to a ``(T_low, T_high)`` temperature window; records
    outside it are dropped.  A grid scan over ``kappa_range`` is refined with a
    bounded scalar minimization around the best grid point.
    """
    A = _records_array(records, "xi")
    if window is not None:
        keep = np.array([int(N) in window and window[int(N)][0] < T < window[int(N)][1] for N, _, T, _ in A])
        A = A[keep]
    if len(A) < 2:
        raise InsufficientDataError("critical window is empty")
    N, chi, T, xi = A.T

    def score(k):
        return collapse_score(np.column_stack([T, xi / chi**k]))

    grid = np.linspace(*kappa_range, n_grid)
    s = np.array([score(k) for k in grid])
    i = int(np.argmin(s))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    opt = minimize_scalar(score, bounds=(lo, hi), method="bounded", options={"xatol": 1e-7})
    kappa = float(opt.x) if opt.fun <= s[i] else float(grid[i])
    pts = np.column_stack([T, xi / chi**kappa, N, chi, T])
    baseline = collapse_score(np.column_stack([T, xi]))
    return kappa, CollapseResult(pts, score(kappa), kappa, {}, baseline, "kappa")


def collapse_crossover(
    records: Iterable[ObservableRecord],
    temps: CriticalTemps,
    deltaO: Callable[[int], float] = delta_magnetization,
    kappa: float = 1.247,
    xi0: Callable[[int], float] = xi0_default,
    field: str = "M",
    window: Mapping[int, tuple[float, float]] | None = None,
) -> CollapseResult:
    """``x = (t / N) log^2(chi^kappa / xi0(N))``, ``y = O^(-1/Delta(N)) / chi^kappa``.

    The baseline score uses the raw ``(T, O)`` axes.
    """
    A = _records_array(records, field)
    if window is not None:
        keep = np.array([int(N) in window and window[int(N)][0] <= T <= window[int(N)][1] for N, _, T, _ in A])
        A = A[keep]
    A = A[A[:, 3] > 0]
    if len(A) < 2:
        raise InsufficientDataError("need at least two records with a positive observable")
    delta = _delta_table(deltaO, A[:, 0])
    rows = []
    for N, chi, T, o in A:
        t = float(temps.reduced(int(N), T))
        ck = chi**kappa
        x = (t / N) * math.log(ck / xi0(int(N))) ** 2
        y = math.exp(-math.log(o) / delta[int(N)] - math.log(ck))
        rows.append((x, y, N, chi, T))
    pts = np.array(rows)
    return CollapseResult(pts, collapse_score(pts[:, :2]), kappa, delta, collapse_score(A[:, [2, 3]]), "crossover")


# T_L estimate ---------------------------------------------------------------------


def _linearization_rss(T: np.ndarray, logxi: np.ndarray, TL: float) -> float:
    u = 1.0 / np.sqrt(np.abs((T - TL) / TL))
    X = np.column_stack([np.ones_like(u), u])
    coef, *_ = np.linalg.lstsq(X, logxi, rcond=None)
    r = logxi - X @ coef
    return float(r @ r)


def estimate_T_L(
    xi_inf: Mapping[float, float] | Iterable[tuple[float, float]],
    T_max: float | None = None,
    n_grid: int = 200,
    tol: float = 1e-7,
) -> float:
    """Transition temperature that makes ``log xi`` linear in ``1/sqrt(|t|)``.

    ``xi_inf`` holds ordered-phase ``(T, xi)`` pairs of one ``N``.  Candidates
    run from just above the largest ``T`` up to ``T_max`` (default twice the
    largest ``T``); a grid scan of the residual sum of squares is refined by a
    bounded golden-section search.

    Raises
    ------
    NotBracketedError
        When the best grid candidate sits on an end of the scan, i.e. the data
        show no interior optimum (featureless or monotone input).
    """
    items = sorted(xi_inf.items() if isinstance(xi_inf, Mapping) else xi_inf)
    T = np.array([float(t) for t, _ in items])
    xi = np.array([float(v) for _, v in items])
    if len(T) < 4:
        raise InsufficientDataError("need at least four temperatures")
    if np.any(xi <= 0):
        raise ValueError("correlation lengths must be positive")
    logxi = np.log(xi)
    lo = T.max() * (1 + 1e-6)
    hi = T_max if T_max is not None else 2 * T.max()
    # log-spaced offsets resolve candidates close to the data
    grid = T.max() + (hi - T.max()) * np.geomspace(1e-5, 1, n_grid)
    grid = grid[grid > lo]
    rss = np.array([_linearization_rss(T, logxi, c) for c in grid])
    i = int(np.argmin(rss))
    if i == 0 or i == len(grid) - 1:
        raise NotBracketedError(
            f"no interior optimum for T_L in ({grid[0]:.6g}, {grid[-1]:.6g}); best at {grid[i]:.6g}"
        )
    opt = minimize_scalar(
        lambda c: _linearization_rss(T, logxi, c), bracket=None, bounds=(grid[i - 1], grid[i + 1]),
        method="bounded", options={"xatol": tol},
    )
    return float(opt.x)
