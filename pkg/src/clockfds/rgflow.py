"""Sine-Gordon RG flow near the low-temperature BKT point.

Couplings: ``u`` (cosine coupling) and ``d = 1 - beta_t^2 / 2``; in the length
variable ``l`` (couplings grow toward the infrared)

    du/dl = 2 d u,        dd/dl = 2 u^2

or, with ``z1 = u + d`` and ``z2 = u - d``,

    dz1/dl = z1 (z1 + z2) = z1^2 + C,     dz2/dl = -z2 (z1 + z2),

where ``C = z1 z2 = u^2 - d^2`` is conserved.  For ``C > 0`` the solution is
``z1(l) = sqrt(C) tan(sqrt(C) l + c1)`` and the flow reaches ``u = 1`` at ``l*``,
giving ``log xi = l*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SgFlowParams",
    "FlowTrajectory",
    "integrate_flow",
    "integrate_pair_flow",
    "analytic_z1",
    "c1_from_eps",
    "l_star",
    "l_star_asymptotic",
    "xi_prediction",
    "PoleProximityError",
]


class PoleProximityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SgFlowParams:
    """Initial couplings ``u0``, ``d0``; ``C = u0^2 - d0^2`` is derived.

    ``N`` and ``K`` are bookkeeping for the clock-model identification
    ``beta_sG^2 = 2 pi N^2 / K`` and are optional.
    """

    u0: float
    d0: float
    N: int | None = None
    K: float | None = None
    C: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "C", self.u0**2 - self.d0**2)

    @classmethod
    def from_luttinger(cls, u0: float, N: int, K: float) -> "SgFlowParams":
        """``d0 = 1 - beta_t^2 / 2`` with ``beta_t^2 = beta_sG^2 / 4 pi = N^2 / (2 K)``."""
        beta_t2 = N**2 / (2.0 * K)
        return cls(u0, 1.0 - beta_t2 / 2.0, N, K)

    @property
    def z1(self) -> float:
        return self.u0 + self.d0

    @property
    def z2(self) -> float:
        return self.u0 - self.d0

    def asymptotic_regime(self) -> bool:
        """True when ``1 >> u0 >> d0 > 0`` holds loosely (factor 10 separations)."""
        return 0 < self.d0 and 10 * self.d0 < self.u0 and 10 * self.u0 < 1


@dataclass
class FlowTrajectory:
    """Samples ``(l, z1, z2, u, d)`` as rows; ``terminated`` in
    {"reachedLMax", "uReachedOne", "diverged"}."""

    samples: np.ndarray
    terminated: str

    @property
    def l(self):
        return self.samples[:, 0]

    @property
    def z1(self):
        return self.samples[:, 1]

    @property
    def z2(self):
        return self.samples[:, 2]

    @property
    def u(self):
        return self.samples[:, 3]

    @property
    def d(self):
        return self.samples[:, 4]


def _rhs(z1: float, z2: float) -> tuple[float, float]:
    s = z1 + z2
    return z1 * s, -z2 * s


def integrate_flow(
    params: SgFlowParams, l_max: float, step: float, sample_every: int = 1
) -> FlowTrajectory:
    """Classical fixed-step RK4 integration of the ``(z1, z2)`` flow.

    Stops at ``l_max``, as soon as ``u >= 1``, or when the couplings blow up.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    z1, z2 = params.z1, params.z2
    l = 0.0
    rows = [(l, z1, z2, 0.5 * (z1 + z2), 0.5 * (z1 - z2))]
    n_steps = int(math.ceil(l_max / step - 1e-12))
    status = "reachedLMax"
    for i in range(1, n_steps + 1):
        h = min(step, l_max - l)
        k1 = _rhs(z1, z2)
        k2 = _rhs(z1 + 0.5 * h * k1[0], z2 + 0.5 * h * k1[1])
        k3 = _rhs(z1 + 0.5 * h * k2[0], z2 + 0.5 * h * k2[1])
        k4 = _rhs(z1 + h * k3[0], z2 + h * k3[1])
        z1 += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        z2 += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        l += h
        u = 0.5 * (z1 + z2)
        if not (math.isfinite(z1) and math.isfinite(z2)) or abs(z1) > 1e12:
            status = "diverged"
            break
        if i % sample_every == 0 or u >= 1.0 or i == n_steps:
            rows.append((l, z1, z2, u, 0.5 * (z1 - z2)))
        if u >= 1.0:
            status = "uReachedOne"
            break
    return FlowTrajectory(np.asarray(rows, dtype=float), status)


def integrate_pair_flow(u0: float, d0: float, l_max: float, step: float) -> np.ndarray:
    """RK4 integration of the original ``(beta_t^2, u)`` pair; rows ``(l, beta_t^2, u)``.

    ``d(beta_t^2)/dl = -4 u^2`` and ``du/dl = (2 - beta_t^2) u``.
    """
    if not step > 0:
        raise ValueError("step must be positive")

    def rhs(b2, u):
        return -4.0 * u * u, (2.0 - b2) * u

    b2, u = 2.0 * (1.0 - d0), u0
    l = 0.0
    rows = [(l, b2, u)]
    n_steps = int(math.ceil(l_max / step - 1e-12))
    for _ in range(n_steps):
        h = min(step, l_max - l)
        k1 = rhs(b2, u)
        k2 = rhs(b2 + 0.5 * h * k1[0], u + 0.5 * h * k1[1])
        k3 = rhs(b2 + 0.5 * h * k2[0], u + 0.5 * h * k2[1])
        k4 = rhs(b2 + h * k3[0], u + h * k3[1])
        b2 += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        u += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        l += h
        rows.append((l, b2, u))
    return np.asarray(rows)


def analytic_z1(l, C: float, c1: float):
    """``sqrt(C) tan(sqrt(C) l + c1)``; raises near a pole of the tangent."""
    if not C > 0:
        raise ValueError("analytic solution needs C > 0")
    arg = math.sqrt(C) * np.asarray(l, dtype=float) + c1
    if np.any(np.abs(np.cos(arg)) < 1e-12):
        raise PoleProximityError("tan solution evaluated at a pole")
    return math.sqrt(C) * np.tan(arg)


def c1_from_eps(C: float, eps: float, exact: bool = False) -> float:
    """Integration constant from ``u(0) = eps``.

    The default is the small-coupling form ``arctan(eps / sqrt(C))``;
    ``exact=True`` matches ``u(0) = eps`` exactly with ``z1(0) = eps + sqrt(eps^2 - C)``.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    if exact:
        if eps**2 < C:
            raise ValueError("u(0) = eps needs eps^2 >= C")
        return math.atan((eps + math.sqrt(eps**2 - C)) / math.sqrt(C))
    return math.atan(eps / math.sqrt(C))


def l_star(C: float, eps: float | None = None, exact_c1: bool = False) -> float:
    """Flow length at which ``u`` reaches 1.

    ``eps`` is ``u(0)``; by default ``eps = sqrt(C)`` (so ``c1 = pi/4``).
    """
    if not 0 < C < 1:
        raise ValueError(f"l* needs 0 < C < 1, got {C}")
    c1 = math.pi / 4 if eps is None else c1_from_eps(C, eps, exact=exact_c1)
    sC = math.sqrt(C)
    return (-c1 + math.atan((1 + math.sqrt(1 - C)) / sC)) / sC


def l_star_asymptotic(C: float) -> float:
    """``pi / (4 sqrt(C))``, the small-``C`` limit of `l_star`."""
    if not C > 0:
        raise ValueError("C must be positive")
    return math.pi / (4 * math.sqrt(C))


def xi_prediction(t, N, a: float = 1.5, b: float = 1.0, eps0: float = math.log(2)):
    """``log xi_inf`` of the ordered-phase scaling form for reduced temperature ``t < 0``.

    ``log xi = log eps0 - a log N + (pi/4) / sqrt(|t| / N^b)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t >= 0):
        raise ValueError("reduced temperature must be negative (ordered phase)")
    N = np.asarray(N, dtype=float)
    out = np.log(eps0) - a * np.log(N) + (math.pi / 4) / np.sqrt(np.abs(t) / N**b)
    return float(out) if out.ndim == 0 else out
