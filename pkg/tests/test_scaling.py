import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clockfds.observables import ObservableRecord
from clockfds.rgflow import xi_prediction
from clockfds.scaling import (
    MAX_REL_ERR,
    CriticalTemps,
    InsufficientDataError,
    NotBracketedError,
    collapse_ansatz_N,
    collapse_crossover,
    collapse_kappa,
    collapse_score,
    delta_magnetization,
    estimate_T_L,
    extrapolate_all,
    extrapolate_chi,
    fit_xi_scaling,
    grouped_collapse_score,
    xi0_default,
)

TEMPS = CriticalTemps({6: 0.69, 7: 0.53, 8: 0.426, 9: 0.347})


def rec(N, T, chi, xi=1.0, M=0.5, converged=True):
    return ObservableRecord(N=N, T=T, beta=1 / T, chi=chi, h=0.0, M=M, xi=xi, f=-2.0, converged=converged)


# chi extrapolation -------------------------------------------------------------


def test_exact_linear_model():
    res = extrapolate_chi([rec(6, 0.5, c, xi=3 + 5 / c) for c in (70, 96, 128)])
    assert res.value == pytest.approx(3.0, abs=1e-12)
    assert res.stderr < 1e-10
    assert res.used_chis == (70, 96, 128)
    assert res.accepted


def test_noisy_extrapolation_is_calibrated():
    rng = np.random.default_rng(2024)
    chis = np.array([70, 80, 96, 112, 128, 160, 192, 256])
    hits = 0
    for _ in range(100):
        y = (3 + 5 / chis) * (1 + 0.01 * rng.standard_normal(len(chis)))
        res = extrapolate_chi([rec(6, 0.5, int(c), xi=v) for c, v in zip(chis, y)])
        hits += abs(res.value - 3) < 3 * res.stderr
    assert hits >= 95


def test_extrapolation_filters():
    base = [rec(6, 0.5, c, xi=2 + 1 / c) for c in (70, 96, 128)]
    with pytest.raises(InsufficientDataError):
        extrapolate_chi(base[:2] + [rec(6, 0.5, 40)])
    with pytest.raises(InsufficientDataError):
        extrapolate_chi(base[:2] + [rec(6, 0.5, 128, converged=False)])
    with pytest.raises(ValueError):
        extrapolate_chi(base + [rec(7, 0.5, 70)])
    with pytest.raises(ValueError):
        extrapolate_chi(base, field="f")
    res = extrapolate_chi(base + [rec(6, 0.5, 40, xi=100.0)])
    assert 40 not in res.used_chis


def test_relative_error_filter_and_audit():
    good = [rec(6, 0.5, c, xi=2 + 1 / c) for c in (70, 96, 128)]
    noisy = [rec(6, 0.6, c, xi=v) for c, v in zip((70, 96, 128, 160), (10.0, 30.0, 5.0, 40.0))]
    sparse = [rec(7, 0.5, 70)]
    accepted, audit = extrapolate_all(good + noisy + sparse)
    assert list(accepted) == [(6, 0.5)]
    reasons = {(a["N"], a["T"]): a["reason"] for a in audit}
    assert reasons == {(6, 0.6): "rel_err", (7, 0.5): "insufficient"}
    assert all(r.rel_err <= MAX_REL_ERR for r in accepted.values())


# xi fit ------------------------------------------------------------------------


def synthetic_xi(params=(1.5, 1.0, math.log(2)), ts=(-0.3, -0.25, -0.2, -0.15, -0.12, -0.1)):
    out = {}
    for N in (6, 7, 8, 9):
        for t in ts:
            T = TEMPS[N] * (1 + t)
            out[(N, T)] = math.exp(float(xi_prediction(t, N, *params)))
    return out


def test_fit_round_trip():
    fit = fit_xi_scaling(synthetic_xi(), TEMPS)
    assert fit.a == pytest.approx(1.5, abs=1e-6)
    assert fit.b == pytest.approx(1.0, abs=1e-6)
    assert fit.eps0 == pytest.approx(math.log(2), abs=1e-6)
    assert fit.n_points == 24
    d = fit.as_dict()
    assert len(d["stderr"]) == 3


def test_fit_round_trip_other_parameters():
    fit = fit_xi_scaling(synthetic_xi((1.2, 0.8, 0.4)), TEMPS)
    np.testing.assert_allclose([fit.a, fit.b, fit.eps0], [1.2, 0.8, 0.4], atol=1e-6)


def test_fit_needs_two_N():
    data = {k: v for k, v in synthetic_xi().items() if k[0] == 6}
    with pytest.raises(InsufficientDataError):
        fit_xi_scaling(data, TEMPS)


def test_fit_ignores_disordered_side():
    data = synthetic_xi()
    data[(6, 0.8)] = 1e6
    fit = fit_xi_scaling(data, TEMPS)
    assert fit.n_points == 24


def test_critical_temps():
    with pytest.raises(ValueError):
        CriticalTemps({6: 0.0})
    with pytest.raises(KeyError):
        TEMPS[5]
    assert TEMPS.reduced(6, 0.69 * 0.9) == pytest.approx(-0.1)


# collapse score ----------------------------------------------------------------


def test_dense_single_curve():
    x = np.linspace(0, 3, 400)
    assert collapse_score(np.column_stack([x, np.exp(-x)])) < 1e-10


def test_two_points_single_bin():
    assert collapse_score([[0.0, 1.0], [1.0, 3.0]]) == pytest.approx(1.0)


def test_two_parallel_curves():
    x = np.linspace(0, 1, 1000)
    dy = 0.3
    pts = np.vstack([np.column_stack([x, x]), np.column_stack([x, x + dy])])
    expected = (dy / 2) ** 2 / np.var(pts[:, 1])
    assert collapse_score(pts) == pytest.approx(expected, rel=0.01)


@given(st.floats(0.1, 10.0), st.floats(-5.0, 5.0))
def test_score_invariant_under_affine_y(scale, offset):
    rng = np.random.default_rng(0)
    pts = rng.random((60, 2))
    moved = pts.copy()
    moved[:, 1] = scale * pts[:, 1] + offset
    assert collapse_score(moved) == pytest.approx(collapse_score(pts), rel=1e-9, abs=1e-12)


def test_score_invariant_under_x_reversal():
    rng = np.random.default_rng(5)
    pts = rng.random((37, 2))
    flipped = pts * [-1, 1]
    assert collapse_score(flipped) == pytest.approx(collapse_score(pts), rel=1e-12)


def test_tied_abscissae_share_a_bin():
    rng = np.random.default_rng(3)
    x = np.repeat([0.0, 1.0, 2.0], 20)
    y = x + rng.standard_normal(60)
    within = np.mean([np.var(y[x == v]) for v in (0.0, 1.0, 2.0)])
    assert collapse_score(np.column_stack([x, y])) == pytest.approx(within / np.var(y), rel=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_score_ignores_order_within_ties(seed):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 5, 40).astype(float)
    pts = np.column_stack([x, rng.standard_normal(40)])
    assert collapse_score(pts[rng.permutation(40)]) == pytest.approx(collapse_score(pts), rel=1e-12)


def test_score_rejects_tiny_input():
    with pytest.raises(ValueError):
        collapse_score([[1.0, 2.0]])


def test_grouped_score():
    x = np.linspace(0, 1, 50)
    pts = np.vstack([np.column_stack([x, x**2]), np.column_stack([x, x**2 + 0.5])])
    groups = np.repeat([6, 7], 50)
    assert grouped_collapse_score(pts, groups) < 1e-10
    assert collapse_score(pts) > 0.01
    with pytest.raises(ValueError):
        grouped_collapse_score(pts[:1], groups[:1])


# ansatz-N collapse -------------------------------------------------------------


def test_ansatz_n_collapse_of_synthetic_data():
    o_inf = {}
    for N in (6, 7, 8, 9):
        d = delta_magnetization(N)
        for t in np.linspace(-0.3, -0.05, 8):
            T = TEMPS[N] * (1 + t)
            o_inf[(N, T)] = N ** (1.5 * d) * math.exp(-abs(t) / (N * d * d))
    res = collapse_ansatz_N(o_inf, TEMPS)
    np.testing.assert_allclose(res.points[:, 1], np.exp(-res.points[:, 0]), rtol=1e-12)
    assert res.improvement >= 5
    assert res.delta[6] == pytest.approx(2 / 36)


def test_ansatz_n_with_constant_delta_is_pure_x_rescaling():
    o_inf = {}
    for N in (6, 8):
        for t in np.linspace(-0.4, -0.01, 40):
            o_inf[(N, TEMPS[N] * (1 + t))] = N**1.5 * math.exp(-abs(t) / N)
    res = collapse_ansatz_N(o_inf, TEMPS, deltaO=lambda N: 1.0)
    np.testing.assert_allclose(res.points[:, 1], np.exp(-res.points[:, 0]), rtol=1e-12)
    assert res.score < 1e-12


def test_ansatz_n_single_N_equals_baseline_ordering():
    o_inf = {(6, TEMPS[6] * (1 + t)): 1 - abs(t) for t in np.linspace(-0.3, -0.05, 9)}
    res = collapse_ansatz_N(o_inf, TEMPS)
    assert res.score == pytest.approx(res.baseline_score, rel=1e-9)


def test_ansatz_n_requires_data():
    with pytest.raises(InsufficientDataError):
        collapse_ansatz_N({(6, 0.8): 0.5}, TEMPS)
    with pytest.raises(ValueError):
        collapse_ansatz_N({(6, 0.5): 0.5, (6, 0.55): 0.4}, TEMPS, deltaO=lambda N: 0.0)


# kappa collapse ----------------------------------------------------------------


def kappa_records(kappa=1.247):
    out = []
    for N in (6, 7, 8, 9):
        for T in (0.76, 0.8, 0.84):
            A = 0.5 + 2 * (T - 0.75)
            for chi in (40, 56, 70, 96, 128):
                out.append(rec(N, T, chi, xi=A * chi**kappa))
    return out


def test_kappa_round_trip():
    kappa, res = collapse_kappa(kappa_records())
    assert kappa == pytest.approx(1.247, abs=1e-3)
    assert res.score < 1e-10
    assert res.improvement > 100


def test_kappa_window_and_range():
    recs = kappa_records() + [rec(6, 0.6, 70, xi=1e5)]
    window = {N: (0.75, 0.9) for N in (6, 7, 8, 9)}
    kappa, res = collapse_kappa(recs, window=window)
    assert kappa == pytest.approx(1.247, abs=1e-3)
    assert len(res.points) == 60
    with pytest.raises(InsufficientDataError):
        collapse_kappa(recs, window={6: (2.0, 3.0)})


# crossover collapse ------------------------------------------------------------


def crossover_records(g=lambda x: 1 + x * x, kappa=1.247):
    out = []
    for N in (6, 7, 8, 9):
        d = delta_magnetization(N)
        for t in (-0.05, -0.02, 0.01, 0.04):
            T = TEMPS[N] * (1 + t)
            for chi in (40, 56, 70):
                ck = chi**kappa
                x = (t / N) * math.log(ck / xi0_default(N)) ** 2
                out.append(rec(N, T, chi, M=(ck * g(x)) ** (-d)))
    return out


def test_crossover_collapse_of_synthetic_data():
    res = collapse_crossover(crossover_records(), TEMPS)
    assert res.score < 1e-12
    assert res.baseline_score > 0.01
    pts = res.points
    np.testing.assert_allclose(pts[:, 1], 1 + pts[:, 0] ** 2, rtol=1e-9)


def test_crossover_with_constant_delta_and_xi0():
    # Delta and xi0 independent of N: y = (chi^kappa)^-1 O^(-1/Delta) reproduces g
    g = lambda x: 2.0 + np.tanh(x)
    recs = []
    for chi in (40, 60, 90):
        for t in (-0.05, 0.0, 0.05):
            T = TEMPS[6] * (1 + t)
            x = (t / 6) * math.log(chi**1.247 / 0.1) ** 2
            recs.append(rec(6, T, chi, M=(chi**1.247 * g(x)) ** -0.5))
    res = collapse_crossover(recs, TEMPS, deltaO=lambda N: 0.5, xi0=lambda N: 0.1)
    np.testing.assert_allclose(res.points[:, 1], g(res.points[:, 0]), rtol=1e-10)


def test_crossover_window_drops_points():
    recs = crossover_records()
    window = {6: (0.0, 10.0)}
    res = collapse_crossover(recs, TEMPS, window=window)
    assert set(res.points[:, 2]) == {6.0}


def test_collapse_result_serialization(tmp_path):
    res = collapse_crossover(crossover_records(), TEMPS)
    d = res.as_dict()
    assert d["kind"] == "crossover" and d["n_points"] == 48
    path = tmp_path / "pts.csv"
    res.write_csv(path)
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_allclose(back, res.points, rtol=1e-11)


# T_L estimate ------------------------------------------------------------------


def test_estimate_T_L_round_trip():
    TL, N = 0.9, 6
    T = TL * (1 + np.linspace(-0.3, -0.05, 10))
    xi = {float(x): math.exp(float(xi_prediction((x - TL) / TL, N))) for x in T}
    assert estimate_T_L(xi) == pytest.approx(TL, abs=1e-3)


def test_estimate_T_L_rejects_featureless_input():
    T = np.linspace(0.4, 0.6, 8)
    with pytest.raises(NotBracketedError):
        estimate_T_L({float(t): float(1 + t) for t in T})
    with pytest.raises(InsufficientDataError):
        estimate_T_L({0.4: 1.0, 0.5: 2.0})
