"""Acceptance suite: one test per quantitative criterion, each printing a
single PASS/FAIL line with the measured numbers.

Every run is seeded, so verdicts are reproducible bit for bit.  The scaled-QV
band check at H = 0.9 is known to sit far outside its required pass rate at
k = 14 (the estimator variance decays like n^{4H-4}; see notes in the repo
root's decision ledger) and is expected to fail; it is asserted at the stated
tolerance anyway rather than weakened.
"""

from __future__ import annotations

import numpy as np
import pytest

from fracvort.fbm import fbm_covariance, generate_ensemble, generate_path
from fracvort.grids import DyadicGrid
from fracvort.hurst import (
    estimate_from_solver,
    hurst_estimate,
    prop15_monte_carlo,
    scaled_qv_limit_check,
    scaled_quadratic_variation,
)
from fracvort.solver import ModelConfig, picard_window, solve, weak_residual
from fracvort.spectral import (
    FourierField,
    coeff_norm,
    heat_semigroup,
    sobolev_norm,
    transport,
)
from fracvort.young import IntegrandTrace, dyadic_sum, one_step_remainder_rate


def verdict(tag: str, ok: bool, detail: str) -> None:
    print(f"criterion {tag}: {'PASS' if ok else 'FAIL'} — {detail}")
    assert ok, f"criterion {tag}: {detail}"


def zero_xi(n):
    return FourierField.zero(n), FourierField.zero(n)


def sin_x2(n):
    return FourierField.from_function(lambda x, y: np.sin(y), n)


# -- 1: fBm law ---------------------------------------------------------------


@pytest.mark.parametrize("H", [0.55, 0.6, 0.75, 0.9])
def test_criterion_1_fbm_covariance(H):
    n_paths = 10_000
    ens = generate_ensemble(H, DyadicGrid(10), 0, n_paths)
    idx = [205, 410, 614, 819, 1024]  # approx t = 0.2 .. 1.0
    times = np.array(idx) / 1024.0
    worst = 0.0
    for a, s in zip(idx, times):
        for b, t in zip(idx, times):
            emp = float(np.mean(ens[:, a] * ens[:, b]))
            ref = fbm_covariance(s, t, H)
            se = np.sqrt(
                (fbm_covariance(s, s, H) * fbm_covariance(t, t, H) + ref**2) / n_paths
            )
            worst = max(worst, abs(emp - ref) / se)
    verdict(f"1 (H={H})", worst <= 4.0, f"max covariance deviation {worst:.2f} SE (<= 4)")


# -- 2: Monte Carlo MSE bound -------------------------------------------------


@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
def test_criterion_2_mse_slope(H):
    out = prop15_monte_carlo(H, [2**k for k in range(6, 13)], ensemble_size=2000)
    floor = min(1.0, 4.0 - 4.0 * H) - 0.2
    verdict(
        f"2 (H={H})",
        out["slope"] >= floor,
        f"MSE decay slope {out['slope']:.3f} >= {floor:.2f}",
    )


# -- 3: scaled QV band --------------------------------------------------------


@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
def test_criterion_3_scaled_qv_band(H):
    hits = 0
    for seed in range(50):
        p = generate_path(H, DyadicGrid(14), seed)
        v = scaled_quadratic_variation(p, 14, H)
        hits += abs(v - 1.0) <= 0.1
    rate = hits / 50.0
    verdict(f"3 (H={H})", rate >= 0.9, f"pass rate {rate:.2f} over 50 seeds (>= 0.90)")


# -- 4: Young convolution Cauchy rate ----------------------------------------


def _transport_trace(n, level, horizon=1.0):
    xi = (FourierField.from_function(lambda x, y: np.cos(y), n), FourierField.zero(n))
    w0 = FourierField.from_function(lambda x, y: np.sin(x) + np.cos(y), n)
    grid = DyadicGrid(level, horizon)
    fields = [transport(xi, heat_semigroup(w0, t)) for t in grid.times]
    return IntegrandTrace.from_fields(grid, fields, alpha_base=1.25, gamma=0.7), grid


def test_criterion_4_cauchy_rate():
    trace, grid = _transport_trace(32, 12)
    W = generate_path(0.75, grid, 0)
    gaps = []
    prev = None
    for k in range(6, 13):
        cur = dyadic_sum(trace, W, 1.0, k)
        if prev is not None:
            gaps.append(coeff_norm(cur - prev, 1.25))
        prev = cur
    slope = -float(np.polyfit(np.arange(7, 13, dtype=float), np.log2(gaps), 1)[0])
    verdict("4", slope >= 0.7 - 0.5 - 0.1, f"Cauchy gap slope {slope:.3f} >= 0.10")


# -- 5: one-step remainder rate ----------------------------------------------


def test_criterion_5_remainder_rate():
    # sharp configuration: borderline spatial spectrum (log-divergent just
    # above B_{alpha-1/2}) times a temporal factor of Holder exponent ~gamma;
    # smooth integrands over-perform the stated rate by a full order
    alpha, gamma, H = 1.25, 0.7, 0.75
    n, level = 32, 12
    rng = np.random.default_rng(0)
    k = np.fft.fftfreq(n, 1.0 / n) * n
    kk = k[:, None] ** 2 + k[None, :] ** 2
    amp = (1.0 + kk) ** (-(alpha - 0.5)) / (1.0 + np.sqrt(kk))
    g = amp * np.exp(2j * np.pi * rng.random((n, n)))
    idx = (-np.arange(n)) % n
    profile = 0.5 * (g + np.conj(g[idx][:, idx]))
    profile[0, 0] = 0.0

    grid = DyadicGrid(level, 1.0)
    ks = list(range(3, 9))
    pooled = np.zeros(len(ks))
    for seed in range(8):
        Z = generate_path(gamma + 0.005, grid, 100 + seed)
        fields = [FourierField(profile * (1.0 + 0.5 * z)) for z in Z.values]
        Y = IntegrandTrace.from_fields(grid, fields, alpha_base=alpha, gamma=gamma)
        W = generate_path(H, grid, 200 + seed)
        out = one_step_remainder_rate(Y, W, ks)
        pooled += np.array([r["rms_error"] for r in out["rows"]]) ** 2
    slope = float(
        np.polyfit([-k for k in ks], 0.5 * np.log2(pooled / 8.0), 1)[0]
    )
    target = 2 * gamma - 0.5
    verdict(
        "5",
        abs(slope - target) <= 0.15,
        f"one-step error slope {slope:.3f} within 0.15 of {target:.2f}",
    )


# -- 6: Picard contraction ---------------------------------------------------


def test_criterion_6_contraction():
    config = ModelConfig()  # N=64, H=0.75, T=0.5, level 8
    W = generate_path(0.75, config.grid, 1)
    state = solve(config, W, mode="picard", store_fields=False)
    factors = [d["contraction_factor"] for d in state.diagnostics]
    all_contracting = all(0.0 <= f < 1.0 for f in factors)
    _, full = picard_window(config, W, (0, 32), config.omega0)
    _, half = picard_window(config, W, (0, 16), config.omega0)
    shrinks = half["contraction_factor"] < full["contraction_factor"]
    verdict(
        "6",
        all_contracting and shrinks,
        f"window factors {[round(f, 3) for f in factors]}; "
        f"halving {full['contraction_factor']:.3f} -> {half['contraction_factor']:.3f}",
    )


# -- 7: weak/mild equivalence ------------------------------------------------


def test_criterion_7_weak_residual():
    config = ModelConfig(grid_n=64, level=10, xi=zero_xi(64))
    W0_grid = DyadicGrid(10, 0.5)
    from fracvort.fbm import FbmPath, HurstParam

    W0 = FbmPath(HurstParam(0.75), W0_grid, np.zeros(W0_grid.n_steps + 1), 0)
    det = weak_residual(solve(config, W0, mode="stepper", store_fields=False), (1, 0))

    W = generate_path(0.75, DyadicGrid(9, 0.5), 3)
    rs = []
    for level in (6, 7, 8, 9):
        c = ModelConfig(grid_n=32, level=level)
        rs.append(weak_residual(solve(c, W, mode="stepper", store_fields=False), (1, 0)))
    slope = -float(np.polyfit(np.arange(6, 10, dtype=float), np.log2(rs), 1)[0])
    verdict(
        "7",
        det <= 1e-3 and slope >= 0.4,
        f"deterministic residual {det:.2e} <= 1e-3; stochastic decay slope {slope:.3f} >= 0.4",
    )


# -- 8: drift negligibility ---------------------------------------------------


@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
def test_criterion_8_drift_negligibility(H):
    g = DyadicGrid(14)

    class Series:
        times = g.times
        values = np.sin(g.times)  # pure smooth drift
        noise_channel = np.zeros(g.n_steps + 1)

    out = scaled_qv_limit_check(Series(), H, 12)
    assert out["inconclusive"]
    target = 2.0 - 2.0 * H
    verdict(
        f"8 (H={H})",
        abs(out["decay_slope"] - target) <= 0.2,
        f"drift-only scaled-QV decay slope {out['decay_slope']:.3f} within 0.2 of {target:.2f}",
    )


# -- 9: estimator consistency -------------------------------------------------


@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
def test_criterion_9a_raw_fbm(H):
    errs = [
        abs(hurst_estimate(generate_path(H, DyadicGrid(15), seed), 14).final_h - H)
        for seed in range(20)
    ]
    med = float(np.median(errs))
    verdict(f"9a (H={H})", med <= 0.05, f"median |H_14 - H| = {med:.4f} over 20 seeds (<= 0.05)")


@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
def test_criterion_9b_spde_observable(H):
    gamma = 0.55 if H < 0.7 else 0.7
    errs = []
    for seed in range(10):
        config = ModelConfig(grid_n=64, hurst=H, gamma=gamma, level=15)
        W = generate_path(H, config.grid, seed)
        state = solve(config, W, mode="stepper", store_fields=False, observe=((1, 0),))
        est = estimate_from_solver(state, (1, 0), 14)
        errs.append(abs(est.real.final_h - H))
    med = float(np.median(errs))
    verdict(f"9b (H={H})", med <= 0.07, f"median |H_14 - H| = {med:.4f} over 10 seeds (<= 0.07)")


# -- 10: exact single-mode solution -------------------------------------------


@pytest.mark.parametrize("mode", ["picard", "stepper"])
def test_criterion_10_exact_solution(mode):
    from fracvort.fbm import FbmPath, HurstParam

    config = ModelConfig(grid_n=64, level=8, xi=zero_xi(64), omega0=sin_x2(64))
    W0 = FbmPath(HurstParam(0.75), config.grid, np.zeros(config.grid.n_steps + 1), 0)
    state = solve(config, W0, mode=mode)
    err = max(
        sobolev_norm(
            FourierField(f.coeffs - heat_semigroup(config.omega0, t).coeffs), 0.0
        )
        for t, f in zip(config.grid.times, state.omegas)
    )
    verdict(f"10 ({mode})", err <= 1e-8, f"max L2 error vs e^-t sin(x2): {err:.2e} (<= 1e-8)")


# -- 11: Picard/stepper cross-validation --------------------------------------


def test_criterion_11_cross_mode_slope():
    W = generate_path(0.75, DyadicGrid(9, 0.5), 13)
    gaps = []
    levels = (6, 7, 8, 9)
    for level in levels:
        c = ModelConfig(grid_n=32, level=level)
        a = solve(c, W, mode="picard", store_fields=True)
        b = solve(c, W, mode="stepper", store_fields=True)
        gaps.append(coeff_norm(a.omegas[-1].coeffs - b.omegas[-1].coeffs, c.alpha))
    slope = -float(np.polyfit(np.array(levels, dtype=float), np.log2(gaps), 1)[0])
    floor = min(2 * 0.7 - 0.5, 1.0) - 0.15
    verdict("11", slope >= floor, f"cross-mode gap slope {slope:.3f} >= {floor:.2f}")
