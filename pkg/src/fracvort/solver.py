"""Mild-solution solver for the vorticity equation with transport fBm noise.

Two first-class modes:
  * picard  — fixed-point iteration of the variation-of-constants map on
    adaptive local windows (faithful to the existence argument);
  * stepper — one-step exponential Euler,
        w_{t+dt} = S_dt(w_t - dt * u.grad(w) - dW * xi.grad(w)),
    the production mode for the long trajectories the estimator consumes.

The nonlinear machinery is hook-based: the built-in vorticity operators
(u.grad w with u from Biot-Savart, xi.grad w) are just the default hooks, so
the generic-operator entry point reuses the same code path bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fbm import FbmPath, HurstParam, _hurst_value
from .grids import DyadicGrid
from .spectral import (
    FourierField,
    TWO_PI,
    _dealias_mask,
    _ksq,
    _wavenumbers,
    check_divergence_free,
    coeff_norm,
)

__all__ = [
    "ModelConfig",
    "OperatorSpec",
    "SolverState",
    "ObservableSeries",
    "SolverError",
    "BlowupError",
    "ContractionFailure",
    "shear_flow",
    "preset_vorticity",
    "vorticity_rhs",
    "make_rhs",
    "picard_window",
    "solve",
    "generic_operator_solve",
    "weak_residual",
    "extract_observable",
    "discrete_v_norm",
]


class SolverError(RuntimeError):
    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class BlowupError(SolverError):
    pass


class ContractionFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def shear_flow(n: int) -> tuple[FourierField, FourierField]:
    """Default transport field xi = (cos(x2), 0): divergence-free, smooth,
    and with a nonzero transport channel for generic test modes."""
    xi1 = FourierField.from_function(lambda x, y: np.cos(y), n)
    return xi1, FourierField.zero(n)


def preset_vorticity(name: str, n: int, seed: int = 0) -> FourierField:
    """Named mean-zero initial vorticity fields."""
    if name == "sin_x2":
        return FourierField.from_function(lambda x, y: np.sin(y), n)
    if name == "sin_x1":
        return FourierField.from_function(lambda x, y: np.sin(x), n)
    if name == "two_mode":
        return FourierField.from_function(lambda x, y: np.sin(x) + np.cos(y), n)
    if name == "taylor_green":
        return FourierField.from_function(lambda x, y: 2.0 * np.cos(x) * np.cos(y), n)
    if name == "random_smooth":
        rng = np.random.Generator(np.random.Philox(key=seed))
        k = _wavenumbers(n)
        kk = np.sqrt(k[:, None] ** 2 + k[None, :] ** 2)
        amp = np.exp(-1.5 * kk)
        phys = rng.standard_normal((n, n))
        f = FourierField(np.fft.fft2(phys) / (n * n) * amp)
        return f.mean_zeroed()
    raise ValueError(f"unknown vorticity preset {name!r}")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OperatorSpec:
    """Declared exponents of a drift/diffusion operator pair.

    beta: spatial order lost by the drift; q, p: polynomial growth/Lipschitz
    exponents; theta: order lost by the diffusion coefficient.
    """

    beta: float = 1.0 - 1e-9
    q: float = 2.0
    p: float = 1.0
    theta: float = 0.5

    def validate(self, alpha: float, gamma: float) -> None:
        if not (0.0 <= self.beta < 1.0):
            raise ValueError(f"drift order beta must lie in [0, 1), got {self.beta}")
        if self.theta < 0 or self.theta + gamma >= alpha:
            raise ValueError(
                f"diffusion order theta={self.theta} violates theta + gamma < alpha"
            )
        if min(self.q, self.p) < 0:
            raise ValueError("growth exponents must be nonnegative")


@dataclass
class ModelConfig:
    grid_n: int = 64
    alpha: float = 1.25
    hurst: float = 0.75
    gamma: float = 0.7
    xi: tuple[FourierField, FourierField] | None = None
    omega0: FourierField | None = None
    horizon: float = 0.5
    level: int = 8
    tol: float = 1e-8
    max_iter: int = 30
    window_init_div: int = 8       # first window is horizon / this
    window_floor_div: int = 1024   # hard floor horizon / this
    norm_ceiling: float = 1e6

    def __post_init__(self):
        h = _hurst_value(self.hurst)
        HurstParam(h)
        if not (0.5 < self.gamma < h):
            raise ValueError(
                f"need 1/2 < gamma < H, got gamma={self.gamma}, H={h}"
            )
        if self.alpha <= 1.0:
            raise ValueError("alpha > 1 required (2*alpha > d/2 + 1 on T^2)")
        if self.xi is None:
            self.xi = shear_flow(self.grid_n)
        if self.omega0 is None:
            self.omega0 = preset_vorticity("two_mode", self.grid_n)
        check_divergence_free(self.xi, tol=1e-8)
        if abs(self.omega0.mean_mode()) > 1e-10:
            raise ValueError("initial vorticity must be mean-zero")
        for f in (*self.xi, self.omega0):
            if f.n != self.grid_n:
                raise ValueError("field grid size differs from grid_n")

    @property
    def grid(self) -> DyadicGrid:
        return DyadicGrid(self.level, self.horizon)

    @property
    def hurst_param(self) -> HurstParam:
        return HurstParam(_hurst_value(self.hurst))


# ---------------------------------------------------------------------------
# right-hand-side hooks
# ---------------------------------------------------------------------------


def vorticity_rhs(config: ModelConfig):
    """Built-in hooks: drift u.grad(w) with u = curl^{-1} w, noise xi.grad(w).

    Matches advect/transport value for value, but shares the two gradient
    transforms of w between the drift and noise products and caches the
    physical samples of the fixed transport field, cutting the FFT count per
    evaluation from ten to six.
    """
    xi1, xi2 = config.xi
    n = config.grid_n
    mask = _dealias_mask(n)
    k = _wavenumbers(n)
    ksq = _ksq(n)
    ksq_safe = ksq.copy()
    ksq_safe[0, 0] = 1.0
    xi1p = np.fft.ifft2(mask * xi1.coeffs).real * n * n
    xi2p = np.fft.ifft2(mask * xi2.coeffs).real * n * n
    xi_active = np.any(xi1p) or np.any(xi2p)

    def rhs(omega: FourierField) -> tuple[FourierField, FourierField]:
        c = omega.coeffs
        wx = np.fft.ifft2(mask * 1j * k[:, None] * c).real * n * n
        wy = np.fft.ifft2(mask * 1j * k[None, :] * c).real * n * n
        psi = -c / ksq_safe
        psi[0, 0] = 0.0
        u1p = np.fft.ifft2(mask * (-1j) * k[None, :] * psi).real * n * n
        u2p = np.fft.ifft2(mask * 1j * k[:, None] * psi).real * n * n
        drift = FourierField(mask * (np.fft.fft2(u1p * wx + u2p * wy) / (n * n)))
        if xi_active:
            noise = FourierField(mask * (np.fft.fft2(xi1p * wx + xi2p * wy) / (n * n)))
        else:
            noise = FourierField.zero(n)
        return drift, noise

    return rhs


def make_rhs(drift_hook, diffusion_hook):
    """Combine separate operator hooks into the solver's rhs protocol."""

    def rhs(omega: FourierField) -> tuple[FourierField, FourierField]:
        return drift_hook(omega), diffusion_hook(omega)

    return rhs


# ---------------------------------------------------------------------------
# state containers
# ---------------------------------------------------------------------------


@dataclass
class ObservableSeries:
    """Scalar channels of the solution paired against phi = e^{ik.x}.

    values:        X_t = <w_t, phi>
    drift_channel: a_t = <w_t, u_t.grad(phi) + Lap(phi)>
    noise_channel: x_t = <w_t, xi.grad(phi)>
    all complex, sampled on the solver grid.
    """

    mode: tuple[int, int]
    times: np.ndarray
    values: np.ndarray
    drift_channel: np.ndarray
    noise_channel: np.ndarray

    @property
    def level(self) -> int:
        return int(round(np.log2(len(self.values) - 1)))

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


@dataclass
class SolverState:
    config: ModelConfig
    grid: DyadicGrid
    driver: FbmPath
    mode: str
    omegas: list[FourierField] | None
    field_stride: int
    observables: dict[tuple[int, int], ObservableSeries]
    diagnostics: list = field(default_factory=list)
    completed: bool = True
    failure: str | None = None

    def field_at(self, j: int) -> FourierField:
        if self.omegas is None:
            raise ValueError("trajectory fields were not stored")
        if j % self.field_stride:
            raise ValueError(f"index {j} not on the stored stride {self.field_stride}")
        return self.omegas[j // self.field_stride]


# ---------------------------------------------------------------------------
# discrete norms
# ---------------------------------------------------------------------------


def discrete_v_norm(coeff_list, times, alpha: float, gamma: float) -> float:
    """max(sup-norm in B_alpha, Holder seminorm in B_{alpha-gamma}) over the
    grid; all pairs for short windows, power-of-two lags for long ones."""
    sup = max(coeff_norm(c, alpha) for c in coeff_list)
    m = len(coeff_list) - 1
    hold = 0.0
    if m >= 1:
        lags = range(1, m + 1) if m <= 64 else _dyadic_lags(m)
        for h in lags:
            for j in range(m + 1 - h):
                d = coeff_norm(coeff_list[j + h] - coeff_list[j], alpha - gamma)
                dt = times[j + h] - times[j]
                hold = max(hold, d / dt**gamma)
    return max(sup, hold)


def _dyadic_lags(m: int):
    h = 1
    while h <= m:
        yield h
        h *= 2


# ---------------------------------------------------------------------------
# Picard fixed point on a window
# ---------------------------------------------------------------------------


def _lambda_map(coeffs, init, decay, dt, dws, rhs) -> list:
    """One application of the variation-of-constants map on the window grid.

    coeffs: current iterate's coefficient arrays at the window grid points;
    init: coefficient array at the left endpoint.  Returns the new list.

    The drift integral uses the trapezoid rule on each subinterval; the noise
    integral is the left-point Young sum (the only choice the pathwise theory
    licenses).  Both are pushed forward by the exact semigroup.
    """
    m = len(coeffs) - 1
    drifts, noises = [], []
    for j in range(m + 1):
        d, s = rhs(FourierField(coeffs[j]))
        drifts.append(d.coeffs)
        noises.append(s.coeffs)
    out = [init.copy()]
    head = init
    conv = np.zeros_like(init)
    for j in range(m):
        head = decay * head
        conv = decay * (
            conv + 0.5 * dt * (drifts[j] + drifts[j + 1]) + dws[j] * noises[j]
        )
        out.append(head - conv)
    return out


def picard_window(
    config: ModelConfig,
    W: FbmPath,
    window: tuple[int, int],
    omega_init: FourierField,
    *,
    rhs=None,
    tol: float | None = None,
    max_iter: int | None = None,
):
    """Iterate the mild map on global grid indices [j0, j1] until the
    V-norm distance of successive iterates drops below tol.

    Raises ContractionFailure if the empirical factor stays >= 1 after three
    iterations (the caller halves the window), SolverError past max_iter.
    Returns (trajectory fields at window grid points, diagnostics dict).
    """
    rhs = rhs or vorticity_rhs(config)
    tol = config.tol if tol is None else tol
    max_iter = config.max_iter if max_iter is None else max_iter
    grid = config.grid
    j0, j1 = window
    m = j1 - j0
    if m < 1:
        raise ValueError("empty window")
    dt = grid.mesh
    times = grid.times[j0 : j1 + 1]
    stride = 1 << (W.grid.level - config.level)
    dws = np.diff(W.values[j0 * stride : j1 * stride + 1 : stride])
    decay = np.exp(-dt * _ksq(config.grid_n))
    init = omega_init.coeffs

    # center-of-ball start: pure heat flow from the window's initial state
    cur = [init.copy()]
    for j in range(m):
        cur.append(decay * cur[-1])

    dists = []
    for it in range(1, max_iter + 1):
        nxt = _lambda_map(cur, init, decay, dt, dws, rhs)
        dist = discrete_v_norm(
            [a - b for a, b in zip(nxt, cur)], times, config.alpha, config.gamma
        )
        dists.append(dist)
        sup_alpha = max(coeff_norm(c, config.alpha) for c in nxt)
        if not np.isfinite(sup_alpha) or sup_alpha > config.norm_ceiling:
            raise BlowupError(
                f"norm ceiling exceeded on window {window}: {sup_alpha:.3e}"
            )
        cur = nxt
        if dist < tol:
            break
        if it >= 3 and dists[-1] >= dists[-2]:
            raise ContractionFailure(
                f"no contraction on window {window}: distances {dists[-3:]}"
            )
    else:
        raise SolverError(f"picard did not converge in {max_iter} iterations")

    ratios = [b / a for a, b in zip(dists, dists[1:]) if a > 0]
    diag = {
        "window": window,
        "steps": m,
        "iterations": len(dists),
        "distances": dists,
        "contraction_factor": float(np.median(ratios)) if ratios else 0.0,
    }
    return [FourierField(c) for c in cur], diag


# ---------------------------------------------------------------------------
# full solves
# ---------------------------------------------------------------------------


def _record_observables(recorder, j, omega_c, drift_c, noise_c, modes, n):
    for mode in modes:
        k1, k2 = mode
        ksq = k1 * k1 + k2 * k2
        x_val = TWO_PI**2 * omega_c[k1 % n, k2 % n]
        d_val = TWO_PI**2 * drift_c[k1 % n, k2 % n]
        s_val = TWO_PI**2 * noise_c[k1 % n, k2 % n]
        rec = recorder[mode]
        rec[0][j] = x_val
        rec[1][j] = -d_val - ksq * x_val  # <w, u.grad(phi) + Lap(phi)>
        rec[2][j] = -s_val                # <w, xi.grad(phi)>


def solve(
    config: ModelConfig,
    W: FbmPath,
    *,
    mode: str = "picard",
    rhs=None,
    observe: tuple = ((1, 0),),
    store_fields: bool = True,
    field_stride: int | None = None,
) -> SolverState:
    """Cover [0, horizon] in the requested mode.

    picard: window-restart continuation with the adaptive halving policy.
    stepper: exponential Euler on the full grid.
    """
    if mode not in ("picard", "stepper"):
        raise ValueError(f"unknown mode {mode!r}")
    rhs = rhs or vorticity_rhs(config)
    grid = config.grid
    if W.grid.level < config.level or abs(W.grid.horizon - config.horizon) > 1e-12:
        raise ValueError("driver path must resolve the solver grid")
    n = config.grid_n
    m_total = grid.n_steps
    if field_stride is None:
        field_stride = 1 if store_fields and m_total <= 1024 else max(1, m_total // 256)
    if not store_fields:
        field_stride = 0

    recorder = {
        md: (
            np.zeros(m_total + 1, dtype=complex),
            np.zeros(m_total + 1, dtype=complex),
            np.zeros(m_total + 1, dtype=complex),
        )
        for md in observe
    }

    omegas: list[FourierField] | None = [] if store_fields else None
    diagnostics: list = []
    failure = None

    def keep(j: int, f: FourierField):
        if omegas is not None and field_stride and j % field_stride == 0:
            omegas.append(f)

    def observe_at(j: int, omega_c: np.ndarray, drift_c, noise_c):
        if observe:
            _record_observables(recorder, j, omega_c, drift_c, noise_c, observe, n)

    if mode == "stepper":
        decay = np.exp(-grid.mesh * _ksq(n))
        stride = 1 << (W.grid.level - config.level)
        dws = np.diff(W.values[::stride])
        dt = grid.mesh
        c = config.omega0.coeffs.copy()
        keep(0, FourierField(c.copy()))
        j_reached = m_total
        for j in range(m_total):
            d, s = rhs(FourierField(c))
            observe_at(j, c, d.coeffs, s.coeffs)
            c = decay * (c - dt * d.coeffs - dws[j] * s.coeffs)
            sup = coeff_norm(c, config.alpha)
            if not np.isfinite(sup) or sup > config.norm_ceiling:
                failure = f"norm ceiling exceeded at step {j + 1}"
                j_reached = j
                break
            keep(j + 1, FourierField(c.copy()))
        if failure is None:
            d, s = rhs(FourierField(c))
            observe_at(m_total, c, d.coeffs, s.coeffs)
        m_done = j_reached
    else:
        w = max(1, m_total // config.window_init_div)
        floor = max(1, m_total // config.window_floor_div)
        j = 0
        current = config.omega0
        keep(0, current)
        d0, s0 = rhs(current)
        observe_at(0, current.coeffs, d0.coeffs, s0.coeffs)
        m_done = m_total
        while j < m_total:
            j1 = min(j + w, m_total)
            try:
                fields, diag = picard_window(config, W, (j, j1), current, rhs=rhs)
            except ContractionFailure:
                if w <= floor:
                    failure = f"window floor reached at step {j}"
                    m_done = j
                    break
                w = max(floor, w // 2)
                continue
            except SolverError as err:
                failure = str(err)
                m_done = j
                break
            diagnostics.append(diag)
            for idx, f in enumerate(fields[1:], start=j + 1):
                keep(idx, f)
                dd, ss = rhs(f)
                observe_at(idx, f.coeffs, dd.coeffs, ss.coeffs)
            current = fields[-1]
            j = j1

    observables = {}
    for md, (xs, avs, xvs) in recorder.items():
        end = m_done + 1
        observables[md] = ObservableSeries(
            mode=md,
            times=grid.times[:end],
            values=xs[:end],
            drift_channel=avs[:end],
            noise_channel=xvs[:end],
        )
    state = SolverState(
        config=config,
        grid=grid,
        driver=W,
        mode=mode,
        omegas=omegas,
        field_stride=field_stride or 1,
        observables=observables,
        diagnostics=diagnostics,
        completed=failure is None,
        failure=failure,
    )
    if failure is not None:
        raise BlowupError(failure, state=state)
    return state


def generic_operator_solve(
    drift_hook,
    diffusion_hook,
    config: ModelConfig,
    W: FbmPath,
    *,
    spec: OperatorSpec | None = None,
    mode: str = "picard",
    **kwargs,
) -> SolverState:
    """Run the same Picard/stepper machinery with user operators in place of
    u.grad(w) and xi.grad(w)."""
    spec = spec or OperatorSpec()
    spec.validate(config.alpha, config.gamma)
    return solve(config, W, mode=mode, rhs=make_rhs(drift_hook, diffusion_hook), **kwargs)


# ---------------------------------------------------------------------------
# observables and the weak-form residual
# ---------------------------------------------------------------------------


def extract_observable(state: SolverState, mode: tuple[int, int]) -> ObservableSeries:
    """Recorded channels for the requested Fourier mode; falls back to a
    recomputation from stored fields when the mode was not observed live."""
    if mode in state.observables:
        return state.observables[mode]
    if state.omegas is None or state.field_stride != 1:
        raise ValueError(f"mode {mode} was not observed and fields are strided")
    rhs = vorticity_rhs(state.config)
    n = state.config.grid_n
    m = state.grid.n_steps
    recorder = {mode: (np.zeros(m + 1, complex), np.zeros(m + 1, complex), np.zeros(m + 1, complex))}
    for j, f in enumerate(state.omegas):
        d, s = rhs(f)
        _record_observables(recorder, j, f.coeffs, d.coeffs, s.coeffs, (mode,), n)
    xs, avs, xvs = recorder[mode]
    return ObservableSeries(
        mode=mode, times=state.grid.times, values=xs, drift_channel=avs, noise_channel=xvs
    )


def weak_residual(state: SolverState, mode: tuple[int, int]) -> float:
    """Max over grid times of the weak-form defect

        X_t - X_0 - int_0^t a_s ds - int_0^t x_s dW_s

    (trapezoid drift quadrature, left-point Young sum on the same grid),
    normalized by max |X_t|.
    """
    obs = extract_observable(state, mode)
    m = len(obs.values) - 1
    dt = state.grid.mesh
    stride = 1 << (state.driver.grid.level - state.grid.level)
    dws = np.diff(state.driver.values[: m * stride + 1 : stride])
    drift_int = np.concatenate(
        [[0.0], np.cumsum(0.5 * (obs.drift_channel[1:] + obs.drift_channel[:-1]) * dt)]
    )
    young_int = np.concatenate([[0.0], np.cumsum(obs.noise_channel[:-1] * dws)])
    defect = obs.values - obs.values[0] - drift_int - young_int
    scale = float(np.max(np.abs(obs.values)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(defect))) / scale
