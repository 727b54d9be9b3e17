"""Ornstein-Uhlenbeck semigroup P_s and its Fokker-Planck dual via exact kernels.

Each requested time gets its own Gaussian kernel (no time stepping), so
trajectories carry no accumulation error. Kernels factorize over axes and are
contracted in log domain.
"""

from __future__ import annotations

import math

import numpy as np

from .core import GridSpec, LogDensity, reflect
from .quadrature import LOG_2PI

# cache of per-axis log-kernel matrices keyed by (kind, t, n, half_width)
_KERNEL_CACHE: dict[tuple, np.ndarray] = {}


class KernelUnderResolvedError(ValueError):
    """The Gaussian kernel is narrower than the grid can resolve (std < h)."""


def _check_resolution(grid: GridSpec, t: float):
    std = math.sqrt(-math.expm1(-2 * t))
    for k in range(grid.dim):
        if std < grid.spacings[k]:
            raise KernelUnderResolvedError(
                f"kernel std {std:.3g} below spacing {grid.spacings[k]:.3g} on axis {k}"
            )


def _axis_kernel(axis: np.ndarray, h: float, t: float, kind: str) -> np.ndarray:
    """log of the 1D kernel matrix W[i, j] including the trapezoid weight in j.

    kind 'fp':  exponent -(x_i - e^{-t} y_j)^2 / (2 (1 - e^{-2t}))
    kind 'ou':  exponent -(e^{-t} x_i - y_j)^2 / (2 (1 - e^{-2t}))
    """
    key = (kind, float(t), len(axis), float(axis[-1]))
    cached = _KERNEL_CACHE.get(key)
    if cached is not None:
        return cached
    var = -math.expm1(-2 * t)
    decay = math.exp(-t)
    x = axis[:, None]
    y = axis[None, :]
    if kind == "fp":
        d = x - decay * y
    else:
        d = decay * x - y
    logw = np.full(len(axis), math.log(h))
    logw[0] = logw[-1] = math.log(h / 2)
    w = -d * d / (2 * var) - 0.5 * math.log(2 * math.pi * var) + logw[None, :]
    _KERNEL_CACHE[key] = w
    return w


def _contract(log_f: np.ndarray, grid: GridSpec, t: float, kind: str) -> np.ndarray:
    """Apply the factorized kernel along every axis of log f, stably."""
    out = log_f
    for k in range(grid.dim):
        w = _axis_kernel(grid.axis(k), grid.spacings[k], t, kind)
        moved = np.moveaxis(out, k, 0)  # (N, rest)
        flat = moved.reshape(moved.shape[0], -1)
        shift = np.max(flat, axis=0, keepdims=True)
        shift = np.where(np.isfinite(shift), shift, 0.0)
        summed = w[:, :, None] + (flat - shift)[None, :, :]
        m = np.max(summed, axis=1, keepdims=True)
        m_safe = np.where(np.isfinite(m), m, 0.0)
        with np.errstate(divide="ignore"):
            res = np.squeeze(m_safe, 1) + np.log(
                np.sum(np.exp(summed - m_safe), axis=1)
            )
        res = res + shift
        out = np.moveaxis(res.reshape(moved.shape), 0, k)
    return out


def fp_evolve(f0: LogDensity, t: float) -> LogDensity:
    """Solve the Fokker-Planck flow d/dt f = Lap f + div(x f) at time t exactly."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return f0
    _check_resolution(f0.grid, t)
    log_ft = _contract(f0.log_values(), f0.grid, t, "fp")
    phi = -log_ft
    if f0.even:
        phi = np.where(np.isfinite(phi), 0.5 * (phi + reflect(phi)), phi)
    return LogDensity(grid=f0.grid, phi=phi, even=f0.even)


def ou_apply(g: LogDensity, s: float) -> LogDensity:
    """P_s g on the same grid; g = e^{-phi} may be any positive grid function."""
    if s <= 0:
        raise ValueError("s must be positive")
    _check_resolution(g.grid, s)
    log_psg = _contract(g.log_values(), g.grid, s, "ou")
    phi = -log_psg
    if g.even:
        phi = np.where(np.isfinite(phi), 0.5 * (phi + reflect(phi)), phi)
    return LogDensity(grid=g.grid, phi=phi, even=g.even)


def flow_trajectory(f0: LogDensity, times) -> list[LogDensity]:
    """f_t for each requested time, each computed independently from f0."""
    times = list(times)
    if any(t <= 0 for t in times):
        raise ValueError("times must be positive (t = 0 is f0 itself)")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    return [fp_evolve(f0, t) for t in times]
