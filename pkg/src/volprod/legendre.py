"""Discrete Legendre-Fenchel transform, convex envelope and polar densities.

The 1D conjugate phi*(x) = max_i [x y_i - phi(y_i)] is evaluated with the
linear-time lower-convex-hull sweep; by construction it takes the max over
exactly the same finite candidate set as the all-pairs brute force.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .core import GridSpec, LogDensity, check_even, make_grid, reflect

# polars of Gaussian-decay inputs should fall by this many nats inside the box
DUAL_DECAY_NATS = 40.0


def _lower_hull(y: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices-free lower convex hull of the finite points (y_i, phi_i).

    Pops a middle point only when it lies on or above the chord of its
    neighbours, so every potential maximizer of the conjugate survives.
    """
    hy: list[float] = []
    hp: list[float] = []
    for yi, pi in zip(y, phi):
        while len(hy) >= 2:
            y1, p1 = hy[-2], hp[-2]
            y2, p2 = hy[-1], hp[-1]
            # slope(1,2) >= slope(2,new) <=> point 2 not strictly below the chord
            if (p2 - p1) * (yi - y2) >= (pi - p2) * (y2 - y1):
                hy.pop()
                hp.pop()
            else:
                break
        hy.append(yi)
        hp.append(pi)
    return np.asarray(hy), np.asarray(hp)


def legendre_1d(y: np.ndarray, phi: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Exact discrete conjugate of the sampled phi, evaluated at dual nodes x.

    All-inf input is rejected; +inf samples simply do not participate in the sup.
    """
    y = np.asarray(y, dtype=float)
    phi = np.asarray(phi, dtype=float)
    x = np.asarray(x, dtype=float)
    finite = np.isfinite(phi)
    if not finite.any():
        raise ValueError("conjugate of an everywhere-infinite function")
    hy, hp = _lower_hull(y[finite], phi[finite])
    out = np.empty(x.shape, dtype=float)
    k = 0
    m = len(hy)
    for j, xj in enumerate(x):
        while k + 1 < m and xj * hy[k + 1] - hp[k + 1] >= xj * hy[k] - hp[k]:
            k += 1
        out[j] = xj * hy[k] - hp[k]
    return out


def _conj_axis(phi: np.ndarray, y: np.ndarray, x: np.ndarray, axis: int) -> np.ndarray:
    """Apply the 1D conjugate along one axis of an nD array.

    Slices that are everywhere +inf conjugate to an empty sup: a -inf slice.
    """
    moved = np.moveaxis(phi, axis, 0)
    flat = moved.reshape(moved.shape[0], -1)
    out = np.empty((len(x), flat.shape[1]))
    for c in range(flat.shape[1]):
        col = flat[:, c]
        if np.isfinite(col).any():
            out[:, c] = legendre_1d(y, col, x)
        else:
            out[:, c] = -np.inf
    out = out.reshape((len(x),) + moved.shape[1:])
    return np.moveaxis(out, 0, axis)


def default_dual_grid(f: LogDensity, points=None) -> GridSpec:
    """Dual grid sized so the polar decays by DUAL_DECAY_NATS inside the box.

    Along each dual axis e_k the conjugate is the 1D conjugate of the shadow
    profile min over the other coordinates of phi, so the half-width is the
    smallest r with conj(r) >= conj(0) + DUAL_DECAY_NATS, found on a geometric
    candidate ladder (capped at 4096; downstream tail_ratio flags truncation).
    """
    grid = f.grid
    pts = points if points is not None else grid.points
    if not np.iterable(pts):
        pts = (pts,) * grid.dim
    hws = []
    for k in range(grid.dim):
        moved = np.moveaxis(f.phi, k, 0).reshape(grid.points[k], -1)
        shadow = np.min(moved, axis=1)
        y = grid.axis(k)
        candidates = np.geomspace(grid.spacings[k], 4096.0, 256)
        conj = legendre_1d(y, shadow, np.concatenate(([0.0], candidates)))
        target = conj[0] + DUAL_DECAY_NATS
        hit = np.nonzero(conj[1:] >= target)[0]
        r = candidates[hit[0]] if hit.size else 4096.0
        hws.append(1.05 * r)
    return make_grid(grid.dim, tuple(hws), tuple(int(p) for p in pts))


def legendre_transform(f: LogDensity, dual: GridSpec | None = None) -> LogDensity:
    """Exact discrete conjugate over all grid nodes, factorized axis by axis."""
    dual = dual if dual is not None else default_dual_grid(f)
    if dual.dim != f.grid.dim:
        raise ValueError("dual grid dimension mismatch")
    acc = f.phi
    for k in range(f.grid.dim):
        if k > 0:
            acc = -acc
        acc = _conj_axis(acc, f.grid.axis(k), dual.axis(k), axis=k)
    if f.even:
        # conjugation preserves evenness; symmetrize away last-ulp asymmetry
        acc = np.where(np.isfinite(acc), 0.5 * (acc + reflect(acc)), acc)
    return LogDensity(grid=dual, phi=acc, even=f.even and check_even(LogDensity(dual, acc), 0.0))


def _boundary_shell_inf(f: LogDensity) -> LogDensity | None:
    """Copy of f with the outermost node shell removed (set to f = 0)."""
    phi = f.phi.copy()
    for k in range(f.grid.dim):
        sl = [slice(None)] * f.grid.dim
        sl[k] = 0
        phi[tuple(sl)] = np.inf
        sl[k] = -1
        phi[tuple(sl)] = np.inf
    if not np.isfinite(phi).any():
        return None
    return LogDensity(grid=f.grid, phi=phi, even=f.even)


def polar_density(f: LogDensity, dual: GridSpec | None = None) -> LogDensity:
    """f0(x) = e^{-phi*(x)}: the polar density of f = e^{-phi}.

    Dual nodes whose sup is attained on the primal boundary shell are
    truncation artifacts (the sup over all of R^n is +inf there, as for
    f = e^{-|y|} beyond |x| = 1); those nodes are reported as phi* = +inf.
    They are detected by conjugating once more with the boundary shell
    removed: any strict decrease means the boundary was the maximizer.
    """
    if not f.even:
        warnings.warn("polar of a non-even density: Blaschke-Santalo hypotheses unmet")
    dual = dual if dual is not None else default_dual_grid(f)
    full = legendre_transform(f, dual)
    trimmed = _boundary_shell_inf(f)
    if trimmed is None:
        return full
    inner = legendre_transform(trimmed, dual)
    scale = 1.0 + np.where(np.isfinite(full.phi), np.abs(full.phi), 0.0)
    boundary_won = full.phi > inner.phi + 1e-12 * scale
    phi = np.where(boundary_won, np.inf, full.phi)
    return LogDensity(grid=dual, phi=phi, even=full.even)


def convex_envelope(f: LogDensity, dual: GridSpec | None = None) -> LogDensity:
    """Largest convex minorant of the sampled phi via double conjugation."""
    first = legendre_transform(f, dual)
    return legendre_transform(first, f.grid)
