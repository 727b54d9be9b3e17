"""Scalar functionals: volume products, reverse-hypercontractivity norms,
Laplace-transform functionals, Q_s(t), inverse Brascamp-Lieb integrals and the
L^r-volume product.

Endpoint exponents are always p = 1 - e^{-2s}, q = 1 - e^{2s}; note the exact
identity -q/p = e^{2s} used when assembling the tropical bridge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import (
    BodySpec,
    ExponentSchedule,
    GridSpec,
    LogDensity,
    LogQuad,
    NEG_INF,
    make_grid,
)
from .heatflow import KernelUnderResolvedError, fp_evolve, ou_apply
from .legendre import polar_density
from .quadrature import (
    GAUSSIAN,
    LEBESGUE,
    LOG_2PI,
    log_integral,
    log_lq_norm,
    logsumexp_all,
    trapezoid_log_weights,
)

# polar integrals whose boundary-to-interior integrand ratio exceeds this are flagged
POLAR_TAIL_FLAG = 1e-4
# Laplace-transform grids are widened until q log F has dropped this many nats
LAPLACE_DECAY_NATS = 40.0


@dataclass(frozen=True)
class BLData:
    """Two-function inverse Brascamp-Lieb data (exponents and kernel form)."""

    s: float
    p: float
    q: float
    qform: np.ndarray

    @property
    def c1(self) -> float:
        return 1.0 / self.p

    @property
    def c2(self) -> float:
        return (self.q - 1.0) / self.q  # 1/q'

    @property
    def dim(self) -> int:
        return self.qform.shape[0] // 2


@dataclass(frozen=True)
class RevHCReport:
    """Both sides of the reverse-hypercontractivity inequality, in logs."""

    log_lhs: LogQuad
    log_rhs: LogQuad
    slack: float


@dataclass(frozen=True)
class BLOptimum:
    value: LogQuad
    a_diag: np.ndarray
    b_diag: np.ndarray
    degenerate: bool


def _log_gamma(grid: GridSpec) -> np.ndarray:
    mesh = grid.meshgrid()
    sq = sum(m * m for m in mesh)
    return -0.5 * sq - 0.5 * grid.dim * LOG_2PI


def volume_product(f: LogDensity, dual: GridSpec | None = None) -> LogQuad:
    """log v(f) = log int f + log int f(polar); tail_ratio from the polar integral."""
    li = log_integral(f, LEBESGUE)
    pol = polar_density(f, dual)
    lp = log_integral(pol, LEBESGUE)
    if li.sign == 0 or lp.sign == 0:
        return LogQuad(NEG_INF, 0)
    return LogQuad(log_abs=li.log_abs + lp.log_abs, sign=1, tail_ratio=lp.tail_ratio)


def nelson_q(s: float, p: float) -> float:
    """Borell's sharp threshold q(s, p) = 1 + e^{2s} (p - 1)."""
    if s <= 0:
        raise ValueError("s must be positive")
    if p >= 1:
        raise ValueError("p must be below 1")
    return 1.0 + math.exp(2 * s) * (p - 1.0)


def rev_hc_value(f0: LogDensity, s: float, p: float | None = None, q: float | None = None) -> RevHCReport:
    """Both sides of ||P_s[(f0/gamma)^{1/p}]||_{L^q(gamma)} >= (int f0)^{1/p}."""
    sched = ExponentSchedule(s)
    p = sched.p if p is None else p
    q = sched.q if q is None else q
    if not (0 < p) or not (q < 0):
        raise ValueError("need 0 < p and q < 0")
    g_phi = (f0.phi + _log_gamma(f0.grid)) / p  # -log[(f0/gamma)^{1/p}]
    g = LogDensity(grid=f0.grid, phi=g_phi, even=f0.even)
    psg = ou_apply(g, s)
    lhs = log_lq_norm(psg, q, GAUSSIAN)
    mass = log_integral(f0, LEBESGUE)
    rhs = LogQuad(log_abs=mass.log_abs / p, sign=1, tail_ratio=mass.tail_ratio)
    return RevHCReport(log_lhs=lhs, log_rhs=rhs, slack=lhs.log_abs - rhs.log_abs)


def gaussian_rev_hc(beta: float, a, s: float, p: float, q: float) -> LogQuad:
    """Closed form of ||P_s[(gamma_beta(.+a)/gamma)^{1/p}]||_{L^q(gamma)}.

    Everything reduces to per-axis Gaussian quadratic-linear integrals.  Any
    q != 0 is allowed.  When the inner (semigroup) form degenerates P_s g is
    everywhere infinite and the norm is +inf for either sign of q.  When the
    outer form degenerates the q-integral diverges: the norm is +inf for
    q > 0 and collapses to zero for q < 0 (sign-0 sentinel, infinite
    tail_ratio marker).
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if s <= 0 or q == 0 or p <= 0:
        raise ValueError("need s > 0, p > 0, q != 0")
    shifts = np.atleast_1d(np.asarray(a, dtype=float))
    sig2 = -math.expm1(-2 * s)
    es = math.exp(-s)
    total = 0.0
    for ak in shifts:
        A = (0.5 - 0.5 / beta) / p
        B = -ak / (p * beta)
        D = (-ak * ak / (2 * beta) - 0.5 * math.log(beta)) / p
        ay = A - 1.0 / (2 * sig2)
        if ay >= 0:
            return LogQuad(log_abs=math.inf, sign=1)
        E = -es * es / (2 * sig2) - (es / sig2) ** 2 / (4 * ay)
        G = -B * es / (2 * sig2 * ay)
        H0 = 0.5 * math.log(math.pi / -ay) + D - 0.5 * math.log(2 * math.pi * sig2) - B * B / (4 * ay)
        ax = q * E - 0.5
        if ax >= 0:
            if q > 0:
                return LogQuad(log_abs=math.inf, sign=1)
            return LogQuad(log_abs=NEG_INF, sign=0, tail_ratio=math.inf)
        log_int = 0.5 * math.log(math.pi / -ax) - (q * G) ** 2 / (4 * ax) + q * H0 - 0.5 * LOG_2PI
        total += log_int / q
    return LogQuad(log_abs=total, sign=1)


def _log_laplace_at(f: LogDensity, x: np.ndarray, power: float, arg_scale: float) -> float:
    """log int e^{arg_scale <x, z>} f(z)^power dz at a single point x."""
    mesh = f.grid.meshgrid()
    dot = sum(xk * mk for xk, mk in zip(np.atleast_1d(x), mesh))
    terms = arg_scale * dot - power * f.phi + trapezoid_log_weights(f.grid)
    return logsumexp_all(terms)


def laplace_grid(f: LogDensity, q: float, power: float, arg_scale: float, points=None) -> GridSpec:
    """x-grid wide enough that q log F has decayed LAPLACE_DECAY_NATS nats.

    For even f, log F is even and convex so its q-weighted maximum sits at 0.
    """
    n = f.grid.dim
    pts = points if points is not None else f.grid.points
    at0 = _log_laplace_at(f, np.zeros(n), power, arg_scale)
    hws = []
    for k in range(n):
        r = 4.0
        while r < 512.0:
            e = np.zeros(n)
            e[k] = r
            rise = _log_laplace_at(f, e, power, arg_scale) - at0
            if q * rise <= -LAPLACE_DECAY_NATS:
                break
            r *= 1.5
        hws.append(r)
    return make_grid(n, tuple(hws), pts)


def log_laplace(f: LogDensity, x_grid: GridSpec, power: float = 1.0, arg_scale: float = 1.0):
    """log of int e^{arg_scale <x, z>} f(z)^power dz on the whole x grid.

    Returns (log values, boundary-dominated flags); a flagged node means the
    z-integrand peaked on the z-boundary and the value is unreliable.
    """
    grid = f.grid
    zw = trapezoid_log_weights(grid)
    base = -power * f.phi
    out = np.empty(x_grid.points)
    flags = np.zeros(x_grid.points, dtype=bool)
    xs = x_grid.nodes()
    mesh = grid.meshgrid()
    bmask = _boundary(grid.points)
    flat_vals = np.empty(len(xs))
    flat_flags = np.zeros(len(xs), dtype=bool)
    for i, x in enumerate(xs):
        dot = sum(xk * mk for xk, mk in zip(x, mesh))
        e = arg_scale * dot + base
        flat_vals[i] = logsumexp_all(e + zw)
        interior_max = np.max(e[~bmask])
        flat_flags[i] = bool(np.max(e[bmask]) >= interior_max)
    out[...] = flat_vals.reshape(x_grid.points)
    flags[...] = flat_flags.reshape(x_grid.points)
    return out, flags


def _boundary(shape) -> np.ndarray:
    from .quadrature import boundary_mask

    return boundary_mask(tuple(shape))


def laplace_f_t(f_t: LogDensity, s: float, x_grid: GridSpec | None = None):
    """F_t(x) = Laplace[f_t^{1/p}](x/p) at endpoint p, as (LogDensity of F, flags)."""
    sched = ExponentSchedule(s)
    inv_p = 1.0 / sched.p
    if x_grid is None:
        x_grid = laplace_grid(f_t, sched.q, power=inv_p, arg_scale=inv_p)
    log_f, flags = log_laplace(f_t, x_grid, power=inv_p, arg_scale=inv_p)
    return LogDensity(grid=x_grid, phi=-log_f, even=f_t.even), flags


def q_functional(f0: LogDensity, s: float, times) -> list[tuple[float, float]]:
    """Q_s(t) = log int F_t^q dx along the flow; t = 0 uses f0 directly."""
    sched = ExponentSchedule(s)
    times = list(times)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be ascending")
    if any(t < 0 for t in times):
        raise ValueError("times must be nonnegative")
    out = []
    for t in times:
        f_t = f0 if t == 0 else fp_evolve(f0, t)
        bigf, _ = laplace_f_t(f_t, s)
        lq = log_lq_norm(bigf, sched.q, LEBESGUE)
        out.append((t, sched.q * lq.log_abs))
    return out


def log_c_s(s: float, n: int) -> float:
    """log C_s = n log[(2 pi)^{(1/p + 1/q') / 2 - 1} / sqrt(1 - e^{-2s})]."""
    sched = ExponentSchedule(s)
    expo = 0.5 * (1.0 / sched.p + sched.c2) - 1.0
    return n * (expo * LOG_2PI - 0.5 * math.log(sched.p))


def equiv_form_check(f_t: LogDensity, s: float) -> tuple[LogQuad, LogQuad]:
    """||P_s[(f_t/gamma)^{1/p}]||^q via the OU route versus C_s^q e^{ns} int F_t^q."""
    sched = ExponentSchedule(s)
    n = f_t.grid.dim
    report = rev_hc_value(f_t, s)
    lhs = LogQuad(log_abs=sched.q * report.log_lhs.log_abs, sign=1,
                  tail_ratio=report.log_lhs.tail_ratio)
    bigf, flags = laplace_f_t(f_t, s)
    lq = log_lq_norm(bigf, sched.q, LEBESGUE)
    rhs_log = sched.q * log_c_s(s, n) + n * s + sched.q * lq.log_abs
    rhs = LogQuad(log_abs=rhs_log, sign=1, tail_ratio=lq.tail_ratio)
    return lhs, rhs


def laplace_norm_ratio(f: LogDensity, p: float) -> LogQuad:
    """log ||Lf||_{L^q(dx)} - log ||f||_{L^p(dx)} with q = p' = p/(p-1) < 0."""
    if not (0 < p < 1):
        raise ValueError("p must lie in (0, 1)")
    q = p / (p - 1.0)
    x_grid = laplace_grid(f, q, power=1.0, arg_scale=1.0)
    log_lf, flags = log_laplace(f, x_grid, power=1.0, arg_scale=1.0)
    lf = LogDensity(grid=x_grid, phi=-log_lf, even=f.even)
    num = log_lq_norm(lf, q, LEBESGUE)
    den = log_lq_norm(f, p, LEBESGUE)
    # only z-truncation flags at x-nodes that actually contribute to the
    # q-norm matter; far-field nodes are 40 nats down by construction
    w = q * log_lf
    ref = float(np.max(w[~flags])) if (~flags).any() else float(np.max(w))
    relevant = flags & (w > ref - 30.0)
    tail = max(num.tail_ratio, float(np.mean(relevant)))
    return LogQuad(log_abs=num.log_abs - den.log_abs, sign=1, tail_ratio=tail)


def bl_data(s: float, p: float | None = None, q: float | None = None) -> BLData:
    """Two-function inverse Brascamp-Lieb data: exponents and the 2n x 2n kernel form.

    The form is built with identity blocks; n = 1 unless a caller rescales.
    """
    sched = ExponentSchedule(s)
    p = sched.p if p is None else p
    q = sched.q if q is None else q
    e2s = math.exp(-2 * s)
    es = math.exp(-s)
    denom = 2 * math.pi * (1 - e2s)
    a = 1.0 - (1 - e2s) / p
    b = e2s * (1.0 - (1 - 1.0 / e2s) / q)
    qf = np.array([[a, -es], [-es, b]]) / denom
    return BLData(s=s, p=p, q=q, qform=qf)


def bl_qform_nd(data: BLData, n: int) -> np.ndarray:
    """Expand the scalar 2x2 data to identity blocks of size n."""
    q2 = data.qform
    top = np.hstack([q2[0, 0] * np.eye(n), q2[0, 1] * np.eye(n)])
    bot = np.hstack([q2[1, 0] * np.eye(n), q2[1, 1] * np.eye(n)])
    return np.vstack([top, bot])


def bl_integral(f1: LogDensity, f2: LogDensity, data: BLData) -> LogQuad:
    """log of int e^{-pi <x, Q_s x>} f1(x1)^{c1} f2(x2)^{c2} dx over the grid pair."""
    if f1.grid.dim != f2.grid.dim:
        raise ValueError("dimension mismatch")
    n = f1.grid.dim
    q2 = data.qform
    w1 = trapezoid_log_weights(f1.grid)
    w2 = trapezoid_log_weights(f2.grid)
    m1 = f1.grid.meshgrid()
    m2 = f2.grid.meshgrid()
    sq1 = sum(m * m for m in m1)
    sq2 = sum(m * m for m in m2)
    base1 = (-math.pi * q2[0, 0]) * sq1 - data.c1 * f1.phi + w1
    base2 = (-math.pi * q2[1, 1]) * sq2 - data.c2 * f2.phi + w2
    # cross term couples each coordinate of x1 with the same coordinate of x2
    total = NEG_INF
    shape1 = base1.size
    b1 = base1.ravel()
    b2 = base2.ravel()
    x1 = np.stack([m.ravel() for m in m1], axis=-1)
    x2 = np.stack([m.ravel() for m in m2], axis=-1)
    cross_coef = -2 * math.pi * q2[0, 1]
    chunk = max(1, int(4e6 // max(1, len(b2))))
    pieces = []
    for start in range(0, shape1, chunk):
        dots = x1[start : start + chunk] @ x2.T
        block = b1[start : start + chunk, None] + cross_coef * dots + b2[None, :]
        pieces.append(logsumexp(block))
    total = logsumexp(np.array(pieces))
    if total == NEG_INF:
        return LogQuad(NEG_INF, 0)
    return LogQuad(log_abs=float(total), sign=1)


def _gaussian_bl_objective(data: BLData, a: float, b: float) -> float:
    """Per-coordinate closed form of the kernel integral against gamma_a^c1 gamma_b^c2."""
    q2 = data.qform
    m = 2 * math.pi * q2 + np.diag([data.c1 / a, data.c2 / b])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det <= 0 or m[0, 0] <= 0:
        return math.inf
    return (
        LOG_2PI
        - 0.5 * math.log(det)
        - 0.5 * data.c1 * math.log(2 * math.pi * a)
        - 0.5 * data.c2 * math.log(2 * math.pi * b)
    )


def _golden_min(fun, lo: float, hi: float, tol: float) -> float:
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while abs(b - a) > tol * max(1.0, abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (a + b) / 2


def gaussian_bl_constant(data: BLData, n: int = 1, log_bound: float = 12.0) -> BLOptimum:
    """Infimum of the kernel integral over centered Gaussians with diagonal covariance.

    Coordinates decouple for identity-block data, so one 2D problem is solved by
    a coarse global scan followed by alternating golden-section descent in
    (log a, log b), raised to the n-th power.  A minimizer escaping to the
    search-box boundary signals a degenerate (zero) infimum; the coarse scan is
    what detects objectives that are unbounded below along a diagonal valley.
    """

    def obj(la_, lb_):
        return _gaussian_bl_objective(data, math.exp(la_), math.exp(lb_))

    # coarse scan: detects objectives unbounded below along diagonal valleys
    # (degenerate infimum 0) and picks a sensible basin for the descent
    ladder = np.linspace(-log_bound, log_bound, 33)
    coarse = np.array([[obj(u, v) for v in ladder] for u in ladder])
    ring = np.zeros(coarse.shape, dtype=bool)
    ring[0, :] = ring[-1, :] = ring[:, 0] = ring[:, -1] = True
    interior_min = float(np.min(coarse[~ring]))
    if float(np.min(coarse[ring])) < interior_min - 1e-6:
        corner = np.argwhere(coarse == np.min(coarse))[0]
        return BLOptimum(
            value=LogQuad(NEG_INF, 0, tail_ratio=math.inf),
            a_diag=np.full(n, math.exp(ladder[corner[0]])),
            b_diag=np.full(n, math.exp(ladder[corner[1]])),
            degenerate=True,
        )
    # among near-minimal interior points, start closest to a = b = 1
    near = np.argwhere((coarse <= interior_min + 1e-6) & ~ring)
    iu, iv = min(near, key=lambda ij: abs(ladder[ij[0]]) + abs(ladder[ij[1]]))
    la, lb = float(ladder[iu]), float(ladder[iv])
    for _ in range(200):
        la_new = _golden_min(lambda u: obj(u, lb), -log_bound, log_bound, 1e-12)
        lb_new = _golden_min(lambda u: obj(la_new, u), -log_bound, log_bound, 1e-12)
        if abs(la_new - la) < 1e-10 and abs(lb_new - lb) < 1e-10:
            la, lb = la_new, lb_new
            break
        la, lb = la_new, lb_new
    val = obj(la, lb)
    degenerate = (
        not math.isfinite(val)
        or abs(la) > log_bound - 0.5
        or abs(lb) > log_bound - 0.5
    )
    a = math.exp(la)
    b = math.exp(lb)
    if degenerate:
        return BLOptimum(
            value=LogQuad(NEG_INF, 0, tail_ratio=math.inf),
            a_diag=np.full(n, a),
            b_diag=np.full(n, b),
            degenerate=True,
        )
    return BLOptimum(
        value=LogQuad(log_abs=n * val, sign=1),
        a_diag=np.full(n, a),
        b_diag=np.full(n, b),
        degenerate=False,
    )


def lr_volume_product(
    body: BodySpec,
    r: float,
    outer_grid: GridSpec | None = None,
    inner_cells: int = 64,
) -> LogQuad:
    """M_r(K) = |K| int ( int_K e^{r<x,y>} dy / |K| )^{-1/r} dx on tensor grids.

    |K| uses midpoint cell counting (a cell counts when its center's gauge is
    at most 1); the outer integral is truncated where its integrand has decayed.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    n = body.dim
    if n > 2:
        raise ValueError("L^r-volume product supported for n <= 2")
    # bounding half-width of K
    if body.kind == "lp_ball":
        bound = body.radius
    else:
        bound = math.sqrt(np.linalg.eigvalsh(body.matrix).max())
    hc = 2 * bound / inner_cells
    centers_1d = -bound + (np.arange(inner_cells) + 0.5) * hc
    cmesh = np.meshgrid(*([centers_1d] * n), indexing="ij")
    pts = np.stack([m.ravel() for m in cmesh], axis=-1)
    inside = body.gauge(pts) <= 1.0
    y = pts[inside]
    log_cell = n * math.log(hc)
    log_vol = math.log(inside.sum()) + log_cell
    if outer_grid is None:
        # inradius of our symmetric bodies bounds the integrand decay rate
        probe = np.eye(n)
        inradius = float(min(1.0 / body.gauge(probe[k]) for k in range(n)))
        hw = LAPLACE_DECAY_NATS / inradius + 2.0
        outer_grid = make_grid(n, hw, 129 if n == 1 else 129)
    xw = trapezoid_log_weights(outer_grid)
    xs = outer_grid.nodes()
    inner_logmean = np.empty(len(xs))
    chunk = max(1, int(4e6 // max(1, len(y))))
    for start in range(0, len(xs), chunk):
        dots = xs[start : start + chunk] @ y.T
        inner_logmean[start : start + chunk] = (
            logsumexp(r * dots, axis=1) + log_cell - log_vol
        )
    outer_terms = (-inner_logmean / r).reshape(outer_grid.points) + xw
    la = logsumexp_all(outer_terms)
    integrand = (-inner_logmean / r).reshape(outer_grid.points)
    bmask = _boundary(outer_grid.points)
    tail = math.exp(min(float(np.max(integrand[bmask]) - np.max(integrand[~bmask])), 700.0))
    return LogQuad(log_abs=log_vol + la, sign=1, tail_ratio=tail)


def tropical_limit_curve(f: LogDensity, s_list) -> tuple[list[tuple[float, float]], bool]:
    """The bridge c_s (int f)^{-q/p} ||P_s[(f/gamma)^{1/p}]||^q per s, OU route.

    c_s = (2 pi)^n: assembled from C_s and the dual-route identity so that
    centered Gaussians sit exactly at v(gamma) = (2 pi)^n for every s.  The
    curve approaches v(f) as s decreases; an under-resolved kernel truncates
    the list and sets the flag.
    """
    s_list = list(s_list)
    if any(b >= a for a, b in zip(s_list, s_list[1:])):
        raise ValueError("s_list must be strictly descending")
    n = f.grid.dim
    mass = log_integral(f, LEBESGUE)
    out = []
    truncated = False
    for s in s_list:
        sched = ExponentSchedule(s)
        try:
            report = rev_hc_value(f, s)
        except KernelUnderResolvedError:
            truncated = True
            break
        log_bridge = (
            n * LOG_2PI
            + math.exp(2 * s) * mass.log_abs
            + sched.q * report.log_lhs.log_abs
        )
        out.append((s, math.exp(log_bridge)))
    return out, truncated


def tilted_log_density(f_t: LogDensity, p: float, x) -> LogDensity:
    """The tilted family h_{t,x}(z) proportional to e^{<x,z>/p} f_t(z)^{1/p}."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mesh = f_t.grid.meshgrid()
    dot = sum(xk * mk for xk, mk in zip(x, mesh))
    phi = f_t.phi / p - dot / p
    return LogDensity(grid=f_t.grid, phi=phi, even=False)
