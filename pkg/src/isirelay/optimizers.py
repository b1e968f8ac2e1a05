"""Power allocation solvers.

Tolerances
----------
=====================  =========  =============================================
name                   value      used by
=====================  =========  =============================================
LAMBDA_ITERS           60         search steps on the cut weight lambda
XTOL                   1e-10      absolute tolerance on bracketed variables
FTOL_CUTS              1e-13      relative cut mismatch that ends the lambda search
RTOL_BUDGET            1e-12      relative residual for budget root finding
FTOL                   1e-9       residual tolerance on constraint equations
CF_STARTS              8          deterministic multi-start count for CF
=====================  =========  =============================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    BROADCAST_CUT,
    AsynchronyProfile,
    CompressionProfile,
    PowerAllocation,
    asynch_cf_parts,
    asynch_cutset_terms,
    asynch_df_terms,
    cf_modified_rate,
    cf_rate,
    compression_q,
    cutset_gain,
    _compression_terms,
    binding_cut,
)
from .circulant import SubbandChannel
from .errors import ConvergenceError, RelayError

LAMBDA_ITERS = 60
XTOL = 1e-10
FTOL_CUTS = 1e-13
RTOL_BUDGET = 1e-12
FTOL = 1e-9
CF_STARTS = 8


# scalar root finding


def _illinois(f, a, b, fa, fb, xtol=1e-14, ftol=0.0, maxiter=200):
    """Illinois false-position root of ``f`` on ``[a, b]`` with ``fa * fb <= 0``."""
    if fa == 0:
        return a
    if fb == 0:
        return b
    side = 0
    for _ in range(maxiter):
        c = b - fb * (b - a) / (fb - fa)
        if not (min(a, b) < c < max(a, b)):
            c = 0.5 * (a + b)
        fc = f(c)
        if abs(fc) <= ftol or abs(b - a) <= xtol:
            return c
        if fc * fb < 0:
            a, fa = b, fb
            b, fb = c, fc
            side = 0
        else:
            b, fb = c, fc
            if side == -1:
                fa *= 0.5
            side = -1
        if abs(b - a) <= xtol:
            return b
    return b


def _decreasing_root(f, t0, step=1.0, xtol=1e-14, ftol=0.0, max_expand=80):
    """Root of a nonincreasing function of ``t``, searching outward from ``t0``.

    Returns ``None`` if no sign change is found; the caller decides which
    limit applies.
    """
    f0 = f(t0)
    if f0 == 0:
        return t0
    direction = 1.0 if f0 > 0 else -1.0
    a, fa = t0, f0
    for _ in range(max_expand):
        b = a + direction * step
        fb = f(b)
        if fb == 0:
            return b
        if (fb > 0) != (f0 > 0):
            return _illinois(f, a, b, fa, fb, xtol=xtol, ftol=ftol)
        a, fa = b, fb
        step *= 2.0
    return None


def bisect_increasing(g, lo, hi, xtol=1e-12, maxiter=200):
    """Root of a nondecreasing scalar function on ``[lo, hi]`` by bisection."""
    glo = g(lo)
    if glo >= 0:
        return lo
    if g(hi) <= 0:
        return hi
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= xtol:
            break
    return 0.5 * (lo + hi)


# decode-and-forward maximin


@dataclass(frozen=True)
class MaximinSolution:
    """Optimal allocation of ``max min(c1, c2)``.

    Attributes
    ----------
    lambda_star : float
        Weight on the broadcast cut at the optimum.
    gap : float
        ``|c1 - c2|`` at the returned allocation.
    """

    alloc: PowerAllocation
    lambda_star: float
    rate: float
    gap: float
    c1: float
    c2: float
    binding: str
    mu_S: float = math.nan
    mu_R: float = math.nan


@dataclass(frozen=True)
class _Gains:
    a1: np.ndarray
    aSD: np.ndarray
    aRD: np.ndarray
    coherent: np.ndarray


def _safe_div(a, mu):
    return np.zeros_like(a) if math.isinf(mu) else a / mu


def _band_response(lam: float, muS: float, muR: float, g: _Gains):
    """Per-band maximizer of the weighted two-cut Lagrangian.

    Maximizes ``lam/2 log(1 + a1 x) + (1-lam)/2 log(1 + aSD x + (sqrt(aSD y) +
    sqrt(aRD z))^2) - muS (x + y) - muR z`` over ``x, y, z >= 0``.  For a
    fixed spend ``v`` on the coherent part, Cauchy-Schwarz gives the best
    split of ``v`` between ``y`` and ``z`` and an effective gain ``G`` per unit
    spend; what remains is a concave problem in the spends ``(u, v)`` whose
    optimum lies either in the interior or on one of the two faces.
    """
    A = _safe_div(g.a1, muS)
    B = _safe_div(g.aSD, muS)
    R = _safe_div(g.aRD, muR)
    G = np.where(g.coherent, B + R, R)
    hl, hm = 0.5 * lam, 0.5 * (1.0 - lam)

    def value(u, v):
        return hl * np.log1p(A * u) + hm * np.log1p(B * u + G * v) - u - v

    with np.errstate(divide="ignore", invalid="ignore"):
        # interior point: both spends positive
        ratio = np.where(G > 0, B / G, 1.0)
        u_i = np.where(
            (G > B) & (A > 0), lam / (2.0 * (1.0 - ratio)) - 1.0 / A, 0.0
        )
        u_i = np.where(np.isfinite(u_i), np.maximum(u_i, 0.0), 0.0)
        v_i = np.where(G > 0, (hm * G - 1.0 - B * u_i) / G, 0.0)
        v_i = np.maximum(v_i, 0.0)
        # face u = 0
        v_f = np.where(G > 0, np.maximum(hm - 1.0 / G, 0.0), 0.0)
        # face v = 0: 2AB u^2 + (2(A+B) - AB) u + (2 - lam A - (1-lam) B) = 0
        qa = 2.0 * A * B
        qb = 2.0 * (A + B) - A * B
        qc = 2.0 - lam * A - (1.0 - lam) * B
        disc = np.sqrt(np.maximum(qb * qb - 4.0 * qa * qc, 0.0))
        lin = np.where(A + B > 0, -qc / np.where(A + B > 0, qb, 1.0), 0.0)
        root = np.where(
            qb >= 0,
            2.0 * qc / np.where(-qb - disc != 0, -qb - disc, -1.0),
            (-qb + disc) / np.where(qa > 0, 2.0 * qa, 1.0),
        )
        u_f = np.where(qa > 0, root, lin)
        u_f = np.where((qc < 0) & np.isfinite(u_f), np.maximum(u_f, 0.0), 0.0)

    zero = np.zeros_like(u_i)
    val_i, val_f, val_u = value(u_i, v_i), value(zero, v_f), value(u_f, zero)
    take_f = val_f > val_i
    u = np.where(take_f, 0.0, u_i)
    v = np.where(take_f, v_f, v_i)
    best = np.maximum(val_i, val_f)
    take_u = val_u > best
    u = np.where(take_u, u_f, u)
    v = np.where(take_u, 0.0, v)

    x = u / muS if not math.isinf(muS) else np.zeros_like(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        if math.isinf(muR):
            y = np.where(g.coherent & (G > 0), v * _safe_div(g.aSD, muS * muS) / G, 0.0)
            z = np.zeros_like(v)
        else:
            wS = _safe_div(g.aSD, muS * muS) if not math.isinf(muS) else np.zeros_like(v)
            y = np.where(g.coherent & (G > 0), v * wS / G, 0.0)
            z = np.where(
                G > 0, np.where(g.coherent, v * (g.aRD / (muR * muR)) / G, v / muR), 0.0
            )
    return x, y, z


def _cuts(x, y, z, g: _Gains):
    c1 = 0.5 * np.mean(np.log1p(g.a1 * x))
    coh = np.where(g.coherent, (np.sqrt(g.aSD * y) + np.sqrt(g.aRD * z)) ** 2, g.aRD * z)
    c2 = 0.5 * np.mean(np.log1p(g.aSD * x + coh))
    return float(c1), float(c2)


class _DualSolver:
    """Finds budget prices ``(mu_S, mu_R)`` for a given cut weight, warm-started."""

    def __init__(self, g: _Gains, P_S: float, P_R: float):
        self.g = g
        self.P_S = P_S
        self.P_R = P_R
        scale_S = 1.0 / (P_S + 1.0 / max(float(np.mean(g.a1 + g.aSD)), 1e-300))
        scale_R = 1.0 / (P_R + 1.0 / max(float(np.mean(g.aRD)), 1e-300))
        self.tS = math.log(0.5 * scale_S)
        self.tR = math.log(0.5 * scale_R)
        self.stepS = self.stepR = 0.5

    def _inner(self, lam, muR):
        """Source price meeting the source budget at a fixed relay price."""
        g, P = self.g, self.P_S
        if P <= 0:
            return math.inf
        ftol = RTOL_BUDGET * P

        def f(t):
            x, y, _ = _band_response(lam, math.exp(t), muR, g)
            return float(np.mean(x + y)) - P

        t = _decreasing_root(f, self.tS, step=self.stepS, ftol=ftol)
        if t is None:
            raise ConvergenceError("source price search failed", (lam, muR))
        self.stepS = min(max(4.0 * abs(t - self.tS), 1e-6), 0.5)
        self.tS = t
        return math.exp(t)

    def solve(self, lam: float):
        g = self.g
        if self.P_R <= 0 or lam >= 1.0 or not np.any(g.aRD > 0):
            muR = math.inf
            muS = self._inner(lam, muR)
            return muS, muR
        P = self.P_R
        ftol = RTOL_BUDGET * P

        def f(t):
            muS = self._inner(lam, math.exp(t))
            _, _, z = _band_response(lam, muS, math.exp(t), g)
            return float(np.mean(z)) - P

        t = _decreasing_root(f, self.tR, step=self.stepR, ftol=ftol)
        if t is None:
            # relay budget cannot be spent profitably at any price
            muR = math.inf
        else:
            self.stepR = min(max(4.0 * abs(t - self.tR), 1e-6), 0.5)
            self.tR = t
            muR = math.exp(t)
        return self._inner(lam, muR), muR

    def allocate(self, lam: float):
        muS, muR = self.solve(lam)
        x, y, z = _band_response(lam, muS, muR, self.g)
        x, y, z = _scale_to_budget(x, y, z, self.P_S, self.P_R)
        return (x, y, z), muS, muR


class _TotalDualSolver:
    """Single price shared by source and relay under a total power budget."""

    def __init__(self, g: _Gains, P_t: float):
        self.g = g
        self.P_t = P_t
        self.t = math.log(0.5 / (P_t + 1.0 / max(float(np.mean(g.a1 + g.aSD + g.aRD)), 1e-300)))
        self.step = 0.5
        self.tS = self.tR = self.t

    def solve(self, lam: float):
        g, P = self.g, self.P_t

        def f(t):
            x, y, z = _band_response(lam, math.exp(t), math.exp(t), g)
            return float(np.mean(x + y + z)) - P

        t = _decreasing_root(f, self.t, step=self.step, ftol=RTOL_BUDGET * P)
        if t is None:
            raise ConvergenceError("total price search failed", (lam,))
        self.step = min(max(4.0 * abs(t - self.t), 1e-6), 0.5)
        self.t = self.tS = self.tR = t
        return math.exp(t), math.exp(t)

    def allocate(self, lam: float):
        mu, _ = self.solve(lam)
        x, y, z = _band_response(lam, mu, mu, self.g)
        tot = float(np.mean(x + y + z))
        if tot > self.P_t > 0:
            x, y, z = (v * (self.P_t / tot) for v in (x, y, z))
        return (x, y, z), mu, mu


def _scale_to_budget(x, y, z, P_S, P_R):
    s = float(np.mean(x + y))
    if s > P_S and s > 0:
        x, y = x * (P_S / s), y * (P_S / s)
    r = float(np.mean(z))
    if r > P_R and r > 0:
        z = z * (P_R / r)
    return x, y, z


def _to_alloc(x, y, z) -> PowerAllocation:
    P_S = x + y
    with np.errstate(invalid="ignore", divide="ignore"):
        alpha = np.where(P_S > 0, x / np.where(P_S > 0, P_S, 1.0), 1.0)
    return PowerAllocation(P_S, z, np.clip(alpha, 0.0, 1.0))


def _maximin(g: _Gains, dual, iters: int = LAMBDA_ITERS) -> MaximinSolution:

    hi_xyz, muS_hi, muR_hi = dual.allocate(1.0)
    c1, c2 = _cuts(*hi_xyz, g)
    if c1 <= c2:
        # the broadcast cut binds even when it alone is maximized
        return MaximinSolution(_to_alloc(*hi_xyz), 1.0, c1, c2 - c1, c1, c2, binding_cut(c1, c2), muS_hi, muR_hi)
    lo_xyz, muS_lo, muR_lo = dual.allocate(0.0)
    d1, d2 = _cuts(*lo_xyz, g)
    if d1 >= d2:
        return MaximinSolution(_to_alloc(*lo_xyz), 0.0, d2, d1 - d2, d1, d2, binding_cut(d1, d2), muS_lo, muR_lo)

    # c1 - c2 increases with lam; safeguarded regula falsi (Illinois weights,
    # bisection whenever the bracket fails to halve) keeps a bracketing pair
    lo, hi = 0.0, 1.0
    f_lo, f_hi = d1 - d2, c1 - c2
    side = 0
    window = hi - lo
    for it in range(iters):
        mid = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        stalled = it % 3 == 2 and hi - lo > 0.5 * window
        if stalled or not lo < mid < hi:
            mid = 0.5 * (lo + hi)
        xyz, muS, muR = dual.allocate(mid)
        m1, m2 = _cuts(*xyz, g)
        fm = m1 - m2
        if fm < 0:
            lo, lo_xyz, muS_lo, muR_lo, f_lo = mid, xyz, muS, muR, fm
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, hi_xyz, muS_hi, muR_hi, f_hi = mid, xyz, muS, muR, fm
            if side == 1:
                f_lo *= 0.5
            side = 1
        if it % 3 == 2:
            window = hi - lo
        if hi - lo <= XTOL or abs(fm) <= FTOL_CUTS * (1.0 + abs(m1)):
            break

    # mix the two bracketing allocations so that both cuts are equal; each cut
    # is concave in (x, y, z), so the mixture is optimal for the maximin
    def diff(theta):
        xyz = [theta * h + (1 - theta) * l for h, l in zip(hi_xyz, lo_xyz)]
        a, b = _cuts(*xyz, g)
        return a - b

    theta = bisect_increasing(diff, 0.0, 1.0, xtol=1e-15)
    xyz = [theta * h + (1 - theta) * l for h, l in zip(hi_xyz, lo_xyz)]
    c1, c2 = _cuts(*xyz, g)
    lam = 0.5 * (lo + hi)
    return MaximinSolution(
        _to_alloc(*xyz),
        lam,
        min(c1, c2),
        abs(c1 - c2),
        c1,
        c2,
        binding_cut(c1, c2),
        math.exp(dual.tS),
        math.exp(dual.tR),
    )


def solve_df_maximin(
    ch: SubbandChannel,
    P_S: float,
    P_R: float,
    mode: str = "df",
    noise: str = "independent",
    coherent=True,
    iters: int = LAMBDA_ITERS,
) -> MaximinSolution:
    """Maximize ``min(c1, c2)`` over per-band powers and correlations.

    Parameters
    ----------
    ch : SubbandChannel
    P_S, P_R : float
        Average power budgets of source and relay.
    mode : {"df", "cutset"}
        Which broadcast cut to use.
    noise : {"independent", "degraded"}
        Noise model of the cut-set broadcast cut (ignored for ``"df"``).
    coherent : bool or array of bool
        Bands where source and relay may combine coherently.
    iters : int
        Bisection iterations on the cut weight.

    Returns
    -------
    MaximinSolution
    """
    if mode == "df":
        a1 = ch.a_SR
    elif mode == "cutset":
        a1 = cutset_gain(ch, noise)
    else:
        raise RelayError(f"unknown mode {mode!r}")
    mask = np.broadcast_to(np.asarray(coherent, dtype=bool), (ch.n,)).copy()
    g = _Gains(np.asarray(a1, float), ch.a_SD, ch.a_RD, mask)
    P_S, P_R = float(P_S), float(P_R)
    if P_S < 0 or P_R < 0:
        raise RelayError("power budgets must be nonnegative")
    if P_S == 0:
        return _zero_solution(ch.n)
    return _maximin(g, _DualSolver(g, P_S, P_R), iters)


def _zero_solution(n: int) -> MaximinSolution:
    zero = np.zeros(n)
    return MaximinSolution(PowerAllocation(zero, zero), 1.0, 0.0, 0.0, 0.0, 0.0, BROADCAST_CUT)


def solve_df_maximin_total(
    ch: SubbandChannel,
    P_t: float,
    mode: str = "df",
    noise: str = "independent",
    coherent=True,
    iters: int = LAMBDA_ITERS,
) -> MaximinSolution:
    """Like :func:`solve_df_maximin` with one budget on ``mean(P_S + P_R)``."""
    if mode not in ("df", "cutset"):
        raise RelayError(f"unknown mode {mode!r}")
    a1 = ch.a_SR if mode == "df" else cutset_gain(ch, noise)
    mask = np.broadcast_to(np.asarray(coherent, dtype=bool), (ch.n,)).copy()
    g = _Gains(np.asarray(a1, float), ch.a_SD, ch.a_RD, mask)
    if P_t < 0:
        raise RelayError("power budget must be nonnegative")
    if P_t == 0 or not np.any(g.a1 > 0):
        return _zero_solution(ch.n)
    return _maximin(g, _TotalDualSolver(g, float(P_t)), iters)


def solve_alpha_star(P_S: float, P_R: float, N_1: float, N_2: float, W: float = 1.0) -> float:
    """Correlation that equalizes the two cuts of a flat degraded relay channel.

    Solves ``alpha P_S / (N_1 W) = (P_S + P_R + 2 sqrt((1-alpha) P_S P_R)) / (N W)``
    with ``N = N_1 + N_2``; returns 1 when the broadcast cut is the smaller one
    already at ``alpha = 1``.
    """
    N = N_1 + N_2

    def f(a):
        return a * P_S / (N_1 * W) - (P_S + P_R + 2 * math.sqrt(max(1 - a, 0.0) * P_S * P_R)) / (N * W)

    if P_S <= 0 or f(1.0) <= 0:
        return 1.0
    return bisect_increasing(f, 0.0, 1.0, xtol=1e-12)


# modified decode-and-forward under a total power budget


@dataclass(frozen=True)
class WaterfillSolution:
    """Water-filling allocation for the per-band decode-and-forward bound.

    Attributes
    ----------
    P_S1 : numpy.ndarray
        Fresh source power per band.
    P_S2 : numpy.ndarray
        Source power sent coherently with the relay.
    P_2 : numpy.ndarray
        Total coherent power ``P_S2 + P_R``.
    nu_t : float
        Water level.
    rate : float
        Sum of per-band minima of the two cuts, averaged.
    """

    alloc: PowerAllocation
    P_S1: np.ndarray
    P_S2: np.ndarray
    P_2: np.ndarray
    nu_t: float
    total_used: float
    rate: float
    degraded_band: np.ndarray


def _waterfill_usable(ch: SubbandChannel) -> np.ndarray:
    """Bands whose breakpoint and slope are finite; subnormal gains count as dead."""
    a_SR, a_SD, a_RD = ch.a_SR, ch.a_SD, ch.a_RD
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        brk = 1.0 / a_SR
        split = np.maximum(a_SR - a_SD, 0.0) / (a_SD + a_RD) ** 2
        slope = 1.0 + np.maximum(a_SR - a_SD, 0.0) / (a_SD + a_RD)
    finite = np.isfinite(brk) & np.isfinite(slope) & np.isfinite(split)
    return (a_SR > 0) & (a_SD + a_RD > 0) & finite


def waterfill_branches(ch: SubbandChannel, nu: float):
    """Closed-form per-band split at water level ``nu``.

    Bands with ``a_SR < a_SD`` put all power into fresh source power.  The
    others add a coherent part split between source and relay in proportion
    to ``a_SD`` and ``a_RD``.  Bands with ``a_SR = 0``, or with
    ``a_SD + a_RD = 0``, receive nothing.

    Returns
    -------
    P_S1, P_S2, P_R, degraded : numpy.ndarray
    """
    usable = _waterfill_usable(ch)
    with np.errstate(divide="ignore", invalid="ignore"):
        P1 = np.where(usable, np.maximum(nu - 1.0 / np.where(usable, ch.a_SR, 1.0), 0.0), 0.0)
    return _waterfill_split(ch, P1)


def _waterfill_split(ch: SubbandChannel, P1: np.ndarray):
    """Coherent source and relay parts implied by the fresh source power ``P1``."""
    a_SR, a_SD, a_RD = ch.a_SR, ch.a_SD, ch.a_RD
    usable = _waterfill_usable(ch)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        degraded = (a_SR >= a_SD) & usable
        s = a_SD + a_RD
        k = np.where(degraded, (a_SR - a_SD) / np.where(s > 0, s * s, 1.0), 0.0)
    P_S2 = k * a_SD * P1
    P_R = k * a_RD * P1
    return P1, P_S2, P_R, degraded


def _waterfill_weights(ch: SubbandChannel):
    """Per-band slope ``dP_t/dnu`` and breakpoint ``1/a_SR`` of the water-filling total."""
    a_SR, a_SD, a_RD = ch.a_SR, ch.a_SD, ch.a_RD
    usable = _waterfill_usable(ch)
    degraded = (a_SR >= a_SD) & usable
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        slope = np.where(degraded, 1.0 + (a_SR - a_SD) / np.where(usable, a_SD + a_RD, 1.0), 1.0)
        brk = np.where(usable, 1.0 / np.where(usable, a_SR, 1.0), np.inf)
    return np.where(usable, slope, 0.0), brk


def solve_df_waterfill(ch: SubbandChannel, P_t: float) -> WaterfillSolution:
    """Water-filling for the per-band decode-and-forward bound under a total budget.

    The total ``(1/n) sum (P_S1 + P_S2 + P_R)`` is piecewise linear in the water
    level, so the level is found exactly from the sorted breakpoints.
    """
    if P_t < 0:
        raise RelayError("total power must be nonnegative")
    n = ch.n
    slope, brk = _waterfill_weights(ch)
    order = np.argsort(brk)
    b_sorted = brk[order]
    s_sorted = slope[order]
    # levels are measured from the lowest breakpoint to avoid cancellation
    # when all breakpoints are large
    base = float(b_sorted[0]) if np.isfinite(b_sorted[0]) else 0.0
    excess = 0.0
    P1 = np.zeros(n)
    active = np.zeros(n, dtype=bool)
    if P_t > 0 and np.isfinite(b_sorted[0]):
        target = n * P_t
        shifted = b_sorted - base
        cum_s = 0.0
        cum_sb = 0.0
        seg = 0
        for k in range(n):
            if not np.isfinite(shifted[k]):
                break
            seg = k
            cum_s += s_sorted[k]
            cum_sb += s_sorted[k] * shifted[k]
            nxt = shifted[k + 1] if k + 1 < n else np.inf
            if (target + cum_sb) / cum_s <= nxt:
                break
        # the bands of the final segment are active by construction; powers are
        # measured from that segment's breakpoint, since a very steep band can
        # round the level itself below its own breakpoint
        idx = order[: seg + 1]
        head = shifted[seg] - shifted[: seg + 1]
        leftover = max(target - float(np.sum(s_sorted[: seg + 1] * head)), 0.0)
        P1[idx] = head + leftover / cum_s
        active[idx] = s_sorted[: seg + 1] > 0
        excess = shifted[seg] + leftover / cum_s
    nu = base + excess
    # refinement: with very steep slopes the powers above still lose part of
    # the budget to rounding, so the residual is spread over the active bands
    for _ in range(2):
        if P_t == 0 or not active.any():
            break
        residual = n * P_t - float(np.sum(slope * P1))
        if abs(residual) <= RTOL_BUDGET * n * P_t:
            break
        P1 = np.where(active, np.maximum(P1 + residual / np.sum(slope[active]), 0.0), 0.0)
    P1, P_S2, P_R, degraded = _waterfill_split(ch, P1)
    used = float(np.mean(P1 + P_S2 + P_R))
    if used > P_t > 0:
        scale = P_t / used
        P1, P_S2, P_R = P1 * scale, P_S2 * scale, P_R * scale
        used = float(np.mean(P1 + P_S2 + P_R))
    P_S = P1 + P_S2
    with np.errstate(invalid="ignore", divide="ignore"):
        alpha = np.where(P_S > 0, P1 / np.where(P_S > 0, P_S, 1.0), 1.0)
    alloc = PowerAllocation(P_S, P_R, alpha)
    c1_band = 0.5 * np.log1p(ch.a_SR * P1)
    P2_total = P_S2 + P_R
    return WaterfillSolution(
        alloc, P1, P_S2, P2_total, float(nu), used, float(np.mean(c1_band)), degraded
    )


def per_band_cuts(ch: SubbandChannel, alloc: PowerAllocation):
    """Per-band broadcast and destination cut terms ``0.5 log(1 + .)``."""
    c1 = 0.5 * np.log1p(alloc.alpha * ch.a_SR * alloc.P_S)
    cross = 2 * np.sqrt((1 - alloc.alpha) * ch.a_SD * ch.a_RD * alloc.P_S * alloc.P_R)
    c2 = 0.5 * np.log1p(ch.a_SD * alloc.P_S + ch.a_RD * alloc.P_R + cross)
    return c1, c2


def _level(inv, target):
    """Water level ``nu`` with ``sum (nu - inv_i)^+ = target`` (``inv`` may hold inf)."""
    srt = np.sort(inv)
    finite = np.isfinite(srt)
    m = int(finite.sum())
    if m == 0:
        return None
    srt = srt[:m]
    levels = (target + np.cumsum(srt)) / np.arange(1, m + 1)
    nxt = np.append(srt[1:], np.inf)
    k = int(np.argmax(levels <= nxt))
    return float(levels[k])


def single_cut_waterfill(gain, P: float):
    """Classic water-filling ``P_i = (nu - 1/gain_i)^+`` with mean ``P``.

    Returns
    -------
    powers : numpy.ndarray
    rate : float
        ``(1/2n) sum log(1 + gain_i P_i)``.
    """
    gain = np.asarray(gain, dtype=float)
    n = gain.size
    if P <= 0 or not np.any(gain > 0):
        return np.zeros(n), 0.0
    with np.errstate(divide="ignore"):
        inv = np.where(gain > 0, 1.0 / gain, np.inf)
    nu = _level(inv, n * P)
    powers = np.where(np.isfinite(inv), np.maximum(nu - inv, 0.0), 0.0)
    return powers, float(0.5 * np.mean(np.log1p(gain * powers)))


def direct_waterfill_rate(ch: SubbandChannel, P_t: float) -> float:
    """Point-to-point rate over the source-destination link alone."""
    return single_cut_waterfill(ch.a_SD, P_t)[1]


def two_hop_rate(ch: SubbandChannel, P_t: float) -> tuple[float, float]:
    """Best two-hop rate when source and relay share a total budget.

    Returns
    -------
    rate : float
    P_source : float
        Share of the budget given to the source (the relay gets the rest).
    """
    if P_t <= 0:
        return 0.0, 0.0

    def diff(p):
        return single_cut_waterfill(ch.a_SR, p)[1] - single_cut_waterfill(ch.a_RD, P_t - p)[1]

    p = bisect_increasing(diff, 0.0, P_t, xtol=XTOL * max(P_t, 1.0))
    r = min(single_cut_waterfill(ch.a_SR, p)[1], single_cut_waterfill(ch.a_RD, P_t - p)[1])
    return r, p


# compress-and-forward


def cf_relay_power(lam1, lam3, a_SD, a_RD, P_S):
    """Relay power from the stationarity conditions: water-filling on ``a_RD``.

    ``P_R = [lam1 / (2 lam3) - (1 + a_SD P_S) / a_RD]^+``; zero where ``a_RD = 0``.
    """
    a_RD = np.asarray(a_RD, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = lam1 / (2.0 * lam3) - (1.0 + np.asarray(a_SD) * P_S) / np.where(a_RD > 0, a_RD, 1.0)
    return np.where(a_RD > 0, np.maximum(v, 0.0), 0.0)


def cf_q_star(lam1, a_SR, a_SD, P_S):
    """Backward test-channel variance from the stationarity conditions.

    ``q = [lam1 / (1 - lam1) (1 + (1 + a_SD P_S) / (a_SR P_S))]^+``, capped at
    ``(1 + (a_SR + a_SD) P_S) / (1 + a_SD P_S)``, the value of an infinitely
    coarse quantizer (the band is not compressed at all).
    """
    a_SR = np.asarray(a_SR, dtype=float)
    a_SD = np.asarray(a_SD, dtype=float)
    P_S = np.asarray(P_S, dtype=float)
    s = a_SR * P_S
    b = 1.0 + a_SD * P_S
    cap = (b + s) / b
    with np.errstate(divide="ignore", invalid="ignore"):
        q = lam1 / (1.0 - lam1) * (1.0 + b / s)
    q = np.where(s > 0, np.maximum(q, 0.0), np.inf)
    return np.minimum(q, cap)


def cf_source_gradient(lam1, u, a_SR, a_SD, a_RD, P_S, P_R):
    """Derivative of the CF Lagrangian with respect to each band's source power.

    Uses ``u = 1 / (1 + nhat)`` as the compression variable, for which the
    quantization constraint ``u >= 0`` does not depend on the powers:
    ``0.5 (1 - lam1)(a_SD + a_SR u) / (b + s u) + 0.5 lam1 a_SD / (b + a_RD P_R)``.
    """
    b = 1.0 + a_SD * P_S
    s = a_SR * P_S
    return 0.5 * (1.0 - lam1) * (a_SD + a_SR * u) / (b + s * u) + 0.5 * lam1 * a_SD / (
        b + a_RD * P_R
    )


def optimal_compression(b, s, mac, tol=1e-15):
    """Best compression for fixed powers.

    Maximizes ``sum log(b + s u)`` subject to
    ``sum [log(1 - u) - log(b + s u) + log(mac)] >= 0`` over ``u`` in ``[0, 1)``.
    Stationarity gives ``u = [1 - lam1 (1 + b/s)]^+`` and ``lam1`` is found by
    bisection so that the constraint is tight.

    Returns
    -------
    u : numpy.ndarray
    lam1 : float
    """
    b = np.asarray(b, dtype=float)
    s = np.asarray(s, dtype=float)
    mac = np.asarray(mac, dtype=float)
    headroom = float(np.sum(np.log(mac) - np.log(b)))
    if headroom <= 0:
        return np.zeros_like(b), 1.0
    with np.errstate(divide="ignore"):
        k = np.where(s > 0, 1.0 + b / np.where(s > 0, s, 1.0), np.inf)

    def u_of(lam):
        with np.errstate(invalid="ignore"):
            return np.where(np.isfinite(k), np.clip(1.0 - lam * k, 0.0, 1.0), 0.0)

    def h(lam):
        u = u_of(lam)
        with np.errstate(divide="ignore"):
            return float(np.sum(np.log1p(-u) - np.log(b + s * u) + np.log(mac)))

    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    # hi is the feasible side of the bracket
    return u_of(hi), hi


def relay_waterfill(a_RD, b, P_R: float):
    """Relay water-filling ``P_R = [nu - b / a_RD]^+`` with mean ``P_R``.

    Returns the powers and the water level ``nu``.
    """
    a_RD = np.asarray(a_RD, dtype=float)
    n = a_RD.size
    if P_R <= 0 or not np.any(a_RD > 0):
        return np.zeros(n), 0.0
    with np.errstate(divide="ignore"):
        inv = np.where(a_RD > 0, b / np.where(a_RD > 0, a_RD, 1.0), np.inf)
    nu = _level(inv, n * P_R)
    return np.where(np.isfinite(inv), np.maximum(nu - inv, 0.0), 0.0), float(nu)


def project_simplex(v, total: float):
    """Euclidean projection of ``v`` onto ``{x >= 0, sum x = total}``."""
    v = np.asarray(v, dtype=float)
    if total <= 0:
        return np.zeros_like(v)
    srt = np.sort(v)[::-1]
    css = np.cumsum(srt) - total
    idx = np.arange(1, v.size + 1)
    cond = srt - css / idx > 0
    rho = idx[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class CfKktSolution:
    """Stationary point of the compress-and-forward allocation problem.

    Multipliers follow the Lagrangian ``sum 0.5 log(.) + (lam1/2) * constraint
    - lam2 sum P_S - lam3 sum P_R`` so that the relay power and the backward
    variance take the forms of :func:`cf_relay_power` and :func:`cf_q_star`.
    """

    alloc: PowerAllocation
    comp: CompressionProfile
    lam1: float
    lam2: float
    lam3: float
    rate: float
    slack: float
    residual: float
    q: np.ndarray
    history: tuple = field(default=(), repr=False)


def _cf_inner(ch: SubbandChannel, P_S_vec, P_R: float):
    """Relay powers, compression and multipliers that are optimal for fixed source powers."""
    b = 1.0 + ch.a_SD * P_S_vec
    s = ch.a_SR * P_S_vec
    P_R_vec, nu = relay_waterfill(ch.a_RD, b, P_R)
    mac = b + ch.a_RD * P_R_vec
    u, lam1 = optimal_compression(b, s, mac)
    rate, _ = _compression_terms(b, s, mac, u)
    return P_R_vec, nu, u, lam1, float(np.mean(rate))


def _cf_kkt_residual(grad, P, total):
    """Largest violation of the simplex KKT conditions for maximization."""
    active = P > 1e-12 * max(total, 1.0) / P.size
    if not np.any(active):
        return float(np.max(grad)) if grad.size else 0.0, 0.0
    lam2 = float(np.mean(grad[active]))
    res_active = np.abs(grad[active] - lam2)
    res_inactive = np.maximum(grad[~active] - lam2, 0.0)
    res = max(float(res_active.max(initial=0.0)), float(res_inactive.max(initial=0.0)))
    return res / max(abs(lam2), 1e-300), lam2


def _cf_ascent(ch: SubbandChannel, P_S: float, P_R: float, x0, max_iter=2000, tol=1e-9):
    """Projected gradient ascent over the source power simplex."""
    n = ch.n
    total = n * P_S
    x = project_simplex(x0, total)
    P_Rv, nu, u, lam1, val = _cf_inner(ch, x, P_R)
    step = P_S / max(n, 1)
    history = []
    for it in range(max_iter):
        g = cf_source_gradient(lam1, u, ch.a_SR, ch.a_SD, ch.a_RD, x, P_Rv)
        res, _ = _cf_kkt_residual(g, x, total)
        history.append(res)
        if res <= tol:
            break
        improved = False
        for _ in range(60):
            y = project_simplex(x + step * g * n, total)
            P_Ry, nuy, uy, lam1y, valy = _cf_inner(ch, y, P_R)
            if valy >= val + 1e-4 * float(np.dot(g, y - x)) / n and valy >= val:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        moved = float(np.max(np.abs(y - x)))
        x, P_Rv, nu, u, lam1, val = y, P_Ry, nuy, uy, lam1y, valy
        step *= 2.0
        if moved <= 1e-15 * max(P_S, 1.0):
            break
    return x, P_Rv, nu, u, lam1, val, tuple(history)


def solve_cf_kkt(
    ch: SubbandChannel, P_S: float, P_R: float, starts: int = CF_STARTS, seed: int = 0, max_iter=2000
) -> CfKktSolution:
    """Search for the best compress-and-forward allocation.

    For fixed source powers the problem in relay powers and compression is
    convex: relay power water-fills on ``a_RD`` and compression has a closed
    form up to one scalar multiplier.  The remaining non-convex search over
    source powers runs projected gradient ascent from several deterministic
    starts and keeps the best point.  The result is a stationary point, not
    a certified global optimum.
    """
    if P_S <= 0:
        raise RelayError("compress-and-forward needs a positive source budget")
    if P_R < 0:
        raise RelayError("relay budget must be nonnegative")
    n = ch.n
    total = n * P_S
    starts_list = [np.full(n, P_S)]
    starts_list.append(single_cut_waterfill(ch.a_SD, P_S)[0])
    starts_list.append(single_cut_waterfill(ch.a_SR + ch.a_SD, P_S)[0])
    mod_alloc, _ = solve_cf_modified(ch, P_S, P_R)
    starts_list.append(mod_alloc.P_S)
    rng = np.random.default_rng(np.random.SeedSequence([seed, n]))
    while len(starts_list) < max(starts, 1):
        starts_list.append(rng.dirichlet(np.ones(n)) * total)
    best = None
    for idx, x0 in enumerate(starts_list[: max(starts, 1)]):
        x, P_Rv, nu, u, lam1, val, hist = _cf_ascent(ch, P_S, P_R, x0, max_iter=max_iter)
        if best is None or val > best[5] + 1e-15:
            best = (x, P_Rv, nu, u, lam1, val, hist, idx)
    x, P_Rv, nu, u, lam1, val, hist, _ = best
    alloc = PowerAllocation(x, P_Rv)
    with np.errstate(divide="ignore"):
        nhat = np.where(u > 0, (1.0 - u) / np.where(u > 0, u, 1.0), np.inf) * ch.N_R
    comp = CompressionProfile(nhat)
    rate, slack = cf_rate(ch, alloc, comp)
    g = cf_source_gradient(lam1, u, ch.a_SR, ch.a_SD, ch.a_RD, x, P_Rv)
    res, lam2 = _cf_kkt_residual(g, x, total)
    lam3 = lam1 / (2.0 * nu) if nu > 0 else 0.0
    q = compression_q(ch, alloc, comp)
    return CfKktSolution(alloc, comp, lam1, lam2, lam3, rate, slack, res, q, hist)


def _cf_modified_value_grad(ch: SubbandChannel, P, Q):
    a_SR, a_SD, a_RD = ch.a_SR, ch.a_SD, ch.a_RD
    r = a_RD * Q
    A = a_SD + a_SR
    den = r + 1.0 + A * P
    t = a_SR * P * r / den
    D = 1.0 + a_SD * P + t
    dtdP = a_SR * r * (r + 1.0) / den**2
    dtdr = a_SR * P * (1.0 + A * P) / den**2
    val = 0.5 * np.log(D)
    return float(np.mean(val)), 0.5 * (a_SD + dtdP) / D, 0.5 * a_RD * dtdr / D


def solve_cf_modified(
    ch: SubbandChannel, P_S: float, P_R: float, max_iter: int = 5000, tol: float = 1e-10
) -> tuple[PowerAllocation, float]:
    """Maximize the per-band-constrained compress-and-forward rate.

    Projected gradient ascent over both power simplices with backtracking.
    """
    n = ch.n
    if P_S <= 0:
        return PowerAllocation(np.zeros(n), np.full(n, max(P_R, 0.0))), 0.0
    tS, tR = n * P_S, n * max(P_R, 0.0)
    P = np.full(n, P_S)
    Q = np.full(n, max(P_R, 0.0))
    val, gP, gQ = _cf_modified_value_grad(ch, P, Q)
    step = 1.0
    for _ in range(max_iter):
        improved = False
        for _ in range(60):
            P2 = project_simplex(P + step * gP, tS)
            Q2 = project_simplex(Q + step * gQ, tR) if tR > 0 else Q
            val2, gP2, gQ2 = _cf_modified_value_grad(ch, P2, Q2)
            if val2 >= val:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        moved = max(float(np.max(np.abs(P2 - P))), float(np.max(np.abs(Q2 - Q))))
        gain = val2 - val
        P, Q, val, gP, gQ = P2, Q2, val2, gP2, gQ2
        step *= 2.0
        if gain <= tol * 1e-3 and moved <= tol * max(P_S, P_R, 1.0):
            break
    alloc = PowerAllocation(P, Q)
    return alloc, cf_modified_rate(ch, alloc)


# symbol-asynchronous channel with flat power spectra


def _alpha_response(lam, k_a, m0, m1, m2):
    """Per-band maximizer over ``alpha`` in ``[0, 1]`` of
    ``lam log(1 + k_a alpha) + (1 - lam) log(1 + m0 + m1 sqrt(1 - alpha) + m2 alpha)``.

    Both terms are concave in ``alpha`` (``m1 >= 0``), so the derivative is
    decreasing and is bisected on all bands at once.
    """

    def deriv(a):
        root = np.sqrt(np.maximum(1.0 - a, 1e-300))
        inner = 1.0 + m0 + m1 * np.sqrt(np.maximum(1.0 - a, 0.0)) + m2 * a
        return lam * k_a / (1.0 + k_a * a) + (1.0 - lam) * (m2 - 0.5 * m1 / root) / inner

    lo = np.zeros_like(k_a)
    hi = np.ones_like(k_a)
    d_hi = deriv(np.ones_like(k_a) * (1.0 - 1e-15))
    d_lo = deriv(lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        pos = deriv(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    a = 0.5 * (lo + hi)
    a = np.where(d_hi >= 0, 1.0, a)
    a = np.where(d_lo <= 0, 0.0, a)
    return a


@dataclass(frozen=True)
class AsynchSolution:
    alloc: PowerAllocation
    rate: float
    c1: float
    c2: float
    lambda_star: float
    comp: CompressionProfile | None = None
    slack: float = math.nan


def solve_asynch_maximin(
    prof: AsynchronyProfile, P_S: float, P_R: float, n: int, mode: str = "df", iters: int = LAMBDA_ITERS
) -> AsynchSolution:
    """Maximin over per-band correlation with flat power spectra.

    Gains and noises of the asynchronous model are white, so only the
    correlation spectrum varies across bands and the powers are held flat.
    """
    terms = asynch_df_terms if mode == "df" else asynch_cutset_terms
    if mode == "df":
        k_a = prof.g_SR * P_S / prof.sigma_R2
    elif mode == "cutset":
        k_a = (prof.g_SR / prof.sigma_R2 + prof.g_SD / prof.sigma_D2) * P_S
    else:
        raise RelayError(f"unknown mode {mode!r}")
    d = prof.correlation_spectrum(n)
    rho, d2 = np.abs(d.real), np.abs(d) ** 2
    pS = prof.g_SD * P_S / prof.sigma_D2
    pR = prof.g_RD * P_R / prof.sigma_D2
    k_a = np.full(n, k_a)
    m0 = np.full(n, pS + pR)
    m1 = 2.0 * np.sqrt(pS * pR) * rho
    m2 = pS * pR * (1.0 - d2)

    def alloc_for(alpha):
        return PowerAllocation(np.full(n, float(P_S)), np.full(n, float(P_R)), alpha)

    def cuts(alpha):
        return terms(prof, alloc_for(alpha))

    a_hi = _alpha_response(1.0, k_a, m0, m1, m2)
    c1, c2 = cuts(a_hi)
    if c1 <= c2:
        return AsynchSolution(alloc_for(a_hi), c1, c1, c2, 1.0)
    a_lo = _alpha_response(0.0, k_a, m0, m1, m2)
    d1, d2_ = cuts(a_lo)
    if d1 >= d2_:
        return AsynchSolution(alloc_for(a_lo), d2_, d1, d2_, 0.0)
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        a = _alpha_response(mid, k_a, m0, m1, m2)
        m1c, m2c = cuts(a)
        if m1c < m2c:
            lo, a_lo = mid, a
        else:
            hi, a_hi = mid, a
        if hi - lo <= 1e-15:
            break

    def diff(theta):
        a, b = cuts(theta * a_hi + (1 - theta) * a_lo)
        return a - b

    theta = bisect_increasing(diff, 0.0, 1.0, xtol=1e-15)
    alpha = theta * a_hi + (1 - theta) * a_lo
    c1, c2 = cuts(alpha)
    return AsynchSolution(alloc_for(alpha), min(c1, c2), c1, c2, 0.5 * (lo + hi))


def solve_asynch_cf(prof: AsynchronyProfile, P_S: float, P_R: float, n: int) -> AsynchSolution:
    """Best compression profile for flat powers on the asynchronous channel."""
    alloc = PowerAllocation.uniform(n, P_S, P_R)
    b, s, mac = asynch_cf_parts(prof, alloc)
    u, lam1 = optimal_compression(b, s, mac)
    with np.errstate(divide="ignore"):
        nhat = np.where(u > 0, (1.0 - u) / np.where(u > 0, u, 1.0), np.inf) * prof.sigma_R2
    comp = CompressionProfile(nhat)
    rate, slack = _compression_terms(b, s, mac, u)
    return AsynchSolution(alloc, float(np.mean(rate)), math.nan, math.nan, lam1, comp, float(np.sum(slack)))
