"""Channel constructors for the example scenarios.

Ideal lowpass relays with equal or unequal link bandwidths, the two-band
permutation experiment, the underwater acoustic channel (absorption, ambient
noise and Rayleigh taps) and the symbol-asynchronous relay geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .bounds import AsynchronyProfile, PowerAllocation, asynch_cf_rate, asynch_cutset_rate, asynch_df_rate
from .circulant import SubbandChannel
from .errors import RelayError
from .optimizers import solve_alpha_star, solve_df_maximin

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f, lo: float, hi: float, tol: float = 1e-10, maxiter: int = 200):
    """Maximize a unimodal scalar function on ``[lo, hi]``.

    Returns ``(argmax, max)``; the endpoints are compared too, so a maximum
    on the boundary is returned exactly.
    """
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    best = max([(fc, c), (fd, d), (f(lo), lo), (f(hi), hi)])
    return best[1], best[0]


# ideal lowpass relays


@dataclass(frozen=True)
class LowpassRelaySpec:
    """Relay whose links are ideal lowpass filters with white noise.

    ``N_1`` is the relay noise PSD and ``N_1 + N_2`` the destination noise PSD
    (physically degraded).  The link bandwidths default to ``W``.
    """

    W: float
    N_1: float
    N_2: float
    P_S: float
    P_R: float
    W_SR: float | None = None
    W_SD: float | None = None
    W_RD: float | None = None

    def __post_init__(self):
        for name in ("W", "N_1"):
            if not getattr(self, name) > 0:
                raise RelayError(f"{name} must be positive")
        for name in ("N_2", "P_S", "P_R"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise RelayError(f"{name} must be nonnegative and finite")
        w_sd, w_sr, w_rd = self.bandwidths
        if min(w_sd, w_sr, w_rd) < 0:
            raise RelayError("bandwidths must be nonnegative")
        if w_sd > w_sr or w_sd > w_rd:
            raise RelayError("W_SD must not exceed W_SR or W_RD")

    @property
    def N(self) -> float:
        return self.N_1 + self.N_2

    @property
    def bandwidths(self) -> tuple[float, float, float]:
        """``(W_SD, W_SR, W_RD)`` with defaults filled in."""
        pick = lambda v: self.W if v is None else v  # noqa: E731
        return pick(self.W_SD), pick(self.W_SR), pick(self.W_RD)


def _C(x: float) -> float:
    return 0.5 * math.log1p(x)


def _lowpass_relay(W: float, N_1: float, N: float, P_S: float, P_R: float) -> tuple[float, float]:
    if W <= 0 or P_S <= 0:
        return 0.0, 1.0
    alpha = solve_alpha_star(P_S, P_R, N_1, N - N_1, W)
    return W * _C(alpha * P_S / (N_1 * W)), alpha


def equal_bandwidth_capacity(spec: LowpassRelaySpec) -> tuple[float, float]:
    """Capacity of the degraded lowpass relay, in nats/s, and its correlation.

    Returns
    -------
    capacity : float
        ``W * 0.5 log(1 + alpha* P_S / (N_1 W))``.
    alpha_star : float
        1 when ``P_S / N_1 <= P_R / N_2``, else the root equalizing both cuts.
    """
    return _lowpass_relay(spec.W, spec.N_1, spec.N, spec.P_S, spec.P_R)


def lowpass_subband_channel(spec: LowpassRelaySpec, n: int) -> SubbandChannel:
    """Flat ``n``-band channel whose rate times ``W`` gives the lowpass capacity."""
    W = spec.W
    return SubbandChannel(
        np.full(n, 1.0 / (spec.N_1 * W)), np.full(n, 1.0 / (spec.N * W)), np.full(n, 1.0 / (spec.N * W))
    )


def _two_hop(W_1: float, W_2: float, N_1: float, N: float, P_S: float, P_R: float) -> float:
    hop1 = W_1 * _C(P_S / (N_1 * W_1)) if W_1 > 0 else 0.0
    hop2 = W_2 * _C(P_R / (N * W_2)) if W_2 > 0 else 0.0
    return min(hop1, hop2)


def unequal_bandwidth_terms(spec: LowpassRelaySpec, P_S1: float, P_R1: float) -> float:
    """Capacity expression for a given split of both budgets."""
    w_sd, w_sr, w_rd = spec.bandwidths
    relay, _ = _lowpass_relay(w_sd, spec.N_1, spec.N, P_S1, P_R1)
    hop = _two_hop(w_sr - w_sd, w_rd - w_sd, spec.N_1, spec.N, spec.P_S - P_S1, spec.P_R - P_R1)
    return relay + hop


def unequal_bandwidth_capacity(
    spec: LowpassRelaySpec, tol: float = 1e-10
) -> tuple[float, tuple[float, float, float, float]]:
    """Capacity with unequal link bandwidths.

    The network splits into an equal-bandwidth relay over ``W_SD`` and a
    two-hop link over the excess bandwidths.  Both power splits are found by
    nested golden-section search.

    Returns
    -------
    capacity : float
        nats/s.
    split : tuple
        ``(P_S1, P_S2, P_R1, P_R2)`` with index 1 on the relay part.
    """
    P_S, P_R = spec.P_S, spec.P_R

    def inner(ps1):
        return golden_max(lambda pr1: unequal_bandwidth_terms(spec, ps1, pr1), 0.0, P_R, tol)

    ps1, _ = golden_max(lambda v: inner(v)[1], 0.0, P_S, tol)
    pr1, cap = inner(ps1)
    return cap, (ps1, P_S - ps1, pr1, P_R - pr1)


# two-band permutation experiment

FIG5_GAINS = {
    "a_SR": np.array([1.5, 1.8]),
    "a_SD": np.array([0.7, 0.5]),
    "a_RD": np.array([0.8, 1.0]),
}


def permutation_experiment(
    a_SR, a_SD, a_RD, P_S: float, P_R: float, perm=(0, 1)
) -> float:
    """DF rate when the relay re-sends band ``i``'s decoded stream on band ``perm[i]``.

    The broadcast cut is unchanged.  On the destination cut the relay and the
    source combine coherently only in bands mapped to themselves; elsewhere
    their powers add.
    """
    perm = np.asarray(perm)
    n = len(perm)
    if sorted(perm.tolist()) != list(range(n)):
        raise RelayError(f"{perm.tolist()} is not a permutation")
    ch = SubbandChannel(np.asarray(a_SR, float), np.asarray(a_SD, float), np.asarray(a_RD, float))
    if ch.n != n:
        raise RelayError("permutation length differs from the band count")
    return solve_df_maximin(ch, P_S, P_R, coherent=perm == np.arange(n)).rate


# underwater acoustic channel


def thorp_absorption(f):
    """Absorption in dB/km for frequency ``f`` in kHz."""
    f = np.asarray(f, dtype=float)
    f2 = f * f
    return 0.11 * f2 / (1 + f2) + 44 * f2 / (4100 + f2) + 2.75e-4 * f2 + 0.003


def path_loss(d, f, k: float = 1.5, A_0: float = 1.0):
    """Linear path gain ``1 / A(d, f)`` with ``A = A_0 d^k a(f)^d``; ``d`` in km."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise RelayError("distance must be positive")
    log10_a = thorp_absorption(f) / 10.0
    return 1.0 / (A_0 * d**k * 10.0 ** (d * log10_a))


def noise_components_db(f, s: float, w: float):
    """Turbulence, shipping, wave and thermal noise PSDs in dB (``f`` in kHz)."""
    f = np.asarray(f, dtype=float)
    lf = np.log10(f)
    turb = 17 - 30 * lf
    ship = 40 + 20 * (s - 0.5) + 26 * lf - 60 * np.log10(f + 0.03)
    wave = 50 + 7.5 * math.sqrt(w) + 20 * lf - 40 * np.log10(f + 0.4)
    therm = -15 + 20 * lf
    return turb, ship, wave, therm


def ambient_noise_psd(f, s: float = 0.0, w: float = 0.0):
    """Total ambient noise PSD, linear, summing the four components."""
    if not 0 <= s <= 1:
        raise RelayError("shipping activity must lie in [0, 1]")
    if w < 0:
        raise RelayError("wind speed must be nonnegative")
    return sum(10.0 ** (c / 10.0) for c in noise_components_db(f, s, w))


def thermal_wave_crossover(w: float, lo: float = 1.0, hi: float = 1e4) -> float:
    """Frequency (kHz) above which thermal noise exceeds wave noise."""

    def diff(f):
        _, _, wave, therm = noise_components_db(f, 0.0, w)
        return float(therm - wave)

    a, b = math.log(lo), math.log(hi)
    if diff(lo) >= 0:
        return lo
    for _ in range(200):
        m = 0.5 * (a + b)
        if diff(math.exp(m)) < 0:
            a = m
        else:
            b = m
    return math.exp(0.5 * (a + b))


@dataclass(frozen=True)
class UnderwaterSpec:
    """Relay placed at horizontal offset ``a`` and height ``h`` between source and destination.

    Distances are in km, frequencies in kHz.  ``coherence`` is the coherence
    bandwidth of each link ``(SR, SD, RD)``; the tap count of a link is
    ``ceil(W / coherence)``.
    """

    a: float = 0.5
    h: float = 0.25
    d_SD: float = 1.0
    f_c: float = 27.0
    W: float = 10.0
    k: float = 1.5
    s: float = 0.0
    w: float = 10.0
    coherence: tuple[float, float, float] = (3.33, 5.0, 3.33)
    A_0: float = 1.0
    n: int = 64
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.d_SD > 0 and self.h >= 0 and self.W > 0 and self.f_c > self.W / 2):
            raise RelayError("invalid underwater geometry or band")
        if min(self.distances) <= 0:
            raise RelayError("distances must be positive")
        if min(self.coherence) <= 0:
            raise RelayError("coherence bandwidths must be positive")
        if max(self.tap_counts) >= self.n:
            raise RelayError("band count must exceed the channel memory")
        if not 0 <= self.s <= 1 or self.w < 0:
            raise RelayError("invalid noise parameters")

    @property
    def distances(self) -> tuple[float, float, float]:
        """``(d_SR, d_SD, d_RD)`` in km."""
        return (
            math.hypot(self.a, self.h),
            self.d_SD,
            math.hypot(self.d_SD - self.a, self.h),
        )

    @property
    def tap_counts(self) -> tuple[int, int, int]:
        # small slack so that 10 / 3.33 counts as three taps
        return tuple(max(1, math.ceil(self.W / c - 0.01)) for c in self.coherence)

    def band_frequencies(self) -> np.ndarray:
        """Absolute band-center frequencies in kHz, in DFT order."""
        return self.f_c + self.W * np.fft.fftfreq(self.n)


def rayleigh_taps(L: int, rng: np.random.Generator) -> np.ndarray:
    """``L`` i.i.d. circular Gaussian taps with variances summing to one."""
    return (rng.standard_normal(L) + 1j * rng.standard_normal(L)) * math.sqrt(0.5 / L)


def underwater_draw(spec: UnderwaterSpec, draw: int) -> SubbandChannel:
    """One fading realization, seeded by ``(rng_seed, draw)``."""
    rng = np.random.default_rng(np.random.SeedSequence([spec.rng_seed, draw]))
    f = spec.band_frequencies()
    noise = ambient_noise_psd(f, spec.s, spec.w)
    gains = []
    responses = []
    for d, L in zip(spec.distances, spec.tap_counts):
        taps = rayleigh_taps(L, rng)
        H = np.fft.fft(taps, spec.n) * np.sqrt(path_loss(d, f, spec.k, spec.A_0))
        responses.append(H)
        gains.append(np.abs(H) ** 2 / noise)
    H_SR, H_SD, H_RD = responses
    return SubbandChannel(gains[0], gains[1], gains[2], H_SR, H_SD, H_RD, noise, noise)


def underwater_channel(spec: UnderwaterSpec, draws: int | None = None) -> Iterator[SubbandChannel]:
    """Stream of fading realizations; endless when ``draws`` is None."""
    i = 0
    while draws is None or i < draws:
        yield underwater_draw(spec, i)
        i += 1


# symbol-asynchronous relay


@dataclass(frozen=True)
class AsynchGeometry:
    """Relay on the line between source and destination, at fraction ``d`` of the way.

    Delays are proportional to distance, so the relay's symbols lag the
    source's by ``T d`` at the destination.
    """

    d: float
    alpha_att: float = 2.0
    T: float = 1.0
    waveform: str = "rectangular"

    def __post_init__(self):
        if not 0 < self.d < 1:
            raise RelayError("relay position must lie in (0, 1)")
        if self.waveform != "rectangular":
            raise RelayError(f"unsupported waveform {self.waveform!r}")


def asynch_profile(geo: AsynchGeometry, sigma_R2: float = 1.0, sigma_D2: float = 1.0) -> AsynchronyProfile:
    """Correlations and power gains for rectangular pulses.

    Unit-energy rectangular pulses offset by ``T d`` overlap by ``1 - d`` with
    the current symbol and ``d`` with the next one.  Amplitude gains
    ``d^(-alpha/2)`` and ``(1-d)^(-alpha/2)`` enter as power gains.
    """
    d = geo.d
    return AsynchronyProfile(
        rho_RS=1.0 - d,
        rho_SR=d,
        sigma_R2=sigma_R2,
        sigma_D2=sigma_D2,
        g_SR=d ** (-geo.alpha_att),
        g_SD=1.0,
        g_RD=(1.0 - d) ** (-geo.alpha_att),
    )


def worst_case_asynch_rate(
    prof: AsynchronyProfile,
    alloc: PowerAllocation,
    segment: tuple[float, float] = (0.0, 1.0),
    bound: str = "df",
    comp=None,
    scan: int = 201,
    tol: float = 1e-8,
) -> tuple[float, float]:
    """Smallest rate over correlations ``rho_SR = t``, ``rho_RS = 1 - t``, ``t`` in ``segment``.

    A uniform scan locates the worst region and golden-section search refines
    it to ``tol``.

    Returns
    -------
    rate : float
    t : float
        Minimizing ``rho_SR``.
    """
    lo, hi = segment
    if not 0 <= lo <= hi <= 1:
        raise RelayError("segment must lie in [0, 1]")

    def rate(t):
        p = AsynchronyProfile(1.0 - t, t, prof.sigma_R2, prof.sigma_D2, prof.g_SR, prof.g_SD, prof.g_RD)
        if bound == "df":
            return asynch_df_rate(p, alloc)
        if bound == "cutset":
            return asynch_cutset_rate(p, alloc)
        if bound == "cf":
            return asynch_cf_rate(p, alloc, comp)[0]
        raise RelayError(f"unknown bound {bound!r}")

    if hi - lo <= tol:
        return rate(lo), lo
    ts = np.linspace(lo, hi, scan)
    vals = np.array([rate(t) for t in ts])
    j = int(np.argmin(vals))
    a, b = ts[max(j - 1, 0)], ts[min(j + 1, scan - 1)]
    t, neg = golden_max(lambda t: -rate(t), a, b, tol)
    if -neg <= vals[j]:
        return -neg, t
    return float(vals[j]), float(ts[j])
