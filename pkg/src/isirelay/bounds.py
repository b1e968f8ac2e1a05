"""Per-band rate expressions: decode-and-forward, compress-and-forward,
cut-set bound, and their symbol-asynchronous counterparts.

All rates are in nats per channel use and use ``0.5 * log(1 + snr)`` per band,
averaged over the ``n`` bands.  The same sums evaluated on a fine DFT grid
are Riemann approximations of the limiting integral forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circulant import SNR_LIMIT, SubbandChannel
from .errors import DimensionMismatch, InvalidWaveform, RelayError

BROADCAST_CUT = "broadcast-cut"
MAC_CUT = "MAC-cut"
BOTH_CUTS = "both-cuts"
COMPRESSION = "compression-constraint"
BUDGET_TOL = 1e-9


@dataclass(frozen=True)
class PowerAllocation:
    """Per-band source power, relay power and source-relay correlation.

    ``alpha = 1`` means the source sends only fresh information (no coherent
    part); ``alpha = 0`` means the source fully cooperates with the relay.
    """

    P_S: np.ndarray
    P_R: np.ndarray
    alpha: np.ndarray | None = None

    def __post_init__(self):
        P_S = np.atleast_1d(np.asarray(self.P_S, dtype=float))
        n = P_S.size
        P_R = np.broadcast_to(np.asarray(self.P_R, dtype=float), (n,)).copy()
        alpha = np.ones(n) if self.alpha is None else np.broadcast_to(
            np.asarray(self.alpha, dtype=float), (n,)
        ).copy()
        for name, v in (("P_S", P_S), ("P_R", P_R)):
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise RelayError(f"{name} must be finite and nonnegative")
        if np.any(alpha < 0) or np.any(alpha > 1) or not np.all(np.isfinite(alpha)):
            raise RelayError("alpha must lie in [0, 1]")
        object.__setattr__(self, "P_S", P_S)
        object.__setattr__(self, "P_R", P_R)
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self) -> int:
        return self.P_S.size

    @classmethod
    def uniform(cls, n: int, P_S: float, P_R: float, alpha=1.0) -> "PowerAllocation":
        return cls(np.full(n, float(P_S)), np.full(n, float(P_R)), np.broadcast_to(alpha, (n,)))

    def mean_powers(self) -> tuple[float, float]:
        return float(np.mean(self.P_S)), float(np.mean(self.P_R))

    def within_budget(self, P_S: float, P_R: float, tol: float = BUDGET_TOL) -> bool:
        ps, pr = self.mean_powers()
        return ps <= P_S * (1 + tol) + tol and pr <= P_R * (1 + tol) + tol


@dataclass(frozen=True)
class CompressionProfile:
    """Quantization noise spectrum ``nhat`` (same units as ``N_R``).

    ``numpy.inf`` marks a band whose relay observation is discarded.
    """

    nhat: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.nhat, dtype=float))
        if np.any(np.isnan(v)) or np.any(v <= 0):
            raise RelayError("quantization noise must be positive")
        object.__setattr__(self, "nhat", v)

    @property
    def n(self) -> int:
        return self.nhat.size


@dataclass(frozen=True)
class RateBounds:
    """Optimized rates and the constraint binding at each optimum."""

    c_df: float
    c_cf: float
    c_up: float
    binding: dict


@dataclass(frozen=True)
class AsynchronyProfile:
    """Discrete-time description of a symbol-asynchronous relay channel.

    The destination sees the relay and source signals through matched filters
    whose cross-correlation has spectrum ``d(w) = rho_RS + rho_SR exp(-jw)``.
    ``g_SR, g_SD, g_RD`` are link power gains.
    """

    rho_RS: float
    rho_SR: float
    sigma_R2: float = 1.0
    sigma_D2: float = 1.0
    g_SR: float = 1.0
    g_SD: float = 1.0
    g_RD: float = 1.0

    def __post_init__(self):
        if abs(self.rho_RS) + abs(self.rho_SR) > 1 + 1e-12:
            raise InvalidWaveform(
                f"|rho(w)| exceeds 1: rho_RS={self.rho_RS}, rho_SR={self.rho_SR}"
            )
        if self.sigma_R2 <= 0 or self.sigma_D2 <= 0:
            raise RelayError("noise powers must be positive")
        gains = (self.g_SR, self.g_SD, self.g_RD)
        if any(not np.isfinite(g) or g < 0 or g > SNR_LIMIT for g in gains):
            raise RelayError("link gains must be finite, nonnegative and below the SNR limit")

    def omega(self, n: int) -> np.ndarray:
        return 2 * np.pi * np.arange(n) / n

    def correlation_spectrum(self, n: int) -> np.ndarray:
        """Complex ``d(w_i)`` on the DFT grid."""
        return self.rho_RS + self.rho_SR * np.exp(-1j * self.omega(n))

    def rho(self, n: int) -> np.ndarray:
        """Real correlation ``rho(w_i) = rho_RS + rho_SR cos(w_i)``."""
        return self.rho_RS + self.rho_SR * np.cos(self.omega(n))


def _check(ch_n: int, *arrays):
    for a in arrays:
        if a.n != ch_n:
            raise DimensionMismatch(f"expected {ch_n} bands, got {a.n}")


def _mean_half_log(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(0.5 * np.mean(np.log1p(x)))


def mac_snr(ch: SubbandChannel, alloc: PowerAllocation, coherent=True) -> np.ndarray:
    """Per-band SNR of the destination cut, ``P(w_i) / N_D(w_i)``.

    ``coherent`` may be a boolean mask; bands where it is false get no
    cooperative cross term.
    """
    cross = 2 * np.sqrt((1 - alloc.alpha) * ch.a_SD * ch.a_RD * alloc.P_S * alloc.P_R)
    cross = np.where(np.broadcast_to(coherent, (ch.n,)), cross, 0.0)
    return ch.a_SD * alloc.P_S + ch.a_RD * alloc.P_R + cross


def df_rate(ch: SubbandChannel, alloc: PowerAllocation) -> tuple[float, float, float]:
    """Decode-and-forward rate at a given allocation.

    Returns
    -------
    c1, c2, rate : float
        Broadcast-cut term, destination-cut term and ``min(c1, c2)``.
    """
    _check(ch.n, alloc)
    c1 = _mean_half_log(alloc.alpha * ch.a_SR * alloc.P_S)
    c2 = _mean_half_log(mac_snr(ch, alloc))
    return c1, c2, min(c1, c2)


def degraded_cut_gain(ch: SubbandChannel) -> np.ndarray:
    """Broadcast-cut gain of a physically degraded channel.

    When the destination observation is a noisier copy of the relay
    observation, ``I(x_S; y_R, y_D | x_R) = I(x_S; y_R | x_R)`` and the gain is
    ``a_SR``.
    """
    if not is_degraded(ch):
        raise RelayError("physically degraded noise requires a_SR >= a_SD in every band")
    return ch.a_SR


def cutset_gain(ch: SubbandChannel, noise: str = "independent") -> np.ndarray:
    """Per-band gain of the broadcast cut of the cut-set bound.

    Parameters
    ----------
    noise : {"independent", "degraded"}
        ``"independent"`` treats relay and destination noises as independent,
        giving ``a_SR + a_SD``.  ``"degraded"`` models the destination noise as
        the relay noise plus independent extra noise, giving ``a_SR``.
    """
    if noise == "independent":
        return ch.a_SR + ch.a_SD
    if noise == "degraded":
        return degraded_cut_gain(ch)
    raise RelayError(f"unknown noise model {noise!r}")


def cutset_rate(
    ch: SubbandChannel, alloc: PowerAllocation, noise: str = "independent"
) -> tuple[float, float, float]:
    """Cut-set upper bound evaluated at a given allocation.

    The destination cut is identical to the decode-and-forward one.
    """
    _check(ch.n, alloc)
    c1 = _mean_half_log(alloc.alpha * alloc.P_S * cutset_gain(ch, noise))
    c2 = _mean_half_log(mac_snr(ch, alloc))
    return c1, c2, min(c1, c2)


def _compression_terms(b, s, mac, u):
    """Rate and constraint terms of compress-and-forward in ``u = 1/(1 + nhat)``.

    ``b = 1 + a_SD P_S``, ``s = a_SR P_S`` and ``mac`` is the destination-cut
    SNR plus one.  Per band, the rate is ``0.5 log(b + s u)`` and the slack is
    ``log(1 - u) - log(b + s u) + log(mac)``.
    """
    rate = 0.5 * np.log(b + s * u)
    with np.errstate(divide="ignore"):
        slack = np.log1p(-u) - np.log(b + s * u) + np.log(mac)
    return rate, slack


def normalized_nhat(ch: SubbandChannel, comp: CompressionProfile) -> np.ndarray:
    return comp.nhat / ch.N_R


def cf_rate(
    ch: SubbandChannel, alloc: PowerAllocation, comp: CompressionProfile
) -> tuple[float, float]:
    """Compress-and-forward rate and compression-constraint slack.

    Source and relay inputs are independent, so ``alloc.alpha`` is ignored.

    Returns
    -------
    rate : float
        ``(1/2n) sum log(1 + a_SD P_S + a_SR P_S N_R / (N_R + nhat))``.
    slack : float
        ``sum log nhat - sum log(rhs)``, in nats per block; negative values
        mark a compression profile the relay link cannot carry.
    """
    _check(ch.n, alloc, comp)
    nh = normalized_nhat(ch, comp)
    u = 1.0 / (1.0 + nh)
    b = 1 + ch.a_SD * alloc.P_S
    s = ch.a_SR * alloc.P_S
    mac = b + ch.a_RD * alloc.P_R
    rate, slack = _compression_terms(b, s, mac, u)
    return float(np.mean(rate)), float(np.sum(slack))


def compression_q(ch: SubbandChannel, alloc: PowerAllocation, comp: CompressionProfile) -> np.ndarray:
    """Backward test-channel variance ``q_i`` implied by a quantization noise."""
    nh = normalized_nhat(ch, comp)
    P = alloc.P_S
    top = 1 + P * (ch.a_SR + ch.a_SD)
    with np.errstate(invalid="ignore"):
        q = nh * top / ((1 + nh) + P * (ch.a_SR + (1 + nh) * ch.a_SD))
    return np.where(np.isinf(nh), top / (1 + ch.a_SD * P), q)


def compression_c(ch: SubbandChannel, alloc: PowerAllocation, comp: CompressionProfile) -> np.ndarray:
    """The substitution variable ``c_i`` with ``nhat = c_i (1 + P(a_SR + a_SD)) / (1 + a_SD P)``."""
    P = alloc.P_S
    return normalized_nhat(ch, comp) * (1 + ch.a_SD * P) / (1 + P * (ch.a_SR + ch.a_SD))


def nhat_from_q(ch: SubbandChannel, alloc: PowerAllocation, q) -> np.ndarray:
    """Invert :func:`compression_q` (normalized units, times ``N_R``)."""
    P = alloc.P_S
    b = 1 + ch.a_SD * P
    top = 1 + P * (ch.a_SR + ch.a_SD)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        nh = q * top / (top - q * b)
    nh = np.where(q * b >= top, np.inf, nh)
    return nh * ch.N_R


def cf_modified_rate(ch: SubbandChannel, alloc: PowerAllocation) -> float:
    """Compress-and-forward rate with each band's constraint met individually.

    Uses ``nhat = (1 + (a_SD + a_SR) P_S) / (a_RD P_R)`` per band.
    """
    _check(ch.n, alloc)
    P = alloc.P_S
    r = ch.a_RD * alloc.P_R
    extra = ch.a_SR * P * r / (r + 1 + (ch.a_SD + ch.a_SR) * P)
    return _mean_half_log(ch.a_SD * P + extra)


def cf_modified_nhat(ch: SubbandChannel, alloc: PowerAllocation) -> np.ndarray:
    r = ch.a_RD * alloc.P_R
    with np.errstate(divide="ignore"):
        nh = (1 + (ch.a_SD + ch.a_SR) * alloc.P_S) / r
    return nh * ch.N_R


def is_degraded(ch: SubbandChannel) -> bool:
    """True when the relay hears the source at least as well as the destination in every band."""
    return bool(np.all(ch.a_SR >= ch.a_SD))


def binding_cut(c1: float, c2: float, tol: float = 1e-9) -> str:
    """Name of the smaller cut; ``BOTH_CUTS`` when they agree to ``tol`` (relative)."""
    if abs(c1 - c2) <= tol * max(1.0, abs(c1), abs(c2)):
        return BOTH_CUTS
    return BROADCAST_CUT if c1 < c2 else MAC_CUT


# symbol-asynchronous channel


def _asynch_setup(prof: AsynchronyProfile, alloc: PowerAllocation):
    n = alloc.n
    d = prof.correlation_spectrum(n)
    return d, np.abs(d.real), np.abs(d) ** 2


def asynch_mac_snr(prof: AsynchronyProfile, alloc: PowerAllocation) -> np.ndarray:
    """Per-band ``det(I + Psi K / sigma_D^2) - 1`` of the destination cut.

    The cross term uses ``|rho(w)|``: the source picks the sign of its
    correlation with the relay to add coherently.  The determinant term uses
    ``|d(w)|^2``, the exact eigenvalue structure of the matched-filter
    correlation matrix.
    """
    _, rho, d2 = _asynch_setup(prof, alloc)
    pS = prof.g_SD * alloc.P_S / prof.sigma_D2
    pR = prof.g_RD * alloc.P_R / prof.sigma_D2
    a = alloc.alpha
    return pS + pR + 2 * np.sqrt((1 - a) * pS * pR) * rho + a * pS * pR * (1 - d2)


def asynch_df_terms(prof: AsynchronyProfile, alloc: PowerAllocation) -> tuple[float, float]:
    c1 = _mean_half_log(alloc.alpha * prof.g_SR * alloc.P_S / prof.sigma_R2)
    c2 = _mean_half_log(asynch_mac_snr(prof, alloc))
    return c1, c2


def asynch_df_rate(prof: AsynchronyProfile, alloc: PowerAllocation) -> float:
    """Decode-and-forward rate of the symbol-asynchronous relay channel."""
    return min(asynch_df_terms(prof, alloc))


def asynch_cutset_terms(prof: AsynchronyProfile, alloc: PowerAllocation) -> tuple[float, float]:
    gain = prof.g_SR / prof.sigma_R2 + prof.g_SD / prof.sigma_D2
    c1 = _mean_half_log(alloc.alpha * gain * alloc.P_S)
    c2 = _mean_half_log(asynch_mac_snr(prof, alloc))
    return c1, c2


def asynch_cutset_rate(prof: AsynchronyProfile, alloc: PowerAllocation) -> float:
    """Cut-set upper bound of the symbol-asynchronous relay channel."""
    return min(asynch_cutset_terms(prof, alloc))


def asynch_cf_parts(prof: AsynchronyProfile, alloc: PowerAllocation):
    """``(b, s, mac)`` of the asynchronous compress-and-forward problem.

    With ``nhat`` normalized by ``sigma_R^2``, the integrands are
    ``A = (1 + nhat) b + s`` and ``B = nhat * mac``.
    """
    independent = PowerAllocation(alloc.P_S, alloc.P_R, np.ones(alloc.n))
    b = 1 + prof.g_SD * alloc.P_S / prof.sigma_D2
    s = prof.g_SR * alloc.P_S / prof.sigma_R2
    mac = 1 + asynch_mac_snr(prof, independent)
    return b, s, mac


def asynch_cf_AB(prof: AsynchronyProfile, alloc: PowerAllocation, comp: CompressionProfile):
    """The integrands ``A(w_i)`` and ``B(w_i)`` of the asynchronous CF rate."""
    b, s, mac = asynch_cf_parts(prof, alloc)
    nh = comp.nhat / prof.sigma_R2
    return (1 + nh) * b + s, nh * mac


def asynch_cf_rate(
    prof: AsynchronyProfile, alloc: PowerAllocation, comp: CompressionProfile
) -> tuple[float, float]:
    """Compress-and-forward rate and slack ``-sum log(A / B)`` (feasible when >= 0)."""
    _check(alloc.n, comp)
    b, s, mac = asynch_cf_parts(prof, alloc)
    u = 1.0 / (1.0 + comp.nhat / prof.sigma_R2)
    rate, slack = _compression_terms(b, s, mac, u)
    return float(np.mean(rate)), float(np.sum(slack))
