"""Circulant channel and noise matrices, DFT subband decomposition and
dense log-determinant oracles.

Conventions
-----------
The DFT matrix is unitary, ``F[k, l] = exp(-2j*pi*k*l/n) / sqrt(n)``.  A
circulant matrix with first column ``c`` satisfies ``C = F^H diag(fft(c)) F``,
so its eigenvalue on band ``k`` is ``fft(c)[k]``.

Mutual informations returned by the oracles are per block (not divided by
``n``) and use ``0.5 * logdet``, the same half-log convention used by the
per-band rate formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    IndefiniteNoise,
    InvalidBlockLength,
    NumericalRankError,
    RelayError,
)

ORACLE_MAX_N = 16
SNR_LIMIT = 1e15
_JITTER = 1e-12


@dataclass(frozen=True)
class ImpulseResponse:
    """Finite impulse response ``h_0..h_m`` of one link."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.atleast_1d(np.asarray(self.taps, dtype=complex))
        if taps.ndim != 1 or taps.size == 0:
            raise RelayError("impulse response needs at least one tap")
        if not np.all(np.isfinite(taps)):
            raise RelayError("impulse response taps must be finite")
        if not np.any(taps != 0):
            raise RelayError("impulse response must have a nonzero tap")
        object.__setattr__(self, "taps", taps)

    @property
    def memory(self) -> int:
        return self.taps.size - 1

    def padded(self, memory: int) -> "ImpulseResponse":
        """Return a copy zero-padded to the given memory."""
        if memory <= self.memory:
            return self
        return ImpulseResponse(np.concatenate([self.taps, np.zeros(memory - self.memory)]))


@dataclass(frozen=True)
class NoiseAutocorrelation:
    """Autocorrelation lags ``R[0..i_max]`` of a stationary noise."""

    lags: np.ndarray

    def __post_init__(self):
        lags = np.atleast_1d(np.asarray(self.lags, dtype=float))
        if lags.ndim != 1 or lags.size == 0:
            raise RelayError("autocorrelation needs at least R[0]")
        if not np.all(np.isfinite(lags)):
            raise RelayError("autocorrelation lags must be finite")
        if lags[0] <= 0:
            raise RelayError("R[0] must be positive")
        object.__setattr__(self, "lags", lags)

    @property
    def support(self) -> int:
        return self.lags.size - 1

    @classmethod
    def white(cls, power: float = 1.0) -> "NoiseAutocorrelation":
        return cls(np.array([power]))


@dataclass(frozen=True)
class CirculantChannel:
    """Block-circular relay channel of block length ``n``.

    Impulse responses shorter than the longest noise support are
    zero-padded so that every noise support fits inside the channel memory.
    """

    n: int
    h_SR: ImpulseResponse
    h_SD: ImpulseResponse
    h_RD: ImpulseResponse
    noise_R: NoiseAutocorrelation = field(default_factory=NoiseAutocorrelation.white)
    noise_D: NoiseAutocorrelation = field(default_factory=NoiseAutocorrelation.white)

    def __post_init__(self):
        for name in ("noise_R", "noise_D"):
            v = getattr(self, name)
            if not isinstance(v, NoiseAutocorrelation):
                object.__setattr__(self, name, NoiseAutocorrelation(v))
        i_max = max(self.noise_R.support, self.noise_D.support)
        for name in ("h_SR", "h_SD", "h_RD"):
            h = getattr(self, name)
            if not isinstance(h, ImpulseResponse):
                h = ImpulseResponse(h)
            object.__setattr__(self, name, h.padded(i_max))
        if self.n <= self.memory:
            raise InvalidBlockLength(
                f"block length n={self.n} must exceed channel memory m={self.memory}"
            )

    @property
    def memory(self) -> int:
        return max(self.h_SR.memory, self.h_SD.memory, self.h_RD.memory)


@dataclass(frozen=True)
class SubbandChannel:
    """Per-band description of a relay channel.

    Parameters
    ----------
    a_SR, a_SD, a_RD : array_like
        Normalized gains ``|H|^2 / N`` per band (SNR per unit power).
    H_SR, H_SD, H_RD : array_like, optional
        Complex frequency responses, when known.
    N_R, N_D : array_like, optional
        Noise spectra. Default to ones.
    """

    a_SR: np.ndarray
    a_SD: np.ndarray
    a_RD: np.ndarray
    H_SR: np.ndarray | None = None
    H_SD: np.ndarray | None = None
    H_RD: np.ndarray | None = None
    N_R: np.ndarray | None = None
    N_D: np.ndarray | None = None

    def __post_init__(self):
        arrays = {}
        for name in ("a_SR", "a_SD", "a_RD"):
            a = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if a.ndim != 1:
                raise DimensionMismatch(f"{name} must be one-dimensional")
            if not np.all(np.isfinite(a)) or np.any(a < 0):
                raise RelayError(f"{name} must be finite and nonnegative")
            if np.any(a > SNR_LIMIT):
                raise RelayError(f"{name} exceeds the SNR limit {SNR_LIMIT:g}")
            arrays[name] = a
        n = arrays["a_SR"].size
        if arrays["a_SD"].size != n or arrays["a_RD"].size != n:
            raise DimensionMismatch("gain arrays must have equal length")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)
        for name in ("H_SR", "H_SD", "H_RD"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=complex)
                if v.shape != (n,):
                    raise DimensionMismatch(f"{name} must have length {n}")
                object.__setattr__(self, name, v)
        for name in ("N_R", "N_D"):
            v = getattr(self, name)
            v = np.ones(n) if v is None else np.asarray(v, dtype=float)
            if v.shape != (n,):
                raise DimensionMismatch(f"{name} must have length {n}")
            bad = np.flatnonzero(~(v > 0))
            if bad.size:
                raise IndefiniteNoise(int(bad[0]), float(v[bad[0]]))
            object.__setattr__(self, name, v)

    @property
    def n(self) -> int:
        return self.a_SR.size

    def band(self, idx) -> "SubbandChannel":
        """Restrict to a subset of bands (gains only)."""
        return SubbandChannel(self.a_SR[idx], self.a_SD[idx], self.a_RD[idx])


@dataclass(frozen=True)
class CovarianceSet:
    """Time-domain input covariances of source and relay.

    ``Sigma_SR`` is ``E[x_S x_R^H]``.
    """

    Sigma_S: np.ndarray
    Sigma_R: np.ndarray
    Sigma_SR: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.Sigma_S, dtype=complex)
        R = np.asarray(self.Sigma_R, dtype=complex)
        X = np.asarray(self.Sigma_SR, dtype=complex)
        n = S.shape[0]
        if S.shape != (n, n) or R.shape != (n, n) or X.shape != (n, n):
            raise DimensionMismatch("covariance blocks must be n x n")
        for name, M in (("Sigma_S", S), ("Sigma_R", R)):
            if not np.allclose(M, M.conj().T, atol=1e-10 * (1 + np.abs(M).max())):
                raise RelayError(f"{name} must be Hermitian")
        joint = np.block([[S, X], [X.conj().T, R]])
        w = np.linalg.eigvalsh(0.5 * (joint + joint.conj().T))
        if w.min() < -1e-9 * max(1.0, w.max()):
            raise RelayError("joint input covariance is not positive semidefinite")
        object.__setattr__(self, "Sigma_S", S)
        object.__setattr__(self, "Sigma_R", R)
        object.__setattr__(self, "Sigma_SR", X)

    @property
    def n(self) -> int:
        return self.Sigma_S.shape[0]

    def powers(self) -> tuple[float, float]:
        """Average per-symbol powers ``trace(Sigma)/n`` of source and relay."""
        return (
            float(np.trace(self.Sigma_S).real) / self.n,
            float(np.trace(self.Sigma_R).real) / self.n,
        )

    @classmethod
    def zeros(cls, n: int) -> "CovarianceSet":
        z = np.zeros((n, n))
        return cls(z, z, z)


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix of size ``n``."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def _as_taps(h) -> np.ndarray:
    if isinstance(h, ImpulseResponse):
        return h.taps
    return ImpulseResponse(h).taps


def generator_column(h, n: int) -> np.ndarray:
    """First column ``[h_0, h_1, ..., h_m, 0, ..., 0]`` of the circulant."""
    taps = _as_taps(h)
    if n <= taps.size - 1:
        raise InvalidBlockLength(f"block length n={n} must exceed memory m={taps.size - 1}")
    col = np.zeros(n, dtype=complex)
    col[: taps.size] = taps
    return col


def build_circulant(h, n: int) -> np.ndarray:
    """Circulant convolution matrix of an impulse response.

    Parameters
    ----------
    h : ImpulseResponse or array_like
        Taps ``h_0..h_m``.
    n : int
        Block length, ``n > m``.

    Returns
    -------
    numpy.ndarray
        ``n x n`` matrix whose first row is ``[h_0, 0, ..., 0, h_m, ..., h_1]``
        and whose rows are successive right cyclic shifts.
    """
    col = generator_column(h, n)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return col[idx]


def periodized_autocorrelation(noise, n: int) -> np.ndarray:
    """First column of the circulant noise covariance.

    Entry ``k`` is ``sum_j R(k + j n)`` with ``R(-i) = R(i)``.
    """
    lags = noise.lags if isinstance(noise, NoiseAutocorrelation) else NoiseAutocorrelation(noise).lags
    col = np.zeros(n)
    for i, r in enumerate(lags):
        col[i % n] += r
        if i:
            col[(-i) % n] += r
    return col


def noise_circulant(noise, n: int) -> np.ndarray:
    col = periodized_autocorrelation(noise, n)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return col[idx]


def frequency_response(h, n: int) -> np.ndarray:
    """Eigenvalues ``H(w_k) = sum_l h_l exp(-2j pi k l / n)`` of the circulant."""
    return np.fft.fft(generator_column(h, n))


def noise_spectrum(noise, n: int, check: bool = True) -> np.ndarray:
    """Eigenvalues of the circulant noise covariance.

    Raises
    ------
    IndefiniteNoise
        If ``check`` and any eigenvalue is not strictly positive.
    """
    spec = np.fft.fft(periodized_autocorrelation(noise, n)).real
    if check:
        tol = 1e-12 * np.abs(spec).max()
        bad = np.flatnonzero(spec <= tol)
        if bad.size:
            raise IndefiniteNoise(int(bad[0]), float(spec[bad[0]]))
    return spec


def subband_decompose(ch: CirculantChannel) -> SubbandChannel:
    """Diagonalize a circulant relay channel into ``n`` scalar subbands."""
    n = ch.n
    H = {name: frequency_response(getattr(ch, "h_" + name), n) for name in ("SR", "SD", "RD")}
    N_R = noise_spectrum(ch.noise_R, n)
    N_D = noise_spectrum(ch.noise_D, n)
    return SubbandChannel(
        a_SR=np.abs(H["SR"]) ** 2 / N_R,
        a_SD=np.abs(H["SD"]) ** 2 / N_D,
        a_RD=np.abs(H["RD"]) ** 2 / N_D,
        H_SR=H["SR"],
        H_SD=H["SD"],
        H_RD=H["RD"],
        N_R=N_R,
        N_D=N_D,
    )


def logdet_psd(M: np.ndarray) -> float:
    """Log-determinant of a Hermitian positive definite matrix via Cholesky.

    Falls back to a relative diagonal jitter of ``1e-12`` when the plain
    factorization fails.

    Raises
    ------
    NumericalRankError
        If the matrix is not positive definite even after jitter.
    """
    M = 0.5 * (M + M.conj().T)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        scale = max(float(np.abs(np.diag(M)).max()), 1.0)
        try:
            L = np.linalg.cholesky(M + _JITTER * scale * np.eye(M.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NumericalRankError("matrix is numerically singular or indefinite") from exc
    return 2.0 * float(np.sum(np.log(np.abs(np.diag(L)))))


def _conditional_covariance(cov: CovarianceSet) -> np.ndarray:
    """``Sigma_S - Sigma_SR Sigma_R^+ Sigma_SR^H``: source covariance given ``x_R``."""
    S, R, X = cov.Sigma_S, cov.Sigma_R, cov.Sigma_SR
    if not np.any(X):
        return S
    Rp = np.linalg.pinv(R, rcond=1e-12, hermitian=True)
    C = S - X @ Rp @ X.conj().T
    return 0.5 * (C + C.conj().T)


def _check_oracle(ch: CirculantChannel, cov: CovarianceSet, limit: int):
    if ch.n > limit:
        raise RelayError(f"oracle limited to n <= {limit}, got n={ch.n}")
    if cov.n != ch.n:
        raise DimensionMismatch("covariance size differs from block length")


def _matrices(ch: CirculantChannel):
    n = ch.n
    return (
        build_circulant(ch.h_SR, n),
        build_circulant(ch.h_SD, n),
        build_circulant(ch.h_RD, n),
        noise_circulant(ch.noise_R, n),
        noise_circulant(ch.noise_D, n),
    )


def _destination_covariance(H_SD, H_RD, N_D, cov: CovarianceSet) -> np.ndarray:
    cross = H_SD @ cov.Sigma_SR @ H_RD.conj().T
    return (
        H_SD @ cov.Sigma_S @ H_SD.conj().T
        + H_RD @ cov.Sigma_R @ H_RD.conj().T
        + cross
        + cross.conj().T
        + N_D
    )


def oracle_df_terms(
    ch: CirculantChannel, cov: CovarianceSet, limit: int = ORACLE_MAX_N
) -> tuple[float, float]:
    """Dense evaluation of the two decode-and-forward mutual informations.

    Returns
    -------
    I1 : float
        ``I(x_S; y_R | x_R)`` in nats per block.
    I2 : float
        ``I(x_S, x_R; y_D)`` in nats per block.
    """
    _check_oracle(ch, cov, limit)
    H_SR, H_SD, H_RD, N_R, N_D = _matrices(ch)
    C = _conditional_covariance(cov)
    I1 = 0.5 * (logdet_psd(H_SR @ C @ H_SR.conj().T + N_R) - logdet_psd(N_R))
    I2 = 0.5 * (logdet_psd(_destination_covariance(H_SD, H_RD, N_D, cov)) - logdet_psd(N_D))
    return I1, I2


def oracle_cf_terms(
    ch: CirculantChannel, cov: CovarianceSet, qnoise: np.ndarray, limit: int = ORACLE_MAX_N
) -> tuple[float, float]:
    """Dense evaluation of the compress-and-forward rate and constraint gap.

    Parameters
    ----------
    qnoise : numpy.ndarray
        ``n x n`` Hermitian positive definite covariance of the quantization
        noise added to the relay observation.

    Returns
    -------
    rate : float
        ``I(x_S; y_D, yhat_R | x_R)`` in nats per block.
    gap : float
        ``I(x_R; y_D) - I(y_R; yhat_R | x_R, y_D)``; nonnegative when the
        compression rate is supported by the relay-destination link.
    """
    _check_oracle(ch, cov, limit)
    Q = np.asarray(qnoise, dtype=complex)
    if Q.shape != (ch.n, ch.n):
        raise DimensionMismatch("quantization noise must be n x n")
    H_SR, H_SD, H_RD, N_R, N_D = _matrices(ch)
    C = _conditional_covariance(cov)
    G = np.vstack([H_SD, H_SR])
    z = np.zeros_like(N_D, dtype=complex)
    noise = np.block([[N_D, z], [z, N_R + Q]])
    joint = G @ C @ G.conj().T + noise
    ld_joint = logdet_psd(joint)
    rate = 0.5 * (ld_joint - logdet_psd(noise))

    ld_dest_given_r = logdet_psd(H_SD @ C @ H_SD.conj().T + N_D)
    i_relay = 0.5 * (logdet_psd(_destination_covariance(H_SD, H_RD, N_D, cov)) - ld_dest_given_r)
    i_quant = 0.5 * (ld_joint - ld_dest_given_r - logdet_psd(Q))
    return rate, i_relay - i_quant


def profile_covariances(sub: SubbandChannel, P_S, P_R, alpha=None) -> CovarianceSet:
    """Time-domain covariances that are diagonal in the DFT domain.

    The source-relay cross term on band ``k`` has magnitude
    ``sqrt((1 - alpha) P_S P_R)`` and the phase that aligns the two signals
    coherently at the destination, ``conj(H_SD) H_RD / |H_SD H_RD|``.
    """
    n = sub.n
    P_S = np.broadcast_to(np.asarray(P_S, dtype=float), (n,))
    P_R = np.broadcast_to(np.asarray(P_R, dtype=float), (n,))
    alpha = np.ones(n) if alpha is None else np.broadcast_to(np.asarray(alpha, dtype=float), (n,))
    if sub.H_SD is None or sub.H_RD is None:
        phase = np.ones(n, dtype=complex)
    else:
        prod = np.conj(sub.H_SD) * sub.H_RD
        mag = np.abs(prod)
        phase = np.where(mag > 0, prod / np.where(mag > 0, mag, 1.0), 1.0)
    psi = np.sqrt(np.clip(1.0 - alpha, 0.0, 1.0) * P_S * P_R) * phase
    F = dft_matrix(n)
    Fh = F.conj().T

    def to_time(d):
        return Fh @ np.diag(d) @ F

    return CovarianceSet(to_time(P_S), to_time(P_R), to_time(psi))


def profile_qnoise(nhat) -> np.ndarray:
    """Time-domain quantization noise covariance with DFT spectrum ``nhat``."""
    nhat = np.asarray(nhat, dtype=float)
    F = dft_matrix(nhat.size)
    return F.conj().T @ np.diag(nhat) @ F


def matched_filter_correlation(rho_RS: float, rho_SR: float, n: int) -> np.ndarray:
    """``2n x 2n`` correlation matrix of the destination matched-filter outputs.

    Ordering is ``[x_R(1..n), x_S(1..n)]``.  The relay filter output at time
    ``i`` sees ``x_S(i)`` through ``rho_RS`` and ``x_S(i-1)`` through ``rho_SR``
    (circularly), so ``G = [[I, S], [S^T, I]]`` with circulant ``S``.
    """
    eye = np.eye(n)
    S = rho_RS * eye + rho_SR * np.roll(eye, 1, axis=0)
    return np.block([[eye, S], [S.T, eye]])


def oracle_asynch_mac(
    rho_RS: float, rho_SR: float, P_S, P_R, psi, sigma_D2: float = 1.0
) -> float:
    """Dense ``0.5 logdet(I + Sigma_x G / sigma_D^2)`` for DFT-diagonal inputs.

    Parameters
    ----------
    P_S, P_R : array_like
        Received power spectra of source and relay at the destination.
    psi : array_like
        Cross spectrum ``E[X_R X_S^*]`` per band.

    Returns
    -------
    float
        Destination-cut mutual information in nats per block.
    """
    P_S = np.asarray(P_S, dtype=float)
    n = P_S.size
    F = dft_matrix(n)
    Fh = F.conj().T

    def to_time(d):
        return Fh @ np.diag(np.asarray(d, dtype=complex)) @ F

    Sigma = np.block([[to_time(P_R), to_time(psi)], [to_time(np.conj(psi)), to_time(P_S)]])
    G = matched_filter_correlation(rho_RS, rho_SR, n)
    w, V = np.linalg.eigh(G)
    root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    M = np.eye(2 * n) + root @ Sigma @ root / sigma_D2
    return 0.5 * logdet_psd(M)
