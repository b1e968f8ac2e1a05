import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isirelay import (
    CirculantChannel,
    CovarianceSet,
    ImpulseResponse,
    IndefiniteNoise,
    InvalidBlockLength,
    NumericalRankError,
    PowerAllocation,
    subband_decompose,
)
from isirelay.bounds import AsynchronyProfile, asynch_df_terms, cf_rate, df_rate, CompressionProfile
from isirelay.circulant import (
    build_circulant,
    dft_matrix,
    logdet_psd,
    matched_filter_correlation,
    noise_circulant,
    noise_spectrum,
    oracle_asynch_mac,
    oracle_cf_terms,
    oracle_df_terms,
    profile_covariances,
    profile_qnoise,
)
from isirelay.errors import RelayError

taps_st = st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=4).filter(
    lambda t: any(abs(v) > 1e-3 for v in t)
)


def test_circulant_first_row():
    C = build_circulant([1.0, 1.0], 4)
    assert np.allclose(C[0], [1, 0, 0, 1])
    assert np.allclose(C[1], [1, 1, 0, 0])


def test_block_length_must_exceed_memory():
    with pytest.raises(InvalidBlockLength):
        build_circulant([1.0, 0.5, 0.2], 2)
    with pytest.raises(InvalidBlockLength):
        CirculantChannel(2, [1.0, 0.5, 0.2], [1.0], [1.0])


def test_zero_response_rejected():
    with pytest.raises(RelayError):
        ImpulseResponse([0.0, 0.0])


@given(taps_st, st.integers(5, 12))
def test_dft_diagonalizes_circulant(taps, n):
    C = build_circulant(taps, n)
    F = dft_matrix(n)
    D = F @ C @ F.conj().T
    off = D - np.diag(np.diag(D))
    assert np.max(np.abs(off)) < 1e-10
    assert np.allclose(np.diag(D), np.fft.fft(np.pad(taps, (0, n - len(taps)))))


def test_indefinite_noise_reports_band():
    # R = [1, 0.5] at n = 4: spectrum 1 + cos(w_k), zero at w = pi
    with pytest.raises(IndefiniteNoise) as exc:
        noise_spectrum([1.0, 0.5], 4)
    assert exc.value.band == 2


def test_noise_spectrum_matches_eigenvalues():
    lags = [1.0, 0.3, -0.1]
    n = 8
    w = np.linalg.eigvalsh(noise_circulant(lags, n))
    assert np.allclose(np.sort(w), np.sort(noise_spectrum(lags, n)))


def test_logdet_singular_raises():
    with pytest.raises(NumericalRankError):
        logdet_psd(np.array([[1.0, 0.0], [0.0, -1.0]]))


def _channel(rng, n):
    return CirculantChannel(
        n,
        rng.normal(size=3),
        rng.normal(size=2),
        rng.normal(size=3),
        [1.0, 0.3],
        [1.0, -0.2],
    )


@pytest.mark.parametrize("n", [4, 8])
def test_df_oracle_matches_subband_rate(rng, n):
    ch = _channel(rng, n)
    sub = subband_decompose(ch)
    P_S, P_R, alpha = rng.uniform(0, 2, n), rng.uniform(0, 2, n), rng.uniform(0, 1, n)
    I1, I2 = oracle_df_terms(ch, profile_covariances(sub, P_S, P_R, alpha))
    c1, c2, _ = df_rate(sub, PowerAllocation(P_S, P_R, alpha))
    assert I1 / n == pytest.approx(c1, rel=1e-9)
    assert I2 / n == pytest.approx(c2, rel=1e-9)


def test_cf_oracle_gap_is_half_slack(rng):
    n = 8
    ch = _channel(rng, n)
    sub = subband_decompose(ch)
    P_S, P_R = rng.uniform(0.1, 2, n), rng.uniform(0.1, 2, n)
    nhat = rng.uniform(0.2, 3, n)
    rate, gap = oracle_cf_terms(ch, profile_covariances(sub, P_S, P_R), profile_qnoise(nhat))
    r, slack = cf_rate(sub, PowerAllocation(P_S, P_R), CompressionProfile(nhat))
    assert rate / n == pytest.approx(r, rel=1e-9)
    assert gap == pytest.approx(0.5 * slack, rel=1e-9, abs=1e-12)


def test_oracle_size_guard(rng):
    ch = _channel(rng, 32)
    with pytest.raises(RelayError):
        oracle_df_terms(ch, CovarianceSet.zeros(32))


def test_covariance_psd_check():
    with pytest.raises(RelayError):
        CovarianceSet(np.eye(2), np.eye(2), 2 * np.eye(2))


def test_matched_filter_correlation_spectrum():
    G = matched_filter_correlation(0.6, 0.3, 8)
    F = dft_matrix(8)
    S = G[:8, 8:]
    d = np.diag(F @ S @ F.conj().T)
    k = np.arange(8)
    assert np.allclose(d, 0.6 + 0.3 * np.exp(-2j * np.pi * k / 8))


@pytest.mark.parametrize("rho", [(0.5, 0.5), (0.8, 0.1), (0.3, 0.7)])
def test_asynch_oracle_matches_formula(rng, rho):
    n = 16
    prof = AsynchronyProfile(*rho, g_SR=2.0, g_SD=1.0, g_RD=3.0)
    alloc = PowerAllocation(rng.uniform(0, 2, n), rng.uniform(0, 2, n), rng.uniform(0, 1, n))
    _, c2 = asynch_df_terms(prof, alloc)
    d = prof.correlation_spectrum(n)
    pS, pR = prof.g_SD * alloc.P_S, prof.g_RD * alloc.P_R
    sign = np.where(d.real >= 0, 1.0, -1.0)
    psi = sign * np.sqrt((1 - alloc.alpha) * pS * pR)
    assert oracle_asynch_mac(*rho, pS, pR, psi) / n == pytest.approx(c2, rel=1e-9)
