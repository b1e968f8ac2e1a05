import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from isirelay import (
    AsynchronyProfile,
    CompressionProfile,
    DimensionMismatch,
    InvalidWaveform,
    PowerAllocation,
    SubbandChannel,
    cf_modified_rate,
    cf_rate,
    cutset_rate,
    df_rate,
)
from isirelay.bounds import (
    BOTH_CUTS,
    BROADCAST_CUT,
    MAC_CUT,
    asynch_cf_AB,
    asynch_cf_rate,
    asynch_df_terms,
    asynch_cutset_rate,
    asynch_df_rate,
    binding_cut,
    compression_q,
    cutset_gain,
    is_degraded,
    nhat_from_q,
)
from isirelay.errors import RelayError

N = 4
gains = arrays(float, N, elements=st.floats(0.0, 20.0))
powers = arrays(float, N, elements=st.floats(0.0, 10.0))
alphas = arrays(float, N, elements=st.floats(0.0, 1.0))


def one_band(a_SR=1.0, a_SD=1.0, a_RD=1.0):
    return SubbandChannel(np.array([a_SR]), np.array([a_SD]), np.array([a_RD]))


def test_single_band_df_closed_form():
    ch = one_band(4.0, 1.0, 1.0)
    c1, c2, r = df_rate(ch, PowerAllocation([1.0], [1.0], [0.5]))
    assert c1 == pytest.approx(0.5 * math.log(3.0))
    assert c2 == pytest.approx(0.5 * math.log(1 + 1 + 1 + 2 * math.sqrt(0.5)))
    assert r == c1


def test_single_band_cf_values():
    ch = one_band()
    alloc = PowerAllocation([1.0], [1.0])
    rate, slack = cf_rate(ch, alloc, CompressionProfile([1.0]))
    assert rate == pytest.approx(0.5 * math.log(2.5))
    assert slack == pytest.approx(-math.log(5 / 3))
    assert cf_modified_rate(ch, alloc) == pytest.approx(0.5 * math.log(2.25))


def test_cf_discarding_relay_gives_direct_rate():
    ch = one_band(3.0, 2.0, 1.0)
    rate, slack = cf_rate(ch, PowerAllocation([1.5], [1.0]), CompressionProfile([np.inf]))
    assert rate == pytest.approx(0.5 * math.log(1 + 3.0))
    # infinite quantization noise: slack is the relay link's full headroom
    assert slack == pytest.approx(math.log((4.0 + 1.0) / 4.0))


@given(gains, gains, gains, powers, powers, alphas)
def test_cutset_dominates_df(a_SR, a_SD, a_RD, P_S, P_R, alpha):
    ch = SubbandChannel(a_SR, a_SD, a_RD)
    alloc = PowerAllocation(P_S, P_R, alpha)
    d1, d2, d = df_rate(ch, alloc)
    u1, u2, u = cutset_rate(ch, alloc)
    assert u1 >= d1 - 1e-15
    assert u2 == d2
    assert u >= d - 1e-15


@given(gains, gains, gains, powers, powers, st.floats(0.01, 100.0))
def test_cf_rate_increases_with_finer_quantization(a_SR, a_SD, a_RD, P_S, P_R, nh):
    ch = SubbandChannel(a_SR, a_SD, a_RD)
    alloc = PowerAllocation(P_S, P_R)
    coarse, s_coarse = cf_rate(ch, alloc, CompressionProfile(np.full(N, 2 * nh)))
    fine, s_fine = cf_rate(ch, alloc, CompressionProfile(np.full(N, nh)))
    assert fine >= coarse - 1e-15
    assert s_fine <= s_coarse + 1e-12


def test_cf_slack_tends_to_relay_headroom():
    # coarse quantization leaves sum log((b + r)/b), not an unbounded slack
    ch = SubbandChannel(np.array([2.0, 1.0]), np.array([1.0, 0.5]), np.array([1.0, 3.0]))
    alloc = PowerAllocation([1.0, 2.0], [1.0, 0.5])
    _, slack = cf_rate(ch, alloc, CompressionProfile([1e12, 1e12]))
    b = 1 + ch.a_SD * alloc.P_S
    expect = float(np.sum(np.log((b + ch.a_RD * alloc.P_R) / b)))
    assert slack == pytest.approx(expect, rel=1e-9)


def test_q_and_nhat_round_trip(rng):
    ch = SubbandChannel(rng.uniform(0.1, 3, 6), rng.uniform(0.1, 3, 6), rng.uniform(0.1, 3, 6))
    alloc = PowerAllocation(rng.uniform(0.1, 2, 6), rng.uniform(0.1, 2, 6))
    nhat = rng.uniform(0.1, 5, 6)
    q = compression_q(ch, alloc, CompressionProfile(nhat))
    assert np.allclose(nhat_from_q(ch, alloc, q), nhat)


def test_degraded_cut_matches_joint_observation():
    # destination noise = scaled relay noise + independent extra noise
    a_SR, a_SD, P = 3.0, 1.2, 2.0
    h_SR, h_SD, N_R = math.sqrt(a_SR), math.sqrt(a_SD), 1.0
    c = h_SD / h_SR
    N_D = 1.0
    extra = N_D - c * c * N_R
    assert extra >= 0
    signal = P * np.outer([h_SR, h_SD], [h_SR, h_SD])
    noise = np.array([[N_R, c * N_R], [c * N_R, c * c * N_R + extra]])
    mi = 0.5 * (np.linalg.slogdet(signal + noise)[1] - np.linalg.slogdet(noise)[1])
    ch = one_band(a_SR, a_SD, 1.0)
    assert mi == pytest.approx(0.5 * math.log1p(cutset_gain(ch, "degraded")[0] * P), rel=1e-12)
    # independent noises give the larger joint gain a_SR + a_SD
    indep = 0.5 * math.log(np.linalg.det(signal + np.eye(2)))
    assert indep == pytest.approx(0.5 * math.log1p(cutset_gain(ch)[0] * P), rel=1e-12)


def test_degraded_noise_needs_degraded_channel():
    with pytest.raises(RelayError):
        cutset_gain(one_band(0.5, 1.0, 1.0), "degraded")


def test_is_degraded_tie():
    assert is_degraded(one_band(1.0, 1.0))
    assert not is_degraded(one_band(0.99, 1.0))


def test_binding_cut():
    assert binding_cut(1.0, 2.0) == BROADCAST_CUT
    assert binding_cut(2.0, 1.0) == MAC_CUT
    assert binding_cut(1.0, 1.0 + 1e-12) == BOTH_CUTS


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        df_rate(SubbandChannel(np.ones(3), np.ones(3), np.ones(3)), PowerAllocation(np.ones(2), np.ones(2)))


def test_allocation_validation():
    with pytest.raises(RelayError):
        PowerAllocation([1.0, -1.0], [1.0, 1.0])
    with pytest.raises(RelayError):
        PowerAllocation([1.0], [1.0], [1.5])


def test_channel_rejects_out_of_range_gains():
    with pytest.raises(RelayError):
        SubbandChannel(np.array([1e16]), np.ones(1), np.ones(1))
    with pytest.raises(RelayError):
        SubbandChannel(np.array([np.nan]), np.ones(1), np.ones(1))


# asynchronous channel


def test_invalid_waveform():
    with pytest.raises(InvalidWaveform):
        AsynchronyProfile(0.7, 0.5)


def test_synchronous_limit_is_memoryless_relay():
    # d(w) = 1: the relay and source waveforms coincide
    prof = AsynchronyProfile(1.0, 0.0)
    n = 8
    alloc = PowerAllocation.uniform(n, 2.0, 1.0, 0.3)
    ch = SubbandChannel(np.ones(n), np.ones(n), np.ones(n))
    assert asynch_df_rate(prof, alloc) == pytest.approx(df_rate(ch, alloc)[2], rel=1e-12)


def test_orthogonal_waveforms():
    # d(w) = 0: the destination sees source and relay on separate dimensions
    prof = AsynchronyProfile(0.0, 0.0)
    _, c2 = asynch_df_terms(prof, PowerAllocation.uniform(4, 2.0, 3.0, 1.0))
    assert c2 == pytest.approx(0.5 * math.log((1 + 2.0) * (1 + 3.0)))
    _, c2 = asynch_df_terms(prof, PowerAllocation.uniform(4, 2.0, 3.0, 0.0))
    assert c2 == pytest.approx(0.5 * math.log(1 + 2.0 + 3.0))


def test_asynch_cutset_dominates_df(rng):
    for _ in range(20):
        r1 = rng.uniform(0, 1)
        prof = AsynchronyProfile(r1, rng.uniform(0, 1 - r1), g_SR=rng.uniform(0.1, 5), g_RD=rng.uniform(0.1, 5))
        alloc = PowerAllocation(rng.uniform(0, 3, 16), rng.uniform(0, 3, 16), rng.uniform(0, 1, 16))
        assert asynch_cutset_rate(prof, alloc) >= asynch_df_rate(prof, alloc) - 1e-15


def test_asynch_cf_integrands():
    prof = AsynchronyProfile(0.5, 0.5, g_SR=2.0, g_RD=3.0)
    alloc = PowerAllocation.uniform(8, 1.0, 1.0)
    comp = CompressionProfile(np.full(8, 0.7))
    A, B = asynch_cf_AB(prof, alloc, comp)
    _, slack = asynch_cf_rate(prof, alloc, comp)
    # the u-form slack equals -sum log(A/B)
    assert slack == pytest.approx(-float(np.sum(np.log(A / B))), rel=1e-12)
