import math

import numpy as np
import pytest

from isirelay import PowerAllocation, solve_df_maximin
from isirelay.bounds import AsynchronyProfile, asynch_df_rate
from isirelay.errors import RelayError
from isirelay.models import (
    FIG5_GAINS,
    AsynchGeometry,
    LowpassRelaySpec,
    UnderwaterSpec,
    ambient_noise_psd,
    asynch_profile,
    equal_bandwidth_capacity,
    golden_max,
    lowpass_subband_channel,
    noise_components_db,
    path_loss,
    permutation_experiment,
    rayleigh_taps,
    thermal_wave_crossover,
    thorp_absorption,
    underwater_channel,
    underwater_draw,
    unequal_bandwidth_capacity,
    unequal_bandwidth_terms,
    worst_case_asynch_rate,
)
from isirelay.optimizers import single_cut_waterfill, solve_asynch_cf, solve_asynch_maximin

THORP_1KHZ = 0.06900409046574006  # 0.11/2 + 44/4101 + 2.75e-4 + 0.003
AMBIENT_27_0_10 = 30462.28924012517  # four components summed in linear units
UNEQUAL_GRID = 0.9937695435068747  # 201 x 201 grid over (P_S1, P_R1)
WORST_FLAT = 0.20273255405408225  # 1e4-point scan, unit links, alpha = 0.5
WORST_C2 = 0.6804364515081325  # 1e4-point scan, g_SR = 100, alpha = 0.2


# lowpass relays


def test_equal_bandwidth_first_branch():
    spec = LowpassRelaySpec(W=2.0, N_1=1.0, N_2=1.0, P_S=1.0, P_R=3.0)
    cap, a = equal_bandwidth_capacity(spec)
    assert a == 1.0
    assert cap == pytest.approx(2.0 * 0.5 * math.log1p(1.0 / 2.0))


def test_equal_bandwidth_zero_power():
    cap, _ = equal_bandwidth_capacity(LowpassRelaySpec(W=1.0, N_1=1.0, N_2=1.0, P_S=0.0, P_R=1.0))
    assert cap == 0.0


def test_equal_bandwidth_matches_flat_maximin():
    spec = LowpassRelaySpec(W=1.0, N_1=1.0, N_2=1.0, P_S=2.0, P_R=1.0)
    cap, a = equal_bandwidth_capacity(spec)
    assert a < 1
    r = solve_df_maximin(lowpass_subband_channel(spec, 64), 2.0, 1.0).rate
    assert abs(cap - spec.W * r) <= 1e-4


def test_lowpass_channel_is_degraded():
    ch = lowpass_subband_channel(LowpassRelaySpec(W=1.0, N_1=1.0, N_2=0.5, P_S=1.0, P_R=1.0), 8)
    assert np.all(ch.a_SR >= ch.a_SD)


def test_lowpass_spec_validation():
    with pytest.raises(RelayError):
        LowpassRelaySpec(W=1.0, N_1=1.0, N_2=1.0, P_S=1.0, P_R=1.0, W_SD=2.0)
    with pytest.raises(RelayError):
        LowpassRelaySpec(W=0.0, N_1=1.0, N_2=1.0, P_S=1.0, P_R=1.0)


def test_unequal_bandwidth_grid_oracle():
    spec = LowpassRelaySpec(W=1.0, N_1=1.0, N_2=1.0, P_S=4.0, P_R=4.0, W_SR=2.0, W_SD=1.0, W_RD=1.5)
    cap, (ps1, ps2, pr1, pr2) = unequal_bandwidth_capacity(spec)
    assert ps1 + ps2 == pytest.approx(4.0) and pr1 + pr2 == pytest.approx(4.0)
    assert cap == pytest.approx(unequal_bandwidth_terms(spec, ps1, pr1))
    assert UNEQUAL_GRID - 1e-12 <= cap <= UNEQUAL_GRID + 1e-3


def test_unequal_degenerates_to_equal():
    spec = LowpassRelaySpec(W=1.0, N_1=1.0, N_2=1.0, P_S=2.0, P_R=1.0)
    cap, (_, ps2, _, pr2) = unequal_bandwidth_capacity(spec)
    assert cap == pytest.approx(equal_bandwidth_capacity(spec)[0], abs=1e-9)
    assert ps2 == pytest.approx(0.0, abs=1e-6) and pr2 == pytest.approx(0.0, abs=1e-6)


def test_unequal_pure_two_hop():
    spec = LowpassRelaySpec(W=1.0, N_1=1.0, N_2=1.0, P_S=3.0, P_R=2.0, W_SR=2.0, W_SD=1e-9, W_RD=1.0)
    cap, _ = unequal_bandwidth_capacity(spec)
    hop1 = 2.0 * 0.5 * math.log1p(3.0 / 2.0)
    hop2 = 1.0 * 0.5 * math.log1p(2.0 / 2.0)
    assert cap == pytest.approx(min(hop1, hop2), abs=1e-6)


def test_golden_max_boundary():
    x, v = golden_max(lambda t: t, 0.0, 2.0)
    assert x == 2.0 and v == 2.0


# permutation experiment


def test_permutation_symmetric_channel():
    g = np.array([2.0, 2.0])
    a = permutation_experiment(g, g / 2, g, 3.0, 3.0, (0, 1))
    b = permutation_experiment(g, g / 2, g, 3.0, 3.0, (1, 0))
    assert a == pytest.approx(b, abs=1e-12)


def test_permutation_identity_dominates_at_10():
    ident = permutation_experiment(**FIG5_GAINS, P_S=10.0, P_R=10.0, perm=(0, 1))
    swap = permutation_experiment(**FIG5_GAINS, P_S=10.0, P_R=10.0, perm=(1, 0))
    assert ident >= swap - 1e-12


def test_permutation_rejects_bad_perm():
    with pytest.raises(RelayError):
        permutation_experiment(**FIG5_GAINS, P_S=1.0, P_R=1.0, perm=(0, 0))


# underwater acoustics


def test_thorp_values():
    assert float(thorp_absorption(1e-9)) == pytest.approx(0.003, abs=1e-12)
    direct = 0.11 / 2 + 44 / 4101 + 2.75e-4 + 0.003
    assert float(thorp_absorption(1.0)) == pytest.approx(direct, rel=1e-15)
    assert float(thorp_absorption(1.0)) == pytest.approx(THORP_1KHZ, rel=1e-15)
    f = np.linspace(1, 100, 200)
    assert np.all(np.diff(thorp_absorption(f)) > 0)


def test_path_loss_formula():
    d, f = 2.0, 27.0
    A = 1.0 * d**1.5 * 10 ** (d * float(thorp_absorption(f)) / 10)
    assert float(path_loss(d, f)) == pytest.approx(1 / A)
    with pytest.raises(RelayError):
        path_loss(0.0, f)


def test_ambient_noise_value():
    f, w = 27.0, 10.0
    lf = math.log10(f)
    db = [
        17 - 30 * lf,
        40 - 10 + 26 * lf - 60 * math.log10(f + 0.03),
        50 + 7.5 * math.sqrt(w) + 20 * lf - 40 * math.log10(f + 0.4),
        -15 + 20 * lf,
    ]
    direct = sum(10 ** (x / 10) for x in db)
    assert float(ambient_noise_psd(f, 0.0, w)) == pytest.approx(direct, rel=1e-13)
    assert float(ambient_noise_psd(f, 0.0, w)) == pytest.approx(AMBIENT_27_0_10, rel=1e-13)


def test_shipping_component():
    ship = noise_components_db(1.0, 0.5, 0.0)[1]
    assert float(ship) == pytest.approx(40 - 60 * math.log10(1.03))


def test_thermal_wave_crossover():
    w = 10.0
    f = thermal_wave_crossover(w)
    closed = 10 ** ((65 + 7.5 * math.sqrt(w)) / 40) - 0.4
    assert f == pytest.approx(closed, rel=1e-9)
    assert 50.0 <= f <= 200.0


def test_fig7_tap_counts():
    assert UnderwaterSpec().tap_counts == (3, 2, 3)


def test_fading_normalization():
    rng = np.random.default_rng(1)
    for L in (1, 2, 3):
        energy = np.mean([np.sum(np.abs(rayleigh_taps(L, rng)) ** 2) for _ in range(100_000)])
        assert 0.99 <= energy <= 1.01


def test_underwater_determinism():
    spec = UnderwaterSpec(n=16)
    a = list(underwater_channel(spec, 3))
    b = list(underwater_channel(spec, 3))
    for x, y in zip(a, b):
        assert np.array_equal(x.a_SR, y.a_SR) and np.array_equal(x.a_RD, y.a_RD)
    assert np.array_equal(underwater_draw(spec, 2).a_SD, a[2].a_SD)
    assert not np.array_equal(a[0].a_SD, a[1].a_SD)


def test_single_tap_is_flat_up_to_propagation():
    spec = UnderwaterSpec(n=16, coherence=(20.0, 20.0, 20.0))
    ch = underwater_draw(spec, 0)
    f = spec.band_frequencies()
    shape = path_loss(spec.distances[1], f, spec.k) / ambient_noise_psd(f, spec.s, spec.w)
    ratio = ch.a_SD / shape
    assert np.allclose(ratio, ratio[0], rtol=1e-12)


def test_doubling_A0_reduces_rates():
    spec = UnderwaterSpec(n=16)
    ch1 = underwater_draw(spec, 0)
    ch2 = underwater_draw(UnderwaterSpec(n=16, A_0=2.0), 0)
    assert np.allclose(ch2.a_SR, ch1.a_SR / 2)
    P = 100.0
    assert solve_df_maximin(ch2, P, P).rate < solve_df_maximin(ch1, P, P).rate
    assert single_cut_waterfill(ch2.a_SD, P)[1] < single_cut_waterfill(ch1.a_SD, P)[1]


def test_underwater_spec_validation():
    with pytest.raises(RelayError):
        UnderwaterSpec(n=3)
    with pytest.raises(RelayError):
        UnderwaterSpec(a=0.0, h=0.0)


# symbol-asynchronous relay


def test_asynch_profile_overlaps():
    p = asynch_profile(AsynchGeometry(0.5))
    assert p.rho_RS == pytest.approx(0.5) and p.rho_SR == pytest.approx(0.5)
    p = asynch_profile(AsynchGeometry(1e-6))
    assert p.rho_RS == pytest.approx(1.0, abs=1e-5) and p.rho_SR == pytest.approx(0.0, abs=1e-5)
    for d in (0.1, 0.37, 0.9):
        p = asynch_profile(AsynchGeometry(d))
        assert np.max(np.abs(p.correlation_spectrum(64))) == pytest.approx(1.0)
        assert p.g_SR == pytest.approx(d**-2) and p.g_RD == pytest.approx((1 - d) ** -2)


def test_asynch_geometry_validation():
    for d in (0.0, 1.0, -0.2):
        with pytest.raises(RelayError):
            AsynchGeometry(d)


def test_worst_case_single_point():
    prof = AsynchronyProfile(0.7, 0.3, g_SR=2.0)
    alloc = PowerAllocation.uniform(32, 1.0, 1.0, 0.3)
    r, t = worst_case_asynch_rate(prof, alloc, segment=(0.3, 0.3))
    assert t == 0.3
    assert r == asynch_df_rate(AsynchronyProfile(0.7, 0.3, g_SR=2.0), alloc)


def test_worst_case_flat_unit_links():
    alloc = PowerAllocation.uniform(64, 1.0, 1.0, 0.5)
    r, _ = worst_case_asynch_rate(AsynchronyProfile(0.5, 0.5), alloc)
    assert r == pytest.approx(WORST_FLAT, abs=1e-12)


def test_worst_case_against_dense_scan():
    alloc = PowerAllocation.uniform(64, 1.0, 1.0, 0.2)
    r, t = worst_case_asynch_rate(AsynchronyProfile(0.5, 0.5, g_SR=100.0), alloc)
    assert 0 < t < 1
    assert WORST_C2 - 1e-6 <= r <= WORST_C2 + 1e-12


def test_worst_case_cutset_above_df():
    prof = AsynchronyProfile(0.5, 0.5, g_SR=100.0)
    alloc = PowerAllocation.uniform(64, 1.0, 1.0, 0.2)
    df, _ = worst_case_asynch_rate(prof, alloc)
    cs, _ = worst_case_asynch_rate(prof, alloc, bound="cutset")
    assert cs >= df - 1e-12


def test_fig9_regimes():
    n = 64
    rates = {}
    for d in (0.05, 0.5, 0.99):
        prof = asynch_profile(AsynchGeometry(d))
        df = solve_asynch_maximin(prof, 10.0, 10.0, n).rate
        cs = solve_asynch_maximin(prof, 10.0, 10.0, n, mode="cutset").rate
        cf = solve_asynch_cf(prof, 10.0, 10.0, n).rate
        rates[d] = (df, cf, cs)
        assert max(df, cf) <= cs + 1e-9
    assert rates[0.05][0] >= rates[0.05][1]
    assert rates[0.99][1] >= rates[0.99][0]
    df, cf, cs = rates[0.99]
    assert cs - cf <= 0.05 * cs


def test_relay_at_source_exceeds_snr_limit():
    with pytest.raises(RelayError):
        asynch_profile(AsynchGeometry(1e-9))
