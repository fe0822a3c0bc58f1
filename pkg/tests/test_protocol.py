"""Tests for the round-level protocol: transmission, cancellation, decoding, rates."""

from fractions import Fraction

import numpy as np
import pytest

from stia.channel import complex_normal
from stia.precoding import build_stia_precoders
from stia.protocol import (
    DecodeFailureError,
    EffectiveChannel,
    ReceivedSignal,
    SymbolBlock,
    batch_effective_channels,
    batch_rounds,
    cancel_interference,
    decode_round,
    difference_noise_covariance,
    draw_round_channels,
    effective_channel,
    phase_one_transmit,
    phase_two_transmit,
    receive,
    round_rate,
    run_stia_round,
    simulate_stia_round,
    tdma_slot,
    tdma_transmit,
    whitening_matrix,
    zf_slot,
    zf_transmit,
)


def _symbols(K, rng):
    return SymbolBlock.random(K, rng)


# --------------------------------------------------------------------------
# transmission
# --------------------------------------------------------------------------


def test_phase_one_zero_symbols():
    x = phase_one_transmit(SymbolBlock.zeros(3))
    np.testing.assert_array_equal(x, np.zeros(2))


def test_phase_one_direct_sum():
    sb = SymbolBlock({1: [1, 0], 2: [0, 1], 3: [1, 1]})
    np.testing.assert_allclose(phase_one_transmit(sb), [2, 2])


def test_phase_one_power_audit():
    # E||x||^2 must equal the budget for unit-variance symbols.
    rng = np.random.default_rng(8)
    power = 10.0
    total = 0.0
    trials = 10_000
    for _ in range(trials):
        x = phase_one_transmit(_symbols(3, rng), power=power)
        total += float(np.sum(np.abs(x) ** 2))
    assert total / trials == pytest.approx(power, rel=0.02)


def test_phase_two_identity_reduces_to_phase_one():
    rng = np.random.default_rng(9)
    sb = _symbols(3, rng)
    from stia.precoding import PrecoderSet

    pre = PrecoderSet(slot=2, per_user={k: np.eye(2) for k in (1, 2, 3)})
    np.testing.assert_allclose(phase_two_transmit(sb, pre), phase_one_transmit(sb))


def test_phase_two_linearity_single_user():
    rng = np.random.default_rng(10)
    cur = complex_normal(rng, (3, 2))
    out = complex_normal(rng, (3, 2))
    pre = build_stia_precoders(cur, out)
    sb = SymbolBlock.zeros(3)
    sb.per_user[1] = complex_normal(rng, 2)
    x = phase_two_transmit(sb, pre)
    np.testing.assert_allclose(x, pre.per_user[1] @ sb.per_user[1], atol=1e-12)


def test_phase_two_interference_matches_reference_slot():
    # What user 2 receives beyond its own stream must equal the slot-one
    # mixture of users 1 and 3.
    rng = np.random.default_rng(11)
    cur = complex_normal(rng, (3, 2))
    ref = complex_normal(rng, (3, 2))
    pre = build_stia_precoders(cur, ref)
    sb = _symbols(3, rng)
    y2 = receive(cur[1], phase_two_transmit(sb, pre))
    own = (cur[1] @ pre.per_user[2]) @ sb.per_user[2]
    expected_interference = ref[1] @ (sb.per_user[1] + sb.per_user[3])
    assert abs((y2 - own) - expected_interference) <= 1e-9 * abs(expected_interference)


# --------------------------------------------------------------------------
# reception
# --------------------------------------------------------------------------


def test_receive_zero_input():
    assert receive(np.array([1.0, 2.0]), np.zeros(2)) == 0


def test_receive_basis_inner_product():
    assert receive(np.array([1.0, 0.0]), np.array([3.0 + 1j, 7.0])) == pytest.approx(3.0 + 1j)


def test_receive_noise_variance_audit():
    rng = np.random.default_rng(12)
    h = np.array([1.0 + 0j, -0.5 + 0.25j])
    x = np.array([0.3 - 0.1j, 1.1 + 0j])
    clean = complex(h @ x)
    noise = np.array([receive(h, x, 1.0, rng) - clean for _ in range(100_000)])
    assert np.mean(np.abs(noise) ** 2) == pytest.approx(1.0, abs=0.02)


def test_receive_requires_rng_for_noise():
    with pytest.raises(ValueError):
        receive(np.ones(2), np.ones(2), noise_std=1.0)


# --------------------------------------------------------------------------
# cancellation and effective channels
# --------------------------------------------------------------------------


def _noise_free_round(K, seed):
    rng = np.random.default_rng(seed)
    ch = draw_round_channels(K, 1, rng)[0]
    sb = _symbols(K, rng)
    return ch, sb


def test_cancel_differences_depend_only_on_own_symbols():
    ch, sb = _noise_free_round(3, 13)
    for j in (2, 3):
        sb.per_user[j] = np.zeros(2, dtype=complex)
    res = run_stia_round(ch, sb)
    d_direct = -np.array(
        [row @ sb.per_user[1] for row in res.effective_channels[1].matrix]
    )
    pres = [build_stia_precoders(ch[m], ch[0]) for m in (1, 2)]
    signals = [
        ReceivedSignal(m, {k: receive(ch[m, k - 1], x) for k in (1, 2, 3)})
        for m, x in enumerate(
            [phase_one_transmit(sb)] + [phase_two_transmit(sb, p) for p in pres]
        )
    ]
    np.testing.assert_allclose(cancel_interference(signals, 1), d_direct, atol=1e-10)


def test_cancel_interferers_only_leaves_nothing():
    ch, sb = _noise_free_round(3, 14)
    sb.per_user[1] = np.zeros(2, dtype=complex)
    pres = [build_stia_precoders(ch[m], ch[0]) for m in (1, 2)]
    xs = [phase_one_transmit(sb)] + [phase_two_transmit(sb, p) for p in pres]
    signals = [
        ReceivedSignal(m, {k: receive(ch[m, k - 1], x) for k in (1, 2, 3)})
        for m, x in enumerate(xs)
    ]
    d = cancel_interference(signals, 1)
    scale = sum(abs(ch[0, 0] @ sb.per_user[j]) for j in (2, 3))
    assert np.max(np.abs(d)) <= 1e-9 * scale


def test_cancel_matches_symbolwise_expansion():
    # Both sides of the subtraction, expanded symbol by symbol.
    ch, sb = _noise_free_round(3, 15)
    pres = [build_stia_precoders(ch[m], ch[0]) for m in (1, 2)]
    xs = [phase_one_transmit(sb)] + [phase_two_transmit(sb, p) for p in pres]
    signals = [
        ReceivedSignal(m, {k: receive(ch[m, k - 1], x) for k in (1, 2, 3)})
        for m, x in enumerate(xs)
    ]
    d = cancel_interference(signals, 1)
    own_ref = ch[0, 0] @ sb.per_user[1]
    for m in (1, 2):
        own_slot = (ch[m, 0] @ pres[m - 1].per_user[1]) @ sb.per_user[1]
        assert d[m - 1] == pytest.approx(own_slot - own_ref, rel=1e-9, abs=1e-12)


def test_cancel_needs_two_slots():
    with pytest.raises(ValueError):
        cancel_interference([ReceivedSignal(0, {1: 1.0})], 1)


def test_effective_channel_degenerate_self_cancellation():
    from stia.precoding import PrecoderSet

    ch = complex_normal(np.random.default_rng(16), (3, 2))
    pre = PrecoderSet(slot=1, per_user={k: np.eye(2) for k in (1, 2, 3)})
    eff = effective_channel(1, ch, [ch, ch], [pre, pre])
    np.testing.assert_allclose(eff.matrix, np.zeros((2, 2)), atol=1e-14)
    with pytest.raises(DecodeFailureError):
        decode_round(eff, np.zeros(2))


@pytest.mark.parametrize("K", [3, 4])
def test_effective_channel_rank(K):
    rng = np.random.default_rng(17 + K)
    ch, v, _, _ = batch_rounds(K, 1000, rng)
    heff = batch_effective_channels(ch, v)
    s = np.linalg.svd(heff, compute_uv=False)
    full = s[..., -1] > 1e-9 * s[..., 0]
    assert full.all(axis=1).sum() >= 999


# --------------------------------------------------------------------------
# decoding
# --------------------------------------------------------------------------


def test_decode_identity_effective_channel():
    rng = np.random.default_rng(18)
    s = complex_normal(rng, 3)
    eff = EffectiveChannel(user=1, matrix=np.eye(3, dtype=complex), constituent_slots=(0, 1, 2, 3))
    np.testing.assert_allclose(decode_round(eff, s), s)


@pytest.mark.parametrize("K", [3, 5])
def test_noise_free_round_recovers_symbols(K):
    rng = np.random.default_rng(19 + K)
    for _ in range(20):
        ch = draw_round_channels(K, 1, rng)[0]
        sb = _symbols(K, rng)
        res = run_stia_round(ch, sb)
        for k in range(1, K + 1):
            err = np.max(np.abs(res.decoded.per_user[k] - sb.per_user[k]))
            assert err <= 1e-8 * max(1.0, float(np.max(np.abs(sb.per_user[k]))))


def test_noisy_decode_is_consistent():
    rng = np.random.default_rng(20)
    ch = draw_round_channels(3, 1, rng)[0]
    sb = _symbols(3, rng)
    res = run_stia_round(ch, sb, power=1e8, noise_std=1.0, rng=rng)
    for k in (1, 2, 3):
        err = np.max(np.abs(res.decoded.per_user[k] - sb.per_user[k]))
        assert err < 0.2  # high SNR, whitened least squares stays close


def test_round_residuals_and_dof_bookkeeping():
    rng = np.random.default_rng(21)
    res = simulate_stia_round(4, rng)
    assert max(res.residual_interference.values()) <= 1e-9
    symbols_decoded = sum(len(v) for v in res.decoded.per_user.values())
    assert Fraction(symbols_decoded, 4) == 3  # K(K-1) symbols over K slots


def test_power_scaling_preserves_cancellation():
    rng = np.random.default_rng(22)
    ch = draw_round_channels(3, 1, rng)[0]
    sb = _symbols(3, rng)
    res = run_stia_round(ch, sb, power=10.0)
    assert max(res.residual_interference.values()) <= 1e-9
    for k in (1, 2, 3):
        err = np.max(np.abs(res.decoded.per_user[k] - sb.per_user[k]))
        assert err <= 1e-8


# --------------------------------------------------------------------------
# rates
# --------------------------------------------------------------------------


def test_round_rate_vanishes_at_zero_snr():
    eff = EffectiveChannel(user=1, matrix=np.eye(2, dtype=complex), constituent_slots=(0, 1, 2))
    assert round_rate(eff, 1e-12, 3) < 1e-9


def test_round_rate_identity_closed_form():
    for K in (3, 4, 5):
        eff = EffectiveChannel(
            user=1, matrix=np.eye(K - 1, dtype=complex), constituent_slots=tuple(range(K))
        )
        rate = round_rate(eff, float(K * (K - 1)), K, noise_cov=np.eye(K - 1))
        assert rate == pytest.approx((K - 1) / K)


def test_round_rate_slope_near_two_per_round():
    rng = np.random.default_rng(23)
    lo, hi = [], []
    for _ in range(600):
        res = simulate_stia_round(3, rng)
        lo.append(sum(round_rate(res.effective_channels[k], 1e4, 3) for k in (1, 2, 3)))
        hi.append(sum(round_rate(res.effective_channels[k], 1e6, 3) for k in (1, 2, 3)))
    slope = (np.mean(hi) - np.mean(lo)) / (np.log2(1e6) - np.log2(1e4))
    assert 1.9 <= slope <= 2.1


def test_whitening_matrix_inverts_covariance():
    for K in (3, 4, 6):
        w = whitening_matrix(K)
        cov = difference_noise_covariance(K)
        np.testing.assert_allclose(w @ cov @ w, np.eye(K - 1), atol=1e-12)


def test_zf_slot_orthonormal_channels():
    ch = np.vstack([np.eye(2), complex_normal(np.random.default_rng(24), (1, 2))])
    snr = 100.0
    rates = zf_slot(ch, [1, 2], snr)
    for u in (1, 2):
        assert rates[u] == pytest.approx(np.log2(1.0 + snr / 2.0))


def test_tdma_slope_near_one():
    rng = np.random.default_rng(25)
    gains = np.sum(np.abs(complex_normal(rng, (4000, 2))) ** 2, axis=1)
    lo = np.mean(np.log2(1 + 1e4 * gains))
    hi = np.mean(np.log2(1 + 1e6 * gains))
    slope = (hi - lo) / (np.log2(1e6) - np.log2(1e4))
    assert 0.95 <= slope <= 1.05
    assert tdma_slot(np.array([1.0, 0.0]), 1e4) == pytest.approx(np.log2(1 + 1e4))


def test_zf_and_tdma_transmit_power():
    rng = np.random.default_rng(26)
    power = 10.0
    total_zf = 0.0
    total_tdma = 0.0
    trials = 4000
    for _ in range(trials):
        ch = complex_normal(rng, (3, 2))
        syms = {1: complex(complex_normal(rng)), 2: complex(complex_normal(rng))}
        x = zf_transmit(ch, [1, 2], syms, power=power)
        total_zf += float(np.sum(np.abs(x) ** 2))
        x = tdma_transmit(ch[0], complex(complex_normal(rng)), power=power)
        total_tdma += float(np.sum(np.abs(x) ** 2))
    assert total_zf / trials == pytest.approx(power, rel=0.05)
    assert total_tdma / trials == pytest.approx(power, rel=0.05)


# --------------------------------------------------------------------------
# batch path consistency
# --------------------------------------------------------------------------


def test_batch_matches_reference_round():
    rng = np.random.default_rng(27)
    for K in (3, 4):
        ch, v, _, _ = batch_rounds(K, 3, rng)
        heff = batch_effective_channels(ch, v)
        for c in range(3):
            pres = [build_stia_precoders(ch[c, m], ch[c, 0]) for m in range(1, K)]
            for k in range(1, K + 1):
                np.testing.assert_allclose(
                    v[c, :, k - 1], np.stack([p.per_user[k] for p in pres]), atol=1e-10
                )
                eff = effective_channel(k, ch[c, 0], [ch[c, m] for m in range(1, K)], pres)
                np.testing.assert_allclose(heff[c, k - 1], eff.matrix, atol=1e-10)
