"""Channel models: Rapp PA, tapped-delay fading, AWGN, drift."""

import math

import numpy as np
import pytest

from semlink.channel import (
    ChannelProfile,
    ChannelRealization,
    PaParams,
    awgn,
    apply_mimo_channel,
    derive_seed,
    draw_channel,
    exp_pdp_profile,
    frequency_response,
    identity_channel,
    pa_rapp,
    propagate,
)
from semlink.grid import OfdmParams, used_bin_indices
from semlink.txchain import FrameLayout, TimeFrame


class TestDeriveSeed:
    def test_deterministic_and_mixed_types(self):
        assert derive_seed("a", 1) == derive_seed("a", 1)
        assert derive_seed("a", 1) != derive_seed("a", 2)
        assert derive_seed("a", 1) != derive_seed("a1")

    def test_frozen_value(self):
        # pins the hash-to-seed convention
        assert derive_seed("a", 1) == 1026597418267980407

    def test_fits_in_64_bits(self):
        for parts in [("x",), ("channel", 3, 7), (0,)]:
            s = derive_seed(*parts)
            assert 0 <= s < 2**64


class TestRappPa:
    def test_small_signal_gain_is_linear(self):
        pa = PaParams(smoothness=3.0, sat=1.0, backoff_db=0.0)
        x = np.array([1e-4 + 0j, 0 + 1e-4j])
        np.testing.assert_allclose(pa_rapp(x, pa), x, rtol=1e-6)

    def test_hard_saturation_amplitude(self):
        pa = PaParams(smoothness=3.0, sat=0.7, backoff_db=0.0)
        y = pa_rapp(np.array([100.0 + 0j]), pa)
        assert abs(y[0]) == pytest.approx(0.7, rel=1e-3)

    def test_matches_closed_form(self):
        pa = PaParams(smoothness=2.0, sat=1.0, backoff_db=0.0)
        r = np.linspace(0.1, 3.0, 20)
        y = pa_rapp(r.astype(np.complex128), pa)
        oracle = r / (1.0 + r**4.0) ** 0.25
        np.testing.assert_allclose(np.abs(y), oracle, atol=1e-12)

    def test_phase_preserved(self):
        pa = PaParams()
        x = 2.0 * np.exp(1j * np.linspace(0, 2 * np.pi, 12, endpoint=False))
        y = pa_rapp(x, pa)
        np.testing.assert_allclose(np.angle(y), np.angle(x), atol=1e-12)

    def test_backoff_scales_input(self):
        # +20 dB backoff divides the drive by 10 before the nonlinearity
        pa0 = PaParams(backoff_db=0.0)
        pa20 = PaParams(backoff_db=20.0)
        x = np.array([0.5 + 0.5j])
        np.testing.assert_allclose(pa_rapp(x, pa20), pa_rapp(x / 10.0, pa0), atol=1e-15)

    def test_parameters_validated(self):
        with pytest.raises(ValueError):
            PaParams(smoothness=0.0)
        with pytest.raises(ValueError):
            PaParams(sat=-1.0)


class TestChannelDraw:
    def test_exp_pdp_powers_normalized_and_decaying(self):
        prof = exp_pdp_profile(8, 3.0)
        # expected per-tap powers across many draws: geometric, unit total
        acc = np.zeros(8)
        for seed in range(400):
            ch = draw_channel(prof, 2, 2, seed=seed)
            acc += np.mean(np.abs(ch.taps) ** 2, axis=(0, 1))
        acc /= 400
        assert acc.sum() == pytest.approx(1.0, abs=0.05)
        ratios = acc[:-1] / acc[1:]
        np.testing.assert_allclose(10 * np.log10(ratios), 3.0, atol=0.6)

    def test_flat_profile_single_unit_tap(self):
        ch = draw_channel(ChannelProfile(kind="flat"), 2, 2, seed=3)
        assert ch.taps.shape == (2, 2, 1)
        powers = [np.mean(np.abs(draw_channel(ChannelProfile(kind="flat"), 1, 1, s).taps) ** 2)
                  for s in range(2000)]
        assert np.mean(powers) == pytest.approx(1.0, abs=0.05)

    def test_deterministic_in_seed(self):
        prof = exp_pdp_profile(4, 2.0)
        a = draw_channel(prof, 2, 2, seed=11)
        b = draw_channel(prof, 2, 2, seed=11)
        np.testing.assert_array_equal(a.taps, b.taps)

    def test_identity_profile(self):
        ch = draw_channel(ChannelProfile(kind="identity"), 2, 2, seed=0)
        np.testing.assert_array_equal(ch.taps[:, :, 0], np.eye(2))
        with pytest.raises(ValueError):
            draw_channel(ChannelProfile(kind="identity"), 2, 3, seed=0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            ChannelProfile(kind="rician")


class TestAwgn:
    def test_variance_calibration(self):
        x = np.zeros((1, 200_000), dtype=np.complex128)
        for snr_db, ref in [(0.0, 1.0), (10.0, 2.0)]:
            y = awgn(x, snr_db, ref, seed=42)
            var = np.mean(np.abs(y) ** 2)
            expected = ref / 10 ** (snr_db / 10)
            assert var == pytest.approx(expected, rel=0.02)
            # circular symmetry: I and Q split the variance evenly
            assert np.var(y.real) == pytest.approx(expected / 2, rel=0.03)

    def test_infinite_snr_returns_copy(self):
        x = np.ones((1, 10), dtype=np.complex128)
        y = awgn(x, math.inf, 1.0, seed=0)
        np.testing.assert_array_equal(y, x)
        assert y is not x

    def test_deterministic_in_seed(self):
        x = np.zeros((2, 100), dtype=np.complex128)
        np.testing.assert_array_equal(awgn(x, 5, 1, seed=9), awgn(x, 5, 1, seed=9))
        assert not np.array_equal(awgn(x, 5, 1, seed=9), awgn(x, 5, 1, seed=10))

    def test_nonpositive_reference_rejected(self):
        with pytest.raises(ValueError):
            awgn(np.zeros((1, 4), dtype=np.complex128), 10.0, 0.0, seed=0)


class TestPropagate:
    def test_matches_numpy_convolve(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((2, 300)) + 1j * rng.standard_normal((2, 300))
        ch = draw_channel(exp_pdp_profile(5, 2.0), 2, 2, seed=21)
        y = propagate(x, ch)
        oracle = np.zeros_like(y)
        for r in range(2):
            for t in range(2):
                oracle[r] += np.convolve(x[t], ch.taps[r, t])[:300]
        np.testing.assert_allclose(y, oracle, atol=1e-12)

    def test_identity_channel_passthrough(self):
        x = np.arange(20, dtype=np.complex128).reshape(2, 10)
        np.testing.assert_array_equal(propagate(x, identity_channel(2)), x)

    def test_shape_validated(self):
        ch = identity_channel(2)
        with pytest.raises(ValueError):
            propagate(np.zeros((3, 10), dtype=np.complex128), ch)

    def test_drift_endpoints(self):
        # single tap drifting a -> b: first sample sees a, last sees b
        a, b = 1.0 + 0j, 3.0 + 0j
        ch = ChannelRealization(
            taps=np.full((1, 1, 1), a),
            taps_end=np.full((1, 1, 1), b),
        )
        x = np.ones((1, 101), dtype=np.complex128)
        y = propagate(x, ch)
        assert y[0, 0] == pytest.approx(a)
        assert y[0, -1] == pytest.approx(b)
        assert y[0, 50] == pytest.approx(2.0)  # halfway

    def test_static_limit_of_drift(self):
        rng = np.random.default_rng(9)
        taps = rng.standard_normal((2, 2, 3)) + 1j * rng.standard_normal((2, 2, 3))
        x = rng.standard_normal((2, 200)) + 1j * rng.standard_normal((2, 200))
        static = ChannelRealization(taps=taps)
        frozen = ChannelRealization(taps=taps, taps_end=taps.copy())
        np.testing.assert_allclose(propagate(x, static), propagate(x, frozen), atol=1e-12)


def test_frequency_response_matches_dft_of_taps():
    p = OfdmParams()
    ch = draw_channel(exp_pdp_profile(6, 2.0), 2, 2, seed=5)
    h = frequency_response(ch, p)
    assert h.shape == (72, 2, 2)
    full = np.fft.fft(ch.taps, n=p.fft_size, axis=2)  # (rx, tx, fft)
    oracle = full[:, :, used_bin_indices(p)]
    np.testing.assert_allclose(h, np.transpose(oracle, (2, 0, 1)), atol=1e-12)


def test_apply_mimo_channel_noiseless_equals_propagate():
    layout = FrameLayout(preamble_len=0, n_symbols=2, fft_size=16, cp_len=4)
    rng = np.random.default_rng(10)
    samples = rng.standard_normal((2, layout.n_samples)) + 0j
    frame = TimeFrame(samples=samples, layout=layout)
    ch = draw_channel(exp_pdp_profile(3, 2.0), 2, 2, seed=6)
    out = apply_mimo_channel(frame, ch)
    np.testing.assert_allclose(out.samples, propagate(samples, ch), atol=1e-12)
    assert out.layout == layout


def test_apply_mimo_channel_noise_seed_reproducible():
    layout = FrameLayout(preamble_len=0, n_symbols=1, fft_size=64, cp_len=0)
    samples = np.ones((2, 64), dtype=np.complex128)
    frame = TimeFrame(samples=samples, layout=layout)
    ch = draw_channel(exp_pdp_profile(3, 2.0), 2, 2, seed=6, noise_snr_db=10.0)
    a = apply_mimo_channel(frame, ch, noise_seed=77)
    b = apply_mimo_channel(frame, ch, noise_seed=77)
    c = apply_mimo_channel(frame, ch, noise_seed=78)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)
