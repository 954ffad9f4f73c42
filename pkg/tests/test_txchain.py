"""Transmit chain: conditioning, preamble, OFDM modulation, PAPR."""

import numpy as np
import pytest

from semlink.grid import (
    OfdmParams,
    build_grid_map,
    data_grid,
    demap_symbols,
    make_pilot_sequence,
    used_bin_indices,
)
from semlink.interleave import identity_plan, make_plan, shuffle
from semlink.txchain import (
    FrameLayout,
    TimeFrame,
    TxConfig,
    build_frame,
    make_preamble,
    measure_papr,
    normalize_clip,
    ofdm_modulate,
    quantize_fixed_point,
    tx_reference,
    zadoff_chu,
)


class TestNormalizeClip:
    def test_divides_then_clips_each_component(self):
        x = np.array([0.3 + 0.3j, 6.0 - 9.0j, -0.6 + 0.0j])
        y = normalize_clip(x, 3.0)
        np.testing.assert_allclose(y, [0.1 + 0.1j, 1.0 - 1.0j, -0.2 + 0.0j], atol=1e-15)

    def test_clip_acts_per_component_not_on_magnitude(self):
        # |1.5 + 1.5j| > 1 but each component saturates independently
        y = normalize_clip(np.array([1.5 + 1.5j]), 1.0)
        assert y[0] == 1.0 + 1.0j

    def test_inputs_validated(self):
        with pytest.raises(ValueError):
            normalize_clip(np.array([1.0]), 0.0)
        with pytest.raises(ValueError):
            normalize_clip(np.array([np.nan + 0j]), 1.0)


class TestQuantizer:
    def test_mid_tread_levels(self):
        # m = 2**(bits-1) - 1 levels per unit; 0 and +-1 are exact levels
        q = quantize_fixed_point(np.array([0.0 + 0j, 1.0 - 1.0j]), 4)
        np.testing.assert_array_equal(q, [0.0 + 0j, 1.0 - 1.0j])
        q = quantize_fixed_point(np.array([0.1234567 + 0.7654321j]), 4)
        np.testing.assert_allclose(q, [(1 + 5j) / 7.0], atol=1e-15)

    def test_error_bounded_by_half_step(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-1, 1, 1000) + 1j * rng.uniform(-1, 1, 1000)
        for bits in (2, 8, 14):
            q = quantize_fixed_point(x, bits)
            step = 1.0 / (2 ** (bits - 1) - 1)
            assert np.max(np.abs(q.real - x.real)) <= step / 2 + 1e-12
            assert np.max(np.abs(q.imag - x.imag)) <= step / 2 + 1e-12

    def test_zero_bits_passes_through(self):
        x = np.array([0.123456789 + 0.987654321j])
        np.testing.assert_array_equal(quantize_fixed_point(x, 0), x)

    def test_range_and_bits_validated(self):
        with pytest.raises(ValueError):
            quantize_fixed_point(np.array([1.5 + 0j]), 8)
        with pytest.raises(ValueError):
            quantize_fixed_point(np.array([0.5 + 0j]), 1)
        with pytest.raises(ValueError):
            quantize_fixed_point(np.array([0.5 + 0j]), 25)


class TestZadoffChu:
    def test_matches_closed_form(self):
        n = np.arange(127)
        oracle = np.exp(-1j * np.pi * 25 * n * (n + 1) / 127)
        np.testing.assert_allclose(zadoff_chu(25, 127), oracle, atol=1e-12)

    def test_constant_envelope(self):
        z = zadoff_chu(7, 139)
        np.testing.assert_allclose(np.abs(z), 1.0, atol=1e-12)

    def test_ideal_periodic_autocorrelation(self):
        # perfect sequence: all nonzero circular lags vanish
        z = zadoff_chu(25, 127)
        spec = np.abs(np.fft.ifft(np.fft.fft(z) * np.conj(np.fft.fft(z))))
        assert spec[0] == pytest.approx(127.0, rel=1e-12)
        assert np.max(spec[1:]) < 1e-9

    def test_parameters_validated(self):
        with pytest.raises(ValueError):
            zadoff_chu(2, 128)  # even length
        with pytest.raises(ValueError):
            zadoff_chu(0, 127)
        with pytest.raises(ValueError):
            zadoff_chu(9, 27)  # gcd(9, 27) != 1


def test_preamble_streams_are_cyclic_shifts():
    cfg = TxConfig()
    pre = make_preamble(cfg, 2)
    assert pre.shape == (2, 127)
    np.testing.assert_allclose(pre[1], np.roll(pre[0], 127 // 2), atol=1e-12)


class TestOfdmModulate:
    def test_round_trips_through_numpy_fft(self):
        p = OfdmParams()
        rng = np.random.default_rng(2)
        cells = rng.standard_normal((2, 7, 72)) + 1j * rng.standard_normal((2, 7, 72))
        frame = ofdm_modulate(data_grid(p, cells))
        assert frame.samples.shape == (2, 7 * 138)
        body = frame.samples[:, frame.layout.body_slice(3)]
        freq = np.fft.fft(body, norm="ortho", axis=1)
        np.testing.assert_allclose(freq[:, used_bin_indices(p)], cells[:, 3], atol=1e-12)
        # unused bins, DC included, stay empty
        unused = np.setdiff1d(np.arange(128), used_bin_indices(p))
        assert np.max(np.abs(freq[:, unused])) < 1e-12

    def test_cyclic_prefix_copies_tail(self):
        p = OfdmParams()
        rng = np.random.default_rng(3)
        cells = rng.standard_normal((2, 7, 72)) + 1j * rng.standard_normal((2, 7, 72))
        frame = ofdm_modulate(data_grid(p, cells))
        sym = frame.samples[:, frame.layout.symbol_slice(0)]
        np.testing.assert_allclose(sym[:, :10], sym[:, -10:], atol=1e-15)

    def test_unitary_scaling_preserves_power(self):
        # Parseval: mean body power equals mean cell power times used/fft ratio
        p = OfdmParams()
        rng = np.random.default_rng(4)
        cells = rng.standard_normal((2, 70, 72)) + 1j * rng.standard_normal((2, 70, 72))
        frame = ofdm_modulate(data_grid(p, cells))
        body_energy = 0.0
        for i in range(70):
            body = frame.samples[:, frame.layout.body_slice(i)]
            body_energy += np.sum(np.abs(body) ** 2)
        assert body_energy == pytest.approx(np.sum(np.abs(cells) ** 2), rel=1e-12)


def test_tx_reference_is_conditioned_payload():
    cfg = TxConfig(norm_factor=3.0, quant_bits=14)
    rng = np.random.default_rng(5)
    symbols = rng.standard_normal(500) + 1j * rng.standard_normal(500)
    ref = tx_reference(symbols, cfg)
    np.testing.assert_array_equal(
        ref, quantize_fixed_point(normalize_clip(symbols, 3.0), 14)
    )


class TestBuildFrame:
    def test_layout_and_preamble(self):
        p = OfdmParams()
        cfg = TxConfig()
        plan = identity_plan(864)
        pilots = make_pilot_sequence(1001, p)
        symbols = np.full(864, 0.5 + 0.5j)
        frame, gmap = build_frame(symbols, cfg, p, plan, pilots)
        assert gmap.n_blocks == 1
        assert frame.layout.preamble_len == 127
        assert frame.layout.n_symbols == 7
        assert frame.samples.shape == (2, 127 + 7 * 138)
        np.testing.assert_allclose(
            frame.samples[:, :127], make_preamble(cfg, 2), atol=1e-12
        )

    def test_payload_cells_match_tx_reference(self):
        p = OfdmParams()
        cfg = TxConfig()
        rng = np.random.default_rng(6)
        symbols = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
        plan = make_plan(17, 1000)
        pilots = make_pilot_sequence(1001, p)
        frame, gmap = build_frame(symbols, cfg, p, plan, pilots)
        # demodulate by hand and compare against the conditioned payload
        bodies = np.stack(
            [frame.samples[:, frame.layout.body_slice(i)] for i in range(gmap.n_symbols)],
            axis=1,
        )
        freq = np.fft.fft(bodies, norm="ortho", axis=2)
        grid = data_grid(p, freq[:, :, used_bin_indices(p)])
        recovered = demap_symbols(grid, gmap)
        np.testing.assert_allclose(
            recovered, shuffle(tx_reference(symbols, cfg), plan), atol=1e-12
        )

    def test_plan_length_mismatch_rejected(self):
        p = OfdmParams()
        pilots = make_pilot_sequence(1001, p)
        with pytest.raises(ValueError):
            build_frame(np.ones(10, dtype=complex), TxConfig(), p, identity_plan(9), pilots)


class TestMeasurePapr:
    def _tone_frame(self):
        # two symbols per stream with hand-computable peak and mean powers
        layout = FrameLayout(preamble_len=0, n_symbols=2, fft_size=8, cp_len=2)
        samples = np.zeros((1, layout.n_samples), dtype=np.complex128)
        # symbol 0 body: an impulse -> peak 1, mean 1/8, papr 9.03 dB
        samples[0, layout.body_slice(0)] = np.array([1, 0, 0, 0, 0, 0, 0, 0])
        # symbol 1 body: constant envelope 2 -> papr 0 dB at symbol reference
        samples[0, layout.body_slice(1)] = 2.0
        return TimeFrame(samples=samples, layout=layout)

    def test_symbol_reference_per_symbol_values(self):
        stats = measure_papr(self._tone_frame(), per_symbol=True)
        assert stats.n_symbols == 2
        assert stats.n_excluded == 0
        np.testing.assert_allclose(
            np.sort(stats.per_symbol_db), [0.0, 10 * np.log10(8.0)], atol=1e-12
        )

    def test_frame_reference_uses_global_mean_power(self):
        stats = measure_papr(self._tone_frame(), per_symbol=True, reference="frame")
        global_mean = (1.0 / 8 + 4.0) / 2
        expected = np.sort(10 * np.log10(np.array([1.0, 4.0]) / global_mean))
        np.testing.assert_allclose(np.sort(stats.per_symbol_db), expected, atol=1e-12)

    def test_zero_power_symbols_excluded(self):
        layout = FrameLayout(preamble_len=0, n_symbols=2, fft_size=8, cp_len=0)
        samples = np.zeros((1, layout.n_samples), dtype=np.complex128)
        samples[0, layout.body_slice(0)] = 1.0
        stats = measure_papr(TimeFrame(samples=samples, layout=layout))
        assert stats.n_symbols == 1
        assert stats.n_excluded == 1

    def test_all_silent_frame_rejected(self):
        layout = FrameLayout(preamble_len=0, n_symbols=1, fft_size=8, cp_len=0)
        samples = np.zeros((1, 8), dtype=np.complex128)
        with pytest.raises(ValueError):
            measure_papr(TimeFrame(samples=samples, layout=layout))

    def test_unknown_reference_rejected(self):
        with pytest.raises(ValueError):
            measure_papr(self._tone_frame(), reference="span")

    def test_preamble_and_prefix_are_ignored(self):
        frame = self._tone_frame()
        # corrupt the CP spans with huge values; stats must not move
        stats_before = measure_papr(frame)
        tampered = frame.samples.copy()
        tampered[:, frame.layout.symbol_slice(0).start : frame.layout.body_slice(0).start] = 100.0
        stats_after = measure_papr(TimeFrame(samples=tampered, layout=frame.layout))
        assert stats_after.p50_db == stats_before.p50_db
        assert stats_after.p99_db == stats_before.p99_db


def test_txconfig_validation():
    with pytest.raises(ValueError):
        TxConfig(norm_factor=0.0)
    with pytest.raises(ValueError):
        TxConfig(quant_bits=1)
    with pytest.raises(ValueError):
        TxConfig(clip_limit=2.0)
