import numpy as np
import pytest

from cematk.leakage import LeakParams, round1_intermediate_byte
from cematk.present import KeyRegister, key_schedule
from cematk.simulate import (SimConfig, default_config,
                             default_sweep_plaintexts, leak_windows,
                             simulate_idle_set, simulate_set, simulate_trace)

KEY = KeyRegister(0xACDEFB21F9234375C0E6, 80)


def compact(**overrides):
    seed = overrides.pop("seed", 42)
    base = dict(n_samples=256, leak_indices=(16, 48, 80, 112, 144, 176, 208, 240),
                leak_width=4, repetitions=1)
    base.update(overrides)
    return default_config(KEY, seed=seed, **base)


class TestSimConfig:
    def test_defaults_are_valid(self):
        cfg = default_config(KEY, seed=1)
        assert cfg.n_samples == 5000
        assert cfg.sample_rate == 250e6
        assert cfg.repetitions == 5

    @pytest.mark.parametrize("bad", [
        dict(leak_indices=(1, 2, 3)),
        dict(leak_indices=(0,) * 8, jitter_max=1),
        dict(leak_indices=(4990,) * 8, leak_width=40),
        dict(repetitions=0),
        dict(noise_std=-1.0),
        dict(jitter_max=-2),
        dict(carrier_freq=130e6),  # above Nyquist for 250 MHz
        dict(n_samples=1),
        dict(seed=1 << 64),
    ])
    def test_rejects_invalid(self, bad):
        kwargs = dict(key=KEY, seed=1)
        kwargs.update(bad)
        with pytest.raises(ValueError):
            SimConfig(**kwargs)

    def test_summary_has_no_key_material(self):
        s = default_config(KEY, seed=3).summary()
        assert "key" not in s
        assert s["seed"] == 3


class TestNoiselessExactness:
    def test_leak_samples_equal_leak_energy_and_rest_equal_baseline(self):
        cfg = default_config(KEY, seed=0, leak_params=LeakParams(1.0, 2.0))
        ts = simulate_set(default_sweep_plaintexts(), cfg)
        k1 = key_schedule(KEY)[0]
        off = np.ones(cfg.n_samples, bool)
        for j, idx in enumerate(cfg.leak_indices):
            k_byte = (k1 >> (8 * (7 - j))) & 0xFF
            for t in (0, 7, 255):
                d = round1_intermediate_byte(t, k_byte)
                expected = np.float32(1.0 * d.bit_count() + 2.0)
                assert ts.traces[t, idx] == expected
            off[idx:idx + cfg.leak_width] = False
        assert np.all(ts.traces[:, off] == np.float32(2.0))

    def test_zero_plaintext_zero_key_leaks_hw_of_cc(self):
        cfg = default_config(KeyRegister(0, 80), seed=0)
        tr = simulate_trace(0, cfg)
        for idx in cfg.leak_indices:
            assert tr.samples[idx] == np.float32(4.0)  # HW(0xCC)

    def test_baseline_only_changes_offset(self):
        cfg_b = compact(leak_params=LeakParams(1.0, 2.0))
        ts = simulate_set([0], cfg_b)
        off = np.ones(256, bool)
        for idx in cfg_b.leak_indices:
            off[idx:idx + cfg_b.leak_width] = False
        assert np.all(ts.traces[0, off] == np.float32(2.0))


class TestDeterminism:
    def test_identical_config_identical_sets(self):
        cfg = compact(noise_std=1.5, jitter_max=3,
                      leak_indices=(16, 48, 80, 112, 144, 176, 208, 240))
        pts = default_sweep_plaintexts()[:32]
        a = simulate_set(pts, cfg)
        b = simulate_set(pts, cfg)
        assert np.array_equal(a.traces.view(np.uint32), b.traces.view(np.uint32))
        assert np.array_equal(a.plaintexts, b.plaintexts)

    def test_different_seed_different_noise(self):
        a = simulate_set([0], compact(noise_std=1.0, seed=1))
        b = simulate_set([0], compact(noise_std=1.0, seed=2))
        assert not np.array_equal(a.traces, b.traces)

    def test_set_row_equals_single_trace_call(self):
        cfg = compact(noise_std=0.7, jitter_max=2, repetitions=3)
        pts = default_sweep_plaintexts()[:16]
        ts = simulate_set(pts, cfg)
        for i in (0, 5, 15):
            alone = simulate_trace(pts[i], cfg, trace_index=i)
            assert np.array_equal(alone.samples, ts.traces[i])

    def test_idle_same_seed_shares_noise_with_enc(self):
        cfg = compact(noise_std=1.0)
        enc = simulate_set([0] * 4, cfg)
        idle = simulate_idle_set(4, cfg)
        off = np.ones(256, bool)
        for idx in cfg.leak_indices:
            off[idx:idx + cfg.leak_width] = False
        assert np.array_equal(enc.traces[:, off], idle.traces[:, off])


class TestSweep:
    def test_default_sweep_shape(self):
        pts = default_sweep_plaintexts()
        assert len(pts) == 256
        assert pts[0x0A] == 0x0A0A0A0A0A0A0A0A
        ts = simulate_set(pts, compact())
        assert ts.n_traces == 256
        assert np.all(ts.plaintexts[0x0A] == 0x0A)

    def test_single_plaintext(self):
        ts = simulate_set([0x1122334455667788], compact())
        assert ts.n_traces == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            simulate_set([], compact())


class TestAveraging:
    def test_variance_of_mean_scaling(self):
        cfg = default_config(KEY, seed=7, noise_std=1.0, repetitions=25)
        ts = simulate_set([0] * 2, cfg)
        off = np.ones(cfg.n_samples, bool)
        for idx in cfg.leak_indices:
            off[idx:idx + cfg.leak_width] = False
        var = ts.traces[:, off].astype(np.float64).var()
        assert 0.8 * (1 / 25) < var < 1.2 * (1 / 25)

    def test_repetitions_do_not_move_the_mean(self):
        cfg = compact(noise_std=2.0, repetitions=16, seed=100)
        ts = simulate_set([0] * 40, cfg)
        off = np.ones(256, bool)
        for idx in cfg.leak_indices:
            off[idx:idx + cfg.leak_width] = False
        samples = ts.traces[:, off].astype(np.float64)
        n_eff = samples.size * 16
        assert abs(samples.mean()) < 4 * 2.0 / np.sqrt(n_eff)


class TestJitter:
    def test_shifts_bounded_by_jitter_max(self):
        cfg = compact(jitter_max=5, seed=9,
                      leak_indices=(16, 48, 80, 112, 144, 176, 208, 240))
        ts = simulate_set([0x1111111111111111] * 64, cfg)
        for i in range(64):
            start = np.flatnonzero(ts.traces[i])[0]
            assert abs(int(start) - 16) <= 5

    def test_jitter_uses_all_shifts(self):
        cfg = compact(jitter_max=2, seed=13)
        ts = simulate_set([0x1111111111111111] * 200, cfg)
        starts = {int(np.flatnonzero(ts.traces[i])[0]) for i in range(200)}
        assert starts == {14, 15, 16, 17, 18}


class TestIdle:
    def test_noiseless_idle_is_constant_baseline(self):
        cfg = compact(leak_params=LeakParams(1.0, 3.0))
        ts = simulate_idle_set(5, cfg)
        assert np.all(ts.traces == np.float32(3.0))
        assert np.all(ts.plaintexts == 0)
        assert ts.provenance["kind"] == "idle"

    def test_no_carrier_content_in_idle(self):
        cfg = compact(noise_std=0.1, carrier_freq=45.08e6, seed=21,
                      n_samples=2048, sample_rate=250e6,
                      leak_indices=tuple(256 + 32 * j for j in range(8)),
                      leak_width=32)
        idle = simulate_idle_set(64, cfg)
        mean = idle.traces.astype(np.float64).mean(axis=0)
        mags = np.abs(np.fft.rfft(mean))
        carrier_bin = round(45.08e6 / (250e6 / 2048))
        floor = np.median(mags[1:])
        assert mags[carrier_bin] < 5 * floor

    def test_idle_mean_close_to_baseline(self):
        cfg = compact(noise_std=1.0, repetitions=1,
                      leak_params=LeakParams(1.0, 2.0), seed=17)
        ts = simulate_idle_set(40, cfg)
        se = 1.0 / np.sqrt(40 * 256)
        assert abs(ts.traces.astype(np.float64).mean() - 2.0) <= 3 * se

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            simulate_idle_set(0, compact())


def test_overlapping_leaks_warn():
    with pytest.warns(UserWarning, match="overlap"):
        simulate_set([0], compact(leak_indices=(16, 17, 80, 112, 144, 176, 208, 240)))


def test_leak_windows_cover_pulses():
    cfg = compact()
    wins = leak_windows(cfg, pad=2)
    assert wins[0] == (14, 22)
    assert wins[7] == (238, 246)
    cfg2 = compact(leak_indices=(0, 48, 80, 112, 144, 176, 208, 252),
                   leak_width=4)
    wins2 = leak_windows(cfg2, pad=8)
    assert wins2[0][0] == 0
    assert wins2[7][1] == 256
