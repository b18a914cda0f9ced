"""Channel simulation tests: composition, AWGN calibration, front end."""

import numpy as np
import pytest

from sdrtrx.demod import DemodMode
from sdrtrx.errors import ConfigError
from sdrtrx.iqio import IqBlock, concat_blocks, encode_rtl_bytes
from sdrtrx.scene import (
    AudioSourceSpec,
    ChannelSpec,
    SceneConfig,
    StationConfig,
    apply_awgn,
    apply_front_end,
    awgn_variance,
    compose_scene,
    reference_power,
    synthesize_scene,
)

FS = 960000.0
CENTER = 100e6


def nfm_station(offset_hz, tone_hz=1000.0, power_db=0.0):
    return StationConfig(
        freq_hz=CENTER + offset_hz,
        mode=DemodMode.NFM,
        audio=AudioSourceSpec("tone", tone_hz),
        deviation_hz=2500.0,
        power_db=power_db,
    )


class TestCompose:
    def test_empty_scene_is_silent(self):
        z = concat_blocks(compose_scene([], CENTER, FS, 0.1))
        assert len(z) == int(0.1 * FS)
        assert np.all(z == 0)

    def test_single_fm_station_at_center_is_unit_magnitude(self):
        z = concat_blocks(compose_scene([nfm_station(0.0)], CENTER, FS, 0.1))
        np.testing.assert_allclose(np.abs(z), 1.0, atol=1e-9)

    def test_three_station_peaks(self):
        # oracle: FFT peak finding at the expected bins
        stations = [nfm_station(-300e3), nfm_station(0.0, 700.0), nfm_station(300e3, 1300.0)]
        z = concat_blocks(compose_scene(stations, CENTER, FS, 0.5, seed=5))
        n = 1 << 16
        spec = np.abs(np.fft.fftshift(np.fft.fft(z[:n] * np.blackman(n)))) ** 2
        bin_width = FS / n
        found = []
        for offset in (-300e3, 0.0, 300e3):
            expect_bin = int(round(offset / bin_width)) + n // 2
            local = np.argmax(spec[expect_bin - 2 : expect_bin + 3]) + expect_bin - 2
            found.append(abs(local - expect_bin) <= 1)
        assert all(found)
        # and exactly 3 distinct signal clusters above -30 dB of max
        # (a station's FM sidebands span many bins; split on > 50 kHz gaps)
        idx = np.flatnonzero(spec > spec.max() * 1e-3)
        gap_bins = int(50e3 / bin_width)
        clusters = 1 + int(np.sum(np.diff(idx) > gap_bins))
        assert clusters == 3

    def test_station_outside_band_rejected(self):
        with pytest.raises(ValueError, match="station 1"):
            list(compose_scene([nfm_station(0.0), nfm_station(600e3)], CENTER, FS, 0.1))

    def test_power_additivity(self):
        singles = []
        for offset in (-250e3, 0.0, 250e3):
            z = concat_blocks(compose_scene([nfm_station(offset)], CENTER, FS, 0.5))
            singles.append(np.mean(np.abs(z) ** 2))
        combo = concat_blocks(
            compose_scene([nfm_station(-250e3), nfm_station(0.0), nfm_station(250e3)], CENTER, FS, 0.5)
        )
        total = np.mean(np.abs(combo) ** 2)
        assert total == pytest.approx(sum(singles), rel=0.01)

    def test_deterministic_bytes(self):
        stations = [
            StationConfig(
                freq_hz=CENTER + 100e3,
                mode=DemodMode.NFM,
                audio=AudioSourceSpec("noise", 3000.0),
                power_db=-3.0,
            )
        ]
        scene = SceneConfig(
            center_hz=CENTER, sample_rate_hz=FS, duration_s=0.3,
            stations=tuple(stations), channel=ChannelSpec(snr_db=20.0), seed=77,
        )
        a = encode_rtl_bytes(0.3 * concat_blocks(synthesize_scene(scene)))
        b = encode_rtl_bytes(0.3 * concat_blocks(synthesize_scene(scene)))
        assert a == b


class TestAwgn:
    def test_negligible_at_100db(self):
        blocks = list(compose_scene([nfm_station(0.0)], CENTER, FS, 0.2))
        var = awgn_variance(100.0, 1.0, FS, FS)
        noisy = concat_blocks(apply_awgn(iter(blocks), var, seed=1))
        clean = concat_blocks(iter(blocks))
        delta = np.sqrt(np.mean(np.abs(noisy - clean) ** 2))
        assert delta <= 1e-4 * np.sqrt(np.mean(np.abs(clean) ** 2))

    def test_full_band_snr_calibration(self, rng):
        # unit-power full-band signal, occupied bandwidth = fs
        n = 1 << 21
        sig = np.exp(2j * np.pi * rng.uniform(0, 1, n)).astype(np.complex128)
        blocks = [IqBlock(samples=sig, sample_rate_hz=FS)]
        var = awgn_variance(20.0, 1.0, FS, FS)
        noisy = concat_blocks(apply_awgn(iter(blocks), var, seed=2))
        noise = noisy - sig
        measured = 10 * np.log10(np.mean(np.abs(sig) ** 2) / np.mean(np.abs(noise) ** 2))
        assert measured == pytest.approx(20.0, abs=0.5)

    @pytest.mark.parametrize("snr_db", [0.0, 5.0, 15.0, 25.0, 40.0])
    def test_in_band_calibration(self, snr_db):
        # construct by definition: measure signal and noise powers separately
        station = nfm_station(50e3)
        scene = SceneConfig(
            center_hz=CENTER, sample_rate_hz=FS, duration_s=1.2,
            stations=(station,), seed=9,
        )
        clean = concat_blocks(synthesize_scene(scene))
        p_ref = reference_power(scene)
        bw = station.occupied_bandwidth_hz()
        var = awgn_variance(snr_db, p_ref, bw, FS)
        noisy = concat_blocks(
            apply_awgn(iter([IqBlock(samples=clean, sample_rate_hz=FS)]), var, seed=9)
        )
        noise = noisy - clean
        in_band_noise = np.mean(np.abs(noise) ** 2) * bw / FS
        measured = 10 * np.log10(np.mean(np.abs(clean) ** 2) / in_band_noise)
        assert measured == pytest.approx(snr_db, abs=0.5)

    def test_same_seed_identical(self):
        blocks = list(compose_scene([nfm_station(0.0)], CENTER, FS, 0.1))
        a = concat_blocks(apply_awgn(iter(blocks), 0.1, seed=3))
        b = concat_blocks(apply_awgn(iter(blocks), 0.1, seed=3))
        np.testing.assert_array_equal(a, b)


class TestFrontEnd:
    def test_identity(self):
        blocks = list(compose_scene([nfm_station(0.0)], CENTER, FS, 0.05))
        out = concat_blocks(apply_front_end(iter(blocks), ChannelSpec()))
        np.testing.assert_array_equal(out, concat_blocks(iter(blocks)))

    def test_gain_19db(self):
        blocks = list(compose_scene([nfm_station(0.0)], CENTER, FS, 0.05))
        out = concat_blocks(apply_front_end(iter(blocks), ChannelSpec(gain_db=19.0)))
        ratio = np.abs(out[1000]) / np.abs(blocks[0].samples[1000])
        assert ratio == pytest.approx(10 ** (19 / 20), rel=1e-9)
        assert ratio == pytest.approx(8.913, rel=1e-3)

    def test_offset_moves_tone(self):
        n = 1 << 16
        dc = np.ones(n, dtype=complex)
        blocks = [IqBlock(samples=dc, sample_rate_hz=FS)]
        out = concat_blocks(
            apply_front_end(iter(blocks), ChannelSpec(freq_offset_hz=1000.0))
        )
        spec = np.abs(np.fft.fft(out))
        peak_bin = np.argmax(spec)
        expected = int(round(1000.0 / (FS / n)))
        assert abs(peak_bin - expected) <= 1

    def test_noise_floor_emulation(self):
        n = 1 << 16
        silent = [IqBlock(samples=np.zeros(n, dtype=complex), sample_rate_hz=FS)]
        out = concat_blocks(
            apply_front_end(iter(silent), ChannelSpec(front_end_noise=True), seed=4)
        )
        level_db = 10 * np.log10(np.mean(np.abs(out) ** 2))
        assert level_db == pytest.approx(-41.5, abs=0.5)


class TestSceneJson:
    def test_round_trip(self):
        scene = SceneConfig(
            center_hz=CENTER,
            sample_rate_hz=FS,
            duration_s=1.0,
            stations=(
                StationConfig(
                    freq_hz=CENTER - 200e3,
                    mode=DemodMode.NFM,
                    audio=AudioSourceSpec("tone", 1000.0),
                    deviation_hz=2500.0,
                    power_db=-20.0,
                ),
            ),
            channel=ChannelSpec(snr_db=15.0, reference=0, gain_db=19.0),
            seed=42,
        )
        back = SceneConfig.from_json(scene.to_json())
        assert back == scene

    def test_spec_schema_accepted(self):
        text = """
        {"center_hz": 90800000, "sample_rate_hz": 960000, "duration_s": 1.0,
         "seed": 3,
         "stations": [{"freq_hz": 90500000, "mode": "NFM", "deviation_hz": 2500,
                       "audio": {"tone": 1000}, "power_db": -20}],
         "channel": {"snr_db": 15, "reference": 0, "gain_db": 19, "freq_offset_hz": 0}}
        """
        scene = SceneConfig.from_json(text)
        assert scene.stations[0].mode is DemodMode.NFM
        assert scene.channel.snr_db == 15
        assert scene.stations[0].audio.kind == "tone"

    def test_bad_json_rejected(self):
        with pytest.raises(ConfigError):
            SceneConfig.from_json("{not json")
        with pytest.raises(ConfigError):
            SceneConfig.from_json('{"center_hz": 1}')
