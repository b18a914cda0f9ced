"""Session state machine, retune, and bridge tests."""

import numpy as np
import pytest

from conftest import dominant_frequency

from sdrtrx.demod import DemodMode
from sdrtrx.errors import StateError
from sdrtrx.iqio import blocks_from_array, concat_blocks
from sdrtrx.metrics import aligned_correlation
from sdrtrx.modulate import TxConfig
from sdrtrx.receiver import ChainParams, RxChain, snap_to_step
from sdrtrx.scene import AudioSourceSpec, SceneConfig, StationConfig, synthesize_scene
from sdrtrx.session import (
    TRANSITIONS,
    SceneSource,
    Session,
    SessionEvent,
    SessionState,
    TuningParams,
    bridge,
)

FS = 960000.0
CENTER = 100e6


def two_station_scene(duration=4.0):
    return SceneConfig(
        center_hz=CENTER,
        sample_rate_hz=FS,
        duration_s=duration,
        stations=(
            StationConfig(freq_hz=CENTER - 200e3, mode=DemodMode.NFM,
                          audio=AudioSourceSpec("tone", 700.0)),
            StationConfig(freq_hz=CENTER + 200e3, mode=DemodMode.NFM,
                          audio=AudioSourceSpec("tone", 1300.0)),
        ),
        seed=11,
    )


def configured_session(offset=-200e3):
    sess = Session()
    sess.configure(
        TuningParams(center_hz=CENTER, offset_hz=offset, step_hz=12500.0),
        SceneSource(two_station_scene()),
    )
    return sess


def apply_event(sess, event):
    """Drive one abstract event with placeholder arguments."""
    if event is SessionEvent.CONFIGURE:
        sess.configure(
            TuningParams(center_hz=CENTER, offset_hz=-200e3, step_hz=12500.0),
            SceneSource(two_station_scene(1.0)),
        )
    elif event is SessionEvent.START_RX:
        sess.start_rx()
    elif event is SessionEvent.START_TX:
        sess.start_tx(TxConfig(mode=DemodMode.NFM, sample_rate_hz=240000.0, deviation_hz=2500.0))
    elif event is SessionEvent.STOP_RX:
        sess.stop("rx")
    elif event is SessionEvent.STOP_TX:
        sess.stop("tx")
    elif event is SessionEvent.STOP_ALL:
        sess.stop("all")
    elif event is SessionEvent.RETUNE:
        sess.retune(offset_hz=200e3)


def force_state(target):
    """Reach a target state through declared transitions only."""
    sess = Session()
    if target is SessionState.IDLE:
        return sess
    apply_event(sess, SessionEvent.CONFIGURE)
    if target is SessionState.CONFIGURED:
        return sess
    if target is SessionState.RECEIVING:
        sess.start_rx()
    elif target is SessionState.TRANSMITTING:
        apply_event(sess, SessionEvent.START_TX)
    elif target is SessionState.RECEIVING_AND_TRANSMITTING:
        sess.start_rx()
        apply_event(sess, SessionEvent.START_TX)
    return sess


class TestStateMachine:
    @pytest.mark.parametrize("state", list(SessionState))
    @pytest.mark.parametrize("event", list(SessionEvent))
    def test_exhaustive_transition_table(self, state, event):
        # every (state, event) pair either follows a declared edge or
        # raises StateError leaving the state unchanged -- no third outcome
        sess = force_state(state)
        assert sess.state is state
        if (state, event) in TRANSITIONS:
            apply_event(sess, event)
            assert sess.state is TRANSITIONS[(state, event)]
        else:
            with pytest.raises(StateError):
                apply_event(sess, event)
            assert sess.state is state

    def test_configure_then_rx(self):
        sess = configured_session()
        assert sess.state is SessionState.CONFIGURED
        sess.start_rx()
        assert sess.state is SessionState.RECEIVING

    def test_rx_then_tx_full_duplex(self):
        sess = configured_session()
        sess.start_rx()
        sess.start_tx(TxConfig(mode=DemodMode.NFM, sample_rate_hz=240000.0))
        assert sess.state is SessionState.RECEIVING_AND_TRANSMITTING
        out = sess.step()
        assert out.audio is not None
        assert out.tx is not None
        assert np.max(np.abs(np.abs(out.tx.samples) - 1.0)) <= 1e-6

    def test_start_rx_from_idle_is_error(self):
        sess = Session()
        with pytest.raises(StateError):
            sess.start_rx()


class TestConfigure:
    def test_hardware_band_limit(self):
        source = SceneSource(two_station_scene(1.0))
        source.hardware = True
        sess = Session()
        with pytest.raises(ValueError, match="tuner range"):
            sess.configure(TuningParams(center_hz=2.0e9), source)
        assert sess.state is SessionState.IDLE

    def test_synthetic_center_unchecked(self):
        source = SceneSource(two_station_scene(1.0))
        sess = Session()
        sess.configure(TuningParams(center_hz=CENTER, offset_hz=-200e3), source)
        assert sess.state is SessionState.CONFIGURED

    def test_offset_snapping(self):
        assert snap_to_step(12400.0, 12500.0) == 12500.0
        assert snap_to_step(-12400.0, 12500.0) == -12500.0
        assert snap_to_step(6250.0, 12500.0) == 0.0  # tie goes toward zero
        assert snap_to_step(-6250.0, 12500.0) == 0.0
        sess = Session()
        sess.configure(
            TuningParams(center_hz=CENTER, offset_hz=-204_000.0, step_hz=12500.0),
            SceneSource(two_station_scene(1.0)),
        )
        assert sess.params.offset_hz == -200_000.0


class TestRetune:
    def test_peak_follows_within_two_blocks(self):
        sess = configured_session()
        sess.start_rx()
        for _ in range(3):
            out = sess.step()
        assert dominant_frequency(out.audio.samples, 48000.0) == pytest.approx(700.0, abs=20)
        sess.retune(offset_hz=200e3)
        tones = []
        for _ in range(2):
            out = sess.step()
            tones.append(dominant_frequency(out.audio.samples, 48000.0))
        assert tones[-1] == pytest.approx(1300.0, abs=20)

    def test_invalid_offset_keeps_session(self):
        sess = configured_session()
        sess.start_rx()
        before = sess.params
        with pytest.raises(ValueError):
            sess.retune(offset_hz=FS)  # outside the band
        assert sess.params == before
        out = sess.step()
        assert out.audio is not None  # stream still alive

    def test_mode_change_mid_stream_bounded(self):
        sess = configured_session()
        sess.start_rx()
        sess.step()
        sess.retune(mode=DemodMode.WFM, baseband_hz=15000.0)
        out = sess.step()
        assert np.all(np.isfinite(out.audio.samples))
        assert np.max(np.abs(out.audio.samples)) <= 1.5
        assert sess.params.mode is DemodMode.WFM

    def test_retune_while_configured_is_error(self):
        sess = configured_session()
        with pytest.raises(StateError):
            sess.retune(offset_hz=0.0)

    def test_gain_only_change_keeps_chain(self):
        sess = configured_session()
        sess.start_rx()
        sess.step()
        chain_before = sess._chain
        sess.retune(gain_db=6.0)
        sess.step()
        assert sess._chain is chain_before  # same object: NCO phase kept
        assert sess.params.gain_db == 6.0


class TestBridge:
    def _tone_scene(self, tone_hz=1000.0, duration=2.0):
        return SceneConfig(
            center_hz=CENTER, sample_rate_hz=FS, duration_s=duration,
            stations=(
                StationConfig(freq_hz=CENTER - 200e3, mode=DemodMode.NFM,
                              audio=AudioSourceSpec("tone", tone_hz)),
            ),
            seed=3,
        )

    def test_tone_relayed_to_new_frequency(self):
        blocks = synthesize_scene(self._tone_scene())
        rx = ChainParams(offset_hz=-200e3, mode=DemodMode.NFM)
        tx = TxConfig(mode=DemodMode.NFM, sample_rate_hz=FS, carrier_hz=150e3, deviation_hz=2500.0)
        relayed = concat_blocks(bridge(blocks, rx, tx, FS))

        second_rx = RxChain(FS, ChainParams(offset_hz=150e3, mode=DemodMode.NFM))
        audio = np.concatenate(
            [second_rx.process(b).samples for b in blocks_from_array(relayed, FS, CENTER)]
        )
        n = len(audio)
        ref = np.sin(2 * np.pi * 1000.0 * np.arange(n) / 48000.0)
        k = 9600
        assert aligned_correlation(ref[k:-k], audio[k:-k]) >= 0.98

    def test_silence_relays_near_silence(self):
        # tone frequency 0 = unmodulated carrier = silent program
        blocks = synthesize_scene(self._tone_scene(tone_hz=0.0, duration=1.0))
        rx = ChainParams(offset_hz=-200e3, mode=DemodMode.NFM)
        tx = TxConfig(mode=DemodMode.NFM, sample_rate_hz=FS, carrier_hz=150e3, deviation_hz=2500.0)
        relayed = concat_blocks(bridge(blocks, rx, tx, FS))
        second_rx = RxChain(FS, ChainParams(offset_hz=150e3, mode=DemodMode.NFM))
        audio = np.concatenate(
            [second_rx.process(b).samples for b in blocks_from_array(relayed, FS, CENTER)]
        )
        assert np.sqrt(np.mean(audio[9600:] ** 2)) <= 1e-2

    def test_same_frequency_rejected(self):
        rx = ChainParams(offset_hz=150e3, mode=DemodMode.NFM)
        tx = TxConfig(mode=DemodMode.NFM, sample_rate_hz=FS, carrier_hz=150e3)
        with pytest.raises(ValueError, match="distinct"):
            list(bridge(iter([]), rx, tx, FS))

    def test_latency_within_three_blocks(self):
        # streaming shape: block k in -> block k out, nothing buffered longer
        blocks = list(synthesize_scene(self._tone_scene(duration=1.0)))
        rx = ChainParams(offset_hz=-200e3, mode=DemodMode.NFM)
        tx = TxConfig(mode=DemodMode.NFM, sample_rate_hz=FS, carrier_hz=150e3)
        out = list(bridge(iter(blocks), rx, tx, FS))
        assert len(out) == len(blocks)

    def test_output_bandwidth_matches_direct_tx(self):
        # oracle: a direct transmitter with the same program; the relay's
        # 99%-power occupied bandwidth must match it within 10%
        from sdrtrx.modulate import make_modulator

        def occupied_bw(z, center_off):
            spec = np.abs(np.fft.fftshift(np.fft.fft(z * np.blackman(len(z))))) ** 2
            freqs = (np.arange(len(z)) - len(z) // 2) * FS / len(z)
            order = np.argsort(np.abs(freqs - center_off))
            cum, max_dev, total = 0.0, 0.0, spec.sum()
            for i in order:
                cum += spec[i]
                max_dev = max(max_dev, abs(freqs[i] - center_off))
                if cum >= 0.99 * total:
                    break
            return 2.0 * max_dev

        rx = ChainParams(offset_hz=-200e3, mode=DemodMode.NFM)
        tx = TxConfig(mode=DemodMode.NFM, sample_rate_hz=FS, carrier_hz=150e3, deviation_hz=2500.0)
        relayed = concat_blocks(bridge(synthesize_scene(self._tone_scene(duration=1.5)), rx, tx, FS))
        bridged_bw = occupied_bw(relayed[len(relayed) // 4 :], 150e3)

        t = np.arange(72000) / 48000.0
        direct_mod = make_modulator(tx)
        direct = direct_mod.process(np.sin(2 * np.pi * 1000.0 * t)).samples
        direct_bw = occupied_bw(direct[len(direct) // 4 :], 150e3)

        assert bridged_bw == pytest.approx(direct_bw, rel=0.10)
