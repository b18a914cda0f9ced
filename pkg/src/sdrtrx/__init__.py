"""Software-defined radio transceiver toolkit.

RTL-format I/Q capture handling, a tunable filter/demodulator chain, FM
transmit models (including the two-level clock-pin transmitter), synthetic
multi-station channel simulation, SNR/quality measurement, and a live
operator session served over WebSocket.
"""

__version__ = "0.1.0"

from .demod import DemodConfig, DemodMode, make_demodulator
from .dsp import Decimator, FilterSpec, FirFilter, WindowKind, design_lowpass, mix, window
from .errors import ConfigError, FormatError, SdrError, StateError
from .iqio import (
    AudioBlock,
    CaptureMeta,
    IqBlock,
    blocks_from_array,
    concat_blocks,
    decode_rtl_bytes,
    encode_rtl_bytes,
    read_capture,
    read_wav,
    write_capture,
    write_wav,
)
from .metrics import (
    Quality,
    QualityCell,
    SpectrumFrame,
    aligned_correlation,
    classify_quality,
    estimate_snr,
    power_spectrum,
    quality_matrix,
    spectrogram,
)
from .modulate import GpioFmTransmitter, TxConfig, make_modulator
from .receiver import ChainParams, RxChain, snap_to_step
from .scene import (
    AudioSourceSpec,
    ChannelSpec,
    SceneConfig,
    StationConfig,
    apply_awgn,
    apply_front_end,
    compose_scene,
    synthesize_scene,
)
from .session import (
    CaptureSource,
    SceneSource,
    Session,
    SessionState,
    TuningParams,
    bridge,
)
