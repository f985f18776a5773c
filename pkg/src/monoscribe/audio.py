"""Audio decoding and framing shared by all signal processing stages."""
import logging
import math
import pathlib
import warnings
from dataclasses import dataclass
from typing import Iterator, Tuple, Union

import numpy as np
from scipy.io import wavfile
from scipy.signal import get_window

from .settings import MIN_SAMPLE_RATE

logger = logging.getLogger(__name__)

#: RIFF/WAVE sample formats that can be written
SAMPLE_FORMATS = {
    'pcm16': np.int16,
    'pcm32': np.int32,
    'float32': np.float32,
}

_WINDOWS = {
    'hann': 'hann',
    'rectangular': 'boxcar',
}


class AudioDecodeError(ValueError):
    """Base class for errors raised while decoding audio files."""


class UnreadableAudioError(AudioDecodeError):
    """The file does not exist or is not a RIFF/WAVE file."""


class UnsupportedCodecError(AudioDecodeError):
    """The file is a WAVE file, but its sample format is not supported."""


class EmptyAudioError(AudioDecodeError):
    """The file contains no samples."""


@dataclass(frozen=True)
class AudioBuffer:
    """A mono signal with amplitudes in [-1, 1]."""

    #: shape: (num_samples,)
    samples: np.ndarray

    #: The sample rate in Hz.
    sample_rate: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64).reshape(-1)
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)
        if int(self.sample_rate) != self.sample_rate or self.sample_rate < MIN_SAMPLE_RATE:
            raise ValueError(f'Sample rate must be an integer >= {MIN_SAMPLE_RATE} Hz, got {self.sample_rate}.')
        object.__setattr__(self, 'sample_rate', int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        """The duration in seconds."""
        return len(self) / self.sample_rate

    def to_samples(self, seconds: float) -> int:
        """Convert a duration in seconds to the nearest number of samples."""
        return int(round(seconds * self.sample_rate))

    def slice(self, start_s: float, end_s: float) -> np.ndarray:
        """Return the samples in [start_s, end_s), clipped to the buffer."""
        start = max(0, self.to_samples(start_s))
        end = min(len(self), self.to_samples(end_s))
        return self.samples[start:max(start, end)]


@dataclass(frozen=True)
class FrameSpec:
    """Window length, hop and window shape of a short-time analysis."""

    window_length_s: float
    hop_length_s: float
    window_kind: str = 'hann'

    def __post_init__(self):
        if not 0 < self.hop_length_s <= self.window_length_s:
            raise ValueError(
                f'Need 0 < hop <= window, got hop={self.hop_length_s}, window={self.window_length_s}.'
            )
        if self.window_kind not in _WINDOWS:
            raise ValueError(f'Unknown window {self.window_kind}. Choices: {sorted(_WINDOWS)}.')

    def window_samples(self, sample_rate: int) -> int:
        """The window length in samples."""
        return int(round(self.window_length_s * sample_rate))

    def hop_samples(self, sample_rate: int) -> int:
        """The hop length in samples, at least one."""
        return max(1, int(round(self.hop_length_s * sample_rate)))

    def window(self, sample_rate: int) -> np.ndarray:
        """
        The (symmetric) window function.

        :raises ValueError:
            If the window is shorter than two samples.
        """
        length = self.window_samples(sample_rate)
        if length < 2:
            raise ValueError(f'Window must span at least 2 samples, got {length}.')
        return get_window(_WINDOWS[self.window_kind], length, fftbins=False)


@dataclass(frozen=True)
class Frames:
    """Windowed frames of a signal."""

    #: shape: (num_frames,)
    start_times_s: np.ndarray

    #: shape: (num_frames, window_length)
    blocks: np.ndarray

    def __len__(self) -> int:
        return self.blocks.shape[0]

    def __iter__(self) -> Iterator[Tuple[float, np.ndarray]]:
        return zip(self.start_times_s.tolist(), self.blocks)


def num_frames(num_samples: int, window: int, hop: int) -> int:
    """The number of frames: one per hop, a single one if the window covers everything."""
    if num_samples <= window:
        return 1
    return int(math.ceil(num_samples / hop))


def frame_signal(buffer: AudioBuffer, spec: FrameSpec) -> Frames:
    """
    Cut the signal into windowed frames.

    Frames start every hop; the final partial frame is zero-padded.

    :param buffer:
        The signal.
    :param spec:
        The window and hop lengths.

    :return:
        The frame start times and the windowed blocks.
    """
    window = spec.window(buffer.sample_rate)
    length = window.shape[0]
    hop = spec.hop_samples(buffer.sample_rate)
    count = num_frames(num_samples=len(buffer), window=length, hop=hop)
    padded = np.zeros((count - 1) * hop + length)
    padded[:len(buffer)] = buffer.samples
    blocks = np.lib.stride_tricks.sliding_window_view(padded, length)[::hop][:count] * window
    starts = np.arange(count) * hop / buffer.sample_rate
    return Frames(start_times_s=starts, blocks=blocks)


def _read_header(path: pathlib.Path) -> None:
    try:
        with path.open('rb') as stream:
            header = stream.read(12)
    except OSError as error:
        raise UnreadableAudioError(f'Cannot read {path}: {error}') from error
    if len(header) < 12 or header[:4] != b'RIFF' or header[8:12] != b'WAVE':
        raise UnreadableAudioError(f'{path} is not a RIFF/WAVE file.')


def _to_float(data: np.ndarray, path: pathlib.Path) -> np.ndarray:
    if data.dtype == np.int16 or data.dtype == np.int32:
        # 24-bit samples arrive left-aligned in int32
        return data.astype(np.float64) / float(-np.iinfo(data.dtype).min)
    if data.dtype == np.float32:
        return data.astype(np.float64)
    raise UnsupportedCodecError(f'{path}: unsupported sample format {data.dtype}.')


def decode_wav(path: Union[str, pathlib.Path]) -> AudioBuffer:
    """
    Decode a PCM (16/24/32 bit) or 32-bit float WAV file to a mono, peak-normalized buffer.

    :param path:
        The file path.

    :return:
        The decoded buffer.

    :raises UnreadableAudioError:
        If the file does not exist or is not RIFF/WAVE.
    :raises UnsupportedCodecError:
        For other codecs, bit depths, more than two channels or sample rates below 8 kHz.
    :raises EmptyAudioError:
        If the file contains no samples.
    """
    path = pathlib.Path(path)
    _read_header(path)
    try:
        with warnings.catch_warnings():
            # unknown chunks are skipped
            warnings.simplefilter('ignore', wavfile.WavFileWarning)
            sample_rate, data = wavfile.read(path)
    except ValueError as error:
        raise UnsupportedCodecError(f'{path}: {error}') from error
    except OSError as error:
        raise UnreadableAudioError(f'Cannot read {path}: {error}') from error

    if data.ndim > 1 and data.shape[1] > 2:
        raise UnsupportedCodecError(f'{path}: {data.shape[1]} channels, only mono and stereo are supported.')
    if sample_rate < MIN_SAMPLE_RATE:
        raise UnsupportedCodecError(f'{path}: sample rate {sample_rate} Hz is below {MIN_SAMPLE_RATE} Hz.')
    if data.shape[0] == 0:
        raise EmptyAudioError(f'{path} contains no samples.')

    samples = _to_float(data, path)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    peak = np.abs(samples).max()
    if peak > 0:
        samples = samples / peak
    else:
        logger.info('%s is silent, skipping normalization.', path)
    logger.debug('Decoded %s: %d samples at %d Hz', path, samples.shape[0], sample_rate)
    return AudioBuffer(samples=samples, sample_rate=sample_rate)


def encode_wav(
    buffer: AudioBuffer,
    path: Union[str, pathlib.Path],
    sample_format: str = 'pcm16',
) -> pathlib.Path:
    """
    Write the buffer as a mono RIFF/WAVE file.

    :param buffer:
        The signal, amplitudes are clipped to [-1, 1].
    :param path:
        The output path. Parent directories are created.
    :param sample_format:
        One of "pcm16", "pcm32" or "float32".

    :return:
        The path written to.
    """
    if sample_format not in SAMPLE_FORMATS:
        raise ValueError(f'Unknown sample format {sample_format}. Choices: {sorted(SAMPLE_FORMATS)}.')
    dtype = SAMPLE_FORMATS[sample_format]
    samples = np.clip(buffer.samples, -1.0, 1.0)
    if np.issubdtype(dtype, np.integer):
        samples = np.round(samples * np.iinfo(dtype).max).astype(dtype)
    else:
        samples = samples.astype(dtype)
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(path, buffer.sample_rate, samples)
    return path
