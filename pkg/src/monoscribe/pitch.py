"""
YIN pitch detection.

Per frame: difference function, cumulative mean normalized difference, absolute threshold, parabolic interpolation
and a best local estimate from the neighbouring frames. A note's pitch is the median period over its frames.
"""
import functools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas
from scipy.signal import correlate

from .audio import AudioBuffer
from .settings import F_MAX, F_MIN, YIN_HOP_LENGTH_S, YIN_THRESHOLD, YIN_UNVOICED_CEILING, YIN_WINDOW_LENGTH_S
from .utils import lower_median, parabolic_interpolation

logger = logging.getLogger(__name__)

#: A period pick: the period in samples and the cmndf value at the (interpolated) minimum.
PeriodPick = Tuple[float, float]

# relative lag range searched around the initial period in the best local estimate
_LOCAL_LAG_RANGE = 0.2


class PitchRangeError(ValueError):
    """A frequency outside the MIDI note range."""


@dataclass(frozen=True)
class YinParams:
    """Parameters of the YIN pitch detector."""

    window_length_s: float = YIN_WINDOW_LENGTH_S
    hop_length_s: float = YIN_HOP_LENGTH_S
    threshold: float = YIN_THRESHOLD
    f_min: float = F_MIN
    f_max: float = F_MAX
    unvoiced_ceiling: float = YIN_UNVOICED_CEILING

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValueError(f'YIN threshold must lie in (0, 1), got {self.threshold}.')
        if not 0 < self.f_min < self.f_max:
            raise ValueError(f'Need 0 < f_min < f_max, got {self.f_min}, {self.f_max}.')
        if not 0 < self.hop_length_s <= self.window_length_s:
            raise ValueError('Need 0 < hop <= window.')

    def window_samples(self, sample_rate: int) -> int:
        return int(round(self.window_length_s * sample_rate))

    def hop_samples(self, sample_rate: int) -> int:
        return max(1, int(round(self.hop_length_s * sample_rate)))


@dataclass(frozen=True)
class LagBand:
    """The searched lags, and the frequency band they correspond to."""

    tau_min: int
    tau_max: int
    f_min: float
    f_max: float


@functools.lru_cache(maxsize=None)
def lag_band(params: YinParams, sample_rate: int) -> LagBand:
    """
    Derive the lag search range at a sample rate.

    f_min is raised so that the window holds two periods, f_max is lowered to the Nyquist frequency.
    """
    window = params.window_samples(sample_rate)
    f_min, f_max = params.f_min, params.f_max
    lowest = 2.0 * sample_rate / window
    if f_min < lowest:
        logger.warning('A %d-sample window cannot hold two periods of %.2f Hz, raising f_min to %.2f Hz.',
                       window, f_min, lowest)
        f_min = lowest
    if f_max > sample_rate / 2:
        logger.warning('f_max %.1f Hz lies above the Nyquist frequency, lowering it to %.1f Hz.',
                       f_max, sample_rate / 2)
        f_max = sample_rate / 2
    if f_min >= f_max:
        raise ValueError(f'Empty frequency band [{f_min:.2f}, {f_max:.2f}] Hz.')
    tau_min = max(2, int(math.floor(sample_rate / f_max)))
    tau_max = min(window // 2, int(math.ceil(sample_rate / f_min)))
    return LagBand(tau_min=tau_min, tau_max=tau_max, f_min=f_min, f_max=f_max)


def difference_function(frame: np.ndarray, tau_max: int, method: str = 'fft') -> np.ndarray:
    """
    Compute d[tau] = sum_{j < M} (x[j] - x[j + tau])^2 for tau = 0, ..., tau_max, where M = len(frame) - tau_max.

    :param frame:
        The samples, at least 2 * tau_max of them.
    :param tau_max:
        The largest lag.
    :param method:
        "direct" evaluates the sum, "fft" uses d[tau] = r_0[0] + r_tau[0] - 2 r_0[tau] with an FFT correlation.

    :return: shape: (tau_max + 1,)
    """
    frame = np.asarray(frame, dtype=float)
    if frame.shape[0] < 2 * tau_max:
        raise ValueError(f'Frame of {frame.shape[0]} samples is too short for lags up to {tau_max}.')
    size = frame.shape[0] - tau_max
    if method == 'direct':
        head = frame[:size]
        return np.asarray([np.sum((head - frame[tau:tau + size]) ** 2) for tau in range(tau_max + 1)])
    if method != 'fft':
        raise ValueError(f'Unknown method {method}. Choices: direct, fft.')
    cross = correlate(frame, frame[:size], mode='valid', method='fft')
    energy = np.concatenate([[0.0], np.cumsum(frame ** 2)])
    shifted = energy[size:size + tau_max + 1] - energy[:tau_max + 1]
    result = np.maximum(energy[size] + shifted - 2.0 * cross, 0.0)
    result[0] = 0.0
    return result


def cmndf(d: np.ndarray) -> np.ndarray:
    """
    Cumulative mean normalized difference d'[tau] = d[tau] / (sum_{j=1..tau} d[j] / tau), with d'[0] = 1.

    Lags with a zero running sum get 1.
    """
    d = np.asarray(d, dtype=float)
    result = np.ones_like(d)
    if d.shape[0] < 2:
        return result
    tau = np.arange(1, d.shape[0])
    running_mean = np.cumsum(d[1:]) / tau
    nonzero = running_mean > 0
    result[1:][nonzero] = d[1:][nonzero] / running_mean[nonzero]
    return result


def pick_period(values: np.ndarray, params: YinParams, sample_rate: int) -> Optional[PeriodPick]:
    """
    Choose the period from a cmndf.

    The first lag in the band whose value drops below the threshold is followed down to its local minimum. Without such
    a dip, the global minimum in the band is used if it lies below the unvoiced ceiling.

    :return:
        The interpolated period in samples and the cmndf value there, or None for unvoiced frames.
    """
    band = lag_band(params, sample_rate)
    upper = min(band.tau_max, values.shape[0] - 1)
    if upper < band.tau_min:
        return None
    searched = values[band.tau_min:upper + 1]
    below = np.flatnonzero(searched < params.threshold)
    if below.shape[0] > 0:
        tau = band.tau_min + int(below[0])
        while tau < upper and values[tau + 1] < values[tau]:
            tau += 1
    else:
        tau = band.tau_min + int(np.argmin(searched))
        if values[tau] >= params.unvoiced_ceiling:
            return None
    period, value = parabolic_interpolation(values, tau)
    return period, max(0.0, min(value, float(values[tau])))


def best_local_estimate(
    cmndfs: Sequence[np.ndarray],
    index: int,
    initial: Optional[PeriodPick],
    params: YinParams,
    sample_rate: int,
) -> Optional[PeriodPick]:
    """
    Improve a frame's period pick with its neighbours.

    Among the frames within a quarter window of frame index, the one with the lowest cmndf near the initial period is
    picked again, restricted to lags within 20% of the initial period. The better of both picks is kept.

    :param cmndfs:
        The cmndf of every frame of the track.
    :param index:
        The frame to improve.
    :param initial:
        The frame's own pick. None is returned unchanged.
    """
    if initial is None:
        return None
    band = lag_band(params, sample_rate)
    reach = int(params.window_samples(sample_rate) / 4 // params.hop_samples(sample_rate))
    period = initial[0]
    low = max(band.tau_min, int(math.floor((1 - _LOCAL_LAG_RANGE) * period)))
    best_frame, best_value = None, initial[1]
    for other in range(max(0, index - reach), min(len(cmndfs), index + reach + 1)):
        if other == index:
            continue
        high = min(band.tau_max, int(math.ceil((1 + _LOCAL_LAG_RANGE) * period)), cmndfs[other].shape[0] - 1)
        if high < low:
            continue
        value = float(cmndfs[other][low:high + 1].min())
        if value < best_value:
            best_frame, best_value = other, value
    if best_frame is None:
        return initial
    values = cmndfs[best_frame]
    high = min(band.tau_max, int(math.ceil((1 + _LOCAL_LAG_RANGE) * period)), values.shape[0] - 1)
    tau = low + int(np.argmin(values[low:high + 1]))
    refined, value = parabolic_interpolation(values, tau)
    value = max(0.0, min(value, float(values[tau])))
    if value < initial[1]:
        return refined, value
    return initial


@dataclass(frozen=True)
class PitchTrack:
    """Frame-wise YIN output."""

    #: shape: (num_frames,), frame centre times
    frame_times_s: np.ndarray

    #: shape: (num_frames,), 0 for unvoiced frames
    f0_hz: np.ndarray

    #: shape: (num_frames,), the cmndf value of the chosen period, 1 for unvoiced frames
    cmndf_min: np.ndarray

    #: shape: (num_frames,), NaN for unvoiced frames
    periods: np.ndarray

    def __len__(self) -> int:
        return self.f0_hz.shape[0]

    @property
    def voiced(self) -> np.ndarray:
        return self.f0_hz > 0

    def to_frame(self) -> pandas.DataFrame:
        """A dataframe with columns ["frame_time_s", "f0_hz", "cmndf_min"]."""
        return pandas.DataFrame(data=dict(
            frame_time_s=self.frame_times_s,
            f0_hz=self.f0_hz,
            cmndf_min=self.cmndf_min,
        ))


def _frame_starts(buffer: AudioBuffer, window: int, hop: int, span: Optional[Tuple[float, float]]) -> np.ndarray:
    if span is None:
        start, stop = 0, len(buffer) - window
    else:
        start = buffer.to_samples(span[0])
        stop = buffer.to_samples(span[1]) - window
    if stop < start:
        # too short for a single window: one window centred on the start, kept inside the buffer
        centred = buffer.to_samples(span[0]) - window // 2 if span is not None else 0
        return np.asarray([min(max(0, centred), max(0, len(buffer) - window))])
    return np.arange(start, stop + 1, hop)


def pitch_track(
    buffer: AudioBuffer,
    params: Optional[YinParams] = None,
    span: Optional[Tuple[float, float]] = None,
) -> PitchTrack:
    """
    Run YIN on consecutive frames.

    :param buffer:
        The signal.
    :param params:
        The detector parameters, defaults to YinParams().
    :param span:
        Restrict the frames to (start_s, end_s). A span shorter than a window becomes one window centred on its start.

    :return:
        The pitch track.
    """
    params = params or YinParams()
    sample_rate = buffer.sample_rate
    window = params.window_samples(sample_rate)
    band = lag_band(params, sample_rate)
    starts = _frame_starts(buffer=buffer, window=window, hop=params.hop_samples(sample_rate), span=span)
    padded = buffer.samples
    if padded.shape[0] < starts[-1] + window:
        padded = np.pad(padded, (0, starts[-1] + window - padded.shape[0]))

    cmndfs = [
        cmndf(difference_function(padded[start:start + window], tau_max=band.tau_max))
        for start in starts
    ]
    picks = [pick_period(values, params=params, sample_rate=sample_rate) for values in cmndfs]
    picks = [
        best_local_estimate(cmndfs=cmndfs, index=i, initial=pick, params=params, sample_rate=sample_rate)
        for i, pick in enumerate(picks)
    ]

    periods = np.asarray([np.nan if pick is None else pick[0] for pick in picks])
    cmndf_min = np.asarray([1.0 if pick is None else pick[1] for pick in picks])
    f0 = np.zeros_like(periods)
    voiced = ~np.isnan(periods)
    f0[voiced] = np.clip(sample_rate / periods[voiced], band.f_min, band.f_max)
    return PitchTrack(
        frame_times_s=(starts + window / 2) / sample_rate,
        f0_hz=f0,
        cmndf_min=cmndf_min,
        periods=periods,
    )


def note_pitch(
    buffer: AudioBuffer,
    note_span: Tuple[float, float],
    params: Optional[YinParams] = None,
) -> float:
    """
    Estimate a note's fundamental frequency.

    :param buffer:
        The signal.
    :param note_span:
        (start_s, end_s) of the note.
    :param params:
        The detector parameters.

    :return:
        The sample rate over the lower median of the voiced frames' periods, 0 if no frame is voiced.
    """
    track = pitch_track(buffer=buffer, params=params, span=note_span)
    periods = track.periods[track.voiced]
    if periods.shape[0] == 0:
        logger.debug('No voiced frame in [%.3f, %.3f] s', *note_span)
        return 0.0
    return buffer.sample_rate / lower_median(periods)


def f0_to_midi(f0_hz: float) -> Tuple[int, float]:
    """
    Map a frequency to the nearest equal-temperament MIDI note (ties to even) and its offset in cents.

    :raises PitchRangeError:
        If the nearest note lies outside 0-127.
    """
    if not f0_hz > 0:
        raise PitchRangeError(f'Cannot map {f0_hz} Hz to a MIDI note.')
    exact = 69.0 + 12.0 * math.log2(f0_hz / 440.0)
    midi = round(exact)
    if not 0 <= midi <= 127:
        raise PitchRangeError(f'{f0_hz} Hz lies outside the MIDI note range.')
    return midi, 100.0 * (exact - midi)
