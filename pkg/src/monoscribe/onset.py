"""
Onset detection with the energy novelty function.

The local energy is logarithmically compressed, differentiated and half-wave rectified. Onsets are the local maxima of
the resulting novelty curve above an amplitude threshold, thinned out by a minimum separation.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import pandas
from scipy.signal import fftconvolve

from .audio import AudioBuffer, FrameSpec
from .settings import AMP_THRESHOLD, GAMMA, HOP_LENGTH_S, MIN_SEPARATION_S, WINDOW_LENGTH_S

logger = logging.getLogger(__name__)

# frame times are multiples of the hop, compared with this slack
_TIME_TOLERANCE = 1.0e-9

DEFAULT_FRAME_SPEC = FrameSpec(window_length_s=WINDOW_LENGTH_S, hop_length_s=HOP_LENGTH_S, window_kind='hann')


@dataclass(frozen=True)
class LocalEnergy:
    """Local energy per frame, with the window centred on the frame time."""

    #: shape: (num_frames,)
    frame_times_s: np.ndarray

    #: shape: (num_frames,)
    energies: np.ndarray

    window_length_s: float
    hop_length_s: float

    def __len__(self) -> int:
        return self.energies.shape[0]


@dataclass(frozen=True)
class NoveltyCurve:
    """Normalized energy novelty, one value per frame transition."""

    #: shape: (num_values,), in [0, 1]
    values: np.ndarray

    #: shape: (num_values,), the centre time of the frame in which the energy rise is observed
    frame_times_s: np.ndarray

    gamma: float
    window_length_s: float
    hop_length_s: float

    def __post_init__(self):
        if self.values.shape != self.frame_times_s.shape:
            raise ValueError(f'Got {self.values.shape} values for {self.frame_times_s.shape} frame times.')

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class PeakPickParams:
    """Thresholds of the peak picking."""

    amplitude_threshold: float = AMP_THRESHOLD
    min_separation_s: float = MIN_SEPARATION_S

    def __post_init__(self):
        if not 0 < self.amplitude_threshold < 1:
            raise ValueError(f'Amplitude threshold must lie in (0, 1), got {self.amplitude_threshold}.')
        if self.min_separation_s < 0:
            raise ValueError(f'Minimum separation must be non-negative, got {self.min_separation_s}.')


@dataclass(frozen=True)
class OnsetList:
    """Detected onsets in increasing time order."""

    #: shape: (num_onsets,)
    times_s: np.ndarray

    #: shape: (num_onsets,)
    strengths: np.ndarray

    def __len__(self) -> int:
        return self.times_s.shape[0]

    @classmethod
    def from_times(cls, times_s: Sequence[float], strengths: Optional[Sequence[float]] = None) -> 'OnsetList':
        """Create from plain onset times, strengths default to one."""
        times_s = np.asarray(times_s, dtype=float)
        if strengths is None:
            strengths = np.ones_like(times_s)
        return cls(times_s=times_s, strengths=np.asarray(strengths, dtype=float))


def local_energy(buffer: AudioBuffer, spec: FrameSpec = DEFAULT_FRAME_SPEC) -> LocalEnergy:
    """
    Compute the local energy E[n] = sum_m |x[n * hop + m] w[m]|^2 with m running over the centred window.

    Evaluated as the convolution of x^2 with w^2, sampled at the hop positions.

    :param buffer:
        The signal.
    :param spec:
        The window and hop.

    :return:
        One energy value per hop, the first frame centred on the first sample.
    """
    if len(buffer) == 0:
        return LocalEnergy(
            frame_times_s=np.zeros(0),
            energies=np.zeros(0),
            window_length_s=spec.window_length_s,
            hop_length_s=spec.hop_length_s,
        )
    window = spec.window(buffer.sample_rate)
    length = window.shape[0]
    hop = spec.hop_samples(buffer.sample_rate)
    centres = np.arange(0, len(buffer), hop)
    # the windows are symmetric, so the convolution evaluates the correlation
    convolved = fftconvolve(buffer.samples ** 2, window ** 2, mode='full')
    energies = np.clip(convolved[centres - (length - 1) // 2 + length - 1], 0.0, None)
    return LocalEnergy(
        frame_times_s=centres / buffer.sample_rate,
        energies=energies,
        window_length_s=spec.window_length_s,
        hop_length_s=spec.hop_length_s,
    )


def energy_novelty(
    energies: Union[LocalEnergy, Sequence[float]],
    gamma: float = GAMMA,
    hop_length_s: float = HOP_LENGTH_S,
    window_length_s: float = WINDOW_LENGTH_S,
) -> NoveltyCurve:
    """
    Compute the normalized energy novelty.

    :param energies:
        The local energy. Plain sequences are taken as frames every hop_length_s, starting at zero.
    :param gamma: > 0
        The compression constant of log(1 + gamma * E).
    :param hop_length_s:
        The hop for plain sequences, ignored for LocalEnergy input.
    :param window_length_s:
        The window length for plain sequences, ignored for LocalEnergy input.

    :return:
        A curve one value shorter than the energies, value n is stamped with the time of frame n + 1.
    """
    if gamma <= 0:
        raise ValueError(f'gamma must be positive, got {gamma}.')
    if isinstance(energies, LocalEnergy):
        times = energies.frame_times_s
        hop_length_s, window_length_s = energies.hop_length_s, energies.window_length_s
        energies = energies.energies
    else:
        energies = np.asarray(energies, dtype=float)
        times = np.arange(energies.shape[0]) * hop_length_s
    compressed = np.log1p(gamma * energies)
    novelty = np.maximum(np.diff(compressed), 0.0)
    peak = novelty.max(initial=0.0)
    if peak > 0:
        novelty = novelty / peak
    return NoveltyCurve(
        values=novelty,
        frame_times_s=np.asarray(times[1:], dtype=float),
        gamma=gamma,
        window_length_s=window_length_s,
        hop_length_s=hop_length_s,
    )


def _peak_candidates(values: np.ndarray) -> np.ndarray:
    """Indices of strict local maxima; a plateau counts once, at its first frame. Missing neighbours count as lower."""
    if values.shape[0] == 0:
        return np.zeros(0, dtype=int)
    starts = np.flatnonzero(np.concatenate([[True], values[1:] != values[:-1]]))
    run_values = values[starts]
    left = np.concatenate([[-np.inf], run_values[:-1]])
    right = np.concatenate([run_values[1:], [-np.inf]])
    return starts[(run_values > left) & (run_values > right)]


def pick_onsets(curve: NoveltyCurve, params: Optional[PeakPickParams] = None) -> OnsetList:
    """
    Pick onsets from a normalized novelty curve.

    Candidates are local maxima at or above the amplitude threshold. They are accepted greedily by decreasing value,
    dropping every candidate closer than the minimum separation to an accepted one.

    :param curve:
        The novelty curve.
    :param params:
        The thresholds, defaults to PeakPickParams().

    :return:
        The accepted onsets, sorted by time. Possibly empty.
    """
    params = params or PeakPickParams()
    values = curve.values
    candidates = _peak_candidates(values)
    candidates = candidates[values[candidates] >= params.amplitude_threshold]
    # stable sort keeps the earlier frame first among equal values
    order = candidates[np.argsort(-values[candidates], kind='stable')]
    accepted = []
    separation = params.min_separation_s - _TIME_TOLERANCE
    for index in order:
        time = curve.frame_times_s[index]
        if all(abs(time - curve.frame_times_s[other]) >= separation for other in accepted):
            accepted.append(index)
    accepted = np.sort(np.asarray(accepted, dtype=int))
    logger.debug('Accepted %d of %d onset candidates', accepted.shape[0], candidates.shape[0])
    return OnsetList(times_s=curve.frame_times_s[accepted], strengths=values[accepted])


def detect_onsets(
    buffer: AudioBuffer,
    spec: FrameSpec = DEFAULT_FRAME_SPEC,
    gamma: float = GAMMA,
    params: Optional[PeakPickParams] = None,
) -> OnsetList:
    """Run local energy, novelty and peak picking in sequence."""
    return pick_onsets(curve=energy_novelty(local_energy(buffer=buffer, spec=spec), gamma=gamma), params=params)


def novelty_frame(
    buffer: AudioBuffer,
    spec: FrameSpec = DEFAULT_FRAME_SPEC,
    gamma: float = GAMMA,
) -> pandas.DataFrame:
    """
    Tabulate local energy and novelty per frame.

    :return:
        A dataframe with columns ["frame_time_s", "energy", "novelty"], one row per frame. The first frame has no
        predecessor and gets novelty 0.
    """
    energy = local_energy(buffer=buffer, spec=spec)
    curve = energy_novelty(energy, gamma=gamma)
    novelty = np.concatenate([np.zeros(min(1, len(energy))), curve.values])
    return pandas.DataFrame(data=dict(
        frame_time_s=energy.frame_times_s,
        energy=energy.energies,
        novelty=novelty,
    ))
