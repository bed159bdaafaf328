"""Cross-power spectral density matrices and normalized spectra.

Conventions
-----------
``cpsd[k, i, l]`` is the segment average of ``conj(X_i(f_k)) * X_l(f_k)``,
scaled to a one-sided density in (units)^2/Hz.  With this ordering the
transfer function from channel ``i`` to channel ``l`` is
``cpsd[k, i, l] / cpsd[k, i, i]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import get_window

from .data import TimeSeriesSet
from .exceptions import DegenerateSpectrumError, RecordTooShortError

DEFAULT_SEGMENT_LEN = 4096
DEFAULT_OVERLAP = 0.5
DEFAULT_WINDOW = "hann"


@dataclass(frozen=True)
class SpectralDataset:
    freqs: np.ndarray
    cpsd: np.ndarray
    segment_count: int
    window_meta: tuple  # (window name, segment length, overlap fraction)
    channels: tuple[str, ...]

    @property
    def n_channels(self) -> int:
        return self.cpsd.shape[1]

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def index(self, channel) -> int:
        if isinstance(channel, (int, np.integer)):
            if not 0 <= channel < self.n_channels:
                raise IndexError(f"channel index {channel} out of range")
            return int(channel)
        return self.channels.index(channel)

    def psd(self, channel) -> np.ndarray:
        """Real auto-spectrum of one channel."""
        i = self.index(channel)
        return self.cpsd[:, i, i].real.copy()

    @property
    def auto_spectra(self) -> np.ndarray:
        """(n_freqs, n_channels) matrix of auto-spectra."""
        return np.real(np.einsum("kii->ki", self.cpsd))

    def nearest_bin(self, f: float) -> int:
        return int(np.argmin(np.abs(self.freqs - f)))

    def select(self, channels) -> "SpectralDataset":
        idx = [self.index(c) for c in channels]
        return SpectralDataset(
            self.freqs,
            self.cpsd[np.ix_(np.arange(len(self.freqs)), idx, idx)],
            self.segment_count,
            self.window_meta,
            tuple(self.channels[i] for i in idx),
        )


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def welch_cpsd(
    ts: TimeSeriesSet,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    overlap: float = DEFAULT_OVERLAP,
    window: str = DEFAULT_WINDOW,
) -> SpectralDataset:
    """Segment-averaged, window-corrected one-sided CPSD matrix.

    Each segment has its mean removed before windowing.  Interior bins carry
    the factor two of the one-sided convention; DC and Nyquist do not.

    Parameters
    ----------
    ts : TimeSeriesSet
        Record to analyse.
    segment_len : int
        FFT length, a power of two no longer than the record.
    overlap : float
        Fractional overlap of consecutive segments, in [0, 1).
    window : str
        Any window name understood by :func:`scipy.signal.get_window`.

    Returns
    -------
    SpectralDataset
    """
    segment_len = int(segment_len)
    if not _is_power_of_two(segment_len):
        raise ValueError(f"segment_len must be a power of two, got {segment_len}")
    if not 0 <= overlap < 1:
        raise ValueError("overlap must lie in [0, 1)")
    x = ts.samples
    n = x.shape[0]
    if segment_len > n:
        raise RecordTooShortError(
            f"record has {n} samples, shorter than segment_len={segment_len}"
        )
    try:
        w = get_window(window, segment_len)
    except (ValueError, TypeError) as exc:
        raise ValueError(f"bad window name {window!r}: {exc}") from None

    step = segment_len - int(np.floor(overlap * segment_len))
    starts = range(0, n - segment_len + 1, step)
    nf = segment_len // 2 + 1
    m = x.shape[1]
    G = np.zeros((nf, m, m), dtype=complex)
    for s in starts:
        seg = x[s : s + segment_len]
        seg = seg - seg.mean(axis=0)
        X = np.fft.rfft(w[:, None] * seg, axis=0)
        G += np.conj(X)[:, :, None] * X[:, None, :]
    nseg = len(starts)

    scale = np.full(nf, 2.0)
    scale[0] = 1.0
    if segment_len % 2 == 0:
        scale[-1] = 1.0
    scale /= ts.sample_rate * np.sum(w**2) * nseg
    G *= scale[:, None, None]
    idx = np.arange(m)
    G[:, idx, idx] = G[:, idx, idx].real
    # vectorized complex products need not be mirror-exact; enforce it
    iu, ju = np.triu_indices(m, 1)
    G[:, ju, iu] = np.conj(G[:, iu, ju])

    freqs = np.fft.rfftfreq(segment_len, d=1.0 / ts.sample_rate)
    return SpectralDataset(freqs, G, nseg, (window, segment_len, float(overlap)), ts.channels)


def npsd(dataset: SpectralDataset, channel) -> np.ndarray:
    """Auto-spectrum of ``channel`` normalized to unit sum over all lines."""
    p = dataset.psd(channel)
    total = p.sum()
    if not total > 0:
        raise DegenerateSpectrumError(
            f"channel {dataset.channels[dataset.index(channel)]!r} has zero power"
        )
    return p / total


def anpsd(dataset: SpectralDataset, channel_subset: Sequence = None) -> np.ndarray:
    """Mean of the NPSDs of ``channel_subset`` (all channels by default)."""
    if channel_subset is None:
        channel_subset = range(dataset.n_channels)
    channel_subset = list(channel_subset)
    if not channel_subset:
        raise ValueError("channel subset must be non-empty")
    acc = np.zeros(len(dataset.freqs))
    for c in channel_subset:
        acc += npsd(dataset, c)
    return acc / len(channel_subset)
