"""Single-sensor detectability and minimal sensor sets.

For every channel the auto-spectrum alone is searched for the reference
natural frequencies.  A channel "detects" a mode when its PSD has a
sufficiently prominent peak within tolerance of the reference frequency.
The covering problem (which channels together detect every mode) is then
solved exactly for small set sizes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .data import ModalSet, TimeSeriesSet, parse_channel
from .exceptions import FrameOMAError, InfeasibleCoverError
from .pp import PeakConfig, pick_peaks
from .spectral import DEFAULT_OVERLAP, DEFAULT_SEGMENT_LEN, DEFAULT_WINDOW, welch_cpsd

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectionConfig:
    """Per-channel detection rule.

    Attributes
    ----------
    tolerance_bins, tolerance_rel : float
        A peak matches reference frequency ``f`` when it lies within
        ``max(tolerance_bins * df, tolerance_rel * f)``.
    min_prominence : float
        Peak prominence on ``log10(PSD)`` in decades; 0.3 means the peak
        stands a factor of two above its surroundings.
    prominence_window : float
        Width [Hz] of the neighbourhood the prominence is measured in.
    tolerance_hz : float or None
        Absolute tolerance [Hz] replacing the bin/relative rule when set.
    """

    segment_len: int = DEFAULT_SEGMENT_LEN
    overlap: float = DEFAULT_OVERLAP
    window: str = DEFAULT_WINDOW
    tolerance_bins: float = 2.0
    tolerance_rel: float = 0.02
    min_prominence: float = 0.3
    prominence_window: Optional[float] = 10.0
    tolerance_hz: Optional[float] = None

    def __post_init__(self):
        if self.tolerance_bins < 0 or self.tolerance_rel < 0:
            raise ValueError("tolerances must be non-negative")
        if self.tolerance_bins == 0 and self.tolerance_rel == 0:
            raise ValueError("at least one tolerance must be positive")

    def peak_config(self) -> PeakConfig:
        return PeakConfig(
            min_prominence=self.min_prominence,
            min_contrast=0.0,
            scale="log",
            window=self.prominence_window,
        )

    def tolerance(self, f: float, df: float) -> float:
        if self.tolerance_hz is not None:
            return self.tolerance_hz
        return max(self.tolerance_bins * df, self.tolerance_rel * f)


@dataclass(frozen=True)
class DetectabilityTable:
    """Detected frequency per (channel, reference mode); NaN where absent."""

    channels: tuple[str, ...]
    modes: np.ndarray  # reference frequencies [Hz]
    cells: np.ndarray  # (n_channels, n_modes)
    config: DetectionConfig = field(default_factory=DetectionConfig)
    warnings: tuple[str, ...] = ()

    @property
    def detected(self) -> np.ndarray:
        return ~np.isnan(self.cells)

    def covered(self, channel) -> frozenset:
        """Indices of the modes detected at ``channel``."""
        i = self.channels.index(channel)
        return frozenset(np.flatnonzero(self.detected[i]).tolist())

    def select(self, channels: Sequence[str]) -> "DetectabilityTable":
        idx = [self.channels.index(c) for c in channels]
        return DetectabilityTable(
            tuple(channels), self.modes, self.cells[idx], self.config, self.warnings
        )

    def by_direction(self, direction: str) -> "DetectabilityTable":
        return self.select([c for c in self.channels if parse_channel(c)[1] == direction])


def detectability(
    ts: TimeSeriesSet, reference: ModalSet, cfg: DetectionConfig = DetectionConfig()
) -> DetectabilityTable:
    """Which reference modes each channel's own PSD reveals.

    A channel whose spectrum cannot be estimated is kept as an all-absent
    row and a warning is recorded.
    """
    if not len(reference):
        raise ValueError("reference modal set is empty")
    fref = reference.frequencies
    pcfg = cfg.peak_config()
    cells = np.full((len(ts.channels), len(fref)), np.nan)
    warnings = []
    for i, ch in enumerate(ts.channels):
        try:
            spec = welch_cpsd(ts.select([ch]), cfg.segment_len, cfg.overlap, cfg.window)
        except FrameOMAError as exc:
            msg = f"{ch}: skipped ({exc})"
            logger.warning(msg)
            warnings.append(msg)
            continue
        psd = spec.psd(0)
        if not psd.any():
            warnings.append(f"{ch}: zero power")
            continue
        peaks = pick_peaks(psd, spec.freqs, pcfg, source="PSD").frequencies
        if not peaks.size:
            continue
        for k, f in enumerate(fref):
            gap = np.abs(peaks - f)
            j = int(np.argmin(gap))
            if gap[j] <= cfg.tolerance(f, spec.df):
                cells[i, k] = peaks[j]
    return DetectabilityTable(ts.channels, fref, cells, cfg, tuple(warnings))


@dataclass(frozen=True)
class SensorSets:
    """Minimum-cardinality channel sets covering every reference mode.

    ``optimal`` is False when the exhaustive search was capped and the
    greedy fallback produced ``sets``.
    """

    sets: tuple[tuple[str, ...], ...]
    size: int
    optimal: bool = True

    @property
    def singletons(self) -> tuple[str, ...]:
        return tuple(s[0] for s in self.sets if len(s) == 1)


def minimal_sensor_set(table: DetectabilityTable, max_size: int = 4) -> SensorSets:
    """All smallest channel subsets whose detections cover every mode.

    Subsets are searched exhaustively up to ``max_size`` channels; beyond
    that a greedy cover is returned and flagged non-optimal.
    """
    if not table.channels or not len(table.modes):
        raise ValueError("detectability table is empty")
    everything = frozenset(range(len(table.modes)))
    cover = {c: table.covered(c) for c in table.channels}
    union = frozenset().union(*cover.values())
    if union != everything:
        missing = sorted(everything - union)
        raise InfeasibleCoverError(
            "no channel detects mode(s) "
            + ", ".join(f"{k + 1} ({table.modes[k]:.4g} Hz)" for k in missing)
        )

    useful = [c for c in table.channels if cover[c]]
    for size in range(1, min(max_size, len(useful)) + 1):
        found = [
            combo
            for combo in combinations(useful, size)
            if frozenset().union(*(cover[c] for c in combo)) == everything
        ]
        if found:
            return SensorSets(tuple(found), size, True)

    chosen, left = [], set(everything)
    while left:
        best = max(useful, key=lambda c: (len(cover[c] & left), -useful.index(c)))
        chosen.append(best)
        left -= cover[best]
    logger.info("exhaustive cover capped at %d channels, greedy used", max_size)
    return SensorSets((tuple(chosen),), len(chosen), False)
