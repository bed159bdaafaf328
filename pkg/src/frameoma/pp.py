"""Peak-Picking identification from averaged normalized spectra.

Natural frequencies are read off the peaks of the ANPSD; each mode shape is
assembled from transfer-function ratios against a reference channel at the
peak line, with the sign taken from the ratio's phase.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.signal import find_peaks

from .data import ModalSet, TimeSeriesSet
from .exceptions import ZeroReferencePowerError
from .spectral import (
    DEFAULT_OVERLAP,
    DEFAULT_SEGMENT_LEN,
    DEFAULT_WINDOW,
    SpectralDataset,
    anpsd,
    welch_cpsd,
)

logger = logging.getLogger(__name__)

_TINY = 1e-300


@dataclass(frozen=True)
class PeakConfig:
    """Peak selection rules.

    Attributes
    ----------
    min_prominence : float
        Minimum peak prominence.  On a linear curve it is a fraction of the
        curve maximum; on a log curve it is in decades.
    min_separation : float or None
        Minimum spacing between retained peaks [Hz]; ``None`` means two bins.
        On conflict the taller peak wins.
    min_contrast : float
        Minimum ratio of peak height to the median of the curve.  Rejects
        the fluctuations of a flat (noise-only) spectrum.
    scale : {"linear", "log"}
        Whether prominence is judged on the curve or on ``log10`` of it.
    band : (float, float) or None
        Only peaks inside ``[fmin, fmax]`` are reported; the thresholds are
        computed from the curve inside the band as well.
    window : float or None
        Width [Hz] of the neighbourhood used to measure prominence; ``None``
        uses the whole curve.
    """

    min_prominence: float = 0.05
    min_separation: Optional[float] = None
    min_contrast: float = 3.0
    scale: str = "linear"
    band: Optional[tuple[float, float]] = None
    window: Optional[float] = None

    def __post_init__(self):
        if self.min_prominence < 0:
            raise ValueError("min_prominence must be non-negative")
        if self.scale == "linear" and self.min_prominence >= 1:
            raise ValueError("a linear min_prominence is a fraction of the maximum, below 1")
        if self.window is not None and self.window <= 0:
            raise ValueError("window must be positive")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"unknown scale {self.scale!r}")
        if self.min_separation is not None and self.min_separation < 0:
            raise ValueError("min_separation must be non-negative")
        if self.min_contrast < 0:
            raise ValueError("min_contrast must be non-negative")


@dataclass(frozen=True)
class Peak:
    frequency: float
    bin: int
    prominence: float
    source: str = "ANPSD"


@dataclass(frozen=True)
class PeakSet:
    peaks: tuple[Peak, ...] = ()

    def __len__(self):
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)

    def __getitem__(self, i):
        return self.peaks[i]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([p.frequency for p in self.peaks])

    @property
    def bins(self) -> np.ndarray:
        return np.array([p.bin for p in self.peaks], dtype=int)


def pick_peaks(curve, freqs, cfg: PeakConfig = PeakConfig(), source: str = "ANPSD") -> PeakSet:
    """Strict local maxima of ``curve`` that pass the rules in ``cfg``."""
    curve = np.asarray(curve, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    if curve.shape != freqs.shape:
        raise ValueError("curve and freqs must have the same length")
    if curve.size < 3:
        return PeakSet()

    if cfg.scale == "log":
        work = np.log10(np.maximum(curve, _TINY))
    else:
        work = curve
    if cfg.band is None:
        inband = np.ones(curve.size, dtype=bool)
    else:
        inband = (freqs >= cfg.band[0]) & (freqs <= cfg.band[1])
    if not inband.any():
        return PeakSet()
    floor = np.median(work[inband])
    if cfg.scale == "log":
        norm = 1.0
        contrast_ok = lambda h: h - floor >= np.log10(max(cfg.min_contrast, _TINY))
    else:
        norm = work[inband].max()
        contrast_ok = lambda h: h >= cfg.min_contrast * floor
        if not norm > 0:
            return PeakSet()

    df = freqs[1] - freqs[0]
    sep = 2 * df if cfg.min_separation is None else cfg.min_separation
    distance = max(1, int(np.ceil(sep / df - 1e-9)))
    wlen = None
    if cfg.window is not None:
        wlen = 2 * int(np.ceil(cfg.window / (2 * df))) + 1
    idx, props = find_peaks(
        work, prominence=cfg.min_prominence * norm, distance=distance, wlen=wlen
    )

    peaks = []
    for k, p in zip(idx, props["prominences"]):
        if not inband[k]:
            continue
        if not (work[k] > work[k - 1] and work[k] > work[k + 1]):
            continue
        if not contrast_ok(work[k]):
            continue
        peaks.append(Peak(float(freqs[k]), int(k), float(p / norm), source))
    return PeakSet(tuple(peaks))


@dataclass(frozen=True)
class TransferEstimate:
    magnitude: float
    phase: float
    frequency: float
    ref: int
    target: int

    @property
    def value(self) -> complex:
        return self.magnitude * np.exp(1j * self.phase)


def transfer_ratio(spec: SpectralDataset, ref, target, f: float) -> TransferEstimate:
    """Transfer function from ``ref`` to ``target`` at the line nearest ``f``.

    ``T = G[ref, target] / G[ref, ref]``, i.e. the cross-spectrum
    ``X_target conj(X_ref)`` over the reference auto-spectrum.
    """
    i, l = spec.index(ref), spec.index(target)
    k = spec.nearest_bin(f)
    g_rr = spec.cpsd[k, i, i].real
    if not g_rr > 0:
        raise ZeroReferencePowerError(
            f"reference channel {spec.channels[i]!r} has no power at {spec.freqs[k]:.4g} Hz"
        )
    if i == l:
        return TransferEstimate(1.0, 0.0, float(spec.freqs[k]), i, l)
    T = spec.cpsd[k, i, l] / g_rr
    return TransferEstimate(float(abs(T)), float(np.angle(T)), float(spec.freqs[k]), i, l)


# phase band in which the in/out-of-phase call is flagged as uncertain
LOW_CONFIDENCE_PHASE = (np.pi / 3, 2 * np.pi / 3)


def _signed_ratios(spec: SpectralDataset, f: float, ref):
    mags, signs, phases = [], [], []
    for l in range(spec.n_channels):
        t = transfer_ratio(spec, ref, l, f)
        mags.append(t.magnitude)
        phases.append(t.phase)
        signs.append(1.0 if abs(t.phase) < np.pi / 2 else -1.0)
    return np.array(mags), np.array(signs), np.array(phases)


def mode_shape_pp(spec: SpectralDataset, f: float, ref) -> np.ndarray:
    """Operational shape at ``f``: ``|T| * sign``, max-abs normalized.

    The sign is +1 for ``|phase| < pi/2`` (in phase with the reference) and
    -1 otherwise.
    """
    mags, signs, _ = _signed_ratios(spec, f, ref)
    shape = mags * signs
    k = int(np.argmax(np.abs(shape)))
    return shape / shape[k]


def half_power_damping(psd, freqs, peak: int) -> Optional[float]:
    """Half-power bandwidth damping ratio ``(f2 - f1) / (2 fn)``.

    The crossings of ``psd[peak] / 2`` are located by linear interpolation.
    Returns ``None`` when either crossing is not reached before the curve
    starts rising toward a neighbouring peak.
    """
    psd = np.asarray(psd, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    half = psd[peak] / 2
    fn = freqs[peak]

    def crossing(direction):
        k = peak
        while True:
            nxt = k + direction
            if nxt < 0 or nxt >= psd.size:
                return None
            if psd[nxt] > psd[k]:
                return None  # rising again before reaching half power
            if psd[nxt] <= half:
                y0, y1 = psd[k], psd[nxt]
                t = (y0 - half) / (y0 - y1)
                return freqs[k] + t * (freqs[nxt] - freqs[k])
            k = nxt

    f1 = crossing(-1)
    f2 = crossing(+1)
    if f1 is None or f2 is None or fn <= 0:
        return None
    return float((f2 - f1) / (2 * fn))


@dataclass(frozen=True)
class PPConfig:
    segment_len: int = DEFAULT_SEGMENT_LEN
    overlap: float = DEFAULT_OVERLAP
    window: str = DEFAULT_WINDOW
    peaks: PeakConfig = field(default_factory=PeakConfig)
    # channel label/index; None: channel with the largest total power;
    # "per-peak": channel with the largest PSD at each peak line
    ref: Optional[object] = None
    anpsd_channels: Optional[Sequence] = None  # None: every channel


def _reference(spec: SpectralDataset, ref, k: int) -> int:
    if ref is None:
        return int(np.argmax(spec.auto_spectra.sum(axis=0)))
    if ref == "per-peak":
        return int(np.argmax(spec.auto_spectra[k]))
    return spec.index(ref)


def identify_pp_spectrum(spec: SpectralDataset, cfg: PPConfig = PPConfig()) -> ModalSet:
    """Peak-Picking on an already estimated spectral dataset."""
    curve = anpsd(spec, cfg.anpsd_channels)
    peaks = pick_peaks(curve, spec.freqs, cfg.peaks, source="ANPSD")
    freqs, shapes, damping, meta = [], [], [], []
    for p in peaks:
        ref = _reference(spec, cfg.ref, p.bin)
        mags, signs, phases = _signed_ratios(spec, p.frequency, ref)
        shape = mags * signs
        aphase = np.abs(phases)
        low = (aphase >= LOW_CONFIDENCE_PHASE[0]) & (aphase <= LOW_CONFIDENCE_PHASE[1])
        freqs.append(p.frequency)
        shapes.append(shape)
        damping.append(half_power_damping(curve, spec.freqs, p.bin))
        meta.append(
            {
                "bin": p.bin,
                "prominence": p.prominence,
                "reference": spec.channels[ref],
                "low_confidence": [spec.channels[i] for i in np.flatnonzero(low)],
            }
        )
    logger.info("PP identified %d modes", len(freqs))
    return ModalSet.from_arrays(freqs, shapes, spec.channels, "PP", damping, meta)


def identify_pp(ts: TimeSeriesSet, cfg: PPConfig = PPConfig()) -> ModalSet:
    """welch_cpsd -> anpsd -> pick_peaks -> per-peak shape and damping."""
    spec = welch_cpsd(ts, cfg.segment_len, cfg.overlap, cfg.window)
    return identify_pp_spectrum(spec, cfg)
