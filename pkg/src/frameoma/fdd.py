"""Frequency Domain Decomposition.

Each line of the CPSD matrix is decomposed as ``G = U S U^H``.  Near a
resonance one mode dominates, the line is close to rank one, and the first
singular vector estimates that mode's shape.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .compare import mac
from .data import ModalSet, TimeSeriesSet
from .exceptions import DataIntegrityError
from .pp import PeakConfig, pick_peaks
from .spectral import (
    DEFAULT_OVERLAP,
    DEFAULT_SEGMENT_LEN,
    DEFAULT_WINDOW,
    SpectralDataset,
    welch_cpsd,
)

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
CLIP_TOL = 1e-12
MULTIPLICITY_RATIO = 0.5


@dataclass(frozen=True)
class SvdSpectra:
    freqs: np.ndarray
    singular_values: np.ndarray  # (n_freqs, m), descending per row
    first_vectors: np.ndarray  # (n_freqs, m), unit norm, phase aligned
    vectors: Optional[np.ndarray] = None  # (n_freqs, m, m) when retained
    channels: tuple[str, ...] = ()

    @property
    def s1(self) -> np.ndarray:
        return self.singular_values[:, 0]


def phase_align(v) -> np.ndarray:
    """Rotate ``v`` so its largest-magnitude component is real and positive.

    Near-ties (within 1e-12 relative) go to the first such component, which
    keeps the result stable under round-off and makes the map idempotent.
    """
    v = np.asarray(v, dtype=complex)
    mag = np.abs(v)
    k = int(np.flatnonzero(mag >= mag.max() * (1 - 1e-12))[0]) if v.size else 0
    if v[k] == 0:
        return v.copy()
    out = v * (np.conj(v[k]) / abs(v[k]))
    out[k] = abs(v[k])  # exactly real, free of rotation round-off
    return out


def svd_lines(spec: SpectralDataset, full: bool = False) -> SvdSpectra:
    """Per-line decomposition of the CPSD matrix.

    A Hermitian positive semi-definite matrix has its SVD given by the
    eigendecomposition, which is what is computed.  Eigenvalues in
    ``[-eps, 0)`` with ``eps = 1e-12 * s1`` are clipped to zero; anything more
    negative, or an asymmetric line, is a data-integrity error.
    """
    G = np.asarray(spec.cpsd)
    scale = np.linalg.norm(G, axis=(1, 2))
    asym = np.linalg.norm(G - np.conj(np.swapaxes(G, 1, 2)), axis=(1, 2))
    bad = asym > HERMITIAN_TOL * np.maximum(scale, np.finfo(float).tiny)
    if bad.any():
        k = int(np.argmax(bad))
        raise DataIntegrityError(f"CPSD line {k} is not Hermitian (residual {asym[k]:.3g})")

    w, U = np.linalg.eigh(G)
    w = w[:, ::-1]
    U = U[:, :, ::-1]
    s1 = w[:, :1]
    eps = CLIP_TOL * np.abs(s1)
    if np.any(w < -eps):
        k = int(np.argmax(np.any(w < -eps, axis=1)))
        raise DataIntegrityError(f"CPSD line {k} is indefinite beyond round-off")
    w = np.where(w < 0, 0.0, w)

    first = np.array([phase_align(U[k, :, 0]) for k in range(U.shape[0])])
    return SvdSpectra(spec.freqs, w, first, U if full else None, spec.channels)


def sdof_bell(svd: SvdSpectra, peak: int, mac_threshold: float = 0.8) -> tuple[int, int]:
    """Contiguous bins around ``peak`` whose first singular vector matches the peak's.

    Bins whose first singular value is at the numerical floor (no content)
    end the band.
    """
    if not 0 < mac_threshold < 1:
        raise ValueError("mac_threshold must lie in (0, 1)")
    ref = svd.first_vectors[peak]
    s1 = svd.s1
    floor = 1e-12 * s1[peak]

    def ok(i):
        return s1[i] > floor and mac(svd.first_vectors[i], ref) >= mac_threshold

    lo = peak
    while lo - 1 >= 0 and ok(lo - 1):
        lo -= 1
    hi = peak
    while hi + 1 < len(s1) and ok(hi + 1):
        hi += 1
    return lo, hi


@dataclass(frozen=True)
class FDDConfig:
    segment_len: int = DEFAULT_SEGMENT_LEN
    overlap: float = DEFAULT_OVERLAP
    window: str = DEFAULT_WINDOW
    peaks: PeakConfig = field(default_factory=lambda: PeakConfig(min_prominence=0.5, scale="log"))
    mac_threshold: float = 0.8


def shape_from_vector(u) -> tuple[np.ndarray, float]:
    """Real, max-abs normalized shape from a complex singular vector.

    Also returns the complexity: norm of the imaginary residue after phase
    alignment relative to the vector norm.
    """
    v = phase_align(u)
    complexity = float(np.linalg.norm(v.imag) / np.linalg.norm(v))
    r = v.real
    return r / r[int(np.argmax(np.abs(r)))], complexity


def identify_fdd_spectrum(spec: SpectralDataset, cfg: FDDConfig = FDDConfig()) -> ModalSet:
    """FDD on an already estimated spectral dataset."""
    svd = svd_lines(spec)
    peaks = pick_peaks(svd.s1, svd.freqs, cfg.peaks, source="SV1")
    freqs, shapes, meta = [], [], []
    for p in peaks:
        shape, complexity = shape_from_vector(svd.first_vectors[p.bin])
        lo, hi = sdof_bell(svd, p.bin, cfg.mac_threshold)
        sv = svd.singular_values[p.bin]
        ratio = float(sv[1] / sv[0]) if sv.size > 1 and sv[0] > 0 else 0.0
        freqs.append(p.frequency)
        shapes.append(shape)
        meta.append(
            {
                "bin": p.bin,
                "prominence": p.prominence,
                "complexity": complexity,
                "band": (float(svd.freqs[lo]), float(svd.freqs[hi])),
                "s2_over_s1": ratio,
                "multiple": ratio > MULTIPLICITY_RATIO,
            }
        )
    logger.info("FDD identified %d modes", len(freqs))
    return ModalSet.from_arrays(freqs, shapes, spec.channels, "FDD", None, meta)


def identify_fdd(ts: TimeSeriesSet, cfg: FDDConfig = FDDConfig()) -> ModalSet:
    """welch_cpsd -> svd_lines -> peaks of log10(s1) -> first singular vectors."""
    spec = welch_cpsd(ts, cfg.segment_len, cfg.overlap, cfg.window)
    return identify_fdd_spectrum(spec, cfg)
