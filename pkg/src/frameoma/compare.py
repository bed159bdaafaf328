"""Agreement between modal sets: MAC, pairing and comparison tables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import ModalSet


def mac(a, b) -> float:
    """Modal assurance criterion ``|a^H b|^2 / ((a^H a)(b^H b))``.

    Evaluated with separate real and imaginary parts: every product is
    rounded before it is summed, so swapping arguments, negating or
    multiplying by 1j or a power of two leaves the result bit-identical.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("shape vectors must have the same length")
    ar, ai = np.real(a).astype(float), np.imag(a).astype(float)
    br, bi = np.real(b).astype(float), np.imag(b).astype(float)
    aa = np.sum(ar * ar + ai * ai)
    bb = np.sum(br * br + bi * bi)
    if aa == 0 or bb == 0:
        raise ValueError("MAC is undefined for a zero vector")
    re = np.sum(ar * br + ai * bi)
    im = np.sum(ar * bi - ai * br)
    return float(min(1.0, (re * re + im * im) / (aa * bb)))


@dataclass(frozen=True)
class MacMatrix:
    rows: tuple[str, ...]
    cols: tuple[str, ...]
    values: np.ndarray

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.values)


def _common(a: ModalSet, b: ModalSet):
    if a.channels == b.channels:
        return a, b
    common = [c for c in a.channels if c in b.channels]
    if not common:
        raise ValueError("modal sets share no channels")
    return a.restrict(common), b.restrict(common)


def _labels(s: ModalSet, tag: str):
    method = s.method or tag
    return tuple(f"{method} {k + 1} ({m.frequency:.2f} Hz)" for k, m in enumerate(s))


def mac_matrix(a: ModalSet, b: ModalSet) -> MacMatrix:
    """MAC between every mode of ``a`` (rows) and of ``b`` (columns)."""
    a, b = _common(a, b)
    vals = np.array([[mac(ma.shape, mb.shape) for mb in b] for ma in a]).reshape(len(a), len(b))
    return MacMatrix(_labels(a, "A"), _labels(b, "B"), vals)


@dataclass(frozen=True)
class Pairing:
    pairs: tuple[tuple[int, int, float], ...]  # (index in A, index in B, MAC)
    unpaired_a: tuple[int, ...] = ()
    unpaired_b: tuple[int, ...] = ()

    def as_dict(self) -> dict:
        return {i: j for i, j, _ in self.pairs}


def pair_modes(a: ModalSet, b: ModalSet, threshold: float = 0.7) -> Pairing:
    """Greedy maximum-MAC one-to-one pairing.

    Candidate pairs are taken in order of decreasing MAC, ties broken by the
    smaller frequency gap; pairs below ``threshold`` are never formed.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    M = mac_matrix(a, b).values if len(a) and len(b) else np.zeros((len(a), len(b)))
    fa, fb = a.frequencies, b.frequencies
    cands = [
        (-M[i, j], abs(fa[i] - fb[j]), i, j)
        for i in range(len(a))
        for j in range(len(b))
        if M[i, j] >= threshold
    ]
    cands.sort()
    used_a, used_b, pairs = set(), set(), []
    for neg, _, i, j in cands:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j, -neg))
    pairs.sort()
    return Pairing(
        tuple(pairs),
        tuple(i for i in range(len(a)) if i not in used_a),
        tuple(j for j in range(len(b)) if j not in used_b),
    )


@dataclass(frozen=True)
class ComparisonReport:
    frequency_table: tuple  # rows of (mode index A, f_A, f_B, gap %)
    shape_table: dict  # mode index A -> (channels, shape A, shape B)
    pairing: Pairing
    mac: MacMatrix
    methods: tuple[str, str] = ("A", "B")
    channels: tuple[str, ...] = field(default=())


def build_report(a: ModalSet, b: ModalSet, threshold: float = 0.7) -> ComparisonReport:
    """Frequency and shape comparison tables for the MAC-paired modes."""
    if not len(a) or not len(b):
        raise ValueError("both modal sets must be non-empty")
    ra, rb = _common(a, b)
    pairing = pair_modes(ra, rb, threshold)
    ftab, stab = [], {}
    for i, j, _ in pairing.pairs:
        fa, fb = ra[i].frequency, rb[j].frequency
        ftab.append((i, fa, fb, abs(fb - fa) / fa * 100))
        sb = rb[j].shape
        # shapes are sign-free; show B with the sign that matches A
        if np.real(np.sum(np.conj(ra[i].shape) * sb)) < 0:
            sb = -sb
        stab[i] = (ra.channels, ra[i].shape, sb)
    return ComparisonReport(
        tuple(ftab),
        stab,
        pairing,
        mac_matrix(ra, rb),
        (a.method or "A", b.method or "B"),
        ra.channels,
    )
