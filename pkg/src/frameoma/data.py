"""Containers shared across the identification pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

METHODS = ("FEM", "PP", "FDD")
DIRECTIONS = ("x", "y", "rz")


def channel_label(node: int, direction: str) -> str:
    return f"{node}:{direction}"


def parse_channel(label: str) -> tuple[int, str]:
    """Split ``"5:x"`` into ``(5, "x")``."""
    node, _, direction = label.partition(":")
    if direction not in DIRECTIONS or not node.isdigit():
        raise ValueError(f"channel label {label!r} is not of the form <node>:<dir>")
    return int(node), direction


def normalize_shape(shape) -> np.ndarray:
    """Scale ``shape`` so that its entry of largest magnitude equals +1.

    Complex vectors are divided by that (complex) entry, which also removes
    the arbitrary global phase.
    """
    shape = np.asarray(shape)
    k = int(np.argmax(np.abs(shape)))
    if shape[k] == 0:
        raise ValueError("cannot normalize an all-zero shape")
    out = shape / shape[k]
    if np.iscomplexobj(out) and not np.any(out.imag):
        out = out.real
    return out


@dataclass(frozen=True)
class TimeSeriesSet:
    """Multi-channel acceleration record.

    ``samples`` has one row per time step and one column per channel.
    """

    sample_rate: float
    channels: tuple[str, ...]
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if samples.shape[1] != len(self.channels):
            raise ValueError(
                f"{samples.shape[1]} sample columns but {len(self.channels)} channel labels"
            )
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain NaN or Inf")
        samples.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate

    def index(self, channel) -> int:
        if isinstance(channel, (int, np.integer)):
            if not 0 <= channel < len(self.channels):
                raise IndexError(f"channel index {channel} out of range")
            return int(channel)
        return self.channels.index(channel)

    def select(self, channels=None, directions=None) -> "TimeSeriesSet":
        """Return a record restricted to some channels or directions."""
        if channels is None:
            channels = list(self.channels)
        idx = [self.index(c) for c in channels]
        if directions is not None:
            idx = [i for i in idx if parse_channel(self.channels[i])[1] in directions]
        return TimeSeriesSet(
            self.sample_rate, [self.channels[i] for i in idx], self.samples[:, idx]
        )

    def scaled(self, factors) -> "TimeSeriesSet":
        return TimeSeriesSet(
            self.sample_rate, self.channels, self.samples * np.asarray(factors, float)
        )


@dataclass(frozen=True)
class Mode:
    frequency: float
    shape: np.ndarray
    damping_ratio: Optional[float] = None
    method: str = "FEM"
    meta: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class ModalSet:
    """Ordered list of modes sharing a channel layout."""

    modes: tuple[Mode, ...]
    channels: tuple[str, ...]

    def __post_init__(self):
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "channels", tuple(self.channels))
        freqs = [m.frequency for m in modes]
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("mode frequencies must be strictly increasing")
        for m in modes:
            if m.method not in METHODS:
                raise ValueError(f"unknown method tag {m.method!r}")
            if len(m.shape) != len(self.channels):
                raise ValueError("shape length does not match channel count")

    @classmethod
    def from_arrays(
        cls,
        frequencies,
        shapes,
        channels: Sequence[str],
        method: str,
        damping=None,
        meta=None,
    ) -> "ModalSet":
        """Build a set from a frequency vector and an (n_modes, n_channels) array.

        Shapes are max-abs normalized on the way in.
        """
        shapes = np.atleast_2d(shapes) if len(frequencies) else np.empty((0, len(channels)))
        damping = [None] * len(frequencies) if damping is None else damping
        meta = [{} for _ in frequencies] if meta is None else meta
        modes = [
            Mode(float(f), normalize_shape(s), None if d is None else float(d), method, md)
            for f, s, d, md in zip(frequencies, shapes, damping, meta)
        ]
        return cls(tuple(modes), tuple(channels))

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, i):
        return self.modes[i]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m.frequency for m in self.modes])

    @property
    def shapes(self) -> np.ndarray:
        if not self.modes:
            return np.empty((0, len(self.channels)))
        return np.vstack([m.shape for m in self.modes])

    @property
    def damping_ratios(self) -> list:
        return [m.damping_ratio for m in self.modes]

    @property
    def method(self) -> Optional[str]:
        return self.modes[0].method if self.modes else None

    def restrict(self, channels: Sequence[str]) -> "ModalSet":
        """Keep only ``channels`` (in the given order) and renormalize shapes."""
        idx = [self.channels.index(c) for c in channels]
        modes = tuple(
            Mode(m.frequency, normalize_shape(m.shape[idx]), m.damping_ratio, m.method, m.meta)
            for m in self.modes
        )
        return ModalSet(modes, tuple(channels))
