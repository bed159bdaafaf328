"""Run configuration: a single JSON document with a fixed key set.

Top-level sections and their keys (all optional)::

    frame       nodes [[id, x, y], ...], elements [[i, j, E, A, I, rho], ...],
                supports [[node, ux, uy, rz], ...], rayleigh [alpha, beta]
                (absent: the built-in 13-node portal frame)
    excitation  intensity, dofs, seed
    simulation  duration, dt, substeps, noise, n_modes
    spectral    segment_len, overlap, window
    peaks       prominence, separation, contrast, band, fdd_prominence
    pp          ref
    fdd         mac_threshold
    compare     threshold
    placement   tolerance_bins, tolerance_rel, tolerance_hz, prominence,
                window, max_size, shape_floor
    method, input, reference, output, seed, plots

Unknown keys and out-of-range values raise :class:`ConfigError` naming the
dotted key.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .exceptions import ConfigError
from .fdd import FDDConfig
from .frame_model import Element, FrameModel, Node, Support, portal_frame
from .placement import DetectionConfig
from .pp import PeakConfig, PPConfig

OUTPUT_ENV = "FRAMEOMA_OUTPUT"


def _check(cond: bool, key: str, msg: str):
    if not cond:
        raise ConfigError(f"{key}: {msg}", key)


@dataclass(frozen=True)
class ExcitationSettings:
    intensity: float = 1.0
    dofs: Optional[tuple] = None
    seed: Optional[int] = None  # None: the run seed

    def validate(self, p):
        _check(self.intensity > 0, f"{p}.intensity", "must be > 0")
        _check(self.dofs is None or len(self.dofs) > 0, f"{p}.dofs", "must be non-empty")


@dataclass(frozen=True)
class SimulationSettings:
    duration: float = 512.0
    dt: float = 1 / 1024
    substeps: int = 8
    noise: float = 0.1  # sensor noise std as a fraction of record RMS
    n_modes: int = 5

    def validate(self, p):
        _check(self.duration > 0, f"{p}.duration", "must be > 0")
        _check(0 < self.dt <= 0.1, f"{p}.dt", "must lie in (0, 0.1]")
        _check(1 <= self.substeps <= 64, f"{p}.substeps", "must lie in [1, 64]")
        _check(0 <= self.noise <= 10, f"{p}.noise", "must lie in [0, 10]")
        _check(1 <= self.n_modes <= 50, f"{p}.n_modes", "must lie in [1, 50]")


@dataclass(frozen=True)
class SpectralSettings:
    segment_len: int = 4096
    overlap: float = 0.5
    window: str = "hann"

    def validate(self, p):
        n = self.segment_len
        _check(n >= 8 and n & (n - 1) == 0, f"{p}.segment_len", "must be a power of two >= 8")
        _check(0 <= self.overlap < 1, f"{p}.overlap", "must lie in [0, 1)")


@dataclass(frozen=True)
class PeakSettings:
    prominence: float = 0.05  # fraction of the ANPSD maximum
    separation: Optional[float] = None  # [Hz]; None: two bins
    contrast: float = 3.0
    band: Optional[tuple] = (1.0, 150.0)
    fdd_prominence: float = 0.5  # decades on log10(s1)

    def validate(self, p):
        _check(0 <= self.prominence < 1, f"{p}.prominence", "must lie in [0, 1)")
        _check(self.separation is None or self.separation >= 0, f"{p}.separation", "must be >= 0")
        _check(self.contrast >= 0, f"{p}.contrast", "must be >= 0")
        _check(self.fdd_prominence >= 0, f"{p}.fdd_prominence", "must be >= 0")
        if self.band is not None:
            _check(
                len(self.band) == 2
                and all(isinstance(v, (int, float)) for v in self.band)
                and 0 <= self.band[0] < self.band[1],
                f"{p}.band",
                "must be [fmin, fmax] with 0 <= fmin < fmax",
            )


@dataclass(frozen=True)
class PPSettings:
    ref: Optional[str] = None

    def validate(self, p):
        pass


@dataclass(frozen=True)
class FDDSettings:
    mac_threshold: float = 0.8

    def validate(self, p):
        _check(0 < self.mac_threshold < 1, f"{p}.mac_threshold", "must lie in (0, 1)")


@dataclass(frozen=True)
class CompareSettings:
    threshold: float = 0.7

    def validate(self, p):
        _check(0 < self.threshold < 1, f"{p}.threshold", "must lie in (0, 1)")


@dataclass(frozen=True)
class PlacementSettings:
    tolerance_bins: float = 2.0
    tolerance_rel: float = 0.02
    tolerance_hz: Optional[float] = None
    prominence: float = 0.3  # decades on log10(PSD)
    window: Optional[float] = 10.0  # [Hz]
    max_size: int = 4
    shape_floor: float = 0.01

    def validate(self, p):
        _check(self.tolerance_bins >= 0, f"{p}.tolerance_bins", "must be >= 0")
        _check(0 <= self.tolerance_rel < 1, f"{p}.tolerance_rel", "must lie in [0, 1)")
        _check(
            self.tolerance_hz is None or self.tolerance_hz > 0, f"{p}.tolerance_hz", "must be > 0"
        )
        _check(self.prominence >= 0, f"{p}.prominence", "must be >= 0")
        _check(self.window is None or self.window > 0, f"{p}.window", "must be > 0")
        _check(1 <= self.max_size <= 8, f"{p}.max_size", "must lie in [1, 8]")
        _check(0 <= self.shape_floor < 1, f"{p}.shape_floor", "must lie in [0, 1)")


@dataclass(frozen=True)
class RunConfig:
    frame: Optional[dict] = None
    excitation: ExcitationSettings = field(default_factory=ExcitationSettings)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    spectral: SpectralSettings = field(default_factory=SpectralSettings)
    peaks: PeakSettings = field(default_factory=PeakSettings)
    pp: PPSettings = field(default_factory=PPSettings)
    fdd: FDDSettings = field(default_factory=FDDSettings)
    compare: CompareSettings = field(default_factory=CompareSettings)
    placement: PlacementSettings = field(default_factory=PlacementSettings)
    method: str = "both"
    input: Optional[str] = None
    reference: Optional[str] = None
    output: Optional[str] = None
    seed: int = 0
    plots: bool = False

    def validate(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if dataclasses.is_dataclass(v):
                v.validate(f.name)
        _check(self.method in ("pp", "fdd", "both"), "method", "must be pp, fdd or both")
        _check(isinstance(self.seed, int) and self.seed >= 0, "seed", "must be an integer >= 0")
        if self.frame is not None:
            build_frame(self.frame)
        return self

    # -- derived objects -------------------------------------------------

    def frame_model(self) -> FrameModel:
        return portal_frame() if self.frame is None else build_frame(self.frame)

    def excitation_seed(self) -> int:
        return self.seed if self.excitation.seed is None else self.excitation.seed

    def pp_config(self) -> PPConfig:
        s, k = self.spectral, self.peaks
        peaks = PeakConfig(k.prominence, k.separation, k.contrast, "linear", _band(k.band))
        return PPConfig(s.segment_len, s.overlap, s.window, peaks, self.pp.ref)

    def fdd_config(self) -> FDDConfig:
        s, k = self.spectral, self.peaks
        peaks = PeakConfig(k.fdd_prominence, k.separation, k.contrast, "log", _band(k.band))
        return FDDConfig(s.segment_len, s.overlap, s.window, peaks, self.fdd.mac_threshold)

    def detection_config(self) -> DetectionConfig:
        s, p = self.spectral, self.placement
        return DetectionConfig(
            s.segment_len, s.overlap, s.window, p.tolerance_bins, p.tolerance_rel,
            p.prominence, p.window, p.tolerance_hz,
        )

    def output_dir(self) -> Path:
        import os

        return Path(self.output or os.environ.get(OUTPUT_ENV) or "frameoma_out")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _band(band):
    return None if band is None else (float(band[0]), float(band[1]))


def build_frame(spec: dict) -> FrameModel:
    """FrameModel from the ``frame`` section."""
    unknown = set(spec) - {"nodes", "elements", "supports", "rayleigh"}
    if unknown:
        k = sorted(unknown)[0]
        raise ConfigError(f"frame.{k}: unknown key", f"frame.{k}")
    try:
        nodes = [Node(int(i), float(x), float(y)) for i, x, y in spec["nodes"]]
        elements = [
            Element((int(a), int(b)), float(E), float(A), float(I), float(rho))
            for a, b, E, A, I, rho in spec["elements"]
        ]
        supports = [Support(int(s[0]), *(bool(v) for v in s[1:4])) for s in spec["supports"]]
        rayleigh = tuple(float(v) for v in spec.get("rayleigh", (0.0, 0.0)))
        return FrameModel(tuple(nodes), tuple(elements), tuple(supports), rayleigh)
    except KeyError as exc:
        key = f"frame.{exc.args[0]}"
        raise ConfigError(f"{key}: missing", key) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"frame: {exc}", "frame") from None


def _coerce(annotation: str, val, key: str):
    optional = annotation.startswith("Optional[")
    kind = annotation[9:-1] if optional else annotation
    if val is None:
        _check(optional, key, "must not be null")
        return None
    if kind == "float":
        _check(isinstance(val, (int, float)) and not isinstance(val, bool), key, "must be a number")
        return float(val)
    if kind == "int":
        ok = isinstance(val, int) and not isinstance(val, bool)
        ok = ok or (isinstance(val, float) and val.is_integer())
        _check(ok, key, "must be an integer")
        return int(val)
    if kind == "bool":
        _check(isinstance(val, bool), key, "must be true or false")
        return val
    if kind == "str":
        _check(isinstance(val, str), key, "must be a string")
        return val
    if kind == "tuple":
        _check(isinstance(val, list), key, "must be a list")
        return tuple(val)
    if kind == "dict":
        _check(isinstance(val, dict), key, "must be an object")
        return val
    return val


def _build(cls, data, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected an object", prefix or None)
    names = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, val in data.items():
        dotted = f"{prefix}.{key}" if prefix else key
        if key not in names:
            raise ConfigError(f"{dotted}: unknown key", dotted)
        factory = names[key].default_factory
        if factory is not dataclasses.MISSING and dataclasses.is_dataclass(factory):
            kwargs[key] = _build(factory, val, dotted)
        else:
            kwargs[key] = _coerce(names[key].type, val, dotted)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{prefix or 'config'}: {exc}", prefix or None) from None


def config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data, "").validate()


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data)
