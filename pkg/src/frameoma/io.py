"""CSV interchange for records, spectra, modal sets and result tables.

Every numeric value is written with 17 significant digits so that a
write/read round trip reproduces doubles bit for bit.
"""
from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .compare import ComparisonReport, MacMatrix
from .data import ModalSet, Mode, TimeSeriesSet, parse_channel
from .exceptions import TimeSeriesFormatError
from .fdd import SvdSpectra
from .spectral import SpectralDataset, anpsd

logger = logging.getLogger(__name__)

FMT = "%.17g"
STEP_RTOL = 1e-6


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, complex) or np.iscomplexobj(v):
        v = complex(v)
        if v.imag == 0:
            return FMT % v.real
        return repr(v)
    return FMT % v


def _write_rows(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


# -- time series ---------------------------------------------------------


def write_timeseries(ts: TimeSeriesSet, path) -> Path:
    """``time,<node>:<dir>,...`` with one sample per row."""
    path = Path(path)
    data = np.column_stack([ts.time, ts.samples])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(("time",) + ts.channels),
               comments="")
    return path


def _parse_rows(path: Path, ncol: int) -> np.ndarray:
    # slow path, only used to locate the offending line
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != ncol:
                raise TimeSeriesFormatError(
                    f"{path}:{line}: expected {ncol} fields, found {len(row)}", line
                )
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise TimeSeriesFormatError(f"{path}:{line}: non-numeric cell", line) from None
            if not all(np.isfinite(vals)):
                raise TimeSeriesFormatError(f"{path}:{line}: NaN or Inf cell", line)
            rows.append(vals)
    return np.array(rows, dtype=float).reshape(-1, ncol)


def load_timeseries(path) -> TimeSeriesSet:
    """Read a record written by :func:`write_timeseries`.

    The sample rate is inferred from the time column, whose step must be
    uniform to a relative 1e-6.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), None)
    if not header or header[0].strip() != "time" or len(header) < 2:
        raise TimeSeriesFormatError(f"{path}:1: header must be 'time,<node>:<dir>,...'", 1)
    channels = [h.strip() for h in header[1:]]
    for c in channels:
        try:
            parse_channel(c)
        except ValueError as exc:
            raise TimeSeriesFormatError(f"{path}:1: {exc}", 1) from None
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != len(header) or not np.all(np.isfinite(data)):
            raise ValueError
    except ValueError:
        data = _parse_rows(path, len(header))
    if data.shape[0] < 2:
        raise TimeSeriesFormatError(f"{path}: need at least two samples")

    t = data[:, 0]
    steps = np.diff(t)
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if not dt > 0:
        raise TimeSeriesFormatError(f"{path}: time column is not increasing")
    dev = np.abs(steps - dt) > STEP_RTOL * dt
    if dev.any():
        k = int(np.argmax(dev))
        raise TimeSeriesFormatError(
            f"{path}:{k + 3}: non-uniform time step ({steps[k]:.6g} vs {dt:.6g})", k + 3
        )
    fs = 1.0 / dt
    if abs(fs - round(fs)) < 1e-9 * fs:
        fs = float(round(fs))
    return TimeSeriesSet(fs, channels, data[:, 1:])


# -- modal sets ----------------------------------------------------------


def write_modes(modes: ModalSet, path) -> Path:
    """``mode,method,frequency,damping,<channel>...``; damping blank when absent."""
    rows = [
        [k + 1, m.method, _num(m.frequency), _num(m.damping_ratio)]
        + [_num(v) for v in m.shape]
        for k, m in enumerate(modes)
    ]
    return _write_rows(path, ["mode", "method", "frequency", "damping", *modes.channels], rows)


def _value(cell: str):
    try:
        return float(cell)
    except ValueError:
        return complex(cell)


def load_modes(path) -> ModalSet:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:4] != ["mode", "method", "frequency", "damping"]:
            raise TimeSeriesFormatError(f"{path}:1: not a modes file", 1)
        channels = tuple(header[4:])
        modes = []
        for row in reader:
            line = reader.line_num
            if len(row) != len(header):
                raise TimeSeriesFormatError(f"{path}:{line}: wrong field count", line)
            try:
                shape = np.array([_value(c) for c in row[4:]])
                damping = float(row[3]) if row[3].strip() else None
                modes.append(Mode(float(row[2]), shape, damping, row[1]))
            except ValueError as exc:
                raise TimeSeriesFormatError(f"{path}:{line}: {exc}", line) from None
    return ModalSet(tuple(modes), channels)


# -- spectra -------------------------------------------------------------


def write_spectral(spec: SpectralDataset, path) -> Path:
    """Upper triangle of the CPSD: ``freq,G_<a>_<b>_re,G_<a>_<b>_im,...``."""
    iu, ju = np.triu_indices(spec.n_channels)
    ch = spec.channels
    header = ["freq"]
    for i, j in zip(iu, ju):
        header += [f"G_{ch[i]}_{ch[j]}_re", f"G_{ch[i]}_{ch[j]}_im"]
    vals = spec.cpsd[:, iu, ju]
    data = np.empty((len(spec.freqs), 1 + 2 * len(iu)))
    data[:, 0] = spec.freqs
    data[:, 1::2] = vals.real
    data[:, 2::2] = vals.imag
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(header), comments="")
    return Path(path)


def write_curve(freqs, values, path, names: Sequence[str] = ("value",)) -> Path:
    data = np.column_stack([np.asarray(freqs), np.asarray(values).reshape(len(freqs), -1)])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(["freq", *names]),
               comments="")
    return Path(path)


def write_anpsd(spec: SpectralDataset, path, channel_subset=None) -> Path:
    return write_curve(spec.freqs, anpsd(spec, channel_subset), path)


def write_svspectra(svd: SvdSpectra, path) -> Path:
    m = svd.singular_values.shape[1]
    return write_curve(svd.freqs, svd.singular_values, path, [f"s{k + 1}" for k in range(m)])


def read_curve(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


# -- comparison tables ---------------------------------------------------


def write_mac(mm: MacMatrix, path) -> Path:
    rows = [[r] + [_num(v) for v in row] for r, row in zip(mm.rows, mm.values)]
    return _write_rows(path, ["", *mm.cols], rows)


def read_mac(path) -> MacMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    cols = tuple(rows[0][1:])
    return MacMatrix(
        tuple(r[0] for r in rows[1:]), cols, np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    )


def write_report(rep: ComparisonReport, path) -> Path:
    """One row per method and paired mode, shape components across the columns."""
    ma, mb = rep.methods
    macs = {i: v for i, _, v in rep.pairing.pairs}
    rows = []
    for i, fa, fb, gap in rep.frequency_table:
        _, sa, sb = rep.shape_table[i]
        rows.append([i + 1, ma, _num(fa), "", "", *(_num(v) for v in sa)])
        rows.append([i + 1, mb, _num(fb), _num(gap), _num(macs[i]), *(_num(v) for v in sb)])
    header = ["mode", "method", "frequency", "gap_percent", "mac", *rep.channels]
    return _write_rows(path, header, rows)


# -- placement -----------------------------------------------------------


def write_detectability(table, path) -> Path:
    header = ["channel", *(_num(f) for f in table.modes)]
    rows = [
        [ch, *("" if np.isnan(v) else _num(v) for v in row)]
        for ch, row in zip(table.channels, table.cells)
    ]
    return _write_rows(path, header, rows)


def read_detectability(path):
    from .placement import DetectabilityTable

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    modes = np.array([float(v) for v in rows[0][1:]])
    cells = np.array([[float(v) if v else np.nan for v in r[1:]] for r in rows[1:]])
    return DetectabilityTable(tuple(r[0] for r in rows[1:]), modes, cells.reshape(-1, len(modes)))


def write_minimal_sets(results: dict, path) -> Path:
    """``results`` maps a group name ("all", "x", ...) to SensorSets or an error string."""
    lines = []
    for group, res in results.items():
        if isinstance(res, str):
            lines.append(f"[{group}] infeasible: {res}")
            continue
        tag = "exhaustive" if res.optimal else "greedy, may not be minimal"
        lines.append(f"[{group}] size {res.size} ({tag}), {len(res.sets)} set(s)")
        lines += ["  " + " ".join(s) for s in res.sets]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


# -- plot data -----------------------------------------------------------


def emit_plot_data(artifact, path, svg: bool = False, geometry=None) -> list[Path]:
    """Write the plotting data of ``artifact`` as CSV, optionally an SVG beside it.

    ``artifact`` is a SpectralDataset (freq, ANPSD, per-channel PSD),
    SvdSpectra (singular value spectra), MacMatrix (grid) or ModalSet
    (shape table).  ``geometry`` is a FrameModel used to draw deformed
    shapes of a ModalSet.
    """
    path = Path(path)
    if not path.parent.exists():
        raise OSError(f"cannot write {path}: directory does not exist")
    if isinstance(artifact, SpectralDataset):
        cols = np.column_stack([anpsd(artifact), artifact.auto_spectra])
        out = write_curve(artifact.freqs, cols, path, ["anpsd", *artifact.channels])
    elif isinstance(artifact, SvdSpectra):
        out = write_svspectra(artifact, path)
    elif isinstance(artifact, MacMatrix):
        out = write_mac(artifact, path)
    elif isinstance(artifact, ModalSet):
        out = write_modes(artifact, path)
    else:
        raise TypeError(f"no plot data for {type(artifact).__name__}")
    written = [out]
    if svg:
        from . import plots

        svg_path = plots.render(artifact, path.with_suffix(".svg"), geometry)
        if svg_path is not None:
            written.append(svg_path)
    return written
