"""Optional static SVG rendering of plot data (needs matplotlib)."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .compare import MacMatrix
from .data import ModalSet, parse_channel
from .fdd import SvdSpectra
from .spectral import SpectralDataset, anpsd

logger = logging.getLogger(__name__)


def _pyplot():
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        logger.warning("matplotlib is not installed; skipping SVG output")
        return None
    # reproducible SVG bytes
    matplotlib.rcParams["svg.hashsalt"] = "frameoma"
    return plt


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    fig.clf()
    return path


def _frame_lines(geometry):
    xy = {n.id: (n.x, n.y) for n in geometry.nodes}
    return xy, [el.nodes for el in geometry.elements]


def render(artifact, path, geometry=None):
    """Draw ``artifact`` to ``path``; returns the path or None without matplotlib."""
    plt = _pyplot()
    if plt is None:
        return None
    path = Path(path)
    fig = plt.figure(figsize=(7, 4))
    if isinstance(artifact, SpectralDataset):
        ax = fig.add_subplot()
        ax.semilogy(artifact.freqs, anpsd(artifact), lw=0.8)
        ax.set(xlabel="Frequency [Hz]", ylabel="ANPSD")
    elif isinstance(artifact, SvdSpectra):
        ax = fig.add_subplot()
        for k in range(min(3, artifact.singular_values.shape[1])):
            ax.semilogy(artifact.freqs, artifact.singular_values[:, k], lw=0.8, label=f"s{k + 1}")
        ax.set(xlabel="Frequency [Hz]", ylabel="Singular value")
        ax.legend()
    elif isinstance(artifact, MacMatrix):
        ax = fig.add_subplot(projection="3d")
        n, m = artifact.values.shape
        xx, yy = np.meshgrid(np.arange(m), np.arange(n))
        ax.bar3d(xx.ravel(), yy.ravel(), 0, 0.6, 0.6, artifact.values.ravel(), shade=True)
        ax.set(xticks=np.arange(m) + 0.3, yticks=np.arange(n) + 0.3, zlim=(0, 1))
        ax.set_xticklabels([c.split(" (")[0] for c in artifact.cols], fontsize=7)
        ax.set_yticklabels([r.split(" (")[0] for r in artifact.rows], fontsize=7)
    elif isinstance(artifact, ModalSet):
        if geometry is None:
            plt.close(fig)
            return None
        xy, lines = _frame_lines(geometry)
        span = max(np.ptp([p[0] for p in xy.values()]), np.ptp([p[1] for p in xy.values()]))
        n = len(artifact)
        fig.set_size_inches(2.2 * n, 2.4)
        for k, mode in enumerate(artifact):
            ax = fig.add_subplot(1, n, k + 1)
            disp = {nid: [0.0, 0.0] for nid in xy}
            for ch, v in zip(artifact.channels, np.real(mode.shape)):
                node, d = parse_channel(ch)
                if d in ("x", "y") and node in disp:
                    disp[node]["xy".index(d)] = v
            for a, b in lines:
                ax.plot(*zip(xy[a], xy[b]), color="0.7", lw=0.8)
                pa = np.add(xy[a], 0.1 * span * np.array(disp[a]))
                pb = np.add(xy[b], 0.1 * span * np.array(disp[b]))
                ax.plot(*zip(pa, pb), color="C0", lw=1.2)
            ax.set_title(f"{mode.frequency:.2f} Hz", fontsize=8)
            ax.set_aspect("equal")
            ax.axis("off")
        fig.tight_layout()
    else:
        plt.close(fig)
        raise TypeError(f"cannot render {type(artifact).__name__}")
    out = _save(fig, path)
    plt.close(fig)
    return out
