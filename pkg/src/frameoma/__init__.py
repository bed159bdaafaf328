"""Output-only modal identification of planar frames.

Peak-Picking and Frequency Domain Decomposition identifiers, a finite-element
frame used as ground truth, modal comparison tools and single-sensor
detectability analysis.
"""
from .compare import build_report, mac, mac_matrix, pair_modes
from .data import ModalSet, Mode, TimeSeriesSet
from .fdd import FDDConfig, identify_fdd, svd_lines
from .frame_model import (
    ExcitationSpec,
    FrameModel,
    assemble,
    portal_frame,
    simulate_response,
    solve_modes,
)
from .pp import PeakConfig, PPConfig, identify_pp, pick_peaks
from .spectral import anpsd, npsd, welch_cpsd

__version__ = "0.1.0"
