"""
Output-only identification of the frame
=======================================

A white-noise load drives every free DOF of the frame; only the
accelerations are kept, with 10 % sensor noise.  Peak-Picking and Frequency
Domain Decomposition then recover the modes from the record alone, and the
result is scored against the finite-element solution.

Usage: ``python demos/identify_ambient.py [duration_s] [output_dir]``
"""
import sys
from pathlib import Path

import numpy as np

from frameoma import io
from frameoma.compare import build_report, mac_matrix
from frameoma.config import RunConfig
from frameoma.fdd import identify_fdd_spectrum, svd_lines
from frameoma.frame_model import (
    ExcitationSpec, add_measurement_noise, assemble, simulate_response, solve_modes,
)
from frameoma.pp import identify_pp_spectrum
from frameoma.spectral import welch_cpsd

duration = float(sys.argv[1]) if len(sys.argv) > 1 else 512.0
out = Path(sys.argv[2]) if len(sys.argv) > 2 else None

cfg = RunConfig()
sys_ = assemble(cfg.frame_model())

# ambient record: 1024 Hz, translational channels only
raw = simulate_response(sys_, ExcitationSpec(seed=0), duration=duration)
ts = add_measurement_noise(raw.select(directions=("x", "y")), 0.1, seed=1)
print(f"{ts.n_samples} samples x {len(ts.channels)} channels at {ts.sample_rate:g} Hz")

fe = solve_modes(sys_, 5).restrict(ts.channels)
spec = welch_cpsd(ts)
print(f"CPSD: {spec.segment_count} averages, df = {spec.df:g} Hz")

# PP reads peaks off the averaged normalized PSD, FDD off the first singular value
pp = identify_pp_spectrum(spec, cfg.pp_config())
fdd = identify_fdd_spectrum(spec, cfg.fdd_config())

print("\n   FE [Hz]    PP [Hz]   FDD [Hz]")
for k in range(max(len(fe), len(pp), len(fdd))):
    row = [s.frequencies[k] if k < len(s) else np.nan for s in (fe, pp, fdd)]
    print("  ".join(f"{v:9.3f}" for v in row))

for est in (pp, fdd):
    rep = build_report(fe, est)
    gaps = [r[3] for r in rep.frequency_table]
    print(f"\n{est.method}: {len(rep.pairing.pairs)} pairs, worst gap {max(gaps):.2f} %")
    print(np.array2string(mac_matrix(fe, est).values, precision=3, suppress_small=True))

# complexity of the FDD vectors: close to zero for proportional damping
print("\nFDD complexity", [round(m.meta["complexity"], 4) for m in fdd])

if out is not None:
    out.mkdir(parents=True, exist_ok=True)
    io.emit_plot_data(spec, out / "psd.csv", svg=True)
    io.emit_plot_data(svd_lines(spec), out / "svspectra.csv", svg=True)
    io.emit_plot_data(mac_matrix(fe, fdd), out / "mac_fem_fdd.csv", svg=True)
    print(f"plot data written to {out}")
