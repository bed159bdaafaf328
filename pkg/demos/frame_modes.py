"""
Finite-element modes of the portal frame
========================================

The 13-node steel frame (two HEB200 columns, an IPE300 beam, each member cut
into four elements) is assembled and its first modes are solved.  These are
the reference values every identification is judged against.
"""
import numpy as np

from frameoma.frame_model import (
    NODE_ORDER, assemble, mirror_label, portal_frame, solve_modes,
)

model = portal_frame()
sys_ = assemble(model)
print(f"{len(model.nodes)} nodes, {len(model.elements)} elements, {sys_.n_dof} free DOFs")

# first six modes; the sixth sits above the 150 Hz identification band
modes = solve_modes(sys_, 6)
for k, m in enumerate(modes, 1):
    print(f"mode {k}: {m.frequency:8.3f} Hz  damping {m.damping_ratio:.4f}")

# horizontal shape read along the frame: left column, beam, right column
# (the clamped feet 1 and 10 carry no DOFs)
order = [n for n in NODE_ORDER if f"{n}:x" in modes.channels]
x = modes.restrict([f"{n}:x" for n in order])
print("\nx components, node order", " ".join(map(str, order)))
print(np.array2string(x.shapes[:5], precision=3, suppress_small=True, max_line_width=120))

# the frame is mirror symmetric, so every mode is either symmetric
# (reflected x flips sign, y is kept) or antisymmetric (the opposite)
labels = sys_.translational
flip = np.array([-1.0 if c.endswith(":x") else 1.0 for c in labels])
idx = [labels.index(mirror_label(c)) for c in labels]
for k, m in enumerate(modes.restrict(labels), 1):
    reflected = flip * m.shape[idx]
    kind = "symmetric" if np.allclose(reflected, m.shape, atol=1e-9) else "antisymmetric"
    print(f"mode {k}: {kind}")
