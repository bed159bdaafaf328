"""Planar Euler-Bernoulli frame: assembly, modal analysis and ambient response.

The frame acts as the ground-truth generator for the identification
methods.  Each node carries three DOFs ``(u_x, u_y, theta_z)``; elements use
cubic Hermitian bending, linear axial interpolation and consistent mass.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la

from .data import DIRECTIONS, ModalSet, TimeSeriesSet, channel_label, normalize_shape
from .exceptions import (
    ConvergenceError,
    InstabilityError,
    ModelReferenceError,
    SingularStructureError,
)

logger = logging.getLogger(__name__)

# walk order of the default frame: left column bottom->top, beam
# left->right, right column top->bottom
NODE_ORDER = (1, 3, 4, 5, 2, 7, 8, 9, 6, 11, 12, 13, 10)

# (area [m^2], second moment of area [m^4]) of standard steel profiles
HEB200 = (78.1e-4, 5696e-8)
IPE300 = (53.8e-4, 8356e-8)


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Element:
    nodes: tuple[int, int]
    E: float  # [Pa]
    A: float  # [m^2]
    I: float  # [m^4]
    rho: float  # [kg/m^3]


@dataclass(frozen=True)
class Support:
    node: int
    ux: bool = True
    uy: bool = True
    rz: bool = True

    @property
    def flags(self):
        return (self.ux, self.uy, self.rz)


@dataclass(frozen=True)
class FrameModel:
    nodes: tuple[Node, ...]
    elements: tuple[Element, ...]
    supports: tuple[Support, ...]
    rayleigh: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        for name in ("nodes", "elements", "supports"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "rayleigh", tuple(float(v) for v in self.rayleigh))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ModelReferenceError("duplicate node ids")
        known = set(ids)
        for k, el in enumerate(self.elements):
            a, b = el.nodes
            if a not in known or b not in known:
                raise ModelReferenceError(f"element {k} references unknown node in {el.nodes}")
            if a == b:
                raise ModelReferenceError(f"element {k} connects node {a} to itself")
            if min(el.E, el.A, el.I, el.rho) <= 0:
                raise ValueError(f"element {k} has a non-positive section/material value")
        for s in self.supports:
            if s.node not in known:
                raise ModelReferenceError(f"support references unknown node {s.node}")
        if not any(any(s.flags) for s in self.supports):
            raise SingularStructureError("no support constrains rigid-body motion")
        if min(self.rayleigh) < 0:
            raise ValueError("Rayleigh coefficients must be non-negative")

    def node(self, node_id: int) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise ModelReferenceError(f"unknown node {node_id}")

    def with_rayleigh(self, alpha: float, beta: float) -> "FrameModel":
        return replace(self, rayleigh=(alpha, beta))


@dataclass(frozen=True)
class SystemMatrices:
    """Mass, stiffness and damping over the free DOFs."""

    labels: tuple[str, ...]
    M: np.ndarray
    K: np.ndarray
    C: np.ndarray
    rayleigh: tuple[float, float] = (0.0, 0.0)
    dof_map: dict = field(default_factory=dict, compare=False)

    @property
    def n_dof(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @property
    def translational(self) -> tuple[str, ...]:
        return tuple(l for l in self.labels if not l.endswith(":rz"))


@dataclass(frozen=True)
class ExcitationSpec:
    """Zero-mean Gaussian white-noise forces.

    ``excited_dofs=None`` excites every translational free DOF.
    """

    intensity: float = 1.0
    excited_dofs: Optional[tuple[str, ...]] = None
    seed: int = 0

    def __post_init__(self):
        if not self.intensity > 0:
            raise ValueError("excitation intensity must be positive")
        if self.excited_dofs is not None:
            object.__setattr__(self, "excited_dofs", tuple(self.excited_dofs))
            if not self.excited_dofs:
                raise ValueError("excited_dofs must be non-empty")


def element_matrices(el: Element, xi: Node, xj: Node):
    """Global 6x6 stiffness and consistent mass of one frame element."""
    dx, dy = xj.x - xi.x, xj.y - xi.y
    L = np.hypot(dx, dy)
    if L == 0:
        raise ValueError("zero-length element")
    c, s = dx / L, dy / L
    EA, EI = el.E * el.A, el.E * el.I

    k = np.zeros((6, 6))
    k[np.ix_([0, 3], [0, 3])] = EA / L * np.array([[1, -1], [-1, 1]])
    b = [1, 2, 4, 5]
    k[np.ix_(b, b)] = EI / L**3 * np.array(
        [
            [12, 6 * L, -12, 6 * L],
            [6 * L, 4 * L**2, -6 * L, 2 * L**2],
            [-12, -6 * L, 12, -6 * L],
            [6 * L, 2 * L**2, -6 * L, 4 * L**2],
        ]
    )

    mL = el.rho * el.A * L
    m = np.zeros((6, 6))
    m[np.ix_([0, 3], [0, 3])] = mL / 6 * np.array([[2, 1], [1, 2]])
    m[np.ix_(b, b)] = mL / 420 * np.array(
        [
            [156, 22 * L, 54, -13 * L],
            [22 * L, 4 * L**2, 13 * L, -3 * L**2],
            [54, 13 * L, 156, -22 * L],
            [-13 * L, -3 * L**2, -22 * L, 4 * L**2],
        ]
    )

    r = np.array([[c, s, 0], [-s, c, 0], [0, 0, 1]])
    T = la.block_diag(r, r)
    return T.T @ k @ T, T.T @ m @ T


def assemble(model: FrameModel) -> SystemMatrices:
    """Assemble M, K and Rayleigh C restricted to the unconstrained DOFs."""
    node_ids = [n.id for n in model.nodes]
    pos = {nid: i for i, nid in enumerate(node_ids)}
    nfull = 3 * len(node_ids)
    K = np.zeros((nfull, nfull))
    M = np.zeros((nfull, nfull))
    for el in model.elements:
        a, b = el.nodes
        ke, me = element_matrices(el, model.node(a), model.node(b))
        idx = np.r_[3 * pos[a] : 3 * pos[a] + 3, 3 * pos[b] : 3 * pos[b] + 3]
        K[np.ix_(idx, idx)] += ke
        M[np.ix_(idx, idx)] += me

    fixed = set()
    for s in model.supports:
        for d, flag in enumerate(s.flags):
            if flag:
                fixed.add(3 * pos[s.node] + d)
    free = [i for i in range(nfull) if i not in fixed]
    labels = tuple(channel_label(node_ids[i // 3], DIRECTIONS[i % 3]) for i in free)
    dof_map = {(node_ids[i // 3], DIRECTIONS[i % 3]): j for j, i in enumerate(free)}

    K = K[np.ix_(free, free)]
    M = M[np.ix_(free, free)]
    # exact symmetry, independent of summation order
    K = 0.5 * (K + K.T)
    M = 0.5 * (M + M.T)
    for name, mat in (("stiffness", K), ("mass", M)):
        try:
            np.linalg.cholesky(mat)
        except np.linalg.LinAlgError:
            raise SingularStructureError(
                f"{name} matrix on free DOFs is not positive definite (mechanism?)"
            ) from None
    alpha, beta = model.rayleigh
    C = alpha * M + beta * K
    return SystemMatrices(labels, M, K, C, (alpha, beta), dof_map)


def _modal_eig(sys: SystemMatrices, n_modes: int):
    if not 1 <= n_modes <= sys.n_dof:
        raise ValueError(f"n_modes must be in [1, {sys.n_dof}]")
    try:
        w2, phi = la.eigh(sys.K, sys.M, subset_by_index=[0, n_modes - 1])
    except la.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}", mode_index=0) from exc
    for k, val in enumerate(w2):
        if not np.isfinite(val) or val <= 0:
            raise ConvergenceError(f"non-positive eigenvalue for mode {k}", mode_index=k)
    return w2, phi


def solve_modes(sys: SystemMatrices, n_modes: int) -> ModalSet:
    """Lowest ``n_modes`` solutions of ``K phi = w^2 M phi`` as a FEM ModalSet.

    Damping ratios follow from the Rayleigh coefficients,
    ``xi = alpha / (2 w) + beta w / 2``.
    """
    w2, phi = _modal_eig(sys, n_modes)
    w = np.sqrt(w2)
    alpha, beta = sys.rayleigh
    xi = alpha / (2 * w) + beta * w / 2
    # deterministic sign: the largest component is positive (normalize_shape)
    return ModalSet.from_arrays(
        w / (2 * np.pi),
        phi.T,
        sys.labels,
        "FEM",
        damping=xi,
        meta=[{"omega2": float(v)} for v in w2],
    )


def rayleigh_coefficients(f1: float, f2: float, xi1: float, xi2: float):
    """Solve for ``(alpha, beta)`` giving damping ``xi1`` at ``f1`` and ``xi2`` at ``f2``."""
    w1, w2 = 2 * np.pi * f1, 2 * np.pi * f2
    A = np.array([[1 / (2 * w1), w1 / 2], [1 / (2 * w2), w2 / 2]])
    alpha, beta = np.linalg.solve(A, [xi1, xi2])
    return float(alpha), float(beta)


def newmark_operators(M, C, K, dt: float, substeps: int = 1, gamma=0.5, beta=0.25):
    """Affine one-step map of linear Newmark over ``substeps`` internal steps.

    With state ``s = (u, v, a)`` and the load varying linearly across the
    output step, ``s[n+1] = Phi @ s[n] + G0 @ f[n] + G1 @ f[n+1]``.  Composing
    the substeps into one map keeps the per-sample cost independent of
    ``substeps``.
    """
    n = M.shape[0]
    h = dt / substeps
    a0 = 1 / (beta * h**2)
    a1 = gamma / (beta * h)
    a2 = 1 / (beta * h)
    a3 = 1 / (2 * beta) - 1
    a4 = gamma / beta - 1
    a5 = h * (gamma / (2 * beta) - 1)
    Keff = K + a0 * M + a1 * C
    Kinv = la.cho_solve(la.cho_factor(Keff), np.eye(n))
    I, Z = np.eye(n), np.zeros((n, n))
    Su, Sv, Sa = np.hstack([I, Z, Z]), np.hstack([Z, I, Z]), np.hstack([Z, Z, I])

    Pu = Kinv @ np.hstack([a0 * M + a1 * C, a2 * M + a4 * C, a3 * M + a5 * C])
    Qu = Kinv
    Pa = a0 * (Pu - Su) - a2 * Sv - a3 * Sa
    Qa = a0 * Qu
    Pv = Sv + h * (1 - gamma) * Sa + h * gamma * Pa
    Qv = h * gamma * Qa
    P = np.vstack([Pu, Pv, Pa])
    Q = np.vstack([Qu, Qv, Qa])

    Phi = np.eye(3 * n)
    G0 = np.zeros((3 * n, n))
    G1 = np.zeros((3 * n, n))
    for j in range(1, substeps + 1):
        t = j / substeps
        Phi = P @ Phi
        G0 = P @ G0 + (1 - t) * Q
        G1 = P @ G1 + t * Q
    return Phi, G0, G1


def newmark(
    M,
    C,
    K,
    forces,
    dt: float,
    u0=None,
    v0=None,
    substeps: int = 1,
    gamma: float = 0.5,
    beta: float = 0.25,
    chunk: int = 8192,
):
    """Linear Newmark integration from given initial conditions.

    ``forces`` is an (n_steps, n_dof) array sampled on the output grid, with
    ``forces[0]`` acting at t = 0.  Returns displacement, velocity and
    acceleration histories of the same shape.
    """
    forces = np.asarray(forces, dtype=float)
    nt, n = forces.shape
    u = np.zeros(n) if u0 is None else np.asarray(u0, float)
    v = np.zeros(n) if v0 is None else np.asarray(v0, float)
    a = np.linalg.solve(M, forces[0] - C @ v - K @ u)
    Phi, G0, G1 = newmark_operators(M, C, K, dt, substeps, gamma, beta)

    out = np.empty((nt, 3 * n))
    state = np.concatenate([u, v, a])
    out[0] = state
    with np.errstate(over="ignore", invalid="ignore"):
        for c0 in range(1, nt, chunk):
            c1 = min(c0 + chunk, nt)
            load = forces[c0 - 1 : c1 - 1] @ G0.T + forces[c0:c1] @ G1.T
            for i in range(c0, c1):
                state = Phi @ state + load[i - c0]
                out[i] = state
    bad = ~np.all(np.isfinite(out), axis=1)
    if bad.any():
        step = int(np.argmax(bad))
        raise InstabilityError(f"non-finite response at step {step}", step=step)
    return out[:, :n], out[:, n : 2 * n], out[:, 2 * n :]


def simulate_response(
    sys: SystemMatrices,
    exc: ExcitationSpec,
    duration: float = 512.0,
    dt: float = 1 / 1024,
    substeps: int = 8,
    u0=None,
    v0=None,
    zero_input: bool = False,
) -> TimeSeriesSet:
    """Acceleration response to white-noise forces, average-acceleration Newmark.

    The load is sampled every ``dt`` and interpolated linearly over
    ``substeps`` internal Newmark steps; without substeps the scheme's period
    elongation, about ``(w dt)^2 / 12``, shifts the upper modes by whole
    spectral bins at the default rate.  ``u0``/``v0`` set initial conditions
    (free-vibration checks); ``zero_input`` suppresses the random forces.
    """
    if not dt > 0 or not duration > 0:
        raise ValueError("dt and duration must be positive")
    nt = int(round(duration / dt))
    n = sys.n_dof
    forces = np.zeros((nt, n))
    if not zero_input:
        dofs = exc.excited_dofs if exc.excited_dofs is not None else sys.translational
        missing = [d for d in dofs if d not in sys.labels]
        if missing:
            raise ValueError(f"excited DOFs not in the free-DOF set: {missing}")
        idx = [sys.index(d) for d in dofs]
        rng = np.random.default_rng(exc.seed)
        forces[:, idx] = exc.intensity * rng.standard_normal((nt, len(idx)))
    logger.debug("Newmark integration: %d steps, %d DOFs", nt, n)
    _, _, acc = newmark(sys.M, sys.C, sys.K, forces, dt, u0=u0, v0=v0, substeps=substeps)
    return TimeSeriesSet(1.0 / dt, sys.labels, acc)


def add_measurement_noise(ts: TimeSeriesSet, ratio: float, seed: int = 0) -> TimeSeriesSet:
    """Add sensor noise of standard deviation ``ratio`` times the record RMS.

    The noise level is common to every channel (same sensor type everywhere),
    so channels carrying little motion end up noise-dominated.
    """
    if ratio <= 0:
        return ts
    rms = np.sqrt(np.mean(ts.samples**2))
    rng = np.random.default_rng(seed)
    noise = ratio * rms * rng.standard_normal(ts.samples.shape)
    return TimeSeriesSet(ts.sample_rate, ts.channels, ts.samples + noise)


def portal_frame(
    height: float = 3.5,
    span: float = 8.0,
    E: float = 2.1e11,
    rho: float = 7850.0,
    column: tuple[float, float] = HEB200,
    beam: tuple[float, float] = IPE300,
    damping: tuple[float, float] = (0.015, 0.015),
    damped_modes: tuple[int, int] = (1, 5),
) -> FrameModel:
    """13-node, 12-element fixed-base portal frame.

    Node numbering: left column 1-3-4-5-2 (bottom to top), beam 2-7-8-9-6,
    right column 6-11-12-13-10 (top to bottom).  ``column``/``beam`` are ``(A, I)``.
    Rayleigh coefficients are chosen to give ``damping`` on the two
    ``damped_modes`` (1-based).
    """
    ys = np.linspace(0.0, height, 5)
    xs = np.linspace(0.0, span, 5)
    left = [1, 3, 4, 5, 2]
    top = [2, 7, 8, 9, 6]
    right = [10, 13, 12, 11, 6]
    coords = {}
    for nid, y in zip(left, ys):
        coords[nid] = (0.0, y)
    for nid, x in zip(top, xs):
        coords[nid] = (x, height)
    for nid, y in zip(right, ys):
        coords[nid] = (span, y)
    nodes = tuple(Node(nid, *coords[nid]) for nid in NODE_ORDER)

    elements = []
    for chain, (A, I) in ((left, column), (top, beam), (right[::-1], column)):
        for a, b in zip(chain[:-1], chain[1:]):
            elements.append(Element((a, b), E, A, I, rho))
    supports = (Support(1), Support(10))
    model = FrameModel(nodes, tuple(elements), supports)

    i, j = damped_modes
    fe = solve_modes(assemble(model), max(i, j))
    alpha, beta = rayleigh_coefficients(
        fe.frequencies[i - 1], fe.frequencies[j - 1], damping[0], damping[1]
    )
    return model.with_rayleigh(alpha, beta)


def mirror_label(label: str) -> str:
    """Channel label of the mirror-image node in the default frame."""
    order = NODE_ORDER
    node, _, direction = label.partition(":")
    k = order.index(int(node))
    return f"{order[len(order) - 1 - k]}:{direction}"
