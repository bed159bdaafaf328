"""Signal generators and constants shared by the tests.

The narrowband generator uses a bilinear-transformed second-order resonator
from scipy, so it is independent of the package's own time integrator.
"""
import numpy as np
from scipy import signal

from frameoma.frame_model import SystemMatrices
from frameoma.pp import PeakConfig

BAND = (1.0, 150.0)
# per-direction ANPSD rule: 0.3 decades (factor 2) within a 10 Hz window
DIRECTION_PEAKS = PeakConfig(min_prominence=0.3, min_contrast=0.0, scale="log", window=10.0,
                             band=BAND)


def resonance(n, fs, f0, xi, rng):
    """Acceleration-like response of a damped oscillator to white noise."""
    w0 = 2 * fs * np.tan(np.pi * f0 / fs)  # prewarped so the digital peak sits at f0
    b, a = signal.bilinear([1.0, 0.0, 0.0], [1.0, 2 * xi * w0, w0**2], fs)
    return signal.lfilter(b, a, rng.standard_normal(n))


def bin_of(freqs, f):
    return int(np.argmin(np.abs(np.asarray(freqs) - f)))


def bins_apart(freqs, f_a, f_b):
    return abs(bin_of(freqs, f_a) - bin_of(freqs, f_b))


def sdof(f=1.0, xi=0.0, m=1.0):
    w = 2 * np.pi * f
    k = m * w**2
    c = 2 * xi * w * m
    return SystemMatrices(("1:x",), np.array([[m]]), np.array([[k]]), np.array([[c]]))


def two_dof_chain(m=1.0, k=1.0):
    M = np.diag([m, m])
    K = np.array([[2 * k, -k], [-k, k]])
    return SystemMatrices(("1:x", "2:x"), M, K, np.zeros((2, 2)))


def damped_free(t, f, xi):
    """Displacement, velocity and acceleration of an SDOF released from x=1, v=0."""
    w = 2 * np.pi * f
    wd = w * np.sqrt(1 - xi**2)
    e = np.exp(-xi * w * t)
    x = e * (np.cos(wd * t) + xi * w / wd * np.sin(wd * t))
    v = -(w**2 / wd) * e * np.sin(wd * t)
    a = -2 * xi * w * v - w**2 * x
    return x, v, a
