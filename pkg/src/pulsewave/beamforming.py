"""Adaptive beamforming baseline: correlation matrix, spatial spectrum
and minimum-variance distortionless-response (MVDR) weights."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .errors import NumericalError, ParameterError
from .modelsep import UnmixingMatrix
from .scenario import SlowTimeSeries

DEFAULT_LOADING = 1e-6
DEFAULT_ANGLE_GRID = np.deg2rad(np.arange(-60.0, 60.0 + 1e-9, 0.1))


@dataclass
class CorrelationMatrix:
    """Hermitian positive semidefinite sample correlation matrix."""

    r: np.ndarray
    sample_count: int

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=complex)
        if self.r.ndim != 2 or self.r.shape[0] != self.r.shape[1]:
            raise ParameterError("correlation matrix must be square")
        scale = max(float(np.abs(self.r).max()), 1.0)
        if np.abs(self.r - self.r.conj().T).max() > 1e-12 * scale:
            raise ParameterError("correlation matrix is not Hermitian")
        eigvals = np.linalg.eigvalsh(self.r)
        if eigvals[0] < -1e-10 * max(eigvals[-1], 0.0):
            raise ParameterError("correlation matrix is not positive semidefinite")

    @property
    def n_channels(self) -> int:
        return self.r.shape[0]


@dataclass
class ModeVector:
    """Array response toward one direction."""

    a: np.ndarray
    angle: float | None = None  # radians, when derived from a direction

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=complex).ravel()
        if np.linalg.norm(self.a) == 0:
            raise ParameterError("mode vector must have nonzero norm")


@dataclass
class CaponSpectrum:
    """Spatial power spectrum over an angle grid."""

    angles: np.ndarray  # radians
    power: np.ndarray
    peaks: list[tuple[float, float]] = field(default_factory=list)  # (angle, power)


def steering_vector(angle: float, n_elements: int, spacing_wavelengths: float = 0.5) -> np.ndarray:
    """Unit-modulus ULA steering vector for a direction in radians.

    Element phases are centered on the array midpoint; for half-wavelength
    spacing the adjacent-element phase difference is pi*sin(angle).
    """
    idx = np.arange(n_elements) - (n_elements - 1) / 2.0
    return np.exp(2j * np.pi * spacing_wavelengths * idx * np.sin(angle))


def sample_correlation(x: SlowTimeSeries) -> CorrelationMatrix:
    """Time-averaged outer product R = (1/T) sum x(t) x(t)^H, symmetrized."""
    samples = x.samples
    if x.n_samples < x.n_channels:
        warnings.warn(
            "fewer samples than channels: correlation matrix is rank-deficient",
            stacklevel=2,
        )
    r = samples @ samples.conj().T / x.n_samples
    r = 0.5 * (r + r.conj().T)
    return CorrelationMatrix(r, sample_count=x.n_samples)


def _loaded(r: CorrelationMatrix, loading: float) -> np.ndarray:
    m = r.n_channels
    return r.r + loading * np.trace(r.r).real / m * np.eye(m)


def capon_spectrum(
    r: CorrelationMatrix,
    angles: np.ndarray | None = None,
    spacing_wavelengths: float = 0.5,
    loading: float = DEFAULT_LOADING,
) -> CaponSpectrum:
    """Capon spatial spectrum P(theta) = 1 / (a^H R^-1 a) on an angle grid.

    Peaks (interior local maxima) are returned sorted by power, largest
    first, for use as direction estimates.
    """
    if angles is None:
        angles = DEFAULT_ANGLE_GRID
    angles = np.asarray(angles, dtype=float)
    m = r.n_channels
    steer = np.column_stack(
        [steering_vector(a, m, spacing_wavelengths) for a in angles]
    )
    try:
        solved = np.linalg.solve(_loaded(r, loading), steer)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("correlation matrix is singular after loading") from exc
    denom = np.einsum("ij,ij->j", steer.conj(), solved).real
    if np.any(denom <= 0):
        raise NumericalError("Capon denominator is not positive")
    power = 1.0 / denom
    idx, _ = find_peaks(power)
    peaks = sorted(
        ((float(angles[i]), float(power[i])) for i in idx), key=lambda t: -t[1]
    )
    return CaponSpectrum(angles=angles, power=power, peaks=peaks)


def mvdr_weight(
    r: CorrelationMatrix, a, loading: float = DEFAULT_LOADING
) -> np.ndarray:
    """MVDR weight w = R^-1 a / (a^H R^-1 a).

    Minimizes output power subject to the distortionless constraint
    w^H a = 1. The matrix is diagonally loaded by loading*trace(R)/M
    before inversion.
    """
    vec = a.a if isinstance(a, ModeVector) else np.asarray(a, dtype=complex).ravel()
    if np.linalg.norm(vec) == 0:
        raise ParameterError("mode vector must have nonzero norm")
    if vec.size != r.n_channels:
        raise ParameterError("mode vector length does not match R")
    try:
        y = np.linalg.solve(_loaded(r, loading), vec)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("correlation matrix is singular after loading") from exc
    return y / (vec.conj() @ y)


def mvdr_separate(
    x: SlowTimeSeries, mode_vectors, loading: float = DEFAULT_LOADING
) -> tuple[UnmixingMatrix, SlowTimeSeries]:
    """Stack per-target MVDR weights into an unmixing matrix and apply it.

    Row j of the result is w_j^H, so s_hat = W x estimates one echo per
    mode vector.
    """
    if len(mode_vectors) == 0:
        raise ParameterError("need at least one mode vector")
    if len(mode_vectors) > x.n_channels:
        raise ParameterError("more mode vectors than channels")
    r = sample_correlation(x)
    rows = [mvdr_weight(r, a, loading).conj() for a in mode_vectors]
    w = np.vstack(rows)
    s_hat = w @ x.samples
    return UnmixingMatrix(w), SlowTimeSeries(s_hat, rate=x.rate, start_time=x.start_time)
