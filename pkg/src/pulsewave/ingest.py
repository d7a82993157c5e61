"""Preprocessing of recorded radar data.

Range gating collapses a channels x range x slow-time tensor to a
slow-time series, zero-Doppler clutter is removed by mean subtraction,
and whitening prepares the series for fourth-order separation.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, GateError, NumericalError, ParameterError
from .scenario import SlowTimeSeries

MAGIC = b"PWRPROF1"
_HEADER = struct.Struct("<8sIIIddd")  # magic, M, n_range, n_time, rate, r0, dr
EIG_FLOOR_REL = 1e-12


@dataclass
class RangeProfileSeries:
    """Complex range profiles: channels x range bins x slow time."""

    samples: np.ndarray
    range_axis: np.ndarray  # meters per bin, strictly increasing
    rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        self.range_axis = np.asarray(self.range_axis, dtype=float)
        if self.samples.ndim != 3:
            raise ParameterError("samples must be channels x range x time")
        if self.range_axis.shape != (self.samples.shape[1],):
            raise ParameterError("range axis length does not match range bins")
        if self.range_axis.size > 1 and np.any(np.diff(self.range_axis) <= 0):
            raise ParameterError("range axis must be strictly increasing")
        if self.rate <= 0:
            raise ParameterError("sample rate must be positive")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]


@dataclass
class GateSpec:
    """Inclusive range interval [r1, r2] containing the body parts."""

    r1: float
    r2: float

    def __post_init__(self):
        if not (0 <= self.r1 < self.r2):
            raise ParameterError("gate requires 0 <= r1 < r2")


def range_gate(data: RangeProfileSeries, gate: GateSpec) -> SlowTimeSeries:
    """Discrete integral over the range bins inside the gate.

    Bins are weighted by their width, so the result approximates the
    integral of the range profile between r1 and r2.
    """
    axis = data.range_axis
    mask = (axis >= gate.r1) & (axis <= gate.r2)
    if not mask.any():
        raise GateError(
            f"gate [{gate.r1}, {gate.r2}] selects no bins of "
            f"[{axis[0]}, {axis[-1]}]"
        )
    widths = np.gradient(axis) if axis.size > 1 else np.ones(1)
    gated = np.tensordot(widths[mask], data.samples[:, mask, :], axes=([0], [1]))
    return SlowTimeSeries(gated, rate=data.rate)


def remove_dc(x: SlowTimeSeries) -> SlowTimeSeries:
    """Subtract the per-channel time mean (zero-Doppler clutter)."""
    if x.n_samples < 2:
        raise ParameterError("need at least 2 samples to estimate the mean")
    cleaned = x.samples - x.samples.mean(axis=1, keepdims=True)
    return SlowTimeSeries(cleaned, rate=x.rate, start_time=x.start_time)


def whiten(
    x: SlowTimeSeries, n_components: int | None = None
) -> tuple[SlowTimeSeries, np.ndarray]:
    """Decorrelate channels to unit variance on the retained subspace.

    Eigendecomposes the sample covariance and keeps ``n_components``
    dominant directions (all directions above a relative eigenvalue floor
    when None). Returns the whitened series z with empirical covariance I
    and the transform V such that z = V (x - mean).
    """
    if x.n_samples <= x.n_channels:
        warnings.warn("whitening with fewer samples than channels", stacklevel=2)
    centered = x.samples - x.samples.mean(axis=1, keepdims=True)
    cov = centered @ centered.conj().T / x.n_samples
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]
    rank = int(np.sum(eigvals > EIG_FLOOR_REL * max(eigvals[0], 0.0)))
    if rank == 0:
        raise NumericalError("covariance matrix has no positive eigenvalues")
    if n_components is None:
        n_components = rank
    elif n_components > rank:
        raise NumericalError(
            f"requested {n_components} components but covariance rank is {rank}"
        )
    v = eigvecs[:, :n_components].conj().T / np.sqrt(eigvals[:n_components, None])
    z = v @ centered
    return SlowTimeSeries(z, rate=x.rate, start_time=x.start_time), v


def write_range_profile(data: RangeProfileSeries, path) -> None:
    """Write the binary tensor layout: little-endian header + Re/Im float64."""
    m, n_range, n_time = data.samples.shape
    r0 = float(data.range_axis[0])
    dr = float(data.range_axis[1] - data.range_axis[0]) if n_range > 1 else 1.0
    header = _HEADER.pack(MAGIC, m, n_range, n_time, data.rate, r0, dr)
    interleaved = np.empty(data.samples.size * 2, dtype="<f8")
    flat = data.samples.ravel()
    interleaved[0::2] = flat.real
    interleaved[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(header)
        interleaved.tofile(fh)


def read_range_profile(path) -> RangeProfileSeries:
    """Read a tensor written by :func:`write_range_profile`."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise DataFormatError(f"{path}: truncated header", byte_offset=len(raw))
        magic, m, n_range, n_time, rate, r0, dr = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise DataFormatError(f"{path}: bad magic {magic!r}", byte_offset=0)
        if min(m, n_range, n_time) == 0 or rate <= 0 or dr <= 0:
            raise DataFormatError(f"{path}: invalid header fields", byte_offset=8)
        count = 2 * m * n_range * n_time
        payload = np.fromfile(fh, dtype="<f8", count=count)
        if payload.size < count:
            raise DataFormatError(
                f"{path}: expected {count} float64 values, got {payload.size}",
                byte_offset=_HEADER.size + payload.size * 8,
            )
    samples = (payload[0::2] + 1j * payload[1::2]).reshape(m, n_range, n_time)
    range_axis = r0 + dr * np.arange(n_range)
    return RangeProfileSeries(samples=samples, range_axis=range_axis, rate=rate)
