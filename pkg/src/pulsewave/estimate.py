"""Displacement recovery, transit-time extraction and error metrics.

Separated echoes carry the displacement in their phase; this module turns
them back into waveforms, locates the inter-site delay in a deconvolution
impulse response, and scores estimates against ground truth in a way that
is blind to the scale/sign/permutation ambiguity of source separation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.signal import find_peaks

from .errors import EstimationError, ParameterError

if TYPE_CHECKING:  # pragma: no cover
    from .modelsep import ImpulseResponse


@dataclass
class DisplacementEstimate:
    """Zero-mean displacement waveform in meters."""

    series: np.ndarray
    method: str


@dataclass
class PttResult:
    """Pulse transit time read off an impulse response peak."""

    ptt: float  # seconds, sub-bin interpolated
    peak_lag_bin: int  # index into the response's lag axis
    peak_magnitude: float  # |g| at the peak bin
    secondary_peaks: list[tuple[float, float]] = field(default_factory=list)
    pwv: float | None = None  # m/s, when a site distance was given


def extract_displacement(
    s: np.ndarray, wavenumber: float, method: str = "angle"
) -> DisplacementEstimate:
    """Recover the displacement waveform from a complex echo estimate.

    ``angle`` divides the unwrapped phase by 2k. ``principal_axis`` rotates
    the I-Q trajectory so its principal component lies on the real axis and
    reads the real part, which matches the small-displacement linearization
    of the echo. Both outputs are mean-subtracted.
    """
    s = np.asarray(s, dtype=complex).ravel()
    if s.size == 0 or not np.any(s):
        raise ParameterError("echo series has no power")
    if method == "angle":
        d = np.unwrap(np.angle(s)) / (2.0 * wavenumber)
    elif method == "principal_axis":
        c = s - s.mean()
        re, im = c.real, c.imag
        sxx = float(re @ re)
        syy = float(im @ im)
        sxy = float(re @ im)
        phi = 0.5 * np.arctan2(2.0 * sxy, sxx - syy)
        d = (c * np.exp(-1j * phi)).real / (2.0 * wavenumber)
    else:
        raise ParameterError(f"unknown extraction method {method!r}")
    return DisplacementEstimate(series=d - d.mean(), method=method)


def optimal_scale(d_true: np.ndarray, d_est: np.ndarray) -> float:
    """Least-squares coefficient eta minimizing ||d_true - eta * d_est||."""
    d_true = np.asarray(d_true, dtype=float)
    d_est = np.asarray(d_est, dtype=float)
    denom = float(d_est @ d_est)
    if denom == 0.0:
        return 0.0
    return float(d_true @ d_est) / denom


def rms_error(d_true: np.ndarray, d_est: np.ndarray) -> float:
    """Scale-invariant rms error between a true and an estimated waveform.

    The estimate is rescaled by the least-squares optimal coefficient
    (which may be negative) before the rms residual is taken, so constant
    multiplication and sign flips do not count as error.
    """
    d_true = np.asarray(d_true, dtype=float)
    d_est = np.asarray(d_est, dtype=float)
    if d_true.shape != d_est.shape:
        raise ParameterError("series lengths differ")
    eta = optimal_scale(d_true, d_est)
    resid = d_true - eta * d_est
    return float(np.sqrt(np.mean(resid**2)))


def match_permutation(d_true: list[np.ndarray], d_est: list[np.ndarray]) -> np.ndarray:
    """Assignment of estimates to true sources minimizing the total rms error.

    Returns indices such that ``d_est[assignment[i]]`` belongs to
    ``d_true[i]``. Solved exactly as a linear assignment problem.
    """
    if len(d_true) != len(d_est):
        raise ParameterError("true/estimated source counts differ")
    n = len(d_true)
    cost = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            cost[i, j] = rms_error(d_true[i], d_est[j])
    rows, cols = linear_sum_assignment(cost)
    assignment = np.empty(n, dtype=int)
    assignment[rows] = cols
    return assignment


def estimate_ptt(
    g: "ImpulseResponse", search_window: float = 1.0, distance: float | None = None
) -> PttResult:
    """Locate the pulse transit time as the dominant positive-lag peak.

    The peak of |g|^2 over 0 < tau <= search_window is refined by parabolic
    interpolation of log|g|^2 around the peak bin. Local maxima above 25% of
    the main peak power are reported as secondary peaks for diagnostics.
    """
    lags = np.asarray(g.lags, dtype=float)
    power = np.abs(np.asarray(g.values)) ** 2
    if lags.size == 0:
        raise EstimationError("empty impulse response")
    mask = (lags > 0) & (lags <= search_window + 1e-12)
    if not np.any(mask):
        raise EstimationError("no positive lags inside the search window")
    offset = int(np.argmax(mask))
    p = power[mask]
    peaks, _ = find_peaks(p)
    if peaks.size == 0:
        raise EstimationError("no positive-lag local maximum")
    main = peaks[np.argmax(p[peaks])]
    main_bin = offset + main

    ptt = float(lags[main_bin])
    dlag = float(lags[1] - lags[0])
    if 0 < main_bin < len(lags) - 1 and np.all(power[main_bin - 1 : main_bin + 2] > 0):
        lp = np.log(power[main_bin - 1 : main_bin + 2])
        denom = lp[0] - 2.0 * lp[1] + lp[2]
        if denom < 0:
            ptt += 0.5 * (lp[0] - lp[2]) / denom * dlag

    threshold = 0.25 * p[main]
    secondary = [
        (float(lags[offset + i]), float(np.sqrt(p[i])))
        for i in peaks
        if i != main and p[i] > threshold
    ]
    secondary.sort(key=lambda t: -t[1])
    return PttResult(
        ptt=ptt,
        peak_lag_bin=main_bin,
        peak_magnitude=float(np.sqrt(p[main])),
        secondary_peaks=secondary,
        pwv=None if distance is None else pwv(ptt, distance),
    )


def pwv(ptt: float, distance: float) -> float:
    """Pulse wave velocity: distance between the two sites divided by PTT."""
    if ptt <= 0 or distance <= 0:
        raise ParameterError("ptt and distance must be positive")
    return distance / ptt
