"""Model-based separation objective for correlated pulse-wave echoes.

The objective F(W) = F1 * F2 * F3 * F4 scores a candidate unmixing matrix:
F1 rewards flat, elongated I-Q trajectories (small-displacement model),
F2 rewards concentrated pairwise deconvolution impulse responses,
F3 rewards causal responses (energy at positive lag only), and
F4 rewards mutually orthogonal beam patterns of the weight rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import estimate
from .errors import ParameterError
from .scenario import SlowTimeSeries

DEFAULT_GAMMA = 10.0
DEFAULT_PAD_FACTOR = 8
DEFAULT_EPS_REL = 1e-3
DEFAULT_LAG_WINDOW = 1.0
# Half the displacement template period: a periodic template repeats its
# deconvolution peak every period, so the causality comparison must not
# look further back than period/2 or the alias of a causal peak wins.
DEFAULT_CAUSAL_WINDOW = 0.5
F3_FLOOR_REL = 1e-9
PATTERN_OVERSAMPLING = 4


@dataclass
class UnmixingMatrix:
    """Separator W (sources x elements) applied as s_hat = W x."""

    w: np.ndarray

    def __post_init__(self):
        self.w = np.atleast_2d(np.asarray(self.w, dtype=complex))
        if not np.all(np.isfinite(self.w)):
            raise ParameterError("unmixing matrix entries must be finite")

    @classmethod
    def normalized(cls, w: np.ndarray) -> "UnmixingMatrix":
        """Construct with each row scaled to unit Euclidean norm."""
        return cls(normalize_rows(np.asarray(w, dtype=complex)))

    @property
    def n_sources(self) -> int:
        return self.w.shape[0]

    def is_row_normalized(self, tol: float = 1e-10) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.w, axis=1) - 1.0) < tol))


@dataclass
class ImpulseResponse:
    """Deconvolution impulse response on a signed, zero-centered lag grid."""

    lags: np.ndarray  # seconds, uniformly spaced, symmetric about 0
    values: np.ndarray  # complex amplitudes

    def __post_init__(self):
        self.lags = np.asarray(self.lags, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.lags.shape != self.values.shape:
            raise ParameterError("lag and value arrays differ in shape")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("impulse response values must be finite")
        if self.lags.size and abs(self.lags[0] + self.lags[-1]) > 1e-9:
            raise ParameterError("lag grid must be symmetric about zero")

    @property
    def lag_step(self) -> float:
        return float(self.lags[1] - self.lags[0])


@dataclass
class ObjectiveBreakdown:
    """All four objective terms, their product, and the pair responses."""

    f1: float
    f2: float
    f3: float
    f4: float
    f_total: float
    responses: dict[tuple[int, int], ImpulseResponse] = field(default_factory=dict)
    diagnostic: str | None = None

    def to_dict(self) -> dict:
        """JSON-ready summary (peak positions instead of full responses)."""
        peaks = {}
        for (i, j), r in self.responses.items():
            mag = np.abs(r.values)
            k = int(np.argmax(mag))
            peaks[f"{i}-{j}"] = {
                "peak_lag_s": float(r.lags[k]),
                "peak_magnitude": float(mag[k]),
            }
        out = {
            "f1": self.f1,
            "f2": self.f2,
            "f3": self.f3,
            "f4": self.f4,
            "f_total": self.f_total,
            "response_peaks": peaks,
        }
        if self.diagnostic:
            out["diagnostic"] = self.diagnostic
        return out


def normalize_rows(w: np.ndarray) -> np.ndarray:
    """Scale each row of a matrix to unit Euclidean norm."""
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    norms = np.linalg.norm(w, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ParameterError("cannot normalize a zero row")
    return w / norms


def flatness_lambda2(s: np.ndarray, dt: float = 1.0) -> tuple[float, float]:
    """Principal-axis moments of the I-Q trajectory of one echo estimate.

    lambda1 is the total power integral; lambda2 measures how far the
    trajectory is from an isotropic cloud (lambda2 = lambda1 for a straight
    line through the origin, 0 for a circle). Input is expected DC-removed.
    """
    s = np.asarray(s, dtype=complex).ravel()
    if s.size < 2:
        raise ParameterError("need at least 2 samples")
    re, im = s.real, s.imag
    srr = float(re @ re) * dt
    sii = float(im @ im) * dt
    sri = float(re @ im) * dt
    lam1 = srr + sii
    lam2 = np.sqrt((srr - sii) ** 2 + 4.0 * sri**2)
    return lam1, lam2


def f1(s_hat: np.ndarray, dt: float = 1.0) -> float:
    """Flatness term: min over sources of lambda2 squared."""
    s_hat = np.atleast_2d(s_hat)
    return float(min(flatness_lambda2(row, dt)[1] ** 2 for row in s_hat))


def impulse_response(
    d_i: np.ndarray,
    d_j: np.ndarray,
    rate: float,
    pad_factor: int = DEFAULT_PAD_FACTOR,
    eps_rel: float = DEFAULT_EPS_REL,
    window: float = DEFAULT_LAG_WINDOW,
) -> ImpulseResponse:
    """Regularized spectral deconvolution of d_j by d_i.

    Computes the inverse DFT of D_j * conj(D_i) / (|D_i|^2 + eps) with a
    Tikhonov floor eps = eps_rel * max|D_i|^2; the spectrum is zero-padded
    by ``pad_factor`` so the lag grid is 1/(pad_factor*rate) seconds. The
    returned response covers |tau| <= window. For d_j a pure shifted copy
    of d_i the response is a band-limited impulse at the shift.
    """
    d_i = np.asarray(d_i, dtype=float).ravel()
    d_j = np.asarray(d_j, dtype=float).ravel()
    if d_i.shape != d_j.shape:
        raise ParameterError("series lengths differ")
    if rate <= 0:
        raise ParameterError("rate must be positive")
    if not np.any(d_i):
        raise ParameterError("reference series is identically zero")
    n = d_i.size
    spec_i = np.fft.rfft(d_i)
    spec_j = np.fft.rfft(d_j)
    power_i = np.abs(spec_i) ** 2
    eps = eps_rel * power_i.max()
    ratio = spec_j * np.conj(spec_i) / (power_i + eps)

    n_pad = pad_factor * n
    padded = np.zeros(n_pad // 2 + 1, dtype=complex)
    padded[: n // 2 + 1] = ratio
    if n % 2 == 0:
        padded[n // 2] *= 0.5  # split the original Nyquist bin
    g = np.fft.irfft(padded, n=n_pad) * pad_factor

    half = min(int(round(window * rate * pad_factor)), n_pad // 2 - 1)
    values = np.concatenate((g[-half:], g[: half + 1]))
    lags = np.arange(-half, half + 1) / (rate * pad_factor)
    return ImpulseResponse(lags=lags, values=values)


def f2(responses) -> float:
    """Concentration term: product of fourth-moment ratios of |g|.

    Each factor is (sum |g|^4 dtau) / (sum |g|^2 dtau)^2; on a unit lag
    grid it equals 1/K for K equal-magnitude samples, so a single sharp
    impulse maximizes it.
    """
    total = 1.0
    for r in responses:
        dtau = r.lag_step
        p = np.abs(r.values) ** 2
        denom = float(p.sum()) * dtau
        if denom == 0.0:
            return 0.0
        total *= float((p**2).sum()) * dtau / denom**2
    return total


def f3(responses, positive_window: float | None = DEFAULT_CAUSAL_WINDOW) -> float:
    """Causality term: product of positive- over negative-lag peak power.

    The zero-lag bin is excluded from both sides; the comparison is limited
    to |tau| <= positive_window (pass None for the full lag range). The
    denominator is floored at a small fraction of the global peak so an
    empty negative side yields a large finite factor.
    """
    total = 1.0
    for r in responses:
        p = np.abs(r.values) ** 2
        peak = p.max()
        if peak == 0.0:
            return 0.0
        w = positive_window if positive_window is not None else np.inf
        pos = (r.lags > 0) & (r.lags <= w + 1e-12)
        neg = (r.lags < 0) & (r.lags >= -w - 1e-12)
        if not pos.any() or not neg.any():
            raise ParameterError("causality window contains no lags")
        floor = F3_FLOOR_REL * peak
        total *= float(p[pos].max()) / max(float(p[neg].max()), floor)
    return total


def beam_pattern(w: np.ndarray, oversampling: int = PATTERN_OVERSAMPLING) -> np.ndarray:
    """Squared-magnitude array factor of one weight row, unit-normalized.

    Sampled on an ``oversampling * len(w)``-point DFT grid of spatial
    frequencies; the result is real, non-negative and has unit Euclidean
    norm so that inner products between patterns are scale-free.
    """
    w = np.asarray(w, dtype=complex).ravel()
    if not np.any(w):
        raise ParameterError("zero weight vector has no beam pattern")
    u = np.abs(np.fft.fft(w, n=oversampling * w.size)) ** 2
    return u / np.linalg.norm(u)


def f4(w: np.ndarray, gamma: float = DEFAULT_GAMMA) -> float:
    """Orthogonality term: product over row pairs of min{1/(ui . uj), gamma}."""
    if gamma <= 0:
        raise ParameterError("gamma must be positive")
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    patterns = [beam_pattern(row) for row in w]
    total = 1.0
    n = len(patterns)
    for i in range(n):
        for j in range(i + 1, n):
            overlap = float(patterns[i] @ patterns[j])
            if overlap * gamma <= 1.0:
                total *= gamma
            else:
                total *= 1.0 / overlap
    return total


def objective(
    w,
    x: SlowTimeSeries,
    wavenumber: float,
    gamma: float = DEFAULT_GAMMA,
    lag_window: float = DEFAULT_LAG_WINDOW,
    causal_window: float | None = DEFAULT_CAUSAL_WINDOW,
    pad_factor: int = DEFAULT_PAD_FACTOR,
    eps_rel: float = DEFAULT_EPS_REL,
) -> ObjectiveBreakdown:
    """Evaluate F(W) = F1*F2*F3*F4 for a candidate unmixing matrix.

    Rows of W are normalized internally. Degenerate candidates (zero rows,
    zero-power separated channels) get fitness 0 with a diagnostic instead
    of raising, so population-based optimizers can keep running.
    """
    w = w.w if isinstance(w, UnmixingMatrix) else np.asarray(w, dtype=complex)
    w = np.atleast_2d(w)
    norms = np.linalg.norm(w, axis=1)
    if np.any(norms == 0) or not np.all(np.isfinite(w)):
        return ObjectiveBreakdown(
            0.0, 0.0, 0.0, 0.0, 0.0, diagnostic="degenerate candidate: zero row"
        )
    w = w / norms[:, None]
    s_hat = w @ x.samples
    dt = 1.0 / x.rate

    val_f1 = f1(s_hat, dt)

    disp = []
    for row in s_hat:
        if not np.any(row - row.mean()):
            return ObjectiveBreakdown(
                val_f1, 0.0, 0.0, 0.0, 0.0, diagnostic="zero-power separated channel"
            )
        disp.append(
            estimate.extract_displacement(row, wavenumber, "principal_axis").series
        )

    n = len(disp)
    responses: dict[tuple[int, int], ImpulseResponse] = {}
    for i in range(n):
        for j in range(i + 1, n):
            if not np.any(disp[i]):
                return ObjectiveBreakdown(
                    val_f1, 0.0, 0.0, 0.0, 0.0, diagnostic="zero displacement estimate"
                )
            responses[(i, j)] = impulse_response(
                disp[i], disp[j], x.rate, pad_factor, eps_rel, lag_window
            )

    val_f2 = f2(responses.values())
    val_f3 = f3(responses.values(), causal_window)
    val_f4 = f4(w, gamma)
    total = val_f1 * val_f2 * val_f3 * val_f4
    return ObjectiveBreakdown(val_f1, val_f2, val_f3, val_f4, total, responses)
