"""Synthetic array-radar measurement of pulse-wave skin displacements.

Builds per-target displacement waveforms, the phase-modulated echoes they
produce, the far-field channel (mixing) matrix of a uniform linear array,
and the received array signal with additive complex white Gaussian noise.
All functions are pure: a scenario plus a seed fully determines the output.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ParameterError

SPEED_OF_LIGHT = 299_792_458.0


def wavelength(carrier_frequency: float) -> float:
    """Free-space wavelength in meters for a carrier frequency in Hz."""
    return SPEED_OF_LIGHT / carrier_frequency


def wavenumber(carrier_frequency: float) -> float:
    """Free-space wavenumber 2*pi/lambda in rad/m."""
    return 2.0 * np.pi / wavelength(carrier_frequency)


@dataclass
class TargetSpec:
    """One reflecting body part.

    Parameters
    ----------
    position : float
        Along-track coordinate x in meters, relative to the array reference
        point (the array is at x = 0, looking down from ``standoff`` meters).
    power_db : float
        Echo power in dB relative to the 0 dB reference (the strongest
        target is conventionally placed at 0 dB).
    displacement_amplitude : float
        Peak skin displacement in meters; the waveform spans +/- amplitude.
    delay : float
        Pulse arrival delay in seconds relative to the waveform template.
    waveform : str
        ``"triangular"`` for the built-in periodic triangle, or ``"custom"``
        to tile ``custom_samples`` as one template period.
    period : float
        Template period in seconds (1.0 s corresponds to 60 bpm).
    rise_fraction : float
        Fraction of the period spent on the rising edge of the triangle.
        A symmetric triangle (0.5) contains only odd harmonics, which makes
        the waveform indistinguishable from its own half-period shift up to
        sign; the default 0.3 mimics the fast systolic upstroke of an
        arterial pulse and keeps the inter-site delay unambiguous.
    custom_samples : ndarray, optional
        One period of a dimensionless template, scaled by
        ``displacement_amplitude``; required when ``waveform="custom"``.
    """

    position: float
    power_db: float = 0.0
    displacement_amplitude: float = 50e-6
    delay: float = 0.0
    waveform: str = "triangular"
    period: float = 1.0
    rise_fraction: float = 0.3
    custom_samples: np.ndarray | None = None

    def __post_init__(self):
        if self.waveform not in ("triangular", "custom"):
            raise ParameterError(f"unknown waveform {self.waveform!r}")
        if self.waveform == "custom":
            if self.custom_samples is None or len(self.custom_samples) < 2:
                raise ParameterError("custom waveform needs >= 2 template samples")
            self.custom_samples = np.asarray(self.custom_samples, dtype=float)
        if self.period <= 0:
            raise ParameterError("template period must be positive")
        if not 0.0 < self.rise_fraction < 1.0:
            raise ParameterError("rise_fraction must be in (0, 1)")
        if self.displacement_amplitude < 0:
            raise ParameterError("displacement amplitude must be >= 0")

    @property
    def power_linear(self) -> float:
        return 10.0 ** (self.power_db / 10.0)


@dataclass
class ArrayScenario:
    """Geometry, carrier, targets and noise of one simulated measurement."""

    carrier_frequency: float = 79e9
    element_count: int = 12
    element_spacing: float = 0.5  # in wavelengths
    standoff: float = 1.25  # array-to-body distance, meters
    targets: list[TargetSpec] = field(default_factory=list)
    noise_power_db: float = -45.0
    duration: float = 20.0
    slow_time_rate: float = 200.0
    angle_reference: str = "center"  # or "bottom": lowest-x element

    def __post_init__(self):
        if self.element_count < 1:
            raise ConfigurationError("element_count must be >= 1")
        if len(self.targets) > self.element_count:
            raise ConfigurationError(
                f"{len(self.targets)} targets exceed {self.element_count} elements"
            )
        if self.duration <= 0 or self.slow_time_rate <= 0:
            raise ConfigurationError("duration and slow_time_rate must be positive")
        if self.element_spacing <= 0:
            raise ConfigurationError("element_spacing must be positive")
        if self.angle_reference not in ("center", "bottom"):
            raise ConfigurationError(f"unknown angle_reference {self.angle_reference!r}")
        lam = wavelength(self.carrier_frequency)
        for t in self.targets:
            # small-displacement regime: 2k*d must stay well inside one cycle
            if 4.0 * np.pi * t.displacement_amplitude / lam > np.pi / 4.0:
                warnings.warn(
                    "displacement amplitude is large relative to the wavelength; "
                    "the small-displacement approximation may not hold",
                    stacklevel=2,
                )

    @property
    def wavelength(self) -> float:
        return wavelength(self.carrier_frequency)

    @property
    def wavenumber(self) -> float:
        return wavenumber(self.carrier_frequency)

    @property
    def n_targets(self) -> int:
        return len(self.targets)


@dataclass
class SlowTimeSeries:
    """Uniformly sampled complex baseband samples, one row per channel."""

    samples: np.ndarray  # (channels, time), complex
    rate: float
    start_time: float = 0.0

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=complex))
        if self.samples.ndim != 2:
            raise ParameterError("samples must be a channels x time matrix")
        if self.rate <= 0:
            raise ParameterError("sample rate must be positive")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.n_samples) / self.rate


@dataclass
class MixingMatrix:
    """Complex channel matrix mapping target echoes to array elements."""

    entries: np.ndarray  # (elements, targets)

    def __post_init__(self):
        self.entries = np.atleast_2d(np.asarray(self.entries, dtype=complex))
        if not np.all(np.isfinite(self.entries)):
            raise ParameterError("mixing matrix entries must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def element_positions(scenario: ArrayScenario) -> np.ndarray:
    """Element x coordinates in meters, centered on the array midpoint."""
    m = scenario.element_count
    idx = np.arange(m) - (m - 1) / 2.0
    return idx * scenario.element_spacing * scenario.wavelength


def _reference_offset(scenario: ArrayScenario) -> float:
    if scenario.angle_reference == "center":
        return 0.0
    return float(element_positions(scenario)[0])  # lowest-x element


def target_angles(scenario: ArrayScenario) -> np.ndarray:
    """Nadir angle of each target in radians, seen from the reference point."""
    ref = _reference_offset(scenario)
    x = np.array([t.position for t in scenario.targets])
    return np.arctan2(x - ref, scenario.standoff)


def synth_displacement(spec: TargetSpec, rate: float, duration: float) -> np.ndarray:
    """Displacement waveform d(t) = amplitude * d0(t - delay) in meters.

    The built-in template d0 is a periodic zero-mean triangle spanning
    [-1, 1] that rises for ``rise_fraction`` of the period and falls for
    the rest; custom templates are tiled periodically. Fractional delays
    are handled by evaluating the template analytically (triangular) or by
    linear interpolation (custom).
    """
    if rate <= 0 or duration <= 0:
        raise ParameterError("rate and duration must be positive")
    n = int(round(duration * rate))
    if n < 2:
        raise ParameterError("duration * rate must cover at least 2 samples")
    t = np.arange(n) / rate
    u = (t - spec.delay) / spec.period
    if spec.waveform == "triangular":
        phase = u % 1.0
        rho = spec.rise_fraction
        d0 = np.where(
            phase < rho,
            -1.0 + 2.0 * phase / rho,
            1.0 - 2.0 * (phase - rho) / (1.0 - rho),
        )
    else:
        template = spec.custom_samples
        pos = (u % 1.0) * len(template)
        base = np.floor(pos).astype(int)
        frac = pos - base
        nxt = (base + 1) % len(template)
        d0 = template[base] * (1.0 - frac) + template[nxt] * frac
    return spec.displacement_amplitude * d0


def phase_modulate(displacement: np.ndarray, wavenumber: float) -> np.ndarray:
    """Unit-modulus echo exp(j*2k*d(t)) for a displacement series in meters."""
    d = np.asarray(displacement, dtype=float)
    if not np.all(np.isfinite(d)):
        raise ParameterError("displacement contains non-finite values")
    return np.exp(2j * wavenumber * d)


def channel_matrix(scenario: ArrayScenario) -> MixingMatrix:
    """Far-field channel matrix of the uniform linear array.

    Column j carries the constant inter-element phase gradient
    k * du * sin(theta_j) of a plane wave from target j, a common
    round-trip phase exp(j*2k*l_j), and is scaled so that the received
    per-element echo power equals the target's power_db.
    """
    if scenario.n_targets == 0:
        raise ConfigurationError("scenario has no targets")
    if scenario.n_targets > scenario.element_count:
        raise ConfigurationError("more targets than array elements")
    k = scenario.wavenumber
    u = element_positions(scenario)
    ref = _reference_offset(scenario)
    angles = target_angles(scenario)
    cols = []
    for spec, theta in zip(scenario.targets, angles):
        dist = np.hypot(scenario.standoff, spec.position - ref)
        amp = np.sqrt(spec.power_linear)
        cols.append(amp * np.exp(2j * k * dist) * np.exp(1j * k * u * np.sin(theta)))
    return MixingMatrix(np.column_stack(cols))


def simulate(
    scenario: ArrayScenario, seed: int
) -> tuple[SlowTimeSeries, MixingMatrix, np.ndarray]:
    """Simulate one measurement: x(t) = A s(t) + n(t).

    Returns the received series, the mixing matrix, and the ground-truth
    displacement waveforms (targets x time, meters). Noise is circular
    complex white Gaussian at ``noise_power_db`` per element; pass
    ``noise_power_db=-inf`` to disable it. Deterministic given the seed.
    """
    a = channel_matrix(scenario)
    rng = np.random.default_rng(seed)
    d = np.stack(
        [
            synth_displacement(t, scenario.slow_time_rate, scenario.duration)
            for t in scenario.targets
        ]
    )
    echoes = phase_modulate(d, scenario.wavenumber)
    x = a.entries @ echoes
    if np.isfinite(scenario.noise_power_db):
        sigma2 = 10.0 ** (scenario.noise_power_db / 10.0)
        noise = np.sqrt(sigma2 / 2.0) * (
            rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
        )
        x = x + noise
    return SlowTimeSeries(x, scenario.slow_time_rate), a, d


def default_scenario() -> ArrayScenario:
    """Two body parts at x = -0.5 m and +0.3 m with a 300 ms transit delay."""
    return ArrayScenario(
        targets=[
            TargetSpec(position=-0.5, power_db=0.0, delay=0.0),
            TargetSpec(position=0.3, power_db=-3.0, delay=0.3),
        ]
    )


def close_targets_scenario() -> ArrayScenario:
    """Equal-power body parts at x = -0.1 m and +0.3 m (harder geometry)."""
    return ArrayScenario(
        targets=[
            TargetSpec(position=-0.1, power_db=0.0, delay=0.0),
            TargetSpec(position=0.3, power_db=0.0, delay=0.3),
        ]
    )


def scenario_from_dict(cfg: dict) -> ArrayScenario:
    """Build an ArrayScenario from a configuration mapping.

    Recognized keys mirror the dataclass fields; targets are given as a list
    of mappings with keys position, power_db, displacement_amplitude, delay,
    waveform, period, custom_samples.
    """
    if "targets" not in cfg or not cfg["targets"]:
        raise ConfigurationError("scenario config must list at least one target")
    known_target = {
        "position",
        "power_db",
        "displacement_amplitude",
        "delay",
        "waveform",
        "period",
        "rise_fraction",
        "custom_samples",
    }
    targets = []
    for i, tc in enumerate(cfg["targets"]):
        extra = set(tc) - known_target
        if extra:
            raise ConfigurationError(f"target {i}: unknown keys {sorted(extra)}")
        if "position" not in tc:
            raise ConfigurationError(f"target {i}: missing position")
        targets.append(TargetSpec(**tc))
    known = {
        "carrier_frequency",
        "element_count",
        "element_spacing",
        "standoff",
        "noise_power_db",
        "duration",
        "slow_time_rate",
        "angle_reference",
    }
    extra = set(cfg) - known - {"targets"}
    if extra:
        raise ConfigurationError(f"unknown scenario keys {sorted(extra)}")
    kwargs = {k: cfg[k] for k in known if k in cfg}
    return ArrayScenario(targets=targets, **kwargs)


def write_series_csv(series: SlowTimeSeries, path) -> None:
    """Write a slow-time series as CSV: time, then Re/Im per channel."""
    header = ["time"]
    for c in range(series.n_channels):
        header += [f"ch{c:02d}_re", f"ch{c:02d}_im"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        times = series.times
        for t_idx in range(series.n_samples):
            row = [repr(times[t_idx])]
            for c in range(series.n_channels):
                v = series.samples[c, t_idx]
                row += [repr(v.real), repr(v.imag)]
            writer.writerow(row)


def read_series_csv(path) -> SlowTimeSeries:
    """Read a slow-time series written by :func:`write_series_csv`."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    if data.shape[1] < 3 or (data.shape[1] - 1) % 2 != 0:
        raise ParameterError(f"{path}: expected time plus Re/Im column pairs")
    times = data[:, 0]
    if len(times) < 2:
        raise ParameterError(f"{path}: need at least two samples")
    rate = 1.0 / np.mean(np.diff(times))
    n_channels = (data.shape[1] - 1) // 2
    samples = data[:, 1::2].T + 1j * data[:, 2::2].T
    return SlowTimeSeries(samples, rate=rate, start_time=float(times[0]))
