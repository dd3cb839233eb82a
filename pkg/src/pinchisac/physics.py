"""Channel, rate, and sensing-SNR models for a pinching-antenna waveguide system.

N pinching antennas sit on a dielectric waveguide at height d above the
service area. The signal enters the waveguide at a feed point and accumulates
an in-guide phase 2*pi*|x - x_feed|/lambda_g at each antenna, where
lambda_g = lambda/n_eff is the guided wavelength. From an antenna to a point
in the area the link is line-of-sight with complex amplitude

    alpha * exp(-j*2*pi*dist/lambda) / dist,   alpha = c / (4*pi*f_c).

Everything here is a pure function of its inputs, in SI units and
linear-scale power. dB/dBm conversion belongs to config parsing, not here.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

SPEED_OF_LIGHT_M_S = 299_792_458.0

_TWO_PI = 2.0 * math.pi


# ============================================================================
# Unit conversions (config-parse-time helpers)
# ============================================================================

def dbm_to_watts(dbm: float) -> float:
    """Convert power from dBm to watts: P_w = 10^(P_dBm/10) / 1000."""
    return 10.0 ** (dbm / 10.0) / 1000.0


def watts_to_dbm(watts: float) -> float:
    """Convert power from watts to dBm: P_dBm = 10*log10(1000*P_w)."""
    return 10.0 * math.log10(watts * 1000.0)


def db_to_linear(db: float) -> float:
    """Convert a dB ratio to linear scale."""
    return 10.0 ** (db / 10.0)


def linear_to_db(linear: float) -> float:
    """Convert a linear ratio to dB."""
    return 10.0 * math.log10(linear)


# ============================================================================
# Geometry and configuration types
# ============================================================================

@dataclass(frozen=True)
class Position3D:
    """A point in the deployment frame, meters. Users/targets live at z=0,
    antennas at z=height; those placement rules are enforced by the
    environment constructors, not here."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite coordinate {name}={getattr(self, name)!r}")

    def distance_to(self, other: "Position3D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y, self.z - other.z)


@dataclass(frozen=True)
class CarrierConfig:
    """Carrier frequency and the quantities derived from it.

    wavelength = c/f_c and path coefficient alpha = c/(4*pi*f_c) are computed
    here once; noise power is stored linear (watts), converted from dBm at
    config parse time.
    """

    carrier_frequency_hz: float
    noise_power_w: float
    wavelength_m: float = field(init=False)
    path_coefficient_m: float = field(init=False)

    def __post_init__(self):
        if self.carrier_frequency_hz <= 0.0:
            raise ValueError("carrier frequency must be positive")
        if self.noise_power_w <= 0.0:
            raise ValueError("noise power must be positive")
        object.__setattr__(self, "wavelength_m",
                           SPEED_OF_LIGHT_M_S / self.carrier_frequency_hz)
        object.__setattr__(self, "path_coefficient_m",
                           SPEED_OF_LIGHT_M_S / (4.0 * math.pi * self.carrier_frequency_hz))


@dataclass(frozen=True)
class WaveguideConfig:
    """Waveguide geometry: feed point, mounting height, guided wavelength,
    minimum antenna spacing, and the x-extent antennas may occupy."""

    feed_point: Position3D
    height_m: float
    effective_refractive_index: float
    guided_wavelength_m: float
    min_spacing_m: float
    x_min_m: float
    x_max_m: float

    def __post_init__(self):
        if self.height_m <= 0.0:
            raise ValueError("waveguide height must be positive")
        if self.effective_refractive_index < 1.0:
            raise ValueError("effective refractive index must be >= 1")
        if self.guided_wavelength_m <= 0.0:
            raise ValueError("guided wavelength must be positive")
        if self.min_spacing_m <= 0.0:
            raise ValueError("minimum antenna spacing must be positive")
        if self.x_max_m <= self.x_min_m:
            raise ValueError("waveguide extent is empty")

    @classmethod
    def from_carrier(cls, carrier: CarrierConfig, *, height_m: float,
                     effective_refractive_index: float, min_spacing_m: float,
                     x_min_m: float, x_max_m: float,
                     feed_x_m: float | None = None) -> "WaveguideConfig":
        """Build a waveguide whose guided wavelength is lambda/n_eff; the feed
        sits on the guide (y=0, z=height) at feed_x_m (default: left end)."""
        feed_x = x_min_m if feed_x_m is None else feed_x_m
        return cls(
            feed_point=Position3D(feed_x, 0.0, height_m),
            height_m=height_m,
            effective_refractive_index=effective_refractive_index,
            guided_wavelength_m=carrier.wavelength_m / effective_refractive_index,
            min_spacing_m=min_spacing_m,
            x_min_m=x_min_m,
            x_max_m=x_max_m,
        )


@dataclass(frozen=True)
class AntennaLayout:
    """Ordered x-coordinates of the pinching antennas on the waveguide.

    Strict ascending order is enforced here; spacing and extent feasibility
    are the environment's job (its action projection guarantees them)."""

    xs: tuple[float, ...]

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        object.__setattr__(self, "xs", xs)
        if len(xs) == 0:
            raise ValueError("layout needs at least one antenna")
        for x in xs:
            if not math.isfinite(x):
                raise ValueError(f"non-finite antenna coordinate {x!r}")
        for a, b in zip(xs, xs[1:]):
            if not b > a:
                raise ValueError("antenna coordinates must be strictly ascending")

    def __len__(self) -> int:
        return len(self.xs)

    def positions(self, waveguide: WaveguideConfig) -> tuple[Position3D, ...]:
        """Antenna positions in 3-D: on the guide at y=0, z=height."""
        return tuple(Position3D(x, 0.0, waveguide.height_m) for x in self.xs)


# ============================================================================
# Channel primitives
# ============================================================================

def _fractional_cycles(distance_m: float, wavelength_m: float) -> float:
    """distance/wavelength modulo 1, computed without catastrophic loss.

    fmod is exact in IEEE-754, so the reduced value keeps ~1e-16 absolute
    accuracy even when distance/wavelength ~ 1e4 (100 m at a ~1 cm
    wavelength), where a plain division would already have lost ~1e-11 of
    phase. This reduction is what the phase-accuracy contract rests on.
    """
    return math.fmod(distance_m, wavelength_m) / wavelength_m


def free_space_coeff(observer: Position3D, antenna: Position3D,
                     carrier: CarrierConfig) -> complex:
    """One line-of-sight channel coefficient: alpha*e^{-j*2*pi*dist/lambda}/dist.

    Raises ValueError when observer and antenna coincide (zero distance).
    """
    dist = observer.distance_to(antenna)
    if dist == 0.0:
        raise ValueError("observer coincides with antenna (zero distance)")
    magnitude = carrier.path_coefficient_m / dist
    phase = -_TWO_PI * _fractional_cycles(dist, carrier.wavelength_m)
    return magnitude * cmath.exp(1j * phase)


def phase_shift(antenna_x: float, waveguide: WaveguideConfig) -> float:
    """In-guide phase 2*pi*|x - x_feed|/lambda_g, reduced to [0, 2*pi)."""
    if not waveguide.x_min_m <= antenna_x <= waveguide.x_max_m:
        raise ValueError(
            f"antenna x={antenna_x} outside waveguide extent "
            f"[{waveguide.x_min_m}, {waveguide.x_max_m}]")
    in_guide = abs(antenna_x - waveguide.feed_point.x)
    return _TWO_PI * _fractional_cycles(in_guide, waveguide.guided_wavelength_m)


def effective_gain(point: Position3D, layout: AntennaLayout,
                   waveguide: WaveguideConfig, carrier: CarrierConfig) -> complex:
    """Coherent sum over antennas of (free-space coefficient) * e^{-j*theta_n}.

    This is the per-point aggregate channel shared by the rate and
    sensing-SNR formulas.
    """
    total = 0.0 + 0.0j
    for pos in layout.positions(waveguide):
        theta = phase_shift(pos.x, waveguide)
        total += free_space_coeff(point, pos, carrier) * cmath.exp(-1j * theta)
    return total


def user_rate(user: Position3D, layout: AntennaLayout, power_w: float,
              num_users: int, waveguide: WaveguideConfig,
              carrier: CarrierConfig) -> float:
    """TDMA per-user spectral efficiency, bits/s/Hz:

        (1/M) * log2(1 + |G|^2 * p / (N * sigma^2))

    where G is the effective gain at the user and N the antenna count.
    """
    if power_w < 0.0:
        raise ValueError("transmit power must be nonnegative")
    if num_users < 1:
        raise ValueError("need at least one user")
    gain = effective_gain(user, layout, waveguide, carrier)
    snr = (abs(gain) ** 2) * power_w / (len(layout) * carrier.noise_power_w)
    return math.log2(1.0 + snr) / num_users


def sensing_snr(target: Position3D, served_user: Position3D,
                layout: AntennaLayout, power_w: float,
                waveguide: WaveguideConfig, carrier: CarrierConfig) -> float:
    """SNR at the sensing target (linear), with the served user's signal as
    interference:

        (|G_target|^2 * p / N) / (|G_user|^2 * p / N + sigma^2)
    """
    if power_w < 0.0:
        raise ValueError("transmit power must be nonnegative")
    n = len(layout)
    gain_target = effective_gain(target, layout, waveguide, carrier)
    gain_user = effective_gain(served_user, layout, waveguide, carrier)
    signal = (abs(gain_target) ** 2) * power_w / n
    interference = (abs(gain_user) ** 2) * power_w / n
    return signal / (interference + carrier.noise_power_w)


def spacing_satisfied(layout: AntennaLayout, delta_m: float) -> bool:
    """True iff every adjacent pair of the (ascending) layout is >= delta
    apart. For sorted coordinates the adjacent check is equivalent to the
    full pairwise one."""
    return all(b - a >= delta_m for a, b in zip(layout.xs, layout.xs[1:]))
