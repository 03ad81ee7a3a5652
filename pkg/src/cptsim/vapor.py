"""Temperature-dependent vapor physics: density, velocity, spin exchange.

Spin-exchange collisions between alkali atoms relax the ground-state
hyperfine coherence at the rate

    gamma_se = (6I + 1)/(8I + 4) * sigma_se * v_r * n

with I the nuclear spin, sigma_se the spin-exchange cross section,
v_r the mean relative velocity and n the atom number density.  The
rate is angular (rad/s); its contribution to the resonance FWHM is
gamma_se/pi in Hz.  CGS units are used where the cross section is
quoted (cm^2, cm/s, cm^-3), which multiply directly to 1/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from scipy.constants import atomic_mass, k as k_B, torr

from .errors import InvalidSpin, OutOfRange, ParameterError

# 87Rb defaults: nuclear spin 3/2, atomic mass (Steck), and the commonly
# adopted Rb-Rb spin-exchange cross section.
RB87_NUCLEAR_SPIN = 1.5
RB87_MASS_KG = 86.909180527 * atomic_mass
RB87_SIGMA_SE_CM2 = 1.9e-14


def _load_vapor_constants() -> dict[str, float]:
    text = resources.files("cptsim.data").joinpath("rb_vapor_pressure.txt").read_text()
    out: dict[str, float] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = float(value)
    return out


_VP = _load_vapor_constants()


@dataclass(frozen=True)
class VaporParams:
    """Inputs of the spin-exchange rate."""

    temperature: float                        # kelvin
    nuclear_spin: float = RB87_NUCLEAR_SPIN   # half-integer I
    atomic_mass: float = RB87_MASS_KG         # kg
    sigma_se: float = RB87_SIGMA_SE_CM2       # cm^2

    def __post_init__(self):
        if not self.temperature > 0:
            raise ParameterError("temperature must be > 0 K")
        if not self.sigma_se > 0:
            raise ParameterError("sigma_se must be > 0")
        if not self.atomic_mass > 0:
            raise ParameterError("atomic_mass must be > 0")


@dataclass(frozen=True)
class SpinExchangeResult:
    n: float           # cm^-3
    v_r: float         # cm/s
    gamma_se: float    # rad/s
    width_hz: float    # gamma_se / pi


def nuclear_spin_prefactor(nuclear_spin: float) -> float:
    """(6I + 1)/(8I + 4), evaluated in exact rational arithmetic.

    I must be a half-integer in [1/2, 9/2].
    """
    twice = round(2.0 * nuclear_spin)
    if not math.isclose(2.0 * nuclear_spin, twice, abs_tol=1e-9) or not 1 <= twice <= 9:
        raise InvalidSpin(f"nuclear spin {nuclear_spin!r} is not a half-integer in [1/2, 9/2]")
    i = Fraction(int(twice), 2)
    return float((6 * i + 1) / (8 * i + 4))


def mean_relative_velocity(temperature: float, mass: float) -> float:
    """Mean relative speed of identical particles, sqrt(16 kT / (pi m)), in cm/s.

    Identical-species collisions have reduced mass m/2, which turns the
    usual sqrt(8 kT / (pi mu)) into the form above.
    """
    if not (temperature > 0 and mass > 0):
        raise ParameterError("temperature and mass must be > 0")
    return math.sqrt(16.0 * k_B * temperature / (math.pi * mass)) * 100.0


def alkali_number_density(temperature: float) -> float:
    """Rb number density in cm^-3 from the liquid-phase vapor-pressure fit.

    Valid for temperature in [t_min, t_max] kelvin as recorded in the
    constants file; raises OutOfRange outside that window.
    """
    if not (_VP["t_min"] <= temperature <= _VP["t_max"]):
        raise OutOfRange(
            f"temperature {temperature!r} K outside "
            f"[{_VP['t_min']:g}, {_VP['t_max']:g}] K")
    log10_p_torr = (_VP["A"] + _VP["B"] / temperature + _VP["C"] * temperature
                    + _VP["D"] * math.log10(temperature))
    p_pa = 10.0**log10_p_torr * torr
    n_m3 = p_pa / (k_B * temperature)
    return n_m3 * 1e-6


def spin_exchange(params: VaporParams) -> SpinExchangeResult:
    """Spin-exchange relaxation rate and its FWHM contribution."""
    n = alkali_number_density(params.temperature)
    v_r = mean_relative_velocity(params.temperature, params.atomic_mass)
    gamma_se = nuclear_spin_prefactor(params.nuclear_spin) * params.sigma_se * v_r * n
    return SpinExchangeResult(n=n, v_r=v_r, gamma_se=gamma_se,
                              width_hz=gamma_se / math.pi)
