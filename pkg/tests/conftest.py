import numpy as np
import pytest

from cptsim import Depolarization, ModelParams, hz_to_angular

FIG1_HZ = {
    "gamma_opt": 1e9,
    "gamma_nat": 5.75e6,
    "gamma_g": 100.0,
    "omega_e": 817e6,
    "delta_opt": -30e6,
}


def make_params(rabi=0.0, delta_raman=0.0, mode=Depolarization.NONE, **hz_overrides):
    hz = dict(FIG1_HZ)
    hz.update(hz_overrides)
    return ModelParams(
        rabi=rabi,
        gamma_opt=hz_to_angular(hz["gamma_opt"]),
        gamma_nat=hz_to_angular(hz["gamma_nat"]),
        gamma_g=hz_to_angular(hz["gamma_g"]),
        omega_e=hz_to_angular(hz["omega_e"]),
        delta_opt=hz_to_angular(hz["delta_opt"]),
        delta_raman=delta_raman,
        depolarization=mode,
    )


def random_params(rng: np.random.Generator, mode=None) -> ModelParams:
    """A physically sensible random parameter draw (log-uniform rates)."""
    gamma_opt = hz_to_angular(10 ** rng.uniform(8.5, 9.5))
    omega_e = hz_to_angular(10 ** rng.uniform(8.3, 9.1))
    delta_opt = hz_to_angular(rng.uniform(-1.5e9, 1.5e9))
    gamma_g = hz_to_angular(10 ** rng.uniform(1.0, 4.0))
    gamma_nat = hz_to_angular(10 ** rng.uniform(6.0, 7.0))
    if mode is None:
        mode = rng.choice([Depolarization.NONE, Depolarization.COMPLETE])
    p = ModelParams(rabi=0.0, gamma_opt=gamma_opt, gamma_nat=gamma_nat,
                    gamma_g=gamma_g, omega_e=omega_e, delta_opt=delta_opt,
                    depolarization=mode)
    strength = 10 ** rng.uniform(-3.0, 4.0)
    lu = gamma_opt / (delta_opt**2 + gamma_opt**2)
    rabi = np.sqrt(strength * gamma_g / lu)
    hw = gamma_g * (1.0 + strength)
    delta_raman = rng.uniform(-5.0, 5.0) * hw
    return p.replace(rabi=rabi, delta_raman=delta_raman)


@pytest.fixture
def fig1_optical():
    """Fig-1 optical geometry with a placeholder Rabi frequency."""
    return make_params()


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)
