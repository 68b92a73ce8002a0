"""Initial-condition presets.

Each preset builds the full (Q, Lx, Ly) population array once, so every
decomposition of the same configuration starts from identical bits.
"""

import numpy as np

from .errors import ConfigurationError
from .kernels import equilibrium
from .velocity_set import VelocitySet


def uniform(Lx, Ly, vs: VelocitySet, **_):
    """Unit density at rest at the lattice temperature: f_l = w_l."""
    shape = (Lx, Ly)
    rho = np.ones(shape)
    z = np.zeros(shape)
    return equilibrium(rho, z, z, np.full(shape, vs.cs2), vs)


def random_near_equilibrium(Lx, Ly, vs: VelocitySet, seed=0, amplitude=0.01, **_):
    """Equilibrium at randomly perturbed (rho, u, T); used by conservation runs."""
    rng = np.random.default_rng(seed)
    shape = (Lx, Ly)
    rho = 1.0 + amplitude * rng.standard_normal(shape)
    ux = amplitude * rng.standard_normal(shape)
    uy = amplitude * rng.standard_normal(shape)
    T = vs.cs2 * (1.0 + amplitude * rng.standard_normal(shape))
    return equilibrium(rho, ux, uy, T, vs)


def taylor_green(Lx, Ly, vs: VelocitySet, u0=0.01, **_):
    """Taylor-Green vortex at the lattice temperature (athermal start)."""
    kx = 2.0 * np.pi / Lx
    ky = 2.0 * np.pi / Ly
    x = np.arange(Lx)[:, None] + 0.5
    y = np.arange(Ly)[None, :] + 0.5
    ux = -u0 * np.cos(kx * x) * np.sin(ky * y)
    uy = u0 * np.sin(kx * x) * np.cos(ky * y)
    rho = np.ones((Lx, Ly))
    return equilibrium(rho, ux, uy, np.full((Lx, Ly), vs.cs2), vs)


def rayleigh_taylor(Lx, Ly, vs: VelocitySet, T_hot=None, T_cold=None,
                    perturbation=0.02, width=2.0, seed=0, **_):
    """Heavy cold fluid above light hot fluid with a sinusoidal interface.

    Density follows the ideal-gas relation at uniform pressure, so the cold
    upper layer is the heavy one.
    """
    if T_hot is None:
        T_hot = vs.cs2 * 1.1
    if T_cold is None:
        T_cold = vs.cs2 * 0.9
    x = np.arange(Lx)[:, None] + 0.5
    y = np.arange(Ly)[None, :] + 0.5
    interface = Ly / 2.0 + perturbation * Ly * np.cos(2.0 * np.pi * x / Lx)
    frac = 0.5 * (1.0 + np.tanh((y - interface) / width))  # 0 below, 1 above
    T = T_hot + (T_cold - T_hot) * frac
    p0 = T_hot  # uniform pressure; rho = p/T
    rho = p0 / T
    z = np.zeros((Lx, Ly))
    return equilibrium(rho, z, z, T * np.ones((Lx, Ly)), vs)


PRESETS = {
    "uniform": uniform,
    "random": random_near_equilibrium,
    "taylor-green": taylor_green,
    "rayleigh-taylor": rayleigh_taylor,
}


def build_initial_state(name, Lx, Ly, vs, **kwargs):
    try:
        preset = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown initial condition {name!r}; choose from {sorted(PRESETS)}")
    return preset(Lx, Ly, vs, **kwargs)
