import numpy as np
import pytest

from thermolb import build_velocity_set


@pytest.fixture(scope="session")
def d2q37():
    return build_velocity_set("D2Q37")


@pytest.fixture(scope="session")
def d2q9():
    return build_velocity_set("D2Q9")


def periodic_fill(field):
    """Wrap halos periodically in both directions (corners included)."""
    g = field.geom
    pops = field.pops
    Hx, Hy, Lx, Ly = g.Hx, g.Hy, g.Lx, g.Ly
    if Hx:
        pops[:, :Hx, :] = pops[:, Lx:Lx + Hx, :]
        pops[:, Hx + Lx:, :] = pops[:, Hx:2 * Hx, :]
    if Hy:
        pops[:, :, :Hy] = pops[:, :, Ly:Ly + Hy]
        pops[:, :, Hy + Ly:] = pops[:, :, Hy:2 * Hy]


def random_state(geom, vs, seed=0, lo=0.5):
    rng = np.random.default_rng(seed)
    return lo + rng.random((vs.Q, geom.NX, geom.NY))
