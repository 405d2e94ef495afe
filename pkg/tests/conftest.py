import numpy as np
import pytest

from diskcal.fields import H_GRAD_STEP
from diskcal.flow import FieldIsotopy, MapBundle


class BrokenField:
    """A deliberately non-Hamiltonian field: X scaled by a position factor.

    Scaling keeps tangency to the circle but destroys area preservation;
    used as the negative control for determinant checks.
    """

    name = "broken"

    def __init__(self, base, factor=0.5):
        self.base = base
        self.factor = factor

    def vector(self, t, z):
        return self.base.vector(t, z) * (1.0 + self.factor * np.real(z))

    def vector_wirtinger(self, t, z, step=H_GRAD_STEP):
        hh = step * (1.0 + np.abs(z))
        xu = (self.vector(t, z + hh) - self.vector(t, z - hh)) / (2.0 * hh)
        xv = (self.vector(t, z + 1j * hh) - self.vector(t, z - 1j * hh)) / (2.0 * hh)
        return (xu - 1j * xv) / 2.0, (xu + 1j * xv) / 2.0


@pytest.fixture(scope="session")
def broken_bundle():
    from diskcal.zoo import quadratic_twist

    field = BrokenField(quadratic_twist(0.3).field, factor=0.5)
    return MapBundle(isotopy=FieldIsotopy(field), name="broken")


def interior_points(n, seed, rmax=0.95):
    rng = np.random.default_rng(seed)
    r = rmax * np.sqrt(rng.random(n))
    return r * np.exp(2j * np.pi * rng.random(n))
