"""Disk conventions and angle bookkeeping.

Points and tangent vectors of the plane are represented as complex numbers
``z = u + iv`` (scalars or numpy arrays).  All angles, windings and rotation
numbers are measured in *turns*: one turn is a full revolution (2*pi radians).
The area form is the normalized ``omega = (1/pi) du ^ dv`` so the closed unit
disk has total mass 1, and the Liouville primitive is
``lambda = r^2/(2 pi) d(theta)``, i.e. ``lambda_z(w) = (u w_v - v w_u)/(2 pi)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PointOutsideDisk, StepTooCoarse, ZeroVector

TOL_BOUNDARY = 1e-9
TOL_AREA = 1e-6
GAP_LIMIT_TURNS = 0.25
MIN_VECTOR_NORM = 1e-12

TWO_PI = 2.0 * np.pi


def liouville_eval(z, w):
    """Evaluate the Liouville form r^2/(2 pi) d(theta) at ``z`` on vector ``w``.

    In Cartesian terms this is ``(u w_v - v w_u) / (2 pi)``, the imaginary
    part of ``conj(z) * w`` over 2 pi.  Vectorized over arrays.
    """
    return np.imag(np.conj(z) * w) / TWO_PI


def area_density(z):
    """Density of the normalized area form with respect to du dv: 1/pi."""
    return np.full_like(np.real(z), 1.0 / np.pi) if np.ndim(z) else 1.0 / np.pi


def unwrap_angle(vectors) -> float:
    """Total continuous argument variation along a path of nonzero vectors.

    ``vectors`` is a sequence of complex numbers (or an (n,) array).  Returns
    the argument variation from first to last in turns.  Consecutive entries
    must differ in argument by less than a quarter turn; larger gaps raise
    StepTooCoarse since the winding becomes ambiguous well before half a turn.
    """
    v = np.asarray(vectors, dtype=complex)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("expected a one-dimensional sequence of vectors")
    if np.any(np.abs(v) < MIN_VECTOR_NORM):
        raise ZeroVector("path contains a vector with norm below 1e-12")
    steps = np.angle(v[1:] * np.conj(v[:-1])) / TWO_PI
    # a gap of exactly a quarter turn is still unambiguous; beyond it, refuse
    if steps.size and np.max(np.abs(steps)) > GAP_LIMIT_TURNS:
        raise StepTooCoarse(
            f"argument gap {np.max(np.abs(steps)):.3f} turns > {GAP_LIMIT_TURNS}"
        )
    return float(np.sum(steps))


def unwrap_turns_along(paths: np.ndarray, gap_limit: float = GAP_LIMIT_TURNS):
    """Vectorized winding of many paths sampled on a common time grid.

    ``paths`` has shape (T, N): T time samples of N planar vectors.  Returns
    ``(turns, ok)`` where ``turns[j]`` is the accumulated argument variation of
    column j and ``ok[j]`` is False when some step gap reached ``gap_limit``
    turns or some sample fell below the norm threshold (such columns need a
    finer grid; their value is unreliable).
    """
    small = np.abs(paths) < MIN_VECTOR_NORM
    steps = np.angle(paths[1:] * np.conj(paths[:-1])) / TWO_PI
    steps[paths[1:] == paths[:-1]] = 0.0  # equal endpoints wind by exactly zero
    ok = ~(np.any(np.abs(steps) >= gap_limit, axis=0) | np.any(small, axis=0))
    return np.sum(steps, axis=0), ok


@dataclass(frozen=True)
class Jacobian2:
    """Row-major 2x2 real matrix of partial derivatives."""

    a: float
    b: float
    c: float
    d: float

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def apply(self, w: complex) -> complex:
        u, v = w.real, w.imag
        return complex(self.a * u + self.b * v, self.c * u + self.d * v)

    @classmethod
    def from_wirtinger(cls, p: complex, q: complex) -> "Jacobian2":
        # dz -> p dz + q dz_bar as a real-linear map
        return cls(
            a=(p + q).real,
            b=-(p - q).imag,
            c=(p + q).imag,
            d=(p - q).real,
        )


def wirtinger_det(p, q):
    """det of the real-linear map dz -> p dz + q dz_bar (vectorized)."""
    return np.abs(p) ** 2 - np.abs(q) ** 2


def wirtinger_apply(p, q, w):
    """Apply the real-linear map (p, q) to vector(s) ``w``."""
    return p * w + q * np.conj(w)


def wirtinger_compose(outer, inner):
    """Compose real-linear maps given as Wirtinger pairs: outer after inner."""
    a, b = outer
    p, q = inner
    return a * p + b * np.conj(q), a * q + b * np.conj(p)


def project_to_disk(z, tol: float = TOL_BOUNDARY):
    """Radially project points within ``tol`` outside the unit circle back on it.

    Points farther outside raise PointOutsideDisk: flows of boundary-tangent
    fields must not leave the closed disk beyond numerical drift.
    """
    r = np.abs(z)
    outside = r > 1.0
    if not np.any(outside):
        return z
    if np.any(r > 1.0 + tol):
        raise PointOutsideDisk(f"|z| = {float(np.max(r)):.12f} exceeds 1 + {tol}")
    if np.ndim(z) == 0:
        return z / r
    z = np.array(z, copy=True)
    z[outside] /= r[outside]
    return z


def circle_point(x):
    """Point of the unit circle at position ``x`` in turns."""
    return np.exp(2j * np.pi * np.asarray(x, dtype=float))


def uniform_disk_points(n: int, rng) -> np.ndarray:
    """Draw ``n`` points distributed as the normalized area form (uniform)."""
    r = np.sqrt(rng.random(n))
    theta = rng.random(n)
    return r * circle_point(theta)
