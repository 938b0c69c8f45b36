"""Physical constants, complex-ray frames and the coupling constant kappa(n).

Coordinates live on rays ``z^a = exp(i w^a) x^a`` with real parameters
``x^a``. Derivatives along a ray pick up the inverse phase,
``d/dz^a = exp(-i w^a) d/dx^a``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class BranchError(ValueError):
    """A complex power or root was asked to leave the principal sheet."""


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 1.0
    m: float = 1.0
    hbar: float = 1.0
    G_newton: float = 1.0
    Lambda: complex = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if self.m < 0:
            raise ValueError(f"m must be non-negative, got {self.m}")
        if self.G_newton < 0:
            raise ValueError(f"G_newton must be non-negative, got {self.G_newton}")


_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class RotationFrame:
    """Ray angles for time (``omega0``) and the shared spatial angle (``omega1``)."""

    omega0: float = 0.0
    omega1: float = 0.0
    n_dim: int = 1

    def __post_init__(self):
        for name in ("omega0", "omega1"):
            w = getattr(self, name)
            if not (-_HALF_PI < w <= _HALF_PI + 1e-15):
                raise ValueError(f"{name}={w} outside (-pi/2, pi/2]")
        if int(self.n_dim) != self.n_dim or self.n_dim < 1:
            raise ValueError(f"n_dim must be a positive integer, got {self.n_dim}")

    def angle(self, axis: int) -> float:
        if not 0 <= axis <= self.n_dim:
            raise IndexError(f"axis {axis} out of range 0..{self.n_dim}")
        return self.omega0 if axis == 0 else self.omega1

    def angles(self) -> np.ndarray:
        return np.array([self.omega0] + [self.omega1] * self.n_dim)

    def phases(self) -> np.ndarray:
        """exp(i w^a) for every axis, time first."""
        return np.exp(1j * self.angles())

    def to_complex(self, x) -> np.ndarray:
        """Map real ray parameters (x^0..x^n) to complex coordinates."""
        return self.phases() * np.asarray(x, dtype=complex)

    @property
    def rotation_factor(self) -> complex:
        """exp(2i w^1) / exp(2i w^0); multiply by exp(2i theta) for a rotated scale."""
        return complex(np.exp(2j * (self.omega1 - self.omega0)))


def ray_phase(frame: RotationFrame, axis: int) -> complex:
    return complex(np.exp(1j * frame.angle(axis)))


def principal_arg(z):
    """Argument in (-pi, pi]; numpy returns -pi for a negative real with -0 imaginary part."""
    ang = np.angle(z)
    return np.where(ang <= -math.pi, math.pi, ang)


def principal_power(z, p):
    """z**p on the principal sheet, arg z in (-pi, pi]."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    with np.errstate(divide="ignore"):
        out = np.where(r == 0, 0.0, np.exp(p * (np.log(np.where(r == 0, 1.0, r)) + 1j * principal_arg(z))))
    if np.ndim(out) == 0:
        return complex(out)
    return out


def principal_sqrt(z):
    return principal_power(z, 0.5)


def kappa_dimension(n: int, consts: PhysicalConstants) -> float:
    """Einstein coupling in n spatial dimensions.

    Reduces to 8 pi G / c^4 for n = 3. Undefined below n = 3, where the
    weak-field matching forces the matter density to vanish.
    """
    if int(n) != n or n < 3:
        raise ValueError(f"kappa is defined for integer n >= 3, got {n}")
    return (2 * (n - 1) * math.pi ** (n / 2) * consts.G_newton
            / ((n - 2) * math.gamma(n / 2) * consts.c**4))


def frame_transform_matrix(theta: complex, omega: float) -> np.ndarray:
    """Transform (ct, x^1) -> (ct*, x*^1) between two frames on the same rays.

    omega = pi/2 with real theta gives a rotation, omega = 0 with imaginary
    theta a Lorentz boost of rapidity i*theta.
    """
    cs, sn = np.cos(complex(theta)), np.sin(complex(theta))
    ph = np.exp(1j * omega)
    return np.array([[cs, 1j * ph * sn], [1j * sn / ph, cs]], dtype=complex)
