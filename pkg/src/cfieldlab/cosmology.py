"""Scale functions, FRW identity residuals, weights and the minisuperspace model.

All derivatives are closed-form; complex powers stay on the principal sheet
and refuse to cross it.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .frame import PhysicalConstants, principal_power, principal_sqrt


class BigRipError(ArithmeticError):
    """The scale function reaches a zero or a pole of its power-law base."""


KINDS = ("power_law", "exponential", "de_sitter", "vilenkin_cosh", "vilenkin_cos", "explicit")


@dataclass(frozen=True)
class ScaleModel:
    """a(z0) and its derivatives.

    ``power_law`` covers every equation of state sigma (sigma = -1 is the
    exponential branch). The Vilenkin branches carry ``c`` because their
    argument is c z0 / ell. ``explicit`` takes ``fn(z0) -> (a, a', a'')``.
    """

    kind: str
    n_dim: int
    a0: complex = 1.0
    da0: complex = 0.0
    sigma: float = 0.0
    H: float = 0.0
    k: complex = 1.0
    q: complex = 1.0
    ell: complex = 1.0
    C: complex = 0.0
    c: float = 1.0
    sign: int = 1
    fn: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scale kind {self.kind!r}")
        if self.a0 == 0:
            raise ValueError("a(0) must be nonzero")
        if self.kind == "explicit" and self.fn is None:
            raise ValueError("explicit scale needs fn")

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, n_dim, a0=1.0):
        return cls("power_law", n_dim, a0=a0, da0=0.0, sigma=0.0)

    @classmethod
    def power_law(cls, n_dim, sigma, a0=1.0, da0=0.0):
        return cls("power_law", n_dim, a0=a0, da0=da0, sigma=sigma)

    @classmethod
    def de_sitter(cls, n_dim, H):
        return cls("de_sitter", n_dim, a0=1.0, da0=H, H=H, sigma=-1.0)

    @classmethod
    def vilenkin_cosh(cls, n_dim, ell, c=1.0, k=1.0, q=1.0, C=0.0, sign=1):
        a0 = sign * k * ell / q * cmath.cosh(C)
        return cls("vilenkin_cosh", n_dim, a0=a0, k=k, q=q, ell=ell, C=C, c=c, sign=sign)

    @classmethod
    def vilenkin_cos(cls, n_dim, ell, c=1.0):
        return cls("vilenkin_cos", n_dim, a0=ell, ell=ell, c=c)

    @classmethod
    def explicit(cls, n_dim, fn, a0=None):
        if a0 is None:
            a0 = fn(0.0)[0]
        return cls("explicit", n_dim, a0=a0, fn=fn)

    @property
    def is_constant(self) -> bool:
        return self.kind == "power_law" and self.da0 == 0

    def with_a0(self, a0):
        return replace(self, a0=a0)


def _power_base(model: ScaleModel, z0):
    n, s = model.n_dim, model.sigma
    beta = n * (1 + s) * model.da0 / (2 * model.a0)
    return beta, 1 + beta * z0


def scale_eval(model: ScaleModel, z0) -> tuple[complex, complex, complex]:
    """(a, d a/dz0, d^2 a/dz0^2) at complex z0."""
    z0 = complex(z0)
    kind = model.kind
    if kind == "explicit":
        return tuple(complex(v) for v in model.fn(z0))
    if kind == "de_sitter":
        a = cmath.exp(model.H * z0)
        return a, model.H * a, model.H**2 * a
    if kind == "vilenkin_cosh":
        pre = model.sign * model.k * model.ell / model.q
        arg = model.c * z0 / model.ell + model.C
        w = model.c / model.ell
        return pre * cmath.cosh(arg), pre * w * cmath.sinh(arg), pre * w**2 * cmath.cosh(arg)
    if kind == "vilenkin_cos":
        # imaginary-time branch a(t) = ell cos(c t / ell), derivatives in t
        w = model.c / model.ell
        arg = w * z0
        return model.ell * cmath.cos(arg), -model.ell * w * cmath.sin(arg), -model.ell * w**2 * cmath.cos(arg)
    if kind == "exponential" or (kind == "power_law" and model.sigma == -1):
        rate = model.da0 / model.a0
        a = model.a0 * cmath.exp(rate * z0)
        return a, rate * a, rate**2 * a
    # power law, sigma != -1
    if model.da0 == 0:
        return complex(model.a0), 0j, 0j
    beta, base = _power_base(model, z0)
    path_end = beta * z0
    # the segment 0 -> z0 maps to 1 -> base; it meets zero only along the negative real ray
    if abs(path_end.imag) <= 1e-14 * max(1.0, abs(path_end)) and path_end.real <= -1 + 1e-14:
        raise BigRipError(f"power-law base 1 + beta z0 reaches 0 before z0={z0}")
    s = 2 / (model.n_dim * (1 + model.sigma))
    a = model.a0 * principal_power(base, s)
    da = model.da0 * principal_power(base, s - 1)
    dda = model.da0 * (s - 1) * beta * principal_power(base, s - 2)
    return complex(a), complex(da), complex(dda)


def big_rip_time(model: ScaleModel) -> Optional[float]:
    """Real z0 > 0 where the power-law base vanishes, if any."""
    if model.kind != "power_law" or model.sigma == -1 or model.da0 == 0:
        return None
    beta, _ = _power_base(model, 0)
    if abs(complex(beta).imag) > 0 or complex(beta).real >= 0:
        return None
    return float(-1 / complex(beta).real)


@dataclass(frozen=True)
class WeightModel:
    b0: complex
    scale: ScaleModel
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


def weight_eval(model: WeightModel, z0, consts: PhysicalConstants) -> tuple[complex, complex]:
    """(w, b) with w = b0 (a(0)/a)^(n/2) and b = w exp(-+ i m c^2 z0 / hbar)."""
    a = scale_eval(model.scale, z0)[0]
    if a == 0:
        raise ZeroDivisionError("scale vanishes")
    w = model.b0 * principal_power(model.scale.a0 / a, model.scale.n_dim / 2)
    b = w * cmath.exp(-model.sign * 1j * consts.m * consts.c**2 * complex(z0) / consts.hbar)
    return complex(w), complex(b)


def weight_log_derivative(model: WeightModel, z0) -> complex:
    """d log w / d z0 = -(n/2) a'/a."""
    a, da, _ = scale_eval(model.scale, z0)
    return -model.scale.n_dim / 2 * da / a


def density_eval(model: ScaleModel, sigma: float, z0, kappa: float, consts: PhysicalConstants) -> complex:
    """Effective density carried by the power-law solution with equation of state sigma."""
    if kappa == 0:
        raise ZeroDivisionError("kappa = 0")
    n, c = model.n_dim, consts.c
    a = scale_eval(model, z0)[0]
    if a == 0:
        raise ZeroDivisionError("scale vanishes")
    e = n * (1 + sigma)
    pre = (n - 1) / 2 * n / (kappa * c**4) * model.da0**2
    return complex(pre * principal_power(model.a0, e - 2) * principal_power(a, -e))


@dataclass
class FRWResiduals:
    friedmann: float
    pressure: float
    raychaudhuri: float
    mass: float

    def as_dict(self):
        return {"friedmann": self.friedmann, "pressure": self.pressure,
                "raychaudhuri": self.raychaudhuri, "mass": self.mass}

    @property
    def max(self) -> float:
        return max(self.as_dict().values())


def _residual(*terms):
    """|sum(terms)| relative to the largest term; 0 when every term is 0."""
    scale = max(abs(t) for t in terms)
    if scale == 0:
        return 0.0
    return abs(sum(terms)) / scale


def frw_residuals(model: ScaleModel, sigma: float, q: complex, k: complex, z0, kappa: float,
                  consts: PhysicalConstants) -> FRWResiduals:
    """Relative residuals of the Friedmann, pressure, Raychaudhuri and mass identities.

    Density comes from ``density_eval`` and pressure from p = sigma rho c^2.
    Each identity is written as a sum of terms equal to zero; the residual is
    |sum| over the largest term.
    """
    n, c = model.n_dim, consts.c
    if n <= 2:
        raise ValueError("pressure identity needs n >= 3")
    a, da, dda = scale_eval(model, z0)
    if a == 0:
        raise ZeroDivisionError("scale vanishes")
    rho = density_eval(model, sigma, z0, kappa, consts)
    p = sigma * rho * c**2
    hub2 = (da / (c * a)) ** 2
    curv = k**2 / (q**2 * a**2)
    accel = dda / (c**2 * a)

    h = (n - 1) / 2
    fried = _residual(h * hub2, h * curv, -kappa * c**2 / n * rho)
    press = _residual(h * 2 / (n - 2) * accel, h * hub2, h * curv, kappa / (n - 2) * p)
    ray = _residual(accel, (n - 2) / (n - 1) * kappa * rho * c**2 / n, kappa / (n - 1) * p)
    # d/dz0 (rho c^2 a^n) + p d/dz0 a^n, with d rho/dz0 = -n(1+sigma) rho a'/a
    drho = -n * (1 + sigma) * rho * da / a
    an = a**n
    dan = n * a ** (n - 1) * da
    mass = _residual(c**2 * drho * an, c**2 * rho * dan, p * dan)
    return FRWResiduals(fried, press, ray, mass)


# ---------------------------------------------------------------------------
# minisuperspace
# ---------------------------------------------------------------------------

def vilenkin_length(n: int, Lambda: complex) -> complex:
    if Lambda == 0:
        raise ZeroDivisionError("Lambda = 0 leaves ell undefined")
    return principal_sqrt(n * (n - 1) / (2 * complex(Lambda)))


def lambda_for_length(n: int, ell: complex) -> complex:
    return n * (n - 1) / (2 * complex(ell) ** 2)


def vilenkin_potential(a, n: int, k, q, Lambda, consts: PhysicalConstants):
    if q == 0:
        raise ZeroDivisionError("q = 0")
    ell = vilenkin_length(n, Lambda)
    a = np.asarray(a, dtype=complex)
    out = consts.c**2 * (4 * n * a ** (n - 2)) ** 2 * (k**2 / q**2 - a**2 / ell**2)
    return complex(out) if out.ndim == 0 else out


def vilenkin_momentum(a, da, n: int, kappa: float, consts: PhysicalConstants) -> complex:
    return 4 * n * a ** (n - 2) * da / (kappa * consts.c**4)


def vilenkin_hamiltonian(a, p, n: int, k, q, Lambda, kappa: float, consts: PhysicalConstants) -> complex:
    """Minisuperspace Hamiltonian in the (a, p) form."""
    if a == 0:
        raise ZeroDivisionError("a = 0")
    if kappa == 0:
        raise ZeroDivisionError("kappa = 0")
    c = consts.c
    V = vilenkin_potential(a, n, k, q, Lambda, consts)
    return complex(2 * n * a**n / (kappa * c**2) * (c / (4 * n * a ** (n - 1))) ** 2
                   * (kappa**2 * p**2 * c**4 + V / c**4))


def vilenkin_hamiltonian_velocity(a, da, n: int, k, q, Lambda, kappa: float, consts: PhysicalConstants) -> complex:
    """Same Hamiltonian written with the velocity d a / d z0."""
    c = consts.c
    return complex(2 * n * a**n / (kappa * c**2)
                   * ((da / (c * a)) ** 2 + k**2 / (q**2 * a**2) - 2 * Lambda / (n * (n - 1))))


@dataclass(frozen=True)
class VilenkinParams:
    ell: float
    c: float = 1.0
    k: complex = 1.0
    q: complex = 1.0
    C: complex = 0.0
    sign: int = 1
    a0: complex = 1.0


def vilenkin_scale(branch: str, params: VilenkinParams, z0) -> complex:
    """Zero-energy scale solutions: cosh (k != 0), exp (k = 0), cos (imaginary time)."""
    P = params
    if branch == "cosh":
        return complex(P.sign * P.k * P.ell / P.q * cmath.cosh(P.c * complex(z0) / P.ell + P.C))
    if branch == "exp":
        return complex(P.a0 * cmath.exp(P.sign * P.c * complex(z0) / P.ell))
    if branch == "cos":
        t = float(np.real(z0))
        if np.imag(z0) != 0:
            raise ValueError("cos branch takes the real parameter t of z0 = i t")
        if not t > -np.pi * P.ell / (2 * P.c):
            raise ValueError(f"t={t} outside the positivity window t > -pi ell / 2c")
        return complex(P.ell * np.cos(P.c * t / P.ell))
    raise ValueError(f"unknown branch {branch!r}")


def vilenkin_energy_along(branch: str, params: VilenkinParams, n: int, times, kappa: float,
                          consts: PhysicalConstants) -> np.ndarray:
    """Velocity-form Hamiltonian along the cosh (k = k/q) or exp (k = 0) solution.

    Lambda is fixed by ell; derivatives are analytic.
    """
    P = params
    Lam = lambda_for_length(n, P.ell)
    out = []
    for t in times:
        if branch == "cosh":
            arg = P.c * complex(t) / P.ell + P.C
            pre = P.sign * P.k * P.ell / P.q
            a, da, k = pre * cmath.cosh(arg), pre * P.c / P.ell * cmath.sinh(arg), P.k
        elif branch == "exp":
            rate = P.sign * P.c / P.ell
            a = P.a0 * cmath.exp(rate * complex(t))
            da, k = rate * a, 0.0
        else:
            raise ValueError(f"unknown branch {branch!r}")
        out.append(vilenkin_hamiltonian_velocity(a, da, n, k, P.q, Lam, kappa, consts))
    return np.array(out)
