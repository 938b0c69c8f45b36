"""Finite-difference curvature for diagonal complex metrics on rotated rays.

Index conventions follow the source geometry exactly:

* ``christoffel[a, b, c]`` is Gamma^a_{bc}
* ``riemann[d, a, b, c]`` is R^d_{abc} = d_b Gamma^d_{ac} - d_c Gamma^d_{ab} + ...
* ``ricci[a, b]`` is R^c_{abc} (contraction on the *last* slot)

The last convention makes R and G the negatives of the usual textbook
quantities; the closed forms below are written in the same convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .frame import PhysicalConstants, RotationFrame, principal_sqrt

# central-difference stencils: offsets and weights (divide by step)
_STENCILS = {
    2: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    4: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}

REL_FLOOR = 1e-12


class SingularMetricError(ValueError):
    pass


@dataclass
class MetricDescription:
    """Diagonal metric g_ab(z) along the rays of ``frame``.

    ``eval`` maps a complex point (z^0..z^n) to the n+1 diagonal entries.
    """

    n_dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    frame: RotationFrame = None
    analytic: bool = True

    def __post_init__(self):
        if self.frame is None:
            self.frame = RotationFrame(n_dim=self.n_dim)
        if self.frame.n_dim != self.n_dim:
            raise ValueError("frame and metric disagree on n_dim")

    def diag(self, z) -> np.ndarray:
        d = np.asarray(self.eval(np.asarray(z, dtype=complex)), dtype=complex)
        if d.shape != (self.n_dim + 1,):
            raise ValueError(f"metric eval returned shape {d.shape}, expected ({self.n_dim + 1},)")
        return d

    def matrix(self, z) -> np.ndarray:
        return np.diag(self.diag(z))


@dataclass
class CurvatureBundle:
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar_R: complex
    einstein_mixed: np.ndarray
    metric: np.ndarray = field(repr=False, default=None)


def _ray_derivative(fn, z, axis, h, frame, order):
    """d fn / d z^axis, stepping the real parameter x^axis."""
    if h <= 0 or not np.isfinite(h):
        raise ValueError(f"step must be positive, got {h}")
    offsets, weights = _STENCILS[order]
    ph = np.exp(1j * frame.angle(axis))
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > 0) and h < 1e-14 * np.max(np.abs(z)):
        raise ValueError(f"step {h} underflows at coordinate scale {np.max(np.abs(z))}")
    acc = 0.0
    for s, wt in zip(offsets, weights):
        zs = z.copy()
        zs[axis] += s * h * ph
        acc = acc + wt * np.asarray(fn(zs))
    return acc / (h * ph)


def _inverse_diag(d):
    if np.any(d == 0) or not np.all(np.isfinite(d)):
        raise SingularMetricError(f"metric not invertible: diag={d}")
    return 1.0 / d


def christoffel(metric: MetricDescription, z, h: float = 1e-4, order: int = 2) -> np.ndarray:
    dim = metric.n_dim + 1
    ginv = np.diag(_inverse_diag(metric.diag(z)))
    # dg[c, a, b] = d_c g_ab
    dg = np.stack([_ray_derivative(metric.matrix, z, ax, h, metric.frame, order)
                   for ax in range(dim)])
    # lowered: Gamma_{d b c} = 1/2 (d_b g_dc + d_c g_bd - d_d g_bc)
    low = 0.5 * (np.einsum("bdc->dbc", dg) + np.einsum("cbd->dbc", dg) - dg)
    gam = np.einsum("ad,dbc->abc", ginv, low)
    return 0.5 * (gam + gam.transpose(0, 2, 1))


def curvature_suite(metric: MetricDescription, z, h: float = 1e-4, order: int = 2) -> CurvatureBundle:
    dim = metric.n_dim + 1
    z = np.asarray(z, dtype=complex)
    g = metric.matrix(z)
    ginv = np.diag(_inverse_diag(np.diag(g)))
    gam = christoffel(metric, z, h, order)

    def gam_at(zz):
        return christoffel(metric, zz, h, order)

    # dgam[e, d, a, c] = d_e Gamma^d_{ac}
    dgam = np.stack([_ray_derivative(gam_at, z, ax, h, metric.frame, order) for ax in range(dim)])
    # A[d, a, b, c] = d_b Gamma^d_{ac} + Gamma^d_{eb} Gamma^e_{ac};  R = A - A(b<->c)
    A = np.einsum("bdac->dabc", dgam) + np.einsum("deb,eac->dabc", gam, gam)
    riemann = A - A.transpose(0, 1, 3, 2)
    ricci = np.einsum("cabc->ab", riemann)
    scalar = complex(np.einsum("ab,ab->", ginv, ricci))
    einstein = ginv @ ricci - 0.5 * scalar * np.eye(dim)
    return CurvatureBundle(gam, riemann, ricci, scalar, einstein, metric=g)


def covariant_derivative_of_metric(metric: MetricDescription, z, h: float = 1e-4, order: int = 2) -> np.ndarray:
    """nabla_c g_ab, which vanishes for the Levi-Civita connection."""
    dim = metric.n_dim + 1
    g = metric.matrix(z)
    gam = christoffel(metric, z, h, order)
    dg = np.stack([_ray_derivative(metric.matrix, z, ax, h, metric.frame, order)
                   for ax in range(dim)])
    return (dg - np.einsum("eca,eb->cab", gam, g) - np.einsum("ecb,ae->cab", gam, g))


def metric_volume(metric: MetricDescription, z) -> tuple[complex, complex]:
    """Determinant g and sqrt(-g) with arg(-g) in (-pi, pi]."""
    g = complex(np.prod(metric.diag(z)))
    if g == 0:
        raise SingularMetricError("metric determinant vanishes")
    return g, principal_sqrt(-g)


# ---------------------------------------------------------------------------
# isotropic line element  -c^2 dz0^2 + exp(h(z0) + f(r)) sum dz_j^2
# ---------------------------------------------------------------------------

def isotropic_metric(h_fn, f_fn, n_dim: int, consts: PhysicalConstants,
                     frame: Optional[RotationFrame] = None) -> MetricDescription:
    """``h_fn(z0)`` and ``f_fn(r)`` return (value, first, second) derivative triples."""
    c2 = consts.c**2

    def ev(z):
        r = principal_sqrt(np.sum(z[1:] ** 2))
        sp = np.exp(h_fn(z[0])[0] + f_fn(r)[0])
        return np.array([-c2] + [sp] * n_dim, dtype=complex)

    return MetricDescription(n_dim, ev, frame or RotationFrame(n_dim=n_dim))


def frw_metric(scale_fn, n_dim: int, consts: PhysicalConstants, q: complex = 1.0, k: complex = 0.0,
               frame: Optional[RotationFrame] = None) -> MetricDescription:
    """-c^2 dz0^2 + a(z0)^2 q^2 (1 + k^2 r^2/4)^-2 sum dz_j^2; ``scale_fn`` returns a only."""
    c2 = consts.c**2

    def ev(z):
        r2 = np.sum(z[1:] ** 2)
        sp = scale_fn(z[0]) ** 2 * q**2 / (1 + k**2 * r2 / 4) ** 2
        return np.array([-c2] + [sp] * n_dim, dtype=complex)

    return MetricDescription(n_dim, ev, frame or RotationFrame(n_dim=n_dim))


def conformal_f(q: complex, k: complex):
    """f(r) with exp(f) = q^2 (1 + k^2 r^2 / 4)^-2, returned as a derivative triple."""
    def f_fn(r):
        D = 1 + k**2 * r**2 / 4
        if abs(D) < 1e-14:
            raise ZeroDivisionError(f"f has a pole at r={r} (1 + k^2 r^2/4 = 0)")
        f0 = np.log(q**2) - 2 * np.log(D)
        f1 = -k**2 * r / D
        f2 = -k**2 / D + k**4 * r**2 / (2 * D**2)
        return f0, f1, f2
    return f_fn


def f_residual(q: complex, k: complex, r: complex) -> complex:
    """f'' - f'/r - (f')^2/2 for the conformal factor above (zero when isotropic)."""
    if r == 0:
        raise ZeroDivisionError("r = 0")
    if q == 0:
        raise ValueError("q must be nonzero")
    _, f1, f2 = conformal_f(q, k)(complex(r))
    return complex(f2 - f1 / r - f1**2 / 2)


def einstein_closed_form(h3, f3, z, n_dim: int, consts: PhysicalConstants) -> np.ndarray:
    """Mixed Einstein tensor of the isotropic line element from its closed form."""
    n, c2 = n_dim, consts.c**2
    z = np.asarray(z, dtype=complex)
    h0, h1, h2 = h3
    f0, f1, f2 = f3
    r = principal_sqrt(np.sum(z[1:] ** 2))
    if r == 0:
        raise ZeroDivisionError("radial terms singular at r = 0")
    decay = np.exp(-h0 - f0)
    G = np.zeros((n + 1, n + 1), dtype=complex)
    G[0, 0] = (n - 1) / (2 * c2) * (n / 4 * h1**2
                                   - c2 * decay * (f2 + (n - 1) * f1 / r + (n - 2) / 4 * f1**2))
    diag = ((n - 1) / (2 * c2) * (h2 + n / 4 * h1**2)
            - (n - 2) / 2 * decay * (f2 + (n - 2) * f1 / r + (n - 3) / 4 * f1**2))
    aniso = (n - 2) / 2 * decay * (f2 - f1 / r - f1**2 / 2)
    zs = z[1:]
    G[1:, 1:] = diag * np.eye(n) + aniso * np.outer(zs, zs) / r**2
    return G


def scalar_curvature_closed_form(h3, n_dim: int, consts: PhysicalConstants,
                                 k: complex = 0.0, q: complex = 1.0) -> complex:
    """R = -(n/c^2) h'' - n(n+1)/(4c^2) h'^2 - n(n-1) k^2/q^2 exp(-h)."""
    n, c2 = n_dim, consts.c**2
    h0, h1, h2 = h3
    return complex(-n / c2 * h2 - n * (n + 1) / (4 * c2) * h1**2 - n * (n - 1) * k**2 / q**2 * np.exp(-h0))


def _rel(num, ref):
    num, ref = np.asarray(num), np.asarray(ref)
    return float(np.max(np.abs(num - ref)) / max(float(np.max(np.abs(ref))), REL_FLOOR))


@dataclass
class IsotropicReport:
    g00: float
    gjk: float
    mixed: float
    scalar: Optional[float] = None
    numeric: CurvatureBundle = field(default=None, repr=False)

    @property
    def max_residual(self) -> float:
        vals = [self.g00, self.gjk, self.mixed] + ([self.scalar] if self.scalar is not None else [])
        return max(vals)


def verify_isotropic_forms(h_fn, f_fn, z, h: float = 1e-3, *, n_dim: int,
                           consts: PhysicalConstants, frame: Optional[RotationFrame] = None,
                           kq: Optional[tuple] = None, order: int = 4) -> IsotropicReport:
    """Compare finite-difference curvature with the isotropic closed forms at ``z``.

    Pass ``kq=(k, q)`` when f is the conformal factor, to also check the
    scalar curvature.
    """
    metric = isotropic_metric(h_fn, f_fn, n_dim, consts, frame)
    z = np.asarray(z, dtype=complex)
    r = principal_sqrt(np.sum(z[1:] ** 2))
    if r == 0:
        raise ZeroDivisionError("radial terms singular at r = 0")
    bundle = curvature_suite(metric, z, h, order)
    h3, f3 = h_fn(z[0]), f_fn(r)
    ref = einstein_closed_form(h3, f3, z, n_dim, consts)
    num = bundle.einstein_mixed
    scale = max(float(np.max(np.abs(ref))), REL_FLOOR)
    mixed = float(max(np.max(np.abs(num[0, 1:])), np.max(np.abs(num[1:, 0])))) / scale
    scalar = None
    if kq is not None:
        scalar = _rel(bundle.scalar_R, scalar_curvature_closed_form(h3, n_dim, consts, *kq))
    return IsotropicReport(_rel(num[0, 0], ref[0, 0]), _rel(num[1:, 1:], ref[1:, 1:]), mixed,
                           scalar, bundle)
