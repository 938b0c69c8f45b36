"""Particle dynamics in local time x0 on rotated rays, and proper-time geodesics.

Lagrangian L = -m c^2 J^{1/2} - U with J = 1 - g_jk v^j v^k / c^2 and
v^j = dz^j/dz0. The evolved variables are the spatial position x (real
parameter along the w1 ray, z^j = e^{i w1} x^j) and the contravariant
momentum p^j = m v^j / J^{1/2}. With K = m^2 c^2 + g_jk p^j p^k:

    J = m^2 c^2 / K,  v^j = c p^j / K^{1/2},  H = c K^{1/2} + U,
    g_jk dp^k/dz0 = -d_j U - (dg_jk/dz0) p^k + (J^{1/2} / 2m) p^l p^m d_j g_lm,

where dg_jk/dz0 is the derivative along the trajectory. Along solutions
dH/dz0 = -H_R with H_R = -d_0 U + (c / 2K^{1/2}) p^j (d_0 g_jk) p^k.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .cosmology import BigRipError, ScaleModel, scale_eval
from .frame import BranchError
from .tensor_kit import MetricDescription, SingularMetricError, christoffel

REAL_TOL = 1e-10


class SuperluminalError(ArithmeticError):
    """J <= 0: the momentum left the timelike region."""


def _zero_potential(z0, z):
    return 0.0, 0.0, np.zeros(len(z), dtype=complex)


@dataclass(frozen=True)
class GeodesicScenario:
    """Metric a(z0)^2 delta_jk unless ``metric`` overrides it.

    ``potential(z0, z)`` returns (U, dU/dz0, grad_z U). ``metric(z0, z)``
    returns (g_jk, d_0 g_jk, d_j g_lm stacked on j). The ray angles are
    plain floats: the sign table uses w1 in {0, pi/2, pi, -pi/2}.
    """

    n_dim: int = 1
    scale: Optional[ScaleModel] = None
    potential: Callable = _zero_potential
    omega0: float = 0.0
    omega1: float = 0.0
    m: float = 1.0
    c: float = 1.0
    metric: Optional[Callable] = None

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("m must be positive (null trajectories are out of scope)")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.scale is None and self.metric is None:
            object.__setattr__(self, "scale", ScaleModel.constant(self.n_dim))
        if self.scale is not None and self.scale.n_dim != self.n_dim:
            raise ValueError("scale and scenario disagree on n_dim")

    def z0(self, t):
        return cmath.exp(1j * self.omega0) * t

    def z(self, x):
        return cmath.exp(1j * self.omega1) * np.asarray(x, dtype=complex)

    def metric_at(self, t, x):
        z0, z = self.z0(t), self.z(x)
        if self.metric is not None:
            g, dg0, dgs = self.metric(z0, z)
            return np.asarray(g, complex), np.asarray(dg0, complex), np.asarray(dgs, complex)
        a, da, _ = scale_eval(self.scale, z0)
        if a == 0:
            raise BigRipError(f"a = 0 at t={t}")
        eye = np.eye(self.n_dim)
        return a * a * eye, 2 * a * da * eye, np.zeros((self.n_dim,) * 3, dtype=complex)


@dataclass
class GeodesicState:
    t: float
    x: np.ndarray
    p_up: np.ndarray
    H: complex = 0j
    hr_accum: complex = 0j
    hr: complex = 0j
    sqrt_k: Optional[complex] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=complex)
        self.p_up = np.asarray(self.p_up, dtype=complex)
        if self.x.shape != self.p_up.shape or self.x.ndim != 1:
            raise ValueError("x and p_up must be matching 1-d arrays")


def _sqrt_k(K: complex, prev: Optional[complex]) -> complex:
    if K == 0:
        raise SuperluminalError("K = 0 (J undefined)")
    s = cmath.sqrt(K)
    if prev is not None and abs(s + prev) < abs(s - prev):
        raise BranchError(f"K^(1/2) jumped sheets: {prev} -> {s}")
    return s


def _check_j(K: complex, m: float, c: float):
    J = m * m * c * c / K
    if abs(J.imag) <= REAL_TOL * abs(J) and J.real <= 0:
        raise SuperluminalError(f"J = {J} <= 0")
    return J


def k_value(scenario: GeodesicScenario, t, x, p) -> complex:
    g, _, _ = scenario.metric_at(t, x)
    return complex(scenario.m**2 * scenario.c**2 + p @ g @ p)


def hamiltonian_eval(state: GeodesicState, scenario: GeodesicScenario) -> complex:
    """c K^{1/2} + U, with the branch of K^{1/2} continued from the state."""
    K = k_value(scenario, state.t, state.x, state.p_up)
    _check_j(K, scenario.m, scenario.c)
    U = scenario.potential(scenario.z0(state.t), scenario.z(state.x))[0]
    return complex(scenario.c * _sqrt_k(K, state.sqrt_k) + U)


def hr_eval(state: GeodesicState, scenario: GeodesicScenario, gradient_term: bool = False) -> complex:
    """H_R = -d_0 U + (c / 2K^{1/2}) p (d_0 g) p.

    ``gradient_term`` adds -(c^2 / 2K) p^j p^l p^m d_j g_lm. That term does
    not belong to the rate of change of H (it breaks H + int H_R = H(0) for
    static, spatially varying metrics); it is kept only for comparison.
    """
    p = state.p_up
    g, dg0, dgs = scenario.metric_at(state.t, state.x)
    K = complex(scenario.m**2 * scenario.c**2 + p @ g @ p)
    sk = _sqrt_k(K, state.sqrt_k)
    dU0 = scenario.potential(scenario.z0(state.t), scenario.z(state.x))[1]
    out = -dU0 + scenario.c / (2 * sk) * (p @ dg0 @ p)
    if gradient_term:
        out -= scenario.c**2 / (2 * K) * np.einsum("j,l,m,jlm->", p, p, p, dgs)
    return complex(out)


def _rhs(scenario: GeodesicScenario, t, x, p):
    """(dx/dt, dp/dt) in the real time parameter t (z0 = e^{i w0} t)."""
    m, c = scenario.m, scenario.c
    g, dg0, dgs = scenario.metric_at(t, x)
    K = complex(m * m * c * c + p @ g @ p)
    _check_j(K, m, c)
    sk = cmath.sqrt(K)
    v = c * p / sk  # dz/dz0
    _, _, gradU = scenario.potential(scenario.z0(t), scenario.z(x))
    dg_total = dg0 + np.einsum("l,ljk->jk", v, dgs)
    force = -np.asarray(gradU) - dg_total @ p + (c / sk) / 2 * np.einsum("l,m,jlm->j", p, p, dgs)
    dp_dz0 = np.linalg.solve(g, force)
    e0 = cmath.exp(1j * scenario.omega0)
    e1 = cmath.exp(-1j * scenario.omega1)
    return e0 * e1 * v, e0 * dp_dz0


def initial_state(scenario: GeodesicScenario, x, p_up, t: float = 0.0) -> GeodesicState:
    st = GeodesicState(t, x, p_up)
    K = k_value(scenario, t, st.x, st.p_up)
    _check_j(K, scenario.m, scenario.c)
    st.sqrt_k = cmath.sqrt(K)
    st.H = hamiltonian_eval(st, scenario)
    st.hr = hr_eval(st, scenario)
    return st


def geodesic_step(state: GeodesicState, scenario: GeodesicScenario, dt: float) -> GeodesicState:
    """One RK4 step of (x, p); int H_R dz0 is accumulated by the trapezoid rule."""
    t, x, p = state.t, state.x, state.p_up
    k1 = _rhs(scenario, t, x, p)
    k2 = _rhs(scenario, t + dt / 2, x + dt / 2 * k1[0], p + dt / 2 * k1[1])
    k3 = _rhs(scenario, t + dt / 2, x + dt / 2 * k2[0], p + dt / 2 * k2[1])
    k4 = _rhs(scenario, t + dt, x + dt * k3[0], p + dt * k3[1])
    new = GeodesicState(t + dt,
                        x + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                        p + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
                        sqrt_k=state.sqrt_k)
    K = k_value(scenario, new.t, new.x, new.p_up)
    _check_j(K, scenario.m, scenario.c)
    new.sqrt_k = _sqrt_k(K, state.sqrt_k)
    new.H = hamiltonian_eval(new, scenario)
    new.hr = hr_eval(new, scenario)
    new.hr_accum = state.hr_accum + cmath.exp(1j * scenario.omega0) * dt * (state.hr + new.hr) / 2
    return new


def integrate(scenario: GeodesicScenario, state0: GeodesicState, dt: float, n_steps: int,
              stride: int = 1) -> list:
    """Trajectory as a list of states (start, every ``stride`` steps, end)."""
    traj = [state0]
    st = state0
    for i in range(1, n_steps + 1):
        st = geodesic_step(st, scenario, dt)
        if i % stride == 0 or i == n_steps:
            traj.append(st)
    return traj


def conservation_audit(trajectory) -> float:
    """max_t |H(t) + int_0^t H_R - H(0)| / |H(0)|."""
    H0 = trajectory[0].H
    norm = abs(H0) if H0 != 0 else 1.0
    return max(abs(s.H + s.hr_accum - H0) for s in trajectory) / norm


def kinetic_hr_sign(state: GeodesicState, scenario: GeodesicScenario) -> int:
    """Sign of the real kinetic part of H_R on a real slice (0 if it vanishes)."""
    val = hr_eval(state, scenario) + scenario.potential(scenario.z0(state.t), scenario.z(state.x))[1]
    if abs(val.imag) > REAL_TOL * max(1.0, abs(val)):
        raise ValueError(f"kinetic H_R {val} is not real")
    return int(np.sign(val.real)) if abs(val.real) > 1e-300 else 0


def expected_hr_sign(omega0: float, omega1: float, da_dx0: float) -> int:
    """Sign of e^{2i(w1 - w0)} e^{-i w0} da/dx0 for the real-slice cases."""
    f = cmath.exp(2j * (omega1 - omega0)) * cmath.exp(-1j * omega0) * da_dx0
    if abs(f.imag) > REAL_TOL * max(1.0, abs(f)):
        raise ValueError("not a real slice")
    return int(np.sign(round(f.real, 12)))


# ---------------------------------------------------------------------------
# proper time
# ---------------------------------------------------------------------------

@dataclass
class ProperTimeResult:
    tau: np.ndarray
    z: np.ndarray
    v: np.ndarray
    J: np.ndarray
    H: np.ndarray
    normalization_drift: float = 0.0
    H_drift: float = 0.0


def proper_time_geodesic(metric: MetricDescription, z_init, v_init, tau_span: float, dt: float,
                         c: float = 1.0, m: float = 1.0, h: float = 1e-3, guard: float = 1e-6,
                         stride: int = 1) -> ProperTimeResult:
    """RK4 for z'' = -Gamma(z)[v, v] (U = 0) with numeric Christoffel symbols.

    Audits J = -v g v against c^2 (raises past ``guard``) and the proper-time
    Hamiltonian H = (mc/J^{1/2}) v g v + mc J^{1/2}, which stays at U = 0.
    """
    z = np.asarray(z_init, dtype=complex)
    v = np.asarray(v_init, dtype=complex)
    dim = metric.n_dim + 1
    if z.shape != (dim,) or v.shape != (dim,):
        raise ValueError(f"need {dim}-vectors for position and velocity")

    def J_of(zz, vv):
        return complex(-(vv @ metric.matrix(zz) @ vv))

    J0 = J_of(z, v)
    if abs(J0 - c * c) > guard * c * c:
        raise ValueError(f"initial velocity not normalized: J = {J0}, want {c * c}")

    def acc(zz, vv):
        gm = metric.diag(zz)
        if np.any(gm == 0):
            raise SingularMetricError(f"degenerate metric at {zz}")
        return -np.einsum("dab,a,b->d", christoffel(metric, zz, h, order=4), vv, vv)

    def ham(zz, vv):
        J = J_of(zz, vv)
        sj = cmath.sqrt(J)
        return m * c / sj * (-J) + m * c * sj

    n_steps = max(1, int(round(tau_span / dt)))
    hstep = tau_span / n_steps
    taus, zs, vs, Js, Hs = [0.0], [z.copy()], [v.copy()], [J0], [ham(z, v)]
    for i in range(1, n_steps + 1):
        a1 = acc(z, v)
        a2 = acc(z + hstep / 2 * v, v + hstep / 2 * a1)
        v2 = v + hstep / 2 * a1
        a3 = acc(z + hstep / 2 * v2, v + hstep / 2 * a2)
        v3 = v + hstep / 2 * a2
        a4 = acc(z + hstep * v3, v + hstep * a3)
        v4 = v + hstep * a3
        z = z + hstep / 6 * (v + 2 * v2 + 2 * v3 + v4)
        v = v + hstep / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        J = J_of(z, v)
        if abs(J - c * c) > guard * c * c:
            raise ArithmeticError(f"normalization lost at tau={i * hstep}: J = {J}")
        if i % stride == 0 or i == n_steps:
            taus.append(i * hstep)
            zs.append(z.copy())
            vs.append(v.copy())
            Js.append(J)
            Hs.append(ham(z, v))
    Js, Hs = np.array(Js), np.array(Hs)
    return ProperTimeResult(np.array(taus), np.array(zs), np.array(vs), Js, Hs,
                            float(np.max(np.abs(Js - c * c)) / (c * c)),
                            float(np.max(np.abs(Hs - Hs[0])) / (m * c * c)))
