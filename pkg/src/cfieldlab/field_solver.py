"""Unified semilinear field equation on rotated rays, evolved on periodic grids.

Second order (phi, pi = d_t phi):

    -(P / c^2) (d_t^2 + n a'/a d_t + (m c^2 e^{i w0} / hbar)^2) phi
        + |a|^-2 lap phi - V0'(phi) = 0

First order (carrier phase removed):

    +-i C0 d_t u + (1/P) (|a|^-2 lap u - V0'(u w) / w) = 0

with P = e^{2i(theta + w1)} / e^{2i w0} and C0 = 2 m e^{i w0} / hbar.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .cosmology import BigRipError, ScaleModel, WeightModel, big_rip_time, scale_eval, weight_eval
from .frame import PhysicalConstants, RotationFrame, principal_arg
from .grid import Grid


class InstabilityError(RuntimeError):
    pass


PRESETS = ("kg", "schrodinger", "elliptic", "heat", "de_sitter_kg", "cgl", "custom")

# 4-point Gauss-Legendre on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
_GL_X, _GL_W = 0.5 * (_GL_X + 1), 0.5 * _GL_W


@dataclass
class NonlinearPotential:
    """Power nonlinearities.

    ``terms`` holds (lam, p) in the unrotated form, where the field equation
    carries + lam |phi|^(p-1) phi. ``v0_terms`` holds (lam0, p) entering
    directly as V0'(psi) = lam0 |psi|^(p-1) psi. The two are related by
    lam0 = -e^{2i(theta + w1)} lam.
    """

    terms: list = field(default_factory=list)
    v0_terms: list = field(default_factory=list)

    def __post_init__(self):
        self.terms = [(complex(l), float(p)) for l, p in self.terms]
        self.v0_terms = [(complex(l), float(p)) for l, p in self.v0_terms]
        for _, p in self.terms + self.v0_terms:
            if p < 1:
                raise ValueError(f"power p={p} below 1")

    def v0_coefficients(self, rotation: complex) -> list:
        return [(-rotation * l, p) for l, p in self.terms] + list(self.v0_terms)

    def admits_real_balance(self, rotation: complex, tol: float = 1e-12) -> bool:
        return all(abs(l.imag) <= tol * max(1.0, abs(l)) for l, _ in self.v0_coefficients(rotation))

    def dV0(self, psi: np.ndarray, rotation: complex) -> np.ndarray:
        out = np.zeros_like(psi, dtype=complex)
        mag = np.abs(psi)
        for l, p in self.v0_coefficients(rotation):
            if l == 0:
                continue
            out = out + l * (psi if p == 1 else mag ** (p - 1) * psi)
        return out

    def V0(self, psi: np.ndarray, rotation: complex) -> np.ndarray:
        out = np.zeros(np.shape(psi), dtype=complex)
        mag = np.abs(psi)
        for l, p in self.v0_coefficients(rotation):
            if l == 0:
                continue
            out = out + l * mag ** (p + 1) / (p + 1)
        return out


@dataclass
class FieldProblem:
    order: str
    frame: RotationFrame
    scale: ScaleModel
    potential: NonlinearPotential
    consts: PhysicalConstants
    sign: int = 1
    weight: Optional[WeightModel] = None
    preset: str = "custom"
    evolvable: bool = True
    integrator: str = "rk4"
    growth_limit: float = 1e6
    antidissipative: bool = False
    growth_allowance: float = 1e12  # replaces growth_limit for antidissipative runs
    theta: float = field(default=None)

    def __post_init__(self):
        if self.order not in ("first", "second"):
            raise ValueError(f"order must be 'first' or 'second', got {self.order!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.frame.n_dim not in (1, 2, 3):
            raise ValueError("n_dim must be 1, 2 or 3")
        if self.scale.n_dim != self.frame.n_dim:
            raise ValueError("scale and frame disagree on n_dim")
        if self.integrator not in ("rk4", "ifrk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.weight is None:
            self.weight = WeightModel(1.0, self.scale, self.sign)
        if self.weight.sign != self.sign:
            raise ValueError("weight phase sign and equation sign must match")
        if self.theta is None:
            self.theta = float(principal_arg(self.a_star(0.0)[0]))

    @property
    def n_dim(self) -> int:
        return self.frame.n_dim

    @property
    def rotation(self) -> complex:
        """e^{2i(theta + w1)}, the factor carried by the nonlinear term."""
        return complex(np.exp(2j * (self.theta + self.frame.omega1)))

    @property
    def phase_ratio(self) -> complex:
        """P = e^{2i(theta + w1)} / e^{2i w0}."""
        return complex(np.exp(2j * (self.theta + self.frame.omega1 - self.frame.omega0)))

    @property
    def C0(self) -> complex:
        return complex(2 * self.consts.m * np.exp(1j * self.frame.omega0) / self.consts.hbar)

    def z0(self, t: float) -> complex:
        return complex(np.exp(1j * self.frame.omega0) * t)

    def a_star(self, t: float) -> tuple[complex, complex]:
        """(a*(t), d a*/dt) on the time ray."""
        a, da, _ = scale_eval(self.scale, self.z0(t))
        return a, complex(np.exp(1j * self.frame.omega0)) * da

    def w_star(self, t: float) -> tuple[complex, complex]:
        """(w*(t), d w*/dt)."""
        a, dta = self.a_star(t)
        w, _ = weight_eval(self.weight, self.z0(t), self.consts)
        return w, -self.n_dim / 2 * dta / a * w

    def check_theta(self, t: float, tol: float = 1e-10):
        a = self.a_star(t)[0]
        if a == 0:
            raise BigRipError(f"a*({t}) = 0")
        drift = abs(np.angle(np.exp(1j * (principal_arg(a) - self.theta))))
        if drift > tol:
            raise ValueError(f"arg a*(t) drifted by {drift:.3e} from theta={self.theta} at t={t}")

    def linear_coefficient(self) -> complex:
        """mu with d_t u = mu |a|^-2 lap u + ... for first-order problems."""
        return self.sign * 1j / (self.phase_ratio * self.C0)


@dataclass
class FieldState:
    t: float
    phi: np.ndarray
    grid: Grid
    pi: Optional[np.ndarray] = None

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=complex)
        if self.phi.shape != self.grid.shape:
            raise ValueError(f"field shape {self.phi.shape} != grid {self.grid.shape}")
        if self.pi is not None:
            self.pi = np.asarray(self.pi, dtype=complex)
            if self.pi.shape != self.phi.shape:
                raise ValueError("phi and pi grids differ in shape")

    def check_finite(self):
        if not np.all(np.isfinite(self.phi)) or (self.pi is not None and not np.all(np.isfinite(self.pi))):
            raise FloatingPointError(f"non-finite field at t={self.t}")

    def copy(self, **changes) -> "FieldState":
        base = dict(t=self.t, phi=self.phi.copy(), grid=self.grid,
                    pi=None if self.pi is None else self.pi.copy())
        base.update(changes)
        return FieldState(**base)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

OVERRIDE_KEYS = {"c", "m", "hbar", "G_newton", "Lambda", "n_dim", "lam", "lam0", "p", "terms",
                  "v0_terms", "H", "omega0", "omega1", "sign", "sigma", "a0", "da0", "b0",
                  "lambda1", "lambda2", "order", "evolve", "growth_limit", "integrator"}


def _potential_from(ov: dict, default_p: float = 3.0) -> NonlinearPotential:
    terms = list(ov.get("terms", []))
    v0_terms = list(ov.get("v0_terms", []))
    p = ov.get("p", default_p)
    if "lam" in ov:
        terms.append((ov["lam"], p))
    if "lam0" in ov:
        v0_terms.append((ov["lam0"], p))
    return NonlinearPotential(terms, v0_terms)


def cgl_coefficients(problem: FieldProblem) -> tuple[complex, complex, complex]:
    """(gamma, lambda1, lambda2) of u_t - gamma lap u - lambda1 u + lambda2 |u|^2 u = 0.

    Valid for a constant unit scale, theta = w0 = 0 and p in {1, 3}.
    """
    mu = problem.linear_coefficient()
    rot = problem.rotation
    lam1 = lam2 = 0j
    for l0, p in problem.potential.v0_coefficients(rot):
        # d_t u gets -mu * l0 |u|^(p-1) u
        if p == 1:
            lam1 += -mu * l0
        elif p == 3:
            lam2 += mu * l0
        else:
            raise ValueError(f"power {p} has no CGL counterpart")
    return mu, lam1, lam2


def build_problem(preset: str, overrides: Optional[dict] = None) -> FieldProblem:
    """Assemble a FieldProblem from a named preset plus parameter overrides."""
    ov = dict(overrides or {})
    unknown = set(ov) - OVERRIDE_KEYS
    if unknown:
        raise KeyError(f"unknown override keys: {sorted(unknown)}")
    if preset not in PRESETS:
        raise KeyError(f"unknown preset {preset!r}; choose from {PRESETS}")
    consts = PhysicalConstants(c=ov.get("c", 1.0), m=ov.get("m", 1.0), hbar=ov.get("hbar", 1.0),
                               G_newton=ov.get("G_newton", 1.0), Lambda=ov.get("Lambda", 0.0))
    n = int(ov.get("n_dim", 1))
    sign = int(ov.get("sign", 1))
    growth = float(ov.get("growth_limit", 1e6))
    const_scale = ScaleModel.constant(n, ov.get("a0", 1.0))

    def fixed(name, expected):
        if name in ov and ov[name] != expected:
            raise ValueError(f"preset {preset!r} fixes {name}={expected}, got {ov[name]}")

    if preset in ("kg", "schrodinger", "elliptic", "de_sitter_kg", "heat"):
        fixed("omega0", 0.0)
    if preset == "elliptic" and ov.get("evolve", False):
        raise ValueError("the elliptic preset is ill-posed as an initial value problem; "
                         "it is verified by manufactured residuals only")

    if preset == "kg":
        fixed("omega1", 0.0)
        return FieldProblem("second", RotationFrame(0.0, 0.0, n), const_scale, _potential_from(ov),
                            consts, sign, preset=preset, growth_limit=growth)
    if preset == "schrodinger":
        fixed("omega1", 0.0)
        return FieldProblem("first", RotationFrame(0.0, 0.0, n), const_scale, _potential_from(ov),
                            consts, sign, WeightModel(ov.get("b0", 1.0), const_scale, sign),
                            preset=preset, growth_limit=growth)
    if preset == "elliptic":
        fixed("omega1", math.pi / 2)
        return FieldProblem("second", RotationFrame(0.0, math.pi / 2, n), const_scale,
                            _potential_from(ov), consts, sign, preset=preset, evolvable=False)
    if preset == "heat":
        fixed("omega1", math.pi / 4)
        fixed("sign", 1)
        return FieldProblem("first", RotationFrame(0.0, math.pi / 4, n), const_scale,
                            _potential_from(ov), consts, 1, WeightModel(ov.get("b0", 1.0), const_scale, 1),
                            preset=preset, integrator="ifrk4", growth_limit=growth)
    if preset == "de_sitter_kg":
        fixed("omega1", 0.0)
        H = float(ov.get("H", 0.5))
        return FieldProblem("second", RotationFrame(0.0, 0.0, n), ScaleModel.de_sitter(n, H),
                            _potential_from(ov), consts, sign, preset=preset,
                            antidissipative=H < 0, growth_limit=growth)
    if preset == "cgl":
        w1 = float(ov.get("omega1", math.pi / 4))
        fixed("omega0", 0.0)
        frame = RotationFrame(0.0, w1, n)
        gamma = sign * 1j * consts.hbar / (2 * consts.m * np.exp(2j * w1))
        if gamma.real <= 0:
            raise ValueError(f"CGL needs Re(gamma) > 0, got gamma={gamma}")
        lam1 = complex(ov.get("lambda1", 0.5))
        lam2 = complex(ov.get("lambda2", 1.0))
        if lam1.imag != 0 or lam1.real < 0:
            raise ValueError("CGL needs real lambda1 >= 0")
        if lam2.real <= 0:
            raise ValueError("CGL needs Re(lambda2) > 0")
        # with theta = w0 = 0: d_t u = gamma (lap u + e^{2i w1} sum lam_j |u|^(p-1) u)
        rot = np.exp(2j * w1)
        terms = [(lam1 / (gamma * rot), 1.0), (-lam2 / (gamma * rot), 3.0)]
        return FieldProblem("first", frame, const_scale, NonlinearPotential(terms), consts, sign,
                            WeightModel(1.0, const_scale, sign), preset=preset, integrator="ifrk4",
                            growth_limit=growth)

    # custom
    frame = RotationFrame(float(ov.get("omega0", 0.0)), float(ov.get("omega1", 0.0)), n)
    if "H" in ov:
        scale = ScaleModel.de_sitter(n, float(ov["H"]))
    elif "da0" in ov or "sigma" in ov:
        scale = ScaleModel.power_law(n, float(ov.get("sigma", 0.0)), ov.get("a0", 1.0), ov.get("da0", 0.0))
    else:
        scale = const_scale
    order = ov.get("order", "second")
    prob = FieldProblem(order, frame, scale, _potential_from(ov), consts, sign,
                        WeightModel(ov.get("b0", 1.0), scale, sign) if order == "first" else None,
                        preset="custom", evolvable=bool(ov.get("evolve", True)), growth_limit=growth)
    if "integrator" in ov:
        prob.integrator = ov["integrator"]
    elif order == "first" and prob.linear_coefficient().real < -1e-14:
        raise ValueError("linear part is anti-diffusive; the initial value problem is ill-posed")
    elif order == "first" and prob.linear_coefficient().real > 1e-14:
        prob.integrator = "ifrk4"
    if scale.da0 != 0 and complex(scale.da0).real < 0:
        prob.antidissipative = True
    return prob


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

def rhs_second_order(problem: FieldProblem, state: FieldState) -> tuple[np.ndarray, np.ndarray]:
    """(d_t phi, d_t pi) for the second-order equation."""
    if problem.order != "second":
        raise ValueError("rhs_second_order needs a second-order problem")
    if state.pi is None:
        raise ValueError("second-order state needs pi")
    P = problem.phase_ratio
    if P == 0:
        raise ZeroDivisionError("phase ratio vanishes")
    a, dta = problem.a_star(state.t)
    if a == 0:
        raise BigRipError(f"a*({state.t}) = 0")
    c = problem.consts.c
    mass = (problem.consts.m * c**2 * np.exp(1j * problem.frame.omega0) / problem.consts.hbar) ** 2
    lap = state.grid.laplacian(state.phi)
    spatial = lap / abs(a) ** 2 - problem.potential.dV0(state.phi, problem.rotation)
    dpi = -(problem.n_dim * dta / a) * state.pi - mass * state.phi + (c**2 / P) * spatial
    return state.pi, dpi


def _first_order_nonlinear(problem: FieldProblem, t: float, u: np.ndarray) -> np.ndarray:
    w, _ = problem.w_star(t)
    if w == 0:
        raise ZeroDivisionError("weight vanishes")
    return -problem.linear_coefficient() * problem.potential.dV0(u * w, problem.rotation) / w


def rhs_first_order(problem: FieldProblem, state: FieldState) -> np.ndarray:
    """d_t u for the first-order equation."""
    if problem.order != "first":
        raise ValueError("rhs_first_order needs a first-order problem")
    if problem.consts.m == 0:
        raise ZeroDivisionError("m = 0 makes C0 vanish")
    a, _ = problem.a_star(state.t)
    if a == 0:
        raise BigRipError(f"a*({state.t}) = 0")
    lin = problem.linear_coefficient() * state.grid.laplacian(state.phi) / abs(a) ** 2
    return lin + _first_order_nonlinear(problem, state.t, state.phi)


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------

def _rk4_second(problem, state, dt):
    t, phi, pi, g = state.t, state.phi, state.pi, state.grid

    def f(tt, ph, pp):
        return rhs_second_order(problem, FieldState(tt, ph, g, pp))

    k1 = f(t, phi, pi)
    k2 = f(t + dt / 2, phi + dt / 2 * k1[0], pi + dt / 2 * k1[1])
    k3 = f(t + dt / 2, phi + dt / 2 * k2[0], pi + dt / 2 * k2[1])
    k4 = f(t + dt, phi + dt * k3[0], pi + dt * k3[1])
    return FieldState(t + dt,
                      phi + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                      g,
                      pi + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))


def _rk4_first(problem, state, dt):
    t, u, g = state.t, state.phi, state.grid

    def f(tt, uu):
        return rhs_first_order(problem, FieldState(tt, uu, g))

    k1 = f(t, u)
    k2 = f(t + dt / 2, u + dt / 2 * k1)
    k3 = f(t + dt / 2, u + dt / 2 * k2)
    k4 = f(t + dt, u + dt * k3)
    return FieldState(t + dt, u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4), g)


def inverse_scale_integral(problem: FieldProblem, t0: float, t1: float) -> float:
    """int_{t0}^{t1} |a*(s)|^-2 ds by 4-point Gauss-Legendre (exact for constant a)."""
    if problem.scale.is_constant:
        return (t1 - t0) / abs(problem.scale.a0) ** 2
    s = t0 + (t1 - t0) * _GL_X
    return float((t1 - t0) * sum(w / abs(problem.a_star(si)[0]) ** 2 for w, si in zip(_GL_W, s)))


def _ifrk4_first(problem, state, dt):
    """Lawson RK4: the diagonal linear part is propagated exactly in Fourier space."""
    t, g = state.t, state.grid
    mu = problem.linear_coefficient()
    k2 = g.k2

    def prop(ta, tb):
        return np.exp(-mu * k2 * inverse_scale_integral(problem, ta, tb))

    def N(tt, uh):
        return np.fft.fftn(_first_order_nonlinear(problem, tt, np.fft.ifftn(uh)))

    th = t + dt / 2
    E_half_a, E_half_b, E_full = prop(t, th), prop(th, t + dt), prop(t, t + dt)
    u0 = np.fft.fftn(state.phi)
    k1 = N(t, u0)
    k2_ = N(th, E_half_a * (u0 + dt / 2 * k1))
    k3 = N(th, E_half_a * u0 + dt / 2 * k2_)
    k4 = N(t + dt, E_full * u0 + dt * E_half_b * k3)
    u1 = E_full * (u0 + dt / 6 * k1) + dt / 3 * E_half_b * (k2_ + k3) + dt / 6 * k4
    return FieldState(t + dt, np.fft.ifftn(u1), g)


def step(problem: FieldProblem, state: FieldState, dt: float) -> FieldState:
    if problem.order == "second":
        return _rk4_second(problem, state, dt)
    if problem.integrator == "ifrk4":
        return _ifrk4_first(problem, state, dt)
    return _rk4_first(problem, state, dt)


def _norm_max(state):
    m = float(np.max(np.abs(state.phi)))
    if state.pi is not None:
        m = max(m, float(np.max(np.abs(state.pi))))
    return m


def evolve(problem: FieldProblem, state0: FieldState, dt: float, T: float,
           observers: Optional[dict] = None, stride: int = 1):
    """Advance ``state0`` to t0 + T in uniform steps of about ``dt``.

    The step is adjusted to T / round(T / dt) so the run lands on T.
    ``observers`` maps names to ``fn(problem, state)``; each is called at
    the start, every ``stride`` steps and at the end. Returns the final
    state and a dict of observer outputs (lists, one entry per call).
    """
    if not problem.evolvable:
        raise ValueError(f"preset {problem.preset!r} is not evolvable")
    if dt <= 0 or T <= 0:
        raise ValueError("dt and T must be positive")
    if problem.order == "second" and state0.pi is None:
        raise ValueError("second-order evolution needs an initial pi")
    if problem.frame.omega0 == 0:
        rip = big_rip_time(problem.scale)
        if rip is not None and state0.t <= rip <= state0.t + T:
            raise BigRipError(f"scale blows up at t={rip} inside the run")
    n_steps = max(1, int(round(T / dt)))
    h = T / n_steps
    observers = observers or {}
    records = {name: [] for name in observers}

    def observe(st):
        for name, fn in observers.items():
            records[name].append(fn(problem, st))

    state = state0.copy()
    state.check_finite()
    problem.check_theta(state.t)
    ref = _norm_max(state)
    observe(state)
    for i in range(1, n_steps + 1):
        state = step(problem, state, h)
        state.t = state0.t + i * h
        state.check_finite()
        problem.check_theta(state.t)
        if ref > 0:
            growth = _norm_max(state) / ref
            limit = problem.growth_allowance if problem.antidissipative else problem.growth_limit
            if growth > limit:
                raise InstabilityError(f"field grew by {growth:.3e} at t={state.t}")
        if i % stride == 0 or i == n_steps:
            observe(state)
    return state, records


# ---------------------------------------------------------------------------
# manufactured solutions
# ---------------------------------------------------------------------------

@dataclass
class ManufacturedField:
    """Closed-form field on a grid: callables of (t, coords) -> array.

    ``source`` is the analytic residual the exact field leaves in the
    equation (zero for exact solutions).
    """

    phi: Callable
    dphi: Callable
    ddphi: Optional[Callable] = None
    source: Optional[Callable] = None


def manufactured_residual(problem: FieldProblem, field_: ManufacturedField, sample_times, grid: Grid) -> np.ndarray:
    """Max deviation of the discrete operator from the analytic residual per sample time.

    Normalized by max(1, max |highest time derivative|).
    """
    X = grid.coords()
    out = []
    for t in sample_times:
        phi = field_.phi(t, X) * np.ones(grid.shape)
        dphi = field_.dphi(t, X) * np.ones(grid.shape)
        src = 0.0 if field_.source is None else field_.source(t, X)
        if problem.order == "second":
            if field_.ddphi is None:
                raise ValueError("second-order check needs ddphi")
            dd = field_.ddphi(t, X) * np.ones(grid.shape)
            _, rhs = rhs_second_order(problem, FieldState(t, phi, grid, dphi))
            top = dd
        else:
            rhs = rhs_first_order(problem, FieldState(t, phi, grid))
            top = dphi
        dev = np.max(np.abs(top - rhs - src))
        out.append(float(dev / max(1.0, float(np.max(np.abs(top))))))
    return np.array(out)


def carrier_frequency(problem: FieldProblem, k2) -> np.ndarray:
    """Linear dispersion omega(k) = sqrt(c^2 k^2 + m^2 c^4 / hbar^2) of the unit-scale KG."""
    c, m, hb = problem.consts.c, problem.consts.m, problem.consts.hbar
    return np.sqrt(c**2 * np.asarray(k2) + (m * c**2 / hb) ** 2)


def positive_frequency_velocity(problem: FieldProblem, grid: Grid, phi: np.ndarray) -> np.ndarray:
    """pi with every Fourier mode rotating as exp(-i omega(k) t)."""
    return np.fft.ifftn(-1j * carrier_frequency(problem, grid.k2) * np.fft.fftn(phi))
