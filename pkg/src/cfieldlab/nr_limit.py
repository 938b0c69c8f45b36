"""Carrier-phase transform between the two field equations and the c -> oo study.

phi = u b with b = w exp(-+ i m c^2 z0 / hbar); the sign is the one of the
first-order equation, so the two choices stay locked together.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cosmology import ScaleModel, weight_eval, weight_log_derivative
from .field_solver import FieldProblem, FieldState, NonlinearPotential, evolve, rhs_first_order
from .frame import PhysicalConstants, RotationFrame
from .grid import Grid, plane_wave


def _carrier(problem: FieldProblem, t: float) -> tuple[complex, complex]:
    """(b, d_t b) on the time ray of ``problem``."""
    z0 = problem.z0(t)
    _, b = weight_eval(problem.weight, z0, problem.consts)
    if b == 0:
        raise ZeroDivisionError(f"weight vanishes at t={t}")
    c, m, hb = problem.consts.c, problem.consts.m, problem.consts.hbar
    e0 = complex(np.exp(1j * problem.frame.omega0))
    dlog = weight_log_derivative(problem.weight, z0) - problem.sign * 1j * m * c**2 / hb
    return b, e0 * dlog * b


def phase_transform(state: FieldState, problem: FieldProblem, direction: str) -> FieldState:
    """Map between u (first-order problem) and (phi, pi) (second-order data).

    ``problem`` is the first-order problem that fixes the weight, the sign
    and the constants. to_phi builds well-prepared data: d_t u is taken from
    the first-order equation so the u-equation holds exactly at t.
    """
    if problem.order != "first":
        raise ValueError("phase_transform needs the first-order problem")
    b, db = _carrier(problem, state.t)
    if direction == "to_phi":
        du = rhs_first_order(problem, state)
        return FieldState(state.t, state.phi * b, state.grid, du * b + state.phi * db)
    if direction == "to_u":
        return FieldState(state.t, state.phi / b, state.grid)
    raise ValueError(f"direction must be 'to_phi' or 'to_u', got {direction!r}")


@dataclass
class LimitStudyConfig:
    c_values: tuple
    T: float = 0.1
    m: float = 1.0
    hbar: float = 1.0
    lam: complex = 0.0
    p: float = 3.0
    sign: int = 1
    n_dim: int = 1
    points: int = 16
    extent: float = 2 * math.pi
    mode: tuple = (4,)
    amplitude: complex = 1.0
    initial: Optional[Callable] = None  # grid -> u0, overrides the single mode
    dt: Optional[float] = None
    resolution: float = 20.0
    reference_dt: float = 1e-3  # the first-order run carries no carrier phase

    def __post_init__(self):
        self.c_values = tuple(float(c) for c in self.c_values)
        if len(self.c_values) < 2:
            raise ValueError("need at least two c values")
        if any(c <= 0 for c in self.c_values) or any(b <= a for a, b in zip(self.c_values, self.c_values[1:])):
            raise ValueError("c_values must be positive and strictly increasing")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def carrier_period(self) -> float:
        """hbar / (m c_max^2), the fastest time scale of the study."""
        return self.hbar / (self.m * self.c_values[-1] ** 2)

    def step(self) -> float:
        limit = self.carrier_period / self.resolution
        if self.dt is None:
            return limit
        if self.dt > limit * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} does not resolve the carrier; need dt <= {limit:.3e}")
        return self.dt


@dataclass
class LimitStudyResult:
    rows: list = field(default_factory=list)  # (c, error, observed_order)
    dt: float = 0.0

    @property
    def errors(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def strictly_decreasing(self) -> bool:
        e = self.errors
        return bool(np.all(np.diff(e) < 0))


def _problems(cfg: LimitStudyConfig, c: float) -> tuple[FieldProblem, FieldProblem]:
    consts = PhysicalConstants(c=c, m=cfg.m, hbar=cfg.hbar)
    frame = RotationFrame(0.0, 0.0, cfg.n_dim)
    scale = ScaleModel.constant(cfg.n_dim)
    pot = NonlinearPotential([(cfg.lam, cfg.p)] if cfg.lam != 0 else [])
    second = FieldProblem("second", frame, scale, pot, consts, cfg.sign, preset="custom")
    first = FieldProblem("first", frame, scale, pot, consts, cfg.sign, preset="custom")
    return second, first


def limit_study(cfg: LimitStudyConfig) -> LimitStudyResult:
    """Relative L2 distance between the two equations' u(T) for each c."""
    dt = cfg.step()
    grid = Grid.uniform(cfg.n_dim, cfg.points, cfg.extent)
    u0 = cfg.initial(grid) if cfg.initial is not None else plane_wave(grid, cfg.mode, cfg.amplitude)
    result = LimitStudyResult(dt=dt)
    prev = None
    for c in cfg.c_values:
        second, first = _problems(cfg, c)
        start = FieldState(0.0, u0, grid)
        ref, _ = evolve(first, start, cfg.reference_dt, cfg.T)
        kg, _ = evolve(second, phase_transform(start, first, "to_phi"), dt, cfg.T)
        u_kg = phase_transform(kg, first, "to_u").phi
        denom = grid.l2_norm(ref.phi)
        diff = grid.l2_norm(u_kg - ref.phi)
        err = 0.0 if diff == 0 else diff / denom
        order = math.nan
        if prev is not None and prev[1] > 0 and err > 0:
            order = math.log(prev[1] / err) / math.log(c / prev[0])
        result.rows.append((c, err, order))
        prev = (c, err)
    return result


def dispersion_gap(c: float, k2: float, m: float = 1.0, hbar: float = 1.0) -> float:
    """(omega(k) - m c^2/hbar) - hbar k^2 / 2m, the frequency the NR equation misses."""
    rest = m * c**2 / hbar
    # difference of square roots without cancellation
    shift = c**2 * k2 / (math.sqrt(c**2 * k2 + rest**2) + rest)
    return shift - hbar * k2 / (2 * m)
