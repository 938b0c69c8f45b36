"""Energy and charge balance laws for the unified field equations.

Three families, each a local law  d_t e0 + sum_j d_j e^j + e_sink = 0:

* ``kg``      second-order equation (energy)
* ``charge``  first-order equation, e0 = C0 |u|^2 (the law carries the +-
              sign of the equation on its time derivative)
* ``energy``  first-order equation, e0 = |grad u|^2 + 2 |a|^2/|w|^2 V0(uw)

Integrated over the periodic box the flux divergence drops out, leaving
int e0(t) + int_0^t int e_sink = int e0(0). Every density here is only
meaningful under the hypotheses checked in ``_require``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .field_solver import FieldProblem, FieldState, rhs_first_order, rhs_second_order

HYPOTHESIS_TOL = 1e-10
FAMILIES = ("kg", "charge", "energy")


class BalanceHypothesisError(ValueError):
    """The balance law does not hold for this problem."""


@dataclass
class Densities:
    density: np.ndarray
    fluxes: list
    sink: np.ndarray


def _is_real(z, tol=HYPOTHESIS_TOL):
    return abs(complex(z).imag) <= tol * max(1.0, abs(z))


def _require(problem: FieldProblem, family: str):
    if family == "kg":
        if problem.order != "second":
            raise BalanceHypothesisError("kg family needs the second-order equation")
        if not _is_real(problem.phase_ratio):
            raise BalanceHypothesisError(f"phase ratio {problem.phase_ratio} is not real")
    else:
        if problem.order != "first":
            raise BalanceHypothesisError(f"{family} family needs the first-order equation")
    if not _is_real(problem.C0):
        raise BalanceHypothesisError(f"C0 = {problem.C0} is not real")
    if not problem.potential.admits_real_balance(problem.rotation):
        raise BalanceHypothesisError("V0' has non-real coefficients; Im(conj(z) V0'(z)) != 0")


def _grad_sq(grid, f):
    return sum(np.abs(g) ** 2 for g in grid.gradient(f))


def kg_ledger(problem: FieldProblem, state: FieldState) -> Densities:
    _require(problem, "kg")
    g, phi, pi = state.grid, state.phi, state.pi
    if pi is None:
        raise ValueError("kg densities need pi")
    P = problem.phase_ratio.real
    c = problem.consts.c
    C0 = problem.C0.real
    a, dta = problem.a_star(state.t)
    inv_a2 = 1 / abs(a) ** 2
    grads = g.gradient(phi)
    gsq = sum(np.abs(d) ** 2 for d in grads)
    V0 = problem.potential.V0(phi, problem.rotation).real
    e0 = P / c**2 * (np.abs(pi) ** 2 + C0**2 * c**4 / 4 * np.abs(phi) ** 2) + inv_a2 * gsq + 2 * V0
    d_inv_a2 = -2 * (dta / a).real * inv_a2
    sink = P / c**2 * 2 * (problem.n_dim * dta / a).real * np.abs(pi) ** 2 - d_inv_a2 * gsq
    fluxes = [-inv_a2 * 2 * (np.conj(pi) * d).real for d in grads]
    return Densities(e0, fluxes, sink)


def nr_charge_ledger(problem: FieldProblem, state: FieldState) -> Densities:
    _require(problem, "charge")
    g, u = state.grid, state.phi
    P = problem.phase_ratio
    a, _ = problem.a_star(state.t)
    w, _ = problem.w_star(state.t)
    inv_a2 = 1 / abs(a) ** 2
    grads = g.gradient(u)
    gsq = sum(np.abs(d) ** 2 for d in grads)
    uw = u * w
    pot = (np.conj(uw) * problem.potential.dV0(uw, problem.rotation)).real / abs(w) ** 2
    e0 = problem.C0.real * np.abs(u) ** 2
    sink = 2 * P.imag * (inv_a2 * gsq + pot)
    fluxes = [2 * ((1 / P) * inv_a2 * np.conj(u) * d).imag for d in grads]
    return Densities(e0, fluxes, sink)


def nr_energy_ledger(problem: FieldProblem, state: FieldState, dudt: Optional[np.ndarray] = None) -> Densities:
    _require(problem, "energy")
    g, u = state.grid, state.phi
    n = problem.n_dim
    P = problem.phase_ratio
    a, dta = problem.a_star(state.t)
    w, _ = problem.w_star(state.t)
    if dudt is None:
        dudt = rhs_first_order(problem, state)
    grads = g.gradient(u)
    gsq = sum(np.abs(d) ** 2 for d in grads)
    uw = u * w
    V0 = problem.potential.V0(uw, problem.rotation).real
    zV = (np.conj(uw) * problem.potential.dV0(uw, problem.rotation)).real
    e0 = gsq + 2 * abs(a) ** 2 / abs(w) ** 2 * V0
    d_a2 = 2 * (np.conj(a) * dta).real
    sink = (problem.sign * 2 * problem.C0.real * P.imag * abs(a) ** 2 * np.abs(dudt) ** 2
            + n / (2 * abs(w) ** 2) * d_a2 * (zV - 2 * (n + 2) / n * V0))
    fluxes = [-2 * (np.conj(dudt) * d).real for d in grads]
    return Densities(e0, fluxes, sink)


def densities(problem: FieldProblem, state: FieldState, family: str) -> Densities:
    if family == "kg":
        return kg_ledger(problem, state)
    if family == "charge":
        return nr_charge_ledger(problem, state)
    if family == "energy":
        return nr_energy_ledger(problem, state)
    raise ValueError(f"unknown family {family!r}")


def default_family(problem: FieldProblem) -> str:
    return "kg" if problem.order == "second" else "charge"


def time_orientation(problem: FieldProblem, family: str) -> int:
    """Sign multiplying d_t e0 in the local law (the +- of the first-order equation for charge)."""
    return problem.sign if family == "charge" else 1


def density_rate(problem: FieldProblem, state: FieldState, family: str) -> np.ndarray:
    """d_t e0 by the chain rule, using the equation for the time derivatives."""
    g = state.grid
    rot = problem.rotation
    a, dta = problem.a_star(state.t)
    if family == "kg":
        phi, pi = state.phi, state.pi
        _, dpi = rhs_second_order(problem, state)
        P, c, C0 = problem.phase_ratio.real, problem.consts.c, problem.C0.real
        inv_a2 = 1 / abs(a) ** 2
        d_inv_a2 = -2 * (dta / a).real * inv_a2
        grads, dgrads = g.gradient(phi), g.gradient(pi)
        return (P / c**2 * (2 * (np.conj(pi) * dpi).real + C0**2 * c**4 / 4 * 2 * (np.conj(phi) * pi).real)
                + d_inv_a2 * sum(np.abs(d) ** 2 for d in grads)
                + 2 * inv_a2 * sum((np.conj(d) * dd).real for d, dd in zip(grads, dgrads))
                + 2 * (np.conj(pi) * problem.potential.dV0(phi, rot)).real)
    u = state.phi
    dudt = rhs_first_order(problem, state)
    if family == "charge":
        return problem.C0.real * 2 * (np.conj(u) * dudt).real
    w, dw = problem.w_star(state.t)
    uw = u * w
    duw = dudt * w + u * dw
    grads, dgrads = g.gradient(u), g.gradient(dudt)
    ratio = abs(a) ** 2 / abs(w) ** 2
    d_ratio = 2 * (np.conj(a) * dta).real / abs(w) ** 2 - abs(a) ** 2 * 2 * (np.conj(w) * dw).real / abs(w) ** 4
    V0 = problem.potential.V0(uw, rot).real
    return (2 * sum((np.conj(d) * dd).real for d, dd in zip(grads, dgrads))
            + d_ratio * 2 * V0 + ratio * 2 * (np.conj(duw) * problem.potential.dV0(uw, rot)).real)


def divergence_residual(problem: FieldProblem, state: FieldState, family: str) -> float:
    """max |s d_t e0 + div e + e_sink| relative to the largest of the three terms."""
    d = densities(problem, state, family)
    rate = time_orientation(problem, family) * density_rate(problem, state, family)
    div = state.grid.divergence(d.fluxes).real if d.fluxes else 0.0
    total = rate + div + d.sink
    scale = max(float(np.max(np.abs(rate))), float(np.max(np.abs(div))), float(np.max(np.abs(d.sink))))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(total)) / scale)


# ---------------------------------------------------------------------------
# ledger and audit
# ---------------------------------------------------------------------------

@dataclass
class EnergyLedger:
    t: float
    e0_integral: float
    flux_accum: float
    balance_residual: float
    regime: str
    sink_min: float = 0.0
    sink_integral: float = 0.0

    def row(self) -> dict:
        return {"t": self.t, "e0_integral": self.e0_integral, "flux_accum": self.flux_accum,
                "balance_residual": self.balance_residual, "regime": self.regime}


class BalanceMonitor:
    """Observer that integrates e_sink in time (trapezoid) and records the balance.

    Needs to see every step: pass it to ``evolve`` with stride=1.
    """

    def __init__(self, family: Optional[str] = None):
        self.family = family
        self._last = None  # (t, sink_integral)
        self.e0_initial = None
        self.flux_accum = 0.0
        self.regime = None

    def __call__(self, problem: FieldProblem, state: FieldState) -> EnergyLedger:
        fam = self.family or default_family(problem)
        self.family = fam
        if self.regime is None:
            self.regime = regime_classify(problem, state.t)
        d = densities(problem, state, fam)
        g = state.grid
        e0 = time_orientation(problem, fam) * float(g.integrate(d.density))
        sink_int = float(g.integrate(d.sink))
        if self._last is None:
            self.e0_initial = e0
        else:
            t_prev, s_prev = self._last
            self.flux_accum += 0.5 * (state.t - t_prev) * (s_prev + sink_int)
        self._last = (state.t, sink_int)
        return EnergyLedger(state.t, e0, self.flux_accum, e0 + self.flux_accum - self.e0_initial,
                            self.regime, float(np.min(d.sink)), sink_int)


@dataclass
class BalanceReport:
    max_residual: float
    tolerance: float
    passed: bool
    e0_drift: float
    nonincreasing: bool
    nondecreasing: bool


def balance_audit(series, dt: float, C: float = 1.0, spectral_floor: float = 1e-10,
                  monotone_slack: float = 1e-12) -> BalanceReport:
    """Worst relative balance residual over a ledger series.

    Passes when below C (dt^2 + spectral_floor); residuals are measured
    against |int e0(0)| (absolute when that vanishes). Monotonicity flags
    allow ``monotone_slack`` relative round-off per step.
    """
    series = list(series)
    tol = C * (dt**2 + spectral_floor)
    if not series:
        return BalanceReport(0.0, tol, True, 0.0, True, True)
    e_init = series[0].e0_integral
    norm = abs(e_init) if e_init != 0 else 1.0
    worst = max(abs(r.balance_residual) for r in series) / norm
    drift = max(abs(r.e0_integral - e_init) for r in series) / norm
    e = np.array([r.e0_integral for r in series])
    slack = monotone_slack * max(norm, float(np.max(np.abs(e))) if len(e) else 0.0)
    steps = np.diff(e)
    return BalanceReport(worst, tol, worst < tol, drift,
                         bool(np.all(steps <= slack)), bool(np.all(steps >= -slack)))


def _sign(x, tol=1e-14):
    return 0 if abs(x) <= tol else (1 if x > 0 else -1)


def regime_classify(problem: FieldProblem, t: float = 0.0) -> str:
    """Sign structure of the sink terms at time t.

    The scale models used here are monotone on real-time slices, so the
    classification at t holds for the whole run.
    """
    try:
        _require(problem, "kg" if problem.order == "second" else "charge")
    except BalanceHypothesisError:
        return "indefinite"
    a, dta = problem.a_star(t)
    rate = (dta / a).real
    signs = []
    if problem.order == "second":
        P = problem.phase_ratio.real
        signs += [_sign(P * rate), _sign(rate)]
    else:
        n = problem.n_dim
        ImP = problem.phase_ratio.imag
        d_a2 = _sign(2 * (np.conj(a) * dta).real)
        signs += [_sign(ImP), _sign(problem.sign * problem.C0.real * ImP)]
        for lam0, p in problem.potential.v0_coefficients(problem.rotation):
            lam0 = lam0.real
            signs.append(_sign(ImP) * _sign(lam0))
            signs.append(d_a2 * _sign(lam0 * (1 - 2 * (n + 2) / (n * (p + 1)))))
    nz = [s for s in signs if s != 0]
    if not nz:
        return "conservative"
    if all(s > 0 for s in nz):
        return "dissipative"
    if all(s < 0 for s in nz):
        return "antidissipative"
    return "indefinite"
