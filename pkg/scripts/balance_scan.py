"""Energy balance on a de Sitter background across Hubble rates."""
import argparse

import numpy as np

from cfieldlab.energy_monitor import BalanceMonitor, balance_audit, regime_classify
from cfieldlab.field_solver import FieldState, build_problem, evolve, positive_frequency_velocity
from cfieldlab.grid import Grid, gaussian


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--H", type=float, nargs="+", default=[-0.5, -0.25, 0.0, 0.25, 0.5])
    ap.add_argument("--lam", type=float, default=0.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--T", type=float, default=1.0)
    args = ap.parse_args()
    g = Grid.uniform(1, 256, 40.0)
    u = gaussian(g, 2.0)
    print(f"{'H':>6} {'regime':>16} {'E(T)/E(0)':>11} {'residual':>10} {'noninc':>7} {'nondec':>7}")
    for H in args.H:
        pr = build_problem("de_sitter_kg", {"H": H, "lam": args.lam})
        st0 = FieldState(0.0, u, g, positive_frequency_velocity(pr, g, u))
        _, rec = evolve(pr, st0, args.dt, args.T, {"b": BalanceMonitor()}, 1)
        led = rec["b"]
        rep = balance_audit(led, args.dt)
        ratio = np.real(led[-1].e0_integral / led[0].e0_integral)
        print(f"{H:6.2f} {regime_classify(pr):>16} {ratio:11.6f} {rep.max_residual:10.2e} "
              f"{rep.nonincreasing!s:>7} {rep.nondecreasing!s:>7}")


if __name__ == "__main__":
    main()
