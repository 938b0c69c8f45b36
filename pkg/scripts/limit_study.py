"""Distance between the second-order and first-order evolutions as c grows."""
import argparse

from cfieldlab.nr_limit import LimitStudyConfig, dispersion_gap, limit_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, nargs="+", default=[10.0, 20.0, 40.0, 80.0])
    ap.add_argument("--T", type=float, default=0.1)
    ap.add_argument("--mode", type=int, default=4)
    ap.add_argument("--lam", type=float, default=0.0)
    args = ap.parse_args()
    res = limit_study(LimitStudyConfig(tuple(args.c), T=args.T, mode=(args.mode,), lam=args.lam))
    print(f"dt = {res.dt:.3e}")
    print(f"{'c':>8} {'error':>12} {'order':>7} {'gap*T':>12}")
    for c, err, order in res.rows:
        print(f"{c:8.1f} {err:12.4e} {order:7.3f} {dispersion_gap(c, args.mode**2) * args.T:12.4e}")
    print("strictly decreasing:", res.strictly_decreasing)


if __name__ == "__main__":
    main()
