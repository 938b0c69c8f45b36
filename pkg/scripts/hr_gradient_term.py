"""Energy balance for a particle on a static, spatially varying metric.

Compares the time-derivative-only rate with the variant that adds the cubic
spatial-gradient term; only the first keeps H + int H_R constant.
"""
import numpy as np

from cfieldlab.geodesic import GeodesicScenario, hr_eval, initial_state, integrate


def bumpy(z0, z):
    f, df = 1 + 0.3 * np.sin(z[0]), 0.3 * np.cos(z[0])
    g = np.diag([f, f]).astype(complex)
    dgs = np.zeros((2, 2, 2), complex)
    dgs[0] = np.diag([df, df])
    return g, np.zeros((2, 2)), dgs


def main():
    dt, steps = 1e-3, 5000
    sc = GeodesicScenario(n_dim=2, metric=bumpy)
    traj = integrate(sc, initial_state(sc, [0.0, 0.5], [0.5, 0.2]), dt, steps)
    H = np.array([s.H for s in traj])
    cubic = np.array([hr_eval(s, sc, gradient_term=True) for s in traj])
    with_cubic = H + np.concatenate([[0], np.cumsum((cubic[1:] + cubic[:-1]) / 2 * dt)])
    print(f"max |H + int H_R - H0| without cubic term (H_R = 0):     {np.max(np.abs(H - H[0])):.2e}")
    print(f"max |H + int H_R - H0| with cubic term:                 {np.max(np.abs(with_cubic - H[0])):.2e}")


if __name__ == "__main__":
    main()
