"""Periodic Fourier grids and the named analytic initial profiles."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform periodic box [0, L_j) per axis.

    The Nyquist wavenumber is kept (not zeroed) in gradients so that
    sum |grad f|^2 and -conj(f) lap f agree mode by mode.
    """

    points: tuple
    extent: tuple
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(int(p) for p in self.points))
        object.__setattr__(self, "extent", tuple(float(e) for e in self.extent))
        if len(self.points) != len(self.extent):
            raise ValueError("points and extent differ in length")
        if not 1 <= len(self.points) <= 3:
            raise ValueError("n_dim must be 1, 2 or 3")
        if any(p < 2 for p in self.points) or any(e <= 0 for e in self.extent):
            raise ValueError("need at least 2 points and positive extent per axis")

    @classmethod
    def uniform(cls, n_dim: int, points: int, extent: float) -> "Grid":
        return cls((points,) * n_dim, (extent,) * n_dim)

    @property
    def n_dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def spacing(self) -> tuple:
        return tuple(L / N for L, N in zip(self.extent, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def coords(self) -> list:
        if "x" not in self._cache:
            axes = [np.arange(N) * L / N for N, L in zip(self.points, self.extent)]
            self._cache["x"] = np.meshgrid(*axes, indexing="ij")
        return self._cache["x"]

    def wavenumbers(self) -> list:
        if "k" not in self._cache:
            axes = [2 * np.pi * np.fft.fftfreq(N, d=L / N) for N, L in zip(self.points, self.extent)]
            self._cache["k"] = np.meshgrid(*axes, indexing="ij")
        return self._cache["k"]

    @property
    def k2(self) -> np.ndarray:
        if "k2" not in self._cache:
            self._cache["k2"] = sum(k**2 for k in self.wavenumbers())
        return self._cache["k2"]

    def mode_wavenumber(self, mode: Sequence[int]) -> np.ndarray:
        return np.array([2 * np.pi * m / L for m, L in zip(mode, self.extent)])

    # spectral operators ---------------------------------------------------
    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(-self.k2 * np.fft.fftn(f))

    def gradient(self, f: np.ndarray) -> list:
        fh = np.fft.fftn(f)
        return [np.fft.ifftn(1j * k * fh) for k in self.wavenumbers()]

    def divergence(self, comps: Sequence[np.ndarray]) -> np.ndarray:
        return sum(np.fft.ifftn(1j * k * np.fft.fftn(c)) for k, c in zip(self.wavenumbers(), comps))

    def integrate(self, f: np.ndarray):
        return np.sum(f) * self.cell_volume

    def l2_norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(f) ** 2) * self.cell_volume))


def plane_wave(grid: Grid, mode: Sequence[int], amplitude: complex = 1.0) -> np.ndarray:
    """amplitude * exp(i k.x) with k the grid wavenumber of integer ``mode``."""
    k = grid.mode_wavenumber(mode)
    phase = sum(kj * xj for kj, xj in zip(k, grid.coords()))
    return amplitude * np.exp(1j * phase)


def gaussian(grid: Grid, width: float, center: Optional[Sequence[float]] = None,
             amplitude: complex = 1.0, momentum: Optional[Sequence[int]] = None) -> np.ndarray:
    """Periodized-in-spirit gaussian bump; keep width well below the box size."""
    if center is None:
        center = [L / 2 for L in grid.extent]
    r2 = sum((x - c0) ** 2 for x, c0 in zip(grid.coords(), center))
    out = amplitude * np.exp(-r2 / (2 * width**2)).astype(complex)
    if momentum is not None:
        out = out * plane_wave(grid, momentum)
    return out


def random_phase(seed: Optional[int]) -> complex:
    """Unit phase drawn from the seeded generator; 1 when seed is None."""
    if seed is None:
        return 1.0 + 0j
    rng = np.random.default_rng(seed)
    return complex(np.exp(2j * np.pi * rng.uniform()))
