"""Analytic source-term presets.

Presets are evaluated from closed-form expressions on cell centroids so the
same continuum datum can be realized on grids of different resolution
(needed by the refinement studies).  Random fields are seeded, band-limited
combinations of the low analytic modes: a documented, reproducible
generator.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import Grid, ScalarField

__all__ = [
    "constant_source",
    "eigenmode_source",
    "two_bump_source",
    "random_band_source",
    "project_zero_mean",
    "make_source",
]


def _mode_table(grid: Grid, count: int):
    """First `count` nonzero Neumann cosine modes ordered by continuum
    eigenvalue (ties broken by index)."""
    if grid.kind == "interval":
        length = grid.lengths[0]
        return [((k,), (k * math.pi / length) ** 2) for k in range(1, count + 1)]
    if grid.kind == "rectangle":
        lx, ly = grid.lengths
        top = int(math.isqrt(count)) + count + 1
        cand = []
        for i in range(top):
            for j in range(top):
                if i == 0 and j == 0:
                    continue
                lam = (i * math.pi / lx) ** 2 + (j * math.pi / ly) ** 2
                cand.append(((i, j), lam))
        cand.sort(key=lambda e: (e[1], e[0]))
        return cand[:count]
    raise ValueError(f"no analytic modes for grid kind {grid.kind!r}")


def _mode_values(grid: Grid, index) -> np.ndarray:
    if grid.kind == "interval":
        (k,) = index
        length = grid.lengths[0]
        x = grid.centroids[:, 0]
        return math.sqrt(2.0 / length) * np.cos(k * math.pi * x / length)
    lx, ly = grid.lengths
    i, j = index
    x, y = grid.centroids[:, 0], grid.centroids[:, 1]
    cx = math.sqrt((2.0 if i else 1.0) / lx)
    cy = math.sqrt((2.0 if j else 1.0) / ly)
    return cx * cy * np.cos(i * math.pi * x / lx) * np.cos(j * math.pi * y / ly)


def constant_source(grid: Grid, value: float = 1.0) -> ScalarField:
    return ScalarField(grid, np.full(grid.n_cells, float(value)))


def eigenmode_source(grid: Grid, k: int = 1) -> ScalarField:
    """k-th nonzero Neumann cosine mode (unit continuum L2 norm)."""
    if k < 1:
        raise ValueError(f"mode index must be >= 1, got {k}")
    table = _mode_table(grid, k)
    return ScalarField(grid, _mode_values(grid, table[k - 1][0]))


def two_bump_source(grid: Grid, width: float = 0.1) -> ScalarField:
    """Two Gaussian bumps of opposite sign on the domain diagonal."""
    scale = min(grid.lengths)
    w = width * scale
    lo = 0.3 * np.asarray(grid.lengths)
    hi = 0.7 * np.asarray(grid.lengths)
    if grid.kind == "interval":
        pts = grid.centroids[:, :1]
    elif grid.kind == "rectangle":
        pts = grid.centroids
    else:
        raise ValueError(f"two-bump preset needs a Neumann box grid, got {grid.kind!r}")
    d1 = np.sum((pts - lo) ** 2, axis=1)
    d2 = np.sum((pts - hi) ** 2, axis=1)
    return ScalarField(grid, np.exp(-d1 / (2 * w * w)) - np.exp(-d2 / (2 * w * w)))


def random_band_source(grid: Grid, seed: int, n_modes: int = 12) -> ScalarField:
    """Seeded Gaussian combination of the first n_modes nonzero modes,
    normalized to unit weighted L2 norm."""
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(n_modes)
    table = _mode_table(grid, n_modes)
    vals = np.zeros(grid.n_cells)
    for c, (index, _) in zip(coeffs, table):
        vals += c * _mode_values(grid, index)
    f = ScalarField(grid, vals)
    nrm = f.norm(2)
    return f * (1.0 / nrm) if nrm > 0 else f


def project_zero_mean(f: ScalarField) -> ScalarField:
    return f - f.mean()


def make_source(grid: Grid, spec: str, seed: int = 0, project: bool = False) -> ScalarField:
    """Parse a preset string: eigenmode[:k], two-bump, random[:nmodes],
    constant[:value], zero."""
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "eigenmode":
        f = eigenmode_source(grid, int(arg) if arg else 1)
    elif name in ("two-bump", "two_bump"):
        f = two_bump_source(grid)
    elif name == "random":
        f = random_band_source(grid, seed, int(arg) if arg else 12)
    elif name == "constant":
        f = constant_source(grid, float(arg) if arg else 1.0)
    elif name == "zero":
        f = constant_source(grid, 0.0)
    else:
        raise ValueError(f"unknown source preset {spec!r}")
    return project_zero_mean(f) if project else f
