"""Seeded low-discrepancy sampling helpers.

All sampling in the package flows through scrambled Halton sequences with
an explicit seed, so every report is reproducible bit for bit.
"""
from __future__ import annotations

import numpy as np
from scipy.stats import qmc


def halton_unit(dim: int, count: int, seed: int) -> np.ndarray:
    """``count`` points of a seeded scrambled Halton sequence in [0, 1)^dim."""
    engine = qmc.Halton(d=dim, scramble=True, seed=seed)
    return engine.random(count)


def halton_box(lower, upper, count: int, seed: int) -> np.ndarray:
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    pts = halton_unit(lower.size, count, seed)
    return lower + pts * (upper - lower)


def halton_pairs(lower, upper, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Quasi-random point pairs in a box, drawn jointly in 2*dim dimensions."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    n = lower.size
    pts = halton_unit(2 * n, count, seed)
    first = lower + pts[:, :n] * (upper - lower)
    second = lower + pts[:, n:] * (upper - lower)
    return first, second


def halton_ball(center, radius: float, count: int, seed: int) -> np.ndarray:
    """Low-discrepancy points in a ball (dim 1 or 2), covering radii up to
    the boundary."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    dim = center.size
    u = halton_unit(dim, count, seed)
    if dim == 1:
        return center + radius * (2.0 * u - 1.0)
    if dim == 2:
        r = radius * np.sqrt(u[:, 0])
        theta = 2.0 * np.pi * u[:, 1]
        return center + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)
    raise ValueError("ball sampling implemented for dimensions 1 and 2")
