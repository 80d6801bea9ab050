from __future__ import annotations

import numpy as np


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def perlin2d(xs: np.ndarray, ys: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    '''
    Gradient noise evaluated at lattice coordinates ``xs``, ``ys``

    One random unit gradient is drawn per lattice node from ``rng``; the
    value at a point blends the four corner dot products with the quintic
    fade curve.  Output is zero on every lattice node.

    :param xs: x coordinates in lattice units (non-negative).
    :param ys: y coordinates in lattice units, same shape as ``xs``.
    :param rng: generator the gradient field is drawn from.
    '''
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    nx = int(np.floor(xs.max())) + 2
    ny = int(np.floor(ys.max())) + 2
    angles = rng.uniform(0.0, 2.0 * np.pi, size=(nx, ny))
    gx, gy = np.cos(angles), np.sin(angles)

    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0

    def corner(dx, dy):
        ix, iy = x0 + dx, y0 + dy
        return gx[ix, iy] * (fx - dx) + gy[ix, iy] * (fy - dy)

    u = _fade(fx)
    v = _fade(fy)
    bottom = corner(0, 0) + u * (corner(1, 0) - corner(0, 0))
    top = corner(0, 1) + u * (corner(1, 1) - corner(0, 1))
    return bottom + v * (top - bottom)
