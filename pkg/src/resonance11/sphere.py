"""Quasi-uniform point sets and triangulations of the 2-sphere."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def fibonacci_sphere(n: int, r: float = 1.0) -> np.ndarray:
    """n points on the sphere of radius r along the golden spiral, shape (n, 3)."""
    if n < 1:
        raise ValueError("need at least one point")
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = k * math.pi * (3.0 - math.sqrt(5.0))
    return r * np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def _icosahedron():
    t = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    f = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


@lru_cache(maxsize=8)
def icosphere(depth: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Unit geodesic sphere: (vertices (V, 3), faces (20 * 4**depth, 3))."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    verts, faces = _icosahedron()
    verts = [tuple(p) for p in verts]
    for _ in range(depth):
        cache: dict[tuple[int, int], int] = {}

        def mid(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = np.add(verts[i], verts[j])
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(tuple(m))
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    v = np.array(verts)
    f = np.array(faces, dtype=np.int64)
    v.setflags(write=False)
    f.setflags(write=False)
    return v, f
