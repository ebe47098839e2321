"""Compiled inner loop of the basic-solution enumeration for the moment LP.

With three equality constraints (mass, E[v_B], E[v_S]) every vertex of the
feasible polytope is supported on at most three grid points whose triangle
contains the target mean.  The weights of such a triple are the barycentric
coordinates of the mean, which we read off a precomputed orientation table.
"""

import numpy as np
from numba import njit

WEIGHT_TOL = 1e-12
AREA_TOL = 1e-14


def orientation_table(pts: np.ndarray, m: np.ndarray) -> np.ndarray:
    """O[a, b] = cross(p_b - p_a, m - p_a): twice the signed area of (p_a, p_b, m)."""
    dx = pts[None, :, 0] - pts[:, None, 0]
    dy = pts[None, :, 1] - pts[:, None, 1]
    mx = m[0] - pts[:, 0]
    my = m[1] - pts[:, 1]
    return dx * my[:, None] - dy * mx[:, None]


@njit(cache=True)
def enumerate_triples(orient, values):
    n = values.shape[0]
    best = np.inf
    bi = -1
    bj = -1
    bk = -1
    for i in range(n):
        row_i = orient[i]
        for j in range(i + 1, n):
            oij = row_i[j]
            row_j = orient[j]
            for k in range(j + 1, n):
                ojk = row_j[k]
                oki = -row_i[k]
                # the mean lies in the triangle iff the three orientations agree in sign
                if oij > WEIGHT_TOL:
                    if ojk < -WEIGHT_TOL or oki < -WEIGHT_TOL:
                        continue
                elif oij < -WEIGHT_TOL:
                    if ojk > WEIGHT_TOL or oki > WEIGHT_TOL:
                        continue
                total = oij + ojk + oki
                if abs(total) < AREA_TOL:
                    continue
                wi = ojk / total
                wj = oki / total
                wk = oij / total
                if wi < -WEIGHT_TOL or wj < -WEIGHT_TOL or wk < -WEIGHT_TOL:
                    continue
                val = wi * values[i] + wj * values[j] + wk * values[k]
                if val < best:
                    best = val
                    bi = i
                    bj = j
                    bk = k
    return best, bi, bj, bk
