import numba
import numpy as np

_MIN_D2 = 1e-18


@numba.njit(cache=True)
def displacement(pos, W, k):
    """Net force on every node: pairwise repulsion k^2/d plus attraction
    w*d^2/k along weighted edges. Pairs are visited once in a fixed order,
    so results do not depend on scheduling."""
    n = pos.shape[0]
    disp = np.zeros((n, 2))
    k2 = k * k
    for i in range(n):
        xi = pos[i, 0]
        yi = pos[i, 1]
        for j in range(i + 1, n):
            dx = xi - pos[j, 0]
            dy = yi - pos[j, 1]
            d2 = dx * dx + dy * dy
            if d2 < _MIN_D2:
                d2 = _MIN_D2
            f = k2 / d2 - W[i, j] * np.sqrt(d2) / k
            disp[i, 0] += dx * f
            disp[i, 1] += dy * f
            disp[j, 0] -= dx * f
            disp[j, 1] -= dy * f
    return disp
