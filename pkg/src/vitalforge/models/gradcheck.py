"""Central finite-difference check of analytic gradients."""

from __future__ import annotations

import numpy as np

from .params import flatten, unflatten


def relative_error(a: float, b: float, floor: float = 1e-8) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def check_gradient(loss_fn, params, grad, n_coords: int = 20, step: float = 1e-5, seed=0) -> float:
    """Largest relative error between ``grad`` and central differences of ``loss_fn``.

    ``loss_fn(params) -> float``. The check visits ``n_coords`` coordinates of
    the flattened parameter vector picked without replacement under ``seed``.
    """
    theta = flatten(params)
    g = flatten(grad)
    rng = np.random.default_rng(seed)
    coords = rng.choice(theta.size, size=min(n_coords, theta.size), replace=False)
    worst = 0.0
    for c in coords:
        up = theta.copy()
        dn = theta.copy()
        up[c] += step
        dn[c] -= step
        fd = (loss_fn(unflatten(params, up)) - loss_fn(unflatten(params, dn))) / (2 * step)
        worst = max(worst, relative_error(fd, g[c]))
    return worst
