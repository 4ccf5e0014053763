"""Shared fixtures: the seeded smooth test-function family.

Functions are products of phase-space Gaussians and low-degree
polynomials, exposed in three views: plain values (for FD oracles),
analytic partials (for vf_apply callbacks), and jet-polymorphic closures
(for exact operator application).
"""

import numpy as np
import pytest

from rvnlab.geometry.jets import jexp


class SampleFunction:
    def __init__(self, seed):
        rng = np.random.default_rng(seed)
        self.ax = rng.normal(size=3) * 0.4
        self.av = rng.normal(size=3) * 0.4
        self.c = rng.normal(size=4) * 0.2
        self.wx = 0.5 + 0.3 * rng.random()
        self.wv = 0.5 + 0.3 * rng.random()

    # plain value for FD oracles
    def value(self, t, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        q = (self.wx * ((x - self.ax) ** 2).sum(-1)
             + self.wv * ((v - self.av) ** 2).sum(-1))
        poly = (1.0 + self.c[0] * x[..., 0] * v[..., 1]
                + self.c[1] * x[..., 2] + self.c[2] * v[..., 0]
                + self.c[3] * x[..., 1] * x[..., 2])
        return np.exp(-q) * poly

    __call__ = value

    # analytic partials for the vf_apply callback protocol
    def partials(self, t, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        q = (self.wx * ((x - self.ax) ** 2).sum(-1)
             + self.wv * ((v - self.av) ** 2).sum(-1))
        e = np.exp(-q)
        poly = (1.0 + self.c[0] * x[..., 0] * v[..., 1]
                + self.c[1] * x[..., 2] + self.c[2] * v[..., 0]
                + self.c[3] * x[..., 1] * x[..., 2])
        dpoly_x = np.stack([
            self.c[0] * v[..., 1] + 0.0 * q,
            self.c[3] * x[..., 2] + 0.0 * q,
            self.c[1] + self.c[3] * x[..., 1] + 0.0 * q], -1)
        dpoly_v = np.stack([
            self.c[2] + 0.0 * q,
            self.c[0] * x[..., 0] + 0.0 * q,
            0.0 * q], -1)
        val = e * poly
        dx = e[..., None] * (dpoly_x
                             - 2.0 * self.wx * (x - self.ax) * poly[..., None])
        dv = e[..., None] * (dpoly_v
                             - 2.0 * self.wv * (v - self.av) * poly[..., None])
        return {"value": val, "dx": dx, "dv": dv, "dt": 0.0 * q}

    # jet-polymorphic closure (xs, vs are coordinate lists)
    def jet(self, t, xs, vs):
        q = 0.0
        for i in range(3):
            q = q + self.wx * (xs[i] - self.ax[i]) * (xs[i] - self.ax[i]) \
                + self.wv * (vs[i] - self.av[i]) * (vs[i] - self.av[i])
        poly = (1.0 + self.c[0] * xs[0] * vs[1] + self.c[1] * xs[2]
                + self.c[2] * vs[0] + self.c[3] * xs[1] * xs[2])
        return jexp(-q) * poly


@pytest.fixture(scope="session")
def sample_functions():
    return [SampleFunction(seed) for seed in range(5)]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


def sample_points(rng, n, with_low_v=True):
    """Phase points covering all cutoff regimes of |v|."""
    x = rng.uniform(-2.5, 2.5, (n, 3))
    v = rng.uniform(-2.5, 2.5, (n, 3))
    if with_low_v:
        v[: n // 3] *= 0.3          # inside the low-|v| plateau
        v[n // 3: 2 * n // 3] *= 0.56  # transition annulus
    return x, v
