"""Dyadic cutoff family built on a fixed even bump profile.

The base profile ``bump`` equals 1 on [-5/4, 5/4], vanishes outside
[-3/2, 3/2], and transitions with a C^2 quintic smoothstep.  The dyadic
family is

    psi_band(k, r)  = bump(r/2^k) - bump(r/2^(k-1))
    psi_le(k, r)    = bump(r/2^k)
    psi_ge(k, r)    = 1 - psi_le(k-1, r)

so that sum_k psi_band(k, r) = 1 for r != 0.  Derivatives up to third
order are exposed for use in exact coefficient differentiation.
"""

import numpy as np

PLATEAU = 1.25
SUPPORT = 1.5
_INV_W = 1.0 / (SUPPORT - PLATEAU)


def _smoothstep(u):
    # quintic: 0 at u<=0, 1 at u>=1, C^2 at the knots
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _smoothstep_d1(u):
    inside = (u > 0.0) & (u < 1.0)
    u = np.clip(u, 0.0, 1.0)
    return np.where(inside, 30.0 * u * u * (1.0 + u * (-2.0 + u)), 0.0)


def _smoothstep_d2(u):
    inside = (u > 0.0) & (u < 1.0)
    u = np.clip(u, 0.0, 1.0)
    return np.where(inside, 60.0 * u * (1.0 + u * (-3.0 + 2.0 * u)), 0.0)


def _smoothstep_d3(u):
    inside = (u > 0.0) & (u < 1.0)
    u = np.clip(u, 0.0, 1.0)
    return np.where(inside, 60.0 + u * (-360.0 + 360.0 * u), 0.0)


def bump(r):
    """Even C^2 profile: 1 on |r|<=5/4, 0 on |r|>=3/2."""
    a = np.abs(r)
    return 1.0 - _smoothstep((a - PLATEAU) * _INV_W)


def bump_d1(r):
    a = np.abs(r)
    return -_smoothstep_d1((a - PLATEAU) * _INV_W) * _INV_W * np.sign(r)


def bump_d2(r):
    a = np.abs(r)
    return -_smoothstep_d2((a - PLATEAU) * _INV_W) * _INV_W ** 2


def bump_d3(r):
    a = np.abs(r)
    return -_smoothstep_d3((a - PLATEAU) * _INV_W) * _INV_W ** 3 * np.sign(r)


#: value + first three derivatives, for smooth chain rules
BUMP_DERIVS = (bump, bump_d1, bump_d2, bump_d3)


def _scaled_derivs(scale):
    inv = 1.0 / scale
    return tuple(
        (lambda r, d=d, p=inv, n=n: d(r * p) * p ** n)
        for n, d in enumerate(BUMP_DERIVS)
    )


def psi_le_derivs(k):
    """Derivative family of psi_{<=k}(r) = bump(r / 2^k)."""
    return _scaled_derivs(2.0 ** k)


def psi_ge_derivs(k):
    """Derivative family of psi_{>=k}(r) = 1 - bump(r / 2^(k-1))."""
    le = psi_le_derivs(k - 1)
    fam = [lambda r, f=le[0]: 1.0 - f(r)]
    fam += [lambda r, f=d: -f(r) for d in le[1:]]
    return tuple(fam)


def psi_band_derivs(k):
    """Derivative family of psi_k(r) = bump(r/2^k) - bump(r/2^(k-1))."""
    hi = psi_le_derivs(k)
    lo = psi_le_derivs(k - 1)
    return tuple(lambda r, a=a, b=b: a(r) - b(r) for a, b in zip(hi, lo))


def psi_le(k, r):
    return bump(r / 2.0 ** k)


def psi_ge(k, r):
    return 1.0 - psi_le(k - 1, r)


def psi_band(k, r):
    return psi_le(k, r) - psi_le(k - 1, r)


def band_range(rmin, rmax):
    """Dyadic indices k with psi_band(k, .) not identically 0 on [rmin, rmax]."""
    if rmax <= 0.0:
        return range(0)
    lo = int(np.floor(np.log2(max(rmin, 1e-300) / SUPPORT)))
    hi = int(np.ceil(np.log2(rmax / (PLATEAU / 2.0))))
    return range(lo, hi + 1)
