"""Nested forward-mode differentiation for exact coefficient calculus.

A ``Jet`` carries a value and its first partials with respect to a fixed
list of base coordinates.  Nesting jets (values and partials that are
themselves jets) yields exact higher derivatives; all arithmetic is
recursive and works elementwise on numpy arrays, so whole sample batches
differentiate at once.

This is plain dual-number arithmetic, not symbolic algebra: every
coefficient function in the geometry module is written once in ordinary
numpy expressions and evaluated here at whatever derivative depth a
caller needs.
"""

import numpy as np


class Jet:
    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = val
        self.grad = tuple(grad)

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val,
                       [a + b for a, b in zip(self.grad, other.grad)])
        return Jet(self.val + other, self.grad)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, [-g for g in self.grad])

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val * other.val,
                       [g * other.val + self.val * h
                        for g, h in zip(self.grad, other.grad)])
        return Jet(self.val * other, [g * other for g in self.grad])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            inv = reciprocal(other)
            return self * inv
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n):
        if not isinstance(n, int) or n < 1:
            raise ValueError("jets support positive integer powers only")
        out = self
        for _ in range(n - 1):
            out = out * self
        return out


def reciprocal(u):
    if isinstance(u, Jet):
        iv = reciprocal(u.val)
        return Jet(iv, [-(g * iv) * iv for g in u.grad])
    return 1.0 / u


def jsqrt(u):
    if isinstance(u, Jet):
        s = jsqrt(u.val)
        half_inv = reciprocal(s) * 0.5 if isinstance(s, Jet) else 0.5 / s
        return Jet(s, [g * half_inv for g in u.grad])
    return np.sqrt(u)


def jexp(u):
    if isinstance(u, Jet):
        e = jexp(u.val)
        return Jet(e, [g * e for g in u.grad])
    return np.exp(u)


def apply_smooth(derivs, u):
    """Apply a scalar function given as (f, f', f'', ...) to a jet."""
    if isinstance(u, Jet):
        if len(derivs) < 2:
            raise ValueError("not enough derivative levels for this jet depth")
        df = apply_smooth(derivs[1:], u.val)
        return Jet(apply_smooth(derivs, u.val), [df * g for g in u.grad])
    return derivs[0](u)


def deep_val(u):
    while isinstance(u, Jet):
        u = u.val
    return u


def clip_below(u, floor):
    """max(u, floor) with partials masked where the clip is active.

    Only used under cutoffs that vanish identically on the clipped
    region, so the masked values never influence a result.
    """
    if isinstance(u, Jet):
        keep = deep_val(u) > floor
        return Jet(clip_below(u.val, floor), [g * keep for g in u.grad])
    return np.maximum(u, floor)


def lift_const(c, depth, n):
    for _ in range(depth):
        c = Jet(c, [0.0] * n)
    return c


def seed(coords, depth):
    """Lift base coordinates to jets of the given nesting depth.

    coords: list of scalars/arrays.  Returns jets whose k-th partial is
    the Kronecker delta, lifted so that `depth` levels of differentiation
    are available.
    """
    n = len(coords)
    if depth == 0:
        return list(coords)
    out = []
    for i, c in enumerate(coords):
        grad = [lift_const(1.0 if j == i else 0.0, depth - 1, n)
                for j in range(n)]
        out.append(Jet(seed_one(c, depth - 1, i, n), grad))
    return out


def seed_one(c, depth, i, n):
    # inner levels re-seed the same coordinate so mixed partials resolve
    if depth == 0:
        return c
    grad = [lift_const(1.0 if j == i else 0.0, depth - 1, n) for j in range(n)]
    return Jet(seed_one(c, depth - 1, i, n), grad)
