"""Exact light-cone geometry of the relativistic transport equation.

Public surface: phase points, modulation quantities, the vector-field
families and their application, the two decompositions of the bulk
derivative D_v = grad_v - t (grad_v vhat) . grad_x, first- and
higher-order commutation tables, index bookkeeping, and the action of
the generator set on free-streamed fields.

Everything is a pure function of its arguments and vectorises over
trailing sample axes: a PhasePoint may hold arrays of shape (..., 3).
"""

from dataclasses import dataclass, field as _dfield

import numpy as np

from . import base, fields, tables
from .fields import AGENS, AGENS_FULL, KGENS, XFIELDS, FIELDS
from .tables import (CoefficientTable, TableEntry, apply_word,
                     dv_decomposition, dtilde_derivative,
                     first_order_commutator, freestream_pullback_coeffs,
                     high_order_commutator, index_functions)

__all__ = [
    "PhasePoint", "ModulationData", "DerivativeIndex",
    "omega_pm", "omega_cut", "inhom_modulation",
    "cone_factorization_residual", "vf_apply", "dv_decomposition",
    "first_order_commutator", "dtilde_derivative", "high_order_commutator",
    "index_functions", "freestream_pullback_coeffs", "apply_word",
    "CoefficientTable", "TableEntry", "KGENS", "AGENS", "AGENS_FULL",
    "XFIELDS", "FIELDS",
]


@dataclass
class PhasePoint:
    """Position-velocity pair; trailing axis of x and v has length 3."""

    x: np.ndarray
    v: np.ndarray
    mass: int = 1

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.x.shape[-1] != 3 or self.v.shape[-1] != 3:
            raise ValueError("x and v need a trailing axis of length 3")
        if self.mass not in (0, 1):
            raise ValueError("mass must be 0 or 1")

    @property
    def vhat(self):
        s = np.sqrt(self.mass ** 2 + (self.v ** 2).sum(-1, keepdims=True))
        return self.v / s

    @property
    def vtilde(self):
        n = np.linalg.norm(self.v, axis=-1, keepdims=True)
        return self.v / np.where(n > 0, n, 1.0)


@dataclass
class ModulationData:
    """Cone-modulation quantities at (t, x, v)."""

    omega_plus: np.ndarray
    omega_minus: np.ndarray
    omega: np.ndarray
    d: np.ndarray
    d_tilde: np.ndarray
    t: float = 0.0


def _split(p):
    return ([p.x[..., 0], p.x[..., 1], p.x[..., 2]],
            [p.v[..., 0], p.v[..., 1], p.v[..., 2]])


def _require_massive(p):
    if p.mass != 1:
        raise ValueError("geometry formulas use the unit-mass normalisation")


def omega_pm(p):
    """(omega_+, omega_-); their product is -|x|^2 exactly."""
    xs, vs = _split(p)
    return base.omega_pm(xs, vs)


def omega_cut(p):
    """Modulation radius with the degenerate region cut away."""
    xs, vs = _split(p)
    return base.omega_cut(xs, vs)


def inhom_modulation(t, p, homogeneous=False):
    """Inhomogeneous modulation; distance-to-cone proxy in phase space."""
    _require_massive(p)
    xs, vs = _split(p)
    if homogeneous:
        return base.d_homogeneous(t, xs, vs)
    return base.dtilde(t, xs, vs)


def modulation_data(t, p):
    _require_massive(p)
    xs, vs = _split(p)
    wp, wm = base.omega_pm(xs, vs)
    return ModulationData(
        omega_plus=wp, omega_minus=wm, omega=base.omega_cut(xs, vs),
        d=base.d_homogeneous(t, xs, vs), d_tilde=base.dtilde(t, xs, vs), t=t)


def cone_factorization_residual(t, p):
    """LHS minus RHS of the cone factorisation identity."""
    _require_massive(p)
    xs, vs = _split(p)
    return base.cone_factorization_residual(t, xs, vs)


def vf_apply(field_id, h, t, p):
    """Apply the first-order operator named field_id to h at (t, p).

    h is a callback: h(t, x, v) -> dict with keys "value", "dx", "dv"
    and optionally "dt" (arrays broadcastable against the point batch).
    Raises if the field needs a time partial the callback does not supply.
    """
    vf = fields.field(field_id)
    xs, vs = _split(p)
    parts = h(t, p.x, p.v)
    wt, wx, wv = vf.coeffs(t, xs, vs)
    acc = 0.0
    gx = parts["dx"]
    gv = parts["dv"]
    for i in range(3):
        acc = acc + wx[i] * gx[..., i] + wv[i] * gv[..., i]
    if wt is not None:
        if parts.get("dt") is None:
            raise ValueError(f"{field_id} needs a time partial; callback "
                             "declares none")
        acc = acc + wt * parts["dt"]
    return acc


class DerivativeIndex:
    """A word over the generator set, with its index bookkeeping."""

    def __init__(self, word):
        self.word = tables._word_tuple(word)

    @property
    def order(self):
        return len(self.word)

    def concat(self, other):
        return DerivativeIndex(self.word + tables._word_tuple(
            other.word if isinstance(other, DerivativeIndex) else other))

    def indices(self):
        return index_functions(self.word)

    def __repr__(self):
        return f"DerivativeIndex({'.'.join(self.word)})"
