"""Registry of all first-order differential operators used in the lab.

Each field is a triple of coefficient lists (wt, wx, wv) evaluated at
(t, x, v):  L = wt*d_t + wx . grad_x + wv . grad_v.  Coefficient
functions are jet-polymorphic.  Names:

  classical set (acts on f(t,x,v) or phi(t,x)):
    S, dx1-3, Om1-3 (spatial rotations), L1-3 (Lorentz boosts),
    Omt1-3 (full rotations), Lt1-3 (full boosts)
  velocity alphabet used in operator expansions:
    Wv1-3 = (e_i x v).grad_v,   Uv1-3 = sqrt(1+|v|^2) d_{v_i}
  phase-space cone set (uncut building blocks):
    Sv, Sx, Omv1-3, Omx1-3, Shatv, Omhatv1-3, Kv1-3, Dv1-3, Ktv1-3
  cut generator set: Gamma1-17
  bulk-direction set: X1-7
"""

from dataclasses import dataclass

from . import base
from .base import (cross_e, dot3, jac_vhat, lorentz_factor, norm2, omega_cut,
                   psi_ge1_v, psi_le0_v, vhat, vtilde, vtilde_cross)


@dataclass(frozen=True)
class VField:
    name: str
    has_dt: bool
    coeffs: callable  # (t, x, v) -> (wt or None, wx[3], wv[3])


def _zeros3(x):
    return [0.0 * x[0], 0.0 * x[0], 0.0 * x[0]]


def _scale(c, vec):
    return [c * vec[0], c * vec[1], c * vec[2]]


FIELDS = {}


def _register(name, has_dt, fn):
    FIELDS[name] = VField(name, has_dt, fn)


def _coeff_S(t, x, v):
    return t, [x[0], x[1], x[2]], _zeros3(x)


_register("S", True, _coeff_S)

for _i in range(3):
    def _coeff_dx(t, x, v, i=_i):
        wx = _zeros3(x)
        wx[i] = 1.0 + 0.0 * x[0]
        return None, wx, _zeros3(x)

    def _coeff_Om(t, x, v, i=_i):
        return None, cross_e(i, x), _zeros3(x)

    def _coeff_L(t, x, v, i=_i):
        wx = _zeros3(x)
        wx[i] = t + 0.0 * x[0]
        return x[i], wx, _zeros3(x)

    def _coeff_Omt(t, x, v, i=_i):
        return None, cross_e(i, x), cross_e(i, v)

    def _coeff_Lt(t, x, v, i=_i):
        wx = _zeros3(x)
        wx[i] = t + 0.0 * x[0]
        wv = _zeros3(x)
        wv[i] = lorentz_factor(v)
        return x[i], wx, wv

    def _coeff_Wv(t, x, v, i=_i):
        return None, _zeros3(x), cross_e(i, v)

    def _coeff_Uv(t, x, v, i=_i):
        wv = _zeros3(x)
        wv[i] = lorentz_factor(v)
        return None, _zeros3(x), wv

    _register(f"dx{_i + 1}", False, _coeff_dx)
    _register(f"Om{_i + 1}", False, _coeff_Om)
    _register(f"L{_i + 1}", True, _coeff_L)
    _register(f"Omt{_i + 1}", False, _coeff_Omt)
    _register(f"Lt{_i + 1}", True, _coeff_Lt)
    _register(f"Wv{_i + 1}", False, _coeff_Wv)
    _register(f"Uv{_i + 1}", False, _coeff_Uv)


def _coeff_Sv(t, x, v):
    return None, _zeros3(x), vtilde(v)


def _coeff_Sx(t, x, v):
    return None, vtilde(v), _zeros3(x)


_register("Sv", False, _coeff_Sv)
_register("Sx", False, _coeff_Sx)


def _coeff_Shatv(t, x, v):
    tv = vtilde(v)
    w = omega_cut(x, v) / (1.0 + norm2(v))
    return None, _scale(-w, tv), tv


_register("Shatv", False, _coeff_Shatv)

for _i in range(3):
    def _coeff_Omv(t, x, v, i=_i):
        return None, _zeros3(x), vtilde_cross(i, v)

    def _coeff_Omx(t, x, v, i=_i):
        return None, vtilde_cross(i, v), _zeros3(x)

    def _coeff_Omhatv(t, x, v, i=_i):
        tV = vtilde_cross(i, v)
        return None, _scale(-omega_cut(x, v), tV), tV

    def _coeff_Kv(t, x, v, i=_i):
        J = jac_vhat(v)
        c = -lorentz_factor(v) * omega_cut(x, v)
        wv = _zeros3(x)
        wv[i] = 1.0 + 0.0 * x[0]
        return None, _scale(c, J[i]), wv

    def _coeff_Dv(t, x, v, i=_i):
        J = jac_vhat(v)
        wv = _zeros3(x)
        wv[i] = 1.0 + 0.0 * x[0]
        return None, _scale(-t, J[i]), wv

    def _coeff_Ktv(t, x, v, i=_i):
        # pullback partner of Kv: commutes with d_t + vhat.grad_x
        vh = vhat(v)
        xs = [x[0] - vh[0] * t, x[1] - vh[1] * t, x[2] - vh[2] * t]
        c = t - lorentz_factor(v) * omega_cut(xs, v)
        J = jac_vhat(v)
        wv = _zeros3(x)
        wv[i] = 1.0 + 0.0 * x[0]
        return None, _scale(c, J[i]), wv

    _register(f"Omv{_i + 1}", False, _coeff_Omv)
    _register(f"Omx{_i + 1}", False, _coeff_Omx)
    _register(f"Omhatv{_i + 1}", False, _coeff_Omhatv)
    _register(f"Kv{_i + 1}", False, _coeff_Kv)
    _register(f"Dv{_i + 1}", False, _coeff_Dv)
    _register(f"Ktv{_i + 1}", False, _coeff_Ktv)


def _cut(fn, cutfn):
    def wrapped(t, x, v):
        wt, wx, wv = fn(t, x, v)
        c = cutfn(v)
        return wt, _scale(c, wx), _scale(c, wv)
    return wrapped


# Gamma1..17: the cut generator set acting on profiles
_register("Gamma1", False, _cut(_coeff_Shatv, psi_ge1_v))
_register("Gamma2", False, _cut(_coeff_Sx, psi_ge1_v))
for _i in range(3):
    _register(f"Gamma{3 + _i}", False,
              _cut(FIELDS[f"Omhatv{_i + 1}"].coeffs, psi_ge1_v))
    _register(f"Gamma{6 + _i}", False,
              _cut(FIELDS[f"Omx{_i + 1}"].coeffs, psi_ge1_v))
    _register(f"Gamma{9 + _i}", False,
              _cut(FIELDS[f"Kv{_i + 1}"].coeffs, psi_le0_v))
    _register(f"Gamma{12 + _i}", False,
              _cut(FIELDS[f"dx{_i + 1}"].coeffs, psi_le0_v))
    FIELDS[f"Gamma{15 + _i}"] = VField(f"Gamma{15 + _i}", False,
                                       FIELDS[f"Omt{_i + 1}"].coeffs)


def _coeff_X1(t, x, v):
    tv = vtilde(v)
    c = psi_ge1_v(v)
    s = lorentz_factor(v)
    cx = -t * c / (s * s * s)
    return None, _scale(cx, tv), _scale(c, tv)


_register("X1", False, _coeff_X1)

for _i in range(3):
    def _coeff_Xrot(t, x, v, i=_i):
        tV = vtilde_cross(i, v)
        c = psi_ge1_v(v)
        cx = -t * c / lorentz_factor(v)
        return None, _scale(cx, tV), _scale(c, tV)

    def _coeff_Xlow(t, x, v, i=_i):
        J = jac_vhat(v)
        c = psi_le0_v(v)
        wv = _zeros3(x)
        wv[i] = c
        return None, _scale(-t * c, J[i]), wv

    _register(f"X{2 + _i}", False, _coeff_Xrot)
    _register(f"X{5 + _i}", False, _coeff_Xlow)


#: unit generators of the cone set, in fixed order
KGENS = tuple(f"Gamma{i}" for i in range(1, 18))

#: metadata: (kind, axis index or None)
KGEN_KIND = {}
KGEN_KIND["Gamma1"] = ("Shatv", None)
KGEN_KIND["Gamma2"] = ("Sx", None)
for _i in range(3):
    KGEN_KIND[f"Gamma{3 + _i}"] = ("Omhatv", _i)
    KGEN_KIND[f"Gamma{6 + _i}"] = ("Omx", _i)
    KGEN_KIND[f"Gamma{9 + _i}"] = ("Kv", _i)
    KGEN_KIND[f"Gamma{12 + _i}"] = ("dx", _i)
    KGEN_KIND[f"Gamma{15 + _i}"] = ("Omt", _i)

_CVN = {"Shatv": 1, "Omhatv": -1}
_CVM = {"Shatv": 1, "Omx": 1}


def cvn_unit(gen):
    return _CVN.get(KGEN_KIND[gen][0], 0)


def cvm_unit(gen):
    return _CVM.get(KGEN_KIND[gen][0], 0)


def omx_count_unit(gen):
    return 1 if KGEN_KIND[gen][0] == "Omx" else 0


#: classical generators (words over these name the alphabet A)
AGENS = ("S", "dx1", "dx2", "dx3", "Om1", "Om2", "Om3", "L1", "L2", "L3")
AGENS_FULL = ("S", "dx1", "dx2", "dx3", "Omt1", "Omt2", "Omt3",
              "Lt1", "Lt2", "Lt3")
XFIELDS = tuple(f"X{i}" for i in range(1, 8))


def field(name):
    try:
        return FIELDS[name]
    except KeyError:
        raise KeyError(f"unknown vector field {name!r}") from None
