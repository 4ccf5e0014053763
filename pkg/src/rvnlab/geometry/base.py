"""Light-cone modulation quantities and the scalar primitives behind them.

Everything here is jet-polymorphic: arguments may be floats, numpy arrays,
or nested jets, so exact derivatives of any coefficient are available to
the commutator machinery.  Quantities that are singular at v=0 or x=0
only ever appear multiplied by cutoffs that vanish identically near the
singularity; guarded versions replace the singular denominator inside the
dead zone so no NaN is produced there.
"""

import numpy as np

from .. import cutoffs
from .jets import Jet, apply_smooth, clip_below, jsqrt

# guards sit strictly inside the dead zones of the cutoffs they serve:
# psi_ge(-1, |v|) vanishes for |v| <= 5/16, psi_ge(0, q) for q <= 5/8
V_FLOOR = 0.15
Q_FLOOR = 0.25

_PSI_GE0 = cutoffs.psi_ge_derivs(0)
_PSI_GE1 = cutoffs.psi_ge_derivs(1)
_PSI_GEM1 = cutoffs.psi_ge_derivs(-1)
_PSI_LE0 = cutoffs.psi_le_derivs(0)
_PSI_LE2 = cutoffs.psi_le_derivs(2)


def dot3(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def norm2(a):
    return dot3(a, a)


def cross_e(i, a):
    """e_i x a for basis vector e_i."""
    if i == 0:
        return [0.0 * a[0], -a[2], a[1]]
    if i == 1:
        return [a[2], 0.0 * a[1], -a[0]]
    return [-a[1], a[0], 0.0 * a[2]]


def lorentz_factor(v):
    """sqrt(1 + |v|^2) for unit mass."""
    return jsqrt(1.0 + norm2(v))


def vhat(v):
    s = lorentz_factor(v)
    return [v[0] / s, v[1] / s, v[2] / s]


def jac_vhat(v):
    """J[i][j] = d vhat_j / d v_i (symmetric)."""
    s = lorentz_factor(v)
    inv_s = 1.0 / s
    inv_s3 = inv_s * inv_s * inv_s
    out = []
    for i in range(3):
        row = []
        for j in range(3):
            term = -(v[i] * v[j]) * inv_s3
            if i == j:
                term = term + inv_s
            row.append(term)
        out.append(row)
    return out


def vnorm_guarded(v):
    return jsqrt(clip_below(norm2(v), V_FLOOR * V_FLOOR))


def vtilde(v):
    n = vnorm_guarded(v)
    return [v[0] / n, v[1] / n, v[2] / n]


def vtilde_cross(i, v):
    return cross_e(i, vtilde(v))


def psi_ge0_q(q):
    return apply_smooth(_PSI_GE0, q)


def psi_ge1_v(v):
    return apply_smooth(_PSI_GE1, vnorm_guarded(v))


def psi_gem1_v(v):
    return apply_smooth(_PSI_GEM1, vnorm_guarded(v))


def psi_le0_v(v):
    return apply_smooth(_PSI_LE0, vnorm_guarded(v))


def psi_le2_v(v):
    return apply_smooth(_PSI_LE2, vnorm_guarded(v))


def q_arg(x, v):
    xv = dot3(x, v)
    return norm2(x) + xv * xv


def omega_pm(x, v):
    """Both roots of the cone factorisation; omega_+ >= 0 >= omega_-."""
    xv = dot3(x, v)
    root = np.sqrt(xv * xv + norm2(x))
    return xv + root, xv - root


def omega_plus_guarded(x, v):
    xv = dot3(x, v)
    return xv + jsqrt(clip_below(q_arg(x, v), Q_FLOOR))


def omega_cut(x, v):
    """Cutoff modulation radius: psi_{>=0}(|x|^2 + (x.v)^2) * omega_+."""
    return psi_ge0_q(q_arg(x, v)) * omega_plus_guarded(x, v)


def dtilde_parts(x, v):
    """(A, B) with dtilde(t) = A + t*B; the t-affine form used throughout."""
    s2 = 1.0 + norm2(v)
    s = jsqrt(s2)
    return -omega_cut(x, v) / s, 1.0 / s2


def dtilde(t, x, v):
    a, b = dtilde_parts(x, v)
    return a + t * b


def d_homogeneous(t, x, v):
    """Modulation without the cutoff (uses raw omega_+)."""
    s2 = 1.0 + norm2(v)
    wp, _ = omega_pm(x, v)
    return t / s2 - wp / np.sqrt(s2)


def cone_factorization_residual(t, x, v):
    """t^2 - |x + vhat t|^2 minus its factorised form through omega_+-."""
    s2 = 1.0 + norm2(v)
    s = np.sqrt(s2)
    wp, wm = omega_pm(x, v)
    y = [x[0] + v[0] / s * t, x[1] + v[1] / s * t, x[2] + v[2] / s * t]
    lhs = t * t - norm2(y)
    rhs = (t / s2 - wp / s) * (t - s * wm)
    return lhs - rhs
