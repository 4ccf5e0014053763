"""Independent brute-force verifiers.

Finite-difference application of the vector fields, nested FD
commutators, analytic free flows, and slope fitting.  The coefficient
formulas here are transcribed directly from their displayed definitions
and deliberately share no code with the geometry module (see the
structural test in the suite): agreement between the two sides is
evidence, not tautology.
"""

import numpy as np

# -- own copy of the cutoff profile ------------------------------------------


def _bump(r):
    a = np.abs(np.asarray(r, dtype=float))
    u = np.clip((a - 1.25) * 4.0, 0.0, 1.0)
    return 1.0 - u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)


def _psi_le(k, r):
    return _bump(r / 2.0 ** k)


def _psi_ge(k, r):
    return 1.0 - _psi_le(k - 1, r)


def _omega(x, v):
    xv = float(np.dot(x, v))
    q = float(np.dot(x, x)) + xv * xv
    c = _psi_ge(0, q)
    if c == 0.0:
        return 0.0
    return c * (xv + np.sqrt(q))


def _s(v):
    return np.sqrt(1.0 + float(np.dot(v, v)))


def _vhat(v):
    return v / _s(v)


def _jac_vhat(v):
    s = _s(v)
    return np.eye(3) / s - np.outer(v, v) / s ** 3


def _vt(v):
    n = np.linalg.norm(v)
    return v / n if n > 0 else np.zeros(3)


def _e(i):
    out = np.zeros(3)
    out[i] = 1.0
    return out


def field_coefficients(name, t, x, v):
    """(wt, wx, wv) of the named operator, transcribed independently.

    wt is None for fields with no time derivative.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    z = np.zeros(3)
    if name == "S":
        return t, x.copy(), z
    if name.startswith("dx"):
        return None, _e(int(name[2]) - 1), z
    if name.startswith("Omt"):
        i = int(name[3]) - 1
        return None, np.cross(_e(i), x), np.cross(_e(i), v)
    if name.startswith("Om") and name[2] in "123":
        i = int(name[2]) - 1
        return None, np.cross(_e(i), x), z
    if name.startswith("Lt"):
        i = int(name[2]) - 1
        return x[i], t * _e(i), _s(v) * _e(i)
    if name.startswith("L"):
        i = int(name[1]) - 1
        return x[i], t * _e(i), z
    if name == "Sv":
        return None, z, _vt(v)
    if name == "Sx":
        return None, _vt(v), z
    if name == "Shatv":
        tv = _vt(v)
        return None, -_omega(x, v) / (1.0 + np.dot(v, v)) * tv, tv
    if name.startswith("Omhatv"):
        i = int(name[6]) - 1
        tV = np.cross(_e(i), _vt(v))
        return None, -_omega(x, v) * tV, tV
    if name.startswith("Omv"):
        i = int(name[3]) - 1
        return None, z, np.cross(_e(i), _vt(v))
    if name.startswith("Omx"):
        i = int(name[3]) - 1
        return None, np.cross(_e(i), _vt(v)), z
    if name.startswith("Ktv"):
        i = int(name[3]) - 1
        xs = x - _vhat(v) * t
        c = t - _s(v) * _omega(xs, v)
        return None, c * _jac_vhat(v)[i], _e(i)
    if name.startswith("Kv"):
        i = int(name[2]) - 1
        c = -_s(v) * _omega(x, v)
        return None, c * _jac_vhat(v)[i], _e(i)
    if name.startswith("Dv"):
        i = int(name[2]) - 1
        return None, -t * _jac_vhat(v)[i], _e(i)
    if name.startswith("Gamma"):
        idx = int(name[5:])
        nv = np.linalg.norm(v)
        if idx == 1:
            c = _psi_ge(1, nv)
            base = "Shatv"
        elif idx == 2:
            c = _psi_ge(1, nv)
            base = "Sx"
        elif 3 <= idx <= 5:
            c = _psi_ge(1, nv)
            base = f"Omhatv{idx - 2}"
        elif 6 <= idx <= 8:
            c = _psi_ge(1, nv)
            base = f"Omx{idx - 5}"
        elif 9 <= idx <= 11:
            c = _psi_le(0, nv)
            base = f"Kv{idx - 8}"
        elif 12 <= idx <= 14:
            c = _psi_le(0, nv)
            base = f"dx{idx - 11}"
        else:
            return field_coefficients(f"Omt{idx - 14}", t, x, v)
        if c == 0.0:
            return None, z, z
        wt, wx, wv = field_coefficients(base, t, x, v)
        return wt, c * wx, c * wv
    if name.startswith("X"):
        idx = int(name[1:])
        nv = np.linalg.norm(v)
        if idx == 1:
            c = _psi_ge(1, nv)
            if c == 0.0:
                return None, z, z
            tv = _vt(v)
            return None, -t * c / _s(v) ** 3 * tv, c * tv
        if 2 <= idx <= 4:
            c = _psi_ge(1, nv)
            if c == 0.0:
                return None, z, z
            tV = np.cross(_e(idx - 2), _vt(v))
            return None, -t * c / _s(v) * tV, c * tV
        c = _psi_le(0, nv)
        if c == 0.0:
            return None, z, z
        i = idx - 5
        return None, -t * c * _jac_vhat(v)[i], c * _e(i)
    raise KeyError(f"unknown field {name!r}")


# -- finite differencing ------------------------------------------------------

class FDScheme:
    """Step control: steps scale with |coordinate| + 1."""

    def __init__(self, step=1e-4, stencil="central-2"):
        if stencil not in ("central-2", "central-4"):
            raise ValueError("stencil must be central-2 or central-4")
        self.step = step
        self.stencil = stencil

    def diff(self, f, u0):
        """d/du f(u) at u0 with coordinate-scaled step."""
        h = self.step * (1.0 + abs(u0))
        if h < 1e-13:
            raise ValueError("step underflow")
        if self.stencil == "central-2":
            return (f(u0 + h) - f(u0 - h)) / (2.0 * h)
        return (8.0 * (f(u0 + h) - f(u0 - h))
                - (f(u0 + 2 * h) - f(u0 - 2 * h))) / (12.0 * h)


def fd_vector_field(name, h, t, x, v, scheme=None):
    """(Lambda h)(t,x,v) from FD partials of the value callback h."""
    scheme = scheme or FDScheme()
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    wt, wx, wv = field_coefficients(name, t, x, v)
    acc = 0.0
    for i in range(3):
        if wx[i] != 0.0:
            def fx(u, i=i):
                xq = x.copy()
                xq[i] = u
                return h(t, xq, v)
            acc += wx[i] * scheme.diff(fx, x[i])
        if wv[i] != 0.0:
            def fv(u, i=i):
                vq = v.copy()
                vq[i] = u
                return h(t, x, vq)
            acc += wv[i] * scheme.diff(fv, v[i])
    if wt is not None and wt != 0.0:
        acc += wt * scheme.diff(lambda u: h(u, x, v), t)
    return acc


def fd_commutator(i, rho, h, t, x, v, scheme=None):
    """[X_i, Lambda^rho] h by nested finite differences.

    rho may be a name or a tuple of names (leftmost outermost).
    """
    outer = scheme or FDScheme(step=5e-4, stencil="central-4")
    inner = FDScheme(step=outer.step, stencil=outer.stencil)
    word = (rho,) if isinstance(rho, str) else tuple(rho)

    def lam_h(tq, xq, vq):
        return _apply_word_fd(word, h, tq, xq, vq, inner)

    def xi_h(tq, xq, vq):
        return fd_vector_field(f"X{i}", h, tq, xq, vq, inner)

    left = fd_vector_field(f"X{i}", lam_h, t, x, v, outer)
    right = _apply_word_fd(word, xi_h, t, x, v, outer)
    return left - right


def _apply_word_fd(word, h, t, x, v, scheme):
    if not word:
        return h(t, x, v)
    head, rest = word[0], word[1:]

    def inner(tq, xq, vq):
        return _apply_word_fd(rest, h, tq, xq, vq, scheme)

    return fd_vector_field(head, inner, t, x, v, scheme)


def fd_transport_commutator(name, h, t, x, v, scheme=None):
    """Residual of [d_t + vhat.grad_x, Lambda] h, including time partials."""
    scheme = scheme or FDScheme()
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)

    def transport(hh):
        def out(tq, xq, vq):
            vh = _vhat(np.asarray(vq, dtype=float))
            acc = scheme.diff(lambda u: hh(u, xq, vq), tq)
            for i in range(3):
                def fx(u, i=i):
                    xr = np.asarray(xq, dtype=float).copy()
                    xr[i] = u
                    return hh(tq, xr, vq)
                acc += vh[i] * scheme.diff(fx, xq[i])
            return acc
        return out

    def lam(hh):
        def out(tq, xq, vq):
            return fd_vector_field(name, hh, tq, xq, vq, scheme)
        return out

    return transport(lam(h))(t, x, v) - lam(transport(h))(t, x, v)


# -- analytic free flows ------------------------------------------------------

def free_transport(f0, t, mass=1.0):
    """Exact free-streamed phase-space density as a callable (x, v)."""
    def f(x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        s = np.sqrt(mass ** 2 + (v * v).sum(-1))[..., None]
        return f0(x - v * t / s, v)
    return f


def transport_on_grid(f0_grid, xaxes, vaxes, t, mass=1.0, f0=None):
    """Sample f0(x - vhat t, v) on a tensor grid; exact when f0 is given
    in closed form, otherwise raises (no interpolation here)."""
    if f0 is None:
        raise ValueError("closed-form f0 required for the exact reference")
    xg = np.stack(np.meshgrid(*xaxes, indexing="ij"), -1)
    out = np.empty(tuple(len(a) for a in xaxes) + tuple(len(a) for a in vaxes))
    for i1, v1 in enumerate(vaxes[0]):
        for i2, v2 in enumerate(vaxes[1]):
            for i3, v3 in enumerate(vaxes[2]):
                v = np.array([v1, v2, v3])
                s = np.sqrt(mass ** 2 + v @ v)
                out[..., i1, i2, i3] = f0(xg - v * t / s, v)
    return out


def halfwave_reference(u0_hat, kmag, t):
    """Spectral free half-wave: multiply by exp(-i t |xi|)."""
    return np.exp(-1j * t * kmag) * u0_hat


# -- fitting ------------------------------------------------------------------

def slope_fit(ts, values, window=None):
    """Least-squares slope of log(value) against log(t).

    Requires at least 8 points spanning at least one decade; values must
    be positive.  Returns (slope, stderr); deterministic.
    """
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is not None:
        keep = (ts >= window[0]) & (ts <= window[1])
        ts, values = ts[keep], values[keep]
    if np.any(values <= 0.0):
        raise ValueError("slope_fit needs positive values")
    if len(ts) < 8:
        raise ValueError("slope_fit needs at least 8 points")
    if ts.max() / ts.min() < 10.0:
        raise ValueError("slope_fit needs at least one decade of t")
    lt, lv = np.log(ts), np.log(values)
    A = np.stack([lt, np.ones_like(lt)], axis=1)
    coef, res, *_ = np.linalg.lstsq(A, lv, rcond=None)
    dof = max(len(ts) - 2, 1)
    resid = lv - A @ coef
    var = (resid @ resid) / dof
    cov = var * np.linalg.inv(A.T @ A)
    return coef[0], float(np.sqrt(cov[0, 0]))


def direct_weighted_l2(values, weight, dx3, dv3):
    """Plain-loop weighted L2 norm over a 6D grid (independent check)."""
    total = 0.0
    flat_w = np.asarray(weight).reshape(-1)
    flat_f = np.asarray(values).reshape(-1)
    for k in range(flat_f.size):
        term = flat_w[k] * flat_f[k]
        total += term * term
    return np.sqrt(total * dx3 * dv3)
