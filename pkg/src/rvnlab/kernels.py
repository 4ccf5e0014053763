"""Hot numeric kernels: semi-Lagrangian velocity-space advection.

The distribution reaches these kernels x-major, shape (nx^3, nv, nv, nv),
so each x-cell owns a contiguous velocity cube.  The jitted path
parallelises over x-cells; the numpy path reproduces the same arithmetic
vectorised (it is selected with RVNLAB_NUMBA=0 and doubles as a test
reference).

One step traces the velocity characteristic backward through the
Strang-composed dilation/force maps

    a    = dtphi + vhat . g            (per node)
    w1   = exp(a dt/2) v
    w2   = w1 + dt * m^2 g / sqrt(m^2 + |w_mid|^2)
    foot = exp(a dt/2) w2

with dtphi, g = grad_x phi frozen at the cell, then gathers with cubic
Lagrange interpolation per axis and applies the dilation amplitude
exp(4 a dt).  Feet outside the velocity box are clamped and counted.
"""

import numpy as np

from .backend import USE_NUMBA, njit, prange


@njit(cache=True)
def _cubic_weights(frac):
    w0 = -frac * (frac - 1.0) * (frac - 2.0) / 6.0
    w1 = (frac * frac - 1.0) * (frac - 2.0) / 2.0
    w2 = -frac * (frac + 1.0) * (frac - 2.0) / 2.0
    w3 = frac * (frac * frac - 1.0) / 6.0
    return w0, w1, w2, w3


@njit(parallel=True, cache=True)
def advect_v_numba(f, dtphi_cell, g_cell, v0, dv, dt, m2, out):
    ncell = f.shape[0]
    nv = f.shape[1]
    vmax = v0 + (nv - 1) * dv
    clamped = 0
    for ic in prange(ncell):
        dphi = dtphi_cell[ic]
        gx = g_cell[ic, 0]
        gy = g_cell[ic, 1]
        gz = g_cell[ic, 2]
        cell_clamped = 0
        for i1 in range(nv):
            vx = v0 + i1 * dv
            for i2 in range(nv):
                vy = v0 + i2 * dv
                for i3 in range(nv):
                    vz = v0 + i3 * dv
                    s = np.sqrt(m2 + vx * vx + vy * vy + vz * vz)
                    if s < 1e-30:
                        s = 1e-30   # massless origin node: numerator is 0
                    a = dphi + (vx * gx + vy * gy + vz * gz) / s
                    ea = np.exp(0.5 * a * dt)
                    w1x = vx * ea
                    w1y = vy * ea
                    w1z = vz * ea
                    s = np.sqrt(m2 + w1x * w1x + w1y * w1y + w1z * w1z)
                    if s < 1e-30:
                        s = 1e-30
                    c = 0.5 * dt * m2 / s
                    mx = w1x + c * gx
                    my = w1y + c * gy
                    mz = w1z + c * gz
                    s = np.sqrt(m2 + mx * mx + my * my + mz * mz)
                    if s < 1e-30:
                        s = 1e-30
                    c = dt * m2 / s
                    fx = (w1x + c * gx) * ea
                    fy = (w1y + c * gy) * ea
                    fz = (w1z + c * gz) * ea
                    if (fx < v0 or fx > vmax or fy < v0 or fy > vmax
                            or fz < v0 or fz > vmax):
                        cell_clamped += 1
                        if fx < v0:
                            fx = v0
                        elif fx > vmax:
                            fx = vmax
                        if fy < v0:
                            fy = v0
                        elif fy > vmax:
                            fy = vmax
                        if fz < v0:
                            fz = v0
                        elif fz > vmax:
                            fz = vmax
                    ux = (fx - v0) / dv
                    uy = (fy - v0) / dv
                    uz = (fz - v0) / dv
                    ja = int(np.floor(ux))
                    jb = int(np.floor(uy))
                    jc = int(np.floor(uz))
                    wa = _cubic_weights(ux - ja)
                    wb = _cubic_weights(uy - jb)
                    wc = _cubic_weights(uz - jc)
                    acc = 0.0
                    for ma in range(4):
                        ka = ja - 1 + ma
                        if ka < 0:
                            ka = 0
                        elif ka > nv - 1:
                            ka = nv - 1
                        pa = wa[ma]
                        for mb in range(4):
                            kb = jb - 1 + mb
                            if kb < 0:
                                kb = 0
                            elif kb > nv - 1:
                                kb = nv - 1
                            pab = pa * wb[mb]
                            base = f[ic, ka, kb]
                            part = 0.0
                            for mc in range(4):
                                kc = jc - 1 + mc
                                if kc < 0:
                                    kc = 0
                                elif kc > nv - 1:
                                    kc = nv - 1
                                part += wc[mc] * base[kc]
                            acc += pab * part
                    out[ic, i1, i2, i3] = np.exp(4.0 * a * dt) * acc
        clamped += cell_clamped
    return clamped


def _cubic_weights_np(frac):
    w0 = -frac * (frac - 1.0) * (frac - 2.0) / 6.0
    w1 = (frac * frac - 1.0) * (frac - 2.0) / 2.0
    w2 = -frac * (frac + 1.0) * (frac - 2.0) / 2.0
    w3 = frac * (frac * frac - 1.0) / 6.0
    return np.stack([w0, w1, w2, w3], axis=-1)


def advect_v_numpy(f, dtphi_cell, g_cell, v0, dv, dt, m2, out):
    """Vectorised path with semantics identical to the jitted kernel."""
    ncell, nv = f.shape[0], f.shape[1]
    vmax = v0 + (nv - 1) * dv
    ax = v0 + dv * np.arange(nv)
    V = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), -1)
    sV = np.maximum(np.sqrt(m2 + (V ** 2).sum(-1)), 1e-30)
    clamped = 0
    for ic in range(ncell):
        g = g_cell[ic]
        a = dtphi_cell[ic] + (V @ g) / sV
        ea = np.exp(0.5 * a * dt)[..., None]
        w1 = V * ea
        s = np.maximum(np.sqrt(m2 + (w1 ** 2).sum(-1, keepdims=True)),
                       1e-30)
        mid = w1 + (0.5 * dt * m2 / s) * g
        s = np.maximum(np.sqrt(m2 + (mid ** 2).sum(-1, keepdims=True)),
                       1e-30)
        foot = (w1 + (dt * m2 / s) * g) * ea
        outside = (foot < v0) | (foot > vmax)
        clamped += int(np.any(outside, axis=-1).sum())
        foot = np.clip(foot, v0, vmax)
        u = (foot - v0) / dv
        i0 = np.floor(u).astype(np.int64)
        frac = u - i0
        vals = np.zeros(V.shape[:-1])
        w_ax = [_cubic_weights_np(frac[..., d]) for d in range(3)]
        idx_ax = [np.clip(i0[..., d, None] - 1 + np.arange(4), 0, nv - 1)
                  for d in range(3)]
        cube = f[ic]
        for ma in range(4):
            for mb in range(4):
                gathered = cube[idx_ax[0][..., ma], idx_ax[1][..., mb]]
                sub = np.take_along_axis(gathered, idx_ax[2], axis=-1)
                vals += (w_ax[0][..., ma] * w_ax[1][..., mb]
                         * (sub * w_ax[2]).sum(-1))
        out[ic] = np.exp(4.0 * a * dt) * vals
    return clamped


def advect_v(f, dtphi_cell, g_cell, v0, dv, dt, m2, out=None):
    """Dispatch to the jitted or numpy path; returns (out, clamp_count)."""
    if out is None:
        out = np.empty_like(f)
    if USE_NUMBA:
        n = advect_v_numba(f, dtphi_cell, g_cell, float(v0), float(dv),
                           float(dt), float(m2), out)
    else:
        n = advect_v_numpy(f, dtphi_cell, g_cell, float(v0), float(dv),
                           float(dt), float(m2), out)
    return out, int(n)
