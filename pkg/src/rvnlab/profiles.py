"""Profiles, half-wave states, modified profiles, and evolution right-hand
sides.

The distribution f(t,x,v) and its free-streaming pullback g(t,x,v) =
f(t, x + vhat t, v) live on a tensor grid: a periodic x-cube crossed
with a velocity cube.  The x-side is spectral; velocity integrals use
the uniform v-lattice weights (rectangle rule; data decays inside the
box).  The half-wave state carries (phi, d_t phi) with u = d_t phi -
i|grad|phi and profile h = e^{i t |grad|} u.
"""

from dataclasses import dataclass, field

import numpy as np

try:
    from scipy import fft as _sfft

    def _fftn(a, axes):
        return _sfft.fftn(a, axes=axes, workers=-1)

    def _ifftn(a, axes):
        return _sfft.ifftn(a, axes=axes, workers=-1)
except ImportError:  # pragma: no cover
    def _fftn(a, axes):
        return np.fft.fftn(a, axes=axes)

    def _ifftn(a, axes):
        return np.fft.ifftn(a, axes=axes)

from .spectral import SpectralGrid


class PhaseSpaceGrid:
    """Geometry of the x,v tensor grid (cubic boxes, unit mass default)."""

    def __init__(self, nx, nv, L, V, mass=1):
        self.nx, self.nv = int(nx), int(nv)
        self.L, self.V = float(L), float(V)
        self.mass = int(mass)
        self.x = SpectralGrid(nx, L)
        self.vaxis = np.linspace(-self.V, self.V, self.nv, endpoint=False)
        self.dv = self.vaxis[1] - self.vaxis[0]
        self.vvec = np.stack(np.meshgrid(self.vaxis, self.vaxis, self.vaxis,
                                         indexing="ij"), -1)
        self.vflat = self.vvec.reshape(-1, 3)
        self.smag = np.sqrt(mass ** 2 + (self.vflat ** 2).sum(-1))
        if mass == 0:
            self.smag = np.where(self.smag > 0, self.smag, 1.0)
        self.vhat_flat = self.vflat / self.smag[:, None]
        self.nv3 = self.nv ** 3

    @property
    def shape6(self):
        n, m = self.nx, self.nv
        return (n, n, n, m, m, m)

    def weights_v(self):
        return self.dv ** 3

    def vhat_max(self):
        return np.abs(self.vhat_flat).max()


@dataclass
class DistributionGrid:
    """Density values on the tensor grid; kind is 'physical' or 'profile'."""

    grid: PhaseSpaceGrid
    values: np.ndarray
    kind: str = "physical"

    def copy(self):
        return DistributionGrid(self.grid, self.values.copy(), self.kind)

    def xv_view(self):
        """(nx^3, nv, nv, nv) view for the advection kernels."""
        n, m = self.grid.nx, self.grid.nv
        return self.values.reshape(n ** 3, m, m, m)

    def vx_matrix(self):
        """(nv^3, nx, nx, nx) copy: v-major for per-slice x transforms."""
        n, m = self.grid.nx, self.grid.nv
        arr = self.values.reshape(n ** 3, m ** 3)
        return np.ascontiguousarray(arr.T).reshape(m ** 3, n, n, n)

    def from_vx_matrix(self, arr):
        n, m = self.grid.nx, self.grid.nv
        self.values = np.ascontiguousarray(
            arr.reshape(m ** 3, n ** 3).T).reshape(self.grid.shape6)

    def mass_integral(self):
        g = self.grid
        return self.values.sum() * g.x.dx ** 3 * g.weights_v()

    def density(self):
        """velocity integral, an x-field."""
        return self.values.reshape(self.grid.shape6).sum(axis=(3, 4, 5)) \
            * self.grid.weights_v()


_PHASE_CACHE = {}


def streaming_phase(grid, coeff, max_bytes=1 << 29):
    """exp(i coeff vhat.xi) for every v-node, Nyquist-projected; cached
    per (grid, coeff) since the solver reuses one step size throughout."""
    key = (grid.nx, grid.nv, grid.L, grid.V, grid.mass,
           float(coeff))
    hit = _PHASE_CACHE.get(key)
    if hit is not None:
        return hit
    KX = grid.x.kvec
    nbytes = 16 * grid.nv3 * grid.nx ** 3
    phase = np.exp(1j * np.einsum("xyzc,nc->nxyz", KX,
                                  coeff * grid.vhat_flat))
    phase *= grid.x.shift_mask
    if nbytes <= max_bytes:
        if len(_PHASE_CACHE) > 4:
            _PHASE_CACHE.clear()
        _PHASE_CACHE[key] = phase
    return phase


def shift_per_v(dist, t, sign):
    """Translate each v-slice by sign * vhat * t (spectral, exact on the
    shift-invariant band)."""
    g = dist.grid
    arr = dist.vx_matrix()
    out = np.empty_like(arr)
    chunk = max(1, (1 << 22) // (g.nx ** 3))
    phase = streaming_phase(g, sign * t)
    for lo in range(0, g.nv3, chunk):
        hi = min(lo + chunk, g.nv3)
        hat = _fftn(arr[lo:hi], axes=(1, 2, 3))
        out[lo:hi] = _ifftn(hat * phase[lo:hi], axes=(1, 2, 3)).real
    res = DistributionGrid(g, np.empty(g.shape6), dist.kind)
    res.from_vx_matrix(out)
    return res


def to_profile(f, t):
    """g(x, v) = f(x + vhat t, v)."""
    if f.kind != "physical":
        raise ValueError("to_profile expects a physical-kind grid")
    out = shift_per_v(f, t, +1.0)
    out.kind = "profile"
    return out


def from_profile(g, t):
    """f(x, v) = g(x - vhat t, v)."""
    if g.kind != "profile":
        raise ValueError("from_profile expects a profile-kind grid")
    out = shift_per_v(g, t, -1.0)
    out.kind = "physical"
    return out


def fft_x_slices(dist):
    """x-Fourier transform per v-slice: (nv^3, nx, nx, nx) complex."""
    g = dist.grid
    arr = dist.vx_matrix()
    return _fftn(arr, axes=(1, 2, 3)) * g.x.dx ** 3


@dataclass
class WaveState:
    """Scalar field snapshot (phi, d_t phi) at time t on the x-grid."""

    grid: PhaseSpaceGrid
    phi: np.ndarray
    dtphi: np.ndarray
    t: float = 0.0

    def copy(self):
        return WaveState(self.grid, self.phi.copy(), self.dtphi.copy(), self.t)

    def u_hat(self):
        """Half wave u = d_t phi - i |grad| phi, spectrally."""
        sg = self.grid.x
        return sg.fft(self.dtphi) - 1j * sg.kmag * sg.fft(self.phi)

    def h_hat(self):
        """Free-flow profile e^{i t |grad|} u."""
        sg = self.grid.x
        return np.exp(1j * self.t * sg.kmag) * self.u_hat()

    def from_u_hat(self, u_hat, phi_mean=0.0):
        """Recover (phi, dtphi); the phi zero mode is supplied separately."""
        sg = self.grid.x
        u = sg.ifft(u_hat)
        self.dtphi = u.real.copy()
        lam_phi_hat = -sg.fft(u.imag)
        phi_hat = sg.inv_modulus(lam_phi_hat)
        phi = sg.ifft(phi_hat).real
        self.phi = phi + (phi_mean - phi.mean())

    def grad_phi(self):
        sg = self.grid.x
        ph = sg.fft(self.phi)
        return np.stack([sg.ifft(gh).real for gh in sg.gradient(ph)], -1)

    def energy_wave(self):
        """Discrete free-wave energy of (phi, dtphi)."""
        sg = self.grid.x
        ph = sg.fft(self.phi)
        e = sg.l2_norm(self.dtphi) ** 2
        for c in sg.gradient(ph):
            e += np.sum(np.abs(sg.ifft(c)) ** 2) * sg.dx ** 3
        return 0.5 * e


# ---------------------------------------------------------------------------
# source moment and phase helpers

def source_moment_hat(f, chunk_elems=1 << 22):
    """Fourier transform of the wave source: integral of m^2 f / s dv."""
    g = f.grid
    arr = f.vx_matrix()
    total = np.zeros((g.nx,) * 3, dtype=complex)
    m2 = float(g.mass ** 2)
    if m2 == 0.0:
        return total
    chunk = max(1, chunk_elems // (g.nx ** 3))
    for lo in range(0, g.nv3, chunk):
        hi = min(lo + chunk, g.nv3)
        hat = _fftn(arr[lo:hi], axes=(1, 2, 3)) * g.x.dx ** 3
        w = m2 / g.smag[lo:hi]
        total += np.einsum("nxyz,n->xyz", hat, w)
    return total * g.weights_v()


def phase_factor(grid, coeff_flat, sel=None):
    """exp(1j * coeff_j * (vhat_j . xi)) for a block of v-nodes."""
    KX = grid.x.kvec
    vh = grid.vhat_flat if sel is None else grid.vhat_flat[sel]
    c = coeff_flat if np.ndim(coeff_flat) else np.full(len(vh), coeff_flat)
    return np.exp(1j * np.einsum("xyzc,nc->nxyz", KX, c[:, None] * vh))


# ---------------------------------------------------------------------------
# modified profiles and the resonant correction operator

def _phase_denominator(grid, sel):
    """|xi| - vhat.xi per (v-node, xi); zero mode row masked to 1."""
    sg = grid.x
    vh = grid.vhat_flat[sel]
    dot = np.einsum("xyzc,nc->nxyz", sg.kvec, vh)
    denom = sg.kmag[None] - dot
    guard = np.abs(dot) >= (1.0 - 1e-6) * np.where(sg.kmag > 0, sg.kmag, 1.0)
    if np.any(guard & (sg.kmag[None] > 0)):
        raise ValueError("velocity box admits |vhat.xi| ~ |xi|; "
                         "modified profiles need the massive normalisation")
    return np.where(np.abs(denom) > 0, denom, 1.0)


def _atilde_values(grid, alpha, gamma, atilde=None):
    if atilde is not None:
        return np.asarray(atilde, dtype=float)
    if tuple(alpha) == tuple(gamma):
        return 1.0 / grid.smag
    raise KeyError("coefficient function required for gamma != alpha; "
                   "pass atilde or use expansion.atilde_coeffs")


def modified_profile(wave, g_family, t, alpha=(), atilde_map=None,
                     chunk_elems=1 << 21):
    """h-tilde transform: profile plus the resonant source correction.

    g_family maps derivative words gamma -> DistributionGrid (profile
    kind).  atilde_map (optional) maps gamma -> per-v-node coefficient
    array; by default only the diagonal gamma = alpha term (coefficient
    1/sqrt(1+|v|^2)) is present.
    """
    grid = wave.grid
    sg = grid.x
    out = wave.h_hat()
    zero_mask = sg.kmag > 0
    for gamma, gdist in g_family.items():
        coeff = _atilde_values(
            grid, alpha, gamma,
            None if atilde_map is None else atilde_map.get(tuple(gamma)))
        coeff = np.broadcast_to(coeff, (grid.nv3,))
        arr = gdist.vx_matrix()
        chunk = max(1, chunk_elems // (grid.nx ** 3))
        corr = np.zeros_like(out)
        for lo in range(0, grid.nv3, chunk):
            hi = min(lo + chunk, grid.nv3)
            sel = slice(lo, hi)
            ghat = _fftn(arr[sel], axes=(1, 2, 3)) * sg.dx ** 3
            denom = _phase_denominator(grid, sel)
            phase = np.exp(1j * t * denom)
            corr += np.einsum("nxyz,n->xyz",
                              phase * ghat / denom, coeff[sel])
        corr *= 1j * grid.weights_v()
        out = out + np.where(zero_mask, corr, 0.0)
    return out


def e_operator(gdist, t, alpha=(), gamma=(), atilde=None,
               chunk_elems=1 << 21):
    """Resonant correction field: inverse transform of
    -i a(v) / (|xi| - vhat.xi) acting on the v-integrated source."""
    grid = gdist.grid
    sg = grid.x
    coeff = np.broadcast_to(_atilde_values(grid, alpha, gamma, atilde),
                            (grid.nv3,))
    arr = gdist.vx_matrix()
    chunk = max(1, chunk_elems // (grid.nx ** 3))
    acc = np.zeros((grid.nx,) * 3, dtype=complex)
    for lo in range(0, grid.nv3, chunk):
        hi = min(lo + chunk, grid.nv3)
        sel = slice(lo, hi)
        ghat = _fftn(arr[sel], axes=(1, 2, 3)) * sg.dx ** 3
        denom = _phase_denominator(grid, sel)
        vh = grid.vhat_flat[sel]
        dot = np.einsum("xyzc,nc->nxyz", sg.kvec, vh)
        phase = np.exp(-1j * t * dot)
        acc += np.einsum("nxyz,n->xyz", phase * ghat / denom, coeff[sel])
    acc *= -1j * grid.weights_v()
    acc = np.where(sg.kmag > 0, acc, 0.0)
    return sg.ifft(acc)


def recover_fields(htilde_hat, wave_grid, g_family, t, alpha=(),
                   atilde_map=None):
    """(phi, d_t phi) reconstructed from the modified profile plus the
    correction fields."""
    sg = wave_grid.x
    u_hat = np.exp(-1j * t * sg.kmag) * htilde_hat
    u = sg.ifft(u_hat)
    dtphi = u.real.copy()
    phi_hat = sg.inv_modulus(-sg.fft(u.imag))
    phi = sg.ifft(phi_hat).real
    for gamma, gdist in g_family.items():
        e_field = e_operator(
            gdist, t, alpha, gamma,
            None if atilde_map is None else atilde_map.get(tuple(gamma)))
        dtphi = dtphi + e_field.real
        phi = phi - sg.ifft(sg.inv_modulus(sg.fft(e_field.imag))).real
    return phi, dtphi


# ---------------------------------------------------------------------------
# evolution right-hand sides

def profile_rhs_g(wave, g, t):
    """d_t g from the coupled system, evaluated physical-side.

    Returns a DistributionGrid-rate (profile kind).  Uses spectral x- and
    v-derivatives of g and the wave fields shifted to x + vhat t.
    """
    grid = g.grid
    sg = grid.x
    if grid.mass != 1:
        raise ValueError("profile evolution uses the unit-mass form")
    # plain-normalised transforms: the chunked ifft below must return
    # physical field values
    phi_hat = _fftn(wave.phi, axes=(0, 1, 2))
    dtphi_hat = _fftn(wave.dtphi, axes=(0, 1, 2))
    grad_hat = [1j * sg.kvec[..., c] * phi_hat for c in range(3)]
    KX = sg.kvec
    kv1 = 2.0 * np.pi * np.fft.fftfreq(grid.nv, d=grid.dv)
    n, m = grid.nx, grid.nv
    g6 = g.values
    # spectral v-gradient on the x-major layout (axes 3,4,5)
    gv_hat = _fftn(g6, axes=(3, 4, 5))
    dvg = np.empty((3,) + g6.shape)
    for c, axis in enumerate((3, 4, 5)):
        shape = [1] * 6
        shape[axis] = m
        kk = kv1.reshape(shape)
        dvg[c] = _ifftn(1j * kk * gv_hat, axes=(3, 4, 5)).real
    del gv_hat

    dxg_hat = _fftn(g6, axes=(0, 1, 2))
    dxg = np.empty((3,) + g6.shape)
    for c in range(3):
        shape = [1] * 6
        shape[c] = n
        kk = sg.k1.reshape(shape)
        dxg[c] = _ifftn(1j * kk * dxg_hat, axes=(0, 1, 2)).real
    del dxg_hat

    vh = grid.vhat_flat
    smag = grid.smag
    vfl = grid.vflat
    rate6 = np.zeros_like(g6)
    chunk = max(1, (1 << 21) // (n ** 3))
    dvg_m = dvg.reshape(3, n ** 3, m ** 3)
    dxg_m = dxg.reshape(3, n ** 3, m ** 3)
    g_m = g6.reshape(n ** 3, m ** 3)
    rate_m = rate6.reshape(n ** 3, m ** 3)
    for lo in range(0, grid.nv3, chunk):
        hi = min(lo + chunk, grid.nv3)
        nblk = hi - lo
        phases = np.exp(1j * np.einsum("xyzc,nc->nxyz", KX,
                                       t * vh[lo:hi]))
        A = _ifftn(phases * dtphi_hat[None], axes=(1, 2, 3)).real
        G = np.empty((nblk, 3) + (n, n, n))
        for c in range(3):
            G[:, c] = _ifftn(phases * grad_hat[c][None], axes=(1, 2, 3)).real
        Avg = A + np.einsum("ncxyz,nc->nxyz", G, vh[lo:hi])
        # D_v g = grad_v g - t (J vhat) grad_x g per component
        s = smag[lo:hi]
        vv = vfl[lo:hi]
        for jloc, j in enumerate(range(lo, hi)):
            Dv = np.empty((3, n ** 3))
            Jrow = (np.eye(3) / s[jloc]
                    - np.outer(vv[jloc], vv[jloc]) / s[jloc] ** 3)
            for c in range(3):
                Dv[c] = dvg_m[c, :, j] - t * (
                    Jrow[c, 0] * dxg_m[0, :, j]
                    + Jrow[c, 1] * dxg_m[1, :, j]
                    + Jrow[c, 2] * dxg_m[2, :, j])
            avg = Avg[jloc].reshape(-1)
            gcol = g_m[:, j]
            vdot = (vv[jloc, 0] * Dv[0] + vv[jloc, 1] * Dv[1]
                    + vv[jloc, 2] * Dv[2])
            gd = (G[jloc, 0].reshape(-1) * Dv[0]
                  + G[jloc, 1].reshape(-1) * Dv[1]
                  + G[jloc, 2].reshape(-1) * Dv[2])
            rate_m[:, j] = avg * (4.0 * gcol + vdot) + gd / s[jloc]
    return DistributionGrid(grid, rate6, "profile")


def profile_rhs_htilde(wave, g, t):
    """d_t of the modified profile, as the resonant-weighted transform of
    the profile rate: quadrature over v of
    e^{i t (|xi| - vhat.xi)} i / ((|xi| - vhat.xi) sqrt(1+|v|^2)) d_t ghat.
    """
    grid = g.grid
    sg = grid.x
    rate = profile_rhs_g(wave, g, t)
    arr = rate.vx_matrix()
    chunk = max(1, (1 << 21) // (grid.nx ** 3))
    out = np.zeros((grid.nx,) * 3, dtype=complex)
    for lo in range(0, grid.nv3, chunk):
        hi = min(lo + chunk, grid.nv3)
        sel = slice(lo, hi)
        hat = _fftn(arr[sel], axes=(1, 2, 3)) * sg.dx ** 3
        denom = _phase_denominator(grid, sel)
        phase = np.exp(1j * t * denom)
        out += np.einsum("nxyz,n->xyz", phase * hat / denom,
                         1.0 / grid.smag[sel])
    out *= 1j * grid.weights_v()
    return np.where(sg.kmag > 0, out, 0.0)


def rhs_g_direct_convolution(wave, g, t):
    """Literal frequency-side evaluation of the profile rate (tiny grids).

    Performs the xi-eta convolution against the half-wave symbols as a
    direct double sum over the frequency lattice; quadratic cost, used as
    the dual-formulation oracle for profile_rhs_g.
    Returns d_t ghat as a (nv^3, nx, nx, nx) complex array.
    """
    grid = g.grid
    sg = grid.x
    n = grid.nx
    if n > 8:
        raise ValueError("direct convolution oracle is for tiny grids")
    u = sg.ifft(wave.u_hat())
    u_hat = {+1: sg.fft(u).reshape(-1), -1: sg.fft(np.conj(u)).reshape(-1)}
    ghat = fft_x_slices(g).reshape(grid.nv3, -1)
    kflat = sg.kvec.reshape(-1, 3)
    nxi = kflat.shape[0]
    # wrapped index of zeta = xi - eta on the periodic lattice
    dk = 2.0 * np.pi / (2.0 * sg.L)
    ik = np.rint(kflat / dk).astype(int)
    iz = (ik[:, None, :] - ik[None, :, :]) % n
    zidx = np.ravel_multi_index((iz[..., 0], iz[..., 1], iz[..., 2]),
                                (n, n, n))
    zeta = kflat[zidx.reshape(-1)].reshape(nxi, nxi, 3)
    zmag = np.sqrt((zeta ** 2).sum(-1))
    zhat = zeta / np.where(zmag > 0, zmag, 1.0)[..., None]
    # spectral v-gradient of ghat per xi-column
    kv1 = 2.0 * np.pi * np.fft.fftfreq(grid.nv, d=grid.dv)
    gv = ghat.reshape(grid.nv, grid.nv, grid.nv, nxi)
    gv_hat = np.fft.fftn(gv, axes=(0, 1, 2))
    dvg = np.empty((3, grid.nv3, nxi), dtype=complex)
    for c in range(3):
        shape = [1, 1, 1, 1]
        shape[c] = grid.nv
        kk = kv1.reshape(shape)
        dvg[c] = np.fft.ifftn(1j * kk * gv_hat, axes=(0, 1, 2)).reshape(
            grid.nv3, nxi)
    dxi3 = dk ** 3 / (2.0 * np.pi) ** 3
    out = np.zeros((grid.nv3, nxi), dtype=complex)
    eta = kflat
    for j in range(grid.nv3):
        vh = grid.vhat_flat[j]
        vv = grid.vflat[j]
        s = grid.smag[j]
        J = np.eye(3) / s - np.outer(vv, vv) / s ** 3
        jeta = eta @ J.T                                     # (nxi, 3)
        gj = ghat[j]
        dvgj = dvg[:, j, :]
        arg = (dvgj - 1j * t * jeta.T * gj)                  # (3, nxi)
        zv = zhat @ vh                                       # (nxi, nxi)
        phase = np.exp(1j * t * (zeta @ vh))
        for mu in (+1, -1):
            cmu = 0.5j * mu
            uz = u_hat[mu][zidx]
            a1 = 2.0 + 4.0j * cmu * zv
            core = uz * phase
            contrib = (core * a1) @ gj
            for c in range(3):
                a2c = 0.5 * vv[c] * (1.0 + 2.0j * cmu * zv) \
                    + 1j * cmu * zhat[..., c] / s
                contrib = contrib + (core * a2c) @ arg[c]
            out[j] += contrib
    out *= dxi3
    return out.reshape((grid.nv3, n, n, n))
