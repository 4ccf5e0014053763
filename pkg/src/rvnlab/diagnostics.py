"""Weighted energies, decay-rate scans, and the weight-ratio check.

Weight convention: the anisotropic base 1 + |x|^2 + (x.v)^2 + |v|^20 is
raised to the power 2*N0_eff - (|alpha|+|beta|), a desk-scale version of
the production exponents (scaled down by a factor 10 so double precision
holds the values; every tested property of the weights is invariant
under rescaling the outer exponent).  N0_eff defaults to 4.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import cutoffs
from .profiles import (DistributionGrid, PhaseSpaceGrid, WaveState, _fftn,
                       _ifftn, fft_x_slices, modified_profile, to_profile)
from .solver import Snapshot

# ---------------------------------------------------------------------------
# weights


@dataclass
class WeightSpec:
    n0_eff: int = 4

    def exponent(self, order):
        p = 2 * self.n0_eff - order
        if p < 0:
            raise ValueError("derivative order exceeds the weight budget")
        return p

    def omega(self, x, v, order, cvn=0):
        """Phase-space weight; x, v arrays with trailing 3-axis."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        xv = (x * v).sum(-1)
        vmag2 = (v * v).sum(-1)
        base = 1.0 + (x * x).sum(-1) + xv * xv + vmag2 ** 10
        w = base ** self.exponent(order)
        if cvn:
            w = w * (1.0 + np.sqrt(vmag2)) ** cvn
        return w

    def omega_v(self, v, order):
        """Velocity-only weight for the zero-frequency energy."""
        v = np.asarray(v, dtype=float)
        vmag = np.sqrt((v * v).sum(-1))
        return (1.0 + vmag) ** self.exponent(order)

    def log_gradients(self, t, x, v):
        """(v . D_v log w, |D_v log w|) for the top-order weight."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        xv = (x * v).sum(-1, keepdims=True)
        vmag2 = (v * v).sum(-1, keepdims=True)
        base = 1.0 + (x * x).sum(-1, keepdims=True) + xv ** 2 + vmag2 ** 10
        gx = (2.0 * x + 2.0 * xv * v) / base
        gv = (2.0 * xv * x + 20.0 * vmag2 ** 9 * v) / base
        s = np.sqrt(1.0 + vmag2)
        # D_v = grad_v - t (J vhat) grad_x with J = I/s - vv^T/s^3
        jgx = gx / s - v * ((v * gx).sum(-1, keepdims=True)) / s ** 3
        dv = gv - t * jgx
        p = 1.0  # exponent scales both ratios; report per unit exponent
        vdot = np.abs((v * dv).sum(-1)) * p
        mag = np.linalg.norm(dv, axis=-1) * p
        return vdot, mag


def weight_ratio_check(t_list, n_samples=100_000, seed=0, n0_eff=4):
    """Max over samples of the cone-weighted logarithmic weight ratio,
    per time; samples rescale with t so the cone region stays covered."""
    spec = WeightSpec(n0_eff)
    rng = np.random.default_rng(seed)
    p_exp = float(spec.exponent(0))
    out = {}
    base_x = rng.uniform(-1.2, 1.2, (n_samples, 3))
    base_v = rng.uniform(-4.0, 4.0, (n_samples, 3))
    for t in t_list:
        x = base_x * max(t, 1.0)
        v = base_v
        vdot, mag = spec.log_gradients(t, x, v)
        s = np.sqrt(1.0 + (v * v).sum(-1))
        y = x + v / s[:, None] * t
        cone = 1.0 + np.abs(abs(t) - np.linalg.norm(y, axis=-1))
        ratio = (vdot + mag) * p_exp / cone
        out[float(t)] = float(ratio.max())
    return out


# ---------------------------------------------------------------------------
# vector-fielded families from a snapshot

def _wave_source(snapshot):
    g = snapshot.f.grid
    if g.mass == 0:
        return np.zeros((g.nx,) * 3)
    m2 = float(g.mass ** 2)
    w = (m2 / g.smag).reshape((g.nv,) * 3)
    return (snapshot.f.values * w).sum(axis=(3, 4, 5)) * g.weights_v()


def profile_family(snapshot, order=1, coupled=None):
    """{word: DistributionGrid} of profiles of the classical family.

    Built directly on the free-streaming pullback g (never by
    differentiating the time-shifted f in v, which loses accuracy as the
    phase-space filaments steepen):

        g^S     = t R + x . grad_x g
        g^dx_i  = d_i g
        g^Omt_i = (e_i x x).grad_x g + (e_i x v).grad_v g
        g^Lt_i  = t d_i g + (x_i + vhat_i t)(R - vhat.grad_x g) + s D_v_i g

    with R = d_t g (the profile rate; zero when the run did not force f).
    """
    if order > 1:
        raise NotImplementedError("snapshot families are built to order 1")
    g6grid = snapshot.f.grid
    t = snapshot.t
    gprof = to_profile(snapshot.f, t)
    fam = {(): gprof}
    if order == 0:
        return fam
    if coupled is None:
        coupled = snapshot.f_forced
    dxg, dvg = grid_gradients(gprof)
    if coupled:
        from .profiles import profile_rhs_g
        R = profile_rhs_g(snapshot.wave, gprof, t).values
    else:
        R = None
    ax = g6grid.x.axis
    X = [ax.reshape([-1 if c == i else 1 for i in range(3)] + [1, 1, 1])
         for c in range(3)]
    vax = g6grid.vaxis
    Vc = [vax.reshape([1, 1, 1] + [-1 if c == i else 1 for i in range(3)])
          for c in range(3)]
    smag6 = g6grid.smag.reshape((g6grid.nv,) * 3)
    vh6 = [ (g6grid.vhat_flat[:, c]).reshape((g6grid.nv,) * 3)
            for c in range(3)]
    vdotdx = vh6[0] * dxg[0] + vh6[1] * dxg[1] + vh6[2] * dxg[2]

    def wrap(arr):
        return DistributionGrid(g6grid, arr, "profile")

    base_s = X[0] * dxg[0] + X[1] * dxg[1] + X[2] * dxg[2]
    fam[("S",)] = wrap(base_s + t * R if R is not None else base_s)
    for i in range(3):
        fam[(f"dx{i + 1}",)] = wrap(dxg[i].copy())
        j, k = (i + 1) % 3, (i + 2) % 3
        rot = (X[j] * dxg[k] - X[k] * dxg[j]
               + Vc[j] * dvg[k] - Vc[k] * dvg[j])
        fam[(f"Omt{i + 1}",)] = wrap(rot)
        # s * D_{v_i} g = s grad_v_i g - t (s d_vhat_i).grad_x g
        #              = s grad_v_i g - t (d_i - vhat_i vhat.grad) g
        sdv = smag6 * dvg[i] - t * (dxg[i] - vh6[i] * vdotdx)
        coeff = X[i] + vh6[i] * t
        lt = t * dxg[i] - coeff * vdotdx + sdv
        if R is not None:
            lt = lt + coeff * R
        fam[(f"Lt{i + 1}",)] = wrap(lt)
    return fam


# generator coefficient evaluation on the tensor grid ------------------------

def _unit_coeffs_block(name, t, xg, vnodes):
    """Coefficients (wx, wv) of a generator over x-grid x v-node block.

    xg: (nx^3, 3); vnodes: (nb, 3).  Returns pair of (nb, nx^3, 3) arrays.
    """
    from .geometry import fields as gf
    nb, nxc = len(vnodes), xg.shape[0]
    xs = [xg[None, :, 0], xg[None, :, 1], xg[None, :, 2]]
    vs = [vnodes[:, 0, None], vnodes[:, 1, None], vnodes[:, 2, None]]
    wt, wx, wv = gf.field(name).coeffs(t, xs, vs)
    if wt is not None:
        raise ValueError("generator set contains no time derivatives")

    def expand(w):
        out = np.empty((nb, nxc, 3))
        for c in range(3):
            out[..., c] = np.broadcast_to(w[c], (nb, nxc))
        return out

    return expand(wx), expand(wv)


def apply_generator_grid(name, gdist, t, dxg=None, dvg=None):
    """Lambda^name applied to a 6D profile grid (spectral derivatives)."""
    g = gdist.grid
    arr = gdist.values
    if dxg is None:
        dxg, dvg = grid_gradients(gdist)
    xg = g.x.grid().reshape(-1, 3)
    out = np.empty_like(arr)
    out_m = out.reshape(g.nx ** 3, g.nv3)
    dxg_m = dxg.reshape(3, g.nx ** 3, g.nv3)
    dvg_m = dvg.reshape(3, g.nx ** 3, g.nv3)
    chunk = 512
    for lo in range(0, g.nv3, chunk):
        hi = min(lo + chunk, g.nv3)
        wx, wv = _unit_coeffs_block(name, t, xg, g.vflat[lo:hi])
        acc = np.zeros((hi - lo, g.nx ** 3))
        for c in range(3):
            acc += wx[..., c] * dxg_m[c, :, lo:hi].T
            acc += wv[..., c] * dvg_m[c, :, lo:hi].T
        out_m[:, lo:hi] = acc.T
    return DistributionGrid(g, out, gdist.kind)


def grid_gradients(gdist):
    g = gdist.grid
    arr = gdist.values
    hat = _fftn(arr, axes=(0, 1, 2))
    dxg = np.empty((3,) + arr.shape)
    for c in range(3):
        shape = [1] * 6
        shape[c] = g.nx
        dxg[c] = _ifftn(1j * g.x.k1.reshape(shape) * hat, axes=(0, 1, 2)).real
    del hat
    kv1 = 2.0 * np.pi * np.fft.fftfreq(g.nv, d=g.dv)
    hatv = _fftn(arr, axes=(3, 4, 5))
    dvg = np.empty((3,) + arr.shape)
    for c in range(3):
        shape = [1] * 6
        shape[c + 3] = g.nv
        dvg[c] = _ifftn(1j * kv1.reshape(shape) * hatv, axes=(3, 4, 5)).real
    return dxg, dvg


# ---------------------------------------------------------------------------
# energies

GEN_CVN = {"Gamma1": 1, "Gamma3": -1, "Gamma4": -1, "Gamma5": -1}


def weighted_l2(gdist, order, cvn, spec):
    g = gdist.grid
    xg = g.x.grid().reshape(-1, 3)
    vals = gdist.values.reshape(g.nx ** 3, g.nv3)
    total = 0.0
    chunk = 512
    for lo in range(0, g.nv3, chunk):
        hi = min(lo + chunk, g.nv3)
        w = spec.omega(xg[:, None, :], g.vflat[None, lo:hi, :], order, cvn)
        total += ((w * vals[:, lo:hi]) ** 2).sum()
    return np.sqrt(total * g.x.dx ** 3 * g.weights_v())


def energy_high_f(snapshot, n_max=1, spec=None, family=None):
    """(top-order sum, lower-order sum) of weighted L2 norms of the
    vector-fielded profiles."""
    spec = spec or WeightSpec()
    fam = family or profile_family(snapshot, min(n_max, 1))
    t = snapshot.t
    top, low = 0.0, 0.0
    # order 0
    base = fam[()]
    val = weighted_l2(base, 0, 0, spec)
    if n_max == 0:
        return val, 0.0
    low += val
    # alpha-words of order 1 (classical), beta empty
    for word, gdist in fam.items():
        if word == ():
            continue
        contrib = weighted_l2(gdist, 1, 0, spec)
        top += contrib
    # beta-words of order 1 (generator set) on the base profile
    dxg, dvg = grid_gradients(base)
    for k in range(1, 18):
        name = f"Gamma{k}"
        gk = apply_generator_grid(name, base, t, dxg, dvg)
        top += weighted_l2(gk, 1, GEN_CVN.get(name, 0), spec)
    return top, low


@dataclass
class LowOrderAccumulator:
    """Running correction integral for the zero-frequency energy."""

    correction: dict = field(default_factory=dict)
    last_t: float = None

    def update(self, snapshot, n_max=1):
        """Trapezoidal accumulation of the top-order correction term."""
        g = snapshot.f.grid
        if g.mass != 1 or n_max < 1 or not snapshot.f_forced:
            return
        t = snapshot.t
        integrand = _correction_integrand(snapshot)
        if self.last_t is None:
            self._prev = integrand
            self.last_t = t
            for c in range(3):
                self.correction.setdefault(c, np.zeros((g.nv,) * 3 + (3,)))
            return
        dt = t - self.last_t
        for c in range(3):
            self.correction[c] += 0.5 * dt * (self._prev[c] + integrand[c])
        self._prev = integrand
        self.last_t = t


def _correction_integrand(snapshot):
    """integral over x of K(t, x+vhat t, v) grad_v^alpha g  per unit alpha."""
    g = snapshot.f.grid
    t = snapshot.t
    gprof = to_profile(snapshot.f, t)
    _, dvg = grid_gradients(gprof)
    wave = snapshot.wave
    # K at x + vhat t: spectral shift of the wave fields per v-node
    dt_hat = _fftn(wave.dtphi, axes=(0, 1, 2))
    phi_hat = _fftn(wave.phi, axes=(0, 1, 2))
    gp_hat = [1j * g.x.kvec[..., c] * phi_hat for c in range(3)]
    out = {c: np.empty((g.nv,) * 3 + (3,)) for c in range(3)}
    chunk = max(1, (1 << 21) // (g.nx ** 3))
    KX = g.x.kvec
    dx3 = g.x.dx ** 3
    dvg_m = dvg.reshape(3, g.nx ** 3, g.nv3)
    for lo in range(0, g.nv3, chunk):
        hi = min(lo + chunk, g.nv3)
        vh = g.vhat_flat[lo:hi]
        phase = np.exp(1j * np.einsum("xyzc,nc->nxyz", KX, t * vh))
        A = _ifftn(phase * dt_hat[None], axes=(1, 2, 3)).real
        G = np.stack([_ifftn(phase * gp_hat[c][None], axes=(1, 2, 3)).real
                      for c in range(3)], -1)
        Gm = G.reshape(hi - lo, g.nx ** 3, 3)
        Am = A.reshape(hi - lo, g.nx ** 3)
        vv = g.vflat[lo:hi]
        s = g.smag[lo:hi]
        a = Am + np.einsum("nxc,nc->nx", Gm, vh)
        K = (vv[:, None, :] * a[..., None]
             + Gm * (float(g.mass ** 2) / s)[:, None, None])
        for c in range(3):
            kg = np.einsum("nxk,xn->nk", K, dvg_m[c, :, lo:hi]) * dx3
            out[c].reshape(g.nv3, 3)[lo:hi] = kg
    return out


def energy_low_f(snapshot, accumulator=None, n_max=1, spec=None):
    """Zero-frequency weighted energy with the top-order correction."""
    spec = spec or WeightSpec()
    g = snapshot.f.grid
    t = snapshot.t
    gprof = to_profile(snapshot.f, t)
    ghat0 = gprof.values.sum(axis=(0, 1, 2)) * g.x.dx ** 3   # (nv,nv,nv)
    vv = g.vvec
    total = weighted_norm_v(ghat0, vv, 0, spec, g)
    if n_max >= 1:
        kv1 = 2.0 * np.pi * np.fft.fftfreq(g.nv, d=g.dv)
        hatv = np.fft.fftn(ghat0)
        for c in range(3):
            shape = [1, 1, 1]
            shape[c] = g.nv
            dcg = np.fft.ifftn(1j * kv1.reshape(shape) * hatv).real
            if accumulator is not None and c in accumulator.correction:
                corr = accumulator.correction[c]
                div = _div_v(corr, g)
                dcg = dcg - div
            total += weighted_norm_v(dcg, vv, 1, spec, g)
    return total


def _div_v(vec_field, g):
    kv1 = 2.0 * np.pi * np.fft.fftfreq(g.nv, d=g.dv)
    acc = np.zeros((g.nv,) * 3)
    for c in range(3):
        shape = [1, 1, 1]
        shape[c] = g.nv
        hat = np.fft.fftn(vec_field[..., c])
        acc += np.fft.ifftn(1j * kv1.reshape(shape) * hat).real
    return acc


def weighted_norm_v(field_v, vv, order, spec, g):
    w = spec.omega_v(vv, order)
    return np.sqrt(((w * field_v) ** 2).sum() * g.weights_v())


# -- wave-side energies -------------------------------------------------------

def wave_family(snapshot, order=1):
    """{word: (phi^alpha, dtphi^alpha)} for the wave alphabet, order <= 1.

    Time derivatives come from the wave equation with the snapshot source.
    """
    if order > 1:
        raise NotImplementedError("snapshot families are built to order 1")
    g = snapshot.f.grid
    sg = g.x
    t = snapshot.t
    wave = snapshot.wave
    fam = {(): (wave.phi, wave.dtphi)}
    if order == 0:
        return fam
    src = _wave_source(snapshot) if snapshot.wave_sourced else \
        np.zeros((g.nx,) * 3)
    phi_hat = sg.fft(wave.phi)
    dt_hat = sg.fft(wave.dtphi)
    lap = sg.ifft(-sg.kmag ** 2 * phi_hat).real
    ddtphi = lap + src
    gp = np.stack([sg.ifft(c).real for c in sg.gradient(phi_hat)], -1)
    gdt = np.stack([sg.ifft(c).real for c in sg.gradient(dt_hat)], -1)
    X = sg.grid()
    fam[("S",)] = (t * wave.dtphi + (X * gp).sum(-1),
                   t * ddtphi + (X * gdt).sum(-1) + wave.dtphi)
    for i in range(3):
        fam[(f"dx{i + 1}",)] = (gp[..., i], gdt[..., i])
        j, k = (i + 1) % 3, (i + 2) % 3
        fam[(f"Om{i + 1}",)] = (
            X[..., j] * gp[..., k] - X[..., k] * gp[..., j],
            X[..., j] * gdt[..., k] - X[..., k] * gdt[..., j])
        fam[(f"L{i + 1}",)] = (t * gp[..., i] + X[..., i] * wave.dtphi,
                               t * gdt[..., i] + X[..., i] * ddtphi
                               + gp[..., i])
    return fam


def _xn_norm(h_phys, sg, n, bands):
    """X_n norm: sup_k 2^{(n+1)k} || grad_xi^n h_hat psi_k ||_Linf."""
    import itertools
    X = sg.grid()
    best = 0.0
    fields = []
    if n == 0:
        fields.append(sg.fft(h_phys))
    else:
        for alpha in itertools.combinations_with_replacement(range(3), n):
            mult = h_phys
            for c in alpha:
                mult = mult * (-1j * X[..., c])
            fields.append(sg.fft(mult))
    for k in bands:
        psi = cutoffs.psi_band(k, sg.kmag)
        mags = np.zeros(psi.shape)
        for fh in fields:
            mags = np.maximum(mags, np.abs(fh))
        val = 2.0 ** ((n + 1) * k) * (psi * mags).max()
        best = max(best, val)
    return best


def energy_phi(snapshot, n_max=1, g_family=None, atilde_maps=None,
               include_low=True):
    """(E_high, E_low) for the wave profiles.

    E_high: dyadic sup norms and L2 norms of h^alpha and its modified
    version; E_low: X_n norms of h^alpha and weighted time derivatives.
    """
    g = snapshot.f.grid
    sg = g.x
    t = snapshot.t
    fam = wave_family(snapshot, min(n_max, 1))
    if g_family is None:
        # the resonant correction exists only when the wave hears f
        g_family = profile_family(snapshot, min(n_max, 1)) \
            if snapshot.wave_sourced else {}
    bands = list(sg.resolvable_bands())
    e_high = 0.0
    e_low = 0.0
    dxi3 = (np.pi / sg.L) ** 3 / (2.0 * np.pi) ** 3
    for word, (phi_a, dtphi_a) in fam.items():
        wv = WaveState(g, phi_a, dtphi_a, t)
        h_hat = wv.h_hat()
        gmap = {word: g_family[word]} if word in g_family else {}
        amap = None if atilde_maps is None else atilde_maps.get(word)
        ht_hat = modified_profile(wv, gmap, t, alpha=word,
                                  atilde_map=amap) if gmap else h_hat
        for k in bands:
            psi = cutoffs.psi_band(k, sg.kmag)
            e_high += 2.0 ** k * (psi * np.abs(h_hat)).max()
            e_high += 2.0 ** k * (psi * np.abs(ht_hat)).max()
        # first-order xi-derivative of the modified profile, L2 over bands
        ht_phys = sg.ifft(ht_hat)
        X = sg.grid()
        grad_hat = [sg.fft(-1j * X[..., c] * ht_phys) for c in range(3)]
        for k in bands:
            psi = cutoffs.psi_band(k, sg.kmag)
            val = 0.0
            for c in range(3):
                val += (np.abs(psi * grad_hat[c]) ** 2).sum()
            e_high += 2.0 ** (0.5 * k) * np.sqrt(val * dxi3)
        e_high += np.sqrt((np.abs(h_hat) ** 2).sum() * dxi3)
        e_high += np.sqrt((np.abs(ht_hat) ** 2).sum() * dxi3)
        if include_low:
            h_phys = sg.ifft(h_hat)
            dth_hat = _dt_h_hat(wv, gmap, t, amap) if gmap else \
                np.zeros_like(h_hat)
            dth_phys = sg.ifft(dth_hat)
            mult = sg.kmag / (1.0 + sg.kmag)
            dthm_phys = sg.ifft(dth_hat * mult)
            for n in range(0, 4):
                if len(word) > max(n_max, 0) or len(word) > 20 - 3 * n:
                    continue
                e_low += _xn_norm(h_phys, sg, n, bands)
                e_low += (1.0 + t) * _xn_norm(dth_phys, sg, n, bands)
                e_low += (1.0 + t) ** 2 * _xn_norm(dthm_phys, sg, n, bands)
    return e_high, e_low


def _dt_h_hat(wave, g_family, t, atilde_map=None):
    """d_t h_hat from the source quadrature (no time differencing)."""
    g = wave.grid
    sg = g.x
    out = np.zeros((g.nx,) * 3, dtype=complex)
    for gamma, gdist in g_family.items():
        if atilde_map is not None and tuple(gamma) in atilde_map:
            coeff = np.asarray(atilde_map[tuple(gamma)], dtype=float)
        else:
            coeff = 1.0 / g.smag
        coeff = np.broadcast_to(coeff, (g.nv3,))
        arr = gdist.vx_matrix()
        chunk = max(1, (1 << 21) // (g.nx ** 3))
        for lo in range(0, g.nv3, chunk):
            hi = min(lo + chunk, g.nv3)
            ghat = _fftn(arr[lo:hi], axes=(1, 2, 3)) * sg.dx ** 3
            vh = g.vhat_flat[lo:hi]
            dot = np.einsum("xyzc,nc->nxyz", sg.kvec, vh)
            phase = np.exp(1j * t * (sg.kmag[None] - dot))
            out += np.einsum("nxyz,n->xyz", phase * ghat, coeff[lo:hi])
    return out * g.weights_v()


# ---------------------------------------------------------------------------
# decay scans

def upsampled_sup(field, sg, factor=2):
    """Sup of the trigonometric interpolant (zero-padded refinement)."""
    n = sg.n
    hat = np.fft.fftn(field)
    N = n * factor
    pad = np.zeros((N, N, N), dtype=complex)
    h = n // 2
    src = np.r_[0:h, n - h:n]
    dst = np.r_[0:h, N - h:N]
    pad[np.ix_(dst, dst, dst)] = hat[np.ix_(src, src, src)]
    up = np.fft.ifftn(pad).real * factor ** 3
    return float(np.abs(up).max())


def decay_scan_field(snapshots, alpha_cap=0):
    """Per-snapshot sup of the cone-weighted field magnitudes.

    Returns dict with times, weighted sups, unweighted sups, and the
    sup of the half-wave modulus (the linear-decay scan quantity).
    """
    ts, weighted, unweighted, half = [], [], [], []
    for snap in snapshots:
        sg = snap.f.grid.x
        t = snap.t
        wave = snap.wave
        phi_hat = sg.fft(wave.phi)
        fields = [wave.dtphi] + [sg.ifft(c).real for c in
                                 sg.gradient(phi_hat)]
        mags = sum(np.abs(f) for f in fields)
        order = 0
        while order < alpha_cap:
            order += 1
            new = []
            for fh in fields:
                hat = sg.fft(fh)
                new.extend(sg.ifft(c).real for c in sg.gradient(hat))
            fields = new
            mags = mags + sum(np.abs(f) for f in fields)
        X = sg.grid()
        cone = 1.0 + np.abs(abs(t) - np.sqrt((X ** 2).sum(-1)))
        w = (1.0 + abs(t)) * cone ** (alpha_cap + 1)
        weighted.append(float((w * mags).max()))
        unweighted.append(float(mags.max()))
        u = sg.ifft(wave.u_hat())
        half.append(upsampled_sup(np.abs(u), sg))
        ts.append(t)
    return {"t": np.array(ts), "weighted_sup": np.array(weighted),
            "unweighted_sup": np.array(unweighted),
            "halfwave_sup": np.array(half)}


def density_decay_scan(snapshots, alpha=0, p=1, window=None, upsample=2):
    """Fit of log sup_x |int grad^alpha |f|^p dv|^(1/p) against log t."""
    from .oracle import slope_fit
    ts, vals = [], []
    for snap in snapshots:
        g = snap.f.grid
        sg = g.x
        fv = np.abs(snap.f.values) ** p if p != 1 else snap.f.values
        rho = fv.sum(axis=(3, 4, 5)) * g.weights_v()
        fields = [rho]
        for _ in range(alpha):
            new = []
            for fh in fields:
                hat = sg.fft(fh)
                new.extend(sg.ifft(c).real for c in sg.gradient(hat))
            fields = new
        sup = max(upsampled_sup(f, sg, upsample) for f in fields)
        ts.append(snap.t)
        vals.append(sup ** (1.0 / p))
    ts = np.array(ts)
    vals = np.array(vals)
    keep = ts > 0
    slope, err = slope_fit(ts[keep], vals[keep], window)
    return {"t": ts, "value": vals, "slope": float(slope),
            "stderr": float(err)}


# ---------------------------------------------------------------------------
# reports

@dataclass
class EnergyReport:
    t: float
    e_high_f_top: float
    e_high_f_low: float
    e_low_f: float
    e_high_phi: float
    e_low_phi: float
    extras: dict = field(default_factory=dict)

    HEADER = ("t", "E_high_f_1", "E_high_f_2", "E_low_f",
              "E_high_phi", "E_low_phi")

    def row(self):
        return [self.t, self.e_high_f_top, self.e_high_f_low, self.e_low_f,
                self.e_high_phi, self.e_low_phi]

    def to_json(self):
        d = {k: v for k, v in zip(self.HEADER, self.row())}
        d.update(self.extras)
        return json.dumps(d, sort_keys=True)


def energy_report(snapshot, accumulator=None, n_max=1, spec=None):
    spec = spec or WeightSpec()
    fam = profile_family(snapshot, min(n_max, 1))
    top, low = energy_high_f(snapshot, n_max, spec, fam)
    elf = energy_low_f(snapshot, accumulator, n_max, spec)
    ehp, elp = energy_phi(snapshot, n_max, fam)
    return EnergyReport(snapshot.t, top, low, elf, ehp, elp)
