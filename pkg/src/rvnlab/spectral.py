"""FFT plumbing, dyadic frequency projections, Riesz/Q operators, and the
annulus symbol-norm estimator.

A SpectralGrid wraps a periodic box [-L, L)^3 sampled on n^3 points.  The
forward transform approximates the continuum integral transform up to a
fixed lattice phase; all multiplier operations are phase-consistent, so
identities hold exactly for grid data.  The zero mode of 1/|xi|-type
symbols is set to zero (mean-zero sources in practice).
"""

import itertools
import warnings

import numpy as np

from . import cutoffs


class SpectralGrid:
    """Real-space / frequency-space bookkeeping for a periodic cube."""

    def __init__(self, n, half_length):
        self.n = int(n)
        self.L = float(half_length)
        self.axis = np.linspace(-self.L, self.L, self.n, endpoint=False)
        self.dx = self.axis[1] - self.axis[0]
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        self.k1 = k1
        self.kvec = np.stack(np.meshgrid(k1, k1, k1, indexing="ij"), -1)
        self.kmag = np.sqrt((self.kvec ** 2).sum(-1))
        self.k_nyquist = np.abs(k1).max()
        self.k_min = 2.0 * np.pi / (2.0 * self.L)
        # unpaired Nyquist planes (even n) cannot survive fractional
        # translation of a real field; shifts project them out
        if self.n % 2 == 0:
            keep1 = np.ones(self.n, dtype=bool)
            keep1[self.n // 2] = False
            self.shift_mask = (keep1[:, None, None] & keep1[None, :, None]
                               & keep1[None, None, :]).astype(float)
        else:
            self.shift_mask = np.ones((self.n,) * 3)

    # -- transforms -----------------------------------------------------
    def fft(self, field):
        return np.fft.fftn(field, axes=(-3, -2, -1)) * self.dx ** 3

    def ifft(self, coeffs):
        return np.fft.ifftn(coeffs, axes=(-3, -2, -1)) / self.dx ** 3

    def grid(self):
        return np.stack(np.meshgrid(self.axis, self.axis, self.axis,
                                    indexing="ij"), -1)

    def l2_norm(self, field):
        return np.sqrt((np.abs(field) ** 2).sum() * self.dx ** 3)

    def l2_norm_hat(self, coeffs):
        dxi = (2.0 * np.pi / (2.0 * self.L)) ** 3
        return np.sqrt((np.abs(coeffs) ** 2).sum() * dxi / (2 * np.pi) ** 3)

    # -- dyadic projections --------------------------------------------
    def resolvable_bands(self):
        return cutoffs.band_range(self.k_min, self.k_nyquist)

    def project(self, coeffs, k):
        """Multiply by psi_k(|xi|); warns above the Nyquist band."""
        if 2.0 ** k * cutoffs.PLATEAU / 2.0 > self.k_nyquist:
            warnings.warn(f"band 2^{k} exceeds the resolvable range",
                          stacklevel=2)
        return coeffs * cutoffs.psi_band(k, self.kmag)

    def project_low(self, coeffs, k):
        return coeffs * cutoffs.psi_le(k, self.kmag)

    def project_high(self, coeffs, k):
        return coeffs * cutoffs.psi_ge(k, self.kmag)

    # -- Riesz / inverse-divergence family ------------------------------
    def riesz(self, coeffs, i):
        """Component of grad/|grad|: symbol i*xi_i/|xi|, zero mode zeroed."""
        sym = np.where(self.kmag > 0.0, self.kvec[..., i] /
                       np.where(self.kmag > 0, self.kmag, 1.0), 0.0)
        return 1j * sym * coeffs

    def q_op(self, coeffs, i):
        """Inverse-divergence component: div Q = Id on mean-zero fields."""
        k2 = self.kmag ** 2
        sym = np.where(k2 > 0.0, self.kvec[..., i] / np.where(k2 > 0, k2, 1.0),
                       0.0)
        return -1j * sym * coeffs

    def divergence(self, comps_hat):
        acc = 0.0
        for i in range(3):
            acc = acc + 1j * self.kvec[..., i] * comps_hat[i]
        return acc

    def gradient(self, coeffs):
        return [1j * self.kvec[..., i] * coeffs for i in range(3)]

    def inv_modulus(self, coeffs):
        """1/|xi| multiplier with zero mode zeroed."""
        sym = np.where(self.kmag > 0.0, 1.0 / np.where(self.kmag > 0,
                                                       self.kmag, 1.0), 0.0)
        return sym * coeffs

    def halfwave(self, coeffs, t):
        """Free half-wave propagator exp(-i t |grad|); an L2 isometry."""
        return np.exp(-1j * t * self.kmag) * coeffs

    def shift(self, coeffs, a):
        """Translate field by a: f(x + a) <-> exp(i a.xi) f_hat."""
        phase = np.exp(1j * (self.kvec @ np.asarray(a, dtype=float)))
        return phase * self.shift_mask * coeffs


def riesz_Q(grid, field_hat, i, which):
    """Dispatch helper matching the operator family naming."""
    if which == "R":
        return grid.riesz(field_hat, i)
    if which == "Q":
        return grid.q_op(field_hat, i)
    raise ValueError("which must be 'R' or 'Q'")


def symbol_norm(m, k, derivative_cap=4, n=48, pad=4.0):
    """Quadrature estimate of the annulus symbol norm at band k.

    sum over |alpha| <= cap of 2^(|alpha| k) L1-norm of the inverse
    transform of (d_xi^alpha m) psi_k; xi-derivatives by central
    differences at the lattice spacing.
    """
    scale = 2.0 ** k
    half = pad * scale * cutoffs.SUPPORT
    ax = np.linspace(-half, half, n, endpoint=False)
    dxi = ax[1] - ax[0]
    XI = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), -1)

    def msample(shift):
        pts = XI + shift * dxi
        return np.nan_to_num(m(pts))

    total = 0.0
    x_spacing = 2.0 * np.pi / (n * dxi)
    vol_x = x_spacing ** 3
    for order in range(derivative_cap + 1):
        for alpha in itertools.combinations_with_replacement(range(3), order):
            samp = _fd_multi(msample, alpha) / dxi ** order
            band = samp * cutoffs.psi_band(k, np.sqrt((XI ** 2).sum(-1)))
            phys = np.fft.ifftn(band) * band.size * dxi ** 3 / (2 * np.pi) ** 3
            l1 = np.abs(phys).sum() * vol_x
            total += scale ** order * l1
    return total


def _fd_multi(msample, alpha):
    """Central-difference mixed derivative, steps of one lattice spacing."""
    if not alpha:
        return msample(np.zeros(3))
    first, rest = alpha[0], alpha[1:]
    e = np.zeros(3)
    e[first] = 1.0
    plus = _fd_multi(lambda s: msample(s + e), rest)
    minus = _fd_multi(lambda s: msample(s - e), rest)
    return (plus - minus) * 0.5


class CutoffFamily:
    """Convenience wrapper exposing the dyadic family on arrays."""

    base = staticmethod(cutoffs.bump)

    @staticmethod
    def band(k, r):
        return cutoffs.psi_band(k, r)

    @staticmethod
    def le(k, r):
        return cutoffs.psi_le(k, r)

    @staticmethod
    def ge(k, r):
        return cutoffs.psi_ge(k, r)
