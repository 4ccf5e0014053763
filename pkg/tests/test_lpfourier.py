"""Spectral plumbing: transforms, dyadic projections, Riesz family,
symbol norms."""

import numpy as np
import pytest

from rvnlab import cutoffs
from rvnlab.spectral import SpectralGrid, riesz_Q, symbol_norm


@pytest.fixture(scope="module")
def grid():
    return SpectralGrid(24, 8.0)


@pytest.fixture(scope="module")
def random_fields(grid, rng=None):
    r = np.random.default_rng(42)
    fields = []
    for _ in range(4):
        f = r.standard_normal((grid.n,) * 3)
        fields.append(f)
    return fields


def test_cutoff_profile_supports():
    r = np.array([0.0, 1.0, 1.25, 1.3, 1.5, 2.0])
    b = cutoffs.bump(r)
    assert b[0] == 1.0 and b[1] == 1.0 and b[2] == 1.0
    assert 0.0 < b[3] < 1.0
    assert b[4] == 0.0 and b[5] == 0.0


def test_partition_of_unity():
    r = np.geomspace(1e-4, 1e4, 2000)
    acc = np.zeros_like(r)
    for k in cutoffs.band_range(1e-4, 1e4):
        acc += cutoffs.psi_band(k, r)
    assert np.abs(acc - 1.0).max() <= 1e-10


def test_roundtrip_and_parseval(grid, random_fields):
    for f in random_fields:
        fh = grid.fft(f)
        assert np.abs(grid.ifft(fh).real - f).max() <= 1e-12 * np.abs(f).max()
        assert abs(grid.l2_norm(f) - grid.l2_norm_hat(fh)) \
            <= 1e-10 * grid.l2_norm(f)


def test_projection_single_mode(grid):
    # a single mode in band k survives P_k with weight psi_k and is
    # annihilated three bands down
    f = np.zeros((grid.n,) * 3)
    kidx = 4
    kmag = abs(grid.k1[kidx])
    X = grid.grid()
    f = np.cos(kmag * X[..., 0])
    fh = grid.fft(f)
    k0 = int(np.floor(np.log2(kmag)))
    pk = grid.project(fh, k0)
    w = cutoffs.psi_band(k0, kmag)
    assert np.allclose(pk, w * fh, atol=1e-9 * np.abs(fh).max())
    pk3 = grid.project(fh, k0 - 3)
    assert np.abs(pk3).max() <= 1e-12 * np.abs(fh).max()


def test_projection_sums_to_identity(grid):
    X = grid.grid()
    f = np.exp(-(X ** 2).sum(-1) / 2.0)
    f -= f.mean()   # the zero mode belongs to no resolvable band
    fh = grid.fft(f)
    acc = np.zeros_like(fh)
    for k in grid.resolvable_bands():
        acc += grid.project(fh, k)
    # equality up to unresolved bands (beyond-Nyquist tail of the data)
    assert np.abs(grid.ifft(acc).real - f).max() <= 1e-7 * np.abs(f).max()


def test_projections_disjoint(grid, random_fields):
    fh = grid.fft(random_fields[0])
    a = grid.project(grid.project(fh, 1), 3)
    assert np.abs(a).max() <= 1e-14 * np.abs(fh).max()


def test_nyquist_band_warns(grid):
    fh = grid.fft(random_fields_small := np.ones((grid.n,) * 3))
    with pytest.warns(UserWarning):
        grid.project(fh, 12)


def test_riesz_q_identities(grid, random_fields):
    f = random_fields[1] - random_fields[1].mean()
    fh = grid.fft(f)
    div = grid.divergence([riesz_Q(grid, fh, i, "Q") for i in range(3)])
    assert np.abs(grid.ifft(div).real - f).max() <= 1e-10 * np.abs(f).max()
    # constant field maps to zero
    ch = grid.fft(np.ones((grid.n,) * 3))
    for i in range(3):
        assert np.abs(riesz_Q(grid, ch, i, "Q")).max() == 0.0
        assert np.abs(riesz_Q(grid, ch, i, "R")).max() == 0.0
    # single mean-zero mode reproduced exactly
    X = grid.grid()
    m = np.sin((np.pi / grid.L) * X[..., 1])
    mh = grid.fft(m)
    div1 = grid.divergence([riesz_Q(grid, mh, i, "Q") for i in range(3)])
    assert np.abs(grid.ifft(div1).real - m).max() <= 1e-12


def test_halfwave_isometry(grid, random_fields):
    u = random_fields[2] + 1j * random_fields[3]
    uh = grid.fft(u)
    for t in (0.5, 3.0, 17.0):
        assert abs(grid.l2_norm_hat(grid.halfwave(uh, t))
                   - grid.l2_norm_hat(uh)) <= 1e-12 * grid.l2_norm_hat(uh)


def test_shift_exactness(grid):
    # band-resolved data translates to round-off of its aliasing floor
    X = grid.grid()
    f = np.exp(-((X - 0.5) ** 2).sum(-1) / 2.0)
    fh = grid.fft(f)
    a = np.array([0.37, -1.21, 0.58])
    sh = grid.ifft(grid.shift(fh, a)).real
    ref = np.exp(-((X + a - 0.5) ** 2).sum(-1) / 2.0)
    # agreement down to the data's own beyond-Nyquist floor
    floor = np.exp(-0.5 * grid.k_nyquist ** 2)
    assert np.abs(sh - ref).max() <= 2.0 * floor * np.abs(f).max()
    # round trip is exact on the shift-invariant band
    back = grid.ifft(grid.shift(grid.shift(fh, a), -a)).real
    proj = grid.ifft(fh * grid.shift_mask).real
    assert np.abs(back - proj).max() <= 1e-13


# symbol norms --------------------------------------------------------------

def test_symbol_norm_scaling_invariance():
    vals = [symbol_norm(lambda xi: np.ones(xi.shape[:-1]), k,
                        derivative_cap=0) for k in (-2, 0, 2, 4)]
    assert max(vals) > 0
    assert (max(vals) - min(vals)) / max(vals) <= 0.05


def test_symbol_norm_riesz_bounded():
    def m(xi):
        mag = np.linalg.norm(xi, axis=-1)
        return np.where(mag > 0, xi[..., 0] / np.where(mag > 0, mag, 1), 0.0)

    vals = [symbol_norm(m, k, derivative_cap=2) for k in (-1, 0, 1, 2)]
    assert all(np.isfinite(v) for v in vals)
    assert (max(vals) - min(vals)) / max(vals) <= 0.10


def test_symbol_norm_modulus_scales_linearly():
    def m(xi):
        return np.linalg.norm(xi, axis=-1)

    ks = np.array([-1, 0, 1, 2, 3])
    vals = np.array([symbol_norm(m, int(k), derivative_cap=2) for k in ks])
    slope = np.polyfit(ks, np.log2(vals), 1)[0]
    assert abs(slope - 1.0) <= 0.05
