"""Decompositions and commutation tables for the cone vector-field set.

The central objects are coefficient tables: maps from generator names (or
words of generator names) to coefficient values of the form

    c(t, x, v) = sum_k t^k * p_k(x, v)

Commutators among the bulk directions X1..X7 and the generator set
Gamma1..Gamma17 always produce coefficients that are affine in t, which
is equivalent to the form  ctilde(x,v) * dtilde(t,x,v) + chat(x,v); the
conversion uses  t = (1+|v|^2) dtilde + sqrt(1+|v|^2) omega.

All coefficients are evaluated, never hand-expanded: a commutator's
coefficients come from exact differentiation (jets) of the two fields'
coefficient functions, and are then projected back onto the generator
set.  The projection is exact because psi_{>=1}(|v|) + psi_{<=0}(|v|) = 1.
"""

import numpy as np

from . import base, fields
from .base import (dot3, jac_vhat, lorentz_factor, norm2, omega_cut,
                   psi_gem1_v, psi_ge1_v, psi_le2_v, psi_le0_v, vhat,
                   vnorm_guarded, vtilde, vtilde_cross, cross_e)
from .jets import Jet, deep_val


def _val(u):
    return u.val if isinstance(u, Jet) else u


def _grad(u, m):
    return u.grad[m] if isinstance(u, Jet) else 0.0


def wrap_once(coords):
    n = len(coords)
    return [Jet(c, [1.0 if j == k else 0.0 for j in range(n)])
            for k, c in enumerate(coords)]


def _coeff6(name, t, xs, vs):
    wt, wx, wv = fields.field(name).coeffs(t, xs, vs)
    if wt is not None:
        raise ValueError(f"{name} involves d_t; not part of the table algebra")
    return [wx[0], wx[1], wx[2], wv[0], wv[1], wv[2]]


def commutator6(aname, bname, t, xs, vs):
    """Coefficients of [A, B] as a first-order operator, via exact jets."""
    X = wrap_once([*xs, *vs])
    a = _coeff6(aname, t, X[:3], X[3:])
    b = _coeff6(bname, t, X[:3], X[3:])
    out = []
    for n in range(6):
        acc = 0.0
        for m in range(6):
            acc = acc + _val(a[m]) * _grad(b[n], m) - _val(b[m]) * _grad(a[n], m)
        out.append(acc)
    return out


def project_to_generators(w6, xs, vs):
    """Exact expansion of  w6 . (grad_x, grad_v)  over Gamma1..Gamma17.

    Returns a dict generator -> scalar coefficient; the omega-tilde rows
    are identically zero in this canonical frame decomposition.
    """
    wx, wv = w6[:3], w6[3:]
    tv = vtilde(vs)
    s2 = 1.0 + norm2(vs)
    s = lorentz_factor(vs)
    w = omega_cut(xs, vs)
    hi = psi_gem1_v(vs)
    lo = psi_le2_v(vs)
    J = jac_vhat(vs)
    rows = {}
    tv_wv = dot3(tv, wv)
    tv_wx = dot3(tv, wx)
    rows["Gamma1"] = hi * tv_wv
    rows["Gamma2"] = hi * (tv_wv * w / s2 + tv_wx)
    for i in range(3):
        tV = vtilde_cross(i, vs)
        tV_wv = dot3(tV, wv)
        rows[f"Gamma{3 + i}"] = hi * tV_wv
        rows[f"Gamma{6 + i}"] = hi * (tV_wv * w + dot3(tV, wx))
    for i in range(3):
        rows[f"Gamma{9 + i}"] = lo * wv[i]
        extra = s * w * (wv[0] * J[0][i] + wv[1] * J[1][i] + wv[2] * J[2][i])
        rows[f"Gamma{12 + i}"] = lo * (wx[i] + extra)
        rows[f"Gamma{15 + i}"] = 0.0 * _val(deepest(wx[i]))
    return rows


def deepest(u):
    return deep_val(u) if isinstance(u, Jet) else u


# ---------------------------------------------------------------------------
# coefficient polynomials in t

class TPoly:
    """Coefficient as a polynomial in t with (x,v)-closure coefficients."""

    __slots__ = ("parts",)

    def __init__(self, parts):
        self.parts = tuple(parts)  # closures (xs, vs) -> value

    def __call__(self, t, xs, vs):
        acc = 0.0
        for k, p in enumerate(self.parts):
            term = p(xs, vs)
            acc = acc + term * t ** k if k else acc + term
        return acc

    def __add__(self, other):
        n = max(len(self.parts), len(other.parts))
        parts = []
        for k in range(n):
            a = self.parts[k] if k < len(self.parts) else None
            b = other.parts[k] if k < len(other.parts) else None
            if a is None:
                parts.append(b)
            elif b is None:
                parts.append(a)
            else:
                parts.append(lambda xs, vs, a=a, b=b: a(xs, vs) + b(xs, vs))
        return TPoly(parts)

    def __mul__(self, other):
        if isinstance(other, TPoly):
            parts = [None] * (len(self.parts) + len(other.parts) - 1)
            for i, a in enumerate(self.parts):
                for j, b in enumerate(other.parts):
                    term = (lambda xs, vs, a=a, b=b: a(xs, vs) * b(xs, vs))
                    if parts[i + j] is None:
                        parts[i + j] = term
                    else:
                        prev = parts[i + j]
                        parts[i + j] = (lambda xs, vs, p=prev, q=term:
                                        p(xs, vs) + q(xs, vs))
            return TPoly(parts)
        return TPoly([lambda xs, vs, p=p, c=other: p(xs, vs) * c
                      for p in self.parts])


def tpoly_const(fn):
    return TPoly([fn])


def apply_generator(gen_name, fn):
    """Closure for  Lambda^gen (fn)  where fn maps (xs, vs) to a scalar."""
    coeffs = fields.field(gen_name).coeffs

    def out(xs, vs):
        X = wrap_once([*xs, *vs])
        fv = fn(X[:3], X[3:])
        _, wx, wv = coeffs(0.0, X[:3], X[3:])
        w6 = [*wx, *wv]
        acc = 0.0
        for m in range(6):
            acc = acc + _val(w6[m]) * _grad(fv, m)
        return acc

    return out


def apply_generator_tpoly(gen_name, poly):
    return TPoly([apply_generator(gen_name, p) for p in poly.parts])


def apply_word(word, fn, t, xs, vs):
    """Evaluate  Lambda^word fn  at (t, xs, vs); fn(t, xs, vs) is
    jet-polymorphic and word is a tuple of generator names (leftmost
    acts last)."""
    g = fn
    for name in reversed(word):
        coeffs = fields.field(name).coeffs

        def g(tq, xq, vq, inner=g, coeffs=coeffs):
            X = wrap_once([*xq, *vq])
            fv = inner(tq, X[:3], X[3:])
            wt, wx, wv = coeffs(tq, X[:3], X[3:])
            if wt is not None:
                raise ValueError("time derivatives not supported in words")
            w6 = [*wx, *wv]
            acc = 0.0
            for m in range(6):
                acc = acc + _val(w6[m]) * _grad(fv, m)
            return acc

    return g(t, xs, vs)


# ---------------------------------------------------------------------------
# dtilde split helpers

def dtilde_split(value_affine, xs, vs):
    """Convert (p0, p1) with  c = p0 + t p1  to (ctilde, chat) with
    c = ctilde * dtilde + chat."""
    p0, p1 = value_affine
    s2 = 1.0 + norm2(vs)
    s = lorentz_factor(vs)
    w = omega_cut(xs, vs)
    ctilde = s2 * p1
    chat = p0 + s * w * p1
    return ctilde, chat


class TableEntry:
    """One row of a commutation table: value = tilde*dtilde + hat."""

    __slots__ = ("tilde", "hat", "value")

    def __init__(self, tilde, hat, value):
        self.tilde = tilde
        self.hat = hat
        self.value = value

    def __repr__(self):
        return f"TableEntry(tilde={self.tilde}, hat={self.hat})"


class CoefficientTable(dict):
    """Map generator name (or word tuple) -> TableEntry / coefficient."""

    def __init__(self, entries, provenance):
        super().__init__(entries)
        self.provenance = provenance

    def apply(self, h, t, xs, vs):
        """Contract the table against Lambda^key h (exact jets on h)."""
        acc = 0.0
        for key, entry in self.items():
            word = key if isinstance(key, tuple) else (key,)
            val = entry.value if isinstance(entry, TableEntry) else entry
            if np.all(deepest_abs(val) == 0.0):
                continue
            acc = acc + val * apply_word(word, h, t, xs, vs)
        return acc


def deepest_abs(u):
    return np.abs(deep_val(u)) if isinstance(u, Jet) else np.abs(u)


# ---------------------------------------------------------------------------
# first-order commutation tables  [X_i, Lambda^rho]

def _first_order_polys(xname, rho):
    """dict generator -> TPoly (degree <= 1) for [X, Lambda^rho]."""
    def part(k):
        def p(xs, vs, k=k):
            w0 = commutator6(xname, rho, 0.0, xs, vs)
            if k == 0:
                return w0
            w1 = commutator6(xname, rho, 1.0, xs, vs)
            return [a - b for a, b in zip(w1, w0)]
        return p

    # evaluate both t-slices once per call and project
    def rows_at(k, xs, vs):
        return project_to_generators(part(k)(xs, vs), xs, vs)

    polys = {}
    for gen in fields.KGENS:
        p0 = (lambda xs, vs, g=gen: rows_at(0, xs, vs)[g])
        p1 = (lambda xs, vs, g=gen: rows_at(1, xs, vs)[g])
        polys[gen] = TPoly([p0, p1])
    return polys


def first_order_commutator(i, rho, t, p):
    """Commutation table of [X_i, Lambda^rho] at a phase point.

    i: 1..7 selects the bulk direction X_i; rho: generator name or index
    1..17.  Entries have the form tilde*dtilde + hat with tilde, hat
    depending on (x, v) only.
    """
    xname = f"X{i}"
    rho = _gen_name(rho)
    xs, vs = _point(p)
    polys = _first_order_polys(xname, rho)
    entries = {}
    for gen, poly in polys.items():
        p0 = poly.parts[0](xs, vs)
        p1 = poly.parts[1](xs, vs)
        tilde, hat = dtilde_split((p0, p1), xs, vs)
        entries[gen] = TableEntry(tilde, hat, p0 + t * p1)
    return CoefficientTable(entries, "first-order-commutator")


def _gen_name(rho):
    if isinstance(rho, int):
        return f"Gamma{rho}"
    if isinstance(rho, str):
        if rho in fields.FIELDS:
            return rho
        raise KeyError(f"unknown generator {rho!r}")
    raise TypeError("rho must be a generator name or index")


def _point(p):
    x = np.asarray(p.x, dtype=float)
    v = np.asarray(p.v, dtype=float)
    return [x[..., 0], x[..., 1], x[..., 2]], [v[..., 0], v[..., 1], v[..., 2]]


# ---------------------------------------------------------------------------
# derivatives of the inhomogeneous modulation

def dtilde_derivative(rho, t, p):
    """(e1, e2, Lambda^rho dtilde) with Lambda^rho dtilde = e1*dtilde + e2."""
    rho = _gen_name(rho)
    xs, vs = _point(p)
    a_fn = lambda xs, vs: base.dtilde_parts(xs, vs)[0]
    b_fn = lambda xs, vs: base.dtilde_parts(xs, vs)[1]
    la = apply_generator(rho, a_fn)(xs, vs)
    lb = apply_generator(rho, b_fn)(xs, vs)
    e1, e2 = dtilde_split((la, lb), xs, vs)
    val = e1 * base.dtilde(t, xs, vs) + e2
    return e1, e2, val


# ---------------------------------------------------------------------------
# high-order commutators via the first-order recursion

def _word_tuple(beta):
    if isinstance(beta, (str, int)):
        return (_gen_name(beta),)
    return tuple(_gen_name(b) for b in beta)


def _synthesize(xname, word):
    """Terms of [X, Lambda^word] as {word: TPoly}; split top/lower order."""
    if len(word) == 1:
        top = {(g,): poly for g, poly in _first_order_polys(xname, word[0]).items()}
        return top, {}
    head, rest = word[0], word[1:]
    top_rest, low_rest = _synthesize(xname, rest)
    top, low = {}, {}

    def add(table, key, poly):
        table[key] = table[key] + poly if key in table else poly

    for g, poly in _first_order_polys(xname, head).items():
        add(top, (g,) + rest, poly)
    for kappa, poly in top_rest.items():
        add(low, kappa, TPoly([apply_generator(head, pp) for pp in poly.parts]))
        add(top, (head,) + kappa, poly)
    for kappa, poly in low_rest.items():
        add(low, kappa, TPoly([apply_generator(head, pp) for pp in poly.parts]))
        add(low, (head,) + kappa, poly)
    return top, low


def high_order_commutator(i, beta, t, p, n_max=3):
    """Top-order and lower-order tables for [X_i, Lambda^beta]."""
    word = _word_tuple(beta)
    if len(word) > n_max:
        raise ValueError(f"word order {len(word)} exceeds cap {n_max}")
    xs, vs = _point(p)
    top_polys, low_polys = _synthesize(f"X{i}", word)

    def materialize(polys, provenance):
        entries = {}
        for key, poly in polys.items():
            vals = [pp(xs, vs) for pp in poly.parts]
            p0 = vals[0]
            p1 = vals[1] if len(vals) > 1 else 0.0
            if len(vals) > 2 and np.any(deepest_abs(vals[2]) > 0):
                raise AssertionError("commutator coefficient not affine in t")
            tilde, hat = dtilde_split((p0, p1), xs, vs)
            entries[key] = TableEntry(tilde, hat, p0 + t * p1)
        return CoefficientTable(entries, provenance)

    return (materialize(top_polys, "high-order-commutator"),
            materialize(low_polys, "high-order-commutator"))


# ---------------------------------------------------------------------------
# the two decompositions of the bulk derivative D_v

def dv_decomposition(variant, t, p):
    """Coefficient table (3-vector entries) with  D_v = sum rows * Lambda."""
    if variant not in ("first", "second"):
        raise ValueError("variant must be 'first' or 'second'")
    xs, vs = _point(p)
    tv = vtilde(vs)
    s = lorentz_factor(vs)
    s2 = 1.0 + norm2(vs)
    dt = base.dtilde(t, xs, vs)
    hi = psi_gem1_v(vs)
    hi1 = psi_ge1_v(vs)
    lo = psi_le2_v(vs)
    J = jac_vhat(vs)
    nv = vnorm_guarded(vs)

    def vec(c, u):
        return np.stack([np.broadcast_arrays(c * u[0], c * u[1], c * u[2])[k]
                         for k in range(3)], axis=-1)

    rows = {}
    rows["Gamma1"] = vec(hi, tv)
    for i in range(3):
        tV = vtilde_cross(i, vs)
        if variant == "first":
            rows[f"Gamma{3 + i}"] = vec(hi, tV)
            rows[f"Gamma{6 + i}"] = vec(-hi * dt * s, tV)
            rows[f"Gamma{15 + i}"] = vec(0.0 * hi, tv)
        else:
            rows[f"Gamma{3 + i}"] = vec(0.0 * hi, tv)
            acc = 0.0
            for j in range(3):
                tVj = vtilde_cross(j, vs)
                Xj = cross_e(j, xs)
                Vhj = cross_e(j, vhat(vs))
                coupling = dot3(Xj, tV) + t * dot3(Vhj, tV)
                acc = acc + np.stack(np.broadcast_arrays(
                    tVj[0] * coupling, tVj[1] * coupling, tVj[2] * coupling),
                    axis=-1)
            rows[f"Gamma{6 + i}"] = -(hi / nv)[..., None] * acc
            rows[f"Gamma{15 + i}"] = vec(hi1 / nv, tV)
    if variant == "first":
        rows["Gamma2"] = vec(-hi * dt / s, tv)
    else:
        inner = vec(-hi * dt / s, tv)
        for i in range(3):
            tV = vtilde_cross(i, vs)
            Xi_tv = dot3(cross_e(i, xs), tv)
            inner = inner + vec(-hi * Xi_tv / nv, tV)
        rows["Gamma2"] = inner
    for i in range(3):
        ei = [1.0 if k == i else 0.0 for k in range(3)]
        rows[f"Gamma{9 + i}"] = vec(lo, ei)
        rows[f"Gamma{12 + i}"] = vec(-lo * dt * s2, J[i])
    return CoefficientTable(rows, f"Dv-{variant}")


# ---------------------------------------------------------------------------
# index bookkeeping

def index_functions(beta):
    """(c_vn, c_vm, number of Omx-type letters) for a word over the
    generator set; additive over concatenation."""
    word = _word_tuple(beta)
    cvn = sum(fields.cvn_unit(g) for g in word)
    cvm = sum(fields.cvm_unit(g) for g in word)
    iom = sum(fields.omx_count_unit(g) for g in word)
    return cvn, cvm, iom


# ---------------------------------------------------------------------------
# action on free-streamed x-functions

def _pullback_base():
    """Base tables: Lambda^gen (F(x + vhat t)) = sum c * (D^word F)(x+vhat t)
    for x-only functions F; words over dx1-3 / Om1-3."""
    tables = {}

    def dt_poly(factor_fn):
        # factor * dtilde as a TPoly via the affine split of dtilde
        def p0(xs, vs, f=factor_fn):
            return f(xs, vs) * base.dtilde_parts(xs, vs)[0]

        def p1(xs, vs, f=factor_fn):
            return f(xs, vs) * base.dtilde_parts(xs, vs)[1]

        return TPoly([p0, p1])

    for j in range(3):
        tables["Gamma1", f"dx{j + 1}"] = dt_poly(
            lambda xs, vs, j=j: psi_ge1_v(vs) * vtilde(vs)[j] / lorentz_factor(vs))
        tables["Gamma2", f"dx{j + 1}"] = tpoly_const(
            lambda xs, vs, j=j: psi_ge1_v(vs) * vtilde(vs)[j])
        for i in range(3):
            tables[f"Gamma{3 + i}", f"dx{j + 1}"] = dt_poly(
                lambda xs, vs, i=i, j=j:
                psi_ge1_v(vs) * lorentz_factor(vs) * vtilde_cross(i, vs)[j])
            tables[f"Gamma{6 + i}", f"dx{j + 1}"] = tpoly_const(
                lambda xs, vs, i=i, j=j: psi_ge1_v(vs) * vtilde_cross(i, vs)[j])
            tables[f"Gamma{9 + i}", f"dx{j + 1}"] = dt_poly(
                lambda xs, vs, i=i, j=j:
                psi_le0_v(vs) * (1.0 + norm2(vs)) * jac_vhat(vs)[i][j])
    for i in range(3):
        tables[f"Gamma{12 + i}", f"dx{i + 1}"] = tpoly_const(
            lambda xs, vs: psi_le0_v(vs))
        tables[f"Gamma{15 + i}", f"Om{i + 1}"] = tpoly_const(
            lambda xs, vs: 1.0 + 0.0 * vs[0])
    out = {}
    for (gen, target), poly in tables.items():
        out.setdefault(gen, []).append(((target,), poly))
    return out


_PULLBACK_BASE = None


def freestream_pullback_coeffs(rho, t, p, n_max=3):
    """Coefficients c with Lambda^rho(F(t, x+vhat t)) = sum c * F^word
    evaluated at x+vhat t, for x-only F; words over {dx_i, Om_i}."""
    global _PULLBACK_BASE
    if _PULLBACK_BASE is None:
        _PULLBACK_BASE = _pullback_base()
    word = _word_tuple(rho)
    if len(word) > n_max:
        raise ValueError(f"word order {len(word)} exceeds cap {n_max}")
    terms = _pullback_terms(word)
    xs, vs = _point(p)
    out = {}
    for target, poly in terms:
        val = poly(t, xs, vs)
        out[target] = out.get(target, 0.0) + val
    return CoefficientTable(out, "freestream-pullback")


def _pullback_terms(word):
    if len(word) == 1:
        return list(_PULLBACK_BASE.get(word[0], []))
    head, rest = word[0], word[1:]
    out = []
    for target, poly in _pullback_terms(rest):
        out.append((target, apply_generator_tpoly(head, poly)))
        for tgt2, poly2 in _PULLBACK_BASE.get(head, []):
            out.append((tgt2 + target, poly * poly2))
    return out
