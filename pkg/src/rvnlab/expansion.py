"""Mechanical expansion of the wave-alphabet operators over the
transport-compatible alphabet.

The wave set {S, d_i, rotations Om_i, boosts L_i} and the transport set
{S, d_i, full rotations Omt_i, full boosts Lt_i} differ by velocity
derivatives:

    Om_i = Omt_i - (e_i x v).grad_v          Lt_i = L_i + s d_{v_i}

Words over the wave alphabet therefore expand as

    Gamma^alpha = sum  a(v) . grad_v^beta  Gammat^gamma,

with grad_v letters from {W_i = (e_i x v).grad_v, U_i = s d_{v_i}} and
|beta|+|gamma| <= |alpha|.  The expansion is produced by term rewriting
with the closed-form commutators of the letter algebra; coefficients are
velocity closures differentiated exactly (jets).

From the expansion, the source coefficients for the vector-fielded wave
equations follow by pushing the expansion through the velocity integral
and integrating the grad_v letters by parts.
"""

import numpy as np

from .geometry.jets import Jet, jsqrt

WAVE_ALPHABET = ("S", "dx1", "dx2", "dx3", "Om1", "Om2", "Om3",
                 "L1", "L2", "L3")
FULL_ALPHABET = ("S", "dx1", "dx2", "dx3", "Omt1", "Omt2", "Omt3",
                 "Lt1", "Lt2", "Lt3")

_EPS = {(0, 1): (2, 1.0), (1, 0): (2, -1.0), (1, 2): (0, 1.0),
        (2, 1): (0, -1.0), (2, 0): (1, 1.0), (0, 2): (1, -1.0)}


def _const(c):
    return lambda vs, c=c: c + 0.0 * vs[0]


def _cmul(f, g):
    return lambda vs: f(vs) * g(vs)


def _cadd(f, g):
    return lambda vs: f(vs) + g(vs)


def _s_of(vs):
    return jsqrt(1.0 + vs[0] * vs[0] + vs[1] * vs[1] + vs[2] * vs[2])


def _wrap_v(vs):
    return [Jet(c, [1.0 if j == k else 0.0 for j in range(3)])
            for k, c in enumerate(vs)]


def apply_w(i, f):
    """(e_i x v) . grad_v applied to a velocity closure."""
    def out(vs):
        V = _wrap_v(vs)
        fv = f(V)
        if not isinstance(fv, Jet):
            return 0.0 * vs[0]
        j, k = (i + 1) % 3, (i + 2) % 3
        # e_i x v = (0,..., -v_k at j, +v_j at k) pattern
        w = [0.0, 0.0, 0.0]
        w[j] = -vs[k]
        w[k] = vs[j]
        return sum(w[c] * fv.grad[c] for c in range(3))
    return out


def apply_u(i, f):
    """s d_{v_i} applied to a velocity closure."""
    def out(vs):
        V = _wrap_v(vs)
        fv = f(V)
        if not isinstance(fv, Jet):
            return 0.0 * vs[0]
        return _s_of(vs) * fv.grad[i]
    return out


def apply_vletter(letter, f):
    kind, i = letter
    return apply_w(i, f) if kind == "W" else apply_u(i, f)


def _commute_full_past_vletter(uname, letter):
    """[Gammat^u, letter] expanded as [(coeff, letter'), ...].

    Closed forms of the letter algebra; S and dx commute with both
    letters.
    """
    kind, i = letter
    if uname == "S" or uname.startswith("dx"):
        return []
    j = int(uname[-1]) - 1
    out = []
    if uname.startswith("Omt"):
        if kind == "W":
            # [Omt_j, W_i] = (v_i/s) U_j - (v_j/s) U_i
            out.append((lambda vs, i=i: vs[i] / _s_of(vs), ("U", j)))
            out.append((lambda vs, j=j: -vs[j] / _s_of(vs), ("U", i)))
        else:
            # [Omt_j, U_i] = sum_k eps(i,j,k) U_k
            hit = _EPS.get((i, j))
            if hit is not None:
                k, sign = hit
                out.append((_const(sign), ("U", k)))
    else:  # boost Lt_j
        if kind == "W":
            # [Lt_j, W_i] = sum_k (e_i x e_j)_k U_k
            hit = _EPS.get((i, j))
            if hit is not None:
                k, sign = hit
                out.append((_const(sign), ("U", k)))
        else:
            # [Lt_j, U_i] = (v_j/s) U_i - (v_i/s) U_j
            out.append((lambda vs, j=j: vs[j] / _s_of(vs), ("U", i)))
            out.append((lambda vs, i=i: -vs[i] / _s_of(vs), ("U", j)))
    return out


def _full_on_coeff(uname, f):
    """Gammat^u applied to a velocity closure (x,t parts contribute 0)."""
    if uname == "S" or uname.startswith("dx"):
        return None
    i = int(uname[-1]) - 1
    return apply_w(i, f) if uname.startswith("Omt") else apply_u(i, f)


class Term:
    """coeff(v) * grad_v^beta * Gammat^gamma (operator normal form)."""

    __slots__ = ("coeff", "beta", "gamma")

    def __init__(self, coeff, beta, gamma):
        self.coeff = coeff
        self.beta = tuple(beta)
        self.gamma = tuple(gamma)


def _unit_expansion(letter):
    """Gamma^letter as terms over the full alphabet."""
    if letter == "S" or letter.startswith("dx"):
        return [Term(_const(1.0), (), (letter,))]
    i = int(letter[-1]) - 1
    if letter.startswith("Om"):
        return [Term(_const(1.0), (), (f"Omt{i + 1}",)),
                Term(_const(-1.0), (("W", i),), ())]
    return [Term(_const(1.0), (), (f"Lt{i + 1}",)),
            Term(_const(-1.0), (("U", i),), ())]


def _prepend_vletter(letter, terms, sign=1.0):
    """letter . (terms) with the letter pushed into normal form."""
    out = []
    for t in terms:
        # letter acting on the coefficient
        out.append(Term(_scale(apply_vletter(letter, t.coeff), sign),
                        t.beta, t.gamma))
        # letter joins the beta word
        out.append(Term(_scale(t.coeff, sign), (letter,) + t.beta, t.gamma))
    return out


def _scale(f, s):
    if s == 1.0:
        return f
    return lambda vs, f=f, s=s: s * f(vs)


def _prepend_full(uname, terms):
    """Gammat^u . (terms) in normal form."""
    out = []
    for t in terms:
        df = _full_on_coeff(uname, t.coeff)
        if df is not None:
            out.append(Term(df, t.beta, t.gamma))
        # commute Gammat^u past the beta word, one letter at a time
        out.extend(_commute_word(uname, t))
        out.append(Term(t.coeff, t.beta, (uname,) + t.gamma))
    return out


def _commute_word(uname, term):
    out = []
    beta = term.beta
    for pos in range(len(beta)):
        for coeff2, newletter in _commute_full_past_vletter(uname, beta[pos]):
            # the bracket coefficient sits inside the prefix letters and
            # is differentiated by them; the term's own coefficient stays
            # outside
            prefix, suffix = beta[:pos], beta[pos + 1:]
            inner = [Term(coeff2, (newletter,) + suffix, term.gamma)]
            for letter in reversed(prefix):
                inner = _prepend_vletter(letter, inner)
            for it in inner:
                out.append(Term(_cmul(term.coeff, it.coeff), it.beta,
                                it.gamma))
    return out


def expand_gamma(alpha, n_max=3):
    """Normal form of Gamma^alpha; alpha is a word over the wave set."""
    alpha = tuple(alpha)
    if len(alpha) > n_max:
        raise ValueError(f"word order {len(alpha)} exceeds cap {n_max}")
    for a in alpha:
        if a not in WAVE_ALPHABET:
            raise KeyError(f"{a!r} is not in the wave alphabet")
    if not alpha:
        return [Term(_const(1.0), (), ())]
    head, rest = alpha[0], alpha[1:]
    terms = expand_gamma(rest, n_max)
    out = []
    # Gamma^head = Gammat^head + correction
    out.extend(_prepend_full(_full_name(head), terms))
    if head.startswith("Om"):
        out.extend(_prepend_vletter(("W", int(head[-1]) - 1), terms, -1.0))
    elif head.startswith("L") and not head.startswith("Lt"):
        out.extend(_prepend_vletter(("U", int(head[-1]) - 1), terms, -1.0))
    return _collect(out)


def _full_name(letter):
    if letter.startswith("Om"):
        return f"Omt{letter[-1]}"
    if letter.startswith("L"):
        return f"Lt{letter[-1]}"
    return letter


_PROBES = [np.array([0.37, -1.21, 0.64]), np.array([1.9, 0.23, -0.81]),
           np.array([-0.52, 0.77, 2.3])]


def _collect(terms):
    merged = {}
    for t in terms:
        key = (t.beta, t.gamma)
        if key in merged:
            merged[key] = Term(_cadd(merged[key].coeff, t.coeff),
                               t.beta, t.gamma)
        else:
            merged[key] = t
    out = []
    for t in merged.values():
        probe = max(abs(float(t.coeff(list(p)))) for p in _PROBES)
        if probe > 1e-13:
            out.append(t)
    return out


def correction_set(alpha, n_max=3):
    """Terms of Gamma^alpha - Gammat^alpha (the pure correction part)."""
    full = tuple(_full_name(a) for a in alpha)
    out = []
    for t in expand_gamma(alpha, n_max):
        if t.beta == () and t.gamma == full:
            cshift = _cadd(t.coeff, _const(-1.0))
            out.append(Term(cshift, t.beta, t.gamma))
        else:
            out.append(t)
    return [t for t in out if t.beta or t.gamma != full]


# ---------------------------------------------------------------------------
# source coefficients for the vector-fielded wave equation

def _box_commutation(alpha):
    """{subword: const} with Box Gamma^alpha = sum c Gamma^sub Box."""
    if not alpha:
        return {(): 1.0}
    head, rest = alpha[0], alpha[1:]
    inner = _box_commutation(rest)
    out = {}
    for sub, c in inner.items():
        out[(head,) + sub] = out.get((head,) + sub, 0.0) + c
        if head == "S":
            out[sub] = out.get(sub, 0.0) + 2.0 * c
    return out


def _inv_s_pullout(gamma):
    """Gammat^gamma (f/s) = sum c(v) Gammat^{gamma'} f; boost letters hit
    the 1/s factor."""
    if not gamma:
        return [(_make_inv_s(), ())]
    head, rest = gamma[0], gamma[1:]
    inner = _inv_s_pullout(rest)
    out = []
    for coeff, word in inner:
        df = _full_on_coeff(head, coeff)
        if df is not None:
            out.append((df, word))
        out.append((coeff, (head,) + word))
    return out


def _make_inv_s():
    return lambda vs: 1.0 / _s_of(vs)


def _adjoint_word(beta, coeff):
    """closure of adj(grad_v^beta) applied to coeff: moves all velocity
    letters off the density in the integral."""
    out = coeff
    for letter in beta:  # reversed application order: adj(b1...bm)=bm'..b1'
        kind, i = letter
        if kind == "W":
            out = _scale(apply_w(i, out), -1.0)
        else:
            prev = out
            out = _cadd(_scale(apply_u(i, prev), -1.0),
                        _cmul(lambda vs, i=i: -vs[i] / _s_of(vs), prev))
    return out


def atilde_terms(alpha, n_max=3):
    """{gamma word: closure(v)} with
    Box phi^alpha = sum_gamma integral atilde_gamma(v) f^gamma dv."""
    acc = {}
    for sub, c in _box_commutation(tuple(alpha)).items():
        for term in expand_gamma(sub, n_max):
            for inv_coeff, gword in _inv_s_pullout(term.gamma):
                # integrand: coeff * grad^beta ( inv_coeff * Gammat^g f )
                # move inv_coeff out through the letters by Leibniz:
                # handled by treating it as part of the operand and
                # integrating the whole beta word by parts instead.
                total = _adjoint_word(term.beta,
                                      _scale(term.coeff, c))
                contrib = _cmul(total, inv_coeff)
                if gword in acc:
                    acc[gword] = _cadd(acc[gword], contrib)
                else:
                    acc[gword] = contrib
    return acc


def atilde_map_for_grid(alpha, grid, n_max=3):
    """Evaluate the source coefficients on the velocity lattice."""
    vs = [grid.vflat[:, 0], grid.vflat[:, 1], grid.vflat[:, 2]]
    out = {}
    for gword, closure in atilde_terms(alpha, n_max).items():
        vals = closure(vs) + 0.0 * vs[0]
        out[gword] = np.asarray(vals, dtype=float)
    return out
