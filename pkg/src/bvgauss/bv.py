"""BV operators on formal functions over an odd symplectic space.

The Laplacian is defined through a Darboux pairing: a list of vector pairs
(u_p even, v_p odd) with <u_p, v_q> = delta_pq, computed once per space by
rational symplectic Gram-Schmidt (the odd side is corrected by the inverse
of the even-odd pairing block, so the scales come out exactly 1).  With
x_p, xi_p the dual coordinates of such a pair,

    Delta = sum_p  d/dx_p d/dxi_p    (left derivatives),

which is independent of the chosen pairing.  The induced differential on
functions is the odd derivation with d(phi) = phi o d on
dual generators.  The anticommutation d Delta + Delta d = 0 holds for
either overall sign of d, but only this one makes d the Hamiltonian flow
of the Gaussian exponent on the acyclic sector (d = -[., sigma]/2 there),
which is what lets integration carry master-equation solutions to
master-equation solutions.

The odd Poisson bracket is the defect of Delta against the Leibniz rule:

    [f, g] = (-1)^{|f|} Delta(f g) - (-1)^{|f|} Delta(f) g - f Delta(g).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .linalg import Vec
from .superspace import EVEN, ODD, SuperSpace
from .series import FormalSeries, NotPronilpotent


class QMEPreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class BVContext:
    space: SuperSpace
    pairs: tuple[tuple[Vec, Vec], ...]  # (even vector, odd vector), pairing 1
    dual_d: linalg.Mat  # d(phi_j) = sum_i dual_d[j][i] phi_i

    @property
    def cutoffless(self):  # pragma: no cover - debugging aid
        return self.space.names


def bv_context(space: SuperSpace) -> BVContext:
    if space.form_kind != "odd-symplectic":
        raise ValueError("BV context needs an odd symplectic space")
    n = space.n
    evens = space.even_indices()
    odds = space.odd_indices()
    if len(evens) != len(odds):
        raise ValueError("odd symplectic space must have equal even and odd dimensions")
    k = len(evens)
    pairs = []
    if k:
        b = tuple(tuple(space.form[i][j] for j in odds) for i in evens)
        binv = linalg.inverse(b)
        for p in range(k):
            u = tuple(Fraction(1) if i == evens[p] else Fraction(0) for i in range(n))
            v = tuple(
                sum((binv[q][p] for q, o in enumerate(odds) if o == i), Fraction(0))
                for i in range(n)
            )
            pairs.append((u, v))
        for p, (u, v) in enumerate(pairs):
            for q, (_, v2) in enumerate(pairs):
                expected = Fraction(1 if p == q else 0)
                if space.pair(u, v2) != expected:
                    raise ValueError("Darboux pairing failed to reproduce the form")

    dual_d = tuple(tuple(space.d[j][i] for i in range(n)) for j in range(n))
    return BVContext(space, tuple(pairs), dual_d)


def _contract(ctx: BVContext, vector: Vec, f: FormalSeries) -> FormalSeries:
    """Contraction with a vector of W: the matching combination of partials."""
    out = FormalSeries.zero(f.space, f.cutoff)
    for i, c in enumerate(vector):
        if c:
            out = out + f.partial(i).scale(c)
    return out


def laplacian(ctx: BVContext, f: FormalSeries) -> FormalSeries:
    out = FormalSeries.zero(f.space, f.cutoff)
    for u, v in ctx.pairs:
        out = out + _contract(ctx, u, _contract(ctx, v, f))
    return out


def differential(ctx: BVContext, f: FormalSeries) -> FormalSeries:
    """The odd derivation of functions induced by the differential of W.

    Per term, one factor at a time is replaced by its image, in place:
    the Leibniz sign is the parity of the factors to the left, and the
    series product restores canonical monomial order.
    """
    space = f.space
    n = space.n
    cutoff = f.cutoff
    parities = space.parities
    images = {}
    for j in range(n):
        row = ctx.dual_d[j]
        if any(x != 0 for x in row):
            img = FormalSeries.zero(space, cutoff)
            for i, c in enumerate(row):
                if c:
                    img = img + FormalSeries.generator(space, i, cutoff).scale(c)
            images[j] = img
    out = FormalSeries.zero(space, cutoff)
    for (g, mono), c in f.terms.items():
        odd_before = 0
        for k in range(n):
            e = mono[k]
            if e and k in images:
                prefix = tuple(mono[i] if i < k else 0 for i in range(n))
                suffix = tuple(
                    e - 1 if i == k else (mono[i] if i > k else 0) for i in range(n)
                )
                sign = -1 if odd_before % 2 else 1
                piece = FormalSeries.build(space, cutoff, {(g, prefix): Fraction(sign * e) * c})
                piece = piece * images[k]
                piece = piece * FormalSeries.build(space, cutoff, {(0, suffix): Fraction(1)})
                out = out + piece
            if e and parities[k] == ODD:
                odd_before += e
    return out


def bracket(ctx: BVContext, f: FormalSeries, g: FormalSeries) -> FormalSeries:
    """Odd Poisson bracket; f is split into parity parts as needed."""
    par = f.parity
    if par == "mixed":
        return bracket(ctx, f.parity_part(EVEN), g) + bracket(ctx, f.parity_part(ODD), g)
    sign = 1 if par == "even" else -1
    fg = f * g
    out = laplacian(ctx, fg).scale(sign)
    out = out - laplacian(ctx, f).scale(sign) * g
    out = out - f * laplacian(ctx, g)
    return out


def hamiltonian_derivation(ctx: BVContext, f: FormalSeries, g: FormalSeries) -> FormalSeries:
    """The derivation X_f attached to a Hamiltonian f, X_f(g) = [f, g]."""
    return bracket(ctx, f, g)


def _check_quantum_element(m: FormalSeries):
    if m.parity != "even":
        raise QMEPreconditionError("quantum structures must be even")
    if not m.in_h():
        raise QMEPreconditionError(
            "quantum structures need every term of weight >= 3 with hbar exponent >= 0"
        )


def qme_residual(ctx: BVContext, m: FormalSeries) -> FormalSeries:
    """(d + hbar Delta) m + [m, m]/2; zero iff m solves the master equation."""
    _check_quantum_element(m)
    out = differential(ctx, m)
    out = out + laplacian(ctx, m).hbar_shift(1)
    out = out + bracket(ctx, m, m).scale(Fraction(1, 2))
    return out


def hbar_layer_residuals(ctx: BVContext, m: FormalSeries) -> list[FormalSeries]:
    """Residuals of the master equation collected by powers of hbar.

    Layer 0 is the classical master equation for m_0, layer 1 the unimodular
    equation d(m_1) + Delta(m_0) + [m_0, m_1], and so on; re-weighting layer
    k by hbar^k and summing gives back qme_residual(m).
    """
    _check_quantum_element(m)
    top = m.cutoff // 2
    layers = []
    coeffs = {g: m.hbar_coefficient(g) for g in range(top + 1)}
    zero = FormalSeries.zero(m.space, m.cutoff)
    for k in range(top + 1):
        r = differential(ctx, coeffs.get(k, zero))
        if k >= 1:
            r = r + laplacian(ctx, coeffs.get(k - 1, zero))
        for i in range(k + 1):
            j = k - i
            r = r + bracket(ctx, coeffs.get(i, zero), coeffs.get(j, zero)).scale(Fraction(1, 2))
        layers.append(r)
    return layers
