"""Formal Gaussian integration over the canonical Lagrangian.

An integration problem fixes an adapted basis of the odd symplectic space:
homology block, Lagrangian block, and the image of the Lagrangian under d.
Integration of a polynomial then reads, term by term:

* monomials touching the d-image block restrict to zero;
* homology factors pass through untouched;
* Lagrangian factors are summed over perfect pairings, each pair (a, b)
  (in position order) contributing hbar * sigma^{-1}(a, b), with the Koszul
  sign of the reordering (only odd-odd transpositions count).

The normalisation of a Gaussian weight e^{-sigma/2 hbar} is built into the
rules; no measure object exists.  A second, independent evaluation applies
the one-coordinate recursions in canonical coordinates (diagonal even part,
paired odd part):

    int x^{2(n+1)} = (2n+1) (hbar/lambda) int x^{2n},   int x^{odd} = 0,
    int 1 = 1,  int xi = int xi' = 0,  int xi xi' = -hbar/c,

where lambda and c are the canonical coefficients of the quadratic function
(for the classical normalisation lambda = +-1, c = -1 these are the
textbook moments, with int xi xi' = hbar).  The two paths must agree
exactly on every polynomial; that equality is the module's central check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import linalg
from .bv import BVContext, bracket, bv_context, laplacian
from .linalg import Mat
from .sdr import CanonicalCoordinates, SDRData, _congruence, lagrangian_Ls
from .series import FormalSeries, SeriesError
from .superspace import EVEN, ODD, SuperSpace, make_space, parity_reverse


class IntegrationError(ValueError):
    pass


@dataclass(frozen=True)
class IntegrationProblem:
    w_space: SuperSpace            # Pi V, original coordinates
    ad_space: SuperSpace           # adapted basis [homology | L_s | d(L_s)]
    h_space: SuperSpace            # Pi H(V); equals the homology block
    cutoff: int
    h_count: int
    l_count: int
    sigma: Mat                     # <l_a, d l_b> on the Lagrangian block
    sigma_inv: Mat
    basis: Mat                     # columns: adapted basis vectors in W coords
    basis_inv: Mat
    ctx: BVContext                 # BV context on the adapted space
    ctx_h: BVContext               # BV context on the homology block
    canonical: CanonicalCoordinates
    _pair_cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def l_indices(self) -> list[int]:
        return list(range(self.h_count, self.h_count + self.l_count))

    @property
    def d_indices(self) -> list[int]:
        return list(range(self.h_count + self.l_count, self.ad_space.n))

    def l_parities(self) -> tuple[int, ...]:
        return tuple(self.ad_space.parities[i] for i in self.l_indices)

    # -- coordinate changes -------------------------------------------

    def to_adapted(self, f: FormalSeries) -> FormalSeries:
        if f.space != self.w_space:
            raise IntegrationError("series does not live over the problem's W")
        images = {
            i: _linear_form(self.ad_space, self.cutoff, self.basis[i])
            for i in range(self.w_space.n)
        }
        return f.substitute(images, self.ad_space)

    def from_adapted(self, f: FormalSeries) -> FormalSeries:
        if f.space != self.ad_space:
            raise IntegrationError("series does not live over the adapted space")
        images = {
            i: _linear_form(self.w_space, self.cutoff, self.basis_inv[i])
            for i in range(self.ad_space.n)
        }
        return f.substitute(images, self.w_space)

    def h_to_adapted(self, f: FormalSeries) -> FormalSeries:
        """Include a series over the homology block into the adapted space."""
        if f.space != self.h_space:
            raise IntegrationError("series does not live over the homology block")
        images = {
            i: FormalSeries.generator(self.ad_space, i, self.cutoff)
            for i in range(self.h_count)
        }
        return f.substitute(images, self.ad_space)


def _linear_form(space: SuperSpace, cutoff: int, coeffs) -> FormalSeries:
    out = FormalSeries.zero(space, cutoff)
    for j, c in enumerate(coeffs):
        if c:
            out = out + FormalSeries.generator(space, j, cutoff).scale(c)
    return out


def _fresh_names(taken: set[str], prefix: str, count: int) -> list[str]:
    names = []
    for k in range(count):
        name = f"{prefix}{k}"
        while name in taken:
            name = "_" + name
        taken.add(name)
        names.append(name)
    return names


def problem_from_sdr(sdr: SDRData, cutoff: int) -> IntegrationProblem:
    w_space = parity_reverse(sdr.space)
    lag = lagrangian_Ls(sdr, w_space)
    n = w_space.n
    h = sdr.h_dim
    r = lag.dim

    cols = list(sdr.reps) + list(lag.basis) + list(sdr.dc_basis)
    basis = linalg.columns(cols) if cols else ()
    basis_inv = linalg.inverse(basis) if cols else ()

    taken = {name for name, _ in sdr.h_space.generators}
    l_names = _fresh_names(taken, "l", r)
    d_names = _fresh_names(taken, "k", r)
    gens = [(name, 1 - p) for name, p in sdr.h_space.generators]
    gens += [(l_names[a], w_space.vector_parity(lag.basis[a])) for a in range(r)]
    gens += [(d_names[a], w_space.vector_parity(sdr.dc_basis[a])) for a in range(r)]

    d_ad = linalg.matmul(basis_inv, linalg.matmul(w_space.d, basis)) if n else ()
    f_ad = linalg.matmul(linalg.transpose(basis), linalg.matmul(w_space.form, basis)) if n else ()
    ad_space = make_space(gens, d_ad, f_ad, "odd-symplectic")

    h_space = parity_reverse(sdr.h_space)
    for a in range(h):
        for b in range(h):
            if h_space.form[a][b] != f_ad[a][b]:
                raise IntegrationError("homology block form mismatch")

    canonical = _congruence(lag.sigma, lag.parities)
    return IntegrationProblem(
        w_space=w_space,
        ad_space=ad_space,
        h_space=h_space,
        cutoff=cutoff,
        h_count=h,
        l_count=r,
        sigma=lag.sigma,
        sigma_inv=lag.sigma_inv,
        basis=basis,
        basis_inv=basis_inv,
        ctx=bv_context(ad_space),
        ctx_h=bv_context(h_space),
        canonical=canonical,
    )


def problem_for_space(v_space: SuperSpace, cutoff: int):
    from .sdr import hodge_decompose

    sdr = hodge_decompose(v_space)
    return sdr, problem_from_sdr(sdr, cutoff)


# -- Wick contraction ---------------------------------------------------


def _unshuffle_sign(prob: IntegrationProblem, mono) -> int:
    """Koszul sign for moving homology factors in front of Lagrangian ones."""
    parities = prob.ad_space.parities
    crossings = 0
    odd_l_before = 0
    for i in range(prob.ad_space.n):
        e = mono[i]
        if not e:
            continue
        if i < prob.h_count:
            if parities[i] == ODD:
                crossings += odd_l_before
        elif i < prob.h_count + prob.l_count:
            if parities[i] == ODD:
                odd_l_before += e
    return -1 if crossings % 2 else 1


def _pair_sum(prob: IntegrationProblem, l_exps: tuple[int, ...]) -> Fraction:
    """Sum over perfect pairings of the Lagrangian factors, with signs."""
    cache = prob._pair_cache
    parities = prob.l_parities()
    sigma_inv = prob.sigma_inv
    r = prob.l_count

    def rec(exps: tuple[int, ...]) -> Fraction:
        if exps in cache:
            return cache[exps]
        a = next((k for k in range(r) if exps[k]), None)
        if a is None:
            return Fraction(1)
        total = Fraction(0)
        work = list(exps)
        work[a] -= 1
        if work[a] > 0 and sigma_inv[a][a] != 0:
            nxt = tuple(e - 2 if k == a else e for k, e in enumerate(exps))
            total += work[a] * sigma_inv[a][a] * rec(nxt)
        for b in range(a + 1, r):
            if not work[b] or sigma_inv[a][b] == 0:
                continue
            sign = 1
            if parities[a] == ODD and parities[b] == ODD:
                between = sum(work[k] for k in range(a + 1, b) if parities[k] == ODD)
                sign = -1 if between % 2 else 1
            nxt = tuple(
                e - (1 if k == a else 0) - (1 if k == b else 0) for k, e in enumerate(exps)
            )
            total += work[b] * sign * sigma_inv[a][b] * rec(nxt)
        cache[exps] = total
        return total

    return rec(l_exps)


def wick_integrate(prob: IntegrationProblem, f: FormalSeries) -> FormalSeries:
    """Integrate over the Lagrangian block; the result lives on homology duals."""
    if f.space != prob.ad_space:
        raise IntegrationError("wick_integrate expects a series over the adapted space")
    if f.cutoff != prob.cutoff:
        raise IntegrationError("cutoff mismatch between series and problem")
    h, r = prob.h_count, prob.l_count
    out: dict = {}
    for (g, mono), c in f.terms.items():
        if any(mono[i] for i in prob.d_indices):
            continue
        l_exps = tuple(mono[h + a] for a in range(r))
        deg_l = sum(l_exps)
        if deg_l % 2:
            continue
        npairs = deg_l // 2
        value = c
        if npairs:
            value = value * _unshuffle_sign(prob, mono) * _pair_sum(prob, l_exps)
            if value == 0:
                continue
        key = (g + npairs, tuple(mono[:h]))
        acc = out.get(key, Fraction(0)) + value
        if acc:
            out[key] = acc
        elif key in out:
            del out[key]
    return FormalSeries.build(prob.h_space, prob.cutoff, out)


# -- coordinate-rule evaluation (the oracle path) -----------------------


def _even_moment(n2: int, lam: Fraction) -> tuple[Fraction, int]:
    """int x^{n2} via the recursion; returns (rational factor, hbar power)."""
    if n2 % 2:
        return Fraction(0), 0
    value = Fraction(1)
    power = 0
    n = n2
    while n > 0:
        value *= Fraction(n - 1) / lam
        power += 1
        n -= 2
    return value, power


def direct_integrate(prob: IntegrationProblem, f: FormalSeries) -> FormalSeries:
    """Evaluate the integral coordinate by coordinate in canonical coordinates.

    Independent of wick_integrate: no pairing enumeration, no use of
    sigma^{-1}; only the canonical-coordinate recursions of the definition.
    """
    if f.space != prob.ad_space:
        raise IntegrationError("direct_integrate expects a series over the adapted space")
    if f.cutoff != prob.cutoff:
        raise IntegrationError("cutoff mismatch between series and problem")
    h, r = prob.h_count, prob.l_count
    f = f.restrict(prob.d_indices)
    can = prob.canonical
    # substitute Lagrangian duals by their canonical expansions
    images = {}
    for i in range(prob.ad_space.n):
        if h <= i < h + r:
            row = can.transform[i - h]
            form = FormalSeries.zero(prob.ad_space, prob.cutoff)
            for j, coeff in enumerate(row):
                if coeff:
                    form = form + FormalSeries.generator(
                        prob.ad_space, h + j, prob.cutoff
                    ).scale(coeff)
            images[i] = form
        else:
            images[i] = FormalSeries.generator(prob.ad_space, i, prob.cutoff)
    f = f.substitute(images, prob.ad_space)

    lambdas = dict(can.evens)
    pair_of = {}
    for a, b, scale in can.odd_pairs:
        pair_of[a] = (a, b, scale)
        pair_of[b] = (a, b, scale)
    parities = prob.l_parities()

    out: dict = {}
    for (g, mono), c in f.terms.items():
        l_exps = tuple(mono[h + a] for a in range(r))
        value = c * _unshuffle_sign(prob, mono)
        hbar_extra = 0
        dead = False
        for idx, lam in can.evens:
            moment, p = _even_moment(l_exps[idx], lam)
            if moment == 0:
                dead = True
                break
            value *= moment
            hbar_extra += p
        if dead:
            continue
        # odd factors: predetermined pairs, Koszul sign of sorting into pair order
        odd_present = [a for a in range(r) if parities[a] == ODD and l_exps[a]]
        if odd_present:
            seen_pairs = []
            for a in odd_present:
                if a not in pair_of:
                    dead = True
                    break
                pr = pair_of[a]
                if pr not in seen_pairs:
                    seen_pairs.append(pr)
            if dead:
                continue
            if any(l_exps[a] == 0 or l_exps[b] == 0 for a, b, _ in seen_pairs):
                continue  # a lone member of a pair integrates to zero
            target = []
            for a, b, _ in sorted(seen_pairs):
                target.extend([a, b])
            perm = [odd_present.index(x) for x in target]
            inv = sum(
                1
                for x in range(len(perm))
                for y in range(x + 1, len(perm))
                if perm[x] > perm[y]
            )
            if inv % 2:
                value = -value
            for _, _, scale in seen_pairs:
                value *= Fraction(-1) / scale
                hbar_extra += 1
        if value == 0:
            continue
        key = (g + hbar_extra, tuple(mono[:h]))
        acc = out.get(key, Fraction(0)) + value
        if acc:
            out[key] = acc
        elif key in out:
            del out[key]
    return FormalSeries.build(prob.h_space, prob.cutoff, out)


# -- exponential integrals and Stokes -----------------------------------


def gaussian_exp_integrate(prob: IntegrationProblem, m: FormalSeries) -> FormalSeries:
    """int e^{m/hbar} against the built-in Gaussian weight."""
    if m.space != prob.ad_space:
        raise IntegrationError("series must live over the adapted space")
    if not m.in_h():
        raise SeriesError("integrand exponent must have weight >= 3 and hbar >= 0")
    if m.parity != "even":
        raise SeriesError("integrand exponent must be even")
    restricted = m.restrict(prob.d_indices)
    return wick_integrate(prob, restricted.hbar_shift(-1).exp())


def integrate_with_coefficients(prob: IntegrationProblem, items):
    """Coefficient-linear extension: [(f_i, a_i)] -> [(int f_i, a_i)]."""
    return [(wick_integrate(prob, f), a) for f, a in items]


def sigma_function(prob: IntegrationProblem) -> FormalSeries:
    """The quadratic function on the Lagrangian block matching the form.

    The naive double sum  sum_{a,b} S[a][b] phi_a phi_b:  lambda x^2 on an
    even diagonal entry, 2 S[a][b] phi_a phi_b off the diagonal (for odd
    pairs the skew cross terms reinforce instead of cancelling).  This is
    the normalisation under which the BV Stokes identity holds against the
    contraction rules.
    """
    h = prob.h_count
    space = prob.ad_space
    parities = prob.l_parities()
    out: dict = {}
    for a in range(prob.l_count):
        for b in range(prob.l_count):
            sab = prob.sigma[a][b]
            if sab == 0:
                continue
            lo, hi = min(a, b), max(a, b)
            if parities[a] == ODD and parities[b] == ODD and a > b:
                sab = -sab  # phi_a phi_b = -phi_b phi_a in canonical order
            mono = [0] * space.n
            mono[h + lo] += 1
            mono[h + hi] += 1
            key = (0, tuple(mono))
            acc = out.get(key, Fraction(0)) + sab
            if acc:
                out[key] = acc
            elif key in out:
                del out[key]
    return FormalSeries.build(space, prob.cutoff, out)


def stokes_residual(prob: IntegrationProblem, f: FormalSeries) -> FormalSeries:
    """int Delta(f e^{-sigma/2 hbar}), which the BV Stokes theorem makes zero.

    Expanding the Laplacian against the Gaussian symbolically gives the
    polynomial integrand

        Delta f - (-1)^{|f|} [f, g] + (-1)^{|f|} f (([g,g]/2) - Delta g),

    with g = sigma / 2 hbar.
    """
    if f.space != prob.ad_space:
        raise IntegrationError("stokes_residual expects a series over the adapted space")
    if f.parity == "mixed":
        return stokes_residual(prob, f.parity_part(EVEN)) + stokes_residual(
            prob, f.parity_part(ODD)
        )
    sign = 1 if f.parity == "even" else -1
    g = sigma_function(prob).hbar_shift(-1).scale(Fraction(1, 2))
    integrand = laplacian(prob.ctx, f)
    integrand = integrand - bracket(prob.ctx, f, g).scale(sign)
    tail = bracket(prob.ctx, g, g).scale(Fraction(1, 2)) - laplacian(prob.ctx, g)
    integrand = integrand + (f * tail).scale(sign)
    return wick_integrate(prob, integrand)
