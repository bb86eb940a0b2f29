"""Minimal models of quantum homotopy Lie structures and homotopy transport.

A quantum structure on a space V with odd symmetric form is an even
element m of the weight > 2 part of functions on Pi V, solving the master
equation (d + hbar Delta) m + [m, m]/2 = 0.  The minimal model lives on
the homology and is computed by the Gaussian integral

    m' = hbar log int_L e^{m / hbar} e^{-sigma / 2 hbar},

a left inverse to the embedding iota (substitution along the projection p
of an SDR).  Homotopies of solutions are handled through coefficients in
the free differential algebra on t (even) and dt (odd): integration
extends coefficient-linearly and transports homotopies to homotopies.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from . import bv, graphs, integrate
from .bv import BVContext, QMEPreconditionError
from .sdr import SDRData, hodge_decompose
from .series import FormalSeries, NotPronilpotent, NotUnital, SeriesError
from .superspace import EVEN, ODD, SuperSpace, parity_reverse


@dataclass(frozen=True)
class QuantumLInfinity:
    """A space with odd symmetric form and a master-equation solution on it."""
    space: SuperSpace              # V
    m: FormalSeries                # over the duals of Pi V
    cutoff: int


def quantum_structure(space: SuperSpace, m: FormalSeries, require_flat: bool = True) -> QuantumLInfinity:
    """Validate and wrap a quantum structure; checks the master equation."""
    w_space = parity_reverse(space)
    if m.space != w_space:
        raise QMEPreconditionError("m must be a series over the parity reversion of V")
    ctx = bv.bv_context(w_space)
    residual = bv.qme_residual(ctx, m)
    if require_flat and not residual.is_zero():
        key = min(residual.terms, key=lambda k: (2 * k[0] + sum(k[1]), k))
        raise QMEPreconditionError(
            f"master equation fails; leading residual term {key} -> {residual.terms[key]}"
        )
    return QuantumLInfinity(space, m, m.cutoff)


def iota(f: FormalSeries, sdr: SDRData) -> FormalSeries:
    """Extension by zero: substitute homology duals by their pullback along p.

    An algebra map h[Pi H(V)] -> h[Pi V] commuting with d + hbar Delta and
    the bracket; rho is a left inverse of it.
    """
    h_rev = parity_reverse(sdr.h_space)
    if f.space != h_rev:
        raise SeriesError("iota expects a series over the duals of Pi H(V)")
    w_space = parity_reverse(sdr.space)
    images = {}
    for a in range(h_rev.n):
        form = FormalSeries.zero(w_space, f.cutoff)
        for j in range(w_space.n):
            c = sdr.p[a][j]
            if c:
                form = form + FormalSeries.generator(w_space, j, f.cutoff).scale(c)
        images[a] = form
    return f.substitute(images, w_space)


def rho(q: QuantumLInfinity, strategy: str = "wick"):
    """The minimal model: integrate e^{m/hbar} over the canonical Lagrangian.

    Returns (QuantumLInfinity on H(V), SDRData, IntegrationProblem).
    Strategies: "wick" (pairing sums), "direct" (canonical coordinate
    recursions), "graphs" (connected stable graph sum); all agree exactly.
    """
    sdr = hodge_decompose(q.space)
    prob = integrate.problem_from_sdr(sdr, q.cutoff)
    m_ad = prob.to_adapted(q.m)
    m_prime = _integrate_strategy(m_ad, prob, strategy)
    if m_prime.min_hbar() is not None and m_prime.min_hbar() < 0:
        raise SeriesError("minimal model acquired negative hbar powers")
    if not m_prime.in_h():
        raise SeriesError("minimal model left the quantum subspace")
    out = quantum_structure(sdr.h_space, m_prime)
    return out, sdr, prob


def _integrate_strategy(m_ad: FormalSeries, prob, strategy: str) -> FormalSeries:
    if strategy == "wick":
        integral = integrate.gaussian_exp_integrate(prob, m_ad)
        return integral.log().hbar_shift(1)
    if strategy == "direct":
        if not m_ad.in_h() or m_ad.parity != "even":
            raise SeriesError("integrand exponent must be even with weight >= 3")
        restricted = m_ad.restrict(prob.d_indices)
        integral = integrate.direct_integrate(prob, restricted.hbar_shift(-1).exp())
        return integral.log().hbar_shift(1)
    if strategy == "graphs":
        restricted = m_ad.restrict(prob.d_indices)
        return graphs.graph_sum_connected(restricted, prob)
    raise ValueError(f"unknown strategy {strategy!r}")


def minimal_model_cyclic(q_space: SuperSpace, m0: FormalSeries):
    """Minimal model of a harmonic classical solution, with its derivation.

    Requires Delta(m0) = 0 and the classical master equation; the quantum
    lift is then m = m0 itself.  Returns the minimal structure together
    with the Hamiltonian derivation [m', -] evaluated on dual generators.
    """
    w_space = parity_reverse(q_space)
    ctx = bv.bv_context(w_space)
    if m0.space != w_space:
        raise QMEPreconditionError("m0 must be a series over the duals of Pi V")
    if any(g != 0 for g, _ in m0.terms):
        raise QMEPreconditionError("a classical solution must be hbar-free")
    if not bv.laplacian(ctx, m0).is_zero():
        raise QMEPreconditionError("m0 is not harmonic: Delta(m0) != 0")
    cme = bv.differential(ctx, m0) + bv.bracket(ctx, m0, m0).scale(Fraction(1, 2))
    if not cme.is_zero():
        raise QMEPreconditionError("m0 does not solve the classical master equation")
    q = quantum_structure(q_space, m0)
    out, sdr, prob = rho(q)
    ctx_h = prob.ctx_h
    derivation = {
        prob.h_space.generators[a][0]: bv.bracket(
            ctx_h, out.m, FormalSeries.generator(prob.h_space, a, m0.cutoff)
        )
        for a in range(prob.h_space.n)
    }
    return out, derivation, sdr, prob


# -- series with coefficients in the free algebra on t, dt ---------------


@dataclass(frozen=True)
class TDtSeries:
    """H(t) = sum_p A_p t^p + sum_p B_p t^p dt with FormalSeries coefficients."""
    space: SuperSpace
    cutoff: int
    t_bound: int
    parts: Mapping[tuple[int, int], FormalSeries]  # (t degree, dt in {0,1})

    @staticmethod
    def build(space, cutoff, t_bound, parts) -> "TDtSeries":
        kept = {}
        for (p, dt), f in parts.items():
            if f.space != space or f.cutoff != cutoff:
                raise SeriesError("component series mismatch the ambient algebra")
            if p < 0 or p > t_bound or dt not in (0, 1):
                continue
            if not f.is_zero():
                kept[(p, dt)] = f
        return TDtSeries(space, cutoff, t_bound, kept)

    @staticmethod
    def zero(space, cutoff, t_bound) -> "TDtSeries":
        return TDtSeries(space, cutoff, t_bound, {})

    @staticmethod
    def constant(series: FormalSeries, t_bound: int) -> "TDtSeries":
        return TDtSeries.build(series.space, series.cutoff, t_bound, {(0, 0): series})

    @staticmethod
    def one(space, cutoff, t_bound) -> "TDtSeries":
        return TDtSeries.constant(FormalSeries.one(space, cutoff), t_bound)

    def is_zero(self) -> bool:
        return not self.parts

    def component(self, p: int, dt: int) -> FormalSeries:
        return self.parts.get((p, dt), FormalSeries.zero(self.space, self.cutoff))

    def a_part(self) -> dict:
        return {p: f for (p, dt), f in self.parts.items() if dt == 0}

    def b_part(self) -> dict:
        return {p: f for (p, dt), f in self.parts.items() if dt == 1}

    def __eq__(self, other):
        if not isinstance(other, TDtSeries):
            return NotImplemented
        return (
            self.space == other.space
            and self.cutoff == other.cutoff
            and dict(self.parts) == dict(other.parts)
        )

    def _check(self, other: "TDtSeries"):
        if self.space != other.space or self.cutoff != other.cutoff or self.t_bound != other.t_bound:
            raise SeriesError("t,dt series live in different algebras")

    def __add__(self, other: "TDtSeries") -> "TDtSeries":
        self._check(other)
        keys = set(self.parts) | set(other.parts)
        return TDtSeries.build(
            self.space, self.cutoff, self.t_bound,
            {k: self.component(*k) + other.component(*k) for k in keys},
        )

    def __neg__(self) -> "TDtSeries":
        return TDtSeries.build(
            self.space, self.cutoff, self.t_bound, {k: -f for k, f in self.parts.items()}
        )

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "TDtSeries":
        return TDtSeries.build(
            self.space, self.cutoff, self.t_bound, {k: f.scale(c) for k, f in self.parts.items()}
        )

    def hbar_shift(self, k: int) -> "TDtSeries":
        return TDtSeries.build(
            self.space, self.cutoff, self.t_bound,
            {key: f.hbar_shift(k) for key, f in self.parts.items()},
        )

    def __mul__(self, other: "TDtSeries") -> "TDtSeries":
        self._check(other)
        out: dict = {}
        for (p, d1), f in self.parts.items():
            for (q, d2), g in other.parts.items():
                if d1 and d2:
                    continue
                if p + q > self.t_bound:
                    continue
                # Koszul: dt passes the series g
                gg = _parity_involution(g) if d1 else g
                prod = f * gg
                key = (p + q, d1 | d2)
                out[key] = out.get(key, FormalSeries.zero(self.space, self.cutoff)) + prod
        return TDtSeries.build(self.space, self.cutoff, self.t_bound, out)

    def exp(self) -> "TDtSeries":
        base = self.component(0, 0)
        mw = base.min_weight()
        if mw is not None and mw < 1:
            raise NotPronilpotent("exp needs the t^0 coefficient to have weight >= 1")
        result = TDtSeries.one(self.space, self.cutoff, self.t_bound)
        power = TDtSeries.one(self.space, self.cutoff, self.t_bound)
        n = 1
        while True:
            power = (self * power).scale(Fraction(1, n))
            if power.is_zero():
                break
            result = result + power
            n += 1
        return result

    def log(self) -> "TDtSeries":
        if self.component(0, 0).constant_term() != 1:
            raise NotUnital("log needs constant term exactly 1")
        g = self - TDtSeries.one(self.space, self.cutoff, self.t_bound)
        base = g.component(0, 0)
        mw = base.min_weight()
        if mw is not None and mw < 1:
            raise NotPronilpotent("log needs the t^0 remainder to have weight >= 1")
        result = TDtSeries.zero(self.space, self.cutoff, self.t_bound)
        power = TDtSeries.one(self.space, self.cutoff, self.t_bound)
        n = 1
        while True:
            power = power * g
            if power.is_zero():
                break
            result = result + power.scale(Fraction((-1) ** (n + 1), n))
            n += 1
        return result


def _parity_involution(f: FormalSeries) -> FormalSeries:
    return f.parity_part(EVEN) - f.parity_part(ODD)


def evaluate_at(h: TDtSeries, point) -> FormalSeries:
    """Set t to the given value and dt to zero."""
    point = Fraction(point)
    out = FormalSeries.zero(h.space, h.cutoff)
    for (p, dt), f in h.parts.items():
        if dt:
            continue
        out = out + f.scale(point ** p)
    return out


def tdt_differential(ctx: BVContext, h: TDtSeries) -> TDtSeries:
    """The differential d x t^p -> (dx) t^p + (-1)^{|x|} p x t^{p-1} dt."""
    out: dict = {}

    def add(key, f):
        if key[0] < 0:
            return
        out[key] = out.get(key, FormalSeries.zero(h.space, h.cutoff)) + f

    for (p, dt), f in h.parts.items():
        add((p, dt), bv.differential(ctx, f))
        if not dt and p > 0:
            add((p - 1, 1), _parity_involution(f).scale(p))
    return TDtSeries.build(h.space, h.cutoff, h.t_bound, out)


def tdt_laplacian(ctx: BVContext, h: TDtSeries) -> TDtSeries:
    return TDtSeries.build(
        h.space, h.cutoff, h.t_bound,
        {key: bv.laplacian(ctx, f) for key, f in h.parts.items()},
    )


def tdt_bracket(ctx: BVContext, x: TDtSeries, y: TDtSeries) -> TDtSeries:
    """Odd Poisson bracket on t,dt coefficients, via the defining BV formula."""
    pieces = _total_parity_parts(x)
    out = TDtSeries.zero(x.space, x.cutoff, x.t_bound)
    for parity, xp in pieces:
        sign = 1 if parity == EVEN else -1
        term = tdt_laplacian(ctx, xp * y).scale(sign)
        term = term - tdt_laplacian(ctx, xp).scale(sign) * y
        term = term - xp * tdt_laplacian(ctx, y)
        out = out + term
    return out


def _total_parity_parts(x: TDtSeries):
    """Split by total parity (series parity plus dt)."""
    even: dict = {}
    odd: dict = {}
    for (p, dt), f in x.parts.items():
        fe, fo = f.parity_part(EVEN), f.parity_part(ODD)
        first, second = (even, odd) if not dt else (odd, even)
        if not fe.is_zero():
            first[(p, dt)] = fe
        if not fo.is_zero():
            second[(p, dt)] = fo
    parts = []
    if even:
        parts.append((EVEN, TDtSeries.build(x.space, x.cutoff, x.t_bound, even)))
    if odd:
        parts.append((ODD, TDtSeries.build(x.space, x.cutoff, x.t_bound, odd)))
    return parts


def tdt_mc_residual(ctx: BVContext, h: TDtSeries) -> TDtSeries:
    """(d + hbar Delta) H + [H, H]/2 in the t,dt coefficient algebra."""
    out = tdt_differential(ctx, h)
    out = out + tdt_laplacian(ctx, h).hbar_shift(1)
    out = out + tdt_bracket(ctx, h, h).scale(Fraction(1, 2))
    return out


def tdt_integrate(prob, h: TDtSeries) -> TDtSeries:
    """Coefficient-linear integration of every t, dt component."""
    if h.space != prob.ad_space:
        raise SeriesError("t,dt series must live over the adapted space")
    return TDtSeries.build(
        prob.h_space, h.cutoff, h.t_bound,
        {key: integrate.wick_integrate(prob, f) for key, f in h.parts.items()},
    )


def tdt_iota(h: TDtSeries, sdr: SDRData) -> TDtSeries:
    w_space = parity_reverse(sdr.space)
    return TDtSeries.build(
        w_space, h.cutoff, h.t_bound,
        {key: iota(f, sdr) for key, f in h.parts.items()},
    )


def rho_tilde(prob, h: TDtSeries) -> TDtSeries:
    """hbar log int e^{H/hbar} with t,dt coefficients; maps solutions of the
    master equation to solutions on homology and is a left inverse of the
    coefficient-extended iota."""
    restricted = TDtSeries.build(
        prob.ad_space, h.cutoff, h.t_bound,
        {key: f.restrict(prob.d_indices) for key, f in h.parts.items()},
    )
    integral = tdt_integrate(prob, restricted.hbar_shift(-1).exp())
    return integral.log().hbar_shift(1)


def homotopy_transport(prob, h: TDtSeries) -> TDtSeries:
    """Transport H = A + B dt through the integral, component formulas:

    A' = hbar log int e^{A/hbar},   B' = e^{-A'/hbar} int e^{A/hbar} B.
    """
    if h.space != prob.ad_space:
        raise SeriesError("homotopies must live over the adapted space")
    a = TDtSeries.build(prob.ad_space, h.cutoff, h.t_bound,
                        {k: f.restrict(prob.d_indices) for k, f in h.parts.items() if k[1] == 0})
    b = TDtSeries.build(prob.ad_space, h.cutoff, h.t_bound,
                        {(k[0], 0): f.restrict(prob.d_indices) for k, f in h.parts.items() if k[1] == 1})
    exp_a = a.hbar_shift(-1).exp()
    int_exp_a = tdt_integrate(prob, exp_a)
    a_prime = int_exp_a.log().hbar_shift(1)
    int_b = tdt_integrate(prob, exp_a * b)
    b_prime = a_prime.hbar_shift(-1).scale(-1).exp() * int_b
    out = dict(a_prime.parts)
    for (p, dt), f in b_prime.parts.items():
        if dt:
            raise SeriesError("unexpected dt component in the B' factor")
        key = (p, 1)
        out[key] = out.get(key, FormalSeries.zero(prob.h_space, h.cutoff)) + f
    return TDtSeries.build(prob.h_space, h.cutoff, h.t_bound, out)


def gauge_flow_homotopy(ctx: BVContext, m: FormalSeries, lam: FormalSeries, t_bound: int) -> TDtSeries:
    """A homotopy H(t) = A(t) + lam dt with H(0) = m, built by solving the
    master equation layer by layer in powers of t.

    lam must be an odd element of weight >= 3 with non-negative hbar
    powers; the flow terminates because each layer gains weight.
    """
    if lam.parity != "odd" or not lam.in_h():
        raise QMEPreconditionError("gauge generator must be odd with weight >= 3")
    cutoff = m.cutoff
    parts = {(0, 0): m, (0, 1): lam}
    h = TDtSeries.build(m.space, cutoff, t_bound, parts)
    for p in range(t_bound):
        res = tdt_mc_residual(ctx, h)
        defect = res.component(p, 1)
        if defect.is_zero():
            continue
        correction = defect.scale(Fraction(-1, p + 1))
        parts[(p + 1, 0)] = parts.get(
            (p + 1, 0), FormalSeries.zero(m.space, cutoff)
        ) + correction
        h = TDtSeries.build(m.space, cutoff, t_bound, parts)
    final = tdt_mc_residual(ctx, h)
    if not final.is_zero():
        raise QMEPreconditionError("gauge flow failed to close the master equation")
    return h
