"""Weight-truncated sparse formal series over the duals of a super space.

An element of the completed symmetric algebra on the dual generators, with
Laurent powers of the formal parameter hbar and exact rational coefficients.
A monomial is a tuple of exponents in the fixed generator order; odd duals
have exponent at most one and anticommute (Koszul signs are computed from
the stored order).  Every series carries a weight cutoff N, where the weight
of a term c * hbar^g * m is 2 g + deg(m); all operations re-truncate to
weight <= N, which is the single convergence mechanism of the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .superspace import EVEN, ODD, SuperSpace

Monomial = tuple[int, ...]
TermKey = tuple[int, Monomial]  # (hbar exponent, monomial)


class SeriesError(ValueError):
    pass


class CutoffMismatch(SeriesError):
    pass


class NotPronilpotent(SeriesError):
    pass


class NotUnital(SeriesError):
    pass


def monomial_degree(mono: Monomial) -> int:
    return sum(mono)


def term_weight(key: TermKey) -> int:
    g, mono = key
    return 2 * g + monomial_degree(mono)


def monomial_parity(space: SuperSpace, mono: Monomial) -> int:
    par = 0
    for e, p in zip(mono, space.parities):
        if p == ODD and e:
            par ^= e & 1
    return par


def _mul_monomials(parities: tuple[int, ...], a: Monomial, b: Monomial):
    """Product monomial and Koszul sign, or None when an odd dual squares."""
    sign = 1
    suffix_odd = 0  # odd factors of `a` with index > current position
    odd_count_a = [0] * (len(a) + 1)
    for i in range(len(a) - 1, -1, -1):
        odd_count_a[i] = odd_count_a[i + 1] + (a[i] if parities[i] == ODD else 0)
    out = []
    for j, (ea, eb) in enumerate(zip(a, b)):
        if parities[j] == ODD:
            if ea and eb:
                return None, 0
            if eb:
                if odd_count_a[j + 1] % 2:
                    sign = -sign
        out.append(ea + eb)
    return tuple(out), sign


@dataclass(frozen=True)
class FormalSeries:
    space: SuperSpace
    cutoff: int
    terms: Mapping[TermKey, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.cutoff < 1:
            raise SeriesError("cutoff must be a positive integer")

    # -- constructors -------------------------------------------------

    @staticmethod
    def build(space: SuperSpace, cutoff: int, data: Mapping[TermKey, Fraction]) -> "FormalSeries":
        terms = {
            key: Fraction(c)
            for key, c in data.items()
            if c != 0 and term_weight(key) <= cutoff
        }
        return FormalSeries(space, cutoff, terms)

    @staticmethod
    def zero(space: SuperSpace, cutoff: int) -> "FormalSeries":
        return FormalSeries(space, cutoff, {})

    @staticmethod
    def constant(space: SuperSpace, cutoff: int, value) -> "FormalSeries":
        mono = (0,) * space.n
        return FormalSeries.build(space, cutoff, {(0, mono): Fraction(value)})

    @staticmethod
    def one(space: SuperSpace, cutoff: int) -> "FormalSeries":
        return FormalSeries.constant(space, cutoff, 1)

    @staticmethod
    def generator(space: SuperSpace, name_or_index, cutoff: int) -> "FormalSeries":
        """The dual generator as a linear function."""
        idx = name_or_index if isinstance(name_or_index, int) else space.index_of(name_or_index)
        mono = tuple(1 if i == idx else 0 for i in range(space.n))
        return FormalSeries.build(space, cutoff, {(0, mono): Fraction(1)})

    @staticmethod
    def hbar(space: SuperSpace, cutoff: int, power: int = 1) -> "FormalSeries":
        mono = (0,) * space.n
        return FormalSeries.build(space, cutoff, {(power, mono): Fraction(1)})

    @staticmethod
    def monomial(space: SuperSpace, cutoff: int, exponents, coeff=1, hbar_power: int = 0):
        if isinstance(exponents, dict):
            mono = [0] * space.n
            for name, e in exponents.items():
                mono[space.index_of(name)] = e
            exponents = tuple(mono)
        return FormalSeries.build(space, cutoff, {(hbar_power, tuple(exponents)): Fraction(coeff)})

    # -- inspection ---------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def min_weight(self):
        return min((term_weight(k) for k in self.terms), default=None)

    def min_hbar(self):
        return min((g for g, _ in self.terms), default=None)

    @property
    def parity(self) -> str:
        seen = {monomial_parity(self.space, mono) for _, mono in self.terms}
        if not seen or seen == {EVEN}:
            return "even"
        if seen == {ODD}:
            return "odd"
        return "mixed"

    def parity_part(self, parity: int) -> "FormalSeries":
        kept = {
            key: c for key, c in self.terms.items()
            if monomial_parity(self.space, key[1]) == parity
        }
        return FormalSeries(self.space, self.cutoff, kept)

    def in_h(self) -> bool:
        """Membership in the weight > 2, hbar >= 0 subspace of quantum structures."""
        return all(term_weight(k) >= 3 and k[0] >= 0 for k in self.terms)

    def in_filtration(self, i: int) -> bool:
        """All terms of weight >= i - 2."""
        return all(term_weight(k) >= i - 2 for k in self.terms)

    def hbar_coefficient(self, g: int) -> "FormalSeries":
        """The hbar-free series multiplying hbar^g."""
        kept = {(0, mono): c for (gg, mono), c in self.terms.items() if gg == g}
        return FormalSeries(self.space, self.cutoff, kept)

    def hbar_range(self) -> tuple[int, int]:
        gs = [g for g, _ in self.terms]
        return (min(gs), max(gs)) if gs else (0, 0)

    def constant_term(self) -> Fraction:
        return self.terms.get((0, (0,) * self.space.n), Fraction(0))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0], kv[0][1]))

    def __repr__(self):
        return f"FormalSeries({len(self.terms)} terms, cutoff={self.cutoff})"

    def __eq__(self, other):
        if not isinstance(other, FormalSeries):
            return NotImplemented
        return (
            self.space == other.space
            and self.cutoff == other.cutoff
            and dict(self.terms) == dict(other.terms)
        )

    # -- ring operations ----------------------------------------------

    def _check_compatible(self, other: "FormalSeries"):
        if self.space != other.space:
            raise CutoffMismatch("series live over different spaces")
        if self.cutoff != other.cutoff:
            raise CutoffMismatch(f"cutoff mismatch: {self.cutoff} vs {other.cutoff}")

    def __add__(self, other: "FormalSeries") -> "FormalSeries":
        self._check_compatible(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            v = out.get(key, Fraction(0)) + c
            if v:
                out[key] = v
            elif key in out:
                del out[key]
        return FormalSeries(self.space, self.cutoff, out)

    def __neg__(self) -> "FormalSeries":
        return FormalSeries(self.space, self.cutoff, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "FormalSeries") -> "FormalSeries":
        return self + (-other)

    def scale(self, c) -> "FormalSeries":
        c = Fraction(c)
        if c == 0:
            return FormalSeries.zero(self.space, self.cutoff)
        return FormalSeries(self.space, self.cutoff, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other: "FormalSeries") -> "FormalSeries":
        self._check_compatible(other)
        parities = self.space.parities
        out: dict[TermKey, Fraction] = {}
        for (g1, m1), c1 in self.terms.items():
            for (g2, m2), c2 in other.terms.items():
                g = g1 + g2
                mono, sign = _mul_monomials(parities, m1, m2)
                if mono is None:
                    continue
                if 2 * g + monomial_degree(mono) > self.cutoff:
                    continue
                key = (g, mono)
                v = out.get(key, Fraction(0)) + sign * c1 * c2
                if v:
                    out[key] = v
                elif key in out:
                    del out[key]
        return FormalSeries(self.space, self.cutoff, out)

    def hbar_shift(self, k: int) -> "FormalSeries":
        """Multiply by hbar^k (k may be negative); re-truncates."""
        out = {}
        for (g, mono), c in self.terms.items():
            key = (g + k, mono)
            if term_weight(key) <= self.cutoff:
                out[key] = c
        return FormalSeries(self.space, self.cutoff, out)

    def power(self, k: int) -> "FormalSeries":
        if k < 0:
            raise SeriesError("negative powers are not defined")
        result = FormalSeries.one(self.space, self.cutoff)
        for _ in range(k):
            result = result * self
        return result

    # -- calculus -----------------------------------------------------

    def partial(self, index: int) -> "FormalSeries":
        """Left partial derivative with respect to dual generator `index`."""
        parities = self.space.parities
        out: dict[TermKey, Fraction] = {}
        for (g, mono), c in self.terms.items():
            e = mono[index]
            if e == 0:
                continue
            new = list(mono)
            new[index] = e - 1
            if parities[index] == ODD:
                sign = -1 if sum(
                    mono[i] for i in range(index) if parities[i] == ODD
                ) % 2 else 1
                coeff = sign * c
            else:
                coeff = e * c
            key = (g, tuple(new))
            v = out.get(key, Fraction(0)) + coeff
            if v:
                out[key] = v
            elif key in out:
                del out[key]
        return FormalSeries(self.space, self.cutoff, out)

    def exp(self) -> "FormalSeries":
        mw = self.min_weight()
        if mw is not None and mw < 1:
            raise NotPronilpotent("exp needs every term to have weight >= 1")
        result = FormalSeries.one(self.space, self.cutoff)
        power = FormalSeries.one(self.space, self.cutoff)
        n = 1
        while True:
            power = (power * self).scale(Fraction(1, n))
            if power.is_zero():
                break
            result = result + power
            n += 1
        return result

    def log(self) -> "FormalSeries":
        if self.constant_term() != 1:
            raise NotUnital("log needs constant term exactly 1")
        g = self - FormalSeries.one(self.space, self.cutoff)
        mw = g.min_weight()
        if mw is not None and mw < 1:
            raise NotPronilpotent("log needs f - 1 to have every term of weight >= 1")
        result = FormalSeries.zero(self.space, self.cutoff)
        power = FormalSeries.one(self.space, self.cutoff)
        n = 1
        while True:
            power = power * g
            if power.is_zero():
                break
            result = result + power.scale(Fraction((-1) ** (n + 1), n))
            n += 1
        return result

    def restrict(self, kill: Iterable) -> "FormalSeries":
        """Drop every term whose monomial uses one of the killed generators."""
        indices = set()
        for k in kill:
            indices.add(k if isinstance(k, int) else self.space.index_of(k))
        for i in indices:
            if not 0 <= i < self.space.n:
                raise KeyError(f"unknown generator index {i}")
        kept = {
            key: c for key, c in self.terms.items()
            if all(key[1][i] == 0 for i in indices)
        }
        return FormalSeries(self.space, self.cutoff, kept)

    def substitute(self, images: dict[int, "FormalSeries"], target: SuperSpace) -> "FormalSeries":
        """Algebra map sending dual generator i to images[i] (hbar is fixed).

        Every generator with a nonzero exponent somewhere must have an image,
        and images must match the source generator's parity.
        """
        cutoff = self.cutoff
        for i, img in images.items():
            if img.space != target or img.cutoff != cutoff:
                raise CutoffMismatch("substitution images live in the wrong algebra")
        out = FormalSeries.zero(target, cutoff)
        # multiply factor images one at a time onto the hbar-weighted base:
        # partial weights then grow monotonically toward the final weight,
        # so Laurent terms with negative hbar survive the truncation.
        for (g, mono), c in self.terms.items():
            term = FormalSeries.hbar(target, cutoff, g).scale(c)
            for i, e in enumerate(mono):
                if not e:
                    continue
                if i not in images:
                    raise KeyError(f"no substitution image for generator {i}")
                for _ in range(e):
                    term = term * images[i]
                if term.is_zero():
                    break
            out = out + term
        return out
