"""Finite-dimensional super vector spaces with odd bilinear forms.

A space is a finite ordered basis of named generators, each even or odd,
together with an odd differential (square matrix, column j = image of
generator j) and an odd bilinear form (entry (i, j) = <g_i, g_j>).

Conventions, fixed once for the whole package:

* the form pairs generators of opposite parity only ("odd" form);
* "odd-symmetric" means the form matrix is symmetric, "odd-symplectic"
  means antisymmetric (nonzero entries sit on mixed-parity pairs, where
  the Koszul swap sign is +1, so the graded conditions reduce to these);
* the differential is compatible with the form through
  <dx, y> + (-1)^{|x|} <x, dy> = 0.

The compatibility sign is what makes the quadratic function <y, dy> on the
canonical Lagrangian come out graded-symmetric (symmetric on even, skew on
odd coordinates), which the rest of the package depends on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .linalg import Mat, Vec

EVEN = 0
ODD = 1


class SpaceValidationError(ValueError):
    """Base for the named validation failures of make_space."""

    violation = "Invalid"


class NotOdd(SpaceValidationError):
    violation = "NotOdd"


class DSquareNonzero(SpaceValidationError):
    violation = "DSquareNonzero"


class Degenerate(SpaceValidationError):
    violation = "Degenerate"


class SymmetryViolation(SpaceValidationError):
    violation = "SymmetryViolation"


class IncompatibleDifferential(SpaceValidationError):
    violation = "IncompatibleDifferential"


FORM_KINDS = ("odd-symmetric", "odd-symplectic", "none")


@dataclass(frozen=True)
class SuperSpace:
    generators: tuple[tuple[str, int], ...]
    d: Mat
    form: Mat
    form_kind: str

    @property
    def n(self) -> int:
        return len(self.generators)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.generators)

    @property
    def parities(self) -> tuple[int, ...]:
        return tuple(p for _, p in self.generators)

    def even_indices(self) -> list[int]:
        return [i for i, (_, p) in enumerate(self.generators) if p == EVEN]

    def odd_indices(self) -> list[int]:
        return [i for i, (_, p) in enumerate(self.generators) if p == ODD]

    def dims(self) -> tuple[int, int]:
        return (len(self.even_indices()), len(self.odd_indices()))

    def index_of(self, name: str) -> int:
        for i, (g, _) in enumerate(self.generators):
            if g == name:
                return i
        raise KeyError(f"unknown generator {name!r}")

    def pair(self, u: Vec, v: Vec) -> Fraction:
        """Evaluate the bilinear form on two coordinate vectors."""
        return sum(
            (u[i] * self.form[i][j] * v[j] for i in range(self.n) for j in range(self.n)),
            Fraction(0),
        )

    def gram(self, vectors: list[Vec]) -> Mat:
        return tuple(tuple(self.pair(u, v) for v in vectors) for u in vectors)

    def apply_d(self, v: Vec) -> Vec:
        return linalg.matvec(self.d, v)

    def vector_parity(self, v: Vec) -> int:
        """Parity of a homogeneous coordinate vector; raises on mixed."""
        par = None
        for i, x in enumerate(v):
            if x != 0:
                p = self.parities[i]
                if par is None:
                    par = p
                elif par != p:
                    raise ValueError("vector is not parity-homogeneous")
        return EVEN if par is None else par


def make_space(generators, d, form, form_kind: str = "odd-symmetric") -> SuperSpace:
    """Validate and build a SuperSpace; raises a named violation on failure."""
    gens = tuple((str(name), _parity_code(p)) for name, p in generators)
    n = len(gens)
    D = linalg.mat(d) if n else ()
    F = linalg.mat(form) if n else ()
    if form_kind not in FORM_KINDS:
        raise ValueError(f"unknown form_kind {form_kind!r}")
    if n:
        if linalg.shape(D) != (n, n) or linalg.shape(F) != (n, n):
            raise ValueError("matrix sizes do not match the generator count")
    parities = tuple(p for _, p in gens)
    names = tuple(g for g, _ in gens)
    if len(set(names)) != n:
        raise ValueError("generator names must be distinct")

    for i in range(n):
        for j in range(n):
            if D[i][j] != 0 and parities[i] == parities[j]:
                raise NotOdd(f"d({names[j]}) has a component on {names[i]} of equal parity")
            if F[i][j] != 0 and parities[i] == parities[j]:
                raise NotOdd(f"<{names[i]}, {names[j]}> nonzero on equal parities")

    if n:
        dd = linalg.matmul(D, D)
        for j in range(n):
            if any(dd[i][j] != 0 for i in range(n)):
                raise DSquareNonzero(f"d^2({names[j]}) != 0")

    if form_kind == "odd-symmetric":
        if F != linalg.transpose(F):
            raise SymmetryViolation("form is not symmetric")
    elif form_kind == "odd-symplectic":
        if F != linalg.neg(linalg.transpose(F)):
            raise SymmetryViolation("form is not antisymmetric")

    if form_kind != "none" and n:
        try:
            linalg.inverse(F)
        except ValueError:
            raise Degenerate("form matrix is singular") from None

    # <dg_j, g_k> + (-1)^{p_j} <g_j, dg_k> = 0, as the matrix identity
    # (D^T F)[j][k] + (-1)^{p_j} (F D)[j][k] = 0.
    if n:
        lhs = linalg.matmul(linalg.transpose(D), F)
        rhs = linalg.matmul(F, D)
        for j in range(n):
            sign = -1 if parities[j] == ODD else 1
            for k in range(n):
                if lhs[j][k] + sign * rhs[j][k] != 0:
                    raise IncompatibleDifferential(
                        f"<d {names[j]}, {names[k]}> + (-1)^|{names[j]}| <{names[j]}, d {names[k]}> != 0"
                    )

    return SuperSpace(gens, D, F, form_kind)


def _parity_code(p) -> int:
    if p in (EVEN, ODD):
        return int(p)
    if p == "even":
        return EVEN
    if p == "odd":
        return ODD
    raise ValueError(f"bad parity {p!r}")


def parity_reverse(space: SuperSpace) -> SuperSpace:
    """Parity reversion with the induced form.

    Symmetric input (V, omega) produces the odd symplectic (Pi V, tau) with
    tau(Pi x, Pi y) = (-1)^{|x|} omega(x, y).  Symplectic input inverts that
    construction, so reversing twice gives back the original space on the
    nose.  The differential is carried along unchanged (Pi = tensor with an
    odd line on the right).
    """
    if space.form_kind == "none":
        raise Degenerate("parity reversion needs a non-degenerate form")
    n = space.n
    parities = space.parities
    gens = tuple((name, 1 - p) for name, p in space.generators)
    if space.form_kind == "odd-symmetric":
        new_form = tuple(
            tuple((-1) ** parities[i] * space.form[i][j] for j in range(n)) for i in range(n)
        )
        kind = "odd-symplectic"
    elif space.form_kind == "odd-symplectic":
        new_form = tuple(
            tuple(-((-1) ** parities[i]) * space.form[i][j] for j in range(n)) for i in range(n)
        )
        kind = "odd-symmetric"
    else:  # pragma: no cover
        raise ValueError(space.form_kind)
    return make_space(gens, space.d, new_form, kind)


def homogeneous_basis(space: SuperSpace, vectors: list[Vec]) -> list[Vec]:
    """Replace a basis of a graded subspace by a parity-homogeneous one."""
    if not vectors:
        return []
    split = []
    for v in vectors:
        even_part = tuple(x if space.parities[i] == EVEN else Fraction(0) for i, x in enumerate(v))
        odd_part = tuple(x if space.parities[i] == ODD else Fraction(0) for i, x in enumerate(v))
        if any(x != 0 for x in even_part):
            split.append(even_part)
        if any(x != 0 for x in odd_part):
            split.append(odd_part)
    red, pivots = linalg.rref(tuple(split))
    basis = [red[r] for r in range(len(pivots))]
    if len(basis) != linalg.rank(tuple(vectors)):
        raise ValueError("subspace is not parity-graded")
    return basis


def homology_basis(space: SuperSpace) -> tuple[list[Vec], tuple[int, int]]:
    """Representatives of ker(d)/im(d) and the homology dimensions by parity.

    When the space carries a non-degenerate form the representatives are
    chosen inside ker(d) and orthogonal to im(d); the form then restricts
    non-degenerately to them.  Without a form any complement of im(d) in
    ker(d) is returned.
    """
    n = space.n
    if n == 0:
        return [], (0, 0)
    kernel = linalg.nullspace(space.d)
    image = linalg.column_space(space.d)
    if space.form_kind == "none":
        reps = _complement_in(space, kernel, image)
    else:
        # ker(d) cap im(d)-perp: x with x^T (F D) = 0, i.e. (FD)^T x = 0.
        fd = linalg.matmul(space.form, space.d)
        perp = linalg.nullspace(linalg.transpose(fd))
        u = _intersect(kernel, perp)
        # The radical of the form restricted to that intersection is im(d);
        # representatives are any complement of the radical.
        reps = _complement_in(space, u, image)
    reps = homogeneous_basis(space, reps) if reps else []
    even = sum(1 for v in reps if space.vector_parity(v) == EVEN)
    odd = len(reps) - even
    return reps, (even, odd)


def _intersect(us: list[Vec], vs: list[Vec]) -> list[Vec]:
    """Basis of span(us) cap span(vs)."""
    if not us or not vs:
        return []
    a = linalg.columns(list(us) + [tuple(-x for x in v) for v in vs])
    sols = linalg.nullspace(a)
    out = []
    for s in sols:
        coeffs = s[: len(us)]
        v = tuple(
            sum((c * u[i] for c, u in zip(coeffs, us)), Fraction(0)) for i in range(len(us[0]))
        )
        if any(x != 0 for x in v):
            out.append(v)
    if not out:
        return []
    red, pivots = linalg.rref(tuple(out))
    return [red[r] for r in range(len(pivots))]


def _complement_in(space: SuperSpace, big: list[Vec], small: list[Vec]) -> list[Vec]:
    """Vectors of `big` extending a basis of span(small) to span(big)."""
    if not big:
        return []
    chosen: list[Vec] = []
    current = list(small)
    base_rank = linalg.rank(tuple(current)) if current else 0
    for v in big:
        trial = current + [v]
        if linalg.rank(tuple(trial)) > base_rank:
            chosen.append(v)
            current = trial
            base_rank += 1
    return chosen
