"""Dense exact linear algebra over the rationals.

Matrices are tuples of tuples of Fraction (immutable, hashable); vectors are
tuples of Fraction.  Everything here is elementary Gauss elimination -- the
spaces in this package have total dimension well below ten, so there is no
point reaching for a CAS.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Mat = tuple[tuple[Fraction, ...], ...]
Vec = tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


def rat(x) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not a rational: {x!r}")


def mat(rows: Iterable[Iterable]) -> Mat:
    return tuple(tuple(rat(x) for x in row) for row in rows)


def vec(entries: Iterable) -> Vec:
    return tuple(rat(x) for x in entries)


def zeros(m: int, n: int) -> Mat:
    return tuple(tuple(ZERO for _ in range(n)) for _ in range(m))


def identity(n: int) -> Mat:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def shape(a: Mat) -> tuple[int, int]:
    return (len(a), len(a[0]) if a else 0)


def transpose(a: Mat) -> Mat:
    m, n = shape(a)
    return tuple(tuple(a[i][j] for i in range(m)) for j in range(n))


def add(a: Mat, b: Mat) -> Mat:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def sub(a: Mat, b: Mat) -> Mat:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def neg(a: Mat) -> Mat:
    return tuple(tuple(-x for x in row) for row in a)


def scale(c, a: Mat) -> Mat:
    c = rat(c)
    return tuple(tuple(c * x for x in row) for row in a)


def matmul(a: Mat, b: Mat) -> Mat:
    m, n = shape(a)
    n2, p = shape(b)
    if n != n2:
        raise ValueError(f"shape mismatch {shape(a)} @ {shape(b)}")
    bt = transpose(b)
    return tuple(
        tuple(sum((x * y for x, y in zip(row, col)), ZERO) for col in bt) for row in a
    )


def matvec(a: Mat, v: Vec) -> Vec:
    return tuple(sum((x * y for x, y in zip(row, v)), ZERO) for row in a)


def is_zero(a: Mat) -> bool:
    return all(x == 0 for row in a for x in row)


def rref(a: Mat) -> tuple[Mat, list[int]]:
    """Reduced row echelon form with the list of pivot columns."""
    m, n = shape(a)
    rows = [list(r) for r in a]
    pivots: list[int] = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = ONE / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(m):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return tuple(tuple(row) for row in rows), pivots


def rank(a: Mat) -> int:
    return len(rref(a)[1])


def inverse(a: Mat) -> Mat:
    m, n = shape(a)
    if m != n:
        raise ValueError("inverse of non-square matrix")
    aug = tuple(row + ident_row for row, ident_row in zip(a, identity(n)))
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return tuple(row[n:] for row in red)


def nullspace(a: Mat) -> list[Vec]:
    """Basis of the right kernel {x : a x = 0}."""
    m, n = shape(a)
    red, pivots = rref(a)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [ZERO] * n
        v[fc] = ONE
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][fc]
        basis.append(tuple(v))
    return basis


def column_space(a: Mat) -> list[Vec]:
    """Basis of the column span (the pivot columns of a)."""
    _, pivots = rref(a)
    at = transpose(a)
    return [at[c] for c in pivots]


def columns(vectors: Sequence[Vec]) -> Mat:
    """Matrix whose columns are the given vectors."""
    if not vectors:
        return ()
    n = len(vectors[0])
    return tuple(tuple(v[i] for v in vectors) for i in range(n))


def solve(a: Mat, b: Vec) -> Vec:
    """One solution x of a x = b; raises if inconsistent."""
    m, n = shape(a)
    aug = tuple(row + (bv,) for row, bv in zip(a, b))
    red, pivots = rref(aug)
    if n in pivots:
        raise ValueError("inconsistent linear system")
    x = [ZERO] * n
    for r, pc in enumerate(pivots):
        x[pc] = red[r][n]
    return tuple(x)


def in_span(vectors: Sequence[Vec], v: Vec) -> bool:
    if not vectors:
        return all(x == 0 for x in v)
    a = columns(list(vectors))
    try:
        solve(a, v)
        return True
    except ValueError:
        return False


def same_span(us: Sequence[Vec], vs: Sequence[Vec]) -> bool:
    if not us and not vs:
        return True
    stacked_u = tuple(us)
    stacked_v = tuple(vs)
    ru = rank(stacked_u) if us else 0
    rv = rank(stacked_v) if vs else 0
    rall = rank(stacked_u + stacked_v)
    return ru == rv == rall
