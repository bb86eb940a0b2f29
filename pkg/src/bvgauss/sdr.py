"""Cyclic strong deformation retracts onto homology, and the canonical
Lagrangian they cut out of the parity reversion.

hodge_decompose builds (i, p, s) with

    p i = 1,   d s + s d = 1 - i p,   s i = 0,  p s = 0,  s^2 = 0,

compatibly with the bilinear form: homology representatives are chosen in
ker(d) orthogonal to im(d), and the complement C of ker(d) feeding
s = (d|_C)^{-1} is corrected to be isotropic inside im(i)-perp, which is
exactly what makes <s x, y> = (-1)^{|x|} <x, s y> hold.

The image of s, pushed through parity reversion, is the Lagrangian
subspace used as integration domain; the quadratic form sigma(y) = <y, dy>
restricted there is graded-symmetric (symmetric on even coordinates, skew
on odd ones) and non-degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .linalg import Mat, Vec
from .superspace import (
    EVEN,
    ODD,
    Degenerate,
    SuperSpace,
    homogeneous_basis,
    homology_basis,
    make_space,
    parity_reverse,
)


class SDRError(ValueError):
    pass


@dataclass(frozen=True)
class SDRData:
    space: SuperSpace              # V
    h_space: SuperSpace            # H(V) with the restricted form, d = 0
    i: Mat                         # n x h
    p: Mat                         # h x n
    s: Mat                         # n x n, odd
    reps: tuple[Vec, ...]          # homology representatives (= columns of i)
    c_basis: tuple[Vec, ...]       # isotropic complement of ker(d)
    dc_basis: tuple[Vec, ...]      # d applied to c_basis

    @property
    def h_dim(self) -> int:
        return len(self.reps)


def _ip_matrix(sdr_or_tuple) -> Mat:
    space, i, p = sdr_or_tuple
    n = space.n
    if linalg.shape(p)[0] == 0:
        return linalg.zeros(n, n)
    return linalg.matmul(i, p)


def hodge_decompose(space: SuperSpace) -> SDRData:
    if space.form_kind != "odd-symmetric":
        raise Degenerate("Hodge decomposition needs a non-degenerate odd-symmetric form")
    n = space.n
    reps, _dims = homology_basis(space)
    image = homogeneous_basis(space, linalg.column_space(space.d)) if n else []

    # im(i)-perp = {x : <rep, x> = 0 for all representatives}
    if reps:
        constraints = tuple(linalg.matvec(space.form, r) for r in reps)
        perp = linalg.nullspace(constraints)
    else:
        perp = [tuple(Fraction(1) if j == k else Fraction(0) for j in range(n)) for k in range(n)]
    perp = homogeneous_basis(space, perp) if perp else []

    # complement of im(d) inside im(i)-perp, then made isotropic
    c0 = _greedy_complement(perp, image)
    c_basis = _isotropize(space, c0, image)
    dc_basis = [space.apply_d(c) for c in c_basis]

    cols = list(reps) + list(c_basis) + list(dc_basis)
    if len(cols) != n:
        raise SDRError("decomposition blocks do not fill the space")
    m = linalg.columns(cols)
    minv = linalg.inverse(m)
    h = len(reps)
    r = len(c_basis)

    i_mat = tuple(tuple(row[:h]) for row in m)
    p_mat = tuple(minv[k] for k in range(h))
    # s in the adapted basis: s(d c_k) = c_k, zero elsewhere
    s_blk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(r):
        s_blk[h + k][h + r + k] = Fraction(1)
    s_mat = linalg.matmul(m, linalg.matmul(linalg.mat(s_blk), minv))

    names = []
    for k, rep in enumerate(reps):
        hits = [j for j, x in enumerate(rep) if x != 0]
        if len(hits) == 1 and rep[hits[0]] == 1:
            names.append(space.generators[hits[0]][0])
        else:
            names.append(f"h{k}")
    h_gens = tuple((names[k], space.vector_parity(reps[k])) for k in range(h))
    omega_h = space.gram(list(reps))
    h_space = make_space(h_gens, linalg.zeros(h, h), omega_h, "odd-symmetric")

    sdr = SDRData(
        space, h_space, i_mat, p_mat, s_mat,
        tuple(reps), tuple(c_basis), tuple(dc_basis),
    )
    failures = [name for name, ok in check_sdr(space, h_space, i_mat, p_mat, s_mat) if not ok]
    if failures:
        raise SDRError(f"constructed SDR violates: {', '.join(failures)}")
    return sdr


def _greedy_complement(big: list[Vec], small: list[Vec]) -> list[Vec]:
    chosen: list[Vec] = []
    current = list(small)
    base = linalg.rank(tuple(current)) if current else 0
    for v in big:
        if linalg.rank(tuple(current + [v])) > base:
            chosen.append(v)
            current.append(v)
            base += 1
    return chosen


def _isotropize(space: SuperSpace, c0: list[Vec], image: list[Vec]) -> list[Vec]:
    """Correct a complement by vectors of im(d) until it is isotropic.

    With A the Gram matrix of the complement and B its pairing with im(d)
    (perfect, since the form is non-degenerate on im(i)-perp and im(d) is
    isotropic), the correction c - (B^{-1} A / 2) im(d) works over any field
    of characteristic zero and preserves parities.
    """
    if not c0:
        return []
    a = space.gram(c0)
    if linalg.is_zero(a):
        return list(c0)
    b = tuple(tuple(space.pair(c, l) for l in image) for c in c0)
    gamma = linalg.scale(Fraction(1, 2), linalg.matmul(linalg.inverse(b), a))
    out = []
    for idx, c in enumerate(c0):
        corr = list(c)
        for j, l in enumerate(image):
            coef = gamma[j][idx]
            if coef:
                corr = [x - coef * y for x, y in zip(corr, l)]
        out.append(tuple(corr))
    check = space.gram(out)
    if not linalg.is_zero(check):
        raise SDRError("failed to build an isotropic complement")
    return out


def check_sdr(space: SuperSpace, h_space: SuperSpace, i: Mat, p: Mat, s: Mat):
    """All conditions of a cyclic SDR as named exact matrix identities."""
    n = space.n
    h = h_space.n
    d = space.d
    f = space.form
    results = []
    ip = linalg.matmul(i, p) if h else linalg.zeros(n, n)
    pi = linalg.matmul(p, i) if h else ()
    results.append(("pi=id", pi == linalg.identity(h)))
    lhs = linalg.add(linalg.matmul(d, s), linalg.matmul(s, d))
    results.append(("ds+sd=id-ip", lhs == linalg.sub(linalg.identity(n), ip)))
    si = linalg.matmul(s, i) if h else ()
    results.append(("si=0", h == 0 or linalg.is_zero(si)))
    ps = linalg.matmul(p, s) if h else ()
    results.append(("ps=0", h == 0 or linalg.is_zero(ps)))
    results.append(("s^2=0", linalg.is_zero(linalg.matmul(s, s))))
    # s is odd
    odd_ok = all(
        s[a][b] == 0
        for a in range(n)
        for b in range(n)
        if space.parities[a] == space.parities[b]
    )
    results.append(("s odd", odd_ok))
    # <ix, iy> = <x, y>
    if h:
        gram_i = linalg.matmul(linalg.transpose(i), linalg.matmul(f, i))
        results.append(("<ix,iy>=<x,y>", gram_i == h_space.form))
    else:
        results.append(("<ix,iy>=<x,y>", True))
    # ker(p) perp im(i)
    kerp = linalg.nullspace(p) if h else [
        tuple(Fraction(1) if j == k else Fraction(0) for j in range(n)) for k in range(n)
    ]
    perp_ok = all(
        space.pair(tuple(col), k) == 0
        for k in kerp
        for col in (linalg.transpose(i) if h else ())
    )
    results.append(("ker(p) perp im(i)", perp_ok))
    # <sx, y> = (-1)^{|x|} <x, sy>
    st_f = linalg.matmul(linalg.transpose(s), f)
    f_s = linalg.matmul(f, s)
    cyc_ok = all(
        st_f[a][b] == ((-1) ** space.parities[a]) * f_s[a][b]
        for a in range(n)
        for b in range(n)
    )
    results.append(("<sx,y>=(-1)^|x|<x,sy>", cyc_ok))
    return results


def orthogonality_relations(sdr: SDRData):
    """The three perp identities of the decomposition, as span equalities."""
    space = sdr.space
    n = space.n

    def perp_of(vectors):
        if not vectors:
            return [tuple(Fraction(1) if j == k else Fraction(0) for j in range(n)) for k in range(n)]
        constraints = tuple(linalg.matvec(space.form, v) for v in vectors)
        return linalg.nullspace(constraints)

    im_i = list(sdr.reps)
    im_s = list(sdr.c_basis)
    im_d = list(sdr.dc_basis)
    return [
        ("im(i)^perp = im(s)+im(d)", linalg.same_span(perp_of(im_i), im_s + im_d)),
        ("im(d)^perp = im(i)+im(d)", linalg.same_span(perp_of(im_d), im_i + im_d)),
        ("im(s)^perp = im(i)+im(s)", linalg.same_span(perp_of(im_s), im_i + im_s)),
    ]


def repair_side_conditions(space: SuperSpace, i: Mat, p: Mat, s: Mat) -> Mat:
    """Replace s so the side conditions hold, keeping the SDR identities.

    First s~ = (ds+sd) s (ds+sd) repairs s i = 0 and p s = 0, then
    s' = s~ d s~ kills the square.
    """
    d = space.d
    dssd = linalg.add(linalg.matmul(d, s), linalg.matmul(s, d))
    s_tilde = linalg.matmul(dssd, linalg.matmul(s, dssd))
    return linalg.matmul(s_tilde, linalg.matmul(d, s_tilde))


@dataclass(frozen=True)
class LagrangianData:
    w_space: SuperSpace            # Pi V
    basis: tuple[Vec, ...]         # basis of L_s = Pi im(s), in W coordinates
    parities: tuple[int, ...]      # parities of the basis vectors in W
    sigma: Mat                     # sigma[a][b] = <e_a, d e_b>
    sigma_inv: Mat

    @property
    def dim(self) -> int:
        return len(self.basis)


def lagrangian_Ls(sdr: SDRData, w_space: SuperSpace) -> LagrangianData:
    """The canonical Lagrangian Pi im(s) with its quadratic form."""
    expected = parity_reverse(sdr.space)
    if w_space != expected:
        raise SDRError("W must be the parity reversion of the SDR's space")
    basis = sdr.c_basis
    n = w_space.n
    fd = linalg.matmul(w_space.form, w_space.d)
    sigma = tuple(
        tuple(
            sum((a[x] * fd[x][y] * b[y] for x in range(n) for y in range(n)), Fraction(0))
            for b in basis
        )
        for a in basis
    )
    parities = tuple(w_space.vector_parity(v) for v in basis)
    r = len(basis)
    # graded symmetry: symmetric on even pairs, skew on odd pairs, zero mixed
    for a in range(r):
        for b in range(r):
            if parities[a] != parities[b]:
                if sigma[a][b] != 0:
                    raise SDRError("sigma pairs coordinates of different parity")
            elif parities[a] == EVEN:
                if sigma[a][b] != sigma[b][a]:
                    raise SDRError("sigma not symmetric on even coordinates")
            else:
                if sigma[a][b] != -sigma[b][a]:
                    raise SDRError("sigma not skew on odd coordinates")
    if sum(1 for par in parities if par == ODD) % 2:
        raise SDRError("Lagrangian has an odd number of odd coordinates")
    for a in range(r):
        for b in range(r):
            if w_space.pair(basis[a], basis[b]) != 0:
                raise SDRError("L_s is not isotropic in W")
    if r:
        try:
            sigma_inv = linalg.inverse(sigma)
        except ValueError:
            raise Degenerate("sigma is degenerate on L_s") from None
    else:
        sigma_inv = ()
    return LagrangianData(w_space, tuple(basis), parities, sigma, sigma_inv)


@dataclass(frozen=True)
class CanonicalCoordinates:
    """A congruence bringing sigma to diagonal-plus-pairs form.

    transform columns express the canonical basis in the Lagrangian basis;
    in canonical coordinates the quadratic function is
    sum lambda_i x_i^2  +  sum c_j xi_j xi_j' with the listed scales.
    """
    transform: Mat                       # r x r, new = old . transform
    evens: tuple[tuple[int, Fraction], ...]   # (canonical index, lambda)
    odd_pairs: tuple[tuple[int, int, Fraction], ...]  # (i, j, scale)

    def epsilons(self):
        return tuple((idx, 1 if lam > 0 else -1) for idx, lam in self.evens)


def canonical_coordinates(lag: LagrangianData) -> CanonicalCoordinates:
    return _congruence(lag.sigma, lag.parities)


def _congruence(sigma: Mat, parities: tuple[int, ...]) -> CanonicalCoordinates:
    r = len(parities)
    evens = [a for a in range(r) if parities[a] == EVEN]
    odds = [a for a in range(r) if parities[a] == ODD]
    t = [[Fraction(1) if i == j else Fraction(0) for j in range(r)] for i in range(r)]

    def sig(a, b):
        return sum(
            (t[x][a] * sigma[x][y] * t[y][b] for x in range(r) for y in range(r)),
            Fraction(0),
        )

    def add_col(dst, src, coef):
        for x in range(r):
            t[x][dst] += coef * t[x][src]

    # even block: rational Lagrange diagonalisation
    done: list[int] = []
    remaining = list(evens)
    diag: list[tuple[int, Fraction]] = []
    while remaining:
        a = next((x for x in remaining if sig(x, x) != 0), None)
        if a is None:
            # some off-diagonal entry is nonzero (block is non-degenerate)
            found = None
            for x in remaining:
                for y in remaining:
                    if x != y and sig(x, y) != 0:
                        found = (x, y)
                        break
                if found:
                    break
            if not found:
                raise Degenerate("even block of sigma is degenerate")
            add_col(found[0], found[1], Fraction(1))
            continue
        lam = sig(a, a)
        remaining.remove(a)
        for b in remaining:
            coef = -sig(a, b) / lam
            if coef:
                add_col(b, a, coef)
        diag.append((a, lam))
        done.append(a)

    # odd block: skew congruence into scaled pairs
    pairs: list[tuple[int, int, Fraction]] = []
    remaining = list(odds)
    while remaining:
        a = remaining[0]
        b = next((x for x in remaining[1:] if sig(a, x) != 0), None)
        if b is None:
            raise Degenerate("odd block of sigma is degenerate")
        c = sig(a, b)
        remaining.remove(a)
        remaining.remove(b)
        for k in remaining:
            ka = sig(k, a)
            kb = sig(k, b)
            if kb:
                add_col(k, a, -kb / c)
            if ka:
                add_col(k, b, ka / c)
        pairs.append((a, b, c))

    transform = linalg.mat(t)
    # verify the congruence reproduces sigma in canonical shape
    canon = linalg.matmul(
        linalg.transpose(transform), linalg.matmul(sigma, transform)
    )
    expected = [[Fraction(0)] * r for _ in range(r)]
    for idx, lam in diag:
        expected[idx][idx] = lam
    for a, b, c in pairs:
        expected[a][b] = c
        expected[b][a] = -c
    if canon != linalg.mat(expected):
        raise SDRError("canonical coordinate transform failed to reproduce sigma")
    return CanonicalCoordinates(transform, tuple(diag), tuple(pairs))
