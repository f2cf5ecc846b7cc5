"""Surface representations and structural checks.

Three shapes of input are supported:

* ``SubfamilySurface``: y^2 - p x^2 = M u v ; z^2 - p x^2 = (Au+Bv)(Cu+Dv),
  for an odd prime p, with the integrality conditions (C1)/(C2) below.
* ``NormalFormSurface``: d0 y^2 - eps x^2 = a0 u^2 + 2 b0 uv + c0 v^2 and
  d1 z^2 - eps x^2 = a1 u^2 + 2 b1 uv + c1 v^2.
* ``GeneralSurface``: an arbitrary pencil given by two symmetric 5x5 integer
  matrices on coordinates (u, v, x, y, z).

All linear algebra is fraction-free or exact over Fraction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .arith import SquareClass, divisors, is_perfect_square, is_prime, isqrt, square_class

Point = tuple[int, int, int, int, int]
Matrix = tuple[tuple[int, ...], ...]


# ---------------------------------------------------------------------------
# projective integer points


def normalize_point(t) -> Point:
    """Primitive representative with the first nonzero coordinate positive."""
    t = tuple(int(c) for c in t)
    if not any(t):
        raise ValueError("zero tuple is not projective")
    g = 0
    for c in t:
        g = gcd(g, c)
    t = tuple(c // g for c in t)
    for c in t:
        if c:
            return t if c > 0 else tuple(-x for x in t)
    raise AssertionError


def sign_normalize_point(t) -> Point:
    """Canonical representative under (u:v:x:y:z) ~ (u:v:+-x:+-y:+-z).

    Scales to a primitive tuple with the leading nonzero of (u, v) positive,
    then drops the signs of x, y, z.
    """
    t = normalize_point(t)
    u, v, x, y, z = t
    if u < 0 or (u == 0 and v < 0):
        u, v, x, y, z = -u, -v, -x, -y, -z
    return (u, v, abs(x), abs(y), abs(z))


def points_sign_equivalent(a, b) -> bool:
    return sign_normalize_point(a) == sign_normalize_point(b)


# ---------------------------------------------------------------------------
# exact linear algebra on small integer matrices


def mat_rank(m: Matrix) -> int:
    rows = [[Fraction(x) for x in row] for row in m]
    rank, ncols = 0, len(m[0])
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pr = rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / pr[col]
                rows[r] = [a - f * b for a, b in zip(rows[r], pr)]
        rank += 1
    return rank


def mat_det(m: Matrix) -> int:
    """Bareiss fraction-free determinant of a square integer matrix."""
    a = [list(row) for row in m]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[-1][-1]


def left_kernel_basis(rows: list[list[int]]) -> list[list[Fraction]]:
    """Basis of {w : w^T rows = 0} for a list of integer row vectors."""
    nrows = len(rows)
    cols = [[Fraction(rows[r][c]) for r in range(nrows)] for c in range(len(rows[0]))]
    # Solve cols * w = 0 by elimination on the transposed system.
    mat = [col[:] for col in cols]
    pivots: list[int] = []
    rank = 0
    for col in range(nrows):
        pivot = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        pr = mat[rank]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                f = mat[r][col] / pr[col]
                mat[r] = [a - f * b for a, b in zip(mat[r], pr)]
        pivots.append(col)
        rank += 1
    basis = []
    free = [c for c in range(nrows) if c not in pivots]
    for fc in free:
        w = [Fraction(0)] * nrows
        w[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            w[pc] = -mat[r][fc] / mat[r][pc]
        basis.append(w)
    return basis


def clear_denominators(vec: list[Fraction]) -> list[int]:
    lcm = 1
    for f in vec:
        lcm = lcm * f.denominator // gcd(lcm, f.denominator)
    out = [int(f * lcm) for f in vec]
    g = 0
    for c in out:
        g = gcd(g, c)
    return [c // g for c in out] if g else out


# ---------------------------------------------------------------------------
# the subfamily shape


@dataclass(frozen=True)
class SubfamilySurface:
    """y^2 - p x^2 = M u v ; z^2 - p x^2 = (Au+Bv)(Cu+Dv) with p an odd prime.

    (C1): (AD+BC-M)^2 - 4ABCD = p N^2 for an integer N, and
    (C2): N M (AD-BC) != 0.

    N is derived from the coefficients, never trusted from input.
    """

    p: int
    A: int
    B: int
    C: int
    D: int
    M: int

    def c1_value(self) -> int:
        return (self.A * self.D + self.B * self.C - self.M) ** 2 - 4 * self.A * self.B * self.C * self.D

    def derived_N(self) -> int | None:
        val = self.c1_value()
        if val <= 0 or val % self.p:
            return None
        quot = val // self.p
        return isqrt(quot) if is_perfect_square(quot) else None

    @property
    def N(self) -> int:
        n = self.derived_N()
        if n is None:
            raise ValueError("surface violates (C1); N undefined")
        return n

    def eq1(self, pt) -> int:
        u, v, x, y, z = pt
        return y * y - self.p * x * x - self.M * u * v

    def eq2(self, pt) -> int:
        u, v, x, y, z = pt
        return z * z - self.p * x * x - (self.A * u + self.B * v) * (self.C * u + self.D * v)

    def equations(self, pt) -> tuple[int, int]:
        return (self.eq1(pt), self.eq2(pt))

    def jacobian(self, pt) -> tuple[tuple[int, ...], tuple[int, ...]]:
        u, v, x, y, z = pt
        A, B, C, D, M, p = self.A, self.B, self.C, self.D, self.M, self.p
        row1 = (-M * v, -M * u, -2 * p * x, 2 * y, 0)
        row2 = (-(2 * A * C * u + (A * D + B * C) * v),
                -((A * D + B * C) * u + 2 * B * D * v),
                -2 * p * x, 0, 2 * z)
        return (row1, row2)

    def contains(self, pt) -> bool:
        return self.eq1(pt) == 0 and self.eq2(pt) == 0

    def label(self) -> str:
        return f"X_{self.p}_{self.A}_{self.B}_{self.C}_{self.D}_{self.M}"


@dataclass(frozen=True)
class SubfamilyReport:
    c1_holds: bool
    c2_holds: bool
    c1_value: int
    c1_quotient_by_p: int | None
    derived_N: int | None
    claimed_N: int | None
    p_prime: bool

    @property
    def valid(self) -> bool:
        return self.c1_holds and self.c2_holds and self.p_prime


def check_subfamily(s: SubfamilySurface, claimed_N: int | None = None) -> SubfamilyReport:
    """Evaluate (C1) and (C2), reporting the witness value and derived N."""
    val = s.c1_value()
    quot = val // s.p if val % s.p == 0 else None
    n = s.derived_N()
    c1 = n is not None
    c2 = c1 and n != 0 and s.M != 0 and (s.A * s.D - s.B * s.C) != 0
    return SubfamilyReport(
        c1_holds=c1,
        c2_holds=c2,
        c1_value=val,
        c1_quotient_by_p=quot,
        derived_N=n,
        claimed_N=claimed_N,
        p_prime=s.p % 2 == 1 and is_prime(s.p),
    )


def validate_subfamily(s: SubfamilySurface) -> SubfamilySurface:
    rep = check_subfamily(s)
    if not rep.valid:
        raise ValueError(f"invalid subfamily surface {s}: {rep}")
    return s


# ---------------------------------------------------------------------------
# the normal form


@dataclass(frozen=True)
class NormalFormSurface:
    """d0 y^2 - eps x^2 = q0(u,v) and d1 z^2 - eps x^2 = q1(u,v).

    Here qi = ai u^2 + 2 bi uv + ci v^2 and the structural conditions are:
    (1) eps is not a rational square; (2) di = bi^2 - ai*ci; (3) eps*d0*d1*d2
    is a nonzero square for d2 = (b1-b0)^2 - (a1-a0)(c1-c0); (4) q0 and q1
    share no projective root.
    """

    eps: int
    a0: int
    b0: int
    c0: int
    a1: int
    b1: int
    c1: int
    d0: int
    d1: int

    def d2(self) -> int:
        return (self.b1 - self.b0) ** 2 - (self.a1 - self.a0) * (self.c1 - self.c0)

    def eq1(self, pt) -> int:
        u, v, x, y, z = pt
        return self.d0 * y * y - self.eps * x * x - (self.a0 * u * u + 2 * self.b0 * u * v + self.c0 * v * v)

    def eq2(self, pt) -> int:
        u, v, x, y, z = pt
        return self.d1 * z * z - self.eps * x * x - (self.a1 * u * u + 2 * self.b1 * u * v + self.c1 * v * v)

    # The three distinguished pencil members, as quadratic forms.
    def member_value(self, i: int, pt) -> int:
        if i == 0:
            return -self.eq1(pt)
        if i == 1:
            return -self.eq2(pt)
        return -self.eq2(pt) + self.eq1(pt)

    def member_gradient(self, i: int, pt) -> tuple[int, ...]:
        u, v, x, y, z = pt
        if i == 0:
            return (2 * self.a0 * u + 2 * self.b0 * v, 2 * self.b0 * u + 2 * self.c0 * v,
                    2 * self.eps * x, -2 * self.d0 * y, 0)
        if i == 1:
            return (2 * self.a1 * u + 2 * self.b1 * v, 2 * self.b1 * u + 2 * self.c1 * v,
                    2 * self.eps * x, 0, -2 * self.d1 * z)
        return (2 * (self.a1 - self.a0) * u + 2 * (self.b1 - self.b0) * v,
                2 * (self.b1 - self.b0) * u + 2 * (self.c1 - self.c0) * v,
                0, 2 * self.d0 * y, -2 * self.d1 * z)


def binary_resultant(f: list[int], g: list[int]) -> int:
    """Resultant of two binary forms given by coefficient lists (degree = len-1)."""
    n, m = len(f) - 1, len(g) - 1
    size = n + m
    rows = []
    for i in range(m):
        rows.append([0] * i + list(f) + [0] * (size - n - 1 - i))
    for i in range(n):
        rows.append([0] * i + list(g) + [0] * (size - m - 1 - i))
    return mat_det(tuple(tuple(r) for r in rows))


@dataclass(frozen=True)
class NormalFormReport:
    cond1_eps_nonsquare: bool
    cond2_d_values_match: bool
    cond3_product_square: bool
    cond4_no_common_root: bool
    resultant: int

    @property
    def valid(self) -> bool:
        return (self.cond1_eps_nonsquare and self.cond2_d_values_match
                and self.cond3_product_square and self.cond4_no_common_root)


def check_normal_form(nf: NormalFormSurface) -> NormalFormReport:
    cond1 = nf.eps != 0 and not square_class(nf.eps).is_square
    cond2 = (nf.d0 == nf.b0 ** 2 - nf.a0 * nf.c0) and (nf.d1 == nf.b1 ** 2 - nf.a1 * nf.c1)
    d2 = nf.d2()
    prod = nf.eps * nf.d0 * nf.d1 * d2
    cond3 = prod != 0 and square_class(prod).is_square
    res = binary_resultant([nf.a0, 2 * nf.b0, nf.c0], [nf.a1, 2 * nf.b1, nf.c1])
    cond4 = res != 0
    return NormalFormReport(cond1, cond2, cond3, cond4, res)


def subfamily_to_normal_form(s: SubfamilySurface) -> NormalFormSurface:
    """Rewrite the subfamily shape in normal form (an integral change of scale)."""
    A, B, C, D, M = s.A, s.B, s.C, s.D, s.M
    W = A * D - B * C
    return NormalFormSurface(
        eps=s.p,
        a0=0, b0=2 * M, c0=0,
        a1=4 * A * C, b1=2 * (A * D + B * C), c1=4 * B * D,
        d0=4 * M * M, d1=4 * W * W,
    )


def subfamily_point_to_normal_form(s: SubfamilySurface, pt) -> Point:
    """Coordinate change carrying points of the subfamily shape to the normal form."""
    u, v, x, y, z = pt
    W = s.A * s.D - s.B * s.C
    return normalize_point((u * s.M * W, v * s.M * W, 2 * x * s.M * W, y * W, z * s.M))


def normal_form_point_to_subfamily(s: SubfamilySurface, pt) -> Point:
    u, v, x, y, z = pt
    W = s.A * s.D - s.B * s.C
    return normalize_point((2 * u, 2 * v, x, 2 * s.M * y, 2 * W * z))


# ---------------------------------------------------------------------------
# the general pencil shape


@dataclass(frozen=True)
class GeneralSurface:
    """Pencil of quadrics spanned by two symmetric 5x5 integer matrices."""

    mat1: Matrix
    mat2: Matrix

    def __post_init__(self):
        for m in (self.mat1, self.mat2):
            if len(m) != 5 or any(len(r) != 5 for r in m):
                raise ValueError("matrices must be 5x5")
            if any(m[i][j] != m[j][i] for i in range(5) for j in range(5)):
                raise ValueError("matrices must be symmetric")

    def member(self, r: int, t: int) -> Matrix:
        return tuple(tuple(r * a + t * b for a, b in zip(ra, rb))
                     for ra, rb in zip(self.mat1, self.mat2))

    def quad_value(self, which: int, pt) -> int:
        m = self.mat1 if which == 0 else self.mat2
        return sum(m[i][j] * pt[i] * pt[j] for i in range(5) for j in range(5))

    def equations(self, pt) -> tuple[int, int]:
        return (self.quad_value(0, pt), self.quad_value(1, pt))

    def jacobian(self, pt):
        rows = []
        for m in (self.mat1, self.mat2):
            rows.append(tuple(2 * sum(m[i][j] * pt[j] for j in range(5)) for i in range(5)))
        return tuple(rows)

    def contains(self, pt) -> bool:
        return self.quad_value(0, pt) == 0 and self.quad_value(1, pt) == 0


def to_matrices(s: SubfamilySurface) -> GeneralSurface:
    """Symmetric matrices of the two quadrics, doubled once to clear half-integers."""
    p, A, B, C, D, M = s.p, s.A, s.B, s.C, s.D, s.M
    m1 = (
        (0, -M, 0, 0, 0),
        (-M, 0, 0, 0, 0),
        (0, 0, -2 * p, 0, 0),
        (0, 0, 0, 2, 0),
        (0, 0, 0, 0, 0),
    )
    m2 = (
        (-2 * A * C, -(A * D + B * C), 0, 0, 0),
        (-(A * D + B * C), -2 * B * D, 0, 0, 0),
        (0, 0, -2 * p, 0, 0),
        (0, 0, 0, 0, 0),
        (0, 0, 0, 0, 2),
    )
    return GeneralSurface(m1, m2)


# ---------------------------------------------------------------------------
# the pencil quintic and its rational degenerate members


def discriminant_quintic(g: GeneralSurface) -> list[int]:
    """Coefficients [c0..c5] of det(k*mat1 + l*mat2) as a binary quintic in (k, l)."""
    coeffs = [0] * 6
    for perm in itertools.permutations(range(5)):
        sign = _perm_sign(perm)
        prod = [1]
        for i, j in enumerate(perm):
            a, b = g.mat1[i][j], g.mat2[i][j]
            prod = [(prod[t] if t < len(prod) else 0) * a + (prod[t - 1] if t >= 1 else 0) * b
                    for t in range(len(prod) + 1)]
        for t, c in enumerate(prod):
            coeffs[t] += sign * c
    return coeffs


def _perm_sign(perm) -> int:
    seen = [False] * len(perm)
    sign = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def binary_form_eval(coeffs: list[int], r: int, t: int) -> int:
    deg = len(coeffs) - 1
    return sum(c * r ** (deg - i) * t ** i for i, c in enumerate(coeffs))


def binary_form_content(coeffs: list[int]) -> int:
    g = 0
    for c in coeffs:
        g = gcd(g, c)
    return g


def rational_roots_binary_form(coeffs: list[int]) -> list[tuple[int, int]]:
    """All rational projective roots (r : t) of an integer binary form.

    Normalized with gcd(r, t) = 1 and t > 0, plus (1, 0) for the root at
    infinity.  Raises on the identically zero form.
    """
    if all(c == 0 for c in coeffs):
        raise ValueError("form is identically zero")
    content = binary_form_content(coeffs)
    cs = [c // content for c in coeffs]
    roots: list[tuple[int, int]] = []
    lead = next(i for i, c in enumerate(cs) if c != 0)
    trail = next(i for i in reversed(range(len(cs))) if cs[i] != 0)
    if lead > 0:
        roots.append((1, 0))
    if trail < len(cs) - 1:
        roots.append((0, 1))
    middle = cs[lead:trail + 1]
    if len(middle) > 1:
        for r_abs in divisors(abs(middle[-1])):
            for t in divisors(abs(middle[0])):
                for r in (r_abs, -r_abs):
                    if gcd(r, t) == 1 and binary_form_eval(middle, r, t) == 0:
                        if (r, t) not in roots:
                            roots.append((r, t))
    return roots


def binary_form_is_squarefree(coeffs: list[int]) -> bool:
    """No repeated roots over the algebraic closure (smoothness proxy)."""
    if all(c == 0 for c in coeffs):
        return False
    content = binary_form_content(coeffs)
    cs = [c // content for c in coeffs]
    lead = next(i for i, c in enumerate(cs) if c != 0)
    trail = next(i for i in reversed(range(len(cs))) if cs[i] != 0)
    if lead > 1 or trail < len(cs) - 2:
        return False  # repeated root at (1:0) or (0:1)
    middle = cs[lead:trail + 1]
    if len(middle) <= 2:
        return True
    deriv = [c * (len(middle) - 1 - i) for i, c in enumerate(middle[:-1])]
    return binary_resultant(middle, deriv) != 0


def degenerate_members(g: GeneralSurface) -> list[tuple[tuple[int, int], int]]:
    """Rational points of the pencil where the member degenerates, with exact ranks."""
    quintic = discriminant_quintic(g)
    return [(root, mat_rank(g.member(*root))) for root in rational_roots_binary_form(quintic)]


def epsilon_T(g: GeneralSurface, root: tuple[int, int]) -> SquareClass:
    """Square class of the member's determinant off its radical (rank 4 only).

    Restriction subspace: the lexicographically first 4 coordinates carrying a
    nonsingular 4x4 block.
    """
    m = g.member(*root)
    if mat_rank(m) != 4:
        raise ValueError(f"member at {root} does not have rank 4")
    for keep in itertools.combinations(range(5), 4):
        sub = tuple(tuple(m[i][j] for j in keep) for i in keep)
        d = mat_det(sub)
        if d != 0:
            return square_class(d)
    raise AssertionError("rank-4 matrix must have a nonsingular 4x4 principal block")


@dataclass(frozen=True)
class Order4Report:
    """Outcome of the order-4 criterion on a pencil of quadrics."""

    certified: bool
    eps: SquareClass | None
    certificate_points: tuple[tuple[int, int], ...]
    members: tuple[tuple[tuple[int, int], int, int | None], ...]  # (point, rank, eps class rep)
    quintic: tuple[int, ...]
    quintic_squarefree: bool  # smoothness proxy only, reported as such


def order4_test(g: GeneralSurface) -> Order4Report:
    """Certify a Brauer group of order 4 from three rational rank-4 degenerate members.

    Certified exactly when three distinct rational degenerate members have rank
    4 and share one non-square determinant class eps.
    """
    quintic = discriminant_quintic(g)
    if all(c == 0 for c in quintic):
        raise ValueError("pencil discriminant is identically zero")
    members = []
    by_class: dict[int, list[tuple[int, int]]] = {}
    for root, rank in degenerate_members(g):
        cls = epsilon_T(g, root).rep if rank == 4 else None
        members.append((root, rank, cls))
        if cls is not None and cls != 1:
            by_class.setdefault(cls, []).append(root)
    for cls, points in sorted(by_class.items()):
        if len(points) >= 3:
            return Order4Report(True, SquareClass(cls), tuple(points[:3]), tuple(members),
                             tuple(quintic), binary_form_is_squarefree(quintic))
    return Order4Report(False, None, (), tuple(members), tuple(quintic),
                     binary_form_is_squarefree(quintic))


# ---------------------------------------------------------------------------
# collapsing a triple of degenerate-member points to a surface point


def collapse_triple(nf: NormalFormSurface, p0, p1, p2) -> Point:
    """Recover the common surface point behind a triple on the three members.

    Each pi must lie on the i-th distinguished member and the 3x5 gradient
    matrix must have rank 2; each point is rescaled by the kernel vector and
    the shared coordinates are read off.  The result satisfies both surface
    equations, with signs normalized (first nonzero of (x, y, z) positive).
    """
    pts = [tuple(int(c) for c in p) for p in (p0, p1, p2)]
    for i, pt in enumerate(pts):
        if nf.member_value(i, pt) != 0:
            raise ValueError(f"point {pt} does not lie on member {i}")
    rows = [list(nf.member_gradient(i, pts[i])) for i in range(3)]
    if mat_rank(tuple(tuple(r) for r in rows)) != 2:
        raise ValueError("gradient matrix does not have rank 2")
    basis = left_kernel_basis(rows)
    assert len(basis) == 1
    kappa, lam, mu = clear_denominators(basis[0])
    if kappa == 0 or lam == 0 or mu == 0:
        raise ValueError("degenerate triple: kernel vector has a zero coordinate")
    scaled = [tuple(kappa * c for c in pts[0]),
              tuple(-lam * c for c in pts[1]),
              tuple(mu * c for c in pts[2])]
    (u0, v0, x0, y0, _), (u1, v1, x1, _, z1), (u2, v2, _, y2, z2) = scaled
    if not (u0 == u1 == u2 and v0 == v1 == v2):
        raise ValueError("triple does not collapse: (u, v) coordinates disagree after rescaling")
    if not (x0 == x1 and y0 == y2 and z1 == z2):
        raise ValueError("triple does not collapse: paired coordinates disagree")
    out = (u0, v0, x0, y0, z1)
    if nf.eq1(out) != 0 or nf.eq2(out) != 0:
        raise ValueError("collapsed point does not satisfy the surface equations")
    out = normalize_point(out)
    for c in out[2:]:
        if c:
            if c < 0:
                out = tuple(-w for w in out)
            break
    return out
