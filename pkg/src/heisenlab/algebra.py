"""Exact construction of the Dynin-Folland Lie algebra h_{n,2} and its group.

The algebra is the 3-step stratified Lie algebra on R^(4n+3) generated by the
left-invariant vector fields on the Heisenberg group H_n together with the
coordinate multiplication operators.  Basis, in the internal coefficient
order used throughout this package:

    position 0          Z
    positions 1..2n+1   Y_1, ..., Y_{2n+1}
    positions 2n+2..    X_{2n+1}, ..., X_1   (descending subscript)

The non-vanishing brackets, for j = 1..n and k = 1..2n+1:

    [X_j, X_{n+j}]     =  X_{2n+1}
    [X_j, Y_{2n+1}]    = -1/2 Y_{n+j}
    [X_{n+j}, Y_{2n+1}] =  1/2 Y_j
    [X_k, Y_k]         =  Z

plus antisymmetric images.  Structure constants are stored as exact dyadic
rationals (``fractions.Fraction`` with power-of-two denominators), so the
algebraic identities (antisymmetry, Jacobi, degree additivity, nilpotency)
can be verified exactly; floating point enters only in vector arithmetic.

Group elements live in exponential coordinates; the group law is the
Baker-Campbell-Hausdorff product, which truncates exactly at depth 3.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

__all__ = [
    "BasisIndex", "LieAlgebraSpec", "AlgebraVector", "HeisPoint", "GroupElement",
    "build_dynin_folland", "bracket", "jacobi_defect", "dilate", "bch",
    "heis_mul", "df_mul", "df_mul_printed", "coad", "b_form_matrix",
    "pfaffian", "sublaplacian_generators",
]


@dataclass(frozen=True, order=True)
class BasisIndex:
    """One of Z, Y_k, X_k; ``index`` is None for Z, else 1..2n+1."""
    kind: str
    index: int | None = None

    def __post_init__(self):
        if self.kind not in ("Z", "Y", "X"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.kind == "Z":
            if self.index is not None:
                raise ValueError("Z carries no index")
        elif self.index is None or self.index < 1:
            raise ValueError("Y/X basis vectors need a positive index")

    @property
    def label(self):
        return "Z" if self.kind == "Z" else f"{self.kind}{self.index}"


def Z():
    return BasisIndex("Z")


def Y(k):
    return BasisIndex("Y", k)


def X(k):
    return BasisIndex("X", k)


class LieAlgebraSpec:
    """Structure-constant table, stratum degrees and derived exact checks.

    ``table`` maps a position pair (i, j) with i < j to a dict
    ``{position: Fraction}``; the (j, i) entry is implied by antisymmetry.
    """

    def __init__(self, n, table, degrees):
        self.n = int(n)
        self.dim = 4 * self.n + 3
        self.table = {tuple(k): dict(v) for k, v in table.items()}
        for (i, j) in self.table:
            if not 0 <= i < j < self.dim:
                raise ValueError("table keys must be position pairs with i < j")
        self.degrees = np.asarray(degrees, dtype=np.int64)
        if self.degrees.shape != (self.dim,):
            raise ValueError("degrees must assign one stratum per basis vector")
        self._float_table = [
            (i, j, [(k, float(c)) for k, c in sorted(comps.items())])
            for (i, j), comps in sorted(self.table.items())
        ]
        self._step3 = None

    # ----- basis bookkeeping -------------------------------------------------

    def position(self, b: BasisIndex) -> int:
        if b.kind == "Z":
            return 0
        if b.index > 2 * self.n + 1:
            raise ValueError(f"{b.label} out of range for n={self.n}")
        if b.kind == "Y":
            return b.index
        return self.dim - b.index  # X block stored with descending subscript

    def basis_index(self, pos: int) -> BasisIndex:
        if pos == 0:
            return Z()
        if pos <= 2 * self.n + 1:
            return Y(pos)
        return X(self.dim - pos)

    @property
    def basis_labels(self):
        return [self.basis_index(p).label for p in range(self.dim)]

    def basis_vector(self, b: BasisIndex):
        v = np.zeros(self.dim)
        v[self.position(b)] = 1.0
        return v

    # ----- exact bracket -----------------------------------------------------

    def pair_bracket(self, i, j):
        """[e_i, e_j] as {position: Fraction}, exact."""
        if i == j:
            return {}
        if i < j:
            return dict(self.table.get((i, j), {}))
        return {k: -c for k, c in self.table.get((j, i), {}).items()}

    def ad_basis(self, i, w):
        """[e_i, w] for w = {position: Fraction}, exact."""
        out = {}
        for l, cl in w.items():
            for k, c in self.pair_bracket(i, l).items():
                acc = out.get(k, Fraction(0)) + cl * c
                if acc:
                    out[k] = acc
                elif k in out:
                    del out[k]
        return out

    def is_step_le_3(self):
        """All brackets of four basis letters vanish identically."""
        if self._step3 is None:
            worst = Fraction(0)
            for (c, d), w1 in self.table.items():
                for b in range(self.dim):
                    w2 = self.ad_basis(b, w1)
                    if not w2:
                        continue
                    for a in range(self.dim):
                        w3 = self.ad_basis(a, w2)
                        for coeff in w3.values():
                            worst = max(worst, abs(coeff))
            self._step3 = worst == 0
        return self._step3

    def antisymmetry_defect(self):
        """Max coefficient of [e_i,e_j] + [e_j,e_i] over all pairs (exact).

        Zero by construction (only i < j pairs are stored, the mirror is
        derived); the loop re-verifies that representation invariant.
        """
        worst = Fraction(0)
        for i in range(self.dim):
            for j in range(self.dim):
                fwd = self.pair_bracket(i, j)
                bwd = self.pair_bracket(j, i)
                for k in set(fwd) | set(bwd):
                    s = fwd.get(k, Fraction(0)) + bwd.get(k, Fraction(0))
                    worst = max(worst, abs(s))
        return float(worst)

    def degree_additivity_defect(self):
        """Largest coefficient sitting on a stratum other than deg(i)+deg(j)."""
        worst = Fraction(0)
        for (i, j), comps in self.table.items():
            target = self.degrees[i] + self.degrees[j]
            for k, c in comps.items():
                if self.degrees[k] != target:
                    worst = max(worst, abs(c))
        return float(worst)

    # ----- serialization ------------------------------------------------------

    def to_dict(self):
        triplets = []
        for (i, j), comps in sorted(self.table.items()):
            for k, c in sorted(comps.items()):
                if c.denominator & (c.denominator - 1):
                    raise ValueError("structure constant is not dyadic")
                log2_den = c.denominator.bit_length() - 1
                triplets.append([i, j, k, c.numerator, log2_den])
        return {
            "n": self.n,
            "dim": self.dim,
            "basis": self.basis_labels,
            "degrees": [int(d) for d in self.degrees],
            "brackets": triplets,
        }

    @classmethod
    def from_dict(cls, doc):
        table = {}
        for i, j, k, num, log2_den in doc["brackets"]:
            table.setdefault((i, j), {})[k] = Fraction(num, 1 << log2_den)
        return cls(doc["n"], table, doc["degrees"])


@dataclass
class AlgebraVector:
    """Coefficient vector over the basis of an owning LieAlgebraSpec."""
    algebra: LieAlgebraSpec
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (self.algebra.dim,):
            raise ValueError("coefficient length does not match algebra dimension")


def _as_coeffs(A: LieAlgebraSpec, v):
    if isinstance(v, AlgebraVector):
        if v.algebra.dim != A.dim:
            raise ValueError("vector belongs to an algebra of different dimension")
        return v.coeffs
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (A.dim,):
        raise ValueError(f"expected coefficient vector of length {A.dim}")
    return v


def build_dynin_folland(n) -> LieAlgebraSpec:
    """Structure constants and stratum degrees of h_{n,2}."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    dim = 4 * n + 3
    big = 2 * n + 1

    def pos(b):
        if b.kind == "Z":
            return 0
        return b.index if b.kind == "Y" else dim - b.index

    def put(table, a, b, target, coeff):
        i, j = pos(a), pos(b)
        if i > j:
            i, j, coeff = j, i, -coeff
        table.setdefault((i, j), {})[pos(target)] = coeff

    table = {}
    for j in range(1, n + 1):
        put(table, X(j), X(n + j), X(big), Fraction(1))
        put(table, X(j), Y(big), Y(n + j), Fraction(-1, 2))
        put(table, X(n + j), Y(big), Y(j), Fraction(1, 2))
    for k in range(1, big + 1):
        put(table, X(k), Y(k), Z(), Fraction(1))

    degrees = np.empty(dim, dtype=np.int64)
    degrees[0] = 3  # Z
    for k in range(1, big + 1):
        degrees[k] = 2 if k <= 2 * n else 1  # Y_k; Y_{2n+1} generates
    for k in range(1, big + 1):
        degrees[dim - k] = 1 if k <= 2 * n else 2  # X_k; X_{2n+1} is a bracket
    return LieAlgebraSpec(n, table, degrees)


def bracket(A: LieAlgebraSpec, u, v):
    """Bilinear extension of the structure-constant table (float)."""
    uc = _as_coeffs(A, u)
    vc = _as_coeffs(A, v)
    out = np.zeros(A.dim)
    for i, j, comps in A._float_table:
        w = uc[i] * vc[j] - uc[j] * vc[i]
        if w != 0.0:
            for k, c in comps:
                out[k] += c * w
    return out


def jacobi_defect(A: LieAlgebraSpec) -> float:
    """Max over basis triples of the sup-norm of the Jacobi cyclic sum (exact)."""
    worst = Fraction(0)
    for i, j, k in combinations(range(A.dim), 3):
        acc = {}
        for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
            for pos, coeff in A.ad_basis(a, A.pair_bracket(b, c)).items():
                acc[pos] = acc.get(pos, Fraction(0)) + coeff
        for coeff in acc.values():
            worst = max(worst, abs(coeff))
    return float(worst)


def dilate(A: LieAlgebraSpec, r, v):
    """Homogeneous dilation: scale stratum-d coefficients by r**d."""
    if r <= 0:
        raise ValueError("dilation parameter must be positive")
    vc = _as_coeffs(A, v)
    return vc * np.power(float(r), A.degrees.astype(np.float64))


def bch(A: LieAlgebraSpec, u, v):
    """Baker-Campbell-Hausdorff product, exact for algebras of step <= 3.

    Returns u + v + [u,v]/2 + ([u,[u,v]] + [v,[v,u]])/12; every deeper term
    vanishes identically in a 3-step algebra, which is verified once per
    algebra and cached.
    """
    if not A.is_step_le_3():
        raise ValueError("BCH truncation at depth 3 needs a step <= 3 algebra")
    uc = _as_coeffs(A, u)
    vc = _as_coeffs(A, v)
    w = bracket(A, uc, vc)
    return (uc + vc + 0.5 * w
            + (bracket(A, uc, w) - bracket(A, vc, w)) / 12.0)


class HeisPoint:
    """Point of H_n in exponential coordinates, stored (t_{2n+1}, ..., t_1).

    Grouped views: t3 = t_{2n+1}, t2 = (t_{2n}, ..., t_{n+1}),
    t1 = (t_n, ..., t_1); the three blocks partition the flat array.
    """

    def __init__(self, coords):
        self.coords = np.asarray(coords, dtype=np.float64)
        if self.coords.ndim != 1 or self.coords.size % 2 == 0 or self.coords.size < 3:
            raise ValueError("HeisPoint needs 2n+1 coordinates")
        self.n = (self.coords.size - 1) // 2

    @classmethod
    def from_blocks(cls, t3, t2, t1):
        t2 = np.atleast_1d(np.asarray(t2, dtype=np.float64))
        t1 = np.atleast_1d(np.asarray(t1, dtype=np.float64))
        if t2.size != t1.size:
            raise ValueError("t2 and t1 blocks must have equal length")
        return cls(np.concatenate(([float(t3)], t2, t1)))

    @classmethod
    def from_ascending(cls, t):
        """Build from (t_1, ..., t_{2n+1})."""
        return cls(np.asarray(t, dtype=np.float64)[::-1])

    @classmethod
    def zero(cls, n):
        return cls(np.zeros(2 * n + 1))

    @property
    def t3(self):
        return float(self.coords[0])

    @property
    def t2(self):
        return self.coords[1:self.n + 1]

    @property
    def t1(self):
        return self.coords[self.n + 1:]

    @property
    def ascending(self):
        """Coordinates as (t_1, ..., t_{2n+1})."""
        return self.coords[::-1].copy()

    def neg(self):
        return HeisPoint(-self.coords)

    def scaled(self, a):
        return HeisPoint(a * self.coords)

    def __repr__(self):
        return f"HeisPoint({self.coords.tolist()})"


def heis_mul(n, t: HeisPoint, s: HeisPoint) -> HeisPoint:
    """Heisenberg group law in exponential coordinates (grouped form)."""
    d = 2 * int(n) + 1
    if t.coords.size != d or s.coords.size != d:
        raise ValueError(f"expected points of H_{n} with {d} coordinates")
    center = t.t3 + s.t3 + 0.5 * (np.dot(t.t1, s.t2) - np.dot(t.t2, s.t1))
    return HeisPoint.from_blocks(center, t.t2 + s.t2, t.t1 + s.t1)


def coad(t: HeisPoint, s: HeisPoint) -> HeisPoint:
    """Coadjoint action of h_n on its dual: (0, -t3*s1, t3*s2)."""
    if t.coords.size != s.coords.size:
        raise ValueError("coadjoint action needs points of equal dimension")
    return HeisPoint.from_blocks(0.0, -t.t3 * s.t1, t.t3 * s.t2)


@dataclass
class GroupElement:
    """Element (z, y, x) of the Dynin-Folland group in exponential coordinates."""
    z: float
    y: np.ndarray          # (y_1, ..., y_{2n+1}), ascending
    x: HeisPoint

    def __post_init__(self):
        self.z = float(self.z)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.shape != (self.x.coords.size,):
            raise ValueError("y block and x block must both have 2n+1 entries")

    @property
    def n(self):
        return self.x.n

    def to_vector(self):
        """Coefficients over (Z, Y_1..Y_{2n+1}, X_{2n+1}..X_1)."""
        return np.concatenate(([self.z], self.y, self.x.coords))

    @classmethod
    def from_vector(cls, n, vec):
        vec = np.asarray(vec, dtype=np.float64)
        big = 2 * n + 1
        if vec.size != 4 * n + 3:
            raise ValueError("coordinate vector has wrong length")
        return cls(vec[0], vec[1:big + 1], HeisPoint(vec[big + 1:]))

    @classmethod
    def identity(cls, n):
        return cls(0.0, np.zeros(2 * n + 1), HeisPoint.zero(n))

    def inverse(self):
        return GroupElement(-self.z, -self.y, self.x.neg())


def df_mul(A: LieAlgebraSpec, g: GroupElement, h: GroupElement) -> GroupElement:
    """Group product of the Dynin-Folland group, via BCH on coordinates.

    The x block coincides with the Heisenberg product of the x blocks; the
    printed closed form of the law is kept separately (``df_mul_printed``)
    as a recorded diagnostic, not as the definition.
    """
    if g.n != A.n or h.n != A.n:
        raise ValueError("group elements do not match the algebra")
    return GroupElement.from_vector(A.n, bch(A, g.to_vector(), h.to_vector()))


def df_mul_printed(n, g: GroupElement, h: GroupElement) -> GroupElement:
    """The closed-form group law exactly as printed, for comparison only.

    Its central term (<x,y'> - <x,y'>)/2 is identically zero as written,
    so this cannot agree with the BCH product; ``algebra-check`` reports
    the componentwise difference.
    """
    z = g.z + h.z + 0.0
    gy = HeisPoint.from_ascending(g.y)
    hy = HeisPoint.from_ascending(h.y)
    corr = coad(g.x, hy).coords - coad(gy, h.x).coords
    y = g.y + h.y + 0.25 * HeisPoint(corr).ascending
    return GroupElement(z, y, heis_mul(n, g.x, h.x))


def b_form_matrix(A: LieAlgebraSpec, lam):
    """Skew form lam * Z-component of [.,.] on the basis of h_{n,2}/RZ."""
    lam = float(lam)
    if lam == 0.0:
        raise ValueError("the functional must be a nonzero multiple of Z*")
    m = A.dim - 1
    B = np.zeros((m, m))
    for (i, j), comps in A.table.items():
        c = comps.get(0)
        if c is None or i == 0:
            continue
        B[i - 1, j - 1] = lam * float(c)
        B[j - 1, i - 1] = -lam * float(c)
    return B


def _pfaffian_recursive(B):
    m = B.shape[0]
    if m == 0:
        return 1.0
    if m % 2 == 1:
        return 0.0
    total = 0.0
    for j in range(1, m):
        a = B[0, j]
        if a == 0.0:
            continue
        keep = [r for r in range(m) if r not in (0, j)]
        sub = B[np.ix_(keep, keep)]
        total += (-1.0) ** (j - 1) * a * _pfaffian_recursive(sub)
    return total


def pfaffian(A: LieAlgebraSpec, lam) -> float:
    """|Pf(B_l)| for l = lam * Z^*; recursive expansion up to size 10."""
    B = b_form_matrix(A, lam)
    det = np.linalg.det(B)
    scale = max(1.0, float(np.max(np.abs(B)))) ** B.shape[0]
    if abs(det) <= 1e-12 * scale:
        raise ValueError("symplectic form is degenerate")
    if B.shape[0] <= 10:
        return abs(_pfaffian_recursive(B))
    return float(np.sqrt(abs(det)))


def sublaplacian_generators(A: LieAlgebraSpec):
    """First-stratum generators of the sum of squares: X_1..X_{2n}, Y_{2n+1}."""
    gens = [X(k) for k in range(1, 2 * A.n + 1)]
    gens.append(Y(2 * A.n + 1))
    return gens
