"""The generic unitary representation of the Dynin-Folland group on L^2(H_n),
the Schrodinger representation of H_n, and their infinitesimal generators.

Everything here evaluates closed forms exactly at sample points; there is no
grid and no discretization error.  Test functions are evaluation rules; the
shipped family is anisotropic Gaussians, whose partial derivatives are exact,
so finite-difference generator checks have a clean analytic reference.

Sample points are plain numpy arrays in ascending coordinate order
(t_1, ..., t_{2n+1}); conversion to the grouped Heisenberg layout happens
internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import BasisIndex, GroupElement, HeisPoint, LieAlgebraSpec

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ReprParam:
    """Parameter of the generic representation family; lam must be nonzero."""
    lam: float = 1.0

    def __post_init__(self):
        if self.lam == 0.0:
            raise ValueError("representation parameter must be nonzero")


def _lam(value):
    return value.lam if isinstance(value, ReprParam) else ReprParam(float(value)).lam


class TestFunction:
    """Evaluation rule point -> value; points are (P, d) or (d,) arrays."""

    dim = None

    def __call__(self, points):
        raise NotImplementedError

    @staticmethod
    def _prep(points):
        pts = np.asarray(points, dtype=np.float64)
        squeeze = pts.ndim == 1
        if squeeze:
            pts = pts[None, :]
        return pts, squeeze


class Gaussian(TestFunction):
    """f(t) = exp(-sum_j a_j (t_j - c_j)^2) with a_j > 0; exact derivatives."""

    def __init__(self, widths, centers=None):
        self.a = np.atleast_1d(np.asarray(widths, dtype=np.float64))
        if np.any(self.a <= 0):
            raise ValueError("Gaussian widths must be positive")
        self.c = (np.zeros_like(self.a) if centers is None
                  else np.atleast_1d(np.asarray(centers, dtype=np.float64)))
        if self.c.shape != self.a.shape:
            raise ValueError("widths and centers must have equal length")
        self.dim = self.a.size

    def __call__(self, points):
        pts, squeeze = self._prep(points)
        vals = np.exp(-np.sum(self.a * (pts - self.c) ** 2, axis=1))
        return vals[0] if squeeze else vals

    def partial(self, axis, points):
        """Exact d/dt_axis (1-based axis)."""
        pts, squeeze = self._prep(points)
        j = axis - 1
        vals = -2.0 * self.a[j] * (pts[:, j] - self.c[j]) * self(pts)
        return vals[0] if squeeze else vals

    def partial2(self, axis_i, axis_j, points):
        """Exact second partial d^2/dt_i dt_j (1-based axes)."""
        pts, squeeze = self._prep(points)
        i, j = axis_i - 1, axis_j - 1
        di = -2.0 * self.a[i] * (pts[:, i] - self.c[i])
        dj = -2.0 * self.a[j] * (pts[:, j] - self.c[j])
        vals = di * dj * self(pts)
        if i == j:
            vals -= 2.0 * self.a[i] * self(pts)
        return vals[0] if squeeze else vals


class MapTestFunction(TestFunction):
    """Wraps an arbitrary vectorized rule (used for representation images)."""

    def __init__(self, rule, dim=None):
        self.rule = rule
        self.dim = dim

    def __call__(self, points):
        pts, squeeze = self._prep(points)
        vals = self.rule(pts)
        return vals[0] if squeeze else vals


def _heis_translate(points, x: HeisPoint):
    """Batch Heisenberg product t . x for t given as ascending rows."""
    n = x.n
    xa = x.ascending
    out = points + xa[None, :]
    omega = np.zeros(points.shape[0])
    for j in range(n):
        omega += points[:, j] * xa[n + j] - points[:, n + j] * xa[j]
    out[:, 2 * n] += 0.5 * omega
    return out


def pi_apply(lam, g: GroupElement, f: TestFunction, half_reading="argument"):
    """Apply the generic representation: a phase times f(t . x).

    The phase pairs y with the Heisenberg product of t and the halved x.
    ``half_reading`` selects how "half of x" is read: "argument" multiplies t
    by the point with halved coordinates (the default), "product" halves the
    coordinates of the full product t . x; the representation-check report
    records the homomorphism defect of both readings.
    """
    lam = _lam(lam)
    if half_reading not in ("argument", "product"):
        raise ValueError("half_reading must be 'argument' or 'product'")
    x, y, z = g.x, g.y, g.z

    def rule(points):
        tx = _heis_translate(points, x)
        if half_reading == "argument":
            thx = _heis_translate(points, x.scaled(0.5))
        else:
            thx = 0.5 * tx
        phase = TWO_PI * lam * (z + thx @ y)
        return np.exp(1j * phase) * f(tx)

    return MapTestFunction(rule, dim=2 * g.n + 1)


def rho_apply(lam, t: HeisPoint, f: TestFunction):
    """Schrodinger representation of H_n on functions of the t1 block.

    Points are length-n arrays in the block layout (u_n, ..., u_1); the
    result is exp(2 pi i lam (t3 + <t1,t2>/2 + <t2,u>)) f(u + t1).
    """
    lam = _lam(lam)
    t3, t2, t1 = t.t3, t.t2, t.t1

    def rule(points):
        phase = TWO_PI * lam * (t3 + 0.5 * np.dot(t1, t2) + points @ t2)
        return np.exp(1j * phase) * f(points + t1[None, :])

    return MapTestFunction(rule, dim=t.n)


class MultiplicationOperator:
    """Pointwise multiplication by a (possibly coordinate-dependent) factor."""

    def __init__(self, factor_rule, description):
        self.factor_rule = factor_rule
        self.description = description

    def apply(self, f):
        def rule(points):
            return self.factor_rule(points) * f(points)
        return MapTestFunction(rule)


class VectorFieldOperator:
    """First-order operator sum_j c_j(t) d/dt_j with polynomial coefficients."""

    def __init__(self, terms, description):
        # terms: list of (axis, coefficient rule points -> array)
        self.terms = terms
        self.description = description

    def apply(self, f):
        def rule(points):
            pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
            acc = np.zeros(pts.shape[0], dtype=np.complex128)
            for axis, coeff in self.terms:
                acc = acc + coeff(pts) * f.partial(axis, pts)
            return acc
        return MapTestFunction(rule)


def dpi_generator(A: LieAlgebraSpec, lam, V: BasisIndex):
    """Infinitesimal generator of the representation along basis direction V.

    Z and the Y_k map to multiplication operators (2 pi i lam, resp.
    2 pi i lam t_k); the X_j map to the left-invariant vector fields of H_n,
    independent of lam.
    """
    lam = _lam(lam)
    n = A.n
    big = 2 * n + 1
    factor = TWO_PI * lam
    if V.kind == "Z":
        return MultiplicationOperator(
            lambda pts: np.full(pts.shape[0] if pts.ndim == 2 else 1,
                                1j * factor),
            f"multiplication by 2*pi*i*lam, lam={lam}")
    if V.kind == "Y":
        k = V.index
        if not 1 <= k <= big:
            raise ValueError(f"{V.label} out of range for n={n}")
        return MultiplicationOperator(
            lambda pts, k=k: 1j * factor * pts[:, k - 1],
            f"multiplication by 2*pi*i*lam*t_{k}, lam={lam}")
    j = V.index
    if not 1 <= j <= big:
        raise ValueError(f"{V.label} out of range for n={n}")
    if j == big:
        terms = [(big, lambda pts: 1.0)]
        desc = f"d/dt_{big}"
    elif j <= n:
        terms = [(j, lambda pts: 1.0),
                 (big, lambda pts, jj=j: -0.5 * pts[:, n + jj - 1])]
        desc = f"d/dt_{j} - 0.5 t_{n + j} d/dt_{big}"
    else:
        i = j - n
        terms = [(j, lambda pts: 1.0),
                 (big, lambda pts, ii=i: 0.5 * pts[:, ii - 1])]
        desc = f"d/dt_{j} + 0.5 t_{i} d/dt_{big}"
    return VectorFieldOperator(terms, desc)


def group_exponential(A: LieAlgebraSpec, V: BasisIndex, s) -> GroupElement:
    """exp(s V): coordinate s in slot V, zeros elsewhere."""
    vec = np.zeros(A.dim)
    vec[A.position(V)] = float(s)
    return GroupElement.from_vector(A.n, vec)


def dpi_fd_check(A: LieAlgebraSpec, lam, V: BasisIndex, f: TestFunction,
                 points, step):
    """Max |central difference of pi along exp(sV) - analytic generator|.

    Second-order accurate: the defect must shrink ~4x when the step halves.
    """
    if step <= 0:
        raise ValueError("finite-difference step must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    plus = pi_apply(lam, group_exponential(A, V, step), f)(pts)
    minus = pi_apply(lam, group_exponential(A, V, -step), f)(pts)
    fd = (plus - minus) / (2.0 * step)
    exact = dpi_generator(A, lam, V).apply(f)(pts)
    return float(np.max(np.abs(fd - exact)))


def sample_points(n, count, seed, box=3.0):
    """Uniform sample points in [-box, box]^(2n+1), fixed seed."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-box, box, size=(count, 2 * n + 1))


def random_group_element(n, rng, scale=1.0) -> GroupElement:
    vec = rng.uniform(-scale, scale, size=4 * n + 3)
    return GroupElement.from_vector(n, vec)


def homomorphism_defect(A, lam, f, n_pairs, points, seed, half_reading="argument"):
    """Max pointwise defect of pi(g) pi(g') f vs pi(g g') f over random pairs."""
    rng = np.random.default_rng(seed)
    from .algebra import df_mul
    worst = 0.0
    for _ in range(n_pairs):
        g = random_group_element(A.n, rng)
        h = random_group_element(A.n, rng)
        lhs = pi_apply(lam, g, pi_apply(lam, h, f, half_reading), half_reading)(points)
        rhs = pi_apply(lam, df_mul(A, g, h), f, half_reading)(points)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def unitarity_defect(lam, g, f, points):
    """Max | |pi(g)f| - |f(t.x)| | over the sample points."""
    lhs = np.abs(pi_apply(lam, g, f)(points))
    rhs = np.abs(f(_heis_translate(np.atleast_2d(points), g.x)))
    return float(np.max(np.abs(lhs - rhs)))


def inverse_defect(A, lam, g, f, points):
    """Max pointwise defect of pi(g^-1) pi(g) f vs f."""
    lhs = pi_apply(lam, g.inverse(), pi_apply(lam, g, f))(points)
    return float(np.max(np.abs(lhs - f(points))))


def rho_homomorphism_defect(n, lam, f, n_pairs, points, seed, scale=1.0):
    """Same two-sided check for the Schrodinger representation on H_n."""
    from .algebra import heis_mul
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        t = HeisPoint(rng.uniform(-scale, scale, size=2 * n + 1))
        s = HeisPoint(rng.uniform(-scale, scale, size=2 * n + 1))
        lhs = rho_apply(lam, t, rho_apply(lam, s, f))(points)
        rhs = rho_apply(lam, heis_mul(n, t, s), f)(points)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
