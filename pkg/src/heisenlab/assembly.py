"""Sparse finite-difference assembly of the harmonic oscillator on H_n.

Two independent discretizations of the same operator

    Q = -(X_1^2 + ... + X_{2n}^2) + 4 pi^2 t_{2n+1}^2

on a Dirichlet-truncated box:

* ``assemble_oscillator_sos``: Q_h = sum_j D_j^T D_j + diag(4 pi^2 t_d^2),
  a literal sum of squares (emitted as per-row outer products), hence
  symmetric positive semidefinite by construction.  The factors D_j use
  one-sided (forward) differences for both the d_j and the d_d legs.  This
  choice is deliberate: a centered factor has symbol sin(kh)/h, which
  vanishes at the grid Nyquist frequency, so the product of centered factors
  annihilates checkerboard modes and floods the bottom of the spectrum with
  spurious eigenvalues that sink under refinement.  The forward-difference
  symbol (e^{ikh}-1)/h never vanishes away from k = 0, the factor square
  reproduces the tight three-point second difference exactly, and because
  the coefficient of the d_d leg never depends on the two stepped axes, the
  assembled product is still second-order consistent in the deep interior.
  Rows anchored just outside the lower walls supply the mirror Dirichlet
  penalty, so the pure second-difference part matches the textbook Dirichlet
  Laplacian exactly.

* ``assemble_oscillator_expanded``: the operator is first expanded,

      Q = -sum_k d_k^2 - (1/4) (sum_k t_k^2) d_d^2
          + sum_j (t_{n+j} d_j - t_j d_{n+j}) d_d + 4 pi^2 t_d^2,

  then each term is discretized with tight centered second differences and
  centered-centered mixed differences.  Coefficients never depend on the
  differentiated axes, so this matrix is exactly symmetric too (but not
  structurally PSD).

Both routes are second-order consistent in the deep interior and must agree
in the h -> 0 limit; ``apply_oscillator_symbolic`` provides the exact
continuum application to a Gaussian for consistency tests.  The first-order
``assemble_vector_field`` stencils (centered, exactly antisymmetric) are a
separate surface used by the generator checks; they are not the factors of
the sum-of-squares assembly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import BasisIndex, LieAlgebraSpec
from .grids import GridSpec
from .sparse import CsrMatrix, SparseSymmetricMatrix

FOUR_PI_SQ = 4.0 * np.pi ** 2


def _leg_arrays(grid: GridSpec, axis, delta):
    """Validity mask and flat column offset for a +-delta step along axis."""
    idx = grid.axis_indices(axis)
    m = grid.counts[axis - 1]
    if delta > 0:
        valid = idx < m - delta
    else:
        valid = idx >= -delta
    return valid, delta * grid.strides[axis - 1]


def _field_legs(grid: GridSpec, n, j):
    """The four stencil legs of D_j (axis step, validity, value per row)."""
    d = 2 * n + 1
    hj = grid.spacings[j - 1]
    hd = grid.spacings[d - 1]
    if j <= n:
        coeff = -0.5 * grid.coordinate_field(n + j)
    else:
        coeff = 0.5 * grid.coordinate_field(j - n)
    legs = []
    for delta in (+1, -1):
        valid, off = _leg_arrays(grid, j, delta)
        legs.append((off, valid, np.full(grid.size, delta / (2.0 * hj))))
    for delta in (+1, -1):
        valid, off = _leg_arrays(grid, d, delta)
        legs.append((off, valid, delta * coeff / (2.0 * hd)))
    return legs


@dataclass
class StencilField:
    """Sparse first-order difference approximation of one generator."""
    generator: BasisIndex
    grid: GridSpec
    matrix: CsrMatrix

    def matvec(self, v):
        return self.matrix.matvec(v)


def _check_x_generator(A: LieAlgebraSpec, V: BasisIndex):
    if V.kind != "X" or not 1 <= V.index <= 2 * A.n:
        raise ValueError(
            f"{V.label} is not a first-stratum X generator; the Y_{2 * A.n + 1} "
            "direction enters as the diagonal potential, not as a stencil")


def assemble_vector_field(grid: GridSpec, V: BasisIndex,
                          A: LieAlgebraSpec) -> StencilField:
    """Centered-difference discretization of the left-invariant field dpi(V).

    Out-of-grid neighbors contribute zero (Dirichlet truncation); the result
    is exactly antisymmetric because the variable coefficient of the d_d leg
    never depends on the stepped axes.
    """
    _check_x_generator(A, V)
    if grid.ndim != 2 * A.n + 1:
        raise ValueError("grid dimension does not match the algebra")
    allrows = np.arange(grid.size, dtype=np.int64)
    rows, cols, vals = [], [], []
    for off, valid, val in _field_legs(grid, A.n, V.index):
        r = allrows[valid]
        rows.append(r)
        cols.append(r + off)
        vals.append(val[valid])
    mat = CsrMatrix.from_coo((grid.size, grid.size),
                             np.concatenate(rows), np.concatenate(cols),
                             np.concatenate(vals))
    return StencilField(V, grid, mat)


def potential_diagonal(grid: GridSpec):
    """4 pi^2 t_{2n+1}^2 sampled on the grid (the -dpi(Y_{2n+1})^2 term)."""
    td = grid.coordinate_field(grid.ndim)
    return FOUR_PI_SQ * td ** 2


def _forward_factor_legs(grid: GridSpec, n, j):
    """One-sided factor of -X_j^2 on the extended anchor lattice.

    Anchors run over i_j, i_d in {-1, ..., m-1} (phantom layers give the
    lower-wall Dirichlet penalty); legs are the anchor itself, one step
    along axis j and one step along axis d, with zero extension outside.
    Returns (anchor count, [(valid, column, value), ...]).
    """
    d = 2 * n + 1
    hj = grid.spacings[j - 1]
    hd = grid.spacings[d - 1]
    counts = list(grid.counts)
    ext_counts = counts.copy()
    ext_counts[j - 1] += 1
    ext_counts[d - 1] += 1
    n_anchor = int(np.prod(ext_counts, dtype=np.int64))

    # Per-anchor grid indices (anchor index a maps to grid index a-1 on the
    # two extended axes, a elsewhere).
    anchor_idx = {}
    stride = 1
    for axis in range(1, grid.ndim + 1):
        m_ext = ext_counts[axis - 1]
        idx = (np.arange(n_anchor, dtype=np.int64) // stride) % m_ext
        if axis in (j, d):
            idx = idx - 1
        anchor_idx[axis] = idx
        stride *= m_ext

    if j <= n:
        coeff_axis, coeff_sign = n + j, -0.5
    else:
        coeff_axis, coeff_sign = j - n, 0.5
    c = coeff_sign * grid.coords(coeff_axis)[anchor_idx[coeff_axis]]

    def leg(step_axis):
        valid = np.ones(n_anchor, dtype=bool)
        col = np.zeros(n_anchor, dtype=np.int64)
        for axis in range(1, grid.ndim + 1):
            idx = anchor_idx[axis]
            if axis == step_axis:
                idx = idx + 1
            valid &= (idx >= 0) & (idx < grid.counts[axis - 1])
            col += np.maximum(idx, 0) * grid.strides[axis - 1]
        return valid, col

    legs = []
    v0, c0 = leg(0)
    legs.append((v0, c0, -1.0 / hj - c / hd))
    vj, cj = leg(j)
    legs.append((vj, cj, np.full(n_anchor, 1.0 / hj)))
    vd, cd = leg(d)
    legs.append((vd, cd, c / hd))
    return n_anchor, legs


def assemble_oscillator_sos(grid: GridSpec, n=None) -> SparseSymmetricMatrix:
    """Sum-of-squares assembly: sum_j D_j^T D_j plus the diagonal potential.

    Emitted as per-anchor outer products of the one-sided factor rows, so
    the result is exactly symmetric and positive semidefinite regardless of
    boundary truncation.
    """
    n = grid.n if n is None else n
    if n is None or grid.ndim != 2 * n + 1:
        raise ValueError("sum-of-squares assembly needs a 2n+1 dimensional grid")
    allrows = np.arange(grid.size, dtype=np.int64)
    rows, cols, vals = [], [], []
    for j in range(1, 2 * n + 1):
        _, legs = _forward_factor_legs(grid, n, j)
        for valid_a, col_a, val_a in legs:
            for valid_b, col_b, val_b in legs:
                both = valid_a & valid_b
                rows.append(col_a[both])
                cols.append(col_b[both])
                vals.append(val_a[both] * val_b[both])
    rows.append(allrows)
    cols.append(allrows)
    vals.append(potential_diagonal(grid))
    return SparseSymmetricMatrix.from_coo(
        (grid.size, grid.size),
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def assemble_oscillator_expanded(grid: GridSpec, n=None) -> SparseSymmetricMatrix:
    """Term-by-term assembly of the expanded operator (tight stencils)."""
    n = grid.n if n is None else n
    if n is None or grid.ndim != 2 * n + 1:
        raise ValueError("expanded assembly needs a 2n+1 dimensional grid")
    d = 2 * n + 1
    hd = grid.spacings[d - 1]
    allrows = np.arange(grid.size, dtype=np.int64)
    rows, cols, vals = [], [], []

    def emit(r, off, v):
        rows.append(r)
        cols.append(r + off)
        vals.append(v)

    diag = potential_diagonal(grid).copy()

    # -d_k^2, tight three-point stencils
    for k in range(1, 2 * n + 1):
        hk = grid.spacings[k - 1]
        diag += 2.0 / hk ** 2
        for delta in (+1, -1):
            valid, off = _leg_arrays(grid, k, delta)
            emit(allrows[valid], off, np.full(valid.sum(), -1.0 / hk ** 2))

    # -(1/4) S(t) d_d^2 with S = sum_{k<=2n} t_k^2
    S = np.zeros(grid.size)
    for k in range(1, 2 * n + 1):
        S += grid.coordinate_field(k) ** 2
    diag += S / (2.0 * hd ** 2)
    for delta in (+1, -1):
        valid, off = _leg_arrays(grid, d, delta)
        emit(allrows[valid], off, -0.25 * S[valid] / hd ** 2)

    # sum_j (t_{n+j} d_j - t_j d_{n+j}) d_d, centered-centered
    for j in range(1, n + 1):
        for axis, gamma in ((j, grid.coordinate_field(n + j)),
                            (n + j, -grid.coordinate_field(j))):
            ha = grid.spacings[axis - 1]
            for da in (+1, -1):
                valid_a, off_a = _leg_arrays(grid, axis, da)
                for dd in (+1, -1):
                    valid_d, off_d = _leg_arrays(grid, d, dd)
                    both = valid_a & valid_d
                    emit(allrows[both], off_a + off_d,
                         da * dd * gamma[both] / (4.0 * ha * hd))

    emit(allrows, 0, diag)
    return SparseSymmetricMatrix.from_coo(
        (grid.size, grid.size),
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def matvec(A: CsrMatrix, v):
    """y = A v (deterministic CSR product)."""
    return A.matvec(v)


def apply_oscillator_symbolic(n, f, points):
    """Exact application of the continuum operator to a test function.

    Requires exact first and second partials on ``f`` (the shipped
    Gaussians); this is the reference side of the discretization
    consistency checks.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d = 2 * n + 1
    acc = FOUR_PI_SQ * pts[:, d - 1] ** 2 * f(pts)
    S = np.zeros(pts.shape[0])
    for k in range(1, 2 * n + 1):
        acc -= f.partial2(k, k, pts)
        S += pts[:, k - 1] ** 2
    acc -= 0.25 * S * f.partial2(d, d, pts)
    for j in range(1, n + 1):
        acc += pts[:, n + j - 1] * f.partial2(j, d, pts)
        acc -= pts[:, j - 1] * f.partial2(n + j, d, pts)
    return acc


def sample_on_grid(grid: GridSpec, f):
    """Evaluate a test function at every grid point (flattened, t_1 fastest)."""
    return np.asarray(f(grid.points()), dtype=np.float64)


def interior_consistency_error(grid: GridSpec, mat: CsrMatrix, f, margin=2):
    """Max |(A f_h)_p - (Q f)(p)| over points with a full +-margin stencil."""
    v = sample_on_grid(grid, f)
    av = mat.matvec(v)
    exact = apply_oscillator_symbolic(grid.n, f, grid.points())
    mask = grid.interior_mask(margin)
    return float(np.max(np.abs(av[mask] - exact[mask])))
