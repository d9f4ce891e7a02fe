import numpy as np
import pytest

from heisenlab.analysis import (RefinementTable, SpectrumReport,
                                analyze_spectrum, boundary_mass,
                                counting_function, fit_counting_exponent,
                                fit_eigenvalue_exponent, gram_defect,
                                refinement_study)
from heisenlab.eigensolver import SolverConfig
from heisenlab.grids import GridSpec
from heisenlab.sparse import SparseSymmetricMatrix


class TestBoundaryMass:
    def test_central_spike_has_none(self):
        g = GridSpec(1, 6.0, 11)
        v = np.zeros(g.size)
        center = g.size // 2
        v[center] = 1.0
        assert boundary_mass(g, v, 0.1) == 0.0

    def test_shell_vector_has_all(self):
        g = GridSpec(1, 6.0, 11)
        mask = g.shell_mask(0.3)
        v = np.zeros(g.size)
        idx = np.flatnonzero(mask)[:5]
        v[idx] = 1.0 / np.sqrt(5)
        assert boundary_mass(g, v, 0.3) == pytest.approx(1.0)

    def test_uniform_vector_counts_shell_points(self):
        g = GridSpec(1, 6.0, 10)
        v = np.full(g.size, 1.0 / np.sqrt(g.size))
        frac = g.shell_mask(0.25).sum() / g.size
        assert boundary_mass(g, v, 0.25) == pytest.approx(frac)

    def test_rejects_bad_fraction(self):
        g = GridSpec(1, 6.0, 5)
        with pytest.raises(ValueError):
            boundary_mass(g, np.ones(g.size), 1.5)


class TestCounting:
    def test_basic(self):
        assert counting_function([1.0, 2.0, 3.0], 2.5) == 2
        assert counting_function([1.0, 2.0, 3.0], 0.5) == 0

    def test_multiplicity_jump(self):
        vals = [1.0, 2.0, 2.0, 2.0, 3.0]
        assert counting_function(vals, 2.0) - counting_function(vals, 1.999) == 3

    def test_right_continuous_nondecreasing(self, rng):
        vals = np.sort(rng.uniform(0, 10, 50))
        lams = np.linspace(-1, 11, 200)
        counts = [counting_function(vals, l) for l in lams]
        assert all(b >= a for a, b in zip(counts, counts[1:]))
        assert counting_function(vals, vals[7]) >= 8


class TestExponentFits:
    def test_synthetic_power_law(self):
        s = np.arange(1, 1001, dtype=float)
        lam = s ** (2.0 / 9.0)
        bc, cd = fit_counting_exponent(lam, skip=0, n=1)
        bm, md = fit_eigenvalue_exponent(lam, skip=0, n=1)
        assert abs(bc - 4.5) < 1e-6
        assert abs(bm - 2.0 / 9.0) < 1e-6
        assert abs(bc * bm - 1.0) < 1e-12
        assert cd.reference == pytest.approx(4.5)
        assert md.reference == pytest.approx(2.0 / 9.0)

    def test_scale_invariance(self):
        s = np.arange(1, 501, dtype=float)
        for c in (0.3, 7.0):
            bc, _ = fit_counting_exponent(c * s ** (2.0 / 9.0), skip=0)
            assert abs(bc - 4.5) < 1e-6

    def test_window_selection(self):
        s = np.arange(1, 201, dtype=float)
        lam = s ** 0.5
        bc, diag = fit_counting_exponent(lam, skip=30, use=100)
        assert diag.s_range == (31, 130)
        assert diag.n_points == 100
        assert abs(bc - 2.0) < 1e-9

    def test_constant_sequence_degenerates(self):
        bm, md = fit_eigenvalue_exponent(np.full(40, 2.0), skip=0)
        assert bm == 0.0
        assert md.degenerate
        assert md.warning

    def test_insufficient_values_rejected(self):
        with pytest.raises(ValueError):
            fit_counting_exponent(np.arange(1.0, 25.0), skip=10)
        with pytest.raises(ValueError):
            fit_counting_exponent(np.arange(1.0, 100.0), skip=0, use=19)

    def test_rejects_nonpositive_values(self):
        vals = np.concatenate(([0.0], np.arange(1.0, 40.0)))
        with pytest.raises(ValueError):
            fit_eigenvalue_exponent(vals, skip=0)

    def test_reciprocity_on_noisy_data(self, rng):
        s = np.arange(1, 301, dtype=float)
        lam = s ** (2.0 / 9.0) * np.exp(rng.normal(0, 0.01, 300))
        lam = np.sort(lam)
        bc, _ = fit_counting_exponent(lam, skip=10)
        bm, _ = fit_eigenvalue_exponent(lam, skip=10)
        assert abs(bc * bm - 1.0) < 1e-10


class TestGramDefect:
    def test_coordinate_vectors(self):
        assert gram_defect(np.eye(4)) == 0.0

    def test_duplicated_vector(self):
        v = np.zeros((2, 5))
        v[0, 0] = v[1, 0] = 1.0
        assert gram_defect(v) == pytest.approx(1.0)

    def test_orthonormalized_random_set(self, rng):
        M = rng.standard_normal((6, 40))
        Q, _ = np.linalg.qr(M.T)
        assert gram_defect(Q.T[:6]) < 1e-12


def tridiag_factory(grid):
    m = grid.counts[0]
    h = grid.spacings[0]
    rows = np.concatenate([np.arange(m), np.arange(m - 1), np.arange(1, m)])
    cols = np.concatenate([np.arange(m), np.arange(1, m), np.arange(m - 1)])
    vals = np.concatenate([np.full(m, 2.0), np.full(m - 1, -1.0),
                           np.full(m - 1, -1.0)]) / h ** 2
    return SparseSymmetricMatrix.from_coo((m, m), rows, cols, vals)


class TestRefinementStudy:
    def test_identical_grids_give_zero_difference(self):
        grids = [GridSpec.from_axes([1.0], [31]), GridSpec.from_axes([1.0], [31])]
        cfg = SolverConfig(k=5, tol=1e-10, seed=0)
        table = refinement_study(grids, cfg, operator_factory=tridiag_factory,
                                 mass_threshold=1.1, first=5)
        assert table.cauchy_diffs[0] == pytest.approx(0.0, abs=1e-11)

    def test_laplacian_surrogate_fourth_order_shrink(self):
        # halving h divides the discretization error, hence the Cauchy
        # differences, by about four
        grids = [GridSpec.from_axes([1.0], [m]) for m in (31, 63, 127)]
        cfg = SolverConfig(k=5, tol=1e-10, seed=0)
        table = refinement_study(grids, cfg, operator_factory=tridiag_factory,
                                 mass_threshold=1.1, first=5)
        d1, d2 = table.cauchy_diffs
        assert 3.2 <= d1 / d2 <= 4.8
        assert table.rows[0].accepted_count == 5

    def test_requires_two_nested_grids(self):
        g = GridSpec.from_axes([1.0], [31])
        with pytest.raises(ValueError):
            refinement_study([g], SolverConfig(k=3), tridiag_factory)
        fine = GridSpec.from_axes([1.0], [63])
        with pytest.raises(ValueError):
            refinement_study([fine, g], SolverConfig(k=3), tridiag_factory)


def test_filter_monotonicity(rng):
    # shrinking the shell or raising the mass threshold never removes an
    # accepted pair
    g = GridSpec(1, 6.0, 8)
    vectors = rng.standard_normal((12, g.size))
    vectors /= np.linalg.norm(vectors, axis=1)[:, None]

    def accepted(shell, thr):
        return {i for i, v in enumerate(vectors)
                if boundary_mass(g, v, shell) <= thr}

    base = accepted(0.3, 1e-2)
    assert base <= accepted(0.15, 1e-2)   # smaller shell
    assert base <= accepted(0.3, 1e-1)    # looser threshold


def test_analyze_spectrum_roundtrip(rng):
    # small real pipeline on the 1-D surrogate grid
    from heisenlab.eigensolver import smallest_eigenpairs
    g = GridSpec.from_axes([1.0], [63])
    A = tridiag_factory(g)
    res = smallest_eigenpairs(A, SolverConfig(k=30, tol=1e-9, seed=4))
    rep = analyze_spectrum(g, res, shell_fraction=0.1, mass_threshold=2.0,
                           skip=0, n=1)
    assert isinstance(rep, SpectrumReport)
    assert len(rep.accepted) == 30
    assert rep.gram_defect_accepted < 1e-10
    assert rep.counting_samples[-1][2] == 30
    doc = rep.to_json()
    assert "beta_count" in doc
