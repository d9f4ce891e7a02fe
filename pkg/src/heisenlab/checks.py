"""Named verification suites over the algebra and the representation.

Each check returns its measured defect and tolerance so the CLI can emit a
machine-readable report and a nonzero exit status on the first violated
identity.  Diagnostics (recorded but never asserted) cover the two readings
of the half-shift in the representation phase and the difference between the
BCH group law and the closed form as printed.
"""

from __future__ import annotations

import numpy as np

from . import algebra as alg
from . import representation as rep


def _check(name, defect, tol):
    return {"name": name, "defect": float(defect), "tolerance": tol,
            "passed": bool(defect <= tol)}


def run_algebra_checks(n=1, algebra=None, probes=100, bch_triples=1000,
                       pair_probes=100, seed=2024):
    """Full identity suite for h_{n,2}; returns (all_passed, report)."""
    A = algebra if algebra is not None else alg.build_dynin_folland(n)
    n = A.n
    rng = np.random.default_rng(seed)
    checks = []

    checks.append(_check("antisymmetry", A.antisymmetry_defect(), 0.0))
    checks.append(_check("jacobi_identity", alg.jacobi_defect(A), 1e-13))
    depth4 = 0.0 if A.is_step_le_3() else 1.0
    checks.append(_check("nilpotency_step3", depth4, 0.0))
    checks.append(_check("degree_additivity", A.degree_additivity_defect(), 0.0))

    worst = 0.0
    for _ in range(probes):
        r = float(rng.uniform(0.5, 2.0))
        u = rng.uniform(-1, 1, A.dim)
        v = rng.uniform(-1, 1, A.dim)
        lhs = alg.bracket(A, alg.dilate(A, r, u), alg.dilate(A, r, v))
        rhs = alg.dilate(A, r, alg.bracket(A, u, v))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    checks.append(_check("dilation_automorphism", worst, 1e-12))

    worst = 0.0
    for _ in range(bch_triples):
        u, v, w = (rng.uniform(-1, 1, A.dim) for _ in range(3))
        lhs = alg.bch(A, alg.bch(A, u, v), w)
        rhs = alg.bch(A, u, alg.bch(A, v, w))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    checks.append(_check("bch_associativity", worst, 1e-12))

    # BCH restricted to the X block must reproduce the Heisenberg law.
    worst = 0.0
    big = 2 * n + 1
    for _ in range(pair_probes):
        t = alg.HeisPoint(rng.uniform(-1, 1, big))
        s = alg.HeisPoint(rng.uniform(-1, 1, big))
        u = np.concatenate((np.zeros(big + 1), t.coords))
        v = np.concatenate((np.zeros(big + 1), s.coords))
        full = alg.bch(A, u, v)
        want = alg.heis_mul(n, t, s).coords
        worst = max(worst, float(np.max(np.abs(full[big + 1:] - want))))
        worst = max(worst, float(np.max(np.abs(full[:big + 1]))))
    checks.append(_check("bch_matches_heisenberg_law", worst, 1e-12))

    worst = 0.0
    for _ in range(pair_probes):
        g = rep.random_group_element(n, rng)
        h = rep.random_group_element(n, rng)
        prod = alg.df_mul(A, g, h)
        want = alg.heis_mul(n, g.x, h.x).coords
        worst = max(worst, float(np.max(np.abs(prod.x.coords - want))))
    checks.append(_check("group_law_x_block", worst, 1e-13))

    lam_values = (-2.0, -0.5, 0.5, 1.0, 2.0)
    worst = 0.0
    worst_det = 0.0
    B1 = alg.b_form_matrix(A, 1.0)
    for lam in lam_values:
        B = alg.b_form_matrix(A, lam)
        worst = max(worst, float(np.max(np.abs(B - lam * B1))))
        pf = alg.pfaffian(A, lam)
        worst = max(worst, abs(pf - abs(lam) ** (2 * n + 1)))
        worst_det = max(worst_det,
                        abs(pf ** 2 - np.linalg.det(B)) / max(1.0, abs(pf) ** 2))
    checks.append(_check("pfaffian_value", worst, 1e-12))
    checks.append(_check("pfaffian_squared_is_det", worst_det, 1e-12))

    gens = alg.sublaplacian_generators(A)
    deg_ok = all(A.degrees[A.position(b)] == 1 for b in gens)
    count_ok = len(gens) == 2 * n + 1
    checks.append(_check("sublaplacian_generators", 0.0 if deg_ok and count_ok else 1.0, 0.0))

    # Diagnostics only: printed closed form vs BCH, coadjoint sign convention.
    diff_printed = 0.0
    for _ in range(pair_probes):
        g = rep.random_group_element(n, rng)
        h = rep.random_group_element(n, rng)
        a = alg.df_mul(A, g, h).to_vector()
        b = alg.df_mul_printed(n, g, h).to_vector()
        diff_printed = max(diff_printed, float(np.max(np.abs(a - b))))
    diagnostics = {
        "printed_group_law_max_diff_vs_bch": diff_printed,
        "lambda_values": list(lam_values),
    }

    report = {
        "n": n,
        "dim": A.dim,
        "checks": checks,
        "diagnostics": diagnostics,
        "failed": [c["name"] for c in checks if not c["passed"]],
        "algebra": A.to_dict(),
    }
    return all(c["passed"] for c in checks), report


def _fd_ratio_checks(A, lam, f, points, steps=(1e-2, 5e-3), window=(3.5, 4.5)):
    rows = []
    for pos in range(A.dim):
        V = A.basis_index(pos)
        d_coarse = rep.dpi_fd_check(A, lam, V, f, points, steps[0])
        d_fine = rep.dpi_fd_check(A, lam, V, f, points, steps[1])
        ratio = d_coarse / d_fine if d_fine > 0 else float("inf")
        rows.append({"direction": V.label, "defect_coarse": d_coarse,
                     "defect_fine": d_fine, "ratio": ratio,
                     "passed": bool(window[0] <= ratio <= window[1])})
    return rows


def run_rep_checks(n=1, lam=1.0, n_pairs=100, n_points=50, seed=2024):
    """Representation suite: homomorphism, unitarity, inverse, generators."""
    if lam == 0.0:
        raise ValueError("representation parameter must be nonzero")
    A = alg.build_dynin_folland(n)
    d = 2 * n + 1
    widths = 0.4 + 0.05 * np.arange(d)
    centers = 0.3 * np.cos(1.0 + np.arange(d))
    f = rep.Gaussian(widths, centers)
    points = rep.sample_points(n, n_points, seed)
    rng = np.random.default_rng(seed + 1)
    checks = []

    hom = rep.homomorphism_defect(A, lam, f, n_pairs, points, seed + 2,
                                  half_reading="argument")
    checks.append(_check("pi_homomorphism", hom, 1e-10))
    hom_alt = rep.homomorphism_defect(A, lam, f, n_pairs, points, seed + 2,
                                      half_reading="product")

    worst_u = 0.0
    worst_inv = 0.0
    for _ in range(20):
        g = rep.random_group_element(n, rng)
        worst_u = max(worst_u, rep.unitarity_defect(lam, g, f, points))
        worst_inv = max(worst_inv, rep.inverse_defect(A, lam, g, f, points))
    checks.append(_check("pi_unitarity_modulus", worst_u, 1e-14))
    checks.append(_check("pi_inverse", worst_inv, 1e-10))

    fn = rep.Gaussian(widths[:n], centers[:n])
    rho_points = rng.uniform(-3, 3, size=(n_points, n))
    rho = rep.rho_homomorphism_defect(n, lam, fn, n_pairs, rho_points, seed + 3)
    checks.append(_check("rho_homomorphism", rho, 1e-10))

    fd_rows = _fd_ratio_checks(A, lam, f, points)
    for row in fd_rows:
        checks.append(_check(f"dpi_fd_order2[{row['direction']}]",
                             0.0 if row["passed"] else 1.0, 0.0))

    report = {
        "n": n, "lambda": lam, "pairs": n_pairs, "points": n_points,
        "seed": seed,
        "checks": checks,
        "fd_ratios": fd_rows,
        "diagnostics": {
            "homomorphism_defect_half_argument": hom,
            "homomorphism_defect_half_product": hom_alt,
        },
        "failed": [c["name"] for c in checks if not c["passed"]],
    }
    return all(c["passed"] for c in checks), report


def corrupt_table(A):
    """Negative-control fixture: double one [X_k, Y_k] = Z coefficient."""
    from fractions import Fraction
    table = {k: dict(v) for k, v in A.table.items()}
    target = None
    for key, comps in sorted(table.items()):
        if 0 in comps:
            target = key
            break
    if target is None:
        raise ValueError("no central bracket found to corrupt")
    table[target][0] = table[target][0] * Fraction(2)
    return alg.LieAlgebraSpec(A.n, table, A.degrees)
