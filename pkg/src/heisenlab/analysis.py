"""Post-processing: boundary-contamination filter, counting function,
exponent fits and refinement studies for the computed spectra.

The box truncation is our construction, not part of the operator, so
eigenvectors with visible mass near the walls approximate nothing and are
filtered out of the fits (they stay in the report).

Exponent fits: the asymptotic law relates N(lambda) ~ lambda^beta_count and
lambda_s ~ s^beta_mag with beta_mag = 1/beta_count.  Two independent
ordinary-least-squares fits cannot satisfy that reciprocity exactly (their
product is r^2 < 1 on noisy data), so the reported exponents come from the
orientation-symmetric least-squares slope (geometric-mean regression), which
makes beta_mag * beta_count = 1 hold to rounding; both plain OLS slopes and
r^2 are kept in the diagnostics.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.fft import dst

from .grids import GridSpec


def boundary_mass(grid: GridSpec, v, shell_fraction):
    """Mass sum |v_p|^2 over points within shell_fraction*L_j of any face."""
    v = np.asarray(v)
    if v.shape != (grid.size,):
        raise ValueError("vector length does not match the grid")
    mask = grid.shell_mask(shell_fraction)
    return float(np.sum(np.abs(v[mask]) ** 2))


def nyquist_band_fraction(grid: GridSpec, v, band=0.85):
    """Largest per-axis spectral mass fraction above ``band`` * Nyquist.

    Modes concentrating near the grid's resolution limit approximate nothing
    of the continuum operator (the grid analogue of wall contamination), so
    this is reported next to the boundary mass and can gate acceptance.
    Uses the type-I sine transform, the eigenbasis of the Dirichlet box.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (grid.size,):
        raise ValueError("vector length does not match the grid")
    arr = v.reshape(tuple(reversed(grid.counts)))
    worst = 0.0
    for np_axis in range(arr.ndim):
        m = arr.shape[np_axis]
        coef = dst(arr, type=1, axis=np_axis, norm="ortho")
        high = np.arange(1, m + 1) / (m + 1) > band
        sl = [slice(None)] * arr.ndim
        sl[np_axis] = high
        total = float(np.sum(coef ** 2))
        if total > 0:
            worst = max(worst, float(np.sum(coef[tuple(sl)] ** 2)) / total)
    return worst


def cross_quotient_mismatch(value, vector, other_matrix):
    """|v^T B v / lambda - 1| for the companion discretization B.

    Large values flag modes that only one assembly produces (scheme
    artifacts); reported per pair, never silently applied.
    """
    quot = float(vector @ other_matrix.matvec(vector))
    return abs(quot / value - 1.0)


def counting_function(values, lam):
    """N(lam) = #{s : lambda_s <= lam} for an ascending value list."""
    values = np.asarray(values)
    return int(np.searchsorted(values, lam, side="right"))


@dataclass
class FitDiagnostics:
    slope: float
    ols_slope: float
    ols_reverse_slope: float
    intercept: float
    r_squared: float
    n_points: int
    s_range: tuple
    reference: float | None = None
    degenerate: bool = False
    warning: str = ""


def _symmetric_loglog_fit(x, y):
    """Orientation-symmetric least-squares slope of y against x (log-log).

    Returns (slope, ols_slope, ols_reverse, intercept, r2, degenerate, note).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = float(xm @ xm)
    syy = float(ym @ ym)
    sxy = float(xm @ ym)
    if sxx == 0.0 and syy == 0.0:
        return 0.0, 0.0, 0.0, float(y.mean()), 1.0, True, "all points coincide"
    if syy == 0.0:
        return 0.0, 0.0, np.inf, float(y.mean()), 0.0, True, "response is constant"
    if sxx == 0.0:
        return np.inf, np.inf, 0.0, np.nan, 0.0, True, "abscissa is constant"
    sign = 1.0 if sxy >= 0 else -1.0
    slope = sign * np.sqrt(syy / sxx)
    ols = sxy / sxx
    ols_rev = sxy / syy
    r2 = sxy * sxy / (sxx * syy)
    intercept = float(y.mean() - slope * x.mean())
    return slope, ols, ols_rev, intercept, r2, False, ""


def _fit_window(values, skip, use):
    values = np.asarray(values, dtype=np.float64)
    if np.any(values <= 0):
        raise ValueError("exponent fits need strictly positive eigenvalues")
    avail = values.size - skip
    if use is None:
        use = avail
    if use < 20:
        raise ValueError(
            f"insufficient accepted values: window has {max(avail, 0)} "
            f"points after skipping {skip}, need at least 20")
    if skip + use > values.size:
        raise ValueError("fit window exceeds the accepted value list")
    s = np.arange(skip + 1, skip + use + 1, dtype=np.float64)
    lam = values[skip:skip + use]
    return s, lam


def fit_counting_exponent(values, skip=10, use=None, n=None):
    """Slope of log N(lambda_s) = log s against log lambda_s on the window."""
    s, lam = _fit_window(values, skip, use)
    slope, ols, ols_rev, intercept, r2, degen, note = _symmetric_loglog_fit(
        np.log(lam), np.log(s))
    ref = (6 * n + 3) / 2.0 if n is not None else None
    return slope, FitDiagnostics(slope, ols, ols_rev, intercept, r2,
                                 int(s.size), (int(s[0]), int(s[-1])),
                                 ref, degen, note)


def fit_eigenvalue_exponent(values, skip=10, use=None, n=None):
    """Slope of log lambda_s against log s; reciprocal of the counting fit."""
    s, lam = _fit_window(values, skip, use)
    slope, ols, ols_rev, intercept, r2, degen, note = _symmetric_loglog_fit(
        np.log(s), np.log(lam))
    ref = 2.0 / (6 * n + 3) if n is not None else None
    return slope, FitDiagnostics(slope, ols, ols_rev, intercept, r2,
                                 int(s.size), (int(s[0]), int(s[-1])),
                                 ref, degen, note)


def gram_defect(vectors):
    """max_{i,j} |<v_i, v_j> - delta_ij|."""
    V = np.asarray(vectors, dtype=np.float64)
    if V.ndim != 2:
        raise ValueError("expected a stack of equal-length vectors")
    G = V @ V.T
    return float(np.max(np.abs(G - np.eye(V.shape[0]))))


@dataclass
class SpectrumReport:
    grid: dict
    n: int | None
    eigenvalues: list
    residuals: list
    boundary_masses: list
    accepted: list
    shell_fraction: float
    mass_threshold: float
    nyquist_band: float | None = None
    nyquist_threshold: float | None = None
    nyquist_fractions: list | None = None
    cross_mismatches: list | None = None
    beta_count: float | None = None
    beta_mag: float | None = None
    count_fit: dict | None = None
    mag_fit: dict | None = None
    gram_defect_accepted: float | None = None
    counting_samples: list = field(default_factory=list)
    solver_stats: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_json(self, **kwargs):
        return json.dumps(asdict(self), indent=2, **kwargs)

    @property
    def accepted_values(self):
        vals = np.asarray(self.eigenvalues)
        return vals[np.asarray(self.accepted, dtype=int)]


def analyze_spectrum(grid: GridSpec, result, shell_fraction=0.1,
                     mass_threshold=1e-4, skip=10, use=None, n=None,
                     fit=True, nyquist_band=0.85, nyquist_threshold=None,
                     cross_matrix=None) -> SpectrumReport:
    """Filter an EigenResult and fit the two exponents.

    Acceptance combines the boundary-shell filter (wall contamination) with,
    when ``nyquist_threshold`` is set, the resolution filter (grid-scale
    contamination).  When ``cross_matrix`` is given, the per-pair Rayleigh
    quotient under the companion discretization is reported as a diagnostic.
    """
    n = grid.n if n is None else n
    values = [p.value for p in result.pairs]
    residuals = [p.residual for p in result.pairs]
    masses = [boundary_mass(grid, p.vector, shell_fraction)
              for p in result.pairs]
    nyqs = [nyquist_band_fraction(grid, p.vector, nyquist_band)
            for p in result.pairs]
    accepted = [i for i, m in enumerate(masses)
                if m <= mass_threshold
                and (nyquist_threshold is None or nyqs[i] <= nyquist_threshold)]
    report = SpectrumReport(
        grid=grid.to_dict(), n=n,
        eigenvalues=values, residuals=residuals, boundary_masses=masses,
        accepted=accepted, shell_fraction=shell_fraction,
        mass_threshold=mass_threshold,
        nyquist_band=nyquist_band, nyquist_threshold=nyquist_threshold,
        nyquist_fractions=nyqs,
        solver_stats=dict(result.stats),
    )
    if cross_matrix is not None:
        report.cross_mismatches = [
            cross_quotient_mismatch(p.value, p.vector, cross_matrix)
            for p in result.pairs]
    if not result.converged:
        report.notes.append(result.message)
    acc_vals = np.asarray(values)[accepted]
    report.counting_samples = [
        [int(s + 1), float(lam), counting_function(acc_vals, lam)]
        for s, lam in enumerate(acc_vals)]
    if accepted:
        vecs = np.array([result.pairs[i].vector for i in accepted])
        report.gram_defect_accepted = gram_defect(vecs)
    if fit:
        try:
            bc, cd = fit_counting_exponent(acc_vals, skip, use, n=n)
            bm, md = fit_eigenvalue_exponent(acc_vals, skip, use, n=n)
            report.beta_count = bc
            report.beta_mag = bm
            report.count_fit = asdict(cd)
            report.mag_fit = asdict(md)
        except ValueError as exc:
            report.notes.append(f"exponent fit skipped: {exc}")
    return report


@dataclass
class RefinementRow:
    grid: dict
    values: list
    accepted_count: int
    beta_count: float | None = None
    beta_mag: float | None = None


@dataclass
class RefinementTable:
    rows: list
    cauchy_diffs: list  # max |lambda_i^(g) - lambda_i^(g+1)| over shared prefix

    def to_dict(self):
        return {"rows": [asdict(r) for r in self.rows],
                "cauchy_diffs": self.cauchy_diffs}


def refinement_study(grids, cfg, operator_factory=None, shell_fraction=0.1,
                     mass_threshold=1e-4, first=20, fit_skip=10,
                     fit_use=None, nyquist_band=0.85,
                     nyquist_threshold=None) -> RefinementTable:
    """Solve the same operator on successively finer grids and tabulate.

    ``operator_factory(grid)`` defaults to the sum-of-squares oscillator
    assembly.  Each row records the first ``first`` accepted eigenvalues and,
    when the window allows, fitted exponents; consecutive rows contribute a
    Cauchy difference over the shared prefix of accepted values.
    """
    from .assembly import assemble_oscillator_sos
    from .eigensolver import smallest_eigenpairs

    if len(grids) < 2:
        raise ValueError("refinement study needs at least two grids")
    for ga, gb in zip(grids, grids[1:]):
        if not all(mb >= ma for ma, mb in zip(ga.counts, gb.counts)):
            raise ValueError("grids must be ordered coarse to fine")
    factory = operator_factory or assemble_oscillator_sos
    rows = []
    accepted_lists = []
    for grid in grids:
        mat = factory(grid)
        result = smallest_eigenpairs(mat, cfg)
        masses = [boundary_mass(grid, p.vector, shell_fraction)
                  for p in result.pairs]
        nyqs = [nyquist_band_fraction(grid, p.vector, nyquist_band)
                for p in result.pairs]
        acc = np.array([
            p.value for i, p in enumerate(result.pairs)
            if masses[i] <= mass_threshold
            and (nyquist_threshold is None or nyqs[i] <= nyquist_threshold)])
        row = RefinementRow(grid.to_dict(), acc[:first].tolist(), acc.size)
        try:
            row.beta_count = fit_counting_exponent(acc, fit_skip, fit_use)[0]
            row.beta_mag = fit_eigenvalue_exponent(acc, fit_skip, fit_use)[0]
        except ValueError:
            pass
        rows.append(row)
        accepted_lists.append(acc)
    diffs = []
    for a, b in zip(accepted_lists, accepted_lists[1:]):
        shared = min(len(a), len(b), first)
        if shared == 0:
            diffs.append(float("nan"))
        else:
            diffs.append(float(np.max(np.abs(a[:shared] - b[:shared]))))
    return RefinementTable(rows, diffs)
