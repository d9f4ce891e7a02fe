"""Command-line front door: identity checks, assembly, spectral runs.

Subcommands are separated so the millisecond-scale algebra suite can gate CI
without touching the solver:

    heisenlab algebra-check --n 1
    heisenlab rep-check --n 1 --lambda 1.0
    heisenlab assemble --config cfg.json --export-matrix
    heisenlab solve --config cfg.json
    heisenlab analyze --run-dir runs/reference_n1 --mass-threshold 1e-5
    heisenlab full-run --config cfg.json

Exit status is 0 iff every executed check passed its tolerance.  All
randomness flows from the configured seed, and reports embed the fully
resolved configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import kernels
from .analysis import analyze_spectrum, refinement_study
from .assembly import assemble_oscillator_expanded, assemble_oscillator_sos
from .checks import corrupt_table, run_algebra_checks, run_rep_checks
from .eigensolver import SolverConfig, smallest_eigenpairs
from .grids import GridSpec
from .sparse import write_matrix_market

ASSEMBLERS = {"sos": assemble_oscillator_sos,
              "expanded": assemble_oscillator_expanded}


@dataclass
class RunConfig:
    """Resolved configuration of a spectral run; validates before any work."""
    n: int = 1
    lam: float = 1.0
    extents: list = field(default_factory=lambda: [6.0, 6.0, 6.0])
    counts: list = field(default_factory=lambda: [48, 48, 48])
    k: int = 200
    tol: float = 1e-8
    max_subspace: int | None = None
    cg_tol: float = 1e-10
    cg_max_iter: int | None = None
    seed: int = 7
    shell_fraction: float = 0.1
    mass_threshold: float = 1e-4
    nyquist_band: float = 0.85
    nyquist_threshold: float | None = None
    cross_check: bool = False
    fit_skip: int = 10
    fit_use: int | None = None
    assembly: str = "sos"
    out_dir: str = "runs/latest"
    export_matrix: bool = False
    export_vectors: bool = False
    refinement_counts: list | None = None
    refinement_k: int = 40

    @classmethod
    def from_dict(cls, doc):
        cfg = cls()
        cfg.n = int(doc.get("n", cfg.n))
        cfg.lam = float(doc.get("lambda", cfg.lam))
        grid = doc.get("grid", {})
        cfg.extents = [float(v) for v in grid.get("extents", cfg.extents)]
        cfg.counts = [int(v) for v in grid.get("counts", cfg.counts)]
        sol = doc.get("solver", {})
        cfg.k = int(sol.get("k", cfg.k))
        cfg.tol = float(sol.get("tol", cfg.tol))
        cfg.max_subspace = sol.get("max_subspace", cfg.max_subspace)
        cfg.cg_tol = float(sol.get("cg_tol", cfg.cg_tol))
        cfg.cg_max_iter = sol.get("cg_max_iter", cfg.cg_max_iter)
        cfg.seed = int(sol.get("seed", doc.get("seed", cfg.seed)))
        filt = doc.get("filter", {})
        cfg.shell_fraction = float(filt.get("shell_fraction", cfg.shell_fraction))
        cfg.mass_threshold = float(filt.get("mass_threshold", cfg.mass_threshold))
        cfg.nyquist_band = float(filt.get("nyquist_band", cfg.nyquist_band))
        cfg.nyquist_threshold = filt.get("nyquist_threshold",
                                         cfg.nyquist_threshold)
        cfg.cross_check = bool(filt.get("cross_check", cfg.cross_check))
        fit = doc.get("fit", {})
        cfg.fit_skip = int(fit.get("skip", cfg.fit_skip))
        cfg.fit_use = fit.get("use", cfg.fit_use)
        cfg.assembly = doc.get("assembly", cfg.assembly)
        out = doc.get("output", {})
        cfg.out_dir = out.get("directory", cfg.out_dir)
        cfg.export_matrix = bool(out.get("export_matrix", cfg.export_matrix))
        cfg.export_vectors = bool(out.get("export_vectors", cfg.export_vectors))
        refine = doc.get("refinement")
        if refine:
            cfg.refinement_counts = [[int(m) for m in row]
                                     for row in refine.get("counts_list", [])]
            cfg.refinement_k = int(refine.get("k", cfg.refinement_k))
        return cfg

    def to_dict(self):
        return {
            "n": self.n,
            "lambda": self.lam,
            "grid": {"extents": self.extents, "counts": self.counts},
            "solver": {"k": self.k, "tol": self.tol,
                       "max_subspace": self.max_subspace,
                       "cg_tol": self.cg_tol, "cg_max_iter": self.cg_max_iter,
                       "seed": self.seed},
            "filter": {"shell_fraction": self.shell_fraction,
                       "mass_threshold": self.mass_threshold,
                       "nyquist_band": self.nyquist_band,
                       "nyquist_threshold": self.nyquist_threshold,
                       "cross_check": self.cross_check},
            "fit": {"skip": self.fit_skip, "use": self.fit_use},
            "assembly": self.assembly,
            "output": {"directory": self.out_dir,
                       "export_matrix": self.export_matrix,
                       "export_vectors": self.export_vectors},
            "refinement": ({"counts_list": self.refinement_counts,
                            "k": self.refinement_k}
                           if self.refinement_counts else None),
            "kernel_backend": kernels.backend(),
        }

    def validate(self):
        grid = self.grid()  # raises on bad extents/counts
        if self.lam == 0.0:
            raise ValueError("lambda must be nonzero")
        if not 0 < self.k < grid.size:
            raise ValueError(f"need 0 < k < N = {grid.size}, got k={self.k}")
        if self.assembly not in ("sos", "expanded", "both"):
            raise ValueError("assembly must be one of sos|expanded|both")
        if not 0.0 < self.shell_fraction < 1.0:
            raise ValueError("shell_fraction must lie in (0, 1)")
        if self.mass_threshold <= 0:
            raise ValueError("mass_threshold must be positive")
        if self.tol <= 0 or self.cg_tol <= 0:
            raise ValueError("tolerances must be positive")
        return grid

    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.extents, self.counts)

    def solver_config(self, k=None) -> SolverConfig:
        return SolverConfig(k=k or self.k, tol=self.tol,
                            max_subspace=self.max_subspace,
                            cg_tol=self.cg_tol, cg_max_iter=self.cg_max_iter,
                            seed=self.seed)


def reference_config() -> dict:
    """The bundled desk-scale reference configuration (n = 1)."""
    with resources.files("heisenlab.data").joinpath(
            "reference_n1.json").open() as fh:
        return json.load(fh)


def load_config(path) -> RunConfig:
    if path in (None, "reference"):
        doc = reference_config() if path == "reference" else {}
    else:
        with open(path) as fh:
            doc = json.load(fh)
    return RunConfig.from_dict(doc)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "n", None) is not None:
        cfg.n = args.n
    if getattr(args, "lam", None) is not None:
        cfg.lam = args.lam
    if getattr(args, "grid", None):
        cfg.counts = [int(v) for v in args.grid.split(",")]
    if getattr(args, "extent", None):
        cfg.extents = [float(v) for v in args.extent.split(",")]
    if getattr(args, "num_eigs", None) is not None:
        cfg.k = args.num_eigs
    if getattr(args, "max_subspace", None) is not None:
        cfg.max_subspace = args.max_subspace
    if getattr(args, "tol", None) is not None:
        cfg.tol = args.tol
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None) is not None:
        cfg.out_dir = args.out
    if getattr(args, "assembly", None) is not None:
        cfg.assembly = args.assembly
    if getattr(args, "export_matrix", False):
        cfg.export_matrix = True
    if getattr(args, "export_vectors", False):
        cfg.export_vectors = True
    return cfg


def _write_json(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _write_eigen_csv(path, report):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "value", "residual", "boundary_mass", "accepted"])
        accepted = set(report.accepted)
        for i, (lam, res, mass) in enumerate(zip(
                report.eigenvalues, report.residuals, report.boundary_masses)):
            w.writerow([i + 1, f"{lam:.15g}", f"{res:.6g}", f"{mass:.6g}",
                        int(i in accepted)])


def _write_counting_csv(path, report):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "lambda", "count"])
        for s, lam, count in report.counting_samples:
            w.writerow([s, f"{lam:.15g}", count])


def _summary_text(cfg, reports, cross_table, refinement, elapsed):
    lines = []
    lines.append("harmonic oscillator on H_n: spectral run summary")
    lines.append(f"  n = {cfg.n}, grid counts = {cfg.counts}, "
                 f"extents = {cfg.extents}")
    lines.append(f"  kernel backend: {kernels.backend()}")
    lines.append(f"  requested pairs k = {cfg.k}, solver tol = {cfg.tol}")
    lines.append(f"  elapsed: {elapsed:.1f} s")
    ref_count = (6 * cfg.n + 3) / 2.0
    ref_mag = 2.0 / (6 * cfg.n + 3)
    for name, rep in reports.items():
        lines.append(f"assembly [{name}]:")
        filters = (f"shell {rep.shell_fraction}, mass <= {rep.mass_threshold}")
        if rep.nyquist_threshold is not None:
            filters += (f", spectral mass above {rep.nyquist_band}*Nyquist "
                        f"<= {rep.nyquist_threshold}")
        lines.append(f"  accepted {len(rep.accepted)} of "
                     f"{len(rep.eigenvalues)} pairs ({filters})")
        if rep.eigenvalues:
            lines.append(f"  smallest eigenvalue: {min(rep.eigenvalues):.6f}")
        if rep.beta_count is not None:
            lines.append(f"  beta_count = {rep.beta_count:.4f}  "
                         f"(reference (6n+3)/2 = {ref_count:.4f}, "
                         f"ratio {rep.beta_count / ref_count:.3f})")
            lines.append(f"  beta_mag   = {rep.beta_mag:.6f}  "
                         f"(reference 2/(6n+3) = {ref_mag:.6f}, "
                         f"ratio {rep.beta_mag / ref_mag:.3f})")
        if rep.gram_defect_accepted is not None:
            lines.append(f"  gram defect (accepted) = "
                         f"{rep.gram_defect_accepted:.3e}")
        for note in rep.notes:
            lines.append(f"  note: {note}")
    if cross_table is not None:
        lines.append("cross-assembly agreement (first "
                     f"{len(cross_table['sos'])} accepted eigenvalues):")
        lines.append("  idx        sos          expanded     rel.diff")
        for i, (a, b) in enumerate(zip(cross_table["sos"],
                                       cross_table["expanded"])):
            rel = abs(a - b) / max(abs(a), abs(b))
            lines.append(f"  {i + 1:3d}  {a:12.6f}  {b:12.6f}  {rel:9.2e}")
        lines.append(f"  max relative difference: "
                     f"{cross_table['max_rel_diff']:.3e}")
    if refinement is not None:
        lines.append("refinement study (Cauchy differences of the first "
                     "20 accepted eigenvalues):")
        for row, diff in zip(refinement["rows"][1:],
                             refinement["cauchy_diffs"]):
            lines.append(f"  -> counts {row['grid']['counts']}: "
                         f"max diff {diff:.4e}")
    return "\n".join(lines) + "\n"


def solve_pipeline(cfg: RunConfig):
    """Assemble, solve, filter, fit; returns (exit_ok, artifacts dict)."""
    grid = cfg.validate()
    t0 = time.perf_counter()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    names = ["sos", "expanded"] if cfg.assembly == "both" else [cfg.assembly]
    reports = {}
    results = {}
    ok = True
    for name in names:
        mat = ASSEMBLERS[name](grid)
        if cfg.export_matrix:
            suffix = f"matrix_{name}.mtx" if len(names) > 1 else "matrix.mtx"
            write_matrix_market(out / suffix, mat, symmetric=True)
        result = smallest_eigenpairs(mat, cfg.solver_config())
        ok &= result.converged
        cross_matrix = None
        if cfg.cross_check:
            other = "expanded" if name == "sos" else "sos"
            cross_matrix = ASSEMBLERS[other](grid)
        report = analyze_spectrum(grid, result,
                                  shell_fraction=cfg.shell_fraction,
                                  mass_threshold=cfg.mass_threshold,
                                  skip=cfg.fit_skip, use=cfg.fit_use, n=cfg.n,
                                  nyquist_band=cfg.nyquist_band,
                                  nyquist_threshold=cfg.nyquist_threshold,
                                  cross_matrix=cross_matrix)
        reports[name] = report
        results[name] = result
        if cfg.export_vectors:
            stem = f"vectors_{name}" if len(names) > 1 else "vectors"
            vecs = result.vectors
            vecs.tofile(out / f"{stem}.f64")
            _write_json(out / f"{stem}.json", {
                "dtype": "float64", "order": "C",
                "shape": list(vecs.shape),
                "flattening": "lexicographic, t_1 fastest",
                "grid": grid.to_dict()})

    cross_table = None
    if len(names) == 2:
        first = 20
        a = reports["sos"].accepted_values[:first]
        b = reports["expanded"].accepted_values[:first]
        shared = min(len(a), len(b))
        rel = [abs(x - y) / max(abs(x), abs(y))
               for x, y in zip(a[:shared], b[:shared])]
        cross_table = {"sos": [float(v) for v in a[:shared]],
                       "expanded": [float(v) for v in b[:shared]],
                       "rel_diffs": rel,
                       "max_rel_diff": max(rel) if rel else float("nan")}

    refinement = None
    if cfg.refinement_counts:
        grids = [GridSpec(cfg.n, cfg.extents, counts)
                 for counts in cfg.refinement_counts]
        grids.append(grid)
        table = refinement_study(grids, cfg.solver_config(k=cfg.refinement_k),
                                 shell_fraction=cfg.shell_fraction,
                                 mass_threshold=cfg.mass_threshold,
                                 nyquist_band=cfg.nyquist_band,
                                 nyquist_threshold=cfg.nyquist_threshold)
        refinement = table.to_dict()

    elapsed = time.perf_counter() - t0
    primary = names[0]
    _write_eigen_csv(out / "eigenvalues.csv", reports[primary])
    _write_counting_csv(out / "counting.csv", reports[primary])
    if len(names) == 2:
        _write_eigen_csv(out / "eigenvalues_expanded.csv", reports["expanded"])
    report_doc = {
        "config": cfg.to_dict(),
        "elapsed_seconds": elapsed,
        "assemblies": {name: json.loads(rep.to_json())
                       for name, rep in reports.items()},
        "cross_assembly": cross_table,
        "refinement": refinement,
    }
    _write_json(out / "report.json", report_doc)
    summary = _summary_text(cfg, reports, cross_table, refinement, elapsed)
    (out / "summary.txt").write_text(summary)
    artifacts = {"reports": reports, "results": results,
                 "cross_table": cross_table, "refinement": refinement,
                 "summary": summary, "out_dir": str(out)}
    return ok, artifacts


# ---------------------------------------------------------------------------
# subcommands


def cmd_algebra_check(args):
    if args.n < 1:
        print("error: n must be a positive integer", file=sys.stderr)
        return 2
    algebra = None
    if args.corrupt:
        from .algebra import build_dynin_folland
        algebra = corrupt_table(build_dynin_folland(args.n))
    ok, report = run_algebra_checks(n=args.n, algebra=algebra, seed=args.seed)
    report["corrupted_fixture"] = bool(args.corrupt)
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        _write_json(Path(args.out) / "algebra_check.json", report)
    if not ok:
        print(f"FAILED identities: {', '.join(report['failed'])}",
              file=sys.stderr)
    return 0 if ok else 1


def cmd_rep_check(args):
    if args.lam == 0.0:
        print("error: lambda must be nonzero", file=sys.stderr)
        return 2
    if args.n < 1:
        print("error: n must be a positive integer", file=sys.stderr)
        return 2
    ok, report = run_rep_checks(n=args.n, lam=args.lam, n_pairs=args.pairs,
                                n_points=args.samples, seed=args.seed)
    print(json.dumps(report, indent=2))
    if args.out:
        _write_json(Path(args.out) / "rep_check.json", report)
    if not ok:
        print(f"FAILED checks: {', '.join(report['failed'])}", file=sys.stderr)
    return 0 if ok else 1


def cmd_assemble(args):
    cfg = _apply_overrides(load_config(args.config), args)
    try:
        grid = cfg.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rng = np.random.default_rng(cfg.seed)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = ["sos", "expanded"] if cfg.assembly == "both" else [cfg.assembly]
    doc = {"config": cfg.to_dict(), "matrices": {}}
    ok = True
    for name in names:
        mat = ASSEMBLERS[name](grid)
        sym = mat.symmetry_defect()
        entry = {"size": mat.shape[0], "nnz": mat.nnz,
                 "max_row_nnz": int(mat.row_nnz().max()),
                 "symmetry_defect": sym}
        if name == "sos":
            worst = 0.0
            for _ in range(20):
                v = rng.standard_normal(grid.size)
                worst = min(worst, float(v @ mat.matvec(v)) / float(v @ v))
            entry["min_rayleigh_probe"] = worst
            ok &= worst >= -1e-12
        ok &= sym == 0.0
        doc["matrices"][name] = entry
        if cfg.export_matrix or args.export_matrix:
            suffix = f"matrix_{name}.mtx" if len(names) > 1 else "matrix.mtx"
            write_matrix_market(out / suffix, mat, symmetric=True)
    _write_json(out / "assemble_report.json", doc)
    print(json.dumps(doc["matrices"], indent=2))
    return 0 if ok else 1


def cmd_solve(args):
    cfg = _apply_overrides(load_config(args.config), args)
    try:
        ok, artifacts = solve_pipeline(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(artifacts["summary"])
    return 0 if ok else 1


def cmd_analyze(args):
    run_dir = Path(args.run_dir)
    path = run_dir / "eigenvalues.csv"
    if not path.exists():
        print(f"error: {path} not found", file=sys.stderr)
        return 2
    values, masses = [], []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            values.append(float(row["value"]))
            masses.append(float(row["boundary_mass"]))
    order = np.argsort(values)
    values = np.asarray(values)[order]
    masses = np.asarray(masses)[order]
    accepted = values[masses <= args.mass_threshold]
    doc = {"count": len(values), "accepted": int(accepted.size),
           "mass_threshold": args.mass_threshold,
           "skip": args.skip, "use": args.use}
    code = 0
    try:
        from .analysis import fit_counting_exponent, fit_eigenvalue_exponent
        bc, cd = fit_counting_exponent(accepted, args.skip, args.use, n=args.n)
        bm, md = fit_eigenvalue_exponent(accepted, args.skip, args.use, n=args.n)
        doc["beta_count"] = bc
        doc["beta_mag"] = bm
        doc["count_fit"] = cd.__dict__
        doc["mag_fit"] = md.__dict__
    except ValueError as exc:
        doc["error"] = str(exc)
        code = 1
    print(json.dumps(doc, indent=2, default=str))
    if args.out:
        _write_json(Path(args.out) / "analyze_report.json",
                    json.loads(json.dumps(doc, default=str)))
    return code


def cmd_full_run(args):
    cfg = _apply_overrides(load_config(args.config), args)
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out_dir)
    alg_ok, alg_report = run_algebra_checks(n=cfg.n, seed=cfg.seed)
    rep_ok, rep_report = run_rep_checks(n=cfg.n, lam=cfg.lam,
                                        n_pairs=args.pairs,
                                        n_points=args.samples, seed=cfg.seed)
    _write_json(out / "algebra_check.json", alg_report)
    _write_json(out / "rep_check.json", rep_report)
    print(f"algebra-check: {'pass' if alg_ok else 'FAIL'}")
    print(f"rep-check:     {'pass' if rep_ok else 'FAIL'}")
    try:
        solve_ok, artifacts = solve_pipeline(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(artifacts["summary"])
    return 0 if (alg_ok and rep_ok and solve_ok) else 1


def _add_common_solve_flags(p):
    p.add_argument("--config", help="JSON config path, or 'reference'")
    p.add_argument("--n", type=int, help="Heisenberg index n")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="representation parameter")
    p.add_argument("--grid", help="interior counts, e.g. 48,48,48")
    p.add_argument("--extent", help="half extents, e.g. 6,6,6")
    p.add_argument("--num-eigs", type=int, help="requested eigenpair count")
    p.add_argument("--max-subspace", type=int,
                   help="Lanczos storage cap (default max(3k, k+50))")
    p.add_argument("--tol", type=float, help="residual tolerance")
    p.add_argument("--seed", type=int, help="global seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--assembly", choices=["sos", "expanded", "both"])
    p.add_argument("--export-matrix", action="store_true")
    p.add_argument("--export-vectors", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="heisenlab",
        description="spectral laboratory for the harmonic oscillator "
                    "on the Heisenberg group")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("algebra-check", help="exact Lie algebra identities")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--out")
    p.add_argument("--corrupt", action="store_true",
                   help="negative control: corrupt one structure constant")
    p.set_defaults(func=cmd_algebra_check)

    p = sub.add_parser("rep-check", help="representation identities")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rep_check)

    p = sub.add_parser("assemble", help="build and audit the matrices")
    _add_common_solve_flags(p)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("solve", help="full spectral pipeline")
    _add_common_solve_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("analyze", help="refit a previous run's eigenvalues")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--mass-threshold", type=float, default=1e-4)
    p.add_argument("--skip", type=int, default=10)
    p.add_argument("--use", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("full-run", help="algebra-check + rep-check + solve")
    _add_common_solve_flags(p)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_full_run)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
