"""Smallest eigenpairs of sparse symmetric positive-definite matrices.

Strategy: Lanczos with full reorthogonalization applied to the inverse
operator w -> A^{-1} w, realized through conjugate gradients (shift 0).
The smallest eigenvalues of an ill-conditioned discrete operator become the
well-separated largest eigenvalues of the inverse, so the outer iteration
converges in O(k) steps and the work concentrates in the inner CG matvecs.

Every returned pair carries a residual certificate measured against the
original matrix A, re-verified by a direct matvec after extraction; vectors
are orthonormal to ~1e-12 thanks to the full reorthogonalization (two passes
of classical Gram-Schmidt per step, which also removes ghost copies that
would corrupt multiplicity counting).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal


class CgConvergenceError(RuntimeError):
    """CG ran out of iterations; carries the residual it achieved."""

    def __init__(self, achieved, iterations):
        super().__init__(
            f"CG failed to converge: relative residual {achieved:.3e} "
            f"after {iterations} iterations")
        self.achieved = achieved
        self.iterations = iterations


class IndefiniteOperatorError(RuntimeError):
    """Negative curvature p^T A p <= 0 encountered: A is not SPD."""


@dataclass
class SolverConfig:
    k: int
    tol: float = 1e-8
    max_subspace: int | None = None      # default max(3k, k+50), capped at N
    cg_tol: float = 1e-10
    cg_max_iter: int | None = None       # default 10*N
    seed: int = 0
    check_every: int = 10
    use_diag_precond: bool = True
    final_sweep: bool = True        # extra deflated pass against missed copies

    def validate(self, n):
        if not 0 < self.k < n:
            raise ValueError(f"need 0 < k < N, got k={self.k}, N={n}")
        if self.tol <= 0 or self.cg_tol <= 0:
            raise ValueError("tolerances must be positive")

    def subspace_cap(self, n):
        cap = self.max_subspace or max(3 * self.k, self.k + 50)
        return min(cap, n)


@dataclass
class EigenPair:
    value: float
    vector: np.ndarray
    residual: float


@dataclass
class EigenResult:
    pairs: list
    converged: bool
    message: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def values(self):
        return np.array([p.value for p in self.pairs])

    @property
    def vectors(self):
        return np.array([p.vector for p in self.pairs])

    @property
    def residuals(self):
        return np.array([p.residual for p in self.pairs])

    def __len__(self):
        return len(self.pairs)


def _cg(A, b, rel_tol, max_iter, inv_diag=None, counter=None):
    n = b.shape[0]
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n)
    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r if inv_diag is not None else r
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iter + 1):
        Ap = A.matvec(p)
        if counter is not None:
            counter[0] += 1
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise IndefiniteOperatorError(
                f"nonpositive curvature p^T A p = {pAp:.3e} at iteration {it}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rnorm = float(np.linalg.norm(r))
        if rnorm <= rel_tol * bnorm:
            return x
        z = inv_diag * r if inv_diag is not None else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise CgConvergenceError(rnorm / bnorm, max_iter)


def cg_solve(A, b, rel_tol=1e-10, max_iter=None, diag_precond=None):
    """Solve A x = b for SPD A to ||Ax-b|| <= rel_tol * ||b||.

    ``diag_precond`` optionally supplies diag(A) for Jacobi scaling (the only
    preconditioning this package uses); the stopping test is always on the
    true unpreconditioned residual.
    """
    b = np.asarray(b, dtype=np.float64)
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side contains non-finite entries")
    if max_iter is None:
        max_iter = 10 * b.shape[0]
    inv_diag = None
    if diag_precond is not None:
        diag_precond = np.asarray(diag_precond, dtype=np.float64)
        if np.any(diag_precond <= 0):
            raise ValueError("Jacobi preconditioning needs a positive diagonal")
        inv_diag = 1.0 / diag_precond
    return _cg(A, b, rel_tol, max_iter, inv_diag)


def _orthonormalize_against(w, V, j):
    """Two classical Gram-Schmidt passes of w against the rows V[:j]."""
    for _ in range(2):
        coefs = V[:j] @ w
        w -= V[:j].T @ coefs
    return w


def smallest_eigenpairs(A, cfg: SolverConfig) -> EigenResult:
    """k smallest eigenpairs of SPD A with certified residuals.

    Lanczos on the inverse operator with full reorthogonalization, plus
    locking: Ritz pairs whose true A-residual passes the certificate are
    locked, the recurrence restarts against the locked subspace, and hidden
    copies of degenerate eigenvalues surface as leading directions of the
    deflated operator instead of having to regrow from roundoff noise (the
    oscillator spectrum is full of exact multiplets, so this matters for
    counting with multiplicities).

    Returns pairs sorted by value; each satisfies
    ||A v - value v|| <= tol * max(1, value).  If the storage cap or the
    work budget is exhausted first, the converged prefix is returned with a
    diagnostic message.
    """
    n = A.shape[0]
    cfg.validate(n)
    m_max = cfg.subspace_cap(n)
    cg_max = cfg.cg_max_iter or 10 * n
    # Inner solves must outresolve the requested residuals or the true
    # residuals stall at the CG accuracy floor (which scales with the
    # condition number).  Start with two orders of headroom and tighten by
    # feedback whenever certification fails despite converged bounds.
    cg_tol = min(cfg.cg_tol, 5e-3 * cfg.tol)
    rng = np.random.default_rng(cfg.seed)

    inv_diag = None
    if cfg.use_diag_precond:
        diag = A.diagonal()
        if np.all(diag > 0):
            inv_diag = 1.0 / diag

    V = np.empty((m_max + 1, n))     # rows: locked pairs, then active block
    alphas = np.empty(m_max + 1)
    betas = np.zeros(m_max + 1)
    mv_count = [0]
    locked = []                      # EigenPair, vector stored in V[:n_locked]
    n_locked = 0
    steps_total = 0
    # Cap on total Lanczos steps across restarts; generous because copies of
    # high multiplets near the top of the window converge slowly under
    # shift-invert at sigma = 0.
    budget = max(6 * m_max, 30 * cfg.k)
    gate_scale = 1.0
    stats = {}

    def start_block():
        nonlocal j_active, beta_prev
        fresh = rng.standard_normal(n)
        fresh = _orthonormalize_against(fresh, V, n_locked)
        fnorm = float(np.linalg.norm(fresh))
        if fnorm <= 1e-8:
            return False
        V[n_locked] = fresh / fnorm
        j_active = 0
        beta_prev = 0.0
        return True

    def certify(candidates):
        """True-residual verification; returns passing pairs + worst ratio."""
        good = []
        worst_ratio = 0.0
        for u in candidates:
            Au = A.matvec(u)
            mv_count[0] += 1
            lam = float(u @ Au)
            res = float(np.linalg.norm(Au - lam * u))
            threshold = cfg.tol * max(1.0, abs(lam))
            worst_ratio = max(worst_ratio, res / threshold)
            if res <= threshold:
                good.append(EigenPair(lam, u, res))
        return good, worst_ratio

    def extract_ready(ready_idx, theta, Y):
        """Ritz vectors for the selected T eigenpairs of the active block."""
        U = Y[:, ready_idx].T @ V[n_locked:n_locked + j_active]
        norms = np.linalg.norm(U, axis=1)
        if norms.size:
            U /= norms[:, None]
        return certify(U)

    def tighten_cg(fail_ratio):
        """Certification failed with converged bounds: the CG floor is the
        limiting error source, so push it down by the observed shortfall."""
        nonlocal cg_tol
        cg_tol = max(cg_tol / max(10.0, 2.0 * fail_ratio), 1e-15)

    def lock(pairs):
        nonlocal n_locked
        for p in pairs:
            if n_locked >= m_max:
                break
            V[n_locked] = p.vector
            p.vector = V[n_locked]
            locked.append(p)
            n_locked += 1

    def finish():
        locked.sort(key=lambda p: p.value)
        pairs = locked[:cfg.k]
        converged = len(pairs) == cfg.k
        stats.update({"lanczos_steps": steps_total, "matvecs": mv_count[0],
                      "restarts": restarts, "locked": len(locked)})
        msg = ("" if converged else
               f"work budget exhausted with {len(pairs)} of {cfg.k} pairs "
               f"meeting the residual bound")
        return EigenResult(pairs, converged, message=msg, stats=stats)

    j_active = 0
    beta_prev = 0.0
    block_alive = start_block()
    restarts = 0
    stall_checks = 0
    last_ready = -1
    dead_blocks = 0  # consecutive full blocks that certified nothing

    while block_alive and n_locked < cfg.k and steps_total < budget:
        base = n_locked
        if base + j_active >= m_max:
            # Storage exhausted: lock whatever certifies, then restart.
            if j_active == 0:
                break
            theta, Y = eigh_tridiagonal(alphas[:j_active],
                                        betas[:j_active - 1])
            order = np.argsort(theta)[::-1][:cfg.k - n_locked]
            good, fail_ratio = extract_ready(order, theta, Y)
            if good:
                lock(good)
                dead_blocks = 0
            else:
                dead_blocks += 1
                if dead_blocks >= 2:
                    break  # two full blocks certified nothing: stop honestly
                tighten_cg(fail_ratio)
            restarts += 1
            block_alive = start_block()
            stall_checks = 0
            last_ready = -1
            continue

        j = j_active
        w = _cg(A, V[base + j], cg_tol, cg_max, inv_diag, mv_count)
        alphas[j] = float(V[base + j] @ w)
        w -= alphas[j] * V[base + j]
        if j > 0:
            w -= beta_prev * V[base + j - 1]
        w = _orthonormalize_against(w, V, base + j + 1)
        beta = float(np.linalg.norm(w))
        steps_total += 1
        j_active = j + 1
        if beta <= 1e-13 * max(1.0, abs(alphas[j])):
            # Invariant subspace of the deflated operator: certify and restart.
            theta, Y = eigh_tridiagonal(alphas[:j_active],
                                        betas[:j_active - 1])
            order = np.argsort(theta)[::-1][:cfg.k - n_locked]
            good, _ = extract_ready(order, theta, Y)
            lock(good)
            restarts += 1
            block_alive = start_block()
            stall_checks = 0
            last_ready = -1
            continue
        betas[j_active - 1] = beta
        V[base + j_active] = w / beta
        beta_prev = beta

        if j_active % cfg.check_every != 0 and base + j_active < m_max:
            continue
        want = cfg.k - n_locked
        theta, Y = eigh_tridiagonal(alphas[:j_active], betas[:j_active - 1])
        order = np.argsort(theta)[::-1][:want]
        gate = np.maximum(
            gate_scale * 0.1 * cfg.tol * np.abs(theta[order]), 1e-15)
        ready_mask = np.abs(beta * Y[-1, order]) <= gate
        ready = int(ready_mask.sum())
        # Restart only for a worthwhile batch: every restart throws away the
        # partially converged remainder of the block.
        min_batch = min(want, max(8, want // 8))
        stalled = stall_checks >= 5 and ready >= min_batch
        if ready >= want or stalled:
            good, fail_ratio = extract_ready(order[ready_mask], theta, Y)
            if good:
                dead_blocks = 0
                lock(good)
                if n_locked >= cfg.k:
                    break
                restarts += 1
                block_alive = start_block()
                stall_checks = 0
                last_ready = -1
            else:
                # Bounds converged but true residuals did not: CG floor.
                tighten_cg(fail_ratio)
                gate_scale *= 0.3
                stall_checks = 0
            continue
        stall_checks = stall_checks + 1 if ready <= last_ready else 0
        last_ready = max(last_ready, ready)

    if n_locked >= cfg.k and cfg.final_sweep and steps_total < budget:
        # Safety sweep: one short deflated pass to catch a straggler copy
        # that would belong among the k smallest.
        locked.sort(key=lambda p: p.value)
        cutoff = locked[cfg.k - 1].value
        if start_block():
            restarts += 1
            found = _sweep_for_stragglers(
                A, V, n_locked, cfg, cg_tol, cg_max, inv_diag, mv_count,
                rng, cutoff)
            steps_total += found["steps"]
            for p in found["pairs"]:
                if p.value < cutoff:
                    lock([p])
    return finish()


def _sweep_for_stragglers(A, V, n_locked, cfg, cg_tol, cg_max, inv_diag,
                          mv_count, rng, cutoff, max_steps=25):
    """Short deflated Lanczos pass; returns certified pairs below cutoff."""
    alphas = np.empty(max_steps)
    betas = np.zeros(max_steps)
    base = n_locked
    beta_prev = 0.0
    j = 0
    cap = min(max_steps, V.shape[0] - base - 1)
    while j < cap:
        w = _cg(A, V[base + j], cg_tol, cg_max, inv_diag, mv_count)
        alphas[j] = float(V[base + j] @ w)
        w -= alphas[j] * V[base + j]
        if j > 0:
            w -= beta_prev * V[base + j - 1]
        w = _orthonormalize_against(w, V, base + j + 1)
        beta = float(np.linalg.norm(w))
        j += 1
        if beta <= 1e-13 * max(1.0, abs(alphas[j - 1])):
            break
        betas[j - 1] = beta
        V[base + j] = w / beta
        beta_prev = beta
    if j == 0:
        return {"pairs": [], "steps": 0}
    theta, Y = eigh_tridiagonal(alphas[:j], betas[:j - 1])
    order = np.argsort(theta)[::-1][:5]
    lam_est = 1.0 / np.maximum(np.abs(theta[order]), 1e-300)
    keep = [i for i, lam in zip(order, lam_est) if lam < cutoff * (1 + 1e-10)]
    if not keep:
        return {"pairs": [], "steps": j}
    U = Y[:, keep].T @ V[base:base + j]
    U /= np.linalg.norm(U, axis=1)[:, None]
    good = []
    for u in U:
        Au = A.matvec(u)
        mv_count[0] += 1
        lam = float(u @ Au)
        res = float(np.linalg.norm(Au - lam * u))
        if res <= cfg.tol * max(1.0, abs(lam)) and lam < cutoff:
            good.append(EigenPair(lam, u.copy(), res))
    return {"pairs": good, "steps": j}
