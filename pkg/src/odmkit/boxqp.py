"""Dual coordinate descent for box-constrained quadratic programs.

Minimizes f(a) = 1/2 a^T H a + q^T a subject to 0 <= a_i <= u_i, where H is
symmetric and positive semidefinite and u_i may be +inf.  One coordinate is
updated at a time by exact minimization followed by clipping; the gradient
H a + q is maintained incrementally.  Convergence is declared when the
largest projected-gradient magnitude seen during a pass drops to the
tolerance.
"""

from dataclasses import dataclass, field

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap


_ZERO_CURVATURE = 1e-12


class UnboundedProblemError(RuntimeError):
    """A zero-curvature coordinate with negative gradient and no upper bound."""


@dataclass(frozen=True)
class BoxQpProblem:
    """Box-constrained QP data: H symmetric PSD, q linear term, u upper bounds."""

    H: np.ndarray
    q: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        H = np.ascontiguousarray(self.H, dtype=np.float64)
        q = np.ascontiguousarray(self.q, dtype=np.float64)
        u = np.ascontiguousarray(self.u, dtype=np.float64)
        n = q.shape[0]
        if H.shape != (n, n) or u.shape != (n,):
            raise ValueError("H must be n x n and u length n")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(q))):
            raise ValueError("H and q must be finite")
        asym = np.max(np.abs(H - H.T)) if n else 0.0
        scale = max(np.max(np.abs(H)) if n else 0.0, 1.0)
        if asym > 1e-12 * scale:
            raise ValueError("H must be symmetric")
        if np.any(np.isnan(u)) or np.any(u <= 0):
            raise ValueError("upper bounds must be positive (inf allowed)")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "u", u)

    @property
    def n(self):
        return self.q.shape[0]


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-6
    max_passes: int = 5000
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be at least 1")


@dataclass(frozen=True)
class QpSolution:
    alpha: np.ndarray
    objective: float
    passes_used: int
    converged: bool


def coordinate_update(alpha_i, g_i, h_ii, u_i):
    """New value for one coordinate: exact 1-d minimizer clipped to [0, u_i].

    Zero curvature (h_ii <= 1e-12) falls back to the sign of the gradient:
    positive sends the coordinate to 0, negative to u_i (an error when
    u_i is infinite), zero leaves it alone.
    """
    if h_ii <= _ZERO_CURVATURE:
        if g_i > 0.0:
            return 0.0
        if g_i < 0.0:
            if not np.isfinite(u_i):
                raise UnboundedProblemError(
                    "flat coordinate with negative gradient and no upper bound"
                )
            return float(u_i)
        return float(alpha_i)
    step = alpha_i - g_i / h_ii
    if step < 0.0:
        return 0.0
    if step > u_i:
        return float(u_i)
    return float(step)


def _pass_impl(H, u, alpha, g, order):
    """One sweep over ``order``; mutates alpha and g, returns (max_pg, bad).

    bad >= 0 flags an unbounded flat coordinate (see coordinate_update).
    """
    n = alpha.shape[0]
    max_pg = 0.0
    for t in range(order.shape[0]):
        i = order[t]
        gi = g[i]
        ai = alpha[i]
        ui = u[i]
        if ai <= 0.0:
            pg = gi if gi < 0.0 else 0.0
        elif ai >= ui:
            pg = gi if gi > 0.0 else 0.0
        else:
            pg = gi
        if pg < 0.0:
            pg = -pg
        if pg > max_pg:
            max_pg = pg
        hii = H[i, i]
        if hii <= _ZERO_CURVATURE:
            if gi > 0.0:
                new = 0.0
            elif gi < 0.0:
                if not np.isfinite(ui):
                    return max_pg, i
                new = ui
            else:
                new = ai
        else:
            new = ai - gi / hii
            if new < 0.0:
                new = 0.0
            elif new > ui:
                new = ui
        delta = new - ai
        if delta != 0.0:
            alpha[i] = new
            for k in range(n):
                g[k] += delta * H[i, k]
    return max_pg, -1


if _HAVE_NUMBA:
    _pass = njit(cache=True)(_pass_impl)
else:  # pragma: no cover
    _pass = _pass_impl


def qp_objective(problem, alpha):
    """1/2 a^T H a + q^T a."""
    alpha = np.asarray(alpha, dtype=np.float64)
    return float(0.5 * alpha @ (problem.H @ alpha) + problem.q @ alpha)


def dcd_solve(problem, options=None):
    """Run dual coordinate descent from alpha = 0.

    With shuffle=True each pass visits coordinates in a fresh seeded random
    permutation; otherwise sequentially.  Exhausting max_passes returns a
    solution flagged converged=False rather than raising.
    """
    if options is None:
        options = SolverOptions()
    n = problem.n
    alpha = np.zeros(n)
    g = problem.q.copy()
    rng = np.random.default_rng(options.seed)
    sequential = np.arange(n, dtype=np.int64)
    converged = False
    passes = 0
    for _ in range(options.max_passes):
        order = rng.permutation(n).astype(np.int64) if options.shuffle else sequential
        max_pg, bad = _pass(problem.H, problem.u, alpha, g, order)
        passes += 1
        if bad >= 0:
            raise UnboundedProblemError(
                f"flat coordinate {bad} with negative gradient and no upper bound"
            )
        if max_pg <= options.tolerance:
            converged = True
            break
    return QpSolution(
        alpha=alpha,
        objective=qp_objective(problem, alpha),
        passes_used=passes,
        converged=converged,
    )
