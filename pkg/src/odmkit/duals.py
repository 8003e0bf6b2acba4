"""Dual problems for SVM, ODM-L and ODM, and kernelized training on top of
the box-QP coordinate descent solver.

All three variants drop the bias term; decision functions are plain kernel
expansions sum_i theta_i k(x_i, z).  Emulate a bias, if wanted, by
augmenting the data with a constant feature (data.augment_constant).
"""

from dataclasses import dataclass

import numpy as np

from .boxqp import BoxQpProblem, SolverOptions, dcd_solve
from .data import apply_normalizer, fit_normalizer
from .kernels import build_odml_dual_matrix, cross_gram, gram, solve_linear_system

SUPPORT_CUTOFF = 1e-10


@dataclass(frozen=True)
class SvmParams:
    """Soft-margin SVM cost C (per-instance cap C/m in the dual)."""

    C: float

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")


@dataclass(frozen=True)
class OdmlParams:
    """First-order margin-statistics variant: cost C, deviation weight lam1,
    mean weight lam2.  lam1 = lam2 = 0 recovers the plain SVM."""

    C: float
    lam1: float
    lam2: float

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if self.lam1 < 0 or self.lam2 < 0:
            raise ValueError("lam1 and lam2 must be nonnegative")


@dataclass(frozen=True)
class OdmParams:
    """Second-order variant: squared-slack costs C1 (short side) and C2
    (long side), and half-width D of the zero-loss margin band [1-D, 1+D]."""

    C1: float
    C2: float
    D: float

    def __post_init__(self):
        if not (self.C1 > 0 and self.C2 > 0):
            raise ValueError("C1 and C2 must be positive")
        if self.D < 0:
            raise ValueError("D must be nonnegative")


def build_svm_dual(G, y, C):
    """Box QP for the no-bias soft-margin SVM: H = Y G Y, q = -1, u = C/m."""
    y = np.asarray(y, dtype=np.float64)
    m = y.shape[0]
    H = np.outer(y, y) * G
    return BoxQpProblem(H=H, q=-np.ones(m), u=np.full(m, C / m))


def build_odml_dual(G, y, params):
    """Box QP for ODM-L plus the dual-matrix bundle needed to recover theta.

    q = (lam2/m) H 1 - 1 and the box is [0, C/m]^m.
    """
    dm = build_odml_dual_matrix(G, y, params.lam1)
    m = len(y)
    q = (params.lam2 / m) * (dm.H @ np.ones(m)) - np.ones(m)
    problem = BoxQpProblem(H=dm.H, q=q, u=np.full(m, params.C / m))
    return problem, dm


def build_odm_dual(G, y, params):
    """Box QP (upper bounds +inf) for ODM over stacked variables [zeta; beta].

    The quadratic term couples the two blocks through Q = Y G Y and adds
    m/(2 C1), m/(2 C2) to the respective diagonals; the linear term is
    (D-1) on the zeta block and (D+1) on the beta block.
    """
    y = np.asarray(y, dtype=np.float64)
    m = y.shape[0]
    Q = np.outer(y, y) * G
    H = np.block(
        [
            [Q + (m / (2.0 * params.C1)) * np.eye(m), -Q],
            [-Q, Q + (m / (2.0 * params.C2)) * np.eye(m)],
        ]
    )
    q = np.concatenate([(params.D - 1.0) * np.ones(m), (params.D + 1.0) * np.ones(m)])
    return BoxQpProblem(H=H, q=q, u=np.full(2 * m, np.inf))


def recover_theta_odml(dm, lam2, alpha):
    """Expansion coefficients from an ODM-L dual solution.

    theta solves (I + A G) theta = Y (lam2/m + alpha); note theta is
    generally nonzero even at alpha = 0 once lam2 > 0.
    """
    m = dm.y.shape[0]
    v = dm.y * (lam2 / m + alpha)
    if dm.lam1 == 0.0:
        return v
    return solve_linear_system(dm.middle_matrix(), v)


def recover_theta_odm(alpha, y):
    """theta_i = y_i (zeta_i - beta_i) from the stacked ODM dual solution."""
    m = len(y)
    return np.asarray(y, dtype=np.float64) * (alpha[:m] - alpha[m:])


@dataclass
class TrainedModel:
    """A kernel expansion classifier produced by train_kernel.

    ``support_vectors`` hold the (already normalized) training instances
    with |theta_i| above SUPPORT_CUTOFF.  ``dual_diag`` / ``self_kernel``
    and ``alpha`` are populated only when training keeps the raw dual
    solution, and feed the leave-one-out bounds.
    """

    variant: str
    kernel: object
    params: object
    support_vectors: list
    theta: np.ndarray
    normalizer: object
    dim: int
    n_train: int
    converged: bool
    objective: float
    alpha: np.ndarray = None
    dual_diag: np.ndarray = None
    self_kernel: np.ndarray = None

    def transform(self, instances):
        if self.normalizer is None:
            return list(instances)
        return [self.normalizer.transform_one(x) for x in instances]


def decision_function(model, instances):
    """Decision values sum_i theta_i k(x_i, z) for a list of instances."""
    z = model.transform(instances)
    dim = max([model.dim] + [x.max_index for x in z])
    K = cross_gram(model.kernel, model.support_vectors, z, dim)
    return model.theta @ K


def predict(model, x):
    """(label, decision) for one instance; the boundary goes to +1."""
    d = float(decision_function(model, [x])[0])
    return (1 if d >= 0.0 else -1), d


def predict_labels(model, instances):
    d = decision_function(model, instances)
    return np.where(d >= 0.0, 1, -1).astype(np.int64)


def train_kernel(
    dataset,
    variant,
    kernel,
    params,
    options=None,
    normalize=True,
    keep_alpha=False,
):
    """Fit one of the three kernel variants with dual coordinate descent.

    Normalization (on by default) fits per-feature min/max on ``dataset``
    and bakes the map into the returned model.  A solver that exhausts its
    pass budget yields a usable model flagged converged=False.
    """
    if len(dataset) < 1:
        raise ValueError("training data is empty")
    if options is None:
        options = SolverOptions()

    normalizer = fit_normalizer(dataset) if normalize else None
    work = apply_normalizer(normalizer, dataset) if normalize else dataset
    y = work.labels.astype(np.float64)
    G = gram(kernel, work)

    dm = None
    if variant == "svm":
        if not isinstance(params, SvmParams):
            raise TypeError("svm variant takes SvmParams")
        problem = build_svm_dual(G, y, params.C)
    elif variant == "odml":
        if not isinstance(params, OdmlParams):
            raise TypeError("odml variant takes OdmlParams")
        problem, dm = build_odml_dual(G, y, params)
    elif variant == "odm":
        if not isinstance(params, OdmParams):
            raise TypeError("odm variant takes OdmParams")
        problem = build_odm_dual(G, y, params)
    else:
        raise ValueError(f"unknown variant {variant!r}")

    sol = dcd_solve(problem, options)

    if variant == "svm":
        theta = y * sol.alpha
    elif variant == "odml":
        theta = recover_theta_odml(dm, params.lam2, sol.alpha)
    else:
        theta = recover_theta_odm(sol.alpha, y)

    keep = np.abs(theta) > SUPPORT_CUTOFF
    model = TrainedModel(
        variant=variant,
        kernel=kernel,
        params=params,
        support_vectors=[work.instances[i] for i in np.flatnonzero(keep)],
        theta=theta[keep].copy(),
        normalizer=normalizer,
        dim=work.dim,
        n_train=len(dataset),
        converged=sol.converged,
        objective=sol.objective,
    )
    if keep_alpha:
        model.alpha = sol.alpha.copy()
        if variant == "odm":
            model.self_kernel = G.diagonal().copy()
        else:
            model.dual_diag = problem.H.diagonal().copy()
    return model
