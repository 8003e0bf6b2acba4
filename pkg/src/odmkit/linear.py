"""Primal linear-model training with stochastic variance-reduced gradients.

Works on the unconstrained primal objectives of the two margin-distribution
variants (slack variables eliminated into hinge / squared-hinge forms).
The stochastic gradients are unbiased: averaging them over all index
choices reproduces the full (sub)gradient exactly.  For the first-order
variant the hinge makes the objective nonsmooth, so running SVRG on it is
a heuristic; models record that in their ``heuristic`` field.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .data import apply_normalizer, fit_normalizer
from .duals import OdmlParams, OdmParams, SvmParams


def _as_csr(X):
    if sparse.issparse(X):
        return X.tocsr()
    return sparse.csr_matrix(np.atleast_2d(np.asarray(X, dtype=np.float64)))


def _row(X, i):
    lo, hi = X.indptr[i], X.indptr[i + 1]
    return X.indices[lo:hi], X.data[lo:hi]


def objective_odml_linear(w, X, y, params):
    """Regularizer + margin-statistics terms + averaged hinge."""
    X = _as_csr(X)
    m = X.shape[0]
    s = X @ w
    ys = float(y @ s)
    val = 0.5 * float(w @ w)
    val += (params.lam1 / m) * float(s @ s) - (params.lam1 / m**2) * ys**2
    val -= (params.lam2 / m) * ys
    val += (params.C / m) * float(np.sum(np.maximum(0.0, 1.0 - y * s)))
    return val


def objective_odm_linear(w, X, y, params):
    """Regularizer + averaged squared slacks outside the [1-D, 1+D] band."""
    X = _as_csr(X)
    m = X.shape[0]
    marg = y * (X @ w)
    lo = np.maximum(0.0, (1.0 - params.D) - marg)
    hi = np.maximum(0.0, marg - (1.0 + params.D))
    return (
        0.5 * float(w @ w)
        + (params.C1 / m) * float(lo @ lo)
        + (params.C2 / m) * float(hi @ hi)
    )


def full_gradient_odml(w, X, y, params):
    """Subgradient of the first-order objective; the hinge uses the
    one-sided rule: instances with margin strictly below 1 contribute."""
    X = _as_csr(X)
    m = X.shape[0]
    s = X @ w
    Xty = X.T @ y
    g = w + (2.0 * params.lam1 / m) * (X.T @ s)
    g -= (2.0 * params.lam1 / m**2) * float(y @ s) * Xty
    g -= (params.lam2 / m) * Xty
    active = (y * s) < 1.0
    if np.any(active):
        g -= (params.C / m) * (X.T @ (y * active))
    return g


def full_gradient_odm(w, X, y, params):
    X = _as_csr(X)
    m = X.shape[0]
    s = X @ w
    marg = y * s
    g = w.copy()
    lo = marg < (1.0 - params.D)
    hi = marg > (1.0 + params.D)
    if np.any(lo):
        g += (2.0 * params.C1 / m) * (X.T @ ((marg + params.D - 1.0) * y * lo))
    if np.any(hi):
        g += (2.0 * params.C2 / m) * (X.T @ ((marg - params.D - 1.0) * y * hi))
    return g


def stoch_grad_odml(w, X, y, params, i, j):
    """Two-sample stochastic gradient; i and j must be drawn independently.

    Every data-dependent term is supported on instance i, so the result is
    w plus a single scaled copy of x_i.
    """
    X = _as_csr(X)
    cols_i, vals_i = _row(X, i)
    cols_j, vals_j = _row(X, j)
    si = float(vals_i @ w[cols_i])
    sj = float(vals_j @ w[cols_j])
    coef = 2.0 * params.lam1 * si
    coef -= 2.0 * params.lam1 * y[i] * y[j] * sj
    coef -= params.lam2 * y[i]
    if y[i] * si < 1.0:
        coef -= params.C * y[i]
    g = w.copy()
    g[cols_i] += coef * vals_i
    return g


def stoch_grad_odm(w, X, y, params, i):
    X = _as_csr(X)
    cols, vals = _row(X, i)
    si = float(vals @ w[cols])
    marg = y[i] * si
    coef = 0.0
    if marg < 1.0 - params.D:
        coef += 2.0 * params.C1 * (marg + params.D - 1.0) * y[i]
    elif marg > 1.0 + params.D:
        coef += 2.0 * params.C2 * (marg - params.D - 1.0) * y[i]
    g = w.copy()
    g[cols] += coef * vals
    return g


@dataclass(frozen=True)
class SvrgOptions:
    """eta is the fixed step size; epoch_length defaults to m; the snapshot
    rule picks the next reference point: 'random_iterate' (a uniformly
    random inner iterate) or 'last_iterate'."""

    eta: float = 0.01
    stages: int = 20
    epoch_length: int = None
    seed: int = 0
    snapshot_rule: str = "random_iterate"

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.stages < 1:
            raise ValueError("stages must be at least 1")
        if self.epoch_length is not None and self.epoch_length < 1:
            raise ValueError("epoch_length must be at least 1")
        if self.snapshot_rule not in ("random_iterate", "last_iterate"):
            raise ValueError(f"unknown snapshot rule {self.snapshot_rule!r}")


@dataclass
class LinearModel:
    """Dense-weight linear classifier trained in the primal."""

    variant: str
    params: object
    w: np.ndarray
    normalizer: object
    dim: int
    objective: float
    stages_run: int
    heuristic: bool = False

    def transform(self, instances):
        if self.normalizer is None:
            return list(instances)
        return [self.normalizer.transform_one(x) for x in instances]


def decision_function_linear(model, instances):
    """w . z per instance; feature indices beyond the model dim are ignored."""
    out = np.empty(len(instances))
    for k, x in enumerate(model.transform(instances)):
        keep = x.indices <= model.dim
        out[k] = float(x.values[keep] @ model.w[x.indices[keep] - 1])
    return out


def predict_linear(model, x):
    d = float(decision_function_linear(model, [x])[0])
    return (1 if d >= 0.0 else -1), d


def svrg_train(dataset, variant, params, options=None, normalize=True):
    """Train a linear model by SVRG.

    Per stage: full gradient at the reference point, then epoch_length
    corrected stochastic steps from it; the next reference is a random
    inner iterate (default) or the last one.  The RNG is consumed in a
    fixed documented order (snapshot index first when applicable, then the
    per-step sample indices), so a seed pins the whole trajectory.  If the
    objective at a reference point ever exceeds 1e6 times its starting
    value or turns non-finite, training aborts with advice to lower eta.
    """
    if options is None:
        options = SvrgOptions()
    if variant == "svm":
        if not isinstance(params, SvmParams):
            raise TypeError("svm variant takes SvmParams")
        grad_params = OdmlParams(params.C, 0.0, 0.0)
    elif variant == "odml":
        if not isinstance(params, OdmlParams):
            raise TypeError("odml variant takes OdmlParams")
        grad_params = params
    elif variant == "odm":
        if not isinstance(params, OdmParams):
            raise TypeError("odm variant takes OdmParams")
        grad_params = params
    else:
        raise ValueError(f"unknown variant {variant!r}")
    first_order = variant in ("svm", "odml")

    if len(dataset) < 1:
        raise ValueError("training data is empty")
    normalizer = fit_normalizer(dataset) if normalize else None
    work = apply_normalizer(normalizer, dataset) if normalize else dataset
    X = work.to_csr()
    y = work.labels.astype(np.float64)
    m = X.shape[0]
    L = options.epoch_length if options.epoch_length is not None else m

    if first_order:
        objective = lambda w: objective_odml_linear(w, X, y, grad_params)
        full_grad = lambda w: full_gradient_odml(w, X, y, grad_params)
    else:
        objective = lambda w: objective_odm_linear(w, X, y, grad_params)
        full_grad = lambda w: full_gradient_odm(w, X, y, grad_params)

    rng = np.random.default_rng(options.seed)
    ref = np.zeros(work.dim)
    limit = 1e6 * max(objective(ref), 1e-12)

    for stage in range(1, options.stages + 1):
        mu = full_grad(ref)
        w = ref.copy()
        snap_at = rng.integers(1, L + 1) if options.snapshot_rule == "random_iterate" else L
        snapshot = None
        for t in range(1, L + 1):
            i = int(rng.integers(m))
            if first_order:
                j = int(rng.integers(m))
                v = stoch_grad_odml(w, X, y, grad_params, i, j)
                v -= stoch_grad_odml(ref, X, y, grad_params, i, j)
            else:
                v = stoch_grad_odm(w, X, y, grad_params, i)
                v -= stoch_grad_odm(ref, X, y, grad_params, i)
            v += mu
            w -= options.eta * v
            if t == snap_at:
                snapshot = w.copy()
        ref = snapshot
        obj = objective(ref)
        if not np.isfinite(obj) or obj > limit:
            raise ValueError(
                f"svrg diverged at stage {stage} (objective {obj:.3e}); try a smaller eta"
            )

    return LinearModel(
        variant=variant,
        params=params,
        w=ref,
        normalizer=normalizer,
        dim=work.dim,
        objective=obj,
        stages_run=options.stages,
        heuristic=first_order,
    )
