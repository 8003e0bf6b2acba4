"""Margin-distribution reports and leave-one-out error bounds.

Margins are y_i times the decision value.  The normalized variants divide
by the weight norm: sqrt(theta^T G theta) for kernel expansions, the
Euclidean norm for linear models.  Bounds come from the dual solution
alone, no retraining; loo_exact does the m retrainings for comparison.
"""

from dataclasses import dataclass

import numpy as np

from .duals import TrainedModel, decision_function
from .kernels import cross_gram
from .linear import LinearModel, decision_function_linear


@dataclass(frozen=True)
class MarginReport:
    """Raw and normalized margins plus summary statistics.

    ``curve`` is the empirical CDF of the normalized margins (raw margins
    when the weight norm vanishes, see ``zero_norm``): column 0 holds the
    sorted distinct values, column 1 the cumulative frequencies, ending
    exactly at 1.
    """

    margins: np.ndarray
    normalized_margins: np.ndarray
    mean: float
    variance: float
    curve: np.ndarray
    weight_norm: float
    zero_norm: bool


def _weight_norm(model):
    if isinstance(model, LinearModel):
        return float(np.linalg.norm(model.w))
    K = cross_gram(model.kernel, model.support_vectors, model.support_vectors, model.dim)
    sq = float(model.theta @ K @ model.theta)
    return float(np.sqrt(max(sq, 0.0)))


def margin_report(model, dataset):
    """Margin statistics of a trained model over a labelled dataset."""
    if isinstance(model, LinearModel):
        decisions = decision_function_linear(model, dataset.instances)
    else:
        decisions = decision_function(model, dataset.instances)
    margins = dataset.labels * decisions
    norm = _weight_norm(model)
    zero = norm == 0.0
    normalized = None if zero else margins / norm
    base = margins if zero else normalized
    values, counts = np.unique(base, return_counts=True)
    cum = np.cumsum(counts) / len(dataset)
    return MarginReport(
        margins=margins,
        normalized_margins=normalized,
        mean=float(margins.mean()),
        variance=float(margins.var()),
        curve=np.column_stack([values, cum]),
        weight_norm=norm,
        zero_norm=zero,
    )


def write_margin_curve(report, fh):
    """Write the cumulative margin curve as CSV (12 significant digits)."""
    fh.write("margin,cumulative_frequency\n")
    for v, c in report.curve:
        fh.write(f"{v:.12g},{c:.12g}\n")


@dataclass(frozen=True)
class LooBoundReport:
    """Upper bound on the leave-one-out error rate with its breakdown.

    ``terms`` maps each contribution to its raw value and ``counts`` gives
    the index-set sizes; bound_value = max(0, sum(terms)) / m.
    """

    variant: str
    bound_value: float
    terms: dict
    counts: dict
    m: int


def loo_bound_odml(alpha, dual_diag, C, m):
    """First-order bound: interior dual variables weighted by the dual
    diagonal, plus one per variable at the box cap.

    Box membership uses a tolerance of 1e-8 relative to the cap C/m.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    cap = C / m
    eps = 1e-8 * cap
    at_cap = alpha >= cap - eps
    interior = (alpha > eps) & ~at_cap
    terms = {
        "interior": float(np.sum(alpha[interior] * np.asarray(dual_diag)[interior])),
        "at_cap": float(np.count_nonzero(at_cap)),
    }
    counts = {"interior": int(np.count_nonzero(interior)), "at_cap": int(np.count_nonzero(at_cap))}
    total = sum(terms.values())
    return LooBoundReport("odml", max(total, 0.0) / m, terms, counts, m)


def loo_bound_odm(alpha, self_kernel, params, m):
    """Second-order bound from the stacked dual solution.

    Active lower-side variables contribute zeta_i (k(x_i,x_i) + m/2C1),
    active upper-side ones beta_i (k(x_i,x_i) + m/2C2), and the band adds
    D times the difference of the two activity counts.  Activity means
    alpha above 1e-12 relative to the largest dual value.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape[0] != 2 * m:
        raise ValueError("expected a stacked dual solution of length 2m")
    self_kernel = np.asarray(self_kernel, dtype=np.float64)
    zeta, beta = alpha[:m], alpha[m:]
    thr = 1e-12 * max(1.0, float(alpha.max(initial=0.0)))
    lo = zeta > thr
    hi = beta > thr
    terms = {
        "below_band": float(np.sum(zeta[lo] * (self_kernel[lo] + m / (2.0 * params.C1)))),
        "above_band": float(np.sum(beta[hi] * (self_kernel[hi] + m / (2.0 * params.C2)))),
        "band": float(params.D * (np.count_nonzero(lo) - np.count_nonzero(hi))),
    }
    counts = {"below_band": int(np.count_nonzero(lo)), "above_band": int(np.count_nonzero(hi))}
    total = sum(terms.values())
    return LooBoundReport("odm", max(total, 0.0) / m, terms, counts, m)


def loo_bound(model):
    """Bound for a TrainedModel that kept its raw dual solution."""
    if not isinstance(model, TrainedModel):
        raise TypeError("leave-one-out bounds need a kernel model")
    if model.alpha is None:
        raise ValueError(
            "model lacks the raw dual solution; retrain with keep_alpha (--keep-alpha)"
        )
    m = model.n_train
    if model.variant == "odm":
        return loo_bound_odm(model.alpha, model.self_kernel, model.params, m)
    return loo_bound_odml(model.alpha, model.dual_diag, model.params.C, m)


def loo_exact(dataset, trainer):
    """Exact leave-one-out error count: retrain on each m-1 subset.

    ``trainer`` maps a Dataset to a classifier callable (instance -> label)
    and must apply the exact hyperparameters under study.  Any retraining
    failure aborts with the offending index in the message.
    """
    errors = 0
    for i in range(len(dataset)):
        rest = dataset.without(i)
        try:
            classify = trainer(rest)
        except Exception as e:
            raise RuntimeError(f"leave-one-out retraining failed at index {i}: {e}") from e
        if classify(dataset.instances[i]) != dataset.labels[i]:
            errors += 1
    return errors
