"""Kernels, Gram matrices, and the transformed dual matrix used by ODM-L.

The RBF kernel is exp(-||x - z||^2 / (2 w^2)) with width w > 0.
"""

from dataclasses import dataclass

import numpy as np


class LinearSolveError(RuntimeError):
    """A linear system could not be solved reliably."""


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters: kind is 'linear' or 'rbf'."""

    kind: str
    width: float = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf":
            if self.width is None or not self.width > 0:
                raise ValueError("rbf kernel needs width > 0")
        elif self.width is not None:
            raise ValueError("linear kernel takes no width")


def kernel_eval(spec, x, z):
    """k(x, z) for two SparseVectors."""
    common, ix, iz = np.intersect1d(x.indices, z.indices, return_indices=True)
    dot = float(x.values[ix] @ z.values[iz])
    if spec.kind == "linear":
        return dot
    sq = float(x.values @ x.values) + float(z.values @ z.values) - 2.0 * dot
    return float(np.exp(-max(sq, 0.0) / (2.0 * spec.width**2)))


def _linear_gram(X):
    G = (X @ X.T).toarray()
    return np.asarray(G, dtype=np.float64)


def gram(spec, dataset):
    """Dense m x m Gram matrix; exactly symmetric, RBF diagonal exactly 1."""
    X = dataset.to_csr()
    G = _linear_gram(X)
    if spec.kind == "rbf":
        sq = G.diagonal().copy()
        D2 = sq[:, None] + sq[None, :] - 2.0 * G
        np.maximum(D2, 0.0, out=D2)
        G = np.exp(-D2 / (2.0 * spec.width**2))
        np.fill_diagonal(G, 1.0)
    upper = np.triu(G)
    return upper + np.triu(G, 1).T


def cross_gram(spec, left, right, dim):
    """Kernel values between two instance lists, shape (len(left), len(right)).

    ``dim`` must cover the feature indices of both sides so that features
    unseen at training time still enter RBF distances.
    """
    from .data import Dataset

    nl, nr = len(left), len(right)
    if nl == 0 or nr == 0:
        return np.zeros((nl, nr))
    L = Dataset(list(left), np.ones(nl, dtype=np.int64), dim=dim).to_csr(dim)
    R = Dataset(list(right), np.ones(nr, dtype=np.int64), dim=dim).to_csr(dim)
    G = np.asarray((L @ R.T).toarray(), dtype=np.float64)
    if spec.kind == "rbf":
        sl = np.asarray(L.multiply(L).sum(axis=1)).ravel()
        sr = np.asarray(R.multiply(R).sum(axis=1)).ravel()
        D2 = sl[:, None] + sr[None, :] - 2.0 * G
        np.maximum(D2, 0.0, out=D2)
        G = np.exp(-D2 / (2.0 * spec.width**2))
    return G


def avg_pairwise_distance(dataset, cap=1000, seed=0):
    """Mean Euclidean distance over unordered pairs of a size-``cap`` subsample.

    The usual scale reference for picking RBF width grids.
    """
    m = len(dataset)
    if m < 2:
        raise ValueError("need at least two instances")
    if m > cap:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(m, size=cap, replace=False))
        dataset = dataset.subset(pick)
        m = cap
    G = _linear_gram(dataset.to_csr())
    sq = G.diagonal()
    D2 = sq[:, None] + sq[None, :] - 2.0 * G
    np.maximum(D2, 0.0, out=D2)
    iu = np.triu_indices(m, k=1)
    return float(np.mean(np.sqrt(D2[iu])))


def solve_linear_system(M, B):
    """Solve M X = B, raising LinearSolveError when M is singular or the
    solution fails a residual check at 1e-9 * ||B||_inf."""
    M = np.asarray(M, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    try:
        X = np.linalg.solve(M, B)
    except np.linalg.LinAlgError as e:
        raise LinearSolveError(
            f"linear solve failed ({e}); condition estimate {_cond_estimate(M):.3e}"
        ) from None
    scale = np.max(np.abs(B)) if B.size else 0.0
    resid = np.max(np.abs(M @ X - B)) if B.size else 0.0
    if not np.isfinite(resid) or resid > 1e-9 * scale:
        raise LinearSolveError(
            f"linear solve residual {resid:.3e} exceeds tolerance; "
            f"condition estimate {_cond_estimate(M):.3e}"
        )
    return X


def _cond_estimate(M):
    try:
        return float(np.linalg.cond(M, 1))
    except np.linalg.LinAlgError:
        return np.inf


@dataclass(frozen=True)
class OdmlDualMatrix:
    """Dual quadratic term H = Y G (I + A G)^-1 Y for ODM-L, with the pieces
    needed later to recover the expansion coefficients.

    A = 2 lam1 (m I - y y^T) / m^2 is the deviation-penalty matrix; at
    lam1 = 0 the construction short-circuits to H = Y G Y exactly.
    """

    H: np.ndarray
    G: np.ndarray
    y: np.ndarray
    lam1: float

    def middle_matrix(self):
        """I + A G, the system matrix for coefficient recovery."""
        m = self.y.shape[0]
        if self.lam1 == 0.0:
            return np.eye(m)
        A = (2.0 * self.lam1 / m**2) * (m * np.eye(m) - np.outer(self.y, self.y))
        return np.eye(m) + A @ self.G


def build_odml_dual_matrix(G, y, lam1):
    """Assemble the ODM-L dual quadratic term.

    Solves (I + A G)^T B^T = G^T column-wise rather than forming any inverse,
    then symmetrizes Y B Y as (H + H^T)/2 to wash out solver asymmetry.
    """
    y = np.asarray(y, dtype=np.float64)
    m = y.shape[0]
    if lam1 == 0.0:
        B = G
    else:
        A = (2.0 * lam1 / m**2) * (m * np.eye(m) - np.outer(y, y))
        M = np.eye(m) + A @ G
        B = solve_linear_system(M.T, G.T).T
    H = np.outer(y, y) * B
    H = 0.5 * (H + H.T)
    return OdmlDualMatrix(H=H, G=G, y=y, lam1=float(lam1))
