"""Exact t-SNE.

High-dimensional affinities use Gaussian kernels whose widths are bisected
per point to hit a target perplexity, computed on Euclidean or Mahalanobis
distances. Low-dimensional affinities use a Student-t kernel. The KL cost is
reported in bits; the gradient is that of the natural-log KL divergence, so
``gradient == ln(2) * d(kl_cost)/dY``.

Everything is O(N^2) and dense.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .embedding import Embedding
from .errors import CalibrationFailure, DivergenceError, SingularCovarianceError

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12
COV_REGULARIZATION = 1e-8
PERPLEXITY_TOL = 1e-4
MAX_BISECTIONS = 64
MAX_BRACKET_STEPS = 200
_ROW_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    learning_rate: float = 200.0
    iterations: int = 1000
    distance: str = "mahalanobis"
    seed: int = 0
    early_exaggeration: float = 4.0
    early_exaggeration_iters: int = 100
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    momentum_switch: int = 250
    init_std: float = 1e-4

    def __post_init__(self):
        if not self.perplexity > 0:
            raise ValueError("perplexity must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.distance not in ("euclidean", "mahalanobis"):
            raise ValueError(f"unknown distance {self.distance!r}")
        if self.early_exaggeration < 1:
            raise ValueError("early_exaggeration must be >= 1")
        if self.early_exaggeration_iters < 0:
            raise ValueError("early_exaggeration_iters must be >= 0")

    def plain(self) -> "TsneConfig":
        """Same config with early exaggeration and momentum switched off."""
        return replace(self, early_exaggeration=1.0, early_exaggeration_iters=0,
                       momentum_initial=0.0, momentum_final=0.0)

    def to_dict(self) -> dict:
        return asdict(self)


# distances -------------------------------------------------------------------

def _squared_euclidean(Z):
    n = Z.shape[0]
    out = np.empty((n, n))
    step = max(1, _ROW_CHUNK_ELEMS // max(1, n * Z.shape[1]))
    for lo in range(0, n, step):
        diff = Z[lo:lo + step, None, :] - Z[None, :, :]
        out[lo:lo + step] = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(out, 0.0)
    return out


def mahalanobis_whitener(X, covariance=None, regularization=COV_REGULARIZATION):
    """Linear map ``W`` such that ``|(x_i - x_j) W|`` is the Mahalanobis distance.

    With ``covariance=None`` the sample covariance is used. It is regularized
    as ``C + eps*trace(C)/F*I`` in per-feature standardized coordinates, which
    keeps distances invariant to rescaling individual features. Constant
    features contribute nothing and are dropped.
    """
    X = np.asarray(X, dtype=np.float64)
    F = X.shape[1]
    if covariance is None:
        scale = X.std(axis=0, ddof=1)
        live = scale > 0
        if not live.any():
            return np.zeros((F, 1))
        Xs = (X[:, live] - X[:, live].mean(axis=0)) / scale[live]
        C = np.atleast_2d(np.cov(Xs, rowvar=False))
    else:
        C = np.asarray(covariance, dtype=np.float64)
        scale = np.ones(F)
        live = np.ones(F, dtype=bool)
    k = C.shape[0]
    C = C + regularization * np.trace(C) / k * np.eye(k)
    evals, evecs = np.linalg.eigh(C)
    if not np.all(np.isfinite(evals)) or evals.min() <= 0:
        raise SingularCovarianceError(
            f"covariance is singular after regularization (min eigenvalue {evals.min():.3e})")
    W = np.zeros((F, k))
    W[live] = evecs / np.sqrt(evals) / scale[live][:, None]
    return W


def pairwise_distances(X, metric: str = "mahalanobis", *, covariance=None,
                       regularization: float = COV_REGULARIZATION, squared: bool = False) -> np.ndarray:
    """N x N distance matrix, symmetric with a zero diagonal."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need an N x F matrix with N >= 2")
    if metric == "euclidean":
        Z = X
    elif metric == "mahalanobis":
        Z = X @ mahalanobis_whitener(X, covariance, regularization)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    d2 = _squared_euclidean(Z)
    return d2 if squared else np.sqrt(d2)


# high-dimensional affinities ---------------------------------------------------

def _conditional_rows(d2, beta, mask):
    """Row-normalized ``exp(-beta_i d2_ij)`` over ``mask``; returns (P, entropy_bits)."""
    big = np.where(mask, d2, np.inf)
    shift = big.min(axis=1, keepdims=True)
    a = np.where(mask, -beta[:, None] * (d2 - shift), -np.inf)
    e = np.exp(a)
    s = e.sum(axis=1, keepdims=True)
    P = e / s
    with np.errstate(invalid="ignore"):
        pa = np.where(mask, P * a, 0.0)
    H = (np.log(s[:, 0]) - pa.sum(axis=1)) / math.log(2.0)
    return P, H


def conditional_probabilities(D, sigmas):
    """``p_{j|i}`` for distance matrix ``D`` and per-point Gaussian widths."""
    D = np.asarray(D, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64)
    n = D.shape[0]
    mask = ~np.eye(n, dtype=bool)
    P, _ = _conditional_rows(D * D, 1.0 / (2.0 * sigmas ** 2), mask)
    return P


def perplexities(D, sigmas):
    """Achieved ``2**entropy`` per row."""
    D = np.asarray(D, dtype=np.float64)
    mask = ~np.eye(D.shape[0], dtype=bool)
    _, H = _conditional_rows(D * D, 1.0 / (2.0 * np.asarray(sigmas) ** 2), mask)
    return 2.0 ** H


def calibrate_sigmas(D, perplexity: float, tol: float = PERPLEXITY_TOL,
                     max_bisections: int = MAX_BISECTIONS) -> np.ndarray:
    """Bisect each Gaussian width until its perplexity is within ``tol`` of the target.

    The bracket is grown by doubling sigma (or halving it) and then bisected
    geometrically; all rows are processed together.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if not 1.0 < perplexity < n - 1:
        raise ValueError(f"perplexity must lie in (1, N-1) = (1, {n - 1}); got {perplexity}")
    d2 = D * D
    mask = ~np.eye(n, dtype=bool)
    target = math.log2(perplexity)

    def entropy(beta):
        return _conditional_rows(d2, beta, mask)[1]

    # beta = 1 / (2 sigma^2); entropy decreases as beta grows
    spread = np.where(mask, d2, 0.0).sum(axis=1) / (n - 1)
    beta0 = 1.0 / np.where(spread > 0, spread, 1.0)
    lo, hi = beta0.copy(), beta0.copy()
    for _ in range(MAX_BRACKET_STEPS):
        need = entropy(lo) < target
        if not need.any():
            break
        lo[need] /= 4.0
    for _ in range(MAX_BRACKET_STEPS):
        need = entropy(hi) > target
        if not need.any():
            break
        hi[need] *= 4.0

    beta = np.sqrt(lo * hi)
    for _ in range(max_bisections):
        H = entropy(beta)
        resid = np.abs(2.0 ** H - perplexity)
        if np.all(resid <= tol):
            break
        too_flat = H > target
        lo = np.where(too_flat, beta, lo)
        hi = np.where(too_flat, hi, beta)
        beta = np.where(resid <= tol, beta, np.sqrt(lo * hi))
    resid = np.abs(2.0 ** entropy(beta) - perplexity)
    worst = float(resid.max())
    if not worst <= tol:
        raise CalibrationFailure(
            f"perplexity search left {int(np.sum(resid > tol))} points off target (worst {worst:.3e})", worst)
    return np.sqrt(1.0 / (2.0 * beta))


def joint_probabilities(D, sigmas) -> np.ndarray:
    """Symmetrized ``p_ij = (p_{j|i} + p_{i|j}) / 2N``."""
    Pc = conditional_probabilities(D, sigmas)
    n = Pc.shape[0]
    return (Pc + Pc.T) / (2.0 * n)


# low-dimensional side ---------------------------------------------------------

def _student_t_kernel(Y):
    sq = np.einsum("ij,ij->i", Y, Y)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (Y @ Y.T), 0.0)
    W = 1.0 / (1.0 + d2)
    np.fill_diagonal(W, 0.0)
    return W


def low_dim_affinities(Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.shape[0] < 2:
        raise ValueError("need at least two points")
    W = _student_t_kernel(Y)
    return W / W.sum()


def kl_cost(P, Q) -> float:
    """``sum p_ij log2(p_ij / q_ij)`` with zero-probability terms dropped."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape:
        raise ValueError("P and Q shapes differ")
    nz = P > 0
    p = P[nz]
    return float(np.sum(p * np.log2(np.maximum(p, PROB_FLOOR) / np.maximum(Q[nz], PROB_FLOOR))))


def gradient(P, Q, Y) -> np.ndarray:
    """``4 sum_j (p_ij - q_ij)(y_i - y_j) / (1 + |y_i - y_j|^2)``."""
    Y = np.asarray(Y, dtype=np.float64)
    M = (np.asarray(P) - np.asarray(Q)) * _student_t_kernel(Y)
    return 4.0 * (M.sum(axis=1)[:, None] * Y - M @ Y)


# optimizer -------------------------------------------------------------------

def affinities(X, config: TsneConfig) -> np.ndarray:
    D = pairwise_distances(X, config.distance)
    return joint_probabilities(D, calibrate_sigmas(D, config.perplexity))


def run_tsne(X, config: TsneConfig | None = None, *, P=None) -> Embedding:
    """Embed ``X`` in 2-D. Deterministic for a fixed ``config.seed``.

    ``P`` may be supplied to skip the affinity computation.
    """
    config = config or TsneConfig()
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 3:
        raise ValueError("t-SNE needs at least 3 points")
    if not config.perplexity < n:
        raise ValueError(f"perplexity {config.perplexity} must be below N={n}")
    if P is None:
        P = affinities(X, config)

    nz = P > 0
    p_nz = P[nz]
    p_entropy = float(np.sum(p_nz * np.log2(np.maximum(p_nz, PROB_FLOOR))))

    def cost_of(Q):
        return p_entropy - float(np.sum(p_nz * np.log2(np.maximum(Q[nz], PROB_FLOOR))))

    rng = np.random.default_rng(config.seed)
    Y = rng.normal(0.0, config.init_std, size=(n, 2))
    update = np.zeros_like(Y)
    history = np.empty(config.iterations + 1)

    W = _student_t_kernel(Y)
    Q = W / W.sum()
    history[0] = cost_of(Q)
    # overflow only happens on the way to a divergence, which is reported below
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(config.iterations):
            exag = config.early_exaggeration if it < config.early_exaggeration_iters else 1.0
            momentum = config.momentum_initial if it < config.momentum_switch else config.momentum_final
            M = (exag * P - Q) * W
            grad = 4.0 * (M.sum(axis=1)[:, None] * Y - M @ Y)
            update = momentum * update - config.learning_rate * grad
            Y = Y + update
            W = _student_t_kernel(Y)
            Q = W / W.sum()
            cost = cost_of(Q)
            if not (math.isfinite(cost) and np.all(np.isfinite(Y))):
                raise DivergenceError(f"t-SNE diverged at iteration {it + 1}", it + 1)
            history[it + 1] = cost
            if log.isEnabledFor(logging.DEBUG) and (it + 1) % 100 == 0:
                log.debug("iteration %d: KL %.6f bits", it + 1, cost)

    return Embedding(y=Y, technique="tsne", params=config.to_dict(),
                     final_cost=float(history[-1]), cost_history=history)
