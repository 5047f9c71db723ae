"""Matrix-form losses and exact full-batch gradients for the four models.

All four objectives are the same weighted pairwise logistic loss

    L = -1/2 sum_ij [ W+_ij log sigma(s_ij) + lam * W-_ij log sigma(-s_ij) ]
        + (beta/2) ||X||_F^2

differing only in the weight matrices and in whether scores come from raw or
propagated embeddings:

    mf            s = X X^T          W+ = A              W- = B
    line          s = X X^T          W+ = D_A^-1 A       W- = B
    deepwalk(w)   s = X X^T          W+ = avg of (D_A^-1 A)^1..w
                                     W- = D_B^-1 B
    lightgcn(K)   s = Xb Xb^T        W+ = A              W- = B
                  Xb = avg of (D^-1/2 A D^-1/2)^0..K applied to X

Row-normalized weight matrices are stored symmetrized, (W + W^T)/2.  The
loss value is unchanged (scores are symmetric), and it makes the analytic
gradient a single sparse-sandwich expression

    grad = beta*X - P [ W+ . sigma(-s) - lam * W- . sigma(s) ] P X

with P the score propagation (identity except for lightgcn).  "." is the
elementwise product restricted to the weight support; the Gram matrix is
never formed densely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from linkprop.graphs import Graph, ProximityOperator, normalize, normalize_matrix, proximity
from linkprop.negatives import NegativeSet

MODELS = ("mf", "line", "deepwalk", "lightgcn")


class DivergenceError(RuntimeError):
    """Training state went non-finite.  Carries the step it happened at."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(message if step is None
                         else f"{message} (step {step})")


@dataclass(frozen=True)
class ModelParams:
    """Which model, plus the shared loss hyperparameters.

    window only matters for deepwalk, layers only for lightgcn; both are
    ignored elsewhere.
    """

    model: str
    window: int = 5
    layers: int = 3
    lam: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; pick from {MODELS}")
        if self.window < 1:
            raise ValueError("deepwalk window must be >= 1")
        if self.layers < 0:
            raise ValueError("lightgcn layer count must be >= 0")
        if self.lam < 0 or self.beta < 0:
            raise ValueError("lambda and beta must be nonnegative")


@dataclass(frozen=True, eq=False)
class MaskSet:
    """Positive/negative weight matrices and the score propagation operator."""

    pos: sp.csr_array = field(repr=False)
    neg: sp.csr_array = field(repr=False)
    prop: ProximityOperator = field(repr=False)


def _symmetrize(mat: sp.csr_array) -> sp.csr_array:
    return ((mat + mat.T) * 0.5).tocsr()


def build_masks(graph: Graph, negatives: NegativeSet,
                params: ModelParams, drop_below: float = 0.0) -> MaskSet:
    """Weight matrices for one model, ready for model_loss / loss_gradient.

    deepwalk's positive matrix averages walk-transition powers 1..window and
    is materialized once here; entries below drop_below are pruned (keep the
    default 0.0 whenever the kernel path must match exactly).
    """
    A = graph.adjacency
    B = negatives.adjacency
    identity = proximity(normalize(graph, "none"), 0, 0)
    if params.model == "mf":
        return MaskSet(pos=A, neg=B, prop=identity)
    if params.model == "line":
        return MaskSet(pos=_symmetrize(normalize(graph, "row").matrix),
                       neg=B, prop=identity)
    if params.model == "deepwalk":
        walk = proximity(normalize(graph, "row"), 1, params.window)
        return MaskSet(pos=_symmetrize(walk.materialize(drop_below=drop_below)),
                       neg=_symmetrize(normalize_matrix(B, "row").matrix),
                       prop=identity)
    # lightgcn: raw masks, propagated scores
    return MaskSet(pos=A, neg=B,
                   prop=proximity(normalize(graph, "symmetric"), 0, params.layers))


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Elementwise logistic function, overflow-safe on both tails."""
    z = np.asarray(z)
    out = np.empty_like(z, dtype=float)
    nonneg = z >= 0
    out[nonneg] = 1.0 / (1.0 + np.exp(-z[nonneg]))
    ez = np.exp(z[~nonneg])
    out[~nonneg] = ez / (1.0 + ez)
    return out


def _support(mat: sp.csr_array):
    coo = mat.tocoo()
    rows, cols = coo.coords
    return rows, cols, coo.data


def _support_scores(Y: np.ndarray, rows, cols) -> np.ndarray:
    return np.einsum("ij,ij->i", Y[rows], Y[cols])


def bce_loss(X: np.ndarray, pos: sp.csr_array, neg: sp.csr_array,
             lam: float = 1.0, beta: float = 0.0) -> float:
    """Weighted pairwise logistic loss of the Gram scores of X.

    Only the nonzero entries of the weight matrices are touched.  -log
    sigma(s) is evaluated as logaddexp(0, -s), so saturated scores cannot
    overflow.
    """
    if pos.shape != neg.shape or pos.shape[0] != X.shape[0]:
        raise ValueError("weight matrices must be square and match X rows")
    total = 0.0
    rows, cols, w = _support(pos)
    if w.size:
        s = _support_scores(X, rows, cols)
        total += float(np.dot(w, np.logaddexp(0.0, -s)))
    rows, cols, w = _support(neg)
    if w.size:
        s = _support_scores(X, rows, cols)
        total += lam * float(np.dot(w, np.logaddexp(0.0, s)))
    return 0.5 * total + 0.5 * beta * float(np.sum(X * X))


def model_loss(X: np.ndarray, graph: Graph, negatives: NegativeSet,
               params: ModelParams, masks: MaskSet | None = None) -> float:
    """Loss of one model; pass precomputed masks to skip rebuilding them."""
    if masks is None:
        masks = build_masks(graph, negatives, params)
    Y = masks.prop.apply(X)
    pairwise = bce_loss(Y, masks.pos, masks.neg, lam=params.lam, beta=0.0)
    return pairwise + 0.5 * params.beta * float(np.sum(X * X))


def _residual_difference(Y: np.ndarray, masks: MaskSet, lam: float) -> sp.csr_array:
    """Sparse W+ . sigma(-s) - lam * W- . sigma(s) on the union support."""
    pr, pc, pw = _support(masks.pos)
    nr, nc, nw = _support(masks.neg)
    vals = np.concatenate([
        pw * sigmoid(-_support_scores(Y, pr, pc)) if pw.size else pw,
        -lam * nw * sigmoid(_support_scores(Y, nr, nc)) if nw.size else nw,
    ])
    rows = np.concatenate([pr, nr])
    cols = np.concatenate([pc, nc])
    n = Y.shape[0]
    return sp.coo_array((vals, (rows, cols)), shape=(n, n)).tocsr()


def loss_gradient(X: np.ndarray, graph: Graph, negatives: NegativeSet,
                  params: ModelParams, masks: MaskSet | None = None) -> np.ndarray:
    """Exact analytic gradient of model_loss with respect to X.

    grad = beta*X - P M P X with M the residual-weighted difference of the
    two weight matrices, evaluated at the propagated representation.
    """
    if masks is None:
        masks = build_masks(graph, negatives, params)
    Y = masks.prop.apply(X)
    M = _residual_difference(Y, masks, params.lam)
    return params.beta * X - masks.prop.apply(M @ Y)


def gd_step(X: np.ndarray, gradient: np.ndarray, alpha: float,
            step: int | None = None) -> np.ndarray:
    """One full-batch descent update X - alpha * gradient.

    Raises DivergenceError if the update produces non-finite entries.
    """
    if alpha < 0:
        raise ValueError("step size must be nonnegative")
    out = X - alpha * gradient
    if not np.all(np.isfinite(out)):
        raise DivergenceError("non-finite embedding after gradient step", step)
    return out
