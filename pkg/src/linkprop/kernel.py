"""Forward-propagation kernels: the unified update rule the four models share.

One optimization step of every model in losses.py can be written as a linear
propagation of the current embeddings,

    X' = (c1 I + c2 P [K_plus - lam * K_minus] P) X

where P averages powers a1..b1 of the normalized adjacency, and the link
kernels weight graph positions by how far the current scores are from their
targets:

    K_plus  = S_A . (c3 * P_{a2,b2}(At) + (1 - c3) * A)     S_A = 1 - sigma(s)
    K_minus = S_B . (c3 * Bt            + (1 - c3) * B)     S_B = sigma(s)

with s the Gram scores of P X.  Stepping this kernel reproduces gradient
descent on the corresponding loss exactly; the test suite pins the two
trajectories against each other step by step.

The propagation matrix H is never formed densely in the main path (the outer
P factors densify); materialize_kernel exists for inspection of small
instances only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from linkprop.graphs import (Graph, ProximityOperator, SCHEMES, normalize,
                             normalize_matrix, proximity)
from linkprop.losses import MODELS, DivergenceError, ModelParams, sigmoid
from linkprop.negatives import NegativeSet

DENSE_LIMIT = 500

CONFIG_KEYS = ("model", "c1", "c2", "c3", "a1", "b1", "a2", "b2",
               "pos_norm", "neg_norm", "lambda")


@dataclass(frozen=True)
class KernelConfig:
    """Constants of the unified update rule for one model instance.

    c3 selects the positive/negative mask flavor (0: raw adjacency, 1:
    normalized high-order form); a1..b1 define the outer propagation, a2..b2
    the positive mask's proximity orders.  pos_norm is the scheme of the
    normalized adjacency used in both proximity operators, neg_norm the
    scheme applied to the sampled negatives.
    """

    model: str
    c1: float
    c2: float
    c3: float
    a1: int
    b1: int
    a2: int
    b2: int
    pos_norm: str
    neg_norm: str
    lam: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.c3 not in (0.0, 1.0):
            raise ValueError("c3 must be 0 or 1")
        if not (0 <= self.a1 <= self.b1) or not (0 <= self.a2 <= self.b2):
            raise ValueError("proximity orders need 0 <= a <= b")
        for scheme in (self.pos_norm, self.neg_norm):
            if scheme not in SCHEMES:
                raise ValueError(f"unknown normalization scheme {scheme!r}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")

    def to_mapping(self) -> dict:
        """Flat dict with the serialized field names ('lambda', not 'lam')."""
        return {"model": self.model, "c1": self.c1, "c2": self.c2,
                "c3": self.c3, "a1": self.a1, "b1": self.b1, "a2": self.a2,
                "b2": self.b2, "pos_norm": self.pos_norm,
                "neg_norm": self.neg_norm, "lambda": self.lam}

    @classmethod
    def from_mapping(cls, mapping: dict) -> "KernelConfig":
        missing = [k for k in CONFIG_KEYS if k not in mapping]
        if missing:
            raise ValueError(f"kernel config missing keys {missing}")
        return cls(model=str(mapping["model"]),
                   c1=float(mapping["c1"]), c2=float(mapping["c2"]),
                   c3=float(mapping["c3"]), a1=int(mapping["a1"]),
                   b1=int(mapping["b1"]), a2=int(mapping["a2"]),
                   b2=int(mapping["b2"]), pos_norm=str(mapping["pos_norm"]),
                   neg_norm=str(mapping["neg_norm"]),
                   lam=float(mapping["lambda"]))


def model_config(model: str, alpha: float, beta: float = 0.0,
                 lam: float = 1.0, window: int = 5, layers: int = 3) -> KernelConfig:
    """Kernel constants of one of the four built-in models.

    c1 = 1 - alpha*beta and c2 = alpha for all of them; the rest encodes
    which masks and propagations the model's loss implies.
    """
    if alpha < 0:
        raise ValueError("step size must be nonnegative")
    c1, c2 = 1.0 - alpha * beta, alpha
    if model == "mf":
        return KernelConfig(model, c1, c2, 0.0, 0, 0, 0, 0, "none", "none", lam)
    if model == "line":
        return KernelConfig(model, c1, c2, 1.0, 0, 0, 1, 1, "row", "none", lam)
    if model == "deepwalk":
        return KernelConfig(model, c1, c2, 1.0, 0, 0, 1, window, "row", "row", lam)
    if model == "lightgcn":
        return KernelConfig(model, c1, c2, 0.0, 0, layers, 0, 0,
                            "symmetric", "none", lam)
    raise ValueError(f"unknown model {model!r}")


def config_params(config: KernelConfig) -> ModelParams:
    """ModelParams whose loss this kernel config propagates.

    c1 = 1 - c2*beta pins beta = (1 - c1)/c2 when c2 > 0.
    """
    beta = 0.0 if config.c2 == 0 else (1.0 - config.c1) / config.c2
    return ModelParams(model=config.model, window=max(config.b2, 1),
                       layers=config.b1, lam=config.lam, beta=beta)


def _symmetrize(mat: sp.csr_array) -> sp.csr_array:
    return ((mat + mat.T) * 0.5).tocsr()


def _union_support(pos: sp.csr_array, neg: sp.csr_array):
    """Union of the two supports plus index maps back into each one."""
    pc = pos.tocoo()
    nc = neg.tocoo()
    stacked = np.concatenate([np.stack(pc.coords, axis=1),
                              np.stack(nc.coords, axis=1)])
    union, inverse = np.unique(stacked, axis=0, return_inverse=True)
    k = pc.data.shape[0]
    return (union[:, 0], union[:, 1], inverse[:k], inverse[k:],
            pc.data, nc.data)


@dataclass(frozen=True, eq=False)
class KernelOperator:
    """Step-independent pieces of the kernel for a fixed (config, graph, negatives).

    Holds the outer proximity operator, both blended masks with their
    supports merged, and the selection arrays that align scores on the union
    support with each mask.  Build once, step many times.
    """

    config: KernelConfig
    graph: Graph
    negatives: NegativeSet
    prop: ProximityOperator = field(repr=False)
    pos_mask: sp.csr_array = field(repr=False)
    neg_mask: sp.csr_array = field(repr=False)
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    pos_sel: np.ndarray = field(repr=False)
    neg_sel: np.ndarray = field(repr=False)
    pos_weights: np.ndarray = field(repr=False)
    neg_weights: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, config: KernelConfig, graph: Graph,
              negatives: NegativeSet) -> "KernelOperator":
        prop = proximity(normalize(graph, config.pos_norm), config.a1, config.b1)
        if config.c3 == 0.0:
            pos_mask = graph.adjacency
            neg_mask = negatives.adjacency
        else:
            high_order = proximity(normalize(graph, config.pos_norm),
                                   config.a2, config.b2)
            pos_mask = _symmetrize(high_order.materialize())
            neg_mask = _symmetrize(
                normalize_matrix(negatives.adjacency, config.neg_norm).matrix)
        rows, cols, pos_sel, neg_sel, pw, nw = _union_support(pos_mask, neg_mask)
        return cls(config=config, graph=graph, negatives=negatives, prop=prop,
                   pos_mask=pos_mask, neg_mask=neg_mask, rows=rows, cols=cols,
                   pos_sel=pos_sel, neg_sel=neg_sel, pos_weights=pw,
                   neg_weights=nw)

    def step(self, X: np.ndarray) -> np.ndarray:
        return kernel_step(X, self.config, self.graph, self.negatives,
                           operator=self)

    def step_traced(self, X: np.ndarray):
        return kernel_step_traced(X, self.config, self.graph, self.negatives,
                                  operator=self)


@dataclass(frozen=True, eq=False)
class ScorePair:
    """Complementary score matrices on the union of the two mask supports.

    s_a weights positive positions (high where a training link is still
    poorly reconstructed), s_b weights negative positions.  They sum to one
    exactly by construction.
    """

    num_nodes: int
    rows: np.ndarray
    cols: np.ndarray
    s_a: np.ndarray
    s_b: np.ndarray

    def complement_deviation(self) -> float:
        return float(np.abs(self.s_a + self.s_b - 1.0).max(initial=0.0))


def dense_score_matrices(Y: np.ndarray):
    """Dense (S_A, S_B) of the full Gram matrix, for small-instance checks."""
    S_B = sigmoid(Y @ Y.T)
    return 1.0 - S_B, S_B


def score_matrices(Y: np.ndarray, operator: KernelOperator) -> ScorePair:
    """Scores of the propagated embedding Y on the operator's union support."""
    s = np.einsum("ij,ij->i", Y[operator.rows], Y[operator.cols])
    s_b = sigmoid(s)
    return ScorePair(num_nodes=Y.shape[0], rows=operator.rows,
                     cols=operator.cols, s_a=1.0 - s_b, s_b=s_b)


@dataclass(frozen=True, eq=False)
class LinkKernels:
    """Residual-weighted positive and negative link matrices."""

    k_plus: sp.csr_array = field(repr=False)
    k_minus: sp.csr_array = field(repr=False)


def link_kernels(scores: ScorePair, operator: KernelOperator) -> LinkKernels:
    """Masks times scores: K_plus = S_A . mask_plus, K_minus = S_B . mask_minus."""
    n = scores.num_nodes
    k_plus = sp.coo_array(
        (operator.pos_weights * scores.s_a[operator.pos_sel],
         (scores.rows[operator.pos_sel], scores.cols[operator.pos_sel])),
        shape=(n, n)).tocsr()
    k_minus = sp.coo_array(
        (operator.neg_weights * scores.s_b[operator.neg_sel],
         (scores.rows[operator.neg_sel], scores.cols[operator.neg_sel])),
        shape=(n, n)).tocsr()
    return LinkKernels(k_plus=k_plus, k_minus=k_minus)


@dataclass(frozen=True)
class SubstepTrace:
    """Frobenius norms along the four substeps of one kernel step.

    Substeps: (1) outer propagation of X, (2) link-kernel application,
    (3) outer propagation again, (4) the c1/c2 recombination.
    """

    input_norm: float
    norms: tuple[float, float, float, float]


def _substeps(X: np.ndarray, operator: KernelOperator):
    config = operator.config
    Y = operator.prop.apply(X)
    scores = score_matrices(Y, operator)
    kernels = link_kernels(scores, operator)
    Z = kernels.k_plus @ Y - config.lam * (kernels.k_minus @ Y)
    W = operator.prop.apply(Z)
    out = config.c1 * X + config.c2 * W
    return Y, Z, W, out


def kernel_step(X: np.ndarray, config: KernelConfig, graph: Graph,
                negatives: NegativeSet, operator: KernelOperator | None = None,
                step: int | None = None) -> np.ndarray:
    """One forward-propagation update of the embeddings.

    Pass a prebuilt operator to amortize mask construction across steps.
    """
    if operator is None:
        operator = KernelOperator.build(config, graph, negatives)
    out = _substeps(X, operator)[-1]
    if not np.all(np.isfinite(out)):
        raise DivergenceError("non-finite embedding after kernel step", step)
    return out


def kernel_step_traced(X: np.ndarray, config: KernelConfig, graph: Graph,
                       negatives: NegativeSet,
                       operator: KernelOperator | None = None):
    """Like kernel_step but also returns the per-substep norm trace."""
    if operator is None:
        operator = KernelOperator.build(config, graph, negatives)
    Y, Z, W, out = _substeps(X, operator)
    frob = lambda M: float(np.linalg.norm(M))
    trace = SubstepTrace(input_norm=frob(X),
                         norms=(frob(Y), frob(Z), frob(W), frob(out)))
    return out, trace


def materialize_kernel(config: KernelConfig, scores: ScorePair, graph: Graph,
                       negatives: NegativeSet,
                       operator: KernelOperator | None = None,
                       limit: int = DENSE_LIMIT) -> np.ndarray:
    """Explicit dense propagation matrix H, for small-instance inspection.

    Refuses to run above `limit` nodes; the main path never needs H.
    """
    n = graph.num_nodes
    if n > limit:
        raise ValueError(f"{n} nodes exceeds the dense limit {limit}")
    if operator is None:
        operator = KernelOperator.build(config, graph, negatives)
    kernels = link_kernels(scores, operator)
    middle = (kernels.k_plus - config.lam * kernels.k_minus).toarray()
    P = operator.prop.materialize().toarray()
    return config.c1 * np.eye(n) + config.c2 * (P @ middle @ P)


@dataclass(frozen=True)
class SignReport:
    """Off-diagonal sign check of a dense propagation matrix."""

    passed: bool
    checked_positive: int
    checked_negative: int
    violations: tuple


def sign_structure(H: np.ndarray, graph: Graph,
                   negatives: NegativeSet) -> SignReport:
    """Check H is attractive on observed links and repulsive on negatives.

    Only meaningful for configs whose outer propagation is the identity
    (then every off-diagonal entry is attributable to a single link):
    entries at positive-edge positions must be >= 0, at sampled-negative
    positions <= 0.
    """
    violations = []
    for u, v in graph.edges:
        for i, j in ((u, v), (v, u)):
            if H[i, j] < 0:
                violations.append((int(i), int(j), float(H[i, j])))
    for u, v in negatives.pairs:
        for i, j in ((u, v), (v, u)):
            if H[i, j] > 0:
                violations.append((int(i), int(j), float(H[i, j])))
    return SignReport(passed=not violations,
                      checked_positive=2 * graph.num_edges,
                      checked_negative=2 * negatives.num_pairs,
                      violations=tuple(violations))
