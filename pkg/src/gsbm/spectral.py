"""Spectral inference of edge probabilities and edge-label distributions.

Pipeline: assign each label an independent Uniform[0,1] weight, build the
weighted adjacency, take the top eigenpairs by absolute eigenvalue, embed
nodes by eigenvalue-ratio-scaled eigenvectors, then estimate per-pair
quantities from label frequencies in an embedding neighborhood smoothed by
the piecewise-linear bump h_eps.

For a pair (i, j), with z the embedding and h = h_eps(||z_{i'} - z_i||):

    mu_hat_ij(l) = sum_{i' != j} h(i') 1{L_{i'j} = l} / (eps + sum_{i' != j} h(i') A_{i'j})
    b_hat_ij     = sum_{i' != j} h(i') A_{i'j}        / (eps + sum_{i' != j} h(i'))

The sums run over i' != j (i' = i is allowed; the queried edge never
predicts itself). b_hat estimates the observed edge probability
(omega/n) * B, not B itself. Note that one eps value plays two roles: the
neighborhood bandwidth of h_eps and the additive smoothing in the
denominators (which keeps them bounded away from zero and every label
mass sum strictly below one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial.distance import cdist, pdist

from .model import LabelAlphabet, LabeledGraph, STREAM_WEIGHING, stream_rng

# Dense eigendecomposition below this size; Krylov iteration above.
DENSE_CUTOFF = 512


class EigensolverError(RuntimeError):
    """Iterative eigensolver failed to converge within its budget."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


# ---------------------------------------------------------------------------
# Weighing
# ---------------------------------------------------------------------------

@dataclass
class WeighingFunction:
    """Weight per label, aligned with the alphabet order.

    Drawn weights live in [0, 1]. Override maps may supply raw values
    outside that range (e.g. +/-1) to reproduce specific experiments; such
    weighings are flagged via ``unit_range`` and the range check on the
    weighted adjacency is skipped for them.
    """

    alphabet: LabelAlphabet
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.alphabet.size,):
            raise ValueError("one weight per label required")
        self.weights.flags.writeable = False

    @property
    def unit_range(self) -> bool:
        return bool(self.weights.min() >= 0.0 and self.weights.max() <= 1.0)

    def weight(self, label: str) -> float:
        return float(self.weights[self.alphabet.index(label)])


def draw_weighing(
    alphabet: LabelAlphabet,
    seed: int,
    override: Optional[dict[str, float]] = None,
) -> WeighingFunction:
    """Independent Uniform[0,1] weight per label, or a fixed override map."""
    if override is not None:
        missing = [l for l in alphabet.labels if l not in override]
        if missing:
            raise ValueError(f"override map missing labels {missing}")
        w = np.array([override[l] for l in alphabet.labels], dtype=float)
        return WeighingFunction(alphabet, w)
    rng = stream_rng(seed, STREAM_WEIGHING)
    return WeighingFunction(alphabet, rng.random(alphabet.size))


@dataclass
class WeightedAdjacency:
    """Sparse symmetric matrix with W(label) in place of each edge."""

    n: int
    matrix: sp.csr_matrix

    def __post_init__(self):
        if self.matrix.shape != (self.n, self.n):
            raise ValueError("matrix shape mismatch")


def build_weighted_adjacency(graph: LabeledGraph, w: WeighingFunction) -> WeightedAdjacency:
    """Replace each edge with its label weight; zero-weight edges drop out."""
    if w.alphabet.labels == graph.alphabet.labels:
        lookup = w.weights
    else:
        try:
            lookup = np.array([w.weight(l) for l in graph.alphabet.labels])
        except KeyError as exc:
            raise ValueError(f"weighing has no weight for label {exc.args[0]}") from None
    data = lookup[graph.edge_label]
    mat = sp.coo_matrix(
        (np.concatenate([data, data]),
         (np.concatenate([graph.edge_i, graph.edge_j]),
          np.concatenate([graph.edge_j, graph.edge_i]))),
        shape=(graph.n, graph.n),
    ).tocsr()
    mat.eliminate_zeros()
    if w.unit_range and mat.nnz:
        lo, hi = mat.data.min(), mat.data.max()
        if lo < 0 or hi > 1:
            raise AssertionError(f"weighted entries outside [0, 1]: [{lo}, {hi}]")
    return WeightedAdjacency(n=graph.n, matrix=mat)


# ---------------------------------------------------------------------------
# Eigendecomposition and embedding
# ---------------------------------------------------------------------------

@dataclass
class SpectralState:
    """Top eigenpairs of the weighted adjacency plus the node embedding.

    ``eigenvalues`` holds r+1 values sorted by decreasing absolute value
    (the extra one feeds the spectral-gap diagnostic); ``eigenvectors`` the
    first r orthonormal vectors as columns. ``embedding`` rows are
    z_i = sqrt(n) * (lambda_k / lambda_1 * v_k(i))_{k<=r}; its first column
    equals sqrt(n) v_1 exactly.
    """

    n: int
    r: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    embedding: Optional[np.ndarray] = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        self.eigenvectors = np.asarray(self.eigenvectors, dtype=float)
        if self.eigenvalues.shape != (self.r + 1,):
            raise ValueError("need r+1 eigenvalues")
        if self.eigenvectors.shape != (self.n, self.r):
            raise ValueError("need r eigenvectors of length n")
        mags = np.abs(self.eigenvalues)
        if np.any(mags[:-1] < mags[1:] - 1e-12):
            raise ValueError("eigenvalues not sorted by decreasing magnitude")
        gram = self.eigenvectors.T @ self.eigenvectors
        if np.abs(gram - np.eye(self.r)).max() > 1e-8:
            raise ValueError("eigenvectors not orthonormal within 1e-8")
        self.eigenvalues.flags.writeable = False
        self.eigenvectors.flags.writeable = False

    @property
    def gap(self) -> float:
        """|lambda_r| - |lambda_{r+1}|, the quantity the rank choice relies on."""
        return float(abs(self.eigenvalues[self.r - 1]) - abs(self.eigenvalues[self.r]))


def _sort_by_magnitude(vals: np.ndarray) -> np.ndarray:
    # |lambda| descending; ties broken by signed value descending (positive
    # first), stably in solver order.
    return np.lexsort((-vals, -np.abs(vals)))


def top_eigenpairs(
    m: WeightedAdjacency,
    r: int,
    tol: float = 1e-8,
    method: str = "auto",
    seed: int = 0,
    max_iter: Optional[int] = None,
) -> SpectralState:
    """r+1 largest-magnitude eigenvalues and the r leading eigenvectors.

    ``method`` is "auto" (dense below DENSE_CUTOFF nodes, else iterative),
    "dense" or "iterative". The iterative path is ARPACK with a seeded
    start vector; non-convergence raises EigensolverError carrying the
    achieved residual. Every returned pair satisfies
    ||A v - lambda v||_2 <= tol * ||A||_1.
    """
    n = m.n
    k = r + 1
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= r+1 <= n, got r={r}, n={n}")
    if method not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "dense" if n <= DENSE_CUTOFF else "iterative"

    if m.matrix.nnz == 0:
        vals = np.zeros(k)
        vecs = np.eye(n, r)
        return SpectralState(n=n, r=r, eigenvalues=vals, eigenvectors=vecs)

    if method == "dense":
        vals_all, vecs_all = np.linalg.eigh(m.matrix.toarray())
        order = _sort_by_magnitude(vals_all)[:k]
        vals = vals_all[order]
        vecs = vecs_all[:, order[:r]]
    else:
        if k >= n:
            raise ValueError("iterative solver needs r+1 < n")
        rng = stream_rng(seed, STREAM_WEIGHING, 1)
        v0 = rng.standard_normal(n)
        budget = max_iter if max_iter is not None else max(100, int(50 * r * math.log(max(n, 2))))
        try:
            vals_it, vecs_it = spla.eigsh(m.matrix, k=k, which="LM", tol=tol, v0=v0, maxiter=budget)
        except spla.ArpackNoConvergence as exc:
            residual = None
            if exc.eigenvalues is not None and len(exc.eigenvalues):
                lam = exc.eigenvalues[-1]
                vec = exc.eigenvectors[:, -1]
                residual = float(np.linalg.norm(m.matrix @ vec - lam * vec))
            raise EigensolverError(
                f"eigensolver did not converge within {budget} iterations", residual=residual
            ) from exc
        order = _sort_by_magnitude(vals_it)
        vals = vals_it[order]
        vecs = vecs_it[:, order[:r]]

    norm1 = float(spla.norm(m.matrix, 1)) if sp.issparse(m.matrix) else 1.0
    resid = np.linalg.norm(m.matrix @ vecs - vecs * vals[:r], axis=0)
    if np.any(resid > max(tol, 1e-14) * max(norm1, 1e-300)):
        raise EigensolverError(
            f"eigenpair residual {resid.max():.3g} exceeds {tol:.3g} * ||A||_1",
            residual=float(resid.max()),
        )
    return SpectralState(n=n, r=r, eigenvalues=vals, eigenvectors=vecs)


def embed(state: SpectralState) -> SpectralState:
    """Fill in z_i = sqrt(n) (lambda_k / lambda_1) v_k(i)."""
    lam1 = state.eigenvalues[0]
    if lam1 == 0.0:
        raise ValueError("leading eigenvalue is zero (empty graph?); embedding undefined")
    ratios = state.eigenvalues[: state.r] / lam1  # ratios[0] == 1.0 exactly
    z = math.sqrt(state.n) * state.eigenvectors * ratios
    return replace(state, embedding=z)


# ---------------------------------------------------------------------------
# Neighborhood estimators
# ---------------------------------------------------------------------------

def h_epsilon(x, eps: float):
    """Continuous surrogate for 1{x <= eps}: 1 below eps, 0 above 2 eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return np.minimum(1.0, np.maximum(0.0, 2.0 - np.asarray(x, dtype=float) / eps))


def select_epsilon(state: SpectralState, subsample: int = 200_000, seed: int = 0) -> float:
    """Bandwidth rule: half the median pairwise embedding distance.

    Exact over all pairs for n <= 2000, otherwise estimated over
    ``subsample`` random pairs; deterministic given the seed.
    """
    if state.embedding is None:
        raise ValueError("embedding not computed")
    z = state.embedding
    n = state.n
    if n <= 2000:
        dists = pdist(z)
    else:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(9,)))
        ii = rng.integers(0, n, size=subsample)
        jj = rng.integers(0, n - 1, size=subsample)
        jj = np.where(jj >= ii, jj + 1, jj)
        dists = np.linalg.norm(z[ii] - z[jj], axis=1)
    med = float(np.median(dists)) if dists.size else 0.0
    if med == 0.0:
        raise ValueError("all embedding points identical; bandwidth would be zero")
    return 0.5 * med


@dataclass
class PairEstimates:
    """Estimates for node pairs; dense all-pairs or an explicit pair list.

    Dense mode: ``pairs`` is None, ``b_hat`` is (n, n) and ``mu_hat`` is
    (L, n, n); the diagonal is zeroed and meaningless. List mode: ``pairs``
    is (m, 2), ``b_hat`` is (m,) and ``mu_hat`` is (m, L). Estimates are
    not symmetric in (i, j): i selects the neighborhood, j the edges.
    """

    alphabet: LabelAlphabet
    pairs: Optional[np.ndarray]
    b_hat: np.ndarray
    mu_hat: np.ndarray

    def __post_init__(self):
        if self.b_hat.size == 0:
            return
        if self.mu_hat.min() < 0:
            raise AssertionError("negative label-distribution estimate")
        if self.b_hat.min() < 0 or self.b_hat.max() >= 1.0:
            raise AssertionError("edge-probability estimate outside [0, 1)")
        axis = 0 if self.pairs is None else 1
        if self.mu_hat.sum(axis=axis).max() >= 1.0:
            raise AssertionError("label-distribution estimate sums to >= 1")

    def b(self, i: int, j: int) -> float:
        if self.pairs is None:
            return float(self.b_hat[i, j])
        idx = self._find(i, j)
        return float(self.b_hat[idx])

    def mu(self, i: int, j: int) -> np.ndarray:
        if self.pairs is None:
            return self.mu_hat[:, i, j].copy()
        idx = self._find(i, j)
        return self.mu_hat[idx].copy()

    def _find(self, i: int, j: int) -> int:
        hits = np.nonzero((self.pairs[:, 0] == i) & (self.pairs[:, 1] == j))[0]
        if not hits.size:
            raise KeyError(f"pair ({i}, {j}) not estimated")
        return int(hits[0])


def _estimate_rows(graph: LabeledGraph, z: np.ndarray, eps: float, rows: np.ndarray):
    """Shared core: neighborhood weights for given i-rows against all j.

    Returns (b_hat, mu_hat, b_num) with shapes (k, n), (L, k, n), (k, n).
    All paths funnel through the same sparse matmul so that single-pair
    queries and batch queries agree bit for bit.
    """
    a = graph.adjacency
    h = h_epsilon(cdist(z[rows], z), eps)  # (k, n)
    b_num = (a @ h.T).T                    # sum_{i'} h(i') A_{i'j}; diagonal of A is zero
    tot = h.sum(axis=1)
    b_den = eps + tot[:, None] - h         # excludes i' = j
    b_hat = b_num / b_den
    mu_den = eps + b_num
    n_labels = graph.alphabet.size
    mu_hat = np.empty((n_labels, len(rows), graph.n))
    if n_labels == 1:
        mu_hat[0] = b_num / mu_den
    else:
        partial = np.zeros_like(b_num)
        for code in range(n_labels - 1):
            num = (graph.label_indicator(code) @ h.T).T
            mu_hat[code] = num / mu_den
            partial += num
        # Last label by subtraction (the indicators partition the edges);
        # clip shields the nonnegativity invariant from roundoff.
        mu_hat[n_labels - 1] = np.maximum(b_num - partial, 0.0) / mu_den
    return b_hat, mu_hat, b_num


def estimate_all_pairs(
    graph: LabeledGraph,
    state: SpectralState,
    eps: float,
    pairs: Optional[Sequence[tuple[int, int]]] = None,
) -> PairEstimates:
    """Estimates for every ordered pair i != j, or for an explicit list.

    The neighborhood weight vector h_eps(||z_{i'} - z_i||) is computed once
    per distinct i and reused across all j.
    """
    if state.embedding is None:
        raise ValueError("embedding not computed")
    if eps <= 0:
        raise ValueError("eps must be positive")
    z = state.embedding
    if pairs is None:
        rows = np.arange(graph.n)
        b_hat, mu_hat, _ = _estimate_rows(graph, z, eps, rows)
        diag = np.arange(graph.n)
        b_hat[diag, diag] = 0.0
        mu_hat[:, diag, diag] = 0.0
        return PairEstimates(alphabet=graph.alphabet, pairs=None, b_hat=b_hat, mu_hat=mu_hat)

    plist = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if plist.size and np.any(plist[:, 0] == plist[:, 1]):
        raise ValueError("pairs must have i != j")
    uniq, inverse = np.unique(plist[:, 0], return_inverse=True)
    b_rows, mu_rows, _ = _estimate_rows(graph, z, eps, uniq)
    jcol = plist[:, 1]
    b_out = b_rows[inverse, jcol]
    mu_out = mu_rows[:, inverse, jcol].T.copy()
    return PairEstimates(alphabet=graph.alphabet, pairs=plist, b_hat=b_out, mu_hat=mu_out)


def estimate_pair(
    graph: LabeledGraph,
    state: SpectralState,
    eps: float,
    i: int,
    j: int,
) -> tuple[np.ndarray, float]:
    """(label-distribution estimate, edge-probability estimate) for one pair."""
    if i == j:
        raise ValueError("pair must have i != j")
    est = estimate_all_pairs(graph, state, eps, pairs=[(i, j)])
    return est.mu_hat[0].copy(), float(est.b_hat[0])
