"""Latent-attribute labeled random graph model: parameters and sampling.

A model is given by a node count ``n``, an attribute space with a sampling
measure (a finite weighted set or the unit interval with the uniform
measure), a symmetric edge-probability kernel ``B``, a finite label
alphabet with a symmetric label law ``mu`` per attribute pair, and an
observation intensity ``omega``: each potential edge is kept with
probability ``omega / n``.

Sampling is split into named RNG streams derived from a single root seed,
so attributes, edges, labels and the label weighing can each be
regenerated independently and deterministically.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

# Named streams split off the root seed. Keeping the split stable means a
# graph's attributes can be re-drawn without consuming edge randomness.
STREAM_ATTRIBUTES = 0
STREAM_EDGES = 1
STREAM_LABELS = 2
STREAM_WEIGHING = 3

# Row-block size for vectorized pair sampling. Part of the deterministic
# RNG consumption pattern: do not change without breaking seed stability.
_PAIR_CHUNK = 512

_IDENTIFIABILITY_TOL = 1e-9


def stream_rng(seed: int, stream: int, *subkeys: int) -> np.random.Generator:
    """Independent generator for a named stream under a root seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, *subkeys)))


# ---------------------------------------------------------------------------
# Attribute spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteSet:
    """Finite attribute set {0, ..., r-1} with sampling weights."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("FiniteSet needs at least one weight")
        if np.any(w < 0):
            raise ValueError("FiniteSet weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"FiniteSet weights must sum to 1, got {w.sum()!r}")

    @property
    def r(self) -> int:
        return len(self.weights)

    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


@dataclass(frozen=True)
class UnitInterval:
    """The interval [0, 1] with the uniform measure."""


AttributeSpace = Union[FiniteSet, UnitInterval]


# ---------------------------------------------------------------------------
# Label alphabet
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabelAlphabet:
    """Ordered set of distinct edge labels; the order fixes all indexing."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) < 1:
            raise ValueError("alphabet needs at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels in alphabet")

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown label {label!r}") from None


SINGLE_LABEL = LabelAlphabet(("e",))
PLUS_MINUS = LabelAlphabet(("+1", "-1"))

# Label rule for Fourier kernels: two labels, first gets probability 2*g(x-y).
TWO_LABEL_2G = "two_label_2g"


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def _wrap_half(x):
    """Reduce to the fundamental domain [-1/2, 1/2] of a 1-periodic function."""
    return x - np.round(x)


@dataclass
class FourierKernel:
    """Translation-invariant kernel B(x, y) = g(x - y) on the unit interval.

    ``g`` is even, 1-periodic and represented by cosine coefficients
    g(x) = g0 + sum_k gk[k-1] * cos(2 pi k x). The built-in forms carry an
    exact closed-form evaluator so generation does not suffer truncation
    error; ``triangle_kernel`` is g(x) = |x| and ``band_kernel`` is the
    indicator of |x| <= 1/4, both on [-1/2, 1/2].
    """

    g0: float
    gk: np.ndarray
    label_rule: Optional[str] = None
    form: Optional[str] = None  # "triangle" | "band" | None (truncated series)

    def __post_init__(self):
        self.gk = np.asarray(self.gk, dtype=float)
        if self.gk.ndim != 1:
            raise ValueError("gk must be a flat coefficient list")
        if self.form not in (None, "triangle", "band"):
            raise ValueError(f"unknown kernel form {self.form!r}")
        if self.label_rule not in (None, TWO_LABEL_2G):
            raise ValueError(f"unknown label rule {self.label_rule!r}")
        self.gk.flags.writeable = False
        self._validate_range()

    def g(self, x):
        """Evaluate g, exactly for the built-in forms."""
        u = _wrap_half(np.asarray(x, dtype=float))
        if self.form == "triangle":
            return np.abs(u)
        if self.form == "band":
            return (np.abs(u) <= 0.25).astype(float)
        k = np.arange(1, self.gk.size + 1)
        return self.g0 + np.cos(2.0 * np.pi * np.multiply.outer(u, k)) @ self.gk

    def _validate_range(self):
        grid = np.linspace(-0.5, 0.5, 10_000)
        vals = self.g(grid)
        if vals.min() < -1e-12 or vals.max() > 1.0 + 1e-12:
            raise ValueError(
                f"kernel function leaves [0, 1]: range [{vals.min():.3g}, {vals.max():.3g}]"
            )
        if self.label_rule == TWO_LABEL_2G:
            # First label gets probability 2 g(x - y); must be a valid
            # probability wherever an edge can exist (g > 0).
            bad = vals[2.0 * vals > 1.0 + 1e-12]
            if bad.size:
                raise ValueError(
                    "two_label_2g rule invalid: 2*g exceeds 1 where g = "
                    f"{bad.max():.3g}"
                )

    def label_probabilities(self, x, y):
        """Probability of the first label for node pairs (x, y)."""
        if self.label_rule != TWO_LABEL_2G:
            raise ValueError("kernel has no label rule")
        return 2.0 * self.g(np.asarray(x) - np.asarray(y))


def triangle_kernel(n_coeffs: int = 64, label_rule: Optional[str] = None) -> FourierKernel:
    """g(x) = |x| on [-1/2, 1/2]: g0 = 1/4, gk = ((-1)^k - 1) / (pi^2 k^2)."""
    k = np.arange(1, n_coeffs + 1, dtype=float)
    gk = ((-1.0) ** k - 1.0) / (np.pi**2 * k**2)
    return FourierKernel(g0=0.25, gk=gk, label_rule=label_rule, form="triangle")


def band_kernel(n_coeffs: int = 64) -> FourierKernel:
    """g(x) = 1{|x| <= 1/4} on [-1/2, 1/2]: g0 = 1/2, gk = 2 sin(pi k/2)/(pi k)."""
    k = np.arange(1, n_coeffs + 1, dtype=float)
    gk = 2.0 * np.sin(np.pi * k / 2.0) / (np.pi * k)
    return FourierKernel(g0=0.5, gk=gk, form="band")


@dataclass
class BlockKernel:
    """Finite-set kernel: edge probabilities and label laws per class pair."""

    edge_prob: np.ndarray   # (r, r) symmetric, entries in [0, 1]
    label_dist: np.ndarray  # (r, r, L) probability vectors, symmetric in classes

    def __post_init__(self):
        b = np.asarray(self.edge_prob, dtype=float)
        m = np.asarray(self.label_dist, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("edge_prob must be square")
        if not np.allclose(b, b.T, atol=1e-12):
            raise ValueError("edge_prob must be symmetric")
        if b.min() < 0 or b.max() > 1:
            raise ValueError("edge_prob entries must lie in [0, 1]")
        if m.ndim != 3 or m.shape[:2] != b.shape:
            raise ValueError("label_dist must be (r, r, L)")
        if m.min() < -1e-12 or np.abs(m.sum(axis=2) - 1.0).max() > 1e-9:
            raise ValueError("label_dist rows must be probability vectors")
        if not np.allclose(m, np.swapaxes(m, 0, 1), atol=1e-12):
            raise ValueError("label_dist must be symmetric in the class pair")
        b.flags.writeable = False
        m.flags.writeable = False
        self.edge_prob = b
        self.label_dist = m

    @property
    def r(self) -> int:
        return self.edge_prob.shape[0]

    @property
    def n_labels(self) -> int:
        return self.label_dist.shape[2]


KernelSpec = Union[BlockKernel, FourierKernel]


# ---------------------------------------------------------------------------
# Model specification
# ---------------------------------------------------------------------------

@dataclass
class ModelSpec:
    """Full model parameterization; validates cross-field compatibility."""

    n: int
    space: AttributeSpace
    kernel: KernelSpec
    alphabet: LabelAlphabet
    omega: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.omega < 0:
            raise ValueError("omega must be nonnegative")
        if self.omega / self.n > 1.0 + 1e-12:
            raise ValueError(f"retention probability omega/n = {self.omega / self.n:.4g} exceeds 1")
        if isinstance(self.kernel, BlockKernel):
            if not isinstance(self.space, FiniteSet):
                raise ValueError("BlockKernel requires a FiniteSet attribute space")
            if self.kernel.r != self.space.r:
                raise ValueError("kernel size does not match attribute set size")
            if self.kernel.n_labels != self.alphabet.size:
                raise ValueError("kernel label dimension does not match alphabet")
        else:
            if not isinstance(self.space, UnitInterval):
                raise ValueError("FourierKernel requires the UnitInterval attribute space")
            if self.kernel.label_rule is None and self.alphabet.size != 1:
                raise ValueError("unlabeled Fourier kernel requires a single-label alphabet")
            if self.kernel.label_rule == TWO_LABEL_2G and self.alphabet.size != 2:
                raise ValueError("two_label_2g rule requires a two-label alphabet")

    @property
    def retention(self) -> float:
        return self.omega / self.n

    def edge_probability(self, x, y) -> np.ndarray:
        """Kernel value B(x, y) for attribute arrays (before omega/n thinning)."""
        if isinstance(self.kernel, FourierKernel):
            return self.kernel.g(np.asarray(x) - np.asarray(y))
        return self.kernel.edge_prob[np.asarray(x, dtype=int), np.asarray(y, dtype=int)]


# ---------------------------------------------------------------------------
# Labeled graphs
# ---------------------------------------------------------------------------

@dataclass
class LabeledGraph:
    """Simple undirected graph with one label per edge.

    Edges are stored once with ``edge_i < edge_j``; the adjacency accessor
    symmetrizes. ``attributes`` is the generating ground truth and may be
    None for graphs read back from the estimator-facing edge-list format.
    """

    n: int
    alphabet: LabelAlphabet
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_label: np.ndarray
    attributes: Optional[np.ndarray] = None

    def __post_init__(self):
        self.edge_i = np.asarray(self.edge_i, dtype=np.int64)
        self.edge_j = np.asarray(self.edge_j, dtype=np.int64)
        self.edge_label = np.asarray(self.edge_label, dtype=np.int64)
        if not (self.edge_i.shape == self.edge_j.shape == self.edge_label.shape):
            raise ValueError("edge arrays must have equal length")
        if self.edge_i.size:
            if self.edge_i.min() < 0 or self.edge_j.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(self.edge_i >= self.edge_j):
                raise ValueError("edges must satisfy i < j (no self-loops)")
            key = self.edge_i * self.n + self.edge_j
            if np.unique(key).size != key.size:
                raise ValueError("duplicate edges")
            if self.edge_label.min() < 0 or self.edge_label.max() >= self.alphabet.size:
                raise ValueError("edge label outside alphabet")
        for arr in (self.edge_i, self.edge_j, self.edge_label):
            arr.flags.writeable = False
        if self.attributes is not None:
            self.attributes = np.asarray(self.attributes)
            if self.attributes.shape != (self.n,):
                raise ValueError("attributes must have length n")
            self.attributes.flags.writeable = False

    @property
    def num_edges(self) -> int:
        return int(self.edge_i.size)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency with zero diagonal."""
        ones = np.ones(self.edge_i.size, dtype=float)
        a = sp.coo_matrix(
            (np.concatenate([ones, ones]),
             (np.concatenate([self.edge_i, self.edge_j]),
              np.concatenate([self.edge_j, self.edge_i]))),
            shape=(self.n, self.n),
        )
        return a.tocsr()

    def label_indicator(self, code: int) -> sp.csr_matrix:
        """Symmetric 0/1 matrix of the edges carrying one label."""
        keep = self.edge_label == code
        i, j = self.edge_i[keep], self.edge_j[keep]
        ones = np.ones(i.size, dtype=float)
        a = sp.coo_matrix(
            (np.concatenate([ones, ones]),
             (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(self.n, self.n),
        )
        return a.tocsr()

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.edge_i, 1)
        np.add.at(deg, self.edge_j, 1)
        return deg

    # -- estimator-facing serialization (attributes deliberately separate) --

    def to_edgelist(self) -> str:
        out = io.StringIO()
        out.write(f"n {self.n} labels {','.join(self.alphabet.labels)}\n")
        labels = self.alphabet.labels
        for i, j, c in zip(self.edge_i, self.edge_j, self.edge_label):
            out.write(f"{i} {j} {labels[c]}\n")
        return out.getvalue()

    @staticmethod
    def from_edgelist(text: str) -> "LabeledGraph":
        lines = text.strip().splitlines()
        if not lines:
            raise ValueError("empty edge-list input")
        head = lines[0].split()
        if len(head) != 4 or head[0] != "n" or head[2] != "labels":
            raise ValueError(f"bad edge-list header: {lines[0]!r}")
        n = int(head[1])
        alphabet = LabelAlphabet(tuple(head[3].split(",")))
        ii, jj, cc = [], [], []
        for line in lines[1:]:
            if not line.strip():
                continue
            a, b, lab = line.split()
            ii.append(int(a))
            jj.append(int(b))
            cc.append(alphabet.index(lab))
        return LabeledGraph(
            n=n, alphabet=alphabet,
            edge_i=np.array(ii, dtype=np.int64),
            edge_j=np.array(jj, dtype=np.int64),
            edge_label=np.array(cc, dtype=np.int64),
        )


def attributes_to_text(attributes: np.ndarray) -> str:
    return "".join(f"{v!r}\n" for v in attributes.tolist())


def attributes_from_text(text: str) -> np.ndarray:
    vals = [float(line) for line in text.split()]
    arr = np.array(vals)
    if np.all(arr == np.round(arr)):
        # Finite-set attributes round-trip as ints.
        if arr.size and arr.min() >= 0:
            return arr.astype(np.int64)
    return arr


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_attributes(spec: ModelSpec, seed: int) -> np.ndarray:
    """Draw n i.i.d. attributes from the space's measure."""
    rng = stream_rng(seed, STREAM_ATTRIBUTES)
    if isinstance(spec.space, FiniteSet):
        return rng.choice(spec.space.r, size=spec.n, p=spec.space.weight_array())
    return rng.random(spec.n)


def generate_graph(spec: ModelSpec, attributes: np.ndarray, seed: int) -> LabeledGraph:
    """Sample a labeled graph conditional on the attributes.

    Each unordered pair i < j receives an edge with probability
    (omega / n) * B(sigma_i, sigma_j) — the edge draw and the omega/n
    retention are collapsed into one Bernoulli, which is distributionally
    identical and halves RNG use. Present edges get a label from the pair's
    label law. Deterministic given (spec, attributes, seed).
    """
    attributes = np.asarray(attributes)
    if attributes.shape != (spec.n,):
        raise ValueError("attributes must have length n")
    p_keep = spec.retention
    if p_keep > 1.0 + 1e-12:
        raise ValueError("omega/n exceeds 1")

    edge_rng = stream_rng(seed, STREAM_EDGES)
    n = spec.n
    rows_i: list[np.ndarray] = []
    rows_j: list[np.ndarray] = []
    for start in range(0, n, _PAIR_CHUNK):
        stop = min(start + _PAIR_CHUNK, n)
        block = np.arange(start, stop)
        # Bernoulli draws for the full row block; only j > i is kept, so the
        # consumption pattern is fixed by _PAIR_CHUNK and n alone.
        u = edge_rng.random((stop - start, n))
        probs = p_keep * spec.edge_probability(attributes[block][:, None], attributes[None, :])
        hit = u < probs
        hit &= block[:, None] < np.arange(n)[None, :]
        bi, bj = np.nonzero(hit)
        rows_i.append(block[bi])
        rows_j.append(bj)
    edge_i = np.concatenate(rows_i) if rows_i else np.empty(0, dtype=np.int64)
    edge_j = np.concatenate(rows_j) if rows_j else np.empty(0, dtype=np.int64)

    label_rng = stream_rng(seed, STREAM_LABELS)
    edge_label = _draw_labels(spec, attributes, edge_i, edge_j, label_rng)

    return LabeledGraph(
        n=n, alphabet=spec.alphabet,
        edge_i=edge_i, edge_j=edge_j, edge_label=edge_label,
        attributes=attributes,
    )


def _draw_labels(spec, attributes, edge_i, edge_j, rng) -> np.ndarray:
    m = edge_i.size
    if spec.alphabet.size == 1:
        return np.zeros(m, dtype=np.int64)
    if isinstance(spec.kernel, FourierKernel):
        p_first = spec.kernel.label_probabilities(attributes[edge_i], attributes[edge_j])
        return np.where(rng.random(m) < p_first, 0, 1).astype(np.int64)
    pvec = spec.kernel.label_dist[attributes[edge_i].astype(int), attributes[edge_j].astype(int)]
    cum = np.cumsum(pvec, axis=1)
    u = rng.random(m)
    codes = (u[:, None] >= cum).sum(axis=1)
    return np.minimum(codes, spec.alphabet.size - 1).astype(np.int64)


# ---------------------------------------------------------------------------
# Identifiability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentifiabilityReport:
    checked: bool
    identifiable: Optional[bool]
    min_separation: Optional[float]


def check_identifiability(spec: ModelSpec) -> IdentifiabilityReport:
    """Minimum pairwise separation of attribute classes.

    For a finite attribute set, computes min over x != x' of
    sum_l sum_y P(y) |nu_{x,y}(l) - nu_{x',y}(l)| with nu = B * mu.
    Attribute values below 1e-9 separation are statistically
    indistinguishable. Continuous spaces are reported unchecked.
    """
    if not (isinstance(spec.space, FiniteSet) and isinstance(spec.kernel, BlockKernel)):
        return IdentifiabilityReport(checked=False, identifiable=None, min_separation=None)
    p = spec.space.weight_array()
    nu = spec.kernel.edge_prob[:, :, None] * spec.kernel.label_dist  # (r, r, L)
    r = spec.space.r
    best = math.inf
    for x in range(r):
        for xp in range(x + 1, r):
            sep = float(np.sum(p[:, None] * np.abs(nu[x] - nu[xp])))
            best = min(best, sep)
    if not math.isfinite(best):  # r == 1: nothing to separate
        best = 0.0
    return IdentifiabilityReport(
        checked=True,
        identifiable=best > _IDENTIFIABILITY_TOL,
        min_separation=best,
    )
