"""Sparse-regime impossibility thresholds and labeled Galton-Watson trees.

The sparse two-parameter model has r attribute values with uniform prior,
within/across edge probabilities a/(a+b) and b/(a+b), and label laws mu
(same attribute) and nu (different). The local neighborhood of a node in a
constant-degree graph looks like a labeled Galton-Watson tree with Poisson
offspring mean d = omega (a + (r-1) b) / (r (a + b)).

Key quantities:

    tau      = sum_l |a mu(l) - b nu(l)| / (r (a + b))
    omega_0  = 1 / tau     — below this, leaf attributes decouple from the root
    omega_c  = r (a + b) / (a + (r-1) b)   — giant-component threshold
    eps(l)   = b nu(l) / (a mu(l) + (r-1) b nu(l))
               — probability a child's attribute differs from its parent's
               (per different value) given the edge label, in the label-first
               description of the tree

The exact root posterior given the tree shape, all edge labels, and the
attributes revealed on a depth shell is computed by sum-product message
passing in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

MAX_DEPTH = 30
MAX_TREE_NODES = 10_000_000
_SURVIVAL_POP_CAP = 100_000_000


@dataclass
class SparseParams:
    """Parameters of the sparse two-group-rate labeled model."""

    r: int
    a: float
    b: float
    labels: tuple[str, ...]
    mu: np.ndarray
    nu: np.ndarray
    omega: float

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("r must be at least 2")
        if self.a <= 0 or self.b <= 0:
            raise ValueError("a and b must be positive")
        if self.omega < 0:
            # omega = 0 is allowed: it degenerates every tree to its root.
            raise ValueError("omega must be nonnegative")
        self.mu = np.asarray(self.mu, dtype=float)
        self.nu = np.asarray(self.nu, dtype=float)
        L = len(self.labels)
        for name, vec in (("mu", self.mu), ("nu", self.nu)):
            if vec.shape != (L,):
                raise ValueError(f"{name} must have one entry per label")
            if vec.min() < 0 or abs(vec.sum() - 1.0) > 1e-9:
                raise ValueError(f"{name} must be a probability vector")
        self.mu.flags.writeable = False
        self.nu.flags.writeable = False

    @property
    def offspring_mean(self) -> float:
        return self.omega * (self.a + (self.r - 1) * self.b) / (self.r * (self.a + self.b))

    def label_marginal(self) -> np.ndarray:
        """P(l) = (a mu(l) + (r-1) b nu(l)) / (a + (r-1) b)."""
        mix = self.a * self.mu + (self.r - 1) * self.b * self.nu
        return mix / (self.a + (self.r - 1) * self.b)


@dataclass
class ThresholdReport:
    tau: float
    omega0: float
    omega_c: float
    branching_number: float
    offspring_mean: float
    epsilon_of_label: dict[str, float]
    degenerate: bool  # tau == 0: no label carries attribute signal


def thresholds(p: SparseParams) -> ThresholdReport:
    """Threshold quantities of the sparse model; see the module docstring."""
    diff = np.abs(p.a * p.mu - p.b * p.nu)
    tau = float(diff.sum() / (p.r * (p.a + p.b)))
    degenerate = tau <= 0.0
    omega0 = math.inf if degenerate else 1.0 / tau
    omega_c = p.r * (p.a + p.b) / (p.a + (p.r - 1) * p.b)
    mass = p.a * p.mu + (p.r - 1) * p.b * p.nu
    eps = {
        label: float(p.b * p.nu[k] / mass[k])
        for k, label in enumerate(p.labels)
        if mass[k] > 0
    }
    report = ThresholdReport(
        tau=tau,
        omega0=omega0,
        omega_c=omega_c,
        branching_number=p.omega * tau,
        offspring_mean=p.offspring_mean,
        epsilon_of_label=eps,
        degenerate=degenerate,
    )
    assert report.tau <= 1.0 / p.r + 1e-12
    assert report.omega0 >= report.omega_c - 1e-9
    return report


# ---------------------------------------------------------------------------
# Tree sampling
# ---------------------------------------------------------------------------

@dataclass
class TreeInstance:
    """Labeled Galton-Watson tree, generation-ordered.

    Node 0 is the root; nodes are stored in breadth-first order so depth is
    nondecreasing. ``edge_label`` holds the label code of the edge to the
    parent (-1 for the root). ``truncated`` flags a hit of the node cap.
    """

    r: int
    labels: tuple[str, ...]
    depth_cap: int
    parent: np.ndarray
    depth: np.ndarray
    attribute: np.ndarray
    edge_label: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        n = self.parent.size
        if not (self.depth.size == self.attribute.size == self.edge_label.size == n):
            raise ValueError("node arrays must have equal length")
        if n == 0 or self.parent[0] != -1 or self.depth[0] != 0:
            raise ValueError("node 0 must be the root at depth 0")
        if n > 1:
            par = self.parent[1:]
            if par.min() < 0 or np.any(par >= np.arange(1, n)):
                raise ValueError("parents must precede children")
            if np.any(self.depth[1:] != self.depth[par] + 1):
                raise ValueError("child depth must be parent depth + 1")
        if self.attribute.min() < 0 or self.attribute.max() >= self.r:
            raise ValueError("attribute out of range")
        for arr in (self.parent, self.depth, self.attribute, self.edge_label):
            arr.flags.writeable = False

    @property
    def num_nodes(self) -> int:
        return int(self.parent.size)

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def nodes_at_depth(self, d: int) -> np.ndarray:
        return np.nonzero(self.depth == d)[0]


def _transition_stats(p: SparseParams):
    """Per-label flip rates and the label marginal, masked to reachable labels."""
    marginal = p.label_marginal()
    mass = p.a * p.mu + (p.r - 1) * p.b * p.nu
    eps = np.zeros_like(marginal)
    pos = mass > 0
    eps[pos] = p.b * p.nu[pos] / mass[pos]
    return marginal, eps, pos


def sample_tree(p: SparseParams, R: int, seed: int, mode: str = "attribute-first") -> TreeInstance:
    """Sample a labeled tree down to depth R.

    ``attribute-first``: each child keeps the parent attribute with
    probability a / (a + (r-1) b), otherwise takes one of the r-1 others
    uniformly; the edge label then follows mu or nu. ``label-first``: the
    edge label comes first from the marginal P(l) and the child attribute
    flips with per-value probability eps(l). The two modes agree in
    distribution.
    """
    if R < 0:
        raise ValueError("depth must be nonnegative")
    if R > MAX_DEPTH:
        raise ValueError(f"depth cap is {MAX_DEPTH}")
    if mode not in ("attribute-first", "label-first"):
        raise ValueError(f"unknown sampling mode {mode!r}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(11,)))
    d = p.offspring_mean
    marginal, eps, _ = _transition_stats(p)
    p_same_attr = p.a / (p.a + (p.r - 1) * p.b)

    parents = [np.array([-1], dtype=np.int64)]
    depths = [np.zeros(1, dtype=np.int64)]
    attrs = [np.array([rng.integers(p.r)], dtype=np.int64)]
    elabels = [np.array([-1], dtype=np.int64)]

    total = 1
    truncated = False
    gen_start = 0
    gen_attrs = attrs[0]
    for depth in range(1, R + 1):
        counts = rng.poisson(d, size=gen_attrs.size)
        n_children = int(counts.sum())
        if n_children == 0:
            break
        if total + n_children > MAX_TREE_NODES:
            truncated = True
            n_keep = MAX_TREE_NODES - total
            # Trim the generation; enough for the capped-simulation contract.
            cum = np.cumsum(counts)
            counts = np.minimum(counts, np.maximum(0, n_keep - (cum - counts)))
            n_children = int(counts.sum())
            if n_children == 0:
                break
        parent_local = np.repeat(np.arange(gen_attrs.size), counts)
        parent_idx = gen_start + parent_local
        parent_attr = gen_attrs[parent_local]

        if mode == "attribute-first":
            same = rng.random(n_children) < p_same_attr
            shift = 1 + rng.integers(0, p.r - 1, size=n_children)
            child_attr = np.where(same, parent_attr, (parent_attr + shift) % p.r)
            u = rng.random(n_children)
            cum_mu = np.cumsum(p.mu)
            cum_nu = np.cumsum(p.nu)
            lab_same = np.minimum((u[:, None] >= cum_mu[None, :]).sum(1), len(p.labels) - 1)
            lab_diff = np.minimum((u[:, None] >= cum_nu[None, :]).sum(1), len(p.labels) - 1)
            child_label = np.where(same, lab_same, lab_diff)
        else:
            u = rng.random(n_children)
            cum_m = np.cumsum(marginal)
            child_label = np.minimum((u[:, None] >= cum_m[None, :]).sum(1), len(p.labels) - 1)
            flip = eps[child_label]
            same = rng.random(n_children) < 1.0 - (p.r - 1) * flip
            shift = 1 + rng.integers(0, p.r - 1, size=n_children)
            child_attr = np.where(same, parent_attr, (parent_attr + shift) % p.r)

        parents.append(parent_idx)
        depths.append(np.full(n_children, depth, dtype=np.int64))
        attrs.append(child_attr.astype(np.int64))
        elabels.append(child_label.astype(np.int64))
        gen_start = total
        total += n_children
        gen_attrs = child_attr
        if truncated:
            break

    return TreeInstance(
        r=p.r,
        labels=p.labels,
        depth_cap=R,
        parent=np.concatenate(parents),
        depth=np.concatenate(depths),
        attribute=np.concatenate(attrs),
        edge_label=np.concatenate(elabels),
        truncated=truncated,
    )


def sample_forest(p: SparseParams, R: int, n_trees: int, seed: int,
                  mode: str = "attribute-first") -> list[TreeInstance]:
    """Independent trees from per-trial derived seeds."""
    seeds = np.random.SeedSequence(seed, spawn_key=(12,)).generate_state(n_trees)
    return [sample_tree(p, R, int(s), mode=mode) for s in seeds]


# ---------------------------------------------------------------------------
# Root posterior
# ---------------------------------------------------------------------------

def root_posterior(
    tree: TreeInstance,
    p: SparseParams,
    conditioning: str = "leaves-only",
    depth: Optional[int] = None,
) -> np.ndarray:
    """Exact posterior of the root attribute by upward sum-product.

    Conditions on the tree shape and all edge labels down to ``depth``
    (default: the tree's depth cap), plus revealed attributes: the nodes at
    exactly that depth for ``leaves-only``, or every non-root node for
    ``full-path``. The per-edge transition matrix for label l has diagonal
    1 - (r-1) eps(l) and off-diagonal eps(l). Messages are accumulated in
    log space, so deep trees cannot underflow.
    """
    if conditioning not in ("leaves-only", "full-path"):
        raise ValueError(f"unknown conditioning {conditioning!r}")
    R = tree.depth_cap if depth is None else depth
    if R < 0:
        raise ValueError("depth must be nonnegative")
    r = p.r
    if tree.r != r:
        raise ValueError("tree and parameters disagree on r")
    marginal, eps, pos = _transition_stats(p)
    if tree.num_nodes > 1:
        used = np.unique(tree.edge_label[1:])
        if np.any(~pos[used]):
            bad = [p.labels[int(k)] for k in used if not pos[int(k)]]
            raise ValueError(f"tree contains zero-probability labels {bad}")

    keep = tree.depth <= R
    n_kept = int(keep.sum())
    if n_kept <= 1:
        return np.full(r, 1.0 / r)

    # Transition matrices per label: rows are the parent attribute.
    mats = np.empty((len(p.labels), r, r))
    for k in range(len(p.labels)):
        e = eps[k]
        mats[k] = e
        np.fill_diagonal(mats[k], 1.0 - (r - 1) * e)

    logm = np.zeros((tree.num_nodes, r))
    if conditioning == "leaves-only":
        revealed = keep & (tree.depth == R)
    else:
        revealed = keep & (tree.depth > 0)
    idx = np.nonzero(revealed)[0]
    logm[idx] = -np.inf
    logm[idx, tree.attribute[idx]] = 0.0

    max_d = int(tree.depth[keep].max())
    for d in range(max_d, 0, -1):
        nodes = np.nonzero(keep & (tree.depth == d))[0]
        if not nodes.size:
            continue
        # Normalize in linear space per node; the dropped constant cancels
        # in the final normalization.
        lm = logm[nodes]
        peak = lm.max(axis=1, keepdims=True)
        msg = np.exp(lm - peak)
        contrib = np.einsum("eij,ej->ei", mats[tree.edge_label[nodes]], msg)
        with np.errstate(divide="ignore"):
            logc = np.log(contrib)
        np.add.at(logm, tree.parent[nodes], logc)

    root = logm[0]
    peak = root.max()
    if not np.isfinite(peak):
        raise ValueError("revealed attributes have probability zero under the model")
    post = np.exp(root - peak)
    post /= post.sum()
    assert abs(post.sum() - 1.0) <= 1e-12
    return post


def posterior_deviation(posterior: np.ndarray) -> float:
    """Mean absolute deviation of a posterior from the uniform distribution."""
    r = posterior.size
    return float(np.mean(np.abs(posterior - 1.0 / r)))


# ---------------------------------------------------------------------------
# Coupling branching process
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurvivalEstimate:
    survival: float
    ci_lo: float
    ci_hi: float
    trials: int
    depth: int


def _wilson_interval(hits: int, trials: int, z: float = 1.959963984540054):
    phat = hits / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials**2)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def coupling_survival(p: SparseParams, R: int, trials: int, seed: int) -> SurvivalEstimate:
    """Monte-Carlo survival of the non-coupled set at depth R.

    Each node spawns Poisson(d) children; a child with edge label l stays
    non-coupled with probability |1 - r eps(l)|, so the process has mean
    offspring omega * tau. Only generation totals matter for survival, so
    trials are simulated as aggregated counts (sums of independent Poisson
    and binomial thinnings), which is distributionally identical to the
    per-node description.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if R < 0:
        raise ValueError("depth must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(13,)))
    d = p.offspring_mean
    marginal, eps, pos = _transition_stats(p)
    p_keep = np.abs(1.0 - p.r * eps)
    labels = np.nonzero(pos)[0]

    alive = np.ones(trials, dtype=np.int64)
    for _ in range(R):
        active = alive > 0
        if not active.any():
            break
        z = alive[active]
        children = rng.poisson(z * d)
        kept = np.zeros_like(children)
        remaining = children.copy()
        tail_mass = 1.0
        for k in labels[:-1]:
            frac = marginal[k] / tail_mass
            n_k = rng.binomial(remaining, min(max(frac, 0.0), 1.0))
            kept += rng.binomial(n_k, min(p_keep[k], 1.0))
            remaining -= n_k
            tail_mass -= marginal[k]
        kept += rng.binomial(remaining, min(p_keep[labels[-1]], 1.0))
        next_alive = np.zeros_like(alive)
        next_alive[active] = np.minimum(kept, _SURVIVAL_POP_CAP)
        alive = next_alive

    hits = int((alive > 0).sum())
    lo, hi = _wilson_interval(hits, trials)
    return SurvivalEstimate(survival=hits / trials, ci_lo=lo, ci_hi=hi,
                            trials=trials, depth=R)
