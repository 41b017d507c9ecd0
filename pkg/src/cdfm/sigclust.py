"""
SigClust: significance of a 2-means split against a single-Gaussian null,
applied recursively to choose the number of communities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ValidationError

__all__ = [
    "cluster_index",
    "two_means",
    "SigClustTest",
    "sigclust_test",
    "SigClustNode",
    "ChooseKResult",
    "choose_k",
]

EIGEN_FLOOR = 1e-10


def cluster_index(points, labels2) -> float:
    """Within-group sum of squares over the total sum of squares."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    lab = np.asarray(labels2)
    groups = np.unique(lab)
    if groups.size != 2:
        raise ValidationError("cluster index needs exactly two nonempty groups")
    total = np.sum((x - x.mean(axis=0)) ** 2)
    if total == 0:
        raise ValidationError("all points coincide; total variation is zero")
    within = sum(np.sum((x[lab == g] - x[lab == g].mean(axis=0)) ** 2) for g in groups)
    return float(within / total)


def _batched_two_means(x, rng, max_iter=100):
    """2-means (k-means++ seeding + Lloyd) on a stack of datasets ``(B, n, r)``.

    Returns labels ``(B, n)`` and the cluster index of each dataset.
    """
    x = x - x.mean(axis=1, keepdims=True)
    B, n, _ = x.shape
    rows = np.arange(B)
    first = rng.integers(n, size=B)
    c0 = x[rows, first]
    d2 = np.sum((x - c0[:, None, :]) ** 2, axis=2)
    cum = np.cumsum(d2, axis=1)
    u = rng.random(B) * cum[:, -1]
    second = np.minimum((cum < u[:, None]).sum(axis=1), n - 1)
    means = np.stack([c0, x[rows, second]], axis=1)
    labels = np.zeros((B, n), dtype=np.int8)
    for it in range(max_iter):
        dist = np.sum((x[:, :, None, :] - means[:, None, :, :]) ** 2, axis=3)
        new = (dist[:, :, 1] < dist[:, :, 0]).astype(np.int8)
        if it > 0 and np.array_equal(new, labels):
            break
        labels = new
        w1 = labels[:, :, None].astype(float)
        n1 = w1.sum(axis=1)
        n0 = n - n1
        s1 = (x * w1).sum(axis=1)
        s0 = x.sum(axis=1) - s1
        # keep the old center when a cluster empties
        means = np.stack([
            np.where(n0 > 0, s0 / np.maximum(n0, 1), means[:, 0]),
            np.where(n1 > 0, s1 / np.maximum(n1, 1), means[:, 1]),
        ], axis=1)
    total = np.sum(x**2, axis=(1, 2))
    w1 = labels[:, :, None].astype(float)
    n1 = w1.sum(axis=1)
    n0 = n - n1
    s1 = (x * w1).sum(axis=1)
    s0 = x.sum(axis=1) - s1
    between = (np.sum(s0**2, axis=1) / np.maximum(n0[:, 0], 1)
               + np.sum(s1**2, axis=1) / np.maximum(n1[:, 0], 1))
    within = total - between
    with np.errstate(invalid="ignore", divide="ignore"):
        ci = np.clip(within / total, 0.0, 1.0)
    return labels, ci


def two_means(points, rng):
    """Labels (0/1) of a 2-means split and its cluster index."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    labels, ci = _batched_two_means(x[None], rng)
    return labels[0].astype(int), float(ci[0])


@dataclass
class SigClustTest:
    p_value: float
    cluster_index: float
    labels: np.ndarray
    null_eigenvalues: np.ndarray
    null_ci: np.ndarray = field(repr=False)


def sigclust_test(points, n_sim: int, rng: np.random.Generator, batch: int = 100) -> SigClustTest:
    """Test one node: observed 2-means CI against CIs of Gaussian-null datasets.

    The null has the sample mean (irrelevant for the CI) and a diagonal
    covariance holding the sample covariance eigenvalues. The p-value is
    the fraction of simulated CIs at or below the observed one.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n, r = x.shape
    if n_sim < 1:
        raise ValidationError("n_sim must be at least 1")
    if n < 4:
        raise ValidationError("SigClust needs at least 4 points")
    labels, ci = two_means(x, rng)
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    vals = np.linalg.eigvalsh(cov)[::-1]
    vals = np.maximum(vals, EIGEN_FLOOR * max(vals.max(), EIGEN_FLOOR))
    sd = np.sqrt(vals)
    null_ci = np.empty(n_sim)
    for start in range(0, n_sim, batch):
        b = min(batch, n_sim - start)
        sims = rng.standard_normal((b, n, r)) * sd
        _, null_ci[start:start + b] = _batched_two_means(sims, rng)
    p = float(np.mean(null_ci <= ci))
    return SigClustTest(p, ci, labels, vals, null_ci)


@dataclass
class SigClustNode:
    indices: np.ndarray
    p_value: Optional[float] = None
    cluster_index: Optional[float] = None
    children: List["SigClustNode"] = field(default_factory=list)
    path: tuple = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self):
        if self.is_leaf:
            return [self]
        return [leaf for c in self.children for leaf in c.leaves()]

    def to_dict(self):
        return {
            "size": int(self.indices.size),
            "indices": self.indices.tolist(),
            "p_value": self.p_value,
            "cluster_index": self.cluster_index,
            "children": [c.to_dict() for c in self.children],
        }


@dataclass
class ChooseKResult:
    k_hat: int
    tree: SigClustNode
    labels: np.ndarray


def choose_k(points, tau: float = 0.30, n_sim: int = 1000, max_k: int = 20,
             rng: Optional[np.random.Generator] = None, min_size: Optional[int] = None) -> ChooseKResult:
    """Split recursively while the SigClust p-value is below ``tau``.

    Each node draws from its own stream derived from one base seed and the
    node's position in the tree, so a node's test does not depend on which
    other nodes were tested. Nodes are expanded breadth first.
    """
    if not 0 < tau < 1:
        raise ValidationError("tau must lie in (0, 1)")
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n, r = x.shape
    rng = np.random.default_rng() if rng is None else rng
    min_size = max(4, 4 * r) if min_size is None else min_size
    base = int(rng.integers(2**63))
    root = SigClustNode(np.arange(n))
    queue = [root]
    leaves = 1
    while queue and leaves < max_k:
        node = queue.pop(0)
        if node.indices.size < min_size:
            continue
        node_rng = np.random.default_rng(np.random.SeedSequence([base, len(node.path), *node.path]))
        test = sigclust_test(x[node.indices], n_sim, node_rng)
        node.p_value, node.cluster_index = test.p_value, test.cluster_index
        if test.p_value >= tau:
            continue
        node.children = [
            SigClustNode(node.indices[test.labels == g], path=node.path + (g,)) for g in (0, 1)
        ]
        leaves += 1
        queue.extend(node.children)
    labels = np.empty(n, dtype=int)
    for k, leaf in enumerate(root.leaves()):
        labels[leaf.indices] = k
    return ChooseKResult(len(root.leaves()), root, labels)
