"""
Weighted index sampling over N positive weights

WeightedSampler keeps a Fenwick (binary indexed) tree of prefix sums so that
both a point update and a draw cost O(log N). LinearScanSampler offers the same
interface with an O(N) cumulative scan and serves as the reference the tree is
checked against.

The njit primitives operate on raw arrays so the discrete-model kernel can
inline them in its own loop.
"""

import logging
import math

import numpy as np
from numba import njit

from errors import DomainError

logger = logging.getLogger(__name__)


@njit(cache=True)
def fenwick_build(leaves, tree):
    """Fill tree (length n + 1, 1-based) from leaves in O(n)"""
    n = leaves.shape[0]
    tree[0] = 0.0
    for i in range(1, n + 1):
        tree[i] = leaves[i - 1]
    for i in range(1, n + 1):
        j = i + (i & -i)
        if j <= n:
            tree[j] += tree[i]


@njit(cache=True)
def fenwick_add(tree, index, delta):
    """Add delta to the 0-based leaf index"""
    n = tree.shape[0] - 1
    i = index + 1
    while i <= n:
        tree[i] += delta
        i += i & -i


@njit(cache=True)
def fenwick_find(tree, target, top):
    """
    Smallest 0-based j whose prefix sum over leaves 0..j exceeds target

    top is the largest power of two not above n. The result is clamped to
    n - 1 so a target that rounding pushed past the total still lands on a
    valid leaf.
    """
    n = tree.shape[0] - 1
    pos = 0
    step = top
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= target:
            pos = nxt
            target -= tree[nxt]
        step >>= 1
    if pos > n - 1:
        pos = n - 1
    return pos


@njit(cache=True)
def linear_find(leaves, target):
    acc = 0.0
    n = leaves.shape[0]
    for j in range(n):
        acc += leaves[j]
        if acc > target:
            return j
    return n - 1


def highest_power_of_two(n: int) -> int:
    return 1 << (int(n).bit_length() - 1)


def _validated(weights) -> np.ndarray:
    leaves = np.array(weights, dtype=np.float64)
    if leaves.ndim != 1 or leaves.size == 0:
        raise DomainError("Sampler needs a nonempty one-dimensional weight vector")
    if not np.all(np.isfinite(leaves)) or np.any(leaves <= 0):
        raise DomainError("Sampler weights must be positive and finite")
    return leaves


class WeightedSampler:
    """
    Prefix-sum tree sampler

    Args:
        weights: N positive weights; leaf j is drawn with probability
            weights[j] / sum(weights)
    """

    def __init__(self, weights):
        self.leaves = _validated(weights)
        self.n = self.leaves.size
        self.tree = np.zeros(self.n + 1, dtype=np.float64)
        self.top = highest_power_of_two(self.n)
        self.total = 0.0
        self.rebuild()

    def rebuild(self):
        """Recompute the tree and the running total from the leaves"""
        fenwick_build(self.leaves, self.tree)
        self.total = math.fsum(self.leaves.tolist())

    def update(self, j: int, weight: float):
        """Set leaf j to weight"""
        if not (weight > 0 and math.isfinite(weight)):
            raise DomainError(f"Sampler weights must be positive and finite, got {weight}")
        delta = weight - self.leaves[j]
        self.leaves[j] = weight
        fenwick_add(self.tree, j, delta)
        self.total += delta

    def sample(self, u: float) -> int:
        """Map a uniform u in [0, 1) to a leaf index"""
        return int(fenwick_find(self.tree, u * self.total, self.top))

    def draw(self, rng: np.random.Generator) -> int:
        return self.sample(rng.random())

    def drift(self) -> float:
        """Relative gap between the running total and an exact sum of the leaves"""
        exact = math.fsum(self.leaves.tolist())
        return abs(self.total - exact) / exact

    def probabilities(self) -> np.ndarray:
        return self.leaves / self.leaves.sum()


class LinearScanSampler(WeightedSampler):
    """Same interface as WeightedSampler with an O(N) cumulative scan"""

    def __init__(self, weights):
        self.leaves = _validated(weights)
        self.n = self.leaves.size
        self.total = 0.0
        self.rebuild()

    def rebuild(self):
        self.total = float(np.sum(self.leaves))

    def update(self, j: int, weight: float):
        if not (weight > 0 and math.isfinite(weight)):
            raise DomainError(f"Sampler weights must be positive and finite, got {weight}")
        self.leaves[j] = weight
        self.total = float(np.sum(self.leaves))

    def sample(self, u: float) -> int:
        return int(linear_find(self.leaves, u * self.total))
