"""The Luce model: sequential weighted sampling without replacement.

A weight vector (theta_1, ..., theta_n) assigns each label a strictly
positive weight.  Balls are drawn one at a time, each draw picking an
undrawn label with probability proportional to its weight; the resulting
draw order is a random permutation sigma with

    P(sigma) = prod_j theta_{sigma(j)} / (remaining weight before draw j).

sigma(1) is always the first label drawn.  The same distribution arises by
attaching independent Exponential(theta_i) clocks to the labels and sorting
them in increasing order, which is the basis of the second sampler and of
everything the topk/bottomk modules compute.

Weights are accepted unnormalized everywhere; when an operation needs a
probability vector, normalization is the caller's explicit step.
"""

import itertools
import math

import numpy as np

from . import kernels
from .exceptions import PreconditionError
from .rng import RngStream

__all__ = [
    "WeightVector",
    "Permutation",
    "RngStream",
    "as_weight_vector",
    "as_permutation",
    "luce_pmf",
    "normalize",
    "restrict",
    "sukhatme_weights",
    "bruhat_covers",
    "sample_urn",
    "sample_urn_many",
    "sample_exponential",
    "sample_exponential_many",
    "sample_spacings",
    "sample_spacings_many",
    "all_permutations",
    "permutation_rank_many",
]

# above this size single draws switch from linear scans to a prefix-sum tree
URN_SCAN_MAX = 10_000


class WeightVector:
    """Strictly positive, finite weights for labels 1..n.

    The array is stored immutably; ``weights[i]`` is the weight of label
    ``i + 1``.  ``total`` is cached at construction (the array cannot change
    afterwards, so the cache stays consistent).
    """

    __slots__ = ("_weights", "_total")

    def __init__(self, weights):
        arr = np.array(weights, dtype=np.float64, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise PreconditionError("weights must be a nonempty one-dimensional sequence")
        if not np.all(np.isfinite(arr)):
            raise PreconditionError("weights must be finite")
        if np.any(arr <= 0.0):
            raise PreconditionError("weights must be strictly positive")
        arr.flags.writeable = False
        self._weights = arr
        self._total = float(arr.sum())

    @property
    def weights(self):
        return self._weights

    @property
    def n(self):
        return self._weights.size

    @property
    def total(self):
        return self._total

    def __len__(self):
        return self._weights.size

    def __eq__(self, other):
        if not isinstance(other, WeightVector):
            return NotImplemented
        return np.array_equal(self._weights, other._weights)

    def __repr__(self):
        return f"WeightVector({self._weights.tolist()!r})"


class Permutation:
    """A permutation of 1..n in draw order: ``p(j)`` is the j-th label drawn."""

    __slots__ = ("_mapping",)

    def __init__(self, mapping):
        m = tuple(int(v) for v in mapping)
        if sorted(m) != list(range(1, len(m) + 1)):
            raise PreconditionError(f"not a permutation of 1..{len(m)}: {m}")
        self._mapping = m

    @classmethod
    def identity(cls, n):
        return cls(range(1, n + 1))

    @property
    def mapping(self):
        return self._mapping

    @property
    def n(self):
        return len(self._mapping)

    def __call__(self, j):
        """sigma(j) for 1-based position j."""
        if not 1 <= j <= len(self._mapping):
            raise PreconditionError(f"position {j} out of range 1..{len(self._mapping)}")
        return self._mapping[j - 1]

    def inverse(self):
        inv = [0] * len(self._mapping)
        for pos, lab in enumerate(self._mapping, start=1):
            inv[lab - 1] = pos
        return Permutation(inv)

    def __iter__(self):
        return iter(self._mapping)

    def __len__(self):
        return len(self._mapping)

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return self._mapping == other._mapping

    def __hash__(self):
        return hash(self._mapping)

    def __repr__(self):
        return f"Permutation({self._mapping!r})"


def as_weight_vector(w):
    return w if isinstance(w, WeightVector) else WeightVector(w)


def as_permutation(sigma):
    return sigma if isinstance(sigma, Permutation) else Permutation(sigma)


def luce_pmf(w, sigma):
    """Probability of drawing the labels in exactly the order ``sigma``."""
    w = as_weight_vector(w)
    sigma = as_permutation(sigma)
    if sigma.n != w.n:
        raise PreconditionError(f"permutation has n={sigma.n} but weights have n={w.n}")
    pw = w.weights[np.asarray(sigma.mapping) - 1]
    # denominator of draw j is the total weight still in the urn, which is
    # the suffix sum of the permuted weights
    denoms = np.cumsum(pw[::-1])[::-1]
    return float(np.prod(pw / denoms))


def normalize(w):
    """Rescale so the weights sum to one."""
    w = as_weight_vector(w)
    return WeightVector(w.weights / w.total)


def restrict(w, subset):
    """Weights of a subset of labels, in the order given.

    Sampling restricted weights reproduces the relative draw order of the
    subset under the full model (irrelevance of the other labels).
    """
    w = as_weight_vector(w)
    idx = [int(i) for i in subset]
    if len(idx) == 0:
        raise PreconditionError("subset must be nonempty")
    if len(set(idx)) != len(idx):
        raise PreconditionError("subset labels must be distinct")
    for i in idx:
        if not 1 <= i <= w.n:
            raise PreconditionError(f"label {i} out of range 1..{w.n}")
    return WeightVector(w.weights[np.asarray(idx) - 1])


def sukhatme_weights(n, orientation="descending"):
    """Integer weights n..1 (descending) or 1..n (ascending), unnormalized."""
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if orientation == "descending":
        return WeightVector(np.arange(n, 0, -1, dtype=np.float64))
    if orientation == "ascending":
        return WeightVector(np.arange(1, n + 1, dtype=np.float64))
    raise PreconditionError(f"orientation must be 'descending' or 'ascending', got {orientation!r}")


def bruhat_covers(sigma):
    """Permutations reached from ``sigma`` by transposing one adjacent ascent.

    These are the elements covered by ``sigma`` in the weak order: each has
    one more inversion.  For weights sorted in decreasing order the pmf can
    only drop along such a step, so the identity is the mode and the
    reversal the antimode.
    """
    sigma = as_permutation(sigma)
    m = list(sigma.mapping)
    out = []
    for i in range(len(m) - 1):
        if m[i] < m[i + 1]:
            swapped = m.copy()
            swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
            out.append(Permutation(swapped))
    return out


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def sample_urn_many(w, size, rng, method="auto"):
    """Draw ``size`` independent permutations by sequential urn draws.

    Returns an (size, n) int64 array of 1-based labels in draw order.
    ``method`` is ``auto`` (linear scans up to n = 10_000, prefix-sum tree
    above), ``scan``, or ``tree``.
    """
    w = as_weight_vector(w)
    if size < 0:
        raise PreconditionError("size must be nonnegative")
    if size == 0:
        return np.empty((0, w.n), dtype=np.int64)
    if method == "auto":
        method = "scan" if w.n <= URN_SCAN_MAX else "tree"
    if method == "scan":
        uniforms = rng.random((size, w.n))
        return kernels.weighted_order_many(w.weights, uniforms) + 1
    if method == "tree":
        out = np.empty((size, w.n), dtype=np.int64)
        for s in range(size):
            out[s] = _urn_order_tree(w.weights, rng)
        return out + 1
    raise PreconditionError(f"unknown method {method!r}")


def sample_urn(w, rng, method="auto"):
    """One permutation from the urn scheme."""
    return Permutation(sample_urn_many(w, 1, rng, method=method)[0])


def _urn_order_tree(weights, rng):
    """One draw order via a Fenwick tree of remaining weights, O(n log n)."""
    n = weights.size
    tree = np.zeros(n + 1)
    for i in range(1, n + 1):
        tree[i] += weights[i - 1]
        parent = i + (i & -i)
        if parent <= n:
            tree[parent] += tree[i]
    total = float(weights.sum())
    remaining = weights.copy()
    top_bit = 1 << (n.bit_length() - 1)
    order = np.empty(n, dtype=np.int64)
    for j in range(n):
        r = rng.random() * total
        # descend the tree to the first index whose prefix sum exceeds r
        idx = 0
        bit = top_bit
        acc = 0.0
        while bit:
            nxt = idx + bit
            if nxt <= n and acc + tree[nxt] <= r:
                idx = nxt
                acc += tree[nxt]
            bit >>= 1
        idx = min(idx, n - 1)  # r at or beyond the grand total
        while remaining[idx] <= 0.0:  # numerical edge: step back to a live label
            idx -= 1
        order[j] = idx
        delta = remaining[idx]
        remaining[idx] = 0.0
        total -= delta
        i = idx + 1
        while i <= n:
            tree[i] -= delta
            i += i & -i
    return order


def sample_exponential_many(w, size, rng):
    """Draw permutations by sorting independent exponential clocks.

    X_i = -log(U_i) / theta_i; the draw order is the ascending sort of the
    clocks, ties broken toward the smaller label.
    """
    w = as_weight_vector(w)
    if size < 0:
        raise PreconditionError("size must be nonnegative")
    if size == 0:
        return np.empty((0, w.n), dtype=np.int64)
    u = rng.random((size, w.n))
    with np.errstate(divide="ignore"):
        x = -np.log(u) / w.weights[None, :]
    return np.argsort(x, axis=1, kind="stable").astype(np.int64) + 1


def sample_exponential(w, rng):
    return Permutation(sample_exponential_many(w, 1, rng)[0])


def sample_spacings_many(n, size, rng):
    """Spacings of n sorted standard exponentials, ``size`` independent rows.

    Row entries are Y_(1), Y_(2)-Y_(1), ..., Y_(n)-Y_(n-1); the j-th spacing
    (1-based) is distributed as Exponential(1)/(n - j + 1).
    """
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if size < 0:
        raise PreconditionError("size must be nonnegative")
    y = -np.log(rng.random((size, n)))
    y.sort(axis=1)
    return np.diff(y, axis=1, prepend=0.0)


def sample_spacings(n, rng):
    return sample_spacings_many(n, 1, rng)[0]


# ---------------------------------------------------------------------------
# enumeration helpers
# ---------------------------------------------------------------------------

def all_permutations(n):
    """All of S_n in lexicographic order."""
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if n > 10:
        raise PreconditionError(f"refusing to enumerate {n}! permutations (n > 10)")
    return [Permutation(p) for p in itertools.permutations(range(1, n + 1))]


def permutation_rank_many(perms):
    """Lexicographic ranks of an array of 1-based permutation rows.

    Vectorized Lehmer encoding; handy for histogramming sampler output
    against the n! pmf values in ``all_permutations`` order.
    """
    a = np.asarray(perms, dtype=np.int64)
    if a.ndim == 1:
        a = a[None, :]
    n = a.shape[1]
    fact = [math.factorial(i) for i in range(n)]
    ranks = np.zeros(a.shape[0], dtype=np.int64)
    for i in range(n - 1):
        smaller_later = np.sum(a[:, i + 1:] < a[:, i:i + 1], axis=1)
        ranks += smaller_later * fact[n - 1 - i]
    return ranks
