"""Random walks on the chambers of the Boolean and braid arrangements.

Chambers of the Boolean arrangement in dimension d are sign vectors in
{-1, +1}^d; faces allow zeros.  Chambers of the braid arrangement on n
labels are orderings (permutations in one-line form, read top to bottom);
faces are block-ordered set partitions.  Projecting a chamber onto a face
overrides the coordinates the face pins down and keeps the chamber's
relative structure elsewhere:

    boolean:  output_i = face_i if face_i != 0 else chamber_i
    braid:    list the face's blocks in order, each block's labels in the
              relative order they held in the chamber

A walk step draws a face F with probability w_F and replaces the current
chamber by its projection onto F.  When the positive-weight faces separate
the chambers, the walk has a unique stationary law, and an exact stationary
draw is obtained by pulling all positive faces out of an urn without
replacement (proportional to weight) and applying them to any reference
chamber in reverse draw order.  Single-use moves (move-to-front, inverse
riffle, coordinate flips, edge 2-coloring) are provided as prebuilt face
weight tables.
"""

import itertools
import math

import numpy as np

from . import kernels
from .core import Permutation, all_permutations, as_permutation, as_weight_vector, \
    permutation_rank_many
from .exceptions import PreconditionError, ToleranceError
from .rng import RngStream

__all__ = [
    "SignVector",
    "BlockOrderedSetPartition",
    "FaceWeightTable",
    "ChamberChain",
    "project_boolean",
    "project_braid",
    "walk_step",
    "enumerate_chambers",
    "chamber_index",
    "transition_matrix",
    "is_separating",
    "stationary_exact",
    "brown_diaconis_sample",
    "brown_diaconis_sample_many",
    "tsetlin_face_weights",
    "riffle_face_weights",
    "ehrenfest_face_weights",
    "graph_coloring_face_weights",
    "graph_coloring_step",
]

WEIGHT_SUM_TOL = 1e-12
BOOLEAN_ENUM_MAX = 15   # 2^15 chambers
BRAID_ENUM_MAX = 8      # 8! chambers
_RANK_CHECK_MAX = 1024  # dense rank verification cap for the stationary solve

_SIGN_CHARS = {1: "+", -1: "-", 0: "0"}
_CHAR_SIGNS = {v: k for k, v in _SIGN_CHARS.items()}


class SignVector:
    """A face of the Boolean arrangement: entries over {-1, 0, +1}.

    Chambers are exactly the sign vectors with no zero entry.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        t = tuple(int(v) for v in entries)
        if not t:
            raise PreconditionError("sign vector needs at least one entry")
        if any(v not in (-1, 0, 1) for v in t):
            raise PreconditionError("entries must lie in {-1, 0, +1}")
        self.entries = t

    @classmethod
    def from_string(cls, s):
        """Parse a compact '+-0' string."""
        try:
            return cls(_CHAR_SIGNS[ch] for ch in s)
        except KeyError:
            raise PreconditionError(f"bad sign character in {s!r}") from None

    @property
    def d(self):
        return len(self.entries)

    @property
    def is_chamber(self):
        return all(v != 0 for v in self.entries)

    def to_array(self):
        return np.array(self.entries, dtype=np.int8)

    def to_string(self):
        return "".join(_SIGN_CHARS[v] for v in self.entries)

    def __eq__(self, other):
        if not isinstance(other, SignVector):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"SignVector('{self.to_string()}')"


class BlockOrderedSetPartition:
    """A face of the braid arrangement: an ordered partition of {1..n}.

    Blocks are listed top block first; chambers are the partitions into
    singletons (equivalently, orderings).
    """

    __slots__ = ("blocks",)

    def __init__(self, blocks):
        bs = tuple(frozenset(int(x) for x in b) for b in blocks)
        if not bs or any(not b for b in bs):
            raise PreconditionError("blocks must be nonempty")
        n = sum(len(b) for b in bs)
        seen = set().union(*bs)
        if len(seen) != n or seen != set(range(1, n + 1)):
            raise PreconditionError("blocks must be disjoint with union {1..n}")
        self.blocks = bs

    @classmethod
    def from_string(cls, s):
        """Parse '1,3/2/4,5' (blocks slash-separated, labels comma-separated)."""
        return cls([part.split(",") for part in s.split("/")])

    @property
    def n(self):
        return sum(len(b) for b in self.blocks)

    @property
    def is_chamber(self):
        return all(len(b) == 1 for b in self.blocks)

    def block_ids(self):
        """(n,) int64 array: entry lab-1 is the 0-based block index of lab."""
        ids = np.empty(self.n, dtype=np.int64)
        for b, block in enumerate(self.blocks):
            for lab in block:
                ids[lab - 1] = b
        return ids

    def to_string(self):
        return "/".join(",".join(str(x) for x in sorted(b)) for b in self.blocks)

    def __eq__(self, other):
        if not isinstance(other, BlockOrderedSetPartition):
            return NotImplemented
        return self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    def __repr__(self):
        return f"BlockOrderedSetPartition('{self.to_string()}')"


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------

def project_boolean(c, f):
    """Project chamber ``c`` onto face ``f``: f's entry wins where nonzero."""
    if not isinstance(c, SignVector):
        c = SignVector(c)
    if not isinstance(f, SignVector):
        f = SignVector(f)
    if c.d != f.d:
        raise PreconditionError(f"dimension mismatch: {c.d} vs {f.d}")
    if not c.is_chamber:
        raise PreconditionError("c must be a chamber (no zero entries)")
    return SignVector(fv if fv != 0 else cv for fv, cv in zip(f.entries, c.entries))


def project_braid(c, f):
    """Project ordering ``c`` onto face ``f``.

    Lists f's blocks in order; within each block, labels keep the relative
    order they held in c.
    """
    c = as_permutation(c)
    if not isinstance(f, BlockOrderedSetPartition):
        f = BlockOrderedSetPartition(f)
    if c.n != f.n:
        raise PreconditionError(f"size mismatch: {c.n} vs {f.n}")
    ids = f.block_ids()
    order = sorted(c.mapping, key=lambda lab: ids[lab - 1])
    return Permutation(order)


# ---------------------------------------------------------------------------
# face weight tables and walks
# ---------------------------------------------------------------------------

class FaceWeightTable:
    """A probability distribution over faces of one arrangement.

    ``pairs`` may be a dict or an iterable of (face, weight); duplicate
    faces merge by summing their weights (map semantics).  Zero-weight
    faces are dropped: they are never drawn by the walk and the urn
    sampler's without-replacement rule is undefined for them.  Faces are
    stored in a canonical order so identically-specified tables behave
    identically regardless of construction order.
    """

    __slots__ = ("kind", "dim", "faces", "weights", "_matrix")

    def __init__(self, kind, dim, pairs):
        if kind not in ("boolean", "braid"):
            raise PreconditionError("kind must be 'boolean' or 'braid'")
        dim = int(dim)
        if dim < 1:
            raise PreconditionError("dimension must be at least 1")
        face_cls = SignVector if kind == "boolean" else BlockOrderedSetPartition
        merged = {}
        items = pairs.items() if isinstance(pairs, dict) else pairs
        total = 0.0
        for face, weight in items:
            if not isinstance(face, face_cls):
                if isinstance(face, (SignVector, BlockOrderedSetPartition)):
                    raise PreconditionError(
                        f"{kind} table cannot hold {type(face).__name__} faces"
                    )
                face = face_cls(face)
            fdim = face.d if kind == "boolean" else face.n
            if fdim != dim:
                raise PreconditionError(f"face {face!r} has wrong dimension")
            weight = float(weight)
            if weight < 0.0 or not math.isfinite(weight):
                raise PreconditionError("face weights must be finite and nonnegative")
            merged[face] = merged.get(face, 0.0) + weight
            total += weight
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise PreconditionError(f"face weights sum to {total!r}, not 1")
        kept = [(f, w) for f, w in merged.items() if w > 0.0]
        if not kept:
            raise PreconditionError("need at least one positive-weight face")
        if kind == "boolean":
            kept.sort(key=lambda fw: fw[0].entries)
        else:
            kept.sort(key=lambda fw: tuple(fw[0].block_ids()))
        self.kind = kind
        self.dim = dim
        self.faces = tuple(f for f, _ in kept)
        self.weights = np.array([w for _, w in kept], dtype=np.float64)
        self.weights.flags.writeable = False
        self._matrix = None

    @property
    def m(self):
        return len(self.faces)

    def weight_of(self, face):
        for f, w in zip(self.faces, self.weights):
            if f == face:
                return float(w)
        return 0.0

    def entries_matrix(self):
        """(m, dim) int8 sign entries, or (m, n) int64 dense block ids."""
        if self._matrix is None:
            if self.kind == "boolean":
                self._matrix = np.stack([f.to_array() for f in self.faces])
            else:
                self._matrix = np.stack([f.block_ids() for f in self.faces])
            self._matrix.flags.writeable = False
        return self._matrix

    def __repr__(self):
        return f"FaceWeightTable({self.kind}, dim={self.dim}, m={self.m})"


class ChamberChain:
    """A face-weighted walk together with its current chamber."""

    __slots__ = ("face_table", "current")

    def __init__(self, face_table, start):
        self.face_table = face_table
        self.current = _check_chamber(face_table.kind, face_table.dim, start)


def _check_chamber(kind, dim, chamber):
    if kind == "boolean":
        if not isinstance(chamber, SignVector):
            chamber = SignVector(chamber)
        if chamber.d != dim or not chamber.is_chamber:
            raise PreconditionError("start must be a chamber of the arrangement")
        return chamber
    chamber = as_permutation(chamber)
    if chamber.n != dim:
        raise PreconditionError("start must be an ordering of the right size")
    return chamber


def _generator(rng):
    return rng.generator if isinstance(rng, RngStream) else rng


def _draw_face_index(table, g):
    cum = np.cumsum(table.weights)
    idx = int(np.searchsorted(cum, g.random(), side="right"))
    return min(idx, table.m - 1)


def walk_step(chain, rng):
    """Draw a face with probability w_F, project, advance, and return."""
    g = _generator(rng)
    face = chain.face_table.faces[_draw_face_index(chain.face_table, g)]
    if chain.face_table.kind == "boolean":
        chain.current = project_boolean(chain.current, face)
    else:
        chain.current = project_braid(chain.current, face)
    return chain.current


# ---------------------------------------------------------------------------
# exact machinery at enumerable scale
# ---------------------------------------------------------------------------

def _check_enum_size(kind, dim):
    if kind == "boolean" and dim > BOOLEAN_ENUM_MAX:
        raise PreconditionError(f"boolean enumeration capped at d={BOOLEAN_ENUM_MAX}")
    if kind == "braid" and dim > BRAID_ENUM_MAX:
        raise PreconditionError(f"braid enumeration capped at n={BRAID_ENUM_MAX}")


def enumerate_chambers(kind, dim):
    """All chambers in canonical (index) order.

    Boolean chambers are ordered with -1 before +1 lexicographically; braid
    chambers are orderings in lexicographic one-line order.
    """
    _check_enum_size(kind, dim)
    if kind == "boolean":
        return [SignVector(t) for t in itertools.product((-1, 1), repeat=dim)]
    return all_permutations(dim)


def chamber_index(chamber):
    """Index of a chamber in its ``enumerate_chambers`` listing."""
    if isinstance(chamber, SignVector):
        if not chamber.is_chamber:
            raise PreconditionError("not a chamber")
        idx = 0
        for v in chamber.entries:
            idx = 2 * idx + (1 if v > 0 else 0)
        return idx
    chamber = as_permutation(chamber)
    return int(permutation_rank_many(np.array(chamber.mapping))[0])


def _chambers_array(kind, dim):
    if kind == "boolean":
        bits = ((np.arange(1 << dim)[:, None] >> np.arange(dim - 1, -1, -1)) & 1)
        return (2 * bits - 1).astype(np.int8)
    return np.array([p.mapping for p in all_permutations(dim)], dtype=np.int64)


def _project_all_boolean(chambers, entries):
    return np.where(entries[None, :] != 0, entries[None, :], chambers)


def _project_all_braid(chambers, ids):
    key = ids[chambers - 1]
    srt = np.argsort(key, axis=1, kind="stable")
    return np.take_along_axis(chambers, srt, axis=1)


def transition_matrix(table):
    """Dense one-step kernel K[c, c'] over all chambers in canonical order."""
    _check_enum_size(table.kind, table.dim)
    chambers = _chambers_array(table.kind, table.dim)
    n_ch = chambers.shape[0]
    k_mat = np.zeros((n_ch, n_ch), dtype=np.float64)
    rows = np.arange(n_ch)
    ent = table.entries_matrix()
    for f in range(table.m):
        if table.kind == "boolean":
            proj = _project_all_boolean(chambers, ent[f])
            cols = ((proj > 0).astype(np.int64) *
                    (1 << np.arange(table.dim - 1, -1, -1))).sum(axis=1)
        else:
            proj = _project_all_braid(chambers, ent[f])
            cols = permutation_rank_many(proj)
        k_mat[rows, cols] += table.weights[f]
    return k_mat


def is_separating(table):
    """Whether the positive-weight faces leave no hyperplane uncrossed.

    Boolean kind: every coordinate is pinned by some face.  Braid kind:
    every label pair is split into different blocks by some face.
    """
    ent = table.entries_matrix()
    if table.kind == "boolean":
        return bool(np.all(np.any(ent != 0, axis=0)))
    split = ent[:, :, None] != ent[:, None, :]
    return bool(np.all(np.any(split, axis=0) | np.eye(table.dim, dtype=bool)))


def stationary_exact(matrix, tol=1e-10):
    """The unique stationary distribution of a row-stochastic kernel.

    Solves pi (K - I) = 0 with a normalization row appended in place of one
    equation.  Raises when the system is singular or the solution fails the
    residual check, both of which signal a non-separating face table.
    """
    k_mat = np.asarray(matrix, dtype=np.float64)
    if k_mat.ndim != 2 or k_mat.shape[0] != k_mat.shape[1]:
        raise PreconditionError("matrix must be square")
    n_ch = k_mat.shape[0]
    if np.abs(k_mat.sum(axis=1) - 1.0).max() > 1e-9:
        raise PreconditionError("matrix rows must sum to 1")
    a_mat = k_mat.T - np.eye(n_ch)
    if n_ch <= _RANK_CHECK_MAX:
        if np.linalg.matrix_rank(a_mat, tol=1e-9) < n_ch - 1:
            raise ToleranceError(
                "stationary distribution is not unique (non-separating weights)")
    a_mod = a_mat.copy()
    a_mod[-1, :] = 1.0
    b = np.zeros(n_ch)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a_mod, b)
    except np.linalg.LinAlgError:
        raise ToleranceError(
            "singular stationary system (non-separating weights)") from None
    if pi.min() < -1e-12:
        raise ToleranceError(f"stationary solve produced entry {pi.min():g} < -1e-12")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(pi @ k_mat - pi).max())
    if residual > tol:
        raise ToleranceError(f"stationary residual {residual:g} exceeds {tol:g}")
    return pi


# ---------------------------------------------------------------------------
# exact stationary sampling (urn of faces, reverse application)
# ---------------------------------------------------------------------------

def brown_diaconis_sample_many(table, size, rng, reference=None):
    """Exact stationary draws via the without-replacement face urn.

    Each sample pulls all positive-weight faces out of an urn, one at a
    time with probability proportional to remaining weight, then applies
    the projections to the reference chamber in reverse draw order (last
    face drawn is applied first).  For separating weights the law of the
    result is the stationary distribution regardless of the reference.

    Returns a (size, dim) array: sign entries for the boolean kind, 1-based
    one-line orderings for the braid kind.
    """
    if size < 1:
        raise PreconditionError("size must be at least 1")
    if not is_separating(table):
        raise PreconditionError("face weights are not separating")
    if reference is None:
        reference = SignVector([1] * table.dim) if table.kind == "boolean" \
            else Permutation.identity(table.dim)
    reference = _check_chamber(table.kind, table.dim, reference)
    g = _generator(rng)
    u = g.random((size, table.m))
    orders = kernels.weighted_order_many(table.weights, u)
    if table.kind == "boolean":
        return kernels.apply_boolean_reverse(table.entries_matrix(), orders,
                                             reference.to_array())
    ref0 = np.array(reference.mapping, dtype=np.int64) - 1
    out = kernels.apply_braid_reverse(table.entries_matrix(), orders, ref0)
    return out + 1


def brown_diaconis_sample(table, rng, reference=None):
    """One exact stationary chamber (see :func:`brown_diaconis_sample_many`)."""
    row = brown_diaconis_sample_many(table, 1, rng, reference)[0]
    if table.kind == "boolean":
        return SignVector(row)
    return Permutation(row)


# ---------------------------------------------------------------------------
# named face weight tables
# ---------------------------------------------------------------------------

def tsetlin_face_weights(w):
    """Move-to-front moves: weight theta_i on the face {i} / rest.

    The walk pulls label i to the top with probability theta_i; its
    stationary law is the sequential weighted-draw pmf of the same weights.
    """
    w = as_weight_vector(w)
    if abs(w.total - 1.0) > 1e-9:
        raise PreconditionError("weights must be normalized")
    n = w.n
    pairs = []
    for i in range(1, n + 1):
        rest = [j for j in range(1, n + 1) if j != i]
        blocks = [[i], rest] if rest else [[i]]
        pairs.append((BlockOrderedSetPartition(blocks), w.weights[i - 1]))
    return FaceWeightTable("braid", n, pairs)


def riffle_face_weights(n):
    """Inverse-riffle moves: weight 2^-n on each face S / complement.

    S ranges over all subsets; the empty and full subsets both denote the
    one-block face (an identity move), which therefore carries their merged
    weight 2^(1-n).
    """
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if n > BOOLEAN_ENUM_MAX:
        raise PreconditionError(f"riffle table capped at n={BOOLEAN_ENUM_MAX}")
    labels = range(1, n + 1)
    w = 0.5 ** n
    pairs = []
    for r in range(n + 1):
        for s in itertools.combinations(labels, r):
            comp = [j for j in labels if j not in s]
            blocks = [b for b in (list(s), comp) if b]
            pairs.append((BlockOrderedSetPartition(blocks), w))
    return FaceWeightTable("braid", n, pairs)


def ehrenfest_face_weights(d):
    """Coordinate moves: weight 1/(2d) on each face pinning one coordinate."""
    if d < 1:
        raise PreconditionError("d must be at least 1")
    pairs = []
    for i in range(d):
        for s in (-1, 1):
            entries = [0] * d
            entries[i] = s
            pairs.append((SignVector(entries), 1.0 / (2 * d)))
    return FaceWeightTable("boolean", d, pairs)


def _check_graph(edges, n_vertices=None):
    cleaned = []
    seen = set()
    for e in edges:
        u, v = (int(x) for x in e)
        if u == v:
            raise PreconditionError(f"self loop at vertex {u}")
        if u < 1 or v < 1:
            raise PreconditionError("vertices are 1-based")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise PreconditionError(f"duplicate edge {key}")
        seen.add(key)
        cleaned.append(key)
    if not cleaned:
        raise PreconditionError("edge list must be nonempty")
    n = n_vertices if n_vertices is not None else max(max(e) for e in cleaned)
    if any(v > n for e in cleaned for v in e):
        raise PreconditionError("edge endpoint exceeds vertex count")
    # connectivity via union-find
    parent = list(range(n + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in cleaned:
        parent[find(u)] = find(v)
    if len({find(v) for v in range(1, n + 1)}) != 1:
        raise PreconditionError("graph must be connected")
    return cleaned, n


def graph_coloring_face_weights(edges, n_vertices=None):
    """Edge 2-coloring moves as a boolean table over vertex colorings.

    Each move picks an edge uniformly and paints both endpoints a common
    uniform sign, so each (edge, sign) face carries weight 1/(2|E|).
    """
    cleaned, n = _check_graph(edges, n_vertices)
    pairs = []
    for u, v in cleaned:
        for s in (-1, 1):
            entries = [0] * n
            entries[u - 1] = s
            entries[v - 1] = s
            pairs.append((SignVector(entries), 1.0 / (2 * len(cleaned))))
    return FaceWeightTable("boolean", n, pairs)


def graph_coloring_step(coloring, edges, rng):
    """One move of the edge 2-coloring walk on a connected simple graph."""
    if not isinstance(coloring, SignVector):
        coloring = SignVector(coloring)
    cleaned, n = _check_graph(edges, coloring.d)
    g = _generator(rng)
    u, v = cleaned[int(g.integers(len(cleaned)))]
    s = 1 if g.random() < 0.5 else -1
    entries = list(coloring.entries)
    entries[u - 1] = s
    entries[v - 1] = s
    return SignVector(entries)
