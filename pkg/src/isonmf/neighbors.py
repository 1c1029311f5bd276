"""kd-tree and dual-tree all-nearest / all-furthest neighbor searches.

Query and reference sets are the same point set. Distances are squared
Euclidean throughout. Ties are broken towards the lower original point
index, so results are identical to an all-pairs scan.
"""

from dataclasses import dataclass, field

import numpy as np

DEFAULT_LEAF_CAPACITY = 20

# Relative slack applied to box bounds before pruning, so a bound that is
# off by rounding can never discard a tying candidate.
_PRUNE_SLACK = 1e-12


@dataclass(eq=False)
class KdNode:
    lo: np.ndarray
    hi: np.ndarray
    start: int
    end: int
    split_dim: int = -1
    split_value: float = np.nan
    left: "KdNode | None" = None
    right: "KdNode | None" = None
    # Cached pruning bounds, refreshed during a traversal.
    bound: float = np.inf

    @property
    def is_leaf(self):
        return self.left is None

    @property
    def count(self):
        return self.end - self.start


@dataclass(eq=False)
class KdTree:
    """Median-split kd-tree over the rows of ``points``.

    ``perm[p]`` is the original index of the point stored at position ``p``;
    ``data`` holds the points in tree order.
    """

    points: np.ndarray
    data: np.ndarray
    perm: np.ndarray
    root: KdNode
    leaf_capacity: int

    @property
    def n_points(self):
        return self.points.shape[0]

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.extend((node.right, node.left))

    def leaves(self):
        return [n for n in self.nodes() if n.is_leaf]

    def depth(self):
        def _depth(node):
            return 0 if node.is_leaf else 1 + max(_depth(node.left), _depth(node.right))

        return _depth(self.root)


def build_kdtree(points, leaf_capacity=DEFAULT_LEAF_CAPACITY):
    """Build a kd-tree splitting each node at the median of its widest dimension."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("need at least one point")
    if leaf_capacity < 1:
        raise ValueError("leaf_capacity must be >= 1")
    perm = np.arange(pts.shape[0])

    def _build(start, end):
        block = pts[perm[start:end]]
        node = KdNode(block.min(axis=0), block.max(axis=0), start, end)
        if end - start <= leaf_capacity:
            return node
        widths = node.hi - node.lo
        dim = int(np.argmax(widths))
        if widths[dim] == 0.0:
            # All points coincide; split by position to honour leaf capacity.
            mid = (start + end) // 2
        else:
            # Stable sort keeps equal coordinates in original-index order.
            order = np.argsort(block[:, dim], kind="stable")
            perm[start:end] = perm[start:end][order]
            mid = (start + end) // 2
        node.split_dim = dim
        node.split_value = float(pts[perm[mid], dim])
        node.left = _build(start, mid)
        node.right = _build(mid, end)
        return node

    root = _build(0, pts.shape[0])
    return KdTree(pts, pts[perm], perm, root, int(leaf_capacity))


def _sq_dists(a, b):
    """All squared distances between rows of ``a`` and rows of ``b``.

    Dimensions are accumulated in a fixed order so a pair's distance does
    not depend on which block it was computed in.
    """
    out = np.zeros((a.shape[0], b.shape[0]))
    for d in range(a.shape[1]):
        diff = a[:, d, None] - b[None, :, d]
        out += diff * diff
    return out


def pair_sq_dists(points, pairs):
    """Squared distances of row pairs, accumulated exactly as the tree search does."""
    points = np.asarray(points, dtype=float)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    out = np.zeros(pairs.shape[0])
    for d in range(points.shape[1]):
        diff = points[pairs[:, 0], d] - points[pairs[:, 1], d]
        out += diff * diff
    return out


def _box_min_dist(a, b):
    gap = np.maximum(0.0, np.maximum(a.lo - b.hi, b.lo - a.hi))
    total = 0.0
    for g in gap:
        total += g * g
    return total


def _box_max_dist(a, b):
    span = np.maximum(np.abs(a.hi - b.lo), np.abs(b.hi - a.lo))
    total = 0.0
    for s in span:
        total += s * s
    return total


@dataclass
class SearchStats:
    distance_evals: int = 0
    base_cases: int = 0
    prunes: int = 0


@dataclass
class NeighborGraph:
    """k-nearest neighbors plus the furthest neighbor of every point.

    ``indices[i]`` lists the ``k`` nearest other points of ``i`` in
    non-decreasing distance order; ``sq_dists[i]`` holds the matching
    squared distances. ``furthest``/``furthest_sq_dist`` may be ``None``
    when only the nearest part was computed.
    """

    k: int
    indices: np.ndarray
    sq_dists: np.ndarray
    furthest: np.ndarray | None = None
    furthest_sq_dist: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    @property
    def n_points(self):
        return self.indices.shape[0]

    def constraint_pairs(self):
        """Union-symmetrized neighbor pairs ``(i, j)`` with ``i < j``.

        Returns ``(pairs, sq_dists)`` sorted lexicographically; a pair that
        appears as both ``j in I_i`` and ``i in I_j`` is kept once.
        """
        n, k = self.indices.shape
        rows = np.repeat(np.arange(n), k)
        cols = self.indices.ravel()
        d = self.sq_dists.ravel()
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        key = lo * n + hi
        _, first = np.unique(key, return_index=True)
        pairs = np.stack([lo[first], hi[first]], axis=1)
        return pairs, d[first].copy()

    def furthest_pairs(self):
        if self.furthest is None:
            raise ValueError("furthest neighbors were not computed")
        return np.stack([np.arange(self.n_points), self.furthest], axis=1)


def all_k_nearest(tree, k):
    """Dual-tree all-k-nearest-neighbors over the tree's own points.

    Returns ``(indices, sq_dists, stats)`` with arrays of shape ``N x k``
    indexed by original point order.
    """
    n = tree.n_points
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the number of points {n}")
    data, perm = tree.data, tree.perm
    # Candidate lists in tree order, kept sorted by (distance, index).
    best_d = np.full((n, k), np.inf)
    best_i = np.full((n, k), n, dtype=np.int64)
    stats = SearchStats()
    for node in tree.nodes():
        node.bound = np.inf

    def base_case(q, r):
        d = _sq_dists(data[q.start:q.end], data[r.start:r.end])
        stats.distance_evals += d.size
        stats.base_cases += 1
        ridx = np.broadcast_to(perm[r.start:r.end], d.shape)
        if q is r:
            np.fill_diagonal(d, np.inf)
            ridx = ridx.copy()
            np.fill_diagonal(ridx, n)
        cand_d = np.concatenate([best_d[q.start:q.end], d], axis=1)
        cand_i = np.concatenate([best_i[q.start:q.end], ridx], axis=1)
        order = np.lexsort((cand_i, cand_d), axis=1)[:, :k]
        best_d[q.start:q.end] = np.take_along_axis(cand_d, order, axis=1)
        best_i[q.start:q.end] = np.take_along_axis(cand_i, order, axis=1)
        q.bound = float(best_d[q.start:q.end, k - 1].max())

    def recurse(q, r):
        if q.bound < _box_min_dist(q, r) * (1.0 - _PRUNE_SLACK):
            stats.prunes += 1
            return
        if q.is_leaf and r.is_leaf:
            base_case(q, r)
            return
        if not q.is_leaf and r.is_leaf:
            for child in _by_distance(r, q.left, q.right, nearest_first=True):
                recurse(child, r)
        elif q.is_leaf:
            for child in _by_distance(q, r.left, r.right, nearest_first=True):
                recurse(q, child)
        else:
            for qc in (q.left, q.right):
                for child in _by_distance(qc, r.left, r.right, nearest_first=True):
                    recurse(qc, child)
        if not q.is_leaf:
            q.bound = max(q.left.bound, q.right.bound)

    recurse(tree.root, tree.root)
    indices = np.empty_like(best_i)
    sq = np.empty_like(best_d)
    indices[perm] = best_i
    sq[perm] = best_d
    return indices, sq, stats


def all_furthest(tree):
    """Dual-tree all-furthest-neighbor over the tree's own points.

    Returns ``(furthest, sq_dists, stats)`` indexed by original point order.
    """
    n = tree.n_points
    if n < 2:
        raise ValueError("furthest neighbors need at least two points")
    data, perm = tree.data, tree.perm
    best_d = np.full(n, -1.0)
    best_i = np.full(n, n, dtype=np.int64)
    stats = SearchStats()
    for node in tree.nodes():
        node.bound = -np.inf

    def base_case(q, r):
        d = _sq_dists(data[q.start:q.end], data[r.start:r.end])
        stats.distance_evals += d.size
        stats.base_cases += 1
        if q is r:
            np.fill_diagonal(d, -1.0)
        ridx = perm[r.start:r.end]
        top = d.max(axis=1)
        top_i = np.where(d == top[:, None], ridx[None, :], n).min(axis=1)
        cur_d = best_d[q.start:q.end]
        cur_i = best_i[q.start:q.end]
        better = (top > cur_d) | ((top == cur_d) & (top_i < cur_i))
        cur_d[better] = top[better]
        cur_i[better] = top_i[better]
        q.bound = float(cur_d.min())

    def recurse(q, r):
        # A node is dropped only when no point in it can reach the current
        # furthest distance of every query point.
        if _box_max_dist(q, r) * (1.0 + _PRUNE_SLACK) < q.bound:
            stats.prunes += 1
            return
        if q.is_leaf and r.is_leaf:
            base_case(q, r)
            return
        if not q.is_leaf and r.is_leaf:
            for child in _by_distance(r, q.left, q.right, nearest_first=False):
                recurse(child, r)
        elif q.is_leaf:
            for child in _by_distance(q, r.left, r.right, nearest_first=False):
                recurse(q, child)
        else:
            for qc in (q.left, q.right):
                for child in _by_distance(qc, r.left, r.right, nearest_first=False):
                    recurse(qc, child)
        if not q.is_leaf:
            q.bound = min(q.left.bound, q.right.bound)

    recurse(tree.root, tree.root)
    furthest = np.empty_like(best_i)
    sq = np.empty_like(best_d)
    furthest[perm] = best_i
    sq[perm] = best_d
    return furthest, sq, stats


def _by_distance(anchor, a, b, nearest_first):
    if nearest_first:
        da, db = _box_min_dist(anchor, a), _box_min_dist(anchor, b)
        return (a, b) if da <= db else (b, a)
    da, db = _box_max_dist(anchor, a), _box_max_dist(anchor, b)
    return (a, b) if da >= db else (b, a)


def neighbor_graph(points, k, leaf_capacity=DEFAULT_LEAF_CAPACITY, furthest=True):
    """k-NN graph (and optionally furthest neighbors) of the rows of ``points``."""
    tree = build_kdtree(points, leaf_capacity)
    idx, sq, st = all_k_nearest(tree, k)
    graph = NeighborGraph(int(k), idx, sq, stats={"knn_distance_evals": st.distance_evals})
    if furthest:
        far, far_sq, fst = all_furthest(tree)
        graph.furthest = far
        graph.furthest_sq_dist = far_sq
        graph.stats["furthest_distance_evals"] = fst.distance_evals
    return graph
