"""
HDBSCAN

Hierarchical density-based clustering built from its four steps: core
distances, mutual reachability, a minimum spanning tree, and extraction of
the most stable clusters from the condensed tree.

Distances are Euclidean. Stability uses lambda = 1 / distance with distances
clamped to LAMBDA_EPSILON from below.
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from utils.errors import TooFewPoints

logger = logging.getLogger("convergex.cluster")

LAMBDA_EPSILON = 1e-12
NOISE = -1

Edge = Tuple[int, int, float]


@dataclass(frozen=True, eq=False)
class ClusterLabels:
    """Per-point labels; -1 is noise, clusters are numbered 0..cluster_count-1"""
    labels: np.ndarray

    @property
    def cluster_count(self) -> int:
        valid = self.labels[self.labels >= 0]
        return int(valid.max()) + 1 if valid.size else 0

    @property
    def noise_count(self) -> int:
        return int(np.sum(self.labels < 0))


def _as_points(points) -> np.ndarray:
    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    if not np.all(np.isfinite(array)):
        raise ValueError("feature vectors must be finite")
    return array


def core_distances(points, k: int) -> np.ndarray:
    """
    Distance from each point to its k-th nearest other point.

    Raises:
        TooFewPoints: unless 1 <= k < number of points
    """
    array = _as_points(points)
    n = len(array)
    if k < 1 or k >= n:
        raise TooFewPoints(f"core distance needs 1 <= k < {n}, got k={k}")
    distances = np.sort(cdist(array, array), axis=1)
    # column 0 is the point itself
    return distances[:, k].copy()


def mutual_reachability(points, core: np.ndarray) -> np.ndarray:
    """max(core[a], core[b], d(a, b)) for every pair, zero diagonal"""
    array = _as_points(points)
    core = np.asarray(core, dtype=np.float64)
    matrix = np.maximum(cdist(array, array), np.maximum.outer(core, core))
    np.fill_diagonal(matrix, 0.0)
    return matrix


class _DisjointSet:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root


def minimum_spanning_tree(matrix) -> List[Edge]:
    """
    Kruskal's algorithm over all pairs, edges ordered by
    (weight, lower id, higher id) so equal weights resolve the same way on
    every run.

    Returns:
        n - 1 edges (i, j, weight) with i < j, in the order they were added

    Raises:
        TooFewPoints: with fewer than two points
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    n = matrix.shape[0]
    if n < 2:
        raise TooFewPoints("a spanning tree needs at least 2 points")
    rows, cols = np.triu_indices(n, k=1)
    weights = matrix[rows, cols]
    order = np.lexsort((cols, rows, weights))

    components = _DisjointSet(n)
    edges: List[Edge] = []
    for position in order:
        i, j = int(rows[position]), int(cols[position])
        ri, rj = components.find(i), components.find(j)
        if ri == rj:
            continue
        components.parent[ri] = rj
        edges.append((i, j, float(weights[position])))
        if len(edges) == n - 1:
            break
    return edges


def _single_linkage(edges: Sequence[Edge], n: int):
    """Dendrogram from MST edges: merge k creates node n + k"""
    ordered = sorted(edges, key=lambda e: (e[2], min(e[0], e[1]), max(e[0], e[1])))
    components = _DisjointSet(2 * n - 1)
    sizes = [1] * n + [0] * (n - 1)
    merges = []
    for step, (i, j, weight) in enumerate(ordered):
        a, b = components.find(i), components.find(j)
        node = n + step
        merges.append((a, b, weight))
        sizes[node] = sizes[a] + sizes[b]
        components.parent[a] = node
        components.parent[b] = node
    return merges, sizes


def _leaves(node: int, n: int, merges) -> List[int]:
    stack, leaves = [node], []
    while stack:
        current = stack.pop()
        if current < n:
            leaves.append(current)
        else:
            left, right, _ = merges[current - n]
            stack.extend((left, right))
    return leaves


def _condense(merges, sizes, n: int, min_cluster_size: int):
    """
    Walk the dendrogram from the root. A split creates two clusters only
    when both sides hold min_cluster_size points; otherwise the small side's
    points fall out of the current cluster at that lambda.

    Returns rows (parent_cluster, child, lambda, child_size); children below n
    are points, children >= n are clusters. The root cluster is n.
    """
    root = 2 * n - 2
    label_of = {root: n}
    next_label = n + 1
    rows = []
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if node < n:
            continue
        left, right, distance = merges[node - n]
        lam = 1.0 / max(distance, LAMBDA_EPSILON)
        parent = label_of[node]
        left_big = sizes[left] >= min_cluster_size
        right_big = sizes[right] >= min_cluster_size

        if left_big and right_big:
            for child in (left, right):
                label_of[child] = next_label
                rows.append((parent, next_label, lam, sizes[child]))
                next_label += 1
                queue.append(child)
        else:
            for child, big in ((left, left_big), (right, right_big)):
                if big:
                    label_of[child] = parent
                    queue.append(child)
                else:
                    rows.extend((parent, leaf, lam, 1) for leaf in _leaves(child, n, merges))
    return rows


def _select_clusters(rows, n: int) -> Tuple[List[int], Dict[int, int]]:
    """Excess-of-mass selection; returns [root] when the root never splits"""
    birth = {n: 0.0}
    children: Dict[int, List[int]] = {}
    parent_of: Dict[int, int] = {}
    stability: Dict[int, float] = {n: 0.0}
    for parent, child, lam, _ in rows:
        if child >= n:
            birth[child] = lam
            children.setdefault(parent, []).append(child)
            parent_of[child] = parent
            stability.setdefault(child, 0.0)
    for parent, child, lam, size in rows:
        stability[parent] += (lam - birth[parent]) * size

    clusters = sorted(c for c in birth if c != n)
    if not clusters:
        return [n], parent_of

    selected = {c: True for c in clusters}
    for cluster in reversed(clusters):
        kids = children.get(cluster, [])
        subtree = sum(stability[k] for k in kids)
        if subtree > stability[cluster]:
            selected[cluster] = False
            stability[cluster] = subtree
        else:
            stack = list(kids)
            while stack:
                descendant = stack.pop()
                selected[descendant] = False
                stack.extend(children.get(descendant, []))
    return [c for c in clusters if selected[c]], parent_of


def extract_clusters(mst: Sequence[Edge], min_cluster_size: int,
                     n_points: Optional[int] = None) -> ClusterLabels:
    """
    Labels from a minimum spanning tree of mutual reachability distances.

    Args:
        mst: Spanning tree edges (i, j, weight)
        min_cluster_size: Smallest group that counts as a cluster (>= 2)
        n_points: Number of points (defaults to len(mst) + 1)

    Returns:
        ClusterLabels; all-noise is a valid outcome
    """
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    n = len(mst) + 1 if n_points is None else n_points
    if n < min_cluster_size or n < 2:
        return ClusterLabels(np.full(n, NOISE, dtype=np.int64))

    merges, sizes = _single_linkage(mst, n)
    rows = _condense(merges, sizes, n, min_cluster_size)
    selected, parent_of = _select_clusters(rows, n)

    point_rows = {child: (parent, lam) for parent, child, lam, _ in rows if child < n}
    raw = np.full(n, NOISE, dtype=np.int64)

    if selected == [n]:
        # never split: one cluster only when every point leaves at the same density
        lambdas = [lam for _, lam in point_rows.values()]
        if max(lambdas) == min(lambdas):
            raw[:] = n
    else:
        chosen = set(selected)
        for point, (cluster, _) in point_rows.items():
            current = cluster
            while current not in chosen and current in parent_of:
                current = parent_of[current]
            if current in chosen:
                raw[point] = current

    return _relabel(raw, min_cluster_size)


def _relabel(raw: np.ndarray, min_cluster_size: int) -> ClusterLabels:
    """Dissolve undersized clusters and number the rest by their lowest member"""
    labels = np.full(len(raw), NOISE, dtype=np.int64)
    groups: Dict[int, List[int]] = {}
    for point, label in enumerate(raw):
        if label != NOISE:
            groups.setdefault(int(label), []).append(point)
    kept = [members for members in groups.values() if len(members) >= min_cluster_size]
    for new_label, members in enumerate(sorted(kept, key=min)):
        labels[members] = new_label
    dissolved = len(groups) - len(kept)
    if dissolved:
        logger.debug(f"dissolved {dissolved} cluster(s) below min_cluster_size={min_cluster_size}")
    return ClusterLabels(labels)


def hdbscan(points, min_cluster_size: int = 5, min_samples: Optional[int] = None) -> ClusterLabels:
    """
    Cluster feature vectors.

    Args:
        points: (n, d) array of feature vectors
        min_cluster_size: Smallest group that counts as a cluster
        min_samples: Neighbour rank for core distances (defaults to min_cluster_size)

    Returns:
        ClusterLabels

    Raises:
        TooFewPoints: if min_samples is not below the number of points
    """
    array = _as_points(points)
    k = min_cluster_size if min_samples is None else min_samples
    core = core_distances(array, k)
    mst = minimum_spanning_tree(mutual_reachability(array, core))
    labels = extract_clusters(mst, min_cluster_size, len(array))
    logger.debug(
        f"hdbscan points={len(array)} clusters={labels.cluster_count} noise={labels.noise_count}"
    )
    return labels
