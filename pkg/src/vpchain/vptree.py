"""Vantage-point trees whose thresholds shrink geometrically with depth.

Every vertex at depth h keeps the points within distance tau**(h+1) in its
left subtree and the rest in its right subtree (ties go left).  The nested
sets cut out by the leftmost path are recorded at build time; they are the
bridge to the set-valued chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .geometry import Ball, BallIntersection, NormedSpace, Norm, unit_ball_body

_KIND_CODE = {Norm.L1: 0, Norm.L2: 1, Norm.LINF: 2}


@njit(cache=True)
def _brute_nearest(pts, code, q):
    n, d = pts.shape
    best = np.inf
    bi = -1
    for i in range(n):
        dist = 0.0
        if code == 1:
            for j in range(d):
                t = q[j] - pts[i, j]
                dist += t * t
            dist = np.sqrt(dist)
        elif code == 0:
            for j in range(d):
                dist += abs(q[j] - pts[i, j])
        else:
            for j in range(d):
                t = abs(q[j] - pts[i, j])
                if t > dist:
                    dist = t
        if dist < best:
            best = dist
            bi = i
    return bi, best


def brute_force_nearest(points, space_or_code, q) -> tuple[int, float]:
    """Linear scan using the same scalar arithmetic as tree descent.

    Ties go to the smallest index.  Returns (zero-based index, distance);
    the matching tree node has insertion index one higher when the tree
    was filled from the same array.
    """
    code = space_or_code if isinstance(space_or_code, int) \
        else _KIND_CODE[space_or_code.kind]
    pts = np.ascontiguousarray(points, dtype=float)
    qa = np.ascontiguousarray(q, dtype=float).reshape(-1)
    i, dist = _brute_nearest(pts, code, qa)
    return int(i), float(dist)


@njit(cache=True)
def _bulk_descend(pts, code, thr_by_depth):
    """Array-backed run of the same descent insert() performs, point by point.

    Returns (parent, side, depth) per point; the caller materializes the
    linked nodes.  Distances use the same operation order as _dist, so the
    resulting tree is identical to one built by repeated insert().
    """
    n, d = pts.shape
    left = np.full(n, -1, np.int64)
    right = np.full(n, -1, np.int64)
    depth = np.zeros(n, np.int64)
    parent = np.full(n, -1, np.int64)
    side = np.zeros(n, np.int64)
    for i in range(1, n):
        cur = 0
        while True:
            dist = 0.0
            if code == 1:
                for j in range(d):
                    t = pts[i, j] - pts[cur, j]
                    dist += t * t
                dist = np.sqrt(dist)
            elif code == 0:
                for j in range(d):
                    dist += abs(pts[i, j] - pts[cur, j])
            else:
                for j in range(d):
                    t = abs(pts[i, j] - pts[cur, j])
                    if t > dist:
                        dist = t
            if dist <= thr_by_depth[depth[cur]]:
                if left[cur] == -1:
                    left[cur] = i
                    parent[i] = cur
                    side[i] = 0
                    depth[i] = depth[cur] + 1
                    break
                cur = left[cur]
            else:
                if right[cur] == -1:
                    right[cur] = i
                    parent[i] = cur
                    side[i] = 1
                    depth[i] = depth[cur] + 1
                    break
                cur = right[cur]
    return parent, side, depth


def _dist(code: int, p: tuple, q: tuple) -> float:
    # scalar fast path; same op order as the vectorized norm so distances
    # agree bit for bit with a numpy linear scan
    if code == 1:
        s = 0.0
        for a, b in zip(p, q):
            t = a - b
            s += t * t
        return math.sqrt(s)
    if code == 0:
        s = 0.0
        for a, b in zip(p, q):
            s += abs(a - b)
        return s
    m = 0.0
    for a, b in zip(p, q):
        t = abs(a - b)
        if t > m:
            m = t
    return m


class VpNode:
    __slots__ = ("pt", "threshold", "left", "right", "depth", "index")

    def __init__(self, pt: tuple, threshold: float, depth: int, index: int):
        self.pt = pt
        self.threshold = threshold
        self.left: VpNode | None = None
        self.right: VpNode | None = None
        self.depth = depth
        self.index = index

    @property
    def point(self) -> np.ndarray:
        return np.array(self.pt)

    def __repr__(self):
        return f"VpNode({list(self.pt)}, thr={self.threshold!r}, depth={self.depth})"


@dataclass(eq=False)
class NNResult:
    point: np.ndarray
    distance: float
    index: int
    nodes_visited: int


@dataclass(eq=False)
class LeftBoundaryRecord:
    """Sets I_0, I_1, ... cut out by the leftmost path, with attach times.

    I_0 is the initial body; each new leftmost vertex x at depth h refines
    I_{h+1} = I_h intersected with the ball of radius tau**(h+1) around x.
    attach_times[h] is the 1-based insertion index of that vertex.
    """

    sets: list[BallIntersection]
    attach_times: list[int]


class VpTree:
    def __init__(self, space: NormedSpace, tau: float):
        tau = float(tau)
        if not 0.0 < tau < 1.0:
            raise ValueError(f"tau must be in (0, 1), got {tau}")
        self.space = space
        self.tau = tau
        self.root: VpNode | None = None
        self.size = 0
        self._code = _KIND_CODE[space.kind]

    def _as_tuple(self, x) -> tuple:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.space.dim:
            raise ValueError(f"point dim {x.size} != space dim {self.space.dim}")
        return tuple(x.tolist())

    def insert(self, x) -> VpNode:
        """Iterative descent; equality with a threshold goes left."""
        pt = self._as_tuple(x)
        self.size += 1
        if self.root is None:
            self.root = VpNode(pt, self.tau, 0, self.size)
            return self.root
        node = self.root
        while True:
            if _dist(self._code, pt, node.pt) <= node.threshold:
                if node.left is None:
                    node.left = VpNode(pt, self.tau ** (node.depth + 2),
                                       node.depth + 1, self.size)
                    return node.left
                node = node.left
            else:
                if node.right is None:
                    node.right = VpNode(pt, self.tau ** (node.depth + 2),
                                        node.depth + 1, self.size)
                    return node.right
                node = node.right

    def insert_many(self, points) -> list[VpNode]:
        """Insert a batch of points in order and return their nodes.

        On an empty tree the descent runs over scratch arrays in compiled
        code and the child-linked nodes are materialized afterwards; the
        result is the tree repeated insert() would produce.  On a
        non-empty tree this falls back to one insert() per point.
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.space.dim:
            raise ValueError(
                f"expected an (n, {self.space.dim}) array, got shape {pts.shape}")
        if self.root is not None:
            return [self.insert(p) for p in pts]
        n = pts.shape[0]
        if n == 0:
            return []
        # thresholds precomputed with the same power expression insert() uses
        thr = np.array([self.tau ** (k + 1) for k in range(n + 1)])
        parent, side, depth = _bulk_descend(pts, self._code, thr)
        nodes: list[VpNode] = []
        for i in range(n):
            k = int(depth[i])
            node = VpNode(tuple(pts[i].tolist()), float(thr[k]), k, self.size + i + 1)
            p = int(parent[i])
            if p < 0:
                self.root = node
            elif side[i] == 0:
                nodes[p].left = node
            else:
                nodes[p].right = node
            nodes.append(node)
        self.size += n
        return nodes

    def height(self) -> int:
        """Edge count of the longest root-to-leaf path; -1 when empty."""
        if self.root is None:
            return -1
        best = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.depth > best:
                best = node.depth
            if node.left is not None:
                stack.append(node.left)
            if node.right is not None:
                stack.append(node.right)
        return best

    def leftmost_path_length(self) -> int:
        """Edges along the chain of left children from the root; -1 when empty."""
        if self.root is None:
            return -1
        n = 0
        node = self.root
        while node.left is not None:
            node = node.left
            n += 1
        return n

    def nearest(self, q) -> NNResult:
        """Exact nearest neighbor, ties broken by smaller insertion index."""
        if self.root is None:
            raise ValueError("tree is empty")
        qt = self._as_tuple(q)
        code = self._code
        best_d = math.inf
        best: VpNode | None = None
        visited = 0
        stack: list[tuple[VpNode, float]] = [(self.root, 0.0)]
        while stack:
            node, lb = stack.pop()
            if lb > best_d:
                continue
            visited += 1
            dq = _dist(code, qt, node.pt)
            if dq < best_d or (dq == best_d and node.index < best.index):
                best_d = dq
                best = node
            r = node.threshold
            lb_left = dq - r if dq > r else 0.0
            lb_right = r - dq if r > dq else 0.0
            # push the far side first so the near side is explored first
            if dq <= r:
                if node.right is not None and lb_right <= best_d:
                    stack.append((node.right, lb_right))
                if node.left is not None and lb_left <= best_d:
                    stack.append((node.left, lb_left))
            else:
                if node.left is not None and lb_left <= best_d:
                    stack.append((node.left, lb_left))
                if node.right is not None and lb_right <= best_d:
                    stack.append((node.right, lb_right))
        return NNResult(best.point, best_d, best.index, visited)


def build(points, space: NormedSpace, tau: float,
          body: BallIntersection | None = None) -> tuple[VpTree, LeftBoundaryRecord]:
    """Insert points in order, recording the leftmost-path boundary sets."""
    if body is None:
        body = unit_ball_body(space)
    tree = VpTree(space, tau)
    sets = [body]
    attach: list[int] = []
    spine_end: VpNode | None = None
    points = np.asarray(points, dtype=float)
    nodes = tree.insert_many(points) if points.ndim == 2 else [
        tree.insert(x) for x in points]
    for i, node in enumerate(nodes, start=1):
        extended = node is tree.root if spine_end is None else node is spine_end.left
        if extended:
            prev = sets[-1]
            ball = Ball(np.asarray(node.pt, dtype=float), node.threshold)
            sets.append(BallIntersection(space, prev.balls + (ball,), prev.box))
            attach.append(i)
            spine_end = node
    return tree, LeftBoundaryRecord(sets, attach)
