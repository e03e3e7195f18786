"""Morphological thinning and skeleton-graph utilities.

The thinning loop runs to convergence, which makes the operation idempotent
by construction: a converged skeleton admits no further deletions, so feeding
it back in returns it unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# neighbor offsets in the classic clockwise order N, NE, E, SE, S, SW, W, NW
_OFFSETS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


def _neighbor_stack(img: np.ndarray) -> np.ndarray:
    """Stack of the 8 neighbor planes of a padded binary image, order as above."""
    p = np.pad(img, 1)
    h, w = img.shape
    planes = [p[1 + dv : 1 + dv + h, 1 + du : 1 + du + w] for dv, du in _OFFSETS]
    return np.stack(planes).astype(np.uint8)


def thin(mask: np.ndarray) -> np.ndarray:
    """Zhang-Suen thinning of a boolean mask, run until no pixel changes."""
    img = np.asarray(mask, dtype=bool).copy()
    while True:
        changed = False
        for phase in (0, 1):
            nb = _neighbor_stack(img)
            b = nb.sum(axis=0)
            # 0->1 transitions around the ring N, NE, ..., NW, N
            ring = np.concatenate([nb, nb[:1]], axis=0)
            a = ((ring[:-1] == 0) & (ring[1:] == 1)).sum(axis=0)
            n, e, s, w = nb[0], nb[2], nb[4], nb[6]
            if phase == 0:
                c1 = (n * e * s) == 0
                c2 = (e * s * w) == 0
            else:
                c1 = (n * e * w) == 0
                c2 = (n * s * w) == 0
            delete = img & (b >= 2) & (b <= 6) & (a == 1) & c1 & c2
            if delete.any():
                img[delete] = False
                changed = True
        if not changed:
            return img


@dataclass(frozen=True, eq=False)
class Skeleton:
    """1-pixel-wide skeleton: point set plus its 8-neighborhood graph.

    ``points`` holds (v, u) rows sorted row-major; ``adjacency[i]`` lists the
    indices of the neighbors of point i.
    """

    shape: tuple
    points: np.ndarray
    adjacency: tuple

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        if len(self.points):
            m[self.points[:, 0], self.points[:, 1]] = True
        return m

    def endpoints(self) -> list:
        return [i for i, nbrs in enumerate(self.adjacency) if len(nbrs) == 1]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])


def _graph_from_mask(mask: np.ndarray) -> Skeleton:
    vs, us = np.nonzero(mask)
    points = np.stack([vs, us], axis=1) if len(vs) else np.zeros((0, 2), dtype=int)
    index = {(int(v), int(u)): i for i, (v, u) in enumerate(points)}
    adjacency = []
    for v, u in points:
        nbrs = []
        for dv, du in _OFFSETS:
            j = index.get((int(v) + dv, int(u) + du))
            if j is not None:
                nbrs.append(j)
        adjacency.append(tuple(nbrs))
    return Skeleton(shape=mask.shape, points=points, adjacency=tuple(adjacency))


def skeletonize(component_mask: np.ndarray) -> Skeleton:
    """Thin a component bitmap to a Skeleton; a single pixel is its own skeleton."""
    return _graph_from_mask(thin(component_mask))


def ring_runs(skel: Skeleton) -> np.ndarray:
    """Connected runs of set pixels around each point's 8-ring.

    Degree alone overcounts branches: diagonal staircases produce degree-3
    pixels that are plain line interior.  The number of circular runs equals
    the number of branches actually leaving the pixel.
    """
    mask = skel.mask
    p = np.pad(mask, 1)
    runs = np.zeros(len(skel.points), dtype=int)
    for i, (v, u) in enumerate(skel.points):
        ring = [p[1 + v + dv, 1 + u + du] for dv, du in _OFFSETS]
        r = sum(
            1 for k in range(8) if not ring[k - 1] and ring[k]
        )
        runs[i] = r if r > 0 else (1 if any(ring) else 0)
    return runs


def junction_points(skel: Skeleton) -> np.ndarray:
    """(v, u) rows of pixels where three or more branches meet."""
    if len(skel.points) == 0:
        return np.zeros((0, 2), dtype=int)
    return skel.points[ring_runs(skel) >= 3]


def prune_spurs(skel: Skeleton, max_len: float) -> Skeleton:
    """Drop side branches shorter than ``max_len`` arc pixels.

    A branch is the walk from an endpoint to the first true junction (ring
    runs >= 3).  Walks that never meet a junction are the main body and are
    kept.  Repeats until stable so stubble left by a removed branch goes too.
    """
    mask = skel.mask
    while True:
        g = _graph_from_mask(mask)
        if len(g.points) == 0:
            return g
        runs = ring_runs(g)
        removed = False
        for e in g.endpoints():
            walk = [e]
            seen = {e}
            length = 0.0
            while True:
                cur = walk[-1]
                nxt = [j for j in g.adjacency[cur] if j not in seen]
                # a junction adjacent to the walk terminates the branch; step
                # selection must not slide diagonally past it onto the body
                if any(runs[j] >= 3 for j in nxt):
                    break
                if not nxt:
                    walk = None  # reached another endpoint: main body
                    break
                step = nxt[0]
                dv = abs(int(g.points[step][0]) - int(g.points[cur][0]))
                du = abs(int(g.points[step][1]) - int(g.points[cur][1]))
                length += 1.4142135623730951 if dv and du else 1.0
                walk.append(step)
                seen.add(step)
                if length > max_len:
                    walk = None
                    break
            if walk:
                for i in walk:
                    mask[g.points[i][0], g.points[i][1]] = False
                removed = True
        if not removed:
            return _graph_from_mask(mask)


def _bfs_farthest(skel: Skeleton, start: int):
    """BFS by arc length; returns (farthest index, parents dict)."""
    import heapq

    dist = {start: 0.0}
    parent = {start: -1}
    heap = [(0.0, start)]
    far, far_d = start, 0.0
    while heap:
        d, cur = heapq.heappop(heap)
        if d > dist.get(cur, np.inf):
            continue
        if d > far_d:
            far, far_d = cur, d
        for j in skel.adjacency[cur]:
            dv = abs(int(skel.points[j][0]) - int(skel.points[cur][0]))
            du = abs(int(skel.points[j][1]) - int(skel.points[cur][1]))
            nd = d + (1.4142135623730951 if dv and du else 1.0)
            if nd < dist.get(j, np.inf):
                dist[j] = nd
                parent[j] = cur
                heapq.heappush(heap, (nd, j))
    return far, parent


def main_path(skel: Skeleton) -> np.ndarray:
    """Longest geodesic path through the skeleton, as (v, u) rows.

    Exact on trees (the usual case); with small cycles it returns the
    diameter of the shortest-path metric, which is what downstream keypoint
    sampling wants anyway.
    """
    if len(skel.points) == 0:
        return np.zeros((0, 2), dtype=int)
    if len(skel.points) == 1:
        return skel.points.copy()
    ends = skel.endpoints()
    seed = ends[0] if ends else 0
    a, _ = _bfs_farthest(skel, seed)
    b, parent = _bfs_farthest(skel, a)
    chain = [b]
    while parent[chain[-1]] != -1:
        chain.append(parent[chain[-1]])
    chain.reverse()  # runs a -> b
    return skel.points[chain]


def arc_lengths(path: np.ndarray) -> np.ndarray:
    """Cumulative arc length along a pixel path, starting at 0."""
    if len(path) == 0:
        return np.zeros(0)
    steps = np.linalg.norm(np.diff(path.astype(float), axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def point_at_arc(path: np.ndarray, arcs: np.ndarray, s: float) -> np.ndarray:
    """Path pixel nearest to arc position ``s`` (clamped to the path)."""
    s = min(max(s, 0.0), arcs[-1] if len(arcs) else 0.0)
    i = int(np.searchsorted(arcs, s))
    i = min(i, len(path) - 1)
    return path[i]
