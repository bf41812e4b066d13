"""Nerve complexes of point clouds and the sample-size bound for homology recovery."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.spatial import cKDTree

from .homology import BettiVector, SimplicialComplex, betti_numbers
from .shapes import ball_volume, make_rng, sample_uniform


class UnsupportedDimension(ValueError):
    pass


def _cloud(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or not np.all(np.isfinite(pts)):
        raise ValueError("point cloud must be a finite (n, D) array")
    return pts


# ---------------------------------------------------------------------------
# minimum enclosing balls


def circumsphere(points: np.ndarray):
    """Center and radius of the smallest sphere through affinely independent points."""
    p0 = points[0]
    a = points[1:] - p0
    if a.shape[0] == 0:
        return p0.copy(), 0.0
    gram = a @ a.T
    lam = np.linalg.solve(gram, 0.5 * np.diag(gram))
    center = p0 + lam @ a
    return center, float(np.linalg.norm(center - p0))


def _ball_from(support: list, pts: np.ndarray):
    if not support:
        return None, -1.0
    return circumsphere(pts[support])


def miniball(points) -> tuple:
    """Minimum enclosing ball (center, radius) by Welzl's move-to-front recursion."""
    pts = _cloud(points)
    tol = 1e-12 * (1.0 + float(np.abs(pts).max()))

    def inside(c, r, p):
        return c is not None and np.linalg.norm(p - c) <= r + tol

    def welzl(n, support):
        if len(support) == pts.shape[1] + 1 or n == 0:
            return _ball_from(support, pts)
        c, r = welzl(n - 1, support)
        if inside(c, r, pts[n - 1]):
            return c, r
        return welzl(n - 1, support + [n - 1])

    c, r = welzl(pts.shape[0], [])
    return c, r


def miniball_radius(points) -> float:
    return miniball(points)[1]


def triangle_miniball_radii(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Vectorized miniball radius of triangles given their vertex rows (any D)."""
    u, v, w = b - a, c - a, c - b
    l2 = np.stack([np.sum(w * w, 1), np.sum(v * v, 1), np.sum(u * u, 1)], axis=1)
    l2.sort(axis=1)
    obtuse = l2[:, 2] >= l2[:, 0] + l2[:, 1]
    area2 = np.maximum(np.sum(u * u, 1) * np.sum(v * v, 1) - np.sum(u * v, 1) ** 2, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        circ = np.sqrt(l2[:, 0] * l2[:, 1] * l2[:, 2] / (4.0 * area2))
    return np.where(obtuse | (area2 <= 0), 0.5 * np.sqrt(l2[:, 2]), circ)


# ---------------------------------------------------------------------------
# clique expansions


def _neighbors(pts: np.ndarray, radius: float):
    pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
    pairs.sort(axis=1)
    nbrs = [set() for _ in range(len(pts))]
    for i, j in pairs:
        nbrs[i].add(j)
    return pairs, nbrs


def _expand(pts, radius, max_dim, accept):
    """Simplices of the ``radius`` proximity graph up to ``max_dim`` that ``accept`` keeps.

    ``accept(k, array of simplices)`` filters candidates of dimension k >= 2;
    candidates are built only from accepted faces.
    """
    n = len(pts)
    layers = [[(i,) for i in range(n)]]
    if max_dim >= 1 and n > 1:
        pairs, nbrs = _neighbors(pts, radius)
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))] if len(pairs) else pairs
        layers.append([tuple(map(int, p)) for p in pairs])
        for k in range(2, max_dim + 1):
            cand = []
            for s in layers[-1]:
                common = nbrs[s[0]].intersection(*(nbrs[v] for v in s[1:]))
                cand.extend(s + (v,) for v in common if v > s[-1])
            if not cand:
                break
            arr = np.array(cand, dtype=np.int64)
            keep = accept(k, arr)
            arr = arr[keep]
            arr = arr[np.lexsort(arr.T[::-1])]
            layers.append([tuple(map(int, s)) for s in arr])
    return layers


def _complex(layers) -> SimplicialComplex:
    return SimplicialComplex.from_layers(layers)


def cech_complex(points, r: float, max_dim: int = 2) -> SimplicialComplex:
    """Cech complex: a simplex is kept iff its vertices' miniball radius is <= r."""
    if r <= 0:
        raise ValueError("radius must be positive")
    if max_dim < 0:
        raise ValueError("max_dim must be >= 0")
    pts = _cloud(points)
    tol = 1e-12 * max(1.0, r)

    def accept(k, arr):
        if k == 2:
            return triangle_miniball_radii(pts[arr[:, 0]], pts[arr[:, 1]], pts[arr[:, 2]]) <= r + tol
        return np.array([miniball_radius(pts[list(s)]) <= r + tol for s in arr], dtype=bool)

    return _complex(_expand(pts, 2 * r * (1 + 1e-12), max_dim, accept))


def rips_complex(points, r: float, max_dim: int = 2) -> SimplicialComplex:
    """Vietoris-Rips complex: all pairwise distances <= 2r."""
    if r <= 0:
        raise ValueError("radius must be positive")
    pts = _cloud(points)
    return _complex(_expand(pts, 2 * r * (1 + 1e-12), max_dim, lambda k, a: np.ones(len(a), bool)))


# ---------------------------------------------------------------------------
# Delaunay / alpha in the plane


def _circumcircle(p, q, s):
    ax, ay = p
    bx, by = q
    cx, cy = s
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0:
        return None
    a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    return ux, uy, (ux - ax) ** 2 + (uy - ay) ** 2


class _Tie(Exception):
    pass


GHOST = -1


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _incircle(a, b, c, p):
    """Positive iff p lies inside the circle through the CCW triangle abc; also a scale."""
    rows = [(q[0] - p[0], q[1] - p[1]) for q in (a, b, c)]
    lifted = [x * x + y * y for x, y in rows]
    (ax, ay), (bx, by), (cx, cy) = rows
    la, lb, lc = lifted
    det = (la * (bx * cy - by * cx) - lb * (ax * cy - ay * cx) + lc * (ax * by - ay * bx))
    scale = max(lifted) * (abs(bx * cy) + abs(by * cx) + abs(ax * cy) + abs(ay * cx)
                           + abs(ax * by) + abs(ay * bx))
    return det, scale


def _bowyer_watson(pts: np.ndarray) -> list:
    """Incremental insertion with a symbolic vertex at infinity.

    A ghost triangle ``(u, v, GHOST)`` stands for the outside of hull edge
    u -> v; its circumdisk degenerates to the open half-plane left of u -> v.
    """
    n = len(pts)
    b = next((k for k in range(1, n) if np.any(pts[k] != pts[0])), None)
    c = None if b is None else next(
        (k for k in range(b + 1, n) if _orient(pts[0], pts[b], pts[k]) != 0), None)
    if c is None:
        return []
    a, seed = 0, {0, b, c}
    if _orient(pts[a], pts[b], pts[c]) < 0:
        b, c = c, b
    tris = {(a, b, c), (b, a, GHOST), (c, b, GHOST), (a, c, GHOST)}
    for i in (k for k in range(n) if k not in seed):
        p = pts[i]
        bad = []
        for t in tris:
            u, v, w = t
            if w == GHOST:
                o = _orient(pts[u], pts[v], p)
                if abs(o) <= 1e-12 * np.sum((pts[v] - pts[u]) ** 2 + (p - pts[u]) ** 2):
                    raise _Tie
                if o > 0:
                    bad.append(t)
                continue
            det, scale = _incircle(pts[u], pts[v], pts[w], p)
            if abs(det) <= 1e-12 * scale:
                raise _Tie
            if det > 0:
                bad.append(t)
        directed = set()
        for t in bad:
            tris.discard(t)
            directed.update(((t[0], t[1]), (t[1], t[2]), (t[2], t[0])))
        for u, v in directed:
            if (v, u) in directed:
                continue
            if u == GHOST:
                tris.add((v, i, GHOST))
            elif v == GHOST:
                tris.add((i, u, GHOST))
            else:
                tris.add((u, v, i))
    return sorted(tuple(sorted(t)) for t in tris if GHOST not in t)


def delaunay_2d(points) -> list:
    """Delaunay triangles (sorted index triples) by incremental Bowyer-Watson insertion.

    Cocircular or collinear ties are broken by a fixed pseudo-random jitter
    of relative size 1e-9, so the output is deterministic.
    """
    pts = _cloud(points)
    if pts.shape[1] != 2:
        raise UnsupportedDimension("Delaunay/alpha complexes are implemented for D = 2 only")
    span = max(float(np.ptp(pts, axis=0).max()), 1e-300) if len(pts) else 1.0
    for attempt in range(4):
        shift = 1e-9 * span * attempt * np.random.default_rng(attempt).uniform(-1, 1, pts.shape)
        try:
            return _bowyer_watson(pts + shift)
        except _Tie:
            continue
    raise ArithmeticError("could not break Delaunay ties")


def alpha_filtration_2d(points) -> dict:
    """Alpha value of every Delaunay simplex (vertices 0, Gabriel edges half-length)."""
    pts = _cloud(points)
    tris = delaunay_2d(pts)
    values = {(i,): 0.0 for i in range(len(pts))}
    edge_opp: dict = {}
    for t in tris:
        a, b, c = pts[list(t)]
        cc = _circumcircle(a, b, c)
        values[t] = math.inf if cc is None else float(math.sqrt(cc[2]))  # flat sliver
        for e, o in (((t[0], t[1]), t[2]), ((t[0], t[2]), t[1]), ((t[1], t[2]), t[0])):
            edge_opp.setdefault(e, []).append((o, t))
    if len(pts) == 2:
        edge_opp[(0, 1)] = []
    for e, opps in edge_opp.items():
        p, q = pts[e[0]], pts[e[1]]
        mid, rad2 = (p + q) / 2, float(np.sum((p - q) ** 2)) / 4
        attached = [values[t] for o, t in opps if np.sum((pts[o] - mid) ** 2) < rad2]
        values[e] = min(attached) if attached else math.sqrt(rad2)
    return values


def alpha_complex_2d(points, r: float) -> SimplicialComplex:
    if r <= 0:
        raise ValueError("radius must be positive")
    vals = alpha_filtration_2d(points)
    return SimplicialComplex([s for s, v in vals.items() if v <= r], close=True)


# ---------------------------------------------------------------------------
# sample-size bound


@dataclass(frozen=True)
class SampleBoundReport:
    n_required: int
    lambda1: float
    lambda2: float
    theta1: float
    theta2: float
    vol: float
    d: int
    tau: float
    eps: float
    delta: float

    def satisfied_by(self, n: int) -> bool:
        return n >= self.n_required


def sample_size_bound(vol: float, d: int, tau: float, eps: float, delta: float) -> SampleBoundReport:
    """Samples needed for the eps-ball union around a uniform sample to carry the
    homology of a manifold of reach tau with probability at least 1 - delta.

    ``n_required`` is the least integer strictly above
    ``lambda1 (log lambda2 + log(1/delta))``.
    """
    if vol <= 0 or tau <= 0 or d < 1:
        raise ValueError("need vol > 0, tau > 0, d >= 1")
    if not 0 < eps < tau / 2:
        raise ValueError("precondition 0 < eps < tau/2 violated")
    if not 0 < delta < 1:
        raise ValueError("precondition 0 < delta < 1 violated")
    t1 = math.asin(eps / (8 * tau))
    t2 = math.asin(eps / (16 * tau))
    l1 = vol / (math.cos(t1) ** d * ball_volume(d, eps / 4))
    l2 = vol / (math.cos(t2) ** d * ball_volume(d, eps / 8))
    bound = l1 * (math.log(l2) + math.log(1 / delta))
    return SampleBoundReport(max(1, math.floor(bound) + 1), l1, l2, t1, t2, vol, d, tau, eps, delta)


def matched_radius(vol: float, d: int, tau: float, delta: float, n: int) -> float | None:
    """Smallest ball radius in (0, tau/2) whose sample bound is met by n points."""
    hi = tau / 2 * (1 - 1e-9)
    if sample_size_bound(vol, d, tau, hi, delta).n_required > n:
        return None
    lo = 1e-9 * tau
    for _ in range(100):
        mid = (lo + hi) / 2
        if sample_size_bound(vol, d, tau, mid, delta).n_required <= n:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# recovery trials


def intrinsic_dim(shape) -> int:
    return shape.d


def homology_recovery_trial(shape, n: int, r: float, seed: int,
                            points: np.ndarray | None = None):
    """Sample n points on ``shape``, build Cech(r) up to dimension d+1 and compare
    beta_0..beta_d with the ground truth.  Returns (success, BettiVector)."""
    if n < 1 or r <= 0:
        raise ValueError("need n >= 1 and r > 0")
    d = intrinsic_dim(shape)
    pts = sample_uniform(shape, n, seed) if points is None else points
    K = cech_complex(pts, r, max_dim=d + 1)
    betti = betti_numbers(K, max_dim=d)
    truth = tuple(shape.betti())[: d + 1]
    return betti.truncated(d) == tuple(truth) + (0,) * (d + 1 - len(truth)), betti
