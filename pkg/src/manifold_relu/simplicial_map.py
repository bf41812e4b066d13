"""Geometric realizations of complexes: barycentric coordinates, nearest-simplex
projection and evaluation of simplicial maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .homology import SimplicialComplex, maximal_simplices
from .shapes import GeometryError


def barycentric(x, vertices, return_residual: bool = False):
    """Affine coordinates of ``x`` relative to the simplex spanned by ``vertices``.

    Points off the affine hull are projected onto it by least squares; the
    residual distance is returned on request.
    """
    v = np.atleast_2d(np.asarray(vertices, dtype=np.float64))
    x = np.asarray(x, dtype=np.float64)
    a = (v[1:] - v[0]).T
    if a.shape[1]:
        if np.linalg.det(a.T @ a) <= 1e-12:
            raise GeometryError("degenerate simplex (Gram determinant <= 1e-12)")
        lam = np.linalg.lstsq(a, x - v[0], rcond=None)[0]
    else:
        lam = np.zeros(0)
    coeffs = np.concatenate([[1.0 - lam.sum()], lam])
    if return_residual:
        return coeffs, float(np.linalg.norm(coeffs @ v - x))
    return coeffs


@dataclass(frozen=True, eq=False)
class GeometricComplex:
    """Simplicial complex with vertex ``i`` placed at ``coords[i]``."""

    complex: SimplicialComplex
    coords: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coords, dtype=np.float64))
        object.__setattr__(self, "coords", c)
        verts = self.complex.vertices()
        if verts and (min(verts) < 0 or max(verts) >= len(c)):
            raise GeometryError("every vertex needs coordinates")

    @property
    def ambient_dim(self) -> int:
        return self.coords.shape[1]

    @property
    def simplex_count(self) -> int:
        return len(self.complex)

    def simplex_list(self) -> list:
        """Simplices in id order: by dimension, then lexicographic."""
        return self.complex.all_simplices()

    def check_nondegenerate(self, tol: float = 1e-12) -> None:
        for k in range(1, self.complex.max_dim + 1):
            s = np.array(self.complex.simplices(k))
            if not len(s):
                continue
            a = self.coords[s[:, 1:]] - self.coords[s[:, :1]]
            det = np.linalg.det(np.einsum("nid,njd->nij", a, a))
            if np.any(det <= tol):
                raise GeometryError(f"degenerate {k}-simplex found")

    def _tables(self):
        if "tables" in self._cache:
            return self._cache["tables"]
        tables, offset = [], 0
        for k in range(self.complex.max_dim + 1):
            s = np.array(self.complex.simplices(k), dtype=np.int64).reshape(-1, k + 1)
            v = self.coords[s]
            a = v[:, 1:] - v[:, :1]
            ok = np.ones(len(s), bool)
            pinv = a
            if k:
                gram = np.einsum("nid,njd->nij", a, a)
                ok = np.linalg.det(gram) > 1e-12
                pinv = np.zeros_like(a)
                pinv[ok] = np.linalg.solve(gram[ok], a[ok])
            center = v.mean(axis=1)
            rad = np.linalg.norm(v - center[:, None], axis=-1).max(axis=1)
            # bucket by bounding radius so range queries stay tight
            buckets = []
            if len(s):
                edges = np.unique(np.quantile(rad, np.linspace(0, 1, 9)))
                which = np.clip(np.searchsorted(edges, rad, side="right") - 1, 0, len(edges) - 2)
                for b in np.unique(which):
                    ids = np.flatnonzero(which == b)
                    buckets.append((ids, float(rad[ids].max()), cKDTree(center[ids])))
            tables.append({"s": s, "v0": v[:, 0], "a": a, "pinv": pinv, "ok": ok,
                           "offset": offset, "rad": rad, "center": center, "buckets": buckets})
            offset += len(s)
        verts = np.array(self.complex.vertices(), dtype=np.int64)
        self._cache["tables"] = (tables, cKDTree(self.coords[verts]))
        return self._cache["tables"]


def project_points(X, K: GeometricComplex, tol: float = 1e-12, chunk: int = 256):
    """Nearest points of |K| to the rows of ``X`` and the ids of the simplices realizing them.

    Every face of K is itself a simplex of K, so the minimum over simplices
    of the feasible orthogonal projections onto their affine hulls is the
    exact distance.  Near-ties (within ``tol``) go to the lowest id.
    Simplices are pruned with a bounding-ball test against the distance to
    the nearest vertex.
    """
    if K.simplex_count == 0:
        raise GeometryError("cannot project onto an empty complex")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if len(X) > chunk:
        parts = [project_points(X[i:i + chunk], K, tol, chunk) for i in range(0, len(X), chunk)]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    tables, vtree = K._tables()
    upper = vtree.query(X)[0]
    pt_all, sid_all, dist_all, foot_all = [], [], [], []
    for k, t in enumerate(tables):
        pts, cands = [], []
        for ids, max_rad, tree in t["buckets"]:
            lists = tree.query_ball_point(X, upper + max_rad + 1e-12)
            lens = np.fromiter((len(c) for c in lists), np.int64, len(lists))
            if lens.sum():
                pts.append(np.repeat(np.arange(len(X)), lens))
                cands.append(ids[np.concatenate([np.asarray(c, dtype=np.int64)
                                                 for c in lists if c])])
        if not pts:
            continue
        pt, cand = np.concatenate(pts), np.concatenate(cands)
        gap = np.linalg.norm(X[pt] - t["center"][cand], axis=1) - t["rad"][cand]
        keep = (gap <= upper[pt] + 1e-12) & t["ok"][cand]
        pt, cand = pt[keep], cand[keep]
        rel = X[pt] - t["v0"][cand]
        if k:
            lam = np.einsum("nkd,nd->nk", t["pinv"][cand], rel)
            feas = np.all(lam >= -1e-12, axis=1) & (lam.sum(1) <= 1 + 1e-12)
            foot = t["v0"][cand] + np.einsum("nk,nkd->nd", np.clip(lam, 0.0, None), t["a"][cand])
        else:
            feas = np.ones(len(cand), bool)
            foot = t["v0"][cand]
        pt_all.append(pt[feas])
        sid_all.append(t["offset"] + cand[feas])
        foot_all.append(foot[feas])
        dist_all.append(np.linalg.norm(foot[feas] - X[pt[feas]], axis=1))
    pt, sid = np.concatenate(pt_all), np.concatenate(sid_all)
    dist, foot = np.concatenate(dist_all), np.concatenate(foot_all)
    dmin = np.full(len(X), np.inf)
    np.minimum.at(dmin, pt, dist)
    tied = dist <= dmin[pt] + tol
    pt, sid, foot = pt[tied], sid[tied], foot[tied]
    order = np.lexsort((sid, pt))
    first = order[np.r_[True, pt[order][1:] != pt[order][:-1]]]
    return foot[first], sid[first]


def project_to_complex(x, K: GeometricComplex, tol: float = 1e-12):
    """Nearest point of |K| to ``x`` and the id of its simplex (see ``project_points``)."""
    feet, ids = project_points(np.asarray(x, dtype=np.float64)[None, :], K, tol)
    return feet[0], int(ids[0])


def simplex_by_id(K: GeometricComplex, sid: int) -> tuple:
    for t in K._tables()[0]:
        if sid < t["offset"] + len(t["s"]):
            return tuple(int(v) for v in t["s"][sid - t["offset"]])
    raise IndexError(f"simplex id {sid} out of range")


@dataclass(frozen=True)
class VertexMap:
    mapping: dict

    def __call__(self, v: int) -> int:
        return self.mapping[v]

    @classmethod
    def identity(cls, vertices) -> "VertexMap":
        return cls({int(v): int(v) for v in vertices})

    def validate(self, K: SimplicialComplex, L: SimplicialComplex) -> None:
        """Raise if some simplex of K is sent to a vertex set that is not a simplex of L."""
        m = self.mapping
        for s in K.all_simplices():
            try:
                image = tuple(sorted({m[v] for v in s}))
            except KeyError as exc:
                raise GeometryError(f"vertex {exc.args[0]} has no image") from None
            if image not in L.index(len(image) - 1):
                raise GeometryError(f"simplex {s} maps to {image}, not a simplex of L")


def simplicial_map_eval(x, K: GeometricComplex, phi: VertexMap, L: GeometricComplex):
    """Piecewise-linear extension of ``phi``: sum of b_i(x) * coords_L(phi(v_i))."""
    _, sid = project_to_complex(x, K, tol=1e-9)
    s = simplex_by_id(K, sid)
    b = barycentric(x, K.coords[list(s)])
    return b @ L.coords[[phi(v) for v in s]]


def simplicial_net_size(D: int, d: int, k: int, l: int) -> int:
    """Size of the two-hidden-layer network realizing a simplicial map: D + d + k(D+1) + l(d+1)."""
    if min(D, d, k, l) < 0:
        raise ValueError("all arguments must be nonnegative")
    return int(D) + int(d) + int(k) * (int(D) + 1) + int(l) * (int(d) + 1)


def write_geometric_complex(K: GeometricComplex, path) -> None:
    with open(path, "w") as fh:
        for s in maximal_simplices(K.complex):
            fh.write(" ".join(map(str, s)) + "\n")
        fh.write("coords\n")
        for v in K.complex.vertices():
            fh.write(f"{v} " + " ".join(repr(float(c)) for c in K.coords[v]) + "\n")


def read_geometric_complex(path) -> GeometricComplex:
    simplices, coords, in_coords = [], {}, False
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "coords":
                in_coords = True
            elif in_coords:
                coords[int(parts[0])] = [float(c) for c in parts[1:]]
            else:
                simplices.append([int(v) for v in parts])
    n = max(coords) + 1 if coords else 0
    dim = len(next(iter(coords.values()))) if coords else 0
    arr = np.full((n, dim), np.nan)
    for v, c in coords.items():
        arr[v] = c
    return GeometricComplex(SimplicialComplex.from_maximal(simplices), arr)


def read_vertex_map(path) -> VertexMap:
    with open(path) as fh:
        pairs = [line.split() for line in fh if line.strip()]
    return VertexMap({int(a): int(b) for a, b in pairs})


def write_vertex_map(phi: VertexMap, path) -> None:
    with open(path, "w") as fh:
        for a in sorted(phi.mapping):
            fh.write(f"{a} {phi.mapping[a]}\n")
