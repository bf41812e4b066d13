"""Shape specifications, exact membership, uniform samplers and Monte-Carlo risk.

Every solid primitive exposes a *level* function whose sublevel set
``level(x) <= r**2`` is the shape: ``|x - c|^2`` for a ball and the tube
equation for a torus.  Shells ``r**2 - delta <= level <= r**2`` are what the
threshold ramps of the indicator networks can misclassify.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import comb, gammaln
from scipy.spatial import cKDTree

MASK64 = (1 << 64) - 1


class GeometryError(ValueError):
    """Sampler or geometric certificate failure (degenerate geometry)."""


class ShellError(GeometryError):
    """No admissible shell width could be certified for the measure."""


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *stream: int) -> int:
    """Per-stream seed: splitmix64 folded over the master seed and stream ids."""
    z = splitmix64(int(seed) & MASK64)
    for s in stream:
        z = splitmix64(z ^ (int(s) & MASK64))
    return z


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *stream))


def ball_volume(d: int, r: float) -> float:
    """Volume of the d-dimensional ball of radius r."""
    if d < 1 or r <= 0:
        raise ValueError("need d >= 1 and r > 0")
    return math.exp(0.5 * d * math.log(math.pi) + d * math.log(r) - gammaln(d / 2 + 1))


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def _points(x, d):
    x = np.asarray(x, dtype=np.float64)
    pts = x.reshape(1, -1) if x.ndim == 1 else x
    if pts.shape[1] != d:
        raise ValueError(f"point dimension {pts.shape[1]} != shape dimension {d}")
    return pts, x.ndim == 1


# ---------------------------------------------------------------------------
# primitives


@dataclass(frozen=True)
class BallSpec:
    r: float
    c: tuple

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if self.r <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def d(self) -> int:
        return len(self.c)

    @property
    def center(self) -> np.ndarray:
        return np.array(self.c)

    @property
    def bounding_radius(self) -> float:
        return self.r

    @property
    def reach(self) -> float:
        return self.r

    def level(self, x) -> np.ndarray:
        pts, single = _points(x, self.d)
        v = np.sum((pts - self.center) ** 2, axis=1)
        return v[0] if single else v

    def tube_volume(self, s: float) -> float:
        return ball_volume(self.d, s) if s > 0 else 0.0

    def volume(self) -> float:
        return self.tube_volume(self.r)

    def bbox(self):
        return self.center - self.r, self.center + self.r

    def betti(self) -> tuple:
        return (1,) + (0,) * self.d


@dataclass(frozen=True)
class TorusSpec:
    """Solid torus: tube of radius r around a circle of radius R.

    For d >= 3 the last coordinate is the tube axis and the circle radius is
    measured in the first d - 1 coordinates.  For d = 2 the level set is the
    annulus ``(|x - c| - R)^2 <= r^2``.
    """

    r: float
    R: float
    c: tuple

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if not 0 < self.r < self.R:
            raise ValueError("torus needs 0 < r < R")
        if self.d < 2:
            raise ValueError("torus needs d >= 2")

    @property
    def d(self) -> int:
        return len(self.c)

    @property
    def center(self) -> np.ndarray:
        return np.array(self.c)

    @property
    def radial_dims(self) -> int:
        return 2 if self.d == 2 else self.d - 1

    @property
    def bounding_radius(self) -> float:
        return self.R + self.r

    @property
    def reach(self) -> float:
        return min(self.r, self.R - self.r)

    def level(self, x) -> np.ndarray:
        pts, single = _points(x, self.d)
        y = pts - self.center
        q = self.radial_dims
        rho = np.sqrt(np.sum(y[:, :q] ** 2, axis=1))
        v = (rho - self.R) ** 2 + np.sum(y[:, q:] ** 2, axis=1)
        return v[0] if single else v

    def tube_volume(self, s: float) -> float:
        if s <= 0:
            return 0.0
        R = self.R
        if self.d == 2:
            return 4 * math.pi * R * s
        # polar coordinates around the spine point: rho = R + u cos(t)
        q = self.d - 2
        total = 0.0
        for k in range(0, q + 1, 2):
            ik = 2 * math.pi * math.prod(range(k - 1, 0, -2)) / math.prod(range(k, 0, -2))
            total += comb(q, k, exact=True) * R ** (q - k) * s ** (k + 2) / (k + 2) * ik
        return sphere_area(self.d - 1) * total

    def volume(self) -> float:
        return self.tube_volume(self.r)

    def bbox(self):
        ext = np.full(self.d, self.R + self.r)
        if self.d > 2:
            ext[-1] = self.r
        return self.center - ext, self.center + ext

    def betti(self) -> tuple:
        b = [0] * (self.d + 1)
        b[0] = 1
        b[1 if self.d == 2 else self.d - 2] += 1
        return tuple(b)


@dataclass(frozen=True)
class CircleSpec:
    """Round circle of radius R in the plane of the first two coordinates (a curve)."""

    R: float
    c: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))

    @property
    def d(self) -> int:
        return 1

    @property
    def ambient_dim(self) -> int:
        return len(self.c)

    @property
    def reach(self) -> float:
        return self.R

    def volume(self) -> float:
        return 2 * math.pi * self.R

    def betti(self) -> tuple:
        return (1, 1)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        t = rng.uniform(0.0, 2 * math.pi, n)
        pts = np.zeros((n, self.ambient_dim))
        pts[:, 0] = self.R * np.cos(t)
        pts[:, 1] = self.R * np.sin(t)
        return pts + np.array(self.c)


Primitive = BallSpec | TorusSpec


@dataclass(frozen=True)
class RepresentativeSpec:
    """Union of balls and solid tori standing in for one class."""

    balls: tuple = ()
    tori: tuple = ()
    label: int = 1

    def __post_init__(self):
        object.__setattr__(self, "balls", tuple(self.balls))
        object.__setattr__(self, "tori", tuple(self.tori))
        if not self.components:
            raise ValueError("representative needs at least one component")
        if len({s.d for s in self.components}) != 1:
            raise ValueError("components must share one dimension")

    @property
    def components(self) -> tuple:
        return self.balls + self.tori

    @property
    def d(self) -> int:
        return self.components[0].d

    def level_min_excess(self, x) -> np.ndarray:
        pts, _ = _points(x, self.d)
        return np.min([s.level(pts) - s.r ** 2 for s in self.components], axis=0)

    def volume(self) -> float:
        return sum(s.volume() for s in self.components)

    def bbox(self):
        lows, highs = zip(*(s.bbox() for s in self.components))
        return np.min(lows, axis=0), np.max(highs, axis=0)

    def betti(self) -> tuple:
        return tuple(int(v) for v in np.sum([s.betti() for s in self.components], axis=0))

    def overlapping_pairs(self) -> list:
        """Pairs of components whose bounding spheres intersect (possible overlap)."""
        comps, out = self.components, []
        for i in range(len(comps)):
            for j in range(i + 1, len(comps)):
                gap = np.linalg.norm(comps[i].center - comps[j].center)
                if gap <= comps[i].bounding_radius + comps[j].bounding_radius:
                    out.append((i, j))
        return out


def contains(shape, x) -> np.ndarray:
    """Exact membership; vectorized over rows of ``x``."""
    if isinstance(shape, RepresentativeSpec):
        return shape.level_min_excess(x) <= 0.0 if np.ndim(x) > 1 else bool(
            shape.level_min_excess(x)[0] <= 0.0)
    if isinstance(shape, (BallSpec, TorusSpec)):
        v = shape.level(x) <= shape.r ** 2
        return bool(v) if np.ndim(v) == 0 else v
    raise TypeError(f"unsupported shape {type(shape).__name__}")


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class UniformBox:
    lower: tuple
    upper: tuple
    kind: str = field(default="uniform_box", init=False)

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("box bounds must satisfy lower < upper")

    @classmethod
    def cube(cls, d: int, half_width: float):
        return cls((-half_width,) * d, (half_width,) * d)

    @property
    def d(self) -> int:
        return len(self.lower)

    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.d))

    def encloses(self, shape, margin: float = 0.0) -> bool:
        lo, hi = shape.bbox()
        return bool(np.all(lo - margin >= self.lower) and np.all(hi + margin <= self.upper))


@dataclass(frozen=True)
class UniformOnShapes:
    """Uniform probability on the union of the given solids (volume-weighted)."""

    shapes: tuple
    kind: str = field(default="uniform_on_shapes", init=False)

    def __post_init__(self):
        flat = []
        for s in self.shapes:
            flat.extend(s.components if isinstance(s, RepresentativeSpec) else [s])
        object.__setattr__(self, "shapes", tuple(flat))

    @property
    def d(self) -> int:
        return self.shapes[0].d

    @property
    def union(self) -> RepresentativeSpec:
        balls = tuple(s for s in self.shapes if isinstance(s, BallSpec))
        tori = tuple(s for s in self.shapes if isinstance(s, TorusSpec))
        return RepresentativeSpec(balls, tori)

    def volume(self) -> float:
        return sum(s.volume() for s in self.shapes)

    def disjoint(self) -> bool:
        return not self.union.overlapping_pairs()

    def sample(self, n: int, rng: np.random.Generator, return_rate: bool = False):
        return _rejection(self.union, n, rng, return_rate)


MeasureSpec = UniformBox | UniformOnShapes


def _rejection(rep: RepresentativeSpec, n: int, rng, return_rate=False):
    lo, hi = rep.bbox()
    out, drawn, kept = [], 0, 0
    batch = max(256, 2 * n)
    while kept < n:
        cand = rng.uniform(lo, hi, size=(batch, rep.d))
        inside = cand[contains(rep, cand)]
        drawn += batch
        kept += inside.shape[0]
        out.append(inside)
        rate = kept / drawn
        if rate < 1e-4 and drawn >= 1e6:
            raise GeometryError(f"rejection acceptance rate {rate:.2e} below 1e-4")
        if kept < n:
            batch = int(min(4e6, max(256, 1.2 * (n - kept) / max(rate, 1e-4))))
    pts = np.concatenate(out)[:n]
    return (pts, kept / drawn) if return_rate else pts


def sample_uniform(spec, n: int, seed: int, return_rate: bool = False):
    """Deterministic uniform sample from a measure, a solid shape or a circle."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = make_rng(seed)
    if isinstance(spec, UniformBox):
        pts = spec.sample(n, rng)
        return (pts, 1.0) if return_rate else pts
    if isinstance(spec, CircleSpec):
        pts = spec.sample(n, rng)
        return (pts, 1.0) if return_rate else pts
    if isinstance(spec, (BallSpec, TorusSpec, RepresentativeSpec)):
        spec = UniformOnShapes((spec,))
    return spec.sample(n, rng, return_rate)


# ---------------------------------------------------------------------------
# embedded problems


@dataclass(frozen=True, eq=False)
class EmbeddedSpec:
    """Two-class representative rigidly embedded in R^D by ``x -> Q x + b``."""

    positive: RepresentativeSpec
    negative: RepresentativeSpec
    rotation: np.ndarray
    offset: np.ndarray
    tau_input: float
    volume_input: float | None = None

    def __post_init__(self):
        q = np.array(self.rotation, dtype=np.float64, ndmin=2)
        b = np.array(self.offset, dtype=np.float64).reshape(-1)
        if q.shape != (b.shape[0], self.positive.d):
            raise ValueError(f"rotation must be {b.shape[0]}x{self.positive.d}")
        if np.abs(q.T @ q - np.eye(q.shape[1])).max() > 1e-9:
            raise ValueError("rotation columns must be orthonormal")
        if self.positive.d != self.negative.d:
            raise ValueError("classes must share their intrinsic dimension")
        if self.tau_input <= 0:
            raise ValueError("tau_input must be positive")
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "offset", b)
        if self.volume_input is None:
            object.__setattr__(self, "volume_input", self.positive.volume() + self.negative.volume())

    @property
    def d(self) -> int:
        return self.rotation.shape[1]

    @property
    def D(self) -> int:
        return self.rotation.shape[0]

    @property
    def base_measure(self) -> UniformOnShapes:
        return UniformOnShapes((self.positive, self.negative))

    def embed(self, x) -> np.ndarray:
        return np.asarray(x) @ self.rotation.T + self.offset

    def pull_back(self, y) -> np.ndarray:
        return (np.asarray(y) - self.offset) @ self.rotation

    def on_image(self, y, tol: float = 1e-9) -> np.ndarray:
        y = np.atleast_2d(y)
        resid = y - self.embed(self.pull_back(y))
        return np.linalg.norm(resid, axis=1) <= tol

    def contains_positive(self, y) -> np.ndarray:
        y = np.atleast_2d(y)
        return self.on_image(y) & contains(self.positive, self.pull_back(y))

    def sample(self, n: int, rng: np.random.Generator):
        """Uniform points on M = M1 + M0 with their labels."""
        base = self.base_measure.sample(n, rng)
        return self.embed(base), contains(self.positive, base).astype(int)

    def certify_disjoint(self, n: int = 4000, seed: int = 0) -> float:
        """Minimum sampled distance between the classes; raises if they touch."""
        rng = make_rng(seed, 7)
        a = self.embed(UniformOnShapes((self.positive,)).sample(n, rng))
        b = self.embed(UniformOnShapes((self.negative,)).sample(n, rng))
        gap = float(cKDTree(b).query(a)[0].min())
        if gap <= 0:
            raise GeometryError("class shapes intersect")
        return gap


# ---------------------------------------------------------------------------
# risk


@dataclass(frozen=True)
class Problem:
    """Binary problem: indicator of ``positive`` under ``measure``."""

    positive: RepresentativeSpec
    measure: MeasureSpec
    negative: RepresentativeSpec | None = None

    @property
    def on_manifold(self) -> bool:
        return isinstance(self.measure, UniformOnShapes)

    @classmethod
    def on_shapes(cls, positive, negative=None):
        shapes = (positive,) if negative is None else (positive, negative)
        return cls(positive, UniformOnShapes(shapes), negative)


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int

    def within(self, eps: float, k: float = 3.0) -> bool:
        return self.mean <= eps + k * self.std_error


def _welford_merge(a, b):
    n_a, mean_a, m2_a = a
    n_b, mean_b, m2_b = b
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * n_b / n
    return n, mean, m2_a + m2_b + delta * delta * n_a * n_b / n


def squared_errors(h: Callable, problem: Problem, pts: np.ndarray) -> np.ndarray:
    target = contains(problem.positive, pts).astype(np.float64)
    vals = np.asarray(h(pts), dtype=np.float64).reshape(-1)
    return (vals - target) ** 2


def monte_carlo_risk(h: Callable, problem: Problem, n: int, seed: int,
                     shards: int = 1) -> RiskEstimate:
    """Unbiased estimate of the squared-error risk of ``h`` against the positive indicator."""
    if n < 100:
        raise ValueError("monte_carlo_risk needs n >= 100")
    sizes = [n // shards + (i < n % shards) for i in range(shards)]
    acc = None
    for i, m in enumerate(sizes):
        pts = problem.measure.sample(m, make_rng(seed, i))
        err = squared_errors(h, problem, pts)
        part = (m, float(err.mean()), float(((err - err.mean()) ** 2).sum()))
        acc = part if acc is None else _welford_merge(acc, part)
    count, mean, m2 = acc
    return RiskEstimate(mean, math.sqrt(m2 / (count - 1) / count), count, seed)


# ---------------------------------------------------------------------------
# shells


def shell_volume(shape: Primitive, delta: float) -> float:
    """Volume of ``r^2 - delta <= level <= r^2``."""
    inner = shape.r ** 2 - delta
    return shape.volume() - shape.tube_volume(math.sqrt(inner) if inner > 0 else 0.0)


def _analytic_normalizer(shape, measure):
    if isinstance(measure, UniformBox):
        return measure.volume() if measure.encloses(shape) else None
    if isinstance(measure, UniformOnShapes):
        if measure.disjoint() and any(shape == s for s in measure.shapes):
            return measure.volume()
    return None


def shell_measure_mc(shape: Primitive, delta: float, measure: MeasureSpec, n: int, seed: int):
    """MC estimate (mean, std error) of the measure of the delta-shell."""
    pts = measure.sample(n, make_rng(seed))
    lv = shape.level(pts)
    hit = (lv >= shape.r ** 2 - delta) & (lv <= shape.r ** 2)
    p = hit.mean()
    return float(p), math.sqrt(max(p * (1 - p), 1.0 / n) / n)


def shell_delta(shape: Primitive, eps2: float, measure: MeasureSpec, method: str = "auto",
                seed: int = 0, n_mc: int = 40000, certify: bool = True) -> float:
    """Largest shell width (in level units, at most r^2) whose measure is <= eps2.

    Analytic for uniform measures with known normalizer; otherwise an MC
    bisection halved by a safety factor of 2.  The result is re-checked with
    an independent MC estimate before it is returned.
    """
    if eps2 <= 0:
        raise ValueError("eps2 must be positive")
    top = shape.r ** 2
    norm = _analytic_normalizer(shape, measure) if method in ("auto", "analytic") else None
    if method == "analytic" and norm is None:
        raise ShellError("no analytic shell measure for this shape/measure pair")
    if norm is not None:
        frac = lambda t: shell_volume(shape, t) / norm
        if frac(top) <= eps2:
            delta = top
        else:
            delta = brentq(lambda t: frac(t) - eps2, 0.0, top, xtol=1e-15, rtol=1e-13)
            delta *= 1 - 1e-9
    else:
        pts = measure.sample(n_mc, make_rng(seed, 1))
        lv = shape.level(pts)
        lo, hi = 0.0, top
        est = lambda t: ((lv >= top - t) & (lv <= top)).mean()
        if est(top) + 3 * math.sqrt(est(top) * (1 - est(top)) / n_mc) <= eps2:
            delta = top / 2
        else:
            for _ in range(60):
                mid = (lo + hi) / 2
                p = est(mid)
                if p + 3 * math.sqrt(max(p * (1 - p), 1.0 / n_mc) / n_mc) <= eps2:
                    lo = mid
                else:
                    hi = mid
            delta = lo / 2
        if delta <= 0:
            raise ShellError("could not certify a positive shell width")
    if certify:
        p, se = shell_measure_mc(shape, delta, measure, 20000, derive_seed(seed, 2))
        if p > eps2 + 3 * se:
            raise ShellError(f"shell measure {p:.4g} exceeds budget {eps2:.4g}")
    return delta


# ---------------------------------------------------------------------------
# serialization


def shape_to_dict(shape) -> dict:
    if isinstance(shape, BallSpec):
        return {"type": "ball", "r": shape.r, "c": list(shape.c)}
    if isinstance(shape, TorusSpec):
        return {"type": "torus", "r": shape.r, "R": shape.R, "c": list(shape.c)}
    if isinstance(shape, CircleSpec):
        return {"type": "circle", "R": shape.R, "c": list(shape.c)}
    if isinstance(shape, RepresentativeSpec):
        return {"type": "representative", "label": shape.label,
                "balls": [shape_to_dict(b) for b in shape.balls],
                "tori": [shape_to_dict(t) for t in shape.tori]}
    if isinstance(shape, UniformBox):
        return {"type": "uniform_box", "lower": list(shape.lower), "upper": list(shape.upper)}
    if isinstance(shape, UniformOnShapes):
        return {"type": "uniform_on_shapes", "shapes": [shape_to_dict(s) for s in shape.shapes]}
    if isinstance(shape, Problem):
        doc = {"type": "problem", "positive": shape_to_dict(shape.positive),
               "measure": shape_to_dict(shape.measure)}
        if shape.negative is not None:
            doc["negative"] = shape_to_dict(shape.negative)
        return doc
    if isinstance(shape, EmbeddedSpec):
        return {"type": "embedded", "positive": shape_to_dict(shape.positive),
                "negative": shape_to_dict(shape.negative),
                "rotation": shape.rotation.tolist(), "offset": shape.offset.tolist(),
                "tau_input": shape.tau_input, "volume_input": shape.volume_input}
    raise TypeError(f"cannot serialize {type(shape).__name__}")


def shape_from_dict(doc: dict):
    kind = doc["type"]
    if kind == "ball":
        return BallSpec(doc["r"], doc["c"])
    if kind == "torus":
        return TorusSpec(doc["r"], doc["R"], doc["c"])
    if kind == "circle":
        return CircleSpec(doc["R"], doc.get("c", (0.0, 0.0)))
    if kind == "representative":
        return RepresentativeSpec(tuple(shape_from_dict(b) for b in doc.get("balls", [])),
                                  tuple(shape_from_dict(t) for t in doc.get("tori", [])),
                                  doc.get("label", 1))
    if kind == "uniform_box":
        return UniformBox(doc["lower"], doc["upper"])
    if kind == "uniform_on_shapes":
        return UniformOnShapes(tuple(shape_from_dict(s) for s in doc["shapes"]))
    if kind == "problem":
        neg = doc.get("negative")
        return Problem(as_representative(shape_from_dict(doc["positive"])),
                       shape_from_dict(doc["measure"]),
                       None if neg is None else as_representative(shape_from_dict(neg)))
    if kind == "embedded":
        return EmbeddedSpec(as_representative(shape_from_dict(doc["positive"])),
                            as_representative(shape_from_dict(doc["negative"])),
                            np.array(doc["rotation"]), np.array(doc["offset"]),
                            doc["tau_input"], doc.get("volume_input"))
    raise ValueError(f"unknown shape type {kind!r}")


def as_representative(shape, label: int = 1) -> RepresentativeSpec:
    if isinstance(shape, RepresentativeSpec):
        return shape
    if isinstance(shape, BallSpec):
        return RepresentativeSpec((shape,), (), label)
    if isinstance(shape, TorusSpec):
        return RepresentativeSpec((), (shape,), label)
    raise TypeError(f"cannot lift {type(shape).__name__} to a representative")


def write_point_cloud(path, points: np.ndarray, labels: Sequence[int] | None = None) -> None:
    points = np.atleast_2d(points)
    labels = np.zeros(len(points), dtype=int) if labels is None else labels
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(points.shape[1])] + ["label"])
        for p, lab in zip(points, labels):
            w.writerow([repr(float(v)) for v in p] + [int(lab)])


def read_point_cloud(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    has_label = header[-1] == "label"
    width = len(header) - int(has_label)
    pts = np.array([[float(v) for v in row[:width]] for row in body]).reshape(-1, width)
    labels = np.array([int(row[width]) for row in body]) if has_label else None
    return pts, labels
