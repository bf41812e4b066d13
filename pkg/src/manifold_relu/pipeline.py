"""End-to-end classification experiment and the Betti-number scaling sweep.

The classifier is ``g = h o phi o p``: project a point onto the nerve complex
of the training sample, carry it to the representative side with a
simplicial map, then apply the representative's indicator network.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .homology import SimplicialComplex, betti_numbers
from .indicators import ball_size, representative_network, theoretical_size_bounds, torus_size
from .nerve import cech_complex, sample_size_bound
from .shapes import (BallSpec, EmbeddedSpec, RepresentativeSpec, TorusSpec, UniformOnShapes,
                     make_rng)
from .simplicial_map import (GeometricComplex, VertexMap, barycentric, project_points,
                             simplex_by_id, simplicial_net_size)


class ConfigError(ValueError):
    pass


def annulus_vs_disk(D: int = 3, r: float = 0.5, R: float = 1.0, gap: float = 1.5) -> EmbeddedSpec:
    """Annulus (class 1) and a disk of the same width (class 0), rigidly placed in R^D."""
    annulus = RepresentativeSpec((), (TorusSpec(r, R, (0.0, 0.0)),), 1)
    disk = RepresentativeSpec((BallSpec(r, (R + r + gap + r, 0.0)),), (), 0)
    if D == 2:
        q = np.eye(2)
    else:
        q, _ = np.linalg.qr(np.arange(1.0, 2 * D + 1).reshape(D, 2) ** 1.5)
    offset = np.linspace(0.1, 0.3, D)
    return EmbeddedSpec(annulus, disk, q, offset, tau_input=min(r, R - r))


@dataclass
class PipelineConfig:
    problem: EmbeddedSpec = field(default_factory=annulus_vs_disk)
    n_train: int = 450
    nerve_radius: float = 0.24
    eps: float = 0.1
    delta: float = 0.05
    n_risk_samples: int = 1000
    seed: int = 0

    def validate(self) -> None:
        if not 0 < self.nerve_radius < self.problem.tau_input / 2:
            raise ConfigError("nerve_radius must lie in (0, tau/2)")
        if not 0 < self.eps < 1 or not 0 < self.delta < 1:
            raise ConfigError("eps and delta must lie in (0, 1)")
        if self.n_train < 2 or self.n_risk_samples < 100:
            raise ConfigError("need n_train >= 2 and n_risk_samples >= 100")


@dataclass
class PipelineReport:
    risk: dict
    betti_recovered: dict
    betti_expected: dict
    recovery_success: bool
    risk_success: bool
    success: bool
    g_depth: int
    g_size_measured: int
    classifier: dict
    complex_counts: dict
    asymptotic_depth_term: float
    asymptotic_size_terms: dict
    sample_bound: dict
    flags: list

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _class_complex(points, labels, r, max_dim):
    """Per-class Cech complexes, and their disjoint union on global vertex ids."""
    per_class, layers = {}, {}
    for c in (1, 0):
        ids = np.flatnonzero(labels == c)
        if not len(ids):
            per_class[c] = SimplicialComplex()
            continue
        K = cech_complex(points[ids], r, max_dim)
        per_class[c] = K
        for k in range(K.max_dim + 1):
            layers.setdefault(k, []).extend(tuple(int(ids[v]) for v in s) for s in K.simplices(k))
    union = SimplicialComplex.from_layers([sorted(layers[k]) for k in sorted(layers)])
    return per_class, union


def run_pipeline(config: PipelineConfig) -> PipelineReport:
    config.validate()
    prob, d, D = config.problem, config.problem.d, config.problem.D
    flags = []

    X, labels = prob.sample(config.n_train, make_rng(config.seed, 0))
    per_class, K = _class_complex(X, labels, config.nerve_radius, d)
    recovered, expected = {}, {}
    for c, rep in ((1, prob.positive), (0, prob.negative)):
        recovered[str(c)] = list(betti_numbers(per_class[c], max_dim=d - 1).truncated(d - 1))
        expected[str(c)] = list(rep.betti()[:d])
    recovery = recovered == expected

    # push-forward: vertex i of K goes to the pre-image of x_i
    Y = prob.pull_back(X)
    _, L = _class_complex(Y, labels, config.nerve_radius, d)
    phi = VertexMap.identity(range(config.n_train))
    try:
        phi.validate(K, L)
    except ValueError as exc:
        flags.append(f"vertex map invalid: {exc}")
        recovery = False
    GK, GL = GeometricComplex(K, X), GeometricComplex(L, Y)

    h, hrep = representative_network(prob.positive, config.eps, prob.base_measure)

    Xt, yt = prob.sample(config.n_risk_samples, make_rng(config.seed, 1))
    feet, sids = project_points(Xt, GK)
    Z = np.empty((len(Xt), d))
    for i, (foot, sid) in enumerate(zip(feet, sids)):
        s = list(simplex_by_id(GK, int(sid)))
        Z[i] = barycentric(foot, GK.coords[s]) @ GL.coords[[phi(v) for v in s]]
    err = (np.asarray(h(Z)).reshape(-1) - yt) ** 2
    mean = float(err.mean())
    se = float(err.std(ddof=1) / math.sqrt(len(err)))
    risk_ok = mean <= config.eps + 3 * se

    k_count, l_count = len(K), len(L)
    map_size = simplicial_net_size(D, d, k_count, l_count)
    proj_size = config.n_train * D
    proj_depth = math.ceil(math.log2(config.n_train)) + 1
    g_depth = proj_depth + 3 + h.depth - 2
    beta = sum(prob.positive.betti())
    terms = theoretical_size_bounds(d, D, beta, config.eps, prob.tau_input, config.delta,
                                    n=config.n_train, k=k_count, l=l_count)
    try:
        sb = sample_size_bound(prob.volume_input, d, prob.tau_input, config.nerve_radius,
                               config.delta)
        sample_bound = {"n_required": sb.n_required, "lambda1": sb.lambda1,
                        "lambda2": sb.lambda2, "satisfied": sb.satisfied_by(config.n_train)}
        if not sb.satisfied_by(config.n_train):
            flags.append("training set smaller than the sample-size bound")
    except ValueError as exc:
        sample_bound = {"error": str(exc)}
    classifier = {"size": h.size, "depth": h.depth, "bound": hrep.paper_size_bound,
                  "within_bound": h.size <= math.ceil(hrep.paper_size_bound),
                  "delta_shell": hrep.delta_shell, "flags": hrep.flags}
    return PipelineReport(
        risk={"mean": mean, "std_error": se, "n_samples": len(err),
              "seed": int(config.seed)},
        betti_recovered=recovered, betti_expected=expected,
        recovery_success=recovery, risk_success=risk_ok, success=recovery and risk_ok,
        g_depth=g_depth, g_size_measured=h.size + map_size + proj_size,
        classifier=classifier,
        complex_counts={"K": K.counts(), "L": L.counts(), "k": k_count, "l": l_count,
                        "simplicial_map_size": map_size, "projection_size": proj_size,
                        "projection_depth": proj_depth},
        asymptotic_depth_term=terms["total_depth"], asymptotic_size_terms=terms,
        sample_bound=sample_bound, flags=flags)


# ---------------------------------------------------------------------------
# scaling in the Betti number


def scaling_spec(beta: int, d: int, kind: str = "ball", r: float = 0.5) -> RepresentativeSpec:
    """Disjoint components on a line: beta balls, or beta/2 tori."""
    if kind == "ball":
        return RepresentativeSpec(tuple(BallSpec(r, (3 * r * i,) + (0.0,) * (d - 1))
                                        for i in range(beta)))
    if kind == "torus":
        if beta % 2:
            raise ValueError("torus unions realize only even beta")
        R = 2 * r
        step = 2 * (R + r) + r
        return RepresentativeSpec((), tuple(TorusSpec(r, R, (step * i,) + (0.0,) * (d - 1))
                                            for i in range(beta // 2)))
    raise ValueError(f"unknown kind {kind!r}")


def scaling_experiment(betas, eps: float, d: int, seed: int = 0, kind: str = "ball") -> dict:
    """Synthesize representatives across ``betas``; fit log(size) against log(beta)."""
    rows = []
    for beta in betas:
        spec = scaling_spec(int(beta), d, kind)
        m = len(spec.components)
        measure = UniformOnShapes((spec,))
        net, rep = representative_network(spec, eps, measure)
        expected = sum(ball_size(d, s.r, eps / m) if isinstance(s, BallSpec)
                       else torus_size(d, s.r, s.R, eps / m)
                       for s in spec.components) + 2 + rep.terms["padding_units"]
        rows.append({"beta": int(beta), "components": m, "size": net.size, "depth": net.depth,
                     "expected_size": expected, "size_over_beta_sq": net.size / beta ** 2,
                     "within_bound": rep.within_bounds})
    result = {"rows": rows, "eps": eps, "d": d, "seed": seed, "kind": kind}
    if len({r["beta"] for r in rows}) < 2:
        result["exponent"] = None
        result["error"] = "degenerate fit: need at least two distinct beta values"
    else:
        x = np.log([r["beta"] for r in rows])
        y = np.log([r["size"] for r in rows])
        result["exponent"] = float(np.polyfit(x, y, 1)[0])
    return result


def scaling_csv(result: dict) -> str:
    buf = io.StringIO()
    cols = ["beta", "components", "size", "depth", "expected_size", "size_over_beta_sq",
            "within_bound"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols + ["exponent", "error"])
    exponent = "" if result["exponent"] is None else repr(result["exponent"])
    for row in result["rows"]:
        w.writerow([row[c] for c in cols] + [exponent, result.get("error", "")])
    if not result["rows"]:
        w.writerow([""] * len(cols) + [exponent, result.get("error", "")])
    return buf.getvalue()
