"""Indicator networks for balls, solid tori, their unions and full representatives.

Each builder approximates a level function ``L`` with a sum of truncated-power
interpolants, then applies a threshold ramp.  The ramp is placed inside the
shell ``r^2 - delta <= L <= r^2`` after shrinking it by the certified sup error
of the approximation, so the network is exactly 1 below the shell, exactly 0
above it, and the risk is bounded by the shell measure.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import relu_core as rc
from .pwl import FALLING, RISING, threshold_net, truncated_sqrt_net, truncated_square_net
from .relu_core import ReluNetwork
from .shapes import (BallSpec, GeometryError, RepresentativeSpec, ShellError, TorusSpec,
                     shell_delta)


@dataclass
class BoundReport:
    constructed_size: int
    constructed_depth: int
    paper_size_bound: float
    paper_depth_bound: float
    eps_budget: float
    delta_shell: float
    sup_error: float = 0.0
    terms: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def within_bounds(self) -> bool:
        return (self.constructed_size <= math.ceil(self.paper_size_bound)
                and self.constructed_depth <= self.paper_depth_bound)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["within_bounds"] = self.within_bounds
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def ball_size_bound(d: int, r: float, eps: float) -> float:
    return 4 * d * d * r * r / eps + 2 * d + 2


def torus_size_bound(d: int, r: float, R: float, eps: float) -> float:
    return 2 * d / eps * (4 * (d - 1) * (R + r) ** 2 + 8 * r * r + r / math.sqrt(R - r)) + 9


def ball_size(d: int, r: float, eps: float) -> int:
    """Exact size of ``ball_network(d, r, c, eps)``: d square nets plus the ramp."""
    e = eps / (2 * d)
    return d * (max(1, math.ceil(2 * r * r / e)) + 1) + 2


def torus_size(d: int, r: float, R: float, eps: float) -> int:
    """Exact size of ``torus_network(d, r, R, c, eps)`` for eps well below 1."""
    e = eps / (2 * d)
    q = 2 if d == 2 else d - 1
    s1 = max(1, math.ceil(2 * (R + r) ** 2 / e)) + 1
    s3 = max(1, math.ceil(2 * r * r / e)) + 1
    s2 = max(1, math.ceil((2 * r) / (2 * e * math.sqrt(R - r)))) + 1
    if d == 2:
        return q * s1 + s2 + s3 + 2
    return q * s1 + s2 + 2 * s3 + 4


def _check_eps(eps):
    if not eps > 0:
        raise ValueError("eps must be positive")


def _coordinate(net: ReluNetwork, d: int, i: int, shift: float) -> ReluNetwork:
    """``net(x_i - shift)`` as a network on R^d (the shift costs no units)."""
    sel = np.zeros((1, d))
    sel[0, i] = 1.0
    return rc.compose(net, rc.affine(sel, [-shift]))


def _ramp(level_net: ReluNetwork, top: float, delta: float, sup_error: float, nominal: bool):
    width = delta - 2 * sup_error
    if width <= 0:
        raise ShellError(
            f"shell width {delta:.3g} does not exceed twice the sup error {sup_error:.3g}")
    t = top - sup_error
    return rc.compose(threshold_net(t, width, FALLING), level_net), {"t": t, "width": width}


def _shell(shape, eps2, measure, sup_error):
    if measure is None:
        # uncertified default: a quarter of the level range, kept clear of the error band
        return max(shape.r ** 2 / 4, 4 * sup_error), True
    return shell_delta(shape, eps2, measure), False


def ball_network(d: int, r: float, c, eps: float, measure=None):
    """3-layer indicator network of the ball ``|x - c| <= r``.

    Per-coordinate budget ``eps / (2 d)`` for the squared-distance sum and a
    shell of measure ``eps / 2`` for the threshold.
    """
    _check_eps(eps)
    if d < 1:
        raise ValueError("d must be >= 1")
    c = tuple(float(v) for v in c)
    if len(c) != d:
        raise ValueError(f"center has length {len(c)}, expected {d}")
    shape = BallSpec(r, c)
    e = eps / (2 * d)
    sq = truncated_square_net(r, e)
    level = rc.total([_coordinate(sq.network, d, i, c[i]) for i in range(d)])
    sup_error = d * sq.sup_error
    delta, nominal = _shell(shape, eps / 2, measure, sup_error)
    net, ramp = _ramp(level, r * r, delta, sup_error, nominal)
    report = BoundReport(net.size, net.depth, ball_size_bound(d, r, eps), 3, eps, delta, sup_error,
                         terms={"square_units": sq.segments + 1, "coordinates": d, **ramp})
    if nominal:
        report.flags.append("shell width not certified: no measure given")
    return net, report


def torus_network(d: int, r: float, R: float, c, eps: float, measure=None):
    """5-layer indicator network of the solid torus (an annulus when d = 2)."""
    _check_eps(eps)
    if d < 2:
        raise ValueError("torus needs d >= 2")
    if not 0 < r < R:
        raise ValueError("torus needs R > r > 0")
    c = tuple(float(v) for v in c)
    if len(c) != d:
        raise ValueError(f"center has length {len(c)}, expected {d}")
    shape = TorusSpec(r, R, c)
    e = eps / (2 * d)
    q = shape.radial_dims
    h1 = truncated_square_net(R + r, e)
    h2 = truncated_sqrt_net(R - r, R + r, e)
    h31 = truncated_square_net(r, e)

    radial = rc.total([_coordinate(h1.network, d, i, c[i]) for i in range(q)])
    if d > 2:
        h32 = truncated_square_net(r, e)
        axis = _coordinate(h32.network, d, d - 1, c[d - 1])
        stage1 = rc.parallel([radial, axis])
        carry = rc.passthrough(1, nonnegative=True)
        pick = lambda k: rc.affine(np.eye(2)[[k]])
        stage2 = rc.parallel([rc.compose(h2.network, pick(0)), rc.compose(carry, pick(1))])
        shifted = rc.compose(h31.network, rc.affine([[1.0, 0.0]], [-R]))
        stage3 = rc.add(shifted, rc.compose(carry, pick(1)))
        level = rc.compose(stage3, rc.compose(stage2, stage1))
        axis_error = h32.sup_error
    else:
        level = rc.compose(rc.compose(h31.network, rc.affine([[1.0]], [-R])),
                           rc.compose(h2.network, radial))
        axis_error = 0.0
    # sqrt is 1/(2(R-r))-Lipschitz on its active range, the outer square 2r-Lipschitz
    sup_error = axis_error + h31.sup_error + 2 * r * (
        h2.sup_error + q * h1.sup_error / (2 * (R - r)))
    delta, nominal = _shell(shape, eps / 2, measure, sup_error)
    net, ramp = _ramp(level, r * r, delta, sup_error, nominal)
    terms = {"s1i": h1.segments + 1, "s2": h2.segments + 1, "s31": h31.segments + 1,
             "s32": (h31.segments + 1) if d > 2 else 0, "radial_terms": q, **ramp}
    report = BoundReport(net.size, net.depth, torus_size_bound(d, r, R, eps), 5, eps, delta,
                         sup_error, terms=terms)
    if d == 2:
        report.flags.append("d=2 torus realized as the annulus (|x-c|-R)^2 <= r^2")
    if nominal:
        report.flags.append("shell width not certified: no measure given")
    return net, report


def union_network(nets: Sequence, eps: float):
    """Indicator of a union: sum the member indicators and clamp with a rising ramp on [0, 1].

    ``nets`` holds ``(network, eps_i)`` pairs.  Members of unequal depth are
    padded with one-unit passthroughs (their outputs are nonnegative).
    """
    _check_eps(eps)
    if not nets:
        raise ValueError("union needs at least one member")
    members = [n for n, _ in nets]
    if len({n.input_dim for n in members}) != 1:
        raise ValueError("union members must share input_dim")
    if any(n.output_dim != 1 for n in members):
        raise ValueError("union members must be scalar")
    padded, padding = rc.align_depths(members, nonnegative=True)
    summed = rc.total(padded)
    net = rc.compose(threshold_net(0.0, 1.0, RISING), summed)
    member_budget = float(sum(e for _, e in nets))
    bound = sum(n.size for n in members) + 2 + padding
    report = BoundReport(net.size, net.depth, bound, max(n.depth for n in members) + 2, eps, 1.0,
                         terms={"members": len(members), "member_sizes": [n.size for n in members],
                                "padding_units": padding, "member_eps_sum": member_budget})
    if member_budget > eps * (1 + 1e-12):
        report.flags.append(f"member budgets sum to {member_budget:.4g} > eps")
    return net, report


def component_network(shape, eps: float, measure=None):
    if isinstance(shape, BallSpec):
        return ball_network(shape.d, shape.r, shape.c, eps, measure)
    if isinstance(shape, TorusSpec):
        return torus_network(shape.d, shape.r, shape.R, shape.c, eps, measure)
    raise TypeError(f"unsupported component {type(shape).__name__}")


def component_bound(shape, eps: float) -> float:
    if isinstance(shape, BallSpec):
        return ball_size_bound(shape.d, shape.r, eps)
    return torus_size_bound(shape.d, shape.r, shape.R, eps)


def representative_network(spec: RepresentativeSpec, eps: float, measure=None):
    """Indicator of a union of balls and tori, every member built at ``eps / m``."""
    _check_eps(eps)
    comps = spec.components
    m = len(comps)
    built = [component_network(s, eps / m, measure) for s in comps]
    net, ureport = union_network([(n, eps / m) for n, _ in built], eps)
    beta = sum(spec.betti())
    d = spec.d
    bound = sum(math.ceil(component_bound(s, eps / m)) for s in comps) + 2 \
        + ureport.terms["padding_units"]
    report = BoundReport(
        net.size, net.depth, bound, max(r.paper_depth_bound for _, r in built) + 2, eps,
        min(r.delta_shell for _, r in built), max(r.sup_error for _, r in built),
        terms={"components": m, "balls": len(spec.balls), "tori": len(spec.tori),
               "betti_total": beta, "component_sizes": [n.size for n, _ in built],
               "padding_units": ureport.terms["padding_units"],
               "size_ratio": net.size / (d * d * beta * beta / eps)},
        flags=sorted({f for _, r in built for f in r.flags}))
    if spec.overlapping_pairs():
        report.flags.append("components may overlap; union homotopy type not certified")
    return net, report


def theoretical_size_bounds(d: int, D: int, beta: int, eps: float, tau: float, delta: float,
                            n: int | None = None, k: int | None = None,
                            l: int | None = None) -> dict:
    """Closed-form size and depth terms; the O(.) terms are reported at constant 1.

    ``n`` is the sample count (projection network), ``k`` and ``l`` the
    simplex counts for the simplicial-map size ``D + d + k(D+1) + l(d+1)``.
    """
    for name, v in (("d", d), ("D", D), ("beta", beta), ("eps", eps), ("tau", tau),
                    ("delta", delta)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    log_inv = math.log(1 / (tau * delta))
    loglog = math.log(log_inv) if log_inv > 1 else None
    terms = {
        "topology_size": d * d * beta * beta / eps,
        "log_beta": math.log2(beta),
        "d_log_inv_tau": d * math.log(1 / tau),
        "loglog_inv_tau_delta": loglog,
        "nerve_size": tau ** (-d * d / 2) * log_inv ** (d / 2) if log_inv > 0 else None,
        "projection_size_sampled": D * tau ** (-d) * log_inv if log_inv > 0 else None,
    }
    if n is not None:
        terms["projection_size"] = n * D
        terms["projection_depth"] = math.log2(n) + 1
    if k is not None and l is not None:
        terms["simplicial_map_size"] = D + d + k * (D + 1) + l * (d + 1)
    present = [v for key, v in terms.items()
               if key in ("topology_size", "nerve_size", "projection_size_sampled")
               and v is not None]
    terms["total_size"] = float(sum(present))
    terms["total_depth"] = terms["log_beta"] + terms["d_log_inv_tau"] + (loglog or 0.0)
    return terms


__all__ = ["BoundReport", "ball_network", "torus_network", "union_network",
           "representative_network", "theoretical_size_bounds", "ball_size_bound",
           "torus_size_bound", "component_network", "GeometryError"]
