"""Acceptance criteria, each checked at its stated tolerance and time limit.

Every test prints one ``PASS``/``FAIL`` line; the lines are collected again in
the pytest terminal summary under "acceptance criteria".
"""

import math
import time
from itertools import combinations

import mpmath as mp
import numpy as np
import pytest

from manifold_relu import relu_core as rc
from manifold_relu.homology import SimplicialComplex, betti_numbers, boundary_matrix
from manifold_relu.indicators import (ball_network, ball_size_bound, torus_network,
                                      torus_size_bound)
from manifold_relu.nerve import (cech_complex, homology_recovery_trial, matched_radius,
                                 rips_complex, sample_size_bound)
from manifold_relu.pipeline import PipelineConfig, run_pipeline, scaling_experiment
from manifold_relu.pwl import PiecewiseLinear1D, pwl_to_network, threshold_net
from manifold_relu.shapes import (BallSpec, CircleSpec, Problem, RepresentativeSpec, TorusSpec,
                                  UniformBox, monte_carlo_risk)
from netgen import random_net, reference_eval


class Criterion:
    def __init__(self, record, number, title, limit=None):
        self.record, self.number, self.title, self.limit = record, number, title, limit
        self.failures = []

    def check(self, ok, message):
        if not ok:
            self.failures.append(message)

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        if self.limit is not None and elapsed > self.limit:
            self.failures.append(f"runtime {elapsed:.1f}s over {self.limit}s")
        status = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures[:3]) if self.failures else self.summary
        self.record(f"[{status}] criterion {self.number}: {self.title} ({elapsed:.1f}s) {detail}")
        assert not self.failures, self.failures
        return False

    summary = ""


def test_size_formula_fidelity(record_criterion):
    rng = np.random.default_rng(101)
    with Criterion(record_criterion, 1, "ball and torus sizes within bounds, depths 3 and 5",
                   10) as c:
        worst = 0.0
        for _ in range(50):
            d = int(rng.integers(1, 5))
            r, eps = rng.uniform(0.1, 2.0), rng.uniform(0.02, 0.5)
            net, _ = ball_network(d, r, rng.uniform(-1, 1, d), eps)
            bound = ball_size_bound(d, r, eps)
            c.check(net.size <= bound, f"ball size {net.size} > {bound:.1f}")
            c.check(net.depth == 3, f"ball depth {net.depth}")
            worst = max(worst, net.size / bound)
        for _ in range(50):
            d = int(rng.integers(2, 5))
            r = rng.uniform(0.25, 1.0)
            R, eps = r + rng.uniform(0.1, 2.0), rng.uniform(0.02, 0.5)
            net, _ = torus_network(d, r, R, rng.uniform(-1, 1, d), eps)
            bound = torus_size_bound(d, r, R, eps)
            c.check(net.size <= bound, f"torus size {net.size} > {bound:.1f}")
            c.check(net.depth == 5, f"torus depth {net.depth}")
            worst = max(worst, net.size / bound)
        c.summary = f"max size/bound {worst:.3f}"


@pytest.mark.parametrize("case", ["ball", "torus"])
def test_risk_bounds(record_criterion, case):
    with Criterion(record_criterion, 2, f"Monte-Carlo risk of the {case} network", 60) as c:
        if case == "ball":
            eps, measure = 0.05, UniformBox.cube(2, 2.0)
            shape = BallSpec(1.0, (0.0, 0.0))
            net, _ = ball_network(2, 1.0, (0.0, 0.0), eps, measure)
            spec = RepresentativeSpec((shape,))
        else:
            eps, measure = 0.2, UniformBox.cube(3, 3.0)
            shape = TorusSpec(0.5, 2.0, (0.0, 0.0, 0.0))
            net, _ = torus_network(3, 0.5, 2.0, (0.0, 0.0, 0.0), eps, measure)
            spec = RepresentativeSpec((), (shape,))
        est = monte_carlo_risk(net, Problem(spec, measure), 100_000, seed=2024)
        c.check(est.within(eps), f"risk {est.mean:.4g} > {eps} + 3*{est.std_error:.2g}")
        c.summary = f"risk {est.mean:.4g} +- {est.std_error:.2g} (eps {eps})"


def test_combinator_accounting(record_criterion):
    rng = np.random.default_rng(303)
    with Criterion(record_criterion, 3, "compose/add/max size accounting and agreement") as c:
        worst = 0.0
        for _ in range(100):
            depth = int(rng.integers(2, 5))
            f, g = random_net(rng, 3, 1, depth), random_net(rng, 3, 1, depth)
            x = rng.normal(size=(50, 3))
            fx, gx = reference_eval(f, x), reference_eval(g, x)

            outer = random_net(rng, 1, 1)
            h = rc.compose(outer, f)
            c.check(h.size == f.size + outer.size, "compose size")
            c.check(h.depth == f.depth + outer.depth - 1, "compose depth")
            err_c = np.max(np.abs(h(x) - reference_eval(outer, fx)))

            s = rc.add(f, g)
            c.check(s.size == f.size + g.size and s.depth == depth, "add size/depth")
            err_a = np.max(np.abs(s(x) - fx - gx))

            m = int(rng.integers(2, 5))
            nets = [f, g] + [random_net(rng, 3, 1, depth) for _ in range(m - 2)]
            mx = rc.maximum(nets)
            ref = np.max(np.hstack([reference_eval(n, x) for n in nets]), axis=1, keepdims=True)
            c.check(mx.size <= sum(n.size for n in nets) + 4 * (2 * m - 1), "max size bound")
            c.check(mx.depth <= depth + math.ceil(math.log2(m)) + 1, "max depth bound")
            err_m = np.max(np.abs(mx(x) - ref))
            worst = max(worst, err_c, err_a, err_m)
        c.check(worst <= 1e-9, f"agreement error {worst:.2e}")
        c.summary = f"max deviation {worst:.1e}"


def test_pwl_exactness(record_criterion):
    rng = np.random.default_rng(404)
    with Criterion(record_criterion, 4, "exact PWL networks within the node budget") as c:
        worst = 0.0
        for i in range(100):
            p = int(rng.integers(2, 12))
            b = np.sort(rng.choice(np.linspace(-5, 5, 1001), p - 1, replace=False))
            s = rng.normal(size=p)
            if i % 3 == 1:
                s[0] = 0.0
            elif i % 3 == 2:
                s[-1] = 0.0
            f = PiecewiseLinear1D(b, s, rng.normal())
            net = pwl_to_network(f)
            budget = p - 1 if (f.flat_left or f.flat_right) else p
            c.check(net.size <= budget and net.depth == 2, f"size {net.size} > budget {budget}")
            x = np.concatenate([np.linspace(b[0] - 1, b[-1] + 1, 10_000), b])
            worst = max(worst, float(np.max(np.abs(net(x)[:, 0] - f(x)))))
        c.check(worst <= 1e-9, f"max error {worst:.2e}")
        for direction in ("falling", "rising"):
            c.check(threshold_net(0.3, 0.1, direction).size == 2, f"{direction} threshold size")
        c.summary = f"max error {worst:.1e}"


def test_homology_correctness(record_criterion):
    hollow = [(0, 1), (1, 2), (0, 2)]
    torus7 = [tuple(sorted((i, (i + 1) % 7, (i + 3) % 7))) for i in range(7)] + \
             [tuple(sorted((i, (i + 2) % 7, (i + 3) % 7))) for i in range(7)]
    cases = [("hollow triangle", hollow, (1, 1)),
             ("filled triangle", [(0, 1, 2)], (1, 0, 0)),
             ("two hollow triangles", hollow + [(3, 4), (4, 5), (3, 5)], (2, 2)),
             ("7-vertex torus", torus7, (1, 2, 1))]
    rng = np.random.default_rng(505)
    with Criterion(record_criterion, 5, "Betti numbers, boundary identity, Euler identity",
                   5) as c:
        for name, maximal, expected in cases:
            got = tuple(betti_numbers(SimplicialComplex.from_maximal(maximal)))
            c.check(got == expected, f"{name}: {got} != {expected}")
        for _ in range(100):
            maximal = [tuple(rng.choice(9, size=int(rng.integers(1, 6)), replace=False))
                       for _ in range(int(rng.integers(1, 10)))]
            K = SimplicialComplex.from_maximal(maximal)
            for k in range(2, K.max_dim + 1):
                c.check((boundary_matrix(K, k - 1) @ boundary_matrix(K, k)).is_zero(),
                        "boundary of boundary nonzero")
            chi = sum((-1) ** k * n for k, n in enumerate(K.counts()))
            c.check(betti_numbers(K).euler == chi, "Euler identity")
        c.summary = "4 examples, 100 random complexes"


def test_nerve_recovery(record_criterion):
    circle = CircleSpec(1.0)
    r = matched_radius(circle.volume(), 1, circle.reach, 0.05, 200)
    with Criterion(record_criterion, 6, "unit-circle recovery and Cech/Rips sandwich", 120) as c:
        wins = sum(homology_recovery_trial(circle, 200, r, seed)[0] for seed in range(100))
        c.check(wins >= 95, f"only {wins}/100 recoveries")
        rng = np.random.default_rng(606)
        for _ in range(50):
            pts = rng.uniform(0, 1, size=(int(rng.integers(8, 25)), int(rng.integers(2, 4))))
            rad = rng.uniform(0.1, 0.4)
            cech = set(cech_complex(pts, rad, 3).all_simplices())
            rips = set(rips_complex(pts, rad, 3).all_simplices())
            wide = set(cech_complex(pts, math.sqrt(2) * rad * (1 + 1e-9), 3).all_simplices())
            c.check(cech <= rips <= wide, "sandwich violated")
        c.summary = f"{wins}/100 recoveries at r={r:.4f}"


def _mp_bound(vol, d, tau, eps, delta):
    vol, tau, eps, delta = (mp.mpf(v) for v in (vol, tau, eps, delta))
    bvol = lambda rad: mp.pi ** (mp.mpf(d) / 2) / mp.gamma(mp.mpf(d) / 2 + 1) * rad ** d
    t1, t2 = mp.asin(eps / (8 * tau)), mp.asin(eps / (16 * tau))
    l1 = vol / (mp.cos(t1) ** d * bvol(eps / 4))
    l2 = vol / (mp.cos(t2) ** d * bvol(eps / 8))
    n = int(mp.floor(l1 * (mp.log(l2) + mp.log(1 / delta)))) + 1
    return {"lambda1": l1, "lambda2": l2, "theta1": t1, "theta2": t2, "n_required": n}


def test_sample_bound_calculator(record_criterion):
    mp.mp.dps = 50
    rng = np.random.default_rng(707)
    with Criterion(record_criterion, 7, "sample bound against a 50-digit oracle") as c:
        for _ in range(20):
            d = int(rng.integers(1, 5))
            tau = float(rng.uniform(0.2, 3.0))
            eps = float(rng.uniform(0.01, 0.49)) * tau
            vol, delta = float(rng.uniform(0.5, 50.0)), float(rng.uniform(0.001, 0.5))
            got = sample_size_bound(vol, d, tau, eps, delta)
            ref = _mp_bound(vol, d, tau, eps, delta)
            for key in ("lambda1", "lambda2", "theta1", "theta2"):
                rel = abs(mp.mpf(getattr(got, key)) / ref[key] - 1)
                c.check(rel < 5e-11, f"{key} off by {float(rel):.1e}")
            c.check(got.n_required == ref["n_required"], "n_required mismatch")
        for bad in (0.0, 0.5, 0.7):
            try:
                sample_size_bound(1.0, 1, 1.0, bad, 0.1)
                c.check(False, f"eps={bad} accepted")
            except ValueError:
                pass
        c.summary = "20 parameter sets, precondition enforced"


def test_quadratic_scaling(record_criterion):
    with Criterion(record_criterion, 8, "size grows quadratically in total Betti number",
                   30) as c:
        res = scaling_experiment([2, 4, 8, 16], 0.1, 2)
        for row in res["rows"]:
            c.check(row["size"] == row["expected_size"],
                    f"beta={row['beta']}: {row['size']} != {row['expected_size']}")
        c.check(0.9 <= res["exponent"] <= 2.1, f"exponent {res['exponent']:.3f}")
        sizes = [row["size"] for row in res["rows"]]
        c.summary = f"sizes {sizes}, exponent {res['exponent']:.3f}"


def test_end_to_end_pipeline(record_criterion):
    with Criterion(record_criterion, 9, "annulus vs disk in R^3 over 100 seeds", 600) as c:
        wins, risks = 0, []
        for seed in range(100):
            rep = run_pipeline(PipelineConfig(seed=seed))
            wins += rep.success
            risks.append(rep.risk["mean"])
            c.check(rep.classifier["within_bound"],
                    f"seed {seed}: size {rep.classifier['size']} > {rep.classifier['bound']}")
        c.check(wins >= 90, f"only {wins}/100 successes")
        c.summary = f"{wins}/100 successes, mean risk {np.mean(risks):.4f}"
