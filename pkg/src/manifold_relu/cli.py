"""Command-line entry point.

Every subcommand reads an optional JSON ``--config`` (keys override the
defaults shown in ``--help``), writes ``report.json`` plus any CSV or network
files to ``--out``, and exits with 0 on success, 2 on a configuration error
and 3 when a shell or geometry certificate fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import relu_core as rc
from .homology import betti_numbers, read_complex, topological_complexity, write_complex
from .indicators import (ball_network, representative_network, theoretical_size_bounds,
                         torus_network)
from .nerve import alpha_complex_2d, cech_complex, sample_size_bound
from .pipeline import ConfigError, PipelineConfig, run_pipeline, scaling_csv, scaling_experiment
from .shapes import (GeometryError, Problem, UniformBox, as_representative, monte_carlo_risk,
                     read_point_cloud, shape_from_dict)

EXIT_CONFIG = 2
EXIT_CERT = 3


def _measure(cfg, d):
    doc = cfg.get("measure")
    if doc is None:
        return UniformBox.cube(d, cfg.get("box_half_width", 2.0))
    return shape_from_dict(doc)


def _write(out: Path, report: dict, extra: dict | None = None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    for name, text in (extra or {}).items():
        (out / name).write_text(text)


def cmd_synth_ball(cfg, seed, out):
    d, c = int(cfg.get("d", 2)), cfg.get("c")
    c = [0.0] * d if c is None else c
    net, rep = ball_network(d, float(cfg.get("r", 1.0)), c, float(cfg.get("eps", 0.1)),
                            _measure(cfg, d))
    _write(out, rep.to_dict(), {"network.json": rc.to_json(net)})


def cmd_synth_torus(cfg, seed, out):
    d, c = int(cfg.get("d", 3)), cfg.get("c")
    c = [0.0] * d if c is None else c
    net, rep = torus_network(d, float(cfg.get("r", 0.5)), float(cfg.get("R", 2.0)), c,
                             float(cfg.get("eps", 0.2)), _measure(cfg, d))
    _write(out, rep.to_dict(), {"network.json": rc.to_json(net)})


def cmd_synth_rep(cfg, seed, out):
    if "spec" not in cfg:
        raise ConfigError("synth-rep needs a 'spec' representative in the config")
    spec = as_representative(shape_from_dict(cfg["spec"]))
    measure = shape_from_dict(cfg["measure"]) if "measure" in cfg else None
    net, rep = representative_network(spec, float(cfg.get("eps", 0.1)), measure)
    _write(out, rep.to_dict(), {"network.json": rc.to_json(net)})


def cmd_risk(cfg, seed, out):
    if "network" not in cfg or "problem" not in cfg:
        raise ConfigError("risk needs 'network' (path) and 'problem' in the config")
    net = rc.from_json(Path(cfg["network"]).read_text())
    problem = shape_from_dict(cfg["problem"])
    if not isinstance(problem, Problem):
        raise ConfigError("'problem' must have type 'problem'")
    est = monte_carlo_risk(net, problem, int(cfg.get("n", 100000)), seed,
                           int(cfg.get("shards", 1)))
    _write(out, {"mean": est.mean, "std_error": est.std_error, "n_samples": est.n_samples,
                 "seed": est.seed})


def cmd_betti(cfg, seed, out):
    if "complex" not in cfg:
        raise ConfigError("betti needs a 'complex' file path")
    K = read_complex(cfg["complex"])
    b = betti_numbers(K)
    dim = cfg.get("manifold_dim")
    _write(out, {"betti": list(b.betti), "euler": b.euler, "counts": K.counts(),
                 "complexity": topological_complexity(K),
                 "complexity_truncated": None if dim is None else
                 topological_complexity(K, int(dim))})


def _cloud_complex(cfg, builder):
    if "points" not in cfg:
        raise ConfigError("need a 'points' CSV path")
    pts, _ = read_point_cloud(cfg["points"])
    K = builder(pts)
    b = betti_numbers(K)
    return K, {"betti": list(b.betti), "euler": b.euler, "counts": K.counts()}


def cmd_cech(cfg, seed, out):
    r, top = float(cfg.get("r", 0.5)), int(cfg.get("max_dim", 2))
    K, rep = _cloud_complex(cfg, lambda p: cech_complex(p, r, top))
    _write(out, rep)
    write_complex(K, out / "complex.txt")


def cmd_alpha2d(cfg, seed, out):
    r = float(cfg.get("r", 0.5))
    K, rep = _cloud_complex(cfg, lambda p: alpha_complex_2d(p, r))
    _write(out, rep)
    write_complex(K, out / "complex.txt")


def cmd_bounds(cfg, seed, out):
    report = {}
    keys = ("d", "D", "beta", "eps", "tau", "delta")
    if all(k in cfg for k in keys):
        report["size_terms"] = theoretical_size_bounds(
            *(cfg[k] for k in keys), n=cfg.get("n"), k=cfg.get("k"), l=cfg.get("l"))
    if all(k in cfg for k in ("vol", "d", "tau", "eps", "delta")):
        sb = sample_size_bound(cfg["vol"], cfg["d"], cfg["tau"], cfg["eps"], cfg["delta"])
        report["sample_bound"] = asdict(sb)
    if not report:
        raise ConfigError("bounds needs d, D, beta, eps, tau, delta (and/or vol)")
    _write(out, report)


def cmd_pipeline(cfg, seed, out):
    kwargs = {k: cfg[k] for k in ("n_train", "nerve_radius", "eps", "delta", "n_risk_samples")
              if k in cfg}
    config = PipelineConfig(seed=seed, **kwargs)
    if "problem" in cfg:
        config.problem = shape_from_dict(cfg["problem"])
    report = run_pipeline(config)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")


def cmd_scaling(cfg, seed, out):
    result = scaling_experiment(cfg.get("betas", [2, 4, 8, 16]), float(cfg.get("eps", 0.1)),
                                int(cfg.get("d", 2)), seed, cfg.get("kind", "ball"))
    _write(out, result, {"scaling.csv": scaling_csv(result)})


COMMANDS = {
    "synth-ball": (cmd_synth_ball, "ball indicator network (keys: d, r, c, eps, measure)"),
    "synth-torus": (cmd_synth_torus, "solid-torus indicator network (keys: d, r, R, c, eps)"),
    "synth-rep": (cmd_synth_rep, "representative network (keys: spec, eps, measure)"),
    "risk": (cmd_risk, "Monte-Carlo risk of a saved network (keys: network, problem, n)"),
    "betti": (cmd_betti, "Betti numbers of a complex file (keys: complex, manifold_dim)"),
    "cech": (cmd_cech, "Cech complex of a point-cloud CSV (keys: points, r, max_dim)"),
    "alpha2d": (cmd_alpha2d, "planar alpha complex of a point-cloud CSV (keys: points, r)"),
    "bounds": (cmd_bounds, "closed-form size terms and the sample-size bound"),
    "pipeline": (cmd_pipeline, "end-to-end annulus-vs-disk experiment"),
    "scaling": (cmd_scaling, "size against total Betti number (keys: betas, eps, d, kind)"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="manifold-relu", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON file with parameters")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=Path, default=Path("out"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = json.loads(args.config.read_text()) if args.config else {}
        COMMANDS[args.command][0](cfg, args.seed, args.out)
    except GeometryError as exc:
        print(f"certification error: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (ConfigError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
