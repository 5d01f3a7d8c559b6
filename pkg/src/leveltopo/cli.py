"""Command-line front end.

Subcommands: gen-data, train, analyze, reproduce, sweep-nonsingular,
validate-report.  Exit codes: 0 success/PASS, 1 FAIL (a checked property was
violated), 2 usage or configuration error, 3 runtime error.  The
LEVELSET_PROBE_THREADS environment variable caps seed-level parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .activations import Activation, ActivationKind
from .analysis import (ConstructionError, NonSingularSweepSpec, reproduction_spec,
                       run_experiment, random_nonsingular_sweep, window_escalation)
from .contours import Classification, component_encloses
from .fields import network_scalar_fn, sample_grid
from .network import (Layer, Network, Window, load_network, network_from_dict,
                      network_hash, save_network)
from .nonsingular import NonSingularizationError
from .reports import (KIND_ANALYZE, KIND_REPRODUCE_NARROW, KIND_REPRODUCE_WIDE,
                      KIND_SWEEP, load_report, make_report, report_passed,
                      validate_report, verdict_lines, write_report)
from .svgplot import render_topology_svg
from .training import (Dataset, Loss, Optimizer, TrainConfig, TrainingDiverged,
                       accuracy, gen_ring_dataset, init_weights, load_dataset,
                       save_dataset, train)

RUNTIME_ERRORS = (TrainingDiverged, ConstructionError, NonSingularizationError,
                  OSError)


def parse_activation(text: str) -> Activation:
    name, _, sharp = text.partition(":")
    try:
        kind = ActivationKind(name)
    except ValueError:
        raise ValueError(f"unknown activation {text!r}; expected sigmoid, tanh, relu "
                         "or one_to_one_relu:<n>") from None
    if kind is ActivationKind.ONE_TO_ONE_RELU:
        if not sharp:
            raise ValueError("one_to_one_relu needs a sharpness, e.g. one_to_one_relu:5")
        return Activation(kind, int(sharp))
    if sharp:
        raise ValueError(f"{name} takes no sharpness parameter")
    return Activation(kind)


def parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def parse_window(text: str) -> Window | None:
    if text == "auto":
        return None
    vals = [float(v) for v in text.split(",")]
    if len(vals) % 2 != 0 or len(vals) < 4:
        raise ValueError(f"window must be x_lo,x_hi,y_lo,y_hi[,...], got {text!r}")
    lo = np.array(vals[0::2])
    hi = np.array(vals[1::2])
    return Window(lo, hi)


def parse_levels(text: str):
    if text.startswith("decision:"):
        return text
    return tuple(float(v) for v in text.split(","))


def auto_window(data: Dataset) -> Window:
    lo, hi = data.bounding_box()
    return Window(lo, hi).scaled(2.0)


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    cfg = json.loads(Path(path).read_text())
    if not isinstance(cfg, dict):
        raise ValueError(f"config file {path} must contain a JSON object")
    return cfg


def pick(args_value, config: dict, key: str, default):
    """Flag value if given, else config file value, else the default."""
    if args_value is not None:
        return args_value
    if key in config:
        return config[key]
    return default


# ---------------------------------------------------------------------------


def cmd_gen_data(args) -> int:
    data = gen_ring_dataset(args.seed, args.inner, args.ring, args.inner_sigma,
                            args.ring_radius, args.ring_sigma)
    save_dataset(data, args.out)
    print(f"wrote {len(data)} points to {args.out} (+ sidecar {args.out}.meta.json)")
    return 0


def cmd_train(args) -> int:
    data = load_dataset(args.data)
    activation = parse_activation(args.activation)
    cfg = TrainConfig(optimizer=Optimizer(args.optimizer), learning_rate=args.lr,
                      steps=args.steps, batch_size=args.batch_size, seed=args.seed,
                      loss=Loss(args.loss), target_loss=args.target_loss)
    net = init_weights(list(parse_ints(args.arch)), activation, args.seed)
    trained, history = train(net, data, cfg)
    save_network(trained, args.out)
    if args.history:
        with open(args.history, "w") as fh:
            fh.write("step,loss\n")
            for step, loss in history:
                fh.write(f"{step},{loss!r}\n")
    acc = accuracy(trained, data)
    print(f"trained {args.arch} for {len(history)} steps: "
          f"loss={history[-1][1]:.4f} accuracy={acc:.4f} -> {args.out}")
    return 0


def cmd_analyze(args) -> int:
    net = load_network(args.model)
    if net.output_dim != 1:
        raise ValueError("analysis needs a scalar-valued model")
    data = load_dataset(args.data) if args.data else None
    if data is not None and data.dim != net.input_dim:
        raise ValueError(f"model/data mismatch: model input dim {net.input_dim}, "
                         f"data dim {data.dim}")
    window = parse_window(args.window)
    if window is None:
        if data is None:
            raise ValueError("--window auto requires --data")
        window = auto_window(data)
    if window.dim != net.input_dim:
        raise ValueError(f"model/window mismatch: model input dim {net.input_dim}, "
                         f"window dim {window.dim}")

    levels = parse_levels(args.levels)
    if isinstance(levels, str):
        levels = (float(levels.partition(":")[2]),)
    f = network_scalar_fn(net)
    probe = sample_grid(f, window, (args.resolution, args.resolution))
    lo_v, hi_v = probe.value_range()

    level_dicts = []
    all_components = []
    for level in levels:
        if not lo_v <= level <= hi_v:
            print(f"warning: level {level:g} outside achieved value range "
                  f"[{lo_v:.4g}, {hi_v:.4g}]; expect an empty component list",
                  file=sys.stderr)
        esc = window_escalation(f, level, window, args.resolution, args.escalate,
                                provenance={"network_sha256": network_hash(net)})
        enclosing = sum(
            1 for comp, cls in zip(esc.base_report.components, esc.final_classifications)
            if cls is Classification.BOUNDED and component_encloses(comp, (0.0, 0.0)))
        all_components.extend(esc.base_report.components)
        level_dicts.append({
            "level": float(level),
            "escalations": esc.scales_checked,
            "final_classifications": [c.value for c in esc.final_classifications],
            "bounded_final": esc.bounded_final,
            "boundary_final": esc.boundary_final,
            "bounded_enclosing_origin": enclosing,
            "report": esc.base_report.to_dict(),
        })

    outcome = {
        "seed": 0, "error": None, "final_loss": None, "steps_run": None,
        "converged": None,
        "accuracy": accuracy(net, data) if data is not None else None,
        "bounded_final": sum(d["bounded_final"] for d in level_dicts),
        "boundary_final": sum(d["boundary_final"] for d in level_dicts),
        "nonsingularity": None,
        "levels": level_dicts,
        "network": None,
    }
    config = {"model": args.model, "window": window.to_dict(),
              "resolution": args.resolution, "levels": list(levels),
              "escalate": args.escalate, "deterministic": args.deterministic}
    report = make_report(KIND_ANALYZE, config, [outcome], args.deterministic, 0.0)
    if args.report:
        write_report(report, args.report)
        print(f"report -> {args.report}")
    if args.svg:
        svg = render_topology_svg(
            window, all_components, levels[0], field_fn=f,
            points=data.points if data is not None else None,
            labels=data.labels if data is not None else None,
            deterministic=args.deterministic, title=f"analysis of {Path(args.model).name}")
        Path(args.svg).write_text(svg)
        print(f"svg -> {args.svg}")
    for line in verdict_lines(report):
        print(line)
    return 0


def cmd_reproduce(args) -> int:
    config = load_config(args.config)
    fig = pick(args.paper_fig, config, "paper_fig", None)
    if fig is None:
        raise ValueError("--paper-fig (or config key paper_fig) is required")
    n_seeds = int(pick(args.seeds, config, "seeds", 20))
    overrides = {k: config[k] for k in
                 ("learning_rate", "steps", "target_loss", "n_inner", "n_ring",
                  "inner_sigma", "ring_radius", "ring_sigma", "resolution",
                  "escalations", "convergence_loss") if k in config}
    spec = reproduction_spec(fig, tuple(range(n_seeds)), **overrides)
    kind = KIND_REPRODUCE_NARROW if fig == "3a" else KIND_REPRODUCE_WIDE

    t0 = time.perf_counter()
    sweep = run_experiment(spec)
    wall = time.perf_counter() - t0
    outcomes = [o.to_dict() for o in sweep.outcomes]
    report = make_report(kind, {"paper_fig": fig, "spec": spec.to_dict(),
                                "deterministic": args.deterministic},
                         outcomes, args.deterministic, wall)
    if args.report:
        write_report(report, args.report)
        print(f"report -> {args.report}")
    if args.svg_dir:
        _write_seed_svgs(sweep, Path(args.svg_dir), spec.resolved_levels()[0],
                         args.deterministic)
    for line in verdict_lines(report):
        print(line)
    return 0 if report_passed(report) else 1


def _write_seed_svgs(sweep, directory: Path, level: float, deterministic: bool) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for outcome in sweep.outcomes:
        if outcome.error is not None or not outcome.levels:
            continue
        analysis = outcome.levels[0]
        net = network_from_dict(outcome.network) if outcome.network else None
        field_fn = network_scalar_fn(net) if net is not None else None
        svg = render_topology_svg(
            analysis.report.window, list(analysis.report.components), level,
            field_fn=field_fn, deterministic=deterministic,
            title=f"seed {outcome.seed}")
        (directory / f"seed{outcome.seed:03d}.svg").write_text(svg)
    print(f"svg per seed -> {directory}")


def cmd_sweep_nonsingular(args) -> int:
    config = load_config(args.config)
    window = parse_window(pick(args.window, config, "window", "-4,4,-4,4"))
    spec = NonSingularSweepSpec(
        n=2,
        depths=tuple(parse_ints(pick(args.depths, config, "depths", "1,2,3,4,5,6"))),
        activation=parse_activation(pick(args.activation, config, "activation", "sigmoid")),
        count=int(pick(args.count, config, "count", 100)),
        levels_per_net=int(pick(args.levels_per_net, config, "levels_per_net", 5)),
        window=window,
        resolution=int(pick(args.resolution, config, "resolution", 201)),
        seed=int(pick(args.seed, config, "seed", 0)),
        delta=float(pick(args.delta, config, "delta", 1e-3)),
        escalations=int(pick(args.escalate, config, "escalations", 1)))

    net_transform = None
    if args.inject_singular:
        def net_transform(net: Network, index: int) -> Network:
            if index != 0:
                return net
            first = net.layers[0]
            squashed = Layer(np.zeros_like(first.weights), first.bias)
            return Network(net.input_dim, (squashed,) + net.layers[1:],
                           net.activation, net.final_activation)

    t0 = time.perf_counter()
    sweep = random_nonsingular_sweep(spec, net_transform=net_transform)
    wall = time.perf_counter() - t0
    outcomes = [o.to_dict() for o in sweep.outcomes]
    report = make_report(KIND_SWEEP, {"spec": spec.to_dict(),
                                      "deterministic": args.deterministic},
                         outcomes, args.deterministic, wall)
    if args.report:
        write_report(report, args.report)
        print(f"report -> {args.report}")
    for line in verdict_lines(report):
        print(line)
    return 0 if report_passed(report) else 1


def cmd_validate_report(args) -> int:
    report = load_report(args.report)
    ok, recomputed = validate_report(report)
    if ok:
        print(f"verdicts check out: {args.report}")
        return 0
    print("stored verdicts do not match the report's own data:", file=sys.stderr)
    print(json.dumps({"stored": report.get("verdicts"), "recomputed": recomputed},
                     indent=2, sort_keys=True), file=sys.stderr)
    return 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leveltopo",
        description="Train small networks and classify the topology of their level sets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate the two-class ring dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inner", type=int, default=500, help="points in the origin blob")
    p.add_argument("--ring", type=int, default=1000, help="points in the ring")
    p.add_argument("--inner-sigma", type=float, default=0.5)
    p.add_argument("--ring-radius", type=float, default=3.0)
    p.add_argument("--ring-sigma", type=float, default=0.3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a classifier on a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--arch", required=True, help="comma widths, e.g. 2,3,1")
    p.add_argument("--activation", default="sigmoid")
    p.add_argument("--optimizer", choices=[o.value for o in Optimizer], default="adam")
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--loss", choices=[l.value for l in Loss], default="bce")
    p.add_argument("--target-loss", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--history", default=None, help="optional loss history CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze", help="extract and classify level components of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--window", default="auto", help="x_lo,x_hi,y_lo,y_hi or auto")
    p.add_argument("--resolution", type=int, default=201)
    p.add_argument("--levels", default="decision:0.5",
                   help="comma floats or decision:<cut>")
    p.add_argument("--escalate", type=int, default=1,
                   help="window doublings for bounded candidates")
    p.add_argument("--report", default=None)
    p.add_argument("--svg", default=None)
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reproduce", help="run a reference experiment end to end")
    p.add_argument("--paper-fig", choices=["3a", "3b"], default=None,
                   help="3a: six width-2 hidden layers; 3b: one width-3 hidden layer")
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON config; flags override")
    p.add_argument("--report", default=None)
    p.add_argument("--svg-dir", default=None)
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("sweep-nonsingular",
                       help="probe level sets of random non-singular networks")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--depths", default=None)
    p.add_argument("--levels-per-net", type=int, default=None)
    p.add_argument("--window", default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--escalate", type=int, default=None)
    p.add_argument("--activation", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--report", default=None)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--inject-singular", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_sweep_nonsingular)

    p = sub.add_parser("validate-report", help="recompute a report's verdicts")
    p.add_argument("report")
    p.set_defaults(func=cmd_validate_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RUNTIME_ERRORS as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
