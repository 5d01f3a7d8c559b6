"""Experiment harness tying training, construction, and contour topology together.

Three entry points:

* ``run_experiment``: train networks over a seed sweep on the ring dataset and
  classify the components of their decision boundaries.
* ``random_nonsingular_sweep``: build random non-singular networks and probe
  many level sets; each one should consist solely of boundary-touching
  components, so any surviving bounded component is a reportable violation.
* ``composition_tolerance_check``: numerically search the per-link tolerance
  delta under which perturbing every link of a composition by delta keeps the
  composite within eps on the window.

Window escalation backs the bounded/unbounded calls: a component only counts
as bounded if it stays clear of the frame when the window is doubled (same
cell size) up to ``max_doublings`` times.
"""

from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .activations import SIGMOID, Activation
from .contours import (Classification, TopologyReport, analyze_level,
                       component_encloses, extract_components)
from .fields import field_hash, network_scalar_fn, sample_grid
from .network import Network, Window, network_hash, network_to_dict
from .nonsingular import is_nonsingular, make_nonsingular, pad_to_width, NonSingularityReport
from .training import (TrainConfig, TrainingDiverged, accuracy, gen_ring_dataset,
                       init_weights, train)

THREADS_ENV = "LEVELSET_PROBE_THREADS"


class ConstructionError(RuntimeError):
    """A network that was just made non-singular failed the membership check."""


def _worker_count(n_items: int) -> int:
    env = os.environ.get(THREADS_ENV)
    limit = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(limit, n_items))


def parallel_map(fn, items):
    """Map a pure function over items, in order, using worker processes when allowed."""
    items = list(items)
    workers = _worker_count(len(items))
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# window escalation


@dataclass(frozen=True)
class EscalationResult:
    """Outcome of re-checking bounded candidates on doubled windows."""

    base_report: TopologyReport
    final_classifications: tuple[Classification, ...]
    scales_checked: int
    anomalies: tuple[str, ...]

    @property
    def bounded_final(self) -> int:
        return sum(1 for c in self.final_classifications if c is Classification.BOUNDED)

    @property
    def boundary_final(self) -> int:
        return len(self.final_classifications) - self.bounded_final


def window_escalation(f, level: float, base_window: Window, resolution: int,
                      max_doublings: int, provenance: dict | None = None) -> EscalationResult:
    """Classify level components, demoting bounded ones that stop being bounded
    on doubled windows.

    Doubling keeps the cell size (the lattice of the larger window contains
    the base lattice), so a genuinely closed loop reappears with vertices in
    the same places and is matched by proximity; a curve that merely left the
    base window shows up attached to the larger frame and demotes its base
    component to BoundaryTouching.
    """
    if max_doublings < 0:
        raise ValueError("max_doublings must be >= 0")
    base_field = sample_grid(f, base_window, (resolution, resolution))
    provenance = {**(provenance or {}), "field_sha256": field_hash(base_field)}
    base = analyze_level(base_field, level, provenance=provenance)
    classifications = [c.classification for c in base.components]
    anomalies: list[str] = []
    scales = 0
    if max_doublings > 0 and any(c is Classification.BOUNDED for c in classifications):
        cell_diag = base_field.cell_diagonal
        for k in range(1, max_doublings + 1):
            scales = k
            factor = 2 ** k
            window_k = base_window.scaled(factor)
            res_k = (resolution - 1) * factor + 1
            field_k = sample_grid(f, window_k, (res_k, res_k))
            comps_k = extract_components(field_k, level)
            vertex_sets = [np.concatenate([p for p in c.polylines]) for c in comps_k]
            for idx, comp in enumerate(base.components):
                if classifications[idx] is not Classification.BOUNDED:
                    continue
                probe = comp.polylines[0][0]
                best, best_dist = None, math.inf
                for c_k, verts in zip(comps_k, vertex_sets):
                    d = float(np.min(np.linalg.norm(verts - probe, axis=1)))
                    if d < best_dist:
                        best, best_dist = c_k, d
                if best is None or best_dist > 0.5 * cell_diag:
                    anomalies.append(
                        f"bounded component {idx} not found at scale x{factor} "
                        f"(nearest match {best_dist:.3g})")
                    classifications[idx] = Classification.BOUNDARY_TOUCHING
                elif best.classification is Classification.BOUNDARY_TOUCHING:
                    classifications[idx] = Classification.BOUNDARY_TOUCHING
            if not any(c is Classification.BOUNDED for c in classifications):
                break
    return EscalationResult(base, tuple(classifications), scales, tuple(anomalies))


# ---------------------------------------------------------------------------
# trained-network experiments


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one seed sweep."""

    name: str
    arch: tuple[int, ...]
    activation: Activation
    train: TrainConfig
    seeds: tuple[int, ...]
    n_inner: int = 500
    n_ring: int = 1000
    inner_sigma: float = 0.5
    ring_radius: float = 3.0
    ring_sigma: float = 0.3
    window: Window | None = None   # None: per-seed data bounding box, doubled
    resolution: int = 201
    levels: tuple[float, ...] | str = "decision:0.5"
    escalations: int = 1
    convergence_loss: float = 0.35
    regime: str = "skinny"

    def __post_init__(self):
        hidden = self.arch[1:-1]
        n = self.arch[0]
        skinny = all(w <= n for w in hidden)
        if self.regime == "skinny" and not skinny:
            raise ValueError(f"arch {self.arch} declared skinny but has a hidden width > {n}")
        if self.regime == "wide" and skinny:
            raise ValueError(f"arch {self.arch} declared wide but no hidden width exceeds {n}")
        if self.regime not in ("skinny", "wide"):
            raise ValueError(f"unknown regime {self.regime!r}")

    def resolved_levels(self) -> tuple[float, ...]:
        if isinstance(self.levels, str):
            tag, _, value = self.levels.partition(":")
            if tag != "decision":
                raise ValueError(f"unknown level spec {self.levels!r}")
            return (float(value),)
        return tuple(float(v) for v in self.levels)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["activation"] = self.activation.to_dict()
        d["train"] = self.train.to_dict()
        d["window"] = self.window.to_dict() if self.window else None
        d["arch"] = list(self.arch)
        d["seeds"] = list(self.seeds)
        d["levels"] = (self.levels if isinstance(self.levels, str)
                       else list(self.levels))
        return d


@dataclass(frozen=True)
class LevelAnalysis:
    level: float
    report: TopologyReport
    final_classifications: tuple[Classification, ...]
    escalations: int
    bounded_enclosing_origin: int

    @property
    def bounded_final(self) -> int:
        return sum(1 for c in self.final_classifications if c is Classification.BOUNDED)

    @property
    def boundary_final(self) -> int:
        return len(self.final_classifications) - self.bounded_final

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "escalations": self.escalations,
            "final_classifications": [c.value for c in self.final_classifications],
            "bounded_final": self.bounded_final,
            "boundary_final": self.boundary_final,
            "bounded_enclosing_origin": self.bounded_enclosing_origin,
            "report": self.report.to_dict(),
        }


@dataclass(frozen=True)
class SeedOutcome:
    seed: int
    error: str | None = None
    final_loss: float | None = None
    steps_run: int | None = None
    converged: bool | None = None
    accuracy: float | None = None
    levels: tuple[LevelAnalysis, ...] = ()
    nonsingularity: NonSingularityReport | None = None
    network: dict | None = None  # serialized network, for provenance and re-plotting

    @property
    def bounded_final(self) -> int:
        return sum(lv.bounded_final for lv in self.levels)

    @property
    def boundary_final(self) -> int:
        return sum(lv.boundary_final for lv in self.levels)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "error": self.error,
            "final_loss": self.final_loss,
            "steps_run": self.steps_run,
            "converged": self.converged,
            "accuracy": self.accuracy,
            "bounded_final": self.bounded_final,
            "boundary_final": self.boundary_final,
            "nonsingularity": self.nonsingularity.to_dict() if self.nonsingularity else None,
            "levels": [lv.to_dict() for lv in self.levels],
            "network": self.network,
        }


@dataclass(frozen=True)
class SweepResult:
    outcomes: tuple[SeedOutcome, ...]

    @property
    def bounded_total(self) -> int:
        return sum(o.bounded_final for o in self.outcomes)

    @property
    def boundary_total(self) -> int:
        return sum(o.boundary_final for o in self.outcomes)

    @property
    def violations(self) -> tuple[dict, ...]:
        """Bounded components that survived escalation, per (seed, level)."""
        out = []
        for o in self.outcomes:
            for lv in o.levels:
                if lv.bounded_final > 0:
                    out.append({"seed": o.seed, "level": lv.level,
                                "bounded": lv.bounded_final})
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "outcomes": [o.to_dict() for o in self.outcomes],
            "bounded_total": self.bounded_total,
            "boundary_total": self.boundary_total,
            "violations": list(self.violations),
        }


def _analyze_levels(f, levels, window: Window, resolution: int, escalations: int,
                    provenance: dict) -> list[LevelAnalysis]:
    analyses = []
    for level in levels:
        esc = window_escalation(f, level, window, resolution, escalations,
                                provenance=provenance)
        enclosing = sum(
            1 for comp, cls in zip(esc.base_report.components, esc.final_classifications)
            if cls is Classification.BOUNDED and component_encloses(comp, (0.0, 0.0)))
        analyses.append(LevelAnalysis(float(level), esc.base_report,
                                      esc.final_classifications, esc.scales_checked,
                                      enclosing))
    return analyses


def _experiment_seed(spec: ExperimentSpec, seed: int) -> SeedOutcome:
    data = gen_ring_dataset(seed, spec.n_inner, spec.n_ring, spec.inner_sigma,
                            spec.ring_radius, spec.ring_sigma)
    net = init_weights(list(spec.arch), spec.activation, seed)
    cfg = dataclasses.replace(spec.train, seed=seed)
    try:
        trained, history = train(net, data, cfg)
    except TrainingDiverged as exc:
        return SeedOutcome(seed=seed, error=str(exc),
                           steps_run=len(exc.history),
                           final_loss=exc.history[-1][1] if exc.history else None)
    final_loss = history[-1][1]
    acc = accuracy(trained, data)
    if spec.window is not None:
        window = spec.window
    else:
        lo, hi = data.bounding_box()
        window = Window(lo, hi).scaled(2.0)
    provenance = {"network_sha256": network_hash(trained), "seed": seed}
    levels = _analyze_levels(network_scalar_fn(trained), spec.resolved_levels(),
                             window, spec.resolution, spec.escalations, provenance)
    return SeedOutcome(seed=seed, final_loss=final_loss, steps_run=len(history),
                       converged=final_loss <= spec.convergence_loss, accuracy=acc,
                       levels=tuple(levels), network=network_to_dict(trained))


def run_experiment(spec: ExperimentSpec) -> SweepResult:
    """Train/analyze every seed of the sweep; training divergence is recorded
    per seed without aborting the rest."""
    outcomes = parallel_map(partial(_experiment_seed, spec), spec.seeds)
    return SweepResult(tuple(outcomes))


def reproduction_spec(fig: str, seeds: tuple[int, ...], **overrides) -> ExperimentSpec:
    """Presets for the two reference experiments.

    ``3a``: six hidden layers of width two (input-width bound) -- trains to a
    decision boundary that cannot close into a loop.  ``3b``: one hidden
    layer of width three -- closes a loop around the inner class easily.
    """
    if fig == "3a":
        base = dict(name="deep-narrow-2x6", arch=(2, 2, 2, 2, 2, 2, 2, 1),
                    regime="skinny", steps=20000)
    elif fig == "3b":
        base = dict(name="shallow-wide-3", arch=(2, 3, 1), regime="wide", steps=5000)
    else:
        raise ValueError(f"unknown reproduction target {fig!r} (expected 3a or 3b)")
    steps = int(overrides.pop("steps", base["steps"]))
    train_cfg = TrainConfig(
        learning_rate=float(overrides.pop("learning_rate", 0.05)),
        steps=steps, seed=0,
        target_loss=float(overrides.pop("target_loss", 0.05)))
    spec = dict(
        name=base["name"], arch=base["arch"], activation=SIGMOID, train=train_cfg,
        seeds=tuple(int(s) for s in seeds), regime=base["regime"])
    for key in ("n_inner", "n_ring", "inner_sigma", "ring_radius", "ring_sigma",
                "resolution", "escalations", "convergence_loss", "levels", "window"):
        if key in overrides:
            spec[key] = overrides.pop(key)
    if overrides:
        raise ValueError(f"unknown reproduction overrides: {sorted(overrides)}")
    return ExperimentSpec(**spec)


# ---------------------------------------------------------------------------
# random non-singular sweeps


@dataclass(frozen=True)
class NonSingularSweepSpec:
    n: int = 2
    depths: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    activation: Activation = SIGMOID
    count: int = 100
    levels_per_net: int = 5
    window: Window = None
    resolution: int = 201
    seed: int = 0
    delta: float = 1e-3
    escalations: int = 1

    def __post_init__(self):
        if self.n != 2:
            raise ValueError("random sweeps are 2-d only (n = 2)")
        if not self.activation.one_to_one:
            raise ValueError("non-singular sweeps need a one-to-one activation")
        if self.window is None:
            object.__setattr__(self, "window", Window(np.array([-4.0, -4.0]),
                                                      np.array([4.0, 4.0])))

    def to_dict(self) -> dict:
        return {"n": self.n, "depths": list(self.depths),
                "activation": self.activation.to_dict(), "count": self.count,
                "levels_per_net": self.levels_per_net, "window": self.window.to_dict(),
                "resolution": self.resolution, "seed": self.seed, "delta": self.delta,
                "escalations": self.escalations}


def build_random_nonsingular(spec: NonSingularSweepSpec, index: int,
                             net_seed: int) -> tuple[Network, NonSingularityReport]:
    """One random network taken through pad -> perturb -> verify."""
    rng = np.random.default_rng(net_seed)
    depth = spec.depths[index % len(spec.depths)]
    hidden = [int(rng.integers(1, spec.n + 1)) for _ in range(depth)]
    arch = [spec.n, *hidden, 1]
    net = init_weights(arch, spec.activation, int(rng.integers(2 ** 31)))
    padded = pad_to_width(net, spec.n)
    nonsingular = make_nonsingular(padded, spec.delta, int(rng.integers(2 ** 31)))
    report = is_nonsingular(nonsingular)
    return nonsingular, report


def _sweep_net(spec: NonSingularSweepSpec, job: tuple[int, int],
               net_transform=None) -> SeedOutcome:
    index, net_seed = job
    rng = np.random.default_rng(net_seed + 1)
    net, report = build_random_nonsingular(spec, index, net_seed)
    if net_transform is not None:
        net = net_transform(net, index)
        report = is_nonsingular(net)
    if not report.verdict:
        raise ConstructionError(
            f"net {index}: construction produced a singular network: {report}")
    fld = sample_grid(network_scalar_fn(net), spec.window,
                      (spec.resolution, spec.resolution))
    p5, p95 = np.percentile(fld.values, [5.0, 95.0])
    levels = rng.uniform(p5, p95, spec.levels_per_net)
    provenance = {"network_sha256": network_hash(net), "net_index": index,
                  "field_sha256": field_hash(fld)}
    analyses = _analyze_levels(network_scalar_fn(net), levels, spec.window,
                               spec.resolution, spec.escalations, provenance)
    return SeedOutcome(seed=index, levels=tuple(analyses), nonsingularity=report,
                       network=network_to_dict(net))


def random_nonsingular_sweep(spec: NonSingularSweepSpec,
                             net_transform=None) -> SweepResult:
    """Probe level sets of ``count`` random non-singular networks.

    ``net_transform`` is a test hook applied to each constructed network
    before the membership assert; injecting a singular network through it
    raises ConstructionError rather than contaminating the sweep.
    """
    master = np.random.default_rng(spec.seed)
    net_seeds = [int(s) for s in master.integers(0, 2 ** 62, size=spec.count)]
    jobs = list(enumerate(net_seeds))
    if net_transform is not None:  # test hook: run serially, hooks may not pickle
        return SweepResult(tuple(_sweep_net(spec, job, net_transform) for job in jobs))
    outcomes = parallel_map(partial(_sweep_net, spec), jobs)
    return SweepResult(tuple(outcomes))


# ---------------------------------------------------------------------------
# composition tolerance


class CompositionToleranceError(RuntimeError):
    """delta search hit the floor without the composition staying within eps."""


@dataclass(frozen=True)
class FunctionLink:
    """Adapter giving a plain callable the (in_dim, out_dim) link interface."""

    fn: object
    in_dim: int
    out_dim: int

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.fn(x)


@dataclass(frozen=True)
class Bump:
    """Compactly supported bump b(x) = amplitude * (1 - |(x-c)/w|^2)^2 * direction.

    The Euclidean sup norm is |amplitude|, so a bump with amplitude <= delta
    is a valid delta-perturbation of a link on all of its domain.
    """

    center: np.ndarray
    width: np.ndarray
    amplitude: float
    direction: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        u = (x - self.center) / self.width
        r2 = np.sum(u * u, axis=1)
        profile = np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 2, 0.0)
        return self.amplitude * profile[:, None] * self.direction


@dataclass(frozen=True)
class CompositionReport:
    eps: float
    delta: float
    max_deviation: float
    trials: int
    untested: bool
    domains: tuple[Window, ...]
    attempts: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {"eps": self.eps, "delta": self.delta, "max_deviation": self.max_deviation,
                "trials": self.trials, "untested": self.untested,
                "domains": [w.to_dict() for w in self.domains],
                "attempts": list(self.attempts)}


DELTA_FLOOR = 1e-12


def composition_tolerance_check(chain, window: Window, eps: float, trials: int,
                                seed: int, grid_per_axis: int = 21) -> CompositionReport:
    """Search the largest delta = eps/2^k such that perturbing every link by at
    most delta (sup norm on its domain) keeps the composite within eps of the
    original on ``window``.

    The domain of link i is the bounding box of the image of the window under
    the partial composition, inflated by eps (a compact superset of the closed
    eps-neighborhood of the image).  Perturbations are random compact bumps of
    amplitude up to delta; with trials = 0 the first candidate delta passes
    vacuously and the report is flagged untested.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not chain:
        raise ValueError("chain must contain at least one link")
    for a, b in zip(chain[:-1], chain[1:]):
        if a.out_dim != b.in_dim:
            raise ValueError(f"chain links do not compose: {a.out_dim} -> {b.in_dim}")
    if window.dim != chain[0].in_dim:
        raise ValueError("window dimension does not match the first link")

    axes = [np.linspace(window.lo[d], window.hi[d], grid_per_axis)
            for d in range(window.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)

    domains = [Window(window.lo.copy(), window.hi.copy())]
    stage = points
    for link in chain:
        stage = np.asarray(link(stage), dtype=np.float64)
        domains.append(Window(stage.min(axis=0) - eps, stage.max(axis=0) + eps))
    baseline = stage
    link_domains = domains[:-1]  # domain of link i

    rng = np.random.default_rng(seed)
    attempts = []
    delta = eps / 2.0
    while delta >= DELTA_FLOOR:
        worst = 0.0
        failed = False
        for _ in range(trials):
            bumps = []
            for link, dom in zip(chain, link_domains):
                center = rng.uniform(dom.lo, dom.hi)
                width = dom.extent * rng.uniform(0.2, 0.6, size=dom.dim)
                direction = rng.normal(size=link.out_dim)
                direction /= np.linalg.norm(direction)
                amplitude = delta * rng.uniform(0.5, 1.0)
                bumps.append(Bump(center, np.maximum(width, 1e-9), amplitude, direction))
            y = points
            for link, bump in zip(chain, bumps):
                y = np.asarray(link(y), dtype=np.float64) + bump(y)
            deviation = float(np.max(np.linalg.norm(y - baseline, axis=1)))
            worst = max(worst, deviation)
            if deviation >= eps:
                failed = True
                break
        attempts.append({"delta": delta, "passed": not failed, "max_deviation": worst})
        if not failed:
            return CompositionReport(eps, delta, worst, trials, trials == 0,
                                     tuple(domains), tuple(attempts))
        delta /= 2.0
    raise CompositionToleranceError(
        f"no delta above {DELTA_FLOOR} keeps the composition within {eps}; "
        "the chain may be discontinuous or the window too small")
