"""Run reports: a versioned JSON envelope whose verdicts are recomputable.

Every verdict stored in a report is a pure function of the raw per-seed data
in the same report, so ``validate-report`` can re-derive them and flag any
report whose summary does not follow from its own evidence.  With the
deterministic flag, wall-clock timings are zeroed so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import json
import math
import platform

import numpy as np

SCHEMA_VERSION = 1

KIND_REPRODUCE_NARROW = "reproduce-3a"
KIND_REPRODUCE_WIDE = "reproduce-3b"
KIND_SWEEP = "sweep-nonsingular"
KIND_ANALYZE = "analyze"

# reproduction pass rules, as fractions of the seed count
MIN_CONVERGED_FRACTION = 0.5      # narrow sweep: seeds that must reach the loss bar
MIN_ACCURACY = 0.95               # wide sweep: per-seed accuracy bar
MIN_ACCURATE_FRACTION = 0.9      # wide sweep: seeds that must clear the accuracy bar
MIN_LOOP_FRACTION = 0.9           # of accurate seeds: must show an origin-enclosing loop


def versions() -> dict:
    import leveltopo

    return {
        "leveltopo": leveltopo.__version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_report(report))


def load_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def make_report(kind: str, config: dict, outcomes: list[dict], deterministic: bool,
                wall_seconds: float) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "config": config,
        "versions": versions(),
        "seeds": [o["seed"] for o in outcomes],
        "outcomes": outcomes,
        "timings": {"wall_seconds": 0.0 if deterministic else wall_seconds,
                    "deterministic": deterministic},
    }
    report["verdicts"] = compute_verdicts(report)
    return report


def _verdict_narrow(report: dict) -> dict:
    """Narrow regime: among seeds that converged, every decision-boundary
    component must be boundary-touching after escalation."""
    outcomes = report["outcomes"]
    trained = [o for o in outcomes if o["error"] is None]
    converged = [o for o in trained if o["converged"]]
    required = math.ceil(MIN_CONVERGED_FRACTION * len(outcomes)) if outcomes else 0
    bounded = sum(o["bounded_final"] for o in converged)
    if not outcomes:
        return {"status": "UNTESTED", "detail": "no seeds"}
    passed = len(converged) >= required and bounded == 0
    return {
        "status": "PASS" if passed else "FAIL",
        "converged": len(converged),
        "required_converged": required,
        "bounded_components_among_converged": bounded,
    }


def _verdict_wide(report: dict) -> dict:
    """Wide regime: most seeds reach high accuracy, and most of those show a
    bounded decision-boundary component that encloses the origin."""
    outcomes = report["outcomes"]
    if not outcomes:
        return {"status": "UNTESTED", "detail": "no seeds"}
    accurate = [o for o in outcomes
                if o["error"] is None and o["accuracy"] is not None
                and o["accuracy"] >= MIN_ACCURACY]
    required_accurate = math.ceil(MIN_ACCURATE_FRACTION * len(outcomes))
    with_loop = [o for o in accurate
                 if any(lv["bounded_enclosing_origin"] >= 1 for lv in o["levels"])]
    required_loops = math.ceil(MIN_LOOP_FRACTION * len(accurate)) if accurate else 0
    passed = len(accurate) >= required_accurate and len(with_loop) >= required_loops
    return {
        "status": "PASS" if passed else "FAIL",
        "accurate": len(accurate),
        "required_accurate": required_accurate,
        "with_origin_loop": len(with_loop),
        "required_with_loop": required_loops,
    }


def _verdict_sweep(report: dict) -> dict:
    """Non-singular sweep: zero bounded components may survive escalation."""
    outcomes = report["outcomes"]
    if not outcomes:
        return {"status": "UNTESTED", "detail": "no networks"}
    bounded = sum(o["bounded_final"] for o in outcomes)
    violations = [{"seed": o["seed"], "level": lv["level"], "bounded": lv["bounded_final"]}
                  for o in outcomes for lv in o["levels"] if lv["bounded_final"] > 0]
    return {
        "status": "PASS" if bounded == 0 else "FAIL",
        "bounded_components": bounded,
        "violations": violations,
    }


def _verdict_analyze(report: dict) -> dict:
    outcomes = report["outcomes"]
    bounded = sum(o["bounded_final"] for o in outcomes)
    boundary = sum(o["boundary_final"] for o in outcomes)
    return {"status": "DONE", "bounded_components": bounded,
            "boundary_touching_components": boundary}


_VERDICTS = {
    KIND_REPRODUCE_NARROW: _verdict_narrow,
    KIND_REPRODUCE_WIDE: _verdict_wide,
    KIND_SWEEP: _verdict_sweep,
    KIND_ANALYZE: _verdict_analyze,
}


def compute_verdicts(report: dict) -> dict:
    kind = report["kind"]
    if kind not in _VERDICTS:
        raise ValueError(f"unknown report kind {kind!r}")
    return {kind: _VERDICTS[kind](report)}


def validate_report(report: dict) -> tuple[bool, dict]:
    """Recompute the verdicts from raw outcome data; True when they match."""
    if report.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {report.get('schema_version')!r}")
    recomputed = compute_verdicts(report)
    return recomputed == report.get("verdicts"), recomputed


def report_passed(report: dict) -> bool:
    return all(v.get("status") in ("PASS", "DONE", "UNTESTED")
               for v in report["verdicts"].values())


def verdict_lines(report: dict) -> list[str]:
    """One human-readable PASS/FAIL line per sub-criterion of each verdict."""
    lines = []
    n = len(report["outcomes"])
    for kind, v in report["verdicts"].items():
        status = v["status"]
        if status == "UNTESTED":
            lines.append(f"UNTESTED {kind}: {v.get('detail', '')}")
            continue
        if kind == KIND_REPRODUCE_NARROW:
            ok1 = v["converged"] >= v["required_converged"]
            ok2 = v["bounded_components_among_converged"] == 0
            lines.append(f"{'PASS' if ok1 else 'FAIL'} converged-seeds: "
                         f"{v['converged']}/{n} (required {v['required_converged']})")
            lines.append(f"{'PASS' if ok2 else 'FAIL'} bounded-components-among-converged: "
                         f"{v['bounded_components_among_converged']} (required 0)")
        elif kind == KIND_REPRODUCE_WIDE:
            ok1 = v["accurate"] >= v["required_accurate"]
            ok2 = v["with_origin_loop"] >= v["required_with_loop"]
            lines.append(f"{'PASS' if ok1 else 'FAIL'} accurate-seeds: "
                         f"{v['accurate']}/{n} (required {v['required_accurate']})")
            lines.append(f"{'PASS' if ok2 else 'FAIL'} origin-loop-seeds: "
                         f"{v['with_origin_loop']}/{v['accurate']} "
                         f"(required {v['required_with_loop']})")
        elif kind == KIND_SWEEP:
            lines.append(f"{status} bounded-components: {v['bounded_components']} "
                         f"(required 0; violations: {len(v['violations'])})")
        else:
            lines.append(f"{status} {kind}: bounded={v.get('bounded_components')} "
                         f"touching={v.get('boundary_touching_components')}")
    return lines
