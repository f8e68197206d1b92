"""Command-line front end: scenario files in, reports/CSV/SVG out.

Subcommands
-----------
simulate    integrate a scenario, write trajectory CSV/SVG and the
            boundedness certificate JSON
equilibria  locate all equilibria, attach stability verdicts, write JSON
control     solve the optimal-penalty problem, write schedule CSV/SVG and
            a summary JSON
data        ingest a fiscal CSV, impute gaps, write composition JSON and
            pie/ratio SVGs

Exit codes: 0 success, 2 input/validation error, 3 numeric failure.
Failures print a single JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import control as control_mod
from . import empirics, equilibria, report, stability
from .dynamics import StiffnessError, boundedness_certificate, integrate
from .model import ControlParams, Params, State

__all__ = ["main", "build_parser", "load_scenario", "validate_equilibria_report"]

_SCENARIO_KEYS = {"params", "control", "initial_state", "t_end", "outputs"}
_STATE_KEYS = {"fbar", "f", "g"}


def load_scenario(path) -> dict:
    """Parse and validate a scenario JSON document."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise ValueError(f"cannot read scenario file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValueError("scenario must be a JSON object")
    unknown = sorted(set(doc) - _SCENARIO_KEYS)
    if unknown:
        raise ValueError(f"unknown scenario keys: {', '.join(unknown)}")
    for key in ("params", "initial_state", "t_end"):
        if key not in doc:
            raise ValueError(f"scenario missing required key {key!r}")

    scenario: dict = {"params": Params.from_dict(doc["params"])}
    state_doc = doc["initial_state"]
    if not isinstance(state_doc, dict) or set(state_doc) != _STATE_KEYS:
        raise ValueError("initial_state must be an object with keys fbar, f, g")
    scenario["initial_state"] = State(**state_doc)
    t_end = doc["t_end"]
    if not isinstance(t_end, (int, float)) or not t_end > 0:
        raise ValueError(f"t_end must be a positive number, got {t_end!r}")
    scenario["t_end"] = float(t_end)
    scenario["control"] = (ControlParams.from_dict(doc["control"])
                           if "control" in doc else None)
    outputs = doc.get("outputs")
    if outputs is not None:
        if (not isinstance(outputs, list)
                or not all(isinstance(o, str) for o in outputs)):
            raise ValueError("outputs must be a list of artifact names")
    scenario["outputs"] = outputs
    return scenario


def _wants(scenario: dict, artifact: str) -> bool:
    outputs = scenario.get("outputs")
    return outputs is None or artifact in outputs


def _dump_json(doc, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p = scenario["params"]
    traj = integrate(p, scenario["initial_state"], scenario["t_end"])

    if _wants(scenario, "trajectory.csv"):
        traj.to_csv(out / "trajectory.csv")
    if _wants(scenario, "trajectory.svg"):
        report.save_trajectory_svg(traj, out / "trajectory.svg")
    if _wants(scenario, "boundedness.json"):
        if min(p.sigma, p.mu / p.l) > 0:
            doc = {"available": True, **boundedness_certificate(p, traj).to_dict()}
        else:
            doc = {"available": False,
                   "reason": "certificate unavailable: min(sigma, mu/l) is zero"}
        _dump_json(doc, out / "boundedness.json")
    print(f"simulate: {len(traj.times)} accepted steps -> {out}")
    return 0


_EQ_REPORT_KEYS = {"point", "class", "feasible", "conditions", "residual", "stability"}
_CLASS_LABELS = {
    equilibria.CLASS_TRIVIAL, equilibria.CLASS_BOUNDARY, equilibria.CLASS_FIRM_FREE,
    equilibria.CLASS_FORMAL_FREE, equilibria.CLASS_GOVERNMENT_FREE,
    equilibria.CLASS_COEXISTENCE,
}


def validate_equilibria_report(doc: dict) -> None:
    """Structural check of the equilibria report document; raises on violation."""
    if set(doc) != {"params", "equilibria"}:
        raise ValueError("report must have exactly the keys params, equilibria")
    if not isinstance(doc["equilibria"], list):
        raise ValueError("equilibria must be an array")
    for item in doc["equilibria"]:
        if set(item) != _EQ_REPORT_KEYS:
            raise ValueError(f"report entry keys {sorted(item)} do not match schema")
        point = item["point"]
        if point is not None:
            if (not isinstance(point, list) or len(point) != 3
                    or not all(isinstance(v, (int, float)) for v in point)):
                raise ValueError("point must be null or [fbar, f, g]")
        if item["class"] not in _CLASS_LABELS:
            raise ValueError(f"unknown class label {item['class']!r}")
        if not isinstance(item["feasible"], bool):
            raise ValueError("feasible must be a boolean")
        if not isinstance(item["conditions"], dict) or not all(
                isinstance(v, bool) for v in item["conditions"].values()):
            raise ValueError("conditions must map names to booleans")
        if item["residual"] is not None and not isinstance(item["residual"], (int, float)):
            raise ValueError("residual must be null or a number")


def cmd_equilibria(args) -> int:
    scenario = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p = scenario["params"]
    reports = equilibria.all_equilibria(p, seed=args.seed)
    entries = []
    for rep in reports:
        entry = rep.to_dict()
        if rep.point is not None and rep.residual_norm is not None and rep.residual_norm <= 1e-6:
            entry["stability"] = stability.local_stability(p, rep).to_dict()
        else:
            entry["stability"] = None
        entries.append(entry)
    doc = {"params": p.to_dict(), "equilibria": entries}
    validate_equilibria_report(doc)
    _dump_json(doc, out / "equilibria.json")
    print(f"equilibria: {len(entries)} reports -> {out / 'equilibria.json'}")
    return 0


def cmd_control(args) -> int:
    scenario = load_scenario(args.scenario)
    if scenario["control"] is None:
        raise ValueError("scenario has no control block")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    solution = control_mod.forward_backward_sweep(
        scenario["params"], scenario["control"], scenario["initial_state"])
    if _wants(scenario, "control.csv"):
        solution.to_csv(out / "control.csv")
    if _wants(scenario, "control_summary.json"):
        _dump_json(solution.summary_dict(), out / "control_summary.json")
    if _wants(scenario, "control.svg"):
        report.save_control_svg(solution, out / "control.svg")
    print(f"control: converged={solution.converged} after {solution.iterations} sweeps -> {out}")
    return 0


def _parse_years(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise ValueError(f"bad --years value {text!r}; expected a..b") from None


def cmd_data(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    series = empirics.load_csv(args.csv)
    series = empirics.knn_impute(series, k=args.k)
    year_range = _parse_years(args.years) if args.years else None
    comp = empirics.composition(series, year_range)
    _dump_json(comp.to_dict(), out / "composition.json")
    report.save_pie_svg(comp, out / "tax_heads_pie.svg")
    report.save_ratio_svg(comp, out / "tax_ratio.svg")
    print(f"data: peak total-tax/GDP ratio {comp.peak_ratio:.6g} in {comp.peak_year} "
          f"(reference series peaked at 25% in 1991) -> {out}")
    return 0


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose failures honour the single-line JSON contract."""

    def error(self, message):
        print(json.dumps({"error": message, "code": 2}), file=sys.stderr)
        raise SystemExit(2)


def _seed_type(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be a nonnegative integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="taxharvest",
        description="Tax-revenue harvesting dynamics: simulation, equilibria, control, data")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="integrate a scenario and certify boundedness")
    sim.add_argument("scenario", help="scenario JSON file")
    sim.add_argument("--out", default=".", help="output directory")
    sim.add_argument("--seed", type=_seed_type, default=0, help="seed for any sampling")
    sim.set_defaults(func=cmd_simulate)

    eq = sub.add_parser("equilibria", help="locate equilibria and report stability")
    eq.add_argument("scenario", help="scenario JSON file")
    eq.add_argument("--out", default=".", help="output directory")
    eq.add_argument("--seed", type=_seed_type, default=0, help="seed for multistart ordering")
    eq.set_defaults(func=cmd_equilibria)

    ctl = sub.add_parser("control", help="solve the optimal penalty-control problem")
    ctl.add_argument("scenario", help="scenario JSON file")
    ctl.add_argument("--out", default=".", help="output directory")
    ctl.add_argument("--seed", type=_seed_type, default=0, help="seed for any sampling")
    ctl.set_defaults(func=cmd_control)

    data = sub.add_parser("data", help="fiscal CSV -> composition report and charts")
    data.add_argument("csv", help="fiscal series CSV file")
    data.add_argument("--out", default=".", help="output directory")
    data.add_argument("--seed", type=_seed_type, default=0, help="seed for any sampling")
    data.add_argument("--k", type=int, default=3, help="imputation neighbour count")
    data.add_argument("--years", default=None, help="inclusive year range a..b")
    data.set_defaults(func=cmd_data)
    return parser


def _fail(exc: Exception, code: int) -> int:
    print(json.dumps({"error": str(exc).replace("\n", " "), "code": code}),
          file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StiffnessError, np.linalg.LinAlgError) as exc:
        return _fail(exc, 3)
    except ValueError as exc:
        return _fail(exc, 2)
    except RuntimeError as exc:
        return _fail(exc, 3)


if __name__ == "__main__":
    sys.exit(main())
