"""Batch front end: run one scenario file and write a canonical JSON report.

Exit codes: 0 success, 2 parse/validation failure, 3 numerical invariant
violation, 4 unwritable output.  Errors go to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

from . import __version__
from .algebra import BasisKernel, ExactComplex, KernelExpr, canonical, verify_identity_suite
from .currents import current_from_spec
from .grid import SpacetimeGrid
from .interaction import (NumericalInvariantError, action_split, emission_stats, mean_photon_number,
                          symmetrized_radiative)
from .propagators import eval_feynman_momentum, eval_kernel, reflect_field, residual
from .report import build_report, canonical_json, emit_report
from .transaction import (AbsorberSet, IncompleteAbsorberSetError, OfferWave, TransactionScenario,
                          run_trials)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


class ScenarioError(Exception):
    def __init__(self, message: str, location: str = "", kind: str = "validation"):
        super().__init__(message)
        self.location = location
        self.kind = kind


def load_schema(name: str) -> dict:
    return json.loads(resources.files("qdat").joinpath("schemas", name).read_text())


@dataclass
class Scenario:
    command: str
    grid: SpacetimeGrid
    payload: dict
    seed: int | None
    output: Path
    raw: dict


def _json_path(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def load_scenario(path, seed: int | None = None, out=None) -> Scenario:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}", str(path), "parse") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}",
                            "parse") from None
    if seed is not None:
        if seed < 0:
            raise ScenarioError("seed must be non-negative", "--seed")
        raw = dict(raw, seed=seed)
    validator = jsonschema.Draft202012Validator(load_schema("scenario.schema.json"))
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        raise ScenarioError(err.message, _json_path(err.absolute_path))
    command = raw["command"]
    if command in ("emission", "transact") and "seed" not in raw:
        raise ScenarioError(f"command {command!r} needs a seed", "/seed")
    try:
        grid = SpacetimeGrid.from_descriptor(raw["grid"]) if "grid" in raw else SpacetimeGrid.default()
    except ValueError as exc:
        raise ScenarioError(str(exc), "/grid") from None
    if out is not None:
        output = Path(out)
    elif "output" in raw:
        output = path.parent / raw["output"]
    else:
        output = path.with_suffix(".report.json")
    return Scenario(command, grid, raw.get("payload", {}), raw.get("seed"), output, raw)


def _kernel_expr(spec) -> KernelExpr:
    if isinstance(spec, str):
        return canonical(spec)
    by_symbol = {b.symbol: b for b in BasisKernel}
    return KernelExpr({by_symbol[s]: ExactComplex.parse(v) for s, v in spec.items()})


def _prepare_identities(sc: Scenario) -> Callable[[], dict]:
    def compute():
        rows = [{"key": r.key, "statement": r.statement, "status": "pass" if r.passed else "fail",
                 "lhs": r.lhs, "rhs": r.rhs} for r in verify_identity_suite()]
        return {"identities": rows, "all_pass": all(r["status"] == "pass" for r in rows)}
    return compute


def _prepare_kernel(sc: Scenario) -> Callable[[], dict]:
    p = sc.payload
    try:
        expr = _kernel_expr(p["kernel"])
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(str(exc), "/payload/kernel") from None
    epsilons = sorted(p.get("momentum_epsilon", []), reverse=True)
    grid = sc.grid
    if epsilons and len(grid.time_samples) < 2:
        raise ScenarioError("the momentum route needs at least two time samples", "/grid")
    want_csv = p.get("csv", True)

    def compute():
        field = eval_kernel(expr, grid)
        ev = lambda name: eval_kernel(canonical(name), grid)  # noqa: E731
        checks = {
            "ret_vs_bar_plus_half_odd": residual(ev("ret"), ev("bar") + 0.5 * ev("odd")),
            "feynman_vs_bar_minus_half_i_one": residual(ev("feynman"), ev("bar") - 0.5j * ev("one")),
        }
        if grid.is_time_symmetric:
            dp, dm = ev("d_plus"), ev("d_minus")
            checks["reflection_dplus_plus_dminus_reflected"] = float(
                np.abs(dp.values + reflect_field(dm).values).max() / dp.max_abs())
            d1 = ev("one")
            checks["d1_even"] = residual(d1, reflect_field(d1))
        results = {"kernel": expr.to_dict(), "max_abs": field.max_abs(), "checks": checks}
        if epsilons:
            feyn = ev("feynman")
            runs = []
            for eps in epsilons:
                step = 0.2 * math.sqrt(eps)
                runs.append({"epsilon": eps, "freq_step": step,
                             "residual": residual(feyn, eval_feynman_momentum(grid, eps, step))})
            results["momentum_route"] = runs
            if len(runs) > 1:
                r0, r1 = runs[-2], runs[-1]
                results["observed_order"] = (math.log(r0["residual"] / r1["residual"])
                                             / math.log(r0["epsilon"] / r1["epsilon"]))
        if want_csv:
            csv_path = sc.output.with_suffix(".csv")
            field.to_csv(csv_path)
            results["csv"] = csv_path.name
        return results
    return compute


def _stream_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(1 << 30, index)).generate_state(1)[0])


def _prepare_emission(sc: Scenario) -> Callable[[], dict]:
    p = sc.payload
    currents = []
    for n, spec in enumerate(p["currents"]):
        try:
            currents.append(current_from_spec(spec, sc.grid))
        except ValueError as exc:
            raise ScenarioError(str(exc), f"/payload/currents/{n}") from None
    max_count = p.get("max_count", 30)
    trials = p.get("trials", 100_000)
    workers = p.get("workers", 1)

    def compute():
        per_current = []
        for n, c in enumerate(currents):
            nbar = mean_photon_number(c)
            stats = emission_stats(nbar, max_count, trials, _stream_seed(sc.seed, n), sc.grid, workers)
            per_current.append({"label": c.label, "stats": stats.to_dict(),
                                "self_action": action_split(c, c).to_dict()})
        pairs = [{"a": a.label, "b": b.label, "split": action_split(a, b).to_dict()}
                 for a in currents for b in currents]
        r_diff, r_pos = symmetrized_radiative(currents)
        return {"currents": per_current, "pairs": pairs,
                "positive_frequency_reduction": {"difference_route": r_diff, "positive_frequency_route": r_pos,
                                                 "relative_difference": abs(r_diff - r_pos) / max(abs(r_pos), 1e-300)}}
    return compute


def _prepare_transact(sc: Scenario) -> Callable[[], dict]:
    p = sc.payload
    try:
        absorbers = AbsorberSet.from_records(p["absorbers"])
    except ValueError as exc:
        raise ScenarioError(str(exc), "/payload/absorbers") from None
    if len(p["offer"]) != len(absorbers.ids):
        raise ScenarioError("offer needs one amplitude per absorber", "/payload/offer")
    offer = OfferWave.from_polar(absorbers.ids, [o["modulus"] for o in p["offer"]],
                                 [o.get("phase", 0.0) for o in p["offer"]])
    if p.get("normalize", False):
        try:
            offer = offer.normalized()
        except ValueError as exc:
            raise ScenarioError(str(exc), "/payload/offer") from None
    scenario = TransactionScenario(sc.grid, absorbers, offer, p["coupling"], p.get("weight", 1.0),
                                   p.get("phasing", "feynman"), p.get("factorization_points", 100))
    try:
        scenario.validate()
    except IncompleteAbsorberSetError as exc:
        raise ScenarioError(str(exc), "/payload/absorbers") from None
    except ValueError as exc:
        raise ScenarioError(str(exc), "/payload") from None
    trials, workers = p["trials"], p.get("workers", 1)
    return lambda: run_trials(scenario, trials, sc.seed, workers)


PREPARE = {
    "identities": _prepare_identities,
    "kernel": _prepare_kernel,
    "emission": _prepare_emission,
    "transact": _prepare_transact,
}


def scenario_digest(raw: dict) -> str:
    body = {k: v for k, v in raw.items() if k != "output"}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def run(scenario_path, seed: int | None = None, out=None) -> tuple[dict, Path]:
    """Validate, compute and write the report; returns (report, path)."""
    sc = load_scenario(scenario_path, seed, out)
    compute = PREPARE[sc.command](sc)
    results = compute()
    report = build_report(sc.command, results, {
        "seed": sc.seed,
        "grid": sc.grid.descriptor(),
        "scenario_sha256": scenario_digest(sc.raw),
        "version": __version__,
    })
    emit_report(report, sc.output)
    return report, sc.output


def _error(code: int, kind: str, message: str, location: str = "") -> int:
    obj = {"error": {"exit_code": code, "kind": kind, "message": message}}
    if location:
        obj["error"]["location"] = location
    sys.stderr.write(json.dumps(obj, sort_keys=True) + "\n")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdat", description="Run a direct-action QFT scenario file.")
    parser.add_argument("--scenario", metavar="PATH", required=True, help="scenario JSON file")
    parser.add_argument("--seed", type=int, help="override the scenario seed")
    parser.add_argument("--out", metavar="PATH", help="override the report path")
    parser.add_argument("--quiet", action="store_true", help="print nothing on success")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, path = run(args.scenario, args.seed, args.out)
    except ScenarioError as exc:
        return _error(EXIT_INVALID, exc.kind, str(exc), exc.location)
    except NumericalInvariantError as exc:
        return _error(EXIT_NUMERICAL, "numerical", str(exc))
    except OSError as exc:
        return _error(EXIT_IO, "io", f"cannot write report: {exc}", str(getattr(exc, "filename", "") or ""))
    if not args.quiet:
        print(f"{report['metadata']['command']}: report written to {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
