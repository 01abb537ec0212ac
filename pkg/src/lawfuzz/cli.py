"""Command-line front end.

Exit codes: 0 when everything holds (or nothing was found), 1 when a law is
violated or a campaign covered at least one violation-set element, 2 on bad
input.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .corpus import CORPUS_DIR
from .formula import normalize, signal_keys
from .fuzz import FuzzConfig, FuzzState, falsify, fuzz
from .parser import SpecError, parse_spec, render_formula
from .robustness import rho
from .signals import DEFAULT_REGISTRY, FreeRegistry
from .sim.drivers import get_driver
from .sim.engine import SimConfig, simulate, sim_config_for
from .sim.genome import GenomeError, ScenarioGenome, ScenarioTemplate, check_genome
from .sim.maps import load_map
from .trace import Trace, TraceFormatError, trace_from_states
from .violation import DEFAULT_CAP, ThetaSizeError, theta

log = logging.getLogger("lawfuzz")

OK, VIOLATED, INPUT_ERROR = 0, 1, 2


class InputError(Exception):
    pass


def _read_spec(path):
    try:
        return parse_spec(Path(path).read_text())
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except SpecError as e:
        raise InputError(f"{path}: {e}") from None


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def cmd_check(args) -> int:
    spec = _read_spec(args.spec)
    try:
        trace = Trace.read(args.trace)
    except OSError as e:
        raise InputError(f"cannot read {args.trace}: {e.strerror}") from None
    except TraceFormatError as e:
        raise InputError(f"{args.trace}: {e}") from None
    try:
        r = rho(normalize(spec.formula), trace)
    except KeyError as e:
        raise InputError(f"{args.trace}: missing signal {e}") from None
    print(f"{spec.law}: rho = {_fmt(r)}")
    return OK if r >= 0 else VIOLATED


def cmd_theta(args) -> int:
    registry = FreeRegistry.extending(DEFAULT_REGISTRY) if args.free_atoms else DEFAULT_REGISTRY
    try:
        spec = parse_spec(Path(args.spec).read_text(), registry)
    except OSError as e:
        raise InputError(f"cannot read {args.spec}: {e.strerror}") from None
    except SpecError as e:
        raise InputError(f"{args.spec}: {e}") from None
    try:
        vs = theta(normalize(spec.formula), cap=args.cap)
    except ThetaSizeError as e:
        raise InputError(str(e)) from None
    print(json.dumps({"law": spec.law, "size": len(vs), "elements": vs.to_json()}, indent=2))
    return OK


# -- campaigns ---------------------------------------------------------------


def _resolve(base: Path, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else base / q


def load_campaign(path, overrides: argparse.Namespace | None = None) -> dict:
    """Read a campaign JSON file into spec, template, driver and configs."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: {e}") from None
    base = path.parent
    if "law" in raw:
        spec_path = CORPUS_DIR / raw["law"] / "spec.lb"
        template_path = CORPUS_DIR / raw["law"] / "template.json"
    else:
        spec_path = None
        template_path = None
    if "spec" in raw:
        spec_path = _resolve(base, raw["spec"])
    if "template" in raw:
        template_path = _resolve(base, raw["template"])
    if spec_path is None or template_path is None:
        raise InputError(f"{path}: need either 'law' (a corpus name) or both 'spec' and 'template'")
    spec = _read_spec(spec_path)
    try:
        template = ScenarioTemplate.load(template_path)
        template.validate(load_map(template.map))
    except (OSError, KeyError, ValueError) as e:
        raise InputError(f"{template_path}: {e}") from None

    fz = dict(raw.get("fuzz", {}))
    ov = overrides or argparse.Namespace()
    if getattr(ov, "seed", None) is not None:
        fz["rng_seed"] = ov.seed
    if getattr(ov, "time_budget_secs", None) is not None:
        fz["time_budget"] = ov.time_budget_secs
    if getattr(ov, "baseline", None) is not None:
        fz["engine"] = ov.baseline
    driver_name = getattr(ov, "driver", None) or raw.get("driver", "aggressive")
    try:
        cfg = FuzzConfig(**fz)
        sim_d = sim_config_for(template).to_json()
        extra = dict(raw.get("sim", {}))
        if "light_cycle" in extra:
            sim_d["light_cycle"].update(extra.pop("light_cycle"))
        sim_d.update(extra)
        sim = SimConfig.from_json(sim_d)
        driver = get_driver(driver_name)
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: {e}") from None
    mode = raw.get("mode", "coverage")
    if mode not in ("coverage", "falsify"):
        raise InputError(f"{path}: unknown mode {mode!r}")
    return {
        "spec": spec,
        "spec_path": spec_path,
        "template": template,
        "template_path": template_path,
        "driver": driver,
        "driver_name": driver_name,
        "fuzz": cfg,
        "sim": sim,
        "mode": mode,
    }


def _clear_artifacts(out: Path) -> None:
    for p in list(out.glob("violation_*")) + [out / "report.json", out / "coverage_curve.csv"]:
        if p.is_file():
            p.unlink()


def write_campaign(out: Path, camp: dict, state: FuzzState, wall_clock: float) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    _clear_artifacts(out)
    spec = camp["spec"]
    elements = state.elements
    keys = sorted(set().union(*(signal_keys(e) for e in elements)))
    covered, accidents, reds = [], [], []
    for k, entry in enumerate(state.gamma):
        stem = f"violation_{k:03d}"
        genome_doc = {
            "genome": entry.genome.to_json(),
            "replay": {
                "driver": camp["driver_name"],
                "sim": camp["sim"].to_json(),
                "sim_seed": entry.sim_seed,
                "signals": keys,
            },
        }
        (out / f"{stem}.genome.json").write_text(json.dumps(genome_doc, indent=1, sort_keys=True) + "\n")
        entry.trace.write(out / f"{stem}.trace.jsonl")
        for i in entry.covered:
            covered.append(
                {
                    "index": i,
                    "formula": render_formula(elements[i]),
                    "genome_file": f"{stem}.genome.json",
                    "trace_file": f"{stem}.trace.jsonl",
                    "robustness": entry.robustness[i],
                    "generation": entry.generation,
                    "member": entry.member,
                }
            )
        if entry.accidents:
            accidents.append({"genome_file": f"{stem}.genome.json", "accidents": entry.accidents})
        if entry.red_crossings:
            reds.append({"genome_file": f"{stem}.genome.json", "crossings": entry.red_crossings})
    covered.sort(key=lambda c: c["index"])
    report = {
        "tool": "lawfuzz",
        "version": __version__,
        "law": spec.law,
        "mode": camp["mode"],
        "driver": camp["driver_name"],
        "spec_path": str(camp["spec_path"]),
        "template_path": str(camp["template_path"]),
        "rng_seed": camp["fuzz"].rng_seed,
        "config": {"fuzz": camp["fuzz"].to_json(), "sim": camp["sim"].to_json(), "template": camp["template"].name},
        "theta_size": len(elements),
        "theta": [{"index": i, "formula": render_formula(e)} for i, e in enumerate(elements)],
        "covered": covered,
        "covered_count": len(state.covered),
        "coverage": state.coverage,
        "coverage_curve": state.curve,
        "accidents": accidents,
        "red_light_crossings": reds,
        "simulated": state.simulated,
        "timed_out": state.timed_out,
        "wall_clock_secs": round(wall_clock, 3),
    }
    (out / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    with open(out / "coverage_curve.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["generation", "simulated", "covered"])
        w.writeheader()
        w.writerows(state.curve)
    return report


def run_campaign_file(config_path, out_dir, overrides=None) -> dict:
    camp = load_campaign(config_path, overrides)
    run = falsify if camp["mode"] == "falsify" else fuzz
    start = time.monotonic()
    try:
        state = run(camp["spec"].formula, camp["driver"], camp["fuzz"], camp["sim"], camp["template"])
    except ThetaSizeError as e:
        raise InputError(str(e)) from None
    return write_campaign(Path(out_dir), camp, state, time.monotonic() - start)


def cmd_fuzz(args) -> int:
    report = run_campaign_file(args.config, args.out, args)
    print(
        f"{report['law']} [{report['driver']}, {report['config']['fuzz']['engine']}]: "
        f"covered {report['covered_count']}/{report['theta_size']} after {report['simulated']} simulations"
    )
    for c in report["covered"]:
        print(f"  [{c['index']}] {c['formula']}  ({c['genome_file']})")
    return VIOLATED if report["covered_count"] else OK


def replay(genome_path, driver_name: str | None = None, dt: float | None = None, steps: int | None = None) -> Trace:
    try:
        doc = json.loads(Path(genome_path).read_text())
        genome = ScenarioGenome.from_json(doc["genome"])
        meta = doc["replay"]
        sim = SimConfig.from_json(meta["sim"])
    except OSError as e:
        raise InputError(f"cannot read {genome_path}: {e.strerror}") from None
    except (json.JSONDecodeError, KeyError, GenomeError, ValueError) as e:
        raise InputError(f"{genome_path}: {e}") from None
    if dt is not None and dt != sim.dt:
        raise InputError(f"{genome_path} was recorded with dt={sim.dt}; refusing to replay with dt={dt}")
    if steps is not None and steps != sim.steps:
        raise InputError(f"{genome_path} was recorded with {sim.steps} steps; refusing to replay with {steps}")
    try:
        driver = get_driver(driver_name or meta["driver"])
    except ValueError as e:
        raise InputError(str(e)) from None
    states = simulate(genome, driver, sim, int(meta["sim_seed"]))
    return trace_from_states(states, meta["signals"])


def cmd_replay(args) -> int:
    trace = replay(args.genome, args.driver, args.dt, args.steps)
    trace.write(args.out)
    print(f"wrote {len(trace)} steps to {args.out}")
    return OK


def cmd_validate(args) -> int:
    try:
        doc = json.loads(Path(args.genome).read_text())
        genome = ScenarioGenome.from_json(doc.get("genome", doc))
        template = ScenarioTemplate.load(args.template)
        check_genome(genome, template, load_map(template.map))
    except OSError as e:
        raise InputError(str(e)) from None
    except (json.JSONDecodeError, KeyError, ValueError) as e:
        raise InputError(f"{args.genome}: {e}") from None
    print("ok")
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lawfuzz", description="Traffic-law specification checking and violation fuzzing.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="score a recorded trace against a law")
    c.add_argument("spec")
    c.add_argument("trace")
    c.set_defaults(func=cmd_check)

    t = sub.add_parser("theta", help="print the violation set of a law as JSON")
    t.add_argument("spec")
    t.add_argument("--free-atoms", action="store_true", help="accept any bare identifier as a Boolean signal")
    t.add_argument("--cap", type=int, default=DEFAULT_CAP)
    t.set_defaults(func=cmd_theta)

    f = sub.add_parser("fuzz", help="run a campaign from a JSON config")
    f.add_argument("config")
    f.add_argument("--out", required=True)
    f.add_argument("--seed", type=int)
    f.add_argument("--time-budget-secs", type=float)
    f.add_argument("--driver")
    f.add_argument("--baseline", choices=("ga", "random"))
    f.set_defaults(func=cmd_fuzz)

    r = sub.add_parser("replay", help="re-simulate a saved violation genome")
    r.add_argument("genome")
    r.add_argument("--out", required=True)
    r.add_argument("--driver")
    r.add_argument("--dt", type=float)
    r.add_argument("--steps", type=int)
    r.set_defaults(func=cmd_replay)

    v = sub.add_parser("validate", help="check a genome against a scenario template")
    v.add_argument("genome")
    v.add_argument("template")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
