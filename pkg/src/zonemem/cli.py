"""zonemem command line.

    zonemem gen-world --preset hospital --out world.json
    zonemem run --preset hospital --scenario loop --policy zone --memory-thr 100
    zonemem compare --scenario loop --memory-thr 100 --max-retrieved 10
    zonemem report --in out/

Errors are reported as one line on stderr: ``error: <code>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import model, svg, worldgen
from .baseline import BaselineParams
from .errors import SpecInvalid, ZonememError
from .ltm import LtmStore
from .sim import BASELINE, POLICIES, ZONE, PRESETS as SCENARIOS, Scenario, compare, run, trace_from_csv
from .zone_policy import ZonePolicyParams

EMIT_CHOICES = {"csv", "json", "svg"}


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = 2):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep usage errors on one line
        raise CliError("usage", message.replace("\n", " "))


def _default_out() -> str:
    return os.environ.get("ZONEMEM_OUT", "out")


def _emit(value: str) -> set[str]:
    items = {v.strip() for v in value.split(",") if v.strip()}
    bad = items - EMIT_CHOICES
    if bad:
        raise argparse.ArgumentTypeError(f"unknown emit kind(s): {','.join(sorted(bad))}")
    return items


def _max_retrieved(value: str) -> int | None:
    if value.lower() in ("inf", "none", "unlimited"):
        return None
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("max-retrieved must be >= 1 or 'inf'")
    return n


def _add_world_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--world", help="world JSON file")
    g.add_argument("--spec", help="world spec JSON file")
    g.add_argument("--preset", choices=sorted(worldgen.PRESETS), help="built-in world (default hospital)")
    p.add_argument("--seed", type=int, default=42)


def _add_policy_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", default="loop", help="preset name (loop, round-trip) or scenario JSON path")
    p.add_argument("--memory-thr", type=int, default=100)
    p.add_argument("--max-retrieved", type=_max_retrieved, default=10)
    p.add_argument("--immunization-ratio", type=float, default=0.25)
    p.add_argument("--neighborhood-depth", type=int, default=3)
    p.add_argument("--oversized-zone-mode", choices=["error", "force_load"], default="error")
    p.add_argument("--portal-radius", type=float, default=None, help="override every portal radius (zone policy)")
    p.add_argument("--out", default=None, help="output directory (default $ZONEMEM_OUT or ./out)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zonemem", description="Zone-based SLAM map memory management simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-world", help="generate a world JSON")
    _add_world_args(p)
    p.add_argument("--out", default=None, help="output file (default <out dir>/world.json)")
    p.add_argument("--manifest", default=None, help="also write the placement manifest JSON here")

    p = sub.add_parser("run", help="run one policy on one scenario")
    _add_world_args(p)
    _add_policy_args(p)
    p.add_argument("--policy", choices=POLICIES, default=ZONE)
    p.add_argument("--emit", type=_emit, default={"csv", "json"})

    p = sub.add_parser("compare", help="run baseline and zone policies on one scenario")
    _add_world_args(p)
    _add_policy_args(p)
    p.add_argument("--emit", type=_emit, default={"csv", "json", "svg"})

    p = sub.add_parser("report", help="re-render outputs from saved traces")
    p.add_argument("--in", dest="in_dir", default=None, help="directory with saved traces (default $ZONEMEM_OUT or ./out)")
    p.add_argument("--out", default=None, help="where to write (default: the input directory)")
    return parser


def _load_world(args) -> model.WorldMap:
    if args.world:
        if not Path(args.world).is_file():
            raise CliError("world_not_found", f"world file not found: {args.world}")
        try:
            return model.load(args.world)
        except (ValueError, KeyError, TypeError) as exc:
            raise CliError("world_invalid", f"cannot parse world file {args.world}: {exc}") from exc
    if args.spec:
        if not Path(args.spec).is_file():
            raise CliError("spec_not_found", f"spec file not found: {args.spec}")
        try:
            return worldgen.generate(worldgen.load_spec(args.spec))
        except SpecInvalid as exc:
            raise CliError("spec_invalid", str(exc)) from exc
        except (ValueError, KeyError, TypeError) as exc:
            raise CliError("spec_invalid", f"cannot parse spec {args.spec}: {exc}") from exc
    return worldgen.generate(worldgen.PRESETS[args.preset or "hospital"](args.seed))


def _load_scenario(name: str) -> Scenario:
    if name in SCENARIOS:
        s = SCENARIOS[name]
        return Scenario(s.name, list(s.waypoints), s.speed_m_per_s, s.frame_hz)
    if not Path(name).is_file():
        raise CliError("scenario_not_found", f"scenario not found: {name}")
    with open(name, encoding="utf-8") as fh:
        return Scenario.from_dict(json.load(fh))


def _params(args, policy: str):
    if policy == BASELINE:
        return BaselineParams(
            memory_thr=args.memory_thr,
            max_retrieved=args.max_retrieved,
            local_immunization_ratio=args.immunization_ratio,
            neighborhood_depth=args.neighborhood_depth,
        )
    return ZonePolicyParams(
        memory_thr=args.memory_thr,
        portal_radius_override=args.portal_radius,
        oversized_zone_mode=args.oversized_zone_mode,
    )


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _prepare(args):
    world = _load_world(args)
    violations = model.validate(world)
    if violations:
        raise CliError("world_invalid", "world fails validation: " + "; ".join(map(str, violations[:5])))
    scenario = _load_scenario(args.scenario)
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    store = LtmStore.build(world, out / "ltm.zmlt")
    return world, scenario, out, store


def cli_gen_world(args) -> int:
    world = _load_world(args)
    out = Path(args.out) if args.out else Path(_default_out()) / "world.json"
    _write(out, model.dumps(world))
    if args.manifest:
        spec = worldgen.WorldSpec.from_dict(world.meta["generator"])
        _, manifest = worldgen.generate_with_manifest(spec)
        _write(Path(args.manifest), json.dumps([vars(m) for m in manifest], indent=1) + "\n")
    print(f"wrote {out} ({len(world.zones)} zones, {len(world.signatures)} signatures)")
    return 0


def _emit_trace(trace, out: Path, stem: str, emit: set[str]) -> None:
    if "csv" in emit:
        _write(out / f"{stem}.csv", trace.to_csv())
        _write(out / f"{stem.replace('trace', 'ledger')}.csv", trace.ledger.to_csv())
    if "json" in emit:
        _write(out / f"{stem.replace('trace', 'summary')}.json", trace.summary_json())
    if "svg" in emit:
        _write(out / f"{stem}.svg", svg.trace_svg(trace))


def cli_run(args) -> int:
    world, scenario, out, store = _prepare(args)
    with store:
        trace = run(world, store, args.policy, _params(args, args.policy), scenario)
    _emit_trace(trace, out, "trace", args.emit)
    t = trace.totals
    print(
        f"{trace.policy} {trace.scenario}: loads={t['cumulative_loads']} unloads={t['cumulative_unloads']} "
        f"peak_wm={t['peak_wm']} frames={t['frames']}"
    )
    if trace.failed:
        raise CliError("run_failed", trace.error, exit_code=1)
    return 0


def cli_compare(args) -> int:
    world, scenario, out, store = _prepare(args)
    with store:
        tb = run(world, store, BASELINE, _params(args, BASELINE), scenario)
        tz = run(world, store, ZONE, _params(args, ZONE), scenario)
    report = compare(tb, tz)
    _emit_trace(tb, out, "baseline_trace", args.emit)
    _emit_trace(tz, out, "zone_trace", args.emit)
    if "json" in args.emit:
        _write(out / "comparison.json", report.to_json())
    if "svg" in args.emit:
        _write(out / "comparison.svg", svg.comparison_svg(tb, tz))
    print(
        f"{scenario.name}: load_ratio={report.load_ratio} load_ratio_after_init={report.load_ratio_after_init} "
        f"unload_ratio={report.unload_ratio}"
    )
    failed = [t for t in (tb, tz) if t.failed]
    if failed:
        raise CliError("run_failed", f"{failed[0].policy}: {failed[0].error}", exit_code=1)
    return 0


def cli_report(args) -> int:
    src = Path(args.in_dir or _default_out())
    if not src.is_dir():
        raise CliError("input_not_found", f"input directory not found: {src}")
    dst = Path(args.out) if args.out else src
    traces = {}
    for csv_path in sorted(src.glob("*trace.csv")):
        stem = csv_path.stem
        summary_path = src / f"{stem.replace('trace', 'summary')}.json"
        meta = json.loads(summary_path.read_text(encoding="utf-8")) if summary_path.is_file() else {}
        trace = trace_from_csv(
            csv_path.read_text(encoding="utf-8"),
            scenario=meta.get("scenario", "unknown"),
            policy=meta.get("policy", stem.replace("_trace", "") or "unknown"),
            params=meta.get("params"),
        )
        traces[stem] = trace
        _write(dst / f"{stem}.svg", svg.trace_svg(trace))
    if not traces:
        raise CliError("input_not_found", f"no *trace.csv files in {src}")
    if "baseline_trace" in traces and "zone_trace" in traces:
        _write(dst / "comparison.svg", svg.comparison_svg(traces["baseline_trace"], traces["zone_trace"]))
    report = {stem: {"scenario": t.scenario, "policy": t.policy, **{k: v for k, v in t.totals.items() if not k.startswith("transient")}} for stem, t in traces.items()}
    _write(dst / "report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"rendered {len(traces)} trace(s) into {dst}")
    return 0


COMMANDS = {"gen-world": cli_gen_world, "run": cli_run, "compare": cli_compare, "report": cli_report}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ZonememError as exc:
        print(f"error: {type(exc).__name__}: {str(exc).splitlines()[0]}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: invalid_argument: {str(exc).splitlines()[0]}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
