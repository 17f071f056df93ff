"""uavshare command line.

Subcommands write their artifacts into ``--out`` and print the headline
ratio on stdout; progress goes to stderr. Exit codes: 0 success, 2 usage,
3 validation, 4 I/O.

Parameter precedence is flag > scenario file > built-in default; the
resolved values and where each came from are echoed in ``summary.json``.
"""
from __future__ import annotations

import argparse
import copy
import logging
import sys
from pathlib import Path

from . import __version__, export
from .coverage import GridSpec, LinkTerms, compute_flyable_grid
from .experiment import (
    ExperimentError,
    ExperimentSpec,
    experiment_from_document,
    generate_routers,
    read_experiment_document,
    run_experiment,
)
from .geometry import GeometryError
from .planner import (
    PartitionStrategy,
    allocate_channels,
    best_fixed_pair,
    optimize_gs,
    partition_area,
    resolve_threads,
)
from .scenario import Scenario, ScenarioError, load_scenario, scenario_to_document

log = logging.getLogger("uavshare")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _xy(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}") from None
    return x, y


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavshare",
                                description="UAV/WLAN spectrum-sharing planner")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, type=Path,
                        help="scenario or experiment JSON file")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--resolution", type=float, help="grid resolution in m")
    common.add_argument("--altitude", type=float, help="UAV altitude in m (all UAVs)")
    common.add_argument("--mode", choices=["proposed", "conventional"])
    common.add_argument("--seed", type=int,
                        help="router seed when the file is an experiment document")
    common.add_argument("--trial", type=int,
                        help="router layout index for single-run commands on experiment files")
    common.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto")
    common.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    common.add_argument("-q", "--quiet", action="store_true", help="no progress on stderr")

    sub = p.add_subparsers(dest="command", required=True)
    ev = sub.add_parser("evaluate", parents=[common], help="flyable map for one GS position")
    ev.add_argument("--gs", type=_xy, help="GS position X,Y (default: from scenario)")

    og = sub.add_parser("optimize-gs", parents=[common], help="exhaustive GS placement")
    og.add_argument("--candidate-resolution", type=float)

    al = sub.add_parser("allocate", parents=[common], help="partition and channel allocation")
    al.add_argument("--uavs", type=int, help="number of UAVs / sub-areas")
    al.add_argument("--strategy", choices=[s.value for s in PartitionStrategy])
    al.add_argument("--gs", type=_xy)
    al.add_argument("--optimize-gs", action="store_true", help="place the GS optimally first")
    al.add_argument("--candidate-resolution", type=float)

    mc = sub.add_parser("monte-carlo", parents=[common], help="seeded random router trials")
    mc.add_argument("--trials", type=int)
    mc.add_argument("--uavs", type=int)
    mc.add_argument("--strategy", choices=[s.value for s in PartitionStrategy])
    mc.add_argument("--candidate-resolution", type=float)

    rd = sub.add_parser("render", help="rebuild a raster from a map CSV")
    rd.add_argument("input", type=Path)
    rd.add_argument("-o", "--output", type=Path, help="raster path (default: input with .pgm)")
    return p


class Params:
    """Resolved parameters with their provenance."""

    def __init__(self):
        self.values: dict[str, object] = {}
        self.sources: dict[str, str] = {}

    def set(self, name: str, flag, file=None, default=None):
        if flag is not None:
            value, source = flag, "flag"
        elif file is not None:
            value, source = file, "file"
        else:
            value, source = default, "default"
        return self.record(name, value, source)

    def record(self, name: str, value, source: str):
        self.values[name] = value
        self.sources[name] = source
        return value

    def echo(self) -> dict:
        return {k: {"value": v, "source": self.sources[k]} for k, v in self.values.items()}


def _load(args, params: Params) -> tuple[Scenario, ExperimentSpec | None, dict | None]:
    scen_doc, exp_doc = read_experiment_document(args.scenario)
    if not isinstance(scen_doc, dict):
        raise ScenarioError("<document>", "expected a JSON object")
    doc = copy.deepcopy(scen_doc)
    uavs = doc.get("uavs") if isinstance(doc.get("uavs"), list) else []
    file_alt = uavs[0].get("altitude_m") if uavs and isinstance(uavs[0], dict) else None
    params.set("altitude_m", args.altitude, file_alt)
    if args.altitude is not None:
        for u in uavs:
            u["altitude_m"] = args.altitude
    mode = params.set("mode", args.mode, doc.get("mode"), "proposed")
    doc["mode"] = mode
    gs_flag = getattr(args, "gs", None)
    if gs_flag is not None:
        pos = doc.get("ground_station", {}).get("position", {})
        pos["x"], pos["y"] = gs_flag
    scenario = load_scenario(doc)
    params.set("gs_x", gs_flag and gs_flag[0], scenario.gs.position.x)
    params.set("gs_y", gs_flag and gs_flag[1], scenario.gs.position.y)
    spec = experiment_from_document(exp_doc) if exp_doc is not None else None
    return scenario, spec, exp_doc


def _with_trial_routers(scenario: Scenario, spec: ExperimentSpec | None, args,
                        params: Params) -> Scenario:
    """For experiment files, single-run commands use one seeded router layout."""
    if spec is None:
        return scenario
    seed = params.set("seed", args.seed, spec.seed)
    trial = params.set("trial", args.trial, None, 0)
    r = spec.routers
    routers = generate_routers(seed, scenario.bounds, r.count, r.channel_mix, r.height,
                               tx_power=r.tx_power, reference_channel=scenario.uavs[0].uplink,
                               n_channels=scenario.raster.count, trial=trial)
    return scenario.with_routers(routers)


def _grid(scenario: Scenario, args, params: Params, file_res=None) -> GridSpec:
    res = params.set("resolution_m", args.resolution, file_res, 10.0)
    try:
        return GridSpec(scenario.bounds, res, scenario.altitude)
    except ValueError as exc:
        raise ScenarioError("--resolution", str(exc)) from exc


def _write_map(grid, out: Path, args, scenario: Scenario, sub_areas=()) -> list[str]:
    files = [export.write_grid_csv(grid, out / "map.csv"), export.write_raster(grid, out / "map.pgm")]
    if not args.no_figures:
        from .plotting import plot_flyable_map

        files.append(plot_flyable_map(grid, out / "map.png", scenario.routers, sub_areas))
    return [p.name for p in files]


def _finish(out: Path, command: str, params: Params, scenario: Scenario, result: dict,
            files: list[str]) -> None:
    files = sorted(files + ["summary.json"])
    export.write_json({"command": command, "version": __version__,
                       "parameters": params.echo(), "scenario": scenario_to_document(scenario),
                       "result": result, "files": files}, out / "summary.json")
    log.info("wrote %s", ", ".join(str(out / f) for f in files))


def cmd_evaluate(args, params: Params) -> None:
    scenario, spec, _ = _load(args, params)
    scenario = _with_trial_routers(scenario, spec, args, params)
    grid = _grid(scenario, args, params, spec.grid_resolution if spec else None)
    threads = resolve_threads(args.threads)
    fg = compute_flyable_grid(scenario, scenario.gs.position, grid, threads=threads)
    files = _write_map(fg, args.out, args, scenario)
    _finish(args.out, "evaluate", params, scenario, export.grid_summary(fg), files)
    print(f"{fg.flyable_ratio:.6f}")


def cmd_optimize(args, params: Params) -> None:
    scenario, spec, _ = _load(args, params)
    scenario = _with_trial_routers(scenario, spec, args, params)
    grid = _grid(scenario, args, params, spec.grid_resolution if spec else None)
    cres = params.set("candidate_resolution_m", args.candidate_resolution,
                      spec.candidate_resolution if spec else None, 50.0)
    threads = resolve_threads(args.threads)
    log.info("searching GS candidates at %g m", cres)
    placement = optimize_gs(scenario, cres, grid, threads=threads)
    placed = scenario.with_gs_position(placement.best_position)
    fg = compute_flyable_grid(placed, placement.best_position, grid, threads=threads)
    files = _write_map(fg, args.out, args, placed)
    if not args.no_figures:
        from .plotting import plot_candidate_heatmap

        files.append(plot_candidate_heatmap(placement, args.out / "candidates.png").name)
    lat = placement.candidates
    result = export.grid_summary(fg)
    result["candidates"] = {"xs": lat.xs.tolist(), "ys": lat.ys.tolist(),
                            "ratios": placement.ratios.tolist()}
    _finish(args.out, "optimize-gs", params, placed, result, files)
    p = placement.best_position
    print(f"{placement.best_ratio:.6f} {p.x:g},{p.y:g}")


def cmd_allocate(args, params: Params) -> None:
    scenario, spec, _ = _load(args, params)
    scenario = _with_trial_routers(scenario, spec, args, params)
    grid = _grid(scenario, args, params, spec.grid_resolution if spec else None)
    n = params.set("uavs", args.uavs, spec.uav_count if spec else None, 3)
    strategy = PartitionStrategy(params.set("strategy", args.strategy,
                                            spec.partition.value if spec else None, "strips"))
    threads = resolve_threads(args.threads)
    if n < 1:
        raise ScenarioError("--uavs", "at least one UAV is required")
    if args.optimize_gs:
        if args.gs is not None:
            raise UsageError("--gs and --optimize-gs are mutually exclusive")
        cres = params.set("candidate_resolution_m", args.candidate_resolution,
                          spec.candidate_resolution if spec else None, 50.0)
        placement = optimize_gs(scenario, cres, grid, threads=threads)
        scenario = scenario.with_gs_position(placement.best_position)
        params.record("gs_x", placement.best_position.x, "optimized")
        params.record("gs_y", placement.best_position.y, "optimized")
    gs = scenario.gs.position
    terms = LinkTerms(scenario, gs, grid, threads=threads)
    subs = partition_area(scenario.bounds, n, strategy, gs, grid)
    plan = allocate_channels(scenario, subs, grid, terms=terms)
    pair, fixed = best_fixed_pair(scenario, grid, terms=terms)
    if plan.warning:
        log.warning("no passing channel pair in sub-area(s) %s", list(plan.infeasible))
    files = _write_map(plan.combined_grid, args.out, args, scenario, plan.sub_areas)
    result = export.grid_summary(plan.combined_grid)
    result.update(export.plan_summary(plan))
    result["best_fixed_pair"] = {"uplink": pair[0], "downlink": pair[1], "flyable_ratio": fixed}
    _finish(args.out, "allocate", params, scenario, result, files)
    print(f"{plan.combined_ratio:.6f}")


def cmd_monte_carlo(args, params: Params) -> None:
    scenario, spec, exp_doc = _load(args, params)
    base = ExperimentSpec()
    spec = spec or base
    file = spec if exp_doc is not None else None

    def pick(name, flag, attr):
        value = getattr(file, attr) if file else None
        return params.set(name, flag, value, getattr(base, attr))

    trials = pick("trials", args.trials, "trials")
    seed = pick("seed", args.seed, "seed")
    res = pick("resolution_m", args.resolution, "grid_resolution")
    cres = pick("candidate_resolution_m", args.candidate_resolution, "candidate_resolution")
    n = pick("uavs", args.uavs, "uav_count")
    strategy = params.set("strategy", args.strategy, file and file.partition.value,
                          base.partition.value)
    threads = resolve_threads(args.threads)
    modes = (scenario.mode,) if args.mode else spec.modes
    params.record("modes", [m.value for m in modes], "flag" if args.mode else "file" if exp_doc else "default")
    try:
        spec = ExperimentSpec(trials, seed, spec.routers, cres, res, n, strategy, modes)
        GridSpec(scenario.bounds, res, scenario.altitude)
    except ValueError as exc:
        raise ScenarioError("experiment", str(exc)) from exc

    def progress(i, rec):
        log.info("trial %d/%d: %s", i + 1, spec.trials,
                 " ".join(f"{k}={v:.3f}" for k, v in rec.values.items() if k.endswith("_ratio")))

    result = run_experiment(spec, scenario, threads, progress)
    files = [export.write_trials_csv(result, args.out / "trials.csv").name]
    if not args.no_figures:
        from .plotting import plot_mode_comparison

        files.append(plot_mode_comparison(result, args.out / "modes.png").name)
    summary = {"summary": result.summary(), "experiment": spec.to_document(),
               "trials": [{"trial": r.trial, "values": r.values,
                           "routers": [{"id": x.id, "x": x.position.x, "y": x.position.y,
                                        "channel": x.channel} for x in r.routers]}
                          for r in result.records]}
    _finish(args.out, "monte-carlo", params, scenario, summary, files)
    stats = result.summary()
    for m in spec.modes:
        print(f"{m.value} {stats[f'{m.value}_ratio']['mean']:.6f}")


def cmd_render(args) -> None:
    output = args.output or args.input.with_suffix(".pgm")
    export.render_csv(args.input, output)
    log.info("wrote %s", output)


COMMANDS = {"evaluate": cmd_evaluate, "optimize-gs": cmd_optimize, "allocate": cmd_allocate,
            "monte-carlo": cmd_monte_carlo}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
                        format="uavshare: %(message)s", stream=sys.stderr, force=True)
    try:
        if args.command == "render":
            cmd_render(args)
        else:
            COMMANDS[args.command](args, Params())
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"uavshare: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExperimentError as exc:
        print(f"uavshare: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc.__cause__, OSError) else EXIT_VALIDATION
    except OSError as exc:
        name = exc.filename or ""
        print(f"uavshare: cannot access {name}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except (ScenarioError, GeometryError, ValueError) as exc:
        print(f"uavshare: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
