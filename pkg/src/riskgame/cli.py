"""Command-line entry point: ``riskgame {plan,simulate,evaluate,risk}``.

Planner settings are layered: scenario file, then ``$RISKGAME_CONFIG_DIR/config.json``,
then ``--config``, then the individual flags. Usage errors exit 2 and data
errors exit 1, each with a message naming the offending field or flag.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io
from .errors import RiskGameError
from .metrics import MetricsReport, PreParams, aggregate
from .planner import PlannerConfig, plan_step
from .risk import build_risk_tensor, minimax_reduce
from .scenario import Scenario
from .simulator import build_scene, initial_world, run, step
from .sparse_game import build_graph

# flag name -> planner fields it sets
FLAG_FIELDS = {
    "beta": ("beta",),
    "top_m": ("top_m",),
    "history_t": ("history_t",),
    "tau": ("tau_risk",),
    "sigma": ("sigma_risk",),
}


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="simulator RNG seed (defaults to the scenario's)")
    common.add_argument("--beta", type=float, help="risk prior strength in attention logits")
    common.add_argument("--top-m", type=int, help="agents kept per planning mode")
    common.add_argument("--history-t", type=int, help="historical plans kept for consistency (0 disables)")
    common.add_argument("--tau", type=float, help="TTC decay of the risk and PRE exponentials (s)")
    common.add_argument("--sigma", type=float, help="distance decay of the risk and PRE exponentials (m)")
    common.add_argument("--config", help="JSON file of planner field overrides")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "table"), default="json")

    parser = argparse.ArgumentParser(prog="riskgame", description="Risk-prioritised sparse game planner.")
    sub = parser.add_subparsers(dest="command", metavar="{plan,simulate,evaluate,risk}")
    sub.required = True

    for name, help_text in (("plan", "run one planning step on a scenario frame"),
                            ("risk", "dump the risk matrix and sparse graph for a frame")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("scenario", help="scenario JSON (or builtin:scenarios/<name>.json)")
        p.add_argument("--step", type=int, default=0, help="frame index reached by closed-loop rollout")

    p = sub.add_parser("simulate", parents=[common], help="closed-loop run, writes a JSON-lines log")
    p.add_argument("scenario")
    p.add_argument("--steps", type=int, help="number of planning steps (defaults to the scenario's)")

    p = sub.add_parser("evaluate", parents=[common], help="metrics over a log or trajectory bundle files")
    p.add_argument("inputs", nargs="+", help="simulation log(s) or trajectory bundle(s)")
    return parser


def _config(args, scenario: Scenario | None) -> PlannerConfig:
    config = scenario.planner if scenario is not None else PlannerConfig()
    config = io.apply_config(config, io.default_config_overrides())
    if args.config:
        config = io.apply_config(config, io.load_config_file(args.config))
    for flag, fields in FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        try:
            config = config.updated(**{f: value for f in fields})
        except ValueError as exc:
            raise UsageError(f"--{flag.replace('_', '-')}: {exc}") from None
    return config


def _pre_params(args, base: PreParams) -> PreParams:
    tau = args.tau if args.tau is not None else base.tau
    sigma = args.sigma if args.sigma is not None else base.pre_sigma
    return PreParams(tau, sigma)


def _load(args) -> tuple[Scenario, Path]:
    path = io.resolve_path(args.scenario)
    return io.load_scenario(path), path.parent


def _frame(args):
    scenario, base = _load(args)
    config = _config(args, scenario)
    if args.step < 0:
        raise UsageError(f"--step: must be >= 0, got {args.step}")
    adapters = io.scenario_adapters(scenario, base)
    seed = scenario.seed if args.seed is None else args.seed
    world = initial_world(scenario, config, seed)
    for _ in range(args.step):
        world, _, _ = step(world, scenario, config, adapters)
    return scenario, config, adapters, world


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _matrix_table(title: str, rows, names) -> str:
    lines = [title]
    for name, row in zip(names, rows):
        lines.append(f"  {name:<16}" + "".join(f"{v:>10.5f}" for v in row))
    return "\n".join(lines) + "\n"


def cmd_plan(args) -> int:
    scenario, config, adapters, world = _frame(args)
    scene = build_scene(world, scenario, adapters)
    decision, _ = plan_step(scene, world.buffer, config, world.rng, adapters.attention)
    names = [t.name for t in scenario.all_templates()]
    if args.format == "table":
        lines = [f"step {world.step}  command {scene.command.value}  selected {names[decision.selected_index]}"]
        lines.append(f"  {'mode':<16}{'risk':>10}{'consist.':>10}{'goal':>10}{'total':>10}")
        for name, c in zip(names, decision.costs):
            lines.append(f"  {name:<16}{c.risk_term:>10.5f}{c.consistency_term:>10.5f}{c.goal_term:>10.5f}{c.total:>10.5f}")
        _emit("\n".join(lines) + "\n", args.out)
    else:
        payload = {"step": world.step, "command": scene.command.value, "mode_names": names, **decision.to_dict()}
        _emit(io.dumps(payload), args.out)
    return 0


def cmd_risk(args) -> int:
    scenario, config, adapters, world = _frame(args)
    scene = build_scene(world, scenario, adapters)
    tensor = build_risk_tensor(scene.candidates, scene.agents, config.risk_params)
    matrix = minimax_reduce(tensor, [a.confidence for a in scene.agents])
    graph = build_graph(matrix, config.top_m, config.normalization_scope)
    names = [t.name for t in scenario.all_templates()]
    if args.format == "table":
        text = _matrix_table("risk matrix (plan x agent)", matrix.values, names)
        text += _matrix_table("normalized (active only)", graph.normalized, names)
        _emit(text, args.out)
    else:
        payload = {
            "step": world.step,
            "mode_names": names,
            "agent_names": [a.script.name for a in world.agents],
            "risk_matrix": matrix.values.tolist(),
            "top_m": graph.top_m,
            "active": graph.active.tolist(),
            "normalized": graph.normalized.tolist(),
        }
        _emit(io.dumps(payload), args.out)
    return 0


def cmd_simulate(args) -> int:
    scenario, base = _load(args)
    config = _config(args, scenario)
    if args.steps is not None and args.steps < 1:
        raise UsageError(f"--steps: must be >= 1, got {args.steps}")
    log = run(scenario, args.steps, config, args.seed, io.scenario_adapters(scenario, base))
    _emit(log.to_jsonl(), args.out)
    return 0


def _is_log(path: Path) -> bool:
    with open(path) as fh:
        first = fh.readline()
    try:
        return json.loads(first).get("type") == "header"
    except (json.JSONDecodeError, AttributeError):
        return False


def cmd_evaluate(args) -> int:
    reports: list[MetricsReport] = []
    for ref in args.inputs:
        path = io.resolve_path(ref)
        if not path.exists():
            raise io.ParseError(f"{path}: no such file")
        if _is_log(path):
            log = io.load_log(path)
            pre = None
            if args.tau is not None or args.sigma is not None:
                pre = _pre_params(args, Scenario.from_dict(log.header["scenario"]).pre_params)
            reports.append(io.evaluate_log(log, pre_params=pre))
        else:
            data = io.read_json(path)
            if args.tau is not None:
                data["tau"] = args.tau
            if args.sigma is not None:
                data["pre_sigma"] = args.sigma
            reports.append(io.evaluate_bundle(data))
    report = reports[0] if len(reports) == 1 else aggregate(reports)
    _emit(report.to_table() if args.format == "table" else report.to_json(), args.out)
    return 0


COMMANDS = {"plan": cmd_plan, "risk": cmd_risk, "simulate": cmd_simulate, "evaluate": cmd_evaluate}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"riskgame: error: {exc}", file=sys.stderr)
        return 2
    except (RiskGameError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"riskgame {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
