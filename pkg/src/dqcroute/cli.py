"""Command-line entry points.

Subcommands: ``train``, ``eval``, ``oracle``, ``map``. Exit codes: 0 success,
2 validation error (bad config, arch mismatch, malformed file), 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import harness, oracle, topology
from .circuit import load_file as load_circuit
from .env import ActionTable, EnvConfig
from .errors import ValidationError
from .learn import QNetwork

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 2, 3


def _load_config(args) -> harness.ExperimentConfig:
    if getattr(args, "preset", None):
        cfg = harness.load_preset(args.preset)
        if getattr(args, "config", None):
            # explicit config values override the preset
            file_cfg = harness.ExperimentConfig.from_toml(args.config).to_dict()
            merged = cfg.to_dict()
            merged.update({k: v for k, v in file_cfg.items() if v is not None})
            cfg = harness.ExperimentConfig.from_dict(merged)
        return cfg
    if not getattr(args, "config", None):
        raise ValidationError("provide --config and/or --preset")
    return harness.ExperimentConfig.from_toml(args.config)


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.episodes is not None:
        cfg.episodes = args.episodes
    out_dir = args.out or cfg.out_dir
    if out_dir is None:
        raise ValidationError("no output directory (--out or config out_dir)")

    def progress(rec):
        if rec.episode % 100 == 0 or rec.episode == cfg.episodes - 1:
            print(f"episode {rec.episode}: stops={rec.stops_used} "
                  f"success={int(rec.success)} reward={rec.cum_reward:.1f} "
                  f"eps={rec.epsilon:.3f}", file=sys.stderr)

    records, _, csv_path, model_path = harness.train(cfg, out_dir, progress=progress)
    print(json.dumps({"episodes": len(records), "metrics": csv_path, "model": model_path}))
    return EXIT_OK


def _cmd_eval(args) -> int:
    cfg = _load_config(args)
    if args.seed is not None:
        cfg.seed = args.seed
    net = QNetwork.load(args.model) if args.policy == "greedy" else None
    _, summary = harness.evaluate(net, cfg, args.episodes, policy=args.policy)
    print(json.dumps(summary))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    graph = topology.build(args.topology)
    circuit = load_circuit(args.circuit)
    with open(args.placement, encoding="utf-8") as fh:
        placement = {int(q): int(v) for q, v in json.load(fh).items()}
    cfg = EnvConfig(p_gen=1.0, deadline=args.deadline, g_max=max(len(circuit.gates), 1))
    answer = oracle.min_stops(graph, circuit, placement, cfg)
    if answer is None:
        print(json.dumps({"stops": None, "actions": None}))
        return EXIT_OK
    stops, actions = answer
    table = ActionTable(graph)
    print(json.dumps({"stops": stops, "actions": actions,
                      "decoded": [table.describe(a) for a in actions]}))
    return EXIT_OK


def _cmd_map(args) -> int:
    cfg = _load_config(args)
    circuit = load_circuit(args.circuit)
    net = QNetwork.load(args.model)
    placement, warning = harness.initial_map(circuit, net, cfg)
    print(json.dumps({"placement": placement, "deadline_warning": warning}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dqcroute",
                                     description="Distributed-QPU circuit compilation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train an agent, writing metrics CSV and model JSON")
    p_train.add_argument("--config", help="TOML experiment config")
    p_train.add_argument("--preset", help=f"named preset: {', '.join(sorted(harness.PRESETS))}")
    p_train.add_argument("--out", help="output directory")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--episodes", type=int, default=None,
                         help="override the configured episode count")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a saved model (or the random baseline)")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--config", help="TOML experiment config")
    p_eval.add_argument("--preset", help="named preset")
    p_eval.add_argument("--episodes", type=int, required=True)
    p_eval.add_argument("--policy", choices=("greedy", "random"), default="greedy")
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.set_defaults(func=_cmd_eval)

    p_oracle = sub.add_parser("oracle", help="exact minimal stop count on a tiny instance")
    p_oracle.add_argument("--topology", required=True,
                          help="guadalupe | line:<n> | file:<path>")
    p_oracle.add_argument("--circuit", required=True, help="circuit JSON file")
    p_oracle.add_argument("--placement", required=True,
                          help="JSON file mapping logical qubit -> node")
    p_oracle.add_argument("--deadline", type=int, default=200)
    p_oracle.set_defaults(func=_cmd_oracle)

    p_map = sub.add_parser("map", help="reverse-circuit initial qubit mapping")
    p_map.add_argument("--circuit", required=True)
    p_map.add_argument("--model", required=True)
    p_map.add_argument("--config", help="TOML experiment config")
    p_map.add_argument("--preset", help="named preset")
    p_map.set_defaults(func=_cmd_map)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
