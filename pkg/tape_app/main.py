import argparse
import json
import sys
from typing import Callable, Dict, List, Optional, Tuple

from .commands import (cmd_ablate, cmd_build_features, cmd_enrich, cmd_make_synthetic, cmd_prompt_sweep,
                       cmd_train_eval)
from .config import ExperimentConfig, check_paths, config_hash, load_config, parse_overrides, write_run_record
from .errors import TapeError
from .logging_config import get_logger, log_error, setup_logging

logger = get_logger(__name__)

# subcommand -> (handler, planned stages)
COMMANDS: Dict[str, Tuple[Callable, List[str]]] = {
    "enrich": (cmd_enrich, ["enrich"]),
    "build-features": (cmd_build_features, ["enrich", "features"]),
    "train": (cmd_train_eval, ["enrich", "features", "train", "evaluate"]),
    "ablate": (cmd_ablate, ["enrich", "features", "train", "evaluate", "ablate"]),
    "prompt-sweep": (cmd_prompt_sweep, ["prompt-sweep"]),
    "make-synthetic": (cmd_make_synthetic, ["make-synthetic"]),
}


def _seed_list(text: str) -> List[int]:
    try:
        seeds = [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed list must be comma-separated integers, got {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--mock", action="store_true", help="answer LLM queries from the seeded offline oracle")
    common.add_argument("--mock-accuracy", type=float, help="oracle top-1 accuracy in [0, 1]")
    common.add_argument("--seed", type=_seed_list, help="comma-separated seed list, e.g. 0,1,2,3")
    common.add_argument("--out", help="run (or dataset) output directory")
    common.add_argument("--dry-run", action="store_true", help="print the resolved config and planned stages")

    parser = argparse.ArgumentParser(
        prog="tape",
        description="LLM-enriched node features for text-attributed graphs. "
                    "Any config key can be overridden as --section.key value.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(args: argparse.Namespace, extra: List[str]) -> ExperimentConfig:
    overrides = parse_overrides(extra)
    if args.mock or args.mock_accuracy is not None:
        overrides.append(("mock.enabled", True))
    if args.mock_accuracy is not None:
        overrides.append(("mock.top1_accuracy", args.mock_accuracy))
    if args.seed:
        overrides.append(("experiment.seeds", args.seed))
    if args.out:
        overrides.append(("experiment.out_dir", args.out))
    if args.command == "make-synthetic":
        overrides.append(("dataset.synthetic", True))
    return load_config(args.config, overrides)


def _summary(command: str, result) -> str:
    if command == "enrich":
        return (f"enriched {len(result.records)} nodes: {result.cache_hits} cache hits, "
                f"{result.network_calls} network calls, fallback rate {result.summary['fallback_rate']:.3f}")
    if command == "build-features":
        return "\n".join(str(p) for p in result)
    if command == "train":
        return (f"ensemble test accuracy {result.ensemble.test.render()} "
                + " ".join(f"{s}={m.test.mean:.4f}" for s, m in result.per_source.items()))
    if command == "ablate":
        return "\n".join(f"-{','.join(r.left_out)}: {r.ensemble.test.mean:.4f} ({r.deltas['ensemble_test']:+.4f})"
                         for r in result.rows)
    if command == "prompt-sweep":
        return "\n".join(f"{r.template_id}: {r.accuracy:.4f}" for r in result.rows)
    return str(result)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    handler, stages = COMMANDS[args.command]
    try:
        config = resolve_config(args, extra)
        if args.dry_run:
            print(json.dumps({
                "command": args.command,
                "config_hash": config_hash(config),
                "stages": stages,
                "config": config.model_dump(mode="json"),
            }, indent=2, sort_keys=True))
            return 0

        setup_logging(str(config.out_dir / "logs"), config.experiment.log_level)
        check_paths(config)
        if args.command != "make-synthetic":
            write_run_record(config, stages)
        result = handler(config)
    except TapeError as e:
        log_error(logger, e, e.context, args.command)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    print(_summary(args.command, result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
