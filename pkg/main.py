#!/usr/bin/env python3
"""
CompILE Imitation - Main Entry Point

Unsupervised segmentation of demonstration trajectories with a differentiable
segmentation auto-encoder. This script orchestrates dataset generation, training,
evaluation, segmentation, online rollouts and chart emission.

Architecture Overview:
    1. Data Layer: grid world / reacher instances, scripted demonstrators, JSONL datasets.
    2. Model Layer: CompILE recognition + decoder + termination networks, baselines.
    3. Training Layer: beta-scaled ELBO, Adam loop, checkpoints and loss curves.
    4. Evaluation Layer: discrete segmentation, reconstruction, online execution, metrics.
    5. Reporting Layer: report CSV/JSON, console tables, PNG charts.

Output Structure:
    gen-data   <out>.jsonl
    train      <ckpt>.pt, <ckpt>_loss.csv
    eval       <report>.csv, <report>.json
    segment    JSON segmentation report (stdout, or --out)
    plot       <dir>/<report>_metrics.{csv,png}, <dir>/<ckpt>_loss.{csv,png}

USAGE:
    python main.py gen-data --env grid --episodes 8 --tasks 3 --kind pickup --seed 0 --out d.jsonl
    python main.py train --data d.jsonl --model compile --segments 3 --latents 10 --out runs/model.pt
    python main.py eval --ckpt runs/model.pt --data test.jsonl --segments 3 --out runs/report.csv
    python main.py segment --ckpt runs/model.pt --data test.jsonl --episode 0
    python main.py rollout --ckpt runs/model.pt --data test.jsonl --episodes 32
    python main.py plot --report runs/report.csv --out runs/plots
    python main.py --test

Exit codes: 0 on success, 1 on a runtime failure, 2 on a command-line error.
"""
__version__ = "1.0.1"


import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np
from dotenv import load_dotenv

# Add src directory to path for relative imports
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))
from compile_imitation.baselines.surprisal import surprisal_segment, surprisal_train
from compile_imitation.baselines.vae_bc import vae_bc_config, vae_bc_execute, vae_bc_train
from compile_imitation.constants import (
    DEFAULT_BATCH,
    DEFAULT_BETA,
    DEFAULT_LR,
    DEFAULT_POISSON_RATE,
    DEFAULT_TEMPERATURE,
    GRID_SIZE,
    NUM_OBJECT_TYPES,
    NUM_OBJECTS,
    TRAIN_DEMO_CAP,
    WALL_KEEP_RATE,
)
from compile_imitation.data.dataset import load_dataset, write_dataset
from compile_imitation.envs.factory import EnvRegistry
from compile_imitation.envs.grid import GridConfig
from compile_imitation.envs.tasks import TaskKind
from compile_imitation.evaluation.metrics import compute_metrics
from compile_imitation.evaluation.reporting import format_report_table, report_frame, write_report
from compile_imitation.inference.online import execute_online
from compile_imitation.inference.segment import record_tensors, segment_discrete, segment_ids, segmentation_report
from compile_imitation.models.checkpoint import load_checkpoint
from compile_imitation.models.config import LatentKind, ModelKind, Readout, Supervision, TrainSettings
from compile_imitation.plotting.plotting_main import plot_report
from compile_imitation.training.trainer import config_for_records, train
from compile_imitation.utils.error_helpers import CompileError, ConfigError
from compile_imitation.utils.io import save_json
from compile_imitation.utils.logging import get_logger, setup_logging

logger = get_logger("compile_imitation.cli")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per pipeline stage."""
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="CompILE imitation - segmentation auto-encoder for demonstration trajectories",
        epilog="Examples:\n"
               "  python main.py gen-data --env grid --episodes 8 --tasks 3 --kind pickup --seed 0 --out d.jsonl\n"
               "  python main.py train --data d.jsonl --segments 3 --out runs/model.pt\n"
               "  python main.py eval --ckpt runs/model.pt --data test.jsonl --out runs/report.csv\n"
               "  python main.py --test                  # Run all tests",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--test", action="store_true", help="Run the test suite and exit.")
    parser.add_argument(
        "--log-level",
        type=str,
        default=None,
        help="Logging level (DEBUG, INFO, WARNING, ERROR). Default: $COMPILE_LOG or INFO.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    gen = sub.add_parser("gen-data", help="Generate a demonstration dataset (JSONL).")
    gen.add_argument("--env", choices=EnvRegistry.tags(), required=True)
    gen.add_argument("--episodes", type=int, required=True)
    gen.add_argument("--tasks", type=int, default=3, help="Tasks per episode (3 or 5 in the standard setups).")
    gen.add_argument("--kind", choices=[k.value for k in TaskKind], default=None, help="Default: pickup (grid), reach (reacher).")
    gen.add_argument("--seed", type=int, default=0, help="Seed of episode 0; episode i uses seed + i.")
    gen.add_argument("--cap", type=int, default=TRAIN_DEMO_CAP, help="Maximum demonstration length (42 train, 200 test).")
    gen.add_argument("--out", required=True)
    gen.add_argument("--grid-size", type=int, default=GRID_SIZE)
    gen.add_argument("--object-types", type=int, default=NUM_OBJECT_TYPES)
    gen.add_argument("--objects", type=int, default=NUM_OBJECTS)
    gen.add_argument("--wall-keep-rate", type=float, default=WALL_KEEP_RATE)
    gen.add_argument("--workers", type=int, default=1)

    tr = sub.add_parser("train", help="Train a model and write a checkpoint plus loss curve.")
    tr.add_argument("--data", required=True)
    tr.add_argument("--model", choices=[k.value for k in ModelKind], default=ModelKind.COMPILE.value)
    tr.add_argument("--segments", type=int, default=3)
    tr.add_argument("--latents", type=int, default=10)
    tr.add_argument("--latent-kind", choices=[k.value for k in LatentKind], default=LatentKind.CATEGORICAL.value)
    tr.add_argument("--readout", choices=[r.value for r in Readout], default=Readout.LAST_STEP.value)
    tr.add_argument("--beta", type=float, default=DEFAULT_BETA)
    tr.add_argument("--lambda", dest="poisson_rate", type=float, default=DEFAULT_POISSON_RATE)
    tr.add_argument("--temp", type=float, default=DEFAULT_TEMPERATURE)
    tr.add_argument("--anneal-to", type=float, default=None, help="Final temperature of linear annealing.")
    tr.add_argument("--supervision", choices=[s.value for s in Supervision], default=Supervision.NONE.value)
    tr.add_argument("--hidden", type=int, default=None)
    tr.add_argument("--termination-weight", type=float, default=1.0)
    tr.add_argument("--iters", type=int, default=1000)
    tr.add_argument("--lr", type=float, default=DEFAULT_LR)
    tr.add_argument("--batch", type=int, default=DEFAULT_BATCH)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--checkpoint-every", type=int, default=0)
    tr.add_argument("--log-every", type=int, default=100)
    tr.add_argument("--out", required=True)
    tr.add_argument("--replay", action="store_true", help="Replay every episode before training.")

    ev = sub.add_parser("eval", help="Evaluate a checkpoint and write the report CSV and JSON.")
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--segments", type=int, default=None, help="M at evaluation (default: trained M).")
    ev.add_argument("--out", required=True)
    ev.add_argument("--no-online", action="store_true", help="Skip online execution.")
    ev.add_argument("--replay", action="store_true", help="Replay every episode before evaluating.")

    seg = sub.add_parser("segment", help="Print the segmentation of one episode as JSON.")
    seg.add_argument("--ckpt", required=True)
    seg.add_argument("--episode", type=int, required=True)
    seg.add_argument("--data", default=None, help="Default: the training data named in the checkpoint.")
    seg.add_argument("--segments", type=int, default=None)
    seg.add_argument("--out", default=None)

    ro = sub.add_parser("rollout", help="Run online execution on dataset episodes.")
    ro.add_argument("--ckpt", required=True)
    ro.add_argument("--data", required=True)
    ro.add_argument("--episodes", type=int, default=None, help="First N episodes (default: all).")
    ro.add_argument("--segments", type=int, default=None)

    pl = sub.add_parser("plot", help="Write loss-curve and metric charts for a report.")
    pl.add_argument("--report", required=True)
    pl.add_argument("--out", required=True)
    return parser


def cmd_gen_data(args) -> List[str]:
    kind = args.kind or (TaskKind.REACH.value if args.env == "reacher" else TaskKind.PICKUP.value)
    if args.episodes < 1 or args.tasks < 1 or args.cap < 1:
        raise ConfigError("--episodes, --tasks and --cap must be positive")
    config = None
    if args.env == "grid":
        config = GridConfig(args.grid_size, args.object_types, args.objects, args.wall_keep_rate)
    path = write_dataset(args.env, args.episodes, args.tasks, kind, args.seed, args.cap, args.out, config, args.workers)
    return [path]


def cmd_train(args) -> List[str]:
    records = load_dataset(args.data, replay=args.replay)
    settings = TrainSettings(
        iterations=args.iters,
        batch_size=args.batch,
        lr=args.lr,
        seed=args.seed,
        checkpoint_every=args.checkpoint_every,
        log_every=args.log_every,
        anneal_to=args.anneal_to,
    )
    overrides = dict(
        num_segments=args.segments,
        num_latents=args.latents,
        latent_kind=args.latent_kind,
        readout=args.readout,
        beta=args.beta,
        poisson_rate=args.poisson_rate,
        temperature=args.temp,
        supervision=args.supervision,
        termination_weight=args.termination_weight,
    )
    if args.hidden is not None:
        overrides["hidden"] = args.hidden
    kind = ModelKind(args.model)
    metadata = {"data": os.path.abspath(args.data)}
    if kind == ModelKind.VAE_BC:
        obs_shape = config_for_records(records).obs_shape
        vae_overrides = {k: overrides[k] for k in ("beta", "temperature", "termination_weight", "readout")}
        vae_overrides.update({"hidden": overrides["hidden"]} if "hidden" in overrides else {})
        config = vae_bc_config(records[0].env, obs_shape, **vae_overrides)
        result = vae_bc_train(records, settings, config, args.out, metadata=metadata)
    elif kind == ModelKind.SURPRISAL:
        result = surprisal_train(records, config_for_records(records, **overrides), settings, args.out, metadata=metadata)
    else:
        result = train(config_for_records(records, **overrides), records, settings, args.out, metadata=metadata)
    return [result.checkpoint_path, result.curve_path]


def cmd_eval(args) -> List[str]:
    ckpt = load_checkpoint(args.ckpt)
    records = load_dataset(args.data, replay=args.replay)
    report = compute_metrics(ckpt.model, records, args.segments, ckpt.model_kind, online=not args.no_online)
    extra = {
        "checkpoint": os.path.abspath(args.ckpt),
        "data": os.path.abspath(args.data),
        "loss_curve": ckpt.metadata.get("loss_curve"),
    }
    paths = write_report(report, args.out, extra)
    print(format_report_table(report_frame(report)))
    return list(paths)


def _episode(records, index: int):
    if not 0 <= index < len(records):
        raise ConfigError(f"--episode {index} out of range (dataset has {len(records)} episodes)")
    return records[index]


def cmd_segment(args) -> List[str]:
    ckpt = load_checkpoint(args.ckpt)
    data = args.data or ckpt.metadata.get("data")
    if not data:
        raise ConfigError("checkpoint names no dataset; pass --data")
    record = _episode(load_dataset(data), args.episode)
    if record.env != ckpt.config.env:
        raise ConfigError(f"episode env '{record.env}' does not match model env '{ckpt.config.env}'")
    obs, actions = record_tensors(record)
    M = args.segments or ckpt.config.num_segments
    if ckpt.model_kind == ModelKind.SURPRISAL:
        boundaries = surprisal_segment(ckpt.model, obs, actions, M)
        report = {
            "boundaries": boundaries,
            "codes": [],
            "segment_ids": segment_ids(boundaries, len(actions)).tolist(),
        }
    else:
        if ckpt.model_kind == ModelKind.VAE_BC:
            M = 1
        seg = segment_discrete(ckpt.model, obs, actions, M)
        report = segmentation_report(seg, len(actions))
    report.update({"episode": args.episode, "seed": record.seed, "true_boundaries": list(record.boundaries)})
    if args.out:
        save_json(report, args.out)
        return [args.out]
    print(json.dumps(report))
    return []


def cmd_rollout(args) -> List[str]:
    ckpt = load_checkpoint(args.ckpt)
    if ckpt.model_kind == ModelKind.SURPRISAL:
        raise ConfigError("surprisal checkpoints have no policy to roll out")
    records = load_dataset(args.data)
    records = records[: args.episodes] if args.episodes else records
    if any(r.env != ckpt.config.env for r in records):
        raise ConfigError(f"dataset episodes must be '{ckpt.config.env}' episodes")
    rewards = []
    for record in records:
        if ckpt.model_kind == ModelKind.VAE_BC:
            rewards.append(vae_bc_execute(ckpt.model, record))
        else:
            rewards.append(execute_online(ckpt.model, record, num_segments=args.segments))
    print(f"online reward: {np.mean(rewards):.2f} ± {np.std(rewards):.2f} over {len(rewards)} episodes")
    return []


def cmd_plot(args) -> List[str]:
    if not os.path.exists(args.report):
        raise FileNotFoundError(f"Report not found: {args.report}")
    return plot_report(args.report, args.out)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "segment": cmd_segment,
    "rollout": cmd_rollout,
    "plot": cmd_plot,
}


def run_tests() -> int:
    import subprocess

    logger.info("Running test suite with pytest...")
    result = subprocess.run([sys.executable, "-m", "pytest"], check=False, cwd=os.path.dirname(os.path.abspath(__file__)))
    return result.returncode


def run_command(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv`` and run one subcommand.

    Returns:
        int: 0 on success, 1 on a runtime failure, 2 on a command-line error.
    """
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    setup_logging(args.log_level, force=args.log_level is not None)
    if args.test:
        return run_tests()
    if not args.command:
        parser.print_help()
        return 2
    try:
        written = COMMANDS[args.command](args)
    except (CompileError, FileNotFoundError, ValueError) as e:
        message = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"error: {message}", file=sys.stderr)
        return 1
    for path in written:
        if path:
            print(path)
    return 0


def main():
    """Main entry point; exits with the code of ``run_command``."""
    sys.exit(run_command())


if __name__ == "__main__":
    main()
