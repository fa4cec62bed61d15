"""Command-line interface.

Subcommands:
  serve            run the rollout server (stdio, tcp:HOST:PORT, http:HOST:PORT)
  rollout          run scripted-policy episodes and write trajectory JSONL
  metrics          summarize a trajectory JSONL file
  rank             OOD ranking scores from a results JSON
  augment-preview  before/after view of one augmented observation
  grpo-check       advantages/objective/KL for a JSON batch
  catalog          export a generated shop catalog as JSON

When --seed is omitted, the ENVFORGE_SEED environment variable (default 0)
supplies it, which keeps smoke tests one-line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .augment import AugmentSpec
from .core import read_trajectories, write_trajectories
from .envs import DEFAULT_MAX_STEPS, ENV_IDS, default_config, make_adapter
from .grpo import GroupBatch, GrpoConfig, clipped_surrogate
from .metrics import ResultMatrix, avg_char_count, avg_traj_length, ood_ranking, success_rate
from .rollout import PolicySpec, run_suite
from .service import ProtocolHandler, SessionManager, jsonl_recorder, serve_stdio, serve_tcp


def _default_seed() -> int:
    return int(os.environ.get("ENVFORGE_SEED", "0"))


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _augment_from_args(args) -> AugmentSpec | None:
    if args.augment_epsilon is None:
        return None
    return AugmentSpec(
        epsilon=args.augment_epsilon,
        prob=args.augment_prob,
        alpha=args.augment_alpha,
        seed=args.augment_seed,
    )


def cmd_serve(args) -> int:
    recorder = jsonl_recorder(args.record) if args.record else None
    manager = SessionManager(max_sessions=args.max_sessions, recorder=recorder)
    if args.transport == "stdio":
        serve_stdio(ProtocolHandler(manager))
        return 0
    kind, _, rest = args.transport.partition(":")
    if kind == "tcp":
        host, _, port = rest.rpartition(":")
        server = serve_tcp(host or "127.0.0.1", int(port), ProtocolHandler(manager))
        print(f"listening on tcp:{server.server_address[0]}:{server.server_address[1]}", flush=True)
        server.serve_forever()
        return 0
    if kind == "http":
        import uvicorn

        from .api import create_app

        host, _, port = rest.rpartition(":")
        uvicorn.run(create_app(manager), host=host or "127.0.0.1", port=int(port))
        return 0
    print(f"unknown transport {args.transport!r}", file=sys.stderr)
    return 2


def cmd_rollout(args) -> int:
    config = default_config(args.env, thinking_required=not args.no_thinking)
    policy = PolicySpec(kind=args.policy, emits_thinking=not args.no_thinking)
    trajectories, summary = run_suite(
        args.env,
        n_episodes=args.episodes,
        suite_seed=args.seed if args.seed is not None else _default_seed(),
        config=config,
        augment_spec=_augment_from_args(args),
        policy_spec=policy,
    )
    if args.out:
        write_trajectories(args.out, trajectories)
    _dump(summary)
    return 0


def cmd_metrics(args) -> int:
    trajectories = read_trajectories(args.infile)
    t_max = args.t_max
    if t_max is None:
        envs = {t.env_id for t in trajectories}
        t_max = max(DEFAULT_MAX_STEPS.get(e, 50) for e in envs) if envs else 50
    _dump(
        {
            "episodes": len(trajectories),
            "success_rate": success_rate(trajectories),
            "avg_char_count": avg_char_count(trajectories),
            "avg_traj_length": avg_traj_length(trajectories, t_max),
            "t_max": t_max,
        }
    )
    return 0


def cmd_rank(args) -> int:
    with open(args.infile, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    matrix = ResultMatrix.from_rows(data["rows"])
    result = ood_ranking(matrix, tie_threshold=args.tie_threshold)
    _dump(result)
    ordered = sorted(result, key=lambda t: (result[t]["score"], t))
    width = max(len(t) for t in result)
    print(f"{'train':<{width}}  score  " + "  ".join(matrix.cols), file=sys.stderr)
    for train in ordered:
        ranks = result[train]["ranks"]
        cells = "  ".join(f"{ranks.get(c, '-'):>{len(c)}}" for c in matrix.cols)
        print(f"{train:<{width}}  {result[train]['score']:>5}  {cells}", file=sys.stderr)
    return 0


def cmd_augment_preview(args) -> int:
    from .core import EpisodeSession

    seed = args.seed if args.seed is not None else _default_seed()
    spec = AugmentSpec(
        epsilon=args.epsilon, prob=1.0, alpha=args.augment_alpha, seed=args.augment_seed
    )
    adapter = make_adapter(args.env)
    session = EpisodeSession(adapter, default_config(args.env), seed, spec)
    obs = session.reset()
    _dump(
        {
            "env": args.env,
            "seed": seed,
            "epsilon": args.epsilon,
            "before": obs.stripped_text(),
            "after": obs.text,
            "injected_spans": [list(s) for s in obs.injected_spans],
        }
    )
    return 0


def cmd_grpo_check(args) -> int:
    with open(args.infile, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    batch = GroupBatch(
        returns=data["returns"],
        logp_current=data["logp_current"],
        logp_old=data["logp_old"],
        logp_ref=data["logp_ref"],
    )
    cfg = GrpoConfig(
        clip_range=data.get("clip_range", 0.2),
        kl_coeff=data.get("beta", 0.0),
        std_floor=data.get("std_floor", 1e-8),
    )
    _dump(clipped_surrogate(batch, cfg))
    return 0


def cmd_catalog(args) -> int:
    from .shop import catalog_to_dict, generate_catalog

    seed = args.seed if args.seed is not None else _default_seed()
    catalog = generate_catalog(seed, args.n_products)
    data = catalog_to_dict(catalog)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    else:
        _dump(data)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="envforge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"envforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the rollout server")
    p.add_argument("--transport", default="stdio", help="stdio | tcp:HOST:PORT | http:HOST:PORT")
    p.add_argument("--max-sessions", type=int, default=1024)
    p.add_argument("--record", help="append finished episodes to this JSONL file")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("rollout", help="run scripted episodes")
    p.add_argument("--env", required=True, choices=ENV_IDS)
    p.add_argument(
        "--policy",
        default="uniform_random",
        choices=[
            "sokoban_bfs",
            "sokoban_bfs_text",
            "sokoban_random",
            "house_greedy",
            "shop_greedy",
            "uniform_random",
        ],
    )
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--augment-epsilon", type=float, default=None)
    p.add_argument("--augment-prob", type=float, default=0.5)
    p.add_argument("--augment-alpha", type=float, default=0.5)
    p.add_argument("--augment-seed", type=int, default=0)
    p.add_argument("--no-thinking", action="store_true")
    p.add_argument("--out", help="trajectory JSONL output path")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("metrics", help="summarize trajectory JSONL")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--t-max", type=int, default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("rank", help="OOD ranking from results JSON")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--tie-threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("augment-preview", help="inspect one augmented observation")
    p.add_argument("--env", required=True, choices=ENV_IDS)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--augment-alpha", type=float, default=0.5)
    p.add_argument("--augment-seed", type=int, default=0)
    p.set_defaults(func=cmd_augment_preview)

    p = sub.add_parser("grpo-check", help="objective arithmetic for a JSON batch")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_grpo_check)

    p = sub.add_parser("catalog", help="export a generated shop catalog")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-products", type=int, default=50)
    p.add_argument("--out")
    p.set_defaults(func=cmd_catalog)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
