"""Command-line entry point ``sim``.

Subcommands::

    sim run --config scenario.json --out results.csv [--seed N] [--threads K]
    sim codebook build --config build.json [--out codebook.json]
    sim codebook inspect --config codebook.json
    sim packing --nt 4 --m 2 --n 4 --theta 0.8 --trials 20000 --out root.json [--seed N]
    sim preset fig3-mi|fig3-ber|fig4 --out scenario.json

A codebook build config holds ``model`` (same layout as in scenarios), ``m``,
``b``, ``beta`` and optionally ``n_rvq``, ``policy``, ``rho``, ``seed``,
``out`` and either ``root_file`` or ``root`` = ``{"n", "theta", "trials"}``.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import grassmann as gm
from .codebook import build_codebook, codebook_to_dict, load_codebook, pa_gain_ratio
from .errors import LimfeedError
from .harness import load_scenario, preset_model, run, scenario_fig3, scenario_fig4, scenario_to_dict
from .channel import model_from_dict
from .numerics import make_rng

PRESETS = {
    "fig3-mi": lambda: scenario_fig3("mi"),
    "fig3-ber": lambda: scenario_fig3("ber"),
    "fig4": scenario_fig4,
}


def _write_json(obj, path: str | None, indent: int | None = None) -> None:
    text = json.dumps(obj, indent=indent)
    if path is None or path == "-":
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _cmd_run(args) -> int:
    scenario = load_scenario(args.config)
    if args.seed is not None:
        scenario.seed = args.seed
    table = run(scenario, threads=args.threads)
    with open(args.out, "w", newline="") as fh:
        fh.write(table.to_csv())
    return 0


def _build_from_config(cfg: dict):
    model = cfg["model"]
    model = preset_model(model) if isinstance(model, str) else model_from_dict(model)
    m = int(cfg["m"])
    seed = int(cfg.get("seed", 0))
    rng_root, rng_rvq = (make_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    if "root_file" in cfg:
        root = gm.load_codeset(cfg["root_file"])
    else:
        r = cfg.get("root", {})
        root = gm.make_root_codeset(
            rng_root, model.n_t, m, int(r.get("n", 4)), float(r.get("theta", 0.8)), int(r.get("trials", 20000))
        )
    return build_codebook(
        model, m, int(cfg["b"]), float(cfg["beta"]), root,
        cfg.get("policy", "uniform"), float(cfg.get("rho", 1.0)), rng_rvq, n_rvq=int(cfg.get("n_rvq", 0)),
    )


def _cmd_codebook(args) -> int:
    if args.action == "build":
        with open(args.config) as fh:
            cfg = json.load(fh)
        cb = _build_from_config(cfg)
        _write_json(codebook_to_dict(cb), args.out or cfg.get("out"))
        return 0
    cb = load_codebook(args.config)
    words = cb.codewords
    print(f"b = {cb.b}, codewords = {len(words)}, N_t = {words.shape[1]}, M = {words.shape[2]}")
    print("power = " + ", ".join(f"{p:.6g}" for p in cb.power))
    print(f"{'index':>5}  {'tag':<12} {'gain_ratio':>10}")
    for i, (tag, w) in enumerate(zip(cb.tags, words)):
        print(f"{i:>5}  {tag:<12} {pa_gain_ratio(w):>10.4g}")
    counts: dict[str, int] = {}
    for tag in cb.tags:
        key = tag.split(":")[0]
        counts[key] = counts.get(key, 0) + 1
    print("provenance: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    if len(words) > 1:
        print(f"min pairwise distance = {gm.min_dist(words):.6g}")
    return 0


def _cmd_packing(args) -> int:
    cs = gm.make_root_codeset(make_rng(args.seed), args.nt, args.m, args.n, args.theta, args.trials)
    _write_json(gm.codeset_to_dict(cs), args.out)
    print(f"gamma = {cs.gamma:.6g}, radius = {cs.radius():.6g}", file=sys.stderr)
    return 0


def _cmd_preset(args) -> int:
    _write_json(scenario_to_dict(PRESETS[args.name]()), args.out, indent=2)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description="Limited-feedback precoding simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write a CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("codebook", help="build or inspect a codebook")
    p.add_argument("action", choices=("build", "inspect"))
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_codebook)

    p = sub.add_parser("packing", help="generate a root codeset")
    p.add_argument("--nt", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_packing)

    p = sub.add_parser("preset", help="write a preset scenario config")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_preset)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (LimfeedError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
