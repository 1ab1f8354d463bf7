"""Experiment harness: seeded runs, CSV/JSONL artifacts, JSON summaries.

Every command requires a seed (flag or config file) so that artifact
files are byte-reproducible; the exceptions are wall-clock columns in
the benchmark output, which necessarily vary between runs.  A summary
is printed to stdout as a single JSON object.  Exit status 1 means an
internal consistency check failed, 2 a usage error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
import time
from fractions import Fraction

import numpy as np

from .chain import (
    _validate_state,
    is_unit_ball,
    iter_trajectory,
    run_regenerations,
    stationary_estimate,
)
from .geometry import Norm, NormedSpace, box_body, unit_ball_body
from .limits import (
    growth_constant,
    growth_ratio_table,
    sample_leftmost_lengths,
    sample_limit_sums,
    tail_comparison_grid,
)
from .svg import write_trajectory_svg
from .vptree import VpTree, brute_force_nearest


class CheckFailure(RuntimeError):
    """An internal consistency check failed; payload goes to stderr."""

    def __init__(self, payload: dict):
        super().__init__(payload.get("reason", "check failed"))
        self.payload = payload


def _parse_tau(text: str) -> float:
    # accepts "4/7" as well as "0.5715"
    return float(Fraction(text))


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t)


def _parse_norms(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


_COERCERS = {
    "seed": int, "dim": int, "steps": int, "blocks": int, "n": int,
    "draws": int, "replicas": int, "queries": int, "pool": int,
    "level": int, "panels": int, "trees": int,
    "tau": _parse_tau, "box_half_width": float,
    "ns": _parse_ints, "dims": _parse_ints,
    "xs": _parse_floats, "shifts": _parse_ints,
    "norm": str, "norms": _parse_norms, "start": str,
    "out": str, "svg": str,
}

_DEFAULTS = {
    "chain-run": {"dim": 2, "norm": "l2", "tau": 4 / 7, "steps": 40,
                  "panels": 20, "svg": None, "out": None},
    "regen-stats": {"dim": 2, "norm": "l2", "tau": 4 / 7, "blocks": 200,
                    "out": None},
    "lln": {"dim": 1, "norm": "linf", "tau": 0.5, "ns": (10**3, 10**4, 10**5),
            "replicas": 100, "start": "box", "box_half_width": 1.0,
            "out": None},
    "duality": {"dim": 2, "norm": "l2", "tau": 4 / 7, "n": 200, "draws": 500,
                "trees": 0, "out": None},
    "nn-bench": {"dims": (2, 3), "norms": ("l1", "l2", "linf"), "tau": 4 / 7,
                 "n": 10**4, "queries": 10**3, "out": None},
    "height-ratio": {"dim": 2, "norm": "l2", "tau": 4 / 7,
                     "ns": (10**2, 10**3, 10**4), "out": None},
    "theorem2": {"dim": 2, "norm": "l2", "tau": 4 / 7, "level": 8,
                 "xs": (0.5, 1.0, 2.0), "shifts": (-1, 0, 1), "pool": 2000,
                 "replicas": 2000, "out": None},
}


def _space(opts) -> NormedSpace:
    return NormedSpace(opts["dim"], Norm.coerce(opts["norm"]))


def _start_body(space: NormedSpace, opts):
    if opts.get("start", "ball") == "box":
        return box_body(space, opts["box_half_width"])
    return unit_ball_body(space)


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: str, opts: dict, fieldnames: list[str], rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key in sorted(opts):
            if key != "out" and opts[key] is not None:
                fh.write(f"# {key} = {opts[key]}\n")
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


# -- commands -----------------------------------------------------------------


def _cmd_chain_run(opts) -> dict:
    space = _space(opts)
    rng = np.random.default_rng(opts["seed"])
    steps = list(iter_trajectory(space, opts["tau"], opts["steps"], rng))
    violations = sum(_validate_state(s.state.body, opts["tau"], s.state.step)
                     for s in steps)
    if violations:
        raise CheckFailure({"reason": "state invariant violations",
                            "count": violations})
    if opts["out"]:
        with open(opts["out"], "w", encoding="utf-8") as fh:
            for s in steps:
                rec = {
                    "step": s.state.step,
                    "u": None if s.u is None else [float(v) for v in s.u],
                    "balls": [{"c": [float(v) for v in b.center],
                               "r": b.radius} for b in s.state.body.balls],
                    "regen": s.state.step > 0 and is_unit_ball(s.state),
                }
                if s.state.body.box is not None:
                    box = s.state.body.box
                    rec["box"] = {"c": [float(v) for v in box.center],
                                  "hw": box.half_width}
                fh.write(json.dumps(rec) + "\n")
    if opts["svg"]:
        write_trajectory_svg(opts["svg"], steps[:opts["panels"]], opts["tau"])
    final = steps[-1].state
    return {"steps": final.step, "regens": final.regen_count,
            "final_ball_count": len(final.body.balls),
            "last_regen_step": final.last_regen_step}


def _cmd_regen_stats(opts) -> dict:
    space = _space(opts)
    rng = np.random.default_rng(opts["seed"])
    stats = run_regenerations(space, opts["tau"], opts["blocks"], rng,
                              validate=True)
    if stats.violations:
        raise CheckFailure({"reason": "state invariant violations",
                            "count": stats.violations})
    rows = []
    for name in sorted(stats.functional_sums):
        est, se = stationary_estimate(stats, name)
        rows.append([name, est, se])
    if opts["out"]:
        _write_csv(opts["out"], opts, ["functional", "estimate", "std_error"],
                   rows)
    returns = np.asarray(stats.return_times)
    return {"blocks": int(len(returns)),
            "mean_return_time": float(returns.mean()),
            "states_seen": stats.states_seen,
            "estimates": {r[0]: r[1] for r in rows}}


def _cmd_lln(opts) -> dict:
    space = _space(opts)
    rng = np.random.default_rng(opts["seed"])
    rows = growth_ratio_table(space, opts["tau"], opts["ns"], opts["replicas"],
                              rng, body=_start_body(space, opts))
    target = growth_constant(space.dim, opts["tau"])
    if opts["out"]:
        _write_csv(opts["out"], opts,
                   ["n", "mean_ratio", "se_ratio", "target"],
                   [[r["n"], r["mean_ratio"], r["se_ratio"], r["target"]]
                    for r in rows])
    devs = [abs(r["mean_ratio"] - target) for r in rows]
    return {"target": target,
            "final_mean_ratio": rows[-1]["mean_ratio"],
            "final_rel_error": devs[-1] / target,
            "monotone_toward_target": all(b <= a for a, b in zip(devs, devs[1:]))}


def _cmd_duality(opts) -> dict:
    space = _space(opts)
    rng = np.random.default_rng(opts["seed"])
    lengths = sample_leftmost_lengths(space, opts["tau"], opts["n"],
                                      opts["draws"], rng)
    if opts["out"]:
        _write_csv(opts["out"], opts, ["draw", "length"],
                   [[i, int(v)] for i, v in enumerate(lengths)])
    summary = {"n": opts["n"], "draws": opts["draws"],
               "mean_length": float(lengths.mean())}
    if opts["trees"]:
        direct = np.empty(opts["trees"], dtype=np.int64)
        for i in range(opts["trees"]):
            tree = VpTree(space, opts["tau"])
            tree.insert_many(space.sample_unit_ball(rng, opts["n"]))
            direct[i] = tree.leftmost_path_length()
        from scipy import stats as sps
        summary["tree_mean_length"] = float(direct.mean())
        summary["ks_pvalue"] = float(sps.ks_2samp(lengths, direct).pvalue)
    return summary


def _cmd_nn_bench(opts) -> dict:
    rng = np.random.default_rng(opts["seed"])
    rows = []
    mismatches_total = 0
    for dim in opts["dims"]:
        for norm in opts["norms"]:
            space = NormedSpace(dim, Norm.coerce(norm))
            pts = space.sample_unit_ball(rng, opts["n"])
            t0 = time.perf_counter()
            tree = VpTree(space, opts["tau"])
            tree.insert_many(pts)
            t1 = time.perf_counter()
            queries = space.sample_unit_ball(rng, opts["queries"])
            mism = 0
            visited = 0
            t2 = time.perf_counter()
            results = [tree.nearest(q) for q in queries]
            t3 = time.perf_counter()
            for q, res in zip(queries, results):
                visited += res.nodes_visited
                bi, bd = brute_force_nearest(pts, tree._code, q)
                if bi + 1 != res.index or bd != res.distance:
                    mism += 1
            mismatches_total += mism
            rows.append([dim, norm, opts["n"], opts["queries"],
                         t1 - t0, (t3 - t2) / len(queries) * 1e3,
                         visited / len(queries), mism])
    if opts["out"]:
        _write_csv(opts["out"], opts,
                   ["dim", "norm", "n", "queries", "build_seconds",
                    "query_ms_mean", "nodes_visited_mean", "mismatches"],
                   rows)
    if mismatches_total:
        raise CheckFailure({"reason": "tree/brute-force disagreement",
                            "mismatches": mismatches_total})
    return {"combos": len(rows), "mismatches": 0}


def _cmd_height_ratio(opts) -> dict:
    space = _space(opts)
    rng = np.random.default_rng(opts["seed"])
    rows = []
    for n in opts["ns"]:
        tree = VpTree(space, opts["tau"])
        tree.insert_many(space.sample_unit_ball(rng, n))
        h, l = tree.height(), tree.leftmost_path_length()
        rows.append([n, h, h / math.log(n), l, l / math.log(n)])
    if opts["out"]:
        _write_csv(opts["out"], opts,
                   ["n", "height", "height_over_log_n",
                    "leftmost", "leftmost_over_log_n"], rows)
    return {"rows": [{"n": r[0], "height": r[1], "leftmost": r[3]}
                     for r in rows]}


def _cmd_theorem2(opts) -> dict:
    space = _space(opts)
    rng = np.random.default_rng(opts["seed"])
    pool = sample_limit_sums(space, opts["tau"], opts["pool"], rng)
    comps = tail_comparison_grid(space, opts["tau"], opts["level"], opts["xs"],
                                 opts["shifts"], pool, rng,
                                 n_length_draws=opts["replicas"])
    rows = [[c.x, c.shift, c.n_points, c.threshold,
             c.length_ci[0], c.length_ci[1], c.limit_ci[0], c.limit_ci[1],
             c.overlap] for c in comps]
    if opts["out"]:
        _write_csv(opts["out"], opts,
                   ["x", "shift", "n_points", "threshold", "length_ci_low",
                    "length_ci_high", "limit_ci_low", "limit_ci_high",
                    "overlap"], rows)
    return {"grid_points": len(comps),
            "all_overlap": all(c.overlap for c in comps)}


_COMMANDS = {
    "chain-run": _cmd_chain_run,
    "regen-stats": _cmd_regen_stats,
    "lln": _cmd_lln,
    "duality": _cmd_duality,
    "nn-bench": _cmd_nn_bench,
    "height-ratio": _cmd_height_ratio,
    "theorem2": _cmd_theorem2,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vpchain",
        description="Seeded experiments on exponentially-thresholded "
                    "vantage-point trees and their set-valued chain.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, *flags):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="INI file with option defaults")
        p.add_argument("--seed", type=int, help="RNG seed (required here or in config)")
        p.add_argument("--out", help="CSV/JSONL output path")
        for flag in flags:
            key = flag.lstrip("-").replace("-", "_")
            p.add_argument(flag, type=str, dest=key)
        return p

    add("chain-run", "run one trajectory, optionally dumping JSONL and SVG",
        "--dim", "--norm", "--tau", "--steps", "--panels", "--svg")
    add("regen-stats", "regenerative estimates of stationary functionals",
        "--dim", "--norm", "--tau", "--blocks")
    add("lln", "length/log(n) table against its constant limit",
        "--dim", "--norm", "--tau", "--ns", "--replicas", "--start",
        "--box-half-width")
    add("duality", "leftmost-path lengths sampled via attach epochs",
        "--dim", "--norm", "--tau", "--n", "--draws", "--trees")
    add("nn-bench", "nearest-neighbor exactness and timing benchmark",
        "--dims", "--norms", "--tau", "--n", "--queries")
    add("height-ratio", "tree height and leftmost length versus log(n)",
        "--dim", "--norm", "--tau", "--ns")
    add("theorem2", "tail comparison grid between lengths and the limit sum",
        "--dim", "--norm", "--tau", "--level", "--xs", "--shifts", "--pool",
        "--replicas")
    return parser


def _merge(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    cfg = configparser.ConfigParser()
    if args.config:
        if not cfg.read(args.config):
            parser.error(f"cannot read config file {args.config}")
    opts = dict(_DEFAULTS[args.command])
    opts["seed"] = None
    for section in ("defaults", args.command):
        if cfg.has_section(section):
            for key, raw in cfg.items(section):
                key = key.replace("-", "_")
                if key not in _COERCERS:
                    parser.error(f"unknown config option {key!r}")
                opts[key] = _COERCERS[key](raw)
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        opts[key] = _COERCERS[key](value) if isinstance(value, str) else value
    if opts.get("seed") is None:
        parser.error("a seed is required (--seed or config)")
    return opts


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    opts = _merge(args, parser)
    try:
        summary = _COMMANDS[args.command](opts)
    except ValueError as exc:
        parser.error(str(exc))
    except CheckFailure as exc:
        json.dump({"command": args.command, "ok": False, **exc.payload},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1
    summary = {"command": args.command, "ok": True, "seed": opts["seed"],
               **summary}
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
