"""Command-line experiment runner.

    dmst run --gen random --n 64 --m 128 --algo opt --seeds 1,2,3 --verify
    dmst sweep --gen path --sizes 64,256,1024 --algo opt --seeds 1,2,3
    dmst sweep --gen random --n 256 --ms 512,1024,2048,4096 --algo opt
    dmst gen --gen hard --p 4 --L 8 --D 32 --out hard.txt
    dmst verify-cover --gen grid --rows 12 --cols 12 --W 3

Records are JSON lines; sweeps write CSV.  Files go to ``--out`` or, when
that is missing, to the directory named by ``DMST_OUT_DIR``.  Exit codes:
0 success, 1 verification failure or timeout, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
from pathlib import Path
import statistics
import sys
import time

import numpy as np

from . import graph as gm
from .cover import compute_cover, verify_cover
from .ghs import ghs_classic
from .lbgraphs import LowerBoundParams, build_hard_graph
from .opt import AlgoConfig, run_opt_mst
from .oracle import kruskal
from .sim import ProtocolViolation, RunMetrics, SimulationTimeout

SCHEMA_VERSION = 1
OUT_ENV = "DMST_OUT_DIR"
ALGOS = ("opt", "ghs", "kruskal")
FAMILIES = ("random", "path", "grid", "complete", "caterpillar", "banded", "hard")


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated integer list: {text!r}")
    return out


def build_instance(args, n: int | None = None, m: int | None = None, seed: int = 0):
    """Returns (graph, descriptor dict) for the generator options in ``args``."""
    if getattr(args, "input", None):
        g = gm.load(args.input)
        return g, {"source": "file", "path": str(args.input)}
    fam = args.gen
    n = n if n is not None else args.n
    m = m if m is not None else args.m
    desc = {"source": "gen", "family": fam, "seed": seed}
    if fam == "random":
        if n is None:
            raise UsageError("--n is required for random graphs")
        m = m if m is not None else 2 * n
        g = gm.generate_random_connected(n, m, seed)
        desc.update(n=n, m=m)
    elif fam == "path":
        g = gm.generate_path(_need(n, "--n"), seed=seed)
        desc.update(n=n)
    elif fam == "grid":
        rows, cols = args.rows, args.cols
        if rows is None or cols is None:
            side = math.isqrt(_need(n, "--n or --rows/--cols"))
            rows, cols = side, max(1, _need(n, "--n") // side)
        g = gm.generate_grid(rows, cols, seed)
        desc.update(rows=rows, cols=cols)
    elif fam == "complete":
        g = gm.generate_complete(_need(n, "--n"), seed)
        desc.update(n=n)
    elif fam == "caterpillar":
        g = gm.generate_caterpillar(_need(n, "--n"), args.legs, seed)
        desc.update(spine=n, legs=args.legs)
    elif fam == "banded":
        n = _need(n, "--n")
        g = gm.generate_banded_path(n, args.band, m if m is not None else n // 2, seed)
        desc.update(n=n, band=args.band)
    elif fam == "hard":
        p = args.p or max(1, math.isqrt(n or 16))
        L = args.L or p
        D = args.D or (n or 16)
        params = LowerBoundParams(p, L, D, args.d_core, args.core_size or max(8, 2 * p), seed=seed)
        g = build_hard_graph(params)
        desc.update(params.to_dict())
    else:
        raise UsageError(f"unknown generator {fam!r}")
    return g, desc


def _need(v, flag):
    if v is None:
        raise UsageError(f"{flag} is required for this generator")
    return v


def run_algorithm(algo: str, g, seed: int, cfg: AlgoConfig):
    if algo == "opt":
        return run_opt_mst(g, cfg, seed)
    if algo == "ghs":
        return ghs_classic(g, seed, cfg.B)
    if algo == "kruskal":
        return kruskal(g), RunMetrics()
    raise UsageError(f"unknown algorithm {algo!r}")


def one_record(g, desc, algo, seed, cfg, verify, round_limit, diameter=None) -> dict:
    t0 = time.perf_counter()
    error = None
    try:
        res, metrics = run_algorithm(algo, g, seed, cfg)
    except (SimulationTimeout, ProtocolViolation) as exc:
        res, metrics, error = None, getattr(exc, "metrics", None) or RunMetrics(), str(exc)
    wall = time.perf_counter() - t0
    if error is None and round_limit is not None and metrics.rounds > round_limit:
        error = f"round limit {round_limit} exceeded ({metrics.rounds})"
    verified = None
    if verify and res is not None:
        verified = res.keys == kruskal(g).keys
    if diameter is None:
        diameter = int(gm.hop_diameter(g)) if g.n > 0 else 0
    return {
        "schema_version": SCHEMA_VERSION, "instance": desc, "algorithm": algo, "seed": seed,
        "n": g.n, "m": g.m, "D": diameter,
        "rounds": metrics.rounds, "messages_total": metrics.messages_total,
        "messages_by_tag": dict(sorted(metrics.messages_by_tag.items())),
        "mst_weight": res.total_weight if res is not None else None,
        "verified": verified, "error": error, "wall_clock": round(wall, 4),
    }


def _output_path(args, default_name: str) -> Path | None:
    if args.out:
        return Path(args.out)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env) / default_name
    return None


def _failed(rec) -> bool:
    return rec["error"] is not None or rec["verified"] is False


def cmd_run(args) -> int:
    seeds = _int_list(args.seeds)
    if not seeds:
        raise UsageError("at least one seed is required")
    cfg = AlgoConfig(B=args.B)
    records = []
    for seed in seeds:
        gseed = args.graph_seed if args.graph_seed is not None else seed
        g, desc = build_instance(args, seed=gseed)
        rec = one_record(g, desc, args.algo, seed, cfg, args.verify, args.round_limit)
        records.append(rec)
        status = "FAIL" if _failed(rec) else ("ok" if rec["verified"] else "done")
        print(f"{args.algo} seed={seed} n={rec['n']} m={rec['m']} D={rec['D']} rounds={rec['rounds']} "
              f"messages={rec['messages_total']} weight={rec['mst_weight']} {status}")
    path = _output_path(args, f"run-{args.algo}.jsonl")
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return 1 if any(_failed(r) for r in records) else 0


def loglog_slope(xs, ys) -> float | None:
    pts = [(math.log(x), math.log(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(pts) < 2:
        return None
    a = np.array(pts)
    return float(np.polyfit(a[:, 0], a[:, 1], 1)[0])


CSV_FIELDS = ["n", "m", "D", "median_rounds", "median_messages", "runs", "failures"]


def cmd_sweep(args) -> int:
    seeds = _int_list(args.seeds)
    if args.ms:
        points = [(args.n, m) for m in _int_list(args.ms)]
        if args.n is None:
            raise UsageError("--ms needs a fixed --n")
    else:
        points = [(n, None) for n in _int_list(args.sizes or "")]
    if len(points) < 3:
        raise UsageError("a sweep needs at least 3 sizes")
    if not seeds:
        raise UsageError("at least one seed is required")
    cfg = AlgoConfig(B=args.B)
    path = _output_path(args, f"sweep-{args.gen}-{args.algo}.csv")
    rows, records, aborted = [], [], None
    for n, m in points:
        recs = []
        for seed in seeds:
            g, desc = build_instance(args, n=n, m=m, seed=seed)
            rec = one_record(g, desc, args.algo, seed, cfg, args.verify, args.round_limit)
            recs.append(rec)
            if _failed(rec):
                aborted = f"run failed at n={rec['n']} m={rec['m']} seed={seed}: {rec['error'] or 'not verified'}"
                break
        records.extend(recs)
        ok = [r for r in recs if not _failed(r)]
        if ok:
            rows.append({"n": ok[0]["n"], "m": statistics.median(r["m"] for r in ok),
                         "D": statistics.median(r["D"] for r in ok),
                         "median_rounds": statistics.median(r["rounds"] for r in ok),
                         "median_messages": statistics.median(r["messages_total"] for r in ok),
                         "runs": len(recs), "failures": len(recs) - len(ok)})
            print(",".join(str(rows[-1][k]) for k in CSV_FIELDS))
        if aborted:
            break
    slopes = {
        "messages_vs_m": loglog_slope([r["m"] for r in rows], [r["median_messages"] for r in rows]),
        "rounds_vs_D_plus_sqrt_n": loglog_slope([r["D"] + math.sqrt(r["n"]) for r in rows],
                                                [r["median_rounds"] for r in rows]),
    }
    print(json.dumps({"slopes": slopes}))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
            w.writeheader()
            w.writerows(rows)
            if aborted:
                fh.write(f"# partial: {aborted}\n")
        with open(path.with_suffix(".jsonl"), "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
            fh.write(json.dumps({"schema_version": SCHEMA_VERSION, "slopes": slopes,
                                 "partial": aborted}, sort_keys=True) + "\n")
    if aborted:
        print(f"sweep aborted: {aborted}", file=sys.stderr)
        return 1
    return 0


def cmd_gen(args) -> int:
    g, desc = build_instance(args, seed=args.seed)
    path = _output_path(args, f"{args.gen}.txt")
    if path is None:
        sys.stdout.write(gm.dumps(g))
        return 0
    path.parent.mkdir(parents=True, exist_ok=True)
    gm.save(g, path)
    with open(path.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump({"schema_version": SCHEMA_VERSION, **desc, "n": g.n, "m": g.m}, fh, sort_keys=True)
    print(f"wrote {path} (n={g.n}, m={g.m})")
    return 0


def cmd_verify_cover(args) -> int:
    if args.W < 1:
        raise UsageError("--W must be at least 1")
    g, desc = build_instance(args, seed=args.seed)
    cover, metrics = compute_cover(g, args.W, seed=args.seed, kappa=args.kappa)
    rep = verify_cover(cover, g, c_sparse=args.c_sparse)
    out = {"schema_version": SCHEMA_VERSION, "instance": desc, "W": args.W, "kappa": cover.kappa,
           "clusters": len(cover.clusters), "ok": rep.ok, "max_depth": rep.max_depth,
           "depth_bound": rep.depth_bound, "max_membership": rep.max_membership,
           "sparsity_bound": rep.sparsity_bound, "problems": rep.problems[:20],
           "rounds": metrics.rounds, "messages_total": metrics.messages_total}
    print(json.dumps(out, sort_keys=True))
    path = _output_path(args, "cover.json")
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(cover.to_json(), encoding="utf-8")
    return 0 if rep.ok else 1


def _add_instance_args(p):
    p.add_argument("--gen", choices=FAMILIES, default="random")
    p.add_argument("--input", help="graph file (overrides --gen)")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--legs", type=int, default=2)
    p.add_argument("--band", type=int, default=3)
    p.add_argument("--p", type=int, help="hard graph: number of slow paths")
    p.add_argument("--L", type=int, help="hard graph: slow path length")
    p.add_argument("--D", type=int, help="hard graph: highway length")
    p.add_argument("--d-core", dest="d_core", type=int, default=3)
    p.add_argument("--core-size", dest="core_size", type=int)
    p.add_argument("--out")


def _add_algo_args(p):
    p.add_argument("--algo", default="opt")
    p.add_argument("--seeds", default="0")
    p.add_argument("--round-limit", dest="round_limit", type=int)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--B", type=int, default=8)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dmst", description="Distributed MST experiments in a CONGEST simulator.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("run", help="run an algorithm on one instance per seed")
    _add_instance_args(p)
    _add_algo_args(p)
    p.add_argument("--graph-seed", dest="graph_seed", type=int)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", help="median metrics over a size sweep")
    _add_instance_args(p)
    _add_algo_args(p)
    p.add_argument("--sizes")
    p.add_argument("--ms")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("gen", help="write a generated graph")
    _add_instance_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)
    p = sub.add_parser("verify-cover", help="build a cover and check it")
    _add_instance_args(p)
    p.add_argument("--W", type=int, required=True)
    p.add_argument("--kappa", type=int)
    p.add_argument("--c-sparse", dest="c_sparse", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_cover)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "algo", "opt") not in ALGOS:
            raise UsageError(f"unknown algorithm {args.algo!r} (choose from {', '.join(ALGOS)})")
        return args.func(args)
    except (UsageError, gm.GraphParameterError, gm.GraphStructureError, OSError) as exc:
        print(f"dmst: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
