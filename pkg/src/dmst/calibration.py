"""Measured constants for the asymptotic bounds, pinned as regression limits.

``measure_*`` functions return the largest observed ratio of a quantity to
its bound shape over a suite.  ``python -m dmst.calibration OUT.json``
measures the calibration suites and writes the fixture that the tests
compare against (with 10% headroom).
"""
from __future__ import annotations

import json
import math
import sys

from . import graph as gm
from .cghs import controlled_ghs
from .cover import compute_cover
from .lbgraphs import LowerBoundParams, build_hard_graph
from .opt import run_opt_mst
from .verify import strong_diameter

CALIBRATION_NS = (16, 64, 256)
TOLERANCE = 1.10


def lg(n: int) -> float:
    return math.log2(max(n, 2))


def ghs_suite(n: int, seeds=(0, 1, 2)):
    side = max(1, math.isqrt(n))
    max_m = n * (n - 1) // 2
    for s in seeds:
        yield f"random-2n-{s}", gm.generate_random_connected(n, min(2 * n, max_m), s)
        yield f"random-4n-{s}", gm.generate_random_connected(n, min(4 * n, max_m), s)
        yield f"path-{s}", gm.generate_path(n, seed=s)
        yield f"grid-{s}", gm.generate_grid(side, n // side, s)
        yield f"caterpillar-{s}", gm.generate_caterpillar(max(1, n // 3), 2, s)


def measure_cghs(g) -> dict:
    forest, m = controlled_ghs(g)
    diam = max(strong_diameter(g, f.members) for f in forest.fragments.values())
    return {"fragments": len(forest.fragments), "diameter": diam,
            "diam_ratio": diam / math.sqrt(g.n),
            "msg_ratio": m.messages_total / (g.m * lg(g.n) + g.n * lg(g.n) ** 2)}


def cover_suite(n: int, seeds=(0, 1)):
    side = max(1, math.isqrt(n))
    for s in seeds:
        yield f"random-{s}", gm.generate_random_connected(n, min(3 * n, n * (n - 1) // 2), s)
        yield f"path-{s}", gm.generate_path(n, seed=s)
        yield f"grid-{s}", gm.generate_grid(side, n // side, s)


def measure_cover(g, W: int, seed: int = 0) -> dict:
    cover, m = compute_cover(g, W, seed=seed)
    k = cover.kappa
    shape = k * g.n ** (1.0 / k) * lg(g.n)
    depth = max((c.depth for c in cover.clusters), default=0)
    busiest = max(len(v) for v in cover.membership.values())
    return {"cover": cover,
            "cover_ratio": m.messages_total / max(1.0, g.m * shape),
            "depth_ratio": depth / (W * k),
            "sparse_ratio": busiest / shape}


def rounds_shape(g, D: int) -> float:
    return (D + math.sqrt(g.n)) * lg(g.n) ** 3


def measure_rounds(g, seed: int = 0) -> float:
    _, m = run_opt_mst(g, seed=seed)
    return m.rounds / rounds_shape(g, int(gm.hop_diameter(g)))


def measure_phase2_messages(g, seed: int = 0) -> tuple[float, float]:
    """Largest per-iteration (findlightest, findpath) message ratios."""
    trace: dict = {}
    run_opt_mst(g, seed=seed, trace=trace)
    fl = fp = 0.0
    shape = g.n * lg(g.n) ** 3
    for tags in trace.get("iteration_messages", {}).values():
        fl = max(fl, tags.get("findlightest", 0) / (g.m + shape))
        fp = max(fp, tags.get("findpath", 0) / shape)
    return fl, fp


HARD_PARAMS = [(p, L, D) for p in (2, 4, 8) for L in (2, 4, 8) for D in (8, 16, 32)]


def hard_excess(p: int, L: int, D: int, seed: int) -> int:
    g = build_hard_graph(LowerBoundParams(p, L, D, 3, max(8, 2 * p), seed=seed))
    return int(gm.hop_diameter(g)) - D


def calibrate() -> dict:
    out = {"c_ghs": 0.0, "c_msg": 0.0, "c_cover": 0.0, "c_depth": 0.0, "c_sparse": 0.0,
           "c_rounds": 0.0, "c_findlightest": 0.0, "c_findpath": 0.0, "c_dia": 0}
    for n in CALIBRATION_NS:
        for _, g in ghs_suite(n):
            r = measure_cghs(g)
            out["c_ghs"] = max(out["c_ghs"], r["diam_ratio"])
            out["c_msg"] = max(out["c_msg"], r["msg_ratio"])
        for _, g in cover_suite(n):
            for W in (1, 2, 4):
                r = measure_cover(g, W)
                for key, name in (("c_cover", "cover_ratio"), ("c_depth", "depth_ratio"),
                                  ("c_sparse", "sparse_ratio")):
                    out[key] = max(out[key], r[name])
    for n in (16, 32, 48):
        for s in (1, 2, 3):
            out["c_rounds"] = max(out["c_rounds"], measure_rounds(gm.generate_path(n, seed=s), s))
    for n in (64, 128):
        for s in (0, 1):
            fl, fp = measure_phase2_messages(gm.generate_path(n, seed=s), s)
            out["c_findlightest"] = max(out["c_findlightest"], fl)
            out["c_findpath"] = max(out["c_findpath"], fp)
    for p, L, D in HARD_PARAMS:
        out["c_dia"] = max(out["c_dia"], hard_excess(p, L, D, 0))
    out = {k: (round(v, 4) if isinstance(v, float) else v) for k, v in out.items()}
    out["tolerance"] = TOLERANCE
    out["kappa_rule"] = "ceil(log2 n)"
    out["suite_ns"] = list(CALIBRATION_NS)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    result = calibrate()
    text = json.dumps(result, indent=2, sort_keys=True)
    if argv:
        with open(argv[0], "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
