"""Algorithm constants and the closed-form round windows derived from them."""
from __future__ import annotations

from dataclasses import dataclass, field
import math

from .. import cghs
from ..cover import C_DEPTH, REP_FACTOR, default_kappa
from ..graph import ceil_log2


@dataclass(frozen=True)
class AlgoConfig:
    c1: float = 1.0                  # cover radius W_i = 6 * 2^(i+1) * c1 * sqrt(n)
    c2: float = 1.0                  # active iff fragment size < 2^i * c2 * sqrt(n)
    B: int = 8
    c_skip: float = 4.0              # skip the middle phase when D̃ <= c_skip * sqrt(n)
    cghs_extra_iterations: int = 1
    cover_rep_factor: float = REP_FACTOR
    slack: float = 4.0               # congestion slack = slack * sqrt(n) * log2(n)^2 rounds
    multipliers: dict = field(default_factory=dict)   # per-tag window multipliers
    d_estimate: int | None = None    # skip election-based estimation when given

    def __post_init__(self):
        if self.c1 < 1 or self.c2 < 1:
            raise ValueError("c1 and c2 must be at least 1")

    def mult(self, tag: str) -> float:
        return float(self.multipliers.get(tag, 1.0))


class Windows:
    """Round budgets every node can compute from n, D̃ and the config."""

    def __init__(self, n: int, d_est: int, cfg: AlgoConfig):
        self.n = n
        self.d_est = d_est
        self.cfg = cfg
        self.sqrt_n = math.sqrt(n)
        self.kappa = default_kappa(n)
        lg = math.log2(max(n, 2))
        self.slack = math.ceil(cfg.slack * self.sqrt_n * lg * lg)
        self.base_height = cghs.depth_bound(cghs.iteration_count(n, cfg.cghs_extra_iterations))
        self.bfs_height = d_est // 2
        self._height = {1: self.base_height}

    def phase2_last(self) -> int:
        """Last middle-phase iteration: ceil(log2(D̃ / sqrt n))."""
        return ceil_log2(self.d_est / self.sqrt_n) if self.d_est > 0 else 0

    def skip_middle(self) -> bool:
        return self.d_est <= self.cfg.c_skip * self.sqrt_n

    def radius(self, i: int) -> int:
        return math.ceil(6 * (1 << (i + 1)) * self.cfg.c1 * self.sqrt_n)

    def active_size(self, i: int) -> float:
        return (1 << i) * self.cfg.c2 * self.sqrt_n

    def cover_depth(self, k: int) -> int:
        W = self.radius(k)
        if W >= self.d_est:
            return self.bfs_height
        return C_DEPTH * W * self.kappa

    def route_len(self, i: int) -> int:
        return 2 * max((self.cover_depth(k) for k in range(2, i + 1)), default=0)

    def height(self, level: int) -> int:
        """Bound on the virtual-tree height of fragments at ``level``."""
        if level not in self._height:
            self._height[level] = self.height(level - 1) + 3 * self.route_len(level)
        return self._height[level]

    def scaled(self, tag: str, rounds: float) -> int:
        return max(1, math.ceil(rounds * self.cfg.mult(tag)))

    # per-procedure windows
    def tree_pass(self, level: int, tag: str) -> int:
        return self.scaled(tag, self.height(level) + self.slack + 1)

    def note_walk(self, level: int, tag: str) -> int:
        return self.scaled(tag, 2 * self.height(level) + 2 * self.slack + 2)

    def probe(self, k: int) -> int:
        return self.scaled("findpath", 2 * (self.cover_depth(k) + self.slack) + 2)

    def install(self, k: int) -> int:
        return self.scaled("findpath", self.cover_depth(k) + self.slack + 1)

    def route(self, i: int, tag: str) -> int:
        return self.scaled(tag, self.route_len(i) + self.slack + 1)

    def merge_install(self, i: int) -> int:
        return self.scaled("merge", 3 * (self.route_len(i) + self.slack) + 2)

    def bfs_pipeline(self, items: int, tag: str = "phase3") -> int:
        return self.scaled(tag, self.bfs_height + items + self.slack + 1)
