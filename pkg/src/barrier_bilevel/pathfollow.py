"""Path following: repeated outer runs while halving t and eps."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .barrier import BarrierContext
from .linalg import as_vector
from .outer import FAILED, RunResult, format_float, run_bfbm
from .problem import BilevelProblem

ROUND_HEADER = ("i", "t_i", "eps_i", "best_stationarity", "status")


@dataclass
class RoundRecord:
    i: int
    t: float
    eps: float
    result: RunResult


@dataclass
class PathTrace:
    rounds: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if not self.rounds:
            return FAILED
        if any(r.result.status == FAILED for r in self.rounds):
            return FAILED
        return self.rounds[-1].result.status

    @property
    def final(self) -> RunResult:
        return self.rounds[-1].result

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(ROUND_HEADER)
        for r in self.rounds:
            writer.writerow([r.i, format_float(r.t), format_float(r.eps),
                             format_float(r.result.best_stationarity), r.result.status_label])
        return buf.getvalue()


def run_pathfollow(prob: BilevelProblem, x0, t0: float, eps0: float, rounds: int,
                   max_outer_per_round: int, variant: str = "standard", seed: int = 0) -> PathTrace:
    """Round i runs the outer solver at t0/2^i, eps0/2^i from the previous round's output.

    The lower solver is warm-started across rounds. A failed round ends the
    sequence; its record is kept.
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    if not eps0 > 0:
        raise ValueError("eps0 must be positive")
    path = PathTrace()
    x = as_vector(x0, "x0")
    t, eps, warm = float(t0), float(eps0), None
    for i in range(rounds):
        ctx = BarrierContext(t, prob)
        res = run_bfbm(ctx, x, eps, max_outer_per_round, seed=seed, variant=variant, warm_y=warm)
        path.rounds.append(RoundRecord(i, t, eps, res))
        if res.status == FAILED:
            break
        x = np.asarray(res.x_out, float)
        warm = res.last_y
        t, eps = t / 2, eps / 2
    return path
