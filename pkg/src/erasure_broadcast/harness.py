"""Monte Carlo experiment runner: seeded trials, aggregation and reports."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .channel import Channel, ChannelConfig, required_gamma, stream
from .core_protocols import run_and, run_equality_test
from .large_alphabet import FieldConfig, run_large_alphabet
from .learn_input import (
    Classification,
    log_star,
    recursion_depth,
    run_learn_input,
    scheduled_rounds,
)
from .params import DEFAULT_PARAMS
from .symmetric import FAIL, run_hamming_weight

CSV_COLUMNS = (
    "protocol",
    "n",
    "p",
    "gamma",
    "trials",
    "successes",
    "fwk",
    "fwok",
    "rate",
    "ci_lo",
    "ci_hi",
    "mean_rounds",
    "max_rounds",
)

# largest input length the default bit-protocol codes can carry
MAX_BIT_N = 12288


def wilson(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    phat = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


# one trial per protocol: (channel, input generator) -> (classification, rounds)

TrialFn = Callable[[Channel, np.random.Generator], Classification]


def _trial_learn_input(ch, rng):
    bits = rng.integers(0, 2, ch.config.n, dtype=np.int8)
    return run_learn_input(ch, bits).classification


def _trial_and(ch, rng):
    n = ch.config.n
    bits = np.ones(n, dtype=np.int8)
    if rng.random() < 0.5:
        bits[rng.integers(n)] = 0
    out = run_and(ch, bits)
    ok = np.all(out == int(bits.min()))
    return Classification.SUCCESS if ok else Classification.FAIL_WITHOUT_KNOWLEDGE


def _trial_equality(ch, rng):
    n = ch.config.n
    width = n  # each processor holds an n-bit string
    s = rng.integers(0, 2, width, dtype=np.int8)
    strings = np.tile(s, (n, 1))
    equal = rng.random() < 0.5
    if not equal:
        strings[rng.integers(n), rng.integers(width)] ^= 1
    v = run_equality_test(ch, strings)
    ok = np.all(v == int(equal))
    return Classification.SUCCESS if ok else Classification.FAIL_WITHOUT_KNOWLEDGE


def _trial_large_alphabet(ch, rng):
    n = ch.config.n
    field_ = FieldConfig.for_n(n)
    inputs = field_.random(rng, n)
    out = run_large_alphabet(ch, field_, inputs)
    if out.all_correct(inputs):
        return Classification.SUCCESS
    return Classification.FAIL_WITHOUT_KNOWLEDGE


def _trial_hamming_weight(ch, rng):
    n = ch.config.n
    bits = (rng.random(n) < rng.random()).astype(np.int8)
    out = run_hamming_weight(ch, bits)
    if out.all_correct(int(bits.sum())):
        return Classification.SUCCESS
    if np.all(out.outputs == FAIL):
        return Classification.FAIL_WITH_KNOWLEDGE
    return Classification.FAIL_WITHOUT_KNOWLEDGE


PROTOCOLS: dict[str, TrialFn] = {
    "learn_input": _trial_learn_input,
    "and": _trial_and,
    "equality": _trial_equality,
    "large_alphabet": _trial_large_alphabet,
    "hamming_weight": _trial_hamming_weight,
}


@dataclass(frozen=True)
class Cell:
    protocol: str
    n: int
    p: float
    gamma: int


@dataclass
class ExperimentPlan:
    """A protocol and a grid over ``n``, ``p`` and ``gamma``.

    ``gamma_target`` (when set) replaces ``gammas``: each cell uses the least
    gamma with ``p ** gamma <= gamma_target``.
    """

    protocol: str
    ns: list[int]
    ps: list[float]
    gammas: list[int] = field(default_factory=lambda: [1])
    gamma_target: float | None = None
    trials: int = 100
    seed: int = 0
    jobs: int = 1

    def cells(self) -> list[Cell]:
        out = []
        for n, p in itertools.product(self.ns, self.ps):
            if self.gamma_target is not None:
                gs = [required_gamma(p, self.gamma_target)]
            else:
                gs = self.gammas
            out.extend(Cell(self.protocol, int(n), float(p), int(g)) for g in gs)
        return out

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; choose from {sorted(PROTOCOLS)}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if not self.ns or not self.ps:
            raise ValueError("the grid needs at least one n and one p")
        if self.gamma_target is None and not self.gammas:
            raise ValueError("give gammas or a gamma target")
        for cell in self.cells():
            _validate_cell(cell)


def _validate_cell(cell: Cell) -> None:
    ChannelConfig(cell.n, cell.p, cell.gamma)
    if cell.protocol in ("learn_input", "equality") and cell.n > MAX_BIT_N:
        raise ValueError(f"{cell.protocol} supports n <= {MAX_BIT_N}")
    if cell.protocol == "equality" and cell.n < 2:
        raise ValueError("equality needs n >= 2")
    if cell.protocol == "large_alphabet":
        if cell.n < 2:
            raise ValueError("large_alphabet needs n >= 2")
        if cell.p**cell.gamma > 0.5:
            raise ValueError("large_alphabet needs p ** gamma <= 1/2")
    if cell.protocol == "hamming_weight":
        if cell.p == 0:
            raise ValueError("hamming_weight needs p > 0")
        if cell.n > MAX_BIT_N:
            raise ValueError(f"hamming_weight supports n <= {MAX_BIT_N}")


@dataclass
class TrialStats:
    protocol: str
    n: int
    p: float
    gamma: int
    trials: int
    successes: int
    fwk: int
    fwok: int
    mean_rounds: float
    max_rounds: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def ci(self) -> tuple[float, float]:
        return wilson(self.successes, self.trials)

    def row(self) -> dict:
        lo, hi = self.ci
        d = asdict(self)
        d.update(rate=self.rate, ci_lo=lo, ci_hi=hi)
        return {k: d[k] for k in CSV_COLUMNS}


def run_trial(cell: Cell, seed: int, cell_index: int, trial: int) -> tuple[str, int]:
    """One trial; the channel and the input draw from separate substreams."""
    config = ChannelConfig(cell.n, cell.p, cell.gamma, seed)
    ch = Channel(config, stream(seed, cell_index, trial, 0))
    result = PROTOCOLS[cell.protocol](ch, stream(seed, cell_index, trial, 1))
    return Classification(result).value, ch.rounds


def _run_trial_args(args):
    return run_trial(*args)


def aggregate(cell: Cell, results: list[tuple[str, int]]) -> TrialStats:
    kinds = [Classification(k) for k, _ in results]
    rounds = [r for _, r in results]
    return TrialStats(
        protocol=cell.protocol,
        n=cell.n,
        p=cell.p,
        gamma=cell.gamma,
        trials=len(results),
        successes=kinds.count(Classification.SUCCESS),
        fwk=kinds.count(Classification.FAIL_WITH_KNOWLEDGE),
        fwok=kinds.count(Classification.FAIL_WITHOUT_KNOWLEDGE),
        mean_rounds=float(np.mean(rounds)),
        max_rounds=int(max(rounds)),
    )


def run_experiment(plan: ExperimentPlan) -> list[TrialStats]:
    """Run every cell of ``plan``; results do not depend on ``jobs``."""
    plan.validate()
    cells = plan.cells()
    tasks = [(cell, plan.seed, ci, t) for ci, cell in enumerate(cells) for t in range(plan.trials)]
    if plan.jobs == 1:
        results = [_run_trial_args(a) for a in tasks]
    else:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            # map preserves task order, so aggregation ignores completion order
            results = list(pool.map(_run_trial_args, tasks, chunksize=max(1, len(tasks) // (4 * plan.jobs))))
    out = []
    for ci, cell in enumerate(cells):
        out.append(aggregate(cell, results[ci * plan.trials : (ci + 1) * plan.trials]))
    return out


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def to_csv(stats: list[TrialStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in stats:
        w.writerow([_fmt(v) for v in s.row().values()])
    return buf.getvalue()


def to_json(stats: list[TrialStats]) -> str:
    return json.dumps({"columns": list(CSV_COLUMNS), "rows": [s.row() for s in stats]}, indent=2) + "\n"


def write_report(stats: list[TrialStats], path, fmt: str = "csv") -> None:
    text = to_csv(stats) if fmt == "csv" else to_json(stats)
    with open(path, "w", newline="") as fh:
        fh.write(text)


@dataclass
class ScalingRow:
    n: int
    rounds_used: int | None  # None beyond the range of the default codes
    depth: int
    log_star: int
    simulated: bool


def measure_logstar_scaling(
    n_list,
    p: float = 0.0,
    gamma: int = 1,
    seed: int = 0,
    params=DEFAULT_PARAMS,
    max_simulated: int = MAX_BIT_N,
) -> list[ScalingRow]:
    """Rounds and recursion depth of LearnInput for each ``n``.

    Sizes up to ``max_simulated`` are run once with a fixed seed.  Larger
    sizes report only the depth of the partition tree, plus the fixed round
    schedule when the codes reach that far.
    """
    n_list = [int(n) for n in n_list]
    if n_list != sorted(n_list):
        raise ValueError("n_list must be ascending")
    rows = []
    for n in n_list:
        if n <= max_simulated:
            config = ChannelConfig(n, p, gamma, seed)
            ch = Channel(config, stream(seed, n, 0))
            bits = stream(seed, n, 1).integers(0, 2, n, dtype=np.int8)
            out = run_learn_input(ch, bits, params)
            rows.append(ScalingRow(n, out.rounds_used, out.report.depth, log_star(n), True))
        else:
            rounds = scheduled_rounds(n, gamma, params) if n <= MAX_BIT_N else None
            rows.append(ScalingRow(n, rounds, recursion_depth(n, params), log_star(n), False))
        last = rows[-1]
        if last.depth > last.log_star + 2:
            raise AssertionError(f"depth {last.depth} exceeds log* {n} + 2")
    return rows


def scaling_csv(rows: list[ScalingRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "rounds_used", "depth", "log_star", "simulated"])
    for r in rows:
        rounds = "" if r.rounds_used is None else r.rounds_used
        w.writerow([r.n, rounds, r.depth, r.log_star, int(r.simulated)])
    return buf.getvalue()
