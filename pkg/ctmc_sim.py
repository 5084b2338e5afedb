"""
Continuous-time feedback process

A single agent at state ω waits an exponential holding time with rate f(ω),
then jumps to ω + 1. A trajectory stops when the next jump would happen after
the time cap t_M (the agent is a Loser, observed at W_{t_M}) or when a realised
jump takes the count past the ball cap ω_M (the agent is treated as Exploded).

Holding times are drawn in blocks whose sizes depend only on how many jumps
have been realised, never on the caps, so one seed describes one path and
raising either cap only extends it.
"""

import heapq
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from analysis import TailCurve
from config import HOLDING_BLOCK_MAX, HOLDING_BLOCK_MIN
from core import FeedbackFunction, PowerLaw, Tabulated, t_gamma
from discrete_sim import empirical_tail
from errors import ConfigurationError, DomainError, SimulationStateError
from replicas import make_rng, run_replicas

logger = logging.getLogger(__name__)


class Outcome(str, Enum):
    RUNNING = "Running"
    HIT_TIME_CAP = "HitTimeCap"
    HIT_BALL_CAP = "HitBallCap"


class Classification(str, Enum):
    LOSER = "Loser"
    EXPLODED = "Exploded"


@dataclass
class Trajectory:
    """
    One agent's path

    jump_times holds the realised jump times t_1 < t_2 < ... (t_0 = 0 is
    implicit) and is None when jumps were not recorded. For HitTimeCap,
    final_time is the time of the pending jump that falls after t_max.
    """
    omega0: int
    jump_times: Optional[np.ndarray]
    final_count: int
    final_time: float
    outcome: Outcome
    t_max: float
    omega_max: float

    @property
    def n_jumps(self) -> int:
        return self.final_count - self.omega0

    def count_at(self, t: float) -> int:
        """W_t for t up to t_max"""
        if self.jump_times is None:
            raise SimulationStateError("Trajectory was simulated without recording jumps")
        return self.omega0 + int(np.searchsorted(self.jump_times, t, side="right"))


@dataclass(frozen=True)
class LoserSample:
    """Final counts of the Loser trajectories of one aggregate run"""
    counts: np.ndarray
    t_max: float
    omega_max: float
    n_sims: int
    n_exploded: int
    omega0: int = 1
    seed: Optional[int] = None

    def __post_init__(self):
        if self.counts.size and self.counts.max() > self.omega_max:
            raise SimulationStateError("Loser counts must not exceed the ball cap")

    @property
    def n_losers(self) -> int:
        return int(self.counts.size)

    def tail(self) -> TailCurve:
        return empirical_tail(self.counts)

    def sidecar(self) -> dict:
        return {
            "t_M": self.t_max,
            "omega_M": self.omega_max if math.isfinite(self.omega_max) else None,
            "n_sims": self.n_sims,
            "n_losers": self.n_losers,
            "n_exploded": self.n_exploded,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class GridPoint:
    """Losers and the all-agent sample W_t at one time of a shared-trajectory grid"""
    t: float
    losers: LoserSample
    all_counts: np.ndarray


def _is_explosive(f: FeedbackFunction) -> bool:
    return isinstance(f, PowerLaw) and f.gamma > 1


def _check_caps(f: FeedbackFunction, omega0: int, t_max: float, omega_max: float) -> None:
    if omega0 < f.min_omega:
        raise DomainError(f"omega0 must be >= {f.min_omega}, got {omega0}")
    if not t_max > 0:
        raise DomainError(f"t_M must be positive, got {t_max}")
    if omega_max < omega0:
        raise DomainError(f"omega_M={omega_max} is below omega0={omega0}")
    if math.isinf(t_max) and math.isinf(omega_max):
        raise ConfigurationError("At least one of t_M and omega_M must be finite")
    if math.isinf(omega_max) and _is_explosive(f):
        raise ConfigurationError("Explosive feedback needs a finite omega_M; the path may pass every count before t_M")


def _holding_rates(f: FeedbackFunction, count: int, block: int) -> np.ndarray:
    if isinstance(f, Tabulated):
        room = f.max_omega - count + 1
        if room <= 0:
            raise DomainError(f"Agent reached {count} balls, beyond the tabulated feedback domain")
        block = min(block, room)
    return f.evaluate_many(np.arange(count, count + block, dtype=np.int64))


def _simulate_from(f: FeedbackFunction, count: int, clock: float, t_max: float, omega_max: float,
                   rng: np.random.Generator, record: bool):
    """
    Block loop shared by simulate_agent and extend_agent

    Returns:
        (list of jump-time arrays, final_count, final_time, outcome)
    """
    jumps: List[np.ndarray] = []
    block = HOLDING_BLOCK_MIN
    while True:
        rates = _holding_rates(f, count, block)
        size = rates.size
        # 1 - U lies in (0, 1], so holding times stay finite
        holds = -np.log1p(-rng.random(size)) / rates
        arrivals = clock + np.cumsum(holds)

        k_t = int(np.searchsorted(arrivals, t_max, side="right"))
        k_b = omega_max - count
        if k_b < size and k_b < k_t:
            k_b = int(k_b)
            if record:
                jumps.append(arrivals[:k_b + 1])
            return jumps, count + k_b + 1, float(arrivals[k_b]), Outcome.HIT_BALL_CAP
        if k_t < size:
            if record:
                jumps.append(arrivals[:k_t])
            return jumps, count + k_t, float(arrivals[k_t]), Outcome.HIT_TIME_CAP

        if record:
            jumps.append(arrivals)
        count += size
        clock = float(arrivals[-1])
        block = min(2 * block, HOLDING_BLOCK_MAX)


def _concat(jumps: List[np.ndarray]) -> np.ndarray:
    if not jumps:
        return np.zeros(0, dtype=np.float64)
    return np.concatenate(jumps)


def simulate_agent(f: FeedbackFunction, omega0: int, t_max: float, omega_max: float,
                   rng: np.random.Generator, record_jumps: bool = True) -> Trajectory:
    """
    Simulate one agent until the time cap or the ball cap stops it

    Args:
        f: feedback function
        omega0: initial ball count
        t_max: time cap t_M (math.inf for none)
        omega_max: ball cap ω_M (math.inf for none)
        rng: the agent's random stream
        record_jumps: keep the realised jump times

    Returns:
        Trajectory with outcome HitTimeCap or HitBallCap
    """
    _check_caps(f, omega0, t_max, omega_max)
    jumps, final_count, final_time, outcome = _simulate_from(f, omega0, 0.0, t_max, omega_max, rng, record_jumps)
    return Trajectory(
        omega0=omega0,
        jump_times=_concat(jumps) if record_jumps else None,
        final_count=final_count,
        final_time=final_time,
        outcome=outcome,
        t_max=t_max,
        omega_max=omega_max,
    )


def extend_agent(f: FeedbackFunction, traj: Trajectory, t_max: float, omega_max: float,
                 rng: np.random.Generator) -> Trajectory:
    """
    Continue a time-capped trajectory to a later time cap

    The pending jump at traj.final_time is realised first if it now falls
    inside the cap; later holding times come from rng.

    Raises:
        SimulationStateError: trajectory did not stop on the time cap
        DomainError: caps lower than the original ones
    """
    if traj.outcome != Outcome.HIT_TIME_CAP:
        raise SimulationStateError(f"Only HitTimeCap trajectories can be extended, got {traj.outcome.value}")
    if t_max < traj.t_max or omega_max < traj.omega_max:
        raise DomainError("Extension caps must not be below the original caps")
    _check_caps(f, traj.omega0, t_max, omega_max)

    previous = traj.jump_times
    record = previous is not None
    if traj.final_time > t_max:
        return Trajectory(traj.omega0, previous, traj.final_count, traj.final_time,
                          Outcome.HIT_TIME_CAP, t_max, omega_max)

    count = traj.final_count + 1
    pending = [np.array([traj.final_time])] if record else []
    if count > omega_max:
        jumps, final_count, final_time, outcome = [], count, traj.final_time, Outcome.HIT_BALL_CAP
    else:
        jumps, final_count, final_time, outcome = _simulate_from(
            f, count, traj.final_time, t_max, omega_max, rng, record)
    jump_times = _concat([previous] + pending + jumps) if record else None
    return Trajectory(traj.omega0, jump_times, final_count, final_time, outcome, t_max, omega_max)


def classify_loser(traj: Trajectory) -> Classification:
    """HitTimeCap -> Loser, HitBallCap -> Exploded"""
    if traj.outcome == Outcome.HIT_TIME_CAP:
        return Classification.LOSER
    if traj.outcome == Outcome.HIT_BALL_CAP:
        return Classification.EXPLODED
    raise SimulationStateError("Cannot classify a running trajectory")


def _normalize_seed(seed: Union[int, np.random.SeedSequence, None]) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _batches(items: list, parts: int) -> List[list]:
    size = math.ceil(len(items) / parts)
    return [items[i:i + size] for i in range(0, len(items), size)]


def _loser_batch(task) -> Tuple[np.ndarray, int]:
    f, omega0, t_max, omega_max, seeds = task
    counts = []
    exploded = 0
    for seed in seeds:
        traj = simulate_agent(f, omega0, t_max, omega_max, make_rng(seed), record_jumps=False)
        if classify_loser(traj) == Classification.LOSER:
            counts.append(traj.final_count)
        else:
            exploded += 1
    return np.array(counts, dtype=np.int64), exploded


def aggregate_losers(f: FeedbackFunction, omega0: int, t_max: float, omega_max: float, n_sims: int,
                     seed: Union[int, np.random.SeedSequence, None] = None, parallel: int = 1) -> LoserSample:
    """
    Run n_sims independent agents and keep the Loser final counts

    Agent k uses the k-th child of SeedSequence(seed), so the sample does not
    depend on the number of workers.
    """
    if n_sims < 1:
        raise DomainError(f"n_sims must be >= 1, got {n_sims}")
    _check_caps(f, omega0, t_max, omega_max)
    root = _normalize_seed(seed)
    seeds = root.spawn(n_sims)
    tasks = [(f, omega0, t_max, omega_max, batch) for batch in _batches(seeds, parallel)]
    results = run_replicas(_loser_batch, tasks, parallel)

    counts = np.concatenate([r[0] for r in results])
    n_exploded = sum(r[1] for r in results)
    logger.info(f"Aggregated {n_sims} agents at t_M={t_max}: {counts.size} losers, {n_exploded} exploded")
    return LoserSample(counts=counts, t_max=t_max, omega_max=omega_max, n_sims=n_sims,
                       n_exploded=n_exploded, omega0=omega0, seed=root.entropy if seed is not None else None)


def _grid_batch(task) -> Tuple[np.ndarray, np.ndarray]:
    f, omega0, times, omega_max, seeds = task
    counts = np.zeros((len(times), len(seeds)), dtype=np.int64)
    exploded = np.zeros((len(times), len(seeds)), dtype=bool)
    for k, seed in enumerate(seeds):
        traj = simulate_agent(f, omega0, times[-1], omega_max, make_rng(seed), record_jumps=True)
        blown = traj.outcome == Outcome.HIT_BALL_CAP
        for i, t in enumerate(times):
            if blown and traj.final_time <= t:
                exploded[i, k] = True
                counts[i, k] = traj.final_count
            else:
                counts[i, k] = traj.count_at(t)
    return counts, exploded


def aggregate_losers_grid(f: FeedbackFunction, omega0: int, times: Sequence[float], omega_max: float,
                          n_sims: int, seed: Union[int, np.random.SeedSequence, None] = None,
                          parallel: int = 1) -> List[GridPoint]:
    """
    Loser samples for a grid of time caps read off the same trajectories

    Each agent is simulated once to the largest cap; at every grid time it is
    Exploded if it passed omega_max by then and a Loser with W_t otherwise.
    Exploded agents enter all_counts as omega_max + 1.
    """
    times = sorted(float(t) for t in times)
    if not times:
        raise DomainError("Time grid must not be empty")
    if n_sims < 1:
        raise DomainError(f"n_sims must be >= 1, got {n_sims}")
    _check_caps(f, omega0, times[0], omega_max)
    root = _normalize_seed(seed)
    seeds = root.spawn(n_sims)
    tasks = [(f, omega0, times, omega_max, batch) for batch in _batches(seeds, parallel)]
    results = run_replicas(_grid_batch, tasks, parallel)
    counts = np.concatenate([r[0] for r in results], axis=1)
    exploded = np.concatenate([r[1] for r in results], axis=1)

    grid = []
    for i, t in enumerate(times):
        losers = LoserSample(counts=counts[i][~exploded[i]], t_max=t, omega_max=omega_max, n_sims=n_sims,
                             n_exploded=int(exploded[i].sum()), omega0=omega0,
                             seed=root.entropy if seed is not None else None)
        grid.append(GridPoint(t=t, losers=losers, all_counts=counts[i].copy()))
        logger.info(f"t={t:.4g}: {losers.n_losers} losers, {losers.n_exploded} exploded")
    return grid


def explosion_fraction(sample: LoserSample) -> float:
    return sample.n_exploded / sample.n_sims


def default_time_grid(f: FeedbackFunction, omega0: int = 1, steps: int = 10) -> List[float]:
    """{t_γ/10, 2t_γ/10, ..., t_γ}"""
    tg = t_gamma(f, omega0)
    return [k * tg / steps for k in range(1, steps + 1)]


def merge_jump_times(trajectories: Sequence[Trajectory]) -> List[Tuple[float, int]]:
    """
    All jumps of several agents in increasing time order as (time, agent index)

    Identical times are ordered by agent index.
    """
    streams = []
    for index, traj in enumerate(trajectories):
        if traj.jump_times is None:
            raise SimulationStateError(f"Trajectory {index} was simulated without recording jumps")
        streams.append([(float(t), index) for t in traj.jump_times])
    return list(heapq.merge(*streams))


def counts_after_jumps(trajectories: Sequence[Trajectory], n_jumps: int) -> np.ndarray:
    """
    Counts of every agent after the first n_jumps merged jumps

    Each trajectory must contain at least n_jumps realised jumps or have
    stopped on its time cap beyond the n-th merged jump time.
    """
    merged = merge_jump_times(trajectories)
    if len(merged) < n_jumps:
        raise SimulationStateError(f"Only {len(merged)} merged jumps available, need {n_jumps}")
    counts = np.array([traj.omega0 for traj in trajectories], dtype=np.int64)
    for _, index in merged[:n_jumps]:
        counts[index] += 1
    return counts
