"""
Discrete-time feedback model

Each iteration one agent gains a ball, agent j being chosen with probability
f(I_n(j)) / Σ_i f(I_n(i)). Selection runs through a prefix-sum tree so a step
costs O(log N); the bulk loop is compiled with numba.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Type

import numpy as np
from numba import njit

from analysis import TailCurve, TailSource
from config import (
    SIM_CHUNK_SIZE,
    TREE_DRIFT_TOLERANCE,
    TREE_REBUILD_INTERVAL,
    WEIGHT_RESCALE_THRESHOLD,
)
from core import FeedbackFunction, PowerLaw, Tabulated
from errors import ConfigurationError, DomainError, SimulationStateError
from replicas import make_rng, run_replicas, spawn_seeds
from weighted_sampler import WeightedSampler, fenwick_add, fenwick_build, fenwick_find, highest_power_of_two

logger = logging.getLogger(__name__)

INT64_MAX = int(np.iinfo(np.int64).max)
LOG_RESCALE_THRESHOLD = math.log(WEIGHT_RESCALE_THRESHOLD)

# Kernel status codes
STATUS_OK = 0
STATUS_RESCALE = 1
STATUS_OUT_OF_TABLE = 2

Snapshot = Tuple[int, np.ndarray]


@dataclass(frozen=True)
class SimConfig:
    """
    One discrete-model run

    Args:
        n_agents: N >= 1
        feedback: feedback function
        checkpoints: strictly increasing iteration numbers at which counts are captured
        seed: 64-bit unsigned seed
        initial_counts: starting balls per agent, all ones when omitted
    """
    n_agents: int
    feedback: FeedbackFunction
    checkpoints: Tuple[int, ...]
    seed: int = 0
    initial_counts: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "checkpoints", tuple(int(c) for c in self.checkpoints))
        if self.n_agents < 1:
            raise ConfigurationError(f"N must be >= 1, got {self.n_agents}")
        if not self.checkpoints:
            raise ConfigurationError("At least one checkpoint is required")
        if self.checkpoints[0] < 0 or any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ConfigurationError(f"Checkpoints must be nonnegative and strictly increasing: {self.checkpoints}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.initial_counts is not None:
            object.__setattr__(self, "initial_counts", tuple(int(c) for c in self.initial_counts))
            if len(self.initial_counts) != self.n_agents:
                raise ConfigurationError(
                    f"initial_counts has {len(self.initial_counts)} entries for N={self.n_agents}"
                )
            if min(self.initial_counts) < self.feedback.min_omega:
                raise ConfigurationError(f"Initial counts must be >= {self.feedback.min_omega}")
        # Every ball could land on one agent
        if self.initial_total() + self.checkpoints[-1] > INT64_MAX:
            raise ConfigurationError(
                f"Checkpoint {self.checkpoints[-1]} overflows 64-bit ball counts"
            )

    def initial_array(self) -> np.ndarray:
        if self.initial_counts is None:
            return np.ones(self.n_agents, dtype=np.int64)
        return np.array(self.initial_counts, dtype=np.int64)

    def initial_total(self) -> int:
        if self.initial_counts is None:
            return self.n_agents
        return sum(self.initial_counts)

    def with_seed(self, seed: int) -> "SimConfig":
        return SimConfig(self.n_agents, self.feedback, self.checkpoints, seed, self.initial_counts)


def _log_weights(f: FeedbackFunction, counts: np.ndarray) -> np.ndarray:
    if isinstance(f, PowerLaw):
        return math.log(f.eta) + f.gamma * np.log(counts.astype(np.float64))
    return np.log(f.evaluate_many(counts))


def _weights(f: FeedbackFunction, counts: np.ndarray, log_scale: float) -> np.ndarray:
    if log_scale == 0.0:
        return f.evaluate_many(counts)
    return np.exp(_log_weights(f, counts) - log_scale)


@dataclass
class PopulationState:
    """
    Ball counts, iteration counter and the sampler over f(counts)

    Leaf weights are f(counts[j]) scaled by exp(-log_scale); log_scale stays 0
    until the weight total would leave double range.
    """
    counts: np.ndarray
    feedback: FeedbackFunction
    sampler: WeightedSampler
    n: int = 0
    log_scale: float = 0.0
    initial_total: int = field(default=0)

    @classmethod
    def initial(cls, config: SimConfig, sampler_cls: Type[WeightedSampler] = WeightedSampler) -> "PopulationState":
        counts = config.initial_array()
        sampler = sampler_cls(config.feedback.evaluate_many(counts))
        state = cls(counts=counts, feedback=config.feedback, sampler=sampler,
                    initial_total=int(counts.sum()))
        if not math.isfinite(state.sampler.total) or state.sampler.total > WEIGHT_RESCALE_THRESHOLD:
            state.rescale()
        return state

    def weight(self, count: int) -> float:
        if self.log_scale == 0.0:
            return self.feedback.evaluate(count)
        return math.exp(self.feedback.log_evaluate(count) - self.log_scale)

    def rescale(self):
        """Divide every weight by the current maximum; ratios and draws are unchanged"""
        log_w = _log_weights(self.feedback, self.counts)
        self.log_scale = float(log_w.max())
        self.sampler.leaves[:] = np.exp(log_w - self.log_scale)
        self.sampler.rebuild()
        logger.debug(f"Rescaled weights at n={self.n}, log scale {self.log_scale:.3f}")

    def check_invariants(self, tolerance: float = 1e-9):
        """
        Raises:
            SimulationStateError: ball conservation or leaf weights violated
        """
        if int(self.counts.sum()) != self.initial_total + self.n:
            raise SimulationStateError(
                f"Ball conservation violated: {int(self.counts.sum())} != {self.initial_total} + {self.n}"
            )
        expected = _weights(self.feedback, self.counts, self.log_scale)
        if not np.allclose(self.sampler.leaves, expected, rtol=tolerance, atol=0.0):
            raise SimulationStateError("Sampler leaf weights differ from f(counts)")


def step(state: PopulationState, rng: np.random.Generator) -> int:
    """
    Advance one iteration

    Returns:
        Index of the agent that gained the ball
    """
    j = state.sampler.sample(rng.random())
    c = int(state.counts[j]) + 1
    if c > state.feedback.max_omega:
        raise DomainError(f"Agent {j} reached {c} balls, beyond the tabulated feedback domain")
    state.counts[j] = c
    state.n += 1
    if state.feedback.log_evaluate(c) - state.log_scale > LOG_RESCALE_THRESHOLD:
        # f(c) alone leaves double range; rescale rebuilds every leaf from counts
        state.rescale()
        return j
    state.sampler.update(j, state.weight(c))
    if not math.isfinite(state.sampler.total) or state.sampler.total > WEIGHT_RESCALE_THRESHOLD:
        state.rescale()
    return j


@njit(cache=True)
def _advance(counts, leaves, tree, total, uniforms, top, use_table, table, omega_min,
             log_eta, eta, gamma, log_scale, threshold, status):
    """
    Consume uniforms one step each; stop early when a rescale is needed or a
    count leaves the table. Returns the number of steps taken.
    """
    status[0] = 0
    n_steps = uniforms.shape[0]
    for k in range(n_steps):
        j = fenwick_find(tree, uniforms[k] * total[0], top)
        c = counts[j] + 1
        if use_table:
            idx = c - omega_min
            if idx >= table.shape[0]:
                status[0] = 2
                return k
            if log_scale == 0.0:
                w = table[idx]
            else:
                w = math.exp(math.log(table[idx]) - log_scale)
        elif log_scale == 0.0:
            w = eta * float(c) ** gamma
        else:
            w = math.exp(log_eta + gamma * math.log(float(c)) - log_scale)
        counts[j] = c
        delta = w - leaves[j]
        leaves[j] = w
        fenwick_add(tree, j, delta)
        total[0] += delta
        if not (total[0] <= threshold):
            status[0] = 1
            return k + 1
    return n_steps


class _Kernel:
    """Bundles the raw arrays the compiled loop works on"""

    def __init__(self, state: PopulationState):
        f = state.feedback
        self.state = state
        self.total = np.array([state.sampler.total], dtype=np.float64)
        self.use_table = isinstance(f, Tabulated)
        if self.use_table:
            self.table = np.asarray(f.values, dtype=np.float64)
            self.omega_min = f.omega_min
            self.log_eta, self.eta, self.gamma = 0.0, 1.0, 0.0
        else:
            self.table = np.zeros(1, dtype=np.float64)
            self.omega_min = 1
            self.log_eta, self.eta, self.gamma = math.log(f.eta), f.eta, f.gamma
        self.status = np.zeros(1, dtype=np.int64)
        self.since_rebuild = 0

    def advance(self, uniforms: np.ndarray) -> None:
        state = self.state
        sampler = state.sampler
        offset = 0
        while offset < uniforms.size:
            done = _advance(
                state.counts, sampler.leaves, sampler.tree, self.total, uniforms[offset:],
                sampler.top, self.use_table, self.table, self.omega_min,
                self.log_eta, self.eta, self.gamma, state.log_scale,
                WEIGHT_RESCALE_THRESHOLD, self.status,
            )
            offset += done
            state.n += done
            self.since_rebuild += done
            sampler.total = float(self.total[0])
            if self.status[0] == STATUS_OUT_OF_TABLE:
                raise DomainError(
                    f"A count passed the tabulated feedback domain (max {state.feedback.max_omega}) at n={state.n}"
                )
            if self.status[0] == STATUS_RESCALE:
                state.rescale()
                self.total[0] = sampler.total
                self.since_rebuild = 0

    def control_drift(self) -> None:
        sampler = self.state.sampler
        if self.since_rebuild >= TREE_REBUILD_INTERVAL:
            sampler.rebuild()
            self.since_rebuild = 0
        else:
            drift = sampler.drift()
            if drift > TREE_DRIFT_TOLERANCE:
                logger.warning(f"Sampler drift {drift:.2e} at n={self.state.n}; rebuilding tree")
                sampler.rebuild()
                self.since_rebuild = 0
        self.total[0] = sampler.total


def run(config: SimConfig, chunk_size: int = SIM_CHUNK_SIZE) -> List[Snapshot]:
    """
    Run the discrete model and capture counts at every checkpoint

    Uniform variates are drawn from the seeded stream in chunks and fed to the
    compiled loop. Until a tree rebuild changes the running total's rounding,
    the trajectory equals the one produced by calling step() repeatedly with
    the same generator.

    Returns:
        [(iteration, counts copy)] in checkpoint order
    """
    rng = make_rng(config.seed)
    state = PopulationState.initial(config)
    kernel = _Kernel(state)
    snapshots: List[Snapshot] = []

    logger.info(
        f"Discrete run: N={config.n_agents}, feedback={config.feedback.describe()}, "
        f"checkpoints={list(config.checkpoints)}, seed={config.seed}"
    )
    try:
        for checkpoint in config.checkpoints:
            while state.n < checkpoint:
                size = min(chunk_size, checkpoint - state.n, TREE_REBUILD_INTERVAL - kernel.since_rebuild)
                kernel.advance(rng.random(size))
                kernel.control_drift()
            snapshots.append((checkpoint, state.counts.copy()))
            logger.info(f"Checkpoint n={checkpoint}: max count {int(state.counts.max())}")
    except Exception as e:
        logger.error(f"Discrete run failed at n={state.n}: {e}")
        raise
    return snapshots


def _run_task(config: SimConfig) -> List[Snapshot]:
    return run(config)


def replicate(config: SimConfig, replicas: int, parallel: int = 1) -> List[List[Snapshot]]:
    """Independent runs seeded from SeedSequence(config.seed).spawn(replicas), in replica order"""
    seeds = spawn_seeds(config.seed, replicas)
    return run_replicas(_run_task, [config.with_seed(s) for s in seeds], parallel)


def empirical_tail(counts: Sequence[int]) -> TailCurve:
    """
    Empirical tail #{i : counts[i] >= ω} / N on the distinct observed values

    Raises:
        DomainError: empty input
    """
    counts = np.asarray(counts)
    if counts.size == 0:
        raise DomainError("Empirical tail needs at least one count")
    values, multiplicity = np.unique(counts, return_counts=True)
    at_least = np.cumsum(multiplicity[::-1])[::-1]
    return TailCurve(omegas=values, probs=at_least / counts.size, source=TailSource.EMPIRICAL)
