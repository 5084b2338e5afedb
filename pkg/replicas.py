"""
Seeded random streams and replica fan-out

Every replica owns an independent PCG64 stream derived from the run seed
through SeedSequence.spawn, so results do not depend on how replicas are
scheduled across workers.
"""

import concurrent.futures
import logging
from typing import Any, Callable, List, Sequence

import numpy as np

from errors import ConfigurationError

logger = logging.getLogger(__name__)


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator for an integer seed or a SeedSequence"""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(seed: int, n: int) -> List[int]:
    """n child seeds, one per replica, drawn from SeedSequence(seed).spawn(n)"""
    if n < 1:
        raise ConfigurationError(f"Replica count must be >= 1, got {n}")
    children = np.random.SeedSequence(int(seed)).spawn(n)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def run_replicas(fn: Callable[[Any], Any], tasks: Sequence[Any], parallel: int = 1) -> List[Any]:
    """
    Apply fn to every task, optionally across worker processes

    Args:
        fn: module-level (picklable) function
        tasks: one argument per replica
        parallel: number of worker processes; 1 runs inline

    Returns:
        Results in task order regardless of completion order
    """
    if parallel < 1:
        raise ConfigurationError(f"--parallel must be >= 1, got {parallel}")
    if parallel == 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]

    logger.info(f"Fanning out {len(tasks)} replicas over {parallel} workers")
    results: List[Any] = [None] * len(tasks)
    with concurrent.futures.ProcessPoolExecutor(max_workers=parallel) as executor:
        futures = {executor.submit(fn, task): index for index, task in enumerate(tasks)}
        for future in concurrent.futures.as_completed(futures):
            index = futures[future]
            try:
                results[index] = future.result()
            except Exception as e:
                logger.error(f"Replica {index} failed: {e}")
                raise
    return results
