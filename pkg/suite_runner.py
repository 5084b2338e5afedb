"""
Plain runner so each test module can be executed directly with python
"""

import logging
import time
from typing import Callable, List, Tuple

logger = logging.getLogger(__name__)


def run_tests(title: str, tests: List[Tuple[str, Callable[[], None]]]) -> int:
    """
    Run (name, function) pairs in order and log one line per result

    Returns:
        0 when every test passed, 1 otherwise
    """
    logger.info(f"{title}: {len(tests)} tests")
    failed = []
    for name, test_func in tests:
        start = time.perf_counter()
        try:
            test_func()
        except Exception as e:
            logger.error(f"✗ {name}: {type(e).__name__}: {e}")
            failed.append(name)
            continue
        logger.info(f"✓ {name} ({time.perf_counter() - start:.2f}s)")

    if failed:
        logger.error(f"{title}: {len(failed)}/{len(tests)} failed: {', '.join(failed)}")
        return 1
    logger.info(f"{title}: all {len(tests)} passed")
    return 0
