"""Global event counters used to make the cost contracts observable.

The counters are plain instrumentation; nothing in the engine reads them.
Keys in use:

``firings``         dataflow node firings (evaluate, jvp)
``evaluations``     dataflow evaluations started
``jvp_passes``      forward-mode passes
``tape_builds``     tapes recorded
``backward_sweeps`` reverse sweeps over a tape
``partial_evals``   local partials evaluated during a reverse sweep
``adjoint_builds``  adjoint programs constructed
"""

from __future__ import annotations

from collections import Counter
from contextlib import contextmanager
from typing import Iterator

COUNTERS: Counter[str] = Counter()


def bump(key: str, n: int = 1) -> None:
    COUNTERS[key] += n


@contextmanager
def counting() -> Iterator[Counter[str]]:
    """Yield a counter holding only the events raised inside the block."""
    before = COUNTERS.copy()
    delta: Counter[str] = Counter()
    try:
        yield delta
    finally:
        after = COUNTERS.copy()
        after.subtract(before)
        delta.update({k: v for k, v in after.items() if v})
