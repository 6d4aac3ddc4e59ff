"""Synthetic interaction records in the ingestion schema."""

from __future__ import annotations

import numpy as np

from .errors import GroupFormError
from .graph import InteractionRecord


def generate_records(n_participants: int, n_groups: int, n_codes: int,
                     density: float = 0.5, seed: int = 0,
                     n_tasks: int = 11) -> list[InteractionRecord]:
    """Participants are dealt round-robin into groups. Within a group every
    member holds each of the ``n_codes`` group codes independently with
    probability ``density``, logged against a random task.

    Every participant also carries one private code, so each appears in
    the output even when ``density`` is 0 and shares nothing.
    """
    if min(n_participants, n_groups, n_codes, n_tasks) < 1:
        raise GroupFormError("participant, group, code and task counts must be positive")
    if not 0.0 <= density <= 1.0:
        raise GroupFormError("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    width = len(str(n_participants - 1))
    records = []
    for p in range(n_participants):
        name = f"p{p:0{width}d}"
        group = f"g{p % n_groups}"
        records.append(InteractionRecord(name, group, f"t{rng.integers(n_tasks) + 1}", f"own-{name}"))
        held = rng.random(n_codes) < density
        tasks = rng.integers(n_tasks, size=n_codes) + 1
        for c in np.flatnonzero(held):
            records.append(InteractionRecord(name, group, f"t{tasks[c]}", f"c{c}"))
    return records
