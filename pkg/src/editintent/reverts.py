"""Identity-revert detection over a page's ordered revision history.

A revision r reverts when an earlier revision q carries the same content
digest, at most ``window`` revisions lie strictly between them, and r is no
more than ``horizon`` later than q.  Everything strictly between q and r is
reverted.  When one revision could be both (it reverts something and a later
revert spans it), Reverting wins: reverting revisions are processed in
ascending order and claim their own status first.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import timedelta
from enum import Enum
from typing import Sequence

from .revisions import Revision

DEFAULT_WINDOW = 15
DEFAULT_HORIZON = timedelta(days=2)


class Status(Enum):
    CLEAN = "clean"
    REVERTED = "reverted"
    REVERTING = "reverting"


@dataclass(frozen=True)
class RevertStatus:
    rev_id: int
    status: Status


def detect_reverts(
    revisions: Sequence[Revision],
    window: int = DEFAULT_WINDOW,
    horizon: timedelta = DEFAULT_HORIZON,
) -> dict[int, RevertStatus]:
    """Map rev_id to its revert status for one page's ordered history."""
    for a, b in zip(revisions, revisions[1:]):
        if b.sort_key < a.sort_key:
            raise ValueError("revisions must be sorted ascending by (timestamp, rev_id)")
    reverting: set[int] = set()
    reverted: set[int] = set()
    for i, rev in enumerate(revisions):
        # earliest qualifying match gives the widest reverted interior
        lo = max(0, i - window - 1)
        for q in range(lo, i):
            earlier = revisions[q]
            if earlier.sha1 != rev.sha1:
                continue
            if rev.timestamp - earlier.timestamp > horizon:
                continue
            reverting.add(i)
            reverted.update(range(q + 1, i))
            break
    out: dict[int, RevertStatus] = {}
    for i, rev in enumerate(revisions):
        if i in reverting:
            status = Status.REVERTING
        elif i in reverted:
            status = Status.REVERTED
        else:
            status = Status.CLEAN
        out[rev.rev_id] = RevertStatus(rev_id=rev.rev_id, status=status)
    return out
