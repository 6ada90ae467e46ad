"""X2 control-plane messages raised by the resource-transfer procedure.

Five message kinds exist. A status poll of one candidate donor costs three
messages (request, response, load report); a concluded transfer costs two more
(metasignalling request and acknowledge). For one batch of request events the
total is therefore

    I = 3 (N - 1) n_R + 3 n'_R + 2 n_s

with N SCs per requester poll round, ``n_R`` request events, ``n'_R`` the
subset that went on to poll the eNB, and ``n_s`` successful transfers. The
identity is exact against the message log by construction and is asserted in
validation.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class X2Kind(Enum):
    RESOURCE_STATUS_REQUEST = "ResourceStatusRequest"
    RESOURCE_STATUS_RESPONSE = "ResourceStatusResponse"
    LOAD_INFORMATION = "LoadInformation"
    METASIGNALLING_REQUEST = "MetasignallingInformationRequest"
    METASIGNALLING_ACK = "MetasignallingInformationAcknowledge"


#: Messages per donor-candidate poll and per executed transfer.
MESSAGES_PER_POLL = 3
MESSAGES_PER_TRANSFER = 2


@dataclass(frozen=True)
class X2Message:
    seq: int
    kind: X2Kind
    src: int
    dst: int


class MessageLog:
    """Append-only record of X2 messages for one iteration."""

    def __init__(self) -> None:
        self.messages: list[X2Message] = []

    def emit(self, kind: X2Kind, src: int, dst: int) -> X2Message:
        msg = X2Message(seq=len(self.messages) + 1, kind=kind, src=src, dst=dst)
        self.messages.append(msg)
        return msg

    def __len__(self) -> int:
        return len(self.messages)

    def count_by_kind(self) -> dict[X2Kind, int]:
        counts = {kind: 0 for kind in X2Kind}
        for msg in self.messages:
            counts[msg.kind] += 1
        return counts

    def rows(self) -> list[tuple[int, str, int, int]]:
        """(seq, kind, src, dst) tuples in emission order."""
        return [(m.seq, m.kind.value, m.src, m.dst) for m in self.messages]


def expected_message_count(
    n_small_cells: int, n_requests: int, n_enb_polls: int, n_successes: int
) -> int:
    """Closed-form X2 message total for one batch of request events."""
    return (
        MESSAGES_PER_POLL * (n_small_cells - 1) * n_requests
        + MESSAGES_PER_POLL * n_enb_polls
        + MESSAGES_PER_TRANSFER * n_successes
    )
