"""Inter-BS resource transfer: ledgers, donor discovery, loans, reversion.

Mechanism
---------
A small cell (SC) that cannot admit a user raises a request for exactly the
user's unmet RB need (the deficit). It polls every other SC (three X2 messages
each), picks the donor with the largest spare above ``deficit + donor_floor``
(ties broken by distance, then index), and falls back to polling the macro eNB
only when no SC qualifies. A successful transfer moves specific RB ids from
donor to recipient (two more X2 messages) and credits the recipient's slice
budget. Macro RB ids may be re-lent to additional SCs whose coverage discs
overlap none of the current holders; such spatial reuse consumes no extra macro
spare. Loans unwind LIFO once demand drops.

The macro eNB never requests and never borrows.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from hetsim.scenario import MACRO_INDEX, Deployment
from hetsim.signaling import MessageLog, X2Kind
from hetsim.slicing import SliceScheme, SliceState


class Role(Enum):
    IDLE = "idle"
    REQUESTING = "requesting"
    REQUESTED = "requested"
    DONOR = "donor"
    RECIPIENT = "recipient"


class LedgerError(RuntimeError):
    """A resource-ledger invariant was violated."""


@dataclass(frozen=True)
class TransferRecord:
    """One executed loan: which RB ids moved and whether each was a reuse."""

    seq: int
    donor: int
    recipient: int
    rb_ids: tuple[int, ...]
    reused: tuple[bool, ...]   # per id: True when the macro id was already on loan

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "donor": self.donor,
            "recipient": self.recipient,
            "rb_ids": list(self.rb_ids),
            "reused": list(self.reused),
        }


class _BsLedger:
    """Physical RB bookkeeping for one BS.

    Own ids are partitioned at all times into available / used / lent;
    borrowed ids live in per-id records until reverted.
    """

    def __init__(self, index: int, own_ids: tuple[int, ...]):
        self.index = index
        self.own_ids = tuple(sorted(own_ids))
        self.available: list[int] = list(self.own_ids)
        self.used_own: set[int] = set()
        self.lent: dict[int, set[int]] = {}
        self.borrowed: list[tuple[int, int]] = []   # (donor index, rb id), FIFO
        self.borrowed_unused: list[int] = []        # ids not yet granted to a user
        self.used_borrowed: set[int] = set()

    @property
    def rb_count(self) -> int:
        return len(self.own_ids)

    @property
    def lent_count(self) -> int:
        return len(self.lent)

    @property
    def borrowed_count(self) -> int:
        return len(self.borrowed)

    @property
    def used_count(self) -> int:
        return len(self.used_own) + len(self.used_borrowed)

    def availability(self) -> int:
        """r = own RBs - in use - lent out + borrowed in."""
        return self.rb_count - self.used_count - self.lent_count + self.borrowed_count

    def spare_for_donation(self) -> int:
        """Own ids free to lend (borrowed resources are never re-lent)."""
        return len(self.available)

    def physical_free(self) -> int:
        return len(self.available) + len(self.borrowed_unused)

    def take_for_user(self, need: int) -> list[int]:
        """Grant ``need`` RBs to a user: borrowed ids first, then lowest own."""
        if need > self.physical_free():
            raise LedgerError(
                f"BS {self.index}: grant of {need} exceeds free {self.physical_free()}"
            )
        ids: list[int] = []
        while self.borrowed_unused and len(ids) < need:
            rb = self.borrowed_unused.pop(0)
            self.used_borrowed.add(rb)
            ids.append(rb)
        while len(ids) < need:
            rb = self.available.pop(0)
            self.used_own.add(rb)
            ids.append(rb)
        return ids

    def release_users(self) -> None:
        """Demand drop: all user grants return to the free pools."""
        for rb in sorted(self.used_own):
            bisect.insort(self.available, rb)
        self.used_own.clear()
        borrowed_order = [rb for _, rb in self.borrowed]
        self.borrowed_unused = [rb for rb in borrowed_order]
        self.used_borrowed.clear()

    def lend(self, rb_ids: list[int], recipient: int) -> list[bool]:
        """Move ids to a recipient; returns per-id reuse flags."""
        flags: list[bool] = []
        for rb in rb_ids:
            if rb in self.lent:
                holders = self.lent[rb]
                if recipient in holders:
                    raise LedgerError(
                        f"BS {self.index}: id {rb} already lent to {recipient}"
                    )
                holders.add(recipient)
                flags.append(True)
            else:
                pos = bisect.bisect_left(self.available, rb)
                if pos >= len(self.available) or self.available[pos] != rb:
                    raise LedgerError(f"BS {self.index}: id {rb} is not lendable")
                self.available.pop(pos)
                self.lent[rb] = {recipient}
                flags.append(False)
        return flags

    def accept_loan(self, donor: int, rb_ids: list[int]) -> None:
        for rb in rb_ids:
            self.borrowed.append((donor, rb))
            self.borrowed_unused.append(rb)

    def return_loan(self, donor: int, rb_ids: tuple[int, ...]) -> None:
        """Recipient side of a reversion; loaned ids must be unused.

        Validates every id before touching state so a refused reversion
        leaves the ledger exactly as it was.
        """
        for rb in rb_ids:
            if rb in self.used_borrowed:
                raise LedgerError(
                    f"BS {self.index}: cannot revert id {rb} while in use"
                )
            if (donor, rb) not in self.borrowed:
                raise LedgerError(
                    f"BS {self.index}: no loan of id {rb} from {donor}"
                )
        for rb in rb_ids:
            self.borrowed.remove((donor, rb))
            self.borrowed_unused.remove(rb)

    def reclaim(self, rb_ids: tuple[int, ...], recipient: int) -> None:
        """Donor side of a reversion: drop the holder, free ids with none left.

        Validates every id before touching state so a refused reversion
        leaves the ledger exactly as it was.
        """
        for rb in rb_ids:
            holders = self.lent.get(rb)
            if holders is None or recipient not in holders:
                raise LedgerError(
                    f"BS {self.index}: id {rb} was not lent to {recipient}"
                )
        for rb in rb_ids:
            holders = self.lent[rb]
            holders.discard(recipient)
            if not holders:
                del self.lent[rb]
                bisect.insort(self.available, rb)


class RenevEngine:
    """Resource-transfer state machine over one deployment.

    Owns the per-BS ledgers, slice states, roles, overlap relation, polling
    order, transfer stack, and event counters. The Monte-Carlo driver calls
    :meth:`admit_user` and, on SC admission failure, :meth:`request`.
    """

    def __init__(
        self,
        deployment: Deployment,
        scheme: SliceScheme,
        *,
        donor_floor: int = 0,
        message_log: MessageLog | None = None,
    ):
        if donor_floor < 0:
            raise ValueError("donor_floor must be non-negative")
        self.deployment = deployment
        self.scheme = scheme
        self.donor_floor = donor_floor
        self.message_log = message_log
        self.ledgers = [
            _BsLedger(b.index, b.rb_ids) for b in deployment.stations
        ]
        self.slices = [
            SliceState(scheme, b.rb_count) for b in deployment.stations
        ]
        self.roles = [Role.IDLE for _ in deployment.stations]
        self.transfer_stack: list[TransferRecord] = []
        self.trace: list[dict[str, Any]] = []
        self._seq = 0
        self.n_requests = 0
        self.n_enb_polls = 0
        self.n_successes = 0
        self.n_enb_donations = 0
        self._poll_order = self._build_poll_order(deployment)

    @staticmethod
    def _build_poll_order(deployment: Deployment) -> dict[int, list[int]]:
        order: dict[int, list[int]] = {}
        sc_indices = [b.index for b in deployment.small_cells()]
        xy = deployment.bs_xy
        for i in sc_indices:
            others = [j for j in sc_indices if j != i]
            others.sort(
                key=lambda j: (float(np.hypot(*(xy[i] - xy[j]))), j)
            )
            order[i] = others
        return order

    # ------------------------------------------------------------------ admits

    def grantable(self, bs: int, slice_id: int) -> int:
        """RBs this BS could grant a user of the slice right now."""
        return min(
            self.slices[bs].headroom(slice_id), self.ledgers[bs].physical_free()
        )

    def admit_user(self, bs: int, slice_id: int, need_rb: int) -> bool:
        """Whole-grant admission; True when the user is served by this BS."""
        if need_rb <= 0:
            raise ValueError("need_rb must be positive")
        led = self.ledgers[bs]
        sls = self.slices[bs]
        if not sls.can_admit(slice_id, need_rb):
            return False
        if led.physical_free() < need_rb:
            return False
        sls.admit(slice_id, need_rb)
        led.take_for_user(need_rb)
        return True

    # ---------------------------------------------------------------- requests

    def _emit(self, kind: X2Kind, src: int, dst: int) -> None:
        if self.message_log is not None:
            self.message_log.emit(kind, src, dst)

    def _poll(self, requester: int, target: int) -> None:
        """Three-message status poll of one candidate donor."""
        self._emit(X2Kind.RESOURCE_STATUS_REQUEST, requester, target)
        self._emit(X2Kind.RESOURCE_STATUS_RESPONSE, target, requester)
        self._emit(X2Kind.LOAD_INFORMATION, requester, target)

    def _enb_candidates(self, recipient: int) -> tuple[list[int], list[int]]:
        """(reusable ids, fresh ids) the macro could lend to this SC."""
        enb = self.ledgers[MACRO_INDEX]
        overlap = self.deployment.overlap
        reusable = [
            rb
            for rb, holders in sorted(enb.lent.items())
            if recipient not in holders
            and not any(overlap[recipient, h] for h in holders)
        ]
        return reusable, list(enb.available)

    def request(self, bs: int, slice_id: int, deficit: int) -> bool:
        """Run one full transfer attempt for an SC short by ``deficit`` RBs.

        Polls all other SCs, then the eNB only if no SC donor qualifies.
        On success the loan is executed and the slice budget credited; the
        caller retries the admission (which then succeeds by construction).
        """
        if bs == MACRO_INDEX:
            raise LedgerError("the macro eNB never requests resources")
        if deficit <= 0:
            raise ValueError("deficit must be positive")
        self.roles[bs] = Role.REQUESTING
        self.n_requests += 1

        best: tuple[int, int, int] | None = None   # (spare, poll position, index)
        for pos, other in enumerate(self._poll_order[bs]):
            self.roles[other] = Role.REQUESTED
            self._poll(bs, other)
            spare = self.ledgers[other].spare_for_donation()
            self._restore_role(other)
            if spare - deficit >= self.donor_floor:
                if best is None or spare > best[0]:
                    best = (spare, pos, other)

        donor: int | None = None
        rb_ids: list[int] = []
        if best is not None:
            donor = best[2]
            rb_ids = self.ledgers[donor].available[:deficit]
        else:
            self.n_enb_polls += 1
            self._poll(bs, MACRO_INDEX)
            reusable, fresh = self._enb_candidates(bs)
            spare = len(reusable) + len(fresh)
            if spare - deficit >= self.donor_floor:
                donor = MACRO_INDEX
                rb_ids = (reusable + fresh)[:deficit]

        if donor is None:
            self._restore_role(bs)
            return False

        self._emit(X2Kind.METASIGNALLING_REQUEST, bs, donor)
        self._emit(X2Kind.METASIGNALLING_ACK, donor, bs)
        self._execute_transfer(donor, bs, rb_ids)
        self.slices[bs].add_credit(slice_id, len(rb_ids))
        self.n_successes += 1
        if donor == MACRO_INDEX:
            self.n_enb_donations += 1
        return True

    def _execute_transfer(self, donor: int, recipient: int, rb_ids: list[int]) -> None:
        flags = self.ledgers[donor].lend(rb_ids, recipient)
        self.ledgers[recipient].accept_loan(donor, rb_ids)
        self._seq += 1
        record = TransferRecord(
            seq=self._seq,
            donor=donor,
            recipient=recipient,
            rb_ids=tuple(rb_ids),
            reused=tuple(flags),
        )
        self.transfer_stack.append(record)
        self.trace.append({"event": "transfer", **record.to_dict()})
        self.roles[donor] = Role.DONOR
        self.roles[recipient] = Role.RECIPIENT

    def _restore_role(self, bs: int) -> None:
        led = self.ledgers[bs]
        if led.borrowed:
            self.roles[bs] = Role.RECIPIENT
        elif led.lent:
            self.roles[bs] = Role.DONOR
        else:
            self.roles[bs] = Role.IDLE

    # --------------------------------------------------------------- reversion

    def release_all_users(self) -> None:
        for led in self.ledgers:
            led.release_users()

    def revert_last(self) -> TransferRecord:
        """Undo the most recent loan; its ids must no longer be in use.

        A refused reversion (in-use ids) raises without changing anything:
        the record is popped only after both ledger sides have succeeded.
        """
        if not self.transfer_stack:
            raise LedgerError("no transfer to revert")
        record = self.transfer_stack[-1]
        self.ledgers[record.recipient].return_loan(record.donor, record.rb_ids)
        self.ledgers[record.donor].reclaim(record.rb_ids, record.recipient)
        self.transfer_stack.pop()
        self.trace.append({"event": "revert", **record.to_dict()})
        self._restore_role(record.donor)
        self._restore_role(record.recipient)
        return record

    def revert_all(self) -> None:
        """Demand drop: release every grant, then unwind all loans LIFO."""
        self.release_all_users()
        while self.transfer_stack:
            self.revert_last()
        self.verify()
        for bs in range(len(self.ledgers)):
            if self.roles[bs] not in (Role.IDLE,):
                raise LedgerError(f"BS {bs} role {self.roles[bs]} after full revert")

    # ------------------------------------------------------------- invariants

    def verify(self) -> None:
        """Check ledger partitions, loan symmetry, reuse disjointness, roles."""
        overlap = self.deployment.overlap
        for led in self.ledgers:
            own = set(led.own_ids)
            avail = set(led.available)
            if len(avail) != len(led.available):
                raise LedgerError(f"BS {led.index}: duplicate free ids")
            lent_ids = set(led.lent)
            parts = [avail, led.used_own, lent_ids]
            if set().union(*parts) != own or sum(map(len, parts)) != len(own):
                raise LedgerError(f"BS {led.index}: own ids not partitioned")
            if led.index == MACRO_INDEX:
                if led.borrowed:
                    raise LedgerError("the macro eNB must never borrow")
                for rb, holders in led.lent.items():
                    if not holders:
                        raise LedgerError(f"macro id {rb} lent to nobody")
                    hl = sorted(holders)
                    for a in range(len(hl)):
                        for b in range(a + 1, len(hl)):
                            if overlap[hl[a], hl[b]]:
                                raise LedgerError(
                                    f"macro id {rb} reused across overlapping"
                                    f" SCs {hl[a]} and {hl[b]}"
                                )
            else:
                for rb, holders in led.lent.items():
                    if len(holders) != 1:
                        raise LedgerError(
                            f"SC {led.index} id {rb} must have one holder"
                        )
            for donor, rb in led.borrowed:
                holders = self.ledgers[donor].lent.get(rb)
                if holders is None or led.index not in holders:
                    raise LedgerError(
                        f"BS {led.index} borrow of id {rb} unmatched at {donor}"
                    )
            in_use = led.used_borrowed
            unused = set(led.borrowed_unused)
            b_ids = {rb for _, rb in led.borrowed}
            if in_use | unused != b_ids or (in_use & unused):
                raise LedgerError(f"BS {led.index}: borrowed ids not partitioned")
        if self.roles[MACRO_INDEX] in (Role.REQUESTING, Role.RECIPIENT):
            raise LedgerError("macro eNB must never request or receive")

    def conservation_totals(self) -> dict[str, int]:
        """Tier-level id conservation: every own id is in exactly one bucket."""
        totals = {"macro_owned": 0, "sc_owned": 0}
        for led in self.ledgers:
            bucket = "macro_owned" if led.index == MACRO_INDEX else "sc_owned"
            totals[bucket] += (
                len(led.available) + len(led.used_own) + len(led.lent)
            )
        return totals

    # ----------------------------------------------------------------- output

    def donation_stats(self) -> dict[str, int]:
        """Loan volume at the current instant (call before reversion)."""
        sc_lent = sum(
            led.lent_count for led in self.ledgers if led.index != MACRO_INDEX
        )
        enb = self.ledgers[MACRO_INDEX]
        enb_grants = sum(len(h) for h in enb.lent.values())
        return {
            "sc_lent_ids": sc_lent,
            "enb_lent_ids": enb.lent_count,
            "enb_granted_loans": enb_grants,
        }

    def export_trace(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"events": self.trace}, fh, indent=2)
