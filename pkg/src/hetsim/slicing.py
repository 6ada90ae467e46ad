"""Per-BS slice admission policies: static shares (nvs) and reserved-plus-shared (prr).

Scheme strings
--------------
* ``"nvs"``: each slice owns a fixed fraction of the BS capacity (equal shares
  unless explicit shares are configured). No slice may exceed its budget.
* ``"prr:<p>"``: ``p`` is the SHARED fraction of capacity, pooled first-come
  first-served across slices; the remaining ``1-p`` is split equally into
  per-slice reserved quotas, consumed before the shared pool. ``prr:1.0`` is a
  single FCFS pool.

Grants are whole-user: a user is admitted with its full RB need or not at all.
Borrowed RBs extend the policy budget of the slice they were fetched for (nvs)
or the shared pool (prr); physical RB availability is tracked separately by the
resource ledger.
"""

from __future__ import annotations

from dataclasses import dataclass

_EPS = 1e-9


@dataclass(frozen=True)
class SliceScheme:
    """Parsed admission policy shared by every BS in a run."""

    kind: str                      # "nvs" | "prr"
    slice_count: int
    shares: tuple[float, ...]      # nvs budget fractions, sum 1
    shared_fraction: float         # prr shared pool fraction, in [0, 1]

    def label(self) -> str:
        if self.kind == "nvs":
            return "nvs"
        return f"prr:{self.shared_fraction:g}"


def parse_scheme(
    text: str, slice_count: int, shares: list[float] | None = None
) -> SliceScheme:
    """Parse a scheme string; raises ValueError on malformed input."""
    if slice_count < 1:
        raise ValueError("slice_count must be at least 1")
    text = text.strip().lower()
    if text == "nvs":
        if shares is None:
            parsed = tuple(1.0 / slice_count for _ in range(slice_count))
        else:
            if len(shares) != slice_count:
                raise ValueError(
                    f"nvs shares length {len(shares)} != slice_count {slice_count}"
                )
            if any(s < 0 for s in shares):
                raise ValueError("nvs shares must be non-negative")
            total = sum(shares)
            if abs(total - 1.0) > 1e-6:
                raise ValueError(f"nvs shares must sum to 1 (got {total})")
            parsed = tuple(float(s) for s in shares)
        return SliceScheme(
            kind="nvs", slice_count=slice_count, shares=parsed, shared_fraction=0.0
        )
    if text.startswith("prr:"):
        try:
            p = float(text[4:])
        except ValueError as exc:
            raise ValueError(f"malformed prr fraction in {text!r}") from exc
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"prr shared fraction must lie in [0, 1], got {p}")
        return SliceScheme(
            kind="prr",
            slice_count=slice_count,
            shares=tuple(0.0 for _ in range(slice_count)),
            shared_fraction=p,
        )
    raise ValueError(f"unknown scheme {text!r} (expected 'nvs' or 'prr:<fraction>')")


class SliceState:
    """Admission bookkeeping for one BS under one scheme.

    Tracks policy budgets only; whether physical RBs are free is the resource
    ledger's concern. All grants are integer RB counts.
    """

    def __init__(self, scheme: SliceScheme, capacity_rb: int):
        if capacity_rb < 0:
            raise ValueError("capacity_rb must be non-negative")
        self.scheme = scheme
        self.capacity_rb = capacity_rb
        n = scheme.slice_count
        if scheme.kind == "nvs":
            self._budget = [scheme.shares[s] * capacity_rb for s in range(n)]
            self._used = [0] * n
        else:
            reserved_total = (1.0 - scheme.shared_fraction) * capacity_rb
            self._reserved_cap = [reserved_total / n] * n
            self._used_reserved = [0] * n
            self._shared_cap = scheme.shared_fraction * capacity_rb
            self._used_shared = 0
        self._credit = [0] * n          # borrowed RBs credited per slice (nvs)
        self._credit_shared = 0         # borrowed RBs credited to the pool (prr)

    def _check_slice(self, slice_id: int) -> None:
        if not 0 <= slice_id < self.scheme.slice_count:
            raise ValueError(f"slice_id {slice_id} out of range")

    def headroom(self, slice_id: int) -> int:
        """Whole RBs still grantable to a slice under the policy budgets."""
        self._check_slice(slice_id)
        if self.scheme.kind == "nvs":
            cap = self._budget[slice_id] + self._credit[slice_id]
            return max(0, int(cap + _EPS) - self._used[slice_id])
        reserved = max(
            0,
            int(self._reserved_cap[slice_id] + _EPS) - self._used_reserved[slice_id],
        )
        shared = max(
            0,
            int(self._shared_cap + self._credit_shared + _EPS) - self._used_shared,
        )
        return reserved + shared

    def can_admit(self, slice_id: int, need_rb: int) -> bool:
        if need_rb <= 0:
            raise ValueError("need_rb must be positive")
        return need_rb <= self.headroom(slice_id)

    def admit(self, slice_id: int, need_rb: int) -> None:
        """Consume budget for one admitted user; caller checked can_admit."""
        if not self.can_admit(slice_id, need_rb):
            raise RuntimeError("admit called without budget headroom")
        if self.scheme.kind == "nvs":
            self._used[slice_id] += need_rb
            return
        reserved_room = max(
            0,
            int(self._reserved_cap[slice_id] + _EPS) - self._used_reserved[slice_id],
        )
        take_reserved = min(need_rb, reserved_room)
        self._used_reserved[slice_id] += take_reserved
        self._used_shared += need_rb - take_reserved

    def add_credit(self, slice_id: int, rbs: int) -> None:
        """Extend budgets by borrowed RBs fetched on behalf of a slice."""
        self._check_slice(slice_id)
        if rbs < 0:
            raise ValueError("credit must be non-negative")
        if self.scheme.kind == "nvs":
            self._credit[slice_id] += rbs
        else:
            self._credit_shared += rbs

    def used_total(self) -> int:
        if self.scheme.kind == "nvs":
            return sum(self._used)
        return sum(self._used_reserved) + self._used_shared

    def used_by_slice(self, slice_id: int) -> int:
        self._check_slice(slice_id)
        if self.scheme.kind == "nvs":
            return self._used[slice_id]
        # prr: reserved usage is attributable; shared usage is pooled and not
        # tracked per slice, so per-slice usage reports the reserved part only.
        return self._used_reserved[slice_id]

    def isolation_bound(self, slice_id: int) -> float:
        """RBs the policy guarantees a slice no matter what other slices do.

        nvs budgets are exclusive, so the budget is the guarantee; under prr
        only the reserved quota is protected (the shared pool is first-come
        first-served). Whole-RB grants truncate the fractional part.
        """
        self._check_slice(slice_id)
        if self.scheme.kind == "nvs":
            return self._budget[slice_id]
        return self._reserved_cap[slice_id]
