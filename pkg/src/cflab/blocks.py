"""Products of consecutive partial quotients: ledgers, event detectors, trimmed sums.

Block i (1-based) of length ell covers quotients a_i .. a_{i+ell-1}. A level-n
check may use blocks with start index <= n, so a stream is consumed up to
index n + ell - 1. Products are compared in log space with an exact
big-integer fallback inside a 1e-9 band around the threshold.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right, insort
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional

from .cf import take
from .errors import DomainError
from .growth import GrowthFunction

LOG_BAND = 1e-9


class BlockProduct(NamedTuple):
    log_value: float
    exact: int


@dataclass(frozen=True)
class EventRecord:
    n: int
    j: int
    k: int
    overlap: int


class BlockProductLedger:
    """Committed block products with a sorted index for threshold counting.

    One quotient is pushed at a time; a block commits once its window is
    full, i.e. block i commits when quotient i + ell - 1 arrives. The window
    product is maintained exactly (multiply/divide by integers), so the float
    log of each committed product carries no accumulated drift.
    """

    def __init__(self, ell: int):
        if ell < 1:
            raise DomainError("ell must be >= 1")
        self.ell = ell
        self._window: deque[int] = deque()
        self._window_product = 1
        self.log_products: list[float] = []
        self.exact_products: list[int] = []
        self.sorted_logs: list[float] = []

    @property
    def committed(self) -> int:
        return len(self.log_products)

    def push(self, a: int) -> bool:
        """Feed one quotient; returns True when a block was committed."""
        if a < 1:
            raise DomainError("partial quotients must be >= 1")
        self._window.append(a)
        self._window_product *= a
        if len(self._window) > self.ell:
            self._window_product //= self._window.popleft()
        if len(self._window) < self.ell:
            return False
        exact = self._window_product
        lg = math.log(exact)
        self.log_products.append(lg)
        self.exact_products.append(exact)
        insort(self.sorted_logs, lg)
        return True

    def count_at_least(self, phi: GrowthFunction, n: int) -> int:
        """Number of committed blocks with product >= phi(n).

        Counts by ordered search on the float logs; entries within LOG_BAND of
        log phi(n) are re-resolved with the exact integer product.
        """
        thr = phi.log_phi(n)
        if math.isinf(thr):
            return 0
        lo = bisect_left(self.sorted_logs, thr - LOG_BAND)
        hi = bisect_right(self.sorted_logs, thr + LOG_BAND)
        certain = len(self.sorted_logs) - hi
        if hi == lo:
            return certain
        borderline = 0
        for lg, exact in zip(self.log_products, self.exact_products):
            if thr - LOG_BAND <= lg <= thr + LOG_BAND and phi.meets_threshold(exact, n):
                borderline += 1
        return certain + borderline

    def qualifying_indices(self, phi: GrowthFunction, n: int) -> list[int]:
        """1-based start indices of committed blocks with product >= phi(n)."""
        thr = phi.log_phi(n)
        out = []
        for i, (lg, exact) in enumerate(zip(self.log_products, self.exact_products), start=1):
            if lg > thr + LOG_BAND or (lg >= thr - LOG_BAND and phi.meets_threshold(exact, n)):
                out.append(i)
        return out


def block_products(seq, ell: int) -> list[BlockProduct]:
    """All length-ell block products of a finite word, logs plus exact values."""
    seq = list(seq)
    if len(seq) < ell:
        raise DomainError(f"need at least {ell} terms, got {len(seq)}")
    ledger = BlockProductLedger(ell)
    for a in seq:
        ledger.push(a)
    return [BlockProduct(lg, ex) for lg, ex in zip(ledger.log_products, ledger.exact_products)]


def first_F_event(
    stream: Iterable[int], ell: int, phi: GrowthFunction, horizon: int
) -> Optional[tuple[int, EventRecord]]:
    """Smallest n <= horizon at which two distinct block starts beat phi(n).

    Incremental: maintains the sorted log index and counts entries >= log
    phi(n) at each level, O(log n) per step away from the threshold band.
    Returns (n, record) with j the smallest and k the largest qualifying
    start index at that level; None when no level qualifies.
    """
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    ledger = BlockProductLedger(ell)
    it = iter(stream)
    fed = 0
    while ledger.committed < horizon:
        try:
            a = next(it)
        except StopIteration:
            break
        fed += 1
        if fed > horizon + ell - 1:
            break
        if not ledger.push(a):
            continue
        n = ledger.committed
        if ledger.count_at_least(phi, n) >= 2:
            qual = ledger.qualifying_indices(phi, n)
            j, k = qual[0], qual[-1]
            return n, EventRecord(n=n, j=j, k=k, overlap=max(0, j + ell - k))
    return None


def first_E_event(
    stream: Iterable[int], ell: int, phi: GrowthFunction, horizon: int
) -> Optional[int]:
    """Smallest n <= horizon whose own block product beats phi(n)."""
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    ledger = BlockProductLedger(ell)
    it = iter(stream)
    fed = 0
    while ledger.committed < horizon:
        try:
            a = next(it)
        except StopIteration:
            break
        fed += 1
        if fed > horizon + ell - 1:
            break
        if not ledger.push(a):
            continue
        n = ledger.committed
        lg = ledger.log_products[-1]
        thr = phi.log_phi(n)
        if lg > thr + LOG_BAND:
            return n
        if lg >= thr - LOG_BAND and phi.meets_threshold(ledger.exact_products[-1], n):
            return n
    return None


def a_nk_membership(seq, n: int, k: int, ell: int, phi: GrowthFunction) -> bool:
    """Whether both the block at k and the block at n have products >= phi(n)."""
    seq = list(seq)
    if not 1 <= k <= n - 1:
        raise DomainError("require 1 <= k <= n - 1")
    if len(seq) < n + ell - 1:
        raise DomainError(f"need {n + ell - 1} terms, got {len(seq)}")
    prod_k = math.prod(seq[k - 1 : k - 1 + ell])
    prod_n = math.prod(seq[n - 1 : n - 1 + ell])
    return phi.meets_threshold(prod_k, n) and phi.meets_threshold(prod_n, n)


class TrimmedRow(NamedTuple):
    n: int
    total: int
    max_block: int
    normalized: float


def trimmed_sum_trajectory(stream: Iterable[int], ell: int, horizon: int) -> Iterator[TrimmedRow]:
    """Per-n rows (S_{n,ell}, running max block, trimmed normalized value).

    S and the max are exact integers; normalized = (S - M) / (n log^ell n),
    NaN at n = 1 where the normalizer vanishes.
    """
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    ledger = BlockProductLedger(ell)
    it = iter(stream)
    total = 0
    max_block = 0
    while ledger.committed < horizon:
        try:
            a = next(it)
        except StopIteration:
            raise DomainError("stream exhausted before horizon") from None
        if not ledger.push(a):
            continue
        n = ledger.committed
        exact = ledger.exact_products[-1]
        total += exact
        if exact > max_block:
            max_block = exact
        if n == 1:
            norm = math.nan
        else:
            norm = float(total - max_block) / (n * math.log(n) ** ell)
        yield TrimmedRow(n, total, max_block, norm)


def progression_sum(stream: Iterable[int], ell: int, d: int, n: int) -> int:
    """Exact sum over j <= n of a_j a_{j+d} ... a_{j+(ell-1)d}."""
    if d < 1:
        raise DomainError("d must be >= 1")
    if n < 1:
        raise DomainError("n must be >= 1")
    seq = take(stream, n + (ell - 1) * d)
    total = 0
    for j in range(1, n + 1):
        prod = 1
        for t in range(ell):
            prod *= seq[j - 1 + t * d]
        total += prod
    return total


def running_max(stream: Iterable[int], ell: int, horizon: int) -> Iterator[tuple[int, int]]:
    """Per-n running maximum L_{ell,n} of block products, exact."""
    ledger = BlockProductLedger(ell)
    it = iter(stream)
    best = 0
    while ledger.committed < horizon:
        try:
            a = next(it)
        except StopIteration:
            raise DomainError("stream exhausted before horizon") from None
        if not ledger.push(a):
            continue
        if ledger.exact_products[-1] > best:
            best = ledger.exact_products[-1]
        yield ledger.committed, best
