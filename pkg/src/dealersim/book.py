"""FIFO limit order book on an integer tick grid.

Prices are stored internally as integer tick counts (tick size 0.01 by
default) so that level keys compare exactly.  The mid-price may fall on a
half tick.  Matching is price-then-arrival priority; order ids are assigned
in arrival order and double as the FIFO sequence number.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .marketcore import BUY, SELL, ECN_ID, ReferencePrices


class BookError(Exception):
    pass


class EmptySide(BookError):
    """A query needed a side of the book that holds no orders."""


class InvalidPrice(BookError):
    """Submitted price does not sit on the tick grid."""


class UnknownOrder(BookError):
    """Order id is not resting in the book."""


@dataclass(frozen=True)
class Fill:
    """One passive order (partially) consumed by an aggressive order."""

    maker_order_id: int
    maker_owner: int
    price: float
    qty: float


def center_tick(best_bid_tick: int, best_ask_tick: int) -> int:
    """Tick at or just below the book's (possibly half-tick) mid.

    Only an anchoring helper for re-seeding and trend placement; snapshot
    ladders are anchored to the best quotes, not to this.
    """
    return (best_bid_tick + best_ask_tick - 1) // 2


class OrderBook:
    def __init__(self, tick_size: float = 0.01):
        self.tick_size = tick_size
        self.bids: dict[int, deque] = {}  # tick -> deque of [order_id, owner, qty]
        self.asks: dict[int, deque] = {}
        self._index: dict[int, tuple[str, int]] = {}  # order_id -> (side, tick)
        self._next_id = 0

    # -- price/tick helpers -------------------------------------------------

    def to_tick(self, price: float) -> int:
        t = price / self.tick_size
        tick = round(t)
        if abs(t - tick) > 1e-6:
            raise InvalidPrice(f"price {price} is not on the {self.tick_size} grid")
        return int(tick)

    def to_price(self, tick: int) -> float:
        return tick * self.tick_size

    # -- queries ------------------------------------------------------------

    def best_bid_tick(self) -> int:
        if not self.bids:
            raise EmptySide("bid side is empty")
        return max(self.bids)

    def best_ask_tick(self) -> int:
        if not self.asks:
            raise EmptySide("ask side is empty")
        return min(self.asks)

    def best_bid(self) -> float:
        return self.to_price(self.best_bid_tick())

    def best_ask(self) -> float:
        return self.to_price(self.best_ask_tick())

    def mid_and_spreads(self) -> ReferencePrices:
        bb, ba = self.best_bid_tick(), self.best_ask_tick()
        mid = 0.5 * (bb + ba) * self.tick_size
        return ReferencePrices(
            p_mid=mid,
            s_ref_bid=mid - self.to_price(bb),
            s_ref_ask=self.to_price(ba) - mid,
        )

    def level_volume(self, side: str, tick: int) -> float:
        levels = self.bids if side == BUY else self.asks
        q = levels.get(tick)
        return sum(o[2] for o in q) if q else 0.0

    def total_volume(self, side: str) -> float:
        levels = self.bids if side == BUY else self.asks
        return sum(o[2] for q in levels.values() for o in q)

    def order_count(self) -> int:
        return len(self._index)

    # -- order entry ----------------------------------------------------------

    def submit_limit(self, side: str, price: float, qty: float, owner: int):
        """Cross what is marketable, rest the remainder. Returns (order_id, fills)."""
        if qty <= 0:
            raise ValueError(f"qty must be > 0, got {qty}")
        tick = self.to_tick(price)
        order_id = self._next_id
        self._next_id += 1
        remaining, fills = self._cross(side, qty, limit_tick=tick)
        if remaining > 1e-12:
            levels = self.bids if side == BUY else self.asks
            levels.setdefault(tick, deque()).append([order_id, owner, remaining])
            self._index[order_id] = (side, tick)
        return order_id, fills

    def submit_market(self, side: str, qty: float, owner: int = ECN_ID):
        """Walk the opposite side best-price first; partial fill is allowed.

        Returns (executed_qty, vwap, fills); vwap is 0.0 when nothing executed.
        """
        if qty <= 0:
            raise ValueError(f"qty must be > 0, got {qty}")
        remaining, fills = self._cross(side, qty, limit_tick=None)
        executed = qty - remaining
        if executed <= 0:
            return 0.0, 0.0, fills
        vwap = sum(f.price * f.qty for f in fills) / executed
        return executed, vwap, fills

    def peek_market(self, side: str, qty: float):
        """Like submit_market but without mutating the book."""
        if qty <= 0:
            raise ValueError(f"qty must be > 0, got {qty}")
        levels = self.asks if side == BUY else self.bids
        ticks = sorted(levels) if side == BUY else sorted(levels, reverse=True)
        remaining = qty
        notional = 0.0
        for tick in ticks:
            if remaining <= 1e-12:
                break
            avail = sum(o[2] for o in levels[tick])
            take = min(avail, remaining)
            notional += take * self.to_price(tick)
            remaining -= take
        executed = qty - remaining
        vwap = notional / executed if executed > 0 else 0.0
        return executed, vwap

    def shift_ticks(self, k: int) -> None:
        """Translate every resting order by k ticks, preserving queues.

        Used by the artificial-trend overlay: volumes and spreads are
        invariant, only the absolute price level moves.
        """
        if k == 0:
            return
        self.bids = {tick + k: q for tick, q in self.bids.items()}
        self.asks = {tick + k: q for tick, q in self.asks.items()}
        self._index = {oid: (side, tick + k) for oid, (side, tick) in self._index.items()}

    def cancel(self, order_id: int) -> float:
        """Remove a resting order, returning its remaining quantity."""
        if order_id not in self._index:
            raise UnknownOrder(f"order {order_id} not in book")
        side, tick = self._index.pop(order_id)
        levels = self.bids if side == BUY else self.asks
        queue = levels[tick]
        for i, order in enumerate(queue):
            if order[0] == order_id:
                qty = order[2]
                del queue[i]
                if not queue:
                    del levels[tick]
                return qty
        raise UnknownOrder(f"order {order_id} index out of sync")  # pragma: no cover

    def reduce_level(self, side: str, tick: int, qty: float, owner: int | None = None) -> float:
        """Cancel up to ``qty`` volume at one level, newest orders first.

        Used by the statistical evolution model to shrink a level; truncates
        to the available (owner-matching) volume and returns what was removed.
        """
        levels = self.bids if side == BUY else self.asks
        queue = levels.get(tick)
        if not queue:
            return 0.0
        removed = 0.0
        for order in reversed(list(queue)):
            if removed >= qty - 1e-12:
                break
            if owner is not None and order[1] != owner:
                continue
            take = min(order[2], qty - removed)
            order[2] -= take
            removed += take
            if order[2] <= 1e-12:
                queue.remove(order)
                del self._index[order[0]]
        if not queue:
            del levels[tick]
        return removed

    # -- matching -------------------------------------------------------------

    def _cross(self, side: str, qty: float, limit_tick: int | None):
        """Consume opposing liquidity in price-then-FIFO order."""
        levels = self.asks if side == BUY else self.bids
        remaining = qty
        fills: list[Fill] = []
        while remaining > 1e-12 and levels:
            best = min(levels) if side == BUY else max(levels)
            if limit_tick is not None:
                if side == BUY and best > limit_tick:
                    break
                if side == SELL and best < limit_tick:
                    break
            queue = levels[best]
            while queue and remaining > 1e-12:
                order = queue[0]
                take = min(order[2], remaining)
                fills.append(Fill(order[0], order[1], self.to_price(best), take))
                order[2] -= take
                remaining -= take
                if order[2] <= 1e-12:
                    queue.popleft()
                    del self._index[order[0]]
            if not queue:
                del levels[best]
        return remaining, fills


@dataclass
class BookSnapshot:
    """Volumes at the top ``n`` ladder levels per side.

    Each ladder starts one tick inside the opposite side's best quote:
    bid level i reads tick ``ba - 1 - i`` and ask level i reads
    ``bb + 1 + i``.  Ticks inside a widened spread read as zero on both
    ladders, so the evolution model can re-tighten either side without a
    built-in preference (a one-sided convention here shows up as a small
    but persistent mid drift over long simulations).
    """

    mid: float
    best_bid: int
    best_ask: int
    bid_volumes: list
    ask_volumes: list

    @property
    def volumes(self) -> list:
        return list(self.bid_volumes) + list(self.ask_volumes)

    @property
    def center(self) -> int:
        return center_tick(self.best_bid, self.best_ask)

    @classmethod
    def from_book(cls, book: OrderBook, n_levels: int) -> "BookSnapshot":
        bb, ba = book.best_bid_tick(), book.best_ask_tick()
        bid_vols = [book.level_volume(BUY, ba - 1 - i) for i in range(n_levels)]
        ask_vols = [book.level_volume(SELL, bb + 1 + i) for i in range(n_levels)]
        return cls(
            mid=0.5 * (bb + ba) * book.tick_size,
            best_bid=bb,
            best_ask=ba,
            bid_volumes=bid_vols,
            ask_volumes=ask_vols,
        )

    def bid_tick(self, level: int) -> int:
        return self.best_ask - 1 - level

    def ask_tick(self, level: int) -> int:
        return self.best_bid + 1 + level
