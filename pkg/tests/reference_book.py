"""Naive order-book reference: a flat list of orders, scanned per operation.

Deliberately simple and slow.  Matching picks the best-priced opposing
order, breaking ties by arrival id, one fill at a time.  The real book
must produce identical fill sequences and identical resting state.
"""

from __future__ import annotations

from dealersim.marketcore import BUY, SELL


class NaiveBook:
    def __init__(self, tick_size: float = 0.01):
        self.tick_size = tick_size
        self.orders: list[dict] = []  # kept in arrival order
        self.next_id = 0

    def _alive(self, side: str):
        return [o for o in self.orders if o["side"] == side and o["qty"] > 1e-12]

    def _best_opposing(self, side: str, limit_tick):
        """Most aggressive opposing order, FIFO within a price."""
        opposing = self._alive(SELL if side == BUY else BUY)
        if not opposing:
            return None
        if side == BUY:
            best = min(opposing, key=lambda o: (o["tick"], o["id"]))
            if limit_tick is not None and best["tick"] > limit_tick:
                return None
        else:
            best = min(opposing, key=lambda o: (-o["tick"], o["id"]))
            if limit_tick is not None and best["tick"] < limit_tick:
                return None
        return best

    def _cross(self, side: str, qty: float, limit_tick):
        fills = []
        remaining = qty
        while remaining > 1e-12:
            maker = self._best_opposing(side, limit_tick)
            if maker is None:
                break
            take = min(maker["qty"], remaining)
            fills.append((maker["id"], maker["owner"], maker["tick"] * self.tick_size, take))
            maker["qty"] -= take
            remaining -= take
        self.orders = [o for o in self.orders if o["qty"] > 1e-12]
        return remaining, fills

    def submit_limit(self, side: str, tick: int, qty: float, owner: int):
        order_id = self.next_id
        self.next_id += 1
        remaining, fills = self._cross(side, qty, limit_tick=tick)
        if remaining > 1e-12:
            self.orders.append(
                {"id": order_id, "side": side, "tick": tick, "qty": remaining, "owner": owner}
            )
        return order_id, fills

    def submit_market(self, side: str, qty: float):
        remaining, fills = self._cross(side, qty, limit_tick=None)
        executed = qty - remaining
        if executed <= 0:
            return 0.0, 0.0, fills
        vwap = sum(p * q for _, _, p, q in fills) / executed
        return executed, vwap, fills

    def cancel(self, order_id: int) -> float:
        for o in self.orders:
            if o["id"] == order_id:
                self.orders.remove(o)
                return o["qty"]
        raise KeyError(order_id)

    def live_ids(self):
        return [o["id"] for o in self.orders]

    def state(self):
        """side -> tick -> [(id, owner, qty)] in arrival order."""
        out = {BUY: {}, SELL: {}}
        for o in self.orders:
            out[o["side"]].setdefault(o["tick"], []).append(
                (o["id"], o["owner"], round(o["qty"], 9))
            )
        return out


def real_book_state(book):
    """The same shape as NaiveBook.state() from a dealersim OrderBook."""
    out = {BUY: {}, SELL: {}}
    for side, levels in ((BUY, book.bids), (SELL, book.asks)):
        for tick, queue in levels.items():
            out[side][tick] = [(oid, owner, round(qty, 9)) for oid, owner, qty in queue]
    return out


def fills_tuple(fills, tick_size: float):
    """Normalize dealersim Fill objects for comparison with naive fills."""
    return [
        (f.maker_order_id, f.maker_owner, round(f.price / tick_size), round(f.qty, 9))
        for f in fills
    ]


def naive_fills_tuple(fills, tick_size: float):
    return [
        (oid, owner, round(price / tick_size), round(qty, 9))
        for oid, owner, price, qty in fills
    ]
