"""Core market vocabulary: quotes, reference prices, trades, PnL accounting.

Sign conventions: positive inventory is net long.  The spread PnL of a fill
is a zero-sum transfer from the aggressive side to the passive side, signed
so that a passive quote better than mid loses spread PnL.  Inventory PnL is
the mark-to-market move of the held position.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Reserved owner/agent id for the exchange's own synthetic orders.
ECN_ID = -1

BUY = "buy"
SELL = "sell"


@dataclass(frozen=True)
class Quote:
    """A dealer's two-sided price. Size defaults to unbounded client fills."""

    bid_price: float
    ask_price: float
    quote_size: float = float("inf")


@dataclass(frozen=True)
class ReferencePrices:
    """ECN mid-price and the half spreads on each side of it."""

    p_mid: float
    s_ref_bid: float
    s_ref_ask: float

    @property
    def total_spread(self) -> float:
        return self.s_ref_bid + self.s_ref_ask


@dataclass(frozen=True)
class Trade:
    """One execution, seen from the aggressor's perspective."""

    side: str  # BUY or SELL: the direction the aggressor traded
    qty: float
    exec_price: float
    aggressor_id: int
    counterparty_id: int
    step: int = 0

    def __post_init__(self):
        if self.side not in (BUY, SELL):
            raise ValueError(f"bad trade side {self.side!r}")
        if self.qty <= 0:
            raise ValueError(f"trade qty must be > 0, got {self.qty}")
        if self.exec_price <= 0:
            raise ValueError(f"trade price must be > 0, got {self.exec_price}")


@dataclass
class PnLLedger:
    """Per-agent cash/inventory accounting with a spread/inventory split.

    ``last_step_deltas`` holds (d_total, d_inventory, d_spread) for the most
    recently closed step; it is refreshed by :func:`mark_to_market`, which
    acts as the step boundary.
    """

    inventory: float = 0.0
    cash: float = 0.0
    spread_pnl_cum: float = 0.0
    inventory_pnl_cum: float = 0.0
    last_step_deltas: tuple = (0.0, 0.0, 0.0)
    _prev_spread_cum: float = field(default=0.0, repr=False)
    _prev_inventory_cum: float = field(default=0.0, repr=False)
    _inv_at_last_mark: float = field(default=None, repr=False)

    def __post_init__(self):
        if self._inv_at_last_mark is None:
            self._inv_at_last_mark = self.inventory

    @property
    def total_pnl(self) -> float:
        return self.spread_pnl_cum + self.inventory_pnl_cum


def spread_pnl(qty: float, spread: float) -> float:
    """Spread PnL of a fill: quantity times the (signed) spread earned."""
    if qty < 0:
        raise ValueError(f"qty must be >= 0, got {qty}")
    return qty * spread


def inventory_pnl(inventory: float, delta_mid: float) -> float:
    """PnL from holding ``inventory`` through a mid-price move."""
    return inventory * delta_mid


def apply_trade(ledger: PnLLedger, trade: Trade, ref: ReferencePrices,
                is_aggressor: bool) -> PnLLedger:
    """Book one side of a trade into ``ledger`` (mutates and returns it).

    The passive side earns ``qty * edge`` where ``edge`` is the quoted
    price's distance beyond the mid in its favor (negative if it quoted
    through the mid); the aggressor pays exactly that, so the transfer is
    zero-sum.
    """
    sign = 1.0 if trade.side == BUY else -1.0
    # Edge earned per unit by the passive side.
    if trade.side == BUY:
        edge = trade.exec_price - ref.p_mid
    else:
        edge = ref.p_mid - trade.exec_price
    if is_aggressor:
        ledger.inventory += sign * trade.qty
        ledger.cash -= sign * trade.qty * trade.exec_price
        ledger.spread_pnl_cum -= spread_pnl(trade.qty, edge)
    else:
        ledger.inventory -= sign * trade.qty
        ledger.cash += sign * trade.qty * trade.exec_price
        ledger.spread_pnl_cum += spread_pnl(trade.qty, edge)
    return ledger


def mark_to_market(ledger: PnLLedger, new_mid: float, old_mid: float) -> PnLLedger:
    """Close a step: mark inventory through the mid move, refresh deltas.

    The move is earned by the inventory held at the previous mark.  Units
    traded during the step were booked with their edge measured against
    new_mid, so they start marking from new_mid; crediting them here too
    would double count (and break total = cash + inventory * mid).
    """
    ledger.inventory_pnl_cum += inventory_pnl(ledger._inv_at_last_mark, new_mid - old_mid)
    ledger._inv_at_last_mark = ledger.inventory
    d_spread = ledger.spread_pnl_cum - ledger._prev_spread_cum
    d_inv = ledger.inventory_pnl_cum - ledger._prev_inventory_cum
    ledger.last_step_deltas = (d_spread + d_inv, d_inv, d_spread)
    ledger._prev_spread_cum = ledger.spread_pnl_cum
    ledger._prev_inventory_cum = ledger.inventory_pnl_cum
    return ledger
