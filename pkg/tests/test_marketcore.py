import numpy as np
import pytest
from hypothesis import given, strategies as st

from dealersim.marketcore import (
    BUY,
    ECN_ID,
    SELL,
    PnLLedger,
    ReferencePrices,
    Trade,
    apply_trade,
    inventory_pnl,
    mark_to_market,
    spread_pnl,
)

REL = 1e-9


def close(a, b):
    return a == pytest.approx(b, rel=REL, abs=1e-12)


def test_spread_pnl_values():
    assert close(spread_pnl(2, 0.3), 0.6)
    assert close(spread_pnl(0, 5.0), 0.0)
    # negative spread: the passive side paid to trade
    assert close(spread_pnl(3, -0.1), -0.3)


def test_spread_pnl_rejects_negative_qty():
    with pytest.raises(ValueError):
        spread_pnl(-1.0, 0.2)


def test_inventory_pnl_values():
    assert close(inventory_pnl(5, -0.2), -1.0)
    assert close(inventory_pnl(0, 1.7), 0.0)
    assert close(inventory_pnl(-4, -0.5), 2.0)


def test_trade_validation():
    with pytest.raises(ValueError):
        Trade(side="borrow", qty=1.0, exec_price=100.0, aggressor_id=0, counterparty_id=1)
    with pytest.raises(ValueError):
        Trade(side=BUY, qty=0.0, exec_price=100.0, aggressor_id=0, counterparty_id=1)
    with pytest.raises(ValueError):
        Trade(side=BUY, qty=1.0, exec_price=-1.0, aggressor_id=0, counterparty_id=1)


REF = ReferencePrices(p_mid=100.0, s_ref_bid=0.5, s_ref_ask=0.5)


def test_apply_trade_passive_seller_earns_spread():
    # Dealer passively sells 1 @ 100.5 against mid 100.
    lp = PnLLedger()
    trade = Trade(side=BUY, qty=1.0, exec_price=100.5, aggressor_id=9, counterparty_id=0)
    apply_trade(lp, trade, REF, is_aggressor=False)
    assert close(lp.spread_pnl_cum, 0.5)
    assert close(lp.inventory, -1.0)
    assert close(lp.cash, 100.5)


def test_apply_trade_aggressive_buyer_pays_spread():
    lt = PnLLedger()
    trade = Trade(side=BUY, qty=1.0, exec_price=100.5, aggressor_id=9, counterparty_id=0)
    apply_trade(lt, trade, REF, is_aggressor=True)
    assert close(lt.spread_pnl_cum, -0.5)
    assert close(lt.inventory, 1.0)
    assert close(lt.cash, -100.5)


def test_apply_trade_at_mid_transfers_nothing():
    ledger = PnLLedger()
    trade = Trade(side=SELL, qty=2.0, exec_price=100.0, aggressor_id=9, counterparty_id=0)
    apply_trade(ledger, trade, REF, is_aggressor=True)
    assert close(ledger.spread_pnl_cum, 0.0)


def test_mark_to_market_values():
    ledger = PnLLedger(inventory=5.0)
    mark_to_market(ledger, 99.8, 100.0)
    assert close(ledger.inventory_pnl_cum, -1.0)
    assert close(ledger.last_step_deltas[1], -1.0)

    flat = PnLLedger()
    mark_to_market(flat, 123.0, 100.0)
    assert close(flat.inventory_pnl_cum, 0.0)

    short = PnLLedger(inventory=-2.0)
    mark_to_market(short, 101.0, 100.0)
    assert close(short.inventory_pnl_cum, -2.0)


def test_mark_to_market_uses_inventory_at_previous_mark():
    # A unit bought mid-step starts marking from the step's closing mid.
    ledger = PnLLedger()
    mark_to_market(ledger, 100.0, 100.0)
    trade = Trade(side=BUY, qty=1.0, exec_price=100.5, aggressor_id=1, counterparty_id=0)
    apply_trade(ledger, trade, REF, is_aggressor=True)
    mark_to_market(ledger, 100.0, 100.0)  # same step's mid: no move credited
    assert close(ledger.inventory_pnl_cum, 0.0)
    mark_to_market(ledger, 101.0, 100.0)
    assert close(ledger.inventory_pnl_cum, 1.0)


def test_total_pnl_is_sum_of_parts():
    ledger = PnLLedger()
    trade = Trade(side=BUY, qty=3.0, exec_price=100.4, aggressor_id=1, counterparty_id=0)
    apply_trade(ledger, trade, REF, is_aggressor=False)
    mark_to_market(ledger, 100.2, 100.0)
    assert close(ledger.total_pnl, ledger.spread_pnl_cum + ledger.inventory_pnl_cum)


trade_st = st.tuples(
    st.sampled_from([BUY, SELL]),
    st.floats(0.1, 5.0, allow_nan=False),
    st.floats(99.0, 101.0, allow_nan=False),
)


@given(st.lists(trade_st, min_size=1, max_size=30))
def test_spread_pnl_transfers_are_zero_sum(trades):
    agg, passive = PnLLedger(), PnLLedger()
    for side, qty, price in trades:
        t = Trade(side=side, qty=qty, exec_price=price, aggressor_id=0, counterparty_id=1)
        apply_trade(agg, t, REF, is_aggressor=True)
        apply_trade(passive, t, REF, is_aggressor=False)
    assert agg.spread_pnl_cum + passive.spread_pnl_cum == pytest.approx(0.0, abs=1e-9)
    assert agg.inventory + passive.inventory == pytest.approx(0.0, abs=1e-9)
    assert agg.cash + passive.cash == pytest.approx(0.0, abs=1e-9)


@given(
    st.lists(trade_st, min_size=1, max_size=20),
    st.lists(st.floats(99.5, 100.5, allow_nan=False), min_size=1, max_size=20),
)
def test_delta_reconstruction_matches_cumulative(trades, mids):
    """Summing last_step_deltas over steps recovers the cumulative fields."""
    ledger = PnLLedger()
    steps = max(len(trades), len(mids))
    old_mid = 100.0
    sum_total = sum_inv = sum_spread = 0.0
    for i in range(steps):
        if i < len(trades):
            side, qty, price = trades[i]
            t = Trade(side=side, qty=qty, exec_price=price, aggressor_id=0, counterparty_id=1)
            apply_trade(ledger, t, REF, is_aggressor=True)
        new_mid = mids[i % len(mids)]
        mark_to_market(ledger, new_mid, old_mid)
        old_mid = new_mid
        d_total, d_inv, d_spread = ledger.last_step_deltas
        sum_total += d_total
        sum_inv += d_inv
        sum_spread += d_spread
    assert sum_spread == pytest.approx(ledger.spread_pnl_cum, rel=REL, abs=1e-9)
    assert sum_inv == pytest.approx(ledger.inventory_pnl_cum, rel=REL, abs=1e-9)
    assert sum_total == pytest.approx(ledger.total_pnl, rel=REL, abs=1e-9)


def test_cash_plus_marked_inventory_equals_total_pnl():
    """Booking edges against the marking mid makes PnL equal liquidation value."""
    rng = np.random.default_rng(3)
    ledger = PnLLedger()
    mid = 100.0
    for step in range(200):
        # Trades book their edge against the mid they will be marked from.
        new_mid = mid + float(rng.normal(0.0, 0.1))
        ref = ReferencePrices(p_mid=new_mid, s_ref_bid=0.4, s_ref_ask=0.4)
        for _ in range(rng.integers(0, 3)):
            side = BUY if rng.random() < 0.5 else SELL
            edge = rng.uniform(-0.3, 0.6)
            price = new_mid + edge if side == BUY else new_mid - edge
            t = Trade(side=side, qty=float(rng.uniform(0.5, 2.0)), exec_price=price,
                      aggressor_id=0, counterparty_id=ECN_ID)
            apply_trade(ledger, t, ref, is_aggressor=True)
        mark_to_market(ledger, new_mid, mid)
        mid = new_mid
        assert ledger.cash + ledger.inventory * mid == pytest.approx(
            ledger.total_pnl, rel=REL, abs=1e-9
        )
