import numpy as np
import pytest

from dealersim.book import (
    BookSnapshot,
    EmptySide,
    InvalidPrice,
    OrderBook,
    UnknownOrder,
    center_tick,
)
from dealersim.marketcore import BUY, SELL

from reference_book import (
    NaiveBook,
    fills_tuple,
    naive_fills_tuple,
    real_book_state,
)


def make_book(bids=(), asks=()):
    """bids/asks: iterable of (price, qty, owner)."""
    book = OrderBook()
    for price, qty, owner in bids:
        book.submit_limit(BUY, price, qty, owner)
    for price, qty, owner in asks:
        book.submit_limit(SELL, price, qty, owner)
    return book


def test_mid_and_spreads_symmetric():
    book = make_book(bids=[(99.5, 3, 1)], asks=[(100.5, 2, 2)])
    refs = book.mid_and_spreads()
    assert refs.p_mid == pytest.approx(100.0)
    assert refs.s_ref_bid == pytest.approx(0.5)
    assert refs.s_ref_ask == pytest.approx(0.5)


def test_mid_and_spreads_wide():
    book = make_book(bids=[(99.0, 1, 1)], asks=[(100.5, 1, 2)])
    refs = book.mid_and_spreads()
    assert refs.p_mid == pytest.approx(99.75)
    assert refs.s_ref_bid == pytest.approx(0.75)
    assert refs.s_ref_ask == pytest.approx(0.75)


def test_empty_side_raises():
    book = make_book(bids=[(99.5, 1, 1)])
    with pytest.raises(EmptySide):
        book.best_ask()
    with pytest.raises(EmptySide):
        book.mid_and_spreads()


def test_off_grid_price_rejected():
    book = OrderBook(tick_size=0.01)
    with pytest.raises(InvalidPrice):
        book.submit_limit(BUY, 99.5037, 1.0, 0)


def test_resting_bid_does_not_fill():
    book = make_book(asks=[(100.5, 2, 7)])
    oid, fills = book.submit_limit(BUY, 99.5, 1.0, 1)
    assert fills == []
    assert book.best_bid() == pytest.approx(99.5)
    assert book.level_volume(BUY, book.to_tick(99.5)) == pytest.approx(1.0)


def test_fifo_within_level():
    book = OrderBook()
    id_a, _ = book.submit_limit(SELL, 100.5, 1.0, 10)
    id_b, _ = book.submit_limit(SELL, 100.5, 2.0, 11)
    _, fills = book.submit_limit(BUY, 100.5, 1.0, 1)
    assert [f.maker_order_id for f in fills] == [id_a]
    assert book.level_volume(SELL, book.to_tick(100.5)) == pytest.approx(2.0)


def test_limit_walks_price_levels_then_rests():
    book = make_book(asks=[(100.5, 2, 7), (101.0, 3, 8)])
    _, fills = book.submit_limit(BUY, 101.0, 4.0, 1)
    assert [(f.price, f.qty) for f in fills] == [(100.5, 2.0), (101.0, 2.0)]
    # Nothing rests: everything crossed.
    assert not book.bids
    assert book.level_volume(SELL, book.to_tick(101.0)) == pytest.approx(1.0)


def test_market_single_level():
    book = make_book(asks=[(100.5, 2, 7)])
    executed, vwap, fills = book.submit_market(BUY, 1.0)
    assert executed == pytest.approx(1.0)
    assert vwap == pytest.approx(100.5)


def test_market_vwap_across_levels():
    book = make_book(asks=[(100.5, 2, 7), (101.0, 3, 8)])
    executed, vwap, _ = book.submit_market(BUY, 4.0)
    assert executed == pytest.approx(4.0)
    assert vwap == pytest.approx(100.75)


def test_market_partial_on_exhaustion():
    book = make_book(asks=[(100.5, 2, 7), (101.0, 3, 8)])
    executed, vwap, _ = book.submit_market(BUY, 10.0)
    assert executed == pytest.approx(5.0)
    assert not book.asks


def test_peek_market_matches_submit_and_does_not_mutate():
    book = make_book(asks=[(100.5, 2, 7), (101.0, 3, 8)])
    before = real_book_state(book)
    p_exec, p_vwap = book.peek_market(BUY, 4.0)
    assert real_book_state(book) == before
    executed, vwap, _ = book.submit_market(BUY, 4.0)
    assert p_exec == pytest.approx(executed)
    assert p_vwap == pytest.approx(vwap)


def test_cancel_paths():
    book = OrderBook()
    oid, _ = book.submit_limit(BUY, 99.5, 2.5, 1)
    assert book.cancel(oid) == pytest.approx(2.5)
    with pytest.raises(UnknownOrder):
        book.cancel(oid)

    ask_id, _ = book.submit_limit(SELL, 100.5, 1.0, 2)
    book.submit_market(BUY, 1.0)  # fully fills the ask
    with pytest.raises(UnknownOrder):
        book.cancel(ask_id)


def test_reduce_level_truncates_and_filters_owner():
    book = OrderBook()
    book.submit_limit(SELL, 100.5, 2.0, owner=-1)
    book.submit_limit(SELL, 100.5, 1.0, owner=4)
    tick = book.to_tick(100.5)
    removed = book.reduce_level(SELL, tick, 5.0, owner=-1)
    assert removed == pytest.approx(2.0)
    assert book.level_volume(SELL, tick) == pytest.approx(1.0)
    assert book.reduce_level(SELL, tick, 1.0, owner=99) == pytest.approx(0.0)


def test_reduce_level_removes_newest_first():
    book = OrderBook()
    old_id, _ = book.submit_limit(SELL, 100.5, 1.0, owner=-1)
    book.submit_limit(SELL, 100.5, 1.0, owner=-1)
    book.reduce_level(SELL, book.to_tick(100.5), 1.0, owner=-1)
    tick = book.to_tick(100.5)
    assert [o[0] for o in book.asks[tick]] == [old_id]


def test_shift_ticks_translates_prices_only():
    book = make_book(bids=[(99.5, 2, 1)], asks=[(100.5, 3, 2)])
    book.shift_ticks(7)
    assert book.best_bid() == pytest.approx(99.57)
    assert book.best_ask() == pytest.approx(100.57)
    assert book.total_volume(BUY) == pytest.approx(2.0)
    assert book.total_volume(SELL) == pytest.approx(3.0)


def test_center_tick_stays_inside_the_spread():
    assert center_tick(9950, 10051) == 10000  # half-tick mid floors
    assert center_tick(9999, 10000) == 9999  # adjacent quotes -> the bid
    # Whole-tick mid lands one tick under it, keeping center < best ask.
    assert center_tick(9950, 10050) == 9999
    for bb, ba in [(10, 11), (10, 12), (0, 5), (9999, 10003)]:
        assert bb <= center_tick(bb, ba) < ba


def test_snapshot_frame_reads_inside_spread_on_both_ladders():
    book = make_book(bids=[(99.50, 2, 1)], asks=[(100.50, 3, 2)])
    snap = BookSnapshot.from_book(book, n_levels=5)
    assert snap.best_bid == 9950 and snap.best_ask == 10050
    assert snap.mid == pytest.approx(100.0)
    # Bid ladder starts just under the ask, ask ladder just over the bid.
    assert snap.bid_tick(0) == 10049
    assert snap.ask_tick(0) == 9951
    # Spread interior reads zero from both sides.
    assert snap.bid_volumes[:4] == [0.0, 0.0, 0.0, 0.0]
    assert snap.ask_volumes[:4] == [0.0, 0.0, 0.0, 0.0]


def test_snapshot_volumes_against_hand_built_book():
    book = make_book(
        bids=[(99.99, 2, 1), (99.98, 5, 1)],
        asks=[(100.00, 3, 2), (100.02, 1, 2)],
    )
    snap = BookSnapshot.from_book(book, n_levels=3)
    # bid ladder: ticks 9999, 9998, 9997; ask ladder: 10000, 10001, 10002
    assert snap.bid_volumes == [2.0, 5.0, 0.0]
    assert snap.ask_volumes == [3.0, 0.0, 1.0]
    assert snap.volumes == [2.0, 5.0, 0.0, 3.0, 0.0, 1.0]
    assert snap.center == center_tick(snap.best_bid, snap.best_ask)


# -- randomized equivalence against the naive matcher ---------------------------


def test_matching_equivalence_vs_naive_reference():
    """FIFO/price-priority equivalence on randomized small books, 10^4 cases."""
    rng = np.random.default_rng(2024)
    tick_size = 0.01
    n_cases = 10_000
    scenario_len = 40
    ops_done = 0
    while ops_done < n_cases:
        real = OrderBook(tick_size=tick_size)
        naive = NaiveBook(tick_size=tick_size)
        live: list[int] = []
        for _ in range(scenario_len):
            ops_done += 1
            side = BUY if rng.random() < 0.5 else SELL
            op = rng.random()
            if op < 0.7:
                tick = int(rng.integers(9995, 10006))
                qty = float(rng.integers(1, 6))
                owner = int(rng.integers(0, 4))
                rid, rfills = real.submit_limit(side, tick * tick_size, qty, owner)
                nid, nfills = naive.submit_limit(side, tick, qty, owner)
                assert rid == nid
                assert fills_tuple(rfills, tick_size) == naive_fills_tuple(nfills, tick_size)
                live = naive.live_ids()
            elif op < 0.9:
                qty = float(rng.integers(1, 8))
                r_exec, r_vwap, rfills = real.submit_market(side, qty)
                n_exec, n_vwap, nfills = naive.submit_market(side, qty)
                assert r_exec == pytest.approx(n_exec, abs=1e-9)
                assert r_vwap == pytest.approx(n_vwap, abs=1e-9)
                assert fills_tuple(rfills, tick_size) == naive_fills_tuple(nfills, tick_size)
                live = naive.live_ids()
            elif live:
                oid = int(live[rng.integers(len(live))])
                assert real.cancel(oid) == pytest.approx(naive.cancel(oid), abs=1e-9)
                live = naive.live_ids()
            assert real_book_state(real) == naive.state()


def test_matching_conserves_quantity():
    rng = np.random.default_rng(5)
    book = OrderBook()
    for _ in range(300):
        side = BUY if rng.random() < 0.5 else SELL
        tick = int(rng.integers(9997, 10004))
        qty = float(rng.integers(1, 5))
        before = book.total_volume(BUY) + book.total_volume(SELL)
        _, fills = book.submit_limit(side, tick * 0.01, qty, 0)
        after = book.total_volume(BUY) + book.total_volume(SELL)
        filled = sum(f.qty for f in fills)
        # qty enters the book net of fills; the opposing side loses the fills.
        assert after == pytest.approx(before + qty - 2.0 * filled, abs=1e-9)
