"""Statistical ECN: book evolution driven by three fitted Gaussian mixtures.

The model works in the BookSnapshot frame: each side's ladder starts one
tick inside the opposite best quote, so both ladders cover the ticks inside
the spread.  Evolution samples volume deltas for those 2n levels conditioned
on the current volumes, decomposes each delta into child orders, and applies
them with additions clamped to the current touch, so a placement can tighten
a widened spread but never cross the book.

A synthetic L2 generator stands in for real exchange data.  It drives the
same book mechanics with a sticky three-regime process (up / down / flat)
whose regime-dependent volume targets create short-horizon mid momentum
readable from the volume imbalance, so the fitted conditional delta model
reproduces that momentum in simulation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .book import BookSnapshot, OrderBook, center_tick
from .marketcore import BUY, ECN_ID, SELL
from .mixture import DegenerateModel, GaussianMixture, InsufficientData, fit_em

# Smallest order the evolution process will place or cancel.
MIN_CHILD_QTY = 0.1
_INIT_BOOK_RETRIES = 100


def fit_mixture(data: np.ndarray, k: int, seed: int, tol: float = 1e-6, max_iter: int = 200):
    """EM fit gated on sample count. Returns (mixture, ll_trace)."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    n, d = data.shape
    if n < 10 * k * d:
        raise InsufficientData(f"need at least {10 * k * d} samples for k={k}, d={d}, got {n}")
    rng = np.random.default_rng(seed)
    return fit_em(data, k, rng, tol=tol, max_iter=max_iter)


class EcnModel:
    """Initial-snapshot, conditional-delta and order-size-decomposition mixtures."""

    def __init__(
        self,
        init_mixture: GaussianMixture,
        delta_mixture: GaussianMixture,
        decomp_mixture: GaussianMixture,
        dt: int,
        n_levels: int,
    ):
        self.init_mixture = init_mixture
        self.delta_mixture = delta_mixture
        self.decomp_mixture = decomp_mixture
        self.dt = dt
        self.n_levels = n_levels
        if init_mixture.dim != 2 * n_levels:
            raise ValueError("init mixture dimension != 2*n_levels")
        if delta_mixture.dim != 4 * n_levels:
            raise ValueError("delta mixture must be joint over (volumes, deltas)")

    def to_dict(self) -> dict:
        return {
            "n": self.n_levels,
            "dt": self.dt,
            "init": self.init_mixture.to_dict(),
            "delta": self.delta_mixture.to_dict(),
            "decomp": self.decomp_mixture.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EcnModel":
        return cls(
            GaussianMixture.from_dict(d["init"]),
            GaussianMixture.from_dict(d["delta"]),
            GaussianMixture.from_dict(d["decomp"]),
            dt=int(d["dt"]),
            n_levels=int(d["n"]),
        )

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path) -> "EcnModel":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def _seed_book_from_volumes(
    volumes: np.ndarray, n_levels: int, center: int, tick_size: float
) -> OrderBook:
    """One ECN-owned order per nonzero level, bid ladder then ask ladder."""
    book = OrderBook(tick_size=tick_size)
    for i in range(n_levels):
        if volumes[i] > MIN_CHILD_QTY / 2:
            book.submit_limit(BUY, (center - i) * tick_size, float(volumes[i]), ECN_ID)
    for i in range(n_levels):
        v = volumes[n_levels + i]
        if v > MIN_CHILD_QTY / 2:
            book.submit_limit(SELL, (center + 1 + i) * tick_size, float(v), ECN_ID)
    return book


def sample_initial_book(
    model: EcnModel,
    rng: np.random.Generator,
    start_mid: float = 100.0,
    tick_size: float = 0.01,
) -> OrderBook:
    """Draw a snapshot from the init mixture and materialize it as a book.

    Negative sampled volumes clip to zero; a draw that leaves either side
    empty is rejected and retried up to a cap.
    """
    center = int(round(start_mid / tick_size))
    n = model.n_levels
    for _ in range(_INIT_BOOK_RETRIES):
        vols = np.clip(model.init_mixture.sample(rng, 1)[0], 0.0, None)
        if vols[:n].max() > MIN_CHILD_QTY / 2 and vols[n:].max() > MIN_CHILD_QTY / 2:
            return _seed_book_from_volumes(vols, n, center, tick_size)
    raise DegenerateModel("init mixture keeps producing one-sided books")


def _decompose(total: float, decomp: GaussianMixture, rng: np.random.Generator) -> list[float]:
    """Split a volume into child order sizes drawn from the decomp mixture."""
    remaining = float(total)
    children: list[float] = []
    while remaining > MIN_CHILD_QTY / 2:
        size = abs(float(decomp.sample(rng, 1)[0, 0]))
        size = min(remaining, max(size, MIN_CHILD_QTY))
        children.append(size)
        remaining -= size
    return children


def _apply_deltas(
    book: OrderBook,
    snap: BookSnapshot,
    deltas: np.ndarray,
    rng: np.random.Generator,
    decomp: GaussianMixture | None,
) -> list[tuple[str, float, float]]:
    """Move each snapshot level by its delta. Returns (side, price, signed qty).

    Positive deltas become resting ECN limit orders (decomposed into child
    orders when a decomp mixture is given), negative deltas cancel ECN-owned
    volume and truncate to what is resting.  Both ladders may target the
    same inside-spread ticks, so additions clamp to the current touch and
    the side applied first is drawn per step; a fixed order would hand the
    contested middle to one side and bias the mid over long runs.
    """
    n = len(snap.bid_volumes)
    applied: list[tuple[str, float, float]] = []
    order = range(2 * n) if rng.random() < 0.5 else [*range(n, 2 * n), *range(n)]
    for i in order:
        delta = deltas[i]
        side = BUY if i < n else SELL
        tick = snap.bid_tick(i) if i < n else snap.ask_tick(i - n)
        if delta > MIN_CHILD_QTY / 2:
            if side == BUY and book.asks:
                tick = min(tick, book.best_ask_tick() - 1)
            elif side == SELL and book.bids:
                tick = max(tick, book.best_bid_tick() + 1)
            price = book.to_price(tick)
            children = _decompose(delta, decomp, rng) if decomp is not None else [float(delta)]
            for qty in children:
                _, fills = book.submit_limit(side, price, qty, ECN_ID)
                assert not fills, "clamped placement crossed the book"
                applied.append((side, price, qty))
        elif delta < -MIN_CHILD_QTY / 2:
            removed = book.reduce_level(side, tick, -float(delta), owner=ECN_ID)
            if removed > 0:
                applied.append((side, book.to_price(tick), -removed))
    return applied


def evolve_book(
    book: OrderBook, model: EcnModel, rng: np.random.Generator
) -> list[tuple[str, float, float]]:
    """One evolution step: conditional delta draw, decompose, apply."""
    snap = BookSnapshot.from_book(book, model.n_levels)
    vols = np.asarray(snap.volumes, dtype=float)
    n2 = 2 * model.n_levels
    try:
        deltas = model.delta_mixture.sample_conditional(np.arange(n2), vols, rng)
    except np.linalg.LinAlgError as exc:
        raise DegenerateModel(f"conditioning failed: {exc}") from exc
    return _apply_deltas(book, snap, deltas, rng, model.decomp_mixture)


def ensure_two_sided(book: OrderBook, fallback_center: int, qty: float = 1.0) -> None:
    """Re-seed an emptied side with one ECN order so price queries stay valid."""
    if not book.asks:
        anchor = book.best_bid_tick() + 1 if book.bids else fallback_center + 1
        book.submit_limit(SELL, book.to_price(anchor), qty, ECN_ID)
    if not book.bids:
        anchor = book.best_ask_tick() - 1 if book.asks else fallback_center
        book.submit_limit(BUY, book.to_price(anchor), qty, ECN_ID)


# -- synthetic L2 ground truth ------------------------------------------------

UP, DOWN, FLAT = 0, 1, 2


@dataclass(frozen=True)
class SynthConfig:
    """Sticky-regime ground-truth process for generating calibration data.

    In the up regime the near ask levels target thin volume and the near bid
    levels thick volume, so asks keep emptying and the mid drifts upward; the
    down regime mirrors it.  Regime switches lean toward the regime pointing
    back at start_mid once the mid has wandered reversion_scale ticks away.
    """

    n_levels: int = 5
    n_steps: int = 2000
    tick_size: float = 0.01
    start_mid: float = 100.0
    base_volume: float = 4.0
    thin_volume: float = 0.3
    thick_volume: float = 7.0
    kappa: float = 0.45
    noise_sigma: float = 0.6
    regime_stay_prob: float = 0.92
    reversion_scale: float = 300.0  # ticks


def _regime_targets(cfg: SynthConfig) -> dict[int, np.ndarray]:
    n = cfg.n_levels
    flat = np.full(2 * n, cfg.base_volume)
    up = flat.copy()
    up[0] = cfg.thick_volume  # bid level 1
    up[1] = 0.5 * (cfg.thick_volume + cfg.base_volume)
    up[n] = cfg.thin_volume  # ask level 1
    up[n + 1] = 0.5 * (cfg.thin_volume + cfg.base_volume)
    down = np.concatenate([up[n:], up[:n]])
    return {UP: up, DOWN: down, FLAT: flat}


def _next_regime(
    regime: int, mid_offset_ticks: float, cfg: SynthConfig, rng: np.random.Generator
) -> int:
    if rng.random() < cfg.regime_stay_prob:
        return regime
    # Bias the entered regime toward mean reversion of the mid level.
    pull = np.clip(mid_offset_ticks / cfg.reversion_scale, -1.0, 1.0)
    p_up = np.clip(0.4 * (1.0 - pull), 0.05, 0.95)
    p_down = np.clip(0.4 * (1.0 + pull), 0.05, 0.95)
    u = rng.random()
    if u < p_up:
        return UP
    if u < p_up + p_down:
        return DOWN
    return FLAT


def synth_l2_dataset(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Rows of (step, mid, bid_vol_1..n, ask_vol_1..n), one per step.

    Runs the real book mechanics: each step nudges level volumes toward the
    current regime's targets and records the snapshot, so the emitted series
    lives in exactly the frame the fitted model is applied in.
    """
    n = cfg.n_levels
    targets = _regime_targets(cfg)
    center0 = int(round(cfg.start_mid / cfg.tick_size))
    book = _seed_book_from_volumes(targets[FLAT], n, center0, cfg.tick_size)
    regime = FLAT
    rows = np.empty((cfg.n_steps, 2 + 2 * n))
    for step in range(cfg.n_steps):
        snap = BookSnapshot.from_book(book, n)
        rows[step, 0] = step
        rows[step, 1] = snap.mid
        rows[step, 2:] = snap.volumes

        offset_ticks = (snap.mid - cfg.start_mid) / cfg.tick_size
        regime = _next_regime(regime, offset_ticks, cfg, rng)
        vols = np.asarray(snap.volumes)
        deltas = cfg.kappa * (targets[regime] - vols)
        if cfg.noise_sigma > 0:
            deltas = deltas + cfg.noise_sigma * rng.standard_normal(2 * n)
        _apply_deltas(book, snap, deltas, rng, decomp=None)
        ensure_two_sided(book, snap.center, qty=cfg.base_volume)
    return rows


def write_l2_csv(rows: np.ndarray, path) -> None:
    n = (rows.shape[1] - 2) // 2
    header = (
        ["step", "mid"]
        + [f"bid_vol_{i + 1}" for i in range(n)]
        + [f"ask_vol_{i + 1}" for i in range(n)]
    )
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])


def read_l2_csv(path) -> np.ndarray:
    with open(path) as f:
        reader = csv.reader(f)
        next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return np.asarray(rows, dtype=float)


# Calibration data for the stock model redraws the drained side each step, so
# fitted dynamics stay volatile but close to unpredictable.  Sticky regimes
# (the SynthConfig default) produce trending mids that dealers can farm for
# inventory PnL, which distorts experiments aimed at inventory risk.  The
# thinner, harder-pulled book roughly doubles per-step mid volatility, which
# keeps inventory penalties comparable to spread income at desk scale.
DEFAULT_SYNTH = SynthConfig(
    regime_stay_prob=0.0, reversion_scale=1e9, kappa=0.8,
    base_volume=3.0, thin_volume=0.2,
)


def build_default_model(
    seed: int = 777,
    cfg: SynthConfig | None = None,
    k_init: int = 3,
    k_delta: int = 3,
    k_decomp: int = 2,
) -> EcnModel:
    """Synthesize a calibration dataset and fit the three mixtures."""
    cfg = cfg if cfg is not None else DEFAULT_SYNTH
    rows = synth_l2_dataset(cfg, np.random.default_rng(seed))
    return calibrate(rows, k_init=k_init, k_delta=k_delta, k_decomp=k_decomp, seed=seed)


def calibrate(
    rows: np.ndarray,
    k_init: int = 3,
    k_delta: int = 3,
    k_decomp: int = 2,
    dt: int = 1,
    seed: int = 0,
) -> EcnModel:
    """Fit the three mixtures from a snapshot series.

    Delta samples pair volumes dt rows apart in the level-index frame; the
    decomposition mixture is fitted on the magnitudes of nonzero deltas.
    """
    vols = np.asarray(rows, dtype=float)[:, 2:]
    n_levels = vols.shape[1] // 2
    init_mix, init_trace = fit_mixture(vols, k_init, seed)
    deltas = vols[dt:] - vols[:-dt]
    joint = np.hstack([vols[:-dt], deltas])
    delta_mix, delta_trace = fit_mixture(joint, k_delta, seed + 1)
    mags = np.abs(deltas[np.abs(deltas) > MIN_CHILD_QTY])
    decomp_mix, decomp_trace = fit_mixture(mags[:, None], k_decomp, seed + 2)
    model = EcnModel(init_mix, delta_mix, decomp_mix, dt=dt, n_levels=n_levels)
    # Fit diagnostics for reporting; not part of the serialized model.
    model.fit_traces = {
        "init": init_trace,
        "delta": delta_trace,
        "decomp": decomp_trace,
    }
    return model
