"""LP and LT agent families: type parameters, rewards, pricing, observations.

Everything here is a pure function over explicit tracker and ledger state;
the environment owns the state and the step ordering.  The LT action space
is indexed (buy, sell, hold); flow targets follow the same order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .marketcore import Quote, ReferencePrices

LP_FAMILY = "LP"
LT_FAMILY = "LT"

LT_BUY, LT_SELL, LT_HOLD = 0, 1, 2
LT_ACTION_NAMES = ("buy", "sell", "hold")

MID_HISTORY_LEN = 10
HEDGE_FRACTIONS = (0.25, 0.5, 0.75, 1.0)
# Cost slot for an LP the taker cannot reach, in units of total reference spread.
UNCONNECTED_COST_SPREADS = 10.0


@dataclass(frozen=True)
class AgentType:
    """Reward and connectivity parameters conditioning the shared policy.

    Exactly one of market_share_target (LP) and flow_targets (LT) is set.
    flow_targets is (buy, sell, hold) and must lie on the simplex.
    """

    family: str
    w: float
    alpha: float = 1.0
    gamma: float = 0.0
    market_share_target: float | None = None
    flow_targets: tuple[float, ...] | None = None
    connect_prob_lt: float = 1.0
    connect_prob_lp: float = 1.0
    connect_prob_ecn: float = 1.0

    def __post_init__(self):
        if self.family not in (LP_FAMILY, LT_FAMILY):
            raise ValueError(f"unknown family {self.family!r}")
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"w must be in [0,1], got {self.w}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.family == LP_FAMILY:
            if self.market_share_target is None or self.flow_targets is not None:
                raise ValueError("LP types carry market_share_target only")
            if not 0.0 <= self.market_share_target <= 1.0:
                raise ValueError("market_share_target must be in [0,1]")
        else:
            if self.flow_targets is None or self.market_share_target is not None:
                raise ValueError("LT types carry flow_targets only")
            q = np.asarray(self.flow_targets, dtype=float)
            if q.min() < 0 or abs(q.sum() - 1.0) > 1e-9:
                raise ValueError(f"flow_targets must lie on the simplex, got {q}")


@dataclass(frozen=True)
class LPAction:
    """Quote tweaks and hedge fraction, already squashed into bounds."""

    eps_sym: float
    eps_asym: float
    hedge_fraction: float

    def __post_init__(self):
        if not -1.0 <= self.eps_sym <= 1.0:
            raise ValueError(f"eps_sym out of [-1,1]: {self.eps_sym}")
        if not -1.0 <= self.eps_asym <= 1.0:
            raise ValueError(f"eps_asym out of [-1,1]: {self.eps_asym}")
        if not 0.0 <= self.hedge_fraction <= 1.0:
            raise ValueError(f"hedge_fraction out of [0,1]: {self.hedge_fraction}")


@dataclass(frozen=True)
class LTAction:
    """A routed taker action; counterparty is set by the env, not the policy."""

    choice: int
    counterparty: int | None = None

    def __post_init__(self):
        if self.choice not in (LT_BUY, LT_SELL, LT_HOLD):
            raise ValueError(f"unknown LT action {self.choice}")
        if (self.choice == LT_HOLD) != (self.counterparty is None):
            raise ValueError("counterparty must be set exactly when trading")


# -- pricing ---------------------------------------------------------------


def lp_quote(action: LPAction, ref: ReferencePrices) -> Quote:
    """Tweak the reference prices: eps_sym scales the spread, eps_asym shifts it."""
    total = ref.total_spread
    ask = ref.p_mid + total * (0.5 * (1.0 + action.eps_sym) + action.eps_asym)
    bid = ref.p_mid - total * (0.5 * (1.0 + action.eps_sym) - action.eps_asym)
    return Quote(bid_price=bid, ask_price=ask)


def normalized_tweak(action: LPAction) -> float:
    """Single-number price quality: negative means better than the ECN."""
    return 0.5 * action.eps_sym + action.eps_asym


# -- rewards ------------------------------------------------------------------


def risk_adjusted_pnl(deltas: tuple[float, float, float], gamma: float) -> float:
    """Step PnL minus gamma times the absolute inventory-PnL move.

    deltas is (d_total, d_inventory, d_spread) as produced by the ledger's
    mark_to_market.
    """
    d_total, d_inventory, _ = deltas
    return d_total - gamma * abs(d_inventory)


def lp_reward(atype: AgentType, deltas, ms_penalty: float) -> float:
    pnl = risk_adjusted_pnl(deltas, atype.gamma)
    return atype.w * atype.alpha * pnl - (1.0 - atype.w) * ms_penalty


def lt_reward(atype: AgentType, deltas, flow_pen: float) -> float:
    pnl = risk_adjusted_pnl(deltas, atype.gamma)
    return atype.w * atype.alpha * pnl - (1.0 - atype.w) * flow_pen


# -- objective trackers --------------------------------------------------------


class MarketShareTracker:
    """Cumulative own vs total client volume and the last distance to target."""

    def __init__(self, m_star: float):
        self.m_star = m_star
        self.own_traded_cum = 0.0
        self.all_traded_cum = 0.0
        self.prev_distance = abs(0.0 - m_star)  # empirical share starts at 0

    @property
    def share(self) -> float:
        if self.all_traded_cum <= 0:
            return 0.0
        return self.own_traded_cum / self.all_traded_cum

    def update(self, own_volume: float, all_volume: float) -> None:
        if own_volume > all_volume + 1e-12:
            raise ValueError("own volume cannot exceed total volume")
        self.own_traded_cum += own_volume
        self.all_traded_cum += all_volume


def market_share_penalty(tracker: MarketShareTracker, m_star: float) -> float:
    """Change in |share - m*| this step; negative means progress to target."""
    if tracker.all_traded_cum <= 0:
        return 0.0
    d_now = abs(tracker.share - m_star)
    pen = d_now - tracker.prev_distance
    tracker.prev_distance = d_now
    return pen


class FlowTracker:
    """Executed-action counts over the episode, one slot per LT action."""

    def __init__(self, n_actions: int = 3):
        self.counts = np.zeros(n_actions)
        self.t = 0

    def update(self, action_idx: int) -> None:
        self.counts[action_idx] += 1
        self.t += 1

    def frequencies(self) -> np.ndarray:
        if self.t == 0:
            return np.zeros_like(self.counts)
        return self.counts / self.t


def flow_distance(frequencies: np.ndarray, q_star) -> float:
    q = np.asarray(q_star, dtype=float)
    return float(np.abs(frequencies - q).mean())


class FlowPenalty:
    """Stateful Δ-distance form of the flow objective."""

    def __init__(self, q_star):
        self.q_star = np.asarray(q_star, dtype=float)
        # Empirical frequency starts at the zero vector.
        self.prev_distance = flow_distance(np.zeros_like(self.q_star), self.q_star)

    def __call__(self, tracker: FlowTracker) -> float:
        if tracker.t == 0:
            return 0.0
        d_now = flow_distance(tracker.frequencies(), self.q_star)
        pen = d_now - self.prev_distance
        self.prev_distance = d_now
        return pen


def flow_penalty(tracker: FlowTracker, q_star, prev_distance: float | None = None) -> float:
    """Stateless variant: Δ distance against an explicit previous distance.

    prev_distance may be omitted only at t <= 1, where the zero-frequency
    initialization defines it.
    """
    if tracker.t == 0:
        return 0.0
    if prev_distance is None:
        if tracker.t > 1:
            raise ValueError("prev_distance required when t > 1")
        prev_distance = flow_distance(np.zeros_like(tracker.counts), q_star)
    return flow_distance(tracker.frequencies(), q_star) - prev_distance


# -- observations ---------------------------------------------------------------


def mid_history_slots(mids, length: int = MID_HISTORY_LEN) -> np.ndarray:
    """Current mid followed by lagged differences (mid_t - mid_{t-k}).

    Lags not yet observed read as zero, which doubles as the zero-padding
    at episode start.  The raw history is recoverable from the slots.
    """
    out = np.zeros(length)
    if len(mids) == 0:
        return out
    out[0] = mids[-1]
    for k in range(1, min(length, len(mids))):
        out[k] = mids[-1] - mids[-1 - k]
    return out


def build_lp_observation(
    mids,
    inventory: float,
    elapsed_frac: float,
    prev_market_share: float,
    book_volumes,
    hedge_costs,
    atype: AgentType,
) -> np.ndarray:
    """Fixed-length LP policy input; type fields ride along as constants."""
    return np.concatenate(
        [
            mid_history_slots(mids),
            [inventory, elapsed_frac, prev_market_share],
            np.asarray(book_volumes, dtype=float),
            np.asarray(hedge_costs, dtype=float),
            [
                atype.w,
                atype.gamma,
                atype.market_share_target,
                atype.connect_prob_lt,
                atype.connect_prob_ecn,
            ],
        ]
    )


def lp_observation_dim(n_levels: int) -> int:
    return MID_HISTORY_LEN + 3 + 2 * n_levels + len(HEDGE_FRACTIONS) + 5


def build_lt_observation(
    mids,
    inventory: float,
    elapsed_frac: float,
    flow_frequencies,
    lp_costs,
    ecn_costs,
    atype: AgentType,
) -> np.ndarray:
    """Fixed-length LT policy input.

    lp_costs holds (buy cost, sell cost) per LP slot, already carrying the
    sentinel for unreachable LPs; ecn_costs is the same pair for the ECN.
    flow_frequencies are the empirical (buy, sell) proportions so far.
    """
    freqs = np.asarray(flow_frequencies, dtype=float)
    return np.concatenate(
        [
            mid_history_slots(mids),
            [inventory, elapsed_frac, freqs[LT_BUY], freqs[LT_SELL]],
            np.asarray(lp_costs, dtype=float).ravel(),
            np.asarray(ecn_costs, dtype=float),
            [
                atype.w,
                atype.gamma,
                atype.flow_targets[LT_BUY],
                atype.flow_targets[LT_SELL],
                atype.connect_prob_lp,
                atype.connect_prob_ecn,
            ],
        ]
    )


def lt_observation_dim(n_lps: int) -> int:
    return MID_HISTORY_LEN + 4 + 2 * n_lps + 2 + 6


# -- type sampling -----------------------------------------------------------------


@dataclass(frozen=True)
class TypeDistribution:
    """Per-parameter spec: a fixed value, a (lo, hi) uniform range, or a
    ``{"choice": [...]}`` finite set drawn uniformly.

    flow_targets entries may each be fixed or ranged; the drawn vector is
    renormalized onto the simplex.
    """

    family: str
    w: object = 1.0
    alpha: object = 1.0
    gamma: object = 0.0
    market_share_target: object = None
    flow_targets: tuple | None = None
    connect_prob_lt: object = 1.0
    connect_prob_lp: object = 1.0
    connect_prob_ecn: object = 1.0


def _draw(value, rng: np.random.Generator, name: str) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, dict):
        options = value.get("choice")
        if not options:
            raise ValueError(f"{name}: dict spec needs a non-empty 'choice' list")
        return float(options[rng.integers(len(options))])
    if isinstance(value, (tuple, list)) and len(value) == 2:
        lo, hi = value
        if hi < lo:
            raise ValueError(f"{name}: empty range ({lo}, {hi})")
        return float(rng.uniform(lo, hi))
    raise ValueError(
        f"{name}: expected number, (lo, hi) or {{'choice': [...]}}, got {value!r}"
    )


def sample_type(dist: TypeDistribution, rng: np.random.Generator) -> AgentType:
    """Draw one agent type; draw order is fixed for reproducibility."""
    w = _draw(dist.w, rng, "w")
    alpha = _draw(dist.alpha, rng, "alpha")
    gamma = _draw(dist.gamma, rng, "gamma")
    m_star = None
    q_star = None
    if dist.family == LP_FAMILY:
        if dist.market_share_target is None:
            raise ValueError("LP distribution needs market_share_target")
        m_star = _draw(dist.market_share_target, rng, "market_share_target")
    elif dist.family == LT_FAMILY:
        if dist.flow_targets is None:
            raise ValueError("LT distribution needs flow_targets")
        raw = np.array(
            [max(0.0, _draw(v, rng, "flow_targets")) for v in dist.flow_targets]
        )
        if raw.sum() <= 0:
            raise ValueError("flow_targets drew an all-zero vector")
        q_star = tuple(raw / raw.sum())
    else:
        raise ValueError(f"unknown family {dist.family!r}")
    return AgentType(
        family=dist.family,
        w=w,
        alpha=alpha,
        gamma=gamma,
        market_share_target=m_star,
        flow_targets=q_star,
        connect_prob_lt=_draw(dist.connect_prob_lt, rng, "connect_prob_lt"),
        connect_prob_lp=_draw(dist.connect_prob_lp, rng, "connect_prob_lp"),
        connect_prob_ecn=_draw(dist.connect_prob_ecn, rng, "connect_prob_ecn"),
    )
