"""The dealer-market game: episode lifecycle, step ordering, routing, rewards.

Each step runs a fixed sub-step sequence: the ECN book shifts by the trend
overlay and evolves, LPs publish quotes off the fresh reference prices, LTs
route unit orders to their best connected venue, LPs hedge on the ECN, all
ledgers mark to the step's reference mid, and rewards are dispatched.  LPs
therefore act before LTs react within the same step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agents import (
    HEDGE_FRACTIONS,
    LP_FAMILY,
    LT_BUY,
    LT_FAMILY,
    LT_HOLD,
    LT_SELL,
    UNCONNECTED_COST_SPREADS,
    AgentType,
    FlowPenalty,
    FlowTracker,
    LPAction,
    LTAction,
    MarketShareTracker,
    TypeDistribution,
    build_lp_observation,
    build_lt_observation,
    lp_quote,
    lt_reward,
    lp_reward,
    market_share_penalty,
    sample_type,
)
from .book import BookSnapshot
from .ecnmodel import EcnModel, ensure_two_sided, evolve_book, sample_initial_book
from .marketcore import BUY, ECN_ID, SELL, PnLLedger, Trade, apply_trade, mark_to_market

FLOW_KIND = "Flow"
PNL_KIND = "PnL"


class ActionOutOfBounds(ValueError):
    """An agent action left its legal range; squashing is the policy's job."""


@dataclass(frozen=True)
class TrendConfig:
    """Deterministic additive mid-price path, in ticks, for toy experiments."""

    amplitude_ticks: float = 0.0
    period_steps: int = 256
    phase: float = 0.0


def trend_overlay(trend: TrendConfig, episode_len: int) -> np.ndarray:
    """Tick offset of the mid at each step 0..T; all zeros when amplitude is 0."""
    t = np.arange(episode_len + 1, dtype=float)
    path = trend.amplitude_ticks * np.sin(2.0 * np.pi * t / trend.period_steps + trend.phase)
    return np.rint(path).astype(int)


@dataclass(frozen=True)
class ConnectivityConfig:
    """Bernoulli edge probabilities; LP-ECN links always exist."""

    lt_lp: float = 1.0
    lt_ecn: float = 1.0

    def __post_init__(self):
        for name in ("lt_lp", "lt_ecn"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be a probability, got {p}")


@dataclass
class ConnectivityGraph:
    lt_lp: np.ndarray  # (n_lt, n_lp) bool
    lt_ecn: np.ndarray  # (n_lt,) bool
    lp_ecn: np.ndarray  # (n_lp,) bool, all True


def sample_connectivity(
    cfg: ConnectivityConfig,
    lp_types: list[AgentType],
    lt_types: list[AgentType],
    rng: np.random.Generator,
    lt_kinds: list[str] | None = None,
) -> ConnectivityGraph:
    """Draw the episode's graph.

    The edge probability between an LT and an LP multiplies the base config
    probability with both endpoints' type-level connection probabilities.
    An LP's ``connect_prob_lt`` describes its chance of reaching benign flow,
    so it thins edges to Flow-kind LTs only; PnL takers connect regardless.
    """
    n_lt, n_lp = len(lt_types), len(lp_types)
    if lt_kinds is None:
        lt_kinds = [FLOW_KIND] * n_lt
    lt_lp = np.zeros((n_lt, n_lp), dtype=bool)
    lt_ecn = np.zeros(n_lt, dtype=bool)
    for i, lt in enumerate(lt_types):
        for j, lp in enumerate(lp_types):
            p = cfg.lt_lp * lt.connect_prob_lp
            if lt_kinds[i] == FLOW_KIND:
                p *= lp.connect_prob_lt
            lt_lp[i, j] = rng.random() < p
        lt_ecn[i] = rng.random() < cfg.lt_ecn * lt.connect_prob_ecn
    return ConnectivityGraph(lt_lp=lt_lp, lt_ecn=lt_ecn, lp_ecn=np.ones(n_lp, dtype=bool))


@dataclass(frozen=True)
class EnvConfig:
    n_lp: int = 1
    n_lt_flow: int = 1
    n_lt_pnl: int = 0
    episode_len: int = 256
    lp_types: TypeDistribution = TypeDistribution(
        family=LP_FAMILY, w=0.5, market_share_target=0.5
    )
    lt_flow_types: TypeDistribution = TypeDistribution(
        family=LT_FAMILY, w=0.0, flow_targets=(0.75, 0.25, 0.0)
    )
    lt_pnl_types: TypeDistribution = TypeDistribution(
        family=LT_FAMILY, w=1.0, flow_targets=(1 / 3, 1 / 3, 1 / 3)
    )
    connectivity: ConnectivityConfig = ConnectivityConfig()
    trend: TrendConfig = TrendConfig()
    n_levels: int = 5
    tick_size: float = 0.01
    start_mid: float = 100.0
    model_path: str | None = None
    seed: int = 0

    def __post_init__(self):
        if min(self.n_lp, self.n_lt_flow, self.n_lt_pnl) < 0:
            raise ValueError("agent counts must be >= 0")
        if self.episode_len < 1:
            raise ValueError("episode_len must be >= 1")

    @property
    def n_lt(self) -> int:
        return self.n_lt_flow + self.n_lt_pnl


class DealerMarketEnv:
    """One sequential game instance; all randomness flows from (seed, instance, episode)."""

    def __init__(self, config: EnvConfig, model: EcnModel, instance: int = 0):
        self.config = config
        self.model = model
        self.instance = instance
        self._episode = -1
        self.t = 0

    # -- identifiers ---------------------------------------------------------

    @property
    def n_lp(self) -> int:
        return self.config.n_lp

    @property
    def n_lt(self) -> int:
        return self.config.n_lt

    def lt_kind(self, i: int) -> str:
        return FLOW_KIND if i < self.config.n_lt_flow else PNL_KIND

    def lt_agent_id(self, i: int) -> int:
        return self.config.n_lp + i

    # -- lifecycle ---------------------------------------------------------------

    def reset(self):
        cfg = self.config
        self._episode += 1
        self.rng = np.random.default_rng(
            np.random.SeedSequence((cfg.seed, self.instance, self._episode))
        )
        self.t = 0

        self.lp_types = [sample_type(cfg.lp_types, self.rng) for _ in range(cfg.n_lp)]
        self.lt_types = [sample_type(cfg.lt_flow_types, self.rng) for _ in range(cfg.n_lt_flow)]
        self.lt_types += [sample_type(cfg.lt_pnl_types, self.rng) for _ in range(cfg.n_lt_pnl)]
        kinds = [self.lt_kind(i) for i in range(cfg.n_lt)]
        self.graph = sample_connectivity(
            cfg.connectivity, self.lp_types, self.lt_types, self.rng, lt_kinds=kinds
        )

        self.book = sample_initial_book(self.model, self.rng, cfg.start_mid, cfg.tick_size)
        self.trend_offsets = trend_overlay(cfg.trend, cfg.episode_len)
        self.book.shift_ticks(int(self.trend_offsets[0]))
        refs = self.book.mid_and_spreads()
        self.mark_mid = refs.p_mid
        self.mids = [refs.p_mid]

        self.ledgers = {ECN_ID: PnLLedger()}
        for j in range(cfg.n_lp):
            self.ledgers[j] = PnLLedger()
        for i in range(cfg.n_lt):
            self.ledgers[self.lt_agent_id(i)] = PnLLedger()
        self.ms_trackers = [
            MarketShareTracker(t.market_share_target) for t in self.lp_types
        ]
        self.flow_trackers = [FlowTracker() for _ in range(cfg.n_lt)]
        self.flow_penalties = [FlowPenalty(t.flow_targets) for t in self.lt_types]
        self.last_quotes = None
        self.last_client_units = np.zeros(cfg.n_lp)
        return self._build_observations()

    # -- step ------------------------------------------------------------------------

    def step(self, lp_actions, lt_actions):
        cfg = self.config
        if self.t >= cfg.episode_len:
            raise RuntimeError("episode is over; call reset()")
        lp_acts = self._coerce_lp_actions(lp_actions)
        lt_choices = self._coerce_lt_actions(lt_actions)
        self.t += 1

        # (1) trend shift, statistical evolution, fresh reference prices.
        self.book.shift_ticks(int(self.trend_offsets[self.t] - self.trend_offsets[self.t - 1]))
        evolve_book(self.book, self.model, self.rng)
        ensure_two_sided(self.book, int(round(self.mark_mid / cfg.tick_size)))
        refs = self.book.mid_and_spreads()

        # (2) LPs publish quotes off the new references.
        quotes = [lp_quote(a, refs) for a in lp_acts]

        # (3) LTs route unit orders to their best connected venue.
        resolved: list[LTAction] = []
        trades: list[Trade] = []
        client_units = np.zeros(cfg.n_lp)
        for i, choice in enumerate(lt_choices):
            action, trade = self._route_lt(i, choice, quotes, refs)
            resolved.append(action)
            if trade is not None:
                trades.append(trade)
                if action.counterparty != ECN_ID:
                    client_units[action.counterparty] += trade.qty

        # (4) LPs hedge through the ECN, paying the spread.
        hedges: list[Trade] = []
        for j, act in enumerate(lp_acts):
            trade = self._hedge_lp(j, act, refs)
            if trade is not None:
                hedges.append(trade)
        # Takers and hedges may have emptied an ECN side; the wider market
        # replenishes it so end-of-step book reads stay well defined.
        ensure_two_sided(self.book, int(round(refs.p_mid / cfg.tick_size)))

        # Objective trackers include this step's activity before rewards.
        total_units = float(client_units.sum())
        for j in range(cfg.n_lp):
            self.ms_trackers[j].update(float(client_units[j]), total_units)
        for i, action in enumerate(resolved):
            self.flow_trackers[i].update(action.choice)
        self.last_client_units = client_units
        self.last_quotes = quotes

        # (5) Mark on the post-evolution mid.
        for ledger in self.ledgers.values():
            mark_to_market(ledger, refs.p_mid, self.mark_mid)
        self.mark_mid = refs.p_mid
        self.mids.append(refs.p_mid)

        # (6) Rewards.
        lp_rewards = np.array(
            [
                lp_reward(
                    self.lp_types[j],
                    self.ledgers[j].last_step_deltas,
                    market_share_penalty(self.ms_trackers[j], self.lp_types[j].market_share_target),
                )
                for j in range(cfg.n_lp)
            ]
        )
        lt_rewards = np.array(
            [
                lt_reward(
                    self.lt_types[i],
                    self.ledgers[self.lt_agent_id(i)].last_step_deltas,
                    self.flow_penalties[i](self.flow_trackers[i]),
                )
                for i in range(cfg.n_lt)
            ]
        )

        # (7)
        done = self.t == cfg.episode_len
        obs = self._build_observations()
        info = {
            "refs": refs,
            "quotes": quotes,
            "lt_actions": resolved,
            "trades": trades,
            "hedges": hedges,
            "client_units": client_units,
            "mid": refs.p_mid,
        }
        return obs, (lp_rewards, lt_rewards), done, info

    def market_share_volumes(self) -> np.ndarray:
        """Per-LP client volume traded this step; hedges are excluded."""
        return self.last_client_units.copy()

    # -- internals ------------------------------------------------------------------

    def _coerce_lp_actions(self, lp_actions) -> list[LPAction]:
        if len(lp_actions) != self.config.n_lp:
            raise ActionOutOfBounds(
                f"expected {self.config.n_lp} LP actions, got {len(lp_actions)}"
            )
        out = []
        for a in lp_actions:
            if isinstance(a, LPAction):
                out.append(a)
                continue
            arr = np.asarray(a, dtype=float)
            if arr.shape != (3,):
                raise ActionOutOfBounds(f"LP action must have 3 fields, got shape {arr.shape}")
            try:
                out.append(LPAction(float(arr[0]), float(arr[1]), float(arr[2])))
            except ValueError as exc:
                raise ActionOutOfBounds(str(exc)) from exc
        return out

    def _coerce_lt_actions(self, lt_actions) -> list[int]:
        if len(lt_actions) != self.config.n_lt:
            raise ActionOutOfBounds(
                f"expected {self.config.n_lt} LT actions, got {len(lt_actions)}"
            )
        out = []
        for a in lt_actions:
            idx = int(a)
            if idx not in (LT_BUY, LT_SELL, LT_HOLD):
                raise ActionOutOfBounds(f"LT action must be 0, 1, or 2, got {a}")
            out.append(idx)
        return out

    def _route_lt(self, i: int, choice: int, quotes, refs):
        """Pick the best connected venue; ties go to the lowest LP id, ECN last."""
        lt_id = self.lt_agent_id(i)
        if choice == LT_HOLD:
            return LTAction(LT_HOLD), None
        buying = choice == LT_BUY
        side = BUY if buying else SELL
        candidates = []  # (price, tie_key, venue)
        for j in range(self.config.n_lp):
            if not self.graph.lt_lp[i, j]:
                continue
            price = quotes[j].ask_price if buying else quotes[j].bid_price
            candidates.append((price, (0, j), j))
        if self.graph.lt_ecn[i]:
            executed, vwap = self.book.peek_market(side, 1.0)
            if executed >= 1.0 - 1e-9:
                candidates.append((vwap, (1, 0), ECN_ID))
        if not candidates:
            # No venue reachable: the executed action collapses to hold.
            return LTAction(LT_HOLD), None
        price_key = (lambda c: (c[0], c[1])) if buying else (lambda c: (-c[0], c[1]))
        price, _, venue = min(candidates, key=price_key)
        if venue == ECN_ID:
            executed, vwap, _ = self.book.submit_market(side, 1.0, owner=lt_id)
            qty, exec_price = executed, vwap
        else:
            qty, exec_price = 1.0, price
        trade = Trade(
            side=side,
            qty=qty,
            exec_price=exec_price,
            aggressor_id=lt_id,
            counterparty_id=venue,
            step=self.t,
        )
        apply_trade(self.ledgers[lt_id], trade, refs, is_aggressor=True)
        apply_trade(self.ledgers[venue], trade, refs, is_aggressor=False)
        return LTAction(choice, counterparty=venue), trade

    def _hedge_lp(self, j: int, act: LPAction, refs):
        ledger = self.ledgers[j]
        target = int(act.hedge_fraction * abs(ledger.inventory))  # whole units, toward zero
        if target < 1:
            return None
        side = SELL if ledger.inventory > 0 else BUY
        executed, vwap, _ = self.book.submit_market(side, float(target), owner=j)
        if executed <= 0:
            return None
        trade = Trade(
            side=side,
            qty=executed,
            exec_price=vwap,
            aggressor_id=j,
            counterparty_id=ECN_ID,
            step=self.t,
        )
        apply_trade(ledger, trade, refs, is_aggressor=True)
        apply_trade(self.ledgers[ECN_ID], trade, refs, is_aggressor=False)
        return trade

    def _hedge_cost_curve(self, j: int, refs) -> np.ndarray:
        """VWAP slippage of hypothetically hedging each fraction of inventory now."""
        z = self.ledgers[j].inventory
        out = np.zeros(len(HEDGE_FRACTIONS))
        if z == 0:
            return out
        side = SELL if z > 0 else BUY
        for k, frac in enumerate(HEDGE_FRACTIONS):
            qty = int(frac * abs(z))
            if qty < 1:
                continue
            executed, vwap = self.book.peek_market(side, float(qty))
            if executed <= 0:
                continue
            if side == SELL:
                out[k] = (refs.p_mid - vwap) * executed
            else:
                out[k] = (vwap - refs.p_mid) * executed
        return out

    def _build_observations(self):
        cfg = self.config
        refs_now = self.book.mid_and_spreads()
        snapshot = BookSnapshot.from_book(self.book, cfg.n_levels)
        elapsed = self.t / cfg.episode_len
        lp_obs = []
        for j in range(cfg.n_lp):
            lp_obs.append(
                build_lp_observation(
                    self.mids,
                    self.ledgers[j].inventory,
                    elapsed,
                    self.ms_trackers[j].share,
                    snapshot.volumes,
                    self._hedge_cost_curve(j, refs_now),
                    self.lp_types[j],
                )
            )
        lt_obs = []
        sentinel = UNCONNECTED_COST_SPREADS * refs_now.total_spread
        for i in range(cfg.n_lt):
            costs = np.full((cfg.n_lp, 2), sentinel)
            for j in range(cfg.n_lp):
                if not self.graph.lt_lp[i, j]:
                    continue
                if self.last_quotes is not None:
                    quote = self.last_quotes[j]
                    costs[j, 0] = quote.ask_price - refs_now.p_mid
                    costs[j, 1] = refs_now.p_mid - quote.bid_price
                else:
                    # Before any quotes exist, assume untweaked prices.
                    costs[j, 0] = refs_now.s_ref_ask
                    costs[j, 1] = refs_now.s_ref_bid
            if self.graph.lt_ecn[i]:
                buy_exec, buy_vwap = self.book.peek_market(BUY, 1.0)
                sell_exec, sell_vwap = self.book.peek_market(SELL, 1.0)
                ecn_costs = np.array(
                    [
                        buy_vwap - refs_now.p_mid if buy_exec >= 1.0 - 1e-9 else sentinel,
                        refs_now.p_mid - sell_vwap if sell_exec >= 1.0 - 1e-9 else sentinel,
                    ]
                )
            else:
                ecn_costs = np.array([sentinel, sentinel])
            lt_obs.append(
                build_lt_observation(
                    self.mids,
                    self.ledgers[self.lt_agent_id(i)].inventory,
                    elapsed,
                    self.flow_trackers[i].frequencies(),
                    costs,
                    ecn_costs,
                    self.lt_types[i],
                )
            )
        return lp_obs, lt_obs
