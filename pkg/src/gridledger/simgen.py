"""Deterministic scenario generator.

Produces the dataset shape the rest of the stack expects: a roster of
authority/dealer/supplier accounts, an order flow driven through the market
and ledger, hourly volumes following configured intensities, and labeled
fraud injected at a configurable rate.  Everything is a pure function of
the scenario config, so identical configs give byte-identical exports.

Price and quantity are coupled through a Gaussian copula while keeping the
configured marginals exact: quantity stays uniform and price keeps its
two-component mixture, but their ranks correlate, which reproduces the
strong quantity/total-cost correlation and the moderate quantity/price one
seen in the source data.
"""

from __future__ import annotations

import csv
import json
import hashlib
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import ndtr, ndtri

from .fixedpoint import (LATENCY_SCALE, MONEY_SCALE, QUANTITY_SCALE,
                         format_latency, format_money, format_quantity,
                         parse_fixed, to_cents, to_latency_units, to_milli,
                         total_cost_cents)
from .ledger import (GRID_POOL_ID, Account, Ledger, TransactionRecord,
                     sign_transaction)
from .market import Market
from .timeutil import iso_utc, parse_iso

FRAUD_KINDS = ("Spoofing", "DoubleSpend", "MeterInflation", "WashTrade",
               "SybilBurst", "OffPeakBurst")

DATASET_HEADER = ("transaction_id,timestamp,user_role,transaction_type,"
                  "electricity_quantity,price_per_mwh,total_cost,latency_ms,"
                  "security_level,encryption_method,zt_authentication,"
                  "network_slice_id,transaction_status")


class FraudRateInfeasible(ValueError):
    pass


@dataclass
class ScenarioConfig:
    seed: int = 42
    n_transactions: int = 10_000
    fraud_rate: float = 0.07
    # (hour start ISO, relative intensity); default mirrors the single busy
    # hour with a tiny tail into the next one
    hours: list = field(default_factory=lambda: [
        ["2025-02-14T10:00:00Z", 9997.0],
        ["2025-02-14T11:00:00Z", 3.0],
    ])
    ramp_within_hour: bool = True
    authority_share: float = 0.33
    n_authorities: int = 3
    n_dealers: int = 18
    n_suppliers: int = 18
    price_normal_weight: float = 0.85
    price_mean: float = 35.0
    price_sd: float = 2.5
    price_clip: list = field(default_factory=lambda: [30.0, 40.0])
    price_uniform: list = field(default_factory=lambda: [0.0, 5.0])
    price_quantity_coupling: float = 0.95
    quantity_range: list = field(default_factory=lambda: [0.001, 100.0])
    latency_range: list = field(default_factory=lambda: [5.0, 30.0])
    status_weights: list = field(default_factory=lambda: [1 / 3, 1 / 3, 1 / 3])
    slice_weights: list = field(default_factory=lambda: [1 / 3, 1 / 3, 1 / 3])
    security_weights: list = field(default_factory=lambda: [1 / 3, 1 / 3, 1 / 3])
    encryption_methods: list = field(default_factory=lambda: [
        "AES-128", "AES-256", "ChaCha20"])
    zt_probability: float = 0.5
    fraud_mix: dict = field(default_factory=lambda: {kind: 1.0 for kind in FRAUD_KINDS})
    sybil_cluster_size: int = 6
    sybil_txs_per_account: int = 10
    sybil_gap_seconds: float = 1.2
    sybil_latency_range: list = field(default_factory=lambda: [2.0, 7.9])
    wash_trades_per_pair: int = 12
    burst_txs_per_supplier: int = 100
    burst_volume_factor: float = 3.0
    burst_window_minutes: int = 10
    meter_quantity_range: list = field(default_factory=lambda: [150.0, 400.0])
    initial_balance_mwh: float = 25_000.0
    generation_capacity_mwh: float = 100.0
    block_size: int = 100
    price_band: list = field(default_factory=lambda: [0.0, 100.0])

    def __post_init__(self):
        if not 0 <= self.fraud_rate <= 0.5:
            raise ValueError("fraud_rate must be in [0, 0.5]")
        if any(float(i) < 0 for _, i in self.hours):
            raise ValueError("hour intensities must be >= 0")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown scenario config keys: {sorted(unknown)}")
        return cls(**obj)

    def off_peak_hours(self) -> set[int]:
        """Hours of day whose configured intensity is below the median."""
        intensities = [float(i) for _, i in self.hours]
        median = float(np.median(intensities))
        return {parse_iso(start) // 3600 % 24
                for (start, i) in self.hours if float(i) < median}


@dataclass
class AgentProfile:
    account_id: str
    role: str
    origin_address: str
    capacity_mwh: float
    purpose: str = "baseline"   # baseline | sybil | wash | meter | burst


@dataclass
class GroundTruth:
    tags: dict = field(default_factory=dict)   # transaction_id -> fraud kind

    def kind_of(self, tx_id: str) -> str:
        return self.tags.get(tx_id, "None")

    def is_fraud(self, tx_id: str) -> bool:
        return self.kind_of(tx_id) != "None"


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    agents: list[AgentProfile]
    ledger: Ledger
    market: Market
    rows: list[TransactionRecord]
    truth: GroundTruth
    rejected_ids: list[str] = field(default_factory=list)


def proportional_counts(total: int, weights: list[float]) -> list[int]:
    """Integer allocation by largest remainder; deterministic tie order."""
    weight_sum = sum(weights)
    if weight_sum <= 0 or total <= 0:
        return [0] * len(weights)
    exact = [total * w / weight_sum for w in weights]
    counts = [math.floor(v) for v in exact]
    remainder = total - sum(counts)
    order = sorted(range(len(weights)),
                   key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def _account_key(seed: int, account_id: str) -> bytes:
    return hashlib.sha256(f"gridledger:{seed}:{account_id}".encode()).digest()


def generate_agents(config: ScenarioConfig) -> list[AgentProfile]:
    """Deterministic account roster: authorities, regular dealers/suppliers,
    and the dedicated populations each planned fraud kind needs."""
    cap = config.generation_capacity_mwh
    agents = [AgentProfile(f"auth-{i:02d}", "Authority", f"org-auth-{i:02d}", cap)
              for i in range(config.n_authorities)]
    agents += [AgentProfile(f"dlr-{i:02d}", "Dealer", f"org-dlr-{i:02d}", cap)
               for i in range(config.n_dealers)]
    agents += [AgentProfile(f"sup-{i:02d}", "Supplier", f"org-sup-{i:02d}", cap)
               for i in range(config.n_suppliers)]

    budgets = fraud_budgets(config)
    if budgets["SybilBurst"]:
        per_cluster = config.sybil_cluster_size * config.sybil_txs_per_account
        n_clusters = math.ceil(budgets["SybilBurst"] / per_cluster)
        for c in range(n_clusters):
            for a in range(config.sybil_cluster_size):
                agents.append(AgentProfile(
                    f"syb-{c:02d}-{a:02d}", "Dealer",
                    f"org-sybil-{c:02d}", cap, purpose="sybil"))
    if budgets["WashTrade"]:
        rows_per_pair = 2 * config.wash_trades_per_pair
        n_pairs = math.ceil(budgets["WashTrade"] / rows_per_pair)
        for p in range(n_pairs):
            for side in ("a", "b"):
                agents.append(AgentProfile(
                    f"wsh-{p:02d}-{side}", "Dealer",
                    f"org-wsh-{p:02d}-{side}", cap, purpose="wash"))
    if budgets["MeterInflation"]:
        n_inflators = max(1, min(4, budgets["MeterInflation"]))
        for i in range(n_inflators):
            agents.append(AgentProfile(
                f"inf-{i:02d}", "Supplier", f"org-inf-{i:02d}", cap,
                purpose="meter"))
    if budgets["OffPeakBurst"]:
        n_burst = math.ceil(budgets["OffPeakBurst"] / config.burst_txs_per_supplier)
        for i in range(n_burst):
            agents.append(AgentProfile(
                f"brst-{i:02d}", "Supplier", f"org-brst-{i:02d}", cap,
                purpose="burst"))
    return agents


def fraud_budgets(config: ScenarioConfig) -> dict[str, int]:
    n_fraud = round(config.n_transactions * config.fraud_rate)
    weights = [float(config.fraud_mix.get(kind, 0.0)) for kind in FRAUD_KINDS]
    if n_fraud and sum(weights) <= 0:
        raise FraudRateInfeasible("fraud requested but fraud_mix is all zero")
    counts = proportional_counts(n_fraud, weights)
    budget = dict(zip(FRAUD_KINDS, counts))
    # WashTrade rows come in pairs
    if budget["WashTrade"] % 2 == 1:
        budget["WashTrade"] -= 1
        budget["Spoofing" if budget["Spoofing"] else "MeterInflation"] += 1
    return budget


# -- event planning -----------------------------------------------------


@dataclass
class _Event:
    when: int
    seq: int
    kind: str          # authority | trade | sybil | wash | meter | burst | spoof | doublespend
    payload: dict


class _Draws:
    """Seeded random draws for record fields, shared by every event kind."""

    def __init__(self, config: ScenarioConfig, rng: np.random.Generator,
                 status_queue: list | None = None):
        self.config = config
        self.rng = rng
        self.status_queue = status_queue
        weights = np.asarray(config.status_weights, dtype=np.float64)
        self.status_weights = weights / weights.sum()

    def quantity_price(self) -> tuple[int, int]:
        """Copula-coupled (quantity_milli, price_cents) with exact marginals."""
        rho = self.config.price_quantity_coupling
        z1 = self.rng.standard_normal()
        z2 = rho * z1 + math.sqrt(1 - rho * rho) * self.rng.standard_normal()
        u, v = float(ndtr(z1)), float(ndtr(z2))
        lo, hi = self.config.quantity_range
        quantity = lo + u * (hi - lo)
        return max(1, to_milli(quantity)), self.price_from_rank(v)

    def price_for_quantity(self, quantity_milli: int) -> int:
        """Price whose mixture rank is coupled to the quantity's position in
        the baseline quantity range (clipped for out-of-range volumes)."""
        lo, hi = self.config.quantity_range
        u = (quantity_milli / QUANTITY_SCALE - lo) / (hi - lo)
        u = min(max(u, 1e-9), 1 - 1e-9)
        rho = self.config.price_quantity_coupling
        z = rho * float(ndtri(u)) + math.sqrt(1 - rho * rho) * self.rng.standard_normal()
        return self.price_from_rank(float(ndtr(z)))

    def price_from_rank(self, v: float) -> int:
        """Mixture quantile: the low uniform band sits below the clipped
        normal band, so the inverse CDF is piecewise by component weight."""
        cfg = self.config
        u_weight = 1.0 - cfg.price_normal_weight
        if v < u_weight:
            lo, hi = cfg.price_uniform
            price = lo + (v / u_weight) * (hi - lo) if u_weight > 0 else lo
        else:
            w = (v - u_weight) / cfg.price_normal_weight
            w = min(max(w, 1e-12), 1 - 1e-12)
            price = cfg.price_mean + cfg.price_sd * float(ndtri(w))
            price = min(max(price, cfg.price_clip[0]), cfg.price_clip[1])
        return to_cents(price)

    def price(self) -> int:
        return self.price_from_rank(float(self.rng.random()))

    def latency(self, band: tuple[float, float] | None = None) -> int:
        lo, hi = band or self.config.latency_range
        return to_latency_units(float(self.rng.uniform(lo, hi)))

    def status(self) -> str:
        if self.status_queue:
            return self.status_queue.pop()
        return ["Failed", "Pending", "Success"][
            int(self.rng.choice(3, p=self.status_weights))]

    def common_fields(self, latency_band=None) -> dict:
        cfg = self.config
        return {
            "latency_units": self.latency(latency_band),
            "security_level": ["Low", "Medium", "High"][
                int(self.rng.choice(3, p=np.asarray(cfg.security_weights)))],
            "encryption_method": cfg.encryption_methods[
                int(self.rng.integers(0, len(cfg.encryption_methods)))],
            "zt_authentication": bool(self.rng.random() < cfg.zt_probability),
            "network_slice_id": ["SliceA", "SliceB", "SliceC"][
                int(self.rng.choice(3, p=np.asarray(cfg.slice_weights)))],
            "transaction_status": self.status(),
        }


def _hour_timestamps(config: ScenarioConfig, rng: np.random.Generator,
                     count: int, hour_start: int) -> list[int]:
    """Offsets within one hour; linear ramp-down replicates the busy-hour
    shape, otherwise uniform."""
    u = rng.random(count)
    if config.ramp_within_hour:
        # density 2(1 - t)/hour: inverse CDF of the descending triangle
        offsets = 3600.0 * (1.0 - np.sqrt(1.0 - u))
    else:
        offsets = 3600.0 * u
    return sorted(hour_start + int(o) for o in offsets)


def plan_baseline_events(config: ScenarioConfig, agents: list[AgentProfile],
                         rng: np.random.Generator, n_rows: int,
                         seq_start: int = 0) -> list[_Event]:
    """Authority records and two-row trades allocated over the configured
    hours by intensity, with timestamps drawn inside each hour."""
    traders = [a.account_id for a in agents
               if a.purpose == "baseline" and a.role in ("Dealer", "Supplier")]
    authorities = [a.account_id for a in agents if a.role == "Authority"]
    if len(traders) < 2:
        raise FraudRateInfeasible("need at least two trading accounts")

    n_authority = round(n_rows * config.authority_share) if authorities else 0
    n_trade_rows = n_rows - n_authority
    if n_trade_rows % 2 == 1:
        n_authority += 1
        n_trade_rows -= 1

    intensities = [float(i) for _, i in config.hours]
    auth_per_hour = proportional_counts(n_authority, intensities)
    trades_per_hour = proportional_counts(n_trade_rows // 2, intensities)

    events: list[_Event] = []
    seq = seq_start
    for h, (start_iso, _intensity) in enumerate(config.hours):
        hour_start = parse_iso(start_iso)
        n_events = auth_per_hour[h] + trades_per_hour[h]
        stamps = _hour_timestamps(config, rng, n_events, hour_start)
        kinds = ["authority"] * auth_per_hour[h] + ["trade"] * trades_per_hour[h]
        order = rng.permutation(len(kinds))
        for when, pick in zip(stamps, (kinds[i] for i in order)):
            if pick == "authority":
                account = authorities[int(rng.integers(0, len(authorities)))]
                events.append(_Event(when, seq, "authority", {"account": account}))
            else:
                seller = traders[int(rng.integers(0, len(traders)))]
                buyer = seller
                while buyer == seller:
                    buyer = traders[int(rng.integers(0, len(traders)))]
                events.append(_Event(when, seq, "trade",
                                     {"seller": seller, "buyer": buyer}))
            seq += 1
    return events


def plan_fraud_events(config: ScenarioConfig, agents: list[AgentProfile],
                      rng: np.random.Generator,
                      seq_start: int) -> list[_Event]:
    budgets = fraud_budgets(config)
    events: list[_Event] = []
    seq = seq_start
    peak_hour_start = parse_iso(max(config.hours, key=lambda h: float(h[1]))[0])
    off_peak_starts = [parse_iso(start) for start, i in config.hours
                       if float(i) < float(np.median([float(x) for _, x in config.hours]))]
    if budgets["OffPeakBurst"] and not off_peak_starts:
        raise FraudRateInfeasible("OffPeakBurst needs at least one off-peak hour")

    sybil_accounts = [a for a in agents if a.purpose == "sybil"]
    clusters: dict[str, list[str]] = {}
    for a in sybil_accounts:
        clusters.setdefault(a.origin_address, []).append(a.account_id)
    remaining = budgets["SybilBurst"]
    for origin in sorted(clusters):
        if remaining <= 0:
            break
        members = sorted(clusters[origin])
        base = peak_hour_start + int(rng.integers(300, 2700))
        when = float(base)
        burst_n = min(remaining, len(members) * config.sybil_txs_per_account)
        for i in range(burst_n):
            account = members[i % len(members)]
            when += float(rng.uniform(0.2, config.sybil_gap_seconds))
            events.append(_Event(int(when), seq, "sybil", {"account": account}))
            seq += 1
        remaining -= burst_n
    if remaining > 0:
        raise FraudRateInfeasible("not enough sybil accounts for the budget")

    wash_pairs = sorted({a.origin_address.rsplit("-", 1)[0]
                         for a in agents if a.purpose == "wash"})
    pair_members: dict[str, list[str]] = {}
    for a in agents:
        if a.purpose == "wash":
            pair_members.setdefault(a.account_id.rsplit("-", 1)[0], []).append(a.account_id)
    remaining = budgets["WashTrade"]
    for pair_key in sorted(pair_members):
        if remaining <= 0:
            break
        a_id, b_id = sorted(pair_members[pair_key])
        base = peak_hour_start + int(rng.integers(300, 2700))
        when = float(base)
        n_trades = min(remaining // 2, config.wash_trades_per_pair)
        for t in range(n_trades):
            when += float(rng.uniform(5.0, 30.0))
            seller, buyer = (a_id, b_id) if t % 2 == 0 else (b_id, a_id)
            events.append(_Event(int(when), seq, "wash",
                                 {"seller": seller, "buyer": buyer}))
            seq += 1
            remaining -= 2

    inflators = sorted(a.account_id for a in agents if a.purpose == "meter")
    for i in range(budgets["MeterInflation"]):
        start, _ = config.hours[int(rng.integers(0, len(config.hours)))]
        when = parse_iso(start) + int(rng.integers(0, 3600))
        events.append(_Event(when, seq, "meter",
                             {"account": inflators[i % len(inflators)]}))
        seq += 1

    burst_suppliers = sorted(a.account_id for a in agents if a.purpose == "burst")
    if burst_suppliers:
        shares = proportional_counts(budgets["OffPeakBurst"],
                                     [1.0] * len(burst_suppliers))
        for b, (account, n_txs) in enumerate(zip(burst_suppliers, shares)):
            start = off_peak_starts[b % len(off_peak_starts)]
            window = config.burst_window_minutes * 60
            when = float(start + int(rng.integers(0, 3600 - window)))
            for _ in range(n_txs):
                when += float(rng.uniform(1.0, window / max(1, n_txs)))
                events.append(_Event(int(when), seq, "burst", {"account": account}))
                seq += 1

    baseline_traders = [a.account_id for a in agents
                        if a.purpose == "baseline" and a.role in ("Dealer", "Supplier")]
    for i in range(budgets["Spoofing"]):
        start, _ = config.hours[int(rng.integers(0, len(config.hours)))]
        when = parse_iso(start) + int(rng.integers(0, 3600))
        account = baseline_traders[int(rng.integers(0, len(baseline_traders)))]
        events.append(_Event(when, seq, "spoof", {"account": account}))
        seq += 1

    # double spends replay each victim's last accepted transaction, so they
    # execute after the regular stream; the dataset row keeps the original
    # timestamp of the replayed transaction
    for i in range(budgets["DoubleSpend"]):
        account = baseline_traders[i % len(baseline_traders)]
        events.append(_Event(2**60 + i, seq, "doublespend", {"account": account}))
        seq += 1
    return events


# -- execution ------------------------------------------------------------


def _planned_statuses(config: ScenarioConfig,
                      rng: np.random.Generator) -> list[str]:
    """Exact-count status multiset for the sampled rows, shuffled.

    Dataset-wide counts follow the configured weights exactly (largest
    remainder), with the double-spend rows' forced Failed entries already
    taken out of the Failed quota.  Exchangeable assignment keeps the label
    independent of every feature while pinning the class balance, which is
    what keeps the status target at chance level for the models.
    """
    budgets = fraud_budgets(config)
    forced_failed = budgets["DoubleSpend"]
    counts = proportional_counts(config.n_transactions,
                                 [float(w) for w in config.status_weights])
    counts[0] = max(0, counts[0] - forced_failed)
    pool = (["Failed"] * counts[0] + ["Pending"] * counts[1]
            + ["Success"] * counts[2])
    order = rng.permutation(len(pool))
    return [pool[i] for i in order]


class _Runner:
    def __init__(self, config: ScenarioConfig, agents: list[AgentProfile],
                 sentinel=None):
        self.config = config
        self.agents = agents
        self.rng = np.random.default_rng(config.seed)
        self.draws = _Draws(config, self.rng, _planned_statuses(config, self.rng))
        self.rows: list[TransactionRecord] = []
        self.truth = GroundTruth()
        self.rejected_ids: list[str] = []
        self._tx_seq = 0
        self._last_accepted: dict[str, TransactionRecord] = {}
        self._pending_leg_fields: list[dict] = []

        band = (to_cents(config.price_band[0]), to_cents(config.price_band[1]))
        self.ledger = Ledger(price_band_cents=band, block_size=config.block_size)
        for profile in agents:
            self.ledger.register_account(Account(
                profile.account_id, profile.role,
                _account_key(config.seed, profile.account_id),
                profile.origin_address))
        self.ledger.register_account(Account(
            GRID_POOL_ID, "Consumer", _account_key(config.seed, GRID_POOL_ID),
            "org-grid-pool"))
        balance = to_milli(config.initial_balance_mwh)
        for profile in agents:
            if profile.role in ("Dealer", "Supplier"):
                self.ledger.mint(profile.account_id, balance)
        self.ledger.mint(GRID_POOL_ID, to_milli(10_000_000.0))
        if sentinel is not None:
            sentinel.attach(self.ledger)
        self.market = Market(self.ledger, record_factory=self._pop_leg_fields)

    def _pop_leg_fields(self) -> dict:
        return self._pending_leg_fields.pop(0)

    def next_tx_id(self) -> str:
        self._tx_seq += 1
        return f"tx-{self._tx_seq:07d}"

    def run(self, events: list[_Event]) -> ScenarioResult:
        for event in sorted(events, key=lambda e: (e.when, e.seq)):
            handler = getattr(self, f"_run_{event.kind}")
            handler(event)
        self.market.close()
        self.ledger.finalize()
        self.rows.sort(key=lambda r: (r.timestamp, r.transaction_id))
        return ScenarioResult(self.config, self.agents, self.ledger,
                              self.market, self.rows, self.truth,
                              self.rejected_ids)

    # each handler submits ledger activity and appends dataset rows

    def _direct_record(self, account_id: str, tx_type: str, when: int,
                       quantity_milli: int, price_cents: int,
                       fields: dict) -> TransactionRecord:
        account = self.ledger.accounts[account_id]
        tx = TransactionRecord(
            transaction_id=self.next_tx_id(), timestamp=when,
            user_role=account.role, transaction_type=tx_type,
            quantity_milli=quantity_milli, price_cents=price_cents,
            total_cost_cents=total_cost_cents(quantity_milli, price_cents),
            **fields)
        tx.nonce = account.nonce + 1
        sign_transaction(tx, account.signing_key, self.ledger.scheme)
        return tx

    def _run_authority(self, event: _Event) -> None:
        quantity, price = self.draws.quantity_price()
        tx = self._direct_record(event.payload["account"], "Unknown",
                                 event.when, quantity, price,
                                 self.draws.common_fields())
        verdict = self.ledger.submit(event.payload["account"], tx)
        assert verdict, verdict.reason
        self._record_accepted(tx, "None")

    def _run_trade(self, event: _Event, tag: str = "None",
                   quantity_price=None) -> None:
        seller = event.payload["seller"]
        buyer = event.payload["buyer"]
        quantity, price = quantity_price or self.draws.quantity_price()
        self._pending_leg_fields = [self.draws.common_fields(),
                                    self.draws.common_fields()]
        self.market.post_offer(seller, quantity, price, event.when)
        self.market.post_bid(buyer, quantity, price, event.when)
        settlements = self.market.match_orders(event.when)
        for settlement in settlements:
            outcome = self.market.settle(settlement, self.next_tx_id)
            assert outcome.accepted, (outcome.sell_verdict, outcome.buy_verdict)
            self._record_accepted(outcome.sell_tx, tag)
            self._record_accepted(outcome.buy_tx, tag)

    def _run_sybil(self, event: _Event) -> None:
        lo, hi = 0.5, 5.0
        quantity = max(1, to_milli(float(self.rng.uniform(lo, hi))))
        price = self.draws.price_for_quantity(quantity)
        fields = self.draws.common_fields(
            latency_band=tuple(self.config.sybil_latency_range))
        tx = self._direct_record(event.payload["account"], "Buy", event.when,
                                 quantity, price, fields)
        verdict = self.ledger.submit(event.payload["account"], tx)
        assert verdict, verdict.reason
        self._record_accepted(tx, "SybilBurst")

    def _run_wash(self, event: _Event) -> None:
        quantity, price = self.draws.quantity_price()
        self._run_trade(event, tag="WashTrade", quantity_price=(quantity, price))

    def _run_meter(self, event: _Event) -> None:
        lo, hi = self.config.meter_quantity_range
        quantity = to_milli(float(self.rng.uniform(lo, hi)))
        price = self.draws.price_for_quantity(quantity)
        tx = self._direct_record(event.payload["account"], "Sell", event.when,
                                 quantity, price, self.draws.common_fields())
        verdict = self.ledger.submit(event.payload["account"], tx)
        assert verdict, verdict.reason
        self._record_accepted(tx, "MeterInflation")

    def _run_burst(self, event: _Event) -> None:
        lo, hi = self.config.quantity_range
        median_q = (lo + hi) / 2
        target = self.config.burst_volume_factor * median_q
        quantity = to_milli(float(self.rng.uniform(target - 5.0, target + 5.0)))
        price = self.draws.price_for_quantity(quantity)
        tx = self._direct_record(event.payload["account"], "Sell", event.when,
                                 quantity, price, self.draws.common_fields())
        verdict = self.ledger.submit(event.payload["account"], tx)
        assert verdict, verdict.reason
        self._record_accepted(tx, "OffPeakBurst")

    def _run_spoof(self, event: _Event) -> None:
        account_id = event.payload["account"]
        account = self.ledger.accounts[account_id]
        quantity, price = self.draws.quantity_price()
        fields = self.draws.common_fields()
        tx = TransactionRecord(
            transaction_id=self.next_tx_id(), timestamp=event.when,
            user_role=account.role, transaction_type="Buy",
            quantity_milli=quantity, price_cents=price,
            total_cost_cents=total_cost_cents(quantity, price), **fields)
        tx.nonce = account.nonce + 1
        tx.signature = hashlib.sha256(
            f"forged:{self.config.seed}:{tx.transaction_id}".encode()).hexdigest()
        verdict = self.ledger.submit(account_id, tx)
        assert not verdict and verdict.reason == "InvalidSignature", verdict
        tx.account_id = account_id
        self.rows.append(tx)
        self.truth.tags[tx.transaction_id] = "Spoofing"
        self.rejected_ids.append(tx.transaction_id)

    def _run_doublespend(self, event: _Event) -> None:
        account_id = event.payload["account"]
        original = self._last_accepted.get(account_id)
        if original is None:
            raise FraudRateInfeasible(
                f"{account_id} has no accepted transaction to replay")
        replay = TransactionRecord(**{**original.__dict__})
        verdict = self.ledger.submit(account_id, replay)
        assert not verdict and verdict.reason == "NonceReplay", verdict
        logged = TransactionRecord(**{**original.__dict__})
        logged.transaction_id = self.next_tx_id()
        logged.transaction_status = "Failed"
        logged.signature = ""
        logged.account_id = account_id
        self.rows.append(logged)
        self.truth.tags[logged.transaction_id] = "DoubleSpend"
        self.rejected_ids.append(logged.transaction_id)

    def _record_accepted(self, tx: TransactionRecord, tag: str) -> None:
        self.rows.append(tx)
        self.truth.tags[tx.transaction_id] = tag
        self._last_accepted[tx.account_id] = tx


def run_scenario(config: ScenarioConfig, sentinel=None) -> ScenarioResult:
    """Plan and execute a full scenario: baseline order flow plus injected
    fraud, all through the live market and ledger in timestamp order."""
    agents = generate_agents(config)
    budgets = fraud_budgets(config)
    n_fraud = sum(budgets.values())
    n_base = config.n_transactions - n_fraud
    plan_rng = np.random.default_rng(config.seed + 1)
    events = plan_baseline_events(config, agents, plan_rng, n_base)
    events += plan_fraud_events(config, agents, plan_rng, seq_start=len(events))
    runner = _Runner(config, agents, sentinel=sentinel)
    return runner.run(events)


# -- import/export --------------------------------------------------------


def record_to_csv_row(tx: TransactionRecord) -> list[str]:
    return [
        tx.transaction_id,
        iso_utc(tx.timestamp),
        tx.user_role,
        tx.transaction_type,
        format_quantity(tx.quantity_milli),
        format_money(tx.price_cents),
        format_money(tx.total_cost_cents),
        format_latency(tx.latency_units),
        tx.security_level,
        tx.encryption_method,
        "1" if tx.zt_authentication else "0",
        tx.network_slice_id,
        tx.transaction_status,
    ]


def export_csv(rows: list[TransactionRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(DATASET_HEADER + "\r\n")
        writer = csv.writer(fh)
        for tx in rows:
            writer.writerow(record_to_csv_row(tx))


def export_truth(truth: GroundTruth, rows: list[TransactionRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["transaction_id", "fraud_kind"])
        for tx in rows:
            writer.writerow([tx.transaction_id, truth.kind_of(tx.transaction_id)])


def load_dataset_csv(path) -> list[dict]:
    """Parse an exported dataset back into pipeline-ready row dicts."""
    out: list[dict] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for raw in reader:
            out.append({
                "transaction_id": raw["transaction_id"],
                "timestamp": parse_iso(raw["timestamp"]),
                "user_role": raw["user_role"],
                "transaction_type": raw["transaction_type"] or None,
                "electricity_quantity": parse_fixed(raw["electricity_quantity"],
                                                    QUANTITY_SCALE) / QUANTITY_SCALE,
                "price_per_mwh": parse_fixed(raw["price_per_mwh"],
                                             MONEY_SCALE) / MONEY_SCALE,
                "total_cost": parse_fixed(raw["total_cost"], MONEY_SCALE) / MONEY_SCALE,
                "latency_ms": parse_fixed(raw["latency_ms"],
                                          LATENCY_SCALE) / LATENCY_SCALE,
                "security_level": raw["security_level"],
                "encryption_method": raw["encryption_method"],
                "zt_authentication": int(raw["zt_authentication"]),
                "network_slice_id": raw["network_slice_id"],
                "transaction_status": raw["transaction_status"],
            })
    return out


def load_truth_csv(path) -> GroundTruth:
    truth = GroundTruth()
    with open(path, newline="", encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            truth.tags[raw["transaction_id"]] = raw["fraud_kind"]
    return truth


def rows_to_pipeline_dicts(rows: list[TransactionRecord]) -> list[dict]:
    out = []
    for tx in rows:
        out.append({
            "transaction_id": tx.transaction_id,
            "timestamp": tx.timestamp,
            "user_role": tx.user_role,
            "transaction_type": tx.transaction_type,
            "electricity_quantity": tx.quantity_milli / QUANTITY_SCALE,
            "price_per_mwh": tx.price_cents / MONEY_SCALE,
            "total_cost": tx.total_cost_cents / MONEY_SCALE,
            "latency_ms": tx.latency_units / LATENCY_SCALE,
            "security_level": tx.security_level,
            "encryption_method": tx.encryption_method,
            "zt_authentication": 1 if tx.zt_authentication else 0,
            "network_slice_id": tx.network_slice_id,
            "transaction_status": tx.transaction_status,
        })
    return out


def scenario_config_digest(config: ScenarioConfig) -> str:
    blob = json.dumps(config.to_json(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()
