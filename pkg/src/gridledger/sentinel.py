"""Off-chain fraud sentinel.

Consumes the ledger's event stream in order, maintains sliding-window
behavioral statistics per account, scores every verified transaction with a
trained classifier, and holds suspicious ones on the ledger until an
adjudication decision releases or rejects them.  A rule-based Sybil
detector runs independently of the learned model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import models as _models
from .fixedpoint import LATENCY_SCALE, MONEY_SCALE, QUANTITY_SCALE, parse_fixed
from .ledger import EVENT_VERIFIED, Ledger, LedgerEvent
from .pipeline import FittedPreprocessor
from .timeutil import iso_utc, parse_iso

BEHAVIOR_FEATURE_NAMES = (
    "transaction_rate", "volume_mean", "volume_std", "volume_zscore",
    "off_peak_share", "origin_fanin", "min_interarrival",
    "pair_discrepancy", "latency_ms")


class SentinelError(Exception):
    pass


class ModelMissing(SentinelError):
    pass


class AlertClosed(SentinelError):
    pass


class UnsortedHistory(SentinelError):
    pass


@dataclass
class BehaviorFeatures:
    transaction_rate: float = 0.0
    volume_mean: float = 0.0
    volume_std: float = 0.0
    volume_zscore: float = 0.0
    off_peak_share: float = 0.0
    origin_fanin: int = 1
    min_interarrival: float = 0.0
    pair_discrepancy: float = 1.0
    latency_ms: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in BEHAVIOR_FEATURE_NAMES],
                        dtype=np.float64)

    def as_dict(self) -> dict:
        return {name: float(getattr(self, name)) for name in BEHAVIOR_FEATURE_NAMES}


@dataclass
class SentinelPolicy:
    threshold: float = 0.5
    window_seconds: int = 3600
    sybil_k: int = 5
    sybil_gap_seconds: float = 2.0
    off_peak_hours: frozenset = frozenset()

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must be in (0, 1)")


@dataclass
class Alert:
    transaction_id: str
    score: float
    triggered_features: dict
    state: str = "Open"


@dataclass
class AdjudicationDecision:
    transaction_id: str
    decision: str        # Release | Reject
    decided_at: int


def compute_behavior_features(history: list[dict], tx: dict,
                              policy: SentinelPolicy,
                              origin_fanin: int = 1) -> BehaviorFeatures:
    """Window statistics for one account at the moment `tx` arrives.

    `history` holds the account's earlier transactions inside the window,
    each a dict with ts/quantity/hour/counterparty/type keys, sorted by ts;
    mean/std/zscore exclude the current transaction.
    """
    for earlier, later in zip(history, history[1:]):
        if earlier["ts"] > later["ts"]:
            raise UnsortedHistory("history must be sorted by timestamp")
    window_h = policy.window_seconds / 3600.0
    volumes = np.array([h["quantity"] for h in history], dtype=np.float64)
    rate = len(history) / window_h if window_h > 0 else 0.0
    if volumes.size:
        vol_mean = float(volumes.mean())
        vol_std = float(volumes.std())
    else:
        vol_mean = vol_std = 0.0
    zscore = 0.0
    if volumes.size and vol_std > 0:
        zscore = (tx["quantity"] - vol_mean) / vol_std

    stamps = [h["ts"] for h in history] + [tx["ts"]]
    gaps = [b - a for a, b in zip(stamps, stamps[1:])]
    min_gap = float(min(gaps)) if gaps else float(policy.window_seconds)

    hours = [h["hour"] for h in history] + [tx["hour"]]
    off_peak = sum(1 for h in hours if h in policy.off_peak_hours) / len(hours)

    discrepancy = 1.0
    counterparty = tx.get("counterparty") or ""
    if counterparty:
        bought = sold = 0.0
        for h in history + [tx]:
            if (h.get("counterparty") or "") != counterparty:
                continue
            if h["type"] == "Buy":
                bought += h["quantity"]
            elif h["type"] == "Sell":
                sold += h["quantity"]
        gross = bought + sold
        if gross > 0:
            discrepancy = abs(bought - sold) / gross

    return BehaviorFeatures(
        transaction_rate=rate, volume_mean=vol_mean, volume_std=vol_std,
        volume_zscore=zscore, off_peak_share=off_peak,
        origin_fanin=origin_fanin, min_interarrival=min_gap,
        pair_discrepancy=discrepancy, latency_ms=tx["latency_ms"])


class BehaviorTracker:
    """Sliding-window state over the verified-transaction event stream."""

    def __init__(self, policy: SentinelPolicy):
        self.policy = policy
        self._per_account: dict[str, list[dict]] = {}
        self._per_origin: dict[str, dict[str, int]] = {}

    def observe(self, event: LedgerEvent) -> BehaviorFeatures:
        payload = event.payload
        ts = event.emitted_at
        account = payload["account_id"]
        origin = payload["origin_address"]
        tx = {
            "ts": ts,
            "quantity": parse_fixed(payload["electricity_quantity"],
                                    QUANTITY_SCALE) / QUANTITY_SCALE,
            "hour": ts // 3600 % 24,
            "counterparty": payload.get("counterparty", ""),
            "type": payload["transaction_type"],
            "latency_ms": parse_fixed(payload["latency_ms"],
                                      LATENCY_SCALE) / LATENCY_SCALE,
        }
        cutoff = ts - self.policy.window_seconds
        history = [h for h in self._per_account.get(account, []) if h["ts"] > cutoff]
        self._per_account[account] = history

        active = self._per_origin.setdefault(origin, {})
        for other in [a for a, last in active.items() if last <= cutoff]:
            del active[other]
        fanin = len(set(active) | {account})

        features = compute_behavior_features(history, tx, self.policy, fanin)
        history.append(tx)
        active[account] = ts
        return features


def detect_sybil(window: list[tuple[int, str, str]],
                 policy: SentinelPolicy) -> list[dict]:
    """Rule-based Sybil scan, independent of the learned model.

    `window` is a time-sorted list of (ts, account_id, origin_address).
    Flags every maximal group of >= sybil_k accounts sharing one origin
    whose pooled transactions have median inter-arrival <= the gap limit.
    """
    by_origin: dict[str, list[tuple[int, str]]] = {}
    for ts, account, origin in window:
        by_origin.setdefault(origin, []).append((ts, account))
    clusters = []
    for origin in sorted(by_origin):
        entries = by_origin[origin]
        accounts = sorted({account for _, account in entries})
        if len(accounts) < policy.sybil_k:
            continue
        stamps = sorted(ts for ts, _ in entries)
        gaps = np.diff(stamps)
        if gaps.size == 0:
            continue
        if float(np.median(gaps)) <= policy.sybil_gap_seconds:
            clusters.append({"origin_address": origin, "accounts": accounts,
                             "median_interarrival": float(np.median(gaps))})
    return clusters


class SentinelRuntime:
    """Event-driven scorer wired to a live ledger.

    Attach before the simulation starts; every TransactionVerified event is
    scored in log order and held when the fraud probability reaches the
    policy threshold.
    """

    def __init__(self, policy: SentinelPolicy, model=None,
                 preprocessor: FittedPreprocessor | None = None):
        self.policy = policy
        self.model = model
        self.preprocessor = preprocessor
        self.tracker = BehaviorTracker(policy)
        self.alerts: dict[str, Alert] = {}
        self.scores: dict[str, float] = {}
        self.features: dict[str, BehaviorFeatures] = {}
        self.adjudications: list[AdjudicationDecision] = []
        self.sybil_log: list[tuple[int, str, str]] = []
        self._ledger: Ledger | None = None

    def attach(self, ledger: Ledger) -> None:
        self._ledger = ledger
        ledger.add_event_listener(self.on_event)

    def on_event(self, event: LedgerEvent) -> Alert | None:
        if event.kind != EVENT_VERIFIED:
            return None
        behavior = self.tracker.observe(event)
        self.features[event.transaction_id] = behavior
        self.sybil_log.append((event.emitted_at, event.payload["account_id"],
                               event.payload["origin_address"]))
        if self.model is None:
            return None
        if self.preprocessor is None:
            raise ModelMissing("a fitted preprocessor is required for scoring")
        vector = feature_vector(behavior, event.payload, self.preprocessor)
        score = float(_models.predict_proba(self.model, vector[None, :])[0, 1])
        self.scores[event.transaction_id] = score
        if score < self.policy.threshold:
            return None
        alert = Alert(event.transaction_id, score, behavior.as_dict())
        self.alerts[event.transaction_id] = alert
        if self._ledger is not None:
            self._ledger.hold(event.transaction_id, at=event.emitted_at)
        return alert

    def adjudicate(self, alert: Alert, decision: str,
                   decided_at: int | None = None) -> None:
        """Forward a Release/Reject decision to the ledger and log it."""
        if alert.state != "Open":
            raise AlertClosed(alert.transaction_id)
        if decision not in ("Release", "Reject"):
            raise ValueError(f"unknown decision {decision!r}")
        at = decided_at if decided_at is not None else 0
        if self._ledger is not None:
            if decision == "Release":
                self._ledger.release(alert.transaction_id, at=at)
            else:
                self._ledger.reject(alert.transaction_id, at=at)
        alert.state = "Released" if decision == "Release" else "Rejected"
        self.adjudications.append(
            AdjudicationDecision(alert.transaction_id, decision, at))

    def open_alerts(self) -> list[Alert]:
        return [a for a in self.alerts.values() if a.state == "Open"]

    def save_alerts(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for tx_id in sorted(self.alerts):
                alert = self.alerts[tx_id]
                fh.write(json.dumps({
                    "transaction_id": alert.transaction_id,
                    "score": round(alert.score, 6),
                    "triggered_features": {k: round(v, 6) for k, v
                                           in alert.triggered_features.items()},
                    "state": alert.state,
                }, sort_keys=True) + "\n")

    def save_adjudications(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for decision in self.adjudications:
                fh.write(json.dumps({
                    "transaction_id": decision.transaction_id,
                    "decision": decision.decision,
                    "decided_at": iso_utc(decision.decided_at),
                }, sort_keys=True) + "\n")


def payload_to_pipeline_row(payload: dict) -> dict:
    return {
        "transaction_id": "",
        "timestamp": parse_iso(payload["timestamp"]),
        "user_role": payload["user_role"],
        "transaction_type": payload["transaction_type"],
        "electricity_quantity": parse_fixed(payload["electricity_quantity"],
                                            QUANTITY_SCALE) / QUANTITY_SCALE,
        "price_per_mwh": parse_fixed(payload["price_per_mwh"],
                                     MONEY_SCALE) / MONEY_SCALE,
        "total_cost": parse_fixed(payload["total_cost"], MONEY_SCALE) / MONEY_SCALE,
        "latency_ms": parse_fixed(payload["latency_ms"],
                                  LATENCY_SCALE) / LATENCY_SCALE,
        "security_level": payload["security_level"],
        "encryption_method": payload["encryption_method"],
        "zt_authentication": int(payload["zt_authentication"]),
        "network_slice_id": payload["network_slice_id"],
        "transaction_status": payload["transaction_status"],
    }


def feature_vector(behavior: BehaviorFeatures, payload: dict,
                   preprocessor: FittedPreprocessor) -> np.ndarray:
    row = payload_to_pipeline_row(payload)
    pipeline_part = preprocessor.transform([row]).X[0]
    return np.concatenate([behavior.as_vector(), pipeline_part])


def sentinel_manifest(preprocessor: FittedPreprocessor) -> list[str]:
    return [f"behavior:{name}" for name in BEHAVIOR_FEATURE_NAMES] + list(
        preprocessor.manifest)
