"""Contract-style matching and settlement.

Prosumers post offers, consumers post bids; crossing orders match at the
midpoint of the two limit prices and settle as a Sell/Buy pair of signed
transactions on the ledger.  Price-time priority throughout, deterministic
given the order stream.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .fixedpoint import (MONEY_SCALE, QUANTITY_SCALE, format_money,
                         format_quantity, midpoint_price_cents, parse_fixed,
                         total_cost_cents)
from .ledger import Ledger, TransactionRecord, Verdict, sign_transaction
from .timeutil import iso_utc, parse_iso


class MarketError(Exception):
    pass


class NonPositiveQuantity(MarketError):
    pass


class InsufficientBalance(MarketError):
    pass


@dataclass
class Order:
    order_id: str
    side: str                 # "offer" or "bid"
    account_id: str
    quantity_milli: int
    limit_price_cents: int
    posted_at: int
    residual_milli: int = field(default=0)
    state: str = "open"       # open | partial | filled | cancelled

    def sort_key(self):
        # offers: cheapest first; bids: highest first; ties by time then id
        price = self.limit_price_cents if self.side == "offer" else -self.limit_price_cents
        return (price, self.posted_at, self.order_id)


@dataclass
class Settlement:
    offer_id: str
    bid_id: str
    seller_id: str
    buyer_id: str
    quantity_milli: int
    clearing_price_cents: int
    matched_at: int
    sell_tx_id: str = ""
    buy_tx_id: str = ""


@dataclass
class SettleOutcome:
    sell_verdict: Verdict
    buy_verdict: Verdict
    sell_tx: TransactionRecord
    buy_tx: TransactionRecord

    @property
    def accepted(self) -> bool:
        return bool(self.sell_verdict) and bool(self.buy_verdict)


class OrderBook:
    def __init__(self):
        self.offers: list[Order] = []
        self.bids: list[Order] = []
        self.orders: dict[str, Order] = {}

    def add(self, order: Order) -> None:
        book = self.offers if order.side == "offer" else self.bids
        book.append(order)
        book.sort(key=Order.sort_key)
        self.orders[order.order_id] = order

    def best_offer(self) -> Order | None:
        return self.offers[0] if self.offers else None

    def best_bid(self) -> Order | None:
        return self.bids[0] if self.bids else None

    def crossed(self) -> bool:
        return (bool(self.offers) and bool(self.bids)
                and self.bids[0].limit_price_cents >= self.offers[0].limit_price_cents)


class Market:
    """One market instance per simulation; strictly single-threaded."""

    def __init__(self, ledger: Ledger, record_factory=None):
        self.ledger = ledger
        self.book = OrderBook()
        self._order_seq = 0
        self._settlement_seq = 0
        self.settlements: list[Settlement] = []
        # fills out the dataset-only fields of each transaction record;
        # replaced by the scenario generator
        self.record_factory = record_factory or _default_record_fields

    def _next_order_id(self) -> str:
        self._order_seq += 1
        return f"ord-{self._order_seq:08d}"

    def post_offer(self, account_id: str, quantity_milli: int,
                   limit_price_cents: int, posted_at: int) -> str:
        if quantity_milli <= 0:
            raise NonPositiveQuantity(f"offer quantity {quantity_milli}")
        account = self.ledger.accounts[account_id]
        if account.available_milli < quantity_milli:
            raise InsufficientBalance(
                f"{account_id} has {account.available_milli} free milli-MWh, "
                f"offer needs {quantity_milli}")
        account.reserved_milli += quantity_milli
        order = Order(self._next_order_id(), "offer", account_id,
                      quantity_milli, limit_price_cents, posted_at,
                      residual_milli=quantity_milli)
        self.book.add(order)
        return order.order_id

    def post_bid(self, account_id: str, quantity_milli: int,
                 limit_price_cents: int, posted_at: int) -> str:
        if quantity_milli <= 0:
            raise NonPositiveQuantity(f"bid quantity {quantity_milli}")
        order = Order(self._next_order_id(), "bid", account_id,
                      quantity_milli, limit_price_cents, posted_at,
                      residual_milli=quantity_milli)
        self.book.add(order)
        return order.order_id

    def match_orders(self, now: int) -> list[Settlement]:
        """Run the continuous double auction until the book uncrosses."""
        matched: list[Settlement] = []
        while self.book.crossed():
            offer = self.book.best_offer()
            bid = self.book.best_bid()
            quantity = min(offer.residual_milli, bid.residual_milli)
            price = midpoint_price_cents(offer.limit_price_cents,
                                         bid.limit_price_cents)
            self._settlement_seq += 1
            settlement = Settlement(offer.order_id, bid.order_id,
                                    offer.account_id, bid.account_id,
                                    quantity, price, now)
            matched.append(settlement)
            for order in (offer, bid):
                order.residual_milli -= quantity
                order.state = "filled" if order.residual_milli == 0 else "partial"
            if offer.residual_milli == 0:
                self.book.offers.pop(0)
            if bid.residual_milli == 0:
                self.book.bids.pop(0)
        return matched

    def settle(self, settlement: Settlement, next_tx_id) -> SettleOutcome:
        """Build, sign and submit the Sell/Buy pair for one match.

        Both legs verify-or-fail together; on acceptance they are queued for
        the next block and the seller's reservation converts to a queued
        outflow.  `next_tx_id` is a callable handing out transaction ids.
        """
        ledger = self.ledger
        seller = ledger.accounts[settlement.seller_id]
        buyer = ledger.accounts[settlement.buyer_id]
        q = settlement.quantity_milli
        cost = total_cost_cents(q, settlement.clearing_price_cents)

        # release the offer reservation for the filled amount; restored if
        # either leg bounces
        seller.reserved_milli -= q

        sell_tx = TransactionRecord(
            transaction_id=next_tx_id(), timestamp=settlement.matched_at,
            user_role=seller.role, transaction_type="Sell",
            quantity_milli=q, price_cents=settlement.clearing_price_cents,
            total_cost_cents=cost, **self.record_factory())
        sell_tx.nonce = seller.nonce + 1
        sign_transaction(sell_tx, seller.signing_key, ledger.scheme)

        buy_tx = TransactionRecord(
            transaction_id=next_tx_id(), timestamp=settlement.matched_at,
            user_role=buyer.role, transaction_type="Buy",
            quantity_milli=q, price_cents=settlement.clearing_price_cents,
            total_cost_cents=cost, **self.record_factory())
        buy_nonce = buyer.nonce + 1
        if settlement.buyer_id == settlement.seller_id:
            buy_nonce += 1
        buy_tx.nonce = buy_nonce
        sign_transaction(buy_tx, buyer.signing_key, ledger.scheme)

        link = f"stl-{self._settlement_seq:08d}-{settlement.offer_id}-{settlement.bid_id}"
        sell_verdict, buy_verdict = ledger.submit_pair(
            (settlement.seller_id, sell_tx), (settlement.buyer_id, buy_tx), link)
        if sell_verdict and buy_verdict:
            settlement.sell_tx_id = sell_tx.transaction_id
            settlement.buy_tx_id = buy_tx.transaction_id
            self.settlements.append(settlement)
        else:
            seller.reserved_milli += q
        return SettleOutcome(sell_verdict, buy_verdict, sell_tx, buy_tx)

    def close(self) -> None:
        """Cancel open orders and release their reservations."""
        for order in self.book.offers:
            self.ledger.accounts[order.account_id].reserved_milli -= order.residual_milli
            order.state = "cancelled"
        for order in self.book.bids:
            order.state = "cancelled"
        self.book.offers.clear()
        self.book.bids.clear()


def _default_record_fields() -> dict:
    return {
        "latency_units": 17_500,
        "security_level": "Medium",
        "encryption_method": "AES-256",
        "zt_authentication": True,
        "network_slice_id": "SliceA",
        "transaction_status": "Success",
    }


ORDER_STREAM_HEADER = ["order_id", "side", "account_id", "quantity_mwh",
                       "limit_price", "posted_at"]


def write_order_stream(path, orders: list[Order]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ORDER_STREAM_HEADER)
        for order in orders:
            writer.writerow([
                order.order_id,
                "offer" if order.side == "offer" else "bid",
                order.account_id,
                format_quantity(order.quantity_milli),
                format_money(order.limit_price_cents),
                iso_utc(order.posted_at),
            ])


def read_order_stream(path) -> list[Order]:
    """Load a replayable order stream from CSV."""
    out: list[Order] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            quantity = parse_fixed(row["quantity_mwh"], QUANTITY_SCALE)
            out.append(Order(
                order_id=row["order_id"], side=row["side"],
                account_id=row["account_id"], quantity_milli=quantity,
                limit_price_cents=parse_fixed(row["limit_price"], MONEY_SCALE),
                posted_at=parse_iso(row["posted_at"]),
                residual_milli=quantity))
    return out


def replay_order_stream(market: Market, path) -> list[Settlement]:
    """Feed a persisted order stream back through a market, matching after
    every order; returns the settlements in match order."""
    settlements: list[Settlement] = []
    for order in read_order_stream(path):
        if order.side == "offer":
            market.post_offer(order.account_id, order.quantity_milli,
                              order.limit_price_cents, order.posted_at)
        else:
            market.post_bid(order.account_id, order.quantity_milli,
                            order.limit_price_cents, order.posted_at)
        settlements.extend(market.match_orders(order.posted_at))
    return settlements
