"""Append-only proof-of-authority ledger.

Verifies signed energy transactions against per-account state, batches the
accepted ones into hash-chained blocks signed by a rotating authority, and
emits an ordered event stream that downstream monitors consume.

Token flow: every Sell leg moves energy from the seller to the grid pool
account, every Buy leg moves energy from the pool to the buyer.  A matched
settlement therefore nets out to a seller-to-buyer transfer while unpaired
records stay conservative: the total token supply only changes through
explicit mints.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

from .fixedpoint import format_latency, format_money, format_quantity
from .timeutil import iso_utc

ROLES = ("Authority", "Dealer", "Supplier", "Consumer")
TX_TYPES = ("Buy", "Sell", "Unknown")
SECURITY_LEVELS = ("Low", "Medium", "High")
SLICES = ("SliceA", "SliceB", "SliceC")
STATUSES = ("Failed", "Pending", "Success")

GENESIS_PREV_HASH = "0" * 64
GRID_POOL_ID = "grid-pool"

EVENT_VERIFIED = "TransactionVerified"
EVENT_HELD = "TransactionHeld"
EVENT_RELEASED = "TransactionReleased"
EVENT_REJECTED = "TransactionRejected"

REJECT_INVALID_SIGNATURE = "InvalidSignature"
REJECT_NON_POSITIVE_QUANTITY = "NonPositiveQuantity"
REJECT_PRICE_OUT_OF_BAND = "PriceOutOfBand"
REJECT_STALE_TIMESTAMP = "StaleTimestamp"
REJECT_NONCE_REPLAY = "NonceReplay"
REJECT_INSUFFICIENT_BALANCE = "InsufficientBalance"


class LedgerError(Exception):
    pass


class EmptyBatch(LedgerError):
    pass


class NoValidators(LedgerError):
    pass


class UnknownTransaction(LedgerError):
    pass


class NoOpenHold(LedgerError):
    pass


class AlreadyFinalized(LedgerError):
    pass


class MintAfterStart(LedgerError):
    pass


@dataclass
class Account:
    account_id: str
    role: str
    signing_key: bytes
    origin_address: str
    nonce: int = 0
    energy_milli: int = 0
    reserved_milli: int = 0   # backing open market offers
    outbound_milli: int = 0   # queued sells awaiting block append
    last_accepted_ts: int = 0

    @property
    def available_milli(self) -> int:
        return self.energy_milli - self.reserved_milli - self.outbound_milli


@dataclass
class TransactionRecord:
    transaction_id: str
    timestamp: int
    user_role: str
    transaction_type: str
    quantity_milli: int
    price_cents: int
    total_cost_cents: int
    latency_units: int
    security_level: str
    encryption_method: str
    zt_authentication: bool
    network_slice_id: str
    transaction_status: str
    nonce: int = 0
    signature: str = ""
    account_id: str = ""


@dataclass
class Block:
    height: int
    prev_hash: str
    timestamp: int
    validator_id: str
    transactions: list[TransactionRecord]
    block_hash: str = ""
    validator_signature: str = ""


@dataclass
class LedgerEvent:
    kind: str
    transaction_id: str
    emitted_at: int
    payload: dict


@dataclass
class Verdict:
    accepted: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.accepted


ACCEPT = Verdict(True)


@dataclass
class ChainValidation:
    ok: bool
    first_bad_height: int | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def _packed_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack(">I", len(raw)) + raw


def _packed_int(value: int) -> bytes:
    return struct.pack(">q", value)


def canonical_bytes(tx: TransactionRecord) -> bytes:
    """Deterministic, injective encoding of a transaction (signature excluded).

    Fields follow the dataset column order, then the nonce.  Strings are
    UTF-8 length-prefixed, fixed-point values are their scaled integers,
    the timestamp is ISO-8601 UTC text.
    """
    parts = [
        _packed_str(tx.transaction_id),
        _packed_str(iso_utc(tx.timestamp)),
        _packed_str(tx.user_role),
        _packed_str(tx.transaction_type),
        _packed_int(tx.quantity_milli),
        _packed_int(tx.price_cents),
        _packed_int(tx.total_cost_cents),
        _packed_int(tx.latency_units),
        _packed_str(tx.security_level),
        _packed_str(tx.encryption_method),
        bytes([1 if tx.zt_authentication else 0]),
        _packed_str(tx.network_slice_id),
        _packed_str(tx.transaction_status),
        _packed_int(tx.nonce),
    ]
    return b"".join(parts)


class KeyedHashScheme:
    """Default signature scheme: a deterministic keyed hash.

    sig = H(key || message).  Swap in any object with the same three
    attributes for a real asymmetric scheme.
    """

    name = "keyed-sha256"

    def sign(self, key: bytes, message: bytes) -> bytes:
        if not key:
            raise ValueError("empty signing key")
        return hashlib.sha256(key + message).digest()

    def verify(self, key: bytes, message: bytes, signature: bytes) -> bool:
        if not key:
            return False
        return self.sign(key, message) == signature


def sign_transaction(tx: TransactionRecord, key: bytes,
                     scheme: KeyedHashScheme | None = None) -> TransactionRecord:
    scheme = scheme or KeyedHashScheme()
    tx.signature = scheme.sign(key, canonical_bytes(tx)).hex()
    return tx


@dataclass
class _PendingTx:
    account_id: str
    tx: TransactionRecord
    link_id: str | None
    held: bool = False


class Ledger:
    """Single-writer ledger state machine.

    All mutation happens through submit/hold/release/reject/flush on one
    logical thread; readers may snapshot between blocks.
    """

    def __init__(self, price_band_cents: tuple[int, int] = (0, 100 * 100),
                 block_size: int = 100, scheme: KeyedHashScheme | None = None,
                 hash_name: str = "sha256"):
        if hash_name not in hashlib.algorithms_available:
            raise ValueError(f"unknown hash function {hash_name!r}")
        self.scheme = scheme or KeyedHashScheme()
        self.hash_name = hash_name
        self.price_band_cents = price_band_cents
        self.block_size = block_size
        self.accounts: dict[str, Account] = {}
        self.authorities: list[str] = []
        self.chain: list[Block] = []
        self.events: list[LedgerEvent] = []
        self._pending: list[_PendingTx] = []
        self._links: dict[str, list[str]] = {}
        self._by_tx_id: dict[str, _PendingTx] = {}
        self._finalized_ids: set[str] = set()
        self._voided: list[tuple[str, int]] = []   # (account_id, nonce) of
        # rejected-after-hold transactions whose nonce stays consumed
        self._initial_balances: dict[str, int] = {}
        self._started = False
        self._event_listeners: list = []

    # -- setup ----------------------------------------------------------

    def register_account(self, account: Account) -> None:
        if self._started:
            raise MintAfterStart("accounts must be registered before trading starts")
        if account.account_id in self.accounts:
            raise LedgerError(f"duplicate account {account.account_id}")
        self.accounts[account.account_id] = account
        if account.role == "Authority":
            self.authorities.append(account.account_id)
        self._initial_balances[account.account_id] = account.energy_milli

    def mint(self, account_id: str, amount_milli: int) -> None:
        if self._started:
            raise MintAfterStart("tokens can only be minted before trading starts")
        account = self.accounts[account_id]
        account.energy_milli += amount_milli
        self._initial_balances[account_id] = account.energy_milli

    def add_event_listener(self, listener) -> None:
        """Listener is called with each LedgerEvent as it is emitted."""
        self._event_listeners.append(listener)

    def _hash(self, data: bytes) -> bytes:
        return hashlib.new(self.hash_name, data).digest()

    def _emit(self, kind: str, tx_id: str, at: int, payload: dict) -> None:
        event = LedgerEvent(kind, tx_id, at, payload)
        self.events.append(event)
        for listener in self._event_listeners:
            listener(event)

    # -- verification ---------------------------------------------------

    def verify_transaction(self, account_id: str, tx: TransactionRecord) -> Verdict:
        """Check a submission against current state; does not mutate anything.

        Checks run in a fixed order and the verdict names the first failure.
        """
        account = self.accounts.get(account_id)
        if account is None:
            return Verdict(False, REJECT_INVALID_SIGNATURE)
        expected = self.scheme.sign(account.signing_key, canonical_bytes(tx))
        try:
            supplied = bytes.fromhex(tx.signature)
        except ValueError:
            supplied = b""
        if supplied != expected:
            return Verdict(False, REJECT_INVALID_SIGNATURE)
        if tx.quantity_milli <= 0:
            return Verdict(False, REJECT_NON_POSITIVE_QUANTITY)
        low, high = self.price_band_cents
        if not (low <= tx.price_cents <= high):
            return Verdict(False, REJECT_PRICE_OUT_OF_BAND)
        if tx.timestamp < account.last_accepted_ts:
            return Verdict(False, REJECT_STALE_TIMESTAMP)
        if tx.nonce != account.nonce + 1:
            return Verdict(False, REJECT_NONCE_REPLAY)
        if tx.transaction_type == "Sell" and account.available_milli < tx.quantity_milli:
            return Verdict(False, REJECT_INSUFFICIENT_BALANCE)
        return ACCEPT

    def _commit(self, account_id: str, tx: TransactionRecord,
                link_id: str | None, counterparty: str | None) -> None:
        account = self.accounts[account_id]
        account.nonce = tx.nonce
        account.last_accepted_ts = tx.timestamp
        if tx.transaction_type == "Sell":
            account.outbound_milli += tx.quantity_milli
        elif tx.transaction_type == "Buy":
            self.accounts[GRID_POOL_ID].outbound_milli += tx.quantity_milli
        tx.account_id = account_id
        entry = _PendingTx(account_id, tx, link_id)
        self._pending.append(entry)
        self._by_tx_id[tx.transaction_id] = entry
        if link_id is not None:
            self._links.setdefault(link_id, []).append(tx.transaction_id)
        # the full record rides on the event so off-chain monitors can score
        # transactions without a second data channel
        self._emit(EVENT_VERIFIED, tx.transaction_id, tx.timestamp, {
            "account_id": account_id,
            "origin_address": account.origin_address,
            "counterparty": counterparty or "",
            "timestamp": iso_utc(tx.timestamp),
            "user_role": tx.user_role,
            "transaction_type": tx.transaction_type,
            "electricity_quantity": format_quantity(tx.quantity_milli),
            "price_per_mwh": format_money(tx.price_cents),
            "total_cost": format_money(tx.total_cost_cents),
            "latency_ms": format_latency(tx.latency_units),
            "security_level": tx.security_level,
            "encryption_method": tx.encryption_method,
            "zt_authentication": 1 if tx.zt_authentication else 0,
            "network_slice_id": tx.network_slice_id,
            "transaction_status": tx.transaction_status,
        })

    def submit(self, account_id: str, tx: TransactionRecord,
               link_id: str | None = None, counterparty: str | None = None,
               auto_flush: bool = True) -> Verdict:
        """Verify one transaction and queue it for the next block on accept."""
        self._started = True
        verdict = self.verify_transaction(account_id, tx)
        if verdict:
            self._commit(account_id, tx, link_id, counterparty)
            if auto_flush:
                self._maybe_flush()
        return verdict

    def submit_pair(self, sell: tuple[str, TransactionRecord],
                    buy: tuple[str, TransactionRecord], link_id: str,
                    auto_flush: bool = True) -> tuple[Verdict, Verdict]:
        """Submit the two legs of a settlement atomically.

        If either leg fails verification, neither is queued and no account
        state changes.
        """
        self._started = True
        sell_id, sell_tx = sell
        buy_id, buy_tx = buy
        sell_verdict = self.verify_transaction(sell_id, sell_tx)
        if not sell_verdict:
            return sell_verdict, Verdict(False, sell_verdict.reason)
        seller = self.accounts[sell_id]
        saved = (seller.nonce, seller.last_accepted_ts, seller.outbound_milli)
        seller.nonce = sell_tx.nonce
        seller.last_accepted_ts = sell_tx.timestamp
        buy_verdict = self.verify_transaction(buy_id, buy_tx)
        if not buy_verdict:
            seller.nonce, seller.last_accepted_ts, seller.outbound_milli = saved
            return Verdict(False, buy_verdict.reason), buy_verdict
        seller.nonce, seller.last_accepted_ts, seller.outbound_milli = saved
        self._commit(sell_id, sell_tx, link_id, counterparty=buy_id)
        self._commit(buy_id, buy_tx, link_id, counterparty=sell_id)
        if auto_flush:
            self._maybe_flush()
        return sell_verdict, buy_verdict

    # -- holds ----------------------------------------------------------

    def hold(self, tx_id: str, at: int | None = None) -> None:
        entry = self._by_tx_id.get(tx_id)
        if entry is None:
            if tx_id in self._finalized_ids:
                raise AlreadyFinalized(tx_id)
            raise UnknownTransaction(tx_id)
        if entry.held:
            raise LedgerError(f"transaction {tx_id} already held")
        entry.held = True
        self._emit(EVENT_HELD, tx_id, at if at is not None else entry.tx.timestamp, {})

    def release(self, tx_id: str, at: int | None = None) -> None:
        entry = self._require_open_hold(tx_id)
        entry.held = False
        self._emit(EVENT_RELEASED, tx_id, at if at is not None else entry.tx.timestamp, {})
        self._maybe_flush()

    def reject(self, tx_id: str, at: int | None = None) -> None:
        """Drop a held transaction (and its settlement partner) from the queue.

        Reserved/outbound balances are reversed and the record is marked
        Failed; the partner leg rolls back with it so settlements stay atomic.
        """
        entry = self._require_open_hold(tx_id)
        doomed = [entry.tx.transaction_id]
        if entry.link_id is not None:
            doomed = list(self._links.get(entry.link_id, doomed))
        for tid in doomed:
            victim = self._by_tx_id.pop(tid, None)
            if victim is None:
                continue
            self._pending.remove(victim)
            tx = victim.tx
            account = self.accounts[victim.account_id]
            if tx.transaction_type == "Sell":
                account.outbound_milli -= tx.quantity_milli
            elif tx.transaction_type == "Buy":
                self.accounts[GRID_POOL_ID].outbound_milli -= tx.quantity_milli
            tx.transaction_status = "Failed"
            # nonce stays consumed: the submission was accepted, only its
            # settlement is voided; chain validation accounts for the gap
            self._voided.append((victim.account_id, tx.nonce))
        if entry.link_id is not None:
            self._links.pop(entry.link_id, None)
        self._emit(EVENT_REJECTED, tx_id, at if at is not None else entry.tx.timestamp,
                   {"voided": doomed})

    def _require_open_hold(self, tx_id: str) -> _PendingTx:
        entry = self._by_tx_id.get(tx_id)
        if entry is None:
            if tx_id in self._finalized_ids:
                raise AlreadyFinalized(tx_id)
            raise UnknownTransaction(tx_id)
        if not entry.held:
            raise NoOpenHold(tx_id)
        return entry

    # -- blocks ---------------------------------------------------------

    def _includable(self) -> list[_PendingTx]:
        """Pending entries eligible for the next block: not held, and with
        no held settlement partner."""
        blocked_links = {e.link_id for e in self._pending if e.held and e.link_id}
        return [e for e in self._pending
                if not e.held and e.link_id not in blocked_links]

    def _maybe_flush(self) -> None:
        if len(self._includable()) >= self.block_size:
            self.flush_block()

    def flush_block(self) -> Block:
        """Append one block holding every currently includable transaction."""
        batch = self._includable()
        if not batch:
            raise EmptyBatch("no includable transactions")
        if not self.authorities:
            raise NoValidators("no authority accounts registered")
        height = len(self.chain)
        validator_id = self.authorities[height % len(self.authorities)]
        prev_hash = self.chain[-1].block_hash if self.chain else GENESIS_PREV_HASH
        timestamp = max(e.tx.timestamp for e in batch)
        block = Block(height, prev_hash, timestamp, validator_id,
                      [e.tx for e in batch])
        block.block_hash = self._block_hash(block)
        key = self.accounts[validator_id].signing_key
        block.validator_signature = self.scheme.sign(
            key, bytes.fromhex(block.block_hash)).hex()
        self.chain.append(block)
        for entry in batch:
            self._apply_transfer(entry.tx)
            self._pending.remove(entry)
            self._by_tx_id.pop(entry.tx.transaction_id, None)
            self._finalized_ids.add(entry.tx.transaction_id)
            if entry.link_id is not None:
                self._links.pop(entry.link_id, None)
        return block

    def finalize(self) -> None:
        """Flush whatever is still includable at end of simulation."""
        if self._includable():
            self.flush_block()

    def _apply_transfer(self, tx: TransactionRecord) -> None:
        account = self.accounts[tx.account_id]
        pool = self.accounts[GRID_POOL_ID]
        q = tx.quantity_milli
        if tx.transaction_type == "Sell":
            account.energy_milli -= q
            account.outbound_milli -= q
            pool.energy_milli += q
        elif tx.transaction_type == "Buy":
            pool.energy_milli -= q
            pool.outbound_milli -= q
            account.energy_milli += q
        if account.energy_milli < 0 or pool.energy_milli < 0:
            raise LedgerError("negative balance after transfer")

    def _block_hash(self, block: Block) -> str:
        parts = [
            _packed_int(block.height),
            bytes.fromhex(block.prev_hash),
            _packed_str(iso_utc(block.timestamp)),
            _packed_str(block.validator_id),
            _packed_int(len(block.transactions)),
        ]
        for tx in block.transactions:
            parts.append(canonical_bytes(tx))
            parts.append(_packed_str(tx.signature))
            parts.append(_packed_str(tx.account_id))
        return self._hash(b"".join(parts)).hex()

    # -- validation -----------------------------------------------------

    def total_energy(self) -> int:
        return sum(a.energy_milli for a in self.accounts.values())

    def validate_chain(self) -> ChainValidation:
        """Structural and replay validation of the full chain.

        True only if every block hash, prev link, validator signature and
        schedule slot verify, and replaying every transaction from genesis
        reproduces the live balances and nonce bookkeeping exactly.  Holds
        can defer a transaction to a later block (or void it entirely on
        rejection), so per-account chain nonces are validated as a set: no
        repeats, and together with the voided and still-pending nonces they
        must tile 1..account.nonce with no gap.
        """
        if not self.authorities:
            return ChainValidation(False, 0, "no validators")
        prev_hash = GENESIS_PREV_HASH
        seen_nonces: dict[str, set] = {aid: set() for aid in self.accounts}
        seen_tx_ids: set[str] = set()
        balances = dict(self._initial_balances)
        low, high = self.price_band_cents
        for block in self.chain:
            h = block.height
            if block.prev_hash != prev_hash:
                return ChainValidation(False, h, "broken prev_hash link")
            if self._block_hash(block) != block.block_hash:
                return ChainValidation(False, h, "block hash mismatch")
            expected_validator = self.authorities[h % len(self.authorities)]
            if block.validator_id != expected_validator:
                return ChainValidation(False, h, "validator out of schedule")
            key = self.accounts[block.validator_id].signing_key
            try:
                sig = bytes.fromhex(block.validator_signature)
            except ValueError:
                sig = b""
            if not self.scheme.verify(key, bytes.fromhex(block.block_hash), sig):
                return ChainValidation(False, h, "bad validator signature")
            for tx in block.transactions:
                account = self.accounts.get(tx.account_id)
                if account is None:
                    return ChainValidation(False, h, "unknown account")
                expected_sig = self.scheme.sign(account.signing_key, canonical_bytes(tx))
                if bytes.fromhex(tx.signature) != expected_sig:
                    return ChainValidation(False, h, "bad transaction signature")
                if tx.transaction_id in seen_tx_ids:
                    return ChainValidation(False, h, "duplicate transaction id")
                seen_tx_ids.add(tx.transaction_id)
                if tx.quantity_milli <= 0:
                    return ChainValidation(False, h, "non-positive quantity")
                if not (low <= tx.price_cents <= high):
                    return ChainValidation(False, h, "price out of band")
                if tx.nonce in seen_nonces[tx.account_id]:
                    return ChainValidation(False, h, "nonce replay on chain")
                seen_nonces[tx.account_id].add(tx.nonce)
                q = tx.quantity_milli
                if tx.transaction_type == "Sell":
                    balances[tx.account_id] -= q
                    balances[GRID_POOL_ID] += q
                elif tx.transaction_type == "Buy":
                    balances[GRID_POOL_ID] -= q
                    balances[tx.account_id] += q
                if balances[tx.account_id] < 0 or balances[GRID_POOL_ID] < 0:
                    return ChainValidation(False, h, "balance went negative")
            prev_hash = block.block_hash
        off_chain: dict[str, set] = {aid: set() for aid in self.accounts}
        for account_id, nonce in self._voided:
            off_chain[account_id].add(nonce)
        for entry in self._pending:
            off_chain[entry.account_id].add(entry.tx.nonce)
        last = len(self.chain) - 1
        for aid, account in self.accounts.items():
            if balances[aid] != account.energy_milli:
                return ChainValidation(False, last,
                                       f"replayed balance mismatch for {aid}")
            accounted = seen_nonces[aid] | off_chain[aid]
            if accounted != set(range(1, account.nonce + 1)):
                return ChainValidation(False, last,
                                       f"replayed nonce mismatch for {aid}")
        return ChainValidation(True)

    # -- persistence ----------------------------------------------------

    def save_chain(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"format": "gridledger-chain", "version": 1,
                                 "hash_function": self.hash_name,
                                 "signature_scheme": self.scheme.name},
                                sort_keys=True) + "\n")
            for block in self.chain:
                fh.write(json.dumps(block_to_json(block)) + "\n")

    def save_events(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for event in self.events:
                fh.write(json.dumps({
                    "kind": event.kind,
                    "transaction_id": event.transaction_id,
                    "emitted_at": iso_utc(event.emitted_at),
                    "payload": event.payload,
                }, sort_keys=True) + "\n")

    def save_state(self, path) -> None:
        """Everything needed to reload the ledger next to its chain file:
        accounts (with keys; this is a simulation), queue state, and config."""
        state = {
            "hash_function": self.hash_name,
            "price_band_cents": list(self.price_band_cents),
            "block_size": self.block_size,
            "authorities": self.authorities,
            "accounts": [{
                "account_id": a.account_id, "role": a.role,
                "signing_key": a.signing_key.hex(),
                "origin_address": a.origin_address, "nonce": a.nonce,
                "energy_milli": a.energy_milli,
                "reserved_milli": a.reserved_milli,
                "outbound_milli": a.outbound_milli,
                "last_accepted_ts": a.last_accepted_ts,
            } for a in self.accounts.values()],
            "initial_balances": self._initial_balances,
            "pending": [{
                "account_id": e.account_id, "tx": tx_to_json(e.tx),
                "link_id": e.link_id, "held": e.held,
            } for e in self._pending],
            "finalized_ids": sorted(self._finalized_ids),
            "voided": [[aid, nonce] for aid, nonce in self._voided],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(state, fh, sort_keys=True)


def load_ledger(state_path, chain_path=None, events_path=None) -> Ledger:
    """Rebuild a ledger from its persisted state, chain, and event log."""
    with open(state_path, encoding="utf-8") as fh:
        state = json.load(fh)
    ledger = Ledger(price_band_cents=tuple(state["price_band_cents"]),
                    block_size=state["block_size"],
                    hash_name=state["hash_function"])
    for raw in state["accounts"]:
        account = Account(
            raw["account_id"], raw["role"], bytes.fromhex(raw["signing_key"]),
            raw["origin_address"], raw["nonce"], raw["energy_milli"],
            raw["reserved_milli"], raw["outbound_milli"],
            raw["last_accepted_ts"])
        ledger.accounts[account.account_id] = account
    ledger.authorities = list(state["authorities"])
    ledger._initial_balances = dict(state["initial_balances"])
    ledger._finalized_ids = set(state["finalized_ids"])
    ledger._voided = [(aid, nonce) for aid, nonce in state.get("voided", [])]
    ledger._started = True
    for raw in state["pending"]:
        entry = _PendingTx(raw["account_id"], tx_from_json(raw["tx"]),
                           raw["link_id"], raw["held"])
        ledger._pending.append(entry)
        ledger._by_tx_id[entry.tx.transaction_id] = entry
        if entry.link_id is not None:
            ledger._links.setdefault(entry.link_id, []).append(
                entry.tx.transaction_id)
    if chain_path is not None:
        _, ledger.chain = load_chain(chain_path)
    if events_path is not None:
        ledger.events = load_events(events_path)
    return ledger


def load_events(path) -> list[LedgerEvent]:
    from .timeutil import parse_iso
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            events.append(LedgerEvent(obj["kind"], obj["transaction_id"],
                                      parse_iso(obj["emitted_at"]),
                                      obj["payload"]))
    return events


def block_to_json(block: Block) -> dict:
    return {
        "height": block.height,
        "prev_hash": block.prev_hash,
        "timestamp": iso_utc(block.timestamp),
        "validator_id": block.validator_id,
        "transactions": [tx_to_json(tx) for tx in block.transactions],
        "block_hash": block.block_hash,
        "validator_signature": block.validator_signature,
    }


def tx_to_json(tx: TransactionRecord) -> dict:
    return {
        "transaction_id": tx.transaction_id,
        "timestamp": iso_utc(tx.timestamp),
        "user_role": tx.user_role,
        "transaction_type": tx.transaction_type,
        "electricity_quantity": format_quantity(tx.quantity_milli),
        "price_per_mwh": format_money(tx.price_cents),
        "total_cost": format_money(tx.total_cost_cents),
        "latency_ms": format_latency(tx.latency_units),
        "security_level": tx.security_level,
        "encryption_method": tx.encryption_method,
        "zt_authentication": 1 if tx.zt_authentication else 0,
        "network_slice_id": tx.network_slice_id,
        "transaction_status": tx.transaction_status,
        "nonce": tx.nonce,
        "signature": tx.signature,
        "account_id": tx.account_id,
    }


def tx_from_json(obj: dict) -> TransactionRecord:
    from .fixedpoint import parse_fixed, QUANTITY_SCALE, MONEY_SCALE, LATENCY_SCALE
    from .timeutil import parse_iso
    return TransactionRecord(
        transaction_id=obj["transaction_id"],
        timestamp=parse_iso(obj["timestamp"]),
        user_role=obj["user_role"],
        transaction_type=obj["transaction_type"],
        quantity_milli=parse_fixed(obj["electricity_quantity"], QUANTITY_SCALE),
        price_cents=parse_fixed(obj["price_per_mwh"], MONEY_SCALE),
        total_cost_cents=parse_fixed(obj["total_cost"], MONEY_SCALE),
        latency_units=parse_fixed(obj["latency_ms"], LATENCY_SCALE),
        security_level=obj["security_level"],
        encryption_method=obj["encryption_method"],
        zt_authentication=bool(int(obj["zt_authentication"])),
        network_slice_id=obj["network_slice_id"],
        transaction_status=obj["transaction_status"],
        nonce=obj["nonce"],
        signature=obj["signature"],
        account_id=obj.get("account_id", ""),
    )


def load_chain(path) -> tuple[dict, list[Block]]:
    """Read a persisted chain file; returns (header, blocks)."""
    header: dict = {}
    blocks: list[Block] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if i == 0 and "format" in obj:
                header = obj
                continue
            from .timeutil import parse_iso
            blocks.append(Block(
                height=obj["height"],
                prev_hash=obj["prev_hash"],
                timestamp=parse_iso(obj["timestamp"]),
                validator_id=obj["validator_id"],
                transactions=[tx_from_json(t) for t in obj["transactions"]],
                block_hash=obj["block_hash"],
                validator_signature=obj["validator_signature"],
            ))
    return header, blocks
