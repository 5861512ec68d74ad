import numpy as np
import pytest

from gridledger.ledger import GRID_POOL_ID, Account, Ledger


def make_ledger(n_authorities=3, traders=("alice", "bob", "carol"),
                balance_milli=10_000_000, block_size=100,
                price_band=(0, 10_000)) -> Ledger:
    ledger = Ledger(price_band_cents=price_band, block_size=block_size)
    for i in range(n_authorities):
        ledger.register_account(Account(
            f"auth-{i}", "Authority", f"auth-key-{i}".encode(), f"org-auth-{i}"))
    ledger.register_account(Account(
        GRID_POOL_ID, "Consumer", b"grid-pool-key", "org-grid"))
    ledger.mint(GRID_POOL_ID, 1_000_000_000)
    roles = ("Supplier", "Dealer")
    for i, name in enumerate(traders):
        ledger.register_account(Account(
            name, roles[i % 2], f"{name}-key".encode(), f"org-{name}"))
        ledger.mint(name, balance_milli)
    return ledger


@pytest.fixture
def ledger():
    return make_ledger()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
