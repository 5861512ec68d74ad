"""gridledger: a deterministic peer-to-peer energy-market simulator.

A proof-of-authority ledger records signed energy transactions batched into
hash-chained blocks; a double-auction market matches prosumer offers with
bids; a scenario generator produces labeled datasets with injected fraud;
native classifiers, evaluation metrics, a fraud sentinel, and demand
forecasting close the loop on the analysis side.
"""

__version__ = "0.1.0"

from .ledger import (Account, Block, ChainValidation, Ledger, LedgerEvent,
                     TransactionRecord, Verdict)
from .market import Market, Order, OrderBook, Settlement
from .simgen import GroundTruth, ScenarioConfig, ScenarioResult, run_scenario

__all__ = [
    "Account", "Block", "ChainValidation", "GroundTruth", "Ledger",
    "LedgerEvent", "Market", "Order", "OrderBook", "ScenarioConfig",
    "ScenarioResult", "Settlement", "TransactionRecord", "Verdict",
    "__version__",
]
