"""Fixed-point arithmetic helpers.

Energy quantities are integers in milli-MWh (3 decimal places), money in
cents (2 decimal places), latency in thousandths of a millisecond.  Keeping
everything integral makes chain replay and CSV output byte-deterministic.
"""

from __future__ import annotations

QUANTITY_SCALE = 1000
MONEY_SCALE = 100
LATENCY_SCALE = 1000


def parse_fixed(text: str, scale: int) -> int:
    """Parse a decimal string into a scaled integer. Exact, no float round trip."""
    text = text.strip()
    negative = text.startswith("-")
    if negative:
        text = text[1:]
    if "." in text:
        whole, frac = text.split(".", 1)
    else:
        whole, frac = text, ""
    digits = len(str(scale)) - 1
    frac = (frac + "0" * digits)[:digits]
    value = int(whole or "0") * scale + int(frac or "0")
    return -value if negative else value


def format_fixed(value: int, scale: int) -> str:
    digits = len(str(scale)) - 1
    sign = "-" if value < 0 else ""
    value = abs(value)
    return f"{sign}{value // scale}.{value % scale:0{digits}d}"


def to_milli(mwh: float) -> int:
    return int(round(mwh * QUANTITY_SCALE))


def to_cents(amount: float) -> int:
    return int(round(amount * MONEY_SCALE))


def to_latency_units(ms: float) -> int:
    return int(round(ms * LATENCY_SCALE))


def format_quantity(milli: int) -> str:
    return format_fixed(milli, QUANTITY_SCALE)


def format_money(cents: int) -> str:
    return format_fixed(cents, MONEY_SCALE)


def format_latency(units: int) -> str:
    return format_fixed(units, LATENCY_SCALE)


def total_cost_cents(quantity_milli: int, price_cents: int) -> int:
    """Cost in cents of `quantity_milli` at `price_cents` per MWh.

    Exact product is quantity_milli * price_cents / 1000 cents; rounded
    half-up so the result is within half a cent of the true product.
    """
    return (quantity_milli * price_cents + QUANTITY_SCALE // 2) // QUANTITY_SCALE


def midpoint_price_cents(a_cents: int, b_cents: int) -> int:
    """Midpoint of two prices, rounded half-to-even at the cent."""
    total = a_cents + b_cents
    half = total // 2
    if total % 2 == 0:
        return half
    # exact .5 cent remainder: round to the even cent
    return half if half % 2 == 0 else half + 1
