"""Integer micro-unit bookkeeping for resource ledgers.

All capacity/allocation counters in the substrate are kept as integer
micro-units (1e-6 GHz, 1e-6 GB, 1e-6 Mbps).  Integer arithmetic makes
apply/revert an exact inverse and lets conservation checks compare with
``==`` instead of a float tolerance.  Values cross the API boundary as
plain floats and are quantized at the edge.
"""

SCALE = 1_000_000


def to_units(value: float) -> int:
    """Quantize a float resource amount to integer micro-units."""
    return round(value * SCALE)


def from_units(units: int) -> float:
    """Micro-units back to a float amount."""
    return units / SCALE
