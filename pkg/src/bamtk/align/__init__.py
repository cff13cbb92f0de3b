"""Human sentence alignment: session state machine plus HTTP service."""

from .core import (
    AlignedUnit,
    AlignmentError,
    AlignmentSession,
    Direction,
    UnitKind,
    export_pairs,
    export_tsv,
)

__all__ = [
    "AlignedUnit",
    "AlignmentError",
    "AlignmentSession",
    "Direction",
    "UnitKind",
    "export_pairs",
    "export_tsv",
]
