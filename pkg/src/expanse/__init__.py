"""Text-expansion corpus construction and evaluation toolkit."""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    ExpansionPair,
    Language,
    MetricReport,
    Provenance,
    Span,
    TaggedText,
    read_pairs,
    surface_modifiers,
    write_pairs,
)
