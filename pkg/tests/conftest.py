"""Pytest fixtures over the shared test data in helpers.py."""

import pytest

from expanse.corpus import ExpansionPair, Language, Provenance, TaggedText

from helpers import (
    INFO_X,
    INFO_Y,
    MEAT_POS,
    MEAT_TOKENS,
    TABLE1_SPANS,
    TABLE1_X,
    TABLE1_Y,
)


@pytest.fixture
def table1_pair() -> ExpansionPair:
    return ExpansionPair(
        id="table1",
        language=Language.EN,
        source=TABLE1_X,
        expansion=TABLE1_Y,
        modifier_spans=TABLE1_SPANS,
        provenance=Provenance.REF,
    )


@pytest.fixture
def info_pair() -> ExpansionPair:
    from expanse.align import pair_from_alignment

    return pair_from_alignment(INFO_X, INFO_Y, "info", Language.EN, Provenance.REF)


@pytest.fixture
def meat_tagged() -> TaggedText:
    return TaggedText(tokens=MEAT_TOKENS, pos=MEAT_POS, id="meat")
