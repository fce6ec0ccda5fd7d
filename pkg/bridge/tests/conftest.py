"""Session fixtures: tiny locally-saved models so the protocol runs offline.

The checkpoints are randomly initialized (seeded, so scores are stable within
a session) — plenty for protocol conformance, useless for quality probes.
The quality probes live in test_quality_probes.py and only run against real
pretrained checkpoints named via environment variables.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest
import torch
from transformers import (
    BertConfig,
    BertForSequenceClassification,
    BertTokenizer,
    GPT2Config,
    GPT2LMHeadModel,
    T5Config,
    T5ForConditionalGeneration,
)

WORDS = (
    "besides tennis , my personal favorite sport of all time is basketball "
    "the cat sat a dog ran we offer our buyers wide range meat including "
    "pork beef and lamb . ok i 'm sure that you know as huge fan"
).split()

SENTINELS = [f"<extra_id_{i}>" for i in range(16)]


def build_tokenizer() -> BertTokenizer:
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + sorted(set(WORDS)) + SENTINELS
    tok = BertTokenizer(vocab={t: i for i, t in enumerate(vocab)}, do_lower_case=True)
    tok.add_special_tokens({"additional_special_tokens": SENTINELS})
    return tok


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory) -> Path:
    base = tmp_path_factory.mktemp("tiny-models")
    tok = build_tokenizer()
    vocab_size = len(tok)
    torch.manual_seed(20240817)

    lm = GPT2LMHeadModel(GPT2Config(
        vocab_size=vocab_size, n_layer=2, n_head=2, n_embd=32, n_positions=128,
        bos_token_id=None, eos_token_id=None,
    ))
    lm.save_pretrained(base / "lm")
    tok.save_pretrained(base / "lm")

    infill = T5ForConditionalGeneration(T5Config(
        vocab_size=vocab_size, d_model=32, d_kv=8, d_ff=64, num_layers=2,
        num_heads=2, decoder_start_token_id=tok.pad_token_id,
        pad_token_id=tok.pad_token_id,
    ))
    infill.save_pretrained(base / "infill")
    tok.save_pretrained(base / "infill")

    nli = BertForSequenceClassification(BertConfig(
        vocab_size=vocab_size, hidden_size=32, num_hidden_layers=2,
        num_attention_heads=2, intermediate_size=64, num_labels=3,
        id2label={0: "ENTAILMENT", 1: "NEUTRAL", 2: "CONTRADICTION"},
        label2id={"ENTAILMENT": 0, "NEUTRAL": 1, "CONTRADICTION": 2},
    ))
    nli.save_pretrained(base / "nli")
    tok.save_pretrained(base / "nli")
    return base


@pytest.fixture(scope="session")
def bridge_config_path(model_dir: Path) -> Path:
    config = {
        "lm_model_name": str(model_dir / "lm"),
        "nli_model_name": str(model_dir / "nli"),
        "infill_model_name": str(model_dir / "infill"),
        "device": "cpu",
    }
    path = model_dir / "bridge.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path
