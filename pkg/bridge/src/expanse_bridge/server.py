"""The serving loop: line-delimited JSON requests in, one response per request.

Requests follow the expanse external-scorer protocol:

    {"id": str, "kind": "lm"|"nli"|"infill", "input": [str],
     "target": [str]?, "premise": [str]?, "hypothesis": [str]?}

Responses carry {"id", "nll_sum", "token_count"} for lm/infill and
{"id", "entailment"} for nli; malformed requests get {"id", "error"}.
Requests are handled strictly in arrival order, so a response is never
emitted before its request has been fully read.  Models load eagerly: a
resolution failure aborts before any request is consumed.
"""

from __future__ import annotations

import json
import socket
import sys
from dataclasses import dataclass, field
from typing import IO, Any

from .scorers import BridgeError, CausalLmScorer, InfillScorer, NliScorer


@dataclass
class BridgeConfig:
    lm_model_name: str | None = None
    nli_model_name: str | None = None
    infill_model_name: str | None = None
    device: str = "cpu"
    max_batch: int = 1
    mask_format: str = "<M{i}>"
    sentinel_format: str = "<extra_id_{k}>"
    entailment_label: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @staticmethod
    def from_obj(obj: dict[str, Any]) -> "BridgeConfig":
        known = {f for f in BridgeConfig.__dataclass_fields__ if f != "extra"}
        kwargs = {k: v for k, v in obj.items() if k in known}
        extra = {k: v for k, v in obj.items() if k not in known}
        return BridgeConfig(**kwargs, extra=extra)


def load_scorers(config: BridgeConfig) -> dict[str, Any]:
    """Resolve every configured model to local weights before serving."""
    from transformers import (
        AutoModelForCausalLM,
        AutoModelForSeq2SeqLM,
        AutoModelForSequenceClassification,
        AutoTokenizer,
    )

    scorers: dict[str, Any] = {}
    if config.lm_model_name:
        tok = AutoTokenizer.from_pretrained(config.lm_model_name)
        model = AutoModelForCausalLM.from_pretrained(config.lm_model_name)
        scorers["lm"] = CausalLmScorer(model, tok, config.device)
    if config.infill_model_name:
        tok = AutoTokenizer.from_pretrained(config.infill_model_name)
        model = AutoModelForSeq2SeqLM.from_pretrained(config.infill_model_name)
        scorers["infill"] = InfillScorer(
            model, tok, config.device, config.mask_format, config.sentinel_format
        )
    if config.nli_model_name:
        tok = AutoTokenizer.from_pretrained(config.nli_model_name)
        model = AutoModelForSequenceClassification.from_pretrained(config.nli_model_name)
        scorers["nli"] = NliScorer(model, tok, config.device, config.entailment_label)
    if not scorers:
        raise BridgeError("no models configured")
    return scorers


def answer(scorers: dict[str, Any], request: dict[str, Any]) -> dict[str, Any]:
    rid = request.get("id")
    try:
        kind = request.get("kind")
        scorer = scorers.get(kind)
        if scorer is None:
            raise BridgeError(f"no backend for kind {kind!r}")
        if kind == "lm":
            nll, count = scorer.score(list(request["input"]))
            return {"id": rid, "nll_sum": nll, "token_count": count}
        if kind == "infill":
            nll, count = scorer.score(list(request["input"]), list(request["target"]))
            return {"id": rid, "nll_sum": nll, "token_count": count}
        if kind == "nli":
            score = scorer.score(list(request["premise"]), list(request["hypothesis"]))
            return {"id": rid, "entailment": score}
        raise BridgeError(f"unknown kind {kind!r}")
    except (BridgeError, KeyError, TypeError, ValueError) as e:
        return {"id": rid, "error": f"{type(e).__name__}: {e}"}


def serve_stream(scorers: dict[str, Any], rfile: IO[str], wfile: IO[str]) -> None:
    for line in rfile:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as e:
            response: dict[str, Any] = {"id": None, "error": f"bad request line: {e.msg}"}
        else:
            response = answer(scorers, request)
        wfile.write(json.dumps(response, ensure_ascii=False) + "\n")
        wfile.flush()


def serve_stdio(config: BridgeConfig) -> None:
    scorers = load_scorers(config)
    serve_stream(scorers, sys.stdin, sys.stdout)


def serve_tcp(config: BridgeConfig, host: str, port: int) -> None:
    scorers = load_scorers(config)
    server = socket.create_server((host, port))
    print(f"expanse-bridge: listening on {server.getsockname()}", file=sys.stderr)
    try:
        while True:
            conn, _ = server.accept()
            with conn:
                rfile = conn.makefile("r", encoding="utf-8")
                wfile = conn.makefile("w", encoding="utf-8")
                serve_stream(scorers, rfile, wfile)
    finally:
        server.close()
