"""Model-backed scorers for the three request kinds.

All negative log-likelihoods are summed in natural-log units regardless of
backend convention.  Inference is deterministic: models run in eval mode
under no_grad, nothing samples, and precision is whatever the checkpoint
loaded with (float32 by default on CPU).

Token counting follows the wire contract:
  lm      count = surface tokens + 1 (end of sequence is scored)
  infill  count = target positions that are neither mask sentinels nor the
          backend's end-of-sequence token; the same positions feed nll_sum
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import torch


class BridgeError(RuntimeError):
    pass


def _mask_regex(mask_format: str) -> re.Pattern:
    head, tail = mask_format.split("{i}")
    return re.compile(re.escape(head) + r"(\d+)" + re.escape(tail))


@dataclass
class SentinelMap:
    """Bijective per-request mapping from mask tokens to backend sentinels."""

    mask_format: str
    sentinel_format: str

    def rewrite(self, tokens: list[str]) -> tuple[str, list[str]]:
        """Replace mask tokens by fresh sentinels in order of appearance and
        join everything into backend text; returns (text, sentinels used)."""
        pattern = _mask_regex(self.mask_format)
        out: list[str] = []
        sentinels: list[str] = []
        seen: dict[str, str] = {}
        for tok in tokens:
            m = pattern.fullmatch(tok)
            if m is None:
                out.append(tok)
                continue
            if tok in seen:
                raise BridgeError(f"mask token repeated in one sequence: {tok}")
            sentinel = self.sentinel_format.format(k=len(sentinels))
            seen[tok] = sentinel
            sentinels.append(sentinel)
            out.append(sentinel)
        return " ".join(out), sentinels


class CausalLmScorer:
    """Summed token NLL under a causal language model (GPT2-class)."""

    def __init__(self, model, tokenizer, device: str = "cpu"):
        self.model = model.to(device).eval()
        self.tokenizer = tokenizer
        self.device = device

    def score(self, tokens: list[str]) -> tuple[float, int]:
        if not tokens:
            raise BridgeError("empty input")
        text = " ".join(tokens)
        eos = self.tokenizer.eos_token or self.tokenizer.sep_token
        ids = self.tokenizer.encode(text, add_special_tokens=False)
        if eos is not None:
            eos_id = self.tokenizer.convert_tokens_to_ids(eos)
            ids = [eos_id] + ids + [eos_id]  # leading eos doubles as BOS context
        if len(ids) < 2:
            raise BridgeError("input too short to score")
        input_ids = torch.tensor([ids], device=self.device)
        with torch.no_grad():
            logits = self.model(input_ids).logits
        log_probs = torch.log_softmax(logits[0, :-1].float(), dim=-1)
        targets = input_ids[0, 1:]
        nll = -log_probs.gather(1, targets.unsqueeze(1)).sum().item()
        return nll, len(tokens) + 1


class InfillScorer:
    """Teacher-forced target NLL under an encoder-decoder infilling model."""

    def __init__(self, model, tokenizer, device: str = "cpu",
                 mask_format: str = "<M{i}>", sentinel_format: str = "<extra_id_{k}>"):
        self.model = model.to(device).eval()
        self.tokenizer = tokenizer
        self.device = device
        self.sentinels = SentinelMap(mask_format, sentinel_format)

    def score(self, input_tokens: list[str], target_tokens: list[str]) -> tuple[float, int]:
        input_text, _ = self.sentinels.rewrite(input_tokens)
        target_text, used = self.sentinels.rewrite(target_tokens)
        enc = self.tokenizer(input_text, return_tensors="pt", add_special_tokens=True)
        dec = self.tokenizer(target_text, return_tensors="pt", add_special_tokens=True)
        input_ids = enc["input_ids"].to(self.device)
        labels = dec["input_ids"].to(self.device)
        with torch.no_grad():
            logits = self.model(input_ids=input_ids, labels=labels).logits
        log_probs = torch.log_softmax(logits[0].float(), dim=-1)
        exclude = {self.tokenizer.convert_tokens_to_ids(s) for s in used}
        for special in (self.tokenizer.eos_token_id, self.tokenizer.pad_token_id,
                        self.tokenizer.sep_token_id, self.tokenizer.cls_token_id):
            if special is not None:
                exclude.add(special)
        nll = 0.0
        count = 0
        for pos, label in enumerate(labels[0].tolist()):
            if label in exclude:
                continue
            nll -= log_probs[pos, label].item()
            count += 1
        if count == 0:
            raise BridgeError("no scorable target tokens")
        return nll, count


class NliScorer:
    """Entailment-class probability from a sequence-classification model."""

    def __init__(self, model, tokenizer, device: str = "cpu",
                 entailment_label: str | None = None):
        self.model = model.to(device).eval()
        self.tokenizer = tokenizer
        self.device = device
        self.entailment_index = self._find_label(entailment_label)

    def _find_label(self, wanted: str | None) -> int:
        id2label = getattr(self.model.config, "id2label", {}) or {}
        for idx, label in id2label.items():
            name = str(label).lower()
            if wanted is not None and name == wanted.lower():
                return int(idx)
            if wanted is None and "entail" in name:
                return int(idx)
        if wanted is not None:
            raise BridgeError(f"no label {wanted!r} in {id2label}")
        raise BridgeError(f"cannot locate an entailment label in {id2label}")

    def score(self, premise: list[str], hypothesis: list[str]) -> float:
        enc = self.tokenizer(
            " ".join(premise), " ".join(hypothesis),
            return_tensors="pt", truncation=True,
        ).to(self.device)
        with torch.no_grad():
            logits = self.model(**enc).logits
        probs = torch.softmax(logits[0].float(), dim=-1)
        return probs[self.entailment_index].item()
