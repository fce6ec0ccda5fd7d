"""Scoring oracles: built-in deterministic backends and the external wire protocol.

External scorers speak line-delimited JSON over a child process's standard
streams or a TCP connection:

    request   {"id": str, "kind": "lm"|"nli"|"infill",
               "input": [str], "target": [str]?,
               "premise": [str]?, "hypothesis": [str]?}
    response  {"id": str, "nll_sum": number, "token_count": int}   (lm, infill)
              {"id": str, "entailment": number}                    (nli)
              {"id": str, "error": str}                            (failure)

Slot markers travel as literal mask-format tokens.  Responses may arrive in
any order; one response per request.  A handle serializes writes and may be
shared by concurrent callers; responses are matched back by request id.
"""

from __future__ import annotations

import json
import math
import shlex
import socket
import subprocess
import threading
import unicodedata
from typing import Any, Iterable

from .corpus import TokenSeq
from .ngram_lm import LmScore, NgramModel, infill_nll, nll
from .templates import DEFAULT_MASK_FORMAT, InfillTemplatePair, render


class OracleError(RuntimeError):
    """An oracle backend failed; the message carries backend diagnostics."""


# -- built-in backends ---------------------------------------------------------


class NgramLmScorer:
    """LM oracle over a built-in n-gram model."""

    kind = "lm"
    backend = "builtin_ngram"

    def __init__(self, model: NgramModel):
        self.model = model

    def score_tokens(self, tokens: TokenSeq) -> LmScore:
        try:
            return nll(self.model, tokens)
        except ValueError as e:
            raise OracleError(f"builtin lm: {e}") from e


class NgramInfillScorer:
    """Infill oracle over a built-in n-gram model (teacher-forced splice)."""

    kind = "infill"
    backend = "builtin_ngram"

    def __init__(self, model: NgramModel):
        self.model = model

    def score_template(
        self, template: InfillTemplatePair, mask_format: str = DEFAULT_MASK_FORMAT
    ) -> LmScore:
        del mask_format  # builtin scoring is structural, no sentinel rendering
        try:
            return infill_nll(self.model, template)
        except ValueError as e:
            raise OracleError(f"builtin infill: {e}") from e


def _is_punct(token: str) -> bool:
    return all(unicodedata.category(ch).startswith("P") for ch in token)


class OverlapNliScorer:
    """Content-token recall of the hypothesis in the premise.

    Smoke-test quality only: it stands in for an entailment model where none
    is available and should not be read as a semantic judgment.
    """

    kind = "nli"
    backend = "builtin_overlap"

    def __init__(self, stopwords: Iterable[str] = ()):
        self.stopwords = frozenset(stopwords)

    def entailment(self, premise: TokenSeq, hypothesis: TokenSeq) -> float:
        def content(tokens: TokenSeq) -> set[str]:
            toks = {t for t in tokens if t not in self.stopwords and not _is_punct(t)}
            return toks or set(tokens)

        hyp = content(hypothesis)
        if not hyp:
            return 0.0
        return len(hyp & set(premise)) / len(hyp)


class FixedNllScorer:
    """Stub oracle answering every lm/infill request with a constant per-token
    NLL.  Useful for pinning metric identities in tests."""

    kind = "infill"
    backend = "builtin_ngram"

    def __init__(self, nll_per_token: float = math.log(2.0)):
        self.nll_per_token = nll_per_token

    def score_tokens(self, tokens: TokenSeq) -> LmScore:
        n = len(tokens) + 1
        return LmScore(nll_sum=self.nll_per_token * n, token_count=n)

    def score_template(
        self, template: InfillTemplatePair, mask_format: str = DEFAULT_MASK_FORMAT
    ) -> LmScore:
        del mask_format
        n = sum(len(lit) for lit in template.target_literals())
        if n == 0:
            raise OracleError("no scorable tokens")
        return LmScore(nll_sum=self.nll_per_token * n, token_count=n)


# -- external backend ----------------------------------------------------------


class _WireClient:
    """Request/response pipeline over a line stream, safe for concurrent use.

    Writes are serialized under a lock; any caller may drain the read side,
    parking responses for other ids until their owners collect them.
    """

    def __init__(self, write_line, read_line, describe: str):
        self._write_line = write_line
        self._read_line = read_line
        self._describe = describe
        self._write_lock = threading.Lock()
        self._read_lock = threading.Lock()
        self._cv = threading.Condition()
        self._parked: dict[str, dict] = {}
        self._next_id = 0

    def fresh_id(self) -> str:
        with self._write_lock:
            self._next_id += 1
            return f"q{self._next_id}"

    def request(self, payload: dict[str, Any]) -> dict[str, Any]:
        rid = payload["id"]
        line = json.dumps(payload, ensure_ascii=False) + "\n"
        with self._write_lock:
            try:
                self._write_line(line)
            except (OSError, ValueError) as e:
                raise OracleError(f"{self._describe}: write failed: {e}") from e
        while True:
            with self._cv:
                if rid in self._parked:
                    return self._parked.pop(rid)
            if self._read_lock.acquire(timeout=0.05):
                try:
                    with self._cv:
                        if rid in self._parked:
                            return self._parked.pop(rid)
                    raw = self._read_line()
                    if not raw:
                        raise OracleError(f"{self._describe}: backend closed the stream")
                    try:
                        obj = json.loads(raw)
                    except json.JSONDecodeError as e:
                        raise OracleError(f"{self._describe}: bad response line: {raw!r}") from e
                    if obj.get("id") == rid:
                        return obj
                    with self._cv:
                        self._parked[obj.get("id")] = obj
                        self._cv.notify_all()
                finally:
                    self._read_lock.release()


class ExternalScorer:
    """One external oracle endpoint: ``cmd:...``/plain command strings spawn a
    child process; ``tcp:HOST:PORT`` connects a socket."""

    backend = "external"

    def __init__(self, kind: str, endpoint: str, mask_format: str = DEFAULT_MASK_FORMAT):
        if kind not in ("lm", "nli", "infill"):
            raise ValueError(f"unknown oracle kind {kind!r}")
        self.kind = kind
        self.endpoint = endpoint
        self.mask_format = mask_format
        self._proc: subprocess.Popen | None = None
        self._sock: socket.socket | None = None
        self._files: tuple = ()
        if endpoint.startswith("tcp:"):
            _, host, port = endpoint.split(":", 2)
            try:
                self._sock = socket.create_connection((host, int(port)))
            except OSError as e:
                raise OracleError(f"cannot reach oracle at {endpoint}: {e}") from e
            rfile = self._sock.makefile("r", encoding="utf-8")
            wfile = self._sock.makefile("w", encoding="utf-8")
            self._files = (rfile, wfile)

            def write_line(line: str) -> None:
                wfile.write(line)
                wfile.flush()

            self._client = _WireClient(write_line, rfile.readline, endpoint)
        else:
            cmd = endpoint[4:] if endpoint.startswith("cmd:") else endpoint
            try:
                self._proc = subprocess.Popen(
                    shlex.split(cmd),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    encoding="utf-8",
                )
            except OSError as e:
                raise OracleError(f"cannot launch oracle {cmd!r}: {e}") from e

            def write_line(line: str) -> None:
                assert self._proc is not None and self._proc.stdin is not None
                self._proc.stdin.write(line)
                self._proc.stdin.flush()

            self._client = _WireClient(write_line, self._proc.stdout.readline, cmd)

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=30)
            self._proc = None
        for fh in self._files:  # makefile wrappers keep the connection alive
            try:
                fh.close()
            except OSError:
                pass
        self._files = ()
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _ask(self, payload: dict[str, Any]) -> dict[str, Any]:
        payload["id"] = self._client.fresh_id()
        obj = self._client.request(payload)
        if "error" in obj:
            raise OracleError(f"{self.endpoint}: {obj['error']}")
        return obj

    def score_tokens(self, tokens: TokenSeq) -> LmScore:
        obj = self._ask({"kind": "lm", "input": list(tokens)})
        return _lm_score(obj, self.endpoint)

    def score_template(
        self, template: InfillTemplatePair, mask_format: str | None = None
    ) -> LmScore:
        fmt = mask_format or self.mask_format
        obj = self._ask(
            {
                "kind": "infill",
                "input": render(template.input, fmt),
                "target": render(template.target, fmt),
            }
        )
        return _lm_score(obj, self.endpoint)

    def entailment(self, premise: TokenSeq, hypothesis: TokenSeq) -> float:
        obj = self._ask({"kind": "nli", "premise": list(premise), "hypothesis": list(hypothesis)})
        try:
            return float(obj["entailment"])
        except (KeyError, TypeError, ValueError) as e:
            raise OracleError(f"{self.endpoint}: malformed nli response {obj!r}") from e


def _lm_score(obj: dict[str, Any], where: str) -> LmScore:
    try:
        return LmScore(nll_sum=float(obj["nll_sum"]), token_count=int(obj["token_count"]))
    except (KeyError, TypeError, ValueError) as e:
        raise OracleError(f"{where}: malformed score response {obj!r}") from e
