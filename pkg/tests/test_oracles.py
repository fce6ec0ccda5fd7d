import json
import math
import socketserver
import sys
import threading
from pathlib import Path

import pytest

from expanse.oracles import (
    ExternalScorer,
    FixedNllScorer,
    NgramLmScorer,
    OracleError,
    OverlapNliScorer,
)
from expanse.ngram_lm import NgramModel
from expanse.templates import InfillTemplatePair, Literal, Slot

STUB = f"{sys.executable} {Path(__file__).parent / 'stub_oracle.py'}"


def test_overlap_nli_subsequence_premise():
    nli = OverlapNliScorer()
    assert nli.entailment(("a", "big", "dog", "ran"), ("dog", "ran")) == 1.0
    assert nli.entailment(("cat",), ("dog",)) == 0.0
    # punctuation-only hypothesis falls back to raw tokens
    assert nli.entailment((",", "."), (",",)) == 1.0


def test_fixed_nll_scorer():
    stub = FixedNllScorer(nll_per_token=math.log(3.0))
    assert stub.score_tokens(("a", "b")).perplexity == pytest.approx(3.0)


def test_external_lm_and_nli():
    with ExternalScorer("lm", STUB) as lm:
        score = lm.score_tokens(("a", "b", "c", "d", "e"))
        assert score.token_count == 6
        assert score.nll_sum == pytest.approx(0.6)
    with ExternalScorer("nli", STUB) as nli:
        assert nli.entailment(("x", "y"), ("x", "y")) == 1.0
        assert nli.entailment(("x", "y"), ("x",)) == 0.25


def test_external_infill_renders_sentinels():
    template = InfillTemplatePair(
        input=(Literal(("besides",)), Slot(1)),
        target=(Slot(1), Literal(("my", "sport"))),
    )
    with ExternalScorer("infill", STUB) as infill:
        score = infill.score_template(template)
        assert score.token_count == 2  # sentinel excluded
        assert score.nll_sum == pytest.approx(0.4)


def test_external_error_response():
    with ExternalScorer("lm", STUB) as lm:
        with pytest.raises(OracleError, match="boom"):
            lm.score_tokens(("BOOM",))
        # the handle keeps serving after an error response
        assert lm.score_tokens(("ok",)).token_count == 2


def test_external_out_of_order_responses():
    with ExternalScorer("lm", STUB + " --swap-pairs") as lm:
        results = {}

        def ask(n):
            results[n] = lm.score_tokens(tuple("w" * 1 for _ in range(n))).token_count

        t1 = threading.Thread(target=ask, args=(3,))
        t2 = threading.Thread(target=ask, args=(7,))
        t1.start(), t2.start()
        t1.join(timeout=10), t2.join(timeout=10)
        assert results == {3: 4, 7: 8}


class _TcpOracle(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            req = json.loads(raw)
            n = len(req["input"]) + 1
            resp = {"id": req["id"], "nll_sum": 0.5 * n, "token_count": n}
            self.wfile.write((json.dumps(resp) + "\n").encode())
            self.wfile.flush()


def test_external_tcp_endpoint():
    server = socketserver.ThreadingTCPServer(("127.0.0.1", 0), _TcpOracle)
    server.daemon_threads = True
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        with ExternalScorer("lm", f"tcp:127.0.0.1:{port}") as lm:
            assert lm.score_tokens(("a", "b")).nll_sum == pytest.approx(1.5)
    finally:
        server.shutdown()
        server.server_close()


def test_backend_closing_stream_raises():
    with ExternalScorer("lm", f"{sys.executable} -c 'pass'") as lm:
        with pytest.raises(OracleError, match="closed the stream"):
            lm.score_tokens(("a",))


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown oracle kind"):
        ExternalScorer("bogus", STUB)


def test_builtin_lm_scorer_error_wrapping():
    scorer = NgramLmScorer(NgramModel.uniform(["a"]))
    with pytest.raises(OracleError, match="empty input"):
        scorer.score_tokens(())


def test_unlaunchable_oracle_command():
    with pytest.raises(OracleError, match="cannot launch"):
        ExternalScorer("lm", "/nonexistent/oracle-binary --serve")
