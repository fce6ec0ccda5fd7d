"""Scripted external scorer for protocol tests.

Answers the line-delimited JSON wire protocol with deterministic fake scores:
0.1 nats per token for lm, 0.2 for infill (sentinels excluded), and an
entailment of 1.0 on token-identical premise/hypothesis, 0.25 otherwise.
An input containing the token "BOOM" yields an error response.  With
--swap-pairs, responses are emitted two at a time in reversed order to
exercise out-of-order delivery.
"""

import json
import sys


def answer(req):
    rid = req.get("id")
    kind = req.get("kind")
    if "BOOM" in (req.get("input") or []):
        return {"id": rid, "error": "boom"}
    if kind == "lm":
        n = len(req["input"]) + 1
        return {"id": rid, "nll_sum": 0.1 * n, "token_count": n}
    if kind == "infill":
        count = sum(1 for tok in req["target"] if not tok.startswith("<M"))
        return {"id": rid, "nll_sum": 0.2 * count, "token_count": count}
    if kind == "nli":
        same = req["premise"] == req["hypothesis"]
        return {"id": rid, "entailment": 1.0 if same else 0.25}
    return {"id": rid, "error": f"unknown kind {kind!r}"}


def main():
    swap = "--swap-pairs" in sys.argv[1:]
    held = []
    for line in sys.stdin:
        if not line.strip():
            continue
        resp = answer(json.loads(line))
        if swap:
            held.append(resp)
            if len(held) == 2:
                for r in reversed(held):
                    print(json.dumps(r), flush=True)
                held = []
        else:
            print(json.dumps(resp), flush=True)
    for r in held:
        print(json.dumps(r), flush=True)


if __name__ == "__main__":
    main()
