"""expanse-bridge entry point: ``expanse-bridge serve --config bridge.json``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .scorers import BridgeError
from .server import BridgeConfig, serve_stdio, serve_tcp


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="expanse-bridge")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("serve", help="answer scoring requests on stdin or a TCP port")
    p.add_argument("--config", help="BridgeConfig JSON file")
    p.add_argument("--lm-model", default=None)
    p.add_argument("--nli-model", default=None)
    p.add_argument("--infill-model", default=None)
    p.add_argument("--device", default=None)
    p.add_argument("--tcp", default=None, metavar="HOST:PORT")
    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    obj = {}
    if args.config:
        obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    config = BridgeConfig.from_obj(obj)
    if args.lm_model:
        config.lm_model_name = args.lm_model
    if args.nli_model:
        config.nli_model_name = args.nli_model
    if args.infill_model:
        config.infill_model_name = args.infill_model
    if args.device:
        config.device = args.device
    try:
        if args.tcp:
            host, _, port = args.tcp.rpartition(":")
            serve_tcp(config, host or "127.0.0.1", int(port))
        else:
            serve_stdio(config)
    except BridgeError as e:
        print(f"expanse-bridge: {e}", file=sys.stderr)
        sys.exit(1)
    except Exception as e:  # model resolution failures must abort pre-serving
        print(f"expanse-bridge: failed to start: {e}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
