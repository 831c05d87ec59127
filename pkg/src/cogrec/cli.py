"""Command-line entry point: `engine eval ...` and `engine serve ...`."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config
from .evalharness import (BASELINES, emit_report, load_movielens, run_protocol)
from .providers import HttpChatProvider

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="engine",
                                     description="cold-start recommender engine")
    parser.add_argument("--config", default=None, help="JSON/YAML config overrides")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="run the offline evaluation protocol")
    ev.add_argument("--data", required=True, help="MovieLens-format data directory")
    ev.add_argument("--models", default=",".join(BASELINES),
                    help="comma-separated model list")
    ev.add_argument("--seeds", type=int, default=3)
    ev.add_argument("--k", type=int, default=10)
    ev.add_argument("--out", required=True, help="report output directory")
    ev.add_argument("--provider", default=None, help="reranking provider URL")

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--data", default=None, help="catalog data directory (movies.dat)")
    sv.add_argument("--port", type=int, default=None)
    sv.add_argument("--host", default="127.0.0.1")
    return parser


def run_eval(args, config) -> int:
    dataset = load_movielens(args.data)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    reranker = None
    if args.provider:
        reranker = HttpChatProvider(args.provider, model=config.provider_model,
                                    token_env=config.provider_token_env)
    report = run_protocol(dataset, models=models, seeds=args.seeds,
                          config=config, reranker=reranker, K=args.k)
    written = emit_report(report, args.out)
    for path in written:
        print(f"wrote {path}")
    print(Path(written[0]).read_text(encoding="utf-8"))
    return 0


def run_serve(args, config) -> int:
    import uvicorn

    from .engine import ColdStartEngine
    from .evalharness import movies_as_items
    from .service import create_app

    engine = ColdStartEngine(config=config)
    data_dir = args.data or config.data_dir
    if data_dir:
        dataset = load_movielens(data_dir)
        n = engine.load_catalog(movies_as_items(dataset))
        log.info("loaded %d catalog items", n)
    app = create_app(engine)
    uvicorn.run(app, host=args.host, port=args.port or config.port)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    if args.command == "eval":
        return run_eval(args, config)
    if args.command == "serve":
        return run_serve(args, config)
    return 1


if __name__ == "__main__":
    sys.exit(main())
