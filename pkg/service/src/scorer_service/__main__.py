"""Launcher: python -m scorer_service [flags], or the scorer-service script."""

from __future__ import annotations

import argparse

from scorer_service.app import create_app
from scorer_service.config import ServiceConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scorer-service")
    parser.add_argument("--backend", choices=["stub", "transformers"], default="stub")
    parser.add_argument("--entail-model", default=None)
    parser.add_argument("--answerable-model", default=None)
    parser.add_argument("--generate-model", default=None)
    parser.add_argument("--rerank-model", default=None)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-batch-size", type=int, default=32)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8400)
    return parser


def main(argv: list[str] | None = None) -> int:
    import uvicorn

    args = build_parser().parse_args(argv)
    config = ServiceConfig(
        backend=args.backend,
        entail_model=args.entail_model,
        answerable_model=args.answerable_model,
        generate_model=args.generate_model,
        rerank_model=args.rerank_model,
        device=args.device,
        max_batch_size=args.max_batch_size,
        host=args.host,
        port=args.port,
    )
    config.validate()
    uvicorn.run(create_app(config), host=config.host, port=config.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
