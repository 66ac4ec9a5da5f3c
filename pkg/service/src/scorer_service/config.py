from __future__ import annotations

from dataclasses import dataclass


@dataclass
class ServiceConfig:
    backend: str = "stub"  # "stub" | "transformers"
    entail_model: str | None = None
    answerable_model: str | None = None
    generate_model: str | None = None
    rerank_model: str | None = None
    device: str = "cpu"
    max_batch_size: int = 32
    yes_threshold: float = 0.5
    host: str = "127.0.0.1"
    port: int = 8400

    def validate(self) -> None:
        if self.max_batch_size < 1:
            raise ValueError("max_batch_size must be >= 1")
        if not 0.0 <= self.yes_threshold <= 1.0:
            raise ValueError("yes_threshold must be in [0,1]")
        if self.backend not in ("stub", "transformers"):
            raise ValueError(f"unknown backend {self.backend!r}")
