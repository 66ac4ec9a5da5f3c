"""End-to-end check over a real socket: the client package's pipeline run
against this service (stub backend) must be byte-identical to its local
lexical run. Skipped when the client package is not installed."""

import pathlib
import socket
import threading
import time

import pytest

planc = pytest.importorskip("plancite.pipeline")

from plancite.scoring import RemoteScorer  # noqa: E402

from scorer_service.app import create_app  # noqa: E402
from scorer_service.config import ServiceConfig  # noqa: E402

CORPUS = pathlib.Path(__file__).resolve().parents[2] / "tests" / "data" / "fixture_corpus.jsonl"


@pytest.fixture(scope="module")
def live_service():
    uvicorn = pytest.importorskip("uvicorn")
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    server = uvicorn.Server(
        uvicorn.Config(create_app(ServiceConfig()), host="127.0.0.1", port=port,
                       log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{port}"
    deadline = time.time() + 10
    while time.time() < deadline:
        try:
            RemoteScorer(url, max_retries=1, timeout=2).meta()
            break
        except Exception:
            time.sleep(0.05)
    else:
        pytest.fail("service did not come up")
    yield url
    server.should_exit = True
    thread.join(timeout=5)


def read_tree(root: pathlib.Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(root.iterdir()) if p.is_file()}


def test_pipeline_matches_lexical_run(tmp_path, live_service):
    lexical_out = tmp_path / "lexical"
    remote_out = tmp_path / "remote"
    planc.run_pipeline(planc.PipelineConfig(), str(CORPUS), str(lexical_out))
    planc.run_pipeline(
        planc.PipelineConfig(scorer="remote", scorer_url=live_service),
        str(CORPUS),
        str(remote_out),
    )
    assert read_tree(lexical_out) == read_tree(remote_out)


def test_serve_check_against_live_service(live_service, capsys):
    from plancite.cli import main

    assert main(["serve-check", "--scorer-url", live_service]) == 0
    assert "capabilities=entail,answerable,generate,rerank" in capsys.readouterr().out
