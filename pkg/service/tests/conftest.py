import pytest
from fastapi.testclient import TestClient

from scorer_service.app import create_app
from scorer_service.config import ServiceConfig


@pytest.fixture
def client():
    app = create_app(ServiceConfig())
    with TestClient(app) as c:
        yield c
