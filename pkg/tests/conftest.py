"""
Test configuration and fixtures for the Sobolev degree toolkit tests.
"""
import pytest
from fastapi.testclient import TestClient
from unittest.mock import patch, MagicMock

from main import app
from app import config
from app.maps import TestFunction
from app.schemas.domain_payload import Domain, QuadratureSpec
from app.schemas.suite_payload import SuiteConfig


@pytest.fixture(autouse=True)
def serial_workers(monkeypatch):
    """Run every test with a single worker unless the test asks for more."""
    monkeypatch.setattr(config, "WORKER_COUNT", 1)


@pytest.fixture
def client():
    """Create a test client for the API."""
    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture
def unit_disk():
    """The unit disk B(0, 1) in the plane."""
    return Domain.ball((0.0, 0.0), 1.0)


@pytest.fixture
def standard_bump():
    """The bump centered at 0 with radius 1/2."""
    return TestFunction(center=(0.0, 0.0), radius=0.5)


@pytest.fixture
def coarse_quad():
    """A small tensor quadrature that keeps pairing tests fast."""
    return QuadratureSpec(sample_count=24)


@pytest.fixture
def oracle_config():
    """A suite config restricted to the degree oracle."""
    return SuiteConfig(checks=["degree-oracle"])


@pytest.fixture
def mock_celery_task():
    """Mock celery task for testing."""
    with patch('app.tasks.run_suite_task.apply_async') as mock_task:
        mock_task.return_value = MagicMock(id="suite-task-1")
        yield mock_task
