import pytest

from rscurate.testing import StubImageServer


@pytest.fixture
def stub_server():
    with StubImageServer() as server:
        yield server
