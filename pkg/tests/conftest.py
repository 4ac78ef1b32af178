import pytest

from modelform import fixtures


@pytest.fixture(scope="session")
def mf2():
    """The model-form generic plus its in-memory fragments (read-only)."""
    return fixtures.build_mf2()


@pytest.fixture
def demo_store(tmp_path):
    return fixtures.install_demo_store(tmp_path / "store")
