import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from multimodal_fixture import generate_multimodal_fixture  # noqa: E402


@pytest.fixture(scope="session")
def multimodal_corpus(tmp_path_factory):
    """The full 400-record synthetic corpus, generated once per session."""
    root = tmp_path_factory.mktemp("multimodal")
    return generate_multimodal_fixture(root)


@pytest.fixture()
def small_corpus(tmp_path):
    """A quick 80-record variant for pipeline unit tests."""
    return generate_multimodal_fixture(
        tmp_path / "small", n_records=80, seed=11, image_dim=4, dev_fraction=0.25
    )
