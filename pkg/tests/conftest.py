import json
import sys
from importlib import resources
from pathlib import Path

import pytest

from tinyformula import arch, search

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def b0():
    return arch.bundled_spec("efficientnet-b0")


@pytest.fixture(scope="session")
def ghostnet():
    return arch.bundled_spec("ghostnet-a")


@pytest.fixture(scope="session")
def b0_doc():
    path = resources.files("tinyformula").joinpath("data").joinpath("efficientnet-b0.json")
    return json.loads(path.read_text("utf-8"))


@pytest.fixture(scope="session")
def ghost_doc():
    path = resources.files("tinyformula").joinpath("data").joinpath("ghostnet-a.json")
    return json.loads(path.read_text("utf-8"))


@pytest.fixture(scope="session")
def demo_records():
    return list(search.demo_store())
