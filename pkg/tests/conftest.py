import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from gaittune import Workbench, load_dataset
from gaittune.demo import generate_demo_session
from gaittune.session import SessionStore, load_sitstand_reference


@pytest.fixture(scope="session")
def demo_paths(tmp_path_factory):
    directory = tmp_path_factory.mktemp("demo")
    return generate_demo_session(str(directory), n_subjects=3, seed=0)


@pytest.fixture(scope="session")
def demo_dataset(demo_paths):
    return load_dataset(demo_paths["walking"])


@pytest.fixture(scope="session")
def demo_sitstand(demo_paths):
    return load_sitstand_reference(demo_paths["sitstand"])


@pytest.fixture()
def workbench(demo_dataset, demo_sitstand, tmp_path):
    store = SessionStore(str(tmp_path / "session"))
    return Workbench(demo_dataset, sitstand_strides=demo_sitstand, store=store)
