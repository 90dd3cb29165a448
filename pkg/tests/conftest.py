import pytest

from support import write_movielens_fixture


@pytest.fixture(scope="session")
def movielens_dir(tmp_path_factory):
    return write_movielens_fixture(tmp_path_factory.mktemp("ml100k"))
