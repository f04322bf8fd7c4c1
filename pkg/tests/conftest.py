import pytest

from lggen.cli import sample_pack_dir
from lggen.dsl import load_bundle
from lggen.generator import enumerate_patterns
from lggen.rtn import expand


@pytest.fixture(scope="session")
def sample_bundle():
    return load_bundle(sample_pack_dir())


@pytest.fixture(scope="session")
def sample_flat(sample_bundle):
    return expand(sample_bundle)


@pytest.fixture(scope="session")
def sample_patterns(sample_flat):
    return list(enumerate_patterns(sample_flat))
