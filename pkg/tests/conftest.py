import shutil
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hepx.corpus import bundled_kb, corpus_cases, legacy_case_text


@pytest.fixture
def bundle():
    return bundled_kb()


@pytest.fixture
def bundle_path(tmp_path):
    from importlib import resources

    target = tmp_path / "hepatitis.kb"
    source = resources.files("hepx.data").joinpath("hepatitis.kb")
    with resources.as_file(source) as src:
        shutil.copy(src, target)
    return str(target)


@pytest.fixture(scope="session")
def corpus():
    return corpus_cases()


@pytest.fixture(scope="session")
def legacy_text():
    return legacy_case_text()
