import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from glme.dataio import load_fixture


@pytest.fixture(scope="session")
def flood():
    """US flood damage series (loss per unit wealth, 1932-1997)."""
    ds = load_fixture("losspw.csv")
    if ds is None:
        pytest.skip("losspw.csv fixture not shipped")
    return ds


@pytest.fixture(scope="session")
def phliu():
    """Annual maximum daily rainfall at Phliu Agromet, when provided."""
    ds = load_fixture("phliu.csv")
    if ds is None:
        pytest.skip(
            "phliu.csv fixture not installed; place the station series (columns "
            "year,value) at src/glme/data/phliu.csv to enable these tests"
        )
    return ds
