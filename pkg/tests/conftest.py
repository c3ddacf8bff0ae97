import pytest

from helpers import FIXTURE_NAMES, load


@pytest.fixture(params=FIXTURE_NAMES)
def fixture_system(request):
    return load(request.param)
