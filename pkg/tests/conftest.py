import math

import pytest
from hypothesis import settings

from expanders import acceptance

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

NECK_RAYS = acceptance.NECK_RAYS


@pytest.fixture(scope="session")
def neck():
    """Accepted neck for rays (0, 2pi/3) at step 0.01, R = 6."""
    return acceptance.neck()


@pytest.fixture(scope="session")
def wide_neck():
    """Same rays, truncated at R = 7.5 for operator checks up to R = 7."""
    return acceptance.neck(0.01, 7.5)


def wrap(x, period=2 * math.pi):
    """Distance of x to the nearest multiple of period."""
    y = math.fmod(x, period)
    return min(abs(y), period - abs(y))
