import os

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def masks(max_value=63, min_size=1, max_size=None):
    """Non-empty domain masks over 0..max_value."""
    return st.sets(st.integers(0, max_value), min_size=min_size, max_size=max_size).map(
        lambda vs: sum(1 << v for v in vs))


def stores(n_min=1, n_max=5, max_value=7, min_size=1):
    return st.lists(masks(max_value, min_size=min_size), min_size=n_min, max_size=n_max).map(tuple)
