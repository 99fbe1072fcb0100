import os

from hypothesis import HealthCheck, settings

# deterministic property tests; the seed is fixed by derandomization
settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))
