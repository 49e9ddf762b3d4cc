import sys

from hypothesis import HealthCheck, settings

if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)

settings.register_profile(
    "etw", derandomize=True, deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("etw")
