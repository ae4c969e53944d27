from hypothesis import HealthCheck, settings

settings.register_profile(
    "canvar",
    deadline=None,
    max_examples=25,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("canvar")
