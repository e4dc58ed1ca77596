from hypothesis import HealthCheck, settings

# the numba kernels compile on first use, so per-example deadlines are meaningless
settings.register_profile("muefix", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("muefix")
